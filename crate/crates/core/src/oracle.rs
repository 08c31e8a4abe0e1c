//! Spectral reference solutions.
//!
//! On the discrete spectrum `A_h φ_j = λ_j φ_j` the solution operators act by
//! scalar Mittag-Leffler kernels, and the fully discrete scheme decouples into
//! one scalar recursion per mode.

use crate::error::{Error, Result};
use crate::fem1d::{EigenBasis, FemSpace};
use crate::fracquad::{gl_weights, integral_weights};
use crate::mlf::{mittag_leffler, MlfParams};
use crate::noise::NoiseModel;
use crate::stepper::ModelConfig;

/// A single mode: eigenvalue `λ` with the orders of the equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalProblem {
    alpha: f64,
    gamma: f64,
    lambda: f64,
}

impl ModalProblem {
    /// `alpha ∈ (0, 1]`, `gamma ∈ [0, 1]`, `lambda > 0`.
    pub fn new(alpha: f64, gamma: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain {
                param: "alpha",
                value: alpha,
                reason: "modal kernels need alpha in (0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Domain {
                param: "gamma",
                value: gamma,
                reason: "modal kernels need gamma in [0, 1]",
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain {
                param: "lambda",
                value: lambda,
                reason: "eigenvalue must be positive",
            });
        }
        Ok(Self { alpha, gamma, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `E_{α,1}(-λ t^α)`.
pub fn kernel_e(problem: ModalProblem, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            param: "t",
            value: t,
            reason: "time must be non-negative",
        });
    }
    mittag_leffler(
        MlfParams::new(problem.alpha, 1.0)?,
        -problem.lambda * t.powf(problem.alpha),
    )
}

/// `t^{α+γ-1} E_{α,α+γ}(-λ t^α)`.
pub fn kernel_ebar(problem: ModalProblem, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain {
            param: "t",
            value: t,
            reason: "time must be positive",
        });
    }
    let b = problem.alpha + problem.gamma;
    let e = mittag_leffler(
        MlfParams::new(problem.alpha, b)?,
        -problem.lambda * t.powf(problem.alpha),
    )?;
    Ok(t.powf(b - 1.0) * e)
}

/// Exact semidiscrete homogeneous solution `E_h(t) u0`.
pub fn deterministic_reference(
    alpha: f64,
    space: &FemSpace,
    eigen: &EigenBasis,
    u0: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    if u0.len() != space.dim() || eigen.len() != space.dim() {
        return Err(Error::Contract(
            "initial data, eigenbasis and space dimensions differ".into(),
        ));
    }
    let mut coeffs = eigen.coordinates(space, u0);
    for (c, &lambda) in coeffs.iter_mut().zip(eigen.values()) {
        *c *= kernel_e(ModalProblem::new(alpha, 0.0, lambda)?, t)?;
    }
    Ok(eigen.synthesize(&coeffs))
}

/// Scalar run of the scheme for one mode with eigenvalue `lambda ≥ 0`, modal
/// initial value `u0` and modal noise `q^1..q^N`. Returns `u^0..u^N`.
pub fn modal_recursion(config: &ModelConfig, lambda: f64, u0: f64, modal_noise: &[f64]) -> Result<Vec<f64>> {
    let n_steps = config.steps();
    if modal_noise.len() != n_steps {
        return Err(Error::Contract(format!(
            "modal noise has {} entries, expected {n_steps}",
            modal_noise.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Domain {
            param: "lambda",
            value: lambda,
            reason: "eigenvalue must be non-negative",
        });
    }
    let tau = config.tau();
    let bd = gl_weights(config.alpha(), n_steps)?;
    let bn = integral_weights(config.gamma(), n_steps)?;
    let scale = tau.powf(config.alpha() + config.gamma() - 1.0);
    let denom = 1.0 + tau.powf(config.alpha()) * lambda;
    let mut u = Vec::with_capacity(n_steps + 1);
    u.push(u0);
    for n in 1..=n_steps {
        let mut rhs = u0;
        for k in 1..n {
            rhs -= bd[n - k] * (u[k] - u0);
        }
        let mut noise = 0.0;
        for k in 1..=n {
            noise += bn[n - k] * modal_noise[k - 1];
        }
        u.push((rhs + scale * noise) / denom);
    }
    Ok(u)
}

/// Exact `E Φ(U^N) = E‖U^N‖²` of the fully discrete scheme with zero initial
/// data, from the modal impulse responses `c^{(j)}`:
/// `E‖U^N‖² = Σ_j Var(q_j) Σ_{i<N} (c^{(j)}_i)²`, `Var(q_j) = τ Σ_ℓ γ_ℓ (φ_jᵀ s_ℓ)²`.
pub fn exact_second_moment(
    config: &ModelConfig,
    space: &FemSpace,
    eigen: &EigenBasis,
    model: &NoiseModel,
) -> Result<f64> {
    let n = config.steps();
    let mut impulse = vec![0.0; n];
    impulse[0] = 1.0;
    let mut variances = vec![0.0; eigen.len()];
    for ell in 1..=model.truncation() {
        let q = eigen.project_dual(&space.sine_load(ell)?);
        let g = model.eigenvalue(ell);
        for (v, qj) in variances.iter_mut().zip(&q) {
            *v += g * qj * qj;
        }
    }
    let mut total = 0.0;
    for (&lambda, var) in eigen.values().iter().zip(&variances) {
        let c = modal_recursion(config, lambda, 0.0, &impulse)?;
        let energy: f64 = c[1..].iter().map(|x| x * x).sum();
        total += config.tau() * var * energy;
    }
    Ok(total)
}

/// `‖A_h^{κ/2} Ē_h(t)‖ = max_j λ_j^{κ/2} |Ē(λ_j, t)|`.
pub fn smoothing_norm(eigenvalues: &[f64], alpha: f64, gamma: f64, kappa: f64, t: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for &lambda in eigenvalues {
        let v = lambda.powf(0.5 * kappa) * kernel_ebar(ModalProblem::new(alpha, gamma, lambda)?, t)?.abs();
        best = best.max(v);
    }
    Ok(best)
}

/// Least-squares slope of `log ‖A_h^{κ/2} Ē_h(t)‖` against `log t`.
pub fn smoothing_probe(eigen: &EigenBasis, alpha: f64, gamma: f64, kappa: f64, t_grid: &[f64]) -> Result<f64> {
    if !(0.0..=2.0).contains(&kappa) {
        return Err(Error::Domain {
            param: "kappa",
            value: kappa,
            reason: "smoothing order must lie in [0, 2]",
        });
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Config("time grid must lie in (0, 1]".into()));
    }
    let mut xs = Vec::with_capacity(t_grid.len());
    let mut ys = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        xs.push(t.ln());
        ys.push(smoothing_norm(eigen.values(), alpha, gamma, kappa, t)?.ln());
    }
    fit_slope(&xs, &ys)
}

/// `count` points from `t0` to `t1`, equally spaced in `log t`.
pub fn log_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    assert!(t0 > 0.0 && t1 > t0 && count >= 2, "invalid log grid");
    let (a, b) = (t0.ln(), t1.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Contract("slope fit needs paired samples".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Config("slope fit needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(Error::Config("slope fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(Error::Numerical("non-finite fitted slope".into()));
    }
    Ok(slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::stepper::InitialData;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn mp(a: f64, g: f64, l: f64) -> ModalProblem {
        ModalProblem::new(a, g, l).unwrap()
    }

    #[test]
    fn kernel_limits() {
        assert_eq!(kernel_e(mp(0.4, 0.0, 3.0), 0.0).unwrap(), 1.0);
        for t in [0.01, 0.3, 2.0] {
            assert!((kernel_e(mp(1.0, 0.0, 2.5), t).unwrap() - (-2.5 * t).exp()).abs() < 1e-13);
            assert!((kernel_ebar(mp(1.0, 0.0, 2.5), t).unwrap() - (-2.5 * t).exp()).abs() < 1e-13);
        }
        // λ → 0⁺
        let t: f64 = 0.7;
        let small = kernel_ebar(mp(0.6, 0.5, 1e-14), t).unwrap();
        assert!((small - t.powf(0.1) / libm::tgamma(1.1)).abs() < 1e-12);
        assert!(kernel_ebar(mp(0.6, 0.5, 1.0), 0.0).is_err());
        assert!(ModalProblem::new(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn half_order_kernel_is_erfc_form() {
        // E_{1/2,1}(-λ√t) = exp(λ² t) erfc(λ√t); λ√t = π² gives e^{π⁴} erfc(π²)
        let lam = PI * PI;
        let direct = kernel_e(mp(0.5, 0.0, lam), 1.0).unwrap();
        // erfc underflows against the exponential here; use the scaled continued fraction
        let x = lam;
        let mut cf = 0.0;
        for k in (1..200).rev() {
            cf = (k as f64 / 2.0) / (x + cf);
        }
        let closed = 1.0 / (PI.sqrt() * (x + cf));
        assert!((direct - closed).abs() < 1e-12, "{direct} {closed}");
    }

    #[test]
    fn ebar_short_time_slope() {
        // the power law needs λ t^α ≪ 1; at t = 1e-1 and λ = π² that product is 2.5
        let grid = log_grid(1e-7, 1e-5, 17);
        let xs: Vec<f64> = grid.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = grid
            .iter()
            .map(|&t| kernel_ebar(mp(0.6, 0.5, PI * PI), t).unwrap().abs().ln())
            .collect();
        assert!((fit_slope(&xs, &ys).unwrap() - 0.1).abs() < 0.05);
    }

    #[test]
    fn laplace_transform_of_ebar() {
        let (a, g, lam) = (0.6, 0.5, 3.0);
        for z in [1.0f64, 2.0, 5.0] {
            // t = u^{1/(α+γ)} removes the t^{α+γ-1} singularity
            let p = 1.0 / (a + g);
            let f = |u: f64| {
                if u <= 0.0 {
                    return p * libm::tgamma(a + g).recip();
                }
                let t = u.powf(p);
                let e = mittag_leffler(MlfParams::new(a, a + g).unwrap(), -lam * t.powf(a)).unwrap();
                p * (-z * t).exp() * e
            };
            let upper = (60.0 / z).powf(a + g);
            let lt = integrate(f, 0.0, upper, 1e-12, 1e-10).value;
            let exact = z.powf(-g) / (z.powf(a) + lam);
            assert!(((lt - exact) / exact).abs() < 1e-4, "z={z}: {lt} vs {exact}");
        }
    }

    #[test]
    fn reference_at_zero_and_on_eigenvector() {
        let space = FemSpace::new(20).unwrap();
        let eig = space.generalized_eigs().unwrap();
        let u0 = space.l2_project(|x| x * (1.0 - x) + (3.0 * PI * x).sin());
        let r0 = deterministic_reference(0.5, &space, &eig, &u0, 0.0).unwrap();
        for (x, y) in r0.iter().zip(&u0) {
            assert!((x - y).abs() < 1e-12);
        }
        let j = 4;
        let phi = &eig.vectors()[j];
        let r = deterministic_reference(0.5, &space, &eig, phi, 0.3).unwrap();
        let k = kernel_e(mp(0.5, 0.0, eig.values()[j]), 0.3).unwrap();
        for (x, y) in r.iter().zip(phi) {
            assert!((x - k * y).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_case_matches_matrix_exponential() {
        let space = FemSpace::new(16).unwrap();
        let eig = space.generalized_eigs().unwrap();
        let d = space.dim();
        let u0 = space.l2_project(|x| if x < 0.4 { x } else { 0.4 * (1.0 - x) / 0.6 });
        let m = DMatrix::from_fn(d, d, |i, j| space.mass().to_dense()[i][j]);
        let k = DMatrix::from_fn(d, d, |i, j| space.stiffness().to_dense()[i][j]);
        let a = m.clone().lu().solve(&k).unwrap();
        for t in [0.001, 0.01, 0.1] {
            let e = (-(&a) * t).exp();
            let expect = e * nalgebra::DVector::from_column_slice(&u0);
            let got = deterministic_reference(1.0, &space, &eig, &u0, t).unwrap();
            for (x, y) in got.iter().zip(expect.iter()) {
                assert!((x - y).abs() < 1e-8, "t={t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn recursion_zero_and_gl_integral() {
        let cfg = ModelConfig::new(0.6, 0.0, 1.0, 64, InitialData::Zero).unwrap();
        let u = modal_recursion(&cfg, 2.0, 0.0, &[0.0; 64]).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));

        // λ = 0, γ = 0, q^k = cτ: the GL derivative of u is c
        let c = 1.7;
        let tau = cfg.tau();
        let u = modal_recursion(&cfg, 0.0, 0.0, &vec![c * tau; 64]).unwrap();
        let b = gl_weights(-0.6, 64).unwrap();
        let mut partial = 0.0;
        for n in 1..=64 {
            partial += b[n - 1];
            let exact_discrete = c * tau.powf(0.6) * partial;
            assert!((u[n] - exact_discrete).abs() < 1e-12 * exact_discrete.abs().max(1.0));
        }
        let t = 1.0f64;
        let cont = c * t.powf(0.6) / libm::tgamma(1.6);
        assert!(((u[64] - cont) / cont).abs() < 2.0 * tau);
        assert!(modal_recursion(&cfg, 0.0, 0.0, &[0.0; 3]).is_err());
    }

    #[test]
    fn probe_slopes() {
        let space = FemSpace::new(64).unwrap();
        let eig = space.generalized_eigs().unwrap();
        let grid = log_grid(1e-7, 1e-5, 17);
        let s0 = smoothing_probe(&eig, 0.6, 0.5, 0.0, &grid).unwrap();
        assert!((s0 - 0.1).abs() < 0.05, "{s0}");
        let s1 = smoothing_probe(&eig, 0.6, 0.5, 1.0, &grid).unwrap();
        assert!((s1 + 0.2).abs() < 0.05, "{s1}");
        // at the upper end of the window the lowest mode has left the power-law regime
        let late = smoothing_probe(&eig, 0.6, 0.5, 0.0, &log_grid(1e-4, 1e-2, 17)).unwrap();
        assert!(late.abs() < 0.02, "{late}");
        // heat semigroup is bounded by 1 well before 1/λ_1
        let heat = smoothing_probe(&eig, 1.0, 0.0, 0.0, &log_grid(1e-5, 1e-3, 17)).unwrap();
        assert!(heat.abs() < 0.05, "{heat}");
        assert!(smoothing_probe(&eig, 0.6, 0.5, 2.5, &grid).is_err());
        assert!(smoothing_probe(&eig, 0.6, 0.5, 1.0, &[0.5, 2.0]).is_err());
    }

    #[test]
    fn slope_fit_basics() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert!((fit_slope(&xs, &[1.0, 3.0, 5.0, 7.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(fit_slope(&[1.0], &[1.0]).is_err());
        assert!(fit_slope(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
