//! Time stepping of the fully discrete scheme.
//!
//! Testing the scheme against the finite element space and multiplying by `τ^α`
//! gives, for `n = 1..N`,
//!
//! ```text
//! (M + τ^α K) U^n = M U^0 - Σ_{k=1}^{n-1} b^{(α)}_{n-k} M (U^k - U^0)
//!                   + τ^{α+γ-1} Σ_{k=1}^{n} b^{(-γ)}_{n-k} g^k
//! ```
//!
//! where `g^k` is the load vector of `P_h ΔW^k` and `f^0 = 0`. The matrix on the
//! left is factored once. History sums are evaluated directly, `O(N²)` vector
//! operations per trajectory.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem1d::FemSpace;
use crate::fracquad::{gl_weights, integral_weights};
use crate::noise::{IncrementMatrix, NoiseModel, NoiseProjector, StreamKey};
use crate::tridiag::Ldlt;

/// Built-in initial data on (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedInitial {
    /// `sin(πx)`
    SinPi,
    /// `x (1 - x)`
    Parabola,
    /// indicator of `(0, 1/2)`, a nonsmooth datum
    Step,
}

impl NamedInitial {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            NamedInitial::SinPi => (PI * x).sin(),
            NamedInitial::Parabola => x * (1.0 - x),
            NamedInitial::Step => {
                if x < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedInitial::SinPi => "sin",
            NamedInitial::Parabola => "parabola",
            NamedInitial::Step => "step",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(NamedInitial::SinPi),
            "parabola" => Some(NamedInitial::Parabola),
            "step" => Some(NamedInitial::Step),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    Named(NamedInitial),
    /// Nodal values on the interior nodes of the solve space.
    Nodal(Arc<Vec<f64>>),
}

impl InitialData {
    /// `U^0 = P_h u_0`; nodal data are taken as already discrete.
    pub fn project(&self, space: &FemSpace) -> Result<Vec<f64>> {
        match self {
            InitialData::Zero => Ok(vec![0.0; space.dim()]),
            InitialData::Named(f) => {
                let f = *f;
                Ok(space.l2_project(move |x| f.eval(x)))
            }
            InitialData::Nodal(v) => {
                if v.len() != space.dim() {
                    return Err(Error::Contract(format!(
                        "nodal initial data has {} values, space has {}",
                        v.len(),
                        space.dim()
                    )));
                }
                Ok(v.as_ref().clone())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, InitialData::Zero)
    }
}

/// Checks `α ∈ (0,1)`, `γ ∈ [0,1]` and the well-posedness condition `α + γ > 1/2`.
pub fn check_orders(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            param: "alpha",
            value: alpha,
            reason: "fractional order alpha must lie in (0, 1)",
        });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain {
            param: "gamma",
            value: gamma,
            reason: "integration order gamma must lie in [0, 1]",
        });
    }
    if alpha + gamma <= 0.5 {
        return Err(Error::Config(format!(
            "alpha + gamma = {} violates the well-posedness condition alpha + gamma > 1/2",
            alpha + gamma
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    alpha: f64,
    gamma: f64,
    horizon: f64,
    steps: usize,
    initial: InitialData,
}

impl ModelConfig {
    pub fn new(alpha: f64, gamma: f64, horizon: f64, steps: usize, initial: InitialData) -> Result<Self> {
        check_orders(alpha, gamma)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain {
                param: "T",
                value: horizon,
                reason: "time horizon must be positive",
            });
        }
        if steps == 0 {
            return Err(Error::Config("at least one time step is required".into()));
        }
        Ok(Self {
            alpha,
            gamma,
            horizon,
            steps,
            initial,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    /// Same problem on a different number of steps.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(self.alpha, self.gamma, self.horizon, steps, self.initial.clone())
    }

    pub fn with_initial(&self, initial: InitialData) -> Self {
        Self {
            initial,
            ..self.clone()
        }
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    config: ModelConfig,
    key: Option<StreamKey>,
    dim: usize,
    states: Vec<f64>,
}

impl SolveResult {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn key(&self) -> Option<StreamKey> {
        self.key
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.config.steps
    }

    /// `U^n` for `n = 0..=N`.
    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.config.steps)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn into_final_state(self) -> Vec<f64> {
        let n = self.config.steps;
        self.states[n * self.dim..].to_vec()
    }
}

/// Pre-factored scheme for one (problem, mesh) pair, reusable across trajectories.
#[derive(Debug, Clone)]
pub struct Stepper {
    config: ModelConfig,
    space: FemSpace,
    derivative_weights: Vec<f64>,
    /// `τ^{α+γ-1} b^{(-γ)}_j`
    noise_weights: Vec<f64>,
    system: Ldlt,
}

impl Stepper {
    pub fn new(config: &ModelConfig, space: &FemSpace) -> Result<Self> {
        let n = config.steps();
        let tau = config.tau();
        let derivative_weights = gl_weights(config.alpha(), n)?;
        let noise_scale = tau.powf(config.alpha() + config.gamma() - 1.0);
        let noise_weights = integral_weights(config.gamma(), n)?
            .into_iter()
            .map(|b| noise_scale * b)
            .collect();
        let system = space
            .mass()
            .add_scaled(tau.powf(config.alpha()), space.stiffness())?
            .ldlt()?;
        Ok(Self {
            config: config.clone(),
            space: space.clone(),
            derivative_weights,
            noise_weights,
            system,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    /// Runs the scheme from `u0` with noise loads `g^1..g^N` (row-major,
    /// `N x dim`), or without noise when `loads` is `None`.
    pub fn run(&self, u0: &[f64], loads: Option<&[f64]>, key: Option<StreamKey>) -> Result<SolveResult> {
        let d = self.space.dim();
        let n_steps = self.config.steps();
        if u0.len() != d {
            return Err(Error::Contract(format!(
                "initial state has {} values, space has {d}",
                u0.len()
            )));
        }
        if let Some(g) = loads {
            if g.len() != n_steps * d {
                return Err(Error::Contract(format!(
                    "noise loads hold {} values, expected {}",
                    g.len(),
                    n_steps * d
                )));
            }
        }
        let mass = self.space.mass();
        let mu0 = mass.mul_vec(u0);
        let mut states = vec![0.0; (n_steps + 1) * d];
        states[..d].copy_from_slice(u0);
        // history[k-1] = M (U^k - U^0)
        let mut history = vec![0.0; n_steps * d];
        let mut rhs = vec![0.0; d];
        let mut diff = vec![0.0; d];
        let bd = &self.derivative_weights;
        let bn = &self.noise_weights;

        fn row(m: &[f64], k: usize, d: usize) -> &[f64] {
            &m[(k - 1) * d..k * d]
        }

        // Steps are processed in blocks. History older than the block is
        // accumulated for all of its steps at once, so each history row is read
        // once per block instead of once per step.
        let mut pending = vec![0.0; BLOCK * d];
        let mut weights_a = Vec::with_capacity(BLOCK * n_steps);
        let mut weights_c = Vec::with_capacity(BLOCK * n_steps);
        let mut n0 = 1;
        while n0 <= n_steps {
            let n1 = (n0 + BLOCK).min(n_steps + 1);
            let pending = &mut pending[..(n1 - n0) * d];
            for p in pending.chunks_exact_mut(d) {
                p.copy_from_slice(&mu0);
            }
            let (rows, far) = (n1 - n0, n0 - 1);
            if far > 0 {
                // pending -= A H_far and pending += C G_far with Toeplitz A, C
                weights_a.clear();
                weights_c.clear();
                for n in n0..n1 {
                    weights_a.extend((1..n0).map(|k| bd[n - k]));
                    weights_c.extend((1..n0).map(|k| bn[n - k]));
                }
                gemm(rows, far, d, -1.0, &weights_a, &history[..far * d], pending);
                if let Some(g) = loads {
                    gemm(rows, far, d, 1.0, &weights_c, &g[..far * d], pending);
                }
            }
            for n in n0..n1 {
                rhs.copy_from_slice(&pending[(n - n0) * d..(n - n0 + 1) * d]);
                for k in n0..n {
                    accumulate(
                        &mut rhs,
                        bd[n - k],
                        row(&history, k, d),
                        bn[n - k],
                        loads.map(|g| row(g, k, d)),
                    );
                }
                if let Some(g) = loads {
                    let c = bn[0];
                    for (r, q) in rhs.iter_mut().zip(row(g, n, d)) {
                        *r += c * q;
                    }
                }
                self.system.solve_in_place(&mut rhs);
                states[n * d..(n + 1) * d].copy_from_slice(&rhs);
                for ((df, u), v) in diff.iter_mut().zip(&rhs).zip(u0) {
                    *df = u - v;
                }
                mass.mul_vec_into(&diff, &mut history[(n - 1) * d..n * d]);
            }
            n0 = n1;
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite state in time stepping".into()));
        }
        Ok(SolveResult {
            config: self.config.clone(),
            key,
            dim: d,
            states,
        })
    }
}

const BLOCK: usize = 128;

/// `c += scale * a b` for row-major `a` (`m x k`), `b` (`k x n`) and `c` (`m x n`).
fn gemm(m: usize, k: usize, n: usize, scale: f64, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert!(a.len() == m * k && b.len() == k * n && c.len() == m * n);
    // SAFETY: the slices hold exactly the row-major extents passed as strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            scale,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `acc += c g - a h`, or `acc -= a h` without noise.
#[inline]
fn accumulate(acc: &mut [f64], a: f64, h: &[f64], c: f64, g: Option<&[f64]>) {
    match g {
        Some(g) => {
            for ((r, hv), gv) in acc.iter_mut().zip(h).zip(g) {
                *r += c * gv - a * hv;
            }
        }
        None => {
            for (r, hv) in acc.iter_mut().zip(h) {
                *r -= a * hv;
            }
        }
    }
}

/// One trajectory of the fully discrete scheme driven by `incs`.
pub fn solve_trajectory(
    config: &ModelConfig,
    space: &FemSpace,
    model: &NoiseModel,
    incs: &IncrementMatrix,
) -> Result<SolveResult> {
    if incs.steps() != config.steps() {
        return Err(Error::Contract(format!(
            "increments cover {} steps, configuration has {}",
            incs.steps(),
            config.steps()
        )));
    }
    if (incs.tau() - config.tau()).abs() > 1e-12 * config.tau() {
        return Err(Error::Contract(format!(
            "increment step {} differs from configuration step {}",
            incs.tau(),
            config.tau()
        )));
    }
    let stepper = Stepper::new(config, space)?;
    let loads = NoiseProjector::new(model, space)?.all_loads(incs)?;
    let u0 = config.initial().project(space)?;
    stepper.run(&u0, Some(&loads), Some(incs.key()))
}

/// `Φ(v) = ∫ v² dx = vᵀ M v`.
pub fn weak_functional(space: &FemSpace, v: &[f64]) -> f64 {
    assert_eq!(v.len(), space.dim(), "nodal vector does not match the space");
    space.mass().quad_form(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_increments, IncrementMatrix};

    fn cfg(alpha: f64, gamma: f64, n: usize, init: InitialData) -> ModelConfig {
        ModelConfig::new(alpha, gamma, 1.0, n, init).unwrap()
    }

    #[test]
    fn rejects_ill_posed_orders() {
        assert!(matches!(check_orders(0.2, 0.3), Err(Error::Config(_))));
        assert!(check_orders(0.2, 0.31).is_ok());
        assert!(check_orders(1.0, 0.0).is_err());
        assert!(check_orders(0.5, 1.1).is_err());
        assert!(ModelConfig::new(0.5, 0.5, 0.0, 4, InitialData::Zero).is_err());
        assert!(ModelConfig::new(0.5, 0.5, 1.0, 0, InitialData::Zero).is_err());
    }

    #[test]
    fn zero_data_zero_noise_stays_zero() {
        let space = FemSpace::new(10).unwrap();
        let c = cfg(0.5, 0.5, 16, InitialData::Zero);
        let model = NoiseModel::for_space(2.0, &space).unwrap();
        let incs = IncrementMatrix::zeros(model.truncation(), 16, c.tau()).unwrap();
        let r = solve_trajectory(&c, &space, &model, &incs).unwrap();
        assert!(r.states().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn homogeneous_problem_is_linear() {
        let space = FemSpace::new(12).unwrap();
        let c = cfg(0.4, 0.3, 20, InitialData::Named(NamedInitial::Parabola));
        let st = Stepper::new(&c, &space).unwrap();
        let u0 = c.initial().project(&space).unwrap();
        let u0x2: Vec<f64> = u0.iter().map(|v| 2.0 * v).collect();
        let a = st.run(&u0, None, None).unwrap();
        let b = st.run(&u0x2, None, None).unwrap();
        for (x, y) in a.final_state().iter().zip(b.final_state()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn superposition_of_data_and_noise() {
        let space = FemSpace::new(9).unwrap();
        let c = cfg(0.6, 0.5, 24, InitialData::Named(NamedInitial::SinPi));
        let model = NoiseModel::for_space(2.0, &space).unwrap();
        let incs = sample_increments(&model, 24, c.tau(), StreamKey::new(1, 0)).unwrap();
        let zero = IncrementMatrix::zeros(model.truncation(), 24, c.tau()).unwrap();
        let full = solve_trajectory(&c, &space, &model, &incs).unwrap();
        let data_only = solve_trajectory(&c, &space, &model, &zero).unwrap();
        let noise_only = solve_trajectory(&c.with_initial(InitialData::Zero), &space, &model, &incs).unwrap();
        for n in 0..=24 {
            for ((f, d), w) in full.state(n).iter().zip(data_only.state(n)).zip(noise_only.state(n)) {
                assert!((f - d - w).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn first_state_is_projection() {
        let space = FemSpace::new(16).unwrap();
        let c = cfg(0.3, 0.9, 4, InitialData::Named(NamedInitial::Step));
        let st = Stepper::new(&c, &space).unwrap();
        let u0 = c.initial().project(&space).unwrap();
        let r = st.run(&u0, None, None).unwrap();
        assert_eq!(r.state(0), u0.as_slice());
    }

    #[test]
    fn contract_checks() {
        let space = FemSpace::new(6).unwrap();
        let c = cfg(0.5, 0.5, 8, InitialData::Zero);
        let model = NoiseModel::for_space(2.0, &space).unwrap();
        let short = IncrementMatrix::zeros(5, 4, 0.25).unwrap();
        assert!(matches!(
            solve_trajectory(&c, &space, &model, &short),
            Err(Error::Contract(_))
        ));
        let st = Stepper::new(&c, &space).unwrap();
        assert!(st.run(&[0.0; 3], None, None).is_err());
        let bad_nodal = c.with_initial(InitialData::Nodal(Arc::new(vec![1.0; 2])));
        assert!(bad_nodal.initial().project(&space).is_err());
    }

    #[test]
    fn unit_gamma_is_supported() {
        let space = FemSpace::new(8).unwrap();
        let c = cfg(0.5, 1.0, 10, InitialData::Zero);
        let model = NoiseModel::for_space(2.0, &space).unwrap();
        let incs = sample_increments(&model, 10, c.tau(), StreamKey::new(2, 0)).unwrap();
        assert!(solve_trajectory(&c, &space, &model, &incs).is_ok());
    }

    #[test]
    fn weak_functional_is_squared_norm() {
        let space = FemSpace::new(256).unwrap();
        let v: Vec<f64> = space.nodes().iter().map(|x| (PI * x).sin()).collect();
        assert!((weak_functional(&space, &v) - space.l2_norm(&v).powi(2)).abs() < 1e-14);
        assert!((weak_functional(&space, &v) - 0.5).abs() < 1e-4);
        assert_eq!(weak_functional(&space, &vec![0.0; 255]), 0.0);
    }

    #[test]
    fn named_initial_roundtrip() {
        for f in [NamedInitial::SinPi, NamedInitial::Parabola, NamedInitial::Step] {
            assert_eq!(NamedInitial::from_name(f.name()), Some(f));
        }
        assert_eq!(NamedInitial::from_name("cos"), None);
    }
}
