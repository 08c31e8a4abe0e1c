//! Continuous piecewise-linear finite elements on a uniform mesh of (0, 1)
//! with homogeneous Dirichlet conditions. Only interior nodes are unknowns.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tridiag::{Ldlt, SymTridiag};

/// Largest dimension accepted by the dense generalized eigensolver.
pub const MAX_EIGEN_DIM: usize = 4096;

#[derive(Debug, Clone)]
pub struct FemSpace {
    intervals: usize,
    h: f64,
    mass: SymTridiag,
    stiffness: SymTridiag,
    mass_factor: Ldlt,
}

impl FemSpace {
    /// Uniform mesh with `intervals` elements; dimension `intervals - 1`.
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::Config(format!(
                "a mesh needs at least 2 intervals, got {intervals}"
            )));
        }
        let n = intervals - 1;
        let h = 1.0 / intervals as f64;
        let mass = SymTridiag::toeplitz(n, 2.0 * h / 3.0, h / 6.0)?;
        let stiffness = SymTridiag::toeplitz(n, 2.0 / h, -1.0 / h)?;
        let mass_factor = mass.ldlt()?;
        Ok(Self {
            intervals,
            h,
            mass,
            stiffness,
            mass_factor,
        })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dim(&self) -> usize {
        self.intervals - 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mass(&self) -> &SymTridiag {
        &self.mass
    }

    pub fn stiffness(&self) -> &SymTridiag {
        &self.stiffness
    }

    pub fn mass_factor(&self) -> &Ldlt {
        &self.mass_factor
    }

    /// Interior node coordinates `x_i = i h`, `i = 1..M-1`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..self.intervals).map(|i| i as f64 * self.h).collect()
    }

    /// Load vector `(f, φ_i)` by three-point Gauss quadrature on every element.
    pub fn load_vector<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        const GAUSS: [(f64, f64); 3] = [
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ];
        let n = self.dim();
        let h = self.h;
        let mut load = vec![0.0; n];
        for e in 0..self.intervals {
            let x0 = e as f64 * h;
            // element e carries the right half of hat e and the left half of hat e+1
            let (mut left, mut right) = (0.0, 0.0);
            for (xi, w) in GAUSS {
                let t = 0.5 * (xi + 1.0);
                let fv = f(x0 + t * h) * w * 0.5 * h;
                left += fv * (1.0 - t);
                right += fv * t;
            }
            if e >= 1 {
                load[e - 1] += left;
            }
            if e < n {
                load[e] += right;
            }
        }
        load
    }

    /// L² projection `P_h f`, as nodal values.
    pub fn l2_project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.mass_factor.solve(&self.load_vector(f))
    }

    /// Exact load vector of `e_ℓ(x) = √2 sin(ℓπx)` against the hat functions.
    pub fn sine_load(&self, ell: usize) -> Result<Vec<f64>> {
        if ell < 1 {
            return Err(Error::Domain {
                param: "ell",
                value: ell as f64,
                reason: "Karhunen-Loève mode index starts at 1",
            });
        }
        let k = ell as f64 * PI;
        let h = self.h;
        let scale = SQRT_2 * 2.0 * (1.0 - (k * h).cos()) / (k * k * h);
        Ok((1..self.intervals).map(|i| scale * (k * i as f64 * h).sin()).collect())
    }

    /// `√(vᵀ M v)`.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim(), "nodal vector does not match the space");
        self.mass.quad_form(v).max(0.0).sqrt()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim(), "nodal vector does not match the space");
        assert_eq!(v.len(), self.dim(), "nodal vector does not match the space");
        self.mass.bilinear(u, v)
    }

    /// `A_h v = M⁻¹ K v`, evaluated by a mass solve.
    pub fn apply_discrete_laplacian(&self, v: &[f64]) -> Vec<f64> {
        self.mass_factor.solve(&self.stiffness.mul_vec(v))
    }

    pub fn generalized_eigs(&self) -> Result<EigenBasis> {
        generalized_eigs(&self.stiffness, &self.mass_factor)
    }
}

/// Mass-orthonormal eigenpairs of the pencil (stiffness, mass), ascending.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl EigenBasis {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Modal coordinates `(v, φ_j)_M` of a nodal vector.
    pub fn coordinates(&self, space: &FemSpace, v: &[f64]) -> Vec<f64> {
        let mv = space.mass().mul_vec(v);
        self.project_dual(&mv)
    }

    /// `φ_jᵀ g` for a dual (load-type) vector `g`.
    pub fn project_dual(&self, g: &[f64]) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|phi| phi.iter().zip(g).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Nodal vector `Σ_j c_j φ_j`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.vectors.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (c, phi) in coeffs.iter().zip(&self.vectors) {
            for (o, p) in out.iter_mut().zip(phi) {
                *o += c * p;
            }
        }
        out
    }

    /// `‖A_h^{s/2} v‖` computed spectrally.
    pub fn fractional_norm(&self, space: &FemSpace, v: &[f64], s: f64) -> f64 {
        self.coordinates(space, v)
            .iter()
            .zip(&self.values)
            .map(|(c, lam)| lam.powf(s) * c * c)
            .sum::<f64>()
            .sqrt()
    }
}

/// Cholesky reduction `C = L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`, a dense symmetric
/// eigensolve of `C`, and back-transformation `φ = L⁻ᵀ y`.
pub fn generalized_eigs(stiffness: &SymTridiag, mass: &Ldlt) -> Result<EigenBasis> {
    let n = stiffness.dim();
    if n > MAX_EIGEN_DIM {
        return Err(Error::Capability(format!(
            "generalized eigensolver is dense; dimension {n} exceeds {MAX_EIGEN_DIM}"
        )));
    }
    if mass.dim() != n {
        return Err(Error::Contract("mass and stiffness dimensions differ".into()));
    }
    let (c, e) = mass.cholesky_factor();
    // L x = b for lower bidiagonal L (diagonal c, subdiagonal e)
    let forward = |col: &mut [f64]| {
        col[0] /= c[0];
        for i in 1..n {
            col[i] = (col[i] - e[i - 1] * col[i - 1]) / c[i];
        }
    };
    let k = stiffness.to_dense();
    // X = L⁻¹ K, column-major into a flat buffer
    let mut x = vec![0.0; n * n];
    for j in 0..n {
        let col = &mut x[j * n..(j + 1) * n];
        for i in 0..n {
            col[i] = k[i][j];
        }
        forward(col);
    }
    // C = L⁻¹ Xᵀ; column j of Xᵀ is row j of X
    let mut cmat = DMatrix::<f64>::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = x[i * n + j];
        }
        forward(&mut col);
        for i in 0..n {
            cmat[(i, j)] = col[i];
        }
    }
    let sym = 0.5 * (&cmat + cmat.transpose());
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for j in order {
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        // Lᵀ φ = y
        v[n - 1] /= c[n - 1];
        for i in (0..n - 1).rev() {
            v[i] = (v[i] - e[i] * v[i + 1]) / c[i];
        }
        if v[0] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        values.push(eig.eigenvalues[j]);
        vectors.push(v);
    }
    if values.first().is_some_and(|&l| !(l > 0.0)) {
        return Err(Error::Numerical("pencil is not positive definite".into()));
    }
    Ok(EigenBasis { values, vectors })
}

/// Nodal values on `fine` of the piecewise-linear function with interior
/// values `coarse`; the fine interval count must be a multiple of the coarse one.
pub fn prolong(coarse: &[f64], fine: &FemSpace) -> Result<Vec<f64>> {
    let mc = coarse.len() + 1;
    let mf = fine.intervals();
    if mc < 2 || !mf.is_multiple_of(mc) {
        return Err(Error::Config(format!(
            "meshes with {mc} and {mf} intervals are not nested"
        )));
    }
    let r = mf / mc;
    let at = |i: usize| if i == 0 || i == mc { 0.0 } else { coarse[i - 1] };
    Ok((1..mf)
        .map(|j| {
            let (c, rem) = (j / r, j % r);
            if rem == 0 {
                at(c)
            } else {
                let t = rem as f64 / r as f64;
                (1.0 - t) * at(c) + t * at(c + 1)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form eigenvalues of the uniform 1D linear-element pencil.
    fn fem_eigenvalue(j: usize, h: f64) -> f64 {
        let c = (j as f64 * PI * h).cos();
        6.0 / (h * h) * (1.0 - c) / (2.0 + c)
    }

    #[test]
    fn two_intervals() {
        let s = FemSpace::new(2).unwrap();
        assert_eq!(s.dim(), 1);
        assert!((s.mass().diag()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.stiffness().diag()[0] - 4.0).abs() < 1e-15);
        let eig = s.generalized_eigs().unwrap();
        assert!((eig.values()[0] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn four_intervals() {
        let s = FemSpace::new(4).unwrap();
        assert!(s.mass().diag().iter().all(|&d| (d - 1.0 / 6.0).abs() < 1e-15));
        assert!(s.mass().off().iter().all(|&d| (d - 1.0 / 24.0).abs() < 1e-15));
        assert!(s.stiffness().diag().iter().all(|&d| (d - 8.0).abs() < 1e-14));
        assert!(s.stiffness().off().iter().all(|&d| (d + 4.0).abs() < 1e-14));
    }

    #[test]
    fn too_coarse() {
        assert!(matches!(FemSpace::new(1), Err(Error::Config(_))));
    }

    #[test]
    fn row_sums() {
        let s = FemSpace::new(10).unwrap();
        let ones = vec![1.0; s.dim()];
        let m1 = s.mass().mul_vec(&ones);
        let k1 = s.stiffness().mul_vec(&ones);
        for i in 1..s.dim() - 1 {
            assert!((m1[i] - s.h()).abs() < 1e-15);
            assert!(k1[i].abs() < 1e-12);
        }
    }

    #[test]
    fn lowest_eigenvalue_dispersion() {
        let s = FemSpace::new(64).unwrap();
        let eig = s.generalized_eigs().unwrap();
        let h = s.h();
        let dispersion = PI * PI * (1.0 + PI * PI * h * h / 12.0);
        assert!((eig.values()[0] / dispersion - 1.0).abs() < 1e-3);
    }

    #[test]
    fn eigenvalues_match_closed_form() {
        let s = FemSpace::new(16).unwrap();
        let eig = s.generalized_eigs().unwrap();
        for (j, &lam) in eig.values().iter().enumerate() {
            let exact = fem_eigenvalue(j + 1, s.h());
            assert!((lam - exact).abs() <= 1e-9 * exact.max(1.0), "j={j}");
        }
    }

    #[test]
    fn eigenpairs_are_mass_orthonormal_with_small_residual() {
        let s = FemSpace::new(40).unwrap();
        let eig = s.generalized_eigs().unwrap();
        for (i, vi) in eig.vectors().iter().enumerate() {
            for (j, vj) in eig.vectors().iter().enumerate() {
                let g = s.inner(vi, vj);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-12, "({i},{j}) {g}");
            }
            let lam = eig.values()[i];
            let kv = s.stiffness().mul_vec(vi);
            let mv = s.mass().mul_vec(vi);
            let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lam * b).collect();
            // residual measured in the M⁻¹ (dual) norm
            let rr = s.mass_factor().solve(&r);
            assert!(s.l2_norm(&rr) <= 1e-10 * lam);
        }
    }

    #[test]
    fn sturm_sign_changes() {
        // prime interval count: no eigenvector vanishes at a node
        let s = FemSpace::new(23).unwrap();
        let eig = s.generalized_eigs().unwrap();
        for (j, v) in eig.vectors().iter().enumerate() {
            let changes = v.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            assert_eq!(changes, j, "mode {}", j + 1);
        }
    }

    #[test]
    fn project_hat_gives_unit_vector() {
        let s = FemSpace::new(8).unwrap();
        let i = 3;
        let xi = (i + 1) as f64 * s.h();
        let h = s.h();
        let hat = |x: f64| (1.0 - (x - xi).abs() / h).max(0.0);
        let c = s.l2_project(hat);
        for (k, v) in c.iter().enumerate() {
            let want = if k == i { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-13);
        }
        assert!(s.l2_project(|_| 0.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn project_sine_is_second_order_close() {
        let s = FemSpace::new(64).unwrap();
        let c = s.l2_project(|x| (PI * x).sin());
        for (v, x) in c.iter().zip(s.nodes()) {
            assert!((v - (PI * x).sin()).abs() <= 1e-3);
        }
    }

    #[test]
    fn sine_load_aliasing_null_mode() {
        let s = FemSpace::new(6).unwrap();
        assert!(s.sine_load(12).unwrap().iter().all(|v| v.abs() < 1e-14));
        assert!(s.sine_load(0).is_err());
    }

    #[test]
    fn sine_load_matches_adaptive_quadrature() {
        let s = FemSpace::new(4).unwrap();
        let got = s.sine_load(1).unwrap()[1];
        let hat = |x: f64| (1.0 - (x - 0.5).abs() / 0.25).max(0.0);
        let q = crate::quadrature::integrate_with_breaks(
            |x| SQRT_2 * (PI * x).sin() * hat(x),
            &[0.25, 0.5, 0.75],
            1e-14,
            0.0,
        );
        let closed = SQRT_2 * 2.0 * (1.0 - (PI / 4.0).cos()) / (PI * PI * 0.25);
        assert!((got - closed).abs() < 1e-14);
        assert!((got - q.value).abs() < 1e-12);
    }

    #[test]
    fn sine_load_mirror_parity() {
        let s = FemSpace::new(12).unwrap();
        for ell in 1..8 {
            let g = s.sine_load(ell).unwrap();
            let n = g.len();
            let sign = if ell % 2 == 1 { 1.0 } else { -1.0 };
            for i in 0..n {
                assert!((g[i] - sign * g[n - 1 - i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn prolong_identity_and_hat() {
        let c = FemSpace::new(4).unwrap();
        let v = vec![0.3, -1.0, 2.0];
        assert_eq!(prolong(&v, &c).unwrap(), v);
        let f = FemSpace::new(8).unwrap();
        let p = prolong(&[0.0, 1.0, 0.0], &f).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0]);
        assert!((c.l2_norm(&v) - f.l2_norm(&prolong(&v, &f).unwrap())).abs() < 1e-13);
        assert!(prolong(&v, &FemSpace::new(6).unwrap()).is_err());
    }

    #[test]
    fn norms() {
        let s = FemSpace::new(256).unwrap();
        let v: Vec<f64> = s.nodes().iter().map(|x| (PI * x).sin()).collect();
        assert!((s.l2_norm(&v) - 0.5f64.sqrt()).abs() < 1e-4);
        let twice: Vec<f64> = v.iter().map(|a| 2.0 * a).collect();
        assert_eq!(s.l2_norm(&twice), 2.0 * s.l2_norm(&v));
        assert_eq!(s.l2_norm(&vec![0.0; s.dim()]), 0.0);
    }

    #[test]
    fn laplacian_paths_agree() {
        for m in [8, 33, 128] {
            let s = FemSpace::new(m).unwrap();
            let eig = s.generalized_eigs().unwrap();
            let v: Vec<f64> = (0..s.dim()).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            let direct = s.apply_discrete_laplacian(&v);
            let coords = eig.coordinates(&s, &v);
            let scaled: Vec<f64> = coords.iter().zip(eig.values()).map(|(c, l)| c * l).collect();
            let spectral = eig.synthesize(&scaled);
            let scale = direct.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for (a, b) in direct.iter().zip(&spectral) {
                assert!((a - b).abs() <= 1e-10 * scale, "M={m}");
            }
        }
    }

    #[test]
    fn fractional_norm_monotone_for_high_modes() {
        let s = FemSpace::new(32).unwrap();
        let eig = s.generalized_eigs().unwrap();
        let mut coeffs = vec![0.0; s.dim()];
        for c in coeffs.iter_mut().skip(20) {
            *c = 1.0;
        }
        let mut v = eig.synthesize(&coeffs);
        let norm = s.l2_norm(&v);
        v.iter_mut().for_each(|a| *a /= norm);
        let mut prev = 0.0;
        for k in 0..=8 {
            let n = eig.fractional_norm(&s, &v, 0.25 * k as f64);
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn capability_cap() {
        let big = SymTridiag::toeplitz(MAX_EIGEN_DIM + 1, 2.0, -1.0).unwrap();
        let m = SymTridiag::toeplitz(MAX_EIGEN_DIM + 1, 4.0, 1.0)
            .unwrap()
            .ldlt()
            .unwrap();
        assert!(matches!(generalized_eigs(&big, &m), Err(Error::Capability(_))));
    }
}
