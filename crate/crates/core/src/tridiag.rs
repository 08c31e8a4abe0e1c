//! Symmetric tridiagonal matrices and their LDLᵀ / Cholesky factorizations.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Contract(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    /// Constant-coefficient (Toeplitz) matrix of size `n`.
    pub fn toeplitz(n: usize, d: f64, o: f64) -> Result<Self> {
        Self::new(vec![d; n], vec![o; n.saturating_sub(1)])
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &SymTridiag) -> Result<SymTridiag> {
        if self.dim() != other.dim() {
            return Err(Error::Contract("tridiagonal sum of unequal sizes".into()));
        }
        let diag = self.diag.iter().zip(&other.diag).map(|(a, b)| a + c * b).collect();
        let off = self.off.iter().zip(&other.off).map(|(a, b)| a + c * b).collect();
        SymTridiag::new(diag, off)
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                s += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        s
    }

    /// Bilinear form `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * y[i];
            if i + 1 < n {
                s += self.off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
            }
        }
        s
    }

    pub fn ldlt(&self) -> Result<Ldlt> {
        Ldlt::factor(self)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.off[i];
                a[i + 1][i] = self.off[i];
            }
        }
        a
    }
}

/// `A = L D Lᵀ` with unit lower bidiagonal `L`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Ldlt {
    /// Fails if a pivot is not strictly positive, so success certifies SPD.
    pub fn factor(a: &SymTridiag) -> Result<Self> {
        let n = a.dim();
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        d.push(a.diag[0]);
        for i in 1..n {
            let prev = d[i - 1];
            if !(prev > 0.0) {
                return Err(Error::Numerical(format!("non-positive pivot {prev} at row {}", i - 1)));
            }
            let li = a.off[i - 1] / prev;
            l.push(li);
            d.push(a.diag[i] - li * a.off[i - 1]);
        }
        if !(d[n - 1] > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive pivot {} at row {}",
                d[n - 1],
                n - 1
            )));
        }
        Ok(Self { d, l })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Overwrites `rhs` with `A⁻¹ rhs`.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(rhs.len(), n);
        for i in 1..n {
            rhs[i] -= self.l[i - 1] * rhs[i - 1];
        }
        for (r, d) in rhs.iter_mut().zip(&self.d) {
            *r /= d;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.l[i] * rhs[i + 1];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Lower bidiagonal Cholesky factor `C = L D^{1/2}`, returned as
    /// (diagonal, subdiagonal).
    pub fn cholesky_factor(&self) -> (Vec<f64>, Vec<f64>) {
        let diag: Vec<f64> = self.d.iter().map(|v| v.sqrt()).collect();
        let sub = self.l.iter().zip(&diag).map(|(l, c)| l * c).collect();
        (diag, sub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_small_system() {
        let a = SymTridiag::new(vec![4.0, 4.0, 4.0], vec![1.0, 1.0]).unwrap();
        let x = [1.0, -2.0, 3.0];
        let b = a.mul_vec(&x);
        let got = a.ldlt().unwrap().solve(&b);
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = SymTridiag::new(vec![1.0, 1.0], vec![2.0]).unwrap();
        assert!(matches!(a.ldlt(), Err(Error::Numerical(_))));
    }

    #[test]
    fn shape_checked() {
        assert!(SymTridiag::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiag::new(vec![], vec![]).is_err());
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let a = SymTridiag::new(vec![3.0, 5.0, 2.5, 4.0], vec![1.0, -0.5, 0.7]).unwrap();
        let (c, s) = a.ldlt().unwrap().cholesky_factor();
        for i in 0..4 {
            let mut diag = c[i] * c[i];
            if i > 0 {
                diag += s[i - 1] * s[i - 1];
                assert!((s[i - 1] * c[i - 1] - a.off()[i - 1]).abs() < 1e-14);
            }
            assert!((diag - a.diag()[i]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn residual_small_for_diagonally_dominant(
            off in proptest::collection::vec(-1.0f64..1.0, 1..40),
            rhs_seed in -5.0f64..5.0,
        ) {
            let n = off.len() + 1;
            let diag = vec![2.5; n];
            let a = SymTridiag::new(diag, off).unwrap();
            let b: Vec<f64> = (0..n).map(|i| rhs_seed + (i as f64).sin()).collect();
            let x = a.ldlt().unwrap().solve(&b);
            let r = a.mul_vec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                prop_assert!((ri - bi).abs() < 1e-12);
            }
            prop_assert!((a.quad_form(&x) - a.bilinear(&x, &x)).abs() < 1e-10);
        }
    }
}
