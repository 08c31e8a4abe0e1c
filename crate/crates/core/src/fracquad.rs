//! Grünwald-Letnikov convolution quadrature.
//!
//! The weights `b_j` are the power-series coefficients of `(1 - ζ)^β`. A table
//! with `β > 0` discretizes the Riemann-Liouville derivative of order `β`, a
//! table with `β < 0` the fractional integral of order `-β`.

use crate::error::{Error, Result};

/// Convolution weights `b_0..b_N` for one exponent and step size.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    beta: f64,
    tau: f64,
    weights: Vec<f64>,
}

impl WeightTable {
    /// Builds the table for exponent `beta` with `count + 1` entries.
    pub fn new(beta: f64, count: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain {
                param: "tau",
                value: tau,
                reason: "time step must be positive and finite",
            });
        }
        let weights = gl_weights(beta, count)?;
        Ok(Self { beta, tau, weights })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of stored weights (`count + 1`).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Applies the quadrature to samples `v^0..v^n`, returning every partial
    /// result `τ^{-β} Σ_{k≤n} b_{n-k} v^k`.
    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        conv_quad(self, samples)
    }
}

/// Coefficients of `(1 - ζ)^beta` up to and including `ζ^count`.
///
/// Uses `b_0 = 1`, `b_j = b_{j-1} (j - 1 - beta) / j`.
pub fn gl_weights(beta: f64, count: usize) -> Result<Vec<f64>> {
    if !(beta.abs() < 1.0) {
        return Err(Error::Domain {
            param: "beta",
            value: beta,
            reason: "weight exponent must satisfy |beta| < 1",
        });
    }
    if count == 0 {
        return Err(Error::Domain {
            param: "count",
            value: 0.0,
            reason: "at least one weight beyond b_0 is required",
        });
    }
    Ok(recursion(beta, count))
}

/// Weights `b^{(-γ)}_j` for `γ ∈ [0, 1]`. Unlike [`gl_weights`] this admits the
/// endpoint `γ = 1`, where every weight equals 1 (the rectangle rule).
pub(crate) fn integral_weights(gamma: f64, count: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain {
            param: "gamma",
            value: gamma,
            reason: "integration order must lie in [0, 1]",
        });
    }
    Ok(recursion(-gamma, count))
}

fn recursion(beta: f64, count: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(count + 1);
    w.push(1.0);
    let mut prev = 1.0;
    for j in 1..=count {
        let jf = j as f64;
        prev *= (jf - 1.0 - beta) / jf;
        w.push(prev);
    }
    w
}

/// Discrete fractional integral/derivative of `samples` using `table`.
pub fn conv_quad(table: &WeightTable, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() > table.len() {
        return Err(Error::Length {
            what: "samples",
            got: samples.len(),
            max: table.len(),
        });
    }
    let scale = table.tau.powf(-table.beta);
    let b = &table.weights;
    Ok((0..samples.len())
        .map(|n| {
            let acc: f64 = samples[..=n].iter().enumerate().map(|(k, v)| b[n - k] * v).sum();
            scale * acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_integration_order_is_rectangle_rule() {
        assert!(integral_weights(1.0, 5).unwrap().iter().all(|&b| b == 1.0));
        assert_eq!(integral_weights(0.5, 2).unwrap(), gl_weights(-0.5, 2).unwrap());
        assert!(integral_weights(1.5, 2).is_err());
        assert!(gl_weights(-1.0, 2).is_err());
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn half_power_series() {
        close(&gl_weights(0.5, 2).unwrap(), &[1.0, -0.5, -0.125], 1e-15);
    }

    #[test]
    fn negative_half_power_series() {
        // Γ(j+1/2)/(Γ(1/2) j!) = 1, 1/2, 3/8
        close(&gl_weights(-0.5, 2).unwrap(), &[1.0, 0.5, 0.375], 1e-15);
    }

    #[test]
    fn zero_exponent_is_identity() {
        assert_eq!(gl_weights(0.0, 3).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_out_of_range_beta() {
        for beta in [1.0, -1.0, 1.5, f64::NAN] {
            match gl_weights(beta, 4) {
                Err(Error::Domain { param, .. }) => assert_eq!(param, "beta"),
                other => panic!("expected domain error, got {other:?}"),
            }
        }
        assert!(gl_weights(0.3, 0).is_err());
    }

    #[test]
    fn sign_pattern() {
        let d = gl_weights(0.7, 200).unwrap();
        assert!(d[1..].iter().all(|&b| b < 0.0));
        let mut partial = 0.0;
        let mut last = f64::INFINITY;
        for b in &d {
            partial += b;
            assert!(partial > 0.0 && partial <= last);
            last = partial;
        }
        let i = gl_weights(-0.4, 200).unwrap();
        assert!(i.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn zero_samples_give_zero() {
        let t = WeightTable::new(0.3, 8, 0.1).unwrap();
        assert!(t.apply(&[0.0; 9]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_undoes_integral() {
        let tau = 0.25;
        let int = WeightTable::new(-0.5, 3, tau).unwrap();
        let der = WeightTable::new(0.5, 3, tau).unwrap();
        let v = [0.0, 1.0, 2.0, 3.0];
        let back = der.apply(&int.apply(&v).unwrap()).unwrap();
        close(&back, &v, 1e-12);
    }

    #[test]
    fn too_many_samples() {
        let t = WeightTable::new(0.5, 2, 1.0).unwrap();
        assert!(matches!(t.apply(&[1.0; 4]), Err(Error::Length { got: 4, max: 3, .. })));
    }
}
