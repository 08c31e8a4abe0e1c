//! Two-parameter Mittag-Leffler function `E_{a,b}(x)` on the closed negative
//! real axis.
//!
//! Three regimes are used:
//!
//! * Taylor series `Σ x^k / Γ(ak + b)` while `|x| ≤ min(5, 10^a)`. The bound on
//!   `|x|^{1/a}` keeps the largest term, and hence the cancellation, below `e^10`.
//! * The algebraic asymptotic expansion `Σ_{k≥1} (-1)^{k+1} |x|^{-k} / Γ(b - ak)`
//!   whenever its smallest term bound falls below `1e-14`. For `a < 1` there is no
//!   exponentially small part on the negative axis; for `a = 1` the term
//!   `|x|^{1-b} e^{x}` is added.
//! * Otherwise, collapse of the Hankel contour onto the branch cut:
//!
//!   ```text
//!   E_{a,b}(-s) = 1/π ∫_0^∞ e^{-r} r^{a-b} (r^a sin πb + s sin π(b-a))
//!                              / (r^{2a} + 2 s r^a cos πa + s²) dr
//!   ```
//!
//!   valid for `0 < a < 1`, `b < 1 + a`. Any `b > 1` is first lowered with
//!   `E_{a,b}(x) = (E_{a,b-a}(x) - 1/Γ(b-a)) / x`. For `a = 1` a Beta-type
//!   integral over `[0, 1]` is used instead.

use std::f64::consts::PI;

use libm::{lgamma as ln_gamma, tgamma as gamma};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlfParams {
    a: f64,
    b: f64,
}

impl MlfParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Domain {
                param: "a",
                value: a,
                reason: "Mittag-Leffler index a must lie in (0, 1]",
            });
        }
        if !(b > 0.0 && b <= 4.0) {
            return Err(Error::Domain {
                param: "b",
                value: b,
                reason: "Mittag-Leffler index b must lie in (0, 4]",
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `E_{a,b}(x)` for `x ≤ 0`, absolute accuracy about `1e-10` or better.
pub fn mittag_leffler(params: MlfParams, x: f64) -> Result<f64> {
    if !(x <= 0.0) {
        return Err(Error::Domain {
            param: "x",
            value: x,
            reason: "only the closed negative real axis is supported",
        });
    }
    Ok(eval(params.a, params.b, x))
}

/// Reciprocal Gamma function, zero at the poles of Γ.
pub(crate) fn rgamma(z: f64) -> f64 {
    if z > 0.0 {
        if z > 171.0 {
            return (-ln_gamma(z)).exp();
        }
        return 1.0 / gamma(z);
    }
    if z == z.round() {
        return 0.0;
    }
    // 1/Γ(z) = Γ(1 - z) sin(πz) / π
    let w = 1.0 - z;
    let g = if w > 171.0 { f64::INFINITY } else { gamma(w) };
    g * (PI * z).sin() / PI
}

const SERIES_RADIUS: f64 = 5.0;
const ASYMPTOTIC_TOL: f64 = 1e-14;
const QUAD_TOL: f64 = 1e-13;

fn eval(a: f64, b: f64, x: f64) -> f64 {
    if x == 0.0 {
        return rgamma(b);
    }
    if a == 1.0 && b == 1.0 {
        return x.exp();
    }
    let s = -x;
    if s <= SERIES_RADIUS.min(10f64.powf(a)) {
        return series(a, b, x);
    }
    if let Some(v) = asymptotic(a, b, s) {
        return v;
    }
    if a == 1.0 {
        return unit_order_integral(b, s);
    }
    if b > 1.0 {
        // near b = 1 + a the cut integral degenerates; b ≤ 1 keeps 1 + a - b ≥ a
        return (eval(a, b - a, x) - rgamma(b - a)) / x;
    }
    branch_cut_integral(a, b, s)
}

fn series(a: f64, b: f64, x: f64) -> f64 {
    let s = -x;
    let ln_s = s.ln();
    let mut sum = rgamma(b);
    for k in 1..2000 {
        let kf = k as f64;
        let arg = a * kf + b;
        // pow and tgamma are each within an ulp or two; exp(k ln s) is not
        let mag = if arg < 170.0 {
            libm::pow(s, kf) / gamma(arg)
        } else {
            (kf * ln_s - ln_gamma(arg)).exp()
        };
        let term = if k % 2 == 0 { mag } else { -mag };
        sum += term;
        // once Γ(ak+b) dominates the power the terms decay monotonically
        if mag < 1e-17 * sum.abs().max(1e-3) && a * kf + b > 2.0 && kf * a > (-x).powf(1.0 / a) {
            break;
        }
    }
    sum
}

fn asymptotic(a: f64, b: f64, s: f64) -> Option<f64> {
    const MAX_TERMS: usize = 80;
    let ln_s = s.ln();
    let mut sum = 0.0;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        let z = b - a * kf;
        // |1/Γ(z)| ≤ Γ(1 - z)/π for z < 0, and ≤ 1.13 for z > 0
        let ln_bound = if z > 0.0 { 0.125 } else { ln_gamma(1.0 - z) - PI.ln() } - kf * ln_s;
        if ln_bound < ASYMPTOTIC_TOL.ln() {
            let exp_part = if a == 1.0 { s.powf(1.0 - b) * (-s).exp() } else { 0.0 };
            return Some(sum + exp_part);
        }
        if k > 2 && ln_bound > 0.0 {
            // terms have started to grow; the expansion cannot reach the tolerance
            return None;
        }
        let term = rgamma(z) * (-kf * ln_s).exp();
        sum += if k % 2 == 1 { term } else { -term };
    }
    None
}

fn branch_cut_integral(a: f64, b: f64, s: f64) -> f64 {
    let (sin_b, sin_ba, cos_a) = ((PI * b).sin(), (PI * (b - a)).sin(), (PI * a).cos());
    let kernel = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let ra = r.powf(a);
        let num = ra * sin_b + s * sin_ba;
        let den = ra * ra + 2.0 * s * ra * cos_a + s * s;
        (-r).exp() * r.powf(a - b) * num / den
    };
    // r = u^p absorbs the r^{a-b} endpoint singularity
    let p = if a - b < 0.0 { 1.0 / (1.0 + a - b) } else { 1.0 };
    let integrand = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if p == 1.0 {
            kernel(u)
        } else {
            p * u.powf(p - 1.0) * kernel(u.powf(p))
        }
    };
    const R_MAX: f64 = 70.0;
    // denominator is smallest where r^a = -s cos πa
    let r_peak = if cos_a < 0.0 { (-s * cos_a).powf(1.0 / a) } else { 0.0 };
    let mut breaks = vec![0.0];
    for r in [0.5 * r_peak, r_peak, 1.5 * r_peak, 1.0, 10.0] {
        if r > 0.0 && r < R_MAX {
            breaks.push(r.powf(1.0 / p));
        }
    }
    breaks.push(R_MAX.powf(1.0 / p));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let res = integrate_with_breaks(integrand, &breaks, QUAD_TOL, 0.0);
    res.value / PI
}

/// `E_{1,b}(-s)` for `b ≠ 1`.
fn unit_order_integral(b: f64, s: f64) -> f64 {
    if b < 1.0 {
        // E_{1,b}(x) = 1/Γ(b) + x E_{1,b+1}(x)
        return rgamma(b) - s * unit_order_integral(b + 1.0, s);
    }
    // E_{1,b}(-s) = 1/Γ(b) ∫_0^1 exp(-s (1 - w^{1/(b-1)})) dw
    let q = 1.0 / (b - 1.0);
    let f = |w: f64| (-s * (1.0 - w.powf(q))).exp();
    let res = integrate(f, 0.0, 1.0, QUAD_TOL * gamma(b), 0.0);
    res.value * rgamma(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ml(a: f64, b: f64, x: f64) -> f64 {
        mittag_leffler(MlfParams::new(a, b).unwrap(), x).unwrap()
    }

    #[test]
    fn exponential_case() {
        assert!((ml(1.0, 1.0, -1.0) - 0.367_879_441_171_442_3).abs() < 1e-12);
    }

    #[test]
    fn half_order_erfc_value() {
        // e·erfc(1)
        assert!((ml(0.5, 1.0, -1.0) - 0.427_583_576_155_807).abs() < 1e-11);
    }

    #[test]
    fn origin_is_reciprocal_gamma() {
        assert!((ml(0.7, 0.9, 0.0) - 1.0 / gamma(0.9)).abs() < 1e-14);
        assert!((ml(0.7, 0.9, 0.0) - 0.935_778_720_912_872_8).abs() < 1e-14);
    }

    #[test]
    fn rejects_positive_argument_and_bad_params() {
        let p = MlfParams::new(0.5, 1.0).unwrap();
        assert!(matches!(mittag_leffler(p, 0.1), Err(Error::Domain { param: "x", .. })));
        assert!(MlfParams::new(0.0, 1.0).is_err());
        assert!(MlfParams::new(1.2, 1.0).is_err());
        assert!(MlfParams::new(0.5, 0.0).is_err());
        assert!(MlfParams::new(0.5, 4.5).is_err());
    }

    #[test]
    fn regimes_agree_at_their_seams() {
        for &(a, b) in &[(0.3, 0.8), (0.6, 1.1), (0.9, 1.5), (0.5, 0.5)] {
            let s0 = SERIES_RADIUS.min(10f64.powf(a));
            let x = -s0 * 1.0001;
            let left = series(a, b, x);
            let right = branch_cut_integral(a, b, -x);
            assert!((left - right).abs() < 1e-10, "a={a} b={b}: {left} vs {right}");
        }
    }

    #[test]
    fn unit_order_matches_series() {
        for &b in &[0.4, 1.5, 2.0, 3.2] {
            let direct = series(1.0, b, -4.0);
            assert!((unit_order_integral(b, 4.0) - direct).abs() < 1e-11, "b={b}");
        }
    }

    #[test]
    fn reciprocal_gamma_poles() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!((rgamma(-0.5) + 0.5 / PI.sqrt()).abs() < 1e-15);
    }
}
