//! Uniqueness-regime check: the fourth-order problem has a unique weak
//! solution when `a'' >= 0` and `(1/a)'' <= -kappa` on [-1,1], with
//! `kappa > 0` in the nonviscous case and `kappa >= 0` with viscosity.

use super::CoefficientSpec;

const SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    /// `a'' >= 0` everywhere on the sampled [-1,1].
    pub convex_a: bool,
    /// `kappa = -max (1/a)''` over [-1,1].
    pub kappa: f64,
    /// `kappa > 0`.
    pub unique_nonviscous: bool,
    /// `kappa >= 0`.
    pub unique_viscous: bool,
}

/// Dense sampling of `a''` and `(1/a)'' = (2 a'^2 - a a'')/a^3` on [-1,1].
pub fn check_uniqueness_regime(coeff: &CoefficientSpec) -> RegimeReport {
    let mut convex = true;
    let mut max_inv_second = f64::NEG_INFINITY;
    for i in 0..SAMPLES {
        let r = -1.0 + 2.0 * i as f64 / (SAMPLES - 1) as f64;
        let a = coeff.a(r);
        let d1 = coeff.a_prime(r);
        let d2 = coeff.a_second(r);
        if d2 < -1e-12 {
            convex = false;
        }
        let inv_second = (2.0 * d1 * d1 - a * d2) / a.powi(3);
        max_inv_second = max_inv_second.max(inv_second);
    }
    let kappa = -max_inv_second;
    RegimeReport {
        convex_a: convex,
        kappa,
        unique_nonviscous: kappa > 0.0,
        unique_viscous: kappa >= -1e-12,
    }
}
