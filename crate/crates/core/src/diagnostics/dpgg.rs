//! Discrete check of the Dal Passo-Garcke-Gruen integration-by-parts
//! identity on flat/periodic boundaries (the boundary term carries the
//! second fundamental form and vanishes there):
//!
//! `int h'(z)|grad z|^2 Delta z + (1/3) int h''(z)|grad z|^4
//!   - (2/3) int h(z)(|D^2 z|^2 - |Delta z|^2) = 0`.

use crate::grid::{self, Field};
use crate::par;

/// A scalar C^2 function with its first two derivatives.
pub struct ScalarC2<'a> {
    pub f: &'a (dyn Fn(f64) -> f64 + Sync),
    pub d1: &'a (dyn Fn(f64) -> f64 + Sync),
    pub d2: &'a (dyn Fn(f64) -> f64 + Sync),
}

/// Absolute residual of the identity for the discrete operators. Second
/// order on smooth periodic fields; no-flux boxes add O(h) corner noise.
pub fn dpgg_identity_residual(z: &Field, h: &ScalarC2) -> f64 {
    let gsq = grid::grad_sq(z);
    let lap = grid::laplacian(z);
    let hess = grid::hessian_sq(z);
    let (zv, gv, lv, hv) = (z.values(), gsq.values(), lap.values(), hess.values());
    let total = par::sum(zv.len(), |i| {
        (h.d1)(zv[i]) * gv[i] * lv[i] + (1.0 / 3.0) * (h.d2)(zv[i]) * gv[i] * gv[i]
            - (2.0 / 3.0) * (h.f)(zv[i]) * (hv[i] - lv[i] * lv[i])
    });
    (total * z.domain().cell_volume()).abs()
}
