//! Potentials, Yosida/Moreau regularisations, the gradient coefficient
//! `a(u)` with its C^2 flat extension, the `phi` change of variable, the
//! free energy, and uniqueness-regime checks.

mod coefficient;
mod potential;
mod regime;

pub use coefficient::{CoeffFamily, CoefficientSpec};
pub use potential::{CustomPotential, PotentialFamily, PotentialSpec};
pub use regime::{check_uniqueness_regime, RegimeReport};

use crate::grid::{self, Field};
use crate::par;

#[derive(Debug, thiserror::Error)]
pub enum EnergeticsError {
    #[error("potential evaluated outside its domain (r = {0})")]
    DomainViolation(f64),
    #[error("Yosida resolvent solve failed at r = {r}, sigma = {sigma} (malformed potential?)")]
    ResolventFailure { r: f64, sigma: f64 },
    #[error("gradient coefficient non-positive: a({at}) = {value}")]
    NonPositiveCoefficient { at: f64, value: f64 },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

/// Free energy
/// `int (delta/2)|Delta u|^2 + (a(u)/2)|grad u|^2 + F(u)`,
/// with `F` the (possibly sigma-regularised) full potential including the
/// `-(lambda/2) u^2` perturbation.
pub fn energy(
    u: &Field,
    delta: f64,
    pot: &PotentialSpec,
    coeff: &CoefficientSpec,
) -> Result<f64, EnergeticsError> {
    pot.check_range(u.values())?;
    let gsq = grid::grad_sq(u);
    let lap = if delta > 0.0 { Some(grid::laplacian(u)) } else { None };
    let uv = u.values();
    let gv = gsq.values();
    let total = match &lap {
        Some(l) => {
            let lv = l.values();
            par::sum(uv.len(), |i| {
                0.5 * delta * lv[i] * lv[i]
                    + 0.5 * coeff.a(uv[i]) * gv[i]
                    + pot.big_f_unchecked(uv[i])
            })
        }
        None => par::sum(uv.len(), |i| {
            0.5 * coeff.a(uv[i]) * gv[i] + pot.big_f_unchecked(uv[i])
        }),
    };
    Ok(total * u.domain().cell_volume())
}
