//! Initial-datum construction and the elliptic smoothing used by the
//! regularisation ladders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::ModelError;
use crate::grid::{transform::DomainTransforms, Bc, Domain, Field};

/// Fields produced by [`make_initial`] keep `max|u| <= 1 - BOUND_MARGIN`
/// so singular potentials start strictly inside their domain.
pub const BOUND_MARGIN: f64 = 1e-3;

/// Deterministic initial-datum recipes.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Constant { mean: f64 },
    /// iid uniform noise in `[-amplitude, amplitude]` around `mean`, drawn
    /// from a counter-based stream cipher generator: bit-reproducible.
    SeededNoise { mean: f64, amplitude: f64, seed: u64 },
    /// `mean + amplitude * cos(k pi x/L)` (no-flux) or
    /// `mean + amplitude * cos(2 k pi x/L)` (periodic), along axis 0.
    CosineMode { mean: f64, amplitude: f64, k: usize },
    /// `(1 - 2*margin) * tanh((x - position)/width)` along axis 0.
    TanhInterface { position: f64, width: f64 },
}

/// Build a deterministic initial field and enforce the mean and amplitude
/// constraints.
pub fn make_initial(kind: &InitialKind, domain: &Arc<Domain>) -> Result<Field, ModelError> {
    let field = match *kind {
        InitialKind::Constant { mean } => Field::constant(domain, mean),
        InitialKind::SeededNoise { mean, amplitude, seed } => {
            if !(amplitude >= 0.0) {
                return Err(ModelError::InvalidParams("noise amplitude must be >= 0".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..domain.len())
                .map(|_| {
                    if amplitude > 0.0 {
                        mean + rng.gen_range(-amplitude..=amplitude)
                    } else {
                        mean
                    }
                })
                .collect();
            Field::from_values(domain, values)?
        }
        InitialKind::CosineMode { mean, amplitude, k } => {
            let l = domain.lengths()[0];
            let freq = match domain.bc() {
                Bc::NoFlux => k as f64 * std::f64::consts::PI / l,
                Bc::Periodic => 2.0 * k as f64 * std::f64::consts::PI / l,
            };
            Field::from_fn(domain, |x| mean + amplitude * (freq * x[0]).cos())
        }
        InitialKind::TanhInterface { position, width } => {
            if !(width > 0.0) {
                return Err(ModelError::InvalidParams("interface width must be > 0".into()));
            }
            let amp = 1.0 - 2.0 * BOUND_MARGIN;
            Field::from_fn(domain, |x| amp * ((x[0] - position) / width).tanh())
        }
    };
    let m = crate::grid::mean(&field);
    if !(m > -1.0 && m < 1.0) {
        return Err(ModelError::MeanOutOfRange(m));
    }
    let sup = field.max_abs();
    if sup > 1.0 - BOUND_MARGIN {
        return Err(ModelError::AmplitudeTooLarge(sup));
    }
    Ok(field)
}

/// Regularise an initial datum by the singular perturbation
/// `(I + sigma (-Delta)) v = u0` (order 1) or
/// `(I + sigma Delta^2) v = u0` (order 2), by transform diagonalisation.
/// The zero mode is untouched, so the mean value is preserved exactly.
pub fn smooth_initial_datum(u0: &Field, sigma: f64, order: u8) -> Field {
    assert!(sigma > 0.0, "smoothing requires sigma > 0");
    assert!(order == 1 || order == 2, "smoothing order must be 1 or 2");
    let tr = DomainTransforms::new(u0.domain());
    tr.solve_smoothing(u0, sigma, order)
}
