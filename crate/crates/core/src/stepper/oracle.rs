//! Independent explicit integrator used to cross-check the implicit
//! stepper: classical RK4 on `u_t = M Delta w(u)` with the non-viscous
//! chemical potential; with viscosity each stage solves
//! `(I - eps M Delta) u_t = M Delta w` by transform diagonalisation.
//!
//! Not a production integrator: the stability bound scales like h^4 (h^6
//! with the sixth-order term), so it is only used on small grids.

use crate::grid::{self, transform::DomainTransforms, Field};
use crate::model::{self, Mode, ModelParams};
use crate::stepper::StepError;

/// RK4 to `t_end` with fixed step `tau_tiny` (rounded so the steps divide
/// `t_end` exactly). Blow-up beyond 1e6 x the initial sup norm reports
/// `Instability`.
pub fn explicit_oracle(
    initial: &Field,
    tau_tiny: f64,
    t_end: f64,
    params: &ModelParams,
) -> Result<Field, StepError> {
    if params.mode == Mode::PhaseField {
        return Err(StepError::UnsupportedOracleMode);
    }
    params.validate()?;
    assert!(tau_tiny > 0.0 && t_end >= 0.0);
    if t_end == 0.0 {
        return Ok(initial.clone());
    }
    let steps = (t_end / tau_tiny).ceil() as usize;
    let tau = t_end / steps as f64;
    let visc = params.eff_viscosity();
    let tr = if visc > 0.0 { Some(DomainTransforms::new(initial.domain())) } else { None };
    let blowup = 1e6 * (1.0 + initial.max_abs());

    let rhs = |u: &Field| -> Result<Field, StepError> {
        // equal arguments cancel the viscous backward difference, leaving
        // the non-viscous chemical potential
        let w = model::chemical_potential(u, u, 1.0, params)?;
        let mdw = grid::laplacian(&w).map(|v| params.mobility * v);
        Ok(match &tr {
            Some(tr) => tr.solve_helmholtz(&mdw, visc * params.mobility),
            None => mdw,
        })
    };

    let mut u = initial.clone();
    for _ in 0..steps {
        let k1 = rhs(&u)?;
        let k2 = rhs(&u.lin(1.0, 0.5 * tau, &k1))?;
        let k3 = rhs(&u.lin(1.0, 0.5 * tau, &k2))?;
        let k4 = rhs(&u.lin(1.0, tau, &k3))?;
        let incr = k1.lin(1.0, 2.0, &k2).lin(1.0, 1.0, &k3.lin(2.0, 1.0, &k4));
        u = u.lin(1.0, tau / 6.0, &incr);
        if !u.values().iter().all(|v| v.is_finite()) || u.max_abs() > blowup {
            return Err(StepError::Instability(tau));
        }
    }
    Ok(u)
}

/// Run the oracle starting from the empirical stability guess
/// (`h^6/(64 delta M)` for the sixth-order model, `h^4 min(1, 1/a_high)/16`
/// otherwise), halving until stable. Returns the field and the step used.
pub fn stable_oracle(
    initial: &Field,
    t_end: f64,
    params: &ModelParams,
) -> Result<(Field, f64), StepError> {
    let h = initial
        .domain()
        .spacing()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let mut tau = match params.mode {
        Mode::Sixth => h.powi(6) / (64.0 * params.delta * params.mobility),
        _ => {
            let (_, a_high) = params.coefficient.bounds();
            h.powi(4) * (1.0f64).min(1.0 / a_high) / 16.0
        }
    };
    for _ in 0..8 {
        match explicit_oracle(initial, tau, t_end, params) {
            Ok(u) => return Ok((u, tau)),
            Err(StepError::Instability(_)) => tau *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(StepError::Instability(tau))
}
