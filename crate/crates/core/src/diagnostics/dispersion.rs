//! Linear-regime dispersion check: a single cosine mode with a constant
//! coefficient `a0` and linear `f = lambda0 u` decays at
//! `mu = -M k^2 (delta k^4 + a0 k^2 + lambda0) / (1 + eps M k^2)`,
//! with `k^2` the discrete symbol of the stencil. The numeric rate comes
//! from the log-amplitude slope of a stepped run.

use std::sync::Arc;

use super::DiagnosticsError;
use crate::energetics::CoeffFamily;
use crate::grid::{self, transform::DomainTransforms, Domain, Field};
use crate::model::{ModelParams, SimState};
use crate::stepper::{self, StepperConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRow {
    pub k_index: usize,
    /// Discrete symbol `k^2` (eigenvalue of `-Delta` for this mode).
    pub symbol: f64,
    pub mu_numeric: f64,
    pub mu_analytic: f64,
    pub rel_err: f64,
}

/// Run the check for the listed axis-0 mode indices. `tau_factor` scales
/// the step as `tau = tau_factor / |mu|`; the run extends to `0.25/|mu|`.
pub fn dispersion_check(
    domain: &Arc<Domain>,
    params: &ModelParams,
    modes: &[usize],
    amplitude: f64,
    tau_factor: f64,
) -> Result<Vec<DispersionRow>, DiagnosticsError> {
    let a0 = match params.coefficient.family() {
        CoeffFamily::Constant { c } => c,
        other => {
            return Err(DiagnosticsError::NonlinearSpec(format!(
                "coefficient family {other:?} is not constant"
            )))
        }
    };
    let lambda0 = params.potential.linear_slope().ok_or_else(|| {
        DiagnosticsError::NonlinearSpec("potential is not the linear family".into())
    })?;
    let tr = DomainTransforms::new(domain);
    let m = params.mobility;
    let mut rows = Vec::with_capacity(modes.len());
    for &k in modes {
        if k == 0 {
            // mass mode: exactly stationary
            rows.push(DispersionRow {
                k_index: 0,
                symbol: 0.0,
                mu_numeric: 0.0,
                mu_analytic: 0.0,
                rel_err: 0.0,
            });
            continue;
        }
        let kap = tr.axis0_eigenvalue(k);
        let mu_analytic =
            -m * kap * (params.delta * kap * kap + a0 * kap + lambda0) / (1.0 + params.epsilon * m * kap);
        let mode = cosine_mode(domain, k);
        let mode_sq = grid::integrate_product(&mode, &mode);
        let initial = mode.map(|v| amplitude * v);
        let tau = tau_factor / mu_analytic.abs();
        let t_end = 0.25 / mu_analytic.abs();
        let mut cfg = StepperConfig::new(tau, t_end);
        cfg.accept_energy_slack = 1e-7; // linear stability isn't in question here
        let mut times = vec![0.0];
        let mut amps = vec![amplitude.abs().ln()];
        let project = |u: &Field| grid::integrate_product(u, &mode) / mode_sq;
        let mut state =
            SimState::initial(initial.clone(), params).map_err(DiagnosticsError::Model)?;
        while state.t < t_end * (1.0 - 1e-12) {
            let local = cfg_with_tau(&cfg, (t_end - state.t).min(tau));
            let (next, _rep) = stepper::step_with(&state, &local, params, &tr)?;
            state = next;
            let a = project(&state.u).abs();
            if a > 0.0 {
                times.push(state.t);
                amps.push(a.ln());
            }
        }
        let mu_numeric = super::fit_slope(&times, &amps);
        rows.push(DispersionRow {
            k_index: k,
            symbol: kap,
            mu_numeric,
            mu_analytic,
            rel_err: (mu_numeric - mu_analytic).abs() / mu_analytic.abs(),
        });
    }
    Ok(rows)
}

fn cfg_with_tau(cfg: &StepperConfig, tau: f64) -> StepperConfig {
    let mut c = cfg.clone();
    c.tau = tau;
    c.tau_min = c.tau_min.min(tau);
    c
}

fn cosine_mode(domain: &Arc<Domain>, k: usize) -> Field {
    let l = domain.lengths()[0];
    let freq = match domain.bc() {
        crate::grid::Bc::NoFlux => k as f64 * std::f64::consts::PI / l,
        crate::grid::Bc::Periodic => 2.0 * k as f64 * std::f64::consts::PI / l,
    };
    Field::from_fn(domain, |x| (freq * x[0]).cos())
}
