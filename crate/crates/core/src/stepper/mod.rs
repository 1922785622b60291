//! Implicit-Euler time integration of the gradient flow with adaptive step
//! control, an independent explicit RK4 oracle, and binary checkpoints.
//!
//! Every accepted step satisfies the nonlinear residual tolerance and the
//! energy-acceptance criterion `E(u+) <= E(u) + slack (1 + |E(u)|)`; on
//! Newton failure, a domain-guard trip, or an energy increase the step is
//! retried with half the step size down to `tau_min`.

pub mod checkpoint;
mod newton;
mod oracle;

pub use oracle::{explicit_oracle, stable_oracle};

use crate::diagnostics::{DiagnosticsRecord, DiagnosticsSeries};
use crate::grid::{self, transform::DomainTransforms, Field};
use crate::model::{ModelError, ModelParams, SimState};

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error(
        "step failed: tau_min = {tau_min:e} reached (last residual {last_residual:e}, \
         {guard_trips} domain-guard trips)"
    )]
    StepFailure { tau_min: f64, last_residual: f64, guard_trips: usize },
    #[error("explicit oracle unstable at tau = {0:e}")]
    Instability(f64),
    #[error("explicit oracle does not integrate the phase-field system")]
    UnsupportedOracleMode,
    #[error("checkpoint i/o: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Time-integration controls. `tau` and `t_end` are the only fields without
/// meaningful universal defaults; the rest can stay at [`StepperConfig::new`]
/// values for most runs.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub tau: f64,
    pub t_end: f64,
    /// Residual tolerance in the combined discrete L2 norm of (R1, R2).
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Relative GMRES tolerance.
    pub krylov_tol: f64,
    pub krylov_max: usize,
    pub tau_min: f64,
    /// Pointwise guard keeping |u| < 1 - 1e-12 for singular potentials
    /// running unregularised.
    pub domain_guard: bool,
    /// Relative slack in the energy-decrease acceptance test.
    pub accept_energy_slack: f64,
}

impl StepperConfig {
    pub fn new(tau: f64, t_end: f64) -> Self {
        Self {
            tau,
            t_end,
            newton_tol: 1e-10,
            newton_max: 30,
            krylov_tol: 1e-8,
            krylov_max: 500,
            tau_min: tau / 1024.0,
            domain_guard: true,
            accept_energy_slack: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::InvalidParams(m.into()));
        if !(self.tau > 0.0) {
            return err("tau must be positive");
        }
        if self.t_end < 0.0 {
            return err("t_end must be nonnegative");
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau) {
            return err("tau_min must lie in (0, tau]");
        }
        if !(self.newton_tol > 0.0 && self.krylov_tol > 0.0) || self.accept_energy_slack < 0.0 {
            return err("tolerances must be positive");
        }
        Ok(())
    }
}

/// Outcome bookkeeping of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub accepted: bool,
    pub newton_iters: usize,
    pub krylov_iters_total: usize,
    pub tau_used: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `tau (M ||grad w+||^2 + (eps + sigma_v) ||u_t||^2)`, the discrete
    /// counterpart of the energy-equality dissipation over this step.
    pub dissipation_increment: f64,
}

/// Advance one implicit-Euler step, halving `cfg.tau` as needed.
pub fn step(
    state: &SimState,
    cfg: &StepperConfig,
    params: &ModelParams,
) -> Result<(SimState, StepReport), StepError> {
    params.validate()?;
    cfg.validate()?;
    let tr = DomainTransforms::new(state.u.domain());
    step_with(state, cfg, params, &tr)
}

pub(crate) fn step_with(
    state: &SimState,
    cfg: &StepperConfig,
    params: &ModelParams,
    tr: &DomainTransforms,
) -> Result<(SimState, StepReport), StepError> {
    state.u.check_finite().map_err(ModelError::from)?;
    state.w.check_finite().map_err(ModelError::from)?;
    let energy_before = params.energy(&state.u).map_err(ModelError::from)?;
    let n = state.u.len();
    let sigma_pf = params.sigma_pf();
    let conserved = grid::mean(&state.u) + sigma_pf * grid::mean(&state.w);

    let mut tau = cfg.tau;
    let mut guard_trips = 0usize;
    let mut last_residual = f64::INFINITY;
    let mut krylov_iters_total = 0usize;

    loop {
        let attempt = newton::solve_step(state, tau, params, cfg, tr);
        match attempt {
            Ok(out) => {
                krylov_iters_total += out.krylov_iters;
                let mut uv = out.x[..n].to_vec();
                let wv = out.x[n..].to_vec();
                // the exact solution conserves mean(u) + sigma_pf mean(w);
                // project out the zero-mode solver residual (size <= tau*tol)
                let dom = state.u.domain();
                let m_now = uv.iter().sum::<f64>() / n as f64
                    + sigma_pf * wv.iter().sum::<f64>() / n as f64;
                let shift = conserved - m_now;
                for v in &mut uv {
                    *v += shift;
                }
                let u_new = Field::from_values(dom, uv).map_err(ModelError::from)?;
                let w_new = Field::from_values(dom, wv).map_err(ModelError::from)?;
                match params.energy(&u_new) {
                    Ok(energy_after)
                        if energy_after
                            <= energy_before
                                + cfg.accept_energy_slack * (1.0 + energy_before.abs()) =>
                    {
                        let ut_sq = grid::integrate(
                            &u_new.zip(&state.u, |a, b| ((a - b) / tau) * ((a - b) / tau)),
                        );
                        let grad_w_sq = grid::integrate(&grid::grad_sq(&w_new));
                        let report = StepReport {
                            accepted: true,
                            newton_iters: out.newton_iters,
                            krylov_iters_total,
                            tau_used: tau,
                            energy_before,
                            energy_after,
                            dissipation_increment: tau
                                * (params.mobility * grad_w_sq
                                    + params.eff_viscosity() * ut_sq),
                        };
                        let next = SimState::new(state.t + tau, u_new, w_new);
                        return Ok((next, report));
                    }
                    Ok(_) => {
                        // energy increased beyond the slack: retry smaller
                        last_residual = out.residual_norm;
                    }
                    Err(_) => {
                        // projection pushed u outside a singular domain
                        guard_trips += 1;
                    }
                }
            }
            Err(newton::SolveFailure::GuardTrip) => guard_trips += 1,
            Err(newton::SolveFailure::NoConvergence { last_residual: r }) => last_residual = r,
        }
        tau *= 0.5;
        if tau < cfg.tau_min {
            return Err(StepError::StepFailure {
                tau_min: cfg.tau_min,
                last_residual,
                guard_trips,
            });
        }
    }
}

/// Result of [`run`]: final state, recorded diagnostics, and the adaptive
/// step memory needed to continue the trajectory deterministically.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SimState,
    pub series: DiagnosticsSeries,
    pub accepted_steps: usize,
    /// Step size to resume with (`min(2 tau_used, cfg.tau)` of the last step).
    pub next_tau: f64,
}

/// A failed run still carries everything integrated so far.
#[derive(Debug)]
pub struct RunFailure {
    pub error: StepError,
    pub partial: RunOutput,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted at t = {}: {}", self.partial.final_state.t, self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Integrate from a raw initial datum to `cfg.t_end`, recording diagnostics
/// every `diagnostics_every` accepted steps (0 = initial and final only).
pub fn run(
    initial: &Field,
    cfg: &StepperConfig,
    params: &ModelParams,
    diagnostics_every: usize,
) -> Result<RunOutput, Box<RunFailure>> {
    run_with(initial, cfg, params, diagnostics_every, |_, _, _| {})
}

/// [`run`] with an observer called after every accepted step.
pub fn run_with<F>(
    initial: &Field,
    cfg: &StepperConfig,
    params: &ModelParams,
    diagnostics_every: usize,
    observer: F,
) -> Result<RunOutput, Box<RunFailure>>
where
    F: FnMut(usize, &SimState, &StepReport),
{
    let state = SimState::initial(initial.clone(), params).map_err(|e| {
        Box::new(RunFailure {
            error: StepError::Model(e),
            partial: RunOutput {
                final_state: SimState::new(0.0, initial.clone(), Field::zeros(initial.domain())),
                series: DiagnosticsSeries::new(params),
                accepted_steps: 0,
                next_tau: cfg.tau,
            },
        })
    })?;
    run_from(state, cfg.tau, cfg, params, diagnostics_every, observer)
}

/// Continue a trajectory (fresh or from a checkpoint) to `cfg.t_end`.
pub fn run_from<F>(
    state: SimState,
    start_tau: f64,
    cfg: &StepperConfig,
    params: &ModelParams,
    diagnostics_every: usize,
    mut observer: F,
) -> Result<RunOutput, Box<RunFailure>>
where
    F: FnMut(usize, &SimState, &StepReport),
{
    let fail_now = |error: StepError, state: SimState, series: DiagnosticsSeries, steps, tau| {
        Box::new(RunFailure {
            error,
            partial: RunOutput { final_state: state, series, accepted_steps: steps, next_tau: tau },
        })
    };

    let mut series = DiagnosticsSeries::new(params);
    if let Err(e) = params.validate() {
        return Err(fail_now(e.into(), state, series, 0, cfg.tau));
    }
    if let Err(e) = cfg.validate() {
        return Err(fail_now(e.into(), state, series, 0, cfg.tau));
    }
    if params.sigma == 0.0 && params.potential.is_singular() && !cfg.domain_guard {
        let e = ModelError::InvalidParams(
            "singular potential with sigma = 0 requires the domain guard".into(),
        );
        return Err(fail_now(e.into(), state, series, 0, cfg.tau));
    }

    let tr = DomainTransforms::new(state.u.domain());
    match DiagnosticsRecord::measure(&state, None, params, 0, 0.0) {
        Ok(rec) => series.push(rec),
        Err(e) => return Err(fail_now(e.into(), state, series, 0, cfg.tau)),
    }

    let mut state = state;
    let mut tau_mem = start_tau.min(cfg.tau);
    let mut steps = 0usize;
    let t_eps = 1e-12 * cfg.t_end.abs().max(cfg.tau);

    while cfg.t_end - state.t > t_eps {
        let remaining = cfg.t_end - state.t;
        let mut local = cfg.clone();
        local.tau = tau_mem.min(remaining);
        local.tau_min = cfg.tau_min.min(local.tau);
        let prev_u = state.u.clone();
        match step_with(&state, &local, params, &tr) {
            Ok((next, report)) => {
                state = next;
                steps += 1;
                observer(steps, &state, &report);
                tau_mem = (2.0 * report.tau_used).min(cfg.tau);
                let at_end = cfg.t_end - state.t <= t_eps;
                if at_end || (diagnostics_every > 0 && steps % diagnostics_every == 0) {
                    match DiagnosticsRecord::measure(
                        &state,
                        Some((&prev_u, report.tau_used)),
                        params,
                        report.newton_iters,
                        report.tau_used,
                    ) {
                        Ok(rec) => series.push(rec),
                        Err(e) => return Err(fail_now(e.into(), state, series, steps, tau_mem)),
                    }
                }
            }
            Err(error) => return Err(fail_now(error, state, series, steps, tau_mem)),
        }
    }

    Ok(RunOutput { final_state: state, series, accepted_steps: steps, next_tau: tau_mem })
}

#[cfg(test)]
mod tests;
