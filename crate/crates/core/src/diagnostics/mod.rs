//! Runtime observables and the verification studies tying the simulator to
//! the analysis: energy-equality residuals, the Dal Passo-Garcke-Gruen
//! identity, dispersion checks, parameter sweeps, and contraction tests.

mod dispersion;
mod dpgg;
mod sweep;

pub use dispersion::{dispersion_check, DispersionRow};
pub use dpgg::{dpgg_identity_residual, ScalarC2};
pub use sweep::{
    contraction_check, refine, sweep_delta, sweep_sigma, ContractionReport, ConvergenceReport,
    Scenario,
};

use crate::grid::{self, Field};
use crate::model::{ModelError, ModelParams, SimState};
use crate::stepper::RunFailure;

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("dispersion check requires a constant coefficient and a linear potential: {0}")]
    NonlinearSpec(String),
    #[error("initial means differ: {m1} vs {m2}")]
    MeanMismatch { m1: f64, m2: f64 },
    #[error("invalid ladder: {0}")]
    LadderInvalid(String),
    #[error("run failed at ladder entry {param}: {source}")]
    RunAt {
        param: f64,
        #[source]
        source: Box<RunFailure>,
    },
    #[error("trajectories fell out of lockstep at t = {0}")]
    LockstepBroken(f64),
    #[error(transparent)]
    Step(#[from] crate::stepper::StepError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One row of runtime observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    /// Spatial mean of `u`.
    pub mass: f64,
    /// `||grad w||^2`.
    pub grad_w_sq: f64,
    /// `||u_t||^2` by backward difference (0 at the initial record).
    pub ut_sq: f64,
    pub sup_u: f64,
    /// `max(|u| - 1, 0)`.
    pub overshoot: f64,
    /// `||Delta z||^2` with `z = phi(u)`, the transformed-variable
    /// regularity proxy.
    pub z_h2_proxy: f64,
    pub newton_iters: usize,
    pub tau: f64,
}

impl DiagnosticsRecord {
    pub fn measure(
        state: &SimState,
        prev: Option<(&Field, f64)>,
        params: &ModelParams,
        newton_iters: usize,
        tau: f64,
    ) -> Result<Self, ModelError> {
        let energy = params.energy(&state.u)?;
        let ut_sq = match prev {
            Some((u_prev, dt)) => grid::integrate(
                &state.u.zip(u_prev, |a, b| ((a - b) / dt) * ((a - b) / dt)),
            ),
            None => 0.0,
        };
        let coeff = &params.coefficient;
        let z = state.u.map(|v| coeff.phi(v));
        let lap_z = grid::laplacian(&z);
        let sup_u = state.u.max_abs();
        Ok(Self {
            t: state.t,
            energy,
            mass: grid::mean(&state.u),
            grad_w_sq: grid::integrate(&grid::grad_sq(&state.w)),
            ut_sq,
            sup_u,
            overshoot: (sup_u - 1.0).max(0.0),
            z_h2_proxy: grid::integrate_product(&lap_z, &lap_z),
            newton_iters,
            tau,
        })
    }
}

/// Recorded trajectory observables plus the coefficients needed to
/// reconstruct the dissipation integral.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSeries {
    pub records: Vec<DiagnosticsRecord>,
    pub mobility: f64,
    /// `epsilon + sigma_visc` of the integrated system.
    pub eff_viscosity: f64,
}

impl DiagnosticsSeries {
    pub fn new(params: &ModelParams) -> Self {
        Self { records: Vec::new(), mobility: params.mobility, eff_viscosity: params.eff_viscosity() }
    }

    pub fn push(&mut self, rec: DiagnosticsRecord) {
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fixed-schema CSV (`diagnostics.csv`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,energy,mass,grad_w_sq,ut_sq,sup_u,overshoot,z_h2_proxy,newton_iters,tau\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.t,
                r.energy,
                r.mass,
                r.grad_w_sq,
                r.ut_sq,
                r.sup_u,
                r.overshoot,
                r.z_h2_proxy,
                r.newton_iters,
                r.tau
            ));
        }
        out
    }
}

/// Residual of the integrated energy equality at every recorded time:
/// `r(t) = |E(u(t)) - E(u_0) + int_0^t (M ||grad w||^2 + eps_eff ||u_t||^2)|`
/// with the dissipation integral by trapezoidal quadrature over the
/// recorded samples. `r(0) = 0` exactly.
pub fn energy_equality_residual(series: &DiagnosticsSeries) -> Vec<(f64, f64)> {
    let recs = &series.records;
    if recs.is_empty() {
        return Vec::new();
    }
    let e0 = recs[0].energy;
    let diss =
        |r: &DiagnosticsRecord| series.mobility * r.grad_w_sq + series.eff_viscosity * r.ut_sq;
    let mut out = Vec::with_capacity(recs.len());
    out.push((recs[0].t, 0.0));
    let mut acc = 0.0;
    for pair in recs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        acc += 0.5 * (b.t - a.t) * (diss(a) + diss(b));
        out.push((b.t, (b.energy - e0 + acc).abs()));
    }
    out
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - xm) * (yi - ym);
        den += (xi - xm) * (xi - xm);
    }
    num / den
}

/// Least-squares slope in log-log coordinates (convergence order).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_slope(&lx, &ly)
}

#[cfg(test)]
mod tests;
