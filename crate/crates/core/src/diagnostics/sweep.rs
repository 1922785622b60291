//! Parameter-ladder studies (delta, sigma, mesh) and the two-trajectory
//! contraction test. Ladder entries are independent runs and execute in
//! parallel when the `parallel` feature is on; results are collected in
//! ladder order either way.

use std::sync::Arc;

use super::DiagnosticsError;
use crate::grid::{self, Bc, Domain, Field};
use crate::model::{self, InitialKind, Mode, ModelParams, SimState};
use crate::stepper::{self, StepperConfig};

/// Everything a study needs except the swept parameter.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub domain: Arc<Domain>,
    pub params: ModelParams,
    pub cfg: StepperConfig,
    pub initial: InitialKind,
    /// Smooth the initial datum per ladder entry with its sigma
    /// (order 1 for the sixth-order scheme, order 2 for the phase-field).
    pub smooth_initial: bool,
    /// Diagnostics cadence for the ladder runs.
    pub diagnostics_every: usize,
}

impl Scenario {
    fn build_initial(&self, params: &ModelParams) -> Result<Field, DiagnosticsError> {
        let u0 = model::make_initial(&self.initial, &self.domain)?;
        if self.smooth_initial && params.sigma > 0.0 {
            let order = if params.mode == Mode::PhaseField { 2 } else { 1 };
            Ok(model::smooth_initial_datum(&u0, params.sigma, order))
        } else {
            Ok(u0)
        }
    }
}

/// Successive-difference report of a ladder study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Swept parameter values (strictly decreasing).
    pub ladder: Vec<f64>,
    /// `||u_i - u_{i+1}||_{L^2}` at t_end, one per adjacent pair.
    pub distances_l2: Vec<f64>,
    /// L2 plus H1-seminorm distance of the same pairs.
    pub distances_h1: Vec<f64>,
    /// Log-log least-squares slope of `distances_l2` vs the ladder.
    pub observed_order: f64,
    /// Max over each run of the overshoot statistic (sigma sweeps).
    pub max_overshoot: Vec<f64>,
    /// True when the Thm-regime precondition for the study held
    /// (concave `a` for delta sweeps; unused otherwise).
    pub regime_validated: bool,
}

impl ConvergenceReport {
    fn from_fields(ladder: &[f64], finals: &[Field], overshoot: Vec<f64>, regime: bool) -> Self {
        let mut d2 = Vec::new();
        let mut dh = Vec::new();
        for pair in finals.windows(2) {
            let diff = pair[0].zip(&pair[1], |a, b| a - b);
            let l2 = grid::norm_l2(&diff);
            d2.push(l2);
            dh.push(l2 + grid::seminorm_h1(&diff));
        }
        let mids: Vec<f64> = ladder.windows(2).map(|p| (p[0] * p[1]).sqrt()).collect();
        let observed_order = if d2.len() >= 2 && d2.iter().all(|v| *v > 0.0) {
            super::loglog_slope(&mids, &d2)
        } else {
            0.0
        };
        Self {
            ladder: ladder.to_vec(),
            distances_l2: d2,
            distances_h1: dh,
            observed_order,
            max_overshoot: overshoot,
            regime_validated: regime,
        }
    }

    /// Fixed-schema CSV (`sweep.csv`): one row per adjacent pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,distance_l2,distance_h1,observed_order_cum\n");
        for (i, (d2, dh)) in self.distances_l2.iter().zip(&self.distances_h1).enumerate() {
            let param = self.ladder[i + 1];
            let order_cum = if i >= 1 {
                let mids: Vec<f64> =
                    self.ladder[..=i + 1].windows(2).map(|p| (p[0] * p[1]).sqrt()).collect();
                super::loglog_slope(&mids, &self.distances_l2[..=i])
            } else {
                0.0
            };
            out.push_str(&format!("{param},{d2},{dh},{order_cum}\n"));
        }
        out
    }
}

// non-increasing, so the degenerate identical ladder still exercises the
// machinery (distances come out exactly zero by determinism)
fn check_ladder(ladder: &[f64], positive: bool) -> Result<(), DiagnosticsError> {
    if ladder.len() < 2 {
        return Err(DiagnosticsError::LadderInvalid("need at least two entries".into()));
    }
    for pair in ladder.windows(2) {
        if pair[1] > pair[0] {
            return Err(DiagnosticsError::LadderInvalid(
                "entries must be non-increasing".into(),
            ));
        }
    }
    if positive && ladder.iter().any(|v| !(*v > 0.0)) {
        return Err(DiagnosticsError::LadderInvalid("entries must be positive".into()));
    }
    Ok(())
}

fn run_entries<T, F>(count: usize, f: F) -> Result<Vec<T>, DiagnosticsError>
where
    T: Send,
    F: Fn(usize) -> Result<T, DiagnosticsError> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

fn run_to_end(
    scenario: &Scenario,
    params: &ModelParams,
    param_label: f64,
) -> Result<(Field, f64), DiagnosticsError> {
    let u0 = scenario.build_initial(params)?;
    let out = stepper::run(&u0, &scenario.cfg, params, scenario.diagnostics_every)
        .map_err(|source| DiagnosticsError::RunAt { param: param_label, source })?;
    let overshoot =
        out.series.records.iter().map(|r| r.overshoot).fold(0.0f64, f64::max);
    Ok((out.final_state.u, overshoot))
}

/// Sixth-order coefficient ladder: runs the scenario at each `delta` and
/// reports successive distances at `t_end`. The theorem regime asks for a
/// concave `a` on [-1,1]; the report records whether that held.
pub fn sweep_delta(
    scenario: &Scenario,
    ladder: &[f64],
) -> Result<ConvergenceReport, DiagnosticsError> {
    check_ladder(ladder, true)?;
    if scenario.params.mode != Mode::Sixth {
        return Err(DiagnosticsError::LadderInvalid(
            "delta sweep requires the sixth-order mode".into(),
        ));
    }
    let concave = (0..2001).all(|i| {
        let r = -1.0 + 2.0 * i as f64 / 2000.0;
        scenario.params.coefficient.a_second(r) <= 1e-12
    });
    let finals = run_entries(ladder.len(), |i| {
        let mut params = scenario.params.clone();
        params.delta = ladder[i];
        params.validate().map_err(DiagnosticsError::Model)?;
        run_to_end(scenario, &params, ladder[i]).map(|(u, _)| u)
    })?;
    Ok(ConvergenceReport::from_fields(ladder, &finals, Vec::new(), concave))
}

/// Regularisation ladder: runs the scenario at each `sigma` (Yosida
/// parameter, extra viscosity where the mode has it, and optionally the
/// initial smoothing) and reports successive distances plus the overshoot
/// statistic per entry.
pub fn sweep_sigma(
    scenario: &Scenario,
    ladder: &[f64],
) -> Result<ConvergenceReport, DiagnosticsError> {
    check_ladder(ladder, true)?;
    let results = run_entries(ladder.len(), |i| {
        let params = ModelParams::new(
            scenario.params.mode,
            scenario.params.delta,
            scenario.params.epsilon,
            ladder[i],
            scenario.params.mobility,
            scenario.params.potential.clone(),
            scenario.params.coefficient.clone(),
        )
        .map_err(DiagnosticsError::Model)?;
        run_to_end(scenario, &params, ladder[i])
    })?;
    let finals: Vec<Field> = results.iter().map(|(u, _)| u.clone()).collect();
    let overshoot: Vec<f64> = results.iter().map(|(_, o)| *o).collect();
    Ok(ConvergenceReport::from_fields(ladder, &finals, overshoot, true))
}

/// Mesh-refinement study: doubles the per-axis resolution `levels` times,
/// restricts each finer solution to the coarser grid by cell averaging,
/// and reports successive distances. Ladder entries are the spacings.
pub fn refine(scenario: &Scenario, levels: usize) -> Result<ConvergenceReport, DiagnosticsError> {
    if levels < 2 {
        return Err(DiagnosticsError::LadderInvalid("need at least two levels".into()));
    }
    let base = &scenario.domain;
    let finals = run_entries(levels, |j| {
        let cells: Vec<usize> = base.cells().iter().map(|c| c << j).collect();
        let dom = Domain::new(&cells, base.lengths(), base.bc())
            .map_err(|e| DiagnosticsError::Model(e.into()))?;
        let local = Scenario { domain: dom, ..scenario.clone() };
        run_to_end(&local, &scenario.params, j as f64).map(|(u, _)| u)
    })?;
    let ladder: Vec<f64> = (0..levels)
        .map(|j| base.spacing().iter().cloned().fold(f64::INFINITY, f64::min) / (1 << j) as f64)
        .collect();
    // compare each pair on the coarser grid
    let mut coarse_pairs = Vec::with_capacity(levels - 1);
    for j in 0..levels - 1 {
        let restricted = restrict(&finals[j + 1], finals[j].domain());
        coarse_pairs.push((finals[j].clone(), restricted));
    }
    let mut d2 = Vec::new();
    let mut dh = Vec::new();
    for (a, b) in &coarse_pairs {
        let diff = a.zip(b, |x, y| x - y);
        let l2 = grid::norm_l2(&diff);
        d2.push(l2);
        dh.push(l2 + grid::seminorm_h1(&diff));
    }
    let mids: Vec<f64> = ladder.windows(2).map(|p| (p[0] * p[1]).sqrt()).collect();
    let observed_order = if d2.len() >= 2 && d2.iter().all(|v| *v > 0.0) {
        super::loglog_slope(&mids, &d2)
    } else {
        0.0
    };
    Ok(ConvergenceReport {
        ladder,
        distances_l2: d2,
        distances_h1: dh,
        observed_order,
        max_overshoot: Vec::new(),
        regime_validated: true,
    })
}

/// Restrict a fine field to a coarser grid whose cells are unions of fine
/// cells (average of the 2^dim children per coarsening level).
fn restrict(fine: &Field, coarse_dom: &Arc<Domain>) -> Field {
    let fd = fine.domain();
    let ratio = fd.cells()[0] / coarse_dom.cells()[0];
    assert!(ratio >= 1 && fd.cells().iter().zip(coarse_dom.cells()).all(|(f, c)| f == &(c * ratio)));
    let fv = fine.values();
    let dim = fd.dim();
    let fc = {
        let mut c = [1usize; 3];
        c[..dim].copy_from_slice(fd.cells());
        c
    };
    let cc = {
        let mut c = [1usize; 3];
        c[..dim].copy_from_slice(coarse_dom.cells());
        c
    };
    let mut vals = vec![0.0; coarse_dom.len()];
    let r = [
        ratio,
        if dim >= 2 { ratio } else { 1 },
        if dim >= 3 { ratio } else { 1 },
    ];
    for (idx, v) in vals.iter_mut().enumerate() {
        let i2 = idx % cc[2];
        let rest = idx / cc[2];
        let i1 = rest % cc[1];
        let i0 = rest / cc[1];
        let mut acc = 0.0;
        for a in 0..r[0] {
            for b in 0..r[1] {
                for c in 0..r[2] {
                    let fi = ((i0 * r[0] + a) * fc[1] + (i1 * r[1] + b)) * fc[2] + (i2 * r[2] + c);
                    acc += fv[fi];
                }
            }
        }
        *v = acc / (r[0] * r[1] * r[2]) as f64;
    }
    Field::from_values(coarse_dom, vals).expect("restriction of finite field")
}

/// Two-trajectory separation history in the uniqueness metric
/// `d = ||u1 - u2||_{H^-1} + sqrt(eps) ||u1 - u2||_{L^2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Least-squares exponential rate of `ln d(t)`.
    pub rho_hat: f64,
    /// Max deviation of `ln d(t)` from the fitted line (super-exponential
    /// growth would blow this up).
    pub max_log_residual: f64,
}

/// Run the scenario twice from mean-equal initial data separated by a
/// mean-zero perturbation scaled so `d(0) = perturbation_amplitude`, in
/// lockstep (same step sizes), and fit the separation growth rate.
pub fn contraction_check(
    scenario: &Scenario,
    perturbation_amplitude: f64,
) -> Result<ContractionReport, DiagnosticsError> {
    let params = &scenario.params;
    let u10 = scenario.build_initial(params)?;
    // mean-zero perturbation shape: second cosine mode along axis 0
    let l = scenario.domain.lengths()[0];
    let freq = match scenario.domain.bc() {
        Bc::NoFlux => 2.0 * std::f64::consts::PI / l,
        Bc::Periodic => 4.0 * std::f64::consts::PI / l,
    };
    let shape = Field::from_fn(&scenario.domain, |x| (freq * x[0]).cos());
    let eps = params.epsilon;
    let metric = |a: &Field, b: &Field| -> Result<f64, DiagnosticsError> {
        let diff = a.zip(b, |x, y| x - y);
        // the means agree analytically; project out their roundoff so the
        // H^-1 solve sees an exactly mean-zero field
        let dm = grid::mean(&diff);
        let diff = diff.map(|v| v - dm);
        let hm1 = grid::norm_hm1(&diff).map_err(|e| DiagnosticsError::Model(e.into()))?;
        Ok(hm1 + eps.sqrt() * grid::norm_l2(&diff))
    };
    let d_shape = metric(&u10.zip(&shape, |a, b| a + b), &u10)?;
    let scale = perturbation_amplitude / d_shape;
    let u20 = u10.zip(&shape, |a, b| a + scale * b);
    let m1 = grid::mean(&u10);
    let m2 = grid::mean(&u20);
    if (m1 - m2).abs() > 1e-12 {
        return Err(DiagnosticsError::MeanMismatch { m1, m2 });
    }

    let tr = grid::transform::DomainTransforms::new(&scenario.domain);
    let mut s1 = SimState::initial(u10, params).map_err(DiagnosticsError::Model)?;
    let mut s2 = SimState::initial(u20, params).map_err(DiagnosticsError::Model)?;
    let cfg = &scenario.cfg;
    let mut times = vec![0.0];
    let mut dists = vec![metric(&s1.u, &s2.u)?];
    while cfg.t_end - s1.t > 1e-12 * cfg.t_end.max(cfg.tau) {
        let tau = cfg.tau.min(cfg.t_end - s1.t);
        let mut local = cfg.clone();
        local.tau = tau;
        local.tau_min = tau; // no adaptive halving: lockstep or fail
        let (n1, r1) = stepper::step_with(&s1, &local, params, &tr)?;
        let (n2, r2) = stepper::step_with(&s2, &local, params, &tr)?;
        if (r1.tau_used - r2.tau_used).abs() > 0.0 {
            return Err(DiagnosticsError::LockstepBroken(s1.t));
        }
        s1 = n1;
        s2 = n2;
        times.push(s1.t);
        dists.push(metric(&s1.u, &s2.u)?);
    }
    let logs: Vec<f64> = dists.iter().map(|d| d.max(1e-300).ln()).collect();
    let rho_hat = super::fit_slope(&times, &logs);
    let intercept = logs.iter().sum::<f64>() / logs.len() as f64
        - rho_hat * times.iter().sum::<f64>() / times.len() as f64;
    let max_log_residual = times
        .iter()
        .zip(&logs)
        .map(|(t, l)| (l - (intercept + rho_hat * t)).abs())
        .fold(0.0f64, f64::max);
    Ok(ContractionReport { times, distances: dists, rho_hat, max_log_residual })
}
