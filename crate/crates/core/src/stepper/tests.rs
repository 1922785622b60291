use std::f64::consts::PI;

use super::*;
use crate::energetics::{CoefficientSpec, PotentialSpec};
use crate::grid::{Bc, Domain};
use crate::model::{make_initial, InitialKind, Mode, SimState};

fn log_params(mode: Mode, delta: f64, epsilon: f64, sigma: f64, lambda: f64) -> ModelParams {
    ModelParams::new(
        mode,
        delta,
        epsilon,
        sigma,
        1.0,
        PotentialSpec::logarithmic(lambda, None).unwrap(),
        CoefficientSpec::constant(1.0).unwrap(),
    )
    .unwrap()
}

fn linear_params(lambda0: f64) -> ModelParams {
    ModelParams::new(
        Mode::Fourth,
        0.0,
        0.0,
        0.0,
        1.0,
        PotentialSpec::linear(lambda0).unwrap(),
        CoefficientSpec::constant(1.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn steady_state_step_is_identity() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 0.5);
    let u = Field::constant(&dom, 0.3);
    let state = SimState::initial(u.clone(), &params).unwrap();
    let cfg = StepperConfig::new(1e-3, 1e-3);
    let (next, report) = step(&state, &cfg, &params).unwrap();
    assert!(report.accepted);
    assert!(report.newton_iters <= 1);
    let drift = next
        .u
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(drift < 1e-12, "{drift:e}");
    assert!((report.energy_after - report.energy_before).abs() < 1e-12);
}

#[test]
fn linear_mode_decays_at_the_analytic_rate() {
    // a=1, f=u, delta=eps=0: mode k=pi decays like exp(-k^2(k^2+1) t)
    // with the discrete symbol
    let dom = Domain::unit(&[128], Bc::NoFlux).unwrap();
    let params = linear_params(1.0);
    let u0 = make_initial(&InitialKind::CosineMode { mean: 0.0, amplitude: 0.1, k: 1 }, &dom)
        .unwrap();
    let t_end = 0.01;
    let cfg = StepperConfig::new(1e-5, t_end);
    let out = run(&u0, &cfg, &params, 0).unwrap();
    let tr = crate::grid::transform::DomainTransforms::new(&dom);
    let kap = tr.axis0_eigenvalue(1);
    let mu = -kap * (kap + 1.0);
    let expect = 0.1 * (mu * t_end).exp();
    let amp = out.final_state.u.max_abs();
    assert!(
        (amp - expect).abs() <= 1e-2 * expect,
        "amp {amp}, expect {expect} (mu = {mu})"
    );
}

#[test]
fn seeded_noise_run_dissipates_energy_and_conserves_mass() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 3.0);
    let u0 = make_initial(
        &InitialKind::SeededNoise { mean: 0.1, amplitude: 0.2, seed: 11 },
        &dom,
    )
    .unwrap();
    let cfg = StepperConfig::new(2e-4, 4e-3);
    let out = run(&u0, &cfg, &params, 1).unwrap();
    assert!(out.accepted_steps >= 20);
    let recs = &out.series.records;
    let m0 = recs[0].mass;
    for pair in recs.windows(2) {
        assert!(
            pair[1].energy <= pair[0].energy + 1e-9 * (1.0 + pair[0].energy.abs()),
            "energy must not increase"
        );
    }
    for r in recs {
        assert!((r.mass - m0).abs() <= 1e-10, "mass drift {:e}", (r.mass - m0).abs());
        assert!(r.sup_u < 1.0 + 1.0, "bounded state");
    }
}

#[test]
fn zero_horizon_run_records_only_the_initial_state() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 0.0);
    let u0 = Field::constant(&dom, 0.2);
    let cfg = StepperConfig::new(1e-3, 0.0);
    let out = run(&u0, &cfg, &params, 1).unwrap();
    assert_eq!(out.accepted_steps, 0);
    assert_eq!(out.series.len(), 1);
    assert_eq!(out.final_state.t, 0.0);
}

#[test]
fn step_failure_reports_guard_and_residual() {
    // impossible configuration: one Newton iteration, no room to halve
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 0.0, 4.0);
    let u0 = make_initial(
        &InitialKind::SeededNoise { mean: 0.0, amplitude: 0.4, seed: 5 },
        &dom,
    )
    .unwrap();
    let state = SimState::initial(u0, &params).unwrap();
    let mut cfg = StepperConfig::new(1.0, 1.0);
    cfg.newton_max = 1;
    cfg.tau_min = 1.0;
    let err = step(&state, &cfg, &params).unwrap_err();
    assert!(matches!(err, StepError::StepFailure { .. }), "{err}");
}

#[test]
fn checkpoint_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.chkp");
    let dom = Domain::new(&[24, 12], &[2.0, 1.0], Bc::Periodic).unwrap();
    let u = Field::from_fn(&dom, |x| 0.3 * (2.0 * PI * x[0] / 2.0).sin() + 0.01 * x[1]);
    let w = Field::from_fn(&dom, |x| (2.0 * PI * x[1]).cos());
    let state = SimState::new(0.725, u, w);
    checkpoint::write_checkpoint(&path, &state, 3.5e-4).unwrap();
    let (back, tau) = checkpoint::read_checkpoint(&path).unwrap();
    assert_eq!(tau.to_bits(), 3.5e-4f64.to_bits());
    assert_eq!(back.t.to_bits(), state.t.to_bits());
    assert_eq!(back.u.values(), state.u.values());
    assert_eq!(back.w.values(), state.w.values());
    assert_eq!(*back.u.domain().as_ref(), *state.u.domain().as_ref());
}

#[test]
fn checkpoint_rejects_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.chkp");
    let dom = Domain::unit(&[8], Bc::NoFlux).unwrap();
    let state = SimState::new(0.0, Field::constant(&dom, 0.1), Field::zeros(&dom));
    checkpoint::write_checkpoint(&path, &state, 1e-3).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    // truncation
    std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(matches!(checkpoint::read_checkpoint(&path), Err(StepError::Checkpoint(_))));
    // bad magic
    let mut bad = bytes.clone();
    bad[0] = b'X';
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(checkpoint::read_checkpoint(&path), Err(StepError::Checkpoint(_))));
    // unsupported version
    let mut v2 = bytes.clone();
    v2[4] = 2;
    std::fs::write(&path, &v2).unwrap();
    let err = checkpoint::read_checkpoint(&path).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
}

#[test]
fn resume_reproduces_the_uninterrupted_run_bitwise() {
    let dom = Domain::unit(&[48], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.1, 1e-2, 2.0);
    let u0 = make_initial(
        &InitialKind::SeededNoise { mean: 0.05, amplitude: 0.15, seed: 3 },
        &dom,
    )
    .unwrap();
    let cfg = StepperConfig::new(2e-4, 4e-3);

    let full = run(&u0, &cfg, &params, 0).unwrap();

    // capture state and resume tau after step 10
    let mut captured: Option<(SimState, f64)> = None;
    let _ = run_with(&u0, &cfg, &params, 0, |i, state, report| {
        if i == 10 {
            captured = Some((state.clone(), (2.0 * report.tau_used).min(cfg.tau)));
        }
    })
    .unwrap();
    let (mid, tau_resume) = captured.expect("ran past step 10");
    let resumed = run_from(mid, tau_resume, &cfg, &params, 0, |_, _, _| {}).unwrap();

    let a = full.final_state.u.values();
    let b = resumed.final_state.u.values();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn reruns_are_bit_identical() {
    let dom = Domain::unit(&[48], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Sixth, 1e-4, 0.0, 1e-2, 2.0);
    let u0 = make_initial(
        &InitialKind::SeededNoise { mean: 0.0, amplitude: 0.2, seed: 9 },
        &dom,
    )
    .unwrap();
    let cfg = StepperConfig::new(2e-4, 2e-3);
    let a = run(&u0, &cfg, &params, 1).unwrap();
    let b = run(&u0, &cfg, &params, 1).unwrap();
    assert_eq!(a.series.to_csv(), b.series.to_csv());
    for (x, y) in a.final_state.u.values().iter().zip(b.final_state.u.values()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

// ---- oracle ---------------------------------------------------------------

#[test]
fn oracle_keeps_constants_constant() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 0.5);
    let u0 = Field::constant(&dom, 0.25);
    let u = explicit_oracle(&u0, 1e-6, 1e-4, &params).unwrap();
    let drift = u.values().iter().map(|v| (v - 0.25).abs()).fold(0.0f64, f64::max);
    assert!(drift < 1e-13);
}

#[test]
fn oracle_conserves_the_mean() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    for eps in [0.0, 0.5] {
        let params = log_params(Mode::Fourth, 0.0, eps, 1e-2, 1.0);
        let u0 = make_initial(
            &InitialKind::SeededNoise { mean: 0.1, amplitude: 0.1, seed: 2 },
            &dom,
        )
        .unwrap();
        let m0 = crate::grid::mean(&u0);
        let (u, _tau) = stable_oracle(&u0, 1e-4, &params).unwrap();
        assert!((crate::grid::mean(&u) - m0).abs() <= 1e-10, "eps = {eps}");
    }
}

#[test]
fn oracle_rejects_the_phase_field_mode() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    let params = log_params(Mode::PhaseField, 0.0, 0.0, 1e-2, 0.0);
    let u0 = Field::constant(&dom, 0.1);
    assert!(matches!(
        explicit_oracle(&u0, 1e-6, 1e-4, &params),
        Err(StepError::UnsupportedOracleMode)
    ));
}

#[test]
fn oracle_flags_instability() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = linear_params(1.0);
    let u0 = make_initial(&InitialKind::CosineMode { mean: 0.0, amplitude: 0.1, k: 1 }, &dom)
        .unwrap();
    // far above the diffusive stability bound
    assert!(matches!(
        explicit_oracle(&u0, 1e-2, 0.1, &params),
        Err(StepError::Instability(_))
    ));
}

#[test]
fn oracle_and_implicit_step_agree_to_first_order_smoke() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 1.0);
    let u0 = make_initial(&InitialKind::CosineMode { mean: 0.0, amplitude: 0.3, k: 1 }, &dom)
        .unwrap();
    let t_end = 5e-4;
    let (reference, _) = stable_oracle(&u0, t_end, &params).unwrap();
    let cfg = StepperConfig::new(5e-5, t_end);
    let out = run(&u0, &cfg, &params, 0).unwrap();
    let err = out
        .final_state
        .u
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(err < 1e-4, "implicit vs oracle sup error {err:e}");
}
