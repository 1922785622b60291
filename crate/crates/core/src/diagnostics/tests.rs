use std::f64::consts::PI;

use super::*;
use crate::energetics::{CoefficientSpec, PotentialSpec};
use crate::grid::{Bc, Domain, Field};
use crate::model::{InitialKind, Mode, ModelParams};
use crate::stepper::{run, StepperConfig};

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

#[test]
fn energy_equality_residual_is_zero_at_start_and_on_steady_runs() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.1, 1e-2, 0.5);
    let u0 = Field::constant(&dom, 0.2);
    let out = run(&u0, &StepperConfig::new(1e-3, 5e-3), &params, 1).unwrap();
    let r = energy_equality_residual(&out.series);
    assert_eq!(r[0].1, 0.0);
    for (_, v) in &r {
        assert!(*v < 1e-12, "steady-state residual {v:e}");
    }
}

#[test]
fn energy_equality_residual_shrinks_with_tau() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.1, 1e-3, 1.0);
    let u0 = crate::model::make_initial(
        &InitialKind::CosineMode { mean: 0.1, amplitude: 0.3, k: 1 },
        &dom,
    )
    .unwrap();
    let max_res = |tau: f64| {
        let out = run(&u0, &StepperConfig::new(tau, 4e-3), &params, 1).unwrap();
        energy_equality_residual(&out.series)
            .iter()
            .map(|(_, r)| *r)
            .fold(0.0f64, f64::max)
    };
    let (r1, r2) = (max_res(4e-4), max_res(1e-4));
    assert!(r2 < r1, "{r1:e} -> {r2:e}");
    let order = (r1 / r2).log2() / 2.0;
    assert!(order > 0.7, "observed order {order}");
}

// ---- dpgg -------------------------------------------------------------------

#[test]
fn dpgg_residual_is_zero_for_constant_fields() {
    let dom = Domain::unit(&[16, 16], Bc::Periodic).unwrap();
    let z = Field::constant(&dom, 0.7);
    let h = ScalarC2 { f: &|r| r * r, d1: &|r| 2.0 * r, d2: &|_| 2.0 };
    assert_eq!(dpgg_identity_residual(&z, &h), 0.0);
}

fn dpgg_sin_residual(n: usize, h: &ScalarC2) -> f64 {
    let dom = Domain::unit(&[n, n], Bc::Periodic).unwrap();
    let z = Field::from_fn(&dom, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
    dpgg_identity_residual(&z, h)
}

fn dpgg_multimode_residual(n: usize, h: &ScalarC2) -> f64 {
    let dom = Domain::unit(&[n, n], Bc::Periodic).unwrap();
    let z = Field::from_fn(&dom, |x| {
        (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
            + 0.4 * (4.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()
            + 0.2 * (2.0 * PI * x[0]).sin()
    });
    dpgg_identity_residual(&z, h)
}

#[test]
fn dpgg_constant_h_reduces_to_the_hessian_identity() {
    // h = const: residual = (2c/3)|int |D^2 z|^2 - |Delta z|^2|, which is
    // O(h^2) because the discrete mixed and repeated second differences
    // carry different symbols
    let h = ScalarC2 { f: &|_| 1.5, d1: &|_| 0.0, d2: &|_| 0.0 };
    let r1 = dpgg_sin_residual(16, &h);
    let r2 = dpgg_sin_residual(64, &h);
    let order = (r1 / r2).log2() / 2.0;
    assert!((1.5..=2.5).contains(&order), "order {order} ({r1:e} -> {r2:e})");
}

#[test]
fn dpgg_quadratic_h_converges_at_least_at_second_order() {
    // the symmetric product mode superconverges (its O(h^2) symbol errors
    // cancel); a multimode field shows the generic second-order rate
    let h = ScalarC2 { f: &|r| r * r, d1: &|r| 2.0 * r, d2: &|_| 2.0 };
    let sym = (dpgg_sin_residual(32, &h) / dpgg_sin_residual(128, &h)).log2() / 2.0;
    assert!(sym > 1.6, "symmetric-mode order {sym}");
    let gen =
        (dpgg_multimode_residual(32, &h) / dpgg_multimode_residual(128, &h)).log2() / 2.0;
    assert!((1.6..=2.4).contains(&gen), "generic order {gen}");
}

// ---- dispersion --------------------------------------------------------------

#[test]
fn dispersion_zero_mode_is_stationary() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let params = ModelParams::new(
        Mode::Fourth,
        0.0,
        0.0,
        0.0,
        1.0,
        PotentialSpec::linear(1.0).unwrap(),
        CoefficientSpec::constant(1.0).unwrap(),
    )
    .unwrap();
    let rows = dispersion_check(&dom, &params, &[0], 0.1, 1e-3).unwrap();
    assert_eq!(rows[0].mu_numeric, 0.0);
    assert_eq!(rows[0].mu_analytic, 0.0);
}

#[test]
fn dispersion_matches_the_analytic_rate() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let params = ModelParams::new(
        Mode::Fourth,
        0.0,
        0.0,
        0.0,
        1.0,
        PotentialSpec::linear(1.0).unwrap(),
        CoefficientSpec::constant(1.0).unwrap(),
    )
    .unwrap();
    let rows = dispersion_check(&dom, &params, &[1], 0.1, 1e-3).unwrap();
    let row = &rows[0];
    // mu ~ -k^2(k^2+1) ~ -107.3 for k = pi
    assert!(row.mu_analytic < -100.0 && row.mu_analytic > -110.0);
    assert!(row.rel_err <= 1e-2, "rel err {}", row.rel_err);
}

#[test]
fn dispersion_rejects_nonlinear_specs() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 1.0);
    assert!(matches!(
        dispersion_check(&dom, &params, &[1], 0.1, 1e-3),
        Err(DiagnosticsError::NonlinearSpec(_))
    ));
    let params2 = ModelParams::new(
        Mode::Fourth,
        0.0,
        0.0,
        0.0,
        1.0,
        PotentialSpec::linear(1.0).unwrap(),
        CoefficientSpec::even_quadratic(1.0, 0.5).unwrap(),
    )
    .unwrap();
    assert!(matches!(
        dispersion_check(&dom, &params2, &[1], 0.1, 1e-3),
        Err(DiagnosticsError::NonlinearSpec(_))
    ));
}

// ---- sweeps -------------------------------------------------------------------

fn small_scenario(mode: Mode, delta: f64, sigma: f64) -> Scenario {
    let dom = Domain::unit(&[48], Bc::NoFlux).unwrap();
    let params = ModelParams::new(
        mode,
        delta,
        0.0,
        sigma,
        1.0,
        PotentialSpec::logarithmic(1.0, None).unwrap(),
        CoefficientSpec::constant(1.0).unwrap(),
    )
    .unwrap();
    Scenario {
        domain: dom,
        params,
        cfg: StepperConfig::new(2e-4, 2e-3),
        initial: InitialKind::CosineMode { mean: 0.1, amplitude: 0.3, k: 1 },
        smooth_initial: false,
        diagnostics_every: 1,
    }
}

#[test]
fn identical_sigma_ladder_gives_zero_distances() {
    let scenario = small_scenario(Mode::Fourth, 0.0, 1e-2);
    let rep = sweep_sigma(&scenario, &[1e-2, 1e-2, 1e-2]).unwrap();
    for d in &rep.distances_l2 {
        assert_eq!(*d, 0.0);
    }
}

#[test]
fn sigma_ladder_distances_shrink() {
    let scenario = small_scenario(Mode::Fourth, 0.0, 1e-1);
    let rep = sweep_sigma(&scenario, &[1e-1, 1e-2, 1e-3]).unwrap();
    assert_eq!(rep.distances_l2.len(), 2);
    assert!(rep.distances_l2[0] > rep.distances_l2[1], "{:?}", rep.distances_l2);
}

#[test]
fn delta_ladder_requires_sixth_mode_and_decreasing_entries() {
    let scenario = small_scenario(Mode::Fourth, 0.0, 1e-2);
    assert!(matches!(
        sweep_delta(&scenario, &[1e-2, 1e-3]),
        Err(DiagnosticsError::LadderInvalid(_))
    ));
    let scenario = small_scenario(Mode::Sixth, 1e-3, 1e-2);
    assert!(matches!(
        sweep_delta(&scenario, &[1e-3, 1e-2]),
        Err(DiagnosticsError::LadderInvalid(_))
    ));
}

#[test]
fn refine_reports_spacings_and_distances() {
    let mut scenario = small_scenario(Mode::Fourth, 0.0, 1e-2);
    scenario.domain = Domain::unit(&[16], Bc::NoFlux).unwrap();
    scenario.cfg = StepperConfig::new(2e-4, 1e-3);
    let rep = refine(&scenario, 3).unwrap();
    assert_eq!(rep.ladder.len(), 3);
    assert!((rep.ladder[0] - 1.0 / 16.0).abs() < 1e-15);
    assert!((rep.ladder[2] - 1.0 / 64.0).abs() < 1e-15);
    assert_eq!(rep.distances_l2.len(), 2);
    assert!(rep.distances_l2[1] < rep.distances_l2[0]);
}

#[test]
fn sweep_csv_is_deterministic() {
    let scenario = small_scenario(Mode::Fourth, 0.0, 1e-1);
    let a = sweep_sigma(&scenario, &[1e-1, 1e-2, 1e-3]).unwrap().to_csv();
    let b = sweep_sigma(&scenario, &[1e-1, 1e-2, 1e-3]).unwrap().to_csv();
    assert_eq!(a, b);
    assert!(a.starts_with("param,distance_l2,distance_h1,observed_order_cum\n"));
}

// ---- contraction ---------------------------------------------------------------

#[test]
fn contraction_zero_perturbation_stays_zero() {
    let scenario = small_scenario(Mode::Fourth, 0.0, 1e-2);
    let rep = contraction_check(&scenario, 0.0).unwrap();
    for d in &rep.distances {
        assert_eq!(*d, 0.0);
    }
}

#[test]
fn contraction_requires_mean_equal_data() {
    // perturbation shape is a pure mode: means agree by construction
    let scenario = small_scenario(Mode::Fourth, 0.0, 1e-2);
    let rep = contraction_check(&scenario, 1e-4).unwrap();
    assert!((rep.distances[0] - 1e-4).abs() < 1e-12);
    assert!(rep.rho_hat.is_finite());
}

#[test]
fn out_of_regime_contraction_still_reports() {
    // g0=1, g2=1 violates the uniqueness conditions; the test is
    // observational there and must still produce a finite report
    let dom = Domain::unit(&[48], Bc::NoFlux).unwrap();
    let params = ModelParams::new(
        Mode::Fourth,
        0.0,
        0.0,
        1e-2,
        1.0,
        PotentialSpec::logarithmic(1.0, None).unwrap(),
        CoefficientSpec::even_quadratic(1.0, 1.0).unwrap(),
    )
    .unwrap();
    let scenario = Scenario {
        domain: dom,
        params,
        cfg: StepperConfig::new(2e-4, 1e-3),
        initial: InitialKind::CosineMode { mean: 0.0, amplitude: 0.2, k: 1 },
        smooth_initial: false,
        diagnostics_every: 1,
    };
    let rep = contraction_check(&scenario, 1e-4).unwrap();
    assert!(rep.rho_hat.is_finite());
    assert!(rep.distances.iter().all(|d| d.is_finite()));
}
