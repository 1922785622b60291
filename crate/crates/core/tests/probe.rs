use chnl_core::diagnostics::{self, energy_equality_residual, loglog_slope, Scenario};
use chnl_core::energetics::{check_uniqueness_regime, CoefficientSpec, PotentialSpec};
use chnl_core::grid::{Bc, Domain};
use chnl_core::model::{make_initial, InitialKind, Mode, ModelParams};
use chnl_core::stepper::{run, stable_oracle, StepperConfig};

fn log_params(mode: Mode, delta: f64, eps: f64, sigma: f64, lambda: f64, coeff: CoefficientSpec) -> ModelParams {
    ModelParams::new(mode, delta, eps, sigma, 1.0,
        PotentialSpec::logarithmic(lambda, None).unwrap(), coeff).unwrap()
}

#[test]
fn probe_criterion2_residual_order() {
    let dom = Domain::unit(&[128], Bc::NoFlux).unwrap();
    let u0 = make_initial(&InitialKind::CosineMode { mean: 0.1, amplitude: 0.3, k: 1 }, &dom).unwrap();
    for (name, params) in [
        ("fourth eps=0.1", log_params(Mode::Fourth, 0.0, 0.1, 1e-3, 1.0, CoefficientSpec::constant(1.0).unwrap())),
        ("sixth d=1e-4", log_params(Mode::Sixth, 1e-4, 0.0, 1e-3, 1.0, CoefficientSpec::constant(1.0).unwrap())),
    ] {
        let taus = [4e-4, 2e-4, 1e-4];
        let mut rs = vec![];
        for &tau in &taus {
            let out = run(&u0, &StepperConfig::new(tau, 0.05), &params, 1).unwrap();
            let r = energy_equality_residual(&out.series).iter().map(|(_, v)| *v).fold(0.0f64, f64::max);
            rs.push(r);
        }
        let order = loglog_slope(&taus, &rs);
        println!("{name}: residuals {rs:?} order {order:.3}");
    }
}

#[test]
fn probe_criterion6_oracle_order() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 1.0, CoefficientSpec::constant(1.0).unwrap());
    let u0 = make_initial(&InitialKind::CosineMode { mean: 0.0, amplitude: 0.3, k: 1 }, &dom).unwrap();
    let t_end = 1e-3;
    let t0 = std::time::Instant::now();
    let (reference, tau_used) = stable_oracle(&u0, t_end, &params).unwrap();
    println!("oracle: tau {tau_used:e}, wall {:?}", t0.elapsed());
    let taus = [1e-4, 5e-5, 2.5e-5];
    let mut errs = vec![];
    for &tau in &taus {
        let out = run(&u0, &StepperConfig::new(tau, t_end), &params, 0).unwrap();
        let e = out.final_state.u.values().iter().zip(reference.values())
            .map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        errs.push(e);
        println!("  tau {tau:e}: steps {}, err {e:e}", out.accepted_steps);
    }
    println!("order {:.3}", loglog_slope(&taus, &errs));
}

#[test]
fn probe_criterion7_delta_ladder() {
    let dom = Domain::unit(&[128], Bc::NoFlux).unwrap();
    let coeff = CoefficientSpec::even_quadratic(1.0, -0.5).unwrap();
    let params = log_params(Mode::Sixth, 1e-2, 0.0, 1e-3, 1.0, coeff);
    let mut cfg = StepperConfig::new(2e-4, 0.02);
    cfg.newton_tol = 1e-8;
    let scenario = Scenario {
        domain: dom, params, cfg,
        initial: InitialKind::CosineMode { mean: 0.0, amplitude: 0.25, k: 1 },
        smooth_initial: false, diagnostics_every: 0,
    };
    let t0 = std::time::Instant::now();
    let rep = diagnostics::sweep_delta(&scenario, &[1e-2, 1e-3, 1e-4, 1e-5]).unwrap();
    println!("delta sweep: distances {:?} (regime {}), wall {:?}", rep.distances_l2, rep.regime_validated, t0.elapsed());
}

#[test]
fn probe_criterion8_overshoot() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let coeff = CoefficientSpec::constant(1.0).unwrap();
    // sigma ladder overshoot
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-1, 4.0, coeff.clone());
    let mut cfg = StepperConfig::new(5e-3, 2.5);
    cfg.newton_max = 50;
    let scenario = Scenario {
        domain: dom.clone(), params, cfg,
        initial: InitialKind::SeededNoise { mean: 0.0, amplitude: 0.05, seed: 11 },
        smooth_initial: false, diagnostics_every: 1,
    };
    let t0 = std::time::Instant::now();
    let rep = diagnostics::sweep_sigma(&scenario, &[1e-1, 1e-2, 1e-3]).unwrap();
    println!("sigma sweep overshoots {:?}, wall {:?}", rep.max_overshoot, t0.elapsed());
    // guarded sigma=0 run
    let params0 = log_params(Mode::Fourth, 0.0, 0.0, 0.0, 4.0, coeff);
    let u0 = make_initial(&InitialKind::SeededNoise { mean: 0.0, amplitude: 0.05, seed: 11 }, &dom).unwrap();
    let mut cfg0 = StepperConfig::new(5e-3, 2.5);
    cfg0.newton_max = 50;
    let t0 = std::time::Instant::now();
    let out = run(&u0, &cfg0, &params0, 1).unwrap();
    let sup = out.series.records.iter().map(|r| r.sup_u).fold(0.0f64, f64::max);
    println!("guarded run sup|u| = {sup} (steps {}), wall {:?}", out.accepted_steps, t0.elapsed());
}

#[test]
fn probe_criterion9_contraction() {
    let dom = Domain::unit(&[128], Bc::NoFlux).unwrap();
    let coeff = CoefficientSpec::even_quadratic(1.0, 0.2).unwrap();
    let regime = check_uniqueness_regime(&coeff);
    println!("regime: kappa {} nonviscous {}", regime.kappa, regime.unique_nonviscous);
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-3, 1.0, coeff);
    let scenario = Scenario {
        domain: dom, params, cfg: StepperConfig::new(2e-4, 0.02),
        initial: InitialKind::CosineMode { mean: 0.1, amplitude: 0.2, k: 1 },
        smooth_initial: false, diagnostics_every: 1,
    };
    let t0 = std::time::Instant::now();
    let rep = diagnostics::contraction_check(&scenario, 1e-4).unwrap();
    println!("contraction: d0 {:e} dT {:e} rho {:.3} max_log_res {:.3}, wall {:?}",
        rep.distances[0], rep.distances.last().unwrap(), rep.rho_hat, rep.max_log_residual, t0.elapsed());
}
