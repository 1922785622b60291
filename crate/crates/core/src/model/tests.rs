use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::energetics::{CoefficientSpec, PotentialSpec};
use crate::grid::{transform::DomainTransforms, Bc, Domain, Field};

fn linear_params(mode: Mode, delta: f64, epsilon: f64, a0: f64, lambda0: f64) -> ModelParams {
    ModelParams::new(
        mode,
        delta,
        epsilon,
        0.0,
        1.0,
        PotentialSpec::linear(lambda0).unwrap(),
        CoefficientSpec::constant(a0).unwrap(),
    )
    .unwrap()
}

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
fn params_validation() {
    assert!(log_params_checked(Mode::Sixth, 0.0, 0.0, 1e-3).is_err());
    assert!(log_params_checked(Mode::Fourth, 1e-3, 0.0, 1e-3).is_err());
    assert!(log_params_checked(Mode::PhaseField, 0.0, 0.0, 0.0).is_err());
    assert!(log_params_checked(Mode::PhaseField, 0.0, 0.0, 1e-2).is_ok());
}

fn log_params_checked(mode: Mode, delta: f64, eps: f64, sigma: f64) -> Result<ModelParams, ModelError> {
    ModelParams::new(
        mode,
        delta,
        eps,
        sigma,
        1.0,
        PotentialSpec::logarithmic(0.0, None).unwrap(),
        CoefficientSpec::constant(1.0).unwrap(),
    )
}

#[test]
fn cal_a_of_constant_is_zero() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let coeff = CoefficientSpec::even_quadratic(1.0, 0.5).unwrap();
    let u = Field::constant(&dom, 0.3);
    assert_eq!(cal_a(&u, &coeff).max_abs(), 0.0);
}

#[test]
fn cal_a_with_unit_coefficient_is_negative_laplacian() {
    let dom = Domain::unit(&[32, 16], Bc::Periodic).unwrap();
    let coeff = CoefficientSpec::constant(1.0).unwrap();
    let u = Field::from_fn(&dom, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
    let ca = cal_a(&u, &coeff);
    let nl = crate::grid::laplacian(&u).map(|v| -v);
    for (a, b) in ca.values().iter().zip(nl.values()) {
        assert_eq!(a, b);
    }
}

fn cal_a_refinement_error(n: usize) -> f64 {
    // self-refinement oracle: the same formula on a 4x finer grid,
    // restricted by cell averaging
    let coeff = CoefficientSpec::even_quadratic(1.0, 0.5).unwrap();
    let make = |cells: usize| {
        let dom = Domain::unit(&[cells], Bc::NoFlux).unwrap();
        let u = Field::from_fn(&dom, |x| 0.1 * (PI * x[0]).cos());
        cal_a(&u, &coeff)
    };
    let coarse = make(n);
    let fine = make(4 * n);
    let fv = fine.values();
    coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let avg = (fv[4 * i] + fv[4 * i + 1] + fv[4 * i + 2] + fv[4 * i + 3]) / 4.0;
            (c - avg).abs()
        })
        .fold(0.0f64, f64::max)
}

#[test]
fn cal_a_converges_at_second_order() {
    let e1 = cal_a_refinement_error(32);
    let e2 = cal_a_refinement_error(128);
    let order = (e1 / e2).log2() / 2.0;
    assert!((1.5..=2.5).contains(&order), "order {order}");
}

#[test]
fn chemical_potential_of_steady_constant() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.3, 1e-2, 0.7);
    let m = 0.4;
    let u = Field::constant(&dom, m);
    let w = chemical_potential(&u, &u, 1e-3, &params).unwrap();
    let expect = params.potential.f(m).unwrap(); // f_sigma(m) - lambda m
    for v in w.values() {
        assert!((v - expect).abs() < 1e-13);
    }
    // tau-independence when u_new = u_old
    let w2 = chemical_potential(&u, &u, 1e-9, &params).unwrap();
    assert_eq!(w.values(), w2.values());
}

#[test]
fn chemical_potential_linear_regime_on_a_cosine_mode() {
    // delta=0, eps=0, a=1, f = lambda0 u: w = -Delta u + lambda0 u
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let params = linear_params(Mode::Fourth, 0.0, 0.0, 1.0, 0.8);
    let u = Field::from_fn(&dom, |x| 0.1 * (PI * x[0]).cos());
    let w = chemical_potential(&u, &u, 1.0, &params).unwrap();
    let expect = crate::grid::laplacian(&u).zip(&u, |l, v| -l + 0.8 * v);
    for (a, b) in w.values().iter().zip(expect.values()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn chemical_potential_guards_the_singular_domain() {
    let dom = Domain::unit(&[8], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 0.0, 0.0);
    let u = Field::constant(&dom, 1.0);
    let ok = Field::constant(&dom, 0.5);
    assert!(matches!(
        chemical_potential(&u, &ok, 1e-3, &params),
        Err(ModelError::Energetics(EnergeticsError::DomainViolation(_)))
    ));
}

#[test]
fn residual_vanishes_at_steady_state() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    for mode in [Mode::Fourth, Mode::PhaseField] {
        let params = log_params(mode, 0.0, 0.1, 1e-2, 0.5);
        let m = -0.2;
        let u = Field::constant(&dom, m);
        let w = Field::constant(&dom, params.potential.f(m).unwrap());
        let s = SimState::new(0.0, u, w);
        let (r1, r2) = residual(&s, &s, 1e-3, &params).unwrap();
        assert!(r1.max_abs() < 1e-13, "{mode:?}");
        assert!(r2.max_abs() < 1e-13, "{mode:?}");
    }
}

#[test]
fn residual_detects_non_steady_states() {
    let dom = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let params = log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 0.5);
    let m = 0.1;
    let u_old = Field::constant(&dom, m);
    let w_old = Field::constant(&dom, params.potential.f(m).unwrap());
    let old = SimState::new(0.0, u_old, w_old);
    let u_new = Field::from_fn(&dom, |x| m + 0.01 * (PI * x[0]).cos());
    let w_new = old.w.clone();
    let new = SimState::new(1e-3, u_new, w_new);
    let (r1, _r2) = residual(&new, &old, 1e-3, &params).unwrap();
    assert!(crate::grid::norm_l2(&r1) > 1.0);
}

#[test]
fn residual_accepts_the_exact_implicit_euler_update_in_the_linear_regime() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let (delta, eps, a0, lam0, tau) = (1e-4, 0.5, 1.3, 0.8, 1e-3);
    let params = linear_params(Mode::Sixth, delta, eps, a0, lam0);
    let tr = DomainTransforms::new(&dom);
    let kap = tr.axis0_eigenvalue(1); // discrete symbol k^2
    let mode = Field::from_fn(&dom, |x| (PI * x[0]).cos());
    let u_old = mode.map(|v| 0.1 * v);
    let gain = 1.0 / (1.0 + tau * kap * (delta * kap * kap + a0 * kap + lam0) / (1.0 + eps * kap));
    let u_new = u_old.map(|v| gain * v);
    let w_new = chemical_potential(&u_new, &u_old, tau, &params).unwrap();
    let old = SimState::new(0.0, u_old.clone(), Field::zeros(&dom));
    let new = SimState::new(tau, u_new, w_new);
    let (r1, _) = residual(&new, &old, tau, &params).unwrap();
    // roundoff floor: Delta w amplifies w's eigen-relation noise by 4/h^2
    assert!(r1.max_abs() < 5e-8, "{:e}", r1.max_abs());
}

#[test]
fn mode_residuals_are_consistent_up_to_the_viscosity_shift() {
    // Sixth with delta=0 (built directly, bypassing validation) and
    // PhaseField minus its sigma_pf term both equal Fourth with
    // epsilon' = epsilon + sigma, field for field.
    let dom = Domain::unit(&[24], Bc::NoFlux).unwrap();
    let (eps, sigma, tau) = (0.2, 1e-2, 1e-3);
    let pot = PotentialSpec::logarithmic(0.5, Some(sigma)).unwrap();
    let coeff = CoefficientSpec::even_quadratic(1.0, 0.3).unwrap();
    let mk = |mode: Mode, eps: f64| ModelParams {
        mode,
        delta: 0.0,
        epsilon: eps,
        sigma,
        mobility: 1.0,
        potential: pot.clone(),
        coefficient: coeff.clone(),
    };
    let sixth0 = mk(Mode::Sixth, eps);
    let fourth = mk(Mode::Fourth, eps + sigma);
    let pf = mk(Mode::PhaseField, eps);

    let u_old = Field::from_fn(&dom, |x| 0.2 * (PI * x[0]).cos() - 0.1);
    let u_new = Field::from_fn(&dom, |x| 0.19 * (PI * x[0]).cos() - 0.1 + 0.01 * (2.0 * PI * x[0]).cos());
    let w_old = Field::from_fn(&dom, |x| 0.05 * (PI * x[0]).cos());
    let w_new = Field::from_fn(&dom, |x| 0.04 * (PI * x[0]).cos() + 0.02);
    let old = SimState::new(0.0, u_old, w_old);
    let new = SimState::new(tau, u_new, w_new);

    let (r1_s, r2_s) = residual(&new, &old, tau, &sixth0).unwrap();
    let (r1_f, r2_f) = residual(&new, &old, tau, &fourth).unwrap();
    let (r1_p, r2_p) = residual(&new, &old, tau, &pf).unwrap();

    assert_eq!(r1_s.values(), r1_f.values());
    assert_eq!(r2_s.values(), r2_f.values());
    assert_eq!(r2_p.values(), r2_f.values());
    // association differs between the fused and split evaluations, so allow
    // roundoff at the u/tau scale
    let sigma_term = new.w.zip(&old.w, |a, b| sigma * (a - b) / tau);
    for ((p, s), f) in r1_p.values().iter().zip(sigma_term.values()).zip(r1_f.values()) {
        assert!((p - s - f).abs() < 1e-10);
    }
}

#[test]
fn cal_a_matches_the_divergence_form_weakly() {
    // <A(u), v> vs int a(u) grad u . grad v + (a'(u)/2)|grad u|^2 v,
    // refinement study on smooth randomised fields (periodic)
    use rand::{Rng, SeedableRng};
    let coeff = CoefficientSpec::even_quadratic(1.0, 0.5).unwrap();
    let mismatch = |n: usize| -> f64 {
        let dom = Domain::unit(&[n, n], Bc::Periodic).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut coefs = [[0.0; 5]; 2];
        for row in coefs.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.gen_range(-0.2..0.2);
            }
        }
        let smooth = |x: [f64; 3], c: &[f64; 5]| {
            c[0] * (2.0 * PI * x[0]).sin()
                + c[1] * (2.0 * PI * x[1]).cos()
                + c[2] * (4.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin()
                + c[3] * (2.0 * PI * (x[0] + x[1])).sin()
                + c[4]
        };
        let u = Field::from_fn(&dom, |x| smooth(x, &coefs[0]));
        let v = Field::from_fn(&dom, |x| smooth(x, &coefs[1]));
        let lhs = crate::grid::integrate_product(&cal_a(&u, &coeff), &v);
        let a_u = u.map(|r| coeff.a(r));
        let gdot = crate::grid::grad_dot(&u, &v);
        let rhs = crate::grid::integrate(&a_u.zip(&gdot, |a, g| a * g))
            + crate::grid::integrate(
                &u.map(|r| 0.5 * coeff.a_prime(r))
                    .zip(&crate::grid::grad_sq(&u), |ap, gs| ap * gs)
                    .zip(&v, |x, vv| x * vv),
            );
        (lhs - rhs).abs()
    };
    let e1 = mismatch(16);
    let e2 = mismatch(64);
    let order = (e1 / e2).log2() / 2.0;
    assert!(order > 1.5, "pairing mismatch order {order} ({e1:e} -> {e2:e})");
}

// ---- initial data ----------------------------------------------------------

#[test]
fn constant_initial() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    let u = make_initial(&InitialKind::Constant { mean: 0.2 }, &dom).unwrap();
    assert!(u.values().iter().all(|v| *v == 0.2));
    assert!((crate::grid::mean(&u) - 0.2).abs() < 1e-14);
}

#[test]
fn seeded_noise_is_bit_reproducible() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let kind = InitialKind::SeededNoise { mean: 0.0, amplitude: 0.05, seed: 7 };
    let a = make_initial(&kind, &dom).unwrap();
    let b = make_initial(&kind, &dom).unwrap();
    assert_eq!(a.values(), b.values());
    assert!(a.max_abs() <= 0.05);
}

#[test]
fn cosine_mode_matches_the_neumann_eigenfunction() {
    let dom = Domain::unit(&[64], Bc::NoFlux).unwrap();
    let u = make_initial(&InitialKind::CosineMode { mean: 0.0, amplitude: 0.1, k: 1 }, &dom)
        .unwrap();
    let expect = Field::from_fn(&dom, |x| 0.1 * (PI * x[0]).cos());
    assert_eq!(u.values(), expect.values());
    assert!(crate::grid::mean(&u).abs() < 1e-15);
}

#[test]
fn initial_bounds_are_enforced() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    assert!(matches!(
        make_initial(&InitialKind::Constant { mean: 1.2 }, &dom),
        Err(ModelError::MeanOutOfRange(_))
    ));
    assert!(matches!(
        make_initial(&InitialKind::SeededNoise { mean: 0.9, amplitude: 0.2, seed: 1 }, &dom),
        Err(ModelError::AmplitudeTooLarge(_))
    ));
}

#[test]
fn smoothing_preserves_constants_and_means() {
    let dom = Domain::unit(&[128], Bc::NoFlux).unwrap();
    let c = Field::constant(&dom, 0.37);
    for order in [1, 2] {
        let s = smooth_initial_datum(&c, 0.1, order);
        let err = s.values().iter().map(|v| (v - 0.37).abs()).fold(0.0f64, f64::max);
        assert!(err < 1e-13);
    }
    let noisy = make_initial(
        &InitialKind::SeededNoise { mean: 0.25, amplitude: 0.3, seed: 3 },
        &dom,
    )
    .unwrap();
    let m0 = crate::grid::mean(&noisy);
    for order in [1, 2] {
        for sigma in [1e-1, 1e-2, 1e-3] {
            let s = smooth_initial_datum(&noisy, sigma, order);
            assert!((crate::grid::mean(&s) - m0).abs() <= 1e-14);
        }
    }
}

#[test]
fn smoothing_converges_as_sigma_drops() {
    let dom = Domain::unit(&[128], Bc::NoFlux).unwrap();
    let noisy = make_initial(
        &InitialKind::SeededNoise { mean: 0.0, amplitude: 0.4, seed: 9 },
        &dom,
    )
    .unwrap();
    let dist = |sigma: f64| {
        let s = smooth_initial_datum(&noisy, sigma, 1);
        crate::grid::norm_l2(&s.zip(&noisy, |a, b| a - b))
    };
    let (d1, d2, d3) = (dist(1e-1), dist(1e-2), dist(1e-3));
    assert!(d1 > d2 && d2 > d3, "{d1} {d2} {d3}");
}

#[test]
fn initial_state_respects_the_phase_field_convention() {
    let dom = Domain::unit(&[16], Bc::NoFlux).unwrap();
    let u = make_initial(&InitialKind::Constant { mean: 0.1 }, &dom).unwrap();
    let pf = SimState::initial(u.clone(), &log_params(Mode::PhaseField, 0.0, 0.0, 1e-2, 0.0))
        .unwrap();
    assert_eq!(pf.w.max_abs(), 0.0);
    let fourth = SimState::initial(u, &log_params(Mode::Fourth, 0.0, 0.0, 1e-2, 0.0)).unwrap();
    assert!(fourth.w.max_abs() > 0.0);
}

#[test]
fn arc_domains_share_across_threads() {
    let dom: Arc<Domain> = Domain::unit(&[32], Bc::NoFlux).unwrap();
    let u = Field::constant(&dom, 0.1);
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let u = u.clone();
            std::thread::spawn(move || crate::grid::norm_l2(&u))
        })
        .collect();
    for h in handles {
        let _ = h.join().unwrap();
    }
}
