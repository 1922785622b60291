//! Built-in property suite behind the `check` CLI subcommand. Each group
//! exercises one module's invariant list on small scenarios and returns a
//! one-line summary or the first counterexample.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics;
use crate::energetics::{CoefficientSpec, PotentialSpec};
use crate::grid::{self, Bc, Domain, Field};
use crate::model::{self, InitialKind, Mode, ModelParams};
use crate::stepper::{self, StepperConfig};

pub struct CheckOutcome {
    pub group: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = Result<String, String>;

fn fail(msg: String) -> Check {
    Err(msg)
}

/// Run every property group; the CLI prints one line per entry.
pub fn run_all() -> Vec<CheckOutcome> {
    let groups: Vec<(&'static str, fn() -> Check)> = vec![
        ("grid-operators", grid_operators),
        ("grid-transforms", grid_transforms),
        ("potential-yosida", potential_yosida),
        ("coefficient-phi", coefficient_phi),
        ("model-assembly", model_assembly),
        ("stepper-conservation", stepper_conservation),
    ];
    groups
        .into_iter()
        .map(|(group, f)| match f() {
            Ok(detail) => CheckOutcome { group, passed: true, detail },
            Err(detail) => CheckOutcome { group, passed: false, detail },
        })
        .collect()
}

fn random_field(dom: &std::sync::Arc<Domain>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..dom.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(dom, values).expect("finite random field")
}

fn grid_operators() -> Check {
    for bc in [Bc::NoFlux, Bc::Periodic] {
        let dom = Domain::unit(&[24, 16], bc).map_err(|e| e.to_string())?;
        let f = random_field(&dom, 41);
        let g = random_field(&dom, 42);
        let hmin = dom.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = 1e-12 / (hmin * hmin);

        let div = grid::integrate(&grid::laplacian(&f)).abs();
        if div > scale * f.max_abs() * dom.volume() {
            return fail(format!("divergence theorem violated ({bc:?}): {div:e}"));
        }
        let sym = (grid::integrate_product(&grid::laplacian(&f), &g)
            - grid::integrate_product(&f, &grid::laplacian(&g)))
        .abs();
        if sym > scale * f.max_abs() * g.max_abs() * dom.volume() {
            return fail(format!("self-adjointness violated ({bc:?}): {sym:e}"));
        }
        let neg = grid::integrate_product(&f, &grid::laplacian(&f));
        if neg > scale * f.max_abs() * f.max_abs() {
            return fail(format!("negativity violated ({bc:?}): {neg:e}"));
        }
    }
    // second-order convergence of the Laplacian on a smooth mode
    let err_at = |n: usize| {
        let dom = Domain::unit(&[n], Bc::NoFlux).unwrap();
        let f = Field::from_fn(&dom, |x| (PI * x[0]).cos());
        grid::laplacian(&f)
            .values()
            .iter()
            .zip(f.values())
            .map(|(l, v)| (l + PI * PI * v).abs())
            .fold(0.0f64, f64::max)
    };
    let order = (err_at(32) / err_at(128)).log2() / 2.0;
    if !(1.8..=2.2).contains(&order) {
        return fail(format!("laplacian eigenfunction order {order}"));
    }
    Ok(format!("divergence/self-adjoint/negativity hold; stencil order {order:.3}"))
}

fn grid_transforms() -> Check {
    for bc in [Bc::NoFlux, Bc::Periodic] {
        let dom = Domain::unit(&[32, 24], bc).map_err(|e| e.to_string())?;
        let f = random_field(&dom, 7);
        let m = grid::mean(&f);
        let f0 = f.map(|v| v - m);
        let v = grid::inv_laplacian_meanzero(&f0).map_err(|e| e.to_string())?;
        let back = grid::laplacian(&v).map(|x| -x);
        let err = back
            .values()
            .iter()
            .zip(f0.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if err > 1e-10 {
            return fail(format!("inverse-Laplacian roundtrip error {err:e} ({bc:?})"));
        }
    }
    let dom = Domain::unit(&[64], Bc::NoFlux).map_err(|e| e.to_string())?;
    let f = random_field(&dom, 8).map(|v| 0.3 * v + 0.2);
    let m0 = grid::mean(&f);
    for order in [1u8, 2u8] {
        let s = model::smooth_initial_datum(&f, 1e-2, order);
        let drift = (grid::mean(&s) - m0).abs();
        if drift > 1e-14 {
            return fail(format!("smoothing (order {order}) mean drift {drift:e}"));
        }
    }
    Ok("inverse Laplacian roundtrips at 1e-10; smoothing preserves means at 1e-14".into())
}

/// The regularised-family suite: monotone ordering, 1/sigma-Lipschitz
/// bound, fixed origin, uniform convergence on compacts, sigma-uniform
/// coercivity and controlled-derivative bounds. Sampled on the sigma
/// ladder {1e-1, 1e-2, 1e-3}.
pub fn yosida_moreau_suite(lambda: f64, samples: usize) -> Check {
    let pot = PotentialSpec::logarithmic(lambda, None).map_err(|e| e.to_string())?;
    let ladder = [1e-1, 1e-2, 1e-3];
    let eval = |sigma: f64, r: f64| pot.yosida_f(sigma, r).map_err(|e| e.to_string());

    for &sigma in &ladder {
        if eval(sigma, 0.0)? != 0.0 {
            return fail(format!("f_sigma(0) != 0 at sigma={sigma}"));
        }
        let mut prev_r = -3.0;
        let mut prev_f = eval(sigma, prev_r)?;
        for i in 1..samples {
            let r = -3.0 + 6.0 * i as f64 / (samples - 1) as f64;
            let fr = eval(sigma, r)?;
            if fr < prev_f - 1e-9 {
                return fail(format!("monotonicity broken at sigma={sigma}, r={r}"));
            }
            if (fr - prev_f).abs() > (r - prev_r) / sigma * (1.0 + 1e-6) + 1e-9 {
                return fail(format!("1/sigma-Lipschitz bound broken at sigma={sigma}, r={r}"));
            }
            prev_r = r;
            prev_f = fr;
        }
    }

    // Moreau family ordering and F_sigma <= F0 on (-1,1)
    for i in 0..samples {
        let r = -0.999 + 1.998 * i as f64 / (samples - 1) as f64;
        let f0 = pot.big_f(r).map_err(|e| e.to_string())? + 0.5 * lambda * r * r;
        let mut prev = f64::NEG_INFINITY;
        for &sigma in &ladder {
            let fs = pot.moreau_big_f(sigma, r).map_err(|e| e.to_string())?;
            if fs < prev - 1e-12 || fs > f0 + 1e-12 {
                return fail(format!("Moreau ordering broken at sigma={sigma}, r={r}"));
            }
            prev = fs;
        }
    }

    // uniform convergence on the compact [-0.9, 0.9]: sup distance strictly
    // decreasing along the ladder
    let mut sups = Vec::new();
    for &sigma in &ladder {
        let mut sup: f64 = 0.0;
        for i in 0..samples {
            let r = -0.9 + 1.8 * i as f64 / (samples - 1) as f64;
            let d = (eval(sigma, r)? - pot.f0(r).map_err(|e| e.to_string())?).abs();
            sup = sup.max(d);
        }
        sups.push(sup);
    }
    if !(sups[0] > sups[1] && sups[1] > sups[2]) {
        return fail(format!("compact convergence not monotone: {sups:?}"));
    }

    // coercivity: c(sigma) = max(lambda r^2 - F_sigma(r)) finite and not
    // growing as sigma drops
    let mut coercivity = Vec::new();
    for &sigma in &ladder {
        let mut c = f64::NEG_INFINITY;
        for i in 0..samples {
            let r = -3.0 + 6.0 * i as f64 / (samples - 1) as f64;
            let fs = pot.moreau_big_f(sigma, r).map_err(|e| e.to_string())?;
            c = c.max(lambda * r * r - fs);
        }
        if !c.is_finite() {
            return fail(format!("coercivity constant not finite at sigma={sigma}"));
        }
        coercivity.push(c);
    }
    if coercivity[1] > coercivity[0] + 1e-9 || coercivity[2] > coercivity[1] + 1e-9 {
        return fail(format!("coercivity constant grows as sigma drops: {coercivity:?}"));
    }

    // controlled-derivative condition on [-2,2], derivative by centered
    // finite differences with step 1e-6, uniform lower bound over sigma
    for m in [0.1, 1.0] {
        let mut worst = f64::INFINITY;
        for &sigma in &ladder {
            for i in 0..samples {
                let r = -2.0 + 4.0 * i as f64 / (samples - 1) as f64;
                let d = (eval(sigma, r + 1e-6)? - eval(sigma, r - 1e-6)?) / 2e-6;
                let v = d - m * eval(sigma, r)?.abs();
                worst = worst.min(v);
            }
        }
        if worst < -(2.0 + 4.0 * lambda) {
            return fail(format!(
                "controlled-derivative bound not sigma-uniform: min {worst} at m={m}"
            ));
        }
    }

    Ok(format!(
        "Yosida/Moreau suite holds over the sigma ladder (compact sups {:.2e}/{:.2e}/{:.2e})",
        sups[0], sups[1], sups[2]
    ))
}

fn potential_yosida() -> Check {
    yosida_moreau_suite(1.0, 10_000)
}

fn coefficient_phi() -> Check {
    let specs = [
        CoefficientSpec::constant(1.0),
        CoefficientSpec::even_quadratic(1.0, 0.5),
        CoefficientSpec::even_quadratic(1.0, -0.4),
        CoefficientSpec::general_quadratic(1.5, -0.2, 0.4),
    ];
    for spec in specs {
        let c = spec.map_err(|e| e.to_string())?;
        let (lo, hi) = c.bounds();
        if !(lo > 0.0 && hi >= lo) {
            return fail(format!("positivity bounds broken: ({lo}, {hi})"));
        }
        let eps = 1e-9;
        for x in [-2.0, -1.0, 1.0, 2.0] {
            for (name, jump) in [
                ("a", (c.a(x + eps) - c.a(x - eps)).abs()),
                ("a'", (c.a_prime(x + eps) - c.a_prime(x - eps)).abs()),
                ("a''", (c.a_second(x + eps) - c.a_second(x - eps)).abs()),
            ] {
                if jump > 1e-6 {
                    return fail(format!("{name} jump {jump:e} across r={x}"));
                }
            }
        }
        for i in 0..1000 {
            let r = -2.0 + 4.0 * i as f64 / 999.0;
            let back = c.phi_inverse(c.phi(r));
            if (back - r).abs() > 1e-10 {
                return fail(format!("phi roundtrip error {:e} at r={r}", (back - r).abs()));
            }
        }
    }
    Ok("extensions are C^2, positive, and phi roundtrips at 1e-10".into())
}

fn model_assembly() -> Check {
    let dom = Domain::unit(&[32], Bc::NoFlux).map_err(|e| e.to_string())?;
    let params = ModelParams::new(
        Mode::Fourth,
        0.0,
        0.1,
        1e-2,
        1.0,
        PotentialSpec::logarithmic(1.0, None).map_err(|e| e.to_string())?,
        CoefficientSpec::even_quadratic(1.0, 0.3).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let m = 0.2;
    let u = Field::constant(&dom, m);
    let w = Field::constant(&dom, params.potential.f(m).map_err(|e| e.to_string())?);
    let s = model::SimState::new(0.0, u, w);
    let (r1, r2) = model::residual(&s, &s, 1e-3, &params).map_err(|e| e.to_string())?;
    if r1.max_abs() > 1e-12 || r2.max_abs() > 1e-12 {
        return fail(format!(
            "steady residual nonzero: {:e}, {:e}",
            r1.max_abs(),
            r2.max_abs()
        ));
    }
    let coeff = CoefficientSpec::constant(1.0).map_err(|e| e.to_string())?;
    let f = Field::from_fn(&dom, |x| (PI * x[0]).cos());
    let ca = model::cal_a(&f, &coeff);
    let nl = grid::laplacian(&f).map(|v| -v);
    if ca.values().iter().zip(nl.values()).any(|(a, b)| a != b) {
        return fail("cal_a with a=1 differs from -Delta".into());
    }
    Ok("steady residuals vanish; cal_a reduces to -Delta for constant a".into())
}

fn stepper_conservation() -> Check {
    let dom = Domain::unit(&[64], Bc::NoFlux).map_err(|e| e.to_string())?;
    let params = ModelParams::new(
        Mode::Fourth,
        0.0,
        0.0,
        1e-2,
        1.0,
        PotentialSpec::logarithmic(3.0, None).map_err(|e| e.to_string())?,
        CoefficientSpec::constant(1.0).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let u0 = model::make_initial(
        &InitialKind::SeededNoise { mean: 0.1, amplitude: 0.2, seed: 17 },
        &dom,
    )
    .map_err(|e| e.to_string())?;
    let cfg = StepperConfig::new(2e-4, 2e-3);
    let out = stepper::run(&u0, &cfg, &params, 1).map_err(|e| e.to_string())?;
    let recs = &out.series.records;
    let m0 = recs[0].mass;
    for pair in recs.windows(2) {
        if pair[1].energy > pair[0].energy + 1e-9 * (1.0 + pair[0].energy.abs()) {
            return fail(format!(
                "energy increased {} -> {} at t={}",
                pair[0].energy, pair[1].energy, pair[1].t
            ));
        }
    }
    for r in recs {
        if (r.mass - m0).abs() > 1e-10 {
            return fail(format!("mass drift {:e} at t={}", (r.mass - m0).abs(), r.t));
        }
    }
    let res = diagnostics::energy_equality_residual(&out.series);
    if res[0].1 != 0.0 {
        return fail("energy-equality residual nonzero at t=0".into());
    }
    Ok(format!(
        "mass conserved to 1e-10 and energy monotone over {} steps",
        out.accepted_steps
    ))
}
