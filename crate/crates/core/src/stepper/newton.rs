//! Matrix-free Newton-Krylov solve of one implicit-Euler step.
//!
//! The unknown is the concatenated pair x = (u, w). Jacobian action is a
//! directional finite difference of the residual; the linear solves use
//! restarted GMRES with a right preconditioner that inverts the
//! constant-coefficient part of the step operator per transform mode
//! (2x2 block per wave number).

use crate::grid::transform::DomainTransforms;
use crate::grid::Field;
use crate::model::{self, ModelParams, SimState};
use crate::par;
use crate::stepper::StepperConfig;

const FD_EPS: f64 = 1e-7;
const LINE_SEARCH_MAX: usize = 8;
const GMRES_RESTART: usize = 40;

pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub krylov_iters: usize,
}

#[derive(Debug)]
pub(crate) enum SolveFailure {
    /// A pointwise iterate crossed the singular-potential guard.
    GuardTrip,
    /// Newton stalled or hit its iteration cap above tolerance.
    NoConvergence { last_residual: f64 },
}

enum EvalAbort {
    Guard,
    NonFinite,
}

struct System<'a> {
    old: &'a SimState,
    tau: f64,
    params: &'a ModelParams,
    guard_active: bool,
    n: usize,
    sqrt_vol: f64,
}

impl<'a> System<'a> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, EvalAbort> {
        let n = self.n;
        let dom = self.old.u.domain();
        if self.guard_active {
            for &v in &x[..n] {
                if v.abs() >= 1.0 - 1e-12 {
                    return Err(EvalAbort::Guard);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EvalAbort::NonFinite);
        }
        let u = Field::from_values(dom, x[..n].to_vec()).map_err(|_| EvalAbort::NonFinite)?;
        let w = Field::from_values(dom, x[n..].to_vec()).map_err(|_| EvalAbort::NonFinite)?;
        let state = SimState::new(self.old.t + self.tau, u, w);
        let (r1, r2) = model::residual(&state, self.old, self.tau, self.params).map_err(|e| {
            match e {
                // only reachable with the guard disabled
                model::ModelError::Energetics(_) => EvalAbort::Guard,
                _ => EvalAbort::NonFinite,
            }
        })?;
        let mut out = Vec::with_capacity(2 * n);
        out.extend_from_slice(r1.values());
        out.extend_from_slice(r2.values());
        if out.iter().any(|v| !v.is_finite()) {
            return Err(EvalAbort::NonFinite);
        }
        Ok(out)
    }

    /// Combined discrete L2 norm of (R1, R2).
    fn norm(&self, r: &[f64]) -> f64 {
        (par::sum(r.len(), |i| r[i] * r[i])).sqrt() * self.sqrt_vol
    }
}

/// Constant-coefficient preconditioner: per transform mode kappa solve
///   [ 1/tau              sigma_pf/tau + M kappa ] [du]   [r1]
///   [ -(d k^2 + a0 k + c0)        1             ] [dw] = [r2]
struct BlockPreconditioner<'a> {
    tr: &'a DomainTransforms,
    tau: f64,
    sigma_pf: f64,
    mobility: f64,
    delta: f64,
    a0: f64,
    c0: f64,
}

impl<'a> BlockPreconditioner<'a> {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len() / 2;
        let dom = self.tr.domain();
        let r1 = Field::from_values(dom, r[..n].to_vec()).expect("finite rhs");
        let r2 = Field::from_values(dom, r[n..].to_vec()).expect("finite rhs");
        let mut c1 = self.tr.forward(&r1);
        let mut c2 = self.tr.forward(&r2);
        for ((a, b), &k) in c1.iter_mut().zip(c2.iter_mut()).zip(self.tr.kappa()) {
            let coupling = self.sigma_pf / self.tau + self.mobility * k;
            let bk = (self.delta * k + self.a0) * k + self.c0;
            let det = 1.0 / self.tau + coupling * bk;
            let du = (*a - coupling * *b) / det;
            let dw = *b + bk * du;
            *a = du;
            *b = dw;
        }
        let du = self.tr.inverse(c1);
        let dw = self.tr.inverse(c2);
        let mut out = Vec::with_capacity(2 * n);
        out.extend_from_slice(du.values());
        out.extend_from_slice(dw.values());
        out
    }
}

pub(crate) fn solve_step(
    old: &SimState,
    tau: f64,
    params: &ModelParams,
    cfg: &StepperConfig,
    tr: &DomainTransforms,
) -> Result<NewtonOutcome, SolveFailure> {
    let n = old.u.len();
    let sys = System {
        old,
        tau,
        params,
        guard_active: cfg.domain_guard && params.sigma == 0.0 && params.potential.is_singular(),
        n,
        sqrt_vol: old.u.domain().cell_volume().sqrt(),
    };

    // mean-state linearisation for the preconditioner
    let u_mean = crate::grid::mean(&old.u);
    let f_slope = params.potential.f_prime(u_mean).unwrap_or(0.0).max(0.0);
    let precond = BlockPreconditioner {
        tr,
        tau,
        sigma_pf: params.sigma_pf(),
        mobility: params.mobility,
        delta: params.delta,
        a0: params.coefficient.a(u_mean),
        c0: f_slope + params.eff_viscosity() / tau,
    };

    let mut x = Vec::with_capacity(2 * n);
    x.extend_from_slice(old.u.values());
    x.extend_from_slice(old.w.values());

    let mut f = match sys.residual(&x) {
        Ok(f) => f,
        Err(EvalAbort::Guard) => return Err(SolveFailure::GuardTrip),
        Err(EvalAbort::NonFinite) => {
            return Err(SolveFailure::NoConvergence { last_residual: f64::INFINITY })
        }
    };
    let mut fnorm = sys.norm(&f);
    let mut krylov_total = 0;

    for it in 0..cfg.newton_max {
        if fnorm <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                x,
                residual_norm: fnorm,
                newton_iters: it,
                krylov_iters: krylov_total,
            });
        }
        let xnorm = euclid(&x);
        let apply_jac = |v: &[f64]| -> Result<Vec<f64>, EvalAbort> {
            let vnorm = euclid(v);
            if vnorm == 0.0 {
                return Ok(vec![0.0; v.len()]);
            }
            let eps = FD_EPS * (1.0 + xnorm) / vnorm;
            let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + eps * b).collect();
            let fp = sys.residual(&xp)?;
            Ok(fp.iter().zip(&f).map(|(a, b)| (a - b) / eps).collect())
        };
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let (dx, iters) = match gmres(
            &apply_jac,
            |r| precond.apply(r),
            &rhs,
            cfg.krylov_tol,
            cfg.krylov_max,
        ) {
            Ok(res) => res,
            Err(EvalAbort::Guard) => return Err(SolveFailure::GuardTrip),
            Err(EvalAbort::NonFinite) => {
                return Err(SolveFailure::NoConvergence { last_residual: fnorm })
            }
        };
        krylov_total += iters;

        // backtracking line search on the residual norm
        let mut alpha = 1.0;
        let mut advanced = false;
        for _ in 0..LINE_SEARCH_MAX {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + alpha * b).collect();
            match sys.residual(&xt) {
                Ok(ft) => {
                    let fnt = sys.norm(&ft);
                    if fnt <= (1.0 - 1e-4 * alpha) * fnorm || fnt <= cfg.newton_tol {
                        x = xt;
                        f = ft;
                        fnorm = fnt;
                        advanced = true;
                        break;
                    }
                }
                Err(EvalAbort::Guard) => {
                    if alpha == 1.0 && it == 0 {
                        // the very first full step left the domain: treat as
                        // a guard trip so the caller shrinks tau
                        return Err(SolveFailure::GuardTrip);
                    }
                }
                Err(EvalAbort::NonFinite) => {}
            }
            alpha *= 0.5;
        }
        if !advanced {
            return Err(SolveFailure::NoConvergence { last_residual: fnorm });
        }
    }
    if fnorm <= cfg.newton_tol {
        return Ok(NewtonOutcome {
            x,
            residual_norm: fnorm,
            newton_iters: cfg.newton_max,
            krylov_iters: krylov_total,
        });
    }
    Err(SolveFailure::NoConvergence { last_residual: fnorm })
}

fn euclid(v: &[f64]) -> f64 {
    par::sum(v.len(), |i| v[i] * v[i]).sqrt()
}

/// Restarted GMRES with right preconditioning; returns the best iterate and
/// the number of inner iterations spent. Unconverged results are returned
/// as-is (the Newton line search decides whether they are useful).
fn gmres<J, P>(
    apply_jac: &J,
    precond: P,
    b: &[f64],
    tol_rel: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize), EvalAbort>
where
    J: Fn(&[f64]) -> Result<Vec<f64>, EvalAbort>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = euclid(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let target = tol_rel * bnorm;
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let mut total = 0;

    while total < max_iters {
        let beta = euclid(&r);
        if beta <= target {
            break;
        }
        let m = GMRES_RESTART.min(max_iters - total);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        let mut breakdown = false;

        for k in 0..m {
            total += 1;
            let z = precond(&basis[k]);
            let mut w = apply_jac(&z)?;
            // modified Gram-Schmidt
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hk1 = euclid(&w);
            // accumulated Givens rotations on the new column
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(hk1);
            if denom == 0.0 {
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = hk1 / denom;
            h[k][k] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if hk1 == 0.0 {
                breakdown = true; // exact invariant subspace
                break;
            }
            basis.push(w.iter().map(|v| v / hk1).collect());
            if g[k + 1].abs() <= target {
                break;
            }
        }

        if k_used > 0 {
            // back substitution and solution update
            let mut y = vec![0.0f64; k_used];
            for i in (0..k_used).rev() {
                let mut s = g[i];
                for (j, yj) in y.iter().enumerate().take(k_used).skip(i + 1) {
                    s -= h[i][j] * yj;
                }
                y[i] = s / h[i][i];
            }
            let mut update = vec![0.0f64; n];
            for (j, yj) in y.iter().enumerate() {
                for (ui, vi) in update.iter_mut().zip(&basis[j]) {
                    *ui += yj * vi;
                }
            }
            let z = precond(&update);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += zi;
            }
        } else {
            break;
        }

        if breakdown {
            break;
        }
        // true residual for convergence check / next restart cycle
        let ax = apply_jac(&x)?;
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
    Ok((x, total))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum(a.len(), |i| a[i] * b[i])
}
