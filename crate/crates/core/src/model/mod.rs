//! Assembly of the chemical potential and implicit-Euler residuals for the
//! three systems, plus initial-data construction and elliptic smoothing.
//!
//! Sixth order:  `u_t - M Delta w = 0`,
//! `w = delta Delta^2 u + A(u) + f_sigma(u) - lambda u + (eps+sigma) u_t`.
//! Fourth order: same with `delta = 0` and viscosity `eps` only.
//! Phase field:  `u_t + sigma w_t - M Delta w = 0` with the viscous
//! `(eps+sigma) u_t` constitutive law and `delta = 0`.

mod initial;

pub use initial::{make_initial, smooth_initial_datum, InitialKind, BOUND_MARGIN};

use crate::energetics::{self, CoefficientSpec, EnergeticsError, PotentialSpec};
use crate::grid::{self, Field, GridError};
use crate::par;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Energetics(#[from] EnergeticsError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("initial mean {0} outside (-1, 1)")]
    MeanOutOfRange(f64),
    #[error("initial amplitude too large: max|u| = {0}")]
    AmplitudeTooLarge(f64),
}

/// Which system is being integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `delta > 0` sixth-order model; sigma adds viscosity and regularises f.
    Sixth,
    /// `delta = 0`; sigma only regularises f.
    Fourth,
    /// `delta = 0` with the `sigma w_t` term; requires `sigma > 0`.
    PhaseField,
}

/// Full parameter bundle of a run. Fields are public so degenerate
/// combinations can be built in tests; [`ModelParams::validate`] is the
/// contract the steppers and the CLI enforce.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub mode: Mode,
    pub delta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub mobility: f64,
    pub potential: PotentialSpec,
    pub coefficient: CoefficientSpec,
}

impl ModelParams {
    /// Normalises the potential's Yosida parameter to `sigma` and validates.
    pub fn new(
        mode: Mode,
        delta: f64,
        epsilon: f64,
        sigma: f64,
        mobility: f64,
        potential: PotentialSpec,
        coefficient: CoefficientSpec,
    ) -> Result<Self, ModelError> {
        let potential = potential
            .with_sigma(if sigma > 0.0 { Some(sigma) } else { None })
            .map_err(ModelError::Energetics)?;
        let params = Self { mode, delta, epsilon, sigma, mobility, potential, coefficient };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::InvalidParams(m.into()));
        if !(self.mobility > 0.0) {
            return err("mobility must be positive");
        }
        if self.delta < 0.0 || self.epsilon < 0.0 || self.sigma < 0.0 {
            return err("delta, epsilon, sigma must be nonnegative");
        }
        match self.mode {
            Mode::Sixth if !(self.delta > 0.0) => err("mode sixth requires delta > 0"),
            Mode::Fourth | Mode::PhaseField if self.delta != 0.0 => {
                err("modes fourth/phase-field require delta = 0")
            }
            Mode::PhaseField if !(self.sigma > 0.0) => err("mode phase-field requires sigma > 0"),
            _ => Ok(()),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.potential.lambda()
    }

    /// Extra viscosity contributed by sigma: present in the sixth-order and
    /// phase-field approximations, absent in the plain fourth-order system.
    pub fn sigma_visc(&self) -> f64 {
        match self.mode {
            Mode::Sixth | Mode::PhaseField => self.sigma,
            Mode::Fourth => 0.0,
        }
    }

    /// Coefficient of the `w_t` term in the conservation law.
    pub fn sigma_pf(&self) -> f64 {
        match self.mode {
            Mode::PhaseField => self.sigma,
            _ => 0.0,
        }
    }

    /// Total viscous coefficient multiplying `u_t` in the chemical potential.
    pub fn eff_viscosity(&self) -> f64 {
        self.epsilon + self.sigma_visc()
    }

    pub fn energy(&self, u: &Field) -> Result<f64, EnergeticsError> {
        energetics::energy(u, self.delta, &self.potential, &self.coefficient)
    }
}

/// State of a trajectory at one instant.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub w: Field,
}

impl SimState {
    pub fn new(t: f64, u: Field, w: Field) -> Self {
        assert!(u.same_domain(&w));
        Self { t, u, w }
    }

    /// Initial state with the constitutive `w` (no viscous part); the
    /// phase-field system instead starts from `w = 0`.
    pub fn initial(u: Field, params: &ModelParams) -> Result<Self, ModelError> {
        let w = match params.mode {
            Mode::PhaseField => Field::zeros(u.domain()),
            _ => chemical_potential(&u, &u, 1.0, params)?,
        };
        Ok(Self { t: 0.0, u, w })
    }
}

/// Quasilinear elliptic operator
/// `A(u) = -a(u) Delta u - (a'(u)/2) |grad u|^2`, pointwise.
pub fn cal_a(u: &Field, coeff: &CoefficientSpec) -> Field {
    let lap = grid::laplacian(u);
    let gsq = grid::grad_sq(u);
    let (uv, lv, gv) = (u.values(), lap.values(), gsq.values());
    let mut out = vec![0.0; uv.len()];
    par::map_into(&mut out, |i| {
        -coeff.a(uv[i]) * lv[i] - 0.5 * coeff.a_prime(uv[i]) * gv[i]
    });
    Field::from_values(u.domain(), out).expect("cal_a produced non-finite values")
}

/// Chemical potential of the implicit step `u_old -> u_new` over `tau`:
/// `delta Delta^2 u + A(u) + f_sigma(u) - lambda u + (eps + sigma_v) u_t`
/// with `u_t` the backward difference.
pub fn chemical_potential(
    u_new: &Field,
    u_old: &Field,
    tau: f64,
    params: &ModelParams,
) -> Result<Field, ModelError> {
    assert!(tau > 0.0);
    params.potential.check_range(u_new.values())?;
    let lap = grid::laplacian(u_new);
    let gsq = grid::grad_sq(u_new);
    let bih = if params.delta > 0.0 { Some(grid::laplacian(&lap)) } else { None };
    let visc = params.eff_viscosity();
    let (uv, ov, lv, gv) = (u_new.values(), u_old.values(), lap.values(), gsq.values());
    let coeff = &params.coefficient;
    let pot = &params.potential;
    let delta = params.delta;
    let mut out = vec![0.0; uv.len()];
    match &bih {
        Some(b) => {
            let bv = b.values();
            par::map_into(&mut out, |i| {
                delta * bv[i] - coeff.a(uv[i]) * lv[i] - 0.5 * coeff.a_prime(uv[i]) * gv[i]
                    + pot.f_unchecked(uv[i])
                    + visc * (uv[i] - ov[i]) / tau
            });
        }
        None => {
            par::map_into(&mut out, |i| {
                -coeff.a(uv[i]) * lv[i] - 0.5 * coeff.a_prime(uv[i]) * gv[i]
                    + pot.f_unchecked(uv[i])
                    + visc * (uv[i] - ov[i]) / tau
            });
        }
    }
    Ok(Field::from_values(u_new.domain(), out)?)
}

/// Implicit-Euler residual of one step; the root `(R1, R2) = (0, 0)`
/// defines the update.
///
/// `R1 = (u_new - u_old)/tau + sigma_pf (w_new - w_old)/tau - M Delta w_new`
/// `R2 = w_new - chemical_potential(u_new, u_old, tau)`
pub fn residual(
    state_new: &SimState,
    state_old: &SimState,
    tau: f64,
    params: &ModelParams,
) -> Result<(Field, Field), ModelError> {
    assert!(state_new.u.same_domain(&state_old.u));
    let w_mu = chemical_potential(&state_new.u, &state_old.u, tau, params)?;
    let lap_w = grid::laplacian(&state_new.w);
    let spf = params.sigma_pf();
    let m = params.mobility;
    let (un, uo, wn, wo, lw) = (
        state_new.u.values(),
        state_old.u.values(),
        state_new.w.values(),
        state_old.w.values(),
        lap_w.values(),
    );
    let mut r1 = vec![0.0; un.len()];
    par::map_into(&mut r1, |i| {
        (un[i] - uo[i]) / tau + spf * (wn[i] - wo[i]) / tau - m * lw[i]
    });
    let r2 = state_new.w.zip(&w_mu, |w, mu| w - mu);
    Ok((Field::from_values(state_new.u.domain(), r1)?, r2))
}

#[cfg(test)]
mod tests;
