//! Configuration potentials and their Yosida/Moreau regularisation.
//!
//! The potential is split as `F(r) = F0(r) - (lambda/2) r^2` with a
//! monotone dominating part `f0 = F0'`. With a Yosida parameter `sigma`
//! the monotone part is replaced by
//! `f_sigma(r) = (r - J_sigma(r)) / sigma`, where `J_sigma(r)` solves
//! `y + sigma f0(y) = r`, and `F0` by the Moreau envelope
//! `F_sigma(r) = |r - J_sigma(r)|^2 / (2 sigma) + F0(J_sigma(r))`.
//! Since `f0` is C^1 with `1 + sigma f0' > 0`, the resolvent and hence
//! `f_sigma` are C^1 without any additional mollification.

use std::sync::Arc;

use super::EnergeticsError;

const RESOLVENT_TOL: f64 = 1e-12;
const RESOLVENT_MAX_ITER: usize = 200;

/// User-supplied monotone part for potentials outside the built-in
/// families. `f0` must be nondecreasing with `f0(0) = 0` on the open
/// interval `domain` (use infinities for a global potential).
#[derive(Clone)]
pub struct CustomPotential {
    pub f0: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub f0_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub big_f0: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub domain: (f64, f64),
}

impl std::fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomPotential").field("domain", &self.domain).finish()
    }
}

/// Potential family. `Linear` covers the "custom linear f" used by the
/// dispersion checks and is recognised there.
#[derive(Debug, Clone)]
pub enum PotentialFamily {
    /// Flory-Huggins `F(r) = (1-r)ln(1-r) + (1+r)ln(1+r) - (lambda/2) r^2`
    /// on (-1,1).
    Logarithmic,
    /// `F(u) = (u+1)^2 (u^2+h0) (u-1)^2`, no domain constraint.
    SixthPolynomial { h0: f64 },
    /// `f(u) = slope * u` (with lambda = 0 this is the full f).
    Linear { slope: f64 },
    Custom(CustomPotential),
}

/// Potential family plus the concave-perturbation modulus `lambda` and the
/// Yosida parameter `sigma` (`None` = use the singular `f0` directly).
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    family: PotentialFamily,
    lambda: f64,
    sigma: Option<f64>,
}

impl PotentialSpec {
    pub fn new(
        family: PotentialFamily,
        lambda: f64,
        sigma: Option<f64>,
    ) -> Result<Self, EnergeticsError> {
        if !(lambda >= 0.0) {
            return Err(EnergeticsError::InvalidSpec("lambda must be >= 0".into()));
        }
        if let Some(s) = sigma {
            if !(s > 0.0 && s <= 1.0) {
                return Err(EnergeticsError::InvalidSpec("sigma must lie in (0, 1]".into()));
            }
        }
        let spec = Self { family, lambda, sigma };
        spec.validate_monotone()?;
        Ok(spec)
    }

    pub fn logarithmic(lambda: f64, sigma: Option<f64>) -> Result<Self, EnergeticsError> {
        Self::new(PotentialFamily::Logarithmic, lambda, sigma)
    }

    pub fn sixth_polynomial(h0: f64, lambda: f64, sigma: Option<f64>) -> Result<Self, EnergeticsError> {
        Self::new(PotentialFamily::SixthPolynomial { h0 }, lambda, sigma)
    }

    pub fn linear(slope: f64) -> Result<Self, EnergeticsError> {
        Self::new(PotentialFamily::Linear { slope }, 0.0, None)
    }

    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Same family and lambda, different Yosida parameter.
    pub fn with_sigma(&self, sigma: Option<f64>) -> Result<Self, EnergeticsError> {
        Self::new(self.family.clone(), self.lambda, sigma)
    }

    /// Slope of the full `f` when the family is linear (dispersion checks).
    pub fn linear_slope(&self) -> Option<f64> {
        match self.family {
            PotentialFamily::Linear { slope } => Some(slope - self.lambda),
            _ => None,
        }
    }

    /// True for potentials whose `f0` blows up at a finite boundary
    /// (the pointwise domain guard applies when sigma is None).
    pub fn is_singular(&self) -> bool {
        let (lo, hi) = self.f0_domain();
        lo.is_finite() || hi.is_finite()
    }

    /// Open domain of the monotone part.
    fn f0_domain(&self) -> (f64, f64) {
        match &self.family {
            PotentialFamily::Logarithmic => (-1.0, 1.0),
            PotentialFamily::SixthPolynomial { .. } | PotentialFamily::Linear { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            PotentialFamily::Custom(c) => c.domain,
        }
    }

    fn validate_monotone(&self) -> Result<(), EnergeticsError> {
        let probe = |spec: &Self, lo: f64, hi: f64| -> Result<(), EnergeticsError> {
            let n = 2001;
            for i in 0..n {
                let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let d = spec.f0_prime_raw(r);
                if d < -1e-9 {
                    return Err(EnergeticsError::InvalidSpec(format!(
                        "monotone part not nondecreasing: f0'({r}) = {d}; increase lambda"
                    )));
                }
            }
            Ok(())
        };
        match &self.family {
            PotentialFamily::Logarithmic => Ok(()),
            PotentialFamily::Linear { slope } => {
                if slope + self.lambda < 0.0 {
                    Err(EnergeticsError::InvalidSpec(
                        "linear slope + lambda must be >= 0".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            PotentialFamily::SixthPolynomial { .. } => probe(self, -3.0, 3.0),
            PotentialFamily::Custom(c) => {
                let lo = c.domain.0.max(-3.0);
                let hi = c.domain.1.min(3.0);
                let pad = 1e-9 * (hi - lo).abs().max(1.0);
                probe(self, lo + pad, hi - pad)
            }
        }
    }

    // ---- monotone part -------------------------------------------------

    fn inside(&self, r: f64) -> bool {
        let (lo, hi) = self.f0_domain();
        r > lo && r < hi
    }

    /// `f0(r)`; caller guarantees `r` inside the domain.
    fn f0_raw(&self, r: f64) -> f64 {
        match &self.family {
            PotentialFamily::Logarithmic => 2.0 * r.atanh(),
            PotentialFamily::SixthPolynomial { h0 } => {
                // F' of (u^2-1)^2 (u^2 + h0), plus lambda r
                2.0 * r * (r * r - 1.0) * (3.0 * r * r + 2.0 * h0 - 1.0) + self.lambda * r
            }
            PotentialFamily::Linear { slope } => (slope + self.lambda) * r,
            PotentialFamily::Custom(c) => (c.f0)(r),
        }
    }

    fn f0_prime_raw(&self, r: f64) -> f64 {
        match &self.family {
            PotentialFamily::Logarithmic => 2.0 / (1.0 - r * r),
            PotentialFamily::SixthPolynomial { h0 } => {
                30.0 * r.powi(4) + 12.0 * (h0 - 2.0) * r * r + 2.0 * (1.0 - 2.0 * h0)
                    + self.lambda
            }
            PotentialFamily::Linear { slope } => slope + self.lambda,
            PotentialFamily::Custom(c) => (c.f0_prime)(r),
        }
    }

    fn big_f0_raw(&self, r: f64) -> f64 {
        match &self.family {
            PotentialFamily::Logarithmic => xlnx(1.0 - r) + xlnx(1.0 + r),
            PotentialFamily::SixthPolynomial { h0 } => {
                let q = r * r - 1.0;
                q * q * (r * r + h0) + 0.5 * self.lambda * r * r
            }
            PotentialFamily::Linear { slope } => 0.5 * (slope + self.lambda) * r * r,
            PotentialFamily::Custom(c) => (c.big_f0)(r),
        }
    }

    // ---- Yosida / Moreau -----------------------------------------------

    /// Resolvent `J_sigma(r)`: the solution of `y + sigma f0(y) = r`.
    /// For the logarithmic family the equation is solved in the variable
    /// `p = f0(y)` (so `y = tanh(p/2)`), which stays well-conditioned when
    /// the resolvent is exponentially close to +-1.
    fn resolvent(&self, sigma: f64, r: f64) -> Result<Resolvent, EnergeticsError> {
        match &self.family {
            PotentialFamily::Logarithmic => log_resolvent(sigma, r),
            PotentialFamily::Linear { slope } => {
                let s = slope + self.lambda;
                let y = r / (1.0 + sigma * s);
                Ok(Resolvent { y, f0_at_y: s * y })
            }
            _ => self.generic_resolvent(sigma, r),
        }
    }

    fn generic_resolvent(&self, sigma: f64, r: f64) -> Result<Resolvent, EnergeticsError> {
        let (dlo, dhi) = self.f0_domain();
        // bracket forced inside the open domain of f0
        let (mut lo, mut hi) = if dlo.is_finite() {
            let pad = 1e-15 * (dhi - dlo);
            (dlo + pad, dhi - pad)
        } else {
            (r.min(0.0) - 1.0, r.max(0.0) + 1.0)
        };
        let g = |y: f64| y + sigma * self.f0_raw(y) - r;
        let mut glo = g(lo);
        let mut ghi = g(hi);
        if glo > 0.0 || ghi < 0.0 {
            return Err(EnergeticsError::ResolventFailure { r, sigma });
        }
        let mut y = r.clamp(lo, hi);
        for _ in 0..RESOLVENT_MAX_ITER {
            let gy = g(y);
            if gy.abs() <= RESOLVENT_TOL {
                return Ok(Resolvent { y, f0_at_y: self.f0_raw(y) });
            }
            if gy > 0.0 {
                hi = y;
                ghi = gy;
            } else {
                lo = y;
                glo = gy;
            }
            let dg = 1.0 + sigma * self.f0_prime_raw(y);
            let newton = y - gy / dg;
            y = if dg.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let _ = (glo, ghi);
        }
        Err(EnergeticsError::ResolventFailure { r, sigma })
    }

    /// Yosida approximation `f_sigma(r) = (r - J_sigma(r)) / sigma`.
    pub fn yosida_f(&self, sigma: f64, r: f64) -> Result<f64, EnergeticsError> {
        Ok(self.resolvent(sigma, r)?.f0_at_y)
    }

    /// Moreau envelope
    /// `F_sigma(r) = |r - J|^2/(2 sigma) + F0(J)`, `J = J_sigma(r)`.
    pub fn moreau_big_f(&self, sigma: f64, r: f64) -> Result<f64, EnergeticsError> {
        let res = self.resolvent(sigma, r)?;
        let gap = sigma * res.f0_at_y; // r - J
        Ok(gap * gap / (2.0 * sigma) + self.big_f0_at(&res))
    }

    fn big_f0_at(&self, res: &Resolvent) -> f64 {
        match &self.family {
            // evaluate through stable complements of tanh(p/2)
            PotentialFamily::Logarithmic => {
                let p = res.f0_at_y;
                let e = (-p.abs()).exp();
                let near = 2.0 * e / (1.0 + e); // 1 - |y|
                let far = 2.0 / (1.0 + e); // 1 + |y|
                xlnx(near) + xlnx(far)
            }
            _ => self.big_f0_raw(res.y),
        }
    }

    fn yosida_f_prime(&self, sigma: f64, r: f64) -> Result<f64, EnergeticsError> {
        match &self.family {
            PotentialFamily::Logarithmic => {
                let p = self.resolvent(sigma, r)?.f0_at_y;
                // 1/f0'(J) = (1 - J^2)/2 = sech^2(p/2)/2
                let s = sech(0.5 * p);
                Ok(1.0 / (sigma + 0.5 * s * s))
            }
            _ => {
                let res = self.resolvent(sigma, r)?;
                let d = self.f0_prime_raw(res.y);
                Ok(d / (1.0 + sigma * d))
            }
        }
    }

    // ---- public evaluation (spec operations) -----------------------------

    /// Err when the unregularised monotone part is evaluated outside its
    /// open domain (e.g. |r| >= 1 for the logarithmic family).
    fn guard(&self, r: f64) -> Result<(), EnergeticsError> {
        if self.sigma.is_none() && !self.inside(r) {
            return Err(EnergeticsError::DomainViolation(r));
        }
        Ok(())
    }

    /// Full potential `F(r)` (Moreau-regularised when sigma is set),
    /// including the `-(lambda/2) r^2` perturbation.
    pub fn big_f(&self, r: f64) -> Result<f64, EnergeticsError> {
        self.guard(r)?;
        let f0 = match self.sigma {
            None => self.big_f0_raw(r),
            Some(s) => self.moreau_big_f(s, r)?,
        };
        Ok(f0 - 0.5 * self.lambda * r * r)
    }

    /// Full derivative `f(r) = f0_or_sigma(r) - lambda r`.
    pub fn f(&self, r: f64) -> Result<f64, EnergeticsError> {
        self.guard(r)?;
        let f0 = match self.sigma {
            None => self.f0_raw(r),
            Some(s) => self.yosida_f(s, r)?,
        };
        Ok(f0 - self.lambda * r)
    }

    /// `f'(r)`.
    pub fn f_prime(&self, r: f64) -> Result<f64, EnergeticsError> {
        self.guard(r)?;
        let d0 = match self.sigma {
            None => self.f0_prime_raw(r),
            Some(s) => self.yosida_f_prime(s, r)?,
        };
        Ok(d0 - self.lambda)
    }

    /// Monotone part `f0(r)` without regularisation (domain checked).
    pub fn f0(&self, r: f64) -> Result<f64, EnergeticsError> {
        if !self.inside(r) {
            return Err(EnergeticsError::DomainViolation(r));
        }
        Ok(self.f0_raw(r))
    }

    /// Fast path used by field-wide loops after [`Self::check_range`].
    pub(crate) fn big_f_unchecked(&self, r: f64) -> f64 {
        match self.sigma {
            None => self.big_f0_raw(r) - 0.5 * self.lambda * r * r,
            Some(s) => match self.moreau_big_f(s, r) {
                Ok(v) => v - 0.5 * self.lambda * r * r,
                Err(_) => f64::NAN,
            },
        }
    }

    pub(crate) fn f_unchecked(&self, r: f64) -> f64 {
        match self.sigma {
            None => self.f0_raw(r) - self.lambda * r,
            Some(s) => match self.yosida_f(s, r) {
                Ok(v) => v - self.lambda * r,
                Err(_) => f64::NAN,
            },
        }
    }

    /// Verify every value lies inside the potential domain when running
    /// unregularised; cheap no-op otherwise.
    pub fn check_range(&self, values: &[f64]) -> Result<(), EnergeticsError> {
        if self.sigma.is_some() {
            return Ok(());
        }
        let (lo, hi) = self.f0_domain();
        if lo.is_finite() || hi.is_finite() {
            for &v in values {
                if !(v > lo && v < hi) {
                    return Err(EnergeticsError::DomainViolation(v));
                }
            }
        }
        Ok(())
    }
}

struct Resolvent {
    /// J_sigma(r)
    y: f64,
    /// f0(J_sigma(r)) = (r - J)/sigma = f_sigma(r)
    f0_at_y: f64,
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Solve `tanh(p/2) + sigma p = r` for `p = f0(J_sigma(r))`; monotone in p
/// with derivative >= sigma, so safeguarded Newton cannot fail.
fn log_resolvent(sigma: f64, r: f64) -> Result<Resolvent, EnergeticsError> {
    let g = |p: f64| (0.5 * p).tanh() + sigma * p - r;
    let (mut lo, mut hi) = ((r - 1.0) / sigma, (r + 1.0) / sigma);
    let mut p = r / (sigma + 0.5);
    for _ in 0..RESOLVENT_MAX_ITER {
        let gp = g(p);
        if gp.abs() <= RESOLVENT_TOL {
            return Ok(Resolvent { y: (0.5 * p).tanh(), f0_at_y: p });
        }
        if gp > 0.0 {
            hi = p;
        } else {
            lo = p;
        }
        let s = sech(0.5 * p);
        let dg = 0.5 * s * s + sigma;
        let newton = p - gp / dg;
        p = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(EnergeticsError::ResolventFailure { r, sigma })
}
