//! Gradient-energy coefficient `a(u)` and the transformed variable
//! `phi(s) = int_0^s sqrt(a)`.
//!
//! The core polynomial is only physically meaningful on [-1,1]; outside it
//! the coefficient is extended so that `a` is constant beyond +-2 with two
//! continuous derivatives everywhere (quintic Hermite blend on [1,2] and
//! [-2,-1]). The plateau values are the core values at +-1, which keeps
//! concave cores positive; positivity is verified by dense sampling either
//! way.

use super::EnergeticsError;

const SAMPLE_RANGE: (f64, f64) = (-2.5, 2.5);
const SAMPLE_COUNT: usize = 10_000;
const PHI_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffFamily {
    /// `a = c`.
    Constant { c: f64 },
    /// `a = g0 + g2 u^2`.
    EvenQuadratic { g0: f64, g2: f64 },
    /// `a = a0 + a1 u + a2 u^2`.
    GeneralQuadratic { a0: f64, a1: f64, a2: f64 },
}

impl CoeffFamily {
    fn core(&self, r: f64) -> f64 {
        match *self {
            CoeffFamily::Constant { c } => c,
            CoeffFamily::EvenQuadratic { g0, g2 } => g0 + g2 * r * r,
            CoeffFamily::GeneralQuadratic { a0, a1, a2 } => a0 + (a1 + a2 * r) * r,
        }
    }

    fn core_d1(&self, r: f64) -> f64 {
        match *self {
            CoeffFamily::Constant { .. } => 0.0,
            CoeffFamily::EvenQuadratic { g2, .. } => 2.0 * g2 * r,
            CoeffFamily::GeneralQuadratic { a1, a2, .. } => a1 + 2.0 * a2 * r,
        }
    }

    fn core_d2(&self) -> f64 {
        match *self {
            CoeffFamily::Constant { .. } => 0.0,
            CoeffFamily::EvenQuadratic { g2, .. } => 2.0 * g2,
            CoeffFamily::GeneralQuadratic { a2, .. } => 2.0 * a2,
        }
    }
}

/// Quintic `q(s) = sum c_i s^i` on s in [0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
struct Quintic {
    c: [f64; 6],
}

impl Quintic {
    /// Hermite data (value, first, second derivative) at s=0 and s=1.
    fn hermite(v0: f64, d0: f64, s0: f64, v1: f64, d1: f64, s1: f64) -> Self {
        let c0 = v0;
        let c1 = d0;
        let c2 = 0.5 * s0;
        // remaining three coefficients from the s=1 conditions
        let a = v1 - c0 - c1 - c2;
        let b = d1 - c1 - 2.0 * c2;
        let c = s1 - 2.0 * c2;
        let c3 = 10.0 * a - 4.0 * b + 0.5 * c;
        let c4 = -15.0 * a + 7.0 * b - c;
        let c5 = 6.0 * a - 3.0 * b + 0.5 * c;
        Self { c: [c0, c1, c2, c3, c4, c5] }
    }

    fn eval(&self, s: f64) -> f64 {
        let c = &self.c;
        ((((c[5] * s + c[4]) * s + c[3]) * s + c[2]) * s + c[1]) * s + c[0]
    }

    fn d1(&self, s: f64) -> f64 {
        let c = &self.c;
        (((5.0 * c[5] * s + 4.0 * c[4]) * s + 3.0 * c[3]) * s + 2.0 * c[2]) * s + c[1]
    }

    fn d2(&self, s: f64) -> f64 {
        let c = &self.c;
        ((20.0 * c[5] * s + 12.0 * c[4]) * s + 6.0 * c[3]) * s + 2.0 * c[2]
    }
}

/// Gradient coefficient with its C^2 flat extension, positivity bounds and
/// the precomputed `phi` table. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CoefficientSpec {
    family: CoeffFamily,
    right: Quintic,
    left: Quintic,
    a_plus: f64,
    a_minus: f64,
    a_low: f64,
    a_high: f64,
    phi_nodes: Vec<f64>,
    phi_zero: f64,
    phi_step: f64,
}

impl CoefficientSpec {
    pub fn new(family: CoeffFamily) -> Result<Self, EnergeticsError> {
        let a_plus = family.core(1.0);
        let a_minus = family.core(-1.0);
        let right = Quintic::hermite(
            family.core(1.0),
            family.core_d1(1.0),
            family.core_d2(),
            a_plus,
            0.0,
            0.0,
        );
        // left blend parametrised by t = -1 - r, t in [0,1]
        let left = Quintic::hermite(
            family.core(-1.0),
            -family.core_d1(-1.0),
            family.core_d2(),
            a_minus,
            0.0,
            0.0,
        );
        let mut spec = Self {
            family,
            right,
            left,
            a_plus,
            a_minus,
            a_low: 0.0,
            a_high: 0.0,
            phi_nodes: Vec::new(),
            phi_zero: 0.0,
            phi_step: 0.0,
        };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_at, _hi_at) = (0.0, 0.0);
        for i in 0..SAMPLE_COUNT {
            let r = SAMPLE_RANGE.0
                + (SAMPLE_RANGE.1 - SAMPLE_RANGE.0) * i as f64 / (SAMPLE_COUNT - 1) as f64;
            let v = spec.a(r);
            if v < lo {
                lo = v;
                lo_at = r;
            }
            hi = hi.max(v);
        }
        if !(lo > 0.0) {
            return Err(EnergeticsError::NonPositiveCoefficient { at: lo_at, value: lo });
        }
        spec.a_low = lo;
        spec.a_high = hi;
        spec.build_phi_table();
        Ok(spec)
    }

    pub fn constant(c: f64) -> Result<Self, EnergeticsError> {
        Self::new(CoeffFamily::Constant { c })
    }

    pub fn even_quadratic(g0: f64, g2: f64) -> Result<Self, EnergeticsError> {
        Self::new(CoeffFamily::EvenQuadratic { g0, g2 })
    }

    pub fn general_quadratic(a0: f64, a1: f64, a2: f64) -> Result<Self, EnergeticsError> {
        Self::new(CoeffFamily::GeneralQuadratic { a0, a1, a2 })
    }

    pub fn family(&self) -> CoeffFamily {
        self.family
    }

    /// Computed positivity bounds over the sampled extension range.
    pub fn bounds(&self) -> (f64, f64) {
        (self.a_low, self.a_high)
    }

    pub fn a(&self, r: f64) -> f64 {
        if r.abs() <= 1.0 {
            self.family.core(r)
        } else if r >= 2.0 {
            self.a_plus
        } else if r <= -2.0 {
            self.a_minus
        } else if r > 0.0 {
            self.right.eval(r - 1.0)
        } else {
            self.left.eval(-1.0 - r)
        }
    }

    pub fn a_prime(&self, r: f64) -> f64 {
        if r.abs() <= 1.0 {
            self.family.core_d1(r)
        } else if r.abs() >= 2.0 {
            0.0
        } else if r > 0.0 {
            self.right.d1(r - 1.0)
        } else {
            -self.left.d1(-1.0 - r)
        }
    }

    pub fn a_second(&self, r: f64) -> f64 {
        if r.abs() <= 1.0 {
            self.family.core_d2()
        } else if r.abs() >= 2.0 {
            0.0
        } else if r > 0.0 {
            self.right.d2(r - 1.0)
        } else {
            self.left.d2(-1.0 - r)
        }
    }

    pub fn sqrt_a(&self, r: f64) -> f64 {
        self.a(r).sqrt()
    }

    // ---- phi transform ---------------------------------------------------

    fn build_phi_table(&mut self) {
        let (lo, hi) = SAMPLE_RANGE;
        let step = (hi - lo) / (PHI_NODES - 1) as f64;
        let mut nodes = vec![0.0; PHI_NODES];
        let mut acc = 0.0;
        for i in 1..PHI_NODES {
            let a = lo + (i - 1) as f64 * step;
            acc += adaptive_simpson(&|r| self.sqrt_a(r), a, a + step, 1e-15, 24);
            nodes[i] = acc;
        }
        self.phi_nodes = nodes;
        self.phi_step = step;
        self.phi_zero = 0.0;
        self.phi_zero = self.phi_raw(0.0);
    }

    /// Cumulative table interpolated with a 4-point Lagrange cubic,
    /// linear continuation with slope sqrt(a_pm) beyond the table.
    fn phi_raw(&self, s: f64) -> f64 {
        let (lo, hi) = SAMPLE_RANGE;
        if s < lo {
            return self.phi_nodes[0] + self.a_minus.sqrt() * (s - lo);
        }
        if s > hi {
            return self.phi_nodes[PHI_NODES - 1] + self.a_plus.sqrt() * (s - hi);
        }
        let x = (s - lo) / self.phi_step;
        let i = (x.floor() as usize).clamp(1, PHI_NODES - 3);
        let t = x - i as f64; // in [-1, 2] near edges, else [0, 1]
        let f = [
            self.phi_nodes[i - 1],
            self.phi_nodes[i],
            self.phi_nodes[i + 1],
            self.phi_nodes[i + 2],
        ];
        // Lagrange cubic on nodes -1, 0, 1, 2
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
    }

    /// `phi(s) = int_0^s sqrt(a(r)) dr`.
    pub fn phi(&self, s: f64) -> f64 {
        self.phi_raw(s) - self.phi_zero
    }

    /// Inverse transform: Newton on the monotone table, bisection-guarded.
    pub fn phi_inverse(&self, y: f64) -> f64 {
        let (lo, hi) = SAMPLE_RANGE;
        let ylo = self.phi(lo);
        let yhi = self.phi(hi);
        if y <= ylo {
            return lo + (y - ylo) / self.a_minus.sqrt();
        }
        if y >= yhi {
            return hi + (y - yhi) / self.a_plus.sqrt();
        }
        let (mut blo, mut bhi) = (lo, hi);
        let mut s = lo + (hi - lo) * (y - ylo) / (yhi - ylo);
        for _ in 0..100 {
            let g = self.phi(s) - y;
            if g.abs() <= 1e-12 {
                return s;
            }
            if g > 0.0 {
                bhi = s;
            } else {
                blo = s;
            }
            let newton = s - g / self.sqrt_a(s);
            s = if newton > blo && newton < bhi { newton } else { 0.5 * (blo + bhi) };
        }
        s
    }
}

/// Plain recursive adaptive Simpson with absolute tolerance.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, m, fm, whole, tol, depth)
}
