//! Structured-grid domains, fields, and the discrete differential operators
//! with the model's boundary conditions.
//!
//! No-flux boundaries are realised by mirror-symmetric ghost values at the
//! faces (even reflection), which enforces a vanishing discrete normal
//! derivative for the field itself and, applied again to the intermediate
//! Laplacian, for `Delta u` as well. Periodic boundaries wrap indices.
//! All operators are pure: inputs are untouched and a fresh field is
//! returned.

pub mod transform;

use std::sync::Arc;

use crate::par;

/// Boundary-condition mode of a [`Domain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    /// Mass isolation: `d_n u = d_n w = d_n Delta u = 0` via ghost mirroring.
    NoFlux,
    /// Index wrap-around in every axis.
    Periodic,
}

/// Errors from grid-level operations.
#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("domain must have 1..=3 axes with >= 4 cells each and positive lengths")]
    InvalidDomain,
    #[error("field requires mean zero: |mean| = {mean:e} exceeds bound {bound:e}")]
    NonZeroMean { mean: f64, bound: f64 },
    #[error("fields are bound to different domains")]
    DomainMismatch,
    #[error("field contains a non-finite value at cell {0}")]
    NonFinite(usize),
}

/// Uniform tensor grid on a box, cell-centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dim: usize,
    cells: [usize; 3],
    lengths: [f64; 3],
    spacing: [f64; 3],
    bc: Bc,
}

impl Domain {
    /// Build a domain from per-axis cell counts and physical extents.
    /// Unused axes are padded with a single cell of unit length.
    pub fn new(cells: &[usize], lengths: &[f64], bc: Bc) -> Result<Arc<Self>, GridError> {
        let dim = cells.len();
        if dim == 0 || dim > 3 || lengths.len() != dim {
            return Err(GridError::InvalidDomain);
        }
        let mut c = [1usize; 3];
        let mut l = [1.0f64; 3];
        let mut h = [1.0f64; 3];
        for a in 0..dim {
            if cells[a] < 4 || !(lengths[a] > 0.0) {
                return Err(GridError::InvalidDomain);
            }
            c[a] = cells[a];
            l[a] = lengths[a];
            h[a] = lengths[a] / cells[a] as f64;
        }
        Ok(Arc::new(Self { dim, cells: c, lengths: l, spacing: h, bc }))
    }

    /// Unit box shortcut used all over the tests.
    pub fn unit(cells: &[usize], bc: Bc) -> Result<Arc<Self>, GridError> {
        let lengths = vec![1.0; cells.len()];
        Self::new(cells, &lengths, bc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Per-axis cell counts (length = `dim`).
    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `prod(h)`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Measure of the box.
    pub fn volume(&self) -> f64 {
        self.lengths[0] * self.lengths[1] * self.lengths[2]
    }

    #[inline]
    fn decompose(&self, idx: usize) -> [usize; 3] {
        let i2 = idx % self.cells[2];
        let rest = idx / self.cells[2];
        let i1 = rest % self.cells[1];
        let i0 = rest / self.cells[1];
        [i0, i1, i2]
    }

    #[inline]
    fn compose(&self, c: [usize; 3]) -> usize {
        (c[0] * self.cells[1] + c[1]) * self.cells[2] + c[2]
    }

    /// Index of the neighbour of `coords` shifted by `off` along `axis`,
    /// applying the ghost rule of the boundary mode.
    #[inline]
    fn shifted(&self, mut coords: [usize; 3], axis: usize, off: i64) -> usize {
        let n = self.cells[axis] as i64;
        let mut i = coords[axis] as i64 + off;
        match self.bc {
            Bc::Periodic => {
                i = i.rem_euclid(n);
            }
            Bc::NoFlux => {
                // even reflection about the faces; handles corners by
                // composing per-axis reflections
                while i < 0 || i >= n {
                    if i < 0 {
                        i = -1 - i;
                    } else {
                        i = 2 * n - 1 - i;
                    }
                }
            }
        }
        coords[axis] = i as usize;
        self.compose(coords)
    }

    /// Physical coordinates of the cell center.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let c = self.decompose(idx);
        let mut x = [0.0; 3];
        for a in 0..3 {
            x[a] = (c[a] as f64 + 0.5) * self.spacing[a];
        }
        x
    }
}

/// Scalar grid function bound to a [`Domain`]; values row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl Field {
    pub fn constant(domain: &Arc<Domain>, value: f64) -> Self {
        Self { domain: domain.clone(), values: vec![value; domain.len()] }
    }

    pub fn zeros(domain: &Arc<Domain>) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Build from a function of the cell-center coordinates.
    pub fn from_fn<F: Fn([f64; 3]) -> f64>(domain: &Arc<Domain>, f: F) -> Self {
        let values = (0..domain.len()).map(|i| f(domain.cell_center(i))).collect();
        Self { domain: domain.clone(), values }
    }

    /// Adopt raw values; fails on length mismatch or non-finite entries.
    pub fn from_values(domain: &Arc<Domain>, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != domain.len() {
            return Err(GridError::DomainMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { domain: domain.clone(), values })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_domain(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    /// Err if any cell is NaN or infinite.
    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(GridError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise unary map.
    pub fn map<F: Fn(f64) -> f64 + Sync + Send>(&self, f: F) -> Field {
        let mut out = vec![0.0; self.values.len()];
        let v = &self.values;
        par::map_into(&mut out, |i| f(v[i]));
        Field { domain: self.domain.clone(), values: out }
    }

    /// Pointwise binary map; panics if domains differ.
    pub fn zip<F: Fn(f64, f64) -> f64 + Sync + Send>(&self, other: &Field, f: F) -> Field {
        assert!(self.same_domain(other), "zip on mismatched domains");
        let mut out = vec![0.0; self.values.len()];
        let (a, b) = (&self.values, &other.values);
        par::map_into(&mut out, |i| f(a[i], b[i]));
        Field { domain: self.domain.clone(), values: out }
    }

    /// `alpha*self + beta*other`.
    pub fn lin(&self, alpha: f64, beta: f64, other: &Field) -> Field {
        self.zip(other, |a, b| alpha * a + beta * b)
    }

    fn stencil<K>(&self, kernel: K, sequential: bool) -> Field
    where
        K: Fn(&Domain, &[f64], usize, [usize; 3]) -> f64 + Sync + Send,
    {
        let dom = &*self.domain;
        let v = &self.values;
        let mut out = vec![0.0; v.len()];
        let f = |i: usize| kernel(dom, v, i, dom.decompose(i));
        if sequential {
            par::map_into_seq(&mut out, f);
        } else {
            par::map_into(&mut out, f);
        }
        Field { domain: self.domain.clone(), values: out }
    }
}

#[inline]
fn lap_cell(dom: &Domain, v: &[f64], i: usize, c: [usize; 3]) -> f64 {
    let mut acc = 0.0;
    for a in 0..dom.dim {
        let h2 = dom.spacing[a] * dom.spacing[a];
        let m = v[dom.shifted(c, a, -1)];
        let p = v[dom.shifted(c, a, 1)];
        acc += (m - 2.0 * v[i] + p) / h2;
    }
    acc
}

#[inline]
fn grad_sq_cell(dom: &Domain, v: &[f64], _i: usize, c: [usize; 3]) -> f64 {
    let mut acc = 0.0;
    for a in 0..dom.dim {
        let m = v[dom.shifted(c, a, -1)];
        let p = v[dom.shifted(c, a, 1)];
        let g = (p - m) / (2.0 * dom.spacing[a]);
        acc += g * g;
    }
    acc
}

#[inline]
fn hessian_sq_cell(dom: &Domain, v: &[f64], i: usize, c: [usize; 3]) -> f64 {
    let mut acc = 0.0;
    for a in 0..dom.dim {
        let h2 = dom.spacing[a] * dom.spacing[a];
        let daa = (v[dom.shifted(c, a, -1)] - 2.0 * v[i] + v[dom.shifted(c, a, 1)]) / h2;
        acc += daa * daa;
        for b in (a + 1)..dom.dim {
            let pp = v[dom.shifted(dom.decompose(dom.shifted(c, a, 1)), b, 1)];
            let pm = v[dom.shifted(dom.decompose(dom.shifted(c, a, 1)), b, -1)];
            let mp = v[dom.shifted(dom.decompose(dom.shifted(c, a, -1)), b, 1)];
            let mm = v[dom.shifted(dom.decompose(dom.shifted(c, a, -1)), b, -1)];
            let dab = (pp - pm - mp + mm) / (4.0 * dom.spacing[a] * dom.spacing[b]);
            acc += 2.0 * dab * dab;
        }
    }
    acc
}

/// Second-order centered Laplacian; returns `Delta f` (note: the monotone
/// operator used in the analysis is `-Delta`).
pub fn laplacian(f: &Field) -> Field {
    f.stencil(lap_cell, false)
}

/// `Delta(Delta f)`, with the intermediate field subject to the same ghost
/// rule, which is what enforces `d_n Delta u = 0` in no-flux mode.
pub fn biharmonic(f: &Field) -> Field {
    laplacian(&laplacian(f))
}

/// `|grad f|^2` per cell from centered differences.
pub fn grad_sq(f: &Field) -> Field {
    f.stencil(grad_sq_cell, false)
}

/// `grad f . grad g` per cell from centered differences.
pub fn grad_dot(f: &Field, g: &Field) -> Field {
    assert!(f.same_domain(g), "grad_dot on mismatched domains");
    let dom = f.domain.clone();
    let (u, w) = (&f.values, &g.values);
    let mut out = vec![0.0; u.len()];
    let d = &*dom;
    par::map_into(&mut out, |i| {
        let c = d.decompose(i);
        let mut acc = 0.0;
        for a in 0..d.dim {
            let gu = (u[d.shifted(c, a, 1)] - u[d.shifted(c, a, -1)]) / (2.0 * d.spacing[a]);
            let gw = (w[d.shifted(c, a, 1)] - w[d.shifted(c, a, -1)]) / (2.0 * d.spacing[a]);
            acc += gu * gw;
        }
        acc
    });
    Field { domain: dom, values: out }
}

/// Squared Frobenius norm of the discrete Hessian, `|D^2 f|^2` per cell
/// (compact stencil on the diagonal, wide centered stencil on mixed terms).
pub fn hessian_sq(f: &Field) -> Field {
    f.stencil(hessian_sq_cell, false)
}

/// Midpoint quadrature `sum f * prod(h)`.
pub fn integrate(f: &Field) -> f64 {
    let v = &f.values;
    par::sum(v.len(), |i| v[i]) * f.domain.cell_volume()
}

/// Quadrature of a pointwise product without materialising it.
pub fn integrate_product(f: &Field, g: &Field) -> f64 {
    assert!(f.same_domain(g), "integrate_product on mismatched domains");
    let (a, b) = (&f.values, &g.values);
    par::sum(a.len(), |i| a[i] * b[i]) * f.domain.cell_volume()
}

pub fn mean(f: &Field) -> f64 {
    integrate(f) / f.domain.volume()
}

pub fn norm_l2(f: &Field) -> f64 {
    let v = &f.values;
    (par::sum(v.len(), |i| v[i] * v[i]) * f.domain.cell_volume()).sqrt()
}

/// `|| grad f ||_{L^2}` from the centered gradient.
pub fn seminorm_h1(f: &Field) -> f64 {
    integrate(&grad_sq(f)).max(0.0).sqrt()
}

/// Inverse of `-Delta` on mean-zero data by transform diagonalisation;
/// the zero mode of the result is zero.
pub fn inv_laplacian_meanzero(f: &Field) -> Result<Field, GridError> {
    let m = mean(f);
    let bound = 1e-12 * f.max_abs();
    if m.abs() > bound {
        return Err(GridError::NonZeroMean { mean: m, bound });
    }
    let tr = transform::DomainTransforms::new(f.domain());
    Ok(tr.solve_inv_neg_laplacian(f))
}

/// `H^{-1}` (dual) norm of a mean-zero field:
/// `sqrt( int f * (-Delta)^{-1} f )`.
pub fn norm_hm1(f: &Field) -> Result<f64, GridError> {
    let v = inv_laplacian_meanzero(f)?;
    Ok(integrate_product(f, &v).max(0.0).sqrt())
}

/// Sequential reference implementations of the hot kernels; the public
/// operators dispatch to the parallel path when the `parallel` feature is
/// active. The criterion benches compare the two.
pub mod serial {
    use super::*;

    pub fn laplacian(f: &Field) -> Field {
        f.stencil(lap_cell, true)
    }

    pub fn grad_sq(f: &Field) -> Field {
        f.stencil(grad_sq_cell, true)
    }

    pub fn hessian_sq(f: &Field) -> Field {
        f.stencil(hessian_sq_cell, true)
    }

    pub fn integrate(f: &Field) -> f64 {
        let v = f.values();
        crate::par::sum_seq(v.len(), |i| v[i]) * f.domain().cell_volume()
    }
}
