//! Orthonormal transforms diagonalising the discrete Laplacian.
//!
//! No-flux axes use the DCT-II basis `cos(k pi (i+1/2)/n)` — its mirror
//! extension matches the ghost rule exactly, so each basis vector is an
//! exact eigenvector of the stencil. Periodic axes use the real Fourier
//! basis. Transforms are dense matrix applies per axis; the grids this
//! solver targets (<= a few hundred cells per axis) do not justify an FFT
//! dependency, and the direct apply is exact enough for the 1e-10-level
//! inverse-Laplacian round trips the diagnostics need.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{Bc, Domain, Field};

/// One axis worth of basis: orthonormal rows, so the inverse is the
/// transpose. `eig[k]` is the eigenvalue of `-Delta_1d` for row k.
pub struct AxisTransform {
    n: usize,
    rows: Vec<f64>,
    eig: Vec<f64>,
}

impl AxisTransform {
    pub fn new(n: usize, h: f64, bc: Bc) -> Self {
        let mut rows = vec![0.0; n * n];
        let mut eig = vec![0.0; n];
        match bc {
            Bc::NoFlux => {
                for k in 0..n {
                    let norm = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    for i in 0..n {
                        rows[k * n + i] = norm * (k as f64 * PI * (i as f64 + 0.5) / n as f64).cos();
                    }
                    let s = (k as f64 * PI / (2.0 * n as f64)).sin();
                    eig[k] = 4.0 * s * s / (h * h);
                }
            }
            Bc::Periodic => {
                // row 0: constant; rows (2k-1, 2k): cos/sin pair for wave
                // number k; final lone row for the Nyquist mode when n even.
                let mut r = 0;
                let push = |rows: &mut Vec<f64>, r: usize, vals: &dyn Fn(usize) -> f64| {
                    for i in 0..n {
                        rows[r * n + i] = vals(i);
                    }
                };
                let c0 = (1.0 / n as f64).sqrt();
                push(&mut rows, r, &|_| c0);
                eig[r] = 0.0;
                r += 1;
                let mut k = 1;
                while 2 * k < n {
                    let norm = (2.0 / n as f64).sqrt();
                    let w = 2.0 * PI * k as f64 / n as f64;
                    push(&mut rows, r, &|i| norm * (w * i as f64).cos());
                    let s = (PI * k as f64 / n as f64).sin();
                    eig[r] = 4.0 * s * s / (h * h);
                    r += 1;
                    push(&mut rows, r, &|i| norm * (w * i as f64).sin());
                    eig[r] = eig[r - 1];
                    r += 1;
                    k += 1;
                }
                if n % 2 == 0 {
                    push(&mut rows, r, &|i| if i % 2 == 0 { c0 } else { -c0 });
                    eig[r] = 4.0 / (h * h);
                    r += 1;
                }
                debug_assert_eq!(r, n);
            }
        }
        Self { n, rows, eig }
    }

    /// y = B x (forward) or y = B^T x (inverse).
    fn apply(&self, x: &[f64], y: &mut [f64], inverse: bool) {
        let n = self.n;
        for (k, yk) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            if inverse {
                for (j, xj) in x.iter().enumerate() {
                    acc += self.rows[j * n + k] * xj;
                }
            } else {
                let row = &self.rows[k * n..(k + 1) * n];
                for (j, xj) in x.iter().enumerate() {
                    acc += row[j] * xj;
                }
            }
            *yk = acc;
        }
    }
}

/// Transforms for every axis of a domain plus the per-coefficient total
/// eigenvalue `kappa` of `-Delta`; built once and reused.
pub struct DomainTransforms {
    domain: Arc<Domain>,
    axes: Vec<AxisTransform>,
    kappa: Vec<f64>,
}

impl DomainTransforms {
    pub fn new(domain: &Arc<Domain>) -> Self {
        let axes: Vec<AxisTransform> = (0..domain.dim())
            .map(|a| AxisTransform::new(domain.cells()[a], domain.spacing()[a], domain.bc()))
            .collect();
        // total eigenvalue for flattened coefficient index, same layout as cells
        let mut kappa = vec![0.0; domain.len()];
        let cells = {
            let mut c = [1usize; 3];
            c[..domain.dim()].copy_from_slice(domain.cells());
            c
        };
        for (idx, kap) in kappa.iter_mut().enumerate() {
            let i2 = idx % cells[2];
            let rest = idx / cells[2];
            let i1 = rest % cells[1];
            let i0 = rest / cells[1];
            let ks = [i0, i1, i2];
            let mut acc = 0.0;
            for (a, ax) in axes.iter().enumerate() {
                acc += ax.eig[ks[a]];
            }
            *kap = acc;
        }
        Self { domain: domain.clone(), axes, kappa }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    fn apply_all(&self, data: &mut [f64], inverse: bool) {
        let mut c = [1usize; 3];
        c[..self.domain.dim()].copy_from_slice(self.domain.cells());
        for (axis, tr) in self.axes.iter().enumerate() {
            let n = c[axis];
            if n == 1 {
                continue;
            }
            let post: usize = c[axis + 1..].iter().product();
            let pre: usize = c[..axis].iter().product();
            let mut line = vec![0.0; n];
            let mut out = vec![0.0; n];
            for p in 0..pre {
                for q in 0..post {
                    let base = p * n * post + q;
                    for j in 0..n {
                        line[j] = data[base + j * post];
                    }
                    tr.apply(&line, &mut out, inverse);
                    for j in 0..n {
                        data[base + j * post] = out[j];
                    }
                }
            }
        }
    }

    /// Forward transform of a field's values.
    pub fn forward(&self, f: &Field) -> Vec<f64> {
        let mut data = f.values().to_vec();
        self.apply_all(&mut data, false);
        data
    }

    /// Inverse transform into a field.
    pub fn inverse(&self, mut coeffs: Vec<f64>) -> Field {
        self.apply_all(&mut coeffs, true);
        Field { domain: self.domain.clone(), values: coeffs }
    }

    /// Apply a spectral multiplier `g(kappa)` to a field.
    pub fn filter<G: Fn(f64) -> f64>(&self, f: &Field, g: G) -> Field {
        let mut coeffs = self.forward(f);
        for (c, k) in coeffs.iter_mut().zip(&self.kappa) {
            *c *= g(*k);
        }
        self.inverse(coeffs)
    }

    /// Solve `-Delta v = f` with the zero mode of `v` set to zero.
    /// The caller is responsible for `mean(f) = 0`.
    pub fn solve_inv_neg_laplacian(&self, f: &Field) -> Field {
        let mut coeffs = self.forward(f);
        for (c, k) in coeffs.iter_mut().zip(&self.kappa) {
            if *k > 0.0 {
                *c /= *k;
            } else {
                *c = 0.0;
            }
        }
        self.inverse(coeffs)
    }

    /// Solve `(I + sigma (-Delta)^order) v = f`, `order` 1 or 2.
    /// The zero mode is untouched, so the mean is preserved exactly.
    pub fn solve_smoothing(&self, f: &Field, sigma: f64, order: u8) -> Field {
        self.filter(f, |k| {
            let m = if order == 2 { k * k } else { k };
            1.0 / (1.0 + sigma * m)
        })
    }

    /// Solve `(I + alpha (-Delta)) v = f` (screened/viscous solve).
    pub fn solve_helmholtz(&self, f: &Field, alpha: f64) -> Field {
        self.filter(f, |k| 1.0 / (1.0 + alpha * k))
    }

    /// Eigenvalue of `-Delta` for the lowest nonzero mode along axis 0
    /// (the discrete symbol used in dispersion formulas).
    pub fn axis0_eigenvalue(&self, k: usize) -> f64 {
        match self.domain.bc() {
            Bc::NoFlux => self.axes[0].eig[k],
            Bc::Periodic => {
                if k == 0 {
                    0.0
                } else {
                    self.axes[0].eig[2 * k - 1]
                }
            }
        }
    }

    /// Spectral coefficients paired with their kappa (used by the stepper's
    /// constant-coefficient preconditioner).
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }
}
