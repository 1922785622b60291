//! Finite-difference simulator and verification harness for a family of
//! Cahn-Hilliard equations with a composition-dependent gradient-energy
//! coefficient `a(u)`, singular (logarithmic) or polynomial potentials,
//! optional viscosity, and an optional sixth-order `delta Delta^2 u` term.
//!
//! The crate is organised in layers:
//!
//! * [`grid`] — structured 1/2/3-d domains, fields, discrete operators
//!   (Laplacian, biharmonic, gradients), quadrature and norms, and the
//!   cosine/Fourier transforms that diagonalise them.
//! * [`energetics`] — potentials `F`, `f`, their Yosida/Moreau
//!   regularisations, the gradient coefficient `a(u)` with its C^2 flat
//!   extension, the `phi(u) = int sqrt(a)` change of variable, the free
//!   energy, and uniqueness-regime checks.
//! * [`model`] — assembly of the chemical potential and the implicit-Euler
//!   residuals for the sixth-order, fourth-order and phase-field systems,
//!   plus initial-data construction and elliptic smoothing.
//! * [`stepper`] — implicit Euler time integration with a matrix-free
//!   Newton-Krylov solve, adaptive step control, checkpointing, and an
//!   independent explicit RK4 oracle.
//! * [`diagnostics`] — runtime observables (energy, mass, dissipation),
//!   energy-equality residuals, the Dal Passo-Garcke-Gruen identity check,
//!   dispersion tables, parameter sweeps and contraction tests.
//! * [`check`] — the self-test suite behind the `check` CLI subcommand.
//!
//! Cell loops are data-parallel via rayon when the default `parallel`
//! feature is enabled; disabling it yields a dependency-free sequential
//! build with bit-identical semantics at fixed chunking.

pub mod check;
pub mod diagnostics;
pub mod energetics;
pub mod grid;
pub mod model;
pub(crate) mod par;
pub mod stepper;
