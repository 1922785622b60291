//! Flat `key = value` run configuration with `#` comments.
//!
//! Every model parameter maps to one named key; unknown keys are hard
//! errors. Every key has a documented default except `mode` and `cells`.
//! The canonical serialisation lists all keys in a fixed order and
//! round-trips exactly through the parser.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use chnl_core::energetics::{CoefficientSpec, PotentialSpec};
use chnl_core::grid::{Bc, Domain};
use chnl_core::model::{InitialKind, Mode, ModelParams};
use chnl_core::stepper::StepperConfig;

#[derive(Debug)]
pub enum ConfigError {
    Parse { line: usize, key: String, reason: String },
    Validation { keys: String, constraint: String },
    Io(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse { line, key, reason } => {
                write!(f, "config parse error at line {line}, key `{key}`: {reason}")
            }
            ConfigError::Validation { keys, constraint } => {
                write!(f, "config validation error ({keys}): {constraint}")
            }
            ConfigError::Io(msg) => write!(f, "config i/o error: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Logarithmic,
    SixthPolynomial,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    Constant,
    EvenQuadratic,
    GeneralQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialName {
    Constant,
    Noise,
    Cosine,
    Tanh,
}

/// The full run bundle in config-file form.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub cells: Vec<usize>,
    pub lengths: Vec<f64>,
    pub bc: Bc,

    pub potential: PotentialKind,
    pub h0: f64,
    pub linear_slope: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub mobility: f64,

    pub coefficient: CoefficientKind,
    pub a_const: f64,
    pub g0: f64,
    pub g2: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,

    pub initial: InitialName,
    pub mean: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub mode_k: usize,
    pub position: f64,
    pub width: f64,

    pub tau: f64,
    pub t_end: f64,
    /// 0 means the default `tau / 1024`.
    pub tau_min: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub krylov_tol: f64,
    pub krylov_max: usize,
    pub domain_guard: bool,
    pub energy_slack: f64,

    pub diagnostics_every: usize,
    pub checkpoint_every: usize,
    pub snapshot_every: usize,
    pub out: String,
}

impl RunConfig {
    /// Documented defaults for everything except `mode` and `cells`.
    fn defaults() -> Self {
        Self {
            mode: Mode::Fourth, // placeholder until `mode` is parsed
            cells: Vec::new(),
            lengths: Vec::new(),
            bc: Bc::NoFlux,
            potential: PotentialKind::Logarithmic,
            h0: 0.0,
            linear_slope: 1.0,
            lambda: 0.0,
            sigma: 0.0,
            delta: 0.0,
            epsilon: 0.0,
            mobility: 1.0,
            coefficient: CoefficientKind::Constant,
            a_const: 1.0,
            g0: 1.0,
            g2: 0.0,
            a0: 1.0,
            a1: 0.0,
            a2: 0.0,
            initial: InitialName::Constant,
            mean: 0.0,
            amplitude: 0.05,
            seed: 0,
            mode_k: 1,
            position: 0.5,
            width: 0.05,
            tau: 1e-4,
            t_end: 0.05,
            tau_min: 0.0,
            newton_tol: 1e-10,
            newton_max: 30,
            krylov_tol: 1e-8,
            krylov_max: 500,
            domain_guard: true,
            energy_slack: 1e-9,
            diagnostics_every: 1,
            checkpoint_every: 0,
            snapshot_every: 0,
            out: "out".into(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults();
        let mut saw_mode = false;
        let mut saw_cells = false;
        let mut saw_lengths = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                key: content.into(),
                reason: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let perr = |reason: String| ConfigError::Parse { line, key: key.into(), reason };

            macro_rules! num {
                ($t:ty) => {
                    value.parse::<$t>().map_err(|e| perr(format!("bad number `{value}`: {e}")))?
                };
            }

            match key {
                "mode" => {
                    cfg.mode = match value {
                        "sixth" => Mode::Sixth,
                        "fourth" => Mode::Fourth,
                        "phase_field" => Mode::PhaseField,
                        _ => return Err(perr("expected sixth|fourth|phase_field".into())),
                    };
                    saw_mode = true;
                }
                "cells" => {
                    cfg.cells = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| perr(format!("bad cell list `{value}`: {e}")))?;
                    saw_cells = true;
                }
                "lengths" => {
                    cfg.lengths = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| perr(format!("bad length list `{value}`: {e}")))?;
                    saw_lengths = true;
                }
                "bc" => {
                    cfg.bc = match value {
                        "noflux" => Bc::NoFlux,
                        "periodic" => Bc::Periodic,
                        _ => return Err(perr("expected noflux|periodic".into())),
                    };
                }
                "potential" => {
                    cfg.potential = match value {
                        "logarithmic" => PotentialKind::Logarithmic,
                        "sixth_polynomial" => PotentialKind::SixthPolynomial,
                        "linear" => PotentialKind::Linear,
                        _ => {
                            return Err(perr(
                                "expected logarithmic|sixth_polynomial|linear".into(),
                            ))
                        }
                    };
                }
                "coefficient" => {
                    cfg.coefficient = match value {
                        "constant" => CoefficientKind::Constant,
                        "even_quadratic" => CoefficientKind::EvenQuadratic,
                        "general_quadratic" => CoefficientKind::GeneralQuadratic,
                        _ => {
                            return Err(perr(
                                "expected constant|even_quadratic|general_quadratic".into(),
                            ))
                        }
                    };
                }
                "initial" => {
                    cfg.initial = match value {
                        "constant" => InitialName::Constant,
                        "noise" => InitialName::Noise,
                        "cosine" => InitialName::Cosine,
                        "tanh" => InitialName::Tanh,
                        _ => return Err(perr("expected constant|noise|cosine|tanh".into())),
                    };
                }
                "domain_guard" => {
                    cfg.domain_guard = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(perr("expected true|false".into())),
                    };
                }
                "h0" => cfg.h0 = num!(f64),
                "linear_slope" => cfg.linear_slope = num!(f64),
                "lambda" => cfg.lambda = num!(f64),
                "sigma" => cfg.sigma = num!(f64),
                "delta" => cfg.delta = num!(f64),
                "epsilon" => cfg.epsilon = num!(f64),
                "mobility" => cfg.mobility = num!(f64),
                "a_const" => cfg.a_const = num!(f64),
                "g0" => cfg.g0 = num!(f64),
                "g2" => cfg.g2 = num!(f64),
                "a0" => cfg.a0 = num!(f64),
                "a1" => cfg.a1 = num!(f64),
                "a2" => cfg.a2 = num!(f64),
                "mean" => cfg.mean = num!(f64),
                "amplitude" => cfg.amplitude = num!(f64),
                "seed" => cfg.seed = num!(u64),
                "mode_k" => cfg.mode_k = num!(usize),
                "position" => cfg.position = num!(f64),
                "width" => cfg.width = num!(f64),
                "tau" => cfg.tau = num!(f64),
                "t_end" => cfg.t_end = num!(f64),
                "tau_min" => cfg.tau_min = num!(f64),
                "newton_tol" => cfg.newton_tol = num!(f64),
                "newton_max" => cfg.newton_max = num!(usize),
                "krylov_tol" => cfg.krylov_tol = num!(f64),
                "krylov_max" => cfg.krylov_max = num!(usize),
                "energy_slack" => cfg.energy_slack = num!(f64),
                "diagnostics_every" => cfg.diagnostics_every = num!(usize),
                "checkpoint_every" => cfg.checkpoint_every = num!(usize),
                "snapshot_every" => cfg.snapshot_every = num!(usize),
                "out" => cfg.out = value.into(),
                _ => return Err(perr("unknown key".into())),
            }
        }

        if !saw_mode {
            return Err(ConfigError::Validation {
                keys: "mode".into(),
                constraint: "required key missing".into(),
            });
        }
        if !saw_cells {
            return Err(ConfigError::Validation {
                keys: "cells".into(),
                constraint: "required key missing".into(),
            });
        }
        if !saw_lengths {
            cfg.lengths = vec![1.0; cfg.cells.len()];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let verr = |keys: &str, constraint: &str| {
            Err(ConfigError::Validation { keys: keys.into(), constraint: constraint.into() })
        };
        if self.cells.is_empty() || self.cells.len() > 3 {
            return verr("cells", "need 1 to 3 comma-separated axis sizes");
        }
        if self.cells.iter().any(|c| *c < 4) {
            return verr("cells", "each axis needs at least 4 cells");
        }
        if self.lengths.len() != self.cells.len() {
            return verr("lengths, cells", "lengths must match the cell list dimension");
        }
        if self.lengths.iter().any(|l| !(*l > 0.0)) {
            return verr("lengths", "extents must be positive");
        }
        match self.mode {
            Mode::Sixth if self.delta == 0.0 => {
                return verr("mode, delta", "mode=sixth requires delta > 0")
            }
            Mode::Fourth | Mode::PhaseField if self.delta != 0.0 => {
                return verr("mode, delta", "modes fourth/phase_field require delta = 0")
            }
            Mode::PhaseField if self.sigma == 0.0 => {
                return verr("mode, sigma", "mode=phase_field requires sigma > 0")
            }
            _ => {}
        }
        if self.sigma == 0.0
            && self.potential == PotentialKind::Logarithmic
            && !self.domain_guard
        {
            return verr(
                "sigma, potential, domain_guard",
                "unregularised logarithmic runs need the domain guard",
            );
        }
        if !(self.tau > 0.0) {
            return verr("tau", "must be positive");
        }
        if self.t_end < 0.0 {
            return verr("t_end", "must be nonnegative");
        }
        if self.tau_min < 0.0 || self.tau_min > self.tau {
            return verr("tau_min, tau", "tau_min must lie in [0, tau] (0 = tau/1024)");
        }
        if !(self.mobility > 0.0) {
            return verr("mobility", "must be positive");
        }
        Ok(())
    }

    /// Canonical form: every key, fixed order. Values use the shortest
    /// round-trip float formatting, so parse(serialize(c)) == c.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::new();
        let mode = match self.mode {
            Mode::Sixth => "sixth",
            Mode::Fourth => "fourth",
            Mode::PhaseField => "phase_field",
        };
        let join_usize =
            |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let join_f64 = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "mode = {mode}");
        let _ = writeln!(s, "cells = {}", join_usize(&self.cells));
        let _ = writeln!(s, "lengths = {}", join_f64(&self.lengths));
        let _ = writeln!(
            s,
            "bc = {}",
            match self.bc {
                Bc::NoFlux => "noflux",
                Bc::Periodic => "periodic",
            }
        );
        let _ = writeln!(
            s,
            "potential = {}",
            match self.potential {
                PotentialKind::Logarithmic => "logarithmic",
                PotentialKind::SixthPolynomial => "sixth_polynomial",
                PotentialKind::Linear => "linear",
            }
        );
        let _ = writeln!(s, "h0 = {}", self.h0);
        let _ = writeln!(s, "linear_slope = {}", self.linear_slope);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "mobility = {}", self.mobility);
        let _ = writeln!(
            s,
            "coefficient = {}",
            match self.coefficient {
                CoefficientKind::Constant => "constant",
                CoefficientKind::EvenQuadratic => "even_quadratic",
                CoefficientKind::GeneralQuadratic => "general_quadratic",
            }
        );
        let _ = writeln!(s, "a_const = {}", self.a_const);
        let _ = writeln!(s, "g0 = {}", self.g0);
        let _ = writeln!(s, "g2 = {}", self.g2);
        let _ = writeln!(s, "a0 = {}", self.a0);
        let _ = writeln!(s, "a1 = {}", self.a1);
        let _ = writeln!(s, "a2 = {}", self.a2);
        let _ = writeln!(
            s,
            "initial = {}",
            match self.initial {
                InitialName::Constant => "constant",
                InitialName::Noise => "noise",
                InitialName::Cosine => "cosine",
                InitialName::Tanh => "tanh",
            }
        );
        let _ = writeln!(s, "mean = {}", self.mean);
        let _ = writeln!(s, "amplitude = {}", self.amplitude);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mode_k = {}", self.mode_k);
        let _ = writeln!(s, "position = {}", self.position);
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "t_end = {}", self.t_end);
        let _ = writeln!(s, "tau_min = {}", self.tau_min);
        let _ = writeln!(s, "newton_tol = {}", self.newton_tol);
        let _ = writeln!(s, "newton_max = {}", self.newton_max);
        let _ = writeln!(s, "krylov_tol = {}", self.krylov_tol);
        let _ = writeln!(s, "krylov_max = {}", self.krylov_max);
        let _ = writeln!(s, "domain_guard = {}", self.domain_guard);
        let _ = writeln!(s, "energy_slack = {}", self.energy_slack);
        let _ = writeln!(s, "diagnostics_every = {}", self.diagnostics_every);
        let _ = writeln!(s, "checkpoint_every = {}", self.checkpoint_every);
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(s, "out = {}", self.out);
        s
    }

    // ---- materialisation into core types ---------------------------------

    pub fn domain(&self) -> Result<Arc<Domain>, ConfigError> {
        Domain::new(&self.cells, &self.lengths, self.bc).map_err(|e| ConfigError::Validation {
            keys: "cells, lengths".into(),
            constraint: e.to_string(),
        })
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let as_cfg = |e: chnl_core::energetics::EnergeticsError| ConfigError::Validation {
            keys: "potential, lambda, sigma".into(),
            constraint: e.to_string(),
        };
        let potential = match self.potential {
            PotentialKind::Logarithmic => {
                PotentialSpec::logarithmic(self.lambda, None).map_err(as_cfg)?
            }
            PotentialKind::SixthPolynomial => {
                PotentialSpec::sixth_polynomial(self.h0, self.lambda, None).map_err(as_cfg)?
            }
            PotentialKind::Linear => PotentialSpec::linear(self.linear_slope).map_err(as_cfg)?,
        };
        let cerr = |e: chnl_core::energetics::EnergeticsError| ConfigError::Validation {
            keys: "coefficient".into(),
            constraint: e.to_string(),
        };
        let coefficient = match self.coefficient {
            CoefficientKind::Constant => CoefficientSpec::constant(self.a_const).map_err(cerr)?,
            CoefficientKind::EvenQuadratic => {
                CoefficientSpec::even_quadratic(self.g0, self.g2).map_err(cerr)?
            }
            CoefficientKind::GeneralQuadratic => {
                CoefficientSpec::general_quadratic(self.a0, self.a1, self.a2).map_err(cerr)?
            }
        };
        ModelParams::new(
            self.mode,
            self.delta,
            self.epsilon,
            self.sigma,
            self.mobility,
            potential,
            coefficient,
        )
        .map_err(|e| ConfigError::Validation {
            keys: "mode, delta, epsilon, sigma".into(),
            constraint: e.to_string(),
        })
    }

    pub fn stepper(&self) -> StepperConfig {
        let mut cfg = StepperConfig::new(self.tau, self.t_end);
        cfg.newton_tol = self.newton_tol;
        cfg.newton_max = self.newton_max;
        cfg.krylov_tol = self.krylov_tol;
        cfg.krylov_max = self.krylov_max;
        cfg.tau_min = if self.tau_min > 0.0 { self.tau_min } else { self.tau / 1024.0 };
        cfg.domain_guard = self.domain_guard;
        cfg.accept_energy_slack = self.energy_slack;
        cfg
    }

    pub fn initial_kind(&self) -> InitialKind {
        match self.initial {
            InitialName::Constant => InitialKind::Constant { mean: self.mean },
            InitialName::Noise => InitialKind::SeededNoise {
                mean: self.mean,
                amplitude: self.amplitude,
                seed: self.seed,
            },
            InitialName::Cosine => InitialKind::CosineMode {
                mean: self.mean,
                amplitude: self.amplitude,
                k: self.mode_k,
            },
            InitialName::Tanh => {
                InitialKind::TanhInterface { position: self.position, width: self.width }
            }
        }
    }
}
