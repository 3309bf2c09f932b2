//! Run configuration files.
//!
//! A run is described by one JSON document:
//!
//! ```json
//! {
//!   "dim": 1,
//!   "alpha": 0.7071067811865476,
//!   "beta": 0.7071067811865476,
//!   "g1": [[[1, 0]]],
//!   "g2": [[[0, 1]]],
//!   "m": [[[1, 0]]],
//!   "psi": [[1, 0]],
//!   "injection": {"mode": "coherent"},
//!   "seed": 20240601,
//!   "trials": 100000
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Matrices are nested row-major rows;
//! a flat row-major list of `dim²` pairs is accepted too. `m` is optional
//! except for the loop solver and `explicit` injection; `psi_t` optionally
//! fixes the launched state for `explicit` injection. `dephased` without
//! `phi` draws a uniform random phase per run.
//!
//! `alpha² + beta²` must equal 1 within `1e-9`. Pairs that miss the internal
//! `1e-12` tolerance are rescaled onto the unit circle when loaded.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Complex, Operator, State};
use crate::circuit::{BeamSplitter, CircuitConfig, SPLITTER_TOL};
use crate::report::{sha256_hex, to_json_string};
use crate::timetravel::InjectionMode;

/// Tolerance on `alpha² + beta² = 1` for hand-written files.
pub const FILE_SPLITTER_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixFile {
    Nested(Vec<Vec<Pair>>),
    Flat(Vec<Pair>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Coherent,
    Dephased,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionFile {
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

/// On-disk shape of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub g1: MatrixFile,
    pub g2: MatrixFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<MatrixFile>,
    pub psi: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_t: Option<Vec<Pair>>,
    pub injection: InjectionFile,
    pub seed: u64,
    pub trials: u64,
}

/// Injection as configured; `Explicit` takes `m` and `psi_t` from the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InjectionSpec {
    Coherent,
    Dephased(f64),
    RandomPhase,
    Explicit,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub circuit: CircuitConfig,
    pub m: Option<Operator>,
    pub psi: State,
    pub psi_t: Option<State>,
    pub injection: InjectionSpec,
    pub seed: u64,
    pub trials: u64,
}

fn to_complex(pairs: &[Pair]) -> Vec<Complex> {
    pairs.iter().map(|&[re, im]| Complex::new(re, im)).collect()
}

fn to_pairs(values: &[Complex]) -> Vec<Pair> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

fn parse_state(name: &str, pairs: &[Pair], dim: usize) -> Result<State, ConfigError> {
    if pairs.len() != dim {
        return Err(invalid(format!(
            "{name} has {} entries, expected dim = {dim}",
            pairs.len()
        )));
    }
    State::new(to_complex(pairs)).map_err(|e| invalid(format!("{name}: {e}")))
}

fn parse_matrix(name: &str, m: &MatrixFile, dim: usize) -> Result<Operator, ConfigError> {
    let entries = match m {
        MatrixFile::Nested(rows) => {
            if rows.len() != dim {
                return Err(invalid(format!(
                    "{name} has {} rows, expected dim = {dim}",
                    rows.len()
                )));
            }
            if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != dim) {
                return Err(invalid(format!(
                    "{name} row {r} has {} entries, expected dim = {dim}",
                    row.len()
                )));
            }
            rows.iter().flat_map(|row| to_complex(row)).collect()
        }
        MatrixFile::Flat(entries) => {
            if entries.len() != dim * dim {
                return Err(invalid(format!(
                    "{name} has {} entries, expected dim² = {}",
                    entries.len(),
                    dim * dim
                )));
            }
            to_complex(entries)
        }
    };
    Operator::from_row_major(dim, entries).map_err(|e| invalid(format!("{name}: {e}")))
}

fn matrix_file(op: &Operator) -> MatrixFile {
    MatrixFile::Nested(op.rows().map(to_pairs).collect())
}

fn splitter_from_file(alpha: f64, beta: f64) -> Result<BeamSplitter, ConfigError> {
    if !alpha.is_finite() || !beta.is_finite() || alpha < 0.0 || beta < 0.0 {
        return Err(invalid(format!(
            "alpha and beta must be finite and non-negative, got {alpha}, {beta}"
        )));
    }
    let sum = alpha * alpha + beta * beta;
    if (sum - 1.0).abs() > FILE_SPLITTER_TOL {
        return Err(invalid(format!(
            "alpha^2 + beta^2 = {sum}, must equal 1 within {FILE_SPLITTER_TOL:e}"
        )));
    }
    let (alpha, beta) = if (sum - 1.0).abs() > SPLITTER_TOL {
        let r = sum.sqrt();
        (alpha / r, beta / r)
    } else {
        (alpha, beta)
    };
    BeamSplitter::new(alpha, beta).map_err(|e| invalid(e.to_string()))
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let file: RunConfigFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &RunConfigFile) -> Result<Self, ConfigError> {
        let dim = file.dim;
        if dim == 0 {
            return Err(invalid("dim must be at least 1"));
        }
        if file.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let splitter = splitter_from_file(file.alpha, file.beta)?;
        let g1 = parse_matrix("g1", &file.g1, dim)?;
        let g2 = parse_matrix("g2", &file.g2, dim)?;
        let circuit = CircuitConfig::new(splitter, g1, g2).map_err(|e| invalid(e.to_string()))?;
        let m = file
            .m
            .as_ref()
            .map(|m| parse_matrix("m", m, dim))
            .transpose()?;
        let psi = parse_state("psi", &file.psi, dim)?;
        let psi_t = file
            .psi_t
            .as_ref()
            .map(|p| parse_state("psi_t", p, dim))
            .transpose()?;

        let injection = match (file.injection.mode, file.injection.phi) {
            (ModeName::Coherent, None) => InjectionSpec::Coherent,
            (ModeName::Dephased, Some(phi)) if phi.is_finite() => InjectionSpec::Dephased(phi),
            (ModeName::Dephased, Some(phi)) => {
                return Err(invalid(format!("injection.phi must be finite, got {phi}")))
            }
            (ModeName::Dephased, None) => InjectionSpec::RandomPhase,
            (ModeName::Explicit, None) => {
                if m.is_none() {
                    return Err(invalid("explicit injection requires m"));
                }
                InjectionSpec::Explicit
            }
            (mode, Some(_)) => {
                return Err(invalid(format!(
                    "injection.phi is only valid for dephased mode, not {mode:?}"
                )))
            }
        };
        if psi_t.is_some() && injection != InjectionSpec::Explicit {
            return Err(invalid("psi_t is only valid for explicit injection"));
        }

        Ok(RunConfig {
            circuit,
            m,
            psi,
            psi_t,
            injection,
            seed: file.seed,
            trials: file.trials,
        })
    }

    pub fn to_file(&self) -> RunConfigFile {
        let bs = self.circuit.splitter();
        let injection = match self.injection {
            InjectionSpec::Coherent => InjectionFile {
                mode: ModeName::Coherent,
                phi: None,
            },
            InjectionSpec::Dephased(phi) => InjectionFile {
                mode: ModeName::Dephased,
                phi: Some(phi),
            },
            InjectionSpec::RandomPhase => InjectionFile {
                mode: ModeName::Dephased,
                phi: None,
            },
            InjectionSpec::Explicit => InjectionFile {
                mode: ModeName::Explicit,
                phi: None,
            },
        };
        RunConfigFile {
            dim: self.circuit.dim(),
            alpha: bs.alpha(),
            beta: bs.beta(),
            g1: matrix_file(self.circuit.g1()),
            g2: matrix_file(self.circuit.g2()),
            m: self.m.as_ref().map(matrix_file),
            psi: to_pairs(self.psi.amplitudes()),
            psi_t: self.psi_t.as_ref().map(|s| to_pairs(s.amplitudes())),
            injection,
            seed: self.seed,
            trials: self.trials,
        }
    }

    /// Canonical JSON form; what `--dump-config` prints.
    pub fn to_json(&self) -> String {
        to_json_string(&self.to_file())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn injection_mode(&self) -> Result<InjectionMode, ConfigError> {
        Ok(match self.injection {
            InjectionSpec::Coherent => InjectionMode::Coherent,
            InjectionSpec::Dephased(phi) => InjectionMode::Dephased(phi),
            InjectionSpec::RandomPhase => InjectionMode::RandomPhase,
            InjectionSpec::Explicit => InjectionMode::ExplicitM {
                m: self
                    .m
                    .clone()
                    .ok_or_else(|| invalid("explicit injection requires m"))?,
                psi_t: self.psi_t.clone(),
            },
        })
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = self.circuit.validation_warnings();
        if let Some(m) = &self.m {
            if !crate::algebra::is_unitary(m, crate::algebra::UNITARITY_TOL) {
                out.push("m is not unitary".to_string());
            }
        }
        out
    }
}
