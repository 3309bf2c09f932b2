//! The two-splitter interferometer and one forward evolution `t1 → t2`.
//!
//! # Layout
//!
//! The input `ψ(t1)` reaches the first splitter from the right. An optional
//! second input `χ` (the state delivered by the feedback arm) reaches it from
//! the left. The splitter sends `ψ1` into the left channel and `ψ2` into the
//! right channel; these propagate under `G1` and `G2` and meet the second,
//! identical splitter on opposite faces. Its right output is `ψ3(t2)` and its
//! left output `ψ4(t2)`; the left output is the one that feeds the
//! time-travel arm.
//!
//! # Sign convention
//!
//! Each splitter transmits with amplitude `α` and reflects with `−iβ` on both
//! faces. A beam arriving from the right is transmitted into the left exit:
//!
//! ```text
//! out_left  = α·in_right − iβ·in_left
//! out_right = −iβ·in_right + α·in_left
//! ```
//!
//! Composing splitter, channels and splitter gives
//!
//! ```text
//! ψ1 = αψ − iβχ                 ψ2 = −iβψ + αχ
//! ψ3 = α·G1ψ1 − iβ·G2ψ2 = (α²G1 − β²G2)ψ − iαβ(G1 + G2)χ
//! ψ4 = −iβ·G1ψ1 + α·G2ψ2 = −iαβ(G1 + G2)ψ + (α²G2 − β²G1)χ
//! ```
//!
//! which matches the standard open-loop outputs at `χ = 0` and the
//! two-input outputs term by term, signs included. At the second splitter
//! the left channel is the left input, so `ψ4` is that splitter's
//! `out_left` and `ψ3` its `out_right`.
//!
//! `psi1`/`psi2` in [`PassResult`] are recorded right after the first
//! splitter, before `G1`/`G2` act. This only affects labeling.
//!
//! The internal state has dimension `d`; `α`, `β` mix channels as scalars and
//! `G1`, `G2` act on the internal state. `d = 1` reduces to plain complex
//! amplitudes.

use serde::Serialize;

use crate::algebra::{apply, is_unitary, Complex, Operator, State, I, UNITARITY_TOL};
use crate::error::{Error, Result};

/// Tolerance on `α² + β² = 1` at construction.
pub const SPLITTER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamSplitter {
    alpha: f64,
    beta: f64,
}

impl BeamSplitter {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidSplitter {
                alpha,
                beta,
                reason: "non-finite amplitude",
            });
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidSplitter {
                alpha,
                beta,
                reason: "amplitudes must be non-negative",
            });
        }
        if (alpha * alpha + beta * beta - 1.0).abs() > SPLITTER_TOL {
            return Err(Error::InvalidSplitter {
                alpha,
                beta,
                reason: "alpha^2 + beta^2 must equal 1",
            });
        }
        Ok(Self { alpha, beta })
    }

    /// 50:50 splitter, `α = β = 1/√2`.
    pub fn balanced() -> Self {
        Self {
            alpha: std::f64::consts::FRAC_1_SQRT_2,
            beta: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn transmit(&self) -> Complex {
        Complex::new(self.alpha, 0.0)
    }

    fn reflect(&self) -> Complex {
        Complex::new(0.0, -self.beta)
    }
}

/// Mixes the two channels at one splitter. Returns `(out_left, out_right)`.
pub fn beam_splitter_action(
    bs: &BeamSplitter,
    in_right: &State,
    in_left: &State,
) -> Result<(State, State)> {
    if in_right.dim() != in_left.dim() {
        return Err(Error::DimensionMismatch {
            expected: in_right.dim(),
            found: in_left.dim(),
        });
    }
    let (t, r) = (bs.transmit(), bs.reflect());
    let out_left = &in_right.scale(t) + &in_left.scale(r);
    let out_right = &in_right.scale(r) + &in_left.scale(t);
    Ok((out_left, out_right))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitConfig {
    dim: usize,
    splitter: BeamSplitter,
    g1: Operator,
    g2: Operator,
}

impl CircuitConfig {
    pub fn new(splitter: BeamSplitter, g1: Operator, g2: Operator) -> Result<Self> {
        let dim = g1.dim();
        if g2.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g2.dim(),
            });
        }
        Ok(Self {
            dim,
            splitter,
            g1,
            g2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn splitter(&self) -> &BeamSplitter {
        &self.splitter
    }

    pub fn g1(&self) -> &Operator {
        &self.g1
    }

    pub fn g2(&self) -> &Operator {
        &self.g2
    }

    /// Non-fatal findings about the configuration. Non-unitary propagators
    /// are allowed but break norm conservation.
    pub fn validation_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !is_unitary(&self.g1, UNITARITY_TOL) {
            out.push("g1 is not unitary; output norm is not conserved".to_string());
        }
        if !is_unitary(&self.g2, UNITARITY_TOL) {
            out.push("g2 is not unitary; output norm is not conserved".to_string());
        }
        out
    }

    fn check_state(&self, s: &State) -> Result<()> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: s.dim(),
            });
        }
        Ok(())
    }
}

/// The circuit as parameterized in the reference setup: `α = β = 1/√2`,
/// `G1 = G` and `G2 = iG` (from `G1 = −iG2 = G`).
pub fn default_qtltt_params(dim: usize, g: Operator) -> Result<CircuitConfig> {
    if g.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: g.dim(),
        });
    }
    let g2 = g.scale(I);
    CircuitConfig::new(BeamSplitter::balanced(), g, g2)
}

/// Amplitudes at each stage of one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassResult {
    pub t1: &'static str,
    pub t2: &'static str,
    /// Left channel just after the first splitter.
    pub psi1: State,
    /// Right channel just after the first splitter.
    pub psi2: State,
    /// Right output at `t2`.
    pub psi3: State,
    /// Left output at `t2`, the one feeding the time-travel arm.
    pub psi4: State,
}

/// Forward pass with only the right-hand input present.
pub fn open_loop_pass(cfg: &CircuitConfig, psi: &State) -> Result<PassResult> {
    two_input_pass(cfg, psi, &State::zero(cfg.dim))
}

/// Forward pass with `psi` entering from the right and `chi` from the left.
pub fn two_input_pass(cfg: &CircuitConfig, psi: &State, chi: &State) -> Result<PassResult> {
    cfg.check_state(psi)?;
    cfg.check_state(chi)?;
    let (psi1, psi2) = beam_splitter_action(&cfg.splitter, psi, chi)?;
    let left = apply(&cfg.g1, &psi1)?;
    let right = apply(&cfg.g2, &psi2)?;
    let (psi4, psi3) = beam_splitter_action(&cfg.splitter, &right, &left)?;
    Ok(PassResult {
        t1: "t1",
        t2: "t2",
        psi1,
        psi2,
        psi3,
        psi4,
    })
}

/// `α²G1 − β²G2`: right output per unit right input.
pub fn right_to_right(cfg: &CircuitConfig) -> Operator {
    let (a2, b2) = splitter_squares(cfg);
    cfg.g1
        .scale(a2)
        .checked_sub(&cfg.g2.scale(b2))
        .expect("same dimension")
}

/// `−iαβ(G1 + G2)`: transfer between sides, identical in both directions.
pub fn cross_transfer(cfg: &CircuitConfig) -> Operator {
    let ab = cfg.splitter.alpha * cfg.splitter.beta;
    cfg.g1
        .checked_add(&cfg.g2)
        .expect("same dimension")
        .scale(Complex::new(0.0, -ab))
}

/// `α²G2 − β²G1`: left output per unit left input, the feedback gain of the loop.
pub fn left_to_left(cfg: &CircuitConfig) -> Operator {
    let (a2, b2) = splitter_squares(cfg);
    cfg.g2
        .scale(a2)
        .checked_sub(&cfg.g1.scale(b2))
        .expect("same dimension")
}

fn splitter_squares(cfg: &CircuitConfig) -> (Complex, Complex) {
    let BeamSplitter { alpha, beta } = cfg.splitter;
    (Complex::new(alpha * alpha, 0.0), Complex::new(beta * beta, 0.0))
}
