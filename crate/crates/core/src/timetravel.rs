//! The feedback arm and the two-pass protocol.
//!
//! 1. The circuit evolves once with no feedback arm (open loop).
//! 2. The output collapses onto one channel by the Born rule.
//! 3. A `Left` outcome triggers the arm: a state is launched at `t2` and
//!    delivered by `M` to the left input of the first splitter at `t1`.
//! 4. The circuit re-evolves with both inputs.
//!
//! Only the product `Mψ_T(t2)` enters the second pass, so the coherent and
//! dephased modes specify the delivered state `χ` directly. `ExplicitM`
//! takes `M` and `ψ_T(t2)` separately; when `ψ_T` is omitted it defaults to
//! the normalized first-pass left output, which is a convention of this
//! crate and nothing more.
//!
//! The paradox measure `1 − p_left(second pass)` is defined here to quantify
//! how completely the second pass suppresses the output that triggered it.
//! It is 1 for total suppression and 1/2 for an unbiased second pass.

use std::f64::consts::TAU;

use rand::Rng;
use serde::Serialize;

use crate::algebra::{apply, is_unitary, Complex, Operator, State, UNITARITY_TOL};
use crate::circuit::{open_loop_pass, two_input_pass, CircuitConfig, PassResult};
use crate::error::{Error, Result};
use crate::measurement::{left_probability, sample_outcome, Outcome};
use crate::random::{run_rng, SimRng};

/// How the state delivered by the feedback arm is formed.
#[derive(Debug, Clone, PartialEq)]
pub enum InjectionMode {
    /// `χ = ψ(t1)`.
    Coherent,
    /// `χ = e^{iφ}·ψ(t1)`.
    Dephased(f64),
    /// `χ = e^{iφ}·ψ(t1)` with `φ` drawn uniformly on `[0, 2π)` per run.
    RandomPhase,
    /// `χ = M·ψ_T(t2)`; `psi_t = None` uses the normalized first-pass `ψ4`.
    ExplicitM { m: Operator, psi_t: Option<State> },
}

impl InjectionMode {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            InjectionMode::Coherent | InjectionMode::RandomPhase => Ok(()),
            InjectionMode::Dephased(phi) if phi.is_finite() => Ok(()),
            InjectionMode::Dephased(phi) => Err(Error::InvalidArgument(format!(
                "dephasing angle must be finite, got {phi}"
            ))),
            InjectionMode::ExplicitM { m, psi_t } => {
                let found = psi_t.as_ref().map_or(m.dim(), State::dim);
                for found in [m.dim(), found] {
                    if found != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found,
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn validation_warnings(&self) -> Vec<String> {
        match self {
            InjectionMode::ExplicitM { m, .. } if !is_unitary(m, UNITARITY_TOL) => {
                vec!["m is not unitary".to_string()]
            }
            _ => Vec::new(),
        }
    }
}

/// `χ = ψ(t1)`.
pub fn coherent_injection(psi_t1: &State) -> State {
    psi_t1.clone()
}

/// `χ = e^{iφ}·ψ(t1)`.
pub fn dephased_injection(psi_t1: &State, phi: f64) -> State {
    if phi == 0.0 {
        return coherent_injection(psi_t1);
    }
    psi_t1.scale(Complex::from_polar(1.0, phi))
}

/// Everything recorded by one run of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPassReport {
    pub first_pass: PassResult,
    pub p_left_first: f64,
    pub first_outcome: Outcome,
    /// True iff the first outcome was `Left`.
    pub triggered: bool,
    /// Phase applied to the injected state, for the phase-based modes.
    pub phi: Option<f64>,
    pub injected_chi: Option<State>,
    pub second_pass: Option<PassResult>,
    pub p_left_second: Option<f64>,
    pub paradox: Option<f64>,
}

/// Runs the protocol with a generator seeded from `rng_seed`.
///
/// `force_outcome` replaces the sampled collapse; no random number is drawn
/// for the collapse in that case.
pub fn run_two_pass_protocol(
    cfg: &CircuitConfig,
    psi: &State,
    mode: &InjectionMode,
    rng_seed: u64,
    force_outcome: Option<Outcome>,
) -> Result<TwoPassReport> {
    let mut rng = run_rng(rng_seed);
    run_two_pass_with_rng(cfg, psi, mode, &mut rng, force_outcome)
}

/// Same as [`run_two_pass_protocol`] with a caller-owned generator.
pub fn run_two_pass_with_rng(
    cfg: &CircuitConfig,
    psi: &State,
    mode: &InjectionMode,
    rng: &mut SimRng,
    force_outcome: Option<Outcome>,
) -> Result<TwoPassReport> {
    mode.validate(cfg.dim())?;
    let first_pass = open_loop_pass(cfg, psi)?;
    let p_left_first = left_probability(&first_pass.psi3, &first_pass.psi4)?;
    let first_outcome = match force_outcome {
        Some(outcome) => outcome,
        None => sample_outcome(p_left_first, rng),
    };

    let mut report = TwoPassReport {
        first_pass,
        p_left_first,
        first_outcome,
        triggered: first_outcome == Outcome::Left,
        phi: None,
        injected_chi: None,
        second_pass: None,
        p_left_second: None,
        paradox: None,
    };
    if !report.triggered {
        return Ok(report);
    }

    let (phi, chi) = match mode {
        InjectionMode::Coherent => (Some(0.0), coherent_injection(psi)),
        InjectionMode::Dephased(phi) => (Some(*phi), dephased_injection(psi, *phi)),
        InjectionMode::RandomPhase => {
            let phi = rng.random::<f64>() * TAU;
            (Some(phi), dephased_injection(psi, phi))
        }
        InjectionMode::ExplicitM { m, psi_t } => {
            let launched = match psi_t {
                Some(s) => s.clone(),
                None => report.first_pass.psi4.normalized()?,
            };
            (None, apply(m, &launched)?)
        }
    };
    let second_pass = two_input_pass(cfg, psi, &chi)?;
    let p_left_second = left_probability(&second_pass.psi3, &second_pass.psi4)?;

    report.phi = phi;
    report.injected_chi = Some(chi);
    report.second_pass = Some(second_pass);
    report.p_left_second = Some(p_left_second);
    report.paradox = Some(1.0 - p_left_second);
    Ok(report)
}

/// `1 − p_left` of the second pass.
pub fn paradox_measure(report: &TwoPassReport) -> Result<f64> {
    let second = report.second_pass.as_ref().ok_or(Error::SecondPassAbsent)?;
    Ok(1.0 - left_probability(&second.psi3, &second.psi4)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub phi: f64,
    pub p_left_second: f64,
    pub paradox: f64,
}

/// Second-pass left probability for `points` phases evenly spaced on `[0, 2π]`,
/// endpoints included.
pub fn phase_sweep(cfg: &CircuitConfig, psi: &State, points: usize) -> Result<Vec<SweepPoint>> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!(
            "phase sweep needs at least 2 points, got {points}"
        )));
    }
    let step = TAU / (points - 1) as f64;
    (0..points)
        .map(|k| {
            let phi = if k == points - 1 { TAU } else { k as f64 * step };
            let pass = two_input_pass(cfg, psi, &dephased_injection(psi, phi))?;
            let p_left_second = left_probability(&pass.psi3, &pass.psi4)?;
            Ok(SweepPoint {
                phi,
                p_left_second,
                paradox: 1.0 - p_left_second,
            })
        })
        .collect()
}
