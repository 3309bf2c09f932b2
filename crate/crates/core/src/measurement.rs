//! Born-rule probabilities, seeded collapse and Monte Carlo ensembles.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{norm_sq, State};
use crate::circuit::{CircuitConfig, PassResult};
use crate::error::{Error, Result};
use crate::random::trial_rng;
use crate::timetravel::{run_two_pass_with_rng, InjectionMode};

/// Which output channel a collapse selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Left,
    Right,
}

/// Returns `(p_right, p_left)` for the outputs of a pass.
///
/// `p_left` is computed from the amplitudes and `p_right` as its complement,
/// so the pair sums to 1 exactly.
pub fn born_probabilities(pass: &PassResult) -> Result<(f64, f64)> {
    left_probability(&pass.psi3, &pass.psi4).map(|p_left| (1.0 - p_left, p_left))
}

pub(crate) fn left_probability(psi3: &State, psi4: &State) -> Result<f64> {
    let right = norm_sq(psi3);
    let left = norm_sq(psi4);
    let total = right + left;
    if !(total > 0.0) {
        return Err(Error::ZeroOutput);
    }
    Ok(left / total)
}

/// Samples the output channel: `Left` iff a uniform draw on `[0, 1)` falls
/// below `p_left`. Consumes exactly one `f64` from the generator.
pub fn collapse<R: Rng + ?Sized>(pass: &PassResult, rng: &mut R) -> Result<Outcome> {
    let (_, p_left) = born_probabilities(pass)?;
    Ok(sample_outcome(p_left, rng))
}

pub(crate) fn sample_outcome<R: Rng + ?Sized>(p_left: f64, rng: &mut R) -> Outcome {
    let u: f64 = rng.random();
    if u < p_left {
        Outcome::Left
    } else {
        Outcome::Right
    }
}

/// Aggregate over an ensemble of two-pass runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub trials: u64,
    pub left_count: u64,
    pub right_count: u64,
    pub trigger_frequency: f64,
    /// Mean paradox measure over triggered trials; `None` if nothing triggered.
    pub mean_paradox: Option<f64>,
    pub seed: u64,
}

/// Runs `trials` independent two-pass protocols.
///
/// Trial `k` draws from [`trial_rng`]`(seed, k)`. Trials execute on the
/// current rayon pool; per-trial results are collected in index order and
/// reduced serially, so the report does not depend on the thread count.
pub fn monte_carlo(
    cfg: &CircuitConfig,
    psi: &State,
    mode: &InjectionMode,
    trials: u64,
    seed: u64,
) -> Result<EnsembleReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let per_trial: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let report = run_two_pass_with_rng(cfg, psi, mode, &mut rng, None)?;
            Ok(report.paradox)
        })
        .collect::<Result<_>>()?;

    let mut left_count = 0u64;
    let mut paradox_sum = 0.0;
    for paradox in per_trial.iter().flatten() {
        left_count += 1;
        paradox_sum += paradox;
    }
    Ok(EnsembleReport {
        trials,
        left_count,
        right_count: trials - left_count,
        trigger_frequency: left_count as f64 / trials as f64,
        mean_paradox: (left_count > 0).then(|| paradox_sum / left_count as f64),
        seed,
    })
}
