//! Self-consistent solution of the fully established loop.
//!
//! When the left output is fed back through `M` on every pass, the launched
//! state equals the left output itself, `ψ_T(t2) = ψ4(t2)`. Substituting
//! this into the two-input left output gives the self-consistency equation
//!
//! ```text
//! ψ4 = −iαβ(G1 + G2)ψ + (α²G2 − β²G1)·M·ψ4
//! ```
//!
//! This equation is reconstructed from the circuit wiring; it is not a
//! stated result. Two independent routes solve it: a dense linear solve of
//! `[I − (α²G2 − β²G1)M]·ψ4 = ψ4_open` and a fixed-point iteration that
//! re-runs the staged two-input pass. `ψ3` is derived from the solution and
//! carries no constraint of its own.

use serde::Serialize;

use crate::algebra::{apply, solve_linear, Operator, State, DEFAULT_COND_LIMIT};
use crate::circuit::{left_to_left, open_loop_pass, two_input_pass, CircuitConfig};
use crate::error::{Error, Result};

/// Residual bound of a returned solution, relative to `max(1, ‖ψ‖)`.
pub const LOOP_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Iterative { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopSolution {
    pub psi4: State,
    pub psi3: State,
    /// `‖ψ4 − rhs(ψ4)‖`.
    pub residual: f64,
    pub method: SolveMethod,
}

fn check_feedback(cfg: &CircuitConfig, m: &Operator, psi: &State) -> Result<()> {
    for found in [m.dim(), psi.dim()] {
        if found != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// One application of the loop map: delivers `M·ψ4` to the left input and
/// re-evaluates the pass.
fn loop_map(cfg: &CircuitConfig, m: &Operator, psi: &State, psi4: &State) -> Result<PassPair> {
    let pass = two_input_pass(cfg, psi, &apply(m, psi4)?)?;
    Ok(PassPair {
        psi3: pass.psi3,
        psi4: pass.psi4,
    })
}

struct PassPair {
    psi3: State,
    psi4: State,
}

fn finish(
    cfg: &CircuitConfig,
    m: &Operator,
    psi: &State,
    psi4: State,
    method: SolveMethod,
) -> Result<LoopSolution> {
    let next = loop_map(cfg, m, psi, &psi4)?;
    let residual = (&psi4 - &next.psi4).norm();
    Ok(LoopSolution {
        psi4,
        psi3: next.psi3,
        residual,
        method,
    })
}

/// Solves the loop equation with a dense linear solve.
pub fn solve_established_loop(cfg: &CircuitConfig, m: &Operator, psi: &State) -> Result<LoopSolution> {
    check_feedback(cfg, m, psi)?;
    let feedback = left_to_left(cfg).compose(m)?;
    let system = Operator::identity(cfg.dim()).checked_sub(&feedback)?;
    let source = open_loop_pass(cfg, psi)?.psi4;
    let psi4 = solve_linear(&system, &source, DEFAULT_COND_LIMIT)?;
    let solution = finish(cfg, m, psi, psi4, SolveMethod::Direct)?;
    if !(solution.residual <= LOOP_RESIDUAL_TOL * psi.norm().max(1.0)) {
        return Err(Error::Singular {
            condition_estimate: f64::INFINITY,
        });
    }
    Ok(solution)
}

/// Fixed-point iteration from `ψ4 = 0`.
///
/// Stops once an update has norm below `tol`. The reported iteration count
/// is the number of updates performed before that final, confirming one, so
/// a loop without feedback reports a single iteration. Fails with
/// `NoConvergence` after `max_iter` counted updates, or as soon as the
/// iterate stops being finite.
pub fn iterate_established_loop(
    cfg: &CircuitConfig,
    m: &Operator,
    psi: &State,
    tol: f64,
    max_iter: usize,
) -> Result<LoopSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    check_feedback(cfg, m, psi)?;

    let mut current = State::zero(cfg.dim());
    let mut last_update = f64::INFINITY;
    for iteration in 0..=max_iter {
        let next = loop_map(cfg, m, psi, &current)?.psi4;
        last_update = (&next - &current).norm();
        if !last_update.is_finite() {
            break;
        }
        current = next;
        if last_update < tol {
            return finish(
                cfg,
                m,
                psi,
                current,
                SolveMethod::Iterative {
                    iterations: iteration.max(1),
                },
            );
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_update,
    })
}
