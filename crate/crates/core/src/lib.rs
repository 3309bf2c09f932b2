//! Simulator for a two-beam-splitter interferometer whose left output can be
//! sent back in time to the left input of the first splitter.
//!
//! The crate covers two readings of such a feedback arm:
//!
//! * the two-pass protocol ([`timetravel`]): an ordinary forward pass, a
//!   Born-rule collapse, and, on a left outcome, a re-evolution with the
//!   back-injected state, which under the coherence condition cancels the
//!   very output that triggered it;
//! * the established loop ([`loop_solver`]): the self-consistent steady
//!   state in which the launched state always equals the left output.
//!
//! ```
//! use chronoloop::{default_qtltt_params, run_two_pass_protocol, InjectionMode, Operator, Outcome, State};
//!
//! let cfg = default_qtltt_params(1, Operator::identity(1)).unwrap();
//! let report = run_two_pass_protocol(
//!     &cfg,
//!     &State::basis(1, 0),
//!     &InjectionMode::Coherent,
//!     0,
//!     Some(Outcome::Left),
//! )
//! .unwrap();
//! assert_eq!(report.paradox, Some(1.0));
//! ```

pub mod algebra;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod error;
pub mod loop_solver;
pub mod measurement;
pub mod random;
pub mod report;
pub mod timetravel;
pub mod verify;

pub use algebra::{apply, is_unitary, norm_sq, solve_linear, Complex, Operator, State};
pub use circuit::{
    beam_splitter_action, default_qtltt_params, open_loop_pass, two_input_pass, BeamSplitter,
    CircuitConfig, PassResult,
};
pub use error::{Error, Result};
pub use loop_solver::{iterate_established_loop, solve_established_loop, LoopSolution, SolveMethod};
pub use measurement::{born_probabilities, collapse, monte_carlo, EnsembleReport, Outcome};
pub use timetravel::{
    coherent_injection, dephased_injection, paradox_measure, phase_sweep, run_two_pass_protocol,
    InjectionMode, SweepPoint, TwoPassReport,
};
