//! Online learning to rank under a multinomial-logit (MNL) click model.
//!
//! A user shown an ordered list of `K` items clicks at most one of them:
//! slot `k` holding item `j` is clicked with probability proportional to
//! `lambda[k] * alpha[j]`, and nothing is clicked with weight one. The crate
//! provides
//!
//! * [`model`]: click probabilities, expected reward, optimal rankings and
//!   regret bookkeeping;
//! * [`environment`]: a seeded simulator with epoch structure (one ranking is
//!   repeated until a no-click round);
//! * [`inference`]: closed-form estimators for known position biases and an
//!   EM scheme for unknown biases;
//! * [`concentration`]: confidence widths and the numeric machinery behind
//!   the geometric concentration bounds;
//! * [`policies`]: the epoch UCB policies plus TopRank, PBM-UCB and an
//!   MNL-bandit baseline;
//! * [`harness`]: problem presets, replicated experiments and CSV output;
//! * [`checks`]: statistical property suites exposed through the CLI.

pub mod checks;
pub mod concentration;
pub mod environment;
pub mod error;
pub mod harness;
pub mod inference;
pub mod model;
pub mod policies;

pub use environment::{EpochRecord, SimulationRng};
pub use error::{Error, Result};
pub use inference::{CountState, EmConfig, EmEstimate};
pub use model::{Action, ClickOutcome, ProblemInstance, RegretTrace};
pub use policies::{Feedback, Interaction, Policy, PolicyKind};
