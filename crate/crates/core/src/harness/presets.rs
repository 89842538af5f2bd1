//! Benchmark problems.
//!
//! The `problem_*` constructors panic on a zero horizon; [`preset`] returns an
//! error instead.

use crate::error::{Error, Result};
use crate::model::ProblemInstance;

pub const PRESET_NAMES: [&str; 3] = ["a", "b", "c"];

/// Four slots with steeply decaying biases, six items of similar appeal.
pub fn problem_a(horizon: usize) -> ProblemInstance {
    ProblemInstance::new(
        vec![0.3, 0.28, 0.26, 0.24, 0.22, 0.2],
        vec![1.0, 0.3, 0.2, 0.1],
        horizon,
    )
    .expect("preset is valid")
}

/// Three slots whose biases are not sorted, four weak items.
pub fn problem_b(horizon: usize) -> ProblemInstance {
    ProblemInstance::new(vec![0.05, 0.1, 0.15, 0.2], vec![1.0, 0.2, 0.9], horizon)
        .expect("preset is valid")
}

/// Six slots, thirty items: four excellent, two good, the rest poor.
pub fn problem_c(horizon: usize) -> ProblemInstance {
    let mut alpha = vec![1.0; 4];
    alpha.extend([0.8; 2]);
    alpha.extend([0.1; 24]);
    ProblemInstance::new(alpha, vec![1.0, 0.9, 0.7, 0.3, 0.5, 0.7], horizon)
        .expect("preset is valid")
}

/// Looks up a preset by name (`a`, `b`, `c`, optionally written `(a)`).
pub fn preset(name: &str, horizon: usize) -> Result<ProblemInstance> {
    if horizon == 0 {
        return Err(Error::InvalidInstance("horizon must be positive".into()));
    }
    match name.trim().trim_start_matches('(').trim_end_matches(')') {
        "a" => Ok(problem_a(horizon)),
        "b" => Ok(problem_b(horizon)),
        "c" => Ok(problem_c(horizon)),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}
