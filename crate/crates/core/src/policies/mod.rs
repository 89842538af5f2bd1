//! Ranking policies behind a common interface.
//!
//! Epoch policies choose a ranking when an epoch starts and keep it until a
//! no-click round; they see one [`EpochRecord`] per epoch. Round policies
//! choose a ranking every round and see every click.

mod assignment;
mod epoch_ucb;
mod mnl_bandit;
mod pbucb;
mod toprank;
mod upb;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use assignment::{assignment_weight, solve_assignment};
pub use epoch_ucb::{EpochUcb, KnownBiasWidth};
pub use mnl_bandit::MnlBandit;
pub use pbucb::PbUcb;
pub use toprank::TopRank;
pub use upb::EpochUcbUpb;

use crate::concentration::EmWidth;
use crate::environment::{EpochRecord, SimulationRng};
use crate::error::{Error, Result};
use crate::inference::EmConfig;
use crate::model::{Action, ClickOutcome, ProblemInstance};

/// How a policy interacts with the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interaction {
    Epoch,
    Round,
}

/// Feedback delivered to [`Policy::observe`].
#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    /// A finished (or horizon-truncated) epoch.
    Epoch(&'a EpochRecord),
    /// One round of a per-round policy.
    Round {
        action: &'a Action,
        click: ClickOutcome,
    },
}

pub type Diagnostics = BTreeMap<&'static str, f64>;

pub trait Policy: Send {
    fn name(&self) -> &str;

    fn interaction(&self) -> Interaction;

    /// The ranking for the next epoch (epoch policies) or round.
    fn select(&mut self) -> Action;

    fn observe(&mut self, feedback: Feedback<'_>);

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::new()
    }
}

/// Tunables shared by policy constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub em_tolerance: f64,
    pub em_max_iter: usize,
    pub em_floor: f64,
    pub em_ceiling: f64,
    /// TopRank confidence constant `c`.
    pub toprank_c: f64,
    /// TopRank failure probability; `None` means `1 / horizon`.
    pub toprank_delta: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let em = EmConfig::default();
        Self {
            em_tolerance: em.tolerance,
            em_max_iter: em.max_iter,
            em_floor: em.floor,
            em_ceiling: em.ceiling,
            toprank_c: 4.0,
            toprank_delta: None,
        }
    }
}

impl PolicyConfig {
    pub fn em(&self) -> EmConfig {
        EmConfig {
            tolerance: self.em_tolerance,
            max_iter: self.em_max_iter,
            floor: self.em_floor,
            ceiling: self.em_ceiling,
        }
    }
}

/// The registered policies, addressed by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PolicyKind {
    EpochUcb,
    EpochUcbW,
    EpochUcbUpb,
    EpochUcbStarUpb,
    MnlBandit,
    TopRank,
    PbUcb,
    /// Always plays the optimal ranking; its regret is identically zero.
    Oracle,
}

impl PolicyKind {
    /// The seven learning policies, in report order.
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::EpochUcb,
        PolicyKind::EpochUcbW,
        PolicyKind::EpochUcbUpb,
        PolicyKind::EpochUcbStarUpb,
        PolicyKind::MnlBandit,
        PolicyKind::TopRank,
        PolicyKind::PbUcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::EpochUcb => "epoch-ucb",
            PolicyKind::EpochUcbW => "epoch-ucb-w",
            PolicyKind::EpochUcbUpb => "epoch-ucb-upb",
            PolicyKind::EpochUcbStarUpb => "epoch-ucb-star-upb",
            PolicyKind::MnlBandit => "mnl-bandit",
            PolicyKind::TopRank => "toprank",
            PolicyKind::PbUcb => "pbucb",
            PolicyKind::Oracle => "oracle",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PolicyKind::EpochUcb => "epoch UCB with known position biases",
            PolicyKind::EpochUcbW => "epoch UCB with known biases and MNL-bandit width constants",
            PolicyKind::EpochUcbUpb => "epoch UCB with EM-estimated position biases",
            PolicyKind::EpochUcbStarUpb => "epoch UCB with EM-estimated biases and narrowed widths",
            PolicyKind::MnlBandit => "per-cell MNL-bandit UCB solved as an assignment problem",
            PolicyKind::TopRank => "TopRank pairwise elimination (per round)",
            PolicyKind::PbUcb => "position-based-model UCB with known biases (per round)",
            PolicyKind::Oracle => "plays the optimal ranking every round",
        }
    }

    /// Whether the policy is given the true position biases.
    pub fn knows_biases(self) -> bool {
        matches!(
            self,
            PolicyKind::EpochUcb | PolicyKind::EpochUcbW | PolicyKind::PbUcb | PolicyKind::Oracle
        )
    }

    /// Builds a fresh policy for one replication.
    pub fn build(
        self,
        inst: &ProblemInstance,
        cfg: &PolicyConfig,
        rng: SimulationRng,
    ) -> Box<dyn Policy> {
        let (j, k) = (inst.n_items(), inst.n_slots());
        match self {
            PolicyKind::EpochUcb => Box::new(EpochUcb::new(
                j,
                inst.lambda().to_vec(),
                KnownBiasWidth::Strong,
            )),
            PolicyKind::EpochUcbW => Box::new(EpochUcb::new(
                j,
                inst.lambda().to_vec(),
                KnownBiasWidth::Weak,
            )),
            PolicyKind::EpochUcbUpb => {
                Box::new(EpochUcbUpb::new(j, k, EmWidth::Standard, cfg.em()))
            }
            PolicyKind::EpochUcbStarUpb => {
                Box::new(EpochUcbUpb::new(j, k, EmWidth::Star, cfg.em()))
            }
            PolicyKind::MnlBandit => Box::new(MnlBandit::new(j, k)),
            PolicyKind::TopRank => {
                let delta = cfg.toprank_delta.unwrap_or(1.0 / inst.horizon() as f64);
                Box::new(TopRank::new(j, k, cfg.toprank_c, delta, rng))
            }
            PolicyKind::PbUcb => Box::new(PbUcb::new(j, inst.lambda().to_vec())),
            PolicyKind::Oracle => Box::new(FixedPolicy::new("oracle", inst.optimal_action())),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .iter()
            .chain(std::iter::once(&PolicyKind::Oracle))
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> Self {
        k.name().to_string()
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Plays one ranking forever, one epoch at a time.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    name: String,
    action: Action,
}

impl FixedPolicy {
    pub fn new(name: impl Into<String>, action: Action) -> Self {
        Self {
            name: name.into(),
            action,
        }
    }
}

impl Policy for FixedPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn interaction(&self) -> Interaction {
        Interaction::Epoch
    }

    fn select(&mut self) -> Action {
        self.action.clone()
    }

    fn observe(&mut self, _feedback: Feedback<'_>) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert_eq!("oracle".parse::<PolicyKind>().unwrap(), PolicyKind::Oracle);
        assert!("thompson".parse::<PolicyKind>().is_err());
    }
}
