//! The MNL click model: problem instances, actions, reward and regret.
//!
//! Items and slots are zero-indexed throughout the crate. Slot `k` of an
//! [`Action`] holds item `action[k]`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground truth of a simulation: attractiveness per item, bias per slot and
/// the number of rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProblemInstance {
    alpha: Vec<f64>,
    lambda: Vec<f64>,
    horizon: usize,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    alpha: Vec<f64>,
    lambda: Vec<f64>,
    horizon: usize,
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        ProblemInstance::new(raw.alpha, raw.lambda, raw.horizon)
    }
}

impl From<ProblemInstance> for RawInstance {
    fn from(inst: ProblemInstance) -> Self {
        RawInstance {
            alpha: inst.alpha,
            lambda: inst.lambda,
            horizon: inst.horizon,
        }
    }
}

fn in_unit_interval(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

impl ProblemInstance {
    /// Builds an instance. Position biases need not be sorted.
    pub fn new(alpha: Vec<f64>, lambda: Vec<f64>, horizon: usize) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one slot is required".into(),
            ));
        }
        if lambda.len() > alpha.len() {
            return Err(Error::InvalidInstance(format!(
                "{} slots but only {} items",
                lambda.len(),
                alpha.len()
            )));
        }
        if let Some(a) = alpha.iter().find(|a| !in_unit_interval(**a)) {
            return Err(Error::InvalidInstance(format!(
                "attractiveness {a} not in (0,1]"
            )));
        }
        if let Some(l) = lambda.iter().find(|l| !in_unit_interval(**l)) {
            return Err(Error::InvalidInstance(format!(
                "position bias {l} not in (0,1]"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidInstance("horizon must be positive".into()));
        }
        Ok(Self {
            alpha,
            lambda,
            horizon,
        })
    }

    pub fn n_items(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_slots(&self) -> usize {
        self.lambda.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.alpha.clone(), self.lambda.clone(), horizon)
    }

    /// Checks that `action` fills every slot with a distinct, in-range item.
    pub fn validate(&self, action: &Action) -> Result<()> {
        if action.len() != self.n_slots() {
            return Err(Error::InvalidAction(format!(
                "action has {} slots, instance has {}",
                action.len(),
                self.n_slots()
            )));
        }
        if let Some(&j) = action.items().iter().find(|&&j| j >= self.n_items()) {
            return Err(Error::InvalidAction(format!(
                "item {j} out of range for {} items",
                self.n_items()
            )));
        }
        Ok(())
    }

    /// `S = sum_k lambda[k] * alpha[a_k]`, the total click weight of an action.
    pub fn click_weight(&self, action: &Action) -> Result<f64> {
        self.validate(action)?;
        Ok(self.click_weight_unchecked(action))
    }

    pub(crate) fn click_weight_unchecked(&self, action: &Action) -> f64 {
        action
            .items()
            .iter()
            .zip(&self.lambda)
            .map(|(&j, &l)| l * self.alpha[j])
            .sum()
    }

    /// Per-slot click weights `lambda[k] * alpha[a_k]`.
    pub(crate) fn slot_weights(&self, action: &Action) -> Vec<f64> {
        action
            .items()
            .iter()
            .zip(&self.lambda)
            .map(|(&j, &l)| l * self.alpha[j])
            .collect()
    }

    /// The optimal ranking under the true parameters.
    pub fn optimal_action(&self) -> Action {
        optimal_action(&self.alpha, &self.lambda).expect("instance dimensions are valid")
    }
}

/// An ordered list of distinct items, one per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Action(Vec<usize>);

impl Action {
    /// Builds an action, rejecting empty lists and repeated items.
    pub fn new(slots: Vec<usize>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidAction(
                "action must fill at least one slot".into(),
            ));
        }
        let mut sorted = slots.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidAction(format!("item {} appears twice", w[0])));
        }
        Ok(Self(slots))
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.contains(&item)
    }

    /// Slot holding `item`, if displayed.
    pub fn slot_of(&self, item: usize) -> Option<usize> {
        self.0.iter().position(|&j| j == item)
    }
}

impl TryFrom<Vec<usize>> for Action {
    type Error = Error;

    fn try_from(slots: Vec<usize>) -> Result<Self> {
        Action::new(slots)
    }
}

impl From<Action> for Vec<usize> {
    fn from(a: Action) -> Self {
        a.0
    }
}

impl Index<usize> for Action {
    type Output = usize;

    fn index(&self, slot: usize) -> &usize {
        &self.0[slot]
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, ")")
    }
}

/// Result of one round: no click, or a click on a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClickOutcome {
    NoClick,
    Slot(usize),
}

impl ClickOutcome {
    pub fn is_click(self) -> bool {
        matches!(self, ClickOutcome::Slot(_))
    }

    /// Encoding used in reports: `0` for no click, `k + 1` for slot `k`.
    pub fn code(self) -> usize {
        match self {
            ClickOutcome::NoClick => 0,
            ClickOutcome::Slot(k) => k + 1,
        }
    }
}

/// Probabilities of no click (entry 0) and of a click on each slot
/// (entry `k + 1`).
pub fn click_distribution(inst: &ProblemInstance, action: &Action) -> Result<Vec<f64>> {
    inst.validate(action)?;
    let weights = inst.slot_weights(action);
    let denom = 1.0 + weights.iter().sum::<f64>();
    let mut probs = Vec::with_capacity(weights.len() + 1);
    probs.push(0.0);
    probs.extend(weights.iter().map(|w| w / denom));
    probs[0] = 1.0 - probs[1..].iter().sum::<f64>();
    Ok(probs)
}

/// Probability of any click, `S / (1 + S)`.
pub fn expected_reward(inst: &ProblemInstance, action: &Action) -> Result<f64> {
    let s = inst.click_weight(action)?;
    Ok(s / (1.0 + s))
}

/// Indices sorted by descending value, ties to the lower index.
pub(crate) fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// The ranking maximising `sum_k biases[k] * scores[a_k]`.
///
/// The item with the k-th largest score goes to the slot with the k-th
/// largest bias. Since the reward `S / (1 + S)` is increasing in `S`, this is
/// also the reward-optimal action for the given scores. Scores may exceed one
/// or be infinite (optimistic placeholders for unexplored items).
pub fn optimal_action(scores: &[f64], biases: &[f64]) -> Result<Action> {
    if biases.is_empty() || biases.len() > scores.len() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= K <= J, got K = {} and J = {}",
            biases.len(),
            scores.len()
        )));
    }
    if scores.iter().chain(biases).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN score or bias".into()));
    }
    let items = rank_descending(scores);
    let slots = rank_descending(biases);
    let mut out = vec![0; biases.len()];
    for (&slot, &item) in slots.iter().zip(&items) {
        out[slot] = item;
    }
    Action::new(out)
}

/// Order `sqrt(J T S_{K,2}^2 / S_K)` of the minimax regret lower bound, with
/// `S_K = sum lambda` and `S_{K,2} = sum lambda^2`.
pub fn lower_bound_value(inst: &ProblemInstance) -> f64 {
    let s_k: f64 = inst.lambda().iter().sum();
    let s_k2: f64 = inst.lambda().iter().map(|l| l * l).sum();
    (inst.n_items() as f64 * inst.horizon() as f64 * s_k2 * s_k2 / s_k).sqrt()
}

/// Per-round and cumulative regret of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretTrace {
    per_round: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn with_capacity(horizon: usize) -> Self {
        Self {
            per_round: Vec::with_capacity(horizon),
            cumulative: Vec::with_capacity(horizon),
        }
    }

    pub fn from_per_round(per_round: Vec<f64>) -> Self {
        let mut trace = Self::with_capacity(per_round.len());
        for r in per_round {
            trace.push(r);
        }
        trace
    }

    /// Rebuilds a trace from stored cumulative values; per-round values are
    /// recovered as differences.
    pub fn from_cumulative(cumulative: Vec<f64>) -> Self {
        let per_round = cumulative
            .iter()
            .scan(0.0, |prev, &c| {
                let r = c - *prev;
                *prev = c;
                Some(r)
            })
            .collect();
        Self {
            per_round,
            cumulative,
        }
    }

    pub fn push(&mut self, regret: f64) {
        let last = self.cumulative.last().copied().unwrap_or(0.0);
        self.per_round.push(regret);
        self.cumulative.push(last + regret);
    }

    /// Appends `rounds` copies of the same per-round regret.
    pub fn extend_constant(&mut self, regret: f64, rounds: usize) {
        for _ in 0..rounds {
            self.push(regret);
        }
    }

    pub fn per_round(&self) -> &[f64] {
        &self.per_round
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.per_round.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_round.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}
