//! Click simulator and epoch bookkeeping.
//!
//! An epoch repeats one action until the first round without a click (or
//! until the horizon runs out). Under the MNL model the per-slot click counts
//! of a complete epoch are geometric with parameter `1 / (1 + lambda_k alpha)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};

use crate::model::{Action, ClickOutcome, ProblemInstance};

/// Seedable, splittable generator. One per replication.
#[derive(Debug, Clone)]
pub struct SimulationRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimulationRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for replication `rep` of an experiment seeded with `base`.
    pub fn for_replication(base: u64, rep: usize) -> Self {
        Self::new(base.wrapping_add(rep as u64))
    }

    /// An independent stream derived from the same seed.
    pub fn split(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Self {
            seed: self.seed,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SimulationRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One epoch: the action shown, clicks per slot and the number of rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochRecord {
    pub action: Action,
    pub slot_clicks: Vec<usize>,
    pub length: usize,
    /// The horizon ended the epoch before a no-click round was observed.
    pub truncated: bool,
}

impl EpochRecord {
    pub fn total_clicks(&self) -> usize {
        self.slot_clicks.iter().sum()
    }

    /// Rounds without a click: one for a complete epoch, zero if truncated.
    pub fn no_click_rounds(&self) -> usize {
        self.length - self.total_clicks()
    }
}

/// One categorical draw from the click distribution of `action`.
///
/// The action is assumed valid for `inst`.
pub fn sample_click<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    action: &Action,
    rng: &mut R,
) -> ClickOutcome {
    let weights = inst.slot_weights(action);
    let total = 1.0 + weights.iter().sum::<f64>();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return ClickOutcome::Slot(k);
        }
        u -= w;
    }
    ClickOutcome::NoClick
}

/// Shows `action` round by round until a no-click or `rounds_left` rounds.
pub fn run_epoch<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    action: &Action,
    rounds_left: usize,
    rng: &mut R,
) -> EpochRecord {
    assert!(rounds_left >= 1, "an epoch needs at least one round");
    let mut slot_clicks = vec![0; action.len()];
    let mut length = 0;
    while length < rounds_left {
        length += 1;
        match sample_click(inst, action, rng) {
            ClickOutcome::Slot(k) => slot_clicks[k] += 1,
            ClickOutcome::NoClick => {
                return EpochRecord {
                    action: action.clone(),
                    slot_clicks,
                    length,
                    truncated: false,
                }
            }
        }
    }
    EpochRecord {
        action: action.clone(),
        slot_clicks,
        length,
        truncated: true,
    }
}

/// Draws a complete (untruncated) epoch directly.
///
/// The total number of clicks is geometric with the no-click probability as
/// parameter; clicks are then split over slots multinomially in proportion to
/// the slot weights.
pub fn sample_epoch_fast<R: Rng + ?Sized>(
    inst: &ProblemInstance,
    action: &Action,
    rng: &mut R,
) -> EpochRecord {
    let weights = inst.slot_weights(action);
    let s: f64 = weights.iter().sum();
    let p0 = 1.0 / (1.0 + s);
    let total = Geometric::new(p0)
        .expect("no-click probability lies in (0, 1]")
        .sample(rng) as usize;

    let mut slot_clicks = vec![0; action.len()];
    let mut remaining = total as u64;
    let mut mass_left = s;
    for (k, w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == weights.len() {
            slot_clicks[k] = remaining as usize;
            break;
        }
        let p = (w / mass_left).clamp(0.0, 1.0);
        let n = Binomial::new(remaining, p)
            .expect("valid binomial")
            .sample(rng);
        slot_clicks[k] = n as usize;
        remaining -= n;
        mass_left -= w;
    }
    EpochRecord {
        action: action.clone(),
        slot_clicks,
        length: total + 1,
        truncated: false,
    }
}
