//! TopRank: pairwise elimination over a partial order of items.
//!
//! Items are partitioned into blocks by the "beats" relation learned so far.
//! Blocks are shown in order, items within a block in uniformly random order.
//! For two items of the same block the click difference is accumulated; once
//! it clears the confidence threshold the loser is demoted below the winner.

use rand::seq::SliceRandom;

use crate::environment::SimulationRng;
use crate::model::{Action, ClickOutcome};

use super::{Diagnostics, Feedback, Interaction, Policy};

#[derive(Debug, Clone)]
pub struct TopRank {
    n_items: usize,
    n_slots: usize,
    c: f64,
    delta: f64,
    /// `beats[i * J + j]`: item `i` has been shown to be better than `j`.
    beats: Vec<bool>,
    /// Accumulated `S_ij` and `N_ij = sum |U_ij|`.
    s: Vec<f64>,
    n: Vec<f64>,
    block_of: Vec<usize>,
    rng: SimulationRng,
}

impl TopRank {
    pub fn new(n_items: usize, n_slots: usize, c: f64, delta: f64, rng: SimulationRng) -> Self {
        Self {
            n_items,
            n_slots,
            c,
            delta,
            beats: vec![false; n_items * n_items],
            s: vec![0.0; n_items * n_items],
            n: vec![0.0; n_items * n_items],
            block_of: vec![0; n_items],
            rng,
        }
    }

    /// Current blocks, best first.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let j_n = self.n_items;
        let mut remaining: Vec<usize> = (0..j_n).collect();
        let mut out = Vec::new();
        while !remaining.is_empty() {
            let top: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&j| !remaining.iter().any(|&i| self.beats[i * j_n + j]))
                .collect();
            // A cycle in the relation can only come from a failed confidence
            // event; fall back to one block rather than looping.
            let top = if top.is_empty() {
                remaining.clone()
            } else {
                top
            };
            remaining.retain(|j| !top.contains(j));
            out.push(top);
        }
        out
    }

    /// Demotion threshold for a pair with `N_ij = n`.
    pub fn threshold(&self, n: f64) -> f64 {
        (2.0 * n * (self.c * n.sqrt() / self.delta).ln()).sqrt()
    }

    fn demotions(&self) -> usize {
        self.beats.iter().filter(|b| **b).count()
    }
}

impl Policy for TopRank {
    fn name(&self) -> &str {
        "toprank"
    }

    fn interaction(&self) -> Interaction {
        Interaction::Round
    }

    fn select(&mut self) -> Action {
        let mut ranking = Vec::with_capacity(self.n_items);
        for (d, mut block) in self.blocks().into_iter().enumerate() {
            block.shuffle(&mut self.rng);
            for &j in &block {
                self.block_of[j] = d;
            }
            ranking.extend(block);
        }
        ranking.truncate(self.n_slots);
        Action::new(ranking).expect("blocks partition the items")
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        let Feedback::Round { action, click } = feedback else {
            return;
        };
        // With one click per round U_ij is nonzero only for pairs containing
        // the clicked item, and pairs in blocks below the cutoff see no clicks.
        let ClickOutcome::Slot(k) = click else {
            return;
        };
        let winner = action[k];
        let j_n = self.n_items;
        let d = self.block_of[winner];
        for other in 0..j_n {
            if other == winner || self.block_of[other] != d {
                continue;
            }
            let (wo, ow) = (winner * j_n + other, other * j_n + winner);
            self.s[wo] += 1.0;
            self.s[ow] -= 1.0;
            self.n[wo] += 1.0;
            self.n[ow] += 1.0;
            if !self.beats[wo] && self.s[wo] >= self.threshold(self.n[wo]) {
                self.beats[wo] = true;
            }
        }
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::from([
            ("demotions", self.demotions() as f64),
            ("blocks", self.blocks().len() as f64),
        ])
    }
}
