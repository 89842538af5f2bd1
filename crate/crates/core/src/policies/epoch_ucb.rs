//! Epoch UCB with known position biases.

use crate::concentration::{ucb_width_known, ucb_width_weak, UcbWidthParams};
use crate::inference::{alpha_bar, CountState};
use crate::model::{optimal_action, Action};

use super::{Diagnostics, Feedback, Interaction, Policy};

/// Which confidence width the index uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnownBiasWidth {
    /// Constants 4 and `log(J l^2 / 2)`.
    Strong,
    /// Constants 48 and `log(sqrt(J) l / sqrt(2))`.
    Weak,
}

#[derive(Debug, Clone)]
pub struct EpochUcb {
    lambda: Vec<f64>,
    width: KnownBiasWidth,
    state: CountState,
    epoch: usize,
}

impl EpochUcb {
    pub fn new(n_items: usize, lambda: Vec<f64>, width: KnownBiasWidth) -> Self {
        let state = CountState::new(n_items, lambda.len());
        Self {
            lambda,
            width,
            state,
            epoch: 0,
        }
    }

    pub fn state(&self) -> &CountState {
        &self.state
    }

    /// Upper confidence bounds for epoch `l`; `+inf` for items never shown.
    pub fn indices(&self, epoch: usize) -> Vec<f64> {
        let bar = alpha_bar(&self.state);
        let exposure = self.state.exposure();
        (0..self.state.n_items())
            .map(|j| {
                if exposure[j] <= 0.0 {
                    return f64::INFINITY;
                }
                let p = UcbWidthParams {
                    n_items: self.state.n_items(),
                    epoch,
                    exposure: exposure[j],
                    alpha_bar: bar[j],
                };
                let w = match self.width {
                    KnownBiasWidth::Strong => ucb_width_known(&p),
                    KnownBiasWidth::Weak => ucb_width_weak(&p),
                };
                bar[j] + w
            })
            .collect()
    }
}

impl Policy for EpochUcb {
    fn name(&self) -> &str {
        match self.width {
            KnownBiasWidth::Strong => "epoch-ucb",
            KnownBiasWidth::Weak => "epoch-ucb-w",
        }
    }

    fn interaction(&self) -> Interaction {
        Interaction::Epoch
    }

    fn select(&mut self) -> Action {
        self.epoch += 1;
        let scores = self.indices(self.epoch);
        optimal_action(&scores, &self.lambda).expect("dimensions fixed at construction")
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        if let Feedback::Epoch(rec) = feedback {
            self.state.update(rec, Some(&self.lambda));
        }
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::from([("epochs", self.state.epochs() as f64)])
    }
}
