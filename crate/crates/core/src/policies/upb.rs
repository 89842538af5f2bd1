//! Epoch UCB with unknown position biases.
//!
//! Attractiveness and biases are re-estimated by EM at the start of every
//! epoch, warm started from the previous estimate. The confidence width is
//! driven by the finite-difference sensitivity `beta1^2` of the estimate.

use crate::concentration::{beta1_squared, ucb_width_em, EmWidth};
use crate::inference::{default_init, em_fit, CountState, EmConfig, EmEstimate};
use crate::model::{optimal_action, Action};

use super::{Diagnostics, Feedback, Interaction, Policy};

#[derive(Debug, Clone)]
pub struct EpochUcbUpb {
    variant: EmWidth,
    cfg: EmConfig,
    state: CountState,
    estimate: Option<EmEstimate>,
    epoch: usize,
    em_non_converged: usize,
    beta1_non_converged: usize,
}

impl EpochUcbUpb {
    pub fn new(n_items: usize, n_slots: usize, variant: EmWidth, cfg: EmConfig) -> Self {
        Self {
            variant,
            cfg,
            state: CountState::new(n_items, n_slots),
            estimate: None,
            epoch: 0,
            em_non_converged: 0,
            beta1_non_converged: 0,
        }
    }

    pub fn state(&self) -> &CountState {
        &self.state
    }

    /// The most recent EM estimate, if any data has been seen.
    pub fn estimate(&self) -> Option<&EmEstimate> {
        self.estimate.as_ref()
    }

    /// Refits the model and returns (item indices, estimated biases) for
    /// epoch `l`.
    fn refresh(&mut self, epoch: usize) -> (Vec<f64>, Vec<f64>) {
        let (n_items, n_slots) = (self.state.n_items(), self.state.n_slots());
        if self.state.epochs() == 0 {
            return (vec![f64::INFINITY; n_items], vec![1.0; n_slots]);
        }
        let (a0, l0) = match &self.estimate {
            Some(e) => (e.alpha.clone(), e.lambda.clone()),
            None => default_init(n_items, n_slots),
        };
        let est =
            em_fit(&self.state, &a0, &l0, &self.cfg).expect("EM inputs validated at construction");
        if !est.converged {
            self.em_non_converged += 1;
        }
        let beta = beta1_squared(&self.state, &est, &self.cfg);
        self.beta1_non_converged += beta.non_converged;
        let scores = (0..n_items)
            .map(|j| {
                if self.state.displays(j) == 0 {
                    f64::INFINITY
                } else {
                    est.alpha[j] + ucb_width_em(beta.beta1_sq[j], n_items, epoch, self.variant)
                }
            })
            .collect();
        let lambda = est.lambda.clone();
        self.estimate = Some(est);
        (scores, lambda)
    }
}

impl Policy for EpochUcbUpb {
    fn name(&self) -> &str {
        match self.variant {
            EmWidth::Standard => "epoch-ucb-upb",
            EmWidth::Star => "epoch-ucb-star-upb",
        }
    }

    fn interaction(&self) -> Interaction {
        Interaction::Epoch
    }

    fn select(&mut self) -> Action {
        self.epoch += 1;
        let (scores, lambda) = self.refresh(self.epoch);
        optimal_action(&scores, &lambda).expect("dimensions fixed at construction")
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        if let Feedback::Epoch(rec) = feedback {
            self.state.update(rec, None);
        }
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::from([
            ("epochs", self.state.epochs() as f64),
            ("em_non_converged", self.em_non_converged as f64),
            ("beta1_non_converged", self.beta1_non_converged as f64),
        ])
    }
}
