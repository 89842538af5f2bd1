//! Per-round UCB for the position-based click model with known biases.

use crate::model::{optimal_action, Action, ClickOutcome};

use super::{Feedback, Interaction, Policy};

/// Index `theta_j + sqrt(N_j / N~_j) * sqrt(log t / (2 N_j))` where `N_j`
/// counts displays, `N~_j` bias-weighted displays and `theta_j` is clicks
/// over `N~_j`.
#[derive(Debug, Clone)]
pub struct PbUcb {
    lambda: Vec<f64>,
    clicks: Vec<f64>,
    displays: Vec<f64>,
    exposure: Vec<f64>,
    round: usize,
}

impl PbUcb {
    pub fn new(n_items: usize, lambda: Vec<f64>) -> Self {
        Self {
            lambda,
            clicks: vec![0.0; n_items],
            displays: vec![0.0; n_items],
            exposure: vec![0.0; n_items],
            round: 0,
        }
    }

    pub fn indices(&self, round: usize) -> Vec<f64> {
        let log_t = (round.max(1) as f64).ln();
        (0..self.clicks.len())
            .map(|j| {
                if self.displays[j] == 0.0 {
                    return f64::INFINITY;
                }
                let theta = self.clicks[j] / self.exposure[j];
                theta
                    + (self.displays[j] / self.exposure[j]).sqrt()
                        * (log_t / (2.0 * self.displays[j])).sqrt()
            })
            .collect()
    }
}

impl Policy for PbUcb {
    fn name(&self) -> &str {
        "pbucb"
    }

    fn interaction(&self) -> Interaction {
        Interaction::Round
    }

    fn select(&mut self) -> Action {
        self.round += 1;
        optimal_action(&self.indices(self.round), &self.lambda)
            .expect("dimensions fixed at construction")
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        let Feedback::Round { action, click } = feedback else {
            return;
        };
        for (k, &j) in action.items().iter().enumerate() {
            self.displays[j] += 1.0;
            self.exposure[j] += self.lambda[k];
        }
        if let ClickOutcome::Slot(k) = click {
            self.clicks[action[k]] += 1.0;
        }
    }
}
