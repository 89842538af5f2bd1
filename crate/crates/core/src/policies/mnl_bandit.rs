//! Per-cell MNL-bandit UCB: every (slot, item) pair is its own product.

use crate::concentration::{ucb_width_known, UcbWidthParams};
use crate::inference::{gamma_bar, CountState, Matrix};
use crate::model::Action;

use super::{solve_assignment, Feedback, Interaction, Policy};

#[derive(Debug, Clone)]
pub struct MnlBandit {
    state: CountState,
    epoch: usize,
}

impl MnlBandit {
    pub fn new(n_items: usize, n_slots: usize) -> Self {
        Self {
            state: CountState::new(n_items, n_slots),
            epoch: 0,
        }
    }

    /// Per-cell upper confidence bounds on `lambda_k alpha_j`, `+inf` for
    /// cells never tried.
    pub fn indices(&self, epoch: usize) -> Matrix<f64> {
        let (k_n, j_n) = (self.state.n_slots(), self.state.n_items());
        let gamma = gamma_bar(&self.state);
        let mut out = Matrix::zeros(k_n, j_n);
        for k in 0..k_n {
            for j in 0..j_n {
                let n = self.state.placements()[(k, j)];
                out[(k, j)] = if n == 0 {
                    f64::INFINITY
                } else {
                    let p = UcbWidthParams {
                        n_items: j_n * k_n,
                        epoch,
                        exposure: n as f64,
                        alpha_bar: gamma[(k, j)],
                    };
                    gamma[(k, j)] + ucb_width_known(&p)
                };
            }
        }
        out
    }
}

impl Policy for MnlBandit {
    fn name(&self) -> &str {
        "mnl-bandit"
    }

    fn interaction(&self) -> Interaction {
        Interaction::Epoch
    }

    fn select(&mut self) -> Action {
        self.epoch += 1;
        let w = self.indices(self.epoch);
        let items = solve_assignment(&w).expect("dimensions fixed at construction");
        Action::new(items).expect("assignment yields distinct items")
    }

    fn observe(&mut self, feedback: Feedback<'_>) {
        if let Feedback::Epoch(rec) = feedback {
            self.state.update(rec, None);
        }
    }
}
