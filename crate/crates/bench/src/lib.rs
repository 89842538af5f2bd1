//! Fixtures shared by the benches in `benches/`.

use mnl_ltr::environment::sample_epoch_fast;
use mnl_ltr::inference::Matrix;
use mnl_ltr::{Action, CountState, ProblemInstance, SimulationRng};

/// Count data from `epochs` epochs of cyclically shifted rankings.
pub fn counts(inst: &ProblemInstance, epochs: usize, seed: u64) -> CountState {
    let (j, k) = (inst.n_items(), inst.n_slots());
    let mut rng = SimulationRng::new(seed);
    let mut state = CountState::new(j, k);
    for e in 0..epochs {
        let action = Action::new((0..k).map(|s| (s + e) % j).collect()).expect("distinct items");
        state.update(&sample_epoch_fast(inst, &action, &mut rng), None);
    }
    state
}

/// A deterministic dense weight matrix with no ties.
pub fn weights(rows: usize, cols: usize) -> Matrix<f64> {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| ((r * 31 + c * 17) % 97) as f64 / 97.0 + 1e-6 * c as f64)
                .collect()
        })
        .collect();
    Matrix::from_rows(&data)
}
