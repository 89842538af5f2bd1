//! Maximum-weight assignment of slots to distinct items.
//!
//! Rows are slots, columns items, `K <= J`. The slot/item constraints have
//! a totally unimodular coefficient matrix, so the combinatorial optimum is
//! also the optimum of the linear relaxation. Solved with the O(K^2 J)
//! shortest augmenting path form of the Hungarian method.

use crate::error::{Error, Result};
use crate::inference::Matrix;

/// Returns the item assigned to each slot, maximising the total weight.
///
/// Infinite weights mark cells that must be preferred over every finite
/// cell; they are replaced by a value larger than any finite assignment.
pub fn solve_assignment(weights: &Matrix<f64>) -> Result<Vec<usize>> {
    let (n, m) = (weights.rows(), weights.cols());
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!(
            "assignment needs 1 <= slots <= items, got {n} x {m}"
        )));
    }
    if (0..n).any(|r| {
        weights
            .row(r)
            .iter()
            .any(|w| w.is_nan() || *w == f64::NEG_INFINITY)
    }) {
        return Err(Error::InvalidArgument(
            "assignment weights must be finite or +inf".into(),
        ));
    }
    let finite_max = (0..n)
        .flat_map(|r| weights.row(r).iter().copied())
        .filter(|w| w.is_finite())
        .fold(0.0f64, |acc, w| acc.max(w.abs()));
    let sentinel = 1.0 + 2.0 * n as f64 * finite_max.max(1.0);

    // Minimise cost = -weight. Arrays are 1-based; index 0 is a virtual column.
    let cost = |i: usize, j: usize| -> f64 {
        let w = weights[(i - 1, j - 1)];
        if w == f64::INFINITY {
            -sentinel
        } else {
            -w
        }
    };
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    Ok(out)
}

/// Total weight of an assignment.
pub fn assignment_weight(weights: &Matrix<f64>, items: &[usize]) -> f64 {
    items
        .iter()
        .enumerate()
        .map(|(k, &j)| weights[(k, j)])
        .sum()
}
