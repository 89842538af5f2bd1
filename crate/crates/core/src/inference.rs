//! Sufficient statistics and parameter estimators.
//!
//! With known position biases the attractiveness of item `j` is estimated by
//! total clicks over total bias-weighted exposure. With unknown biases the
//! first slot's bias is pinned to one and attractiveness and biases are
//! estimated jointly by alternating closed-form updates (EM).

use std::ops::{Index, IndexMut};

use crate::environment::EpochRecord;
use crate::error::{Error, Result};

/// Dense `rows x cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }
}

impl<T: Clone> Matrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }
}

impl<T> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Aggregated epoch data.
///
/// `clicks[(k, j)]` counts clicks on slot `k` while item `j` occupied it;
/// `placements[(k, j)]` counts epochs in which item `j` was in slot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountState {
    clicks: Matrix<u64>,
    placements: Matrix<u64>,
    exposure: Vec<f64>,
    item_clicks: Vec<u64>,
    epochs: u64,
}

impl CountState {
    pub fn new(n_items: usize, n_slots: usize) -> Self {
        Self {
            clicks: Matrix::zeros(n_slots, n_items),
            placements: Matrix::zeros(n_slots, n_items),
            exposure: vec![0.0; n_items],
            item_clicks: vec![0; n_items],
            epochs: 0,
        }
    }

    /// Builds a state directly from count matrices (rows are slots).
    ///
    /// The epoch count is taken as the number of placements in the first
    /// slot; exposure is left at zero.
    pub fn from_counts(clicks: Matrix<u64>, placements: Matrix<u64>) -> Result<Self> {
        if clicks.rows() != placements.rows() || clicks.cols() != placements.cols() {
            return Err(Error::InvalidArgument(
                "click and placement matrices differ in shape".into(),
            ));
        }
        let (k, j) = (clicks.rows(), clicks.cols());
        let item_clicks = (0..j)
            .map(|c| (0..k).map(|r| clicks[(r, c)]).sum())
            .collect();
        let epochs = placements.row(0).iter().sum();
        Ok(Self {
            clicks,
            placements,
            exposure: vec![0.0; j],
            item_clicks,
            epochs,
        })
    }

    pub fn n_items(&self) -> usize {
        self.clicks.cols()
    }

    pub fn n_slots(&self) -> usize {
        self.clicks.rows()
    }

    pub fn clicks(&self) -> &Matrix<u64> {
        &self.clicks
    }

    pub fn placements(&self) -> &Matrix<u64> {
        &self.placements
    }

    /// Bias-weighted exposure per item (known-bias mode only).
    pub fn exposure(&self) -> &[f64] {
        &self.exposure
    }

    pub fn item_clicks(&self) -> &[u64] {
        &self.item_clicks
    }

    pub fn epochs(&self) -> u64 {
        self.epochs
    }

    /// Number of epochs in which item `j` was displayed.
    pub fn displays(&self, j: usize) -> u64 {
        (0..self.n_slots()).map(|k| self.placements[(k, j)]).sum()
    }

    /// Adds one epoch. When `lambda_known` is given, bias-weighted exposure
    /// is accumulated as well.
    pub fn update(&mut self, epoch: &EpochRecord, lambda_known: Option<&[f64]>) {
        for (k, (&j, &n)) in epoch
            .action
            .items()
            .iter()
            .zip(&epoch.slot_clicks)
            .enumerate()
        {
            self.clicks[(k, j)] += n as u64;
            self.placements[(k, j)] += 1;
            self.item_clicks[j] += n as u64;
            if let Some(lambda) = lambda_known {
                self.exposure[j] += lambda[k];
            }
        }
        self.epochs += 1;
    }
}

/// Known-bias estimator `alpha_bar[j] = clicks_j / exposure_j`, zero for
/// items never shown. Not clipped to `(0, 1]`.
pub fn alpha_bar(state: &CountState) -> Vec<f64> {
    state
        .item_clicks
        .iter()
        .zip(&state.exposure)
        .map(|(&c, &e)| if e > 0.0 { c as f64 / e } else { 0.0 })
        .collect()
}

/// Per-cell product estimates `clicks[(k, j)] / placements[(k, j)]`, with
/// `0 / 0 = 0`.
pub fn gamma_bar(state: &CountState) -> Matrix<f64> {
    let mut out = Matrix::zeros(state.n_slots(), state.n_items());
    for k in 0..state.n_slots() {
        for j in 0..state.n_items() {
            let placed = state.placements[(k, j)];
            if placed > 0 {
                out[(k, j)] = state.clicks[(k, j)] as f64 / placed as f64;
            }
        }
    }
    out
}

/// Stopping rule and clipping range for [`em_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    /// Stop once the largest parameter change is at most `tolerance`.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Lower bound applied to every intermediate estimate.
    pub floor: f64,
    /// Upper bound applied to every intermediate estimate. Both parameter
    /// families live in `(0, 1]`; without this bound a floored attraction
    /// can pair with an unbounded bias and the iteration settles on a
    /// degenerate point. `f64::INFINITY` disables it.
    pub ceiling: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iter: 10_000,
            floor: 1e-6,
            ceiling: 1.0,
        }
    }
}

impl EmConfig {
    fn check(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "EM tolerance must be in (0,1), got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 || self.floor <= 0.0 {
            return Err(Error::InvalidArgument(
                "EM needs max_iter >= 1 and a positive floor".into(),
            ));
        }
        if !(self.ceiling > self.floor) {
            return Err(Error::InvalidArgument(format!(
                "EM ceiling {} must exceed the floor {}",
                self.ceiling, self.floor
            )));
        }
        Ok(())
    }
}

/// Output of [`em_fit`]. `lambda[0]` is pinned to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmEstimate {
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Default EM starting point: everything at 0.5 except the pinned slot.
pub fn default_init(n_items: usize, n_slots: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lambda = vec![0.5; n_slots];
    lambda[0] = 1.0;
    (vec![0.5; n_items], lambda)
}

/// Count data seen by the EM iteration, optionally with one click added to a
/// single cell. Shared by [`em_fit`] and the finite-difference bounds.
pub(crate) struct EmData<'a> {
    clicks: &'a Matrix<u64>,
    extra: Option<(usize, usize)>,
    displays: Vec<f64>,
    epochs: f64,
}

impl<'a> EmData<'a> {
    pub(crate) fn new(state: &'a CountState) -> Self {
        let displays = (0..state.n_items())
            .map(|j| state.displays(j) as f64)
            .collect();
        Self {
            clicks: &state.clicks,
            extra: None,
            displays,
            epochs: state.epochs as f64,
        }
    }

    pub(crate) fn set_extra_click(&mut self, cell: Option<(usize, usize)>) {
        self.extra = cell;
    }

    #[inline]
    fn n(&self, k: usize, j: usize) -> f64 {
        let base = self.clicks[(k, j)] as f64;
        if self.extra == Some((k, j)) {
            base + 1.0
        } else {
            base
        }
    }

    /// Runs the alternating updates in place. Returns (iterations, converged).
    pub(crate) fn iterate(
        &self,
        alpha: &mut [f64],
        lambda: &mut [f64],
        cfg: &EmConfig,
        mut observe: impl FnMut(&[f64], &[f64]),
    ) -> (usize, bool) {
        let n_slots = lambda.len();
        let n_items = alpha.len();
        lambda[0] = 1.0;
        let mut iterations = 0;
        while iterations < cfg.max_iter {
            iterations += 1;
            let mut change: f64 = 0.0;
            for k in 1..n_slots {
                let mut sum = 0.0;
                for (j, &a) in alpha.iter().enumerate() {
                    sum += self.n(k, j) / a;
                }
                let next = if self.epochs > 0.0 {
                    sum / self.epochs
                } else {
                    0.0
                };
                let next = next.clamp(cfg.floor, cfg.ceiling);
                change = change.max((next - lambda[k]).abs());
                lambda[k] = next;
            }
            for j in 0..n_items {
                let mut sum = 0.0;
                for (k, &l) in lambda.iter().enumerate() {
                    sum += self.n(k, j) / l;
                }
                let next = if self.displays[j] > 0.0 {
                    sum / self.displays[j]
                } else {
                    0.0
                };
                let next = next.clamp(cfg.floor, cfg.ceiling);
                change = change.max((next - alpha[j]).abs());
                alpha[j] = next;
            }
            observe(alpha, lambda);
            if change <= cfg.tolerance {
                return (iterations, true);
            }
        }
        (iterations, false)
    }
}

/// Joint attractiveness and bias estimates by alternating updates.
///
/// Each iteration sets, for slots `k >= 1`,
/// `lambda[k] = (1/L) sum_j N[k][j] / alpha[j]`, then for every item
/// `alpha[j] = (sum_k N[k][j] / lambda[k]) / displays_j`, clipping every
/// value to `[cfg.floor, cfg.ceiling]`. Iteration stops when the largest
/// absolute change is at most `cfg.tolerance`; hitting `cfg.max_iter`
/// returns the last iterate with `converged = false`.
pub fn em_fit(
    state: &CountState,
    init_alpha: &[f64],
    init_lambda: &[f64],
    cfg: &EmConfig,
) -> Result<EmEstimate> {
    em_fit_observed(state, init_alpha, init_lambda, cfg, |_, _| {})
}

/// [`em_fit`] with a callback receiving every iterate.
pub fn em_fit_observed(
    state: &CountState,
    init_alpha: &[f64],
    init_lambda: &[f64],
    cfg: &EmConfig,
    observe: impl FnMut(&[f64], &[f64]),
) -> Result<EmEstimate> {
    cfg.check()?;
    if init_alpha.len() != state.n_items() || init_lambda.len() != state.n_slots() {
        return Err(Error::InvalidArgument(
            "EM initial values have the wrong dimensions".into(),
        ));
    }
    if state.epochs == 0 {
        return Err(Error::InvalidArgument(
            "EM needs at least one epoch of data".into(),
        ));
    }
    let mut alpha: Vec<f64> = init_alpha
        .iter()
        .map(|a| a.clamp(cfg.floor, cfg.ceiling))
        .collect();
    let mut lambda: Vec<f64> = init_lambda
        .iter()
        .map(|l| l.clamp(cfg.floor, cfg.ceiling))
        .collect();
    let (iterations, converged) = EmData::new(state).iterate(&mut alpha, &mut lambda, cfg, observe);
    Ok(EmEstimate {
        alpha,
        lambda,
        iterations,
        converged,
    })
}

/// `sum_{k,j} N log(alpha_j lambda_k) - (N + placements) log(1 + alpha_j lambda_k)`.
pub fn log_likelihood(state: &CountState, alpha: &[f64], lambda: &[f64]) -> Result<f64> {
    if alpha.len() != state.n_items() || lambda.len() != state.n_slots() {
        return Err(Error::InvalidArgument(
            "parameter dimensions do not match counts".into(),
        ));
    }
    if alpha.iter().chain(lambda).any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument(
            "likelihood parameters must be positive".into(),
        ));
    }
    let mut ll = 0.0;
    for (k, &l) in lambda.iter().enumerate() {
        for (j, &a) in alpha.iter().enumerate() {
            let n = state.clicks[(k, j)] as f64;
            let placed = state.placements[(k, j)] as f64;
            let g = a * l;
            if n > 0.0 {
                ll += n * g.ln();
            }
            ll -= (n + placed) * g.ln_1p();
        }
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Action;

    fn epoch(items: &[usize], clicks: &[usize]) -> EpochRecord {
        EpochRecord {
            action: Action::new(items.to_vec()).unwrap(),
            slot_clicks: clicks.to_vec(),
            length: clicks.iter().sum::<usize>() + 1,
            truncated: false,
        }
    }

    pub(crate) fn two_by_two() -> CountState {
        CountState::from_counts(
            Matrix::from_rows(&[vec![4, 2], vec![1, 1]]),
            Matrix::from_rows(&[vec![10, 10], vec![10, 10]]),
        )
        .unwrap()
    }

    #[test]
    fn single_epoch_bookkeeping() {
        let mut s = CountState::new(2, 2);
        s.update(&epoch(&[0, 1], &[3, 0]), Some(&[1.0, 0.5]));
        assert_eq!(s.clicks()[(0, 0)], 3);
        assert_eq!(s.placements()[(0, 0)], 1);
        assert_eq!(s.placements()[(1, 1)], 1);
        assert_eq!(s.placements()[(0, 1)], 0);
        assert_eq!(s.item_clicks(), &[3, 0]);
        assert_eq!(s.exposure(), &[1.0, 0.5]);
        assert_eq!(s.epochs(), 1);
    }

    #[test]
    fn exposure_accumulates_across_slots() {
        let mut s = CountState::new(2, 2);
        let lambda = [1.0, 0.5];
        s.update(&epoch(&[0, 1], &[0, 0]), Some(&lambda));
        s.update(&epoch(&[1, 0], &[0, 0]), Some(&lambda));
        assert_eq!(s.exposure()[0], 1.5);
    }

    #[test]
    fn alpha_bar_conventions() {
        let mut s = CountState::new(3, 2);
        s.update(&epoch(&[0, 1], &[0, 1]), Some(&[1.0, 0.5]));
        let a = alpha_bar(&s);
        assert_eq!(a[2], 0.0);
        assert_eq!(a[1], 2.0);
    }

    #[test]
    fn gamma_bar_conventions() {
        let mut clicks = Matrix::zeros(1, 2);
        clicks[(0, 0)] = 2;
        let mut placed = Matrix::zeros(1, 2);
        placed[(0, 0)] = 8;
        let s = CountState::from_counts(clicks, placed).unwrap();
        let g = gamma_bar(&s);
        assert_eq!(g[(0, 0)], 0.25);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn em_two_by_two_closed_form() {
        let s = two_by_two();
        let (a0, l0) = default_init(2, 2);
        let cfg = EmConfig {
            tolerance: 1e-12,
            ..EmConfig::default()
        };
        let est = em_fit(&s, &a0, &l0, &cfg).unwrap();
        let x = 2.0 * 2f64.sqrt();
        assert!(est.converged);
        assert!((est.alpha[0] - (4.0 + x) / 20.0).abs() < 1e-9);
        assert!((est.alpha[1] - (2.0 + x) / 20.0).abs() < 1e-9);
        assert!((est.lambda[1] - 1.0 / x).abs() < 1e-9);
        assert!((est.alpha[0] - 0.34142).abs() < 1e-5);
        assert!((est.alpha[1] - 0.24142).abs() < 1e-5);
        assert!((est.lambda[1] - 0.35355).abs() < 1e-5);
        assert_eq!(est.lambda[0], 1.0);
    }

    #[test]
    fn em_no_clicks_goes_to_floor() {
        let s = CountState::from_counts(
            Matrix::zeros(2, 3),
            Matrix::from_rows(&[vec![1, 1, 0], vec![1, 0, 1]]),
        )
        .unwrap();
        let (a0, l0) = default_init(3, 2);
        let cfg = EmConfig::default();
        let est = em_fit(&s, &a0, &l0, &cfg).unwrap();
        assert!(est.converged);
        assert!(est.iterations <= 2);
        assert!(est.alpha.iter().all(|&a| a == cfg.floor));
        assert_eq!(est.lambda, vec![1.0, cfg.floor]);
    }

    #[test]
    fn em_ceiling_blocks_degenerate_point() {
        // Slot 1 only ever held item 1, which was shown once elsewhere. From a
        // floored start the unclipped iteration drives lambda[1] to ~1e5.
        let s = CountState::from_counts(
            Matrix::from_rows(&[vec![0, 0, 22], vec![0, 18, 0]]),
            Matrix::from_rows(&[vec![1, 0, 99], vec![0, 100, 0]]),
        )
        .unwrap();
        let start_a = [1e-6, 1e-6, 0.2];
        let start_l = [1.0, 1e-6];
        let open = EmConfig {
            ceiling: f64::INFINITY,
            ..EmConfig::default()
        };
        let loose = em_fit(&s, &start_a, &start_l, &open).unwrap();
        assert!(loose.lambda[1] > 1e3);
        let est = em_fit(&s, &start_a, &start_l, &EmConfig::default()).unwrap();
        assert!(est.lambda.iter().chain(&est.alpha).all(|&v| v <= 1.0));
        assert!((est.alpha[1] * est.lambda[1] - 0.18).abs() < 1e-3);
    }

    #[test]
    fn em_reports_non_convergence() {
        let s = two_by_two();
        let (a0, l0) = default_init(2, 2);
        let cfg = EmConfig {
            max_iter: 2,
            ..EmConfig::default()
        };
        let est = em_fit(&s, &a0, &l0, &cfg).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 2);
    }

    #[test]
    fn em_rejects_bad_inputs() {
        let s = two_by_two();
        let (a0, l0) = default_init(2, 2);
        let bad = EmConfig {
            tolerance: 1.5,
            ..EmConfig::default()
        };
        assert!(em_fit(&s, &a0, &l0, &bad).is_err());
        let inverted = EmConfig {
            ceiling: 1e-7,
            ..EmConfig::default()
        };
        assert!(em_fit(&s, &a0, &l0, &inverted).is_err());
        assert!(em_fit(&CountState::new(2, 2), &a0, &l0, &EmConfig::default()).is_err());
        assert!(em_fit(&s, &a0[..1], &l0, &EmConfig::default()).is_err());
    }

    #[test]
    fn log_likelihood_closed_form() {
        let s = CountState::from_counts(
            Matrix::zeros(2, 3),
            Matrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 1]]),
        )
        .unwrap();
        let ll = log_likelihood(&s, &[1.0; 3], &[1.0; 2]).unwrap();
        assert!((ll + 6.0 * 2f64.ln()).abs() < 1e-12);
        assert!(log_likelihood(&s, &[1.0, 0.0, 1.0], &[1.0; 2]).is_err());
    }

    #[test]
    fn em_fixed_point_beats_initial_point() {
        let s = two_by_two();
        let (a0, l0) = default_init(2, 2);
        let est = em_fit(&s, &a0, &l0, &EmConfig::default()).unwrap();
        let at_fixed = log_likelihood(&s, &est.alpha, &est.lambda).unwrap();
        let at_ones = log_likelihood(&s, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(at_fixed >= at_ones);
    }
}
