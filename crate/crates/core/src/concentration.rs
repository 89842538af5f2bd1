//! Confidence widths for the UCB policies and the numeric facts about
//! geometric distributions that back them.
//!
//! The width functions are used by the policies. The remaining functions
//! (derangements, cumulant coefficients, Bell polynomials, central moments,
//! the martingale deviation width and the log-Sobolev constant) are exposed
//! so the concentration bounds can be checked numerically.

use crate::error::{Error, Result};
use crate::inference::{CountState, EmConfig, EmData, EmEstimate};

/// Inputs to the known-bias confidence width of one item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbWidthParams {
    pub n_items: usize,
    /// Epoch index, starting at one.
    pub epoch: usize,
    /// Bias-weighted exposure of the item (or a raw count).
    pub exposure: f64,
    pub alpha_bar: f64,
}

fn width_from(coeff: f64, log_term: f64, p: &UcbWidthParams) -> f64 {
    if p.exposure <= 0.0 {
        return f64::INFINITY;
    }
    let log_term = log_term.max(0.0);
    let scale = (2.0 * p.alpha_bar).clamp(0.0, 1.0);
    (coeff * scale * log_term / p.exposure).sqrt() + coeff * log_term / p.exposure
}

/// `sqrt(4 min(1, 2 a) log(J l^2 / 2) / E) + 4 log(J l^2 / 2) / E`, or
/// infinity for an unexposed item.
pub fn ucb_width_known(p: &UcbWidthParams) -> f64 {
    let l = p.epoch as f64;
    width_from(4.0, (p.n_items as f64 * l * l / 2.0).ln(), p)
}

/// The same shape with coefficient 48 and `log(sqrt(J) l / sqrt(2))`.
pub fn ucb_width_weak(p: &UcbWidthParams) -> f64 {
    let l = p.epoch as f64;
    width_from(48.0, ((p.n_items as f64).sqrt() * l / 2f64.sqrt()).ln(), p)
}

/// Confidence width variants for EM estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmWidth {
    /// `sqrt(36 beta1^2 log(J l^2))`.
    Standard,
    /// `0.5 sqrt(beta1^2 log(sqrt(J) l))`.
    Star,
}

pub fn ucb_width_em(beta1_sq: f64, n_items: usize, epoch: usize, variant: EmWidth) -> f64 {
    let j = n_items as f64;
    let l = epoch as f64;
    match variant {
        EmWidth::Standard => (36.0 * beta1_sq * (j * l * l).ln().max(0.0)).sqrt(),
        EmWidth::Star => 0.5 * (beta1_sq * (j.sqrt() * l).ln().max(0.0)).sqrt(),
    }
}

/// Finite-difference smoothness of the EM attractiveness estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Beta1 {
    /// Per item: `sum_{(k,s) placed} (alpha_j(N) - alpha_j(N + e_ks))^2 * placements[k][s]`.
    pub beta1_sq: Vec<f64>,
    /// Perturbed solves that hit the iteration cap.
    pub non_converged: usize,
}

/// Squared one-click finite differences of the EM estimator, weighted by
/// placement counts.
///
/// `base` must be the EM estimate on `state`; each perturbed solve is warm
/// started from it.
pub fn beta1_squared(state: &CountState, base: &EmEstimate, cfg: &EmConfig) -> Beta1 {
    let n_items = state.n_items();
    let mut beta1_sq = vec![0.0; n_items];
    let mut non_converged = 0;
    let mut data = EmData::new(state);
    let mut alpha = vec![0.0; n_items];
    let mut lambda = vec![0.0; state.n_slots()];
    for k in 0..state.n_slots() {
        for s in 0..n_items {
            let placed = state.placements()[(k, s)];
            if placed == 0 {
                continue;
            }
            data.set_extra_click(Some((k, s)));
            alpha.copy_from_slice(&base.alpha);
            lambda.copy_from_slice(&base.lambda);
            let (_, converged) = data.iterate(&mut alpha, &mut lambda, cfg, |_, _| {});
            if !converged {
                non_converged += 1;
            }
            for (acc, (a0, a1)) in beta1_sq.iter_mut().zip(base.alpha.iter().zip(&alpha)) {
                let d = a0 - a1;
                *acc += d * d * placed as f64;
            }
        }
    }
    Beta1 {
        beta1_sq,
        non_converged,
    }
}

/// Log-Sobolev factor `M_G(b) = max_p (1-p) e^b / (p (1 - sqrt((1-p) e^b)))`
/// over the given geometric parameters. `b` must lie in
/// `(0, max_p -log(1-p))` and keep every term finite.
pub fn mg_function(b: f64, ps: &[f64]) -> Result<f64> {
    if ps.is_empty() || ps.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidArgument(
            "geometric parameters must lie in (0,1)".into(),
        ));
    }
    let b_max = ps
        .iter()
        .map(|&p| -(1.0 - p).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if !(b > 0.0 && b < b_max) {
        return Err(Error::InvalidArgument(format!(
            "b = {b} outside (0, {b_max})"
        )));
    }
    Ok(ps
        .iter()
        .map(|&p| {
            let q = (1.0 - p) * b.exp();
            q / (p * (1.0 - q.sqrt()))
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `M = M_G(-log(1 - p) / 2)`, which simplifies to
/// `sqrt(1-p) / (p (1 - (1-p)^{1/4}))`. Equals about 8.8886 at `p = 1/2`.
pub fn mg_constant(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0,1)")));
    }
    mg_function(-(1.0 - p).ln() / 2.0, &[p])
}

/// Number of derangements of `m` items. Exact for `m <= 34`.
pub fn derangement(m: u32) -> u128 {
    assert!(m <= 34, "derangement({m}) overflows u128");
    let (mut prev2, mut prev1) = (1u128, 0u128);
    match m {
        0 => return 1,
        1 => return 0,
        _ => {}
    }
    for i in 2..=m as u128 {
        let next = (i - 1) * (prev1 + prev2);
        prev2 = prev1;
        prev1 = next;
    }
    prev1
}

/// Coefficients `h[n][1..=n]` of the geometric cumulant
/// `kappa_n(p) = sum_i (-1)^{n-i} h[n][i] / p^i`, for `n >= 2`.
///
/// The first cumulant `(1-p)/p` carries a constant term and is not of this
/// form, so `n = 1` is rejected.
pub fn cumulant_coeffs(n: usize) -> Result<Vec<u128>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cumulant coefficients are defined for n >= 2, got {n}"
        )));
    }
    let mut h = vec![1u128, 1];
    for order in 3..=n {
        let mut next = vec![0u128; order];
        next[0] = 1;
        for i in 2..order {
            next[i - 1] = i as u128 * h[i - 1] + (i as u128 - 1) * h[i - 2];
        }
        next[order - 1] = (order as u128 - 1) * h[order - 2];
        h = next;
    }
    Ok(h)
}

/// `n`-th cumulant of a geometric variable on `{0, 1, ...}` with success
/// probability `p`.
pub fn geometric_cumulant(n: usize, p: f64) -> f64 {
    if n == 1 {
        return (1.0 - p) / p;
    }
    let h = cumulant_coeffs(n).expect("n >= 2");
    h.iter()
        .enumerate()
        .map(|(idx, &c)| {
            let i = idx + 1;
            let sign = if (n - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * c as f64 / p.powi(i as i32)
        })
        .sum()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Incomplete exponential Bell polynomial `B_{n,m}(x_1, ..., x_{n-m+1})`.
pub fn bell_incomplete(n: usize, m: usize, x: &[f64]) -> Result<f64> {
    if !(m >= 1 && n >= m) {
        return Err(Error::InvalidArgument(format!(
            "need n >= m >= 1, got n={n}, m={m}"
        )));
    }
    if x.len() != n - m + 1 {
        return Err(Error::InvalidArgument(format!(
            "B_{{{n},{m}}} takes {} arguments, got {}",
            n - m + 1,
            x.len()
        )));
    }
    // Sum over multiplicities j_i with sum j_i = m and sum i j_i = n.
    fn walk(i: usize, parts_left: usize, weight_left: usize, x: &[f64], term: f64, acc: &mut f64) {
        if i > x.len() {
            if parts_left == 0 && weight_left == 0 {
                *acc += term;
            }
            return;
        }
        let base = x[i - 1] / factorial(i);
        let mut t = term;
        let mut j = 0;
        while j <= parts_left && j * i <= weight_left {
            walk(i + 1, parts_left - j, weight_left - j * i, x, t, acc);
            j += 1;
            t *= base / j as f64;
        }
    }
    let mut acc = 0.0;
    walk(1, m, n, x, factorial(n), &mut acc);
    Ok(acc)
}

/// `n`-th central moment of a geometric variable, assembled from its
/// cumulants via incomplete Bell polynomials.
pub fn central_moment_geometric(n: usize, p: f64) -> Result<f64> {
    if n < 2 || !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 and p in (0,1), got n={n}, p={p}"
        )));
    }
    let kappas: Vec<f64> = (1..=n)
        .map(|i| {
            if i == 1 {
                0.0
            } else {
                geometric_cumulant(i, p)
            }
        })
        .collect();
    let mut total = 0.0;
    for m in 1..=n {
        total += bell_incomplete(n, m, &kappas[..n - m + 1])?;
    }
    Ok(total)
}

/// Derangement bound on geometric central moments, `!n (1-p) / p^n`.
pub fn central_moment_bound(n: usize, p: f64) -> f64 {
    derangement(n as u32) as f64 * (1.0 - p) / p.powi(n as i32)
}

/// Whether `mu_n <= !n (1-p) / p^n` holds (up to rounding).
pub fn bound_check(n: usize, p: f64) -> Result<bool> {
    let mu = central_moment_geometric(n, p)?;
    let bound = central_moment_bound(n, p);
    Ok(mu <= bound * (1.0 + 1e-12) + 1e-12)
}

/// Whether the Bernstein moment condition
/// `mu_n <= (n!/2) ((1-p)/p^2) (1/p)^{n-2}` holds.
pub fn bernstein_condition(n: usize, p: f64) -> Result<bool> {
    let mu = central_moment_geometric(n, p)?;
    let rhs = factorial(n) / 2.0 * (1.0 - p) / (p * p) * p.powi(-(n as i32 - 2));
    Ok(mu <= rhs * (1.0 + 1e-12) + 1e-12)
}

/// Which variance proxy the martingale deviation width uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviationProxy {
    /// Sum of true variances `sum (mu_i^2 + mu_i)`.
    Variance(f64),
    /// Sum of the observed values `sum Y_i`.
    Observed(f64),
}

/// Deviation width for sums of geometric variables with means at most one:
/// `sqrt(2 V log C) + 4 log C` with true variances, or
/// `sqrt(8 Y log C) + 4 log C` with the observed sum.
pub fn deviation_width(proxy: DeviationProxy, c: f64) -> Result<f64> {
    if !(c > 1.0) {
        return Err(Error::InvalidArgument(format!("C must exceed 1, got {c}")));
    }
    let log_c = c.ln();
    Ok(match proxy {
        DeviationProxy::Variance(v) => (2.0 * v * log_c).sqrt() + 4.0 * log_c,
        DeviationProxy::Observed(y) => (8.0 * y * log_c).sqrt() + 4.0 * log_c,
    })
}
