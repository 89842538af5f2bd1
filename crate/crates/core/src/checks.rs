//! Statistical property suites: simulator laws, concentration coverage and
//! the numeric identities behind the bounds.
//!
//! Every check is deterministic given its seed. The CLI `check` command runs
//! a whole suite and prints one line per [`CheckResult`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Geometric};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::concentration::{
    bernstein_condition, bound_check, central_moment_bound, central_moment_geometric, derangement,
    deviation_width, geometric_cumulant, mg_constant, mg_function, DeviationProxy,
};
use crate::environment::{run_epoch, sample_click, sample_epoch_fast, SimulationRng};
use crate::error::{Error, Result};
use crate::harness::problem_a;
use crate::inference::{em_fit, CountState, EmConfig, Matrix};
use crate::model::{click_distribution, Action, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Distributional,
    Concentration,
    Theory,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Distributional, Suite::Concentration, Suite::Theory];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Distributional => "distributional",
            Suite::Concentration => "concentration",
            Suite::Theory => "theory",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{status}] {}/{}: {}",
            self.suite, self.name, self.detail
        )
    }
}

fn result(suite: Suite, name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        suite,
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Significance level of the goodness-of-fit checks.
pub const ALPHA_LEVEL: f64 = 0.01;

/// Outcome of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(statistic)
}

/// Pearson goodness of fit. `probs` covers all outcomes except a tail,
/// whose probability is `1 - sum(probs)` and whose count is
/// `total - sum(observed)`. Adjacent cells are merged from the right until
/// every expected count is at least five.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], total: u64) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| (o as f64, p * n))
        .collect();
    let tail_obs = total as f64 - observed.iter().sum::<u64>() as f64;
    let tail_exp = (1.0 - probs.iter().sum::<f64>()).max(0.0) * n;
    cells.push((tail_obs, tail_exp));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut carry = (0.0, 0.0);
    for (o, e) in cells.into_iter().rev() {
        carry.0 += o;
        carry.1 += e;
        if carry.1 >= 5.0 {
            merged.push(carry);
            carry = (0.0, 0.0);
        }
    }
    if carry.1 > 0.0 || carry.0 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += carry.0;
                last.1 += carry.1;
            }
            None => merged.push(carry),
        }
    }
    let statistic = merged
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = merged.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
    }
}

/// Two-sample chi-square homogeneity test over keyed counts. Keys whose
/// pooled count is below ten are merged into one cell.
pub fn chi_square_homogeneity<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
) -> ChiSquare {
    let mut keys: Vec<K> = a.keys().chain(b.keys()).cloned().collect();
    keys.sort();
    keys.dedup();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut rare = (0.0, 0.0);
    for k in keys {
        let x = *a.get(&k).unwrap_or(&0) as f64;
        let y = *b.get(&k).unwrap_or(&0) as f64;
        if x + y < 10.0 {
            rare.0 += x;
            rare.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if rare.0 + rare.1 > 0.0 {
        cells.push(rare);
    }
    let na: f64 = cells.iter().map(|c| c.0).sum();
    let nb: f64 = cells.iter().map(|c| c.1).sum();
    let n = na + nb;
    let mut statistic = 0.0;
    for (x, y) in &cells {
        let pooled = x + y;
        let (ea, eb) = (pooled * na / n, pooled * nb / n);
        statistic += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof),
    }
}

fn geometric_pmf(p: f64, upto: usize) -> Vec<f64> {
    (0..upto).map(|n| p * (1.0 - p).powi(n as i32)).collect()
}

/// Goodness of fit of each slot's click count in complete epochs of
/// `action` against `Geometric(1 / (1 + lambda_k alpha))`.
pub fn slot_geometric_fit(
    inst: &ProblemInstance,
    action: &Action,
    epochs: usize,
    seed: u64,
) -> Vec<ChiSquare> {
    let mut rng = SimulationRng::new(seed);
    let k_n = action.len();
    let cap = 64;
    let mut counts = vec![vec![0u64; cap]; k_n];
    for _ in 0..epochs {
        let rec = run_epoch(inst, action, usize::MAX, &mut rng);
        for (k, &n) in rec.slot_clicks.iter().enumerate() {
            if n < cap {
                counts[k][n] += 1;
            }
        }
    }
    (0..k_n)
        .map(|k| {
            let p = 1.0 / (1.0 + inst.lambda()[k] * inst.alpha()[action[k]]);
            chi_square_gof(&counts[k], &geometric_pmf(p, cap), epochs as u64)
        })
        .collect()
}

/// Homogeneity of the joint per-slot click counts produced by the
/// round-by-round simulator and the direct sampler. Counts above `cap` are
/// pooled into one `cap+` bin per slot.
pub fn epoch_sampler_agreement(
    inst: &ProblemInstance,
    action: &Action,
    epochs: usize,
    cap: usize,
    seed: u64,
) -> ChiSquare {
    let base = SimulationRng::new(seed);
    let (mut r1, mut r2) = (base.split(0), base.split(1));
    let mut slow: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut fast: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for _ in 0..epochs {
        let bin = |v: Vec<usize>| -> Vec<usize> { v.into_iter().map(|n| n.min(cap)).collect() };
        *slow
            .entry(bin(run_epoch(inst, action, usize::MAX, &mut r1).slot_clicks))
            .or_default() += 1;
        *fast
            .entry(bin(sample_epoch_fast(inst, action, &mut r2).slot_clicks))
            .or_default() += 1;
    }
    chi_square_homogeneity(&slow, &fast)
}

/// Goodness of fit of single-round click outcomes (no-click first).
pub fn click_outcome_fit(
    inst: &ProblemInstance,
    action: &Action,
    draws: usize,
    seed: u64,
) -> Result<ChiSquare> {
    let probs = click_distribution(inst, action)?;
    let mut rng = SimulationRng::new(seed);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..draws {
        counts[sample_click(inst, action, &mut rng).code()] += 1;
    }
    // Drop the last outcome into the tail cell.
    let k = probs.len() - 1;
    Ok(chi_square_gof(&counts[..k], &probs[..k], draws as u64))
}

/// Monte-Carlo violation rates of the martingale deviation width for sums
/// of geometric variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub trials: usize,
    /// Violations with the true-variance width.
    pub variance_rate: f64,
    /// Violations with the observed-sum width.
    pub observed_rate: f64,
}

/// How the geometric parameters of a sequence are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Every draw uses the same parameter.
    Iid(f64),
    /// The parameter is 0.5 while the running sum is above its mean and
    /// 0.95 otherwise, so each mean depends on the past draws.
    Adaptive,
}

pub fn deviation_coverage(
    schedule: Schedule,
    n: usize,
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<Coverage> {
    let mut rng = SimulationRng::new(seed);
    let mut dists: BTreeMap<u64, Geometric> = BTreeMap::new();
    let mut geo = |p: f64, rng: &mut SimulationRng| -> u64 {
        dists
            .entry(p.to_bits())
            .or_insert_with(|| Geometric::new(p).expect("p in (0,1]"))
            .sample(rng)
    };
    let (mut v_bad, mut o_bad) = (0usize, 0usize);
    for _ in 0..trials {
        let (mut sum, mut mean_sum, mut var_sum) = (0.0, 0.0, 0.0);
        let mut p = match schedule {
            Schedule::Iid(p) => p,
            Schedule::Adaptive => 0.5,
        };
        for _ in 0..n {
            let mu = (1.0 - p) / p;
            let y = geo(p, &mut rng) as f64;
            sum += y;
            mean_sum += mu;
            var_sum += mu * mu + mu;
            if let Schedule::Adaptive = schedule {
                p = if sum > mean_sum { 0.5 } else { 0.95 };
            }
        }
        let dev = (sum - mean_sum).abs();
        if dev > deviation_width(DeviationProxy::Variance(var_sum), c)? {
            v_bad += 1;
        }
        if dev > deviation_width(DeviationProxy::Observed(sum), c)? {
            o_bad += 1;
        }
    }
    Ok(Coverage {
        trials,
        variance_rate: v_bad as f64 / trials as f64,
        observed_rate: o_bad as f64 / trials as f64,
    })
}

/// Violation frequency of the known-bias confidence interval
/// `|alpha_bar - alpha| <= sqrt(4 log(J l^2/2) / Lambda) + 4 log(J l^2/2) / Lambda`
/// for one item shown for `l` epochs, cycling through the slots.
pub fn known_bias_coverage(
    alpha: f64,
    lambda: &[f64],
    n_items: usize,
    epochs: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = SimulationRng::new(seed);
    let dists: Vec<Geometric> = lambda
        .iter()
        .map(|l| Geometric::new(1.0 / (1.0 + l * alpha)))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let l = epochs as f64;
    let log = (n_items as f64 * l * l / 2.0).ln().max(0.0);
    let mut bad = 0;
    for _ in 0..trials {
        let (mut clicks, mut exposure) = (0.0, 0.0);
        for e in 0..epochs {
            let k = e % lambda.len();
            clicks += dists[k].sample(&mut rng) as f64;
            exposure += lambda[k];
        }
        let width = (4.0 * log / exposure).sqrt() + 4.0 * log / exposure;
        if (clicks / exposure - alpha).abs() > width {
            bad += 1;
        }
    }
    Ok(bad as f64 / trials as f64)
}

/// Largest `mu_n / bound` over the grid, with the ratio at `n = 2`.
pub fn moment_bound_grid(ns: &[usize], ps: &[f64]) -> Result<(bool, f64)> {
    let mut all = true;
    let mut worst: f64 = 0.0;
    for &n in ns {
        for &p in ps {
            all &= bound_check(n, p)?;
            worst = worst.max(central_moment_geometric(n, p)? / central_moment_bound(n, p));
        }
    }
    Ok((all, worst))
}

pub fn probability_grid() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Central moment by direct summation of the series.
pub fn central_moment_series(n: usize, p: f64) -> f64 {
    let mu = (1.0 - p) / p;
    let mut total = 0.0;
    let mut mass = p;
    let mut y = 0.0;
    while mass > 1e-300 && y < 1e5 {
        total += (y - mu).powi(n as i32) * mass;
        mass *= 1.0 - p;
        y += 1.0;
    }
    total
}

/// Cumulants from raw moments, via `kappa_n = m_n - sum C(n-1, i-1) kappa_i m_{n-i}`.
pub fn cumulants_from_series(n_max: usize, p: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..=n_max)
        .map(|n| {
            let mut total = 0.0;
            let mut mass = p;
            let mut y = 0.0f64;
            while mass > 1e-300 && y < 1e5 {
                total += y.powi(n as i32) * mass;
                mass *= 1.0 - p;
                y += 1.0;
            }
            total
        })
        .collect();
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let mut kappa = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        let mut v = raw[n];
        for i in 1..n {
            v -= binom(n - 1, i - 1) * kappa[i] * raw[n - i];
        }
        kappa[n] = v;
    }
    kappa
}

fn distributional(seed: u64) -> Vec<CheckResult> {
    let s = Suite::Distributional;
    let mut out = Vec::new();
    let pair = ProblemInstance::new(vec![1.0, 1.0], vec![1.0, 1.0], 1).expect("valid instance");
    let inst = problem_a(1);
    let cases = [
        ("unit-pair", &pair, vec![0, 1]),
        ("a-optimal", &inst, vec![0, 1, 2, 3]),
        ("a-shuffled", &inst, vec![5, 2, 0, 3]),
    ];
    for (label, inst, items) in cases {
        let a = Action::new(items).expect("valid action");
        let inst: &ProblemInstance = inst;
        for (k, t) in slot_geometric_fit(inst, &a, 100_000, seed)
            .into_iter()
            .enumerate()
        {
            out.push(result(
                s,
                &format!("slot-geometric-{label}-slot{}", k + 1),
                t.p_value > ALPHA_LEVEL,
                format!(
                    "chi2 = {:.3}, dof = {}, p = {:.4}",
                    t.statistic, t.dof, t.p_value
                ),
            ));
        }
    }
    let pair_action = Action::new(vec![0, 1]).expect("valid action");
    let a = Action::new(vec![0, 1, 2, 3]).expect("valid action");
    for (label, inst, action) in [("unit-pair", &pair, &pair_action), ("a-optimal", &inst, &a)] {
        let t = epoch_sampler_agreement(inst, action, 100_000, 3, seed);
        out.push(result(
            s,
            &format!("epoch-sampler-joint-law-{label}"),
            t.p_value > ALPHA_LEVEL,
            format!(
                "chi2 = {:.3}, dof = {}, p = {:.4}",
                t.statistic, t.dof, t.p_value
            ),
        ));
    }
    match click_outcome_fit(&inst, &a, 100_000, seed) {
        Ok(t) => out.push(result(
            s,
            "click-outcome-law",
            t.p_value > ALPHA_LEVEL,
            format!(
                "chi2 = {:.3}, dof = {}, p = {:.4}",
                t.statistic, t.dof, t.p_value
            ),
        )),
        Err(e) => out.push(result(s, "click-outcome-law", false, e.to_string())),
    }
    out
}

fn concentration(seed: u64) -> Vec<CheckResult> {
    let s = Suite::Concentration;
    let mut out = Vec::new();
    let c = 100.0;
    for (label, schedule) in [
        ("iid", Schedule::Iid(0.6)),
        ("adaptive", Schedule::Adaptive),
    ] {
        match deviation_coverage(schedule, 200, c, 100_000, seed) {
            Ok(cov) => out.push(result(
                s,
                &format!("deviation-coverage-{label}"),
                cov.variance_rate <= 2.0 / c && cov.observed_rate <= 2.0 / c,
                format!(
                    "violation rates {:.5} (variance) and {:.5} (observed), limit {:.3}",
                    cov.variance_rate,
                    cov.observed_rate,
                    2.0 / c
                ),
            )),
            Err(e) => out.push(result(
                s,
                &format!("deviation-coverage-{label}"),
                false,
                e.to_string(),
            )),
        }
    }
    let lambda = [1.0, 0.3, 0.2, 0.1];
    for l in [10, 100] {
        let limit = 4.0 / (6.0 * l as f64);
        match known_bias_coverage(0.3, &lambda, 6, l, 20_000, seed) {
            Ok(rate) => out.push(result(
                s,
                &format!("known-bias-coverage-l{l}"),
                rate <= limit,
                format!("violation rate {rate:.5}, limit {limit:.5}"),
            )),
            Err(e) => out.push(result(
                s,
                &format!("known-bias-coverage-l{l}"),
                false,
                e.to_string(),
            )),
        }
    }
    let ns: Vec<usize> = (2..=8).collect();
    match moment_bound_grid(&ns, &probability_grid()) {
        Ok((ok, worst)) => {
            let eq = probability_grid().iter().all(|&p| {
                (central_moment_geometric(2, p).unwrap() / central_moment_bound(2, p) - 1.0).abs()
                    < 1e-9
            });
            out.push(result(
                s,
                "central-moment-bound",
                ok && eq,
                format!("max mu_n / bound = {worst:.6}, equality at n = 2: {eq}"),
            ));
        }
        Err(e) => out.push(result(s, "central-moment-bound", false, e.to_string())),
    }
    let mut bern = true;
    for n in 2..=12 {
        for p in probability_grid() {
            bern &= bernstein_condition(n, p).unwrap_or(false);
        }
    }
    out.push(result(
        s,
        "bernstein-condition",
        bern,
        "n in 2..=12, p in 0.50..0.95".into(),
    ));
    match mg_constant(0.5) {
        Ok(m) => out.push(result(
            s,
            "log-sobolev-constant",
            m <= 9.0,
            format!("M(0.5) = {m:.6}"),
        )),
        Err(e) => out.push(result(s, "log-sobolev-constant", false, e.to_string())),
    }
    out
}

fn theory(_seed: u64) -> Vec<CheckResult> {
    let s = Suite::Theory;
    let mut out = Vec::new();

    let closed = (0..=20u32).all(|m| {
        let mut fact = 1i128;
        for i in 1..=m as i128 {
            fact *= i;
        }
        let mut sum = 0i128;
        let mut term = fact;
        for i in 0..=m as i128 {
            if i > 0 {
                term /= i;
            }
            sum += if i % 2 == 0 { term } else { -term };
        }
        sum as u128 == derangement(m)
    });
    out.push(result(
        s,
        "derangement-closed-form",
        closed,
        "m in 0..=20".into(),
    ));

    let mut worst: f64 = 0.0;
    for p in [0.3, 0.5, 0.7, 0.9] {
        let series = cumulants_from_series(8, p);
        for (n, &kn) in series.iter().enumerate().skip(1) {
            worst = worst.max(((geometric_cumulant(n, p) - kn) / kn.abs().max(1e-12)).abs());
        }
    }
    out.push(result(
        s,
        "cumulant-formula",
        worst < 1e-8,
        format!("max relative error {worst:.2e}"),
    ));

    let mut worst: f64 = 0.0;
    for p in probability_grid() {
        for n in 2..=8 {
            let series = central_moment_series(n, p);
            let bell = central_moment_geometric(n, p).unwrap_or(f64::NAN);
            worst = worst.max(((bell - series) / series.abs().max(1e-12)).abs());
        }
    }
    out.push(result(
        s,
        "central-moment-from-cumulants",
        worst < 1e-8,
        format!("max relative error {worst:.2e}"),
    ));

    let m = mg_constant(0.5).unwrap_or(f64::NAN);
    let closed = 0.5f64.sqrt() / (0.5 * (1.0 - 0.5f64.powf(0.25)));
    let b = -(0.5f64).ln() / 2.0;
    let grid_max = (1..1000)
        .map(|i| 0.5 + 0.5 * i as f64 / 1000.0)
        .filter_map(|p| mg_function(b, &[p]).ok())
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(result(
        s,
        "log-sobolev-closed-form",
        (m - closed).abs() < 1e-12 && grid_max <= m + 1e-12,
        format!("M = {m:.6}, closed form {closed:.6}, max over p >= 0.5 is {grid_max:.6}"),
    ));

    let clicks = Matrix::from_rows(&[vec![4, 2], vec![1, 1]]);
    let placements = Matrix::from_rows(&[vec![10, 10], vec![10, 10]]);
    let detail;
    let passed;
    match CountState::from_counts(clicks, placements)
        .and_then(|st| em_fit(&st, &[0.5, 0.5], &[1.0, 0.5], &EmConfig::default()))
    {
        Ok(est) => {
            let expect = [0.341421, 0.241421, 0.353553];
            let got = [est.alpha[0], est.alpha[1], est.lambda[1]];
            let err = expect
                .iter()
                .zip(&got)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            passed = err < 1e-4;
            detail = format!(
                "alpha = ({:.6}, {:.6}), lambda_2 = {:.6}",
                got[0], got[1], got[2]
            );
        }
        Err(e) => {
            passed = false;
            detail = e.to_string();
        }
    }
    out.push(result(s, "em-closed-form", passed, detail));
    out
}

/// Runs all checks of a suite.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<CheckResult> {
    match suite {
        Suite::Distributional => distributional(seed),
        Suite::Concentration => concentration(seed),
        Suite::Theory => theory(seed),
    }
}
