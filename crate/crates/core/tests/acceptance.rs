//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! The regret comparisons use T = 20000 (8000 for problem c) and 20
//! replications with fixed seeds.

mod common;

use std::time::Instant;

use common::{arrangements, brute_force_assignment, mean_sd};
use mnl_ltr::checks::{
    central_moment_series, chi_square_gof, deviation_coverage, epoch_sampler_agreement,
    slot_geometric_fit, Schedule, ALPHA_LEVEL,
};
use mnl_ltr::concentration::{central_moment_bound, derangement, mg_constant};
use mnl_ltr::environment::{sample_click, sample_epoch_fast};
use mnl_ltr::harness::{
    problem_a, problem_b, run_experiment, ExperimentConfig, ExperimentResult, ProblemSpec,
};
use mnl_ltr::inference::{
    alpha_bar, default_init, em_fit, em_fit_observed, gamma_bar, log_likelihood, Matrix,
};
use mnl_ltr::model::{click_distribution, expected_reward};
use mnl_ltr::policies::{assignment_weight, solve_assignment};
use mnl_ltr::{Action, CountState, EmConfig, PolicyKind, ProblemInstance, SimulationRng};
use rand::Rng;

const SEED: u64 = 20240601;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, name: &str, passed: bool, detail: String) {
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {detail}");
        self.lines.push((passed, name.to_string()));
    }
}

fn distributional(r: &mut Report) {
    let start = Instant::now();
    let pair = ProblemInstance::new(vec![1.0, 1.0], vec![1.0, 1.0], 1).unwrap();
    let a = problem_a(1);
    let cases = [
        ("unit pair", &pair, vec![0, 1]),
        ("problem a, optimal order", &a, vec![0, 1, 2, 3]),
        ("problem a, shuffled", &a, vec![5, 2, 0, 3]),
    ];
    let mut worst = (f64::INFINITY, String::new());
    for (label, inst, items) in &cases {
        let action = Action::new(items.clone()).unwrap();
        for (k, t) in slot_geometric_fit(inst, &action, 100_000, SEED)
            .iter()
            .enumerate()
        {
            if t.p_value < worst.0 {
                worst = (t.p_value, format!("{label} slot {}", k + 1));
            }
        }
    }
    r.check(
        "distributional/slot-clicks-geometric",
        worst.0 > ALPHA_LEVEL,
        format!(
            "10 slot tests at 1e5 epochs, smallest p = {:.4} ({})",
            worst.0, worst.1
        ),
    );

    let mut worst = f64::INFINITY;
    for (inst, items) in [(&pair, vec![0, 1]), (&a, vec![0, 1, 2, 3])] {
        let t = epoch_sampler_agreement(inst, &Action::new(items).unwrap(), 100_000, 3, SEED);
        worst = worst.min(t.p_value);
    }
    r.check(
        "distributional/epoch-sampler-joint-law",
        worst > ALPHA_LEVEL,
        format!("smallest homogeneity p = {worst:.4}"),
    );

    // single-round outcomes against the closed-form click law
    let action = Action::new(vec![0, 1, 2, 3]).unwrap();
    let probs = click_distribution(&a, &action).unwrap();
    let mut rng = SimulationRng::new(SEED);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..100_000 {
        counts[sample_click(&a, &action, &mut rng).code()] += 1;
    }
    let t = chi_square_gof(&counts[..4], &probs[..4], 100_000);
    r.check(
        "distributional/click-outcome-law",
        t.p_value > ALPHA_LEVEL,
        format!("p = {:.4}", t.p_value),
    );

    let secs = start.elapsed().as_secs_f64();
    r.check(
        "distributional/runtime",
        secs < 30.0,
        format!("{secs:.1} s (limit 30 s)"),
    );
}

fn random_arrangement_counts(
    inst: &ProblemInstance,
    epochs: usize,
    rng: &mut SimulationRng,
) -> CountState {
    let all = arrangements(inst.n_items(), inst.n_slots());
    let mut state = CountState::new(inst.n_items(), inst.n_slots());
    for _ in 0..epochs {
        let a = Action::new(all[rng.random_range(0..all.len())].clone()).unwrap();
        state.update(&sample_epoch_fast(inst, &a, rng), Some(inst.lambda()));
    }
    state
}

/// Maximises the log-likelihood over a grid, refining around the best cell.
fn grid_mle(state: &CountState) -> (Vec<f64>, f64) {
    let dim = state.n_items() + state.n_slots() - 1;
    let split = |x: &[f64]| {
        let alpha = x[..state.n_items()].to_vec();
        let mut lambda = vec![1.0];
        lambda.extend_from_slice(&x[state.n_items()..]);
        (alpha, lambda)
    };
    let ll = |x: &[f64]| {
        let (a, l) = split(x);
        log_likelihood(state, &a, &l).unwrap()
    };
    let mut center = vec![0.5; dim];
    let mut half = 0.5;
    let mut best = (center.clone(), ll(&center));
    for _ in 0..14 {
        let steps = 20;
        let h = 2.0 * half / steps as f64;
        let mut idx = vec![0usize; dim];
        loop {
            let x: Vec<f64> = (0..dim)
                .map(|d| (center[d] - half + h * idx[d] as f64).clamp(1e-4, 1.0))
                .collect();
            let v = ll(&x);
            if v > best.1 {
                best = (x, v);
            }
            let mut d = 0;
            while d < dim {
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
        center = best.0.clone();
        half *= 0.3;
    }
    best
}

fn estimators(r: &mut Report) {
    // known-bias estimator, every item of problem a across all slots
    let a = problem_a(1);
    let mut rng = SimulationRng::new(SEED);
    let all = arrangements(6, 4);
    let mut state = CountState::new(6, 4);
    let mut per_epoch: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 6];
    for _ in 0..10_000 {
        let act = Action::new(all[rng.random_range(0..all.len())].clone()).unwrap();
        let rec = sample_epoch_fast(&a, &act, &mut rng);
        for (k, &j) in act.items().iter().enumerate() {
            per_epoch[j].push((rec.slot_clicks[k] as f64, a.lambda()[k]));
        }
        state.update(&rec, Some(a.lambda()));
    }
    let est = alpha_bar(&state);
    let mut worst_z: f64 = 0.0;
    for j in 0..6 {
        // ratio estimator: linearised standard error
        let xs = &per_epoch[j];
        let ex: f64 = xs.iter().map(|x| x.1).sum();
        let resid: Vec<f64> = xs.iter().map(|(c, l)| c - est[j] * l).collect();
        let (_, sd) = mean_sd(&resid);
        let se = sd * (xs.len() as f64).sqrt() / ex;
        worst_z = worst_z.max((est[j] - a.alpha()[j]).abs() / se);
    }
    r.check(
        "estimator/alpha-bar-unbiased",
        worst_z < 3.0,
        format!("6 items, 1e4 epochs, largest |error| / SE = {worst_z:.2} (limit 3)"),
    );

    let b = problem_b(1);
    let mut rng = SimulationRng::new(SEED + 1);
    let state = random_arrangement_counts(&b, 10_000, &mut rng);
    let g = gamma_bar(&state);
    let mut worst_z: f64 = 0.0;
    for k in 0..3 {
        for j in 0..4 {
            let n = state.placements()[(k, j)] as f64;
            let gamma = b.lambda()[k] * b.alpha()[j];
            // per-epoch clicks in a cell are geometric with mean gamma
            let se = (gamma * (1.0 + gamma) / n).sqrt();
            worst_z = worst_z.max((g[(k, j)] - gamma).abs() / se);
        }
    }
    r.check(
        "estimator/gamma-bar-unbiased",
        worst_z < 3.0,
        format!("12 cells, 1e4 epochs, largest |error| / SE = {worst_z:.2} (limit 3)"),
    );

    let two = CountState::from_counts(
        Matrix::from_rows(&[vec![4, 2], vec![1, 1]]),
        Matrix::from_rows(&[vec![10, 10], vec![10, 10]]),
    )
    .unwrap();
    let (a0, l0) = default_init(2, 2);
    let est = em_fit(&two, &a0, &l0, &EmConfig::default()).unwrap();
    let want = [0.34142, 0.24142, 0.35355];
    let got = [est.alpha[0], est.alpha[1], est.lambda[1]];
    let err = want
        .iter()
        .zip(&got)
        .map(|(w, g)| (w - g).abs())
        .fold(0.0, f64::max);
    r.check(
        "estimator/em-closed-form-2x2",
        err < 1e-4,
        format!(
            "alpha = ({:.5}, {:.5}), lambda_2 = {:.5}, max error {err:.1e}",
            got[0], got[1], got[2]
        ),
    );

    // EM against a grid maximisation of the likelihood on random instances
    let mut rng = SimulationRng::new(SEED + 2);
    let mut worst: f64 = 0.0;
    let mut worst_ll = (0.0, 0.0);
    for _ in 0..5 {
        let alpha: Vec<f64> = (0..2).map(|_| rng.random_range(0.1..0.9)).collect();
        let inst = ProblemInstance::new(alpha, vec![1.0, rng.random_range(0.2..0.9)], 1).unwrap();
        let st = random_arrangement_counts(&inst, 400, &mut rng);
        let em = em_fit(&st, &a0, &l0, &EmConfig::default()).unwrap();
        let (x, ll_grid) = grid_mle(&st);
        let em_x = [em.alpha[0], em.alpha[1], em.lambda[1]];
        let d = em_x
            .iter()
            .zip(&x)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        if d > worst {
            worst = d;
            worst_ll = (log_likelihood(&st, &em.alpha, &em.lambda).unwrap(), ll_grid);
        }
    }
    r.check(
        "estimator/em-matches-grid-mle",
        worst < 1e-3,
        format!(
            "5 random 2x2 instances, largest parameter gap {worst:.4} (log-likelihood {:.4} at EM vs {:.4} on grid)",
            worst_ll.0, worst_ll.1
        ),
    );

    let mut rng = SimulationRng::new(SEED + 3);
    let mut largest_drop: f64 = 0.0;
    let mut runs = 0;
    for inst in [problem_a(1), problem_b(1)] {
        for _ in 0..5 {
            let st = random_arrangement_counts(&inst, 300, &mut rng);
            let (ia, il) = default_init(inst.n_items(), inst.n_slots());
            let mut prev = log_likelihood(&st, &ia, &il).unwrap();
            em_fit_observed(&st, &ia, &il, &EmConfig::default(), |a, l| {
                let v = log_likelihood(&st, a, l).unwrap();
                largest_drop = largest_drop.max(prev - v);
                prev = v;
            })
            .unwrap();
            runs += 1;
        }
    }
    r.check(
        "estimator/em-likelihood-monotone",
        largest_drop <= 1e-9,
        format!("{runs} fits, largest one-step decrease {largest_drop:.3e}"),
    );
}

fn concentration(r: &mut Report) {
    let c = 100.0;
    for (label, schedule) in [
        ("iid", Schedule::Iid(0.6)),
        ("adaptive", Schedule::Adaptive),
    ] {
        let cov = deviation_coverage(schedule, 200, c, 100_000, SEED).unwrap();
        r.check(
            &format!("concentration/deviation-coverage-{label}"),
            cov.variance_rate <= 2.0 / c,
            format!(
                "n = 200, C = 100, 1e5 trials: violation rate {:.5} (limit 0.02)",
                cov.variance_rate
            ),
        );
    }

    let ps: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
    let (mut holds, mut tight, mut bern) = (true, true, true);
    let mut fact = 1.0;
    for n in 2..=8usize {
        fact *= n as f64;
        for &p in &ps {
            // moments from the series, not from the cumulant machinery
            let mu = central_moment_series(n, p);
            let bound = central_moment_bound(n, p);
            holds &= mu <= bound * (1.0 + 1e-9);
            if n == 2 {
                tight &= (mu / bound - 1.0).abs() < 1e-8;
            }
            bern &= mu <= fact / 2.0 * (1.0 - p) / (p * p) * p.powi(2 - n as i32) * (1.0 + 1e-9);
            bern &= (derangement(n as u32) as f64) <= fact / 2.0;
        }
    }
    r.check(
        "concentration/moment-bound-grid",
        holds && tight,
        format!("n in 2..=8, p in 0.50..0.95: bound holds = {holds}, equality at n = 2 = {tight}"),
    );
    r.check(
        "concentration/bernstein-condition",
        bern,
        "n in 2..=8 on the same grid".into(),
    );

    let m = mg_constant(0.5).unwrap();
    let closed = 0.5f64.sqrt() / (0.5 * (1.0 - 0.5f64.powf(0.25)));
    r.check(
        "concentration/log-sobolev-constant",
        m <= 9.0 && (m - closed).abs() < 1e-9 && (m - 8.8889).abs() < 1e-3,
        format!("M(1/2) = {m:.6}"),
    );
}

fn optimization(r: &mut Report) {
    let mut rng = SimulationRng::new(SEED);
    let mut bad = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=4);
        let j = rng.random_range(k..=6);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..j).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let w = Matrix::from_rows(&rows);
        let sol = solve_assignment(&w).unwrap();
        if (assignment_weight(&w, &sol) - brute_force_assignment(&w)).abs() > 1e-12 {
            bad += 1;
        }
    }
    r.check(
        "optimization/assignment-vs-brute-force",
        bad == 0,
        format!("1000 instances, {bad} mismatches"),
    );

    let mut ok = true;
    for inst in [problem_a(1), problem_b(1)] {
        let best = arrangements(inst.n_items(), inst.n_slots())
            .into_iter()
            .map(|a| expected_reward(&inst, &Action::new(a).unwrap()).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        ok &= (expected_reward(&inst, &inst.optimal_action()).unwrap() - best).abs() < 1e-12;
    }
    r.check(
        "optimization/optimal-action-vs-enumeration",
        ok,
        "problems a and b".into(),
    );
}

fn experiment(
    problem: &str,
    policies: Vec<PolicyKind>,
    horizon: usize,
    seed: u64,
) -> ExperimentResult {
    let mut cfg = ExperimentConfig::new(ProblemSpec::Preset(problem.into()), policies, horizon, 20);
    cfg.base_seed = seed;
    run_experiment(&cfg).unwrap()
}

fn mean_final(res: &ExperimentResult, p: PolicyKind) -> f64 {
    mean_sd(&res.final_regrets(p.name())).0
}

fn regret(r: &mut Report) {
    let start = Instant::now();
    let a = experiment(
        "a",
        vec![
            PolicyKind::EpochUcb,
            PolicyKind::EpochUcbW,
            PolicyKind::EpochUcbUpb,
            PolicyKind::EpochUcbStarUpb,
        ],
        20_000,
        SEED,
    );
    let (ucb, ucb_w) = (
        mean_final(&a, PolicyKind::EpochUcb),
        mean_final(&a, PolicyKind::EpochUcbW),
    );
    r.check(
        "regret/(i) epoch-ucb below epoch-ucb-w on a",
        ucb < ucb_w,
        format!("mean final regret {ucb:.1} vs {ucb_w:.1}"),
    );
    let (star, upb) = (
        mean_final(&a, PolicyKind::EpochUcbStarUpb),
        mean_final(&a, PolicyKind::EpochUcbUpb),
    );
    r.check(
        "regret/(ii) star-upb below upb on a",
        star < upb,
        format!("mean final regret {star:.1} vs {upb:.1}"),
    );

    let b = experiment(
        "b",
        vec![PolicyKind::EpochUcb, PolicyKind::TopRank],
        20_000,
        SEED,
    );
    let slope = |p: PolicyKind| {
        let m = b.mean_cumulative(p.name());
        (m[19_999] - m[17_999]) / 2000.0
    };
    let (s_top, s_ucb) = (slope(PolicyKind::TopRank), slope(PolicyKind::EpochUcb));
    r.check(
        "regret/(iii) toprank slope over last 10% on b exceeds 5x epoch-ucb",
        s_top > 5.0 * s_ucb,
        format!("per-round slope {s_top:.5} vs {s_ucb:.5}"),
    );

    let c = experiment(
        "c",
        vec![PolicyKind::MnlBandit, PolicyKind::EpochUcbStarUpb],
        8000,
        SEED,
    );
    let (mnl, star_c) = (
        mean_final(&c, PolicyKind::MnlBandit),
        mean_final(&c, PolicyKind::EpochUcbStarUpb),
    );
    r.check(
        "regret/(iv) mnl-bandit above star-upb on c at T = 8000",
        mnl > star_c,
        format!("mean final regret {mnl:.1} vs {star_c:.1}"),
    );

    let m = a.mean_cumulative(PolicyKind::EpochUcb.name());
    let ratio = m[19_999] / m[9_999];
    r.check(
        "regret/(v) epoch-ucb sublinear on a",
        ratio < 1.8,
        format!("regret(T) / regret(T/2) = {ratio:.3} (limit 1.8)"),
    );

    let secs = start.elapsed().as_secs_f64();
    r.check(
        "regret/runtime",
        secs < 300.0,
        format!("{secs:.0} s (target 300 s)"),
    );
}

fn determinism(r: &mut Report) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut cfg = ExperimentConfig::new(
            ProblemSpec::Preset("b".into()),
            PolicyKind::ALL.to_vec(),
            2000,
            3,
        );
        cfg.base_seed = SEED;
        cfg.output = Some(d.path().to_path_buf());
        run_experiment(&cfg).unwrap();
    }
    let same = ["regret.csv", "summary.csv"].iter().all(|f| {
        std::fs::read(dirs[0].path().join(f)).unwrap()
            == std::fs::read(dirs[1].path().join(f)).unwrap()
    });
    r.check(
        "determinism/byte-identical-csv",
        same,
        "all policies on b, 3 replications, two runs".into(),
    );
}

fn main() {
    let mut r = Report { lines: Vec::new() };
    distributional(&mut r);
    estimators(&mut r);
    concentration(&mut r);
    optimization(&mut r);
    regret(&mut r);
    determinism(&mut r);
    let failed: Vec<&str> = r
        .lines
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, n)| n.as_str())
        .collect();
    println!("{} criteria, {} failed", r.lines.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
