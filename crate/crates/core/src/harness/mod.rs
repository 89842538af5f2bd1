//! Experiment orchestration: replications, regret accounting, aggregation.

mod io;
mod presets;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{
    read_regret_csv, read_summary_csv, summarise, write_regret_csv, write_summary_csv, SummaryRow,
};
pub use presets::{preset, problem_a, problem_b, problem_c, PRESET_NAMES};

use crate::environment::{run_epoch, sample_click, SimulationRng};
use crate::error::{Error, Result};
use crate::model::{expected_reward, Action, ProblemInstance, RegretTrace};
use crate::policies::{Diagnostics, Feedback, Interaction, Policy, PolicyConfig, PolicyKind};

/// What is charged per round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretMode {
    /// `r(a*) - r(a_t)`, the expected-reward gap.
    #[default]
    Pseudo,
    /// `r(a*) - 1{click in round t}`; can be negative.
    Realized,
}

/// A named preset or explicit parameter vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Preset(String),
    Custom {
        #[serde(default)]
        name: Option<String>,
        alpha: Vec<f64>,
        lambda: Vec<f64>,
    },
}

impl ProblemSpec {
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Preset(p) => p
                .trim()
                .trim_start_matches('(')
                .trim_end_matches(')')
                .to_string(),
            ProblemSpec::Custom { name, .. } => {
                name.clone().unwrap_or_else(|| "custom".to_string())
            }
        }
    }

    pub fn instance(&self, horizon: usize) -> Result<ProblemInstance> {
        match self {
            ProblemSpec::Preset(p) => preset(p, horizon),
            ProblemSpec::Custom { alpha, lambda, .. } => {
                ProblemInstance::new(alpha.clone(), lambda.clone(), horizon)
            }
        }
    }
}

fn default_replications() -> usize {
    1
}

/// One experiment: a problem, a set of policies and replication settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub policies: Vec<PolicyKind>,
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Directory for CSV output; nothing is written when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub regret: RegretMode,
    #[serde(default)]
    pub policy: PolicyConfig,
}

impl ExperimentConfig {
    pub fn new(
        problem: ProblemSpec,
        policies: Vec<PolicyKind>,
        horizon: usize,
        replications: usize,
    ) -> Self {
        Self {
            problem,
            policies,
            horizon,
            replications,
            base_seed: 0,
            output: None,
            threads: None,
            regret: RegretMode::Pseudo,
            policy: PolicyConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing experiment config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidArgument(
                "replications must be at least 1".into(),
            ));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidArgument("no policies selected".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        self.problem.instance(self.horizon)?;
        Ok(())
    }
}

/// Outcome of one (policy, replication) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub policy: String,
    pub replication: usize,
    pub trace: RegretTrace,
    /// Number of epochs for epoch policies, rounds for per-round policies.
    pub decisions: usize,
    pub diagnostics: Diagnostics,
}

/// Plays `policy` for the instance horizon and records per-round regret.
pub fn run_policy(
    inst: &ProblemInstance,
    policy: &mut dyn Policy,
    env_rng: &mut SimulationRng,
    mode: RegretMode,
) -> Result<(RegretTrace, usize)> {
    let horizon = inst.horizon();
    let best = expected_reward(inst, &inst.optimal_action())?;
    let mut trace = RegretTrace::with_capacity(horizon);
    let mut decisions = 0;
    let mut t = 0;
    while t < horizon {
        let action = policy.select();
        inst.validate(&action)
            .map_err(|e| Error::InvalidAction(format!("{} played {action}: {e}", policy.name())))?;
        let reward = expected_reward(inst, &action)?;
        decisions += 1;
        match policy.interaction() {
            Interaction::Epoch => {
                let rec = run_epoch(inst, &action, horizon - t, env_rng);
                match mode {
                    RegretMode::Pseudo => trace.extend_constant(best - reward, rec.length),
                    RegretMode::Realized => {
                        trace.extend_constant(best - 1.0, rec.total_clicks());
                        trace.extend_constant(best, rec.no_click_rounds());
                    }
                }
                t += rec.length;
                policy.observe(Feedback::Epoch(&rec));
            }
            Interaction::Round => {
                let click = sample_click(inst, &action, env_rng);
                trace.push(match mode {
                    RegretMode::Pseudo => best - reward,
                    RegretMode::Realized => best - if click.is_click() { 1.0 } else { 0.0 },
                });
                t += 1;
                policy.observe(Feedback::Round {
                    action: &action,
                    click,
                });
            }
        }
    }
    debug_assert_eq!(trace.len(), horizon);
    Ok((trace, decisions))
}

/// Runs replication `rep` of `kind`. The environment and policy draw from
/// separate streams of the replication seed, so every policy faces the same
/// click randomness in a given replication.
pub fn run_replication(
    inst: &ProblemInstance,
    kind: PolicyKind,
    rep: usize,
    base_seed: u64,
    cfg: &PolicyConfig,
    mode: RegretMode,
) -> Result<ReplicationResult> {
    let root = SimulationRng::for_replication(base_seed, rep);
    let mut env = root.split(0);
    let mut policy = kind.build(inst, cfg, root.split(1));
    let (trace, decisions) = run_policy(inst, policy.as_mut(), &mut env, mode)?;
    Ok(ReplicationResult {
        policy: kind.name().to_string(),
        replication: rep,
        trace,
        decisions,
        diagnostics: policy.diagnostics(),
    })
}

/// All traces of an experiment, ordered by (policy, replication).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub problem: String,
    pub horizon: usize,
    pub runs: Vec<ReplicationResult>,
}

impl ExperimentResult {
    /// Policies in first-seen order.
    pub fn policies(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.policy.as_str()) {
                out.push(&r.policy);
            }
        }
        out
    }

    pub fn runs_for<'a>(
        &'a self,
        policy: &'a str,
    ) -> impl Iterator<Item = &'a ReplicationResult> + 'a {
        self.runs.iter().filter(move |r| r.policy == policy)
    }

    /// Mean cumulative regret per round over replications.
    pub fn mean_cumulative(&self, policy: &str) -> Vec<f64> {
        let mut sum = vec![0.0; self.horizon];
        let mut n = 0usize;
        for r in self.runs_for(policy) {
            n += 1;
            for (s, c) in sum.iter_mut().zip(r.trace.cumulative()) {
                *s += c;
            }
        }
        if n > 0 {
            sum.iter_mut().for_each(|s| *s /= n as f64);
        }
        sum
    }

    /// Final-round cumulative regret of every replication.
    pub fn final_regrets(&self, policy: &str) -> Vec<f64> {
        self.runs_for(policy)
            .map(|r| r.trace.final_regret())
            .collect()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.runs
            .iter()
            .map(|r| SummaryRow {
                problem: self.problem.clone(),
                policy: r.policy.clone(),
                replication: r.replication,
                final_regret: r.trace.final_regret(),
            })
            .collect()
    }

    /// Writes `regret.csv` and `summary.csv` into `dir`, creating it if
    /// needed. Returns the two paths.
    pub fn write_to_dir(&self, dir: &std::path::Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            context: format!("creating {}", dir.display()),
            source,
        })?;
        let long = dir.join("regret.csv");
        let summary = dir.join("summary.csv");
        write_regret_csv(self, &long)?;
        write_summary_csv(&self.summary(), &summary)?;
        Ok((long, summary))
    }
}

/// Runs every (policy, replication) pair, in parallel across pairs.
/// Results come back in (policy, replication) order regardless of
/// scheduling. Writes CSV output only after all runs succeed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let inst = cfg.problem.instance(cfg.horizon)?;
    let jobs: Vec<(PolicyKind, usize)> = cfg
        .policies
        .iter()
        .flat_map(|&p| (0..cfg.replications).map(move |r| (p, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(kind, rep)| {
                run_replication(&inst, kind, rep, cfg.base_seed, &cfg.policy, cfg.regret)
            })
            .collect::<Result<Vec<_>>>()
    };
    let runs = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let result = ExperimentResult {
        problem: cfg.problem.label(),
        horizon: cfg.horizon,
        runs,
    };
    if let Some(dir) = &cfg.output {
        result.write_to_dir(dir)?;
    }
    Ok(result)
}

/// Regret upper bound of epoch UCB with known biases after `t` rounds:
/// `(9(K+1) + 14 J / (lambda_min K) log(J t^2 / 2)) (log t + 1)
///  + sqrt(48 log(J t^2) J K t / lambda_min)`.
pub fn regret_upper_bound_value(inst: &ProblemInstance, t: usize) -> f64 {
    let (j, k) = (inst.n_items() as f64, inst.n_slots() as f64);
    let t = t.max(1) as f64;
    let lambda_min = inst.lambda().iter().copied().fold(f64::INFINITY, f64::min);
    let log_t = t.ln();
    let log_half = (j * t * t / 2.0).ln().max(0.0);
    let log_full = (j * t * t).ln().max(0.0);
    (9.0 * (k + 1.0) + 14.0 * j / (lambda_min * k) * log_half) * (log_t + 1.0)
        + (48.0 * log_full * j * k * t / lambda_min).sqrt()
}

/// Constant regret per round of always playing `action`.
pub fn constant_action_gap(inst: &ProblemInstance, action: &Action) -> Result<f64> {
    Ok(expected_reward(inst, &inst.optimal_action())? - expected_reward(inst, action)?)
}
