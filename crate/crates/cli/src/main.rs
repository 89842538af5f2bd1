use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mnl_ltr::checks::{run_suite, Suite};
use mnl_ltr::harness::{
    run_experiment, summarise, ExperimentConfig, ProblemSpec, RegretMode, PRESET_NAMES,
};
use mnl_ltr::PolicyKind;

#[derive(Parser)]
#[command(
    name = "mnl-ltr",
    version,
    about = "Regret experiments for learning to rank under MNL clicks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run policies on a problem and write regret CSVs.
    Run(RunArgs),
    /// List the available policies.
    ListPolicies,
    /// Run a statistical property suite.
    Check {
        #[arg(long, value_parser = ["distributional", "concentration", "theory"])]
        suite: String,
        #[arg(long, default_value_t = 20240601)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset `a`, `b` or `c`, or a JSON file with `alpha` and `lambda`.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated policy names; defaults to all seven.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for regret.csv and summary.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Charge realized clicks instead of expected reward gaps.
    #[arg(long)]
    realized_regret: bool,
}

fn problem_spec(arg: &str) -> Result<ProblemSpec> {
    let name = arg.trim().trim_start_matches('(').trim_end_matches(')');
    if PRESET_NAMES.contains(&name) {
        return Ok(ProblemSpec::Preset(name.to_string()));
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!("unknown problem {arg:?}: expected one of a, b, c or a JSON file");
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: ProblemSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if matches!(spec, ProblemSpec::Preset(_)) {
        bail!(
            "{} must contain an object with alpha and lambda",
            path.display()
        );
    }
    Ok(spec)
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text)
                .with_context(|| format!("loading {}", path.display()))?
        }
        None => {
            let problem = args
                .problem
                .as_deref()
                .context("--problem is required without --config")?;
            let horizon = args
                .horizon
                .context("--horizon is required without --config")?;
            ExperimentConfig::new(problem_spec(problem)?, PolicyKind::ALL.to_vec(), horizon, 1)
        }
    };
    if let Some(p) = &args.problem {
        cfg.problem = problem_spec(p)?;
    }
    if let Some(list) = args.policies {
        cfg.policies = list
            .iter()
            .map(|s| s.trim().parse::<PolicyKind>())
            .collect::<mnl_ltr::Result<_>>()?;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if args.out.is_some() {
        cfg.output = args.out;
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if args.realized_regret {
        cfg.regret = RegretMode::Realized;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let result = run_experiment(&cfg)?;
    println!(
        "problem {} | horizon {} | {} replications | seed {}",
        result.problem, result.horizon, cfg.replications, cfg.base_seed
    );
    println!("{:<20} {:>14} {:>12}", "policy", "mean regret", "std dev");
    let stats = summarise(&result.summary());
    for policy in result.policies() {
        let (mean, sd) = stats[policy];
        println!("{policy:<20} {mean:>14.3} {sd:>12.3}");
    }
    if let Some(dir) = &cfg.output {
        println!(
            "wrote {} and {}",
            dir.join("regret.csv").display(),
            dir.join("summary.csv").display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome =
        match cli.command {
            Command::Run(args) => run(args).map(|_| true),
            Command::ListPolicies => {
                for kind in PolicyKind::ALL {
                    println!("{:<20} {}", kind.name(), kind.description());
                }
                Ok(true)
            }
            Command::Check { suite, seed } => suite
                .parse::<Suite>()
                .map_err(anyhow::Error::from)
                .map(|suite| {
                    let results = run_suite(suite, seed);
                    for r in &results {
                        println!("{r}");
                    }
                    let failed = results.iter().filter(|r| !r.passed).count();
                    println!("{} checks, {failed} failed", results.len());
                    failed == 0
                }),
        };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
