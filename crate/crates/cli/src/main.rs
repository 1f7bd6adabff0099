//! `losstree`: success probabilities, tree searches, Monte Carlo checks and
//! stabilizer rule verification for loss-tolerant tree clusters.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use losstree_core::optimizer::greedy_tree;
use losstree_core::stabilizer::{run_suite, SuiteConfig};
use losstree_core::{
    build_tree, estimate_success, logical_success, optimize_tree, qubit_count, sweep,
    BranchingVector, Error, LossRate, OptimizationResult, SearchBounds,
};
use serde::Serialize;

use config::SweepConfig;
use output::{emit, render, Format};

#[derive(Parser)]
#[command(name = "losstree", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "LOSSTREE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Write to this file (atomically) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    max_branch: Option<u32>,
    #[arg(long)]
    max_qubits: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Success probability and R-recursion for one tree.
    Prob {
        #[arg(long)]
        b: BranchingVector,
        #[arg(long)]
        eps0: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smallest tree reaching an effective loss target.
    Optimize {
        #[arg(long)]
        eps0: f64,
        #[arg(long)]
        target: f64,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Exit with status 3 when no tree meets the target.
        #[arg(long)]
        strict: bool,
        /// Fast greedy heuristic; not guaranteed optimal.
        #[arg(long)]
        greedy: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Optimize over a grid of loss rates and targets.
    Sweep {
        /// TOML file with eps0, targets, bounds, output and format.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        eps0: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<f64>>,
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo estimate of the success probability.
    Simulate {
        #[arg(long)]
        b: BranchingVector,
        #[arg(long)]
        eps0: f64,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Randomized checks of the graph-state measurement rules.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest graph size drawn.
        #[arg(long, default_value_t = 12)]
        sizes: usize,
        /// Instances per rule.
        #[arg(long, default_value_t = 500)]
        instances: usize,
        /// Corrupt one generator sign first; every rule should then fail.
        #[arg(long)]
        corrupt_sign: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
}

enum Failure {
    Usage(String),
    Infeasible,
    Capacity(String),
    Verification,
    Internal(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            Error::Capacity { .. } => Failure::Capacity(e.to_string()),
            Error::Contradiction { .. } => Failure::Internal(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct ProbRow {
    b: BranchingVector,
    eps0: f64,
    #[serde(rename = "Q")]
    q: u64,
    #[serde(rename = "P")]
    p: f64,
    eps_eff: f64,
    #[serde(rename = "R")]
    r: Vec<f64>,
}

#[derive(Serialize)]
struct SearchRow {
    eps0: f64,
    target: f64,
    method: &'static str,
    feasible: Option<bool>,
    b: Option<BranchingVector>,
    #[serde(rename = "Q")]
    q: Option<u64>,
    achieved_eps_eff: Option<f64>,
    evaluated: Option<u64>,
    error: Option<String>,
}

impl SearchRow {
    fn new(
        eps0: f64,
        target: f64,
        method: &'static str,
        r: Result<OptimizationResult, Error>,
    ) -> Self {
        let (ok, error) = match r {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            eps0,
            target,
            method,
            feasible: ok.as_ref().map(|r| r.feasible),
            b: ok.as_ref().and_then(|r| r.best.clone()),
            q: ok.as_ref().and_then(|r| r.qubits),
            achieved_eps_eff: ok.as_ref().and_then(|r| r.achieved_eps_eff),
            evaluated: ok.as_ref().map(|r| r.evaluated),
            error,
        }
    }
}

#[derive(Serialize)]
struct SimulateRow {
    b: BranchingVector,
    eps0: f64,
    trials: u64,
    seed: u64,
    successes: u64,
    estimate: f64,
    std_error: f64,
    analytic_p: f64,
    /// `None` when the standard error is zero.
    z_score: Option<f64>,
}

#[derive(Serialize)]
struct VerifyRow {
    rule: &'static str,
    instances: usize,
    passed: usize,
    ok: bool,
}

fn rate(eps0: f64) -> Result<LossRate, Failure> {
    Ok(LossRate::new(eps0)?)
}

fn bounds(args: &BoundArgs, file: &SweepConfig) -> Result<SearchBounds, Failure> {
    let d = SearchBounds::default();
    let b = SearchBounds {
        max_depth: args.max_depth.or(file.max_depth).unwrap_or(d.max_depth),
        max_branch: args.max_branch.or(file.max_branch).unwrap_or(d.max_branch),
        max_qubits: args.max_qubits.or(file.max_qubits).unwrap_or(d.max_qubits),
    };
    b.validate()?;
    Ok(b)
}

fn write<T: Serialize>(rows: &[T], out: &OutputArgs, file: &SweepConfig) -> Outcome {
    let format = out.format.or(file.format).unwrap_or_default();
    let path = out.output.as_deref().or(file.output.as_deref());
    emit(&render(rows, format)?, path)?;
    Ok(())
}

fn run(command: Command) -> Outcome {
    let none = SweepConfig::default();
    match command {
        Command::Prob { b, eps0, out } => {
            let report = logical_success(&b, rate(eps0)?);
            let row = ProbRow {
                q: qubit_count(&b)?,
                b,
                eps0,
                p: report.p,
                eps_eff: report.eps_eff,
                r: report.r,
            };
            write(&[row], &out, &none)
        }
        Command::Optimize {
            eps0,
            target,
            bounds: bound_args,
            strict,
            greedy,
            out,
        } => {
            let rate = rate(eps0)?;
            let bounds = bounds(&bound_args, &none)?;
            let result = if greedy {
                greedy_tree(rate, target, &bounds)?
            } else {
                optimize_tree(rate, target, &bounds)?
            };
            let feasible = result.feasible;
            let method = if greedy { "greedy" } else { "exact" };
            write(
                &[SearchRow::new(eps0, target, method, Ok(result))],
                &out,
                &none,
            )?;
            if strict && !feasible {
                return Err(Failure::Infeasible);
            }
            Ok(())
        }
        Command::Sweep {
            config,
            eps0,
            targets,
            bounds: bound_args,
            out,
        } => {
            let file = match config {
                Some(path) => {
                    SweepConfig::load(&path).map_err(|e| Failure::Usage(format!("{e:#}")))?
                }
                None => SweepConfig::default(),
            };
            let eps0 = eps0.or_else(|| file.eps0.clone()).unwrap_or_default();
            let targets = targets.or_else(|| file.targets.clone()).unwrap_or_default();
            let bounds = bounds(&bound_args, &file)?;
            let rows: Vec<SearchRow> = sweep(&eps0, &targets, &bounds)?
                .into_iter()
                .map(|r| SearchRow::new(r.eps0, r.target, "exact", r.outcome))
                .collect();
            write(&rows, &out, &file)
        }
        Command::Simulate {
            b,
            eps0,
            trials,
            seed,
            out,
        } => {
            let rate = rate(eps0)?;
            let tree = build_tree(&b)?;
            let est = estimate_success(&tree, rate, trials, seed)?;
            let analytic_p = logical_success(&b, rate).p;
            let z_score =
                (est.std_error > 0.0).then(|| (est.estimate - analytic_p) / est.std_error);
            let row = SimulateRow {
                b,
                eps0,
                trials,
                seed,
                successes: est.successes,
                estimate: est.estimate,
                std_error: est.std_error,
                analytic_p,
                z_score,
            };
            write(&[row], &out, &none)
        }
        Command::Verify {
            seed,
            sizes,
            instances,
            corrupt_sign,
            out,
        } => {
            let reports = run_suite(&SuiteConfig {
                seed,
                max_qubits: sizes,
                instances,
                corrupt_sign,
            })?;
            let rows: Vec<VerifyRow> = reports
                .iter()
                .map(|r| VerifyRow {
                    rule: r.rule,
                    instances: r.instances,
                    passed: r.passed,
                    ok: r.ok(),
                })
                .collect();
            write(&rows, &out, &none)?;
            if rows.iter().all(|r| r.ok) {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible) => {
            eprintln!("no tree within bounds meets the target");
            ExitCode::from(3)
        }
        Err(Failure::Capacity(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
