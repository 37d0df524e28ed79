use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stiefel_opt::problems::{Family, InstanceFile, Problem, ProblemSpec, WoppType};
use stiefel_opt::{solve, SearchMode};
use stiefel_bench::report::format_aggregate;
use stiefel_bench::{compare_modes, run_experiment, run_sweep, ExperimentConfig, ExperimentOutcome};

/// Exit status when a run stopped without meeting a convergence test.
const UNCONVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "stiefel-bench", version, about = "Seeded benchmarks for the Stiefel-manifold solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve `--sims` seeded instances and report min/mean/max.
    Run(CommonArgs),
    /// Monotone and non-monotone searches on the same seeds.
    Compare(CommonArgs),
    /// Repeat the batch for each alpha, with beta = 1 - alpha.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated alpha values.
        #[arg(long, value_delimiter = ',', conflicts_with = "alpha_step")]
        alphas: Option<Vec<f64>>,
        /// Grid 0, step, 2 step, ..., 1.
        #[arg(long)]
        alpha_step: Option<f64>,
    },
    /// Write one generated instance (with its starting point) as JSON.
    Instance {
        #[command(flatten)]
        common: CommonArgs,
        /// Destination file; stdout when omitted.
        #[arg(long = "file")]
        file: Option<PathBuf>,
    },
    /// Solve an instance saved by `instance`.
    Replay {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// JSON or TOML experiment file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    /// Rows of X (WOPP m, energy n, eigenvalue n).
    #[arg(long)]
    n: Option<usize>,
    /// Columns of X (WOPP n = q, energy k, eigenvalue p).
    #[arg(long)]
    p: Option<usize>,
    /// WOPP scaling type: 1, 2 or 3.
    #[arg(long)]
    ptype: Option<WoppType>,
    /// Coupling constant of the energy problem.
    #[arg(long)]
    mu: Option<f64>,
    /// WOPP only: build B = A Q* C from a random feasible Q*.
    #[arg(long)]
    known_solution: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// monotone or nonmonotone.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SearchMode>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tolx: Option<f64>,
    #[arg(long)]
    tolf: Option<f64>,
    #[arg(long)]
    sims: Option<usize>,
    /// Seed of the first simulation; simulation i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (1 = sequential).
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip history.csv.
    #[arg(long)]
    no_history: bool,
}

fn parse_mode(s: &str) -> Result<SearchMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "monotone" | "armijo" | "1" => Ok(SearchMode::Monotone),
        "nonmonotone" | "non-monotone" | "bb" | "2" => Ok(SearchMode::Nonmonotone),
        other => Err(format!("unknown mode {other:?}")),
    }
}

impl CommonArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => {
                let (Some(family), Some(n), Some(p)) = (self.family, self.n, self.p) else {
                    bail!("either --config or all of --family, --n and --p are required");
                };
                ExperimentConfig::new(ProblemSpec::new(family, n, p))
            }
        };
        let pr = &mut cfg.problem;
        if let Some(v) = self.family {
            pr.family = v;
        }
        if let Some(v) = self.n {
            pr.rows = v;
        }
        if let Some(v) = self.p {
            pr.cols = v;
        }
        if let Some(v) = self.ptype {
            pr.ptype = v;
        }
        if let Some(v) = self.mu {
            pr.mu = v;
        }
        pr.known_solution |= self.known_solution;
        let s = &mut cfg.solver;
        s.alpha = self.alpha.or(s.alpha);
        s.beta = self.beta.or(s.beta);
        s.eta = self.eta.or(s.eta);
        s.mode = self.mode.or(s.mode);
        s.max_iters = self.max_iters.or(s.max_iters);
        s.epsilon = self.epsilon.or(s.epsilon);
        s.tolx = self.tolx.or(s.tolx);
        s.tolf = self.tolf.or(s.tolf);
        if let Some(v) = self.sims {
            cfg.sims = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        cfg.history &= !self.no_history;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_outcome(title: &str, outcome: &ExperimentOutcome) {
    println!("{title}: {}", outcome.dims);
    println!(
        "alpha={} beta={} mode={:?} sims={}",
        outcome.solver.alpha,
        outcome.solver.beta,
        outcome.solver.mode,
        outcome.runs.len()
    );
    print!("{}", format_aggregate(&outcome.aggregate));
    for r in outcome.runs.iter().filter(|r| !r.converged) {
        eprintln!("sim {} (seed {}) stopped: {}", r.record.sim, r.record.seed, r.termination);
    }
}

fn status(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(UNCONVERGED)
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.build()?;
            let outcome = run_experiment(&cfg)?;
            print_outcome("run", &outcome);
            Ok(status(outcome.all_converged))
        }
        Command::Compare(args) => {
            let cfg = args.build()?;
            let cmp = compare_modes(&cfg)?;
            println!("{} | seeds {:?}", cmp.nonmonotone.dims, cmp.nonmonotone.seeds());
            print!("{}", cmp.table());
            if let Some(w) = &cmp.warning {
                eprintln!("warning: {w}");
            }
            Ok(status(cmp.all_converged()))
        }
        Command::Sweep {
            common,
            alphas,
            alpha_step,
        } => {
            let mut cfg = common.build()?;
            let grid = match (alphas, alpha_step) {
                (Some(a), _) => a,
                (None, Some(step)) if step > 0.0 && step <= 1.0 => {
                    let count = (1.0 / step).round() as usize;
                    (0..=count).map(|i| (i as f64 * step).min(1.0)).collect()
                }
                (None, Some(step)) => bail!("--alpha-step must lie in (0, 1], got {step}"),
                (None, None) => cfg.sweep.clone().context("give --alphas, --alpha-step or a sweep in --config")?,
            };
            cfg.sweep = Some(grid);
            cfg.validate()?;
            println!("sweep: {}", cfg.dims_label());
            println!("{:>6} {:>6} {:>9} {:>10} {:>10} {:>14} {:>10}", "alpha", "beta", "converged", "nitr", "time_s", "fval", "nrmg");
            let rows = run_sweep(&cfg)?;
            for r in &rows {
                println!(
                    "{:>6.3} {:>6.3} {:>5}/{:<3} {:>10.2} {:>10.4} {:>14.6e} {:>10.2e}",
                    r.alpha, r.beta, r.converged, r.sims, r.nitr_mean, r.time_s_mean, r.fval_mean, r.nrmg_mean
                );
            }
            Ok(status(rows.iter().all(|r| r.converged == r.sims)))
        }
        Command::Instance { common, file } => {
            let cfg = common.build()?;
            let (problem, x0) = cfg.problem.generate::<f64>(cfg.seed)?;
            let json = InstanceFile::from_problem(&problem, Some(&x0)).to_json()?;
            match file {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { instance, common } => {
            let text = std::fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let (problem, x0) = InstanceFile::from_json(&text)?.into_problem::<f64>()?;
            let x0 = x0.context("instance file has no starting point")?;
            let (rows, cols) = x0.shape();
            let mut args = common;
            args.family = Some(problem.family());
            args.n = Some(rows);
            args.p = Some(cols);
            if let Problem::Wopp(inst) = &problem {
                args.ptype = Some(inst.ptype);
            }
            let cfg = args.build()?;
            let report = solve(&problem, &x0, &cfg.solver_config()?)?;
            println!(
                "{}: nitr={} nfe={} fval={:.10e} nrmg={:.3e} feasi={:.3e} termination={}",
                cfg.dims_label(),
                report.nitr,
                report.nfe,
                report.fval,
                report.nrmg,
                report.feasi,
                report.termination.as_str()
            );
            Ok(status(report.termination.converged()))
        }
    }
}
