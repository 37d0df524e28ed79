//! Batches of seeded solves and the files they produce.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use stiefel_opt::problems::ProblemSpec;
use stiefel_opt::{solve, BbGradient, BbMode, IterRecord64, SearchMode, SolverConfig64, StepRule};

use crate::config::ExperimentConfig;
use crate::report::{self, Aggregate, RunRecord, RunSummary};
use crate::BenchError;

/// The solver settings actually used, echoed into `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveSolver {
    pub alpha: f64,
    pub beta: f64,
    pub mode: SearchMode,
    pub step_rule: StepRule,
    pub bb_mode: BbMode,
    pub bb_gradient: BbGradient,
    pub eta: f64,
    pub epsilon: f64,
    pub tolx: f64,
    pub tolf: f64,
    pub window: usize,
    pub max_iters: usize,
    pub tau0: f64,
    pub delta: f64,
    pub rho1: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl From<&SolverConfig64> for EffectiveSolver {
    fn from(c: &SolverConfig64) -> Self {
        Self {
            alpha: c.mix.alpha(),
            beta: c.mix.beta(),
            mode: c.mode,
            step_rule: c.step_rule,
            bb_mode: c.bb_mode,
            bb_gradient: c.bb_gradient,
            eta: c.eta,
            epsilon: c.epsilon,
            tolx: c.tolx,
            tolf: c.tolf,
            window: c.window,
            max_iters: c.max_iters,
            tau0: c.tau0,
            delta: c.delta,
            rho1: c.rho1,
            tau_min: c.tau_min,
            tau_max: c.tau_max,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub problem: ProblemSpec,
    pub dims: String,
    pub solver: EffectiveSolver,
    pub runs: Vec<RunSummary>,
    pub aggregate: Aggregate,
    pub all_converged: bool,
    #[serde(skip)]
    pub history: Option<Vec<IterRecord64>>,
}

impl ExperimentOutcome {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.runs.iter().map(|r| r.record.seed).collect()
    }
}

fn one_run(
    spec: &ProblemSpec,
    cfg: &SolverConfig64,
    sim: usize,
    seed: u64,
    keep_history: bool,
) -> Result<(RunSummary, Option<Vec<IterRecord64>>), BenchError> {
    let (problem, x0) = spec.generate::<f64>(seed)?;
    let report = solve(&problem, &x0, cfg)?;
    let summary = RunSummary::new(sim, seed, &report, problem.error(&report.x));
    Ok((summary, keep_history.then_some(report.history)))
}

/// Solves every simulation, in parallel unless `jobs == Some(1)`. Results are
/// in simulation order whatever the scheduling.
fn simulate(
    config: &ExperimentConfig,
    cfg: &SolverConfig64,
) -> Result<(Vec<RunSummary>, Option<Vec<IterRecord64>>), BenchError> {
    let work = || -> Result<Vec<_>, BenchError> {
        (0..config.sims)
            .into_par_iter()
            .map(|sim| {
                let seed = config.seed.wrapping_add(sim as u64);
                one_run(&config.problem, cfg, sim, seed, sim == 0 && config.history)
            })
            .collect()
    };
    let results = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| BenchError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut history = None;
    let mut runs = Vec::with_capacity(results.len());
    for (summary, h) in results {
        if h.is_some() {
            history = h;
        }
        runs.push(summary);
    }
    Ok((runs, history))
}

fn ensure_dir(dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs `config.sims` seeded solves and, when `config.out` is set, writes
/// `runs.csv`, `aggregate.csv`, `history.csv` and `summary.json` there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, BenchError> {
    config.validate()?;
    let cfg = config.solver_config()?;
    let (runs, history) = simulate(config, &cfg)?;
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let aggregate = Aggregate::of(&records).ok_or_else(|| BenchError::Config("no runs".into()))?;
    let outcome = ExperimentOutcome {
        problem: config.problem.clone(),
        dims: config.dims_label(),
        solver: EffectiveSolver::from(&cfg),
        all_converged: runs.iter().all(|r| r.converged),
        runs,
        aggregate,
        history,
    };
    if let Some(dir) = &config.out {
        write_outcome(dir, &outcome)?;
    }
    Ok(outcome)
}

pub fn write_outcome(dir: &Path, outcome: &ExperimentOutcome) -> Result<(), BenchError> {
    ensure_dir(dir)?;
    report::write_runs(&dir.join("runs.csv"), &outcome.records())?;
    report::write_aggregate(&dir.join("aggregate.csv"), &outcome.aggregate)?;
    if let Some(h) = &outcome.history {
        report::write_history(&dir.join("history.csv"), h)?;
    }
    report::write_json(&dir.join("summary.json"), outcome)
}

/// One `alpha` value of a sweep, averaged over the simulations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub sims: usize,
    pub converged: usize,
    pub nitr_mean: f64,
    pub nfe_mean: f64,
    pub time_s_mean: f64,
    pub fval_mean: f64,
    pub nrmg_mean: f64,
    pub feasi_max: f64,
}

/// Solves the same seeds once per grid value, with `beta = 1 - alpha`.
/// Writes `sweep.csv` when `config.out` is set.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, BenchError> {
    config.validate()?;
    let grid = config
        .sweep
        .clone()
        .ok_or_else(|| BenchError::Config("no sweep grid given".into()))?;
    let mut rows = Vec::with_capacity(grid.len());
    for alpha in grid {
        let mut point = config.clone();
        point.sweep = None;
        point.history = false;
        point.solver.alpha = Some(alpha);
        point.solver.beta = Some(1.0 - alpha);
        let cfg = point.solver_config()?;
        let (runs, _) = simulate(&point, &cfg)?;
        let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
        let agg = Aggregate::of(&records).ok_or_else(|| BenchError::Config("no runs".into()))?;
        rows.push(SweepRow {
            alpha,
            beta: 1.0 - alpha,
            sims: runs.len(),
            converged: runs.iter().filter(|r| r.converged).count(),
            nitr_mean: agg.nitr.mean,
            nfe_mean: agg.nfe.mean,
            time_s_mean: agg.time_s.mean,
            fval_mean: agg.fval.mean,
            nrmg_mean: agg.nrmg.mean,
            feasi_max: agg.feasi.max,
        });
    }
    if let Some(dir) = &config.out {
        ensure_dir(dir)?;
        let path = dir.join("sweep.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|source| BenchError::Csv {
            path: path.clone(),
            source,
        })?;
        for row in &rows {
            w.serialize(row).map_err(|source| BenchError::Csv {
                path: path.clone(),
                source,
            })?;
        }
        w.flush().map_err(|source| BenchError::Io { path, source })?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub monotone: ExperimentOutcome,
    pub nonmonotone: ExperimentOutcome,
    /// Set when the non-monotone search was slower on average.
    pub warning: Option<String>,
}

impl Comparison {
    pub fn all_converged(&self) -> bool {
        self.monotone.all_converged && self.nonmonotone.all_converged
    }

    /// Side-by-side min/mean/max table.
    pub fn table(&self) -> String {
        let m = &self.monotone.aggregate;
        let nm = &self.nonmonotone.aggregate;
        let mut out = format!("{:<8} {:<5} {:>14} {:>14}\n", "", "", "monotone", "nonmonotone");
        type Pick = fn(&Aggregate) -> &report::Stats;
        let metrics: [(&str, Pick); 6] = [
            ("nitr", |a| &a.nitr),
            ("nfe", |a| &a.nfe),
            ("time_s", |a| &a.time_s),
            ("fval", |a| &a.fval),
            ("nrmg", |a| &a.nrmg),
            ("feasi", |a| &a.feasi),
        ];
        for (name, pick) in metrics {
            for (stat, v) in [("min", 0), ("mean", 1), ("max", 2)] {
                let get = |s: &report::Stats| [s.min, s.mean, s.max][v];
                out.push_str(&format!(
                    "{:<8} {:<5} {:>14.6e} {:>14.6e}\n",
                    if v == 0 { name } else { "" },
                    stat,
                    get(pick(m)),
                    get(pick(nm))
                ));
            }
        }
        out
    }
}

/// Runs the monotone and the non-monotone search on the same seeds. Both start
/// each line search from the BB step unless the config names a step rule. Each mode writes its own subdirectory and
/// `compare.csv` holds both aggregate blocks.
pub fn compare_modes(config: &ExperimentConfig) -> Result<Comparison, BenchError> {
    let run_mode = |mode: SearchMode, sub: &str| {
        let mut c = config.clone();
        c.solver.mode = Some(mode);
        c.solver.step_rule = c.solver.step_rule.or(Some(StepRule::Bb));
        c.sweep = None;
        c.out = config.out.as_ref().map(|d| d.join(sub));
        run_experiment(&c)
    };
    let monotone = run_mode(SearchMode::Monotone, "monotone")?;
    let nonmonotone = run_mode(SearchMode::Nonmonotone, "nonmonotone")?;
    let (tm, tn) = (monotone.aggregate.time_s.mean, nonmonotone.aggregate.time_s.mean);
    let warning = (tn > tm).then(|| {
        format!("non-monotone search was slower on average ({tn:.4}s vs {tm:.4}s)")
    });
    let cmp = Comparison {
        monotone,
        nonmonotone,
        warning,
    };
    if let Some(dir) = &config.out {
        write_comparison(dir, &cmp)?;
    }
    Ok(cmp)
}

fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<(), BenchError> {
    ensure_dir(dir)?;
    let path: PathBuf = dir.join("compare.csv");
    let csv_err = |source| BenchError::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["algorithm"];
    header.extend(report::AGGREGATE_HEADER);
    w.write_record(&header).map_err(csv_err)?;
    for (name, outcome) in [("monotone", &cmp.monotone), ("nonmonotone", &cmp.nonmonotone)] {
        for row in outcome.aggregate.rows() {
            let mut rec = vec![name.to_string()];
            rec.extend(row);
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.clone(),
        source,
    })?;
    report::write_json(&dir.join("compare.json"), cmp)
}
