//! Per-run rows, min/mean/max aggregation and the CSV/JSON writers.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stiefel_opt::{IterRecord64, SolverReport64};

use crate::BenchError;

/// One solve. Field order is the column order of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sim: usize,
    pub seed: u64,
    pub nitr: usize,
    pub nfe: usize,
    pub time_s: f64,
    pub fval: f64,
    pub nrmg: f64,
    pub feasi: f64,
    /// Empty when the family has no reference solution.
    pub error: Option<f64>,
}

/// A [`RunRecord`] plus the fields that only go to the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    #[serde(flatten)]
    pub record: RunRecord,
    pub ngrad: usize,
    pub termination: &'static str,
    pub converged: bool,
}

impl RunSummary {
    pub fn new(sim: usize, seed: u64, report: &SolverReport64, error: Option<f64>) -> Self {
        Self {
            record: RunRecord {
                sim,
                seed,
                nitr: report.nitr,
                nfe: report.nfe,
                time_s: report.time_seconds,
                fval: report.fval,
                nrmg: report.nrmg,
                feasi: report.feasi,
                error,
            },
            ngrad: report.ngrad,
            termination: report.termination.as_str(),
            converged: report.termination.converged(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut n = 0usize;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in values {
            n += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (n > 0).then(|| Self {
            min,
            mean: sum / n as f64,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub nitr: Stats,
    pub nfe: Stats,
    pub time_s: Stats,
    pub fval: Stats,
    pub nrmg: Stats,
    pub feasi: Stats,
    pub error: Option<Stats>,
}

impl Aggregate {
    /// `None` for an empty slice.
    pub fn of(runs: &[RunRecord]) -> Option<Self> {
        let col = |f: fn(&RunRecord) -> f64| Stats::of(runs.iter().map(f));
        Some(Self {
            nitr: col(|r| r.nitr as f64)?,
            nfe: col(|r| r.nfe as f64)?,
            time_s: col(|r| r.time_s)?,
            fval: col(|r| r.fval)?,
            nrmg: col(|r| r.nrmg)?,
            feasi: col(|r| r.feasi)?,
            error: Stats::of(runs.iter().filter_map(|r| r.error)),
        })
    }

    fn row(&self, label: &str, pick: fn(&Stats) -> f64) -> Vec<String> {
        let mut row = vec![label.to_string()];
        for s in [&self.nitr, &self.nfe, &self.time_s, &self.fval, &self.nrmg, &self.feasi] {
            row.push(format!("{:?}", pick(s)));
        }
        row.push(self.error.as_ref().map(|s| format!("{:?}", pick(s))).unwrap_or_default());
        row
    }

    /// Rows `min`, `mean`, `max`, each led by `label` columns.
    pub fn rows(&self) -> [Vec<String>; 3] {
        [
            self.row("min", |s| s.min),
            self.row("mean", |s| s.mean),
            self.row("max", |s| s.max),
        ]
    }
}

pub const AGGREGATE_HEADER: [&str; 8] = ["stat", "nitr", "nfe", "time_s", "fval", "nrmg", "feasi", "error"];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn write_runs(path: &Path, runs: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in runs {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_runs(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

pub fn write_aggregate(path: &Path, agg: &Aggregate) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(AGGREGATE_HEADER).map_err(csv_err(path))?;
    for row in agg.rows() {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `k,fval,nrmg,tau,ck,relx,relf,fastpath`; step columns are blank on row 0.
pub fn write_history(path: &Path, history: &[IterRecord64]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["k", "fval", "nrmg", "tau", "ck", "relx", "relf", "fastpath"])
        .map_err(csv_err(path))?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for rec in history {
        w.write_record([
            rec.k.to_string(),
            format!("{:?}", rec.fval),
            format!("{:?}", rec.nrmg),
            opt(rec.tau),
            format!("{:?}", rec.ck),
            opt(rec.relx),
            opt(rec.relf),
            u8::from(rec.fast_path).to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut f = File::create(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(f, "{text}").map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Plain-text min/mean/max table for the terminal.
pub fn format_aggregate(agg: &Aggregate) -> String {
    let mut out = format!(
        "{:<5} {:>9} {:>9} {:>10} {:>14} {:>10} {:>10} {:>10}\n",
        "", "nitr", "nfe", "time_s", "fval", "nrmg", "feasi", "error"
    );
    for (label, pick) in [
        ("min", (|s: &Stats| s.min) as fn(&Stats) -> f64),
        ("mean", |s| s.mean),
        ("max", |s| s.max),
    ] {
        let err = agg.error.as_ref().map(|s| format!("{:.2e}", pick(s))).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<5} {:>9.2} {:>9.2} {:>10.4} {:>14.6e} {:>10.2e} {:>10.2e} {:>10}\n",
            label,
            pick(&agg.nitr),
            pick(&agg.nfe),
            pick(&agg.time_s),
            pick(&agg.fval),
            pick(&agg.nrmg),
            pick(&agg.feasi),
            err
        ));
    }
    out
}
