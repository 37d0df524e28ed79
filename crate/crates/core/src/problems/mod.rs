//! Benchmark objective families, a finite-difference gradient oracle and a
//! JSON instance format for replaying runs.
//!
//! # Instance JSON
//!
//! ```text
//! { "family": "wopp", "rows": m, "cols": n, "ptype": "P1", "seed": 7,
//!   "a": [[..]], "b": [[..]], "c": [[..]], "s": [..],
//!   "known_solution": [[..]] | null, "x0": [[..]] | null }
//! { "family": "energy", "n": 100, "k": 10, "mu": 1.0, "seed": 7, "x0": .. }
//! { "family": "eig", "n": 50, "p": 6, "seed": 7, "a": [[..]],
//!   "oracle_eigs": [..] | null, "x0": .. }
//! ```
//!
//! Matrices are arrays of rows; numbers are `f64`.

mod eig;
mod energy;
mod wopp;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use eig::{eig_error, top_eigenvalues, EigInstance};
pub use energy::{EnergyInstance, TridiagonalSolver};
pub use wopp::{wopp_generate, WoppInstance, WoppType};

use crate::dense::{matrix_to_rows, random_orthonormal, rows_to_matrix, Rng};
use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::objective::Objective;
use crate::scalar::Real;

/// Central differences `(F(X + h E_ij) - F(X - h E_ij)) / 2h` in the ambient space.
pub fn fd_gradient<T, O>(objective: &O, x: &DMatrix<T>, h: T) -> DMatrix<T>
where
    T: Real,
    O: Objective<T> + ?Sized,
{
    let two_h = h + h;
    let mut probe = x.clone();
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        let orig = probe[(i, j)];
        probe[(i, j)] = orig + h;
        let fp = objective.value(&probe);
        probe[(i, j)] = orig - h;
        let fm = objective.value(&probe);
        probe[(i, j)] = orig;
        (fp - fm) / two_h
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Wopp,
    Energy,
    Eig,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wopp" => Ok(Self::Wopp),
            "energy" => Ok(Self::Energy),
            "eig" | "eigen" | "eigenvalue" => Ok(Self::Eig),
            other => Err(Error::InvalidParameter(format!("unknown problem family {other:?}"))),
        }
    }
}

/// Everything needed to draw an instance and a starting point from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    /// Manifold rows (`m` for WOPP, `n` otherwise).
    pub rows: usize,
    /// Manifold columns (`n` for WOPP, `k` for energy, `p` for eig).
    pub cols: usize,
    #[serde(default = "default_ptype")]
    pub ptype: WoppType,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub known_solution: bool,
}

fn default_ptype() -> WoppType {
    WoppType::P1
}

fn default_mu() -> f64 {
    1.0
}

impl ProblemSpec {
    pub fn new(family: Family, rows: usize, cols: usize) -> Self {
        Self {
            family,
            rows,
            cols,
            ptype: WoppType::P1,
            mu: 1.0,
            known_solution: false,
        }
    }

    /// Instance and starting point, both drawn from one stream seeded with `seed`.
    pub fn generate<T: Real>(&self, seed: u64) -> Result<(Problem<T>, StiefelPoint<T>)> {
        let mut rng = Rng::new(seed);
        let problem = match self.family {
            Family::Wopp => Problem::Wopp(WoppInstance::generate(
                self.rows,
                self.cols,
                self.ptype,
                self.known_solution,
                &mut rng,
            )?),
            Family::Energy => {
                let mut inst = EnergyInstance::new(self.rows, self.cols, T::lit(self.mu))?;
                inst.seed = Some(seed);
                Problem::Energy(inst)
            }
            Family::Eig => Problem::Eig(EigInstance::generate(self.rows, self.cols, true, &mut rng)?),
        };
        let x0 = StiefelPoint::new(random_orthonormal(self.rows, self.cols, &mut rng)?)?;
        Ok((problem, x0))
    }
}

#[derive(Debug, Clone)]
pub enum Problem<T: Real> {
    Wopp(WoppInstance<T>),
    Energy(EnergyInstance<T>),
    Eig(EigInstance<T>),
}

impl<T: Real> Problem<T> {
    pub fn family(&self) -> Family {
        match self {
            Self::Wopp(_) => Family::Wopp,
            Self::Energy(_) => Family::Energy,
            Self::Eig(_) => Family::Eig,
        }
    }

    /// Accuracy measure reported next to the solver output, when the family has one:
    /// the relative eigenvalue error for `eig`, `None` otherwise.
    pub fn error(&self, x: &StiefelPoint<T>) -> Option<T> {
        match self {
            Self::Eig(inst) => inst.error(x).ok(),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn Objective<T> {
        match self {
            Self::Wopp(i) => i,
            Self::Energy(i) => i,
            Self::Eig(i) => i,
        }
    }
}

impl<T: Real> Objective<T> for Problem<T> {
    fn dims(&self) -> (usize, usize) {
        self.inner().dims()
    }

    fn name(&self) -> &str {
        self.inner().name()
    }

    fn value(&self, x: &DMatrix<T>) -> T {
        self.inner().value(x)
    }

    fn gradient(&self, x: &DMatrix<T>) -> DMatrix<T> {
        self.inner().gradient(x)
    }

    fn value_and_gradient(&self, x: &DMatrix<T>) -> (T, DMatrix<T>) {
        self.inner().value_and_gradient(x)
    }
}

type Rows = Vec<Vec<f64>>;

/// Serialized instance, optionally with the starting point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum InstanceFile {
    Wopp {
        rows: usize,
        cols: usize,
        ptype: WoppType,
        seed: Option<u64>,
        a: Rows,
        b: Rows,
        c: Rows,
        s: Vec<f64>,
        known_solution: Option<Rows>,
        x0: Option<Rows>,
    },
    Energy {
        n: usize,
        k: usize,
        mu: f64,
        seed: Option<u64>,
        x0: Option<Rows>,
    },
    Eig {
        n: usize,
        p: usize,
        seed: Option<u64>,
        a: Rows,
        oracle_eigs: Option<Vec<f64>>,
        x0: Option<Rows>,
    },
}

impl InstanceFile {
    pub fn from_problem<T: Real>(problem: &Problem<T>, x0: Option<&StiefelPoint<T>>) -> Self {
        let x0 = x0.map(|x| matrix_to_rows(x.matrix()));
        match problem {
            Problem::Wopp(w) => Self::Wopp {
                rows: w.rows(),
                cols: w.cols(),
                ptype: w.ptype,
                seed: w.seed,
                a: matrix_to_rows(&w.a),
                b: matrix_to_rows(&w.b),
                c: matrix_to_rows(&w.c),
                s: w.s.iter().map(|v| v.to_f64_lossy()).collect(),
                known_solution: w.known_solution.as_ref().map(|q| matrix_to_rows(q.matrix())),
                x0,
            },
            Problem::Energy(e) => Self::Energy {
                n: e.n,
                k: e.k,
                mu: e.mu.to_f64_lossy(),
                seed: e.seed,
                x0,
            },
            Problem::Eig(e) => Self::Eig {
                n: e.n(),
                p: e.p,
                seed: e.seed,
                a: matrix_to_rows(&e.a),
                oracle_eigs: e
                    .oracle_eigs
                    .as_ref()
                    .map(|v| v.iter().map(|x| x.to_f64_lossy()).collect()),
                x0,
            },
        }
    }

    pub fn into_problem<T: Real>(&self) -> Result<(Problem<T>, Option<StiefelPoint<T>>)> {
        let point = |rows: &Option<Rows>| -> Result<Option<StiefelPoint<T>>> {
            rows.as_ref()
                .map(|r| StiefelPoint::new(rows_to_matrix(r)?))
                .transpose()
        };
        let check = |m: &DMatrix<T>, shape: (usize, usize), what: &str| -> Result<()> {
            if m.shape() != shape {
                return Err(Error::InvalidDimensions(format!(
                    "{what} has shape {:?}, expected {shape:?}",
                    m.shape()
                )));
            }
            Ok(())
        };
        match self {
            Self::Wopp { rows, cols, ptype, seed, a, b, c, s, known_solution, x0 } => {
                let a: DMatrix<T> = rows_to_matrix(a)?;
                let b: DMatrix<T> = rows_to_matrix(b)?;
                let c: DMatrix<T> = rows_to_matrix(c)?;
                check(&a, (*rows, *rows), "a")?;
                check(&b, (*rows, *cols), "b")?;
                check(&c, (*cols, *cols), "c")?;
                let inst = WoppInstance {
                    a,
                    b,
                    c,
                    s: DVector::from_iterator(s.len(), s.iter().map(|&v| T::lit(v))),
                    known_solution: point(known_solution)?,
                    ptype: *ptype,
                    seed: *seed,
                };
                Ok((Problem::Wopp(inst), point(x0)?))
            }
            Self::Energy { n, k, mu, seed, x0 } => {
                let mut inst = EnergyInstance::new(*n, *k, T::lit(*mu))?;
                inst.seed = *seed;
                Ok((Problem::Energy(inst), point(x0)?))
            }
            Self::Eig { n, p, seed, a, oracle_eigs, x0 } => {
                let a: DMatrix<T> = rows_to_matrix(a)?;
                check(&a, (*n, *n), "a")?;
                let mut inst = EigInstance::new(a, *p, false)?;
                inst.oracle_eigs = oracle_eigs.as_ref().map(|v| v.iter().map(|&x| T::lit(x)).collect());
                inst.seed = *seed;
                Ok((Problem::Eig(inst), point(x0)?))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
