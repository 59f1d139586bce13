//! Synthetic experiment harness: for every (method, support size, seed) cell
//! it generates a dataset, sweeps a logarithmic λ grid with warm starts, and
//! records the best achievable estimation error over the grid.

use anyhow::{bail, Result};
use rayon::prelude::*;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::io::{self, Vector};
use tracelasso::baselines::{
    elastic_net_solve_with, lasso_solve_with, ridge_solve, ProxOptions,
};
use tracelasso::datagen::{
    estimation_error, sample_design, sample_ground_truth, sample_response, CovarianceSpec,
};
use tracelasso::solver::{lambda_max, reg_path, Problem, SolverConfig};

/// Estimators compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Trace,
    Lasso,
    Ridge,
    Enet,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Trace => "trace",
            Method::Lasso => "lasso",
            Method::Ridge => "ridge",
            Method::Enet => "enet",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trace" => Ok(Method::Trace),
            "lasso" => Ok(Method::Lasso),
            "ridge" => Ok(Method::Ridge),
            "enet" | "elastic-net" => Ok(Method::Enet),
            other => Err(format!(
                "unknown method '{other}' (expected trace, lasso, ridge or enet)"
            )),
        }
    }
}

/// Covariance family of the sampled design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignKind {
    Identity,
    /// Blocks of `block_size` variables with pairwise correlation `within`.
    Block { block_size: usize, within: f64 },
    /// Sequential correlation `rho^|i−j|`.
    Toeplitz { rho: f64 },
}

impl DesignKind {
    pub fn name(&self) -> &'static str {
        match self {
            DesignKind::Identity => "identity",
            DesignKind::Block { .. } => "block",
            DesignKind::Toeplitz { .. } => "toeplitz",
        }
    }

    pub fn covariance(&self, p: usize) -> CovarianceSpec {
        match *self {
            DesignKind::Identity => CovarianceSpec::identity(p),
            DesignKind::Block { block_size, within } => {
                CovarianceSpec::block_diagonal(p, block_size, within, 1.0 - within)
            }
            DesignKind::Toeplitz { rho } => CovarianceSpec::toeplitz(p, rho),
        }
    }
}

/// Full description of one experiment run (a single design family; run the
/// command once per design to reproduce a multi-design comparison).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub design: DesignKind,
    pub n: usize,
    pub p: usize,
    pub support_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Response noise level σ (σ = 0 is the noiseless setting).
    pub sigma: f64,
    pub methods: Vec<Method>,
    /// λ grid: `grid_points` values spanning `decades` orders of magnitude
    /// below each method's own zero-solution threshold.
    pub grid_points: usize,
    pub decades: f64,
    /// Secondary grid for the elastic net's quadratic weight.
    pub enet_lambda2: Vec<f64>,
    /// Smoothing-annealing length and sweep cap of the trace solver.
    pub anneal_len: usize,
    pub max_outer: usize,
    pub w_tol: f64,
    /// When set, every generated dataset is dumped as CSV with a metadata
    /// sidecar under this directory.
    pub dump_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(design: DesignKind, n: usize, p: usize) -> Self {
        Self {
            design,
            n,
            p,
            support_sizes: vec![8, 16, 32, 64],
            seeds: (0..10).collect(),
            sigma: 1.0,
            methods: vec![Method::Trace, Method::Lasso, Method::Ridge, Method::Enet],
            grid_points: 50,
            decades: 4.0,
            enet_lambda2: vec![0.01, 0.1, 1.0, 10.0],
            anneal_len: 60,
            max_outer: 120,
            w_tol: 1e-6,
            dump_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            bail!("n and p must be at least 1");
        }
        if self.support_sizes.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            bail!("support sizes, seeds and methods must be nonempty");
        }
        if let Some(&k) = self.support_sizes.iter().find(|&&k| k == 0 || k > self.p) {
            bail!("support size {k} out of range 1..={}", self.p);
        }
        if self.grid_points < 2 {
            bail!("the lambda grid needs at least 2 points");
        }
        if !(self.decades > 0.0) {
            bail!("decades must be positive");
        }
        if self.sigma < 0.0 {
            bail!("sigma must be nonnegative");
        }
        if self.methods.contains(&Method::Enet) && self.enet_lambda2.is_empty() {
            bail!("the elastic net needs a nonempty lambda2 grid");
        }
        self.design.covariance(self.p).validate()?;
        Ok(())
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone)]
pub struct CellRow {
    pub method: Method,
    pub design: &'static str,
    pub k: usize,
    pub seed: u64,
    pub best_error: f64,
    pub best_lambda: f64,
}

/// A cell that failed; recorded and skipped.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub method: Method,
    pub design: &'static str,
    pub k: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    pub rows: Vec<CellRow>,
    pub failures: Vec<CellFailure>,
}

fn log_grid(top: f64, points: usize, decades: f64) -> Vec<f64> {
    (0..points)
        .map(|i| top * 10f64.powf(-decades * i as f64 / (points as f64 - 1.0)))
        .collect()
}

fn best_error_trace(
    problem: &Problem,
    truth: &Vector,
    cfg: &ExperimentConfig,
) -> Result<(f64, f64), String> {
    let mut solver_cfg = SolverConfig::new(1.0).with_annealing(cfg.anneal_len, cfg.max_outer);
    solver_cfg.w_tol = cfg.w_tol;
    let path = reg_path(problem, cfg.grid_points, cfg.decades, &solver_cfg)
        .map_err(|e| e.to_string())?;
    let mut best = (f64::INFINITY, f64::NAN);
    for (lam, sol) in path.lambdas.iter().zip(&path.solutions) {
        let err = estimation_error(&sol.w, truth).map_err(|e| e.to_string())?;
        if err < best.0 {
            best = (err, *lam);
        }
    }
    Ok(best)
}

fn best_error_lasso(
    problem: &Problem,
    truth: &Vector,
    cfg: &ExperimentConfig,
) -> Result<(f64, f64), String> {
    let top = (problem.design().transpose() * problem.response()).amax();
    if !(top > 0.0) {
        return Err("X^T y = 0; lasso grid is degenerate".into());
    }
    let mut best = (f64::INFINITY, f64::NAN);
    let mut warm: Option<Vector> = None;
    for lam in log_grid(top, cfg.grid_points, cfg.decades) {
        let opts = ProxOptions {
            gap_tol: 1e-6,
            max_iter: 100_000,
            init: warm.take(),
            record_trace: false,
            ..Default::default()
        };
        let sol = lasso_solve_with(problem, lam, &opts).map_err(|e| e.to_string())?;
        let err = estimation_error(&sol.w, truth).map_err(|e| e.to_string())?;
        if err < best.0 {
            best = (err, lam);
        }
        warm = Some(sol.w);
    }
    Ok(best)
}

fn best_error_ridge(
    problem: &Problem,
    truth: &Vector,
    cfg: &ExperimentConfig,
) -> Result<(f64, f64), String> {
    let top = lambda_max(problem.design(), problem.response()).map_err(|e| e.to_string())?;
    if !(top > 0.0) {
        return Err("lambda_max = 0; ridge grid is degenerate".into());
    }
    let mut best = (f64::INFINITY, f64::NAN);
    for lam in log_grid(top, cfg.grid_points, cfg.decades) {
        let sol = ridge_solve(problem, lam).map_err(|e| e.to_string())?;
        let err = estimation_error(&sol.w, truth).map_err(|e| e.to_string())?;
        if err < best.0 {
            best = (err, lam);
        }
    }
    Ok(best)
}

fn best_error_enet(
    problem: &Problem,
    truth: &Vector,
    cfg: &ExperimentConfig,
) -> Result<(f64, f64), String> {
    let top = (problem.design().transpose() * problem.response()).amax();
    if !(top > 0.0) {
        return Err("X^T y = 0; elastic net grid is degenerate".into());
    }
    let mut best = (f64::INFINITY, f64::NAN);
    for &l2 in &cfg.enet_lambda2 {
        let mut warm: Option<Vector> = None;
        for l1 in log_grid(top, cfg.grid_points, cfg.decades) {
            let opts = ProxOptions {
                gap_tol: 1e-6,
                max_iter: 100_000,
                init: warm.take(),
                record_trace: false,
                ..Default::default()
            };
            let sol =
                elastic_net_solve_with(problem, l1, l2, &opts).map_err(|e| e.to_string())?;
            let err = estimation_error(&sol.w, truth).map_err(|e| e.to_string())?;
            if err < best.0 {
                best = (err, l1);
            }
            warm = Some(sol.w);
        }
    }
    Ok(best)
}

fn run_cell(
    cfg: &ExperimentConfig,
    method: Method,
    k: usize,
    seed: u64,
) -> Result<CellRow, String> {
    let spec = cfg.design.covariance(cfg.p);
    let x = sample_design(cfg.n, &spec, seed).map_err(|e| e.to_string())?;
    let truth = sample_ground_truth(cfg.p, k, seed).map_err(|e| e.to_string())?;
    let y = sample_response(&x, &truth.w_star, cfg.sigma, seed).map_err(|e| e.to_string())?;

    if let Some(dir) = &cfg.dump_dir {
        let stem = format!("{}-k{k}-seed{seed}", cfg.design.name());
        dump_dataset(dir, &stem, cfg, k, seed, &x, &y).map_err(|e| e.to_string())?;
    }

    let problem = Problem::new(x, y).map_err(|e| e.to_string())?;
    let (best_error, best_lambda) = match method {
        Method::Trace => best_error_trace(&problem, &truth.w_star, cfg)?,
        Method::Lasso => best_error_lasso(&problem, &truth.w_star, cfg)?,
        Method::Ridge => best_error_ridge(&problem, &truth.w_star, cfg)?,
        Method::Enet => best_error_enet(&problem, &truth.w_star, cfg)?,
    };
    Ok(CellRow {
        method,
        design: cfg.design.name(),
        k,
        seed,
        best_error,
        best_lambda,
    })
}

fn dump_dataset(
    dir: &std::path::Path,
    stem: &str,
    cfg: &ExperimentConfig,
    k: usize,
    seed: u64,
    x: &io::Matrix,
    y: &Vector,
) -> Result<()> {
    io::write_matrix_csv(&dir.join(format!("{stem}-X.csv")), x)?;
    io::write_vector_csv(&dir.join(format!("{stem}-y.csv")), y)?;
    io::write_meta_csv(
        &dir.join(format!("{stem}-meta.csv")),
        &[
            ("design", cfg.design.name().to_string()),
            ("n", cfg.n.to_string()),
            ("p", cfg.p.to_string()),
            ("k", k.to_string()),
            ("seed", seed.to_string()),
            ("sigma", io::fmt_f64(cfg.sigma)),
        ],
    )
}

/// Runs every (method, k, seed) cell, in parallel over cells. Cell failures
/// are collected, not fatal; rows come back sorted for deterministic output.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &method in &cfg.methods {
        for &k in &cfg.support_sizes {
            for &seed in &cfg.seeds {
                cells.push((method, k, seed));
            }
        }
    }

    let results: Vec<Result<CellRow, CellFailure>> = cells
        .par_iter()
        .map(|&(method, k, seed)| {
            run_cell(cfg, method, k, seed).map_err(|message| CellFailure {
                method,
                design: cfg.design.name(),
                k,
                seed,
                message,
            })
        })
        .collect();

    let mut outcome = ExperimentOutcome::default();
    for r in results {
        match r {
            Ok(row) => outcome.rows.push(row),
            Err(f) => outcome.failures.push(f),
        }
    }
    outcome
        .rows
        .sort_by_key(|r| (r.method, r.k, r.seed));
    outcome
        .failures
        .sort_by_key(|f| (f.method, f.k, f.seed));
    Ok(outcome)
}

/// Results CSV: `method,design,k,seed,best_error,best_lambda`.
pub fn write_results_csv(path: &std::path::Path, rows: &[CellRow]) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("method,design,k,seed,best_error,best_lambda\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.method,
            row.design,
            row.k,
            row.seed,
            io::fmt_f64(row.best_error),
            io::fmt_f64(row.best_lambda)
        );
    }
    io::write_atomic(path, &out)
}
