//! `tracelasso`: trace-norm regularized regression from the command line.
//!
//! Subcommands: `solve`, `path`, `experiment`, `ball`, `perturb-check`,
//! `norm`. All inputs and outputs are CSV; see the README for the formats.

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use tracelasso::norms::{omega, trace_lasso, unit_ball_slice, PenaltyMatrix};
use tracelasso::solver::{irls_solve, objective, reg_path, Problem, SolverConfig};

use tracelasso_cli::experiment::{
    run_experiment, write_results_csv, DesignKind, ExperimentConfig, Method,
};
use tracelasso_cli::io;
use tracelasso_cli::perturb::{default_t_grid, run_perturb_check};
use tracelasso_cli::presets::gram_preset;

#[derive(Parser)]
#[command(
    name = "tracelasso",
    about = "Trace-norm regularized regression: solver, paths, synthetic experiments and diagnostics",
    version
)]
struct Cli {
    /// Directory for outputs when --out is not given.
    #[arg(long, global = true, env = "TRACELASSO_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Worker threads for experiment cells (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverArgs {
    /// Sweep cap of the reweighted solver.
    #[arg(long, default_value_t = 500)]
    max_outer: usize,
    /// Length of the smoothing-annealing schedule (defaults to max-outer).
    #[arg(long)]
    anneal_len: Option<usize>,
    /// Relative-change stopping tolerance on the coefficients.
    #[arg(long, default_value_t = 1e-8)]
    w_tol: f64,
    /// Relative residual tolerance of the inner conjugate-gradient solves.
    #[arg(long, default_value_t = 1e-10)]
    cg_tol: f64,
}

impl SolverArgs {
    fn config(&self, lambda: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(lambda)
            .with_annealing(self.anneal_len.unwrap_or(self.max_outer), self.max_outer);
        cfg.w_tol = self.w_tol;
        cfg.cg_tol = self.cg_tol;
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one trace-Lasso problem and write the coefficients.
    Solve {
        /// Design matrix CSV (one observation per row, no header).
        #[arg(long)]
        x: PathBuf,
        /// Response CSV (one value per line).
        #[arg(long)]
        y: PathBuf,
        /// Regularization weight.
        #[arg(long)]
        lambda: f64,
        /// Output CSV (`index,coefficient`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve along a descending lambda grid with warm starts.
    Path {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Number of grid points.
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        /// Orders of magnitude covered below the top of the grid.
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
        /// Summary CSV (`lambda,objective,iterations,converged`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Long-form coefficients CSV (`lambda,index,coefficient`).
        #[arg(long)]
        out_coefficients: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Synthetic sweep: best estimation error per (method, k, seed) cell.
    Experiment {
        /// Covariance family of the design.
        #[arg(long, value_parser = ["identity", "block", "toeplitz"])]
        design: String,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 1024)]
        p: usize,
        /// Support sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64])]
        k: Vec<usize>,
        /// Seeds, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = (0u64..10).collect::<Vec<_>>())]
        seeds: Vec<u64>,
        /// Noise level of the responses.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Methods to compare, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![
            "trace".to_string(), "lasso".to_string(), "ridge".to_string(), "enet".to_string(),
        ])]
        methods: Vec<String>,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
        /// Quadratic-weight grid for the elastic net, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.1, 1.0, 10.0])]
        enet_lambda2: Vec<f64>,
        /// Block size of the block design.
        #[arg(long, default_value_t = 8)]
        block_size: usize,
        /// Within-block correlation of the block design.
        #[arg(long, default_value_t = 0.8)]
        within: f64,
        /// Correlation decay of the toeplitz design.
        #[arg(long, default_value_t = 0.95)]
        rho: f64,
        /// Annealing length of the trace solver.
        #[arg(long, default_value_t = 60)]
        anneal_len: usize,
        /// Sweep cap of the trace solver.
        #[arg(long, default_value_t = 120)]
        max_outer: usize,
        /// Stopping tolerance of the trace solver.
        #[arg(long, default_value_t = 1e-6)]
        w_tol: f64,
        /// Results CSV (`method,design,k,seed,best_error,best_lambda`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump every generated dataset (X, y, metadata) to this directory.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Boundary points of a 3-dimensional penalty unit ball.
    Ball {
        /// Built-in Gram matrix (1: strong pair, 2: chain, 3: perfect pair).
        #[arg(long, conflicts_with = "gram")]
        preset: Option<usize>,
        /// Gram matrix CSV (3x3, symmetric PSD, unit diagonal).
        #[arg(long)]
        gram: Option<PathBuf>,
        /// Latitude divisions of the sphere grid.
        #[arg(long, default_value_t = 24)]
        resolution: usize,
        /// Output CSV (`w1,w2,w3`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of the second-order trace-norm expansion on a sampled
    /// instance.
    PerturbCheck {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        p: usize,
        /// Rank of the sampled matrix (defaults to full).
        #[arg(long)]
        rank: Option<usize>,
        /// Perturbation scales, comma separated.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use a diagonal instance (the expansion is exact there).
        #[arg(long, default_value_t = false)]
        diagonal: bool,
        /// Output CSV (`t,residual,residual_over_t2`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the penalty for a given matrix and coefficient vector.
    Norm {
        /// Penalty matrix CSV; unit columns unless --normalize-columns or
        /// --gram is given.
        #[arg(long)]
        matrix: PathBuf,
        /// Interpret the matrix as a Gram matrix.
        #[arg(long, default_value_t = false)]
        gram: bool,
        /// Rescale columns to unit norm first (design-matrix convention).
        #[arg(long, default_value_t = false, conflicts_with = "gram")]
        normalize_columns: bool,
        /// Coefficient vector CSV (one value per line).
        #[arg(long)]
        w: PathBuf,
    },
}

fn out_path(out: Option<PathBuf>, out_dir: &Path, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| out_dir.join(default_name))
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve {
            x,
            y,
            lambda,
            out,
            solver,
        } => {
            let design = io::read_matrix_csv(&x)?;
            let response = io::read_vector_csv(&y)?;
            let problem = Problem::new(design, response)?;
            let sol = irls_solve(&problem, &solver.config(lambda))?;
            let obj = objective(&problem, &sol.w, lambda)?;
            let out = out_path(out, &cli.out_dir, "coefficients.csv");
            io::write_coefficients_csv(&out, &sol.w)?;
            println!("objective {}", io::fmt_f64(obj));
            println!("iterations {}", sol.iterations);
            println!("converged {}", sol.converged);
            Ok(0)
        }
        Command::Path {
            x,
            y,
            grid_points,
            decades,
            out,
            out_coefficients,
            solver,
        } => {
            let design = io::read_matrix_csv(&x)?;
            let response = io::read_vector_csv(&y)?;
            let problem = Problem::new(design, response)?;
            let path = reg_path(&problem, grid_points, decades, &solver.config(1.0))?;
            let rows: Vec<(f64, usize, bool)> = path
                .lambdas
                .iter()
                .zip(&path.solutions)
                .map(|(lam, sol)| {
                    objective(&problem, &sol.w, *lam)
                        .map(|obj| (obj, sol.iterations, sol.converged))
                })
                .collect::<tracelasso::Result<_>>()?;
            let summary = out_path(out, &cli.out_dir, "path.csv");
            io::write_path_csv(&summary, &path.lambdas, &rows)?;
            let coefs = out_path(out_coefficients, &cli.out_dir, "path_coefficients.csv");
            let solutions: Vec<_> = path.solutions.iter().map(|s| s.w.clone()).collect();
            io::write_path_coefficients_csv(&coefs, &path.lambdas, &solutions)?;
            println!("lambda_max {}", io::fmt_f64(path.lambda_max));
            println!("points {}", path.lambdas.len());
            Ok(0)
        }
        Command::Experiment {
            design,
            n,
            p,
            k,
            seeds,
            sigma,
            methods,
            grid_points,
            decades,
            enet_lambda2,
            block_size,
            within,
            rho,
            anneal_len,
            max_outer,
            w_tol,
            out,
            dump_dir,
        } => {
            let design = match design.as_str() {
                "identity" => DesignKind::Identity,
                "block" => DesignKind::Block { block_size, within },
                "toeplitz" => DesignKind::Toeplitz { rho },
                other => bail!("unknown design '{other}'"),
            };
            let methods: Vec<Method> = methods
                .iter()
                .map(|m| m.parse::<Method>().map_err(|e| anyhow!(e)))
                .collect::<Result<_>>()?;
            let mut cfg = ExperimentConfig::new(design, n, p);
            cfg.support_sizes = k;
            cfg.seeds = seeds;
            cfg.sigma = sigma;
            cfg.methods = methods;
            cfg.grid_points = grid_points;
            cfg.decades = decades;
            cfg.enet_lambda2 = enet_lambda2;
            cfg.anneal_len = anneal_len;
            cfg.max_outer = max_outer;
            cfg.w_tol = w_tol;
            cfg.dump_dir = dump_dir;

            let outcome = run_experiment(&cfg)?;
            let out = out_path(out, &cli.out_dir, "experiment.csv");
            write_results_csv(&out, &outcome.rows)?;
            println!("cells {}", outcome.rows.len() + outcome.failures.len());
            println!("completed {}", outcome.rows.len());
            println!("failed {}", outcome.failures.len());
            for f in &outcome.failures {
                eprintln!(
                    "cell failed: method={} design={} k={} seed={}: {}",
                    f.method, f.design, f.k, f.seed, f.message
                );
            }
            Ok(if outcome.failures.is_empty() { 0 } else { 1 })
        }
        Command::Ball {
            preset,
            gram,
            resolution,
            out,
        } => {
            let g = match (preset, gram) {
                (Some(i), None) => {
                    gram_preset(i).ok_or_else(|| anyhow!("preset must be 1, 2 or 3"))?
                }
                (None, Some(path)) => io::read_matrix_csv(&path)?,
                (None, None) => bail!("give either --preset or --gram"),
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            let penalty = PenaltyMatrix::gram(g)?;
            let points = unit_ball_slice(&penalty, resolution)?;
            let out = out_path(out, &cli.out_dir, "ball.csv");
            io::write_ball_csv(&out, &points)?;
            println!("points {}", points.len());
            Ok(0)
        }
        Command::PerturbCheck {
            n,
            p,
            rank,
            t_grid,
            seed,
            diagonal,
            out,
        } => {
            let grid = t_grid.unwrap_or_else(default_t_grid);
            let rows = run_perturb_check(n, p, rank, &grid, seed, diagonal)?;
            let out = out_path(out, &cli.out_dir, "perturb.csv");
            io::write_residual_report_csv(&out, &rows)?;
            println!("rows {}", rows.len());
            Ok(0)
        }
        Command::Norm {
            matrix,
            gram,
            normalize_columns,
            w,
        } => {
            let m = io::read_matrix_csv(&matrix)?;
            let w = io::read_vector_csv(&w)?;
            let value = if gram {
                omega(&PenaltyMatrix::gram(m)?, &w)?
            } else if normalize_columns {
                trace_lasso(&m, &w, true)?
            } else {
                omega(&PenaltyMatrix::explicit(m)?, &w)?
            };
            println!("omega {}", io::fmt_f64(value));
            Ok(0)
        }
    }
}
