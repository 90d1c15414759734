use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inflap::check::run_checks;
use inflap::{
    adaptive_solve, build_initial_mesh, convergence_study_with, problem, write_csv, write_vtu,
    AdaptiveConfig, Error, EstimatorOptions, SolverConfig, StudyConfig, VtuField,
};

#[derive(Debug, Parser)]
#[command(name = "inflap", version, about = "Finite element solver for the infinity Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Uniform refinement study with error and estimator rates.
    Solve(SolveArgs),
    /// Adaptive refinement driven by the residual estimator.
    Adapt(AdaptArgs),
    /// Run the invariant suite on small meshes.
    Check {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Benchmark problem (classical, aronsson).
    #[arg(long)]
    problem: String,
    /// Relaxation parameter; defaults to the problem's own choice.
    #[arg(long)]
    tau: Option<f64>,
    /// Stop the linearisation once the L2 increment is below F·h².
    #[arg(long, default_value_t = 10.0)]
    tol_factor: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Use tr H[U]/τ in the interior residual.
    #[arg(long)]
    estimator_hessian_trace: bool,
    #[arg(long, env = "INFLAP_OUT", default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn solver(&self) -> SolverConfig {
        SolverConfig {
            increment_tol_factor: self.tol_factor,
            max_iterations: self.max_iters,
            ..SolverConfig::default()
        }
    }

    fn estimator(&self) -> EstimatorOptions {
        EstimatorOptions {
            use_hessian_trace: self.estimator_hessian_trace,
            ..EstimatorOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 5)]
    levels: usize,
}

#[derive(Debug, Args)]
struct AdaptArgs {
    #[command(flatten)]
    common: Common,
    /// Estimator tolerance.
    #[arg(long)]
    tol: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 30)]
    max_cycles: usize,
    #[arg(long, default_value_t = 200_000)]
    dof_budget: usize,
}

fn create_dir(dir: &Path) -> inflap::Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn solve(args: &SolveArgs) -> Result<(), Error> {
    let c = &args.common;
    let bench = problem(&c.problem)?;
    let tau = c.tau.unwrap_or(bench.default_tau);
    create_dir(&c.out)?;
    let config = StudyConfig {
        solver: c.solver(),
        estimator: c.estimator(),
    };
    println!("level      dofs   iters    L2 error  EOC    H1 error  EOC   estimator  EOC");
    let outcome = convergence_study_with(&c.problem, args.levels, tau, &config, |r| {
        let row = r.row;
        println!(
            "{:>5} {:>9} {:>7} {:>11.3e} {:>5} {:>11.3e} {:>5} {:>11.3e} {:>5}",
            row.level,
            row.dofs,
            row.iterations,
            row.l2_error,
            fmt_opt(row.l2_eoc),
            row.h1_error,
            fmt_opt(row.h1_eoc),
            row.estimator,
            fmt_opt(row.estimator_eoc),
        );
        if !r.report.converged {
            eprintln!("warning: level {} stopped at the iteration limit", r.level);
        }
        let hessian = r.report.hessian.to_flat();
        write_vtu(
            r.mesh,
            &[
                VtuField::p1("u", &r.report.solution),
                VtuField::tensor("hessian", &hessian),
                VtuField::indicators("eta", r.indicators),
            ],
            c.out.join(format!("{}_level{}.vtu", c.problem, r.level)),
        )
    });
    let table = match outcome {
        Ok(t) => t,
        Err(failure) => {
            let path = c.out.join(format!("{}_eoc.csv", c.problem));
            write_csv(&failure.table, path)?;
            return Err(failure.source);
        }
    };
    let path = c.out.join(format!("{}_eoc.csv", c.problem));
    write_csv(&table, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn adapt(args: &AdaptArgs) -> Result<(), Error> {
    let c = &args.common;
    let bench = problem(&c.problem)?;
    let config = AdaptiveConfig {
        theta: args.theta,
        estimator_tol: args.tol,
        max_cycles: args.max_cycles,
        solver: c.solver(),
        tau: c.tau.unwrap_or(bench.default_adaptive_tau),
        dof_budget: args.dof_budget,
        estimator: c.estimator(),
    };
    config.validate()?;
    create_dir(&c.out)?;
    let mesh = build_initial_mesh(inflap::study::BASE_SUBDIVISIONS)?;
    let out = adaptive_solve(&bench.data, &mesh, &config)?;
    println!("cycle      dofs   iters   estimator");
    for r in &out.history.cycles {
        println!("{:>5} {:>9} {:>7} {:>11.3e}", r.cycle, r.dofs, r.iterations, r.estimator);
    }
    let csv = c.out.join(format!("{}_adapt.csv", c.problem));
    write_csv(&out.history, &csv)?;
    let vtu = c.out.join(format!("{}_adapt_final.vtu", c.problem));
    write_vtu(
        &out.mesh,
        &[
            VtuField::p1("u", &out.report.solution),
            VtuField::indicators("eta", &out.indicators),
        ],
        &vtu,
    )?;
    println!("wrote {} and {}", csv.display(), vtu.display());
    Ok(())
}

fn check(seed: u64) -> ExitCode {
    let results = run_checks(seed);
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<32} {}", r.name, r.detail);
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Adapt(args) => adapt(args),
        Command::Check { seed } => return check(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if matches!(e, Error::InvalidArgument(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
