use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wg_shishkin::analytic::{ExactSolution, Example};
use wg_shishkin::assembly::{assemble_with_cache, build_dof_map, LocalOperatorCache};
use wg_shishkin::driver::{
    convergence_table_with, format_error, write_csv, CaseOutput, CondenseMode, RunConfig,
};
use wg_shishkin::mesh::{build_mesh, MeshKind};
use wg_shishkin::quadrature::gauss_legendre;
use wg_shishkin::solver::SolverMethod;
use wg_shishkin::Result;

#[derive(Parser)]
#[command(
    name = "wg-shishkin",
    version,
    about = "Weak Galerkin solver for ε²Δ²u − Δu = f on Shishkin meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence sweep.
    Run(RunArgs),
    /// Example 1, Shishkin mesh, k=3.
    Table1(PresetArgs),
    /// Example 1, uniform mesh, k=3.
    Table2(PresetArgs),
    /// Example 1, Shishkin mesh, k=4.
    Table3(PresetArgs),
    /// Example 2, Shishkin mesh, k=3.
    Table4(PresetArgs),
    /// Example 2, uniform mesh, k=3.
    Table5(PresetArgs),
    /// Example 2, Shishkin mesh, k=4.
    Table6(PresetArgs),
}

#[derive(Args)]
struct RunArgs {
    /// 0: polynomial, 1: g(x)g(y), 2: g(x)p(y).
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=2))]
    example: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(3..=4))]
    k: u32,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    /// Comma-separated list of multiples of 4.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Transition factor; defaults to k+1.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value = "shishkin")]
    mesh: MeshKind,
    #[command(flatten)]
    common: PresetArgs,
}

#[derive(Args)]
struct PresetArgs {
    /// Gauss points per direction; defaults to k+3.
    #[arg(long)]
    quad: Option<usize>,
    #[arg(long, default_value = "direct")]
    solver: SolverMethod,
    #[arg(long, default_value = "auto")]
    condense: CondenseMode,
    /// Backward error tolerance of the linear solve.
    #[arg(long, default_value_t = wg_shishkin::solver::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Refinement steps with a compensated residual; 0 solves once.
    #[arg(long, default_value_t = wg_shishkin::driver::DEFAULT_REFINEMENT_STEPS)]
    refine: usize,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the global matrix of the first case in Matrix Market format.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    let (mut config, common) = match command {
        Command::Run(args) => {
            let mut config = RunConfig::new(
                Example::from_id(args.example)?,
                args.mesh,
                args.k as usize,
                args.eps,
                args.n,
            );
            config.alpha = args.alpha;
            (config, args.common)
        }
        Command::Table1(a) => (RunConfig::table(1)?, a),
        Command::Table2(a) => (RunConfig::table(2)?, a),
        Command::Table3(a) => (RunConfig::table(3)?, a),
        Command::Table4(a) => (RunConfig::table(4)?, a),
        Command::Table5(a) => (RunConfig::table(5)?, a),
        Command::Table6(a) => (RunConfig::table(6)?, a),
    };
    config.quad = common.quad;
    config.solver = common.solver;
    config.condense = common.condense;
    config.tol = common.tol;
    config.refine = common.refine;
    config.validate()?;

    if let Some(path) = &common.dump_matrix {
        dump_matrix(&config, path)?;
    }

    let records = convergence_table_with(&config, report_progress)?;
    match &common.out {
        Some(path) => write_csv(&records, BufWriter::new(File::create(path)?))?,
        None => write_csv(&records, io::stdout().lock())?,
    }
    Ok(())
}

fn report_progress(out: &CaseOutput) {
    let r = &out.record;
    eprintln!(
        "example {} {} k={} eps={:e} N={}: error {} ({} unknowns{}, {} {:.2}s, residual {:.1e}, backward error {:.1e})",
        r.example.id(),
        r.mesh_kind.name(),
        r.k,
        r.eps,
        r.n,
        format_error(r.error),
        out.unknowns,
        if out.condensed { ", condensed" } else { "" },
        out.solve.method,
        out.solve.wall_time,
        out.solve.relative_residual,
        out.solve.backward_error,
    );
}

fn dump_matrix(config: &RunConfig, path: &PathBuf) -> Result<()> {
    let case = config.case(config.eps[0], config.n[0]);
    let mesh = build_mesh(case.mesh_params())?;
    let dofs = build_dof_map(&mesh, case.k);
    let ops = LocalOperatorCache::new(&mesh, case.k, case.eps, gauss_legendre(case.quad_points())?);
    let exact = ExactSolution::new(case.example, case.eps)?;
    let system = assemble_with_cache(
        &mesh,
        &dofs,
        &ops,
        |x, y| exact.forcing(x, y),
        case.condense.enabled(case.n),
    )?;
    let mut w = BufWriter::new(File::create(path)?);
    system.matrix.write_matrix_market(&mut w)?;
    w.flush()?;
    eprintln!("wrote {} ({} rows)", path.display(), system.dim());
    Ok(())
}
