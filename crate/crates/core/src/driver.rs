//! Error norm, single runs, convergence sweeps and CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::analytic::{project_exact, ExactSolution, Example};
use crate::assembly::{
    assemble_with_cache, build_dof_map, residual_compensated, DofMap, LocalOperatorCache,
    SparseSystem,
};
use crate::error::{invalid, Result, WgError};
use crate::mesh::{build_mesh, MeshKind, MeshParams, ShishkinMesh};
use crate::quadrature::gauss_legendre;
use crate::solver::{
    backward_error, relative_residual, SolveReport, SolverMethod, SpdSolver, DEFAULT_TOLERANCE,
};

/// Correction solves after the first, each against a residual accumulated in
/// double-double arithmetic. Without them the solution carries a forward error
/// near `κ·u`, which reaches `1e-9` relative for k=4 at ε=1.
pub const DEFAULT_REFINEMENT_STEPS: usize = 2;

/// When to eliminate cell interiors before the global solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondenseMode {
    /// Condense for `N ≥ 64`.
    Auto,
    On,
    Off,
}

impl CondenseMode {
    pub const AUTO_THRESHOLD: usize = 64;

    pub fn enabled(self, n: usize) -> bool {
        match self {
            CondenseMode::Auto => n >= Self::AUTO_THRESHOLD,
            CondenseMode::On => true,
            CondenseMode::Off => false,
        }
    }
}

impl FromStr for CondenseMode {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(CondenseMode::Auto),
            "on" => Ok(CondenseMode::On),
            "off" => Ok(CondenseMode::Off),
            other => Err(invalid(format!("unknown condense mode '{other}'"))),
        }
    }
}

/// One (example, mesh, k, ε, N) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseConfig {
    pub example: Example,
    pub mesh_kind: MeshKind,
    pub k: usize,
    pub eps: f64,
    pub n: usize,
    /// Transition parameter factor; `None` means `k + 1`.
    pub alpha: Option<f64>,
    /// Gauss points per direction; `None` means `k + 3`.
    pub quad: Option<usize>,
    pub solver: SolverMethod,
    pub condense: CondenseMode,
    pub tol: f64,
    pub refine: usize,
}

impl CaseConfig {
    pub fn new(example: Example, mesh_kind: MeshKind, k: usize, eps: f64, n: usize) -> Self {
        Self {
            example,
            mesh_kind,
            k,
            eps,
            n,
            alpha: None,
            quad: None,
            solver: SolverMethod::Direct,
            condense: CondenseMode::Auto,
            tol: DEFAULT_TOLERANCE,
            refine: DEFAULT_REFINEMENT_STEPS,
        }
    }

    pub fn mesh_params(&self) -> MeshParams {
        let p = MeshParams::new(self.n, self.eps, self.k, self.mesh_kind);
        match self.alpha {
            Some(a) => p.with_alpha(a),
            None => p,
        }
    }

    pub fn quad_points(&self) -> usize {
        self.quad.unwrap_or(self.k + 3)
    }

    pub fn label(&self) -> String {
        format!(
            "example {} {} k={} eps={:e} N={}",
            self.example.id(),
            self.mesh_kind.name(),
            self.k,
            self.eps,
            self.n
        )
    }
}

/// A sweep over ε and N with everything else fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: Example,
    pub mesh_kind: MeshKind,
    pub k: usize,
    pub eps: Vec<f64>,
    pub n: Vec<usize>,
    pub alpha: Option<f64>,
    pub quad: Option<usize>,
    pub solver: SolverMethod,
    pub condense: CondenseMode,
    pub tol: f64,
    pub refine: usize,
}

impl RunConfig {
    pub fn new(
        example: Example,
        mesh_kind: MeshKind,
        k: usize,
        eps: Vec<f64>,
        n: Vec<usize>,
    ) -> Self {
        Self {
            example,
            mesh_kind,
            k,
            eps,
            n,
            alpha: None,
            quad: None,
            solver: SolverMethod::Direct,
            condense: CondenseMode::Auto,
            tol: DEFAULT_TOLERANCE,
            refine: DEFAULT_REFINEMENT_STEPS,
        }
    }

    /// Preset sweeps `1..=6`: example 1 Shishkin k=3, example 1 uniform
    /// k=3, example 1 Shishkin k=4, then the same three for example 2.
    pub fn table(id: u32) -> Result<Self> {
        let (example, kind, k) = match id {
            1 => (Example::SymmetricLayers, MeshKind::Shishkin, 3),
            2 => (Example::SymmetricLayers, MeshKind::Uniform, 3),
            3 => (Example::SymmetricLayers, MeshKind::Shishkin, 4),
            4 => (Example::MixedLayers, MeshKind::Shishkin, 3),
            5 => (Example::MixedLayers, MeshKind::Uniform, 3),
            6 => (Example::MixedLayers, MeshKind::Shishkin, 4),
            _ => return Err(invalid(format!("no table preset {id}"))),
        };
        let (eps, n) = if k == 3 {
            (eps_range(7), vec![8, 16, 32, 64, 128])
        } else {
            (eps_range(6), vec![8, 16, 32, 64])
        };
        Ok(Self::new(example, kind, k, eps, n))
    }

    pub fn case(&self, eps: f64, n: usize) -> CaseConfig {
        CaseConfig {
            example: self.example,
            mesh_kind: self.mesh_kind,
            k: self.k,
            eps,
            n,
            alpha: self.alpha,
            quad: self.quad,
            solver: self.solver,
            condense: self.condense,
            tol: self.tol,
            refine: self.refine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.n.is_empty() {
            return Err(invalid("empty eps or N list"));
        }
        if let Some(n) = self.n.iter().find(|&&n| n % 4 != 0 || n < 4) {
            return Err(invalid(format!("N = {n} is not a positive multiple of 4")));
        }
        if self.n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("N list must be strictly increasing"));
        }
        Ok(())
    }
}

/// `1, 1e-1, …, 1e-max_exp`.
pub fn eps_range(max_exp: i32) -> Vec<f64> {
    (0..=max_exp).map(|e| 10f64.powi(-e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub example: Example,
    pub mesh_kind: MeshKind,
    pub k: usize,
    pub eps: f64,
    pub n: usize,
    /// `|||Q_N u − u_N|||`.
    pub error: f64,
    /// `log₂(error(N) / error(2N))` when the sweep contains `2N`.
    pub order: Option<f64>,
}

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct CaseOutput {
    pub record: ConvergenceRecord,
    pub solve: SolveReport,
    /// `|||Q_N u|||`.
    pub projection_norm: f64,
    pub unknowns: usize,
    pub condensed: bool,
}

/// Discrete energy norm of a free-DOF vector (constrained entries are zero).
pub fn triple_bar_norm(
    coeffs: &[f64],
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    ops: &LocalOperatorCache,
) -> Result<f64> {
    let raw = dofs.free_to_raw(coeffs)?;
    Ok(energy_raw(&raw, mesh, dofs, ops).sqrt())
}

fn energy_raw(raw: &[f64], mesh: &ShishkinMesh, dofs: &DofMap, ops: &LocalOperatorCache) -> f64 {
    (0..mesh.cells.len())
        .map(|c| ops.for_cell(c).energy(&dofs.gather(c, raw), ops.eps))
        .sum()
}

/// Discrete energy norm from scratch: builds the DOF map and local
/// operators with the default quadrature.
pub fn triple_bar_norm_on_mesh(
    coeffs: &[f64],
    mesh: &ShishkinMesh,
    k: usize,
    eps: f64,
) -> Result<f64> {
    let dofs = build_dof_map(mesh, k);
    let ops = LocalOperatorCache::new(mesh, k, eps, gauss_legendre(k + 3)?);
    triple_bar_norm(coeffs, mesh, &dofs, &ops)
}

pub fn run_case(case: &CaseConfig) -> Result<CaseOutput> {
    run_case_inner(case).map_err(|e| WgError::Case {
        case: case.label(),
        source: Box::new(e),
    })
}

fn run_case_inner(case: &CaseConfig) -> Result<CaseOutput> {
    let mesh = build_mesh(case.mesh_params())?;
    let dofs = build_dof_map(&mesh, case.k);
    let rule = gauss_legendre(case.quad_points())?;
    let ops = LocalOperatorCache::new(&mesh, case.k, case.eps, rule.clone());
    let exact = ExactSolution::new(case.example, case.eps)?;
    let condense = case.condense.enabled(case.n);

    let system = assemble_with_cache(&mesh, &dofs, &ops, |x, y| exact.forcing(x, y), condense)?;
    let (solution, solve) = solve_system(&system, &dofs, &ops, case.solver, case.tol, case.refine)?;
    let discrete = dofs.free_to_raw(&solution)?;

    let projected = project_exact(&mesh, &dofs, &exact, &rule);
    let diff: Vec<f64> = projected
        .iter()
        .zip(&discrete)
        .map(|(p, d)| p - d)
        .collect();
    let error = energy_raw(&diff, &mesh, &dofs, &ops).sqrt();
    let projection_norm = energy_raw(&projected, &mesh, &dofs, &ops).sqrt();

    Ok(CaseOutput {
        record: ConvergenceRecord {
            example: case.example,
            mesh_kind: case.mesh_kind,
            k: case.k,
            eps: case.eps,
            n: case.n,
            error,
            order: None,
        },
        solve,
        projection_norm,
        unknowns: system.dim(),
        condensed: condense,
    })
}

/// Solves an assembled system and returns the solution over all free DOFs,
/// refined `refine` times against `load − Σ_T A_T x`. The report's residuals
/// are those of the final solution in the assembled system.
pub fn solve_system(
    system: &SparseSystem,
    dofs: &DofMap,
    ops: &LocalOperatorCache,
    method: SolverMethod,
    tol: f64,
    refine: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let solver = SpdSolver::new(&system.matrix, method, tol)?;
    let (first, mut report) = solver.solve(&system.rhs)?;
    let mut x = system.expand(&first)?;
    for _ in 0..refine {
        let r = residual_compensated(dofs, ops, &system.load, &x)?;
        if r.iter().all(|&v| v == 0.0) {
            break;
        }
        let (d, step) = solver.solve(&system.reduce(&r)?)?;
        let d = system.expand_with(&d, &r)?;
        x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
        report.iterations += step.iterations;
        report.refinement_steps += 1;
        report.wall_time += step.wall_time - solver.setup_time();
    }
    let reduced = system.restrict(&x);
    report.relative_residual = relative_residual(&system.matrix, reduced, &system.rhs);
    report.backward_error = backward_error(&system.matrix, reduced, &system.rhs);
    Ok((x, report))
}

/// `log₂(coarse / fine)`.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Fills `order` for every record whose sweep also holds `2N` (same ε).
pub fn assign_orders(records: &mut [ConvergenceRecord]) {
    let errors: Vec<(u64, usize, f64)> = records
        .iter()
        .map(|r| (r.eps.to_bits(), r.n, r.error))
        .collect();
    for r in records.iter_mut() {
        r.order = errors
            .iter()
            .find(|(e, n, _)| *e == r.eps.to_bits() && *n == 2 * r.n)
            .map(|&(_, _, fine)| convergence_order(r.error, fine));
    }
}

/// Runs every (ε, N) case in order (ε outer, N inner) and computes orders.
/// `progress` sees each case as it finishes.
pub fn convergence_table_with<P>(
    config: &RunConfig,
    mut progress: P,
) -> Result<Vec<ConvergenceRecord>>
where
    P: FnMut(&CaseOutput),
{
    config.validate()?;
    let mut records = Vec::with_capacity(config.eps.len() * config.n.len());
    for &eps in &config.eps {
        for &n in &config.n {
            let out = run_case(&config.case(eps, n))?;
            progress(&out);
            records.push(out.record);
        }
    }
    assign_orders(&mut records);
    Ok(records)
}

pub fn convergence_table(config: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    convergence_table_with(config, |_| {})
}

/// Scientific notation with three significant digits and a two-digit
/// exponent, e.g. `1.01e-03`.
pub fn format_error(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value:.2e}");
    }
    let s = format!("{value:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub struct EpsDisplay(pub f64);

impl fmt::Display for EpsDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.0)
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "example",
    "mesh",
    "k",
    "eps",
    "N",
    "error",
    "order",
    "error_full",
];

pub fn write_csv<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.example.id().to_string(),
            r.mesh_kind.name().to_string(),
            r.k.to_string(),
            EpsDisplay(r.eps).to_string(),
            r.n.to_string(),
            format_error(r.error),
            r.order.map(|o| format!("{o:.2}")).unwrap_or_default(),
            format!("{:e}", r.error),
        ])?;
    }
    w.flush()?;
    Ok(())
}
