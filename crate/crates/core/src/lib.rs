//! Weak Galerkin solver for `ε²Δ²u − Δu = f` on the unit square with
//! clamped boundary conditions, on Shishkin or uniform tensor meshes.

pub mod analytic;
pub mod assembly;
pub mod basis;
pub mod driver;
pub mod error;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod weak_ops;

pub use analytic::{ExactSolution, Example};
pub use assembly::{assemble_system, build_dof_map, AssemblyOptions, DofMap, SparseSystem};
pub use driver::{
    convergence_table, run_case, triple_bar_norm, CaseConfig, CondenseMode, ConvergenceRecord,
    RunConfig,
};
pub use error::{Result, WgError};
pub use mesh::{build_mesh, MeshKind, MeshParams, ShishkinMesh};
pub use solver::{solve_spd, SolveReport, SolverMethod, SpdSolver};
