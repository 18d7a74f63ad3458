//! Symmetric positive definite solves: sparse Cholesky or Jacobi PCG.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use crate::error::{invalid, Result, WgError};
use crate::sparse::{dot, norm, CsrMatrix};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Direct,
    Pcg,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::Direct => "direct",
            SolverMethod::Pcg => "pcg",
        }
    }
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverMethod {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(SolverMethod::Direct),
            "pcg" => Ok(SolverMethod::Pcg),
            other => Err(invalid(format!("unknown solver method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: SolverMethod,
    /// Zero for the direct method.
    pub iterations: usize,
    /// Correction solves applied after the first one.
    pub refinement_steps: usize,
    /// `‖b − Ax‖ / ‖b‖`, recomputed from the returned solution.
    pub relative_residual: f64,
    /// `‖b − Ax‖ / (‖|A||x|‖ + ‖b‖)`, the quantity checked against the
    /// tolerance.
    pub backward_error: f64,
    pub wall_time: f64,
}

/// `‖b − Ax‖ / ‖b‖`, or `‖Ax‖` when `b = 0`.
pub fn relative_residual(matrix: &CsrMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let ax = matrix.mul_vec(x);
    let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bn = norm(rhs);
    if bn > 0.0 {
        norm(&r) / bn
    } else {
        norm(&r)
    }
}

/// Normwise backward error `‖b − Ax‖ / (‖|A||x|‖ + ‖b‖)`.
///
/// Rounding in `Ax` alone puts a floor of about `u‖|A||x|‖` under `‖b − Ax‖`,
/// far above `u‖b‖` when the penalty entries are large, so this is the
/// residual measure a backward-stable solve can always bring near `u`.
pub fn backward_error(matrix: &CsrMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let ax = matrix.mul_vec(x);
    let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut scale = vec![0.0; matrix.nrows];
    for (row, out) in scale.iter_mut().enumerate() {
        let (cols, vals) = matrix.row(row);
        *out = cols.iter().zip(vals).map(|(&c, v)| (v * x[c]).abs()).sum();
    }
    let denom = norm(&scale) + norm(rhs);
    if denom > 0.0 {
        norm(&r) / denom
    } else {
        0.0
    }
}

/// Solves `Ax = b`; succeeds when the backward error is at most `tol`.
pub fn solve_spd(
    matrix: &CsrMatrix,
    rhs: &[f64],
    method: SolverMethod,
    tol: f64,
) -> Result<(Vec<f64>, SolveReport)> {
    SpdSolver::new(matrix, method, tol)?.solve(rhs)
}

/// An SPD matrix prepared for repeated solves: factored once for the direct
/// method, preconditioned CG otherwise.
pub struct SpdSolver<'a> {
    matrix: &'a CsrMatrix,
    method: SolverMethod,
    tol: f64,
    llt: Option<Llt<usize, f64>>,
    setup_time: f64,
}

impl<'a> SpdSolver<'a> {
    pub fn new(matrix: &'a CsrMatrix, method: SolverMethod, tol: f64) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(invalid("matrix must be square"));
        }
        if !(tol > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        let start = Instant::now();
        let llt = match method {
            SolverMethod::Direct if matrix.nrows > 0 => Some(cholesky(matrix)?),
            _ => None,
        };
        Ok(Self {
            matrix,
            method,
            tol,
            llt,
            setup_time: start.elapsed().as_secs_f64(),
        })
    }

    pub fn method(&self) -> SolverMethod {
        self.method
    }

    /// Seconds spent factoring.
    pub fn setup_time(&self) -> f64 {
        self.setup_time
    }

    /// One solve; the report's wall time includes the factorization.
    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let (matrix, method, tol) = (self.matrix, self.method, self.tol);
        if rhs.len() != matrix.nrows {
            return Err(WgError::DimensionMismatch {
                expected: matrix.nrows,
                got: rhs.len(),
            });
        }
        let start = Instant::now();
        let (x, iterations) = match &self.llt {
            Some(llt) => {
                let n = matrix.nrows;
                let x = llt.solve(Mat::from_fn(n, 1, |i, _| rhs[i]));
                ((0..n).map(|i| x[(i, 0)]).collect(), 0)
            }
            None if method == SolverMethod::Direct => (Vec::new(), 0),
            None => pcg(matrix, rhs, tol, 20 * matrix.nrows.max(1))?,
        };
        let report = SolveReport {
            method,
            iterations,
            refinement_steps: 0,
            relative_residual: relative_residual(matrix, &x, rhs),
            backward_error: backward_error(matrix, &x, rhs),
            wall_time: self.setup_time + start.elapsed().as_secs_f64(),
        };
        if !report.relative_residual.is_finite() || !report.backward_error.is_finite() {
            return Err(WgError::Solver(format!(
                "{method} solve produced a non-finite residual"
            )));
        }
        if report.backward_error > tol {
            return Err(WgError::Solver(format!(
                "{method} solve left backward error {:e} above tolerance {tol:e}",
                report.backward_error
            )));
        }
        Ok((x, report))
    }
}

/// Sparse `LLᵀ` with a fill-reducing ordering. Only the lower triangle is
/// read; row `r` of a symmetric CSR matrix is its column `r`.
fn cholesky(matrix: &CsrMatrix) -> Result<Llt<usize, f64>> {
    let n = matrix.nrows;
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    col_ptr.push(0usize);
    for c in 0..n {
        let (rows, vals) = matrix.row(c);
        for (&r, &v) in rows.iter().zip(vals) {
            if r >= c {
                row_idx.push(r);
                values.push(v);
            }
        }
        col_ptr.push(row_idx.len());
    }
    let symbolic = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
    SparseColMatRef::new(symbolic, &values)
        .sp_cholesky(Side::Lower)
        .map_err(|e| WgError::NotPositiveDefinite(format!("sparse Cholesky failed: {e}")))
}

/// Conjugate gradients with a diagonal preconditioner. Stops when the
/// recursive residual satisfies `‖r‖/‖b‖ ≤ tol` and the true backward error
/// is at most `tol`; otherwise restarts the residual from `b − Ax`.
fn pcg(matrix: &CsrMatrix, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = matrix.nrows;
    let diag = matrix.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(WgError::NotPositiveDefinite(format!(
            "diagonal entry {i} is {}",
            diag[i]
        )));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let b_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter {
        matrix.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(WgError::NotPositiveDefinite(format!(
                "non-positive curvature {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / b_norm;
        if res <= tol {
            if backward_error(matrix, &x, rhs) <= tol {
                return Ok((x, it));
            }
            let ax = matrix.mul_vec(&x);
            for i in 0..n {
                r[i] = rhs[i] - ax[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(WgError::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}
