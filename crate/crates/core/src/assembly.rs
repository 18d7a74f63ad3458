//! Global numbering, sparse assembly of the discrete problem, elimination of
//! the clamped boundary DOFs and static condensation of cell interiors.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::{project_on_basis, CellBasis};
use crate::error::{Result, WgError};
use crate::mesh::{Cell, Orientation, ShishkinMesh, Side};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::sparse::{CsrMatrix, TwoSum};
use crate::weak_ops::{symmetrize, LocalLayout, LocalOperators};

/// Global numbering of all DOFs.
///
/// Raw order: interior coefficients (cells in mesh order), then traces,
/// then x-gradients, then y-gradients (edges in mesh order within each
/// block). On boundary edges the trace and the normal gradient component
/// are constrained to zero; the tangential component stays free.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub k: usize,
    pub n_cells: usize,
    pub n_edges: usize,
    /// Per raw DOF: constrained by the boundary conditions.
    pub constrained: Vec<bool>,
    /// Raw index to free index.
    pub free_index: Vec<Option<usize>>,
    /// Free index to raw index.
    pub free_dofs: Vec<usize>,
    cell_edges: Vec<[usize; 4]>,
    edge_cells: Vec<[Option<usize>; 2]>,
}

impl DofMap {
    pub fn n_interior_per_cell(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }

    pub fn n_per_edge(&self) -> usize {
        self.k + 1
    }

    pub fn n_raw(&self) -> usize {
        self.n_cells * self.n_interior_per_cell() + 3 * self.n_edges * self.n_per_edge()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_constrained(&self) -> usize {
        self.n_raw() - self.n_free()
    }

    /// Interior DOFs are never constrained and come first in both numberings.
    pub fn n_interior_total(&self) -> usize {
        self.n_cells * self.n_interior_per_cell()
    }

    pub fn n_free_edge(&self) -> usize {
        self.n_free() - self.n_interior_total()
    }

    pub fn interior(&self, cell: usize, i: usize) -> usize {
        cell * self.n_interior_per_cell() + i
    }

    pub fn trace(&self, edge: usize, m: usize) -> usize {
        self.n_interior_total() + edge * self.n_per_edge() + m
    }

    pub fn grad_x(&self, edge: usize, m: usize) -> usize {
        self.trace(edge, m) + self.n_edges * self.n_per_edge()
    }

    pub fn grad_y(&self, edge: usize, m: usize) -> usize {
        self.trace(edge, m) + 2 * self.n_edges * self.n_per_edge()
    }

    pub fn layout(&self) -> LocalLayout {
        LocalLayout::new(self.k)
    }

    /// Raw global index of every local DOF of a cell, in local layout order.
    pub fn local_to_raw(&self, cell: usize) -> Vec<usize> {
        let layout = self.layout();
        let mut map = vec![0; layout.n_local()];
        for (i, slot) in map.iter_mut().enumerate().take(layout.n_interior()) {
            *slot = self.interior(cell, i);
        }
        for side in Side::ALL {
            let e = self.cell_edges[cell][side.index()];
            for m in 0..self.n_per_edge() {
                map[layout.trace(side, m)] = self.trace(e, m);
                map[layout.grad_x(side, m)] = self.grad_x(e, m);
                map[layout.grad_y(side, m)] = self.grad_y(e, m);
            }
        }
        map
    }

    pub fn local_to_free(&self, cell: usize) -> Vec<Option<usize>> {
        self.local_to_raw(cell)
            .into_iter()
            .map(|r| self.free_index[r])
            .collect()
    }

    /// Cells whose local DOFs include the given raw DOF.
    fn cells_of_raw(&self, raw: usize) -> impl Iterator<Item = usize> {
        let ni = self.n_interior_total();
        let cells = if raw < ni {
            [Some(raw / self.n_interior_per_cell()), None]
        } else {
            let block = self.n_edges * self.n_per_edge();
            let edge = ((raw - ni) % block) / self.n_per_edge();
            self.edge_cells[edge]
        };
        cells.into_iter().flatten()
    }

    /// Scatters a free vector into raw numbering with zeros at constrained DOFs.
    pub fn free_to_raw(&self, free: &[f64]) -> Result<Vec<f64>> {
        if free.len() != self.n_free() {
            return Err(WgError::DimensionMismatch {
                expected: self.n_free(),
                got: free.len(),
            });
        }
        let mut raw = vec![0.0; self.n_raw()];
        for (&r, &v) in self.free_dofs.iter().zip(free) {
            raw[r] = v;
        }
        Ok(raw)
    }

    pub fn raw_to_free(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.n_raw() {
            return Err(WgError::DimensionMismatch {
                expected: self.n_raw(),
                got: raw.len(),
            });
        }
        Ok(self.free_dofs.iter().map(|&r| raw[r]).collect())
    }

    /// Local coefficient vector of a cell gathered from a raw global vector.
    pub fn gather(&self, cell: usize, raw: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.layout().n_local(),
            self.local_to_raw(cell).into_iter().map(|r| raw[r]),
        )
    }
}

pub fn build_dof_map(mesh: &ShishkinMesh, k: usize) -> DofMap {
    let n_cells = mesh.cells.len();
    let n_edges = mesh.edges.len();
    let nb = k + 1;
    let n_raw = n_cells * nb * nb + 3 * n_edges * nb;
    let mut dofs = DofMap {
        k,
        n_cells,
        n_edges,
        constrained: vec![false; n_raw],
        free_index: vec![None; n_raw],
        free_dofs: Vec::new(),
        cell_edges: mesh.cells.iter().map(|c| c.edges).collect(),
        edge_cells: mesh.edges.iter().map(|e| e.cells).collect(),
    };
    for edge in mesh.boundary_edges() {
        for m in 0..nb {
            let trace = dofs.trace(edge.id, m);
            let normal = match edge.orientation {
                Orientation::Horizontal => dofs.grad_y(edge.id, m),
                Orientation::Vertical => dofs.grad_x(edge.id, m),
            };
            dofs.constrained[trace] = true;
            dofs.constrained[normal] = true;
        }
    }
    let mut next = 0;
    for r in 0..n_raw {
        if !dofs.constrained[r] {
            dofs.free_index[r] = Some(next);
            dofs.free_dofs.push(r);
            next += 1;
        }
    }
    dofs
}

/// Local operators shared by all cells with the same widths.
///
/// The operators only depend on the cell widths, so a Shishkin mesh needs a
/// handful of distinct blocks. Widths agreeing to `1e-10` relative share a
/// block.
#[derive(Debug)]
pub struct LocalOperatorCache {
    pub k: usize,
    pub eps: f64,
    pub h: f64,
    pub big_h: f64,
    pub rule: QuadratureRule,
    shapes: Vec<([f64; 2], Arc<LocalOperators>)>,
    cell_shape: Vec<usize>,
}

const SHAPE_TOLERANCE: f64 = 1e-10;

impl LocalOperatorCache {
    pub fn new(mesh: &ShishkinMesh, k: usize, eps: f64, rule: QuadratureRule) -> Self {
        let mut cache = Self {
            k,
            eps,
            h: mesh.h_fine,
            big_h: mesh.h_coarse,
            rule,
            shapes: Vec::new(),
            cell_shape: Vec::with_capacity(mesh.cells.len()),
        };
        for cell in &mesh.cells {
            let id = cache.shape_of(cell.widths);
            cache.cell_shape.push(id);
        }
        cache
    }

    fn shape_of(&mut self, widths: [f64; 2]) -> usize {
        let close = |a: f64, b: f64| (a - b).abs() <= SHAPE_TOLERANCE * a.max(b);
        if let Some(i) = self
            .shapes
            .iter()
            .position(|(w, _)| close(w[0], widths[0]) && close(w[1], widths[1]))
        {
            return i;
        }
        let basis = CellBasis::new(self.k, [0.0, widths[0]], [0.0, widths[1]]);
        let ops = LocalOperators::new(&basis, &self.rule, self.eps, self.h, self.big_h);
        self.shapes.push((widths, Arc::new(ops)));
        self.shapes.len() - 1
    }

    pub fn n_shapes(&self) -> usize {
        self.shapes.len()
    }

    pub fn shape_id(&self, cell: usize) -> usize {
        self.cell_shape[cell]
    }

    pub fn for_cell(&self, cell: usize) -> &LocalOperators {
        &self.shapes[self.cell_shape[cell]].1
    }

    fn shape_ops(&self, shape: usize) -> &LocalOperators {
        &self.shapes[shape].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    /// Gauss points per direction for all cell and edge integrals.
    pub quad_points: usize,
    /// Eliminate cell interiors before the global solve.
    pub condense: bool,
}

impl AssemblyOptions {
    pub fn new(k: usize) -> Self {
        Self {
            quad_points: k + 3,
            condense: false,
        }
    }
}

/// Factorized interior block of one cell shape.
#[derive(Debug)]
struct InteriorFactor {
    chol: Cholesky<f64, Dyn>,
    /// `A_II⁻¹ A_IE`.
    coupling: DMatrix<f64>,
}

/// Data to recover one cell's interior DOFs after a condensed solve.
#[derive(Debug, Clone)]
pub struct CellElimination {
    factor: Arc<InteriorFactor>,
    /// Free index of the cell's first interior DOF.
    interior_start: usize,
    /// Condensed index of each free local edge DOF, in the column order of
    /// the coupling matrix.
    edge_slots: Vec<usize>,
}

impl CellElimination {
    fn interior_load(&self, load: &[f64]) -> DVector<f64> {
        let ni = self.factor.coupling.nrows();
        DVector::from_column_slice(&load[self.interior_start..self.interior_start + ni])
    }

    fn back_substitute(&self, edge_solution: &[f64], load: &[f64], out: &mut [f64]) {
        let ue = DVector::from_iterator(
            self.edge_slots.len(),
            self.edge_slots.iter().map(|&s| edge_solution[s]),
        );
        let ui = self.factor.chol.solve(&self.interior_load(load)) - &self.factor.coupling * ue;
        out[self.interior_start..self.interior_start + ui.len()].copy_from_slice(ui.as_slice());
    }
}

#[derive(Debug, Clone)]
pub struct Condensation {
    /// Number of free interior DOFs preceding the edge DOFs.
    pub n_interior: usize,
    cells: Vec<CellElimination>,
}

/// Free-DOF linear system. When condensed, the unknowns are the free edge
/// DOFs only and [`SparseSystem::expand`] recovers the interiors.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Load vector over all free DOFs; equals `rhs` when not condensed.
    pub load: Vec<f64>,
    pub condensation: Option<Condensation>,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_condensed(&self) -> bool {
        self.condensation.is_some()
    }

    /// Solution over all free DOFs from a solution of this system.
    pub fn expand(&self, solution: &[f64]) -> Result<Vec<f64>> {
        self.expand_with(solution, &self.load)
    }

    /// As [`SparseSystem::expand`], for a system whose free-DOF load is
    /// `load` instead of the assembled one.
    pub fn expand_with(&self, solution: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        if solution.len() != self.dim() {
            return Err(WgError::DimensionMismatch {
                expected: self.dim(),
                got: solution.len(),
            });
        }
        let Some(cond) = &self.condensation else {
            return Ok(solution.to_vec());
        };
        self.check_load(load)?;
        let mut full = vec![0.0; cond.n_interior + solution.len()];
        full[cond.n_interior..].copy_from_slice(solution);
        for cell in &cond.cells {
            cell.back_substitute(solution, load, &mut full);
        }
        Ok(full)
    }

    /// Right-hand side of this system for a free-DOF load vector.
    pub fn reduce(&self, load: &[f64]) -> Result<Vec<f64>> {
        self.check_load(load)?;
        let Some(cond) = &self.condensation else {
            return Ok(load.to_vec());
        };
        let mut rhs = load[cond.n_interior..].to_vec();
        for cell in &cond.cells {
            let reduced = cell.factor.coupling.tr_mul(&cell.interior_load(load));
            for (i, &r) in cell.edge_slots.iter().enumerate() {
                rhs[r] -= reduced[i];
            }
        }
        Ok(rhs)
    }

    /// The part of a free-DOF vector that this system solves for.
    pub fn restrict<'v>(&self, full: &'v [f64]) -> &'v [f64] {
        match &self.condensation {
            Some(cond) => &full[cond.n_interior..],
            None => full,
        }
    }

    fn check_load(&self, load: &[f64]) -> Result<()> {
        if load.len() != self.load.len() {
            return Err(WgError::DimensionMismatch {
                expected: self.load.len(),
                got: load.len(),
            });
        }
        Ok(())
    }
}

/// `load − Σ_T A_T x` over the free DOFs, from the local stiffness matrices,
/// with every row accumulated in double-double arithmetic. Used to refine a
/// solution past the accuracy of one factored solve.
pub fn residual_compensated(
    dofs: &DofMap,
    cache: &LocalOperatorCache,
    load: &[f64],
    x: &[f64],
) -> Result<Vec<f64>> {
    for v in [load, x] {
        if v.len() != dofs.n_free() {
            return Err(WgError::DimensionMismatch {
                expected: dofs.n_free(),
                got: v.len(),
            });
        }
    }
    let mut acc: Vec<TwoSum> = load.iter().map(|&b| TwoSum::new(b)).collect();
    for cid in 0..dofs.n_cells {
        let a = &cache.for_cell(cid).stiffness;
        let map = dofs.local_to_free(cid);
        for (i, ri) in map.iter().enumerate() {
            let Some(r) = *ri else { continue };
            for (j, cj) in map.iter().enumerate() {
                if let Some(c) = *cj {
                    acc[r].add_product(-a[(i, j)], x[c]);
                }
            }
        }
    }
    Ok(acc.iter().map(TwoSum::value).collect())
}

/// CSR pattern where each row couples to every DOF of every cell touching
/// it. `cell_cols[c]` lists cell `c`'s system indices (sorted);
/// `row_cells(r)` yields the cells touching row `r`.
fn build_pattern<I>(
    n_rows: usize,
    cell_cols: &[Vec<usize>],
    row_cells: impl Fn(usize) -> I,
) -> CsrMatrix
where
    I: Iterator<Item = usize>,
{
    let mut rows = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let mut cols: Vec<usize> = Vec::new();
        for c in row_cells(r) {
            cols.extend_from_slice(&cell_cols[c]);
        }
        cols.sort_unstable();
        cols.dedup();
        rows.push(cols);
    }
    CsrMatrix::from_pattern(n_rows, &rows)
}

fn load_vector<F>(cell: &Cell, k: usize, rule: &QuadratureRule, forcing: &F) -> DVector<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let basis = CellBasis::for_cell(k, cell);
    DVector::from_vec(project_on_basis(forcing, &basis, rule))
}

/// Assembles `a(u, v) = (f, v₀)` over the free DOFs.
pub fn assemble_system<F>(
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    eps: f64,
    forcing: F,
    options: AssemblyOptions,
) -> Result<SparseSystem>
where
    F: Fn(f64, f64) -> f64,
{
    let rule = gauss_legendre(options.quad_points)?;
    let cache = LocalOperatorCache::new(mesh, dofs.k, eps, rule);
    assemble_with_cache(mesh, dofs, &cache, forcing, options.condense)
}

pub fn assemble_with_cache<F>(
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    cache: &LocalOperatorCache,
    forcing: F,
    condense: bool,
) -> Result<SparseSystem>
where
    F: Fn(f64, f64) -> f64,
{
    if dofs.n_cells != mesh.cells.len() || dofs.n_edges != mesh.edges.len() || dofs.k != cache.k {
        return Err(WgError::InvalidParameter(
            "DOF map does not match the mesh".into(),
        ));
    }
    if condense {
        assemble_condensed(mesh, dofs, cache, &forcing)
    } else {
        assemble_full(mesh, dofs, cache, &forcing)
    }
}

fn assemble_full<F>(
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    cache: &LocalOperatorCache,
    forcing: &F,
) -> Result<SparseSystem>
where
    F: Fn(f64, f64) -> f64,
{
    let local_free: Vec<Vec<Option<usize>>> = (0..mesh.cells.len())
        .map(|c| dofs.local_to_free(c))
        .collect();
    let cell_cols: Vec<Vec<usize>> = local_free
        .iter()
        .map(|l| {
            let mut v: Vec<usize> = l.iter().flatten().copied().collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut matrix = build_pattern(dofs.n_free(), &cell_cols, |r| {
        dofs.cells_of_raw(dofs.free_dofs[r])
    });
    let mut rhs = vec![0.0; dofs.n_free()];
    let ni = dofs.n_interior_per_cell();

    for (cid, cell) in mesh.cells.iter().enumerate() {
        let a = &cache.for_cell(cid).stiffness;
        let map = &local_free[cid];
        for (i, ri) in map.iter().enumerate() {
            let Some(r) = *ri else { continue };
            for (j, cj) in map.iter().enumerate() {
                if let Some(c) = *cj {
                    matrix.add(r, c, a[(i, j)]);
                }
            }
        }
        let b = load_vector(cell, dofs.k, &cache.rule, forcing);
        for i in 0..ni {
            rhs[dofs.interior(cid, i)] += b[i];
        }
    }
    Ok(SparseSystem {
        matrix,
        load: rhs.clone(),
        rhs,
        condensation: None,
    })
}

fn factor_interior(a_ii: DMatrix<f64>, a_ie: &DMatrix<f64>) -> Result<InteriorFactor> {
    let chol = Cholesky::new(a_ii).ok_or_else(|| {
        WgError::NotPositiveDefinite("singular cell interior block during condensation".into())
    })?;
    let coupling = chol.solve(a_ie);
    Ok(InteriorFactor { chol, coupling })
}

/// Per-cell Schur complement block `A_EE − A_EI A_II⁻¹ A_IE`, symmetrized.
fn schur_block(a_ee: &DMatrix<f64>, a_ie: &DMatrix<f64>, factor: &InteriorFactor) -> DMatrix<f64> {
    let mut s = a_ee - a_ie.tr_mul(&factor.coupling);
    symmetrize(&mut s);
    s
}

fn assemble_condensed<F>(
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    cache: &LocalOperatorCache,
    forcing: &F,
) -> Result<SparseSystem>
where
    F: Fn(f64, f64) -> f64,
{
    let layout = dofs.layout();
    let ni = layout.n_interior();
    let n_int = dofs.n_interior_total();

    // free local edge positions and their condensed indices, per cell
    let edge_maps: Vec<(Vec<usize>, Vec<usize>)> = (0..mesh.cells.len())
        .map(|cid| {
            let mut local = Vec::new();
            let mut slots = Vec::new();
            for (l, f) in dofs.local_to_free(cid).into_iter().enumerate().skip(ni) {
                if let Some(f) = f {
                    local.push(l);
                    slots.push(f - n_int);
                }
            }
            (local, slots)
        })
        .collect();
    let cell_cols: Vec<Vec<usize>> = edge_maps
        .iter()
        .map(|(_, s)| {
            let mut v = s.clone();
            v.sort_unstable();
            v
        })
        .collect();
    let n_edge = dofs.n_free_edge();
    let mut matrix = build_pattern(n_edge, &cell_cols, |r| {
        dofs.cells_of_raw(dofs.free_dofs[n_int + r])
    });
    let mut rhs = vec![0.0; n_edge];
    let mut load = vec![0.0; dofs.n_free()];

    // factorizations shared between cells with the same shape and the same
    // set of free local edge DOFs
    let mut factors: Vec<((usize, Vec<usize>), Arc<InteriorFactor>, DMatrix<f64>)> = Vec::new();
    let mut cells = Vec::with_capacity(mesh.cells.len());

    for (cid, cell) in mesh.cells.iter().enumerate() {
        let (local, slots) = &edge_maps[cid];
        let shape = cache.shape_id(cid);
        let key = (shape, local.clone());
        let pos = match factors.iter().position(|(k, _, _)| *k == key) {
            Some(p) => p,
            None => {
                let a = &cache.shape_ops(shape).stiffness;
                let a_ii = a.view((0, 0), (ni, ni)).into_owned();
                let a_ie = DMatrix::from_fn(ni, local.len(), |i, j| a[(i, local[j])]);
                let a_ee =
                    DMatrix::from_fn(local.len(), local.len(), |i, j| a[(local[i], local[j])]);
                let factor = factor_interior(a_ii, &a_ie)?;
                let schur = schur_block(&a_ee, &a_ie, &factor);
                factors.push((key, Arc::new(factor), schur));
                factors.len() - 1
            }
        };
        let (_, factor, schur) = &factors[pos];
        for (i, &r) in slots.iter().enumerate() {
            for (j, &c) in slots.iter().enumerate() {
                matrix.add(r, c, schur[(i, j)]);
            }
        }
        let b = load_vector(cell, dofs.k, &cache.rule, forcing);
        let reduced = factor.coupling.tr_mul(&b);
        for (i, &r) in slots.iter().enumerate() {
            rhs[r] -= reduced[i];
        }
        let start = dofs.interior(cid, 0);
        load[start..start + ni].copy_from_slice(b.as_slice());
        cells.push(CellElimination {
            factor: Arc::clone(factor),
            interior_start: start,
            edge_slots: slots.clone(),
        });
    }
    Ok(SparseSystem {
        matrix,
        rhs,
        load,
        condensation: Some(Condensation {
            n_interior: n_int,
            cells,
        }),
    })
}

/// Static condensation of an assembled full system: eliminates every cell's
/// interior DOFs through per-cell Schur complements.
pub fn condense_interior(system: &SparseSystem, dofs: &DofMap) -> Result<SparseSystem> {
    if system.is_condensed() {
        return Err(WgError::InvalidParameter(
            "system is already condensed".into(),
        ));
    }
    if system.dim() != dofs.n_free() {
        return Err(WgError::DimensionMismatch {
            expected: dofs.n_free(),
            got: system.dim(),
        });
    }
    let ni = dofs.n_interior_per_cell();
    let n_int = dofs.n_interior_total();
    let n_edge = dofs.n_free_edge();
    let full = &system.matrix;

    // edge-edge block of the full matrix
    let rows: Vec<Vec<usize>> = (0..n_edge)
        .map(|r| {
            full.row(n_int + r)
                .0
                .iter()
                .filter(|&&c| c >= n_int)
                .map(|&c| c - n_int)
                .collect()
        })
        .collect();
    let mut matrix = CsrMatrix::from_pattern(n_edge, &rows);
    for r in 0..n_edge {
        let (cols, vals) = full.row(n_int + r);
        for (&c, &v) in cols.iter().zip(vals) {
            if c >= n_int {
                matrix.add(r, c - n_int, v);
            }
        }
    }
    let mut rhs = system.rhs[n_int..].to_vec();

    let mut cells = Vec::with_capacity(dofs.n_cells);
    for cid in 0..dofs.n_cells {
        let start = dofs.interior(cid, 0);
        // columns of the interior rows beyond the interior block are this
        // cell's free edge DOFs
        let (cols, _) = full.row(start);
        let edge_cols: Vec<usize> = cols.iter().filter(|&&c| c >= n_int).copied().collect();
        let a_ii = DMatrix::from_fn(ni, ni, |i, j| full.get(start + i, start + j));
        let a_ie = DMatrix::from_fn(ni, edge_cols.len(), |i, j| {
            full.get(start + i, edge_cols[j])
        });
        let factor = factor_interior(a_ii, &a_ie)?;
        let mut correction = a_ie.tr_mul(&factor.coupling);
        symmetrize(&mut correction);
        let slots: Vec<usize> = edge_cols.iter().map(|c| c - n_int).collect();
        for (i, &r) in slots.iter().enumerate() {
            for (j, &c) in slots.iter().enumerate() {
                matrix.add(r, c, -correction[(i, j)]);
            }
        }
        let b = DVector::from_column_slice(&system.rhs[start..start + ni]);
        let reduced = factor.coupling.tr_mul(&b);
        for (i, &r) in slots.iter().enumerate() {
            rhs[r] -= reduced[i];
        }
        cells.push(CellElimination {
            factor: Arc::new(factor),
            interior_start: start,
            edge_slots: slots,
        });
    }
    Ok(SparseSystem {
        matrix,
        rhs,
        load: system.load.clone(),
        condensation: Some(Condensation {
            n_interior: n_int,
            cells,
        }),
    })
}
