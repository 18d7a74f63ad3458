//! Layer-adapted tensor-product meshes of the unit square.
//!
//! The 1D partition is piecewise equidistant: `N/4` fine cells in `[0, λ]`,
//! `N/2` coarse cells in `[λ, 1-λ]` and `N/4` fine cells in `[1-λ, 1]`.
//! Both axes share the same partition.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    Shishkin,
    Uniform,
}

impl MeshKind {
    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Shishkin => "shishkin",
            MeshKind::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for MeshKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "shishkin" => Ok(MeshKind::Shishkin),
            "uniform" => Ok(MeshKind::Uniform),
            other => Err(format!("unknown mesh kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// Cells per axis, a multiple of 4.
    pub n: usize,
    pub eps: f64,
    /// Polynomial degree of the discrete space.
    pub k: usize,
    /// Transition constant in `λ = min(α ε ln N, 1/4)`.
    pub alpha: f64,
    pub kind: MeshKind,
}

impl MeshParams {
    /// Parameters with the default transition constant `α = k + 1`.
    pub fn new(n: usize, eps: f64, k: usize, kind: MeshKind) -> Self {
        Self {
            n,
            eps,
            k,
            alpha: (k + 1) as f64,
            kind,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 4 != 0 {
            return Err(invalid(format!(
                "N must be at least 4 and divisible by 4, got {}",
                self.n
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.k < 3 {
            return Err(invalid(format!(
                "degree k must be at least 3, got {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Transition point `min(α ε ln N, 1/4)`.
pub fn compute_lambda(n: usize, eps: f64, alpha: f64) -> Result<f64> {
    if n < 4 {
        return Err(invalid(format!("N must be at least 4, got {n}")));
    }
    if !(eps > 0.0) || !(alpha > 0.0) {
        return Err(invalid(format!(
            "eps and alpha must be positive, got eps={eps}, alpha={alpha}"
        )));
    }
    Ok((alpha * eps * (n as f64).ln()).min(0.25))
}

/// Breakpoints of the 1D piecewise-equidistant partition of `[0, 1]`.
///
/// The second half is mirrored from the first so that
/// `points[i] + points[N - i] == 1` up to one rounding.
pub fn build_axis_partition(n: usize, lambda: f64) -> Result<Vec<f64>> {
    if n < 4 || n % 4 != 0 {
        return Err(invalid(format!(
            "N must be at least 4 and divisible by 4, got {n}"
        )));
    }
    if !(lambda > 0.0 && lambda <= 0.25) {
        return Err(invalid(format!(
            "lambda must lie in (0, 1/4], got {lambda}"
        )));
    }
    let quarter = n / 4;
    let half = n / 2;
    let fine = 4.0 * lambda / n as f64;
    let coarse = 2.0 * (1.0 - 2.0 * lambda) / n as f64;

    let mut points = vec![0.0; n + 1];
    for (i, p) in points.iter_mut().enumerate().take(half + 1) {
        *p = if i <= quarter {
            i as f64 * fine
        } else {
            lambda + (i - quarter) as f64 * coarse
        };
    }
    points[quarter] = lambda;
    points[half] = 0.5;
    for i in 0..half {
        points[n - i] = 1.0 - points[i];
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    South,
    East,
    North,
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outward unit normal of the side.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::South => [0.0, -1.0],
            Side::East => [1.0, 0.0],
            Side::North => [0.0, 1.0],
            Side::West => [-1.0, 0.0],
        }
    }

    /// Sign of the outward normal relative to the edge's canonical normal.
    pub fn sign(self) -> f64 {
        match self {
            Side::South | Side::West => -1.0,
            Side::East | Side::North => 1.0,
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Side::South | Side::North => Orientation::Horizontal,
            Side::East | Side::West => Orientation::Vertical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone)]
pub struct Cell {
    /// `(i, j)` with `i` the x-index and `j` the y-index.
    pub index: (usize, usize),
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub widths: [f64; 2],
    /// Edge ids in side order south, east, north, west.
    pub edges: [usize; 4],
}

impl Cell {
    pub fn area(&self) -> f64 {
        self.widths[0] * self.widths[1]
    }

    pub fn edge(&self, side: Side) -> usize {
        self.edges[side.index()]
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.x_range[0] + self.x_range[1]),
            0.5 * (self.y_range[0] + self.y_range[1]),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: usize,
    pub orientation: Orientation,
    /// Endpoints ordered from the smaller to the larger coordinate.
    pub endpoints: [[f64; 2]; 2],
    pub length: f64,
    /// `[behind, ahead]` relative to the canonical normal: the canonical
    /// normal is outward for `behind` and inward for `ahead`.
    pub cells: [Option<usize>; 2],
    pub on_boundary: bool,
}

impl Edge {
    /// `+e1` for vertical edges, `+e2` for horizontal ones.
    pub fn canonical_normal(&self) -> [f64; 2] {
        match self.orientation {
            Orientation::Horizontal => [0.0, 1.0],
            Orientation::Vertical => [1.0, 0.0],
        }
    }

    pub fn neighbor_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().flatten().copied()
    }

    /// Point at arc length `s` from the first endpoint.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let [a, _] = self.endpoints;
        match self.orientation {
            Orientation::Horizontal => [a[0] + s, a[1]],
            Orientation::Vertical => [a[0], a[1] + s],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShishkinMesh {
    pub params: MeshParams,
    pub breakpoints: Vec<f64>,
    pub lambda: f64,
    /// Global fine width `4λ/N`.
    pub h_fine: f64,
    /// Global coarse width `2(1-2λ)/N`.
    pub h_coarse: f64,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
}

impl ShishkinMesh {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn cell_id(&self, i: usize, j: usize) -> usize {
        i * self.params.n + j
    }

    /// Id of the horizontal edge at `y = breakpoints[row]` spanning column `i`.
    pub fn horizontal_edge(&self, row: usize, i: usize) -> usize {
        row * self.params.n + i
    }

    /// Id of the vertical edge at `x = breakpoints[col]` spanning row `j`.
    pub fn vertical_edge(&self, col: usize, j: usize) -> usize {
        let n = self.params.n;
        n * (n + 1) + col * n + j
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.on_boundary)
    }
}

pub fn build_mesh(params: MeshParams) -> Result<ShishkinMesh> {
    params.validate()?;
    let n = params.n;
    let lambda = match params.kind {
        MeshKind::Shishkin => compute_lambda(n, params.eps, params.alpha)?,
        MeshKind::Uniform => 0.25,
    };
    let points = build_axis_partition(n, lambda)?;
    let h_fine = 4.0 * lambda / n as f64;
    let h_coarse = 2.0 * (1.0 - 2.0 * lambda) / n as f64;

    let n_horizontal = n * (n + 1);
    let mut edges = Vec::with_capacity(2 * n * (n + 1));
    for row in 0..=n {
        for i in 0..n {
            let y = points[row];
            edges.push(Edge {
                id: edges.len(),
                orientation: Orientation::Horizontal,
                endpoints: [[points[i], y], [points[i + 1], y]],
                length: points[i + 1] - points[i],
                cells: [
                    (row > 0).then(|| i * n + row - 1),
                    (row < n).then(|| i * n + row),
                ],
                on_boundary: row == 0 || row == n,
            });
        }
    }
    for col in 0..=n {
        for j in 0..n {
            let x = points[col];
            edges.push(Edge {
                id: edges.len(),
                orientation: Orientation::Vertical,
                endpoints: [[x, points[j]], [x, points[j + 1]]],
                length: points[j + 1] - points[j],
                cells: [
                    (col > 0).then(|| (col - 1) * n + j),
                    (col < n).then(|| col * n + j),
                ],
                on_boundary: col == 0 || col == n,
            });
        }
    }

    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let south = j * n + i;
            let north = (j + 1) * n + i;
            let west = n_horizontal + i * n + j;
            let east = n_horizontal + (i + 1) * n + j;
            cells.push(Cell {
                index: (i, j),
                x_range: [points[i], points[i + 1]],
                y_range: [points[j], points[j + 1]],
                widths: [points[i + 1] - points[i], points[j + 1] - points[j]],
                edges: [south, east, north, west],
            });
        }
    }

    Ok(ShishkinMesh {
        params,
        breakpoints: points,
        lambda,
        h_fine,
        h_coarse,
        cells,
        edges,
    })
}
