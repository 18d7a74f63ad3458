//! Orthonormal Legendre bases for `Q_k` on cells and `P_k` on edges, plus
//! the local `L²` projections onto them.
//!
//! Cell functions are tensor products `ψ_m(x) ψ_n(y)` of 1D normalized
//! Legendre polynomials mapped to the cell's intervals, so every local mass
//! matrix is the identity. Edge functions reuse the same 1D family
//! parameterized by arc length from the smaller coordinate, which makes the
//! edge basis on a side coincide with the cell's 1D basis along that side.

use crate::mesh::{Cell, Edge};
use crate::quadrature::QuadratureRule;

/// Normalized Legendre polynomials `√((2n+1)/2) P_n` and their first two
/// derivatives at `xi`, for `n = 0..=degree`.
pub fn legendre_table(degree: usize, xi: f64) -> [Vec<f64>; 3] {
    let len = degree + 1;
    let mut p = vec![0.0; len];
    let mut dp = vec![0.0; len];
    let mut ddp = vec![0.0; len];
    p[0] = 1.0;
    if degree >= 1 {
        p[1] = xi;
        dp[1] = 1.0;
    }
    for n in 1..degree {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * xi * p[n] - nf * p[n - 1]) / (nf + 1.0);
        dp[n + 1] = dp[n - 1] + (2.0 * nf + 1.0) * p[n];
        ddp[n + 1] = ddp[n - 1] + (2.0 * nf + 1.0) * dp[n];
    }
    for n in 0..len {
        let scale = ((2 * n + 1) as f64 / 2.0).sqrt();
        p[n] *= scale;
        dp[n] *= scale;
        ddp[n] *= scale;
    }
    [p, dp, ddp]
}

/// 1D orthonormal basis of `P_k` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBasis {
    pub degree: usize,
    pub a: f64,
    pub b: f64,
}

impl IntervalBasis {
    pub fn new(degree: usize, a: f64, b: f64) -> Self {
        Self { degree, a, b }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn to_reference(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / self.width()
    }

    /// Physical point of reference coordinate `xi ∈ [−1, 1]`.
    pub fn from_reference(&self, xi: f64) -> f64 {
        0.5 * (self.a + self.b) + 0.5 * self.width() * xi
    }

    /// Values, first and second derivatives of every member at `x`.
    pub fn eval(&self, x: f64) -> [Vec<f64>; 3] {
        self.eval_reference(self.to_reference(x))
    }

    /// As [`IntervalBasis::eval`] at reference coordinate `xi`. Working from
    /// the reference point avoids the rounding of mapping back from `x`,
    /// which the derivative scaling would amplify on narrow intervals.
    pub fn eval_reference(&self, xi: f64) -> [Vec<f64>; 3] {
        let w = self.width();
        let [mut p, mut dp, mut ddp] = legendre_table(self.degree, xi);
        let s0 = (2.0 / w).sqrt();
        let s1 = s0 * 2.0 / w;
        let s2 = s1 * 2.0 / w;
        p.iter_mut().for_each(|v| *v *= s0);
        dp.iter_mut().for_each(|v| *v *= s1);
        ddp.iter_mut().for_each(|v| *v *= s2);
        [p, dp, ddp]
    }
}

/// Values and derivatives of all cell basis members at one point.
#[derive(Debug, Clone)]
pub struct CellEval {
    pub value: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dyy: Vec<f64>,
}

impl CellEval {
    pub fn laplacian(&self, i: usize) -> f64 {
        self.dxx[i] + self.dyy[i]
    }
}

/// Orthonormal basis of `Q_k(T)` on an axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBasis {
    pub degree: usize,
    pub x: IntervalBasis,
    pub y: IntervalBasis,
}

impl CellBasis {
    pub fn new(degree: usize, x_range: [f64; 2], y_range: [f64; 2]) -> Self {
        Self {
            degree,
            x: IntervalBasis::new(degree, x_range[0], x_range[1]),
            y: IntervalBasis::new(degree, y_range[0], y_range[1]),
        }
    }

    pub fn for_cell(degree: usize, cell: &Cell) -> Self {
        Self::new(degree, cell.x_range, cell.y_range)
    }

    pub fn dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    /// Flat index of `ψ_m(x) ψ_n(y)`.
    pub fn index(&self, m: usize, n: usize) -> usize {
        m * (self.degree + 1) + n
    }

    pub fn area(&self) -> f64 {
        self.x.width() * self.y.width()
    }

    pub fn eval(&self, x: f64, y: f64) -> CellEval {
        self.eval_reference(self.x.to_reference(x), self.y.to_reference(y))
    }

    /// As [`CellBasis::eval`] at reference coordinates in `[−1, 1]²`.
    pub fn eval_reference(&self, xi: f64, eta: f64) -> CellEval {
        let [px, dpx, ddpx] = self.x.eval_reference(xi);
        let [py, dpy, ddpy] = self.y.eval_reference(eta);
        let dim = self.dim();
        let mut out = CellEval {
            value: vec![0.0; dim],
            dx: vec![0.0; dim],
            dy: vec![0.0; dim],
            dxx: vec![0.0; dim],
            dyy: vec![0.0; dim],
        };
        for m in 0..=self.degree {
            for n in 0..=self.degree {
                let i = self.index(m, n);
                out.value[i] = px[m] * py[n];
                out.dx[i] = dpx[m] * py[n];
                out.dy[i] = px[m] * dpy[n];
                out.dxx[i] = ddpx[m] * py[n];
                out.dyy[i] = px[m] * ddpy[n];
            }
        }
        out
    }

    /// Evaluates the expansion with the given coefficients at `(x, y)`.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, y: f64) -> f64 {
        let [px, _, _] = self.x.eval(x);
        let [py, _, _] = self.y.eval(y);
        let mut sum = 0.0;
        for m in 0..=self.degree {
            for n in 0..=self.degree {
                sum += coeffs[self.index(m, n)] * px[m] * py[n];
            }
        }
        sum
    }

    /// Tensor Gauss points mapped to the cell, with physical weights.
    pub fn quadrature_points<'a>(
        &'a self,
        rule: &'a QuadratureRule,
    ) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
        rule.mapped(self.x.a, self.x.b).flat_map(move |(x, wx)| {
            rule.mapped(self.y.a, self.y.b)
                .map(move |(y, wy)| (x, y, wx * wy))
        })
    }

    /// Tensor Gauss points as `(ξ, η, physical weight)`.
    pub fn reference_points<'a>(
        &'a self,
        rule: &'a QuadratureRule,
    ) -> impl Iterator<Item = (f64, f64, f64)> + 'a {
        let scale = 0.25 * self.area();
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .flat_map(move |(&xi, &wx)| {
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(move |(&eta, &wy)| (xi, eta, scale * wx * wy))
            })
    }

    /// Basis values and derivatives at every tensor quadrature point.
    pub fn tabulate(&self, rule: &QuadratureRule) -> CellTable {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut evals = Vec::new();
        for (xi, eta, w) in self.reference_points(rule) {
            points.push([self.x.from_reference(xi), self.y.from_reference(eta)]);
            weights.push(w);
            evals.push(self.eval_reference(xi, eta));
        }
        CellTable {
            points,
            weights,
            evals,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellTable {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub evals: Vec<CellEval>,
}

/// Orthonormal basis of `P_k(e)` in arc length along an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBasis {
    pub degree: usize,
    pub length: f64,
}

impl EdgeBasis {
    pub fn new(degree: usize, length: f64) -> Self {
        Self { degree, length }
    }

    pub fn for_edge(degree: usize, edge: &Edge) -> Self {
        Self::new(degree, edge.length)
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    fn interval(&self) -> IntervalBasis {
        IntervalBasis::new(self.degree, 0.0, self.length)
    }

    /// Values of all members at arc length `s`.
    pub fn eval(&self, s: f64) -> Vec<f64> {
        let [p, _, _] = self.interval().eval(s);
        p
    }

    pub fn evaluate(&self, coeffs: &[f64], s: f64) -> f64 {
        self.eval(s).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    /// Gauss points in arc length with physical weights.
    pub fn quadrature_points<'a>(
        &'a self,
        rule: &'a QuadratureRule,
    ) -> impl Iterator<Item = (f64, f64)> + 'a {
        rule.mapped(0.0, self.length)
    }

    /// `(arc length, physical weight, member values)` at each Gauss point,
    /// with the values taken at the reference nodes.
    pub fn tabulate<'a>(
        &'a self,
        rule: &'a QuadratureRule,
    ) -> impl Iterator<Item = (f64, f64, Vec<f64>)> + 'a {
        let interval = self.interval();
        let half = 0.5 * self.length;
        rule.nodes.iter().zip(&rule.weights).map(move |(&xi, &w)| {
            let [p, _, _] = interval.eval_reference(xi);
            (interval.from_reference(xi), half * w, p)
        })
    }
}

/// Coefficients `(fun, φ_i)_T` of the `L²(T)` projection onto `Q_k(T)`.
pub fn project_cell<F>(fun: F, cell: &Cell, k: usize, rule: &QuadratureRule) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let basis = CellBasis::for_cell(k, cell);
    project_on_basis(fun, &basis, rule)
}

pub fn project_on_basis<F>(fun: F, basis: &CellBasis, rule: &QuadratureRule) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let mut coeffs = vec![0.0; basis.dim()];
    let axis = |b: &IntervalBasis| -> Vec<(f64, f64, Vec<f64>)> {
        let half = 0.5 * b.width();
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&xi, &w)| {
                (
                    b.from_reference(xi),
                    half * w,
                    b.eval_reference(xi)[0].clone(),
                )
            })
            .collect()
    };
    let xs = axis(&basis.x);
    let ys = axis(&basis.y);
    for (x, wx, px) in &xs {
        for (y, wy, py) in &ys {
            let fw = fun(*x, *y) * wx * wy;
            for m in 0..=basis.degree {
                let a = fw * px[m];
                for n in 0..=basis.degree {
                    coeffs[basis.index(m, n)] += a * py[n];
                }
            }
        }
    }
    coeffs
}

/// Coefficients of the `L²(e)` projection onto `P_k(e)`; `fun` receives
/// the physical point on the edge.
pub fn project_edge<F>(fun: F, edge: &Edge, k: usize, rule: &QuadratureRule) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let basis = EdgeBasis::for_edge(k, edge);
    let mut coeffs = vec![0.0; basis.dim()];
    for (s, w, values) in basis.tabulate(rule) {
        let [x, y] = edge.point_at(s);
        let fw = fun(x, y) * w;
        for (c, p) in coeffs.iter_mut().zip(values) {
            *c += fw * p;
        }
    }
    coeffs
}

/// Componentwise projection of a vector field onto `[P_k(e)]²`.
pub fn project_edge_vector<F>(fun: F, edge: &Edge, k: usize, rule: &QuadratureRule) -> [Vec<f64>; 2]
where
    F: Fn(f64, f64) -> [f64; 2],
{
    let basis = EdgeBasis::for_edge(k, edge);
    let mut cx = vec![0.0; basis.dim()];
    let mut cy = vec![0.0; basis.dim()];
    for (s, w, values) in basis.tabulate(rule) {
        let [x, y] = edge.point_at(s);
        let [fx, fy] = fun(x, y);
        for (i, p) in values.into_iter().enumerate() {
            cx[i] += fx * w * p;
            cy[i] += fy * w * p;
        }
    }
    [cx, cy]
}
