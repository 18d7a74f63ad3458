//! Manufactured exact solutions with clamped boundary conditions, their
//! forcing `f = ε²Δ²u − Δu`, and the global projection `Q_N u`.
//!
//! All solutions are separable, `u(x, y) = a(x) b(y)`, so every partial
//! derivative through fourth order is a product of 1D closed forms.

use crate::assembly::DofMap;
use crate::basis::{project_edge, project_edge_vector, project_on_basis, CellBasis};
use crate::error::{invalid, Result};
use crate::mesh::ShishkinMesh;
use crate::quadrature::QuadratureRule;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Example {
    /// `u = x²(1−x)² y²(1−y)²`, which lies in `Q_4`.
    Polynomial,
    /// `u = g(x) g(y)` with boundary layers on all four sides.
    SymmetricLayers,
    /// `u = g(x) p(y)`.
    MixedLayers,
}

impl Example {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(Example::Polynomial),
            1 => Ok(Example::SymmetricLayers),
            2 => Ok(Example::MixedLayers),
            other => Err(invalid(format!(
                "unknown example {other}, expected 0, 1 or 2"
            ))),
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Example::Polynomial => 0,
            Example::SymmetricLayers => 1,
            Example::MixedLayers => 2,
        }
    }
}

const MAX_ORDER: usize = 4;

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(invalid(format!(
            "derivative order {order} exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// `1 − e^{−1/ε}` without cancellation.
fn layer_l(eps: f64) -> f64 {
    -(-1.0 / eps).exp_m1()
}

/// Derivatives of `e^{−x/ε}` and `e^{(x−1)/ε}` scaled by `ε^{1−n}`, i.e.
/// `ε · d^n/dx^n` of each exponential.
fn scaled_exponentials(x: f64, eps: f64, order: usize) -> (f64, f64) {
    let left = (-x / eps).exp();
    let right = ((x - 1.0) / eps).exp();
    let scale = eps.powi(1 - order as i32);
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    (sign * scale * left, scale * right)
}

/// `order`-th derivative of
/// `g(x) = ½[sin(πx) + πε/l (e^{−x/ε} + e^{(x−1)/ε} − 1 − e^{−1/ε})]`.
pub fn eval_g(x: f64, eps: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(g_unchecked(x, eps, order))
}

fn g_unchecked(x: f64, eps: f64, order: usize) -> f64 {
    let l = layer_l(eps);
    let trig = PI.powi(order as i32) * (PI * x + order as f64 * PI / 2.0).sin();
    let (left, right) = scaled_exponentials(x, eps, order);
    let mut layer = (PI / l) * (left + right);
    if order == 0 {
        layer -= (PI * eps / l) * (2.0 - l);
    }
    0.5 * (trig + layer)
}

/// `order`-th derivative of
/// `p(y) = 2y(1−y²) + ε[l d (1−2y) − 3q/l + (3/l − d) e^{−y/ε} + (3/l + d) e^{(y−1)/ε}]`
/// with `l = 1 − e^{−1/ε}`, `q = 2 − l`, `d = 1/(q − 2εl)`.
pub fn eval_p(y: f64, eps: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    Ok(p_unchecked(y, eps, order))
}

fn p_unchecked(y: f64, eps: f64, order: usize) -> f64 {
    let l = layer_l(eps);
    let q = 2.0 - l;
    let d = 1.0 / (q - 2.0 * eps * l);
    let poly = match order {
        0 => 2.0 * y * (1.0 - y * y),
        1 => 2.0 - 6.0 * y * y,
        2 => -12.0 * y,
        3 => -12.0,
        _ => 0.0,
    };
    let linear = match order {
        0 => eps * (l * d * (1.0 - 2.0 * y) - 3.0 * q / l),
        1 => -2.0 * eps * l * d,
        _ => 0.0,
    };
    let (left, right) = scaled_exponentials(y, eps, order);
    poly + linear + (3.0 / l - d) * left + (3.0 / l + d) * right
}

/// `order`-th derivative of `x²(1−x)²`.
fn bubble(x: f64, order: usize) -> f64 {
    match order {
        0 => x * x * (1.0 - x) * (1.0 - x),
        1 => 2.0 * x - 6.0 * x * x + 4.0 * x * x * x,
        2 => 2.0 - 12.0 * x + 12.0 * x * x,
        3 => -12.0 + 24.0 * x,
        4 => 24.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub example: Example,
    pub eps: f64,
}

impl ExactSolution {
    pub fn new(example: Example, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { example, eps })
    }

    /// Derivatives of the x factor, orders 0 through 4.
    pub fn x_factor(&self, x: f64) -> [f64; 5] {
        std::array::from_fn(|n| match self.example {
            Example::Polynomial => bubble(x, n),
            Example::SymmetricLayers | Example::MixedLayers => g_unchecked(x, self.eps, n),
        })
    }

    /// Derivatives of the y factor, orders 0 through 4.
    pub fn y_factor(&self, y: f64) -> [f64; 5] {
        std::array::from_fn(|n| match self.example {
            Example::Polynomial => bubble(y, n),
            Example::SymmetricLayers => g_unchecked(y, self.eps, n),
            Example::MixedLayers => p_unchecked(y, self.eps, n),
        })
    }

    /// `∂ₓ^i ∂ᵧ^j u` for `i + j ≤ 4`.
    pub fn partial(&self, i: usize, j: usize, x: f64, y: f64) -> Result<f64> {
        if i + j > MAX_ORDER {
            return Err(invalid(format!(
                "total derivative order {} exceeds 4",
                i + j
            )));
        }
        Ok(self.x_factor(x)[i] * self.y_factor(y)[j])
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.x_factor(x)[0] * self.y_factor(y)[0]
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let a = self.x_factor(x);
        let b = self.y_factor(y);
        [a[1] * b[0], a[0] * b[1]]
    }

    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        let a = self.x_factor(x);
        let b = self.y_factor(y);
        a[2] * b[0] + a[0] * b[2]
    }

    pub fn bilaplacian(&self, x: f64, y: f64) -> f64 {
        let a = self.x_factor(x);
        let b = self.y_factor(y);
        a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4]
    }

    /// `f = ε²Δ²u − Δu`.
    pub fn forcing(&self, x: f64, y: f64) -> f64 {
        let a = self.x_factor(x);
        let b = self.y_factor(y);
        let lap = a[2] * b[0] + a[0] * b[2];
        let bilap = a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4];
        self.eps * self.eps * bilap - lap
    }
}

pub fn forcing(example: Example, point: [f64; 2], eps: f64) -> Result<f64> {
    Ok(ExactSolution::new(example, eps)?.forcing(point[0], point[1]))
}

/// `Q_N u` in raw global numbering, before constrained entries are zeroed.
pub fn project_exact_raw(
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    exact: &ExactSolution,
    rule: &QuadratureRule,
) -> Vec<f64> {
    let k = dofs.k;
    let mut out = vec![0.0; dofs.n_raw()];
    for (cid, cell) in mesh.cells.iter().enumerate() {
        let basis = CellBasis::for_cell(k, cell);
        let c = project_on_basis(|x, y| exact.value(x, y), &basis, rule);
        let start = dofs.interior(cid, 0);
        out[start..start + c.len()].copy_from_slice(&c);
    }
    for edge in &mesh.edges {
        let trace = project_edge(|x, y| exact.value(x, y), edge, k, rule);
        let [gx, gy] = project_edge_vector(|x, y| exact.gradient(x, y), edge, k, rule);
        for m in 0..=k {
            out[dofs.trace(edge.id, m)] = trace[m];
            out[dofs.grad_x(edge.id, m)] = gx[m];
            out[dofs.grad_y(edge.id, m)] = gy[m];
        }
    }
    out
}

/// `Q_N u` with the boundary-constrained entries set to exactly zero.
pub fn project_exact(
    mesh: &ShishkinMesh,
    dofs: &DofMap,
    exact: &ExactSolution,
    rule: &QuadratureRule,
) -> Vec<f64> {
    let mut out = project_exact_raw(mesh, dofs, exact, rule);
    for (v, &c) in out.iter_mut().zip(&dofs.constrained) {
        if c {
            *v = 0.0;
        }
    }
    out
}
