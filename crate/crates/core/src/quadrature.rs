//! Gauss-Legendre rules on the reference interval `[-1, 1]`.

use crate::error::{invalid, Result};
use std::f64::consts::PI;

pub const MAX_POINTS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Pairs of `(node, weight)` mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for m in 1..n {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * x * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `q`-point Gauss-Legendre rule, exact for polynomials of degree `2q - 1`.
pub fn gauss_legendre(q: usize) -> Result<QuadratureRule> {
    if q == 0 || q > MAX_POINTS {
        return Err(invalid(format!(
            "quadrature points must lie in 1..={MAX_POINTS}, got {q}"
        )));
    }
    if q == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_order_rules() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);

        let r = gauss_legendre(2).unwrap();
        let a = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r.nodes[0], -a, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], a, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 1.0, epsilon = 1e-15);

        let r = gauss_legendre(3).unwrap();
        let a = 0.6f64.sqrt();
        assert_relative_eq!(r.nodes[0], -a, epsilon = 1e-15);
        assert_eq!(r.nodes[1], 0.0);
        assert_relative_eq!(r.nodes[2], a, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[2], 5.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn monomials_integrated_exactly() {
        for q in 1..=MAX_POINTS {
            let r = gauss_legendre(q).unwrap();
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for d in 0..2 * q {
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                let approx: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(d as i32))
                    .sum();
                assert!(
                    (approx - exact).abs() <= 1e-14,
                    "q={q} d={d}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn nodes_symmetric_and_sorted() {
        for q in 1..=MAX_POINTS {
            let r = gauss_legendre(q).unwrap();
            for i in 0..q {
                assert_eq!(r.nodes[i], -r.nodes[q - 1 - i]);
                assert!(r.weights[i] > 0.0);
                if i > 0 {
                    assert!(r.nodes[i] > r.nodes[i - 1]);
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(33).is_err());
    }
}
