//! Cell-local matrices of the discrete weak Laplacian, the discrete weak
//! gradient, the stabilizer and the resulting stiffness block.
//!
//! A local weak function is the vector of its coefficients in the layout of
//! [`LocalLayout`]: interior `Q_k` coefficients first, then for each side
//! (south, east, north, west) the trace coefficients and the two Cartesian
//! components of the edge gradient. Edge data is stored in the edge's
//! canonical orientation; the outward normal of the side only enters where
//! `n` appears in the defining identities.

use crate::basis::{CellBasis, IntervalBasis};
use crate::mesh::Side;
use crate::quadrature::QuadratureRule;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalLayout {
    pub k: usize,
}

impl LocalLayout {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    pub fn n_interior(&self) -> usize {
        (self.k + 1) * (self.k + 1)
    }

    pub fn n_edge(&self) -> usize {
        self.k + 1
    }

    /// DOFs attached to one side: trace, x-gradient, y-gradient.
    pub fn n_side(&self) -> usize {
        3 * self.n_edge()
    }

    pub fn n_local(&self) -> usize {
        self.n_interior() + 4 * self.n_side()
    }

    fn side_offset(&self, side: Side) -> usize {
        self.n_interior() + side.index() * self.n_side()
    }

    pub fn trace(&self, side: Side, m: usize) -> usize {
        self.side_offset(side) + m
    }

    pub fn grad_x(&self, side: Side, m: usize) -> usize {
        self.side_offset(side) + self.n_edge() + m
    }

    pub fn grad_y(&self, side: Side, m: usize) -> usize {
        self.side_offset(side) + 2 * self.n_edge() + m
    }
}

/// Physical description of one side of a cell for edge quadrature.
struct SideGeometry {
    side: Side,
    /// 1D basis along the side, identical to the edge basis of that edge.
    along: IntervalBasis,
    /// Fixed reference coordinate of the side, `±1`.
    fixed: f64,
}

/// One Gauss point on a side.
struct SidePoint {
    /// Reference coordinates in `[−1, 1]²`.
    reference: (f64, f64),
    /// Physical coordinates.
    point: (f64, f64),
    weight: f64,
    /// Edge basis values.
    chi: Vec<f64>,
}

impl SideGeometry {
    fn all(basis: &CellBasis) -> [SideGeometry; 4] {
        Side::ALL.map(|side| {
            let (along, fixed) = match side {
                Side::South => (basis.x, -1.0),
                Side::North => (basis.x, 1.0),
                Side::West => (basis.y, -1.0),
                Side::East => (basis.y, 1.0),
            };
            SideGeometry { side, along, fixed }
        })
    }

    fn quadrature<'a>(
        &'a self,
        basis: &'a CellBasis,
        rule: &'a QuadratureRule,
    ) -> impl Iterator<Item = SidePoint> + 'a {
        let half = 0.5 * self.along.width();
        rule.nodes.iter().zip(&rule.weights).map(move |(&t, &w)| {
            let reference = match self.side {
                Side::South | Side::North => (t, self.fixed),
                Side::East | Side::West => (self.fixed, t),
            };
            SidePoint {
                reference,
                point: (
                    basis.x.from_reference(reference.0),
                    basis.y.from_reference(reference.1),
                ),
                weight: half * w,
                chi: self.along.eval_reference(t)[0].clone(),
            }
        })
    }
}

/// Matrix whose column `d` holds the `Q_k(T)` coefficients of the weak
/// Laplacian of the `d`-th local unit DOF.
pub fn weak_laplacian_matrix(basis: &CellBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let layout = LocalLayout::new(basis.degree);
    let ni = layout.n_interior();
    let mut lap = DMatrix::zeros(ni, layout.n_local());

    for (xi, eta, w) in basis.reference_points(rule) {
        let e = basis.eval_reference(xi, eta);
        for i in 0..ni {
            let lw = w * e.laplacian(i);
            for j in 0..ni {
                lap[(i, j)] += lw * e.value[j];
            }
        }
    }

    for geo in SideGeometry::all(basis) {
        let [nx, ny] = geo.side.normal();
        for SidePoint {
            reference: (xi, eta),
            weight: w,
            chi,
            ..
        } in geo.quadrature(basis, rule)
        {
            let e = basis.eval_reference(xi, eta);
            for i in 0..ni {
                let dn = e.dx[i] * nx + e.dy[i] * ny;
                for (m, c) in chi.iter().enumerate() {
                    lap[(i, layout.trace(geo.side, m))] -= w * c * dn;
                    lap[(i, layout.grad_x(geo.side, m))] += w * c * nx * e.value[i];
                    lap[(i, layout.grad_y(geo.side, m))] += w * c * ny * e.value[i];
                }
            }
        }
    }
    lap
}

/// Matrix with the `[Q_k(T)]²` coefficients (x block then y block) of the
/// weak gradient of each local unit DOF. Edge-gradient columns are zero.
pub fn weak_gradient_matrix(basis: &CellBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let layout = LocalLayout::new(basis.degree);
    let ni = layout.n_interior();
    let mut grad = DMatrix::zeros(2 * ni, layout.n_local());

    for (xi, eta, w) in basis.reference_points(rule) {
        let e = basis.eval_reference(xi, eta);
        for i in 0..ni {
            for j in 0..ni {
                grad[(i, j)] -= w * e.dx[i] * e.value[j];
                grad[(ni + i, j)] -= w * e.dy[i] * e.value[j];
            }
        }
    }

    for geo in SideGeometry::all(basis) {
        let [nx, ny] = geo.side.normal();
        for SidePoint {
            reference: (xi, eta),
            weight: w,
            chi,
            ..
        } in geo.quadrature(basis, rule)
        {
            let e = basis.eval_reference(xi, eta);
            for i in 0..ni {
                for (m, c) in chi.iter().enumerate() {
                    let col = layout.trace(geo.side, m);
                    grad[(i, col)] += w * c * e.value[i] * nx;
                    grad[(ni + i, col)] += w * c * e.value[i] * ny;
                }
            }
        }
    }
    grad
}

/// Penalty weights of the stabilizer for the global widths `h` (fine) and
/// `big_h` (coarse): `(ε²/h, ε²/(h² H) + 1/H)`.
pub fn stabilizer_weights(eps: f64, h: f64, big_h: f64) -> (f64, f64) {
    let ratio = eps / h;
    let grad_weight = eps * ratio;
    let value_weight = ratio * ratio / big_h + 1.0 / big_h;
    (grad_weight, value_weight)
}

/// Stabilizer block coupling interior traces with the edge unknowns on all
/// four sides.
pub fn stabilizer_matrix(
    basis: &CellBasis,
    rule: &QuadratureRule,
    eps: f64,
    h: f64,
    big_h: f64,
) -> DMatrix<f64> {
    let layout = LocalLayout::new(basis.degree);
    let ni = layout.n_interior();
    let nl = layout.n_local();
    let (gw, vw) = stabilizer_weights(eps, h, big_h);
    let mut stab = DMatrix::zeros(nl, nl);

    let mut jump_v = DVector::zeros(nl);
    let mut jump_x = DVector::zeros(nl);
    let mut jump_y = DVector::zeros(nl);
    for geo in SideGeometry::all(basis) {
        for SidePoint {
            reference: (xi, eta),
            weight: w,
            chi,
            ..
        } in geo.quadrature(basis, rule)
        {
            let e = basis.eval_reference(xi, eta);
            jump_v.fill(0.0);
            jump_x.fill(0.0);
            jump_y.fill(0.0);
            for i in 0..ni {
                jump_v[i] = e.value[i];
                jump_x[i] = e.dx[i];
                jump_y[i] = e.dy[i];
            }
            for (m, c) in chi.iter().enumerate() {
                jump_v[layout.trace(geo.side, m)] = -c;
                jump_x[layout.grad_x(geo.side, m)] = -c;
                jump_y[layout.grad_y(geo.side, m)] = -c;
            }
            stab.ger(w * vw, &jump_v, &jump_v, 1.0);
            stab.ger(w * gw, &jump_x, &jump_x, 1.0);
            stab.ger(w * gw, &jump_y, &jump_y, 1.0);
        }
    }
    symmetrize(&mut stab);
    stab
}

/// Copies the average of `a` and `aᵀ` into both triangles so the matrix is
/// symmetric bit for bit.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// All per-cell operators of the scheme.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    pub layout: LocalLayout,
    pub laplacian: DMatrix<f64>,
    pub gradient: DMatrix<f64>,
    pub stabilizer: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
}

impl LocalOperators {
    pub fn new(basis: &CellBasis, rule: &QuadratureRule, eps: f64, h: f64, big_h: f64) -> Self {
        let laplacian = weak_laplacian_matrix(basis, rule);
        let gradient = weak_gradient_matrix(basis, rule);
        let stabilizer = stabilizer_matrix(basis, rule, eps, h, big_h);
        let stiffness = assemble_stiffness(&laplacian, &gradient, &stabilizer, eps);
        Self {
            layout: LocalLayout::new(basis.degree),
            laplacian,
            gradient,
            stabilizer,
            stiffness,
        }
    }

    /// `ε²|Δ_w v|² + |∇_w v|² + s(v, v)` on this cell, computed from the
    /// individual operators rather than the stiffness block.
    pub fn energy(&self, v: &DVector<f64>, eps: f64) -> f64 {
        let lv = &self.laplacian * v;
        let gv = &self.gradient * v;
        let sv = &self.stabilizer * v;
        eps * eps * lv.norm_squared() + gv.norm_squared() + v.dot(&sv)
    }
}

/// `ε² LᵀL + GᵀG + S`, symmetrized.
pub fn assemble_stiffness(
    laplacian: &DMatrix<f64>,
    gradient: &DMatrix<f64>,
    stabilizer: &DMatrix<f64>,
    eps: f64,
) -> DMatrix<f64> {
    let mut a = laplacian.tr_mul(laplacian) * (eps * eps);
    a += gradient.tr_mul(gradient);
    a += stabilizer;
    symmetrize(&mut a);
    a
}

/// Local stiffness block of the cell.
pub fn local_stiffness(
    basis: &CellBasis,
    rule: &QuadratureRule,
    eps: f64,
    h: f64,
    big_h: f64,
) -> DMatrix<f64> {
    LocalOperators::new(basis, rule, eps, h, big_h).stiffness
}

/// Local DOFs of `{Q_0 u, Q_b u, Q_g ∇u}` on one cell.
pub fn project_local<U, G>(
    basis: &CellBasis,
    rule: &QuadratureRule,
    u: U,
    grad_u: G,
) -> DVector<f64>
where
    U: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> [f64; 2],
{
    let layout = LocalLayout::new(basis.degree);
    let mut v = DVector::zeros(layout.n_local());
    let interior = crate::basis::project_on_basis(&u, basis, rule);
    for (i, c) in interior.into_iter().enumerate() {
        v[i] = c;
    }
    for geo in SideGeometry::all(basis) {
        for SidePoint {
            point: (x, y),
            weight: w,
            chi,
            ..
        } in geo.quadrature(basis, rule)
        {
            let val = u(x, y);
            let [gx, gy] = grad_u(x, y);
            for (m, c) in chi.iter().enumerate() {
                v[layout.trace(geo.side, m)] += w * c * val;
                v[layout.grad_x(geo.side, m)] += w * c * gx;
                v[layout.grad_y(geo.side, m)] += w * c * gy;
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::project_on_basis;
    use crate::quadrature::gauss_legendre;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_basis(k: usize) -> CellBasis {
        CellBasis::new(k, [0.0, 1.0], [0.0, 1.0])
    }

    fn skewed_basis(k: usize) -> CellBasis {
        CellBasis::new(k, [0.01, 0.0125], [0.3, 0.55])
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn layout_sizes() {
        let l = LocalLayout::new(3);
        assert_eq!(l.n_interior(), 16);
        assert_eq!(l.n_local(), 64);
        assert_eq!(l.trace(Side::South, 0), 16);
        assert_eq!(l.grad_y(Side::West, 3), 63);
    }

    #[test]
    fn weak_laplacian_of_quadratic_is_constant() {
        let basis = skewed_basis(3);
        let rule = gauss_legendre(6).unwrap();
        let lap = weak_laplacian_matrix(&basis, &rule);
        let v = project_local(
            &basis,
            &rule,
            |x, y| x * x + y * y,
            |x, y| [2.0 * x, 2.0 * y],
        );
        let c = &lap * &v;
        // cancellation in the 1:100 cell scales with |L||v|
        let roundoff = 1e-13 * max_abs(&lap) * v.amax();
        assert!((c[0] - 4.0 * basis.area().sqrt()).abs() < 1e-10 * c[0].abs());
        for i in 1..c.len() {
            assert!(c[i].abs() < roundoff, "coefficient {i} = {}", c[i]);
        }

        let v = project_local(&basis, &rule, |x, _| x, |_, _| [1.0, 0.0]);
        let c = &lap * v;
        assert!(c.amax() < 1e-9);
    }

    #[test]
    fn weak_laplacian_of_unit_normal_gradient_matches_divergence_identity() {
        let k = 3;
        let basis = unit_basis(k);
        let rule = gauss_legendre(k + 3).unwrap();
        let layout = LocalLayout::new(k);
        let lap = weak_laplacian_matrix(&basis, &rule);
        let mut v = DVector::zeros(layout.n_local());
        // g = (1, 0) on every side: the constant member carries sqrt(length)
        for side in Side::ALL {
            v[layout.grad_x(side, 0)] = 1.0;
        }
        let c = &lap * v;
        // oracle: (1, ∂x φ_i) by an independent high-order rule
        let fine = gauss_legendre(20).unwrap();
        for i in 0..layout.n_interior() {
            let mut moment = 0.0;
            for (x, y, w) in basis.quadrature_points(&fine) {
                moment += w * basis.eval(x, y).dx[i];
            }
            assert!((c[i] - moment).abs() < 1e-12, "{i}: {} vs {moment}", c[i]);
        }
    }

    #[test]
    fn weak_gradient_of_constant_vanishes_and_ignores_edge_gradients() {
        let basis = skewed_basis(3);
        let rule = gauss_legendre(6).unwrap();
        let layout = LocalLayout::new(3);
        let grad = weak_gradient_matrix(&basis, &rule);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v = project_local(&basis, &rule, |_, _| 2.5, |_, _| [0.0, 0.0]);
        for side in Side::ALL {
            for m in 0..layout.n_edge() {
                v[layout.grad_x(side, m)] = rng.gen_range(-1.0..1.0);
                v[layout.grad_y(side, m)] = rng.gen_range(-1.0..1.0);
            }
        }
        assert!((&grad * v).amax() < 1e-9);
        for side in Side::ALL {
            for m in 0..layout.n_edge() {
                assert!(grad
                    .column(layout.grad_x(side, m))
                    .iter()
                    .all(|&x| x == 0.0));
                assert!(grad
                    .column(layout.grad_y(side, m))
                    .iter()
                    .all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn weak_gradient_of_xy_is_projected_gradient() {
        let basis = skewed_basis(3);
        let rule = gauss_legendre(6).unwrap();
        let grad = weak_gradient_matrix(&basis, &rule);
        let v = project_local(&basis, &rule, |x, y| x * y, |x, y| [y, x]);
        let c = &grad * v;
        let ox = project_on_basis(|_, y| y, &basis, &rule);
        let oy = project_on_basis(|x, _| x, &basis, &rule);
        let ni = 16;
        for i in 0..ni {
            assert!((c[i] - ox[i]).abs() < 1e-12);
            assert!((c[ni + i] - oy[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn stabilizer_vanishes_on_polynomials() {
        let basis = skewed_basis(3);
        let rule = gauss_legendre(6).unwrap();
        let s = stabilizer_matrix(&basis, &rule, 1e-2, 0.003, 0.2);
        let v = project_local(
            &basis,
            &rule,
            |x, y| x * x * y * y,
            |x, y| [2.0 * x * y * y, 2.0 * x * x * y],
        );
        let scale = max_abs(&s) * v.norm_squared();
        assert!(v.dot(&(&s * &v)).abs() < 1e-12 * scale);
    }

    #[test]
    fn stabilizer_single_trace_term() {
        let k = 3;
        let basis = unit_basis(k);
        let rule = gauss_legendre(k + 3).unwrap();
        let layout = LocalLayout::new(k);
        let s = stabilizer_matrix(&basis, &rule, 1.0, 1.0, 1.0);
        let mut v = DVector::zeros(layout.n_local());
        // v_b = 1 on the south side: constant member coefficient sqrt(length)
        v[layout.trace(Side::South, 0)] = 1.0;
        let value = v.dot(&(&s * &v));
        assert!((value - 2.0).abs() < 1e-13, "{value}");
    }

    #[test]
    fn stabilizer_is_positive_semidefinite() {
        let basis = skewed_basis(3);
        let rule = gauss_legendre(6).unwrap();
        let s = stabilizer_matrix(&basis, &rule, 1e-3, 1e-3, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let scale = max_abs(&s);
        for _ in 0..1000 {
            let v = DVector::from_fn(s.nrows(), |_, _| rng.gen_range(-1.0..1.0));
            assert!(v.dot(&(&s * &v)) >= -1e-12 * scale);
        }
    }

    #[test]
    fn stiffness_is_symmetric_psd_and_annihilates_constants() {
        let basis = skewed_basis(3);
        let rule = gauss_legendre(6).unwrap();
        let ops = LocalOperators::new(&basis, &rule, 1e-2, 0.005, 0.2);
        let a = &ops.stiffness;
        assert_eq!(a, &a.transpose());
        let eig = SymmetricEigen::new(a.clone());
        let norm = max_abs(a);
        assert!(eig.eigenvalues.min() >= -1e-10 * norm);

        let v = project_local(&basis, &rule, |_, _| 3.0, |_, _| [0.0, 0.0]);
        assert!(v.dot(&(a * &v)).abs() < 1e-10 * norm * v.norm_squared());
    }

    #[test]
    fn stiffness_matches_operator_energy_and_scales_quadratically() {
        let basis = skewed_basis(4);
        let rule = gauss_legendre(7).unwrap();
        let eps = 1e-3;
        let ops = LocalOperators::new(&basis, &rule, eps, 0.004, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = DVector::from_fn(ops.layout.n_local(), |_, _| rng.gen_range(-1.0..1.0));
        let quad = v.dot(&(&ops.stiffness * &v));
        assert!((quad - ops.energy(&v, eps)).abs() <= 1e-12 * quad);
        let t = 3.0;
        let tv = &v * t;
        let scaled = tv.dot(&(&ops.stiffness * &tv));
        assert!((scaled - t * t * quad).abs() <= 1e-13 * scaled);
    }

    #[test]
    fn penalty_weights_do_not_overflow_for_tiny_eps() {
        let n: f64 = 128.0;
        let eps = 1e-7;
        let lambda = 5.0 * eps * n.ln();
        let h = 4.0 * lambda / n;
        let big_h = 2.0 * (1.0 - 2.0 * lambda) / n;
        let (gw, vw) = stabilizer_weights(eps, h, big_h);
        assert!(gw.is_finite() && vw.is_finite());
        assert!(vw < 10.0 * n * n * n);
    }
}
