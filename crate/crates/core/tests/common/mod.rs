//! Published error tables and shared helpers for the integration tests.
#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::HashMap;

use wg_shishkin::driver::{run_case, CaseConfig, CaseOutput};
use wg_shishkin::{Example, MeshKind};

/// One table: rows of (ε, errors for each N, orders for each N but the last).
pub struct ReferenceTable {
    pub example: Example,
    pub mesh: MeshKind,
    pub k: usize,
    pub n: &'static [usize],
    pub rows: &'static [(f64, &'static [f64], &'static [f64])],
}

impl ReferenceTable {
    pub fn row(&self, eps: f64) -> (&'static [f64], &'static [f64]) {
        let r = self
            .rows
            .iter()
            .find(|r| r.0 == eps)
            .unwrap_or_else(|| panic!("no reference row for eps {eps}"));
        (r.1, r.2)
    }

    pub fn error(&self, eps: f64, n: usize) -> f64 {
        let i = self.n.iter().position(|&m| m == n).expect("N in table");
        self.row(eps).0[i]
    }

    pub fn order(&self, eps: f64, n: usize) -> f64 {
        let i = self.n.iter().position(|&m| m == n).expect("N in table");
        self.row(eps).1[i]
    }
}

const N5: &[usize] = &[8, 16, 32, 64, 128];
const N4: &[usize] = &[8, 16, 32, 64];

/// Example 1, Shishkin, k = 3.
pub const EX1_SHISHKIN_K3: ReferenceTable = ReferenceTable {
    example: Example::SymmetricLayers,
    mesh: MeshKind::Shishkin,
    k: 3,
    n: N5,
    rows: &[
        (
            1e0,
            &[1.01e-03, 2.61e-04, 6.58e-05, 1.65e-05, 4.12e-06],
            &[1.96, 1.99, 2.00, 2.00],
        ),
        (
            1e-1,
            &[3.77e-03, 1.06e-03, 2.75e-04, 6.94e-05, 1.74e-05],
            &[1.83, 1.95, 1.99, 2.00],
        ),
        (
            1e-2,
            &[1.17e-02, 6.43e-03, 3.03e-03, 1.25e-03, 4.59e-04],
            &[0.86, 1.09, 1.28, 1.44],
        ),
        (
            1e-3,
            &[3.81e-03, 2.08e-03, 9.73e-04, 4.00e-04, 1.46e-04],
            &[0.87, 1.10, 1.28, 1.45],
        ),
        (
            1e-4,
            &[1.22e-03, 6.59e-04, 3.08e-04, 1.27e-04, 4.64e-05],
            &[0.89, 1.10, 1.28, 1.45],
        ),
        (
            1e-5,
            &[4.18e-04, 2.09e-04, 9.75e-05, 4.01e-05, 1.47e-05],
            &[1.00, 1.10, 1.28, 1.45],
        ),
        (
            1e-6,
            &[2.09e-04, 6.71e-05, 3.09e-05, 1.27e-05, 4.64e-06],
            &[1.64, 1.12, 1.28, 1.45],
        ),
        (
            1e-7,
            &[1.74e-04, 2.44e-05, 9.84e-06, 4.01e-06, 1.47e-06],
            &[2.84, 1.31, 1.29, 1.45],
        ),
    ],
};

/// Example 1, uniform, k = 3.
pub const EX1_UNIFORM_K3: ReferenceTable = ReferenceTable {
    example: Example::SymmetricLayers,
    mesh: MeshKind::Uniform,
    k: 3,
    n: N5,
    rows: &[
        (
            1e0,
            &[1.01e-03, 2.61e-04, 6.58e-05, 1.65e-05, 4.12e-06],
            &[1.96, 1.99, 2.00, 2.00],
        ),
        (
            1e-1,
            &[3.77e-03, 1.06e-03, 2.75e-04, 6.94e-05, 1.74e-05],
            &[1.83, 1.95, 1.99, 2.00],
        ),
        (
            1e-2,
            &[3.87e-02, 2.06e-02, 8.03e-03, 2.62e-03, 7.53e-04],
            &[0.91, 1.36, 1.62, 1.80],
        ),
        (
            1e-3,
            &[1.24e-02, 1.60e-02, 1.73e-02, 1.44e-02, 8.63e-03],
            &[-0.37, -0.12, 0.26, 0.74],
        ),
        (
            1e-4,
            &[1.30e-03, 1.83e-03, 2.57e-03, 3.56e-03, 4.74e-03],
            &[-0.49, -0.49, -0.47, -0.41],
        ),
        (
            1e-5,
            &[1.33e-04, 1.85e-04, 2.62e-04, 3.70e-04, 5.21e-04],
            &[-0.47, -0.50, -0.50, -0.49],
        ),
        (
            1e-6,
            &[1.96e-05, 1.87e-05, 2.62e-05, 3.71e-05, 5.25e-05],
            &[0.07, -0.49, -0.50, -0.50],
        ),
        (
            1e-7,
            &[1.30e-05, 2.24e-06, 2.63e-06, 3.71e-06, 5.25e-06],
            &[2.54, -0.23, -0.50, -0.50],
        ),
    ],
};

/// Example 1, Shishkin, k = 4.
pub const EX1_SHISHKIN_K4: ReferenceTable = ReferenceTable {
    example: Example::SymmetricLayers,
    mesh: MeshKind::Shishkin,
    k: 4,
    n: N4,
    rows: &[
        (
            1e0,
            &[3.07e-05, 3.90e-06, 4.89e-07, 6.12e-08],
            &[2.98, 3.00, 3.00],
        ),
        (
            1e-1,
            &[3.92e-04, 5.35e-05, 6.84e-06, 8.61e-07],
            &[2.87, 2.97, 2.99],
        ),
        (
            1e-2,
            &[6.08e-03, 2.56e-03, 8.25e-04, 2.11e-04],
            &[1.25, 1.63, 1.97],
        ),
        (
            1e-3,
            &[1.98e-03, 8.29e-04, 2.66e-04, 6.77e-05],
            &[1.26, 1.64, 1.97],
        ),
        (
            1e-4,
            &[6.28e-04, 2.63e-04, 8.43e-05, 2.15e-05],
            &[1.26, 1.64, 1.97],
        ),
        (
            1e-5,
            &[1.99e-04, 8.32e-05, 2.67e-05, 6.79e-06],
            &[1.26, 1.64, 1.97],
        ),
        (
            1e-6,
            &[6.33e-05, 2.63e-05, 8.44e-06, 2.24e-06],
            &[1.27, 1.64, 1.91],
        ),
    ],
};

/// Example 2, Shishkin, k = 3.
pub const EX2_SHISHKIN_K3: ReferenceTable = ReferenceTable {
    example: Example::MixedLayers,
    mesh: MeshKind::Shishkin,
    k: 3,
    n: N5,
    rows: &[
        (
            1e0,
            &[1.66e-04, 4.24e-05, 1.07e-05, 2.67e-06, 6.67e-07],
            &[1.97, 1.99, 2.00, 2.00],
        ),
        (
            1e-1,
            &[6.48e-03, 1.82e-03, 4.72e-04, 1.19e-04, 2.99e-05],
            &[1.83, 1.94, 1.99, 2.00],
        ),
        (
            1e-2,
            &[2.10e-02, 1.16e-02, 5.44e-03, 2.24e-03, 8.25e-04],
            &[0.86, 1.09, 1.28, 1.44],
        ),
        (
            1e-3,
            &[6.86e-03, 3.74e-03, 1.75e-03, 7.20e-04, 2.64e-04],
            &[0.87, 1.10, 1.28, 1.45],
        ),
        (
            1e-4,
            &[2.18e-03, 1.19e-03, 5.55e-04, 2.28e-04, 8.35e-05],
            &[0.88, 1.10, 1.28, 1.45],
        ),
        (
            1e-5,
            &[7.13e-04, 3.76e-04, 1.76e-04, 7.22e-05, 2.64e-05],
            &[0.92, 1.10, 1.28, 1.45],
        ),
        (
            1e-6,
            &[2.87e-04, 1.20e-04, 5.56e-05, 2.28e-05, 8.36e-06],
            &[1.27, 1.11, 1.28, 1.45],
        ),
        (
            1e-7,
            &[2.00e-04, 4.01e-05, 1.76e-05, 7.29e-06, 2.64e-06],
            &[2.32, 1.19, 1.27, 1.46],
        ),
    ],
};

/// Example 2, uniform, k = 3.
pub const EX2_UNIFORM_K3: ReferenceTable = ReferenceTable {
    example: Example::MixedLayers,
    mesh: MeshKind::Uniform,
    k: 3,
    n: N5,
    rows: &[
        (
            1e0,
            &[1.66e-04, 4.24e-05, 1.07e-05, 2.67e-06, 6.67e-07],
            &[1.97, 1.99, 2.00, 2.00],
        ),
        (
            1e-1,
            &[6.48e-03, 1.82e-03, 4.72e-04, 1.19e-04, 2.99e-05],
            &[1.83, 1.94, 1.99, 2.00],
        ),
        (
            1e-2,
            &[6.96e-02, 3.70e-02, 1.44e-02, 4.71e-03, 1.35e-03],
            &[0.91, 1.36, 1.62, 1.80],
        ),
        (
            1e-3,
            &[2.22e-02, 2.88e-02, 3.12e-02, 2.60e-02, 1.56e-02],
            &[-0.37, -0.12, 0.26, 0.74],
        ),
        (
            1e-4,
            &[2.35e-03, 3.30e-03, 4.63e-03, 6.41e-03, 8.54e-03],
            &[-0.49, -0.49, -0.47, -0.41],
        ),
        (
            1e-5,
            &[2.37e-04, 3.34e-04, 4.72e-04, 6.66e-04, 9.38e-04],
            &[-0.49, -0.50, -0.50, -0.49],
        ),
        (
            1e-6,
            &[2.85e-05, 3.35e-05, 4.73e-05, 6.69e-05, 9.45e-05],
            &[-0.23, -0.50, -0.50, -0.50],
        ),
        (
            1e-7,
            &[1.45e-05, 3.62e-06, 4.73e-06, 6.69e-06, 9.46e-06],
            &[2.00, -0.39, -0.50, -0.50],
        ),
    ],
};

/// Example 2, Shishkin, k = 4.
pub const EX2_SHISHKIN_K4: ReferenceTable = ReferenceTable {
    example: Example::MixedLayers,
    mesh: MeshKind::Shishkin,
    k: 4,
    n: N4,
    rows: &[
        (
            1e0,
            &[3.84e-06, 4.86e-07, 6.09e-08, 7.62e-09],
            &[2.98, 3.00, 3.00],
        ),
        (
            1e-1,
            &[6.93e-04, 9.45e-05, 1.21e-05, 1.52e-06],
            &[2.87, 2.97, 2.99],
        ),
        (
            1e-2,
            &[1.09e-02, 4.60e-03, 1.48e-03, 3.79e-04],
            &[1.25, 1.63, 1.97],
        ),
        (
            1e-3,
            &[3.57e-03, 1.49e-03, 4.79e-04, 1.22e-04],
            &[1.26, 1.64, 1.97],
        ),
        (
            1e-4,
            &[1.13e-03, 4.74e-04, 1.52e-04, 3.87e-05],
            &[1.26, 1.64, 1.97],
        ),
        (
            1e-5,
            &[3.58e-04, 1.50e-04, 4.81e-05, 1.22e-05],
            &[1.26, 1.64, 1.97],
        ),
        (
            1e-6,
            &[1.14e-04, 4.74e-05, 2.53e-05, 3.90e-06],
            &[1.26, 0.90, 2.70],
        ),
    ],
};

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn case(table: &ReferenceTable, eps: f64, n: usize) -> CaseConfig {
    CaseConfig::new(table.example, table.mesh, table.k, eps, n)
}

/// Memoized `run_case` keyed on the case label, so criteria sharing a run
/// solve it once.
#[derive(Default)]
pub struct RunCache {
    runs: RefCell<HashMap<String, CaseOutput>>,
}

impl RunCache {
    pub fn get(&self, case: &CaseConfig) -> CaseOutput {
        let key = format!("{} {:?} {:?}", case.label(), case.solver, case.condense);
        if let Some(out) = self.runs.borrow().get(&key) {
            return out.clone();
        }
        let out = run_case(case).unwrap_or_else(|e| panic!("{e}"));
        self.runs.borrow_mut().insert(key, out.clone());
        out
    }

    pub fn error(&self, case: &CaseConfig) -> f64 {
        self.get(case).record.error
    }

    pub fn len(&self) -> usize {
        self.runs.borrow().len()
    }

    pub fn outputs(&self) -> Vec<CaseOutput> {
        self.runs.borrow().values().cloned().collect()
    }
}
