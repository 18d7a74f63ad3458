//! Compressed sparse row storage for the global system.

use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    /// Column indices, sorted within each row.
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero-valued matrix from sorted, deduplicated per-row column
    /// lists.
    pub fn from_pattern(ncols: usize, rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Dense row-major input; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let pattern: Vec<Vec<usize>> = rows
            .iter()
            .map(|r| (0..ncols).filter(|&c| r[c] != 0.0).collect())
            .collect();
        let mut m = Self::from_pattern(ncols, &pattern);
        for (i, r) in rows.iter().enumerate() {
            for p in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.values[p] = r[m.col_idx[p]];
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Storage position of entry `(r, c)`, if it is in the pattern.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.col_idx[start..self.row_ptr[r + 1]]
            .binary_search(&c)
            .ok()
            .map(|p| start + p)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |p| self.values[p])
    }

    /// Adds `v` to entry `(r, c)`; panics if the entry is outside the pattern.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let p = self
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) outside the sparsity pattern"));
        self.values[p] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.get(r, r)).collect()
    }

    /// Exact (bitwise) equality with the transpose, pattern included.
    pub fn is_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        (0..self.nrows).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals)
                .all(|(&c, &v)| self.position(c, r).is_some_and(|p| self.values[p] == v))
        })
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                col_idx[next[c]] = r;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Writes the lower triangle in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        let lower: usize = (0..self.nrows)
            .map(|r| self.row(r).0.iter().filter(|&&c| c <= r).count())
            .sum();
        writeln!(out, "{} {} {}", self.nrows, self.ncols, lower)?;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, v) in cols.iter().zip(vals) {
                if c <= r {
                    writeln!(out, "{} {} {:.17e}", r + 1, c + 1, v)?;
                }
            }
        }
        Ok(())
    }
}

/// Running sum kept as an unevaluated pair `hi + lo`, accurate to about
/// twice the working precision.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TwoSum {
    hi: f64,
    lo: f64,
}

impl TwoSum {
    pub(crate) fn new(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    pub(crate) fn add(&mut self, v: f64) {
        let s = self.hi + v;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (v - bp);
        self.hi = s;
        self.lo += err;
    }

    pub(crate) fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let perr = a.mul_add(b, -p);
        self.add(p);
        self.lo += perr;
    }

    pub(crate) fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_keeps_cancelled_digits() {
        let mut acc = TwoSum::new(1.0);
        acc.add(1e-20);
        acc.add(-1.0);
        assert_eq!(acc.value(), 1e-20);
        let mut acc = TwoSum::new(0.0);
        let a = 1.0 + f64::EPSILON;
        acc.add_product(a, a);
        acc.add(-1.0);
        acc.add(-2.0 * f64::EPSILON);
        assert_eq!(acc.value(), f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn small_matrix_operations() {
        let m = CsrMatrix::from_dense(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 2.0],
            vec![0.0, 2.0, 5.0],
        ]);
        assert_eq!(m.nnz(), 7);
        assert!(m.is_symmetric());
        assert_eq!(m.transpose(), m);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![5.0, 6.0, 7.0]);
        assert_eq!(m.diagonal(), vec![4.0, 3.0, 5.0]);
        assert_eq!(m.get(0, 2), 0.0);

        let mut out = Vec::new();
        m.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("%%MatrixMarket matrix coordinate real symmetric")
        );
        assert_eq!(lines.next(), Some("3 3 5"));
        assert_eq!(lines.count(), 5);
    }

    #[test]
    fn asymmetric_values_are_detected() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0 + 1e-15, 1.0]]);
        assert!(!m.is_symmetric());
        let m = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(!m.is_symmetric());
    }
}
