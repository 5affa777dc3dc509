//! Sparse matrix support: CSR storage with deterministic assembly.
//!
//! Assembly goes through [`CooBuilder`], which sorts triplets by (row, col)
//! and merges duplicates in a fixed order, so repeated builds from the same
//! input produce bit-identical matrices. An integer variant backs the exact
//! chain-complex checks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Triplet accumulator for building a [`CsrMatrix`].
#[derive(Clone, Debug)]
pub struct CooBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl CooBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.entries.push((row as u32, col as u32, value));
    }

    /// Sort by (row, col) and merge duplicates by summation in sorted order.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[r as usize + 1] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for i in 0..self.rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix over `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut b = CooBuilder::with_capacity(n, n, n);
        for (i, &v) in diag.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.rows.min(self.cols);
        let mut d = vec![0.0; n];
        for (i, di) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c as usize == i {
                    *di += v;
                }
            }
        }
        d
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = DVector::zeros(self.rows);
        self.mul_slice_into(x.as_slice(), y.as_mut_slice());
        y
    }

    fn mul_slice_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.rows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            y[i] = acc;
        }
    }

    /// Sparse times dense, computed per column so the result is
    /// deterministic under any thread count.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.cols);
        let mut y = DMatrix::zeros(self.rows, x.ncols());
        let xs = x.as_slice();
        y.as_mut_slice()
            .par_chunks_mut(self.rows)
            .enumerate()
            .for_each(|(j, ycol)| {
                let xcol = &xs[j * self.cols..(j + 1) * self.cols];
                self.mul_slice_into(xcol, ycol);
            });
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut row_ptr = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            row_ptr[c as usize + 1] += 1;
        }
        for i in 0..self.cols {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = row_ptr.clone();
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k] as usize;
                let dst = next[c];
                col_idx[dst] = i as u32;
                values[dst] = self.values[k];
                next[c] += 1;
            }
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self * other` with per-row sorted accumulation.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows);
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0f64; other.cols];
        let mut hit = vec![false; other.cols];
        let mut touched: Vec<u32> = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let j = self.col_idx[k] as usize;
                for l in other.row_ptr[j]..other.row_ptr[j + 1] {
                    let c = other.col_idx[l] as usize;
                    if !hit[c] {
                        hit[c] = true;
                        touched.push(c as u32);
                    }
                    acc[c] += a * other.values[l];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                col_idx.push(c);
                values.push(acc[c as usize]);
                acc[c as usize] = 0.0;
                hit[c as usize] = false;
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix {
            rows: self.rows,
            cols: other.cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let mut b = CooBuilder::with_capacity(self.rows, self.cols, self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.rows {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    b.push(i, m.col_idx[k] as usize, m.values[k]);
                }
            }
        }
        b.build()
    }

    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.rows);
        let mut out = self.clone();
        for i in 0..self.rows {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= d[i];
            }
        }
        out
    }

    pub fn scale_cols(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&self.col_idx) {
            *v *= d[c as usize];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A - A^T|` entry.
    pub fn symmetry_gap(&self) -> f64 {
        let t = self.transpose();
        let mut gap = 0.0f64;
        for i in 0..self.rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ca.len() || b < cb.len() {
                let ka = ca.get(a).copied().unwrap_or(u32::MAX);
                let kb = cb.get(b).copied().unwrap_or(u32::MAX);
                if ka == kb {
                    gap = gap.max((va[a] - vb[b]).abs());
                    a += 1;
                    b += 1;
                } else if ka < kb {
                    gap = gap.max(va[a].abs());
                    a += 1;
                } else {
                    gap = gap.max(vb[b].abs());
                    b += 1;
                }
            }
        }
        gap
    }

    pub fn symmetrized(&self) -> CsrMatrix {
        let mut out = self.add(&self.transpose());
        for v in &mut out.values {
            *v *= 0.5;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k] as usize)] += self.values[k];
            }
        }
        m
    }

    /// Coordinate text export: header, size line, then 1-based `row col value` triplets.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.nnz());
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let _ = writeln!(
                    s,
                    "{} {} {}",
                    i + 1,
                    self.col_idx[k] as usize + 1,
                    self.values[k]
                );
            }
        }
        s
    }
}

/// Integer CSR, just enough for exact boundary-composition checks.
#[derive(Clone, Debug, PartialEq)]
pub struct IntCsr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<i64>,
}

impl IntCsr {
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(u32, u32, i64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<i64> = Vec::with_capacity(entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[r as usize + 1] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matmul(&self, other: &IntCsr) -> IntCsr {
        assert_eq!(self.cols, other.rows);
        let mut entries = Vec::new();
        let mut acc = vec![0i64; other.cols];
        let mut hit = vec![false; other.cols];
        let mut touched: Vec<u32> = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let j = self.col_idx[k] as usize;
                for l in other.row_ptr[j]..other.row_ptr[j + 1] {
                    let c = other.col_idx[l] as usize;
                    if !hit[c] {
                        hit[c] = true;
                        touched.push(c as u32);
                    }
                    acc[c] += a * other.values[l];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c as usize] != 0 {
                    entries.push((i as u32, c, acc[c as usize]));
                }
                acc[c as usize] = 0;
                hit[c as usize] = false;
            }
        }
        IntCsr::from_triplets(self.rows, other.cols, entries)
    }

    /// True when every stored entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    pub fn max_abs(&self) -> i64 {
        self.values.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_merges_duplicates_in_order() {
        let mut b = CooBuilder::new(2, 2);
        b.push(1, 0, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 0.5);
        let m = b.build();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row(1), (&[0u32][..], &[1.5][..]));
    }

    #[test]
    fn matmul_matches_dense() {
        let mut a = CooBuilder::new(3, 4);
        a.push(0, 1, 2.0);
        a.push(1, 0, -1.0);
        a.push(1, 3, 4.0);
        a.push(2, 2, 1.5);
        let a = a.build();
        let mut b = CooBuilder::new(4, 2);
        b.push(0, 0, 1.0);
        b.push(1, 1, -2.0);
        b.push(2, 0, 3.0);
        b.push(3, 1, 0.5);
        let b = b.build();
        let c = a.matmul(&b);
        let dense = a.to_dense() * b.to_dense();
        assert_eq!(c.to_dense(), dense);
    }

    #[test]
    fn transpose_roundtrip() {
        let mut a = CooBuilder::new(3, 5);
        a.push(2, 4, 1.0);
        a.push(0, 0, -2.0);
        a.push(1, 2, 3.0);
        let a = a.build();
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn symmetry_gap_detects_asymmetry() {
        let mut a = CooBuilder::new(2, 2);
        a.push(0, 1, 1.0);
        a.push(1, 0, 1.25);
        let a = a.build();
        assert!((a.symmetry_gap() - 0.25).abs() < 1e-15);
        assert!(a.symmetrized().symmetry_gap() == 0.0);
    }

    #[test]
    fn mul_dense_matches_per_vector() {
        let mut a = CooBuilder::new(4, 4);
        for i in 0..4 {
            a.push(i, i, 2.0);
            a.push(i, (i + 1) % 4, -1.0);
        }
        let a = a.build();
        let x = DMatrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64);
        let y = a.mul_dense(&x);
        for j in 0..3 {
            let xj = DVector::from_column_slice(x.column(j).as_slice());
            assert_eq!(y.column(j), a.mul_vec(&xj).column(0));
        }
    }

    #[test]
    fn matrix_market_layout() {
        let mut a = CooBuilder::new(2, 3);
        a.push(1, 2, -0.5);
        a.push(0, 0, 1.0);
        let text = a.build().to_matrix_market();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 3 2");
        assert_eq!(lines[2], "1 1 1");
        assert_eq!(lines[3], "2 3 -0.5");
    }

    #[test]
    fn int_matmul_exact() {
        let a = IntCsr::from_triplets(2, 2, vec![(0, 0, 1), (0, 1, -1), (1, 0, 2)]);
        let b = IntCsr::from_triplets(2, 1, vec![(0, 0, 3), (1, 0, 3)]);
        let c = a.matmul(&b);
        assert_eq!(c.max_abs(), 6);
        assert!(!c.is_zero());
    }
}
