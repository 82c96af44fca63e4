//! Coordinate triplets and compressed sparse rows.
//!
//! Compression is canonical: entries are stably sorted by `(row, col)` and
//! duplicates summed in their original emission order, so two triplet lists
//! holding the same entries in the same order compress to bitwise identical
//! matrices.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, val));
    }

    /// Adds `scale * other` with its origin shifted to `(row_off, col_off)`.
    pub fn add_block(&mut self, other: &Triplets, row_off: usize, col_off: usize, scale: f64) {
        debug_assert!(row_off + other.nrows <= self.nrows && col_off + other.ncols <= self.ncols);
        self.entries.extend(
            other
                .entries
                .iter()
                .map(|&(r, c, v)| (r + row_off, c + col_off, scale * v)),
        );
    }

    /// Like [`Triplets::add_block`] with the block transposed.
    pub fn add_block_transposed(&mut self, other: &Triplets, row_off: usize, col_off: usize, scale: f64) {
        debug_assert!(row_off + other.ncols <= self.nrows && col_off + other.nrows <= self.ncols);
        self.entries.extend(
            other
                .entries
                .iter()
                .map(|&(r, c, v)| (c + row_off, r + col_off, scale * v)),
        );
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(t: &Triplets) -> Self {
        let mut order: Vec<usize> = (0..t.entries.len()).collect();
        order.sort_by_key(|&i| (t.entries[i].0, t.entries[i].1));
        let mut indptr = vec![0; t.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last = None;
        for i in order {
            let (r, c, v) = t.entries[i];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..t.nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows: t.nrows,
            ncols: t.ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(c, r, v);
            }
        }
        t.to_csr()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Sparse direct factorization with partial pivoting.
    pub fn lu(&self) -> Result<SparseLu> {
        use faer::sparse::{SparseColMat, Triplet};
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                self.nrows, self.ncols
            )));
        }
        let mut entries = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            entries.extend(self.row(r).map(|(c, v)| Triplet::new(r, c, v)));
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.nrows, self.ncols, &entries)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
            other => Error::Solver(format!("{other:?}")),
        })?;
        Ok(SparseLu { lu, n: self.nrows })
    }

    /// Coordinate text dump, one `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let _ = writeln!(out, "{r} {c} {v:.17e}");
            }
        }
        out
    }
}

pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    /// Solves `A x = b`. Numerical breakdown shows up as non-finite entries
    /// and is reported as a singular factorization at the first such index.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        use faer::prelude::Solve;
        assert_eq!(b.len(), self.n);
        let rhs = faer::Col::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if let Some(pivot) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular { pivot });
        }
        Ok(out)
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compression_sums_duplicates_in_order() {
        let mut t = Triplets::new(2, 3);
        t.push(1, 2, 1.0);
        t.push(0, 1, 2.0);
        t.push(1, 2, 0.5);
        t.push(1, 0, -1.0);
        let a = t.to_csr();
        assert_eq!(a.indptr, vec![0, 1, 3]);
        assert_eq!(a.indices, vec![1, 0, 2]);
        assert_eq!(a.values, vec![2.0, -1.0, 1.5]);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 2.0]), vec![2.0, 2.0]);
        assert_eq!(a.transpose().get(2, 1), 1.5);
    }

    #[test]
    fn blocks_and_symmetry() {
        let mut b = Triplets::new(1, 2);
        b.push(0, 0, 3.0);
        b.push(0, 1, 4.0);
        let mut t = Triplets::new(3, 3);
        t.add_block(&b, 2, 0, 1.0);
        t.add_block_transposed(&b, 0, 2, 1.0);
        let a = t.to_csr();
        assert_eq!(a.symmetry_defect(), 0.0);
        assert_eq!(a.get(1, 2), 4.0);
        t.add_block(&b, 2, 0, -2.0);
        assert_eq!(t.to_csr().symmetry_defect(), 6.0 + 2.0);
    }

    #[test]
    fn lu_solves_small_spd_system() {
        let mut t = Triplets::new(2, 2);
        for (r, c, v) in [(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)] {
            t.push(r, c, v);
        }
        let x = t.to_csr().lu().unwrap().solve(&[1.0, 2.0]).unwrap();
        // Cramer's rule: det = 11
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn structurally_singular_reports_pivot() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(1, 1, 1.0);
        t.push(2, 1, 1.0);
        let err = t.to_csr().lu().and_then(|lu| lu.solve(&[1.0, 1.0, 1.0]));
        assert!(matches!(err, Err(Error::Singular { .. })), "{err:?}");
    }

    #[test]
    fn coordinate_dump() {
        let mut t = Triplets::new(1, 1);
        t.push(0, 0, 0.5);
        let s = t.to_csr().to_coordinate_text();
        assert!(s.starts_with("1 1 1\n0 0 5.0"));
    }
}
