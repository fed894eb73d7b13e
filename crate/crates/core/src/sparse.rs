//! Compressed sparse row matrices for constant structural operators.

use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// explicit zeros are kept, so the pattern is exactly what was supplied.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::Shape {
                    op: "sparse triplet",
                    left: (rows, cols),
                    right: (r, c),
                });
            }
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut entries in per_row {
            entries.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in entries {
                if last == Some(c) {
                    *values.last_mut().expect("previous entry") += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense matrix.
    pub fn from_dense(m: &Matrix) -> Self {
        let triplets = (0..m.rows()).flat_map(|i| {
            m.row(i)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(move |(j, &v)| (i, j, v))
        });
        Self::from_triplets(m.rows(), m.cols(), triplets).expect("indices come from the matrix")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0))).expect("diagonal is in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs stored in row `i`.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = (0..self.rows).flat_map(|i| self.row_entries(i).map(move |(j, v)| (j, i, v)));
        Self::from_triplets(self.cols, self.rows, triplets).expect("transpose stays in range")
    }

    /// `self · dense`, traversing only stored entries.
    pub fn mul_dense(&self, dense: &Matrix) -> Result<Matrix> {
        if self.cols != dense.rows() {
            return Err(Error::Shape {
                op: "sparse matmul",
                left: self.shape(),
                right: dense.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, dense.cols());
        for i in 0..self.rows {
            for (k, v) in self.row_entries(i) {
                if v == 0.0 {
                    continue;
                }
                let src = dense.row(k);
                for (o, &s) in out.row_mut(i).iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · dense` without building the transpose.
    pub fn t_mul_dense(&self, dense: &Matrix) -> Result<Matrix> {
        if self.rows != dense.rows() {
            return Err(Error::Shape {
                op: "sparse transposed matmul",
                left: (self.cols, self.rows),
                right: dense.shape(),
            });
        }
        let mut out = Matrix::zeros(self.cols, dense.cols());
        for i in 0..self.rows {
            let src = dense.row(i);
            for (k, v) in self.row_entries(i) {
                if v == 0.0 {
                    continue;
                }
                for (o, &s) in out.row_mut(k).iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let t = self.transpose();
        self.to_dense().max_abs_diff(&t.to_dense()) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rng;

    #[test]
    fn duplicates_are_summed() {
        let s = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (0, 1, 2.5), (1, 0, -1.0)]).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.to_dense(), Matrix::from_rows(&[[0.0, 3.5], [-1.0, 0.0]]));
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, [(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense_oracle() {
        let mut rng = Rng::new(11);
        let mut triplets = Vec::new();
        for i in 0..8 {
            for j in 0..6 {
                if rng.uniform() < 0.2 {
                    triplets.push((i, j, rng.normal()));
                }
            }
        }
        let s = SparseMatrix::from_triplets(8, 6, triplets).unwrap();
        let x = Matrix::from_fn(6, 3, |_, _| rng.normal());
        let z = Matrix::from_fn(8, 3, |_, _| rng.normal());
        let dense = s.to_dense();
        assert!(s.mul_dense(&x).unwrap().max_abs_diff(&dense.matmul(&x).unwrap()) < 1e-14);
        assert!(s.t_mul_dense(&z).unwrap().max_abs_diff(&dense.t_matmul(&z).unwrap()) < 1e-14);
    }
}
