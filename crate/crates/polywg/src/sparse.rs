//! Minimal CSR matrix: deterministic triplet assembly, matvec for residual
//! checks, and conversion to the factorization backend.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets. Duplicates are summed in their input order
    /// (stable sort), so assembly is bitwise reproducible.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut rows: Vec<usize> = Vec::with_capacity(t.len());
        let mut indices: Vec<usize> = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            if rows.last() == Some(&i) && indices.last() == Some(&j) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(i);
                indices.push(j);
                values.push(v);
            }
        }
        let mut indptr = vec![0usize; n_rows + 1];
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for idx in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[idx] * x[self.indices[idx]];
            }
            y[i] = acc;
        }
        y
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, t)
    }
}

/// Sparse LU via faer. Returns the factorization for repeated solves.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        use faer::sparse::{SparseColMat, Triplet};
        if a.n_rows != a.n_cols {
            return Err(Error::Factorization("matrix not square".into()));
        }
        let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(a.nnz());
        for i in 0..a.n_rows {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                trips.push(Triplet::new(i, j, v));
            }
        }
        let mat = SparseColMat::try_new_from_triplets(a.n_rows, a.n_cols, &trips)
            .map_err(|e| Error::Factorization(format!("building sparse matrix: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Factorization(format!("sparse LU: {e:?}")))?;
        Ok(Self { lu, n: a.n_rows })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::Solve;
        let mut m = faer::Mat::<f64>::zeros(self.n, 1);
        for (i, &v) in rhs.iter().enumerate() {
            m[(i, 0)] = v;
        }
        self.lu.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_assembly_accumulates() {
        let t = vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (0, 2, 1.0), (2, 1, 5.0)];
        let m = CsrMatrix::from_triplets(3, 3, t);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 1), 2.0);
        assert_eq!(m.get(2, 1), 5.0);
        assert_eq!(m.get(2, 2), 0.0);
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn matvec_matches_dense() {
        let t = vec![(0, 1, 2.0), (1, 0, -1.0), (1, 2, 4.0), (2, 2, 3.0)];
        let m = CsrMatrix::from_triplets(3, 3, t);
        let x = [1.0, 2.0, 3.0];
        let y = m.matvec(&x);
        assert_eq!(y, vec![4.0, 11.0, 9.0]);
        let d = m.to_dense();
        let xd = nalgebra::DVector::from_column_slice(&x);
        let yd = d * xd;
        for i in 0..3 {
            assert_eq!(y[i], yd[i]);
        }
    }

    #[test]
    fn sparse_lu_solves() {
        // small SPD-ish system
        let t = vec![
            (0, 0, 4.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 1, 3.0),
            (2, 2, 2.0),
            (1, 2, 0.5),
            (2, 1, 0.5),
        ];
        let m = CsrMatrix::from_triplets(3, 3, t);
        let lu = SparseLu::factor(&m).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = m.matvec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }
}
