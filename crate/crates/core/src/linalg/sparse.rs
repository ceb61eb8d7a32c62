use super::matrix::{ComplexMatrix, C64, ZERO};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    /// Keeps the entries of `m` with modulus above `threshold`.
    pub fn from_dense(m: &ComplexMatrix, threshold: f64) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..rows {
            for (j, &z) in m.row(i).iter().enumerate() {
                if z.norm() > threshold {
                    indices.push(j);
                    values.push(z);
                }
            }
            indptr.push(indices.len());
        }
        Csr { rows, cols, indptr, indices, values }
    }

    /// From `(row, col, value)` triplets sorted by row, then column, without duplicates.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, C64)]) -> Self {
        let mut indptr = vec![0usize; rows + 1];
        for &(i, _, _) in triplets {
            indptr[i + 1] += 1;
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Csr {
            rows,
            cols,
            indptr,
            indices: triplets.iter().map(|t| t.1).collect(),
            values: triplets.iter().map(|t| t.2).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(row, col, value)` for every stored entry, row by row.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.values[p]))
        })
    }

    /// `out = M_t v` where stored entry `p` is multiplied by `e^{−i θ_p t}`.
    pub fn phased_matvec_into(&self, theta: &[f64], t: f64, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(theta.len(), self.values.len());
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.indptr[i]..self.indptr[i + 1] {
                let x = self.values[p] * v[self.indices[p]];
                acc += if theta[p] == 0.0 { x } else { x * C64::from_polar(1.0, -theta[p] * t) };
            }
            *o = acc;
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec_into(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[p] * v[self.indices[p]];
            }
            *o = acc;
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[p])] = self.values[p];
            }
        }
        m
    }
}
