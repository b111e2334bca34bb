//! Compressed-row complex matrices and a Lanczos estimate of the operator
//! norm, for truncations too large for dense storage.

use num_complex::Complex64;

use super::{symmetric_tridiagonal_eigenvalues, ComplexMatrix, C0};

#[derive(Clone, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![C0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[k]] += self.values[k].conj() * yi;
            }
        }
        out
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }

    /// Keeps only the listed columns (in order).
    pub fn restrict_columns(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.cols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = map[self.col_idx[k]];
                if c != usize::MAX {
                    triplets.push((i, c, self.values[k]));
                }
            }
        }
        Self::from_triplets(self.rows, keep.len(), triplets)
    }

    /// Largest singular value by Lanczos on `A*A` with full
    /// reorthogonalisation; deterministic start vector.
    pub fn operator_norm(&self) -> f64 {
        let n = self.cols;
        if n == 0 || self.values.iter().all(|v| *v == C0) {
            return 0.0;
        }
        let max_steps = n.min(400);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_steps);
        let mut alpha = Vec::with_capacity(max_steps);
        let mut beta: Vec<f64> = Vec::with_capacity(max_steps);

        // Start vector with no special alignment to coordinate structure.
        let mut q: Vec<Complex64> = (0..n)
            .map(|i| {
                let t = i as f64;
                Complex64::new(1.0 + 0.37 * (1.3 * t).sin(), 0.21 * (0.7 * t).cos())
            })
            .collect();
        normalize(&mut q);
        let mut previous = f64::NAN;
        for step in 0..max_steps {
            let mut w = self.adjoint_mul_vec(&self.mul_vec(&q));
            let a = dot(&q, &w).re;
            alpha.push(a);
            basis.push(q.clone());
            // Full reorthogonalisation (twice is enough).
            for _ in 0..2 {
                for b in &basis {
                    let proj = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= proj * bi;
                    }
                }
            }
            let norm_w = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let ritz = symmetric_tridiagonal_eigenvalues(&alpha, &beta)
                .expect("tridiagonal eigenvalues")
                .last()
                .copied()
                .unwrap_or(0.0);
            let converged = (ritz - previous).abs() <= 1e-14 * ritz.abs() && step > 4;
            previous = ritz;
            if converged || norm_w <= 1e-13 * ritz.abs().max(1e-300) || step + 1 == max_steps {
                return ritz.max(0.0).sqrt();
            }
            beta.push(norm_w);
            q = w.into_iter().map(|z| z / norm_w).collect();
        }
        previous.max(0.0).sqrt()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}
