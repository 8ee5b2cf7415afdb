//! Dense row-major matrices and the handful of kernels the tape needs.
//!
//! Every kernel accumulates each output element in a fixed left-to-right
//! order over the contraction index, so results are bit-reproducible. The
//! inner loops run over independent output elements and stay auto-vectorizable.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transposed(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Largest row-wise L2 norm; cheap upper-bound diagnostics only.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// out = a (m×k) · b (k×n), row-major, out zeroed first.
pub fn matmul_nn(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, out: &mut [f64]) {
    out.fill(0.0);
    matmul_nn_acc(a, m, k, b, n, out);
}

/// out += a (m×k) · b (k×n).
pub fn matmul_nn_acc(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (l, &ail) in arow.iter().enumerate() {
            let brow = &b[l * n..(l + 1) * n];
            for j in 0..n {
                orow[j] += ail * brow[j];
            }
        }
    }
}

/// out = aᵀ (m×k from a: k×m) · b (k×n), i.e. out[i][j] = Σ_l a[l][i]·b[l][j].
pub fn matmul_tn(a: &[f64], k: usize, m: usize, b: &[f64], n: usize, out: &mut [f64]) {
    out.fill(0.0);
    matmul_tn_acc(a, k, m, b, n, out);
}

/// out += aᵀ · b with a stored k×m.
pub fn matmul_tn_acc(a: &[f64], k: usize, m: usize, b: &[f64], n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for l in 0..k {
        let arow = &a[l * m..(l + 1) * m];
        let brow = &b[l * n..(l + 1) * n];
        for (i, &ali) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += ali * brow[j];
            }
        }
    }
}

/// y = W·x for a row-major W (rows×cols).
pub fn matvec(w: &Matrix, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), w.cols);
    (0..w.rows).map(|i| dot(w.row(i), x)).collect()
}

/// y = Wᵀ·x.
pub fn matvec_t(w: &Matrix, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), w.rows);
    let mut out = vec![0.0; w.cols];
    for i in 0..w.rows {
        let xi = x[i];
        let row = w.row(i);
        for j in 0..w.cols {
            out[j] += xi * row[j];
        }
    }
    out
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_nn_small() {
        // [1 2; 3 4] · [5 6; 7 8] = [19 22; 43 50]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut out = [0.0; 4];
        matmul_nn(&a, 2, 2, &b, 2, &mut out);
        assert_eq!(out, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_tn_matches_explicit_transpose() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]); // 2×3
        let b = [1.0, -1.0, 0.5, 2.0]; // 2×2
        let mut out = vec![0.0; 3 * 2];
        matmul_tn(&a.data, 2, 3, &b, 2, &mut out);
        let at = a.transposed();
        let mut expect = vec![0.0; 3 * 2];
        matmul_nn(&at.data, 3, 2, &b, 2, &mut expect);
        assert_eq!(out, expect);
    }

    /// Perf canary, not a correctness test: run explicitly with
    /// `cargo test -p pcd-core --release bench_matmul -- --ignored --nocapture`.
    #[test]
    #[ignore]
    fn bench_matmul() {
        let (m, k, n) = (64, 128, 128);
        let a: Vec<f64> = (0..m * k).map(|i| (i % 17) as f64 * 0.1).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i % 13) as f64 * 0.1).collect();
        let mut out = vec![0.0; m * n];
        let reps = 2000;
        let start = std::time::Instant::now();
        for _ in 0..reps {
            matmul_nn(&a, m, k, &b, n, &mut out);
            std::hint::black_box(&out);
        }
        let secs = start.elapsed().as_secs_f64();
        let gflops = (2.0 * (m * k * n * reps) as f64) / secs / 1e9;
        println!("matmul_nn {m}x{k}x{n}: {gflops:.2} GFLOP/s");

        let start = std::time::Instant::now();
        for _ in 0..reps {
            matmul_tn(&a, k, m, &b, n, &mut out);
            std::hint::black_box(&out);
        }
        let secs = start.elapsed().as_secs_f64();
        let gflops = (2.0 * (m * k * n * reps) as f64) / secs / 1e9;
        println!("matmul_tn {k}x{m}x{n}: {gflops:.2} GFLOP/s");
    }

    #[test]
    fn matvec_roundtrip() {
        let w = Matrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 3.0], vec![1.0, 1.0]]);
        assert_eq!(matvec(&w, &[1.0, 2.0]), vec![2.0, 6.0, 3.0]);
        assert_eq!(matvec_t(&w, &[1.0, 1.0, 1.0]), vec![3.0, 4.0]);
    }
}
