//! Independent numerical oracles: central finite differences for gradient
//! checks and a one-sided Jacobi SVD for spectral-norm checks. Both are
//! deliberately written against different algorithms than the code under
//! test.

use crate::linalg::Matrix;

/// Central-difference gradient of a scalar function.
pub fn finite_diff_gradient<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let fp = f(&probe);
        probe[i] = xi - h;
        let fm = f(&probe);
        probe[i] = xi;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Worst relative disagreement between two gradients. Components are
/// compared relative to max(|a|, |b|, floor) so that near-zero entries are
/// judged on an absolute scale.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let mut worst = 0.0f64;
    for (&a, &n) in analytic.iter().zip(numeric) {
        let denom = a.abs().max(n.abs()).max(floor);
        worst = worst.max((a - n).abs() / denom);
    }
    worst
}

/// Singular values of a dense matrix by one-sided Jacobi rotations, sorted
/// descending. Quadratic convergence; plenty for the small matrices the
/// verification suites feed it.
pub fn jacobi_singular_values(m: &Matrix) -> Vec<f64> {
    // One-sided Jacobi orthogonalizes columns, so work on the orientation
    // with fewer columns.
    let a = if m.rows >= m.cols {
        m.clone()
    } else {
        m.transposed()
    };
    let (rows, cols) = (a.rows, a.cols);
    let mut col: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a.get(i, j)).collect())
        .collect();

    let tol = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let (mut aii, mut ajj, mut aij) = (0.0, 0.0, 0.0);
                for k in 0..rows {
                    aii += col[i][k] * col[i][k];
                    ajj += col[j][k] * col[j][k];
                    aij += col[i][k] * col[j][k];
                }
                if aij.abs() <= tol * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let theta = 0.5 * (2.0 * aij).atan2(aii - ajj);
                let (c, s) = (theta.cos(), theta.sin());
                for k in 0..rows {
                    let vi = col[i][k];
                    let vj = col[j][k];
                    col[i][k] = c * vi + s * vj;
                    col[j][k] = -s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = col
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_diff_on_quadratic() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let g = finite_diff_gradient(f, &[2.0, 5.0], 1e-6);
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn jacobi_on_diagonal() {
        let m = Matrix::from_rows(vec![vec![3.0, 0.0], vec![0.0, -2.0]]);
        let sv = jacobi_singular_values(&m);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_known_factorization() {
        // A = [[3, 1], [1, 3]] has singular values 4 and 2.
        let m = Matrix::from_rows(vec![vec![3.0, 1.0], vec![1.0, 3.0]]);
        let sv = jacobi_singular_values(&m);
        assert!((sv[0] - 4.0).abs() < 1e-12);
        assert!((sv[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_handles_rectangular() {
        // Wide matrix: singular values of [[1,0,0],[0,2,0]] are 2, 1.
        let m = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0]]);
        let sv = jacobi_singular_values(&m);
        assert!((sv[0] - 2.0).abs() < 1e-12);
        assert!((sv[1] - 1.0).abs() < 1e-12);
    }
}
