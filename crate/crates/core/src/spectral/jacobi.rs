//! Cyclic Jacobi eigenvalue iteration for dense real symmetric matrices.

use crate::error::{Error, Result};

/// Sweep cap before reporting [`Error::ConvergenceFailure`].
pub const MAX_SWEEPS: usize = 50;

/// Eigenvalues of a symmetric matrix and the number of sweeps used.
#[derive(Clone, Debug)]
pub struct JacobiResult {
    pub eigenvalues: Vec<f64>,
    pub sweeps: usize,
    pub off_norm: f64,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Diagonalize the row-major symmetric `n x n` matrix `a` in place until the
/// off-diagonal Frobenius norm drops below `tol`. Eigenvalues are returned
/// unsorted, in diagonal order.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize, tol: f64) -> Result<JacobiResult> {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut off = off_diagonal_norm(&a, n);
    let mut sweeps = 0;
    while off >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { sweeps, off_norm: off });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- A P (columns p, q)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                // A <- P^T A (rows p, q)
                let (head, tail) = a.split_at_mut(q * n);
                let row_p = &mut head[p * n..(p + 1) * n];
                let row_q = &mut tail[..n];
                for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a, n);
    }
    let eigenvalues = (0..n).map(|i| a[i * n + i]).collect();
    Ok(JacobiResult { eigenvalues, sweeps, off_norm: off })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    #[test]
    fn two_by_two() {
        // [[2, 1], [1, 2]] has eigenvalues 3 and 1
        let r = jacobi_eigenvalues(vec![2.0, 1.0, 1.0, 2.0], 2, 1e-12).unwrap();
        let ev = sorted(r.eigenvalues);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_graph_spectrum() {
        // Path on n vertices: eigenvalues 2 cos(pi j / (n + 1)).
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n - 1 {
            a[i * n + i + 1] = 1.0;
            a[(i + 1) * n + i] = 1.0;
        }
        let ev = sorted(jacobi_eigenvalues(a, n, 1e-12).unwrap().eigenvalues);
        for (j, got) in ev.iter().enumerate() {
            let want = 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn diagonal_needs_no_sweeps() {
        let r = jacobi_eigenvalues(vec![5.0, 0.0, 0.0, -1.0], 2, 1e-12).unwrap();
        assert_eq!(r.sweeps, 0);
        assert_eq!(r.eigenvalues, vec![5.0, -1.0]);
    }

    #[test]
    fn unreachable_tolerance_fails() {
        let a = vec![1.0, 2.0, 3.0, 2.0, 5.0, 7.0, 3.0, 7.0, 1.0];
        assert!(matches!(jacobi_eigenvalues(a, 3, 0.0), Err(Error::ConvergenceFailure { .. })));
    }
}
