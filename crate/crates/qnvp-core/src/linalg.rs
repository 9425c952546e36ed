//! Small dense linear-algebra helpers.
//!
//! The systems solved here are tiny (velocity-stencil eigenproblems, Gram
//! matrices for the degeneracy certificate), so plain LU with partial
//! pivoting and cyclic Jacobi sweeps are plenty. Everything is written
//! against `Array2<f64>` directly to avoid pulling a LAPACK binding into the
//! build.

use crate::error::{Error, Result};
use ndarray::Array2;

/// LU factorization with partial pivoting, PA = LU.
pub struct LuFactors {
    lu: Array2<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(mut a: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Linalg(format!(
                "lu needs a square matrix, got {} x {}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[(col, col)].abs();
            for row in (col + 1)..n {
                let v = a[(row, col)].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Linalg(format!("singular pivot in column {col}")));
            }
            if pivot != col {
                perm.swap(col, pivot);
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
            }
            let d = a[(col, col)];
            for row in (col + 1)..n {
                let m = a[(row, col)] / d;
                a[(row, col)] = m;
                for j in (col + 1)..n {
                    a[(row, j)] -= m * a[(col, j)];
                }
            }
        }
        Ok(LuFactors { lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution with unit lower triangle
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solve A x = b for one right-hand side.
pub fn solve_dense(a: Array2<f64>, b: &[f64]) -> Result<Vec<f64>> {
    Ok(LuFactors::new(a)?.solve(b))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order with matching eigenvector columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Linalg("symmetric_eigen needs a square matrix".into()));
    }
    let asym = a
        .iter()
        .zip(a.t().iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if asym > 1e-10 * scale {
        return Err(Error::Linalg(format!(
            "matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    let mut m = a.clone();
    let mut vecs = Array2::<f64>::eye(n);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("finite eigenvalues"));
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut sorted_vecs = Array2::<f64>::zeros((n, n));
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vecs[(r, newc)] = vecs[(r, oldc)];
        }
    }
    Ok((vals, sorted_vecs))
}

/// Smallest singular value of a (possibly rectangular) matrix, computed as
/// sqrt(lambda_min(A^T A)). Column count should be the smaller dimension.
pub fn smallest_singular_value(a: &Array2<f64>) -> Result<f64> {
    let gram = a.t().dot(a);
    let (vals, _) = symmetric_eigen(&gram)?;
    let lam = vals.first().copied().ok_or_else(|| Error::Linalg("empty matrix".into()))?;
    Ok(lam.max(0.0).sqrt())
}

/// Shifted inverse iteration for one eigenpair of a general real matrix,
/// refined with Rayleigh quotients. Returns (eigenvalue, unit eigenvector).
pub fn inverse_iteration(
    a: &Array2<f64>,
    shift: f64,
    v0: &[f64],
    iters: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = a.nrows();
    if a.ncols() != n || v0.len() != n {
        return Err(Error::Linalg("inverse_iteration shape mismatch".into()));
    }
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = LuFactors::new(shifted)?;
    let mut v = v0.to_vec();
    normalize(&mut v)?;
    for _ in 0..iters {
        v = lu.solve(&v);
        normalize(&mut v)?;
    }
    // Rayleigh quotient on the converged vector
    let av = mat_vec(a, &v);
    let lambda: f64 = v.iter().zip(av.iter()).map(|(x, y)| x * y).sum();
    // one extra refinement pass at the improved shift
    let mut refined = a.clone();
    for i in 0..n {
        refined[(i, i)] -= lambda;
    }
    if let Ok(lu2) = LuFactors::new(refined) {
        let w = lu2.solve(&v);
        let mut w = w;
        if normalize(&mut w).is_ok() {
            let aw = mat_vec(a, &w);
            let lam2: f64 = w.iter().zip(aw.iter()).map(|(x, y)| x * y).sum();
            if lam2.is_finite() {
                return Ok((lam2, w));
            }
        }
    }
    Ok((lambda, v))
}

fn mat_vec(a: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..a.ncols() {
            acc += a[(i, j)] * v[j];
        }
        out[i] = acc;
    }
    out
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Linalg("zero or non-finite vector in iteration".into()));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn lu_solves_small_system() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let x = solve_dense(a.clone(), &[3.0, 5.0, 3.0]).unwrap();
        let r: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[(i, j)] * x[j]).sum::<f64>())
            .collect();
        assert!((r[0] - 3.0).abs() < 1e-12);
        assert!((r[1] - 5.0).abs() < 1e-12);
        assert!((r[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lu_rejects_singular_matrix() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(LuFactors::new(a).is_err());
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // A = Q diag(1, 4, 9) Q^T for a hand-picked rotation Q
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let q = array![[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let d = array![[1.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 9.0]];
        let a = q.dot(&d).dot(&q.t());
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 4.0).abs() < 1e-12);
        assert!((vals[2] - 9.0).abs() < 1e-12);
        // residual check A v = lambda v
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[(i, j)] * vecs[(j, k)]).sum();
                assert!((av - vals[k] * vecs[(i, k)]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn smallest_singular_value_of_scaled_rotation() {
        let c = (0.7f64).cos();
        let s = (0.7f64).sin();
        let a = array![[3.0 * c, -3.0 * s], [3.0 * s, 3.0 * c], [0.0, 0.0]];
        let sv = smallest_singular_value(&a).unwrap();
        assert!((sv - 3.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_iteration_finds_inner_eigenpair() {
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        // eigenvalues of this tridiagonal matrix straddle 3; hunt the middle one
        let (lam, v) = inverse_iteration(&a, 3.1, &[1.0, 1.0, 1.0], 30).unwrap();
        let av = mat_vec(&a, &v);
        let resid: f64 = av
            .iter()
            .zip(v.iter())
            .map(|(x, y)| (x - lam * y) * (x - lam * y))
            .sum::<f64>()
            .sqrt();
        assert!(resid < 1e-10, "residual {resid:.3e}, lambda {lam}");
        assert!((2.0..4.0).contains(&lam));
    }
}
