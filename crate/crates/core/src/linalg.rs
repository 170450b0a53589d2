//! Small dense kernels: symmetric eigendecomposition and Cholesky solves.

use ndarray::{Array1, Array2};

use crate::{Error, Real, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order;
/// column `j` of `vectors` belongs to `values[j]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// `tol` times the matrix norm. Deterministic: fixed sweep order, no
/// threading.
pub fn symmetric_eigen<T: Real>(a: &Array2<T>, tol: T) -> Result<SymmetricEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut m = a.clone();
    let mut v = Array2::<T>::eye(n);
    let norm = m.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tol = tol.max(T::epsilon() * T::lit(8.0));
    let threshold = tol * norm;
    let two = T::lit(2.0);

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if (two * off).sqrt() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi eigensolver did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // descending, ties by index for determinism
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap().then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<T>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Solves `a x = b` for symmetric positive-definite `a`.
pub fn cholesky_solve<T: Real>(a: &Array2<T>, b: &Array1<T>) -> Option<Array1<T>> {
    let n = a.nrows();
    let mut l = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    let mut y = Array1::<T>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn eigen_of_known_matrix() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let e = symmetric_eigen(&a, 1e-12).unwrap();
        assert_abs_diff_eq!(e.values[0], 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[2], 1.0, epsilon = 1e-12);
        // A v = λ v
        for j in 0..3 {
            let v = e.vectors.column(j);
            let av = a.dot(&v);
            for i in 0..3 {
                assert_abs_diff_eq!(av[i], e.values[j] * v[i], epsilon = 1e-10);
            }
        }
        let vtv = e.vectors.t().dot(&e.vectors);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(vtv[[i, j]], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_in_single_precision() {
        let a = array![[4.0f32, 1.0], [1.0, 3.0]];
        let e = symmetric_eigen(&a, 1e-10).unwrap();
        let expected = 3.5 + (1.25f32).sqrt();
        assert!((e.values[0] - expected).abs() < 1e-5);
    }

    #[test]
    fn cholesky() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let x = cholesky_solve(&a, &array![2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-14);
        assert!(cholesky_solve(&array![[1.0, 2.0], [2.0, 1.0]], &array![1.0, 1.0]).is_none());
    }
}
