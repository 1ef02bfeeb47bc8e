//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// A point or direction in `R^d`.
pub type Vector = DVector<f64>;

/// Returns `v / |v|`, or `None` for a (numerically) zero vector.
pub fn normalized(v: &Vector) -> Option<Vector> {
    let n = v.norm();
    if n > 1e-300 && n.is_finite() {
        Some(v / n)
    } else {
        None
    }
}

/// Standard basis vector `e_i` in `R^dim`.
pub fn basis(dim: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[i] = 1.0;
    v
}

pub fn from_slice(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns. Sweeps
/// until the largest off-diagonal entry is at most `1e-12` times the
/// Frobenius norm (or exactly zero).
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vector, DMatrix<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "symmetric_eigen needs a square matrix");
    let mut a = m.clone();
    // Symmetrize against round-off in the caller.
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = Vector::from_iterator(n, (0..n).map(|i| a[(i, i)]));
    (values, v)
}

/// Largest off-diagonal magnitude of `v^T m v`; used to confirm a Jacobi
/// basis diagonalises `m`.
pub fn off_diagonal_max(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(m[(i, j)].abs());
            }
        }
    }
    off
}

/// `f(M)` for symmetric `M` through its eigen-decomposition.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = symmetric_eigen(m);
    let n = m.nrows();
    let diag = DMatrix::from_diagonal(&Vector::from_iterator(n, values.iter().map(|&x| f(x))));
    &vectors * diag * vectors.transpose()
}

/// Cross product in `R^3`.
pub fn cross3(a: &Vector, b: &Vector) -> Vector {
    Vector::from_column_slice(&[a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])
}

/// `ln(d!)`.
pub fn ln_factorial(d: usize) -> f64 {
    (1..=d).map(|k| (k as f64).ln()).sum()
}

/// Unsigned volume of the simplex spanned by `d + 1` points in `R^d`.
pub fn simplex_volume(points: &[Vector]) -> f64 {
    let d = points[0].len();
    debug_assert_eq!(points.len(), d + 1);
    let m = DMatrix::from_fn(d, d, |i, j| points[j + 1][i] - points[0][i]);
    m.determinant().abs() / (ln_factorial(d)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_diagonalises_symmetric_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        let d = vecs.transpose() * &m * &vecs;
        assert!(off_diagonal_max(&d) <= 1e-12);
        for i in 0..3 {
            assert_abs_diff_eq!(d[(i, i)], vals[i], epsilon = 1e-12);
        }
        let orth = vecs.transpose() * &vecs;
        assert!((orth - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        assert_abs_diff_eq!(vals.sum(), m.trace(), epsilon = 1e-12);
    }

    #[test]
    fn inverse_square_root_squares_to_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = symmetric_function(&m, |x| x.powf(-0.5));
        let back = &r * &r * &m;
        assert!((back - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn unit_simplex_volume() {
        let pts: Vec<Vector> = vec![
            from_slice(&[0.0, 0.0, 0.0]),
            from_slice(&[1.0, 0.0, 0.0]),
            from_slice(&[0.0, 1.0, 0.0]),
            from_slice(&[0.0, 0.0, 1.0]),
        ];
        assert_abs_diff_eq!(simplex_volume(&pts), 1.0 / 6.0, epsilon = 1e-15);
    }
}
