//! Small dense complex linear algebra (n ≤ 8): elimination with partial
//! pivoting, inverses, and singular values through one-sided Jacobi.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::scalar::{cone, czero, lit, to_f64, Cx, Real};

/// Row-major dense complex matrix.
pub type CMatrix<T> = Vec<Vec<Cx<T>>>;

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { cone() } else { czero() }).collect())
        .collect()
}

pub fn mat_vec<T: Real>(m: &CMatrix<T>, v: &[Cx<T>]) -> Vec<Cx<T>> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(czero(), |acc, (a, b)| acc + a * b))
        .collect()
}

pub fn mat_mul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let inner = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..inner).fold(czero(), |acc, k| acc + a[i][k] * b[k][j]))
                .collect()
        })
        .collect()
}

/// Determinant by Gaussian elimination, pivoting on the modulus of the value
/// part. Works for plain complex entries and for jets alike.
pub fn det_generic<T: Real, F: Field<T>>(m: &[Vec<F>]) -> Result<F> {
    let n = m.len();
    assert!(n > 0, "empty matrix");
    let mut a: Vec<Vec<F>> = m.to_vec();
    let mut det = a[0][0].constant_like(cone());
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .value()
                    .norm()
                    .partial_cmp(&a[j][col].value().norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot][col].value().norm() == T::zero() {
            return Ok(det.constant_like(czero()));
        }
        if pivot != col {
            a.swap(pivot, col);
            det = det.neg();
        }
        det = det.mul(&a[col][col]);
        for row in col + 1..n {
            let factor = a[row][col].div(&a[col][col])?;
            for k in col..n {
                let t = factor.mul(&a[col][k]);
                a[row][k] = a[row][k].sub(&t);
            }
        }
    }
    Ok(det)
}

pub fn det<T: Real>(m: &CMatrix<T>) -> Cx<T> {
    det_generic::<T, Cx<T>>(m).unwrap_or_else(|_| czero())
}

/// Inverse with partial pivoting. Fails when a pivot falls below
/// `threshold * max|entry|`.
pub fn inverse<T: Real>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = m.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, z| acc.max(z.norm()));
    let tiny = lit::<T>(1e-14) * scale.max(T::min_positive_value());
    let mut a = m.clone();
    let mut inv = identity::<T>(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .norm()
                    .partial_cmp(&a[j][col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if !(a[pivot][col].norm() > tiny) {
            return Err(Error::SingularJacobian {
                modulus: to_f64(det(m).norm()),
            });
        }
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let p = a[col][col];
        for k in 0..n {
            a[col][k] = a[col][k] / p;
            inv[col][k] = inv[col][k] / p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            if f == czero() {
                continue;
            }
            for k in 0..n {
                let ack = a[col][k];
                let ick = inv[col][k];
                a[row][k] -= f * ack;
                inv[row][k] -= f * ick;
            }
        }
    }
    Ok(inv)
}

/// Singular values in descending order.
///
/// Runs one-sided Jacobi on the real `2n × 2n` representation
/// `[[Re, -Im], [Im, Re]]`, whose singular values are those of the complex
/// matrix, each appearing twice.
pub fn singular_values<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let (r2, c2) = (2 * rows, 2 * cols);
    // column-major real matrix
    let mut a = vec![vec![T::zero(); r2]; c2];
    for i in 0..rows {
        for j in 0..cols {
            let z = m[i][j];
            a[j][i] = z.re;
            a[j][i + rows] = z.im;
            a[j + cols][i] = -z.im;
            a[j + cols][i + rows] = z.re;
        }
    }
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..c2 {
            for q in p + 1..c2 {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..r2 {
                    alpha += a[p][k] * a[p][k];
                    beta += a[q][k] * a[q][k];
                    gamma += a[p][k] * a[q][k];
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (lit::<T>(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..r2 {
                    let ap = a[p][k];
                    let aq = a[q][k];
                    a[p][k] = c * ap - s * aq;
                    a[q][k] = s * ap + c * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = a
        .iter()
        .map(|col| col.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv.into_iter().step_by(2).collect()
}

/// Spectral norm `max_{|v|=1} |Mv|`.
pub fn spectral_norm<T: Real>(m: &CMatrix<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

/// Smallest singular value, `min_{|v|=1} |Mv|` for square `M`.
pub fn min_singular_value<T: Real>(m: &CMatrix<T>) -> T {
    singular_values(m).last().copied().unwrap_or_else(T::zero)
}
