//! Small dense linear algebra on row-major `n × n` matrices.

use crate::error::{FinslerError, Result};
use crate::jets::Jet;
use crate::scalar::Real;

/// Pivot threshold below which a matrix is rejected as not positive definite.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Lower Cholesky factor of a symmetric matrix.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::lit(PIVOT_THRESHOLD)) {
                    return Err(FinslerError::NotPositiveDefinite { pivot: s.to_f64_lossy() });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let l = cholesky(a, n)?;
    // Invert L (lower triangular), then A^{-1} = L^{-T} L^{-1}.
    let mut linv = vec![T::zero(); n * n];
    for i in 0..n {
        linv[i * n + i] = l[i * n + i].recip();
        for j in 0..i {
            let mut s = T::zero();
            for k in j..i {
                s += l[i * n + k] * linv[k * n + j];
            }
            linv[i * n + j] = -s / l[i * n + i];
        }
    }
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = T::zero();
            for k in i.max(j)..n {
                s += linv[k * n + i] * linv[k * n + j];
            }
            inv[i * n + j] = s;
        }
    }
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(FinslerError::Singular);
    }
    Ok(inv)
}

/// Inverse of a matrix of jets by Gauss–Jordan elimination without pivoting.
/// Valid for the symmetric positive-definite matrices this crate inverts.
pub fn jet_inverse<T: Real>(a: &[Jet<T>], n: usize) -> Result<Vec<Jet<T>>> {
    let mut m: Vec<Jet<T>> = a.to_vec();
    let mut inv: Vec<Jet<T>> = (0..n * n)
        .map(|k| Jet::constant(if k / n == k % n { T::one() } else { T::zero() }))
        .collect();
    for col in 0..n {
        let piv = m[col * n + col].clone();
        if piv.value().abs() < T::lit(PIVOT_THRESHOLD) || !piv.value().is_finite() {
            return Err(FinslerError::Singular);
        }
        let r = piv.recip_jet();
        for k in 0..n {
            m[col * n + k] = &m[col * n + k] * &r;
            inv[col * n + k] = &inv[col * n + k] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * n + col].clone();
            for k in 0..n {
                let dm = &factor * &m[col * n + k];
                m[row * n + k] -= dm;
                let di = &factor * &inv[col * n + k];
                inv[row * n + k] -= di;
            }
        }
    }
    Ok(inv)
}
