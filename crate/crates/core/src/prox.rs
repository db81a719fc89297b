//! Closed-form proximal maps and projections used by the ADMM block updates.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::tensor::DenseMatrix;

/// Elementwise soft threshold `sign(x) * max(|x| - tau, 0)`.
pub fn shrinkage(x: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("shrinkage threshold must be >= 0, got {tau}")));
    }
    Ok(x.map(|v| soft_threshold(v, tau)))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Elementwise `max(x, 0)`.
pub fn project_nonneg(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| v.max(0.0))
}

/// Euclidean projection onto `{M : M = M^T, 0 <= M <= I}`: symmetrize,
/// clip the spectrum to `[0, 1]`, reassemble.
pub fn project_sym_box_psd(b: &DenseMatrix) -> Result<DenseMatrix> {
    let e = sym_eig(&b.symmetrize())?;
    Ok(e.reassemble(|l| l.clamp(0.0, 1.0)))
}

/// The M-step exactly as printed: `1/2 V min(max(S, 0), 1) V^T` where
/// `V S V^T` is the eigendecomposition of `B + B^T`. Its spectrum is bounded
/// by 1/2, so it is not the projection onto the spectral box. Kept for A/B
/// comparison against [`project_sym_box_psd`].
pub fn project_sym_box_psd_literal(b: &DenseMatrix) -> Result<DenseMatrix> {
    let sum = b.symmetrize().scale(2.0);
    let e = sym_eig(&sum)?;
    Ok(e.reassemble(|l| 0.5 * l.clamp(0.0, 1.0)))
}

/// `B - (tr(B) - j) / n * I` for an `n x n` matrix `B`: the closest matrix
/// with trace `j` along the identity direction.
pub fn trace_shift(b: &DenseMatrix, j: usize) -> Result<DenseMatrix> {
    if !b.is_square() {
        return Err(Error::Shape(format!("trace shift of a {}x{} matrix", b.rows(), b.cols())));
    }
    let n = b.rows();
    let shift = (b.trace() - j as f64) / n as f64;
    let mut out = b.clone();
    for i in 0..n {
        out[(i, i)] -= shift;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn shrinkage_scalars() {
        let x = m(&[&[1.5, -0.3, -2.0, 0.0]]);
        assert_eq!(shrinkage(&x, 1.0).unwrap().values(), &[0.5, 0.0, -1.0, 0.0]);
        assert_eq!(shrinkage(&m(&[&[-0.3]]), 0.5).unwrap().values(), &[0.0]);
        assert_eq!(shrinkage(&x, 0.0).unwrap(), x);
        assert!(shrinkage(&x, -0.1).is_err());
    }

    #[test]
    fn shrinkage_is_l1_prox() {
        // 0 in (y - x) + tau * d|y|  at y = shrink(x, tau).
        let tau = 0.7;
        let xs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.05).collect();
        for &x in &xs {
            let y = soft_threshold(x, tau);
            let g = x - y;
            if y == 0.0 {
                assert!(g.abs() <= tau + 1e-15);
            } else {
                assert!((g - tau * y.signum()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nonneg_projection() {
        assert_eq!(project_nonneg(&m(&[&[-1.0, -2.0], &[-0.5, -3.0]])), DenseMatrix::zeros(2, 2));
        let pos = m(&[&[1.0, 0.0], &[2.0, 3.0]]);
        assert_eq!(project_nonneg(&pos), pos);
        assert_eq!(project_nonneg(&m(&[&[-1.0, 2.0]])).values(), &[0.0, 2.0]);
    }

    #[test]
    fn box_projection_examples() {
        let i = DenseMatrix::identity(3);
        assert!(project_sym_box_psd(&i).unwrap().frob_distance(&i) < 1e-14);
        let p = project_sym_box_psd(&DenseMatrix::from_diag(&[2.0, -1.0])).unwrap();
        assert!(p.frob_distance(&DenseMatrix::from_diag(&[1.0, 0.0])) < 1e-14);
        // Symmetric part [[0,1],[1,0]] has eigenpairs (1, (1,1)/sqrt2), (-1, (1,-1)/sqrt2).
        let p = project_sym_box_psd(&m(&[&[0.0, 2.0], &[0.0, 0.0]])).unwrap();
        assert!(p.frob_distance(&m(&[&[0.5, 0.5], &[0.5, 0.5]])) < 1e-14);
    }

    #[test]
    fn literal_variant_halves_spectrum() {
        let p = project_sym_box_psd_literal(&DenseMatrix::identity(2)).unwrap();
        assert!(p.frob_distance(&DenseMatrix::identity(2).scale(0.5)) < 1e-14);
    }

    #[test]
    fn trace_shift_examples() {
        let k = trace_shift(&DenseMatrix::from_diag(&[3.0, 1.0]), 2).unwrap();
        assert_eq!(k, DenseMatrix::from_diag(&[2.0, 0.0]));
        assert_eq!(trace_shift(&DenseMatrix::identity(3), 3).unwrap(), DenseMatrix::identity(3));
        assert!(trace_shift(&DenseMatrix::zeros(2, 3), 1).is_err());
    }
}
