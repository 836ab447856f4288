//! Thin SVD and singular value thresholding.

use faer::Mat;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Thin SVD with singular values sorted non-increasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    /// `u · diag(values) · vt` for an arbitrary replacement of the singular values.
    pub fn recompose_with(&self, values: &[f64]) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * &self.vt
    }

    pub fn recompose(&self) -> Matrix {
        self.recompose_with(&self.singular_values)
    }
}

// faer runs sequentially here (no rayon feature), so results do not depend on thread count.
fn to_faer(m: &Matrix) -> Result<Mat<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]))
}

pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let a = to_faer(m)?;
    let dec = a
        .thin_svd()
        .map_err(|_| Error::SvdNoConvergence { rows, cols })?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let k = rows.min(cols);
    Ok(SvdResult {
        u: Matrix::from_fn(rows, k, |i, j| u[(i, j)]),
        singular_values: (0..k).map(|j| s[j].max(0.0)).collect(),
        vt: Matrix::from_fn(k, cols, |i, j| v[(j, i)]),
    })
}

/// Singular values only, sorted non-increasing.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    let values = to_faer(m)?
        .singular_values()
        .map_err(|_| Error::SvdNoConvergence { rows, cols })?;
    Ok(values.into_iter().map(|v| v.max(0.0)).collect())
}

/// Singular value thresholding `U · diag(max(σ_i − τ_i, 0)) · Vᵀ`.
///
/// `thresholds` holds either one value for every singular value or one per singular value.
pub fn svt(m: &Matrix, thresholds: &[f64]) -> Result<Matrix> {
    svt_with_values(m, thresholds).map(|(z, _)| z)
}

/// As [`svt`], also returning the shrunk singular values (the spectrum of the result).
pub fn svt_with_values(m: &Matrix, thresholds: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    let k = m.nrows().min(m.ncols());
    if thresholds.len() != 1 && thresholds.len() != k {
        return Err(Error::InvalidArgument(format!(
            "expected 1 or {k} thresholds, got {}",
            thresholds.len()
        )));
    }
    if thresholds.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "thresholds must be non-negative".into(),
        ));
    }
    let dec = svd(m)?;
    let shrunk: Vec<f64> = dec
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let tau = if thresholds.len() == 1 {
                thresholds[0]
            } else {
                thresholds[i]
            };
            (s - tau).max(0.0)
        })
        .collect();
    Ok((dec.recompose_with(&shrunk), shrunk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn diagonal_singular_values() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let d = svd(&m).unwrap();
        assert!((d.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((d.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let d = svd(&Matrix::zeros(3, 2)).unwrap();
        assert!(d.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn orthonormal_factors_and_reconstruction() {
        for (r, c) in [(5, 4), (4, 5), (7, 1), (1, 6)] {
            let m = random(r, c, 7 + r as u64);
            let d = svd(&m).unwrap();
            let k = r.min(c);
            let ident = Matrix::identity(k, k);
            assert!((d.u.transpose() * &d.u - &ident).norm() < 1e-10);
            assert!((&d.vt * d.vt.transpose() - &ident).norm() < 1e-10);
            assert!(rel_err(&d.recompose(), &m) <= 1e-10);
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn values_only_match_full_decomposition() {
        let m = random(5, 7, 11);
        let full = svd(&m).unwrap().singular_values;
        let only = singular_values(&m).unwrap();
        for (a, b) in full.iter().zip(&only) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_inputs_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..2000 {
            let rows = rng.random_range(1..8);
            let cols = rng.random_range(1..8);
            let rank = rng.random_range(0..=rows.min(cols));
            let a = random(rows, rank, 2 * case);
            let b = random(rank, cols, 2 * case + 1);
            let m = a * b;
            let d = svd(&m).unwrap();
            assert!(
                (d.recompose() - &m).norm() <= 1e-12 * m.norm().max(1.0),
                "{rows}x{cols} rank {rank}"
            );
            assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svt_shrinks_diagonal() {
        let m = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let z = svt(&m, &[2.0]).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((z - expect).norm() < 1e-12);
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let m = random(4, 6, 3);
        assert!((svt(&m, &[0.0]).unwrap() - &m).norm() < 1e-10);
    }

    #[test]
    fn svt_rejects_bad_thresholds() {
        let m = random(3, 3, 1);
        assert!(svt(&m, &[-1.0]).is_err());
        assert!(svt(&m, &[1.0, 2.0]).is_err());
        assert!(svt(&m, &[1.0, 0.5, 0.0]).is_ok());
    }

    #[test]
    fn weighted_svt_uses_per_value_thresholds() {
        let m = Matrix::from_row_slice(3, 3, &[5.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 1.0]);
        let (z, values) = svt_with_values(&m, &[1.0, 2.5, 0.25]).unwrap();
        assert!((values[0] - 4.0).abs() < 1e-12);
        assert!((values[1] - 0.5).abs() < 1e-12);
        assert!((values[2] - 0.75).abs() < 1e-12);
        assert!((z[(1, 1)] - 0.5).abs() < 1e-12);
    }
}
