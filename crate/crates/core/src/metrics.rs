//! Band-averaged PSNR and SSIM, and relative squared error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// PSNR reported for a band with zero error.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsnrMode {
    /// Mean of per-band PSNR values.
    #[default]
    Band,
    /// One PSNR over the whole cube.
    Global,
}

impl std::str::FromStr for PsnrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "band" => Ok(PsnrMode::Band),
            "global" => Ok(PsnrMode::Global),
            other => Err(Error::InvalidArgument(format!(
                "unknown PSNR mode `{other}` (band|global)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandScores {
    pub per_band: Vec<f64>,
    pub mean: f64,
}

impl BandScores {
    fn from_bands(per_band: Vec<f64>) -> Self {
        let mean = per_band.iter().sum::<f64>() / per_band.len() as f64;
        BandScores { per_band, mean }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub per_band_psnr: Vec<f64>,
    pub per_band_ssim: Vec<f64>,
    pub rse: f64,
}

fn check_pair(x: &DenseTensor, reference: &DenseTensor) -> Result<(usize, usize, usize)> {
    x.expect_same_dims(reference)?;
    match *reference.dims() {
        [rows, cols, bands] => Ok((rows, cols, bands)),
        _ => Err(Error::ShapeMismatch(format!(
            "metrics need order-3 cubes, got {:?}",
            reference.dims()
        ))),
    }
}

fn peak_of(reference: &DenseTensor) -> Result<f64> {
    let peak = reference.max_value();
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference peak {peak} must be positive"
        )));
    }
    Ok(peak)
}

fn psnr_from_mse(peak: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Per-band `10·log₁₀(peak² / MSE_b)` with `peak` the global maximum of the reference.
pub fn psnr(x: &DenseTensor, reference: &DenseTensor) -> Result<BandScores> {
    let (rows, cols, _) = check_pair(x, reference)?;
    let peak = peak_of(reference)?;
    let band_len = rows * cols;
    let per_band = x
        .as_slice()
        .chunks(band_len)
        .zip(reference.as_slice().chunks(band_len))
        .map(|(a, b)| {
            let mse = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / band_len as f64;
            psnr_from_mse(peak, mse)
        })
        .collect();
    Ok(BandScores::from_bands(per_band))
}

/// PSNR over the whole cube as one signal.
pub fn psnr_global(x: &DenseTensor, reference: &DenseTensor) -> Result<f64> {
    check_pair(x, reference)?;
    let peak = peak_of(reference)?;
    let mse = x
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / x.len() as f64;
    Ok(psnr_from_mse(peak, mse))
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering of a column-major `rows × cols` image.
fn filter_valid(img: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let w = kernel.len();
    let out_rows = rows - w + 1;
    let out_cols = cols - w + 1;
    let mut tmp = vec![0.0; out_rows * cols];
    for c in 0..cols {
        for r in 0..out_rows {
            tmp[r + out_rows * c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * img[r + i + rows * c])
                .sum();
        }
    }
    let mut out = vec![0.0; out_rows * out_cols];
    for c in 0..out_cols {
        for r in 0..out_rows {
            out[r + out_rows * c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[r + out_rows * (c + i)])
                .sum();
        }
    }
    out
}

fn ssim_band(x: &[f64], y: &[f64], rows: usize, cols: usize, peak: f64, kernel: &[f64]) -> f64 {
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(x, rows, cols, kernel);
    let mu_y = filter_valid(y, rows, cols, kernel);
    let e_xx = filter_valid(&xx, rows, cols, kernel);
    let e_yy = filter_valid(&yy, rows, cols, kernel);
    let e_xy = filter_valid(&xy, rows, cols, kernel);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * (mx * my) + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (var_x + var_y + c2))
        })
        .sum();
    total / n as f64
}

/// Per-band mean SSIM with an 11×11 Gaussian window (σ = 1.5).
///
/// The stabilizing constants use the larger of the two global maxima, so swapping the
/// arguments gives the same value.
pub fn ssim(x: &DenseTensor, reference: &DenseTensor) -> Result<BandScores> {
    let (rows, cols, _) = check_pair(x, reference)?;
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM window {SSIM_WINDOW} exceeds a {rows}x{cols} band"
        )));
    }
    peak_of(reference)?;
    let peak = reference.max_value().max(x.max_value());
    let kernel = gaussian_kernel();
    let band_len = rows * cols;
    let per_band = x
        .as_slice()
        .chunks(band_len)
        .zip(reference.as_slice().chunks(band_len))
        .map(|(a, b)| ssim_band(a, b, rows, cols, peak, &kernel))
        .collect();
    Ok(BandScores::from_bands(per_band))
}

/// `‖x − reference‖_F / ‖reference‖_F`.
pub fn rse(x: &DenseTensor, reference: &DenseTensor) -> Result<f64> {
    x.expect_same_dims(reference)?;
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("RSE of a zero reference".into()));
    }
    let diff = x.zip_map(reference, |a, b| a - b)?;
    Ok(diff.frobenius_norm() / denom)
}

/// All metrics at once. With [`PsnrMode::Global`] the headline PSNR is the cube-wide value.
pub fn evaluate(x: &DenseTensor, reference: &DenseTensor, mode: PsnrMode) -> Result<QualityReport> {
    let p = psnr(x, reference)?;
    let s = ssim(x, reference)?;
    let psnr_db = match mode {
        PsnrMode::Band => p.mean,
        PsnrMode::Global => psnr_global(x, reference)?,
    };
    Ok(QualityReport {
        psnr_db,
        ssim: s.mean,
        per_band_psnr: p.per_band,
        per_band_ssim: s.per_band,
        rse: rse(x, reference)?,
    })
}
