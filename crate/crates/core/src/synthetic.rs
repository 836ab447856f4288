//! Seeded ground-truth cubes for tests, examples and the benchmark.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mask::rng_from_seed;
use crate::tensor::{DenseTensor, Matrix};

const COMPONENTS: usize = 3;

fn smooth_profile(len: usize, freq: f64, phase: f64) -> Vec<f64> {
    let n = len.max(2) as f64 - 1.0;
    (0..len)
        .map(|i| 0.5 + 0.5 * (std::f64::consts::TAU * freq * i as f64 / n + phase).sin())
        .collect()
}

/// A hyperspectral-like cube: three separable spatial-spectral components plus a spatial
/// gradient whose strength ramps smoothly across bands, scaled to a maximum of 1.
pub fn synthetic_cube(dims: &[usize], seed: u64) -> DenseTensor {
    assert_eq!(dims.len(), 3, "synthetic cubes are order 3");
    let mut rng = rng_from_seed(seed);
    let mut profiles = Vec::with_capacity(COMPONENTS);
    for c in 0..COMPONENTS {
        let weight = 1.0 / (c + 1) as f64;
        let rows = smooth_profile(dims[0], rng.random_range(0.4..1.6), rng.random_range(0.0..std::f64::consts::TAU));
        let cols = smooth_profile(dims[1], rng.random_range(0.4..1.6), rng.random_range(0.0..std::f64::consts::TAU));
        let bands = smooth_profile(dims[2], rng.random_range(0.2..0.8), rng.random_range(0.0..std::f64::consts::TAU));
        profiles.push((weight, rows, cols, bands));
    }
    let span = (dims[0] + dims[1]).max(2) as f64 - 2.0;
    let band_span = dims[2].max(2) as f64 - 1.0;
    let raw = DenseTensor::from_fn(dims, |i| {
        let parts: f64 = profiles
            .iter()
            .map(|(w, r, c, b)| w * r[i[0]] * c[i[1]] * b[i[2]])
            .sum();
        let ramp = 0.3 * (i[0] + i[1]) as f64 / span.max(1.0) * (0.5 + 0.5 * i[2] as f64 / band_span);
        parts + ramp
    });
    let peak = raw.max_value();
    raw.map(|v| v / peak)
}

/// `core ×₀ U₀ ×₁ U₁ ⋯` with Gaussian core and factors, rescaled to a peak magnitude of 1
/// so it sits on the same scale as normalized image data.
pub fn random_tucker(dims: &[usize], ranks: &[usize], seed: u64) -> Result<DenseTensor> {
    if dims.len() != ranks.len() || ranks.iter().zip(dims).any(|(&r, &d)| r == 0 || r > d) {
        return Err(Error::InvalidArgument(format!(
            "Tucker ranks {ranks:?} do not fit dims {dims:?}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut t = DenseTensor::from_fn(ranks, |_| rng.sample(StandardNormal));
    for (k, (&d, &r)) in dims.iter().zip(ranks).enumerate() {
        let u = Matrix::from_fn(d, r, |_, _| rng.sample(StandardNormal));
        let mut new_dims = t.dims().to_vec();
        new_dims[k] = d;
        t = DenseTensor::fold(&(u * t.unfold(k)?), k, &new_dims)?;
    }
    let peak = t.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(t.map(|v| v / peak))
}
