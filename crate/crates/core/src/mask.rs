//! Observation masks for the pixel and stripe missing scenarios, and the data constraint
//! `X_Ω = T_Ω`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlocal::{gather_patches, Origin};
use crate::tensor::DenseTensor;

/// Name of the generator behind every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9)";

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Boolean tensor marking Ω, the observed entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    dims: Vec<usize>,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn new(dims: Vec<usize>, observed: Vec<bool>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!("invalid mask dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if n != observed.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask dims {dims:?} need {n} entries, got {}",
                observed.len()
            )));
        }
        Ok(ObservationMask { dims, observed })
    }

    pub fn full(dims: &[usize]) -> Self {
        Self::new(dims.to_vec(), vec![true; dims.iter().product()]).expect("invalid mask dims")
    }

    pub fn empty(dims: &[usize]) -> Self {
        Self::new(dims.to_vec(), vec![false; dims.iter().product()]).expect("invalid mask dims")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn is_observed(&self, offset: usize) -> bool {
        self.observed[offset]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn realized_rate(&self) -> f64 {
        self.observed_count() as f64 / self.observed.len() as f64
    }

    pub(crate) fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.observed)
    }

    pub(crate) fn check_matches(&self, t: &DenseTensor) -> Result<()> {
        if self.dims != t.dims() {
            return Err(Error::ShapeMismatch(format!(
                "mask dims {:?} vs tensor dims {:?}",
                self.dims,
                t.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingKind {
    Pixel,
    Stripe,
}

impl std::fmt::Display for MissingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MissingKind::Pixel => "pixel",
            MissingKind::Stripe => "stripe",
        })
    }
}

impl std::str::FromStr for MissingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel" => Ok(MissingKind::Pixel),
            "stripe" => Ok(MissingKind::Stripe),
            other => Err(Error::InvalidArgument(format!(
                "unknown missing kind `{other}` (pixel|stripe)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegradationSpec {
    pub kind: MissingKind,
    /// Fraction of entries that stay observed.
    pub sampling_rate: f64,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn make_mask(&self, dims: &[usize]) -> Result<ObservationMask> {
        match self.kind {
            MissingKind::Pixel => make_pixel_mask(dims, self.sampling_rate, self.seed),
            MissingKind::Stripe => make_stripe_mask(dims, self.sampling_rate, self.seed),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "sampling rate {rate} outside (0, 1]"
        )))
    }
}

/// Observes exactly `round(rate · total)` entries drawn uniformly without replacement.
pub fn make_pixel_mask(dims: &[usize], sampling_rate: f64, seed: u64) -> Result<ObservationMask> {
    check_rate(sampling_rate)?;
    let mut mask = ObservationMask::empty(dims);
    let total = mask.len();
    let count = (sampling_rate * total as f64).round() as usize;
    let mut rng = rng_from_seed(seed);
    for i in index::sample(&mut rng, total, count.min(total)) {
        mask.observed[i] = true;
    }
    Ok(mask)
}

/// Per band, keeps `round(rate · I2)` full-height columns chosen independently.
pub fn make_stripe_mask(dims: &[usize], sampling_rate: f64, seed: u64) -> Result<ObservationMask> {
    check_rate(sampling_rate)?;
    let &[rows, cols, bands] = dims else {
        return Err(Error::ShapeMismatch(format!(
            "stripe masks need order-3 dims, got {dims:?}"
        )));
    };
    let keep = (sampling_rate * cols as f64).round() as usize;
    if keep == 0 {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {sampling_rate} keeps no column out of {cols} in a band"
        )));
    }
    let mut mask = ObservationMask::empty(dims);
    let mut rng = rng_from_seed(seed);
    for b in 0..bands {
        for c in index::sample(&mut rng, cols, keep.min(cols)) {
            let start = c * rows + b * rows * cols;
            mask.observed[start..start + rows].fill(true);
        }
    }
    Ok(mask)
}

/// Copies observed entries, zeroes the rest.
pub fn apply_mask(t: &DenseTensor, mask: &ObservationMask) -> Result<DenseTensor> {
    mask.check_matches(t)?;
    let mut out = t.clone();
    for (v, &o) in out.as_mut_slice().iter_mut().zip(&mask.observed) {
        if !o {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// `t` on Ω, `x` elsewhere.
pub fn project_observed(
    x: &DenseTensor,
    t: &DenseTensor,
    mask: &ObservationMask,
) -> Result<DenseTensor> {
    x.expect_same_dims(t)?;
    mask.check_matches(x)?;
    let mut out = x.clone();
    project_in_place(&mut out, t, mask);
    Ok(out)
}

pub(crate) fn project_in_place(x: &mut DenseTensor, t: &DenseTensor, mask: &ObservationMask) {
    for ((v, &tv), &o) in x
        .as_mut_slice()
        .iter_mut()
        .zip(t.as_slice())
        .zip(&mask.observed)
    {
        if o {
            *v = tv;
        }
    }
}

/// True when `x` equals `t` bitwise on every observed entry.
pub fn satisfies_constraint(x: &DenseTensor, t: &DenseTensor, mask: &ObservationMask) -> bool {
    x.dims() == t.dims()
        && mask.dims() == x.dims()
        && x
            .as_slice()
            .iter()
            .zip(t.as_slice())
            .zip(&mask.observed)
            .all(|((a, b), &o)| !o || a.to_bits() == b.to_bits())
}

/// Sub-mask of the `w × w` spatial patches at `origins`, laid out as `w × w × bands × n`
/// exactly like the gathered patch tensor.
pub fn gather_submask(
    mask: &ObservationMask,
    origins: &[Origin],
    w: usize,
) -> Result<ObservationMask> {
    let observed = gather_patches(&mask.observed, &mask.dims, origins, w)?;
    ObservationMask::new(vec![w, w, mask.dims[2], origins.len()], observed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_full_rate() {
        let m = make_pixel_mask(&[3, 4, 2], 1.0, 1).unwrap();
        assert_eq!(m.observed_count(), 24);
    }

    #[test]
    fn pixel_exact_count_and_determinism() {
        let a = make_pixel_mask(&[10, 10, 4], 0.25, 9).unwrap();
        assert_eq!(a.observed_count(), 100);
        assert_eq!(a, make_pixel_mask(&[10, 10, 4], 0.25, 9).unwrap());
        assert_ne!(a, make_pixel_mask(&[10, 10, 4], 0.25, 10).unwrap());
    }

    #[test]
    fn rate_out_of_range() {
        assert!(make_pixel_mask(&[2, 2], 0.0, 1).is_err());
        assert!(make_pixel_mask(&[2, 2], 1.5, 1).is_err());
        assert!(make_stripe_mask(&[2, 2, 2], -0.1, 1).is_err());
    }

    #[test]
    fn stripe_columns_per_band() {
        let m = make_stripe_mask(&[4, 4, 2], 0.25, 3).unwrap();
        assert_eq!(m.observed_count(), 8);
        for b in 0..2 {
            let mut kept = 0;
            for c in 0..4 {
                let col: Vec<bool> = (0..4).map(|r| m.observed[r + 4 * c + 16 * b]).collect();
                assert!(col.iter().all(|&o| o == col[0]), "column must be all or nothing");
                kept += col[0] as usize;
            }
            assert_eq!(kept, 1);
        }
        assert_eq!(m, make_stripe_mask(&[4, 4, 2], 0.25, 3).unwrap());
        assert_eq!(
            make_stripe_mask(&[4, 4, 2], 1.0, 3).unwrap().observed_count(),
            32
        );
    }

    #[test]
    fn stripe_rate_too_small() {
        assert!(matches!(
            make_stripe_mask(&[4, 4, 2], 0.1, 3),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_stripe_mask(&[4, 4], 0.5, 3).is_err());
    }

    #[test]
    fn apply_and_project() {
        let t = DenseTensor::from_fn(&[2, 3], |i| (1 + i[0] + 2 * i[1]) as f64);
        let full = ObservationMask::full(&[2, 3]);
        let empty = ObservationMask::empty(&[2, 3]);
        assert_eq!(apply_mask(&t, &full).unwrap(), t);
        assert_eq!(
            apply_mask(&DenseTensor::zeros(&[2, 3]), &empty).unwrap(),
            DenseTensor::zeros(&[2, 3])
        );
        let mut single = ObservationMask::empty(&[2, 3]);
        single.observed[4] = true;
        let masked = apply_mask(&t, &single).unwrap();
        assert_eq!(masked.as_slice(), &[0.0, 0.0, 0.0, 0.0, 5.0, 0.0]);

        let x = t.scale(-1.0);
        assert_eq!(project_observed(&t, &t, &single).unwrap(), t);
        assert_eq!(project_observed(&x, &t, &empty).unwrap(), x);
        assert_eq!(project_observed(&x, &t, &full).unwrap(), t);
        let p = project_observed(&x, &t, &single).unwrap();
        assert!(satisfies_constraint(&p, &t, &single));
        assert!(!satisfies_constraint(&x, &t, &single));
        assert!(apply_mask(&t, &ObservationMask::full(&[3, 2])).is_err());
    }

    #[test]
    fn submask_conservation() {
        let dims = [6, 6, 2];
        let mask = make_pixel_mask(&dims, 0.4, 5).unwrap();
        let origins = [(0, 0), (2, 3), (3, 1)];
        let sub = gather_submask(&mask, &origins, 3).unwrap();
        assert_eq!(sub.dims(), &[3, 3, 2, 3]);
        let per_patch: usize = origins
            .iter()
            .map(|&(r0, c0)| {
                let mut n = 0;
                for b in 0..2 {
                    for c in c0..c0 + 3 {
                        for r in r0..r0 + 3 {
                            n += mask.observed[r + 6 * c + 36 * b] as usize;
                        }
                    }
                }
                n
            })
            .sum();
        assert_eq!(sub.observed_count(), per_patch);

        let full = gather_submask(&ObservationMask::full(&dims), &origins, 3).unwrap();
        assert_eq!(full.observed_count(), full.len());
        let none = gather_submask(&ObservationMask::empty(&dims), &[(0, 0), (3, 3)], 3).unwrap();
        assert_eq!(none.observed_count(), 0);
        assert!(gather_submask(&mask, &[(4, 4)], 3).is_err());
    }
}
