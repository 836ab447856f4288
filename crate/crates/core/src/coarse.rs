//! ADMM completion under the log-surrogate low-Tucker-rank model.
//!
//! Each sweep shrinks every mode unfolding of `X + Λ_k/μ`, averages the auxiliary tensors
//! back into `X` on the unobserved entries, ascends the multipliers and grows `μ`
//! geometrically. The log surrogate `Σ log(σ_i + ε)` is handled with its majorize-minimize
//! proximal step: a weighted SVT whose thresholds `α_k / (μ (σ_i + ε))` use the spectrum of
//! the previous iterate's mode-`k` unfolding.
//!
//! The solver stops once both the relative change of `X` and the primal residual
//! `max_k ‖M_k − X‖ / ‖X‖` fall below `tol`. The residual test matters early on: with a small
//! `μ₀` every `M_k` can be shrunk to zero, leaving `X` unchanged while the multipliers grow.
//!
//! The thresholds are not scale invariant. Defaults assume data with a peak magnitude near 1,
//! which is what the pipeline feeds in after normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, svt_with_values};
use crate::mask::{apply_mask, ObservationMask};
use crate::tensor::DenseTensor;
use crate::Completion;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseConfig {
    /// Per-mode weights. A single entry is broadcast to every mode.
    pub alpha: Vec<f64>,
    pub mu0: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Weighted SVT for the log surrogate; `false` shrinks by `α_k / μ` (plain nuclear norm).
    pub weighted: bool,
}

impl Default for CoarseConfig {
    fn default() -> Self {
        CoarseConfig {
            alpha: vec![1.0, 1.5, 1.2],
            mu0: 1.0 / 160.0,
            eta: 1.1,
            epsilon: 1e-6,
            max_iters: 50,
            tol: 1e-4,
            weighted: true,
        }
    }
}

impl CoarseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("coarse config: {msg}")));
        if self.alpha.is_empty() || self.alpha.iter().any(|&a| !(a > 0.0)) {
            return bad("alpha weights must be positive");
        }
        if !(self.mu0 > 0.0) {
            return bad("mu0 must be positive");
        }
        if !(self.eta > 1.0) {
            return bad("eta must exceed 1");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be non-negative");
        }
        Ok(())
    }

    fn alpha_for(&self, mode: usize, order: usize) -> Result<f64> {
        match self.alpha.len() {
            1 => Ok(self.alpha[0]),
            n if n == order => Ok(self.alpha[mode]),
            n => Err(Error::InvalidArgument(format!(
                "coarse config has {n} alpha weights for an order-{order} tensor"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoarseState {
    pub x: DenseTensor,
    pub m: Vec<DenseTensor>,
    pub lambda: Vec<DenseTensor>,
    pub mu: f64,
    pub iter: usize,
    /// Spectrum of `X` unfolded along each mode; drives the weighted thresholds.
    pub sigma_prev: Vec<Vec<f64>>,
    /// `max_k ‖M_k − X‖_F / ‖X‖_F` after the last sweep (infinite before the first).
    pub primal_residual: f64,
}

fn unfolding_spectra(x: &DenseTensor) -> Result<Vec<Vec<f64>>> {
    (0..x.order())
        .map(|k| singular_values(&x.unfold(k)?).map_err(|e| mode_error(k, e)))
        .collect()
}

impl CoarseState {
    /// `M_k = X⁰`, `Λ_k = 0`, `μ = μ₀`.
    pub fn new(x0: DenseTensor, config: &CoarseConfig) -> Result<Self> {
        let order = x0.order();
        let sigma_prev = if config.weighted {
            unfolding_spectra(&x0)?
        } else {
            Vec::new()
        };
        Ok(CoarseState {
            m: vec![x0.clone(); order],
            lambda: vec![DenseTensor::zeros(x0.dims()); order],
            x: x0,
            mu: config.mu0,
            iter: 0,
            sigma_prev,
            primal_residual: f64::INFINITY,
        })
    }
}

fn mode_error(mode: usize, source: Error) -> Error {
    Error::ModeUpdate {
        mode,
        source: Box::new(source),
    }
}

/// One ADMM sweep.
pub fn coarse_step(
    state: &CoarseState,
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &CoarseConfig,
) -> Result<CoarseState> {
    let dims = state.x.dims().to_vec();
    state.x.expect_same_dims(t)?;
    mask.check_matches(t)?;
    let order = dims.len();
    let mu = state.mu;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument("mu must be positive".into()));
    }

    let mut m = Vec::with_capacity(order);
    for k in 0..order {
        let alpha = config.alpha_for(k, order)?;
        let shifted = state
            .x
            .zip_map(&state.lambda[k], |x, l| x + l / mu)?
            .unfold(k)?;
        let thresholds: Vec<f64> = if config.weighted {
            state.sigma_prev[k]
                .iter()
                .map(|&s| alpha / (mu * (s + config.epsilon)))
                .collect()
        } else {
            vec![alpha / mu]
        };
        let (shrunk, _) = svt_with_values(&shifted, &thresholds).map_err(|e| mode_error(k, e))?;
        m.push(DenseTensor::fold(&shrunk, k, &dims)?);
    }

    let mut x = DenseTensor::zeros(&dims);
    let inv_order = 1.0 / order as f64;
    for (i, v) in x.as_mut_slice().iter_mut().enumerate() {
        *v = if mask.is_observed(i) {
            t.as_slice()[i]
        } else {
            let sum: f64 = (0..order)
                .map(|k| m[k].as_slice()[i] - state.lambda[k].as_slice()[i] / mu)
                .sum();
            sum * inv_order
        };
    }

    let lambda = (0..order)
        .map(|k| {
            let mut l = state.lambda[k].clone();
            for ((lv, &mv), &xv) in l
                .as_mut_slice()
                .iter_mut()
                .zip(m[k].as_slice())
                .zip(x.as_slice())
            {
                *lv -= mu * (mv - xv);
            }
            l
        })
        .collect();

    let x_norm = x.frobenius_norm().max(crate::tensor::RELATIVE_CHANGE_FLOOR);
    let primal_residual = m
        .iter()
        .map(|mk| {
            let diff = mk.zip_map(&x, |a, b| a - b)?;
            Ok(diff.frobenius_norm() / x_norm)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let sigma_prev = if config.weighted {
        unfolding_spectra(&x)?
    } else {
        Vec::new()
    };
    Ok(CoarseState {
        x,
        m,
        lambda,
        mu: mu * config.eta,
        iter: state.iter + 1,
        sigma_prev,
        primal_residual,
    })
}

/// Completes `t` starting from the zero-filled observation.
pub fn coarse_complete(
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &CoarseConfig,
) -> Result<Completion> {
    let x0 = apply_mask(t, mask)?;
    coarse_complete_from(t, mask, x0, config)
}

/// Completes `t` starting from `x0`, which is re-projected onto the observations first.
pub fn coarse_complete_from(
    t: &DenseTensor,
    mask: &ObservationMask,
    x0: DenseTensor,
    config: &CoarseConfig,
) -> Result<Completion> {
    config.validate()?;
    mask.check_matches(t)?;
    x0.expect_same_dims(t)?;
    if t.order() < 2 {
        return Err(Error::InvalidArgument(
            "coarse completion needs a tensor of order >= 2".into(),
        ));
    }
    if mask.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    if !t.is_finite() || !x0.is_finite() {
        return Err(Error::NonFinite);
    }
    for k in 0..t.order() {
        config.alpha_for(k, t.order())?;
    }

    let x0 = crate::mask::project_observed(&x0, t, mask)?;
    let mut state = CoarseState::new(x0, config)?;
    let mut relative_changes = Vec::new();
    for _ in 0..config.max_iters {
        let next = coarse_step(&state, t, mask, config)?;
        let change = next.x.relative_change(&state.x)?;
        relative_changes.push(change);
        state = next;
        if change < config.tol && state.primal_residual < config.tol {
            break;
        }
    }
    if !state.x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(Completion {
        tensor: state.x,
        iterations: state.iter,
        relative_changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{make_pixel_mask, satisfies_constraint};

    fn sample(dims: &[usize]) -> DenseTensor {
        DenseTensor::from_fn(dims, |i| {
            let s: usize = i.iter().enumerate().map(|(k, &v)| (k + 1) * v).sum();
            ((s as f64) * 0.37).sin() + 1.0
        })
    }

    #[test]
    fn full_mask_returns_t() {
        let t = sample(&[4, 5, 3]);
        let mask = ObservationMask::full(t.dims());
        let out = coarse_complete(&t, &mask, &CoarseConfig::default()).unwrap();
        assert_eq!(out.tensor, t);
        assert!(out.relative_changes.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn stalled_iterate_does_not_stop_early() {
        let t = sample(&[6, 6, 4]);
        let mask = make_pixel_mask(t.dims(), 0.2, 9).unwrap();
        let config = CoarseConfig {
            mu0: 1e-4,
            ..CoarseConfig::default()
        };
        let out = coarse_complete(&t, &mask, &config).unwrap();
        assert_eq!(out.relative_changes[0], 0.0);
        assert!(out.iterations > 1);
    }

    #[test]
    fn zero_input_stays_zero() {
        let t = DenseTensor::zeros(&[3, 3, 2]);
        let mask = make_pixel_mask(t.dims(), 0.5, 1).unwrap();
        let config = CoarseConfig::default();
        let state = CoarseState::new(apply_mask(&t, &mask).unwrap(), &config).unwrap();
        let next = coarse_step(&state, &t, &mask, &config).unwrap();
        for m in &next.m {
            assert!(m.as_slice().iter().all(|&v| v == 0.0));
        }
        assert!(next.x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mu_schedule_is_geometric() {
        let t = sample(&[4, 4, 3]);
        let mask = make_pixel_mask(t.dims(), 0.5, 2).unwrap();
        let config = CoarseConfig::default();
        let mut state = CoarseState::new(apply_mask(&t, &mask).unwrap(), &config).unwrap();
        let mut expected = config.mu0;
        for _ in 0..6 {
            state = coarse_step(&state, &t, &mask, &config).unwrap();
            expected *= config.eta;
            assert_eq!(state.mu, expected);
            assert!(satisfies_constraint(&state.x, &t, &mask));
        }
    }

    #[test]
    fn vanishing_thresholds_leave_shifted_iterate() {
        let t = sample(&[3, 4, 2]);
        let mask = make_pixel_mask(t.dims(), 0.6, 3).unwrap();
        let config = CoarseConfig {
            alpha: vec![1.0],
            epsilon: 1e12,
            ..CoarseConfig::default()
        };
        let mut state = CoarseState::new(apply_mask(&t, &mask).unwrap(), &config).unwrap();
        state.lambda = (0..3).map(|k| sample(&[3, 4, 2]).scale(1e-3 * (k + 1) as f64)).collect();
        let next = coarse_step(&state, &t, &mask, &config).unwrap();
        for k in 0..3 {
            let shifted = state
                .x
                .zip_map(&state.lambda[k], |x, l| x + l / state.mu)
                .unwrap();
            let diff = next.m[k].relative_change(&shifted).unwrap() * shifted.frobenius_norm();
            assert!(diff < 1e-8, "mode {k}: {diff}");
        }
    }

    #[test]
    fn degenerate_single_slice_cluster() {
        let t = sample(&[25, 4, 1]);
        let mask = make_pixel_mask(t.dims(), 0.5, 4).unwrap();
        let out = coarse_complete(&t, &mask, &CoarseConfig::default()).unwrap();
        assert!(satisfies_constraint(&out.tensor, &t, &mask));
        assert!(out.tensor.is_finite());
    }

    #[test]
    fn rejects_empty_mask_and_bad_input() {
        let t = sample(&[3, 3, 3]);
        let empty = ObservationMask::empty(t.dims());
        assert!(matches!(
            coarse_complete(&t, &empty, &CoarseConfig::default()),
            Err(Error::EmptyMask)
        ));
        let mut bad = t.clone();
        bad.as_mut_slice()[0] = f64::INFINITY;
        let full = ObservationMask::full(t.dims());
        assert!(matches!(
            coarse_complete(&bad, &full, &CoarseConfig::default()),
            Err(Error::NonFinite)
        ));
        let wrong_alpha = CoarseConfig {
            alpha: vec![1.0, 2.0],
            ..CoarseConfig::default()
        };
        assert!(coarse_complete(&t, &full, &wrong_alpha).is_err());
        let bad_eta = CoarseConfig {
            eta: 1.0,
            ..CoarseConfig::default()
        };
        assert!(coarse_complete(&t, &full, &bad_eta).is_err());
    }
}
