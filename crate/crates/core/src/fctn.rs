//! Fully-connected tensor network (FCTN) factors, contraction and PAM-based completion.
//!
//! An order-`N` network has one order-`N` factor per mode. Factor `G_k` carries the physical
//! mode `I_k` at position `k`; at every other position `j` it carries the rank `R_{j,k}` it
//! shares with factor `G_j`. Contracting all shared ranks reconstructs the full tensor.

use nalgebra::Cholesky;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{apply_mask, project_observed, rng_from_seed, ObservationMask};
use crate::tensor::{DenseTensor, Matrix};
use crate::Completion;

/// Symmetric table of pairwise ranks `R_{i,j}`, `i != j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FctnRankTable {
    n: usize,
    upper: Vec<usize>,
}

impl FctnRankTable {
    /// `upper` lists `R_{i,j}` for `i < j` in row order: `(0,1), (0,2), …, (1,2), …`.
    pub fn new(n: usize, upper: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "an FCTN needs at least two factors".into(),
            ));
        }
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "order {n} needs {} pairwise ranks, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        if upper.contains(&0) {
            return Err(Error::InvalidArgument("FCTN ranks must be >= 1".into()));
        }
        Ok(FctnRankTable { n, upper })
    }

    pub fn uniform(n: usize, rank: usize) -> Result<Self> {
        Self::new(n, vec![rank; n * n.saturating_sub(1) / 2])
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[usize] {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        assert!(i != j && i < self.n && j < self.n, "no rank between {i} and {j}");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // row-order position of (a, b) in the strict upper triangle
        let before = a * (2 * self.n - a - 1) / 2;
        self.upper[before + (b - a - 1)]
    }

    /// Mode sizes of factor `k` for physical dims `dims`.
    pub fn factor_dims(&self, k: usize, dims: &[usize]) -> Vec<usize> {
        (0..self.n)
            .map(|j| if j == k { dims[k] } else { self.get(j, k) })
            .collect()
    }

    /// Product of the ranks attached to factor `k`.
    pub fn rank_product(&self, k: usize) -> usize {
        (0..self.n).filter(|&j| j != k).map(|j| self.get(j, k)).product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FctnConfig {
    pub ranks: FctnRankTable,
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub init_seed: u64,
    /// Factor entries are `init_scale / √(∏ ranks of the factor)` times a standard normal draw.
    pub init_scale: f64,
    /// Independent initializations tried by the completion drivers; the one whose network
    /// fits the observed entries best is kept.
    pub restarts: usize,
}

impl FctnConfig {
    pub fn new(ranks: FctnRankTable) -> Self {
        FctnConfig {
            ranks,
            rho: 0.1,
            max_iters: 30,
            tol: 1e-4,
            init_seed: 0,
            init_scale: 1.0,
            restarts: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidArgument("FCTN rho must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("FCTN restarts must be at least 1".into()));
        }
        if !(self.tol >= 0.0) || !self.init_scale.is_finite() {
            return Err(Error::InvalidArgument(
                "FCTN tol and init_scale must be finite and tol >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FctnFactorSet {
    pub factors: Vec<DenseTensor>,
    pub ranks: FctnRankTable,
    pub dims: Vec<usize>,
}

impl FctnFactorSet {
    pub fn new(factors: Vec<DenseTensor>, ranks: FctnRankTable, dims: Vec<usize>) -> Result<Self> {
        let set = FctnFactorSet {
            factors,
            ranks,
            dims,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dims.len();
        if self.ranks.order() != n || self.factors.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} factors and an order-{} rank table for {n} dims",
                self.factors.len(),
                self.ranks.order()
            )));
        }
        for (k, g) in self.factors.iter().enumerate() {
            let expect = self.ranks.factor_dims(k, &self.dims);
            if g.dims() != expect.as_slice() {
                return Err(Error::ShapeMismatch(format!(
                    "factor {k} has dims {:?}, expected {expect:?}",
                    g.dims()
                )));
            }
        }
        Ok(())
    }
}

/// Seeded Gaussian factors for the target `dims`.
pub fn fctn_init(dims: &[usize], config: &FctnConfig) -> Result<FctnFactorSet> {
    config.validate()?;
    if config.ranks.order() != dims.len() {
        return Err(Error::ShapeMismatch(format!(
            "rank table of order {} for dims {dims:?}",
            config.ranks.order()
        )));
    }
    let mut rng = rng_from_seed(config.init_seed);
    let factors = (0..dims.len())
        .map(|k| {
            let fdims = config.ranks.factor_dims(k, dims);
            let scale = config.init_scale / (config.ranks.rank_product(k) as f64).sqrt();
            let data = (0..fdims.iter().product::<usize>())
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect();
            DenseTensor::new(fdims, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FctnFactorSet::new(factors, config.ranks.clone(), dims.to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    Phys(usize),
    Rank(usize, usize),
}

fn factor_labels(k: usize, n: usize) -> Vec<Label> {
    (0..n)
        .map(|j| match j.cmp(&k) {
            std::cmp::Ordering::Equal => Label::Phys(k),
            std::cmp::Ordering::Less => Label::Rank(j, k),
            std::cmp::Ordering::Greater => Label::Rank(k, j),
        })
        .collect()
}

/// Contracts every factor except `skip`, sequentially in increasing factor index.
fn contract_network(set: &FctnFactorSet, skip: Option<usize>) -> Result<(DenseTensor, Vec<Label>)> {
    let n = set.order();
    let mut acc: Option<(DenseTensor, Vec<Label>)> = None;
    for k in (0..n).filter(|&k| Some(k) != skip) {
        let g = &set.factors[k];
        let g_labels = factor_labels(k, n);
        acc = Some(match acc {
            None => (g.clone(), g_labels),
            Some((t, labels)) => {
                let axes: Vec<(usize, usize)> = labels
                    .iter()
                    .enumerate()
                    .filter_map(|(a, l)| g_labels.iter().position(|m| m == l).map(|b| (a, b)))
                    .collect();
                let out = t.contract(g, &axes)?;
                let mut out_labels: Vec<Label> = labels
                    .iter()
                    .enumerate()
                    .filter(|(a, _)| !axes.iter().any(|&(x, _)| x == *a))
                    .map(|(_, &l)| l)
                    .collect();
                out_labels.extend(
                    g_labels
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| !axes.iter().any(|&(_, y)| y == *b))
                        .map(|(_, &l)| l),
                );
                (out, out_labels)
            }
        });
    }
    acc.ok_or_else(|| Error::InvalidArgument("empty factor network".into()))
}

fn arrange(t: DenseTensor, labels: &[Label], target: &[Label]) -> Result<DenseTensor> {
    let perm: Vec<usize> = target
        .iter()
        .map(|l| {
            labels
                .iter()
                .position(|m| m == l)
                .expect("label missing from contraction result")
        })
        .collect();
    t.permute(&perm)
}

/// Full contraction `FCTN(G_1, …, G_N)`.
pub fn fctn_contract(set: &FctnFactorSet) -> Result<DenseTensor> {
    set.validate()?;
    let (t, labels) = contract_network(set, None)?;
    let target: Vec<Label> = (0..set.order()).map(Label::Phys).collect();
    arrange(t, &labels, &target)
}

/// Contraction of all factors but `G_i`. Modes interleave, for each `j != i` in increasing
/// order, `(I_j, R_{j,i})` when `j < i` and `(R_{i,j}, I_j)` when `j > i`.
pub fn compose_leave_one_out(set: &FctnFactorSet, i: usize) -> Result<DenseTensor> {
    let n = set.order();
    if i >= n {
        return Err(Error::InvalidMode { mode: i, order: n });
    }
    set.validate()?;
    let (t, labels) = contract_network(set, Some(i))?;
    let target: Vec<Label> = (0..n)
        .filter(|&j| j != i)
        .flat_map(|j| {
            if j < i {
                [Label::Phys(j), Label::Rank(j, i)]
            } else {
                [Label::Rank(i, j), Label::Phys(j)]
            }
        })
        .collect();
    arrange(t, &labels, &target)
}

/// Positions of the rank modes and of the physical modes in [`compose_leave_one_out`]'s output.
pub fn leave_one_out_modes(n: usize, i: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rank_modes = Vec::with_capacity(n - 1);
    let mut phys_modes = Vec::with_capacity(n - 1);
    for (q, j) in (0..n).filter(|&j| j != i).enumerate() {
        if j < i {
            phys_modes.push(2 * q);
            rank_modes.push(2 * q + 1);
        } else {
            rank_modes.push(2 * q);
            phys_modes.push(2 * q + 1);
        }
    }
    (rank_modes, phys_modes)
}

/// `½‖X − FCTN(G)‖_F²`.
pub fn fctn_objective(x: &DenseTensor, set: &FctnFactorSet) -> Result<f64> {
    let f = fctn_contract(set)?;
    x.expect_same_dims(&f)?;
    Ok(0.5
        * x.as_slice()
            .iter()
            .zip(f.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
}

/// Proximal ridge update of factor `i` against the current `x`.
fn update_factor(x: &DenseTensor, set: &FctnFactorSet, i: usize, rho: f64) -> Result<DenseTensor> {
    let n = set.order();
    let m = compose_leave_one_out(set, i)?;
    let (rank_modes, phys_modes) = leave_one_out_modes(n, i);
    let m_mat = m.unfold_general(&rank_modes, &phys_modes)?;
    let x_mat = x.unfold(i)?;
    let g_mat = set.factors[i].unfold(i)?;

    let size = m_mat.nrows();
    let mut normal = &m_mat * m_mat.transpose();
    for d in 0..size {
        normal[(d, d)] += rho;
    }
    let rhs: Matrix = &x_mat * m_mat.transpose() + g_mat * rho;
    let chol = Cholesky::new(normal).ok_or(Error::SingularSystem(size))?;
    // G · A = B with A symmetric, so A · Gᵀ = Bᵀ
    let g_new = chol.solve(&rhs.transpose()).transpose();
    DenseTensor::fold(&g_new, i, set.factors[i].dims())
}

/// One PAM sweep: every factor in order, then the proximal `X` update.
pub fn pam_step(
    x: &DenseTensor,
    set: &FctnFactorSet,
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &FctnConfig,
) -> Result<(DenseTensor, FctnFactorSet)> {
    config.validate()?;
    x.expect_same_dims(t)?;
    mask.check_matches(t)?;
    if set.dims != x.dims() {
        return Err(Error::ShapeMismatch(format!(
            "factors target {:?}, tensor is {:?}",
            set.dims,
            x.dims()
        )));
    }
    let rho = config.rho;
    let mut next = set.clone();
    for i in 0..set.order() {
        next.factors[i] = update_factor(x, &next, i, rho)?;
    }
    let f = fctn_contract(&next)?;
    let blended = f.zip_map(x, |fv, xv| (fv + rho * xv) / (1.0 + rho))?;
    Ok((project_observed(&blended, t, mask)?, next))
}

/// Completion from the zero-filled observation.
pub fn fctn_complete(
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &FctnConfig,
) -> Result<Completion> {
    let x0 = apply_mask(t, mask)?;
    fctn_complete_from(t, mask, x0, config).map(|(c, _)| c)
}

/// Completion warm-started from `x0`; also returns the final factors.
pub fn fctn_complete_from(
    t: &DenseTensor,
    mask: &ObservationMask,
    x0: DenseTensor,
    config: &FctnConfig,
) -> Result<(Completion, FctnFactorSet)> {
    config.validate()?;
    mask.check_matches(t)?;
    x0.expect_same_dims(t)?;
    if t.order() < 3 {
        return Err(Error::InvalidArgument(
            "FCTN completion needs a tensor of order >= 3".into(),
        ));
    }
    if mask.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    if !t.is_finite() || !x0.is_finite() {
        return Err(Error::NonFinite);
    }
    let x0 = project_observed(&x0, t, mask)?;
    let mut best: Option<(f64, Completion, FctnFactorSet)> = None;
    for r in 0..config.restarts {
        let start = FctnConfig {
            init_seed: restart_seed(config.init_seed, r),
            ..config.clone()
        };
        let (completion, set) = run_pam(t, mask, x0.clone(), &start)?;
        let misfit = observed_misfit(&set, t, mask)?;
        if best.as_ref().is_none_or(|(m, _, _)| misfit < *m) {
            best = Some((misfit, completion, set));
        }
    }
    let (_, completion, set) = best.expect("at least one restart");
    Ok((completion, set))
}

fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// `‖P_Ω(contract(set) − t)‖_F`.
fn observed_misfit(set: &FctnFactorSet, t: &DenseTensor, mask: &ObservationMask) -> Result<f64> {
    let fit = fctn_contract(set)?;
    Ok(fit
        .as_slice()
        .iter()
        .zip(t.as_slice())
        .zip(mask.as_slice())
        .filter(|(_, &m)| m)
        .map(|((a, b), _)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

fn run_pam(
    t: &DenseTensor,
    mask: &ObservationMask,
    mut x: DenseTensor,
    config: &FctnConfig,
) -> Result<(Completion, FctnFactorSet)> {
    let mut set = fctn_init(t.dims(), config)?;
    let mut relative_changes = Vec::new();
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        let (x_next, set_next) = pam_step(&x, &set, t, mask, config)?;
        let change = x_next.relative_change(&x)?;
        relative_changes.push(change);
        iterations += 1;
        x = x_next;
        set = set_next;
        if change < config.tol {
            break;
        }
    }
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok((
        Completion {
            tensor: x,
            iterations,
            relative_changes,
        },
        set,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_table_lookup() {
        let r = FctnRankTable::new(4, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(r.get(0, 1), 1);
        assert_eq!(r.get(3, 0), 3);
        assert_eq!(r.get(1, 2), 4);
        assert_eq!(r.get(3, 1), 5);
        assert_eq!(r.get(2, 3), 6);
        assert!(FctnRankTable::new(3, vec![1, 2]).is_err());
        assert!(FctnRankTable::new(3, vec![1, 0, 2]).is_err());
    }

    #[test]
    fn init_shapes_for_unit_ranks() {
        let config = FctnConfig::new(FctnRankTable::uniform(3, 1).unwrap());
        let set = fctn_init(&[2, 3, 4], &config).unwrap();
        let shapes: Vec<&[usize]> = set.factors.iter().map(|g| g.dims()).collect();
        assert_eq!(shapes, vec![&[2, 1, 1][..], &[1, 3, 1], &[1, 1, 4]]);
        assert_eq!(set, fctn_init(&[2, 3, 4], &config).unwrap());
    }

    #[test]
    fn zero_scale_gives_zero_network() {
        let config = FctnConfig {
            init_scale: 0.0,
            ..FctnConfig::new(FctnRankTable::uniform(3, 2).unwrap())
        };
        let set = fctn_init(&[2, 3, 2], &config).unwrap();
        let x = fctn_contract(&set).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_ranks_contract_to_outer_product() {
        let config = FctnConfig::new(FctnRankTable::uniform(3, 1).unwrap());
        let set = fctn_init(&[2, 3, 4], &config).unwrap();
        let x = fctn_contract(&set).unwrap();
        let g = |k: usize, i: usize| set.factors[k].as_slice()[i];
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..4 {
                    let expect = g(0, a) * g(1, b) * g(2, c);
                    assert!((x.get(&[a, b, c]) - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn matrix_case_leave_one_out_is_other_factor() {
        let config = FctnConfig::new(FctnRankTable::uniform(2, 2).unwrap());
        let set = fctn_init(&[3, 4], &config).unwrap();
        assert_eq!(compose_leave_one_out(&set, 0).unwrap(), set.factors[1]);
        let m1 = compose_leave_one_out(&set, 1).unwrap();
        assert_eq!(m1, set.factors[0]);
        assert!(compose_leave_one_out(&set, 2).is_err());
    }

    #[test]
    fn contraction_is_multilinear() {
        let config = FctnConfig::new(FctnRankTable::uniform(3, 2).unwrap());
        let set = fctn_init(&[3, 2, 3], &config).unwrap();
        let base = fctn_contract(&set).unwrap();
        let mut scaled = set.clone();
        scaled.factors[1] = scaled.factors[1].scale(-2.5);
        let x = fctn_contract(&scaled).unwrap();
        let diff = x.zip_map(&base, |a, b| a - (-2.5) * b).unwrap();
        assert!(diff.frobenius_norm() < 1e-12);
    }

    #[test]
    fn bad_factor_shapes_rejected() {
        let ranks = FctnRankTable::uniform(3, 2).unwrap();
        let factors = vec![
            DenseTensor::zeros(&[2, 2, 2]),
            DenseTensor::zeros(&[2, 3, 2]),
            DenseTensor::zeros(&[2, 2, 3]),
        ];
        assert!(FctnFactorSet::new(factors, ranks, vec![2, 3, 4]).is_err());
    }

    #[test]
    fn fixed_point_of_x_update() {
        let config = FctnConfig::new(FctnRankTable::uniform(3, 2).unwrap());
        let set = fctn_init(&[3, 3, 2], &config).unwrap();
        let x = fctn_contract(&set).unwrap();
        let blended = fctn_contract(&set)
            .unwrap()
            .zip_map(&x, |f, xv| (f + config.rho * xv) / (1.0 + config.rho))
            .unwrap();
        assert!(blended.relative_change(&x).unwrap() < 1e-15);
    }

    #[test]
    fn full_mask_returns_t() {
        let t = DenseTensor::from_fn(&[4, 3, 3], |i| (i[0] + 2 * i[1] + 3 * i[2]) as f64 * 0.1);
        let mask = ObservationMask::full(t.dims());
        let config = FctnConfig::new(FctnRankTable::uniform(3, 2).unwrap());
        let out = fctn_complete(&t, &mask, &config).unwrap();
        assert_eq!(out.tensor, t);
    }

    #[test]
    fn completion_rejects_bad_input() {
        let t = DenseTensor::zeros(&[3, 3, 2]);
        let config = FctnConfig::new(FctnRankTable::uniform(3, 2).unwrap());
        assert!(matches!(
            fctn_complete(&t, &ObservationMask::empty(t.dims()), &config),
            Err(Error::EmptyMask)
        ));
        let flat = DenseTensor::zeros(&[3, 3]);
        let config2 = FctnConfig::new(FctnRankTable::uniform(2, 2).unwrap());
        assert!(fctn_complete(&flat, &ObservationMask::full(&[3, 3]), &config2).is_err());
        let bad_rho = FctnConfig { rho: 0.0, ..config };
        assert!(fctn_complete(&t, &ObservationMask::full(t.dims()), &bad_rho).is_err());
    }

    #[test]
    fn restarts_keep_the_best_observed_fit() {
        let ranks = FctnRankTable::uniform(3, 2).unwrap();
        let truth = fctn_contract(
            &fctn_init(&[5, 4, 3], &FctnConfig { init_seed: 9, ..FctnConfig::new(ranks.clone()) }).unwrap(),
        )
        .unwrap();
        let mask = crate::mask::make_pixel_mask(truth.dims(), 0.6, 3).unwrap();
        let misfit = |restarts| {
            let config = FctnConfig { restarts, max_iters: 20, ..FctnConfig::new(ranks.clone()) };
            let x0 = apply_mask(&truth, &mask).unwrap();
            let (_, set) = fctn_complete_from(&truth, &mask, x0, &config).unwrap();
            observed_misfit(&set, &truth, &mask).unwrap()
        };
        assert!(misfit(4) <= misfit(1));
        let zero = FctnConfig { restarts: 0, ..FctnConfig::new(ranks) };
        assert!(fctn_complete(&truth, &mask, &zero).is_err());
    }
}
