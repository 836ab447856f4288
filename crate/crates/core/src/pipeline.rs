//! The multi-granularity driver.
//!
//! Stage order for the full model:
//!
//! 1. `coarse_init`: ADMM completion of the whole cube.
//! 2. `fine_init`: FCTN completion of the whole cube, warm-started from step 1.
//! 3. For every round `u`: `coarse_nonlocal[u]` (K-means++ clusters of full-band blocks, each
//!    completed by ADMM) then `fine_nonlocal[u]` (block-matched groups, each completed by
//!    FCTN). Both end with a global re-projection onto the observations.
//!
//! The coarse-only ablation keeps the coarse stages; the fine-only ablation keeps the fine
//! stages and starts the fine initialization from the zero-filled observation.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::coarse_complete_from;
use crate::config::{Ablation, FlatConfig, PipelineConfig};
use crate::error::{Error, Result};
use crate::fctn::fctn_complete_from;
use crate::mask::{
    apply_mask, project_in_place, satisfies_constraint, DegradationSpec, MissingKind, ObservationMask,
    RNG_ALGORITHM,
};
use crate::metrics::{evaluate, PsnrMode, QualityReport};
use crate::nonlocal::{
    aggregate_groups, block_match, build_cluster_tensor, cluster_count, extract_fullband_blocks,
    gather_patches, kmeanspp_cluster, scatter_clusters, select_key_patches,
};
use crate::tensor::DenseTensor;

const TAG_FINE_INIT: u64 = 1;
const TAG_KMEANS: u64 = 2;
const TAG_GROUP: u64 = 3;
const TAG_SCENARIO: u64 = 4;

/// Mixes a base seed with a stage tag and two counters (SplitMix64 finalizer).
pub fn derive_seed(base: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut z = base;
    for part in [tag, a, b] {
        z = z.wrapping_add(part.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    /// Change relative to the previous stage's output (the zero-filled cube for the first).
    pub relative_change: f64,
    /// Solver problems (clusters or groups) completed in this stage.
    pub problems: usize,
    /// Problems skipped because their sub-mask held no observation.
    pub skipped: usize,
    pub constraint_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub ablation: Ablation,
    pub seed: u64,
    pub rng: String,
    pub dims: Vec<usize>,
    pub observed_entries: usize,
    pub realized_rate: f64,
    /// Divisor applied to the observations before solving.
    pub normalization: f64,
    pub total_seconds: f64,
    /// Relative change between successive round outputs.
    pub round_relative_changes: Vec<f64>,
    pub stages: Vec<StageRecord>,
    pub metrics: Option<QualityReport>,
    pub config: FlatConfig,
}

impl RecoveryReport {
    /// The report with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> RecoveryReport {
        let mut r = self.clone();
        r.total_seconds = 0.0;
        for s in &mut r.stages {
            s.seconds = 0.0;
        }
        r
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("report always serializes")
    }
}

/// Snapshot handed to a stage observer: stage name, current iterate and the observations,
/// both in the normalized space the solvers work in.
pub struct StageView<'a> {
    pub name: &'a str,
    pub x: &'a DenseTensor,
    pub observed: &'a DenseTensor,
    pub mask: &'a ObservationMask,
}

/// Runs the model configured by `config` (including its ablation mode).
pub fn recover(
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &PipelineConfig,
) -> Result<(DenseTensor, RecoveryReport)> {
    recover_with_observer(t, mask, config, |_| {})
}

/// [`recover`] with the ablation mode replaced.
pub fn recover_ablation(
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &PipelineConfig,
    ablation: Ablation,
) -> Result<(DenseTensor, RecoveryReport)> {
    let config = PipelineConfig {
        ablation,
        ..config.clone()
    };
    recover(t, mask, &config)
}

struct Driver<'a> {
    t: DenseTensor,
    mask: &'a ObservationMask,
    config: &'a PipelineConfig,
    pool: rayon::ThreadPool,
    stages: Vec<StageRecord>,
}

struct StageOutput {
    x: DenseTensor,
    problems: usize,
    skipped: usize,
}

impl Driver<'_> {
    fn run_stage(
        &mut self,
        name: String,
        prev: &DenseTensor,
        observer: &mut dyn FnMut(&StageView<'_>),
        body: impl FnOnce(&Self) -> Result<StageOutput>,
    ) -> Result<DenseTensor> {
        let start = Instant::now();
        let out = body(self).map_err(|e| e.in_stage(name.clone()))?;
        let mut x = out.x;
        project_in_place(&mut x, &self.t, self.mask);
        if !x.is_finite() {
            return Err(Error::NonFinite.in_stage(name));
        }
        let constraint_ok = satisfies_constraint(&x, &self.t, self.mask);
        debug_assert!(constraint_ok, "stage {name} broke the observation constraint");
        observer(&StageView {
            name: &name,
            x: &x,
            observed: &self.t,
            mask: self.mask,
        });
        self.stages.push(StageRecord {
            relative_change: x.relative_change(prev)?,
            seconds: start.elapsed().as_secs_f64(),
            problems: out.problems,
            skipped: out.skipped,
            constraint_ok,
            name,
        });
        Ok(x)
    }

    fn coarse_init(&self, x0: &DenseTensor) -> Result<StageOutput> {
        let c = coarse_complete_from(&self.t, self.mask, x0.clone(), &self.config.coarse)?;
        Ok(StageOutput {
            x: c.tensor,
            problems: 1,
            skipped: 0,
        })
    }

    fn fine_init(&self, x0: &DenseTensor) -> Result<StageOutput> {
        let mut fctn = self.config.fctn_init.clone();
        fctn.init_seed = derive_seed(self.config.seed, TAG_FINE_INIT, 0, 0);
        let (c, _) = fctn_complete_from(&self.t, self.mask, x0.clone(), &fctn)?;
        Ok(StageOutput {
            x: c.tensor,
            problems: 1,
            skipped: 0,
        })
    }

    fn coarse_nonlocal(&self, x: &DenseTensor, round: usize) -> Result<StageOutput> {
        let cfg = self.config;
        let dims = x.dims();
        let blocks = extract_fullband_blocks(x, cfg.w1, cfg.stride1)?;
        let l = cluster_count(blocks.len(), cfg.blocks_per_cluster);
        let seed = derive_seed(cfg.seed, TAG_KMEANS, round as u64, 0);
        let members = kmeanspp_cluster(&blocks, l, seed, cfg.kmeans_max_iters)?;

        let solved: Vec<(crate::nonlocal::Cluster, bool)> = self.pool.install(|| {
            members
                .par_iter()
                .map(|m| {
                    let mut cluster = build_cluster_tensor(m, x, self.mask, cfg.w1)?;
                    if cluster.sub_mask.observed_count() == 0 {
                        return Ok((cluster, false));
                    }
                    let observed = DenseTensor::new(
                        cluster.group_tensor.dims().to_vec(),
                        gather_patches(self.t.as_slice(), dims, m, cfg.w1)?,
                    )?;
                    let done = coarse_complete_from(
                        &observed,
                        &cluster.sub_mask,
                        cluster.group_tensor.clone(),
                        &cfg.coarse,
                    )?;
                    cluster.group_tensor = done.tensor;
                    Ok((cluster, true))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let skipped = solved.iter().filter(|(_, s)| !s).count();
        let clusters: Vec<_> = solved.into_iter().map(|(c, _)| c).collect();
        Ok(StageOutput {
            x: scatter_clusters(&clusters, dims)?,
            problems: clusters.len(),
            skipped,
        })
    }

    fn fine_nonlocal(&self, x: &DenseTensor, round: usize) -> Result<StageOutput> {
        let cfg = self.config;
        let dims = x.dims();
        let keys = select_key_patches(dims, cfg.w2, cfg.v)?;
        let solved: Vec<(crate::nonlocal::NssGroup, bool)> = self.pool.install(|| {
            keys.par_iter()
                .enumerate()
                .map(|(idx, &key)| {
                    let mut group =
                        block_match(key, x, self.mask, cfg.w2, cfg.k_similar, cfg.search_radius)?;
                    if group.sub_mask.observed_count() == 0 {
                        return Ok((group, false));
                    }
                    let observed = DenseTensor::new(
                        group.group_tensor.dims().to_vec(),
                        gather_patches(self.t.as_slice(), dims, &group.member_origins, cfg.w2)?,
                    )?;
                    let mut fctn = cfg.fctn_group.clone();
                    fctn.init_seed = derive_seed(cfg.seed, TAG_GROUP, round as u64, idx as u64);
                    let (done, _) = fctn_complete_from(
                        &observed,
                        &group.sub_mask,
                        group.group_tensor.clone(),
                        &fctn,
                    )?;
                    group.group_tensor = done.tensor;
                    Ok((group, true))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let skipped = solved.iter().filter(|(_, s)| !s).count();
        let groups: Vec<_> = solved.into_iter().map(|(g, _)| g).collect();
        Ok(StageOutput {
            x: aggregate_groups(&groups, dims)?,
            problems: groups.len(),
            skipped,
        })
    }
}

/// [`recover`] calling `observer` after every stage.
pub fn recover_with_observer(
    t: &DenseTensor,
    mask: &ObservationMask,
    config: &PipelineConfig,
    mut observer: impl FnMut(&StageView<'_>),
) -> Result<(DenseTensor, RecoveryReport)> {
    let started = Instant::now();
    config.validate()?;
    if t.order() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "recovery needs an order-3 cube, got dims {:?}",
            t.dims()
        )));
    }
    mask.check_matches(t)?;
    if mask.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let observed = apply_mask(t, mask)?;
    if !observed.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = if config.normalize_input {
        let peak = observed.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            peak
        } else {
            1.0
        }
    } else {
        1.0
    };
    let normalized = observed.map(|v| v / scale);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.workers > 0 {
        builder = builder.num_threads(config.workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut driver = Driver {
        t: normalized.clone(),
        mask,
        config,
        pool,
        stages: Vec::new(),
    };
    let observer: &mut dyn FnMut(&StageView<'_>) = &mut observer;

    let mut x = normalized;
    if config.ablation != Ablation::FineOnly {
        let prev = x.clone();
        x = driver.run_stage("coarse_init".into(), &prev, observer, |d| d.coarse_init(&prev))?;
    }
    if config.ablation != Ablation::CoarseOnly {
        let prev = x.clone();
        x = driver.run_stage("fine_init".into(), &prev, observer, |d| d.fine_init(&prev))?;
    }
    let mut round_relative_changes = Vec::with_capacity(config.iters);
    for u in 0..config.iters {
        let round_start = x.clone();
        if config.ablation != Ablation::FineOnly {
            let prev = x.clone();
            x = driver.run_stage(format!("coarse_nonlocal[{}]", u + 1), &prev, observer, |d| {
                d.coarse_nonlocal(&prev, u)
            })?;
        }
        if config.ablation != Ablation::CoarseOnly {
            let prev = x.clone();
            x = driver.run_stage(format!("fine_nonlocal[{}]", u + 1), &prev, observer, |d| {
                d.fine_nonlocal(&prev, u)
            })?;
        }
        round_relative_changes.push(x.relative_change(&round_start)?);
    }

    let mut output = x.scale(scale);
    project_in_place(&mut output, &observed, mask);
    let report = RecoveryReport {
        ablation: config.ablation,
        seed: config.seed,
        rng: RNG_ALGORITHM.to_string(),
        dims: t.dims().to_vec(),
        observed_entries: mask.observed_count(),
        realized_rate: mask.realized_rate(),
        normalization: scale,
        total_seconds: started.elapsed().as_secs_f64(),
        round_relative_changes,
        stages: driver.stages,
        metrics: None,
        config: config.to_flat(),
    };
    Ok((output, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub kind: MissingKind,
    pub rate: f64,
    pub seed: u64,
    pub realized_rate: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub rse: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub ablation: Ablation,
    pub psnr_mode: PsnrMode,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    pub fn without_timings(&self) -> BenchmarkTable {
        let mut t = self.clone();
        for r in &mut t.rows {
            r.seconds = 0.0;
        }
        t
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("table always serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<7} {:>6} {:>20} {:>8} {:>9} {:>7} {:>9} {:>9}\n",
            "kind", "rate", "seed", "realized", "psnr_db", "ssim", "rse", "seconds"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<7} {:>6.3} {:>20} {:>8.4} {:>9.4} {:>7.4} {:>9.3e} {:>9.2}\n",
                r.kind.to_string(),
                r.rate,
                r.seed,
                r.realized_rate,
                r.psnr_db,
                r.ssim,
                r.rse,
                r.seconds
            ));
        }
        out
    }
}

/// Degrades `truth` once per `(kind, rate)` pair, recovers and scores each result.
///
/// Row order is kinds outer, rates inner. Each mask seed is derived from the config seed and
/// the pair's position, so tables are reproducible apart from the `seconds` column.
pub fn run_benchmark(
    truth: &DenseTensor,
    kinds: &[MissingKind],
    rates: &[f64],
    config: &PipelineConfig,
    psnr_mode: PsnrMode,
) -> Result<BenchmarkTable> {
    let mut rows = Vec::with_capacity(kinds.len() * rates.len());
    for (ki, &kind) in kinds.iter().enumerate() {
        for (ri, &rate) in rates.iter().enumerate() {
            let seed = derive_seed(config.seed, TAG_SCENARIO, ki as u64, ri as u64);
            let mask = DegradationSpec {
                kind,
                sampling_rate: rate,
                seed,
            }
            .make_mask(truth.dims())?;
            let observed = apply_mask(truth, &mask)?;
            let start = Instant::now();
            let (x, _) = recover(&observed, &mask, config)?;
            let seconds = start.elapsed().as_secs_f64();
            let q = evaluate(&x, truth, psnr_mode)?;
            rows.push(BenchmarkRow {
                kind,
                rate,
                seed,
                realized_rate: mask.realized_rate(),
                psnr_db: q.psnr_db,
                ssim: q.ssim,
                rse: q.rse,
                seconds,
            });
        }
    }
    Ok(BenchmarkTable {
        ablation: config.ablation,
        psnr_mode,
        rows,
    })
}

/// [`run_benchmark`] on a ground-truth cube stored as an `MGT1` file.
pub fn run_benchmark_file(
    path: impl AsRef<Path>,
    kinds: &[MissingKind],
    rates: &[f64],
    config: &PipelineConfig,
    psnr_mode: PsnrMode,
) -> Result<BenchmarkTable> {
    let truth = crate::io::load_tensor(path)?;
    run_benchmark(&truth, kinds, rates, config, psnr_mode)
}
