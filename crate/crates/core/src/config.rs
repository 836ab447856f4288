//! Pipeline configuration and its flat key-value file form.
//!
//! Files are flat TOML documents whose keys are exactly the fields of [`FlatConfig`]. Any
//! subset may be given; missing keys keep their defaults. Reports embed the full merged
//! set, so a report's `[config]` table can be fed back in to reproduce a run.

use serde::{Deserialize, Serialize};

use crate::coarse::CoarseConfig;
use crate::error::{Error, Result};
use crate::fctn::{FctnConfig, FctnRankTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    CoarseOnly,
    FineOnly,
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ablation::Full => "full",
            Ablation::CoarseOnly => "coarse_only",
            Ablation::FineOnly => "fine_only",
        })
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Ablation::Full),
            "coarse" | "coarse_only" => Ok(Ablation::CoarseOnly),
            "fine" | "fine_only" => Ok(Ablation::FineOnly),
            other => Err(Error::InvalidArgument(format!(
                "unknown ablation `{other}` (full|coarse|fine)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Coarse block side and grid step.
    pub w1: usize,
    pub stride1: usize,
    /// Fine patch side and key-patch interval.
    pub w2: usize,
    pub v: usize,
    /// Target blocks per K-means++ cluster; `L = max(1, ⌈S / blocks_per_cluster⌉)`.
    pub blocks_per_cluster: usize,
    pub kmeans_max_iters: usize,
    pub k_similar: usize,
    /// Chebyshev radius of the block-matching window; anything past the image size is global.
    pub search_radius: usize,
    /// Outer coarse/fine rounds.
    pub iters: usize,
    pub coarse: CoarseConfig,
    /// Whole-cube fine initialization (order 3).
    pub fctn_init: FctnConfig,
    /// Per-group fine completion (order 4). `init_seed` is derived per group.
    pub fctn_group: FctnConfig,
    pub seed: u64,
    pub ablation: Ablation,
    pub normalize_input: bool,
    /// Worker threads for per-group solves; 0 picks the machine default.
    pub workers: usize,
}

pub fn default_init_ranks() -> FctnRankTable {
    FctnRankTable::uniform(3, 3).expect("static rank table")
}

/// Spatial–spatial and spatial–spectral ranks 3, ranks touching the similarity mode 2.
pub fn default_group_ranks() -> FctnRankTable {
    FctnRankTable::new(4, vec![3, 3, 2, 3, 2, 2]).expect("static rank table")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            w1: 5,
            stride1: 2,
            w2: 6,
            v: 5,
            blocks_per_cluster: 50,
            kmeans_max_iters: 100,
            k_similar: 16,
            search_radius: 20,
            iters: 3,
            coarse: CoarseConfig::default(),
            fctn_init: FctnConfig::new(default_init_ranks()),
            fctn_group: FctnConfig::new(default_group_ranks()),
            seed: 1,
            ablation: Ablation::Full,
            normalize_input: true,
            workers: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.w1 < 2 || self.w2 < 2 {
            return bad(format!("patch sizes must be >= 2 (w1 = {}, w2 = {})", self.w1, self.w2));
        }
        if self.stride1 == 0 || self.v == 0 {
            return bad("patch strides must be >= 1".into());
        }
        if self.k_similar == 0 || self.blocks_per_cluster == 0 {
            return bad("k_similar and blocks_per_cluster must be >= 1".into());
        }
        if self.fctn_init.ranks.order() != 3 {
            return bad("init_ranks must describe an order-3 network".into());
        }
        if self.fctn_group.ranks.order() != 4 {
            return bad("group_ranks must describe an order-4 network".into());
        }
        self.coarse.validate()?;
        self.fctn_init.validate()?;
        self.fctn_group.validate()?;
        Ok(())
    }

    pub fn to_flat(&self) -> FlatConfig {
        FlatConfig {
            w1: Some(self.w1),
            stride1: Some(self.stride1),
            w2: Some(self.w2),
            v: Some(self.v),
            blocks_per_cluster: Some(self.blocks_per_cluster),
            kmeans_max_iters: Some(self.kmeans_max_iters),
            k_similar: Some(self.k_similar),
            search_radius: Some(self.search_radius),
            iters: Some(self.iters),
            seed: Some(self.seed),
            ablation: Some(self.ablation),
            normalize_input: Some(self.normalize_input),
            workers: Some(self.workers),
            coarse_alpha: Some(self.coarse.alpha.clone()),
            coarse_mu0: Some(self.coarse.mu0),
            coarse_eta: Some(self.coarse.eta),
            coarse_epsilon: Some(self.coarse.epsilon),
            coarse_max_iters: Some(self.coarse.max_iters),
            coarse_tol: Some(self.coarse.tol),
            coarse_weighted: Some(self.coarse.weighted),
            init_ranks: Some(self.fctn_init.ranks.upper().to_vec()),
            init_rho: Some(self.fctn_init.rho),
            init_max_iters: Some(self.fctn_init.max_iters),
            init_tol: Some(self.fctn_init.tol),
            init_scale: Some(self.fctn_init.init_scale),
            init_restarts: Some(self.fctn_init.restarts),
            group_ranks: Some(self.fctn_group.ranks.upper().to_vec()),
            group_rho: Some(self.fctn_group.rho),
            group_max_iters: Some(self.fctn_group.max_iters),
            group_tol: Some(self.fctn_group.tol),
            group_init_scale: Some(self.fctn_group.init_scale),
            group_restarts: Some(self.fctn_group.restarts),
        }
    }

    /// Overrides every field present in `flat`.
    pub fn apply(&mut self, flat: &FlatConfig) -> Result<()> {
        macro_rules! set {
            ($($src:ident => $($dst:ident).+;)*) => {
                $(if let Some(v) = &flat.$src { self.$($dst).+ = v.clone(); })*
            };
        }
        set! {
            w1 => w1;
            stride1 => stride1;
            w2 => w2;
            v => v;
            blocks_per_cluster => blocks_per_cluster;
            kmeans_max_iters => kmeans_max_iters;
            k_similar => k_similar;
            search_radius => search_radius;
            iters => iters;
            seed => seed;
            ablation => ablation;
            normalize_input => normalize_input;
            workers => workers;
            coarse_alpha => coarse.alpha;
            coarse_mu0 => coarse.mu0;
            coarse_eta => coarse.eta;
            coarse_epsilon => coarse.epsilon;
            coarse_max_iters => coarse.max_iters;
            coarse_tol => coarse.tol;
            coarse_weighted => coarse.weighted;
            init_rho => fctn_init.rho;
            init_max_iters => fctn_init.max_iters;
            init_tol => fctn_init.tol;
            init_scale => fctn_init.init_scale;
            init_restarts => fctn_init.restarts;
            group_rho => fctn_group.rho;
            group_max_iters => fctn_group.max_iters;
            group_tol => fctn_group.tol;
            group_init_scale => fctn_group.init_scale;
            group_restarts => fctn_group.restarts;
        }
        if let Some(upper) = &flat.init_ranks {
            self.fctn_init.ranks = FctnRankTable::new(3, upper.clone())?;
        }
        if let Some(upper) = &flat.group_ranks {
            self.fctn_group.ranks = FctnRankTable::new(4, upper.clone())?;
        }
        Ok(())
    }

    /// Defaults overridden by a flat TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.apply(&FlatConfig::from_toml_str(text)?)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        self.to_flat().to_toml_string()
    }
}

/// Every tunable under its file key; `None` keeps the current value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub w1: Option<usize>,
    pub stride1: Option<usize>,
    pub w2: Option<usize>,
    pub v: Option<usize>,
    pub blocks_per_cluster: Option<usize>,
    pub kmeans_max_iters: Option<usize>,
    pub k_similar: Option<usize>,
    pub search_radius: Option<usize>,
    pub iters: Option<usize>,
    pub seed: Option<u64>,
    pub ablation: Option<Ablation>,
    pub normalize_input: Option<bool>,
    pub workers: Option<usize>,
    pub coarse_alpha: Option<Vec<f64>>,
    pub coarse_mu0: Option<f64>,
    pub coarse_eta: Option<f64>,
    pub coarse_epsilon: Option<f64>,
    pub coarse_max_iters: Option<usize>,
    pub coarse_tol: Option<f64>,
    pub coarse_weighted: Option<bool>,
    /// Upper triangle `R_{12}, R_{13}, R_{23}`.
    pub init_ranks: Option<Vec<usize>>,
    pub init_rho: Option<f64>,
    pub init_max_iters: Option<usize>,
    pub init_tol: Option<f64>,
    pub init_scale: Option<f64>,
    pub init_restarts: Option<usize>,
    /// Upper triangle `R_{12}, R_{13}, R_{14}, R_{23}, R_{24}, R_{34}`.
    pub group_ranks: Option<Vec<usize>>,
    pub group_rho: Option<f64>,
    pub group_max_iters: Option<usize>,
    pub group_tol: Option<f64>,
    pub group_init_scale: Option<f64>,
    pub group_restarts: Option<usize>,
}

impl FlatConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Parses one `key=value` override. Bare words are accepted as strings.
    pub fn from_assignment(assignment: &str) -> Result<Self> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        Self::from_toml_str(&format!("{key} = {value}"))
            .or_else(|_| Self::from_toml_str(&format!("{key} = \"{value}\"")))
    }
}
