//! Patch machinery for both granularities.
//!
//! Coarse grouping cuts the cube into overlapping full-band `w1 × w1` blocks and clusters
//! them with K-means++; every cluster is stacked into a `w1² × bands × H` tensor. Fine
//! grouping picks key patches on a fixed grid and block-matches the `k` nearest `w2 × w2`
//! patches, stacked as `w2 × w2 × bands × k`. Both stacks share one linearization (row
//! fastest, then column, band, member), so gathering and aggregation are common code.
//!
//! Origins are `(row, col)` pairs; "row-major order" sorts by row, then column.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mask::{gather_submask, rng_from_seed, ObservationMask};
use crate::tensor::DenseTensor;

pub type Origin = (usize, usize);

fn spatial_dims(dims: &[usize]) -> Result<(usize, usize, usize)> {
    match *dims {
        [rows, cols, bands] => Ok((rows, cols, bands)),
        _ => Err(Error::ShapeMismatch(format!(
            "expected an order-3 image cube, got dims {dims:?}"
        ))),
    }
}

/// Positions `0, step, 2·step, …` plus a flush final position `len − w` when the grid misses it.
pub fn grid_positions(len: usize, w: usize, step: usize) -> Result<Vec<usize>> {
    if w == 0 || w > len {
        return Err(Error::InvalidArgument(format!(
            "patch size {w} does not fit a side of {len}"
        )));
    }
    if step == 0 {
        return Err(Error::InvalidArgument("patch stride must be >= 1".into()));
    }
    let last = len - w;
    let mut positions: Vec<usize> = (0..=last).step_by(step).collect();
    if *positions.last().expect("grid starts at 0") != last {
        positions.push(last);
    }
    Ok(positions)
}

fn grid_origins(dims: &[usize], w: usize, step: usize) -> Result<Vec<Origin>> {
    let (rows, cols, _) = spatial_dims(dims)?;
    let rs = grid_positions(rows, w, step)?;
    let cs = grid_positions(cols, w, step)?;
    Ok(rs
        .iter()
        .flat_map(|&r| cs.iter().map(move |&c| (r, c)))
        .collect())
}

/// Gathers the full-band `w × w` patches at `origins` of an order-3 cube laid out
/// mode-0-fastest. Output layout: row, column, band, member.
pub fn gather_patches<T: Copy>(
    src: &[T],
    dims: &[usize],
    origins: &[Origin],
    w: usize,
) -> Result<Vec<T>> {
    let (rows, cols, bands) = spatial_dims(dims)?;
    let mut out = Vec::with_capacity(w * w * bands * origins.len());
    for &(r0, c0) in origins {
        if r0 + w > rows || c0 + w > cols {
            return Err(Error::InvalidArgument(format!(
                "patch at ({r0}, {c0}) of size {w} leaves a {rows}x{cols} image"
            )));
        }
        for b in 0..bands {
            for c in c0..c0 + w {
                let start = r0 + rows * c + rows * cols * b;
                out.extend_from_slice(&src[start..start + w]);
            }
        }
    }
    Ok(out)
}

/// Overlap-count averaging of patch contributions.
#[derive(Clone, Debug)]
pub struct Accumulator {
    sum: DenseTensor,
    weight: Vec<f64>,
}

impl Accumulator {
    pub fn new(dims: &[usize]) -> Result<Self> {
        spatial_dims(dims)?;
        let sum = DenseTensor::zeros(dims);
        let weight = vec![0.0; sum.len()];
        Ok(Accumulator { sum, weight })
    }

    /// Adds stacked patches (layout of [`gather_patches`]) with unit weight each.
    pub fn add(&mut self, origins: &[Origin], w: usize, values: &[f64]) -> Result<()> {
        let dims = self.sum.dims().to_vec();
        let (rows, cols, bands) = spatial_dims(&dims)?;
        if values.len() != w * w * bands * origins.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} patches of size {w}x{w}x{bands}",
                values.len(),
                origins.len()
            )));
        }
        let mut src = values.iter();
        let sum = self.sum.as_mut_slice();
        for &(r0, c0) in origins {
            if r0 + w > rows || c0 + w > cols {
                return Err(Error::InvalidArgument(format!(
                    "patch at ({r0}, {c0}) leaves the image"
                )));
            }
            for b in 0..bands {
                for c in c0..c0 + w {
                    let start = r0 + rows * c + rows * cols * b;
                    for off in start..start + w {
                        sum[off] += src.next().expect("length checked above");
                        self.weight[off] += 1.0;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Entrywise `sum / weight`; fails on any entry no patch touched.
    pub fn finalize(self) -> Result<DenseTensor> {
        let rows = self.sum.dims()[0];
        let cols = self.sum.dims()[1];
        let mut out = self.sum;
        for (i, (v, &w)) in out.as_mut_slice().iter_mut().zip(&self.weight).enumerate() {
            if w <= 0.0 {
                let pixel = i % (rows * cols);
                return Err(Error::Uncovered {
                    row: pixel % rows,
                    col: pixel / rows,
                });
            }
            *v /= w;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullBandBlock {
    pub origin: Origin,
    /// `w1² × bands`, row fastest within the window.
    pub data: Vec<f64>,
}

/// Overlapping `w1 × w1` full-band blocks on a flush grid with step `stride`, row-major.
pub fn extract_fullband_blocks(x: &DenseTensor, w1: usize, stride: usize) -> Result<Vec<FullBandBlock>> {
    let origins = grid_origins(x.dims(), w1, stride)?;
    origins
        .into_iter()
        .map(|origin| {
            Ok(FullBandBlock {
                origin,
                data: gather_patches(x.as_slice(), x.dims(), &[origin], w1)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    /// Cluster index of every input vector.
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Seeded K-means++ seeding followed by Lloyd iterations until the assignment is stable
/// or `max_iters` is reached. Ties go to the lower center index.
pub fn kmeanspp<V: AsRef<[f64]>>(
    points: &[V],
    l: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansResult> {
    let n = points.len();
    if l == 0 || l > n {
        return Err(Error::InvalidArgument(format!(
            "cannot form {l} clusters from {n} blocks"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].as_ref().to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p.as_ref(), &centers[0])).collect();
    while centers.len() < l {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the scan short of the target; take the last candidate
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let center = points[pick].as_ref().to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p.as_ref(), &center));
        }
        centers.push(center);
    }

    let dim = centers[0].len();
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p.as_ref(), &centers).0).collect();
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; l];
        let mut counts = vec![0usize; l];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for ((center, sum), &count) in centers.iter_mut().zip(sums).zip(&counts) {
            if count > 0 {
                *center = sum.into_iter().map(|s| s / count as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p.as_ref(), &centers).0).collect();
        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }
    Ok(KMeansResult {
        assignments,
        centers,
        iterations,
    })
}

/// Clusters blocks into at most `l` groups; returns the member origins of every non-empty
/// cluster, members in block order.
pub fn kmeanspp_cluster(
    blocks: &[FullBandBlock],
    l: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Vec<Vec<Origin>>> {
    let features: Vec<&[f64]> = blocks.iter().map(|b| b.data.as_slice()).collect();
    let result = kmeanspp(&features, l, seed, max_iters)?;
    let mut members = vec![Vec::new(); l];
    for (block, &a) in blocks.iter().zip(&result.assignments) {
        members[a].push(block.origin);
    }
    Ok(members.into_iter().filter(|m| !m.is_empty()).collect())
}

/// `L = max(1, ⌈S / blocks_per_cluster⌉)`, capped at `S`.
pub fn cluster_count(block_count: usize, blocks_per_cluster: usize) -> usize {
    block_count
        .div_ceil(blocks_per_cluster.max(1))
        .max(1)
        .min(block_count.max(1))
}

#[derive(Clone, Debug)]
pub struct Cluster {
    pub member_origins: Vec<Origin>,
    /// `w1² × bands × H`.
    pub group_tensor: DenseTensor,
    pub sub_mask: ObservationMask,
}

impl Cluster {
    pub fn block_size(&self) -> usize {
        (self.group_tensor.dims()[0] as f64).sqrt().round() as usize
    }
}

/// Stacks member blocks of `x` along the third mode, with the matching sub-mask.
pub fn build_cluster_tensor(
    members: &[Origin],
    x: &DenseTensor,
    mask: &ObservationMask,
    w1: usize,
) -> Result<Cluster> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("cluster has no members".into()));
    }
    mask.check_matches(x)?;
    let bands = x.dims()[2];
    let dims = vec![w1 * w1, bands, members.len()];
    let data = gather_patches(x.as_slice(), x.dims(), members, w1)?;
    let sub_mask = gather_submask(mask, members, w1)?.with_dims(dims.clone())?;
    Ok(Cluster {
        member_origins: members.to_vec(),
        group_tensor: DenseTensor::new(dims, data)?,
        sub_mask,
    })
}

/// Places every cluster back, averaging overlaps.
pub fn scatter_clusters(clusters: &[Cluster], dims: &[usize]) -> Result<DenseTensor> {
    let mut acc = Accumulator::new(dims)?;
    for cluster in clusters {
        acc.add(
            &cluster.member_origins,
            cluster.block_size(),
            cluster.group_tensor.as_slice(),
        )?;
    }
    acc.finalize()
}

/// Key patch origins on a flush grid with interval `v`, row-major.
pub fn select_key_patches(dims: &[usize], w2: usize, v: usize) -> Result<Vec<Origin>> {
    grid_origins(dims, w2, v)
}

#[derive(Clone, Debug)]
pub struct NssGroup {
    pub key_origin: Origin,
    /// Key first, then by increasing distance; ties in row-major order.
    pub member_origins: Vec<Origin>,
    pub distances: Vec<f64>,
    /// `w2 × w2 × bands × k`.
    pub group_tensor: DenseTensor,
    pub sub_mask: ObservationMask,
}

impl NssGroup {
    pub fn k(&self) -> usize {
        self.member_origins.len()
    }
}

/// Squared Euclidean distance between two full-band patches of `x`.
pub fn patch_distance(x: &DenseTensor, a: Origin, b: Origin, w: usize) -> f64 {
    let dims = x.dims();
    let (rows, cols) = (dims[0], dims[1]);
    let data = x.as_slice();
    let mut d = 0.0;
    for band in 0..dims[2] {
        for c in 0..w {
            let sa = a.0 + rows * (a.1 + c) + rows * cols * band;
            let sb = b.0 + rows * (b.1 + c) + rows * cols * band;
            for (p, q) in data[sa..sa + w].iter().zip(&data[sb..sb + w]) {
                d += (p - q) * (p - q);
            }
        }
    }
    d
}

/// The `k` candidates nearest to the key among all stride-1 origins within `search_radius`
/// (Chebyshev) of it. The key always ranks first; fewer than `k` candidates yields them all.
pub fn match_candidates(
    key: Origin,
    x: &DenseTensor,
    w2: usize,
    k: usize,
    search_radius: usize,
) -> Result<Vec<(Origin, f64)>> {
    let (rows, cols, _) = spatial_dims(x.dims())?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if w2 == 0 || w2 > rows || w2 > cols {
        return Err(Error::InvalidArgument(format!(
            "patch size {w2} does not fit a {rows}x{cols} image"
        )));
    }
    if key.0 + w2 > rows || key.1 + w2 > cols {
        return Err(Error::InvalidArgument(format!(
            "key patch at {key:?} leaves the image"
        )));
    }
    let r_lo = key.0.saturating_sub(search_radius);
    let r_hi = (key.0.saturating_add(search_radius)).min(rows - w2);
    let c_lo = key.1.saturating_sub(search_radius);
    let c_hi = (key.1.saturating_add(search_radius)).min(cols - w2);
    let mut candidates: Vec<(Origin, f64)> = Vec::new();
    for r in r_lo..=r_hi {
        for c in c_lo..=c_hi {
            if (r, c) != key {
                candidates.push(((r, c), patch_distance(x, key, (r, c), w2)));
            }
        }
    }
    // stable sort keeps row-major order among equal distances
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out = Vec::with_capacity(k);
    out.push((key, 0.0));
    out.extend(candidates.into_iter().take(k - 1));
    Ok(out)
}

/// Block-matches around `key` and stacks the group into a fourth-order tensor.
pub fn block_match(
    key: Origin,
    x: &DenseTensor,
    mask: &ObservationMask,
    w2: usize,
    k: usize,
    search_radius: usize,
) -> Result<NssGroup> {
    mask.check_matches(x)?;
    let matched = match_candidates(key, x, w2, k, search_radius)?;
    let (member_origins, distances): (Vec<Origin>, Vec<f64>) = matched.into_iter().unzip();
    let data = gather_patches(x.as_slice(), x.dims(), &member_origins, w2)?;
    let dims = vec![w2, w2, x.dims()[2], member_origins.len()];
    Ok(NssGroup {
        key_origin: key,
        sub_mask: gather_submask(mask, &member_origins, w2)?,
        group_tensor: DenseTensor::new(dims, data)?,
        member_origins,
        distances,
    })
}

/// Averages all groups back into the image; groups are summed in the given order and
/// members in rank order.
pub fn aggregate_groups(groups: &[NssGroup], dims: &[usize]) -> Result<DenseTensor> {
    let mut acc = Accumulator::new(dims)?;
    for group in groups {
        let w2 = group.group_tensor.dims()[0];
        acc.add(&group.member_origins, w2, group.group_tensor.as_slice())?;
    }
    acc.finalize()
}
