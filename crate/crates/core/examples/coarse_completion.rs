// ADMM completion of a low-Tucker-rank tensor.

use mgnss::coarse::{coarse_complete, CoarseConfig};
use mgnss::mask::{apply_mask, make_pixel_mask};
use mgnss::metrics::rse;
use mgnss::synthetic::random_tucker;

pub fn run_example() -> mgnss::Result<()> {
    let truth = random_tucker(&[12, 12, 12], &[2, 2, 2], 3)?;
    let mask = make_pixel_mask(truth.dims(), 0.4, 5)?;
    let zero_fill = apply_mask(&truth, &mask)?;
    let config = CoarseConfig {
        max_iters: 150,
        ..CoarseConfig::default()
    };
    let out = coarse_complete(&truth, &mask, &config)?;
    println!(
        "{} sweeps, RSE {:.4} (zero fill {:.4})",
        out.iterations,
        rse(&out.tensor, &truth)?,
        rse(&zero_fill, &truth)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
