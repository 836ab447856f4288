// PAM completion with a fully connected tensor network.

use mgnss::fctn::{fctn_complete_from, fctn_contract, fctn_init, FctnConfig, FctnRankTable};
use mgnss::mask::{apply_mask, make_pixel_mask};
use mgnss::metrics::rse;

pub fn run_example() -> mgnss::Result<()> {
    let ranks = FctnRankTable::uniform(3, 2)?;
    let truth_config = FctnConfig {
        init_seed: 99,
        ..FctnConfig::new(ranks.clone())
    };
    let truth = fctn_contract(&fctn_init(&[8, 8, 4], &truth_config)?)?;
    let mask = make_pixel_mask(truth.dims(), 0.5, 2)?;
    let config = FctnConfig {
        max_iters: 300,
        tol: 1e-9,
        ..FctnConfig::new(ranks)
    };
    let x0 = apply_mask(&truth, &mask)?;
    let (out, factors) = fctn_complete_from(&truth, &mask, x0, &config)?;
    println!(
        "{} sweeps, RSE {:.2e}, factor dims {:?}",
        out.iterations,
        rse(&out.tensor, &truth)?,
        factors.factors.iter().map(|g| g.dims().to_vec()).collect::<Vec<_>>()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
