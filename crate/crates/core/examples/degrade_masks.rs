// Pixel and stripe masks at a requested sampling rate.

use mgnss::mask::{apply_mask, DegradationSpec, MissingKind};
use mgnss::synthetic::synthetic_cube;

pub fn run_example() -> mgnss::Result<()> {
    let truth = synthetic_cube(&[20, 20, 4], 1);
    for kind in [MissingKind::Pixel, MissingKind::Stripe] {
        let mask = DegradationSpec {
            kind,
            sampling_rate: 0.3,
            seed: 7,
        }
        .make_mask(truth.dims())?;
        let observed = apply_mask(&truth, &mask)?;
        println!(
            "{kind}: {} of {} entries kept (rate {:.3}), observed energy {:.3}",
            mask.observed_count(),
            mask.len(),
            mask.realized_rate(),
            observed.frobenius_norm() / truth.frobenius_norm()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
