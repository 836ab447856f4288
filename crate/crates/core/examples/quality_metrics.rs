// Band-mean PSNR and SSIM, and RSE.

use mgnss::metrics::{evaluate, PsnrMode};
use mgnss::synthetic::synthetic_cube;

pub fn run_example() -> mgnss::Result<()> {
    let reference = synthetic_cube(&[16, 16, 3], 2);
    for noise in [0.0, 0.01, 0.05] {
        let x = mgnss::DenseTensor::from_fn(reference.dims(), |i| {
            reference.get(i) + noise * ((i[0] * 7 + i[1] * 3 + i[2]) as f64).sin()
        });
        let band = evaluate(&x, &reference, PsnrMode::Band)?;
        let global = evaluate(&x, &reference, PsnrMode::Global)?;
        println!(
            "noise {noise}: PSNR {:.2} dB (global {:.2}), SSIM {:.4}, RSE {:.4}",
            band.psnr_db, global.psnr_db, band.ssim, band.rse
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
