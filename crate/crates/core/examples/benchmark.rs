// A small scenario table over both missing patterns.

use mgnss::config::PipelineConfig;
use mgnss::mask::MissingKind;
use mgnss::metrics::PsnrMode;
use mgnss::pipeline::run_benchmark;
use mgnss::synthetic::synthetic_cube;

pub fn run_example() -> mgnss::Result<()> {
    let truth = synthetic_cube(&[16, 16, 4], 2);
    let config = PipelineConfig {
        iters: 1,
        w2: 5,
        v: 4,
        k_similar: 8,
        ..PipelineConfig::default()
    };
    let table = run_benchmark(
        &truth,
        &[MissingKind::Pixel, MissingKind::Stripe],
        &[0.3, 0.6],
        &config,
        PsnrMode::Band,
    )?;
    print!("{}", table.to_text());
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
