// Singular value thresholding shrinks the spectrum and nothing else.

use mgnss::linalg::{svd, svt_with_values};
use mgnss::Matrix;

pub fn run_example() -> mgnss::Result<()> {
    let m = Matrix::from_fn(5, 4, |r, c| ((r * 3 + c) as f64 * 0.7).sin());
    let before = svd(&m)?.singular_values;
    let (z, shrunk) = svt_with_values(&m, &[0.5])?;
    let after = svd(&z)?.singular_values;
    for ((s, t), a) in before.iter().zip(&shrunk).zip(&after) {
        println!("sigma {s:.4} -> {t:.4} (recomputed {a:.4})");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
