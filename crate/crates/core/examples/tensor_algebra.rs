// Unfolding, folding and the FCTN contraction on small tensors.

use mgnss::fctn::{fctn_contract, fctn_init, FctnConfig, FctnRankTable};
use mgnss::DenseTensor;

pub fn run_example() -> mgnss::Result<()> {
    let t = DenseTensor::from_fn(&[3, 4, 2], |i| (i[0] + 10 * i[1] + 100 * i[2]) as f64);
    let m1 = t.unfold(1)?;
    println!("mode-1 unfolding is {}x{}", m1.nrows(), m1.ncols());
    assert_eq!(DenseTensor::fold(&m1, 1, t.dims())?, t);

    let g = t.unfold_general(&[2, 0], &[1])?;
    assert_eq!(DenseTensor::fold_general(&g, &[2, 0], &[1], t.dims())?, t);

    let config = FctnConfig::new(FctnRankTable::uniform(3, 2)?);
    let factors = fctn_init(&[3, 4, 2], &config)?;
    let x = fctn_contract(&factors)?;
    println!("FCTN of ranks 2 gives dims {:?}, norm {:.4}", x.dims(), x.frobenius_norm());
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
