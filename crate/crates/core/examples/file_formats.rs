// Tensor and mask files, raw import and PGM band export.

use mgnss::io::{decode_raw, export_band, load_mask, load_tensor, save_mask, save_tensor, RawFloat};
use mgnss::mask::make_pixel_mask;
use mgnss::synthetic::synthetic_cube;

pub fn run_example() -> mgnss::Result<()> {
    let dir = std::env::temp_dir().join(format!("mgnss-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| mgnss::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let t = synthetic_cube(&[8, 6, 3], 1);
    let mask = make_pixel_mask(t.dims(), 0.5, 1)?;
    save_tensor(dir.join("cube.mgt"), &t)?;
    save_mask(dir.join("cube.mgm"), &mask)?;
    assert_eq!(load_tensor(dir.join("cube.mgt"))?, t);
    assert_eq!(load_mask(dir.join("cube.mgm"))?, mask);

    let raw: Vec<u8> = t.as_slice().iter().flat_map(|v| (*v as f32).to_le_bytes()).collect();
    let imported = decode_raw(&raw, t.dims(), RawFloat::F32)?;
    println!("f32 import max error {:.2e}", imported.zip_map(&t, |a, b| (a - b).abs())?.max_value());

    export_band(&t, 1, dir.join("band1.pgm"))?;
    println!("wrote files to {}", dir.display());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
