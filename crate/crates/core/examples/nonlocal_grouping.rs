// Clustering full-band blocks and block-matching fine patches.

use mgnss::mask::make_pixel_mask;
use mgnss::nonlocal::{
    block_match, cluster_count, extract_fullband_blocks, kmeanspp_cluster, select_key_patches,
};
use mgnss::synthetic::synthetic_cube;

pub fn run_example() -> mgnss::Result<()> {
    let x = synthetic_cube(&[24, 24, 6], 4);
    let mask = make_pixel_mask(x.dims(), 0.5, 1)?;

    let blocks = extract_fullband_blocks(&x, 5, 2)?;
    let l = cluster_count(blocks.len(), 50);
    let clusters = kmeanspp_cluster(&blocks, l, 11, 100)?;
    let sizes: Vec<usize> = clusters.iter().map(Vec::len).collect();
    println!("{} blocks in {l} clusters of sizes {sizes:?}", blocks.len());

    let keys = select_key_patches(x.dims(), 6, 5)?;
    let group = block_match(keys[0], &x, &mask, 6, 8, 20)?;
    println!(
        "key {:?}: group tensor {:?}, nearest distances {:?}",
        group.key_origin,
        group.group_tensor.dims(),
        &group.distances[..3]
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> mgnss::Result<()> {
    run_example()
}
