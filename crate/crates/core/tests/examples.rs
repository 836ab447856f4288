mod tensor_algebra {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/tensor_algebra.rs"));
}

#[test]
fn tensor_algebra_runs() {
    tensor_algebra::run_example().expect("tensor_algebra example should run");
}

mod svt_prox {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/svt_prox.rs"));
}

#[test]
fn svt_prox_runs() {
    svt_prox::run_example().expect("svt_prox example should run");
}

mod degrade_masks {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/degrade_masks.rs"));
}

#[test]
fn degrade_masks_runs() {
    degrade_masks::run_example().expect("degrade_masks example should run");
}

mod coarse_completion {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/coarse_completion.rs"));
}

#[test]
fn coarse_completion_runs() {
    coarse_completion::run_example().expect("coarse_completion example should run");
}

mod fctn_completion {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fctn_completion.rs"));
}

#[test]
fn fctn_completion_runs() {
    fctn_completion::run_example().expect("fctn_completion example should run");
}

mod nonlocal_grouping {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/nonlocal_grouping.rs"));
}

#[test]
fn nonlocal_grouping_runs() {
    nonlocal_grouping::run_example().expect("nonlocal_grouping example should run");
}

mod quality_metrics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/quality_metrics.rs"));
}

#[test]
fn quality_metrics_runs() {
    quality_metrics::run_example().expect("quality_metrics example should run");
}

mod recover_cube {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/recover_cube.rs"));
}

#[test]
fn recover_cube_runs() {
    recover_cube::run_example().expect("recover_cube example should run");
}

mod ablation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ablation.rs"));
}

#[test]
fn ablation_runs() {
    ablation::run_example().expect("ablation example should run");
}

mod file_formats {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/file_formats.rs"));
}

#[test]
fn file_formats_runs() {
    file_formats::run_example().expect("file_formats example should run");
}

mod benchmark {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/benchmark.rs"));
}

#[test]
fn benchmark_runs() {
    benchmark::run_example().expect("benchmark example should run");
}
