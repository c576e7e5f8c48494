mod allocate {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/allocate.rs"));
}
mod grid_lemma {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/grid_lemma.rs"));
}
mod second_order_cells {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/second_order_cells.rs"));
}
mod majorization {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/majorization.rs"));
}
mod tradeoff {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/tradeoff.rs"));
}
mod dpot_distribution {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dpot_distribution.rs"));
}
mod scaling_sweep {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scaling_sweep.rs"));
}
mod conjecture {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/conjecture.rs"));
}
mod mobility {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mobility.rs"));
}

#[test]
fn examples_run_at_small_scale() {
    allocate::run(500, 1).unwrap();
    grid_lemma::run(6, 20_000, 1).unwrap();
    second_order_cells::run(32, 20_000, 2).unwrap();
    majorization::run(10_000).unwrap();
    tradeoff::run(300, 2, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    dpot_distribution::run(500, Some(dir.path()), 1).unwrap();
    assert!(dir.path().join("load_hist.csv").exists());
    scaling_sweep::run(&[100, 200], 2, 1).unwrap();
    conjecture::run(&[100, 200], 3, 2, 1).unwrap();
    mobility::run(16, 10, 1).unwrap();
}
