// Probe users on a wrap-around grid: the two nearest servers are always
// adjacent, every edge is equally likely, and given the nearest server
// each of its four neighbours comes second a quarter of the time.
//
// ```bash
// cargo run --release --example grid_lemma -- 8 1000000
// ```

use spotlab::tess::{build_grid_delaunay, estimate_conditional_second_nearest, ProbeSurvey};
use spotlab::ServerLayout;

pub fn run(side: usize, probes: u64, seed: u64) -> spotlab::Result<()> {
    let layout = ServerLayout::grid(side)?;
    let graph = build_grid_delaunay(side)?;
    let n = layout.len();
    println!("grid {side}x{side}: {n} servers, {} edges, degree {:?}", graph.edge_count(), graph.regular_degree());

    let survey = ProbeSurvey::run(&layout, probes, seed)?;
    let pairs = survey.pair_counts();
    let off: u64 = pairs.iter().filter(|(&(u, v), _)| !graph.contains(u, v)).map(|(_, c)| c).sum();
    println!("probes whose two nearest servers are not adjacent: {off}");

    let edge_target = 1.0 / (2 * n) as f64;
    let (lo, hi) = graph.edges().iter().fold((f64::MAX, 0.0_f64), |(lo, hi), e| {
        let p = pairs.get(e).copied().unwrap_or(0) as f64 / probes as f64;
        (lo.min(p), hi.max(p))
    });
    println!("edge probability range [{lo:.6}, {hi:.6}], target {edge_target:.6}");

    let nearest = survey.nearest_counts(n);
    let worst = nearest.iter().map(|&c| (c as f64 / probes as f64 * n as f64 - 1.0).abs()).fold(0.0, f64::max);
    println!("vertex probability: max relative deviation from 1/{n} = {worst:.4}");

    let cond = estimate_conditional_second_nearest(&layout, probes, seed)?;
    let worst = cond.values().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    println!("conditional second nearest: max |p - 1/4| = {worst:.4} over {} pairs", cond.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let side = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let probes = args.next().and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    run(side, probes, 1)
}
