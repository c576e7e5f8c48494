// Order-2 Voronoi cells of random layouts, counted by probing. Every
// observed two-nearest pair should be a Delaunay edge, so there are at
// most 3n cells.
//
// ```bash
// cargo run --release --example second_order_cells -- 64 1000000
// ```

use spotlab::tess::{build_delaunay, estimate_second_order_cells};
use spotlab::ServerLayout;

pub fn run(n: usize, probes: u64, seeds: u64) -> spotlab::Result<()> {
    println!("{:>5} {:>10} {:>10} {:>14}", "seed", "cells", "edges", "cells on edges");
    for seed in 1..=seeds {
        let layout = ServerLayout::uniform(n, seed)?;
        let graph = build_delaunay(&layout)?;
        let cells = estimate_second_order_cells(&layout, probes, seed)?;
        let on_edges = cells.pair_counts.keys().filter(|&&(u, v)| graph.contains(u, v)).count();
        println!("{seed:>5} {:>10} {:>10} {on_edges:>14}", cells.distinct_pairs, graph.edge_count());
        let largest = cells.pair_areas.iter().max_by(|a, b| a.1.total_cmp(b.1));
        if let Some((&(u, v), area)) = largest {
            println!("      largest cell: servers {u} and {v}, area {area:.5}");
        }
    }
    println!("bound 3n = {}", 3 * n);
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);
    let probes = args.next().and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    run(n, probes, 5)
}
