// One allocation round per policy on a shared layout.
//
// ```bash
// cargo run --release --example allocate -- 2000
// ```

use spotlab::{allocate, Point, PolicyKind, ServerLayout};

pub fn run(n: usize, seed: u64) -> spotlab::Result<()> {
    let layout = ServerLayout::uniform(n, seed)?;
    let mut rng = spotlab::rng::stream(seed ^ 0xA11);
    let users: Vec<Point> = (0..n).map(|_| Point::random(&mut rng)).collect();

    println!("{n} servers, {n} users, seed {seed}");
    println!("{:<10} {:>8} {:>14}", "policy", "max load", "mean distance");
    for kind in spotlab::exp::tradeoff_policies(n) {
        let result = allocate(&layout, &users, kind, seed)?;
        println!("{:<10} {:>8} {:>14.6}", kind.to_string(), result.max_load(), result.mean_distance());
    }

    let spot = allocate(&layout, &users, PolicyKind::Spot, seed)?;
    let busiest = (0..n).max_by_key(|&s| spot.loads[s]).unwrap_or(0);
    let p = layout.point(busiest);
    println!("busiest sPOT server: {busiest} at ({:.3}, {:.3}) with {} users", p.x, p.y, spot.loads[busiest]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    run(n, 42)
}
