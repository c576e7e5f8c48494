// Load versus distance for all six policies on shared servers and users.
//
// ```bash
// cargo run --release --example tradeoff -- 10000 10
// ```

use spotlab::exp::run_tradeoff_suite;

pub fn run(n: usize, trials: usize, seed: u64) -> spotlab::Result<()> {
    let reports = run_tradeoff_suite(n, trials, seed)?;
    println!("n = m = {n}, {trials} paired trials");
    println!("{:<10} {:>14} {:>22} {:>10}", "policy", "mean max load", "mean distance", "conserved");
    for r in &reports {
        println!(
            "{:<10} {:>8.2} ±{:<5.2} {:>12.6} ±{:<8.6} {:>10}",
            r.policy.to_string(),
            r.max_load.mean,
            r.max_load.ci_high - r.max_load.mean,
            r.mean_distance.mean,
            r.mean_distance.ci_high - r.mean_distance.mean,
            r.conserved()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    run(n, trials, 42)
}
