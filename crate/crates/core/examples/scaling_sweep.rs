// Growth of the mean maximum load with n, and the two ratio series
// against ln n / ln ln n and ln ln n.
//
// ```bash
// cargo run --release --example scaling_sweep -- 50
// ```

use spotlab::exp::run_scaling_sweep;
use spotlab::{PolicyKind, PolicySpec};

pub fn run(n_values: &[usize], trials: usize, seed: u64) -> spotlab::Result<()> {
    let policies = [
        PolicySpec::Fixed(PolicyKind::Pot),
        PolicySpec::Fixed(PolicyKind::Spot),
        PolicySpec::Fixed(PolicyKind::Dpot),
        PolicySpec::KSpotLog,
    ];
    let sweep = run_scaling_sweep(n_values, trials, &policies, seed)?;
    println!("{:>7} {:<11} {:>9} {:>7} {:>7} {:>7}", "n", "policy", "max load", "se", "r1", "r2");
    for r in &sweep.rows {
        println!("{:>7} {:<11} {:>9.3} {:>7.3} {:>7.3} {:>7.3}", r.n, r.policy, r.mean_max_load, r.se, r.r1, r.r2);
    }
    for d in &sweep.diagnostics {
        println!("{:<11} r1 {:<12} r2 {}", d.policy, d.r1.label(), d.r2.label());
    }
    for w in &sweep.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    run(&[100, 400, 1600, 6400, 25600], trials, 2024)
}
