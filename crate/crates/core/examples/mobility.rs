// sPOT with moving users: each user walks for a while before it is
// allocated. Faster users barely change the maximum load.
//
// ```bash
// cargo run --release --example mobility -- 1000
// ```

use spotlab::exp::{run_mobility_study, MobilityConfig, MobilityModel};

pub fn run(n: usize, trials: usize, seed: u64) -> spotlab::Result<()> {
    for model in [MobilityModel::RandomWaypoint, MobilityModel::RandomDirectionReflect] {
        let base = MobilityConfig { model, ..Default::default() };
        let rows = run_mobility_study(n, trials, &[0.0, 0.01, 0.1], &base, seed)?;
        println!("{model:?}");
        for row in &rows {
            let s = &row.report.max_load;
            println!("  v_max {:<5} mean max load {:.4} [{:.4}, {:.4}]", row.velocity, s.mean, s.ci_low, s.ci_high);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    run(64, trials, 3)
}
