// k-sPOT with a candidate set that stays fixed as n grows, next to sPOT
// on the same inputs.
//
// ```bash
// cargo run --release --example conjecture -- 4 50
// ```

use spotlab::exp::run_conjecture_probe;

pub fn run(n_values: &[usize], k: usize, trials: usize, seed: u64) -> spotlab::Result<()> {
    let report = run_conjecture_probe(n_values, k, trials, seed)?;
    for (row, (spot, (_, diff))) in report.rows.iter().zip(report.spot_rows.iter().zip(&report.paired_difference)) {
        println!(
            "n = {:>6}: {} {:.3}, sPOT {:.3}, paired difference {:+.3} [{:+.3}, {:+.3}], r2 {:.3}",
            row.n, row.policy, row.mean_max_load, spot.mean_max_load, diff.mean, diff.ci_low, diff.ci_high, row.r2
        );
    }
    for n in &report.skipped {
        println!("n = {n} skipped (k > n)");
    }
    println!("r2 trend {}, consistent with no benefit: {}", report.diagnostic.r2.label(), report.consistent);
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let k = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    run(&[100, 400, 1600, 6400, 25600], k, trials, 99)
}
