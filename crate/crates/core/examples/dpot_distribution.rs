// Load and distance distributions of dPOT, POT and sPOT from one large
// paired run, written as CSV.
//
// ```bash
// cargo run --release --example dpot_distribution -- 50000 out/
// ```

use std::fs::File;
use std::path::Path;

use spotlab::exp::{run_distribution_study, write_dist_hist_csv, write_load_hist_csv};
use spotlab::PolicyKind;

pub fn run(n: usize, out: Option<&Path>, seed: u64) -> spotlab::Result<()> {
    let study = run_distribution_study(n, seed)?;
    for r in &study.reports {
        let fractions = r.load_fractions();
        let head: Vec<String> = fractions.iter().take(6).map(|f| format!("{f:.3}")).collect();
        println!(
            "{:<5} max load {:>2}  mean distance {:.6}  load fractions {}",
            r.policy.to_string(),
            r.max_load.mean,
            r.mean_distance.mean,
            head.join(" ")
        );
    }
    if let Some(tv) = study.load_total_variation(PolicyKind::Dpot, PolicyKind::Pot) {
        println!("total variation dPOT vs POT loads: {tv:.4}");
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_load_hist_csv(File::create(dir.join("load_hist.csv"))?, &study.reports)?;
        write_dist_hist_csv(File::create(dir.join("dist_hist.csv"))?, &study.reports)?;
        println!("histograms written to {}", dir.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let out = args.next();
    run(n, out.as_deref().map(Path::new), 7)
}
