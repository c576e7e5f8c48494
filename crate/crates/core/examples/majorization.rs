// Expected maximum load of balls thrown by a non-uniform distribution,
// exactly and by simulation, and the Schur-convexity comparison against
// uniform throws.
//
// ```bash
// cargo run --release --example majorization
// ```

use spotlab::bins::{check_schur_monotonicity, exact_expected_max, majorizes, mc_expected_max, ProbabilityVector};

pub fn run(trials: u64) -> spotlab::Result<()> {
    let uniform3 = ProbabilityVector::uniform(3)?;
    let exact = exact_expected_max(3, &uniform3)?;
    let mc = mc_expected_max(3, &uniform3, trials, 7)?;
    println!("3 balls, 3 bins: exact {exact:.6} (17/9 = {:.6}), simulated {:.6} ± {:.6}", 17.0 / 9.0, mc.mean, mc.se);

    let skewed = ProbabilityVector::new(vec![0.4, 0.3, 0.2, 0.1])?;
    let flat = ProbabilityVector::uniform(4)?;
    println!("{:?} majorizes uniform: {}", skewed.as_slice(), majorizes(skewed.as_slice(), flat.as_slice())?);
    for m in [2, 4, 8] {
        println!(
            "m = {m}: E[max] skewed {:.5}, uniform {:.5}",
            exact_expected_max(m, &skewed)?,
            exact_expected_max(m, &flat)?
        );
    }

    let mut weights = vec![1.0; 16];
    weights[0] = 3.0;
    weights[4] = 2.0;
    let p = ProbabilityVector::from_weights(&weights)?;
    let verdict = check_schur_monotonicity(16, &p, &ProbabilityVector::uniform(16)?, trials, 11)?;
    println!(
        "16 balls, 16 bins: E_p = {:.4} ± {:.4}, E_uniform = {:.4} ± {:.4}, pass {}",
        verdict.expected_p, verdict.se_p, verdict.expected_q, verdict.se_q, verdict.pass
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> spotlab::Result<()> {
    run(1_000_000)
}
