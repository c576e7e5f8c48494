use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::policy::{PolicyKind, PolicySpec};
use crate::rng;

use super::scenario::{run_paired, ScenarioReport, TrialSpec};
use super::stats::{spearman_vs_index, total_variation, Summary, Trend};
use super::PlacementSpec;

const SWEEP: u64 = 11;

fn uniform_spec(n: usize, trials: usize, seed: u64) -> TrialSpec {
    TrialSpec { placement: PlacementSpec::Uniform, n, m: n, trials, seed, mobility: None }
}

/// The six policies compared side by side, with k-sPOT at `k = ⌈ln n⌉`.
pub fn tradeoff_policies(n: usize) -> Vec<PolicyKind> {
    vec![
        PolicyKind::Poo,
        PolicyKind::Pot,
        PolicyKind::Spoo,
        PolicyKind::Spot,
        PolicyKind::Dpot,
        PolicyKind::kspot_log(n),
    ]
}

/// Every policy of [`tradeoff_policies`] on identical per-trial servers and
/// users (uniform placement, `m = n`).
pub fn run_tradeoff_suite(n: usize, trials: usize, seed: u64) -> Result<Vec<ScenarioReport>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    run_paired(&uniform_spec(n, trials, seed), &tradeoff_policies(n), true)
}

/// Single paired run of dPOT, POT and sPOT with full histograms.
#[derive(Debug, Clone)]
pub struct DistributionStudy {
    pub reports: Vec<ScenarioReport>,
}

impl DistributionStudy {
    pub fn report(&self, kind: PolicyKind) -> Option<&ScenarioReport> {
        self.reports.iter().find(|r| r.policy == kind)
    }

    /// Total variation distance between two policies' load histograms.
    pub fn load_total_variation(&self, a: PolicyKind, b: PolicyKind) -> Option<f64> {
        Some(total_variation(&self.report(a)?.load_hist, &self.report(b)?.load_hist))
    }
}

pub fn run_distribution_study(n: usize, seed: u64) -> Result<DistributionStudy> {
    let policies = [PolicyKind::Dpot, PolicyKind::Pot, PolicyKind::Spot];
    let reports = run_paired(&uniform_spec(n, 1, seed), &policies, true)?;
    Ok(DistributionStudy { reports })
}

/// Mean maximum load of one policy at one server count, with the two
/// growth ratios `r1 = L / (ln n / ln ln n)` and `r2 = L / ln ln n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub policy: String,
    pub mean_max_load: f64,
    pub se: f64,
    pub r1: f64,
    pub r2: f64,
}

impl GrowthRow {
    fn new(n: usize, policy: String, load: &Summary) -> Self {
        let ln = (n as f64).ln();
        let lnln = ln.ln();
        GrowthRow { n, policy, mean_max_load: load.mean, se: load.se, r1: load.mean / (ln / lnln), r2: load.mean / lnln }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendDiagnostic {
    pub policy: String,
    pub r1: Trend,
    pub r2: Trend,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
}

impl TrendDiagnostic {
    fn of(policy: &str, rows: &[&GrowthRow]) -> Self {
        let r1: Vec<f64> = rows.iter().map(|r| r.r1).collect();
        let r2: Vec<f64> = rows.iter().map(|r| r.r2).collect();
        TrendDiagnostic {
            policy: policy.to_string(),
            r1: Trend::of(&r1),
            r2: Trend::of(&r2),
            rho1: spearman_vs_index(&r1),
            rho2: spearman_vs_index(&r2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingSweep {
    pub rows: Vec<GrowthRow>,
    pub diagnostics: Vec<TrendDiagnostic>,
    /// Non-fatal observations, e.g. a mean max load that fell as n grew.
    pub warnings: Vec<String>,
}

impl ScalingSweep {
    pub fn series(&self, policy: &str) -> Vec<&GrowthRow> {
        self.rows.iter().filter(|r| r.policy == policy).collect()
    }

    pub fn diagnostic(&self, policy: &str) -> Option<&TrendDiagnostic> {
        self.diagnostics.iter().find(|d| d.policy == policy)
    }
}

fn check_n_values(n_values: &[usize]) -> Result<()> {
    if n_values.is_empty() {
        return Err(Error::invalid("sweep needs at least one n"));
    }
    if n_values.iter().any(|&n| n < 16) {
        return Err(Error::invalid("sweep n values must be >= 16"));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sweep n values must be strictly ascending"));
    }
    Ok(())
}

fn sweep_seed(seed: u64, n: usize) -> u64 {
    rng::derive(seed, SWEEP, n as u64)
}

/// Mean max load per `(n, policy)` on uniform placement. Policies at the
/// same `n` share per-trial inputs.
pub fn run_scaling_sweep(n_values: &[usize], trials: usize, policies: &[PolicySpec], seed: u64) -> Result<ScalingSweep> {
    check_n_values(n_values)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let mut rows = Vec::new();
    for &n in n_values {
        let kinds: Vec<PolicyKind> = policies.iter().map(|p| p.resolve(n)).collect();
        let reports = run_paired(&uniform_spec(n, trials, sweep_seed(seed, n)), &kinds, false)?;
        for (spec, report) in policies.iter().zip(&reports) {
            rows.push(GrowthRow::new(n, spec.to_string(), &report.max_load));
        }
    }
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    for spec in policies {
        let label = spec.to_string();
        let series: Vec<&GrowthRow> = rows.iter().filter(|r| r.policy == label).collect();
        for w in series.windows(2) {
            if w[1].mean_max_load < w[0].mean_max_load {
                warnings.push(format!(
                    "{label}: mean max load fell from {} at n = {} to {} at n = {}",
                    w[0].mean_max_load, w[0].n, w[1].mean_max_load, w[1].n
                ));
            }
        }
        diagnostics.push(TrendDiagnostic::of(&label, &series));
    }
    Ok(ScalingSweep { rows, diagnostics, warnings })
}

/// `n,policy,mean_max_load,se,r1,r2` rows.
pub fn write_growth_csv<W: Write>(w: W, rows: &[GrowthRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "policy", "mean_max_load", "se", "r1", "r2"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.policy.clone(),
            r.mean_max_load.to_string(),
            r.se.to_string(),
            r.r1.to_string(),
            r.r2.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-trial `max_load(a) − max_load(b)` on shared inputs.
pub fn paired_max_load_difference(n: usize, trials: usize, seed: u64, a: PolicyKind, b: PolicyKind) -> Result<Summary> {
    let reports = run_paired(&uniform_spec(n, trials, seed), &[a, b], false)?;
    Ok(paired_diff(&reports[0], &reports[1]))
}

fn paired_diff(a: &ScenarioReport, b: &ScenarioReport) -> Summary {
    let d: Vec<f64> = a.trials.iter().zip(&b.trials).map(|(x, y)| x.max_load as f64 - y.max_load as f64).collect();
    Summary::of(&d)
}

/// k-sPOT with a fixed candidate-set size swept over `n`, against sPOT on
/// the same inputs.
#[derive(Debug, Clone)]
pub struct ConjectureReport {
    pub k: usize,
    pub rows: Vec<GrowthRow>,
    pub spot_rows: Vec<GrowthRow>,
    /// `(n, paired max-load difference kSPOT − sPOT)`.
    pub paired_difference: Vec<(usize, Summary)>,
    /// Server counts skipped because `k > n`.
    pub skipped: Vec<usize>,
    pub diagnostic: TrendDiagnostic,
    /// True when `r2` keeps increasing, i.e. no power-of-two benefit.
    pub consistent: bool,
}

pub fn run_conjecture_probe(n_values: &[usize], k_fixed: usize, trials: usize, seed: u64) -> Result<ConjectureReport> {
    if k_fixed < 2 {
        return Err(Error::invalid(format!("k_fixed must be >= 2, got {k_fixed}")));
    }
    check_n_values(n_values)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let kind = PolicyKind::KSpot(k_fixed);
    let label = kind.to_string();
    let (mut rows, mut spot_rows, mut paired_difference, mut skipped) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in n_values {
        if k_fixed > n {
            skipped.push(n);
            continue;
        }
        let reports = run_paired(&uniform_spec(n, trials, sweep_seed(seed, n)), &[kind, PolicyKind::Spot], false)?;
        rows.push(GrowthRow::new(n, label.clone(), &reports[0].max_load));
        spot_rows.push(GrowthRow::new(n, PolicyKind::Spot.to_string(), &reports[1].max_load));
        paired_difference.push((n, paired_diff(&reports[0], &reports[1])));
    }
    let diagnostic = TrendDiagnostic::of(&label, &rows.iter().collect::<Vec<_>>());
    let consistent = diagnostic.r2 == Trend::Increasing;
    Ok(ConjectureReport { k: k_fixed, rows, spot_rows, paired_difference, skipped, diagnostic, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tradeoff_suite_small_scale() {
        let reports = run_tradeoff_suite(100, 50, 1).unwrap();
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(r.conserved());
            assert_eq!(r.trials.len(), 50);
        }
        assert_eq!(reports[5].policy, PolicyKind::KSpot(5));
    }

    #[test]
    fn suite_rows_match_standalone_scenarios() {
        let reports = run_tradeoff_suite(64, 3, 5).unwrap();
        for r in &reports {
            let single = super::super::run_scenario(&super::super::ScenarioConfig::uniform(64, r.policy, 3, 5)).unwrap();
            assert_eq!(&single, r);
        }
    }

    #[test]
    fn distribution_study_histograms_normalize() {
        let study = run_distribution_study(1000, 3).unwrap();
        assert_eq!(study.reports.len(), 3);
        for r in &study.reports {
            assert!((r.load_fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let h = r.distance_hist.as_ref().unwrap();
            assert!((h.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(study.load_total_variation(PolicyKind::Dpot, PolicyKind::Pot).is_some());
    }

    #[test]
    fn sweep_validation_and_single_point() {
        assert!(run_scaling_sweep(&[100, 50], 2, &[PolicySpec::Fixed(PolicyKind::Pot)], 1).is_err());
        assert!(run_scaling_sweep(&[8], 2, &[PolicySpec::Fixed(PolicyKind::Pot)], 1).is_err());
        assert!(run_scaling_sweep(&[100], 0, &[PolicySpec::Fixed(PolicyKind::Pot)], 1).is_err());
        let sweep = run_scaling_sweep(&[100], 2, &[PolicySpec::Fixed(PolicyKind::Pot), PolicySpec::KSpotLog], 1).unwrap();
        assert_eq!(sweep.rows.len(), 2);
        assert_eq!(sweep.diagnostic("POT").unwrap().r1, Trend::InsufficientPoints);
        assert_eq!(sweep.rows[1].policy, "kSPOT(log)");
    }

    #[test]
    fn growth_ratios() {
        let s = Summary::of(&[4.0]);
        let row = GrowthRow::new(100, "x".into(), &s);
        let ln = 100f64.ln();
        assert!((row.r1 - 4.0 * ln.ln() / ln).abs() < 1e-12);
        assert!((row.r2 - 4.0 / ln.ln()).abs() < 1e-12);
    }

    #[test]
    fn conjecture_probe_skips_small_n() {
        let report = run_conjecture_probe(&[16, 64], 20, 2, 1).unwrap();
        assert_eq!(report.skipped, vec![16]);
        assert_eq!(report.rows.len(), 1);
        assert!(run_conjecture_probe(&[16], 1, 2, 1).is_err());
    }

    #[test]
    fn kspot_two_matches_spot_statistically() {
        let report = run_conjecture_probe(&[100, 400], 2, 40, 7).unwrap();
        for (_, diff) in &report.paired_difference {
            assert!(diff.contains(0.0), "{diff:?}");
        }
    }
}
