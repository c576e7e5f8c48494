use std::io::Write;

use rayon::prelude::*;

use crate::error::Result;
use crate::geom::{Point, ServerLayout};
use crate::policy::{allocate, PolicyKind};
use crate::rng::{self, tag};

use super::mobility::evolve_position;
use super::stats::{normalize, Histogram, Summary};
use super::{MobilityConfig, PlacementSpec, ScenarioConfig};

/// Distance histograms always use this many equal-width bins.
pub const DISTANCE_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub max_load: u32,
    pub mean_distance: f64,
    pub total_load: u64,
}

/// Per-trial metrics of one policy plus their aggregates. Histograms pool
/// all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub policy: PolicyKind,
    pub n: usize,
    pub m: usize,
    pub trials: Vec<TrialRecord>,
    pub max_load: Summary,
    pub mean_distance: Summary,
    /// `load_hist[l]` = number of (trial, server) pairs with load `l`.
    pub load_hist: Vec<u64>,
    pub distance_hist: Option<Histogram>,
}

impl ScenarioReport {
    /// Whether every trial assigned exactly `m` users.
    pub fn conserved(&self) -> bool {
        self.trials.iter().all(|t| t.total_load == self.m as u64)
    }

    pub fn load_fractions(&self) -> Vec<f64> {
        normalize(&self.load_hist)
    }
}

/// Shared inputs for one trial: every policy run in the trial sees the
/// same servers and users.
pub(crate) struct TrialInputs {
    pub layout: ServerLayout,
    pub users: Vec<Point>,
    pub policy_seed: u64,
}

pub(crate) struct TrialSpec {
    pub placement: PlacementSpec,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub mobility: Option<MobilityConfig>,
}

impl TrialSpec {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        TrialSpec {
            placement: cfg.placement,
            n: cfg.n,
            m: cfg.m,
            trials: cfg.trials,
            seed: cfg.seed,
            mobility: cfg.mobility,
        }
    }

    pub fn inputs(&self, trial: usize) -> Result<TrialInputs> {
        let trial_seed = rng::derive(self.seed, tag::TRIAL, trial as u64);
        let layout = match self.placement {
            PlacementSpec::Grid { side } => ServerLayout::grid(side)?,
            PlacementSpec::Uniform => ServerLayout::uniform(self.n, trial_seed)?,
        };
        let mut stream = rng::stream(rng::derive(trial_seed, tag::USERS, 0));
        let mut users: Vec<Point> = (0..self.m).map(|_| Point::random(&mut stream)).collect();
        if let Some(mob) = &self.mobility {
            for (i, u) in users.iter_mut().enumerate() {
                let mut motion = rng::stream(rng::derive(trial_seed, tag::MOBILITY, i as u64));
                *u = evolve_position(*u, mob, mob.warmup_per_user * i as f64, &mut motion);
            }
        }
        Ok(TrialInputs { layout, users, policy_seed: rng::derive(trial_seed, tag::POLICY, 0) })
    }
}

struct PolicyTrial {
    record: TrialRecord,
    loads: Vec<u32>,
    distances: Option<Vec<f64>>,
}

/// Runs every policy on each trial's shared inputs. Trials run in
/// parallel; results are assembled in trial order.
pub(crate) fn run_paired(spec: &TrialSpec, policies: &[PolicyKind], histograms: bool) -> Result<Vec<ScenarioReport>> {
    let per_trial: Vec<Vec<PolicyTrial>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let inputs = spec.inputs(t)?;
            policies
                .iter()
                .map(|&kind| {
                    let res = allocate(&inputs.layout, &inputs.users, kind, inputs.policy_seed)?;
                    let record = TrialRecord {
                        trial: t,
                        max_load: res.max_load(),
                        mean_distance: res.mean_distance(),
                        total_load: res.total_load(),
                    };
                    let distances = histograms.then_some(res.request_distance);
                    Ok(PolicyTrial { record, loads: res.loads, distances })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let reports = policies
        .iter()
        .enumerate()
        .map(|(i, &policy)| {
            let trials: Vec<TrialRecord> = per_trial.iter().map(|pt| pt[i].record).collect();
            let mut load_hist = Vec::new();
            for pt in &per_trial {
                for &l in &pt[i].loads {
                    let l = l as usize;
                    if load_hist.len() <= l {
                        load_hist.resize(l + 1, 0);
                    }
                    load_hist[l] += 1;
                }
            }
            let distance_hist = histograms.then(|| {
                let all: Vec<f64> = per_trial.iter().flat_map(|pt| pt[i].distances.iter().flatten().copied()).collect();
                Histogram::from_zero_to_max(&all, DISTANCE_BINS)
            });
            let max_loads: Vec<f64> = trials.iter().map(|t| t.max_load as f64).collect();
            let dists: Vec<f64> = trials.iter().map(|t| t.mean_distance).collect();
            ScenarioReport {
                policy,
                n: spec.n,
                m: spec.m,
                max_load: Summary::of(&max_loads),
                mean_distance: Summary::of(&dists),
                trials,
                load_hist,
                distance_hist,
            }
        })
        .collect();
    Ok(reports)
}

/// Runs `cfg.trials` independent trials of one policy. Trial `t` draws
/// servers (uniform placement) and users from `derive(seed, TRIAL, t)`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let spec = TrialSpec::from_config(cfg);
    let mut reports = run_paired(&spec, &[cfg.policy], true)?;
    Ok(reports.remove(0))
}

/// `summary.csv`: one row per report.
pub fn write_summary_csv<W: Write>(w: W, reports: &[ScenarioReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "policy",
        "n",
        "trials",
        "mean_max_load",
        "max_load_ci_low",
        "max_load_ci_high",
        "mean_distance",
        "distance_ci_low",
        "distance_ci_high",
        "load_conserved",
    ])?;
    for r in reports {
        out.write_record([
            r.policy.to_string(),
            r.n.to_string(),
            r.trials.len().to_string(),
            r.max_load.mean.to_string(),
            r.max_load.ci_low.to_string(),
            r.max_load.ci_high.to_string(),
            r.mean_distance.mean.to_string(),
            r.mean_distance.ci_low.to_string(),
            r.mean_distance.ci_high.to_string(),
            r.conserved().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `trials.csv`: per-trial records.
pub fn write_trials_csv<W: Write>(w: W, reports: &[ScenarioReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["policy", "trial", "max_load", "mean_distance", "total_load"])?;
    for r in reports {
        for t in &r.trials {
            out.write_record([
                r.policy.to_string(),
                t.trial.to_string(),
                t.max_load.to_string(),
                t.mean_distance.to_string(),
                t.total_load.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `load_hist.csv`: integer load bins from 0 to the observed maximum.
pub fn write_load_hist_csv<W: Write>(w: W, reports: &[ScenarioReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["policy", "load", "count", "fraction"])?;
    for r in reports {
        for (l, (&c, f)) in r.load_hist.iter().zip(r.load_fractions()).enumerate() {
            out.write_record([r.policy.to_string(), l.to_string(), c.to_string(), f.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `dist_hist.csv`: 100 equal-width bins over `[0, observed max]`.
pub fn write_dist_hist_csv<W: Write>(w: W, reports: &[ScenarioReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["policy", "bin", "bin_low", "bin_high", "count", "fraction"])?;
    for r in reports {
        let Some(h) = &r.distance_hist else { continue };
        for (b, (&c, f)) in h.counts.iter().zip(h.fractions()).enumerate() {
            let (lo, hi) = h.bin_edges(b);
            out.write_record([
                r.policy.to_string(),
                b.to_string(),
                lo.to_string(),
                hi.to_string(),
                c.to_string(),
                f.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_has_zero_width_ci() {
        let r = run_scenario(&ScenarioConfig::uniform(50, PolicyKind::Pot, 1, 3)).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.max_load.ci_low, r.max_load.ci_high);
        assert_eq!(r.mean_distance.ci_low, r.mean_distance.ci_high);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = ScenarioConfig::uniform(64, PolicyKind::Dpot, 4, 9);
        assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
    }

    #[test]
    fn grid_scenario_runs() {
        let r = run_scenario(&ScenarioConfig::grid(6, PolicyKind::Spot, 3, 2)).unwrap();
        assert!(r.conserved());
        assert_eq!(r.load_hist.iter().sum::<u64>(), 3 * 36);
        let h = r.distance_hist.as_ref().unwrap();
        assert_eq!(h.counts.len(), DISTANCE_BINS);
        assert_eq!(h.total(), 3 * 36);
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(run_scenario(&ScenarioConfig::uniform(10, PolicyKind::Pot, 0, 1)).is_err());
    }

    #[test]
    fn csv_headers() {
        let r = run_scenario(&ScenarioConfig::uniform(20, PolicyKind::Poo, 2, 1)).unwrap();
        let reports = [r];
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("policy,n,trials,mean_max_load,max_load_ci_low,"));
        assert_eq!(text.lines().count(), 2);
        let mut buf = Vec::new();
        write_dist_hist_csv(&mut buf, &reports).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), DISTANCE_BINS + 1);
    }
}
