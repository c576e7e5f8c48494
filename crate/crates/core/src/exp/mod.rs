//! Multi-trial experiments: single scenarios, paired policy comparisons,
//! scaling sweeps with growth-law diagnostics, and the user-mobility study.

mod mobility;
mod scenario;
pub mod stats;
mod suites;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyKind;

pub use mobility::{evolve_position, reflect_walk, run_mobility_study, MobilityRow};
pub use scenario::{
    run_scenario, write_dist_hist_csv, write_load_hist_csv, write_summary_csv, write_trials_csv, ScenarioReport,
    TrialRecord, DISTANCE_BINS,
};
pub use stats::{Histogram, Summary, Trend};
pub use suites::{
    paired_max_load_difference, run_conjecture_probe, run_distribution_study, run_scaling_sweep, run_tradeoff_suite,
    tradeoff_policies, write_growth_csv, ConjectureReport, DistributionStudy, GrowthRow, ScalingSweep, TrendDiagnostic,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlacementSpec {
    Grid { side: usize },
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MobilityModel {
    /// Straight legs toward uniform random waypoints. Long walks pile
    /// users up near the centre of the square.
    RandomWaypoint,
    /// Fixed heading, reflecting off the walls. The uniform density is
    /// stationary under this walk.
    RandomDirectionReflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    /// Maximum speed in domain units per second.
    pub v_max: f64,
    /// Integration step in seconds (random waypoint; the reflecting walk
    /// is evaluated in closed form).
    pub dt: f64,
    /// User `i` is allocated after `i * warmup_per_user` seconds of motion.
    pub warmup_per_user: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig { model: MobilityModel::RandomDirectionReflect, v_max: 0.1, dt: 1.0, warmup_per_user: 1.0 }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max >= 0.0) || !self.v_max.is_finite() {
            return Err(Error::invalid(format!("v_max must be >= 0, got {}", self.v_max)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.warmup_per_user >= 0.0) || !self.warmup_per_user.is_finite() {
            return Err(Error::invalid(format!("warmup_per_user must be >= 0, got {}", self.warmup_per_user)));
        }
        Ok(())
    }
}

/// One experiment: where servers go, how many users, which policy, how
/// many independent trials, and the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub placement: PlacementSpec,
    pub n: usize,
    pub m: usize,
    pub policy: PolicyKind,
    pub trials: usize,
    pub seed: u64,
    pub mobility: Option<MobilityConfig>,
}

impl ScenarioConfig {
    /// Uniform placement with `m = n`.
    pub fn uniform(n: usize, policy: PolicyKind, trials: usize, seed: u64) -> Self {
        ScenarioConfig { placement: PlacementSpec::Uniform, n, m: n, policy, trials, seed, mobility: None }
    }

    /// `side × side` grid with `m = n = side²`.
    pub fn grid(side: usize, policy: PolicyKind, trials: usize, seed: u64) -> Self {
        let n = side * side;
        ScenarioConfig { placement: PlacementSpec::Grid { side }, n, m: n, policy, trials, seed, mobility: None }
    }

    pub fn validate(&self) -> Result<()> {
        if let PlacementSpec::Grid { side } = self.placement {
            if side < 2 || side * side != self.n {
                return Err(Error::invalid(format!("grid placement needs n = side² with side >= 2 (n = {}, side = {side})", self.n)));
            }
        }
        if self.n < 2 {
            return Err(Error::invalid(format!("need n >= 2 servers, got {}", self.n)));
        }
        if self.m == 0 {
            return Err(Error::invalid("need m >= 1 users"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        self.policy.validate(self.n)?;
        if let Some(mob) = &self.mobility {
            mob.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::uniform(100, PolicyKind::Pot, 3, 1).validate().is_ok());
        assert!(ScenarioConfig::grid(8, PolicyKind::Spot, 3, 1).validate().is_ok());
        let mut bad = ScenarioConfig::grid(8, PolicyKind::Spot, 3, 1);
        bad.n = 65;
        assert!(bad.validate().is_err());
        assert!(ScenarioConfig::uniform(100, PolicyKind::Pot, 0, 1).validate().is_err());
        assert!(ScenarioConfig::uniform(10, PolicyKind::KSpot(11), 1, 1).validate().is_err());
        let mut mob = ScenarioConfig::uniform(10, PolicyKind::Spot, 1, 1);
        mob.mobility = Some(MobilityConfig { dt: 0.0, ..Default::default() });
        assert!(mob.validate().is_err());
        mob.mobility = Some(MobilityConfig { v_max: -1.0, ..Default::default() });
        assert!(mob.validate().is_err());
    }
}
