use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::policy::PolicyKind;

use super::{run_scenario, MobilityConfig, MobilityModel, ScenarioConfig, ScenarioReport};

/// Folds an unbounded coordinate back into `[0, 1]` by mirror reflection.
fn fold(s: f64) -> f64 {
    let r = s.rem_euclid(2.0);
    if r > 1.0 {
        2.0 - r
    } else {
        r
    }
}

/// Straight-line motion at constant heading (radians) and speed, reflecting
/// off the walls of the unit square.
pub fn reflect_walk(p: Point, heading: f64, speed: f64, duration: f64) -> Point {
    let d = speed * duration;
    Point::new(fold(p.x + d * heading.cos()), fold(p.y + d * heading.sin()))
}

/// Position of a user starting at `p` after `duration` seconds under `cfg`.
/// All randomness comes from `rng`; with `v_max = 0` nothing is drawn.
pub fn evolve_position<R: Rng + ?Sized>(p: Point, cfg: &MobilityConfig, duration: f64, rng: &mut R) -> Point {
    if cfg.v_max <= 0.0 || duration <= 0.0 {
        return p;
    }
    // Speeds are uniform on (0, v_max].
    let speed = |rng: &mut R| cfg.v_max * (1.0 - rng.random::<f64>());
    match cfg.model {
        MobilityModel::RandomDirectionReflect => {
            let heading = rng.random::<f64>() * TAU;
            let v = speed(rng);
            reflect_walk(p, heading, v, duration)
        }
        MobilityModel::RandomWaypoint => {
            let mut pos = p;
            let mut target = Point::random(rng);
            let mut v = speed(rng);
            let mut left = duration;
            while left > 0.0 {
                let mut step = left.min(cfg.dt);
                left -= step;
                while step > 0.0 {
                    let (dx, dy) = (target.x - pos.x, target.y - pos.y);
                    let dist = dx.hypot(dy);
                    let reach = v * step;
                    if reach < dist {
                        let f = reach / dist;
                        pos = Point::new(pos.x + dx * f, pos.y + dy * f);
                        step = 0.0;
                    } else {
                        step -= dist / v;
                        pos = target;
                        target = Point::random(rng);
                        v = speed(rng);
                    }
                }
            }
            pos
        }
    }
}

/// One velocity's worth of the mobility study.
#[derive(Debug, Clone)]
pub struct MobilityRow {
    pub velocity: f64,
    pub report: ScenarioReport,
}

/// sPOT on uniform servers with moving users, once per velocity. Every
/// velocity reuses the scenario seed, so initial positions and motion
/// streams are shared across rows.
pub fn run_mobility_study(
    n: usize,
    trials: usize,
    velocities: &[f64],
    base: &MobilityConfig,
    seed: u64,
) -> Result<Vec<MobilityRow>> {
    if velocities.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("velocities must be >= 0"));
    }
    velocities
        .iter()
        .map(|&velocity| {
            let mut cfg = ScenarioConfig::uniform(n, PolicyKind::Spot, trials, seed);
            cfg.mobility = Some(MobilityConfig { v_max: velocity, ..*base });
            Ok(MobilityRow { velocity, report: run_scenario(&cfg)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn zero_velocity_is_static() {
        let mut r = rng::stream(1);
        let cfg = MobilityConfig { v_max: 0.0, ..Default::default() };
        let p = Point::new(0.3, 0.7);
        assert_eq!(evolve_position(p, &cfg, 100.0, &mut r), p);
    }

    #[test]
    fn reflection_arithmetic() {
        let q = reflect_walk(Point::new(0.95, 0.5), 0.0, 0.1, 1.0);
        assert!((q.x - 0.95).abs() < 1e-12);
        assert!((q.y - 0.5).abs() < 1e-12);
        let q = reflect_walk(Point::new(0.1, 0.5), std::f64::consts::PI, 0.3, 1.0);
        assert!((q.x - 0.2).abs() < 1e-12);
        let q = reflect_walk(Point::new(0.5, 0.5), 0.0, 1.0, 2.0);
        assert!((q.x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn positions_stay_in_square() {
        let mut r = rng::stream(2);
        for model in [MobilityModel::RandomWaypoint, MobilityModel::RandomDirectionReflect] {
            let cfg = MobilityConfig { model, v_max: 0.7, dt: 0.5, warmup_per_user: 1.0 };
            for _ in 0..20_000 {
                let p = Point::random(&mut r);
                let d = r.random::<f64>() * 30.0;
                let q = evolve_position(p, &cfg, d, &mut r);
                assert!((0.0..=1.0).contains(&q.x) && (0.0..=1.0).contains(&q.y), "{q}");
            }
        }
    }

    #[test]
    fn waypoint_speed_bounds_displacement() {
        let mut r = rng::stream(3);
        let cfg = MobilityConfig { model: MobilityModel::RandomWaypoint, v_max: 0.01, dt: 0.25, warmup_per_user: 1.0 };
        for _ in 0..1000 {
            let p = Point::random(&mut r);
            let q = evolve_position(p, &cfg, 5.0, &mut r);
            assert!((q.x - p.x).hypot(q.y - p.y) <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn empty_velocity_list() {
        let rows = run_mobility_study(16, 2, &[], &MobilityConfig::default(), 1).unwrap();
        assert!(rows.is_empty());
    }
}
