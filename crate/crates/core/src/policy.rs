//! User-to-server allocation policies and the sequential allocation engine.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Metric, Neighbor, Point, ServerLayout};
use crate::rng::{self, tag, Stream};

/// Distance floor for the inverse-square dPOT weights.
pub const DPOT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    /// One server uniformly at random.
    Poo,
    /// Less loaded of two distinct uniform servers.
    Pot,
    /// Nearest server.
    Spoo,
    /// Less loaded of the two nearest servers.
    Spot,
    /// Less loaded of two distinct servers drawn uniformly from the `k` nearest.
    KSpot(usize),
    /// Less loaded of two distinct servers drawn with weight `1 / d²`.
    Dpot,
}

impl PolicyKind {
    /// k-sPOT with `k = max(2, ⌈ln n⌉)`.
    pub fn kspot_log(n: usize) -> Self {
        PolicyKind::KSpot(log_k(n))
    }

    pub fn validate(self, n: usize) -> Result<()> {
        let min_servers = match self {
            PolicyKind::Poo | PolicyKind::Spoo => 1,
            PolicyKind::Pot | PolicyKind::Spot | PolicyKind::Dpot => 2,
            PolicyKind::KSpot(k) => {
                if k < 2 || k > n {
                    return Err(Error::invalid(format!("kSPOT needs 2 <= k <= n, got k = {k}, n = {n}")));
                }
                2
            }
        };
        if n < min_servers {
            return Err(Error::invalid(format!("{self} needs at least {min_servers} servers, got {n}")));
        }
        Ok(())
    }
}

pub fn log_k(n: usize) -> usize {
    ((n as f64).ln().ceil() as usize).max(2)
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Poo => f.write_str("POO"),
            PolicyKind::Pot => f.write_str("POT"),
            PolicyKind::Spoo => f.write_str("sPOO"),
            PolicyKind::Spot => f.write_str("sPOT"),
            PolicyKind::KSpot(k) => write!(f, "kSPOT({k})"),
            PolicyKind::Dpot => f.write_str("dPOT"),
        }
    }
}

/// A policy as named in a config file, where k-sPOT may ask for `k = ln n`
/// resolved per server count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicySpec {
    Fixed(PolicyKind),
    KSpotLog,
}

impl PolicySpec {
    pub fn resolve(self, n: usize) -> PolicyKind {
        match self {
            PolicySpec::Fixed(kind) => kind,
            PolicySpec::KSpotLog => PolicyKind::kspot_log(n),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Fixed(kind) => kind.fmt(f),
            PolicySpec::KSpotLog => f.write_str("kSPOT(log)"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    /// Accepts `POO`, `POT`, `sPOO`, `sPOT`, `dPOT`, `kSPOT(5)`, `kSPOT(log)`
    /// and bare `kSPOT` (same as `log`), case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let fixed = |k| Ok(PolicySpec::Fixed(k));
        match lower.as_str() {
            "poo" => fixed(PolicyKind::Poo),
            "pot" => fixed(PolicyKind::Pot),
            "spoo" => fixed(PolicyKind::Spoo),
            "spot" => fixed(PolicyKind::Spot),
            "dpot" => fixed(PolicyKind::Dpot),
            "kspot" | "k-spot" | "kspot(log)" | "kspot(ln)" => Ok(PolicySpec::KSpotLog),
            other => {
                let inner = other
                    .strip_prefix("kspot(")
                    .or_else(|| other.strip_prefix("k-spot("))
                    .and_then(|r| r.strip_suffix(')'));
                match inner.map(str::parse::<usize>) {
                    Some(Ok(k)) => fixed(PolicyKind::KSpot(k)),
                    _ => Err(Error::invalid(format!("unknown policy `{s}`"))),
                }
            }
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<PolicySpec>()? {
            PolicySpec::Fixed(kind) => Ok(kind),
            PolicySpec::KSpotLog => Err(Error::invalid("kSPOT(log) needs a server count; give k explicitly")),
        }
    }
}

/// Outcome of one allocation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub assignment: Vec<usize>,
    pub request_distance: Vec<f64>,
    pub loads: Vec<u32>,
}

impl AllocationResult {
    pub fn max_load(&self) -> u32 {
        self.loads.iter().copied().max().unwrap_or(0)
    }

    pub fn total_load(&self) -> u64 {
        self.loads.iter().map(|&l| l as u64).sum()
    }

    pub fn mean_distance(&self) -> f64 {
        if self.request_distance.is_empty() {
            return 0.0;
        }
        self.request_distance.iter().sum::<f64>() / self.request_distance.len() as f64
    }

    /// `user,server,distance` rows.
    pub fn write_assignments_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["user", "server", "distance"])?;
        for (u, (&s, &d)) in self.assignment.iter().zip(&self.request_distance).enumerate() {
            out.write_record([u.to_string(), s.to_string(), d.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `server,load` rows.
    pub fn write_loads_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["server", "load"])?;
        for (s, &l) in self.loads.iter().enumerate() {
            out.write_record([s.to_string(), l.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Assigns `users` in list order. User `u` draws all of its randomness from
/// the stream `derive(seed, USER, u)`; load ties between the two candidates
/// are broken by a fair coin from that stream.
pub fn allocate(layout: &ServerLayout, users: &[Point], kind: PolicyKind, seed: u64) -> Result<AllocationResult> {
    if users.is_empty() {
        return Err(Error::invalid("allocation needs at least one user"));
    }
    let n = layout.len();
    kind.validate(n)?;

    let mut loads = vec![0u32; n];
    let mut assignment = Vec::with_capacity(users.len());
    let mut request_distance = Vec::with_capacity(users.len());
    let mut near: Vec<Neighbor> = Vec::new();
    let mut weights: Vec<f64> = match kind {
        PolicyKind::Dpot => vec![0.0; n],
        _ => Vec::new(),
    };

    for (u, &user) in users.iter().enumerate() {
        let mut rng = rng::stream(rng::derive(seed, tag::USER, u as u64));
        let server = match draw_candidates(layout, user, kind, &mut rng, &mut near, &mut weights) {
            (a, None) => a,
            (a, Some(b)) => less_loaded(&loads, a, b, &mut rng),
        };
        loads[server] += 1;
        assignment.push(server);
        request_distance.push(layout.distance_to(user, server));
    }
    debug_assert_eq!(loads.iter().map(|&l| l as usize).sum::<usize>(), users.len());
    Ok(AllocationResult { assignment, request_distance, loads })
}

/// Candidate servers of user `u` under `allocate(.., seed)`: one for POO
/// and sPOO, two (in draw order) otherwise.
pub fn candidates(layout: &ServerLayout, user: Point, u: usize, kind: PolicyKind, seed: u64) -> Result<Vec<usize>> {
    kind.validate(layout.len())?;
    let mut rng = rng::stream(rng::derive(seed, tag::USER, u as u64));
    let mut weights = match kind {
        PolicyKind::Dpot => vec![0.0; layout.len()],
        _ => Vec::new(),
    };
    Ok(match draw_candidates(layout, user, kind, &mut rng, &mut Vec::new(), &mut weights) {
        (a, None) => vec![a],
        (a, Some(b)) => vec![a, b],
    })
}

fn draw_candidates(
    layout: &ServerLayout,
    user: Point,
    kind: PolicyKind,
    rng: &mut Stream,
    near: &mut Vec<Neighbor>,
    weights: &mut [f64],
) -> (usize, Option<usize>) {
    let n = layout.len();
    match kind {
        PolicyKind::Poo => (rng.random_range(0..n), None),
        PolicyKind::Spoo => {
            layout.k_nearest_into(user, 1, near);
            (near[0].id, None)
        }
        PolicyKind::Pot => {
            let (a, b) = distinct_pair(n, rng);
            (a, Some(b))
        }
        PolicyKind::Spot => {
            layout.k_nearest_into(user, 2, near);
            (near[0].id, Some(near[1].id))
        }
        PolicyKind::KSpot(k) => {
            layout.k_nearest_into(user, k, near);
            let (a, b) = distinct_pair(k, rng);
            (near[a].id, Some(near[b].id))
        }
        PolicyKind::Dpot => {
            let total = fill_dpot_weights(layout, user, weights);
            let (a, b) = draw_pair(weights, total, rng);
            (a, Some(b))
        }
    }
}

fn distinct_pair(n: usize, rng: &mut Stream) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

fn less_loaded(loads: &[u32], a: usize, b: usize, rng: &mut Stream) -> usize {
    match loads[a].cmp(&loads[b]) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.random::<bool>() {
                a
            } else {
                b
            }
        }
    }
}

/// Inverse-square weights `1 / max(d, ε)²` from `user` to every server.
pub fn dpot_weights(layout: &ServerLayout, user: Point) -> Vec<f64> {
    let mut w = vec![0.0; layout.len()];
    fill_dpot_weights(layout, user, &mut w);
    w
}

fn fill_dpot_weights(layout: &ServerLayout, user: Point, out: &mut [f64]) -> f64 {
    let floor = DPOT_EPSILON * DPOT_EPSILON;
    let pts = layout.points();
    let mut total = 0.0;
    match layout.metric() {
        Metric::Euclidean => {
            for (w, p) in out.iter_mut().zip(pts) {
                let dx = user.x - p.x;
                let dy = user.y - p.y;
                *w = 1.0 / (dx * dx + dy * dy).max(floor);
                total += *w;
            }
        }
        Metric::Torus => {
            for (w, p) in out.iter_mut().zip(pts) {
                *w = 1.0 / Metric::Torus.distance_sq(user, *p).max(floor);
                total += *w;
            }
        }
    }
    total
}

/// Draws two distinct indices without replacement: the first with
/// probability `w_i / Σw`, the second from the remaining indices with
/// renormalised weights. Returned in draw order.
pub fn sample_two_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<(usize, usize)> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::invalid(format!("weights must be finite and nonnegative, got {w}")));
    }
    if weights.iter().filter(|&&w| w > 0.0).count() < 2 {
        return Err(Error::invalid("need at least two positive weights"));
    }
    let total = weights.iter().sum();
    Ok(draw_pair(weights, total, rng))
}

fn draw_pair<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> (usize, usize) {
    let first = draw_one(weights, total, None, rng);
    let w = weights[first];
    // Subtracting a dominant weight would cancel catastrophically.
    let rest = if w <= 0.5 * total {
        total - w
    } else {
        weights.iter().enumerate().filter(|&(i, _)| i != first).map(|(_, &w)| w).sum()
    };
    let second = draw_one(weights, rest, Some(first), rng);
    (first, second)
}

fn draw_one<R: Rng + ?Sized>(weights: &[f64], total: f64, skip: Option<usize>, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = usize::MAX;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 || Some(i) == skip {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    // Rounding can leave target just above the accumulated sum.
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::make_uniform_layout;

    fn users(m: usize, seed: u64) -> Vec<Point> {
        let mut r = rng::stream(seed);
        (0..m).map(|_| Point::random(&mut r)).collect()
    }

    #[test]
    fn display_and_parse() {
        for kind in [PolicyKind::Poo, PolicyKind::Pot, PolicyKind::Spoo, PolicyKind::Spot, PolicyKind::Dpot, PolicyKind::KSpot(7)] {
            assert_eq!(kind.to_string().parse::<PolicyKind>().unwrap(), kind);
        }
        assert_eq!("kSPOT".parse::<PolicySpec>().unwrap(), PolicySpec::KSpotLog);
        assert_eq!(PolicySpec::KSpotLog.resolve(10_000), PolicyKind::KSpot(10));
        assert_eq!(PolicySpec::KSpotLog.resolve(3), PolicyKind::KSpot(2));
        assert!("nope".parse::<PolicySpec>().is_err());
        assert!("kSPOT".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn spoo_picks_nearest() {
        let layout = make_uniform_layout(50, 1).unwrap();
        let us = users(500, 2);
        let res = allocate(&layout, &us, PolicyKind::Spoo, 0).unwrap();
        for (u, &s) in us.iter().zip(&res.assignment) {
            assert_eq!(s, layout.k_nearest(*u, 1).unwrap()[0].id);
        }
    }

    #[test]
    fn spot_two_servers_forced_balance() {
        let layout = ServerLayout::from_points(vec![Point::new(0.2, 0.2), Point::new(0.8, 0.8)], Metric::Euclidean).unwrap();
        for seed in 0..20 {
            let res = allocate(&layout, &users(4, seed), PolicyKind::Spot, seed).unwrap();
            assert_eq!(res.loads, vec![2, 2]);
        }
    }

    #[test]
    fn dpot_two_servers_samples_both() {
        let layout = ServerLayout::from_points(vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)], Metric::Euclidean).unwrap();
        let us = vec![Point::new(0.5, 0.5); 6];
        let res = allocate(&layout, &us, PolicyKind::Dpot, 3).unwrap();
        assert_eq!(res.loads, vec![3, 3]);
    }

    #[test]
    fn kspot_bounds_checked() {
        let layout = make_uniform_layout(10, 1).unwrap();
        let us = users(5, 1);
        assert!(allocate(&layout, &us, PolicyKind::KSpot(11), 0).is_err());
        assert!(allocate(&layout, &us, PolicyKind::KSpot(1), 0).is_err());
        assert!(allocate(&layout, &[], PolicyKind::Pot, 0).is_err());
    }

    #[test]
    fn sample_two_weighted_examples() {
        let mut r = rng::stream(1);
        for _ in 0..100 {
            let (a, b) = sample_two_weighted(&[1.0, 1.0], &mut r).unwrap();
            assert_eq!((a.min(b), a.max(b)), (0, 1));
            let (a, b) = sample_two_weighted(&[3.0, 1.0, 0.0], &mut r).unwrap();
            assert_eq!((a.min(b), a.max(b)), (0, 1));
        }
        assert!(sample_two_weighted(&[1.0, 0.0, 0.0], &mut r).is_err());
        assert!(sample_two_weighted(&[1.0, f64::NAN], &mut r).is_err());
        assert!(sample_two_weighted(&[1.0, -1.0, 2.0], &mut r).is_err());
    }

    #[test]
    fn first_pick_marginal_matches_weights() {
        let mut r = rng::stream(2);
        let draws = 100_000;
        let hits = (0..draws).filter(|_| sample_two_weighted(&[4.0, 1.0], &mut r).unwrap().0 == 0).count();
        assert!((hits as f64 / draws as f64 - 0.8).abs() < 0.01);

        let hits = (0..draws).filter(|_| sample_two_weighted(&[3.0, 1.0, 0.0], &mut r).unwrap().0 == 0).count();
        assert!((hits as f64 / draws as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn second_pick_is_renormalised() {
        // Weights (2, 1, 1): P(second = 1 | first = 0) = 1/2, P(second = 0 | first = 1) = 2/3.
        let mut r = rng::stream(3);
        let (mut first0, mut then1, mut first1, mut then0) = (0, 0, 0, 0);
        for _ in 0..200_000 {
            match sample_two_weighted(&[2.0, 1.0, 1.0], &mut r).unwrap() {
                (0, s) => {
                    first0 += 1;
                    then1 += (s == 1) as u32;
                }
                (1, s) => {
                    first1 += 1;
                    then0 += (s == 0) as u32;
                }
                _ => {}
            }
        }
        assert!((then1 as f64 / first0 as f64 - 0.5).abs() < 0.01);
        assert!((then0 as f64 / first1 as f64 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn dpot_weight_examples() {
        let layout = ServerLayout::from_points(vec![Point::new(0.0, 0.5), Point::new(0.0, 0.0)], Metric::Euclidean).unwrap();
        let w = dpot_weights(&layout, Point::new(0.0, 0.0));
        assert_eq!(w[1], 1.0 / (DPOT_EPSILON * DPOT_EPSILON));
        assert!((w[0] - 4.0).abs() < 1e-12);

        let layout = ServerLayout::from_points(vec![Point::new(0.1, 0.5), Point::new(0.3, 0.5)], Metric::Euclidean).unwrap();
        let w = dpot_weights(&layout, Point::new(0.9, 0.5));
        // distances 0.8 and 0.6: ratio of weights is (0.6/0.8)².
        assert!((w[0] / w[1] - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn coincident_server_dominates() {
        // 20×20 lattice: every other server is at least 0.05 away.
        let pts = ServerLayout::grid(20).unwrap().points().to_vec();
        let layout = ServerLayout::from_points(pts, Metric::Euclidean).unwrap();
        let target = 171;
        let w = dpot_weights(&layout, layout.point(target));
        let total: f64 = w.iter().sum();
        assert!(w[target] / total >= 1.0 - 1e-6);
        let mut r = rng::stream(8);
        for _ in 0..1000 {
            assert_eq!(sample_two_weighted(&w, &mut r).unwrap().0, target);
        }
    }

    #[test]
    fn engine_conserves_load() {
        let layout = make_uniform_layout(40, 6).unwrap();
        let us = users(120, 7);
        for kind in [PolicyKind::Poo, PolicyKind::Pot, PolicyKind::Spoo, PolicyKind::Spot, PolicyKind::KSpot(5), PolicyKind::Dpot] {
            let res = allocate(&layout, &us, kind, 9).unwrap();
            assert_eq!(res.total_load(), 120);
            for (u, (&s, &d)) in res.assignment.iter().zip(&res.request_distance).enumerate() {
                assert_eq!(d, layout.distance_to(us[u], s));
            }
            assert_eq!(res, allocate(&layout, &us, kind, 9).unwrap());
        }
    }

    #[test]
    fn csv_outputs() {
        let layout = make_uniform_layout(4, 1).unwrap();
        let res = allocate(&layout, &users(3, 1), PolicyKind::Pot, 1).unwrap();
        let mut a = Vec::new();
        res.write_assignments_csv(&mut a).unwrap();
        let a = String::from_utf8(a).unwrap();
        assert_eq!(a.lines().next(), Some("user,server,distance"));
        assert_eq!(a.lines().count(), 4);
        let mut l = Vec::new();
        res.write_loads_csv(&mut l).unwrap();
        let l = String::from_utf8(l).unwrap();
        assert_eq!(l.lines().next(), Some("server,load"));
        assert_eq!(l.lines().count(), 5);
    }
}
