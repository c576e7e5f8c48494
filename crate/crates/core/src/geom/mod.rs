//! Points in the unit square, the two distance metrics, server layouts and
//! exact k-nearest-neighbour queries.

mod index;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

pub use index::BucketIndex;

/// A location in the unit square `[0, 1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Constructs a point, rejecting coordinates outside `[0, 1)`.
    pub fn checked(x: f64, y: f64) -> Result<Self> {
        let ok = |v: f64| (0.0..1.0).contains(&v);
        if ok(x) && ok(y) {
            Ok(Point { x, y })
        } else {
            Err(Error::invalid(format!("point ({x}, {y}) outside the unit square")))
        }
    }

    /// Uniform point drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let x = rng.random::<f64>();
        let y = rng.random::<f64>();
        Point { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    /// Unit square with wrap-around on both axes.
    Torus,
}

impl Metric {
    #[inline]
    pub fn delta(self, a: Point, b: Point) -> (f64, f64) {
        let dx = (a.x - b.x).abs();
        let dy = (a.y - b.y).abs();
        match self {
            Metric::Euclidean => (dx, dy),
            Metric::Torus => (dx.min(1.0 - dx), dy.min(1.0 - dy)),
        }
    }

    #[inline]
    pub fn distance_sq(self, a: Point, b: Point) -> f64 {
        let (dx, dy) = self.delta(a, b);
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(self, a: Point, b: Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }
}

/// Distance between `a` and `b` under `metric`.
pub fn distance(a: Point, b: Point, metric: Metric) -> f64 {
    metric.distance(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    /// `side × side` cell centres on the torus.
    Grid { side: usize },
    /// i.i.d. uniform points drawn from `seed`.
    Uniform { seed: u64 },
    /// Caller-supplied points.
    Custom,
}

/// A server and its distance from a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Indexed set of server locations. Server ids are positions in `points`.
#[derive(Debug, Clone)]
pub struct ServerLayout {
    points: Vec<Point>,
    placement: Placement,
    metric: Metric,
    index: BucketIndex,
}

impl ServerLayout {
    /// Cell-centred `side × side` grid with wrap-around. Server `i * side + j`
    /// sits at `((i + 0.5) / side, (j + 0.5) / side)`.
    pub fn grid(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid(format!("grid side must be >= 2, got {side}")));
        }
        let s = side as f64;
        let points = (0..side)
            .flat_map(|i| (0..side).map(move |j| Point::new((i as f64 + 0.5) / s, (j as f64 + 0.5) / s)))
            .collect();
        Ok(Self::build(points, Placement::Grid { side }, Metric::Torus))
    }

    pub fn uniform(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("uniform layout needs n >= 2, got {n}")));
        }
        let mut rng = rng::stream(rng::derive(seed, tag::SERVERS, 0));
        let points = (0..n).map(|_| Point::random(&mut rng)).collect();
        Ok(Self::build(points, Placement::Uniform { seed }, Metric::Euclidean))
    }

    pub fn from_points(points: Vec<Point>, metric: Metric) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("layout needs at least one server"));
        }
        if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y)) {
            return Err(Error::invalid(format!("server {p} outside the unit square")));
        }
        Ok(Self::build(points, Placement::Custom, metric))
    }

    fn build(points: Vec<Point>, placement: Placement, metric: Metric) -> Self {
        let index = BucketIndex::new(&points, metric);
        ServerLayout { points, placement, metric, index }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, id: usize) -> Point {
        self.points[id]
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn grid_side(&self) -> Option<usize> {
        match self.placement {
            Placement::Grid { side } => Some(side),
            _ => None,
        }
    }

    pub fn distance_to(&self, p: Point, id: usize) -> f64 {
        self.metric.distance(p, self.points[id])
    }

    /// The `k` servers closest to `p`, ascending by distance, ties broken by
    /// smaller id.
    pub fn k_nearest(&self, p: Point, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!("k = {k} must lie in 1..={}", self.len())));
        }
        let mut out = Vec::with_capacity(k);
        self.index.k_nearest_into(&self.points, p, k, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`k_nearest`](Self::k_nearest) reusing `out`.
    /// Requires `1 <= k <= len()`.
    pub fn k_nearest_into(&self, p: Point, k: usize, out: &mut Vec<Neighbor>) {
        debug_assert!(k >= 1 && k <= self.len());
        self.index.k_nearest_into(&self.points, p, k, out);
    }

    pub fn nearest(&self, p: Point) -> Neighbor {
        let mut out = Vec::with_capacity(1);
        self.index.k_nearest_into(&self.points, p, 1, &mut out);
        out[0]
    }
}

pub fn make_grid_layout(side: usize) -> Result<ServerLayout> {
    ServerLayout::grid(side)
}

pub fn make_uniform_layout(n: usize, seed: u64) -> Result<ServerLayout> {
    ServerLayout::uniform(n, seed)
}

pub fn k_nearest(layout: &ServerLayout, p: Point, k: usize) -> Result<Vec<Neighbor>> {
    layout.k_nearest(p, k)
}

/// Sort order used for every nearest-neighbour result.
#[inline]
pub(crate) fn by_distance_then_id(a: &Neighbor, b: &Neighbor) -> std::cmp::Ordering {
    a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(layout: &ServerLayout, p: Point, k: usize) -> Vec<Neighbor> {
        let mut all: Vec<Neighbor> = (0..layout.len())
            .map(|id| Neighbor { id, distance: distance(p, layout.point(id), layout.metric()) })
            .collect();
        all.sort_by(by_distance_then_id);
        all.truncate(k);
        all
    }

    #[test]
    fn distance_examples() {
        let e = distance(Point::new(0.0, 0.0), Point::new(0.3, 0.4), Metric::Euclidean);
        assert!((e - 0.5).abs() < 1e-15);
        let t = distance(Point::new(0.05, 0.5), Point::new(0.95, 0.5), Metric::Torus);
        assert!((t - 0.1).abs() < 1e-12);
        for m in [Metric::Euclidean, Metric::Torus] {
            assert_eq!(distance(Point::new(0.2, 0.2), Point::new(0.2, 0.2), m), 0.0);
        }
    }

    #[test]
    fn grid_layout_cell_centres() {
        let g = make_grid_layout(2).unwrap();
        let pts: Vec<(f64, f64)> = g.points().iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(pts, vec![(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]);
        assert_eq!(g.metric(), Metric::Torus);
        assert!(make_grid_layout(1).is_err());
        assert!(make_grid_layout(0).is_err());
    }

    #[test]
    fn grid_side_8_min_spacing() {
        let g = make_grid_layout(8).unwrap();
        assert_eq!(g.len(), 64);
        let mut min = f64::INFINITY;
        for a in 0..64 {
            for b in a + 1..64 {
                min = min.min(g.metric().distance(g.point(a), g.point(b)));
            }
        }
        assert!((min - 0.125).abs() < 1e-12);
    }

    #[test]
    fn uniform_layout_seeded() {
        let a = make_uniform_layout(100, 7).unwrap();
        let b = make_uniform_layout(100, 7).unwrap();
        assert_eq!(a.points(), b.points());
        assert_eq!(a.metric(), Metric::Euclidean);
        assert!(make_uniform_layout(1, 0).is_err());
        let big = make_uniform_layout(10_000, 1).unwrap();
        let mean = big.points().iter().map(|p| p.x).sum::<f64>() / 10_000.0;
        assert!((mean - 0.5).abs() < 0.01, "mean x {mean}");
    }

    #[test]
    fn k_nearest_hand_example() {
        let layout = ServerLayout::from_points(
            vec![Point::new(0.1, 0.1), Point::new(0.9, 0.1), Point::new(0.1, 0.9)],
            Metric::Euclidean,
        )
        .unwrap();
        let nn = layout.k_nearest(Point::new(0.2, 0.3), 2).unwrap();
        assert_eq!(nn.iter().map(|n| n.id).collect::<Vec<_>>(), vec![0, 2]);
        assert!((nn[0].distance - 0.05f64.sqrt()).abs() < 1e-12);
        assert!((nn[1].distance - 0.37f64.sqrt()).abs() < 1e-12);
        assert!(layout.k_nearest(Point::new(0.2, 0.3), 4).is_err());
        assert!(layout.k_nearest(Point::new(0.2, 0.3), 0).is_err());
    }

    #[test]
    fn k_nearest_at_grid_centre() {
        let g = make_grid_layout(8).unwrap();
        let nn = g.k_nearest(g.point(27), 1).unwrap();
        assert_eq!(nn[0].id, 27);
        assert_eq!(nn[0].distance, 0.0);
    }

    #[test]
    fn k_nearest_matches_brute_force() {
        let layout = make_uniform_layout(200, 3).unwrap();
        let mut rng = rng::stream(99);
        for _ in 0..1000 {
            let p = Point::random(&mut rng);
            let got = layout.k_nearest(p, 5).unwrap();
            assert_eq!(got, brute_force(&layout, p, 5));
        }
    }

    #[test]
    fn torus_k_nearest_matches_brute_force() {
        let pts: Vec<Point> = {
            let mut rng = rng::stream(5);
            (0..300).map(|_| Point::random(&mut rng)).collect()
        };
        let layout = ServerLayout::from_points(pts, Metric::Torus).unwrap();
        let mut rng = rng::stream(6);
        for _ in 0..1000 {
            let p = Point::random(&mut rng);
            assert_eq!(layout.k_nearest(p, 7).unwrap(), brute_force(&layout, p, 7));
        }
    }

    #[test]
    fn k_nearest_ties_prefer_smaller_id() {
        let layout = make_grid_layout(4).unwrap();
        // Corner shared by four cells, all equidistant.
        let nn = layout.k_nearest(Point::new(0.5, 0.5), 4).unwrap();
        let mut ids: Vec<usize> = nn.iter().map(|n| n.id).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        ids.sort();
        assert_eq!(ids, vec![5, 6, 9, 10]);
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0..1.0f64
    }

    fn point() -> impl Strategy<Value = Point> {
        (unit(), unit()).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn torus_never_exceeds_euclidean(a in point(), b in point()) {
            prop_assert!(Metric::Torus.distance(a, b) <= Metric::Euclidean.distance(a, b));
        }

        #[test]
        fn metrics_symmetric_nonnegative(a in point(), b in point()) {
            for m in [Metric::Euclidean, Metric::Torus] {
                let d = m.distance(a, b);
                prop_assert!(d >= 0.0);
                prop_assert_eq!(d, m.distance(b, a));
            }
        }

        #[test]
        fn torus_triangle_inequality(a in point(), b in point(), c in point()) {
            let m = Metric::Torus;
            prop_assert!(m.distance(a, c) <= m.distance(a, b) + m.distance(b, c) + 1e-12);
        }

        #[test]
        fn k_nearest_prefix_property(seed in 0u64..1000, p in point(), k in 1usize..20) {
            let layout = make_uniform_layout(50, seed).unwrap();
            let short = layout.k_nearest(p, k).unwrap();
            let long = layout.k_nearest(p, k + 1).unwrap();
            prop_assert_eq!(&long[..k], &short[..]);
        }

        #[test]
        fn grid_nearest_is_containing_cell(side in 2usize..20, p in point()) {
            let layout = make_grid_layout(side).unwrap();
            let i = ((p.x * side as f64).floor() as usize).min(side - 1);
            let j = ((p.y * side as f64).floor() as usize).min(side - 1);
            let got = layout.nearest(p);
            let expected = i * side + j;
            // Points on a cell boundary are equidistant; accept any tie.
            let d_exp = layout.distance_to(p, expected);
            prop_assert!(got.id == expected || (got.distance - d_exp).abs() < 1e-12);
        }
    }
}
