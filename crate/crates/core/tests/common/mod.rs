//! Brute-force oracles shared by the integration tests. Nothing here goes
//! through the library's spatial index or sampling code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use spotlab::Point;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_points(n: usize, rng: &mut impl Rng) -> Vec<Point> {
    (0..n).map(|_| Point::new(rng.random(), rng.random())).collect()
}

fn dist(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Ids of the two nearest servers by full scan, ties to the smaller id.
pub fn two_nearest(servers: &[Point], p: Point) -> (usize, usize) {
    let mut best = [(f64::INFINITY, usize::MAX); 2];
    for (i, &s) in servers.iter().enumerate() {
        let d = dist(p, s);
        if d < best[0].0 {
            best[1] = best[0];
            best[0] = (d, i);
        } else if d < best[1].0 {
            best[1] = (d, i);
        }
    }
    (best[0].1, best[1].1)
}

pub fn nearest_distance(servers: &[Point], p: Point) -> f64 {
    servers.iter().map(|&s| dist(p, s)).fold(f64::INFINITY, f64::min)
}

/// Mean distance between two independent uniform points of the unit square.
pub fn uniform_pair_distance(samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut total = 0.0;
    for _ in 0..samples {
        let a = Point::new(r.random(), r.random());
        let b = Point::new(r.random(), r.random());
        total += dist(a, b);
    }
    total / samples as f64
}

/// Mean distance from a uniform user to the nearest of `n` uniform servers.
pub fn nearest_neighbour_distance(n: usize, layouts: usize, users_per_layout: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut total = 0.0;
    for _ in 0..layouts {
        let servers = random_points(n, &mut r);
        for _ in 0..users_per_layout {
            let p = Point::new(r.random(), r.random());
            total += nearest_distance(&servers, p);
        }
    }
    total / (layouts * users_per_layout) as f64
}
