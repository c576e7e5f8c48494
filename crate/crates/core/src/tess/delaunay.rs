//! Bowyer–Watson triangulation with exact predicates.
//!
//! Orientation and in-circle signs come from adaptive exact arithmetic.
//! Exactly cocircular quadruples are resolved by perturbing each lifted
//! coordinate `x² + y²` by an infinitesimal `ε^(index + 1)`, so lower
//! indices dominate and the result is a well-defined triangulation even on
//! degenerate input.

use std::collections::HashSet;

use robust::Coord;

use crate::error::{Error, Result};
use crate::geom::Point;

/// Super-triangle scale relative to the unit square.
const SUPER_SCALE: f64 = 1.0e9;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
}

fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

fn orient(pts: &[[f64; 2]], a: usize, b: usize, c: usize) -> f64 {
    robust::orient2d(coord(pts[a]), coord(pts[b]), coord(pts[c]))
}

/// Whether `d` lies inside the circumcircle of the counter-clockwise
/// triangle `abc`, under symbolic perturbation.
pub(crate) fn in_circle(pts: &[[f64; 2]], a: usize, b: usize, c: usize, d: usize) -> bool {
    let det = robust::incircle(coord(pts[a]), coord(pts[b]), coord(pts[c]), coord(pts[d]));
    if det != 0.0 {
        return det > 0.0;
    }
    // d(det)/d(z_r) = (-1)^r · orient(other three rows, in order).
    let rows = [a, b, c, d];
    let mut order = [0usize, 1, 2, 3];
    order.sort_by_key(|&r| rows[r]);
    for r in order {
        let rest: Vec<usize> = (0..4).filter(|&i| i != r).map(|i| rows[i]).collect();
        let minor = orient(pts, rest[0], rest[1], rest[2]);
        if minor != 0.0 {
            let signed = if r % 2 == 0 { minor } else { -minor };
            return signed > 0.0;
        }
    }
    unreachable!("abc is a proper triangle, so its own minor is nonzero")
}

/// Undirected Delaunay edges `(u, v)` with `u < v` over `points`.
pub(crate) fn delaunay_edges(points: &[Point]) -> Result<Vec<(usize, usize)>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::invalid(format!("Delaunay construction needs n >= 3, got {n}")));
    }
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
    check_degenerate(&pts)?;

    let m = SUPER_SCALE;
    pts.push([-m, -m]);
    pts.push([m, -m]);
    pts.push([0.5, m]);
    let mut tris = vec![Tri { v: [n, n + 1, n + 2] }];
    debug_assert!(orient(&pts, n, n + 1, n + 2) > 0.0);

    let mut bad = Vec::new();
    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    for p in 0..n {
        bad.clear();
        for (t, tri) in tris.iter().enumerate() {
            let [a, b, c] = tri.v;
            if in_circle(&pts, a, b, c, p) {
                bad.push(t);
            }
        }
        directed.clear();
        for &t in &bad {
            let [a, b, c] = tris[t].v;
            directed.extend([(a, b), (b, c), (c, a)]);
        }
        let boundary: Vec<(usize, usize)> = directed
            .iter()
            .copied()
            .filter(|&(a, b)| !directed.contains(&(b, a)))
            .collect();
        for &t in bad.iter().rev() {
            tris.swap_remove(t);
        }
        for (a, b) in boundary {
            tris.push(Tri { v: [a, b, p] });
        }
    }

    let mut edges: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| {
            let [a, b, c] = t.v;
            [(a, b), (b, c), (c, a)]
        })
        .filter(|&(a, b)| a < n && b < n)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

fn check_degenerate(pts: &[[f64; 2]]) -> Result<()> {
    let mut sorted: Vec<(u64, u64)> = pts.iter().map(|p| (p[0].to_bits(), p[1].to_bits())).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateInput("duplicate server locations".into()));
    }
    let (a, b) = (0, 1);
    if (2..pts.len()).all(|c| orient(pts, a, b, c) == 0.0) {
        return Err(Error::DegenerateInput("all servers are collinear".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn single_triangle() {
        let pts = vec![Point::new(0.1, 0.1), Point::new(0.9, 0.2), Point::new(0.4, 0.8)];
        assert_eq!(delaunay_edges(&pts).unwrap(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn collinear_rejected() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(0.1 * i as f64, 0.2 * i as f64)).collect();
        assert!(matches!(delaunay_edges(&pts), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn duplicates_rejected() {
        let pts = vec![Point::new(0.1, 0.1), Point::new(0.1, 0.1), Point::new(0.4, 0.8)];
        assert!(matches!(delaunay_edges(&pts), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn perturbed_in_circle_agrees_with_exact_sign() {
        let mut r = rng::stream(11);
        let mut pts: Vec<[f64; 2]> = (0..4).map(|_| [0.0, 0.0]).collect();
        for _ in 0..10_000 {
            for p in pts.iter_mut() {
                *p = [r.random(), r.random()];
            }
            let (a, b, c) = if orient(&pts, 0, 1, 2) > 0.0 { (0, 1, 2) } else { (0, 2, 1) };
            let exact = robust::incircle(coord(pts[a]), coord(pts[b]), coord(pts[c]), coord(pts[3]));
            assert_eq!(in_circle(&pts, a, b, c, 3), exact > 0.0);
        }
    }

    #[test]
    fn cocircular_square_picks_one_diagonal() {
        let pts: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        // Exactly one of the two triangulations is locally Delaunay.
        let first = !in_circle(&pts, 0, 1, 2, 3);
        let second = !in_circle(&pts, 1, 2, 3, 0);
        assert_ne!(first, second);
    }

    #[test]
    fn square_lattice_triangulates_with_one_diagonal_per_square() {
        // Exactly representable 4×4 lattice: every cell is cocircular.
        let pts: Vec<Point> = (0..4)
            .flat_map(|i| (0..4).map(move |j| Point::new(0.125 + 0.25 * i as f64, 0.125 + 0.25 * j as f64)))
            .collect();
        let edges = delaunay_edges(&pts).unwrap();
        // 2·3·4 axis edges plus 9 diagonals.
        assert_eq!(edges.len(), 24 + 9);
    }
}
