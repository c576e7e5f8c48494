use super::{by_distance_then_id, Metric, Neighbor, Point};

/// Uniform bucket grid over the unit square for exact nearest-neighbour
/// queries. Rings of cells around the query cell are scanned until the
/// k-th best candidate is strictly closer than anything in an unvisited
/// cell can be.
#[derive(Debug, Clone)]
pub struct BucketIndex {
    cells_per_side: usize,
    metric: Metric,
    /// CSR layout: ids of cell `c` are `ids[starts[c]..starts[c + 1]]`.
    starts: Vec<u32>,
    ids: Vec<u32>,
}

impl BucketIndex {
    pub fn new(points: &[Point], metric: Metric) -> Self {
        // About two points per cell.
        let g = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let mut counts = vec![0u32; g * g + 1];
        let cell_of = |p: &Point| cell_coord(p.x, g) * g + cell_coord(p.y, g);
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut ids = vec![0u32; points.len()];
        for (id, p) in points.iter().enumerate() {
            let c = cell_of(p);
            ids[fill[c] as usize] = id as u32;
            fill[c] += 1;
        }
        BucketIndex { cells_per_side: g, metric, starts, ids }
    }

    fn cell(&self, cx: usize, cy: usize) -> &[u32] {
        let c = cx * self.cells_per_side + cy;
        &self.ids[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    pub(crate) fn k_nearest_into(&self, points: &[Point], q: Point, k: usize, out: &mut Vec<Neighbor>) {
        out.clear();
        let g = self.cells_per_side;
        let width = 1.0 / g as f64;
        let cx = cell_coord(q.x, g) as isize;
        let cy = cell_coord(q.y, g) as isize;
        let gi = g as isize;
        let metric = self.metric;
        let push = |out: &mut Vec<Neighbor>, id: u32| {
            let id = id as usize;
            out.push(Neighbor { id, distance: metric.distance(q, points[id]) });
        };

        let mut r: isize = 0;
        loop {
            let exhausted = match metric {
                // Past this radius wrapped rings would revisit cells.
                Metric::Torus => 2 * r + 1 > gi,
                Metric::Euclidean => r > cx.max(gi - 1 - cx).max(cy).max(gi - 1 - cy),
            };
            if exhausted {
                if metric == Metric::Torus {
                    // Rescan everything; the wrapped ring cannot be split cleanly.
                    out.clear();
                    for id in 0..points.len() as u32 {
                        push(out, id);
                    }
                }
                break;
            }
            for dx in -r..=r {
                let ring_row = dx.abs() == r;
                let step = if ring_row { 1 } else { (2 * r).max(1) as usize };
                for dy in (-r..=r).step_by(step) {
                    let (x, y) = (cx + dx, cy + dy);
                    let (x, y) = match metric {
                        Metric::Torus => (x.rem_euclid(gi), y.rem_euclid(gi)),
                        Metric::Euclidean => {
                            if x < 0 || y < 0 || x >= gi || y >= gi {
                                continue;
                            }
                            (x, y)
                        }
                    };
                    for &id in self.cell(x as usize, y as usize) {
                        push(out, id);
                    }
                }
            }
            if out.len() >= k {
                let kth = select_kth(out, k);
                // Any point in ring r + 1 or beyond is at least r cell widths away.
                let bound = r as f64 * width * (1.0 - 1e-12);
                if kth < bound {
                    break;
                }
            }
            r += 1;
        }
        out.sort_by(by_distance_then_id);
        out.truncate(k);
    }
}

fn cell_coord(v: f64, g: usize) -> usize {
    let c = (v * g as f64).floor();
    if c <= 0.0 {
        0
    } else {
        (c as usize).min(g - 1)
    }
}

fn select_kth(cands: &mut [Neighbor], k: usize) -> f64 {
    let (_, kth, _) = cands.select_nth_unstable_by(k - 1, by_distance_then_id);
    kth.distance
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_point_lands_in_exactly_one_cell() {
        let pts: Vec<Point> = (0..37).map(|i| Point::new((i as f64 * 0.173) % 1.0, (i as f64 * 0.311) % 1.0)).collect();
        let idx = BucketIndex::new(&pts, Metric::Euclidean);
        let mut seen: Vec<u32> = idx.ids.clone();
        seen.sort();
        assert_eq!(seen, (0..37).collect::<Vec<u32>>());
        assert_eq!(*idx.starts.last().unwrap() as usize, pts.len());
    }

    #[test]
    fn boundary_coordinate_is_clamped() {
        assert_eq!(cell_coord(1.0, 4), 3);
        assert_eq!(cell_coord(0.0, 4), 0);
        assert_eq!(cell_coord(-0.0, 4), 0);
    }

    #[test]
    fn single_point_layout() {
        let pts = vec![Point::new(0.3, 0.3)];
        for m in [Metric::Euclidean, Metric::Torus] {
            let idx = BucketIndex::new(&pts, m);
            let mut out = Vec::new();
            idx.k_nearest_into(&pts, Point::new(0.9, 0.9), 1, &mut out);
            assert_eq!(out[0].id, 0);
        }
    }
}
