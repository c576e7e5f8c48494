//! Delaunay graphs over server layouts and Monte Carlo probes of the
//! nearest / two-nearest structure (vertex, edge and second-order Voronoi
//! cell frequencies).

mod delaunay;
mod probe;

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geom::{Placement, ServerLayout};

pub use probe::{
    estimate_conditional_second_nearest, estimate_edge_probabilities, estimate_second_order_cells,
    estimate_vertex_probabilities, probe_point, EdgeProbabilityEstimate, ProbeSurvey, SecondOrderCellEstimate,
};

/// Undirected simple graph on server ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelaunayGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl DelaunayGraph {
    /// Builds a graph from an edge list. Pairs are normalised to `(min, max)`
    /// and deduplicated; self-loops and out-of-range ids are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::invalid(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &list {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(DelaunayGraph { n, edges: list, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Common degree when every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adjacency.first()?.len();
        self.adjacency.iter().all(|a| a.len() == d).then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Writes one `u v` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for &(u, v) in &self.edges {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    /// Parses the `u v` edge-list format. Blank lines are skipped.
    pub fn read_edge_list<R: BufRead>(n: usize, r: R) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => {
                    return Err(Error::Config { line: i + 1, message: format!("expected `u v`, got `{line}`") });
                }
            }
        }
        Self::from_edges(n, edges)
    }
}

/// Rook adjacency on the `side × side` torus, matching the server ids of
/// [`ServerLayout::grid`].
pub fn build_grid_delaunay(side: usize) -> Result<DelaunayGraph> {
    if side < 3 {
        return Err(Error::invalid(format!("grid Delaunay graph needs side >= 3, got {side}")));
    }
    let id = |i: usize, j: usize| (i % side) * side + (j % side);
    let edges = (0..side).flat_map(|i| (0..side).flat_map(move |j| [(id(i, j), id(i + 1, j)), (id(i, j), id(i, j + 1))]));
    DelaunayGraph::from_edges(side * side, edges)
}

/// Voronoi-adjacency graph of the layout. Grid layouts use the
/// combinatorial torus construction; anything else is triangulated.
pub fn build_delaunay(layout: &ServerLayout) -> Result<DelaunayGraph> {
    if let Placement::Grid { side } = layout.placement() {
        return build_grid_delaunay(side);
    }
    let edges = delaunay::delaunay_edges(layout.points())?;
    DelaunayGraph::from_edges(layout.len(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{make_uniform_layout, Metric, Point};

    #[test]
    fn grid_graph_is_four_regular() {
        for side in [3, 4, 8, 16] {
            let g = build_grid_delaunay(side).unwrap();
            assert_eq!(g.n(), side * side);
            assert_eq!(g.edge_count(), 2 * side * side);
            assert_eq!(g.regular_degree(), Some(4));
            assert!(g.is_connected());
        }
        assert!(build_grid_delaunay(2).is_err());
    }

    #[test]
    fn grid_neighbours_are_rook_moves() {
        let g = build_grid_delaunay(8).unwrap();
        // Server (0, 0) wraps to (7, 0) and (0, 7).
        assert_eq!(g.neighbors(0), &[1, 7, 8, 56]);
    }

    #[test]
    fn layout_delegates_grid() {
        let layout = ServerLayout::grid(5).unwrap();
        assert_eq!(build_delaunay(&layout).unwrap(), build_grid_delaunay(5).unwrap());
        assert!(build_delaunay(&ServerLayout::grid(2).unwrap()).is_err());
    }

    #[test]
    fn uniform_edge_count_within_planar_bounds() {
        let layout = make_uniform_layout(64, 5).unwrap();
        let g = build_delaunay(&layout).unwrap();
        assert!(g.edge_count() >= 63 && g.edge_count() <= 186, "{}", g.edge_count());
        assert!(g.is_connected());
    }

    #[test]
    fn from_edges_rejects_self_loop_and_dedups() {
        assert!(DelaunayGraph::from_edges(3, [(1, 1)]).is_err());
        assert!(DelaunayGraph::from_edges(3, [(0, 3)]).is_err());
        let g = DelaunayGraph::from_edges(3, [(0, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_delaunay(&make_uniform_layout(30, 2).unwrap()).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().all(|l| l.split(' ').count() == 2));
        assert_eq!(DelaunayGraph::read_edge_list(30, &buf[..]).unwrap(), g);
        assert!(DelaunayGraph::read_edge_list(30, &b"0 1 2\n"[..]).is_err());
    }

    #[test]
    fn collinear_custom_layout_is_degenerate() {
        let pts = vec![Point::new(0.1, 0.5), Point::new(0.2, 0.5), Point::new(0.7, 0.5)];
        let layout = ServerLayout::from_points(pts, Metric::Euclidean).unwrap();
        assert!(matches!(build_delaunay(&layout), Err(Error::DegenerateInput(_))));
    }
}
