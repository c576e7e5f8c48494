use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Neighbor, Point, ServerLayout};
use crate::rng::{self, tag};

use super::{build_grid_delaunay, DelaunayGraph};

const CHUNK: u64 = 1 << 16;

/// Probe `i` of the stream keyed by `seed`. Each probe is a pure function
/// of `(seed, i)`, so tallies do not depend on how probes are split
/// between workers.
pub fn probe_point(seed: u64, i: u64) -> Point {
    Point::new(rng::unit(rng::derive(seed, tag::PROBE_X, i)), rng::unit(rng::derive(seed, tag::PROBE_Y, i)))
}

/// Tally of `(nearest, second nearest)` server pairs over a set of probe
/// users.
#[derive(Debug, Clone, Default)]
pub struct ProbeSurvey {
    probes: u64,
    ordered: HashMap<(u32, u32), u64>,
}

impl ProbeSurvey {
    /// Surveys `probes` uniform users derived from `seed`.
    pub fn run(layout: &ServerLayout, probes: u64, seed: u64) -> Result<Self> {
        check_layout(layout)?;
        let chunks = probes.div_ceil(CHUNK);
        let survey = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(probes);
                let mut part = ProbeSurvey::default();
                let mut buf = Vec::with_capacity(32);
                for i in lo..hi {
                    part.record(layout, probe_point(seed, i), &mut buf);
                }
                part
            })
            .reduce(ProbeSurvey::default, ProbeSurvey::merge);
        Ok(survey)
    }

    /// Surveys an explicit list of users.
    pub fn from_points(layout: &ServerLayout, users: &[Point]) -> Result<Self> {
        check_layout(layout)?;
        let mut survey = ProbeSurvey::default();
        let mut buf = Vec::with_capacity(32);
        for &u in users {
            survey.record(layout, u, &mut buf);
        }
        Ok(survey)
    }

    fn record(&mut self, layout: &ServerLayout, p: Point, buf: &mut Vec<Neighbor>) {
        layout.k_nearest_into(p, 2, buf);
        *self.ordered.entry((buf[0].id as u32, buf[1].id as u32)).or_insert(0) += 1;
        self.probes += 1;
    }

    fn merge(mut self, other: ProbeSurvey) -> ProbeSurvey {
        self.probes += other.probes;
        for (k, c) in other.ordered {
            *self.ordered.entry(k).or_insert(0) += c;
        }
        self
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    /// Counts keyed by `(nearest, second nearest)`.
    pub fn ordered_counts(&self) -> BTreeMap<(usize, usize), u64> {
        self.ordered.iter().map(|(&(a, b), &c)| ((a as usize, b as usize), c)).collect()
    }

    /// Counts keyed by the unordered two-nearest pair `(min, max)`.
    pub fn pair_counts(&self) -> BTreeMap<(usize, usize), u64> {
        let mut out = BTreeMap::new();
        for (&(a, b), &c) in &self.ordered {
            let key = (a.min(b) as usize, a.max(b) as usize);
            *out.entry(key).or_insert(0) += c;
        }
        out
    }

    /// How often each server was the nearest one.
    pub fn nearest_counts(&self, n: usize) -> Vec<u64> {
        let mut out = vec![0; n];
        for (&(a, _), &c) in &self.ordered {
            out[a as usize] += c;
        }
        out
    }

    /// Empirical `P(second = j | nearest = i)` for every observed `(i, j)`.
    pub fn conditional_second_nearest(&self, n: usize) -> BTreeMap<(usize, usize), f64> {
        let nearest = self.nearest_counts(n);
        self.ordered_counts()
            .into_iter()
            .map(|((i, j), c)| ((i, j), c as f64 / nearest[i] as f64))
            .collect()
    }
}

fn check_layout(layout: &ServerLayout) -> Result<()> {
    if layout.len() < 2 {
        return Err(Error::invalid("two-nearest probing needs at least two servers"));
    }
    Ok(())
}

fn write_pair_csv<W: Write>(w: W, counts: &BTreeMap<(usize, usize), u64>, total: u64) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["pair_i", "pair_j", "count", "probability"])?;
    for (&(i, j), &c) in counts {
        let p = c as f64 / total as f64;
        out.write_record([i.to_string(), j.to_string(), c.to_string(), p.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Empirical distribution of the unordered two-nearest server pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbabilityEstimate {
    pub samples: u64,
    pub pair_counts: BTreeMap<(usize, usize), u64>,
    /// Fraction of probes whose two-nearest pair is not a graph edge.
    pub non_edge_mass: f64,
}

impl EdgeProbabilityEstimate {
    pub fn probability(&self, u: usize, v: usize) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        let c = self.pair_counts.get(&(u.min(v), u.max(v))).copied().unwrap_or(0);
        c as f64 / self.samples as f64
    }

    /// `max_e |p̂_e − target| / target` over the edges of `graph`.
    pub fn max_relative_deviation(&self, graph: &DelaunayGraph, target: f64) -> f64 {
        graph
            .edges()
            .iter()
            .map(|&(u, v)| (self.probability(u, v) - target).abs() / target)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_pair_csv(w, &self.pair_counts, self.samples)
    }
}

pub fn estimate_edge_probabilities(
    layout: &ServerLayout,
    graph: &DelaunayGraph,
    probes: u64,
    seed: u64,
) -> Result<EdgeProbabilityEstimate> {
    if graph.n() != layout.len() {
        return Err(Error::invalid(format!("graph has {} vertices, layout {}", graph.n(), layout.len())));
    }
    let survey = ProbeSurvey::run(layout, probes, seed)?;
    let pair_counts = survey.pair_counts();
    let off_graph: u64 = pair_counts.iter().filter(|(&(u, v), _)| !graph.contains(u, v)).map(|(_, &c)| c).sum();
    let non_edge_mass = if probes == 0 { 0.0 } else { off_graph as f64 / probes as f64 };
    Ok(EdgeProbabilityEstimate { samples: survey.probes(), pair_counts, non_edge_mass })
}

/// Frequency with which each server is a uniform user's nearest server.
pub fn estimate_vertex_probabilities(layout: &ServerLayout, probes: u64, seed: u64) -> Result<Vec<f64>> {
    if probes == 0 {
        return Err(Error::invalid("vertex probabilities need probes >= 1"));
    }
    let survey = ProbeSurvey::run(layout, probes, seed)?;
    Ok(survey.nearest_counts(layout.len()).into_iter().map(|c| c as f64 / probes as f64).collect())
}

/// `P(second nearest = j | nearest = i)` on a grid layout. Every grid
/// neighbour of a server that was ever nearest gets an entry, zero if
/// never observed.
pub fn estimate_conditional_second_nearest(
    layout: &ServerLayout,
    probes: u64,
    seed: u64,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let Some(side) = layout.grid_side() else {
        return Err(Error::invalid("conditional second-nearest estimate requires a grid layout"));
    };
    if probes == 0 {
        return Err(Error::invalid("conditional estimate needs probes >= 1"));
    }
    let survey = ProbeSurvey::run(layout, probes, seed)?;
    let mut out = survey.conditional_second_nearest(layout.len());
    if side >= 3 {
        let graph = build_grid_delaunay(side)?;
        let nearest = survey.nearest_counts(layout.len());
        for (i, &c) in nearest.iter().enumerate() {
            if c > 0 {
                for &j in graph.neighbors(i) {
                    out.entry((i, j)).or_insert(0.0);
                }
            }
        }
    }
    Ok(out)
}

/// Monte Carlo picture of the order-2 Voronoi diagram: every distinct
/// two-nearest pair seen is a nonempty cell, and its hit fraction is the
/// cell's area.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderCellEstimate {
    pub probes: u64,
    pub distinct_pairs: usize,
    pub pair_counts: BTreeMap<(usize, usize), u64>,
    pub pair_areas: BTreeMap<(usize, usize), f64>,
}

impl SecondOrderCellEstimate {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_pair_csv(w, &self.pair_counts, self.probes)
    }
}

pub fn estimate_second_order_cells(layout: &ServerLayout, probes: u64, seed: u64) -> Result<SecondOrderCellEstimate> {
    if probes == 0 {
        return Err(Error::invalid("second-order cell estimate needs probes >= 1"));
    }
    let survey = ProbeSurvey::run(layout, probes, seed)?;
    let pair_counts = survey.pair_counts();
    let pair_areas = pair_counts.iter().map(|(&k, &c)| (k, c as f64 / probes as f64)).collect();
    Ok(SecondOrderCellEstimate { probes, distinct_pairs: pair_counts.len(), pair_counts, pair_areas })
}
