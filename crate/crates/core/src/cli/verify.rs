use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::output::RunDir;
use super::{CommandReport, Outcome, OutputOptions};
use crate::bins::{check_schur_monotonicity, ProbabilityVector};
use crate::error::{Error, Result};
use crate::geom::ServerLayout;
use crate::rng::{self, tag};
use crate::tess::{build_delaunay, build_grid_delaunay, estimate_conditional_second_nearest, ProbeSurvey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyTarget {
    GridLemma1,
    GridRegularity,
    SecondOrderCells,
    Schur,
    ConditionalQuarter,
}

impl VerifyTarget {
    pub const ALL: [VerifyTarget; 5] = [
        VerifyTarget::GridLemma1,
        VerifyTarget::GridRegularity,
        VerifyTarget::SecondOrderCells,
        VerifyTarget::Schur,
        VerifyTarget::ConditionalQuarter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VerifyTarget::GridLemma1 => "grid-lemma1",
            VerifyTarget::GridRegularity => "grid-regularity",
            VerifyTarget::SecondOrderCells => "second-order-cells",
            VerifyTarget::Schur => "schur",
            VerifyTarget::ConditionalQuarter => "conditional-quarter",
        }
    }
}

impl fmt::Display for VerifyTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VerifyTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|t| t.name()).collect();
                Error::invalid(format!("unknown verify target `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Knobs for `verify`. Unset fields take per-target defaults.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub side: Option<usize>,
    pub n: Option<usize>,
    pub probes: Option<u64>,
    pub seed: u64,
    pub balls: Option<u64>,
    pub trials: Option<u64>,
    /// Random probability vectors for `schur`, layouts for `second-order-cells`.
    pub repeats: Option<usize>,
}

const TOLERANCE: f64 = 0.05;
const QUARTER_TOLERANCE: f64 = 0.01;

pub fn cmd_verify(target: VerifyTarget, opts: &VerifyOptions, out: &OutputOptions) -> Result<CommandReport> {
    let mut dir = RunDir::create(&out.out_root, &format!("verify-{}", target.name()))?;
    let mut config = BTreeMap::new();
    config.insert("target".to_string(), target.name().to_string());
    let (pass, lines) = match target {
        VerifyTarget::GridLemma1 => grid_lemma1(opts, &mut dir, &mut config)?,
        VerifyTarget::GridRegularity => grid_regularity(opts, &mut dir, &mut config)?,
        VerifyTarget::ConditionalQuarter => conditional_quarter(opts, &mut dir, &mut config)?,
        VerifyTarget::SecondOrderCells => second_order_cells(opts, &mut dir, &mut config)?,
        VerifyTarget::Schur => schur(opts, &mut dir, &mut config)?,
    };
    let mut lines = lines;
    lines.push(format!("{}: {}", target.name(), if pass { "PASS" } else { "FAIL" }));
    let text = lines.join("\n") + "\n";
    dir.write_text("report.txt", &text)?;
    let (dir, files) = dir.finish("verify", config, opts.seed)?;
    Ok(CommandReport { outcome: Outcome::from_pass(pass), lines, dir, files })
}

type Checked = (bool, Vec<String>);

fn grid_lemma1(opts: &VerifyOptions, dir: &mut RunDir, config: &mut BTreeMap<String, String>) -> Result<Checked> {
    let side = opts.side.unwrap_or(8);
    let probes = opts.probes.unwrap_or(1_000_000);
    config.insert("side".into(), side.to_string());
    config.insert("probes".into(), probes.to_string());
    if probes == 0 {
        return Err(Error::invalid("probes must be >= 1"));
    }
    let layout = ServerLayout::grid(side)?;
    let graph = build_grid_delaunay(side)?;
    let n = layout.len();
    let survey = ProbeSurvey::run(&layout, probes, opts.seed)?;
    let pairs = survey.pair_counts();
    let total = probes as f64;
    let off_graph: u64 = pairs.iter().filter(|(&(u, v), _)| !graph.contains(u, v)).map(|(_, &c)| c).sum();
    let edge_target = 1.0 / (2 * n) as f64;
    let edge_dev = graph
        .edges()
        .iter()
        .map(|e| (pairs.get(e).copied().unwrap_or(0) as f64 / total - edge_target).abs() / edge_target)
        .fold(0.0, f64::max);
    let nearest = survey.nearest_counts(n);
    let vertex_target = 1.0 / n as f64;
    let vertex_dev = nearest.iter().map(|&c| (c as f64 / total - vertex_target).abs() / vertex_target).fold(0.0, f64::max);

    dir.write("edges.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pair_i", "pair_j", "count", "probability", "relative_deviation"])?;
        for &(u, v) in graph.edges() {
            let c = pairs.get(&(u, v)).copied().unwrap_or(0);
            let p = c as f64 / total;
            out.write_record([u.to_string(), v.to_string(), c.to_string(), p.to_string(), ((p - edge_target).abs() / edge_target).to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    dir.write("vertices.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["server", "count", "probability", "relative_deviation"])?;
        for (s, &c) in nearest.iter().enumerate() {
            let p = c as f64 / total;
            out.write_record([s.to_string(), c.to_string(), p.to_string(), ((p - vertex_target).abs() / vertex_target).to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;

    let no_off = off_graph == 0;
    let edges_ok = edge_dev <= TOLERANCE;
    let vertices_ok = vertex_dev <= TOLERANCE;
    let lines = vec![
        format!("grid side {side}, n = {n}, {probes} probes, seed {}", opts.seed),
        format!("non-edge mass: {} ({})", off_graph as f64 / total, verdict(no_off)),
        format!("edge probability: max relative deviation from 1/{} = {edge_dev:.5} ({})", 2 * n, verdict(edges_ok)),
        format!("vertex probability: max relative deviation from 1/{n} = {vertex_dev:.5} ({})", verdict(vertices_ok)),
    ];
    Ok((no_off && edges_ok && vertices_ok, lines))
}

fn grid_regularity(opts: &VerifyOptions, dir: &mut RunDir, config: &mut BTreeMap<String, String>) -> Result<Checked> {
    let side = opts.side.unwrap_or(16);
    config.insert("side".into(), side.to_string());
    let graph = build_grid_delaunay(side)?;
    let n = graph.n();
    dir.write("degrees.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["server", "degree"])?;
        for s in 0..n {
            out.write_record([s.to_string(), graph.degree(s).to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    let regular = graph.regular_degree() == Some(4);
    let edges = graph.edge_count() == 2 * n;
    let lines = vec![
        format!("grid side {side}, n = {n}"),
        format!("degree 4 everywhere: {}", verdict(regular)),
        format!("|E| = {} (expected {}): {}", graph.edge_count(), 2 * n, verdict(edges)),
    ];
    Ok((regular && edges, lines))
}

fn conditional_quarter(opts: &VerifyOptions, dir: &mut RunDir, config: &mut BTreeMap<String, String>) -> Result<Checked> {
    let side = opts.side.unwrap_or(8);
    let probes = opts.probes.unwrap_or(1_000_000);
    config.insert("side".into(), side.to_string());
    config.insert("probes".into(), probes.to_string());
    let layout = ServerLayout::grid(side)?;
    let graph = build_grid_delaunay(side)?;
    let cond = estimate_conditional_second_nearest(&layout, probes, opts.seed)?;
    let mut worst: f64 = 0.0;
    let mut off_mass: f64 = 0.0;
    let mut checked = 0usize;
    dir.write("conditional.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["server", "second", "probability", "is_neighbor"])?;
        for (&(i, j), &p) in &cond {
            let neighbor = graph.contains(i, j);
            out.write_record([i.to_string(), j.to_string(), p.to_string(), neighbor.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    for (&(i, j), &p) in &cond {
        if graph.contains(i, j) {
            worst = worst.max((p - 0.25).abs());
            checked += 1;
        } else {
            off_mass += p;
        }
    }
    let all_pairs = checked == 4 * layout.len();
    let close = worst <= QUARTER_TOLERANCE;
    let clean = off_mass == 0.0;
    let lines = vec![
        format!("grid side {side}, {probes} probes, seed {}", opts.seed),
        format!("(server, neighbour) pairs checked: {checked} of {} ({})", 4 * layout.len(), verdict(all_pairs)),
        format!("max |p - 0.25| = {worst:.5} (tolerance {QUARTER_TOLERANCE}) ({})", verdict(close)),
        format!("mass on non-neighbours: {off_mass} ({})", verdict(clean)),
    ];
    Ok((all_pairs && close && clean, lines))
}

fn second_order_cells(opts: &VerifyOptions, dir: &mut RunDir, config: &mut BTreeMap<String, String>) -> Result<Checked> {
    let n = opts.n.unwrap_or(64);
    let probes = opts.probes.unwrap_or(1_000_000);
    let repeats = opts.repeats.unwrap_or(5);
    config.insert("n".into(), n.to_string());
    config.insert("probes".into(), probes.to_string());
    config.insert("seeds".into(), repeats.to_string());
    if probes == 0 {
        return Err(Error::invalid("probes must be >= 1"));
    }
    let mut rows = Vec::new();
    for r in 0..repeats {
        let seed = opts.seed.wrapping_add(r as u64);
        let layout = ServerLayout::uniform(n, seed)?;
        let graph = build_delaunay(&layout)?;
        let pairs = ProbeSurvey::run(&layout, probes, seed)?.pair_counts();
        let on_graph = pairs.keys().filter(|&&(u, v)| graph.contains(u, v)).count();
        rows.push((seed, pairs.len(), on_graph, graph.edge_count()));
    }
    let bound = 3 * n;
    dir.write("second_order_cells.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["seed", "distinct_pairs", "pairs_on_delaunay_edges", "delaunay_edges", "bound"])?;
        for &(seed, distinct, on_graph, edges) in &rows {
            out.write_record([seed.to_string(), distinct.to_string(), on_graph.to_string(), edges.to_string(), bound.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    let mut lines = vec![format!("uniform n = {n}, {probes} probes per layout, {repeats} layouts")];
    let mut pass = repeats > 0;
    for &(seed, distinct, on_graph, edges) in &rows {
        let ok = distinct <= bound && on_graph == distinct;
        pass &= ok;
        lines.push(format!(
            "seed {seed}: {distinct} distinct pairs (bound {bound}), {on_graph} on Delaunay edges, {edges} edges total ({})",
            verdict(ok)
        ));
    }
    Ok((pass, lines))
}

/// `Dirichlet(1, ..., 1)` sample.
fn random_simplex_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect()
}

fn schur(opts: &VerifyOptions, dir: &mut RunDir, config: &mut BTreeMap<String, String>) -> Result<Checked> {
    let n = opts.n.unwrap_or(16);
    let balls = opts.balls.unwrap_or(16);
    let trials = opts.trials.unwrap_or(100_000);
    let vectors = opts.repeats.unwrap_or(20);
    config.insert("n".into(), n.to_string());
    config.insert("balls".into(), balls.to_string());
    config.insert("trials".into(), trials.to_string());
    config.insert("vectors".into(), vectors.to_string());
    let uniform = ProbabilityVector::uniform(n)?;
    let mut verdicts = Vec::with_capacity(vectors);
    for v in 0..vectors {
        let mut rng = rng::stream(rng::derive(opts.seed, tag::VECTOR, v as u64));
        let p = ProbabilityVector::from_weights(&random_simplex_point(n, &mut rng))?;
        let seed = rng::derive(opts.seed, tag::TRIAL, v as u64);
        verdicts.push(check_schur_monotonicity(balls, &p, &uniform, trials, seed)?);
    }
    dir.write("schur.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["vector", "expected_max_p", "se_p", "expected_max_uniform", "se_uniform", "pass"])?;
        for (v, s) in verdicts.iter().enumerate() {
            out.write_record([
                v.to_string(),
                s.expected_p.to_string(),
                s.se_p.to_string(),
                s.expected_q.to_string(),
                s.se_q.to_string(),
                s.pass.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    })?;
    let passed = verdicts.iter().filter(|s| s.pass).count();
    let needed = (0.95 * vectors as f64).ceil() as usize;
    let mut lines = vec![format!("n = {n} bins, {balls} balls, {trials} trials per estimate, {vectors} random vectors")];
    for (v, s) in verdicts.iter().enumerate() {
        lines.push(format!(
            "vector {v}: E_p[max] = {:.4} (se {:.4}), E_u[max] = {:.4} (se {:.4}) {}",
            s.expected_p,
            s.se_p,
            s.expected_q,
            s.se_q,
            verdict(s.pass)
        ));
    }
    lines.push(format!("{passed}/{vectors} vectors pass (need {needed})"));
    Ok((vectors > 0 && passed >= needed, lines))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_names_round_trip() {
        for t in VerifyTarget::ALL {
            assert_eq!(t.name().parse::<VerifyTarget>().unwrap(), t);
        }
        assert!("bogus-target".parse::<VerifyTarget>().is_err());
    }
}
