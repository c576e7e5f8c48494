use std::fmt::Write as _;
use std::path::Path;

use super::config::ConfigFile;
use super::output::RunDir;
use super::{CommandReport, Outcome, OutputOptions};
use crate::error::{Error, Result};
use crate::exp::{
    run_conjecture_probe, run_distribution_study, run_mobility_study, run_scaling_sweep, run_scenario,
    run_tradeoff_suite, write_dist_hist_csv, write_growth_csv, write_load_hist_csv, write_summary_csv,
    write_trials_csv, MobilityConfig, MobilityModel, MobilityRow, PlacementSpec, ScenarioConfig, ScenarioReport,
    ScalingSweep, Trend,
};
use crate::policy::{PolicyKind, PolicySpec};

const SWEEP_N: [usize; 5] = [100, 400, 1600, 6400, 25600];

/// Runs the experiment described by a config file: `scenario` (default),
/// `tradeoff`, `distribution` or `mobility`. Sweep experiments are handed
/// to [`cmd_sweep`].
pub fn cmd_run(config: &Path, out: &OutputOptions) -> Result<CommandReport> {
    let cfg = ConfigFile::load(config)?;
    let experiment = cfg.raw("experiment").unwrap_or("scenario").to_string();
    match experiment.as_str() {
        "scenario" => run_single(&cfg, out),
        "tradeoff" => run_tradeoff(&cfg, out),
        "distribution" => run_distribution(&cfg, out),
        "mobility" => run_mobility(&cfg, out),
        "sweep" | "conjecture" => sweep_from(&cfg, out),
        other => Err(unknown_experiment(&cfg, other)),
    }
}

/// Runs a growth sweep (`experiment = sweep`, the default) or a fixed-k
/// conjecture probe (`experiment = conjecture`).
pub fn cmd_sweep(config: &Path, out: &OutputOptions) -> Result<CommandReport> {
    let cfg = ConfigFile::load(config)?;
    sweep_from(&cfg, out)
}

fn sweep_from(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    match cfg.raw("experiment").unwrap_or("sweep") {
        "sweep" => run_sweep(cfg, out),
        "conjecture" => run_conjecture(cfg, out),
        other => Err(unknown_experiment(cfg, other)),
    }
}

fn unknown_experiment(cfg: &ConfigFile, name: &str) -> Error {
    Error::Config { line: cfg.line("experiment"), message: format!("unknown experiment `{name}`") }
}

fn seed(cfg: &ConfigFile) -> Result<u64> {
    cfg.get_or("seed", 0)
}

fn positive(cfg: &ConfigFile, key: &str, default: usize) -> Result<usize> {
    let v: usize = cfg.get_or(key, default)?;
    if v == 0 {
        return Err(Error::Config { line: cfg.line(key), message: format!("`{key}` must be >= 1") });
    }
    Ok(v)
}

fn policy(cfg: &ConfigFile, n: usize) -> Result<PolicyKind> {
    let spec: PolicySpec = cfg.get_or("policy", PolicySpec::Fixed(PolicyKind::Spot))?;
    let kind = match (cfg.get::<usize>("k")?, spec) {
        (None, spec) => spec.resolve(n),
        (Some(k), PolicySpec::KSpotLog | PolicySpec::Fixed(PolicyKind::KSpot(_))) => PolicyKind::KSpot(k),
        (Some(_), _) => {
            return Err(Error::Config { line: cfg.line("k"), message: "`k` only applies to kSPOT".into() });
        }
    };
    let key = if cfg.raw("k").is_some() { "k" } else { "policy" };
    kind.validate(n).map_err(|e| cfg.at(key, e))?;
    Ok(kind)
}

fn mobility(cfg: &ConfigFile) -> Result<Option<MobilityConfig>> {
    let keys = ["mobility_model", "v_max", "dt", "warmup_per_user"];
    if keys.iter().all(|k| cfg.raw(k).is_none()) {
        return Ok(None);
    }
    mobility_base(cfg).map(Some)
}

fn mobility_base(cfg: &ConfigFile) -> Result<MobilityConfig> {
    let d = MobilityConfig::default();
    let model = match cfg.raw("mobility_model") {
        None => d.model,
        Some("random_waypoint") => MobilityModel::RandomWaypoint,
        Some("random_direction_reflect") => MobilityModel::RandomDirectionReflect,
        Some(other) => {
            return Err(Error::Config {
                line: cfg.line("mobility_model"),
                message: format!("unknown mobility model `{other}` (random_waypoint or random_direction_reflect)"),
            })
        }
    };
    let m = MobilityConfig {
        model,
        v_max: cfg.get_or("v_max", d.v_max)?,
        dt: cfg.get_or("dt", d.dt)?,
        warmup_per_user: cfg.get_or("warmup_per_user", d.warmup_per_user)?,
    };
    m.validate().map_err(|e| Error::Config { line: 0, message: e.to_string() })?;
    Ok(m)
}

/// Builds a [`ScenarioConfig`] from `placement`, `n`/`side`, `m`, `policy`,
/// `k`, `trials`, `seed` and the optional mobility keys.
pub(crate) fn scenario_config(cfg: &ConfigFile) -> Result<ScenarioConfig> {
    let placement = match cfg.raw("placement").unwrap_or("uniform") {
        "uniform" => None,
        "grid" => Some(()),
        other => {
            return Err(Error::Config { line: cfg.line("placement"), message: format!("unknown placement `{other}` (uniform or grid)") })
        }
    };
    let (placement, n) = match placement {
        None => {
            if cfg.raw("side").is_some() {
                return Err(Error::Config { line: cfg.line("side"), message: "`side` requires placement = grid".into() });
            }
            (PlacementSpec::Uniform, cfg.require::<usize>("n")?)
        }
        Some(()) => {
            let side = match (cfg.get::<usize>("side")?, cfg.get::<usize>("n")?) {
                (Some(side), Some(n)) if side * side != n => {
                    return Err(Error::Config { line: cfg.line("n"), message: format!("grid placement needs n = side² ({n} != {side}²)") })
                }
                (Some(side), _) => side,
                (None, Some(n)) => {
                    let side = (n as f64).sqrt().round() as usize;
                    if side * side != n {
                        return Err(Error::Config { line: cfg.line("n"), message: format!("grid placement needs a square n, got {n}") });
                    }
                    side
                }
                (None, None) => return Err(Error::Config { line: 0, message: "grid placement needs `side` or `n`".into() }),
            };
            (PlacementSpec::Grid { side }, side * side)
        }
    };
    let sc = ScenarioConfig {
        placement,
        n,
        m: cfg.get_or("m", n)?,
        policy: policy(cfg, n)?,
        trials: positive(cfg, "trials", 10)?,
        seed: seed(cfg)?,
        mobility: mobility(cfg)?,
    };
    sc.validate().map_err(|e| cfg.at(if cfg.raw("n").is_some() { "n" } else { "side" }, e))?;
    Ok(sc)
}

fn write_reports(dir: &mut RunDir, reports: &[ScenarioReport]) -> Result<()> {
    dir.write("summary.csv", |w| write_summary_csv(w, reports))?;
    dir.write("trials.csv", |w| write_trials_csv(w, reports))?;
    dir.write("load_hist.csv", |w| write_load_hist_csv(w, reports))?;
    dir.write("dist_hist.csv", |w| write_dist_hist_csv(w, reports))?;
    Ok(())
}

fn report_lines(reports: &[ScenarioReport]) -> Vec<String> {
    reports
        .iter()
        .map(|r| {
            format!(
                "{:<10} n = {:<6} max load {:.3} [{:.3}, {:.3}]  distance {:.5} [{:.5}, {:.5}]",
                r.policy.to_string(),
                r.n,
                r.max_load.mean,
                r.max_load.ci_low,
                r.max_load.ci_high,
                r.mean_distance.mean,
                r.mean_distance.ci_low,
                r.mean_distance.ci_high
            )
        })
        .collect()
}

fn finish(
    mut dir: RunDir,
    cfg: &ConfigFile,
    command: &str,
    lines: Vec<String>,
    plot: Option<String>,
    out: &OutputOptions,
    outcome: Outcome,
) -> Result<CommandReport> {
    if out.gnuplot {
        if let Some(script) = plot {
            dir.write_text("plot.gp", &script)?;
        }
    }
    let (dir, files) = dir.finish(command, cfg.echo(), seed(cfg)?)?;
    Ok(CommandReport { outcome, lines, dir, files })
}

fn scenario_plot() -> String {
    "set datafile separator ','\nset terminal pngcairo size 900,600\n\
     set output 'load_hist.png'\nset xlabel 'load'\nset ylabel 'fraction of servers'\n\
     plot 'load_hist.csv' every ::1 using 2:4 with linespoints title 'load'\n\
     set output 'dist_hist.png'\nset xlabel 'request distance'\nset ylabel 'fraction of users'\n\
     plot 'dist_hist.csv' every ::1 using 3:6 with steps title 'distance'\n"
        .to_string()
}

fn run_single(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    let sc = scenario_config(cfg)?;
    let report = run_scenario(&sc)?;
    let mut dir = RunDir::create(&out.out_root, "scenario")?;
    let reports = [report];
    write_reports(&mut dir, &reports)?;
    finish(dir, cfg, "run", report_lines(&reports), Some(scenario_plot()), out, Outcome::Pass)
}

fn run_tradeoff(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    let n = cfg.get_or("n", 10_000)?;
    let trials = positive(cfg, "trials", 10)?;
    let reports = run_tradeoff_suite(n, trials, seed(cfg)?).map_err(|e| cfg.at("n", e))?;
    let mut dir = RunDir::create(&out.out_root, "tradeoff")?;
    write_reports(&mut dir, &reports)?;
    let plot = "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'tradeoff.png'\n\
                set xlabel 'mean request distance'\nset ylabel 'mean max load'\n\
                plot 'summary.csv' every ::1 using 7:4:(stringcolumn(1)) with labels point pt 7 offset 1,1 notitle\n";
    finish(dir, cfg, "run", report_lines(&reports), Some(plot.to_string()), out, Outcome::Pass)
}

fn run_distribution(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    let n = cfg.get_or("n", 50_000)?;
    let study = run_distribution_study(n, seed(cfg)?).map_err(|e| cfg.at("n", e))?;
    let mut dir = RunDir::create(&out.out_root, "distribution")?;
    write_reports(&mut dir, &study.reports)?;
    let mut lines = report_lines(&study.reports);
    if let Some(tv) = study.load_total_variation(PolicyKind::Dpot, PolicyKind::Pot) {
        lines.push(format!("total variation between dPOT and POT load histograms: {tv:.5}"));
    }
    finish(dir, cfg, "run", lines, Some(scenario_plot()), out, Outcome::Pass)
}

fn write_mobility_csv<W: std::io::Write>(w: W, rows: &[MobilityRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "velocity",
        "policy",
        "n",
        "trials",
        "mean_max_load",
        "max_load_ci_low",
        "max_load_ci_high",
        "mean_distance",
        "distance_ci_low",
        "distance_ci_high",
    ])?;
    for row in rows {
        let r = &row.report;
        out.write_record([
            row.velocity.to_string(),
            r.policy.to_string(),
            r.n.to_string(),
            r.trials.len().to_string(),
            r.max_load.mean.to_string(),
            r.max_load.ci_low.to_string(),
            r.max_load.ci_high.to_string(),
            r.mean_distance.mean.to_string(),
            r.mean_distance.ci_low.to_string(),
            r.mean_distance.ci_high.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn write_mobility_trials_csv<W: std::io::Write>(w: W, rows: &[MobilityRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["velocity", "trial", "max_load", "mean_distance", "total_load"])?;
    for row in rows {
        for t in &row.report.trials {
            out.write_record([
                row.velocity.to_string(),
                t.trial.to_string(),
                t.max_load.to_string(),
                t.mean_distance.to_string(),
                t.total_load.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run_mobility(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    let n = cfg.get_or("n", 64)?;
    let trials = positive(cfg, "trials", 1000)?;
    let velocities: Vec<f64> = cfg.get_list("velocities")?.unwrap_or_else(|| vec![0.01, 0.1]);
    let base = mobility_base(cfg)?;
    let rows = run_mobility_study(n, trials, &velocities, &base, seed(cfg)?).map_err(|e| cfg.at("velocities", e))?;
    let mut dir = RunDir::create(&out.out_root, "mobility")?;
    dir.write("mobility.csv", |w| write_mobility_csv(w, &rows))?;
    dir.write("trials.csv", |w| write_mobility_trials_csv(w, &rows))?;
    let mut lines: Vec<String> = rows
        .iter()
        .map(|row| {
            let s = &row.report.max_load;
            format!("v_max {:<6} mean max load {:.4} [{:.4}, {:.4}]", row.velocity, s.mean, s.ci_low, s.ci_high)
        })
        .collect();
    if rows.len() >= 2 {
        let all_overlap = rows.windows(2).all(|w| w[0].report.max_load.overlaps(&w[1].report.max_load));
        lines.push(format!("adjacent velocity CIs overlap: {all_overlap}"));
    }
    let plot = "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'mobility.png'\n\
                set logscale x\nset xlabel 'v_max'\nset ylabel 'mean max load'\n\
                plot 'mobility.csv' every ::1 using 1:5:6:7 with yerrorlines title 'sPOT'\n";
    finish(dir, cfg, "run", lines, Some(plot.to_string()), out, Outcome::Pass)
}

fn n_values(cfg: &ConfigFile) -> Result<Vec<usize>> {
    Ok(cfg.get_list("n_values")?.unwrap_or_else(|| SWEEP_N.to_vec()))
}

fn growth_plot() -> String {
    "set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'growth.png'\n\
     set logscale x\nset xlabel 'n'\nset ylabel 'mean max load'\nset key left top\n\
     plot for [p in system(\"tail -n +2 growth.csv | cut -d, -f2 | sort -u | tr '\\n' ' '\")] \
     'growth.csv' every ::1 using ($2 eq p ? $1 : NaN):3 with linespoints title p\n"
        .to_string()
}

/// What a sweep is expected to show, evaluated only for policies present.
fn sweep_expectations(sweep: &ScalingSweep, n_values: &[usize]) -> Vec<(String, Option<bool>)> {
    let mut out = Vec::new();
    let trend = |policy: PolicyKind, r1: bool, want: Trend| {
        let label = policy.to_string();
        sweep.diagnostic(&label).map(|d| {
            let got = if r1 { d.r1 } else { d.r2 };
            let name = if r1 { "r1" } else { "r2" };
            let desc = format!("{label} {name} {}", want.label());
            match got {
                Trend::InsufficientPoints => (desc + ": insufficient points", None),
                t => (format!("{desc}: observed {}", t.label()), Some(t == want)),
            }
        })
    };
    out.extend(trend(PolicyKind::Pot, true, Trend::Decreasing));
    out.extend(trend(PolicyKind::Dpot, true, Trend::Decreasing));
    out.extend(trend(PolicyKind::Spot, false, Trend::Increasing));
    let k_label = PolicySpec::KSpotLog.to_string();
    let (pot, spot, k) = (sweep.series("POT"), sweep.series("sPOT"), sweep.series(&k_label));
    if !pot.is_empty() && !spot.is_empty() && !k.is_empty() {
        let ok = n_values.iter().enumerate().all(|(i, _)| {
            let (a, b, c) = (pot[i].mean_max_load, spot[i].mean_max_load, k[i].mean_max_load);
            a <= c && c <= b
        });
        out.push((format!("{k_label} mean max load between POT and sPOT at every n: {ok}"), Some(ok)));
    }
    out
}

fn run_sweep(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    let ns = n_values(cfg)?;
    let trials = positive(cfg, "trials", 50)?;
    let policies: Vec<PolicySpec> = cfg.get_list("policies")?.unwrap_or_else(|| {
        vec![
            PolicySpec::Fixed(PolicyKind::Pot),
            PolicySpec::Fixed(PolicyKind::Spot),
            PolicySpec::Fixed(PolicyKind::Dpot),
            PolicySpec::KSpotLog,
        ]
    });
    if policies.is_empty() {
        return Err(Error::Config { line: cfg.line("policies"), message: "`policies` is empty".into() });
    }
    let sweep = run_scaling_sweep(&ns, trials, &policies, seed(cfg)?).map_err(|e| cfg.at("n_values", e))?;
    let mut dir = RunDir::create(&out.out_root, "sweep")?;
    dir.write("growth.csv", |w| write_growth_csv(w, &sweep.rows))?;

    let mut text = String::new();
    for d in &sweep.diagnostics {
        let _ = writeln!(
            text,
            "{}: r1 {} (spearman {}), r2 {} (spearman {})",
            d.policy,
            d.r1.label(),
            fmt_rho(d.rho1),
            d.r2.label(),
            fmt_rho(d.rho2)
        );
    }
    let expectations = sweep_expectations(&sweep, &ns);
    for (line, ok) in &expectations {
        let tag = match ok {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        let _ = writeln!(text, "[{tag}] {line}");
    }
    for w in &sweep.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    dir.write_text("verdicts.txt", &text)?;
    let pass = expectations.iter().all(|(_, ok)| ok.unwrap_or(true));
    let lines = text.lines().map(str::to_string).collect();
    finish(dir, cfg, "sweep", lines, Some(growth_plot()), out, Outcome::from_pass(pass))
}

fn fmt_rho(rho: Option<f64>) -> String {
    rho.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"))
}

fn run_conjecture(cfg: &ConfigFile, out: &OutputOptions) -> Result<CommandReport> {
    let ns = n_values(cfg)?;
    let trials = positive(cfg, "trials", 50)?;
    let k = cfg.get_or("k_fixed", 4)?;
    let report = run_conjecture_probe(&ns, k, trials, seed(cfg)?).map_err(|e| {
        let key = if matches!(&e, Error::InvalidArgument(m) if m.contains("k_fixed")) { "k_fixed" } else { "n_values" };
        cfg.at(key, e)
    })?;
    let mut dir = RunDir::create(&out.out_root, "conjecture")?;
    let rows: Vec<_> = report.rows.iter().chain(&report.spot_rows).cloned().collect();
    dir.write("growth.csv", |w| write_growth_csv(w, &rows))?;

    let mut text = String::new();
    let d = &report.diagnostic;
    let _ = writeln!(text, "{}: r1 {} (spearman {}), r2 {} (spearman {})", d.policy, d.r1.label(), fmt_rho(d.rho1), d.r2.label(), fmt_rho(d.rho2));
    for (n, diff) in &report.paired_difference {
        let _ = writeln!(
            text,
            "n = {n}: paired max-load difference {} - sPOT = {:.4} [{:.4}, {:.4}]",
            d.policy, diff.mean, diff.ci_low, diff.ci_high
        );
    }
    for n in &report.skipped {
        let _ = writeln!(text, "warning: n = {n} skipped, k = {k} exceeds n");
    }
    let verdict = match d.r2 {
        Trend::InsufficientPoints => "insufficient points",
        _ if report.consistent => "consistent with conjecture",
        _ => "not consistent with conjecture",
    };
    let _ = writeln!(text, "verdict: {verdict}");
    dir.write_text("verdicts.txt", &text)?;
    let lines = text.lines().map(str::to_string).collect();
    finish(dir, cfg, "sweep", lines, Some(growth_plot()), out, Outcome::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        scenario_config(&ConfigFile::parse(text).unwrap())
    }

    #[test]
    fn scenario_keys() {
        let sc = parse("placement = grid\nside = 4\npolicy = kSPOT\nk = 3\ntrials = 2\nseed = 5\n").unwrap();
        assert_eq!(sc.placement, PlacementSpec::Grid { side: 4 });
        assert_eq!((sc.n, sc.m, sc.trials, sc.seed), (16, 16, 2, 5));
        assert_eq!(sc.policy, PolicyKind::KSpot(3));
        assert!(sc.mobility.is_none());

        let sc = parse("n = 100\npolicy = kSPOT(log)\nv_max = 0.05\n").unwrap();
        assert_eq!(sc.policy, PolicyKind::KSpot(5));
        assert_eq!(sc.mobility.unwrap().v_max, 0.05);
    }

    #[test]
    fn invariant_violations_point_at_the_line() {
        match parse("placement = grid\nseed = 1\nn = 10\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse("n = 10\npolicy = kSPOT(11)\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("n = 10\ntrials = 0\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
