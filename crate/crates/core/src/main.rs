use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spotlab::cli::{cmd_run, cmd_sweep, cmd_verify, CommandReport, OutputOptions, VerifyOptions, VerifyTarget, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "spotlab", version, about = "Spatial power-of-two-choices load balancing experiments")]
struct Args {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Root directory for run output.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Also write a gnuplot script next to the CSVs.
    #[arg(long, global = true)]
    gnuplot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a structural or statistical property.
    Verify {
        /// grid-lemma1, grid-regularity, second-order-cells, schur or conditional-quarter
        target: String,
        #[arg(long)]
        side: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        probes: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        balls: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Random vectors (schur) or layouts (second-order-cells).
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Run an experiment from a config file.
    Run { config: PathBuf },
    /// Run a scaling sweep from a config file.
    Sweep { config: PathBuf },
}

fn execute(args: Args) -> spotlab::Result<CommandReport> {
    let out = OutputOptions { out_root: args.out, gnuplot: args.gnuplot };
    match args.command {
        Command::Verify { target, side, n, probes, seed, balls, trials, repeats } => {
            let target: VerifyTarget = target.parse()?;
            let opts = VerifyOptions { side, n, probes, seed, balls, trials, repeats };
            cmd_verify(target, &opts, &out)
        }
        Command::Run { config } => cmd_run(&config, &out),
        Command::Sweep { config } => cmd_sweep(&config, &out),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    match execute(args) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out, "output: {}", report.dir.display());
            ExitCode::from(report.outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
