//! Command implementations behind the `spotlab` binary: `verify`, `run`
//! and `sweep`. Each returns a [`CommandReport`]; the binary maps it to the
//! exit-code contract (0 pass, 1 statistical failure, 2 usage or config
//! error).

pub mod config;
mod output;
mod run;
mod verify;

use std::path::PathBuf;

pub use config::ConfigFile;
pub use output::{RunDir, RunManifest};
pub use run::{cmd_run, cmd_sweep};
pub use verify::{cmd_verify, VerifyOptions, VerifyTarget};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => EXIT_PASS,
            Outcome::Fail => EXIT_FAIL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandReport {
    pub outcome: Outcome,
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    pub dir: PathBuf,
    /// Data files written, excluding the manifest.
    pub files: Vec<PathBuf>,
}

/// Where results go.
#[derive(Debug, Clone)]
pub struct OutputOptions {
    /// Each command creates a fresh timestamped directory under this root.
    pub out_root: PathBuf,
    /// Also write a gnuplot script next to the CSVs.
    pub gnuplot: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { out_root: PathBuf::from("results"), gnuplot: false }
    }
}
