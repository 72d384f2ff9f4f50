//! Command-line entry points for the offline pipeline and the live service.
//!
//! Every subcommand reads and writes plain files, prints a one-line JSON
//! summary on stdout and reports failures as a JSON record on stderr.
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure.

pub mod args;
mod cmd;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, FeaturesCmd, TrainCmd};
use config::{CliConfig, Paths};
pub use error::{CliError, Result};

/// Shared state handed to every subcommand.
pub struct Ctx {
    pub cfg: CliConfig,
    pub paths: Paths,
}

impl Ctx {
    pub fn path(&self, p: &Path) -> PathBuf {
        self.paths.get(p)
    }
}

/// Sidecar listing the feature names of a sequence dataset.
pub fn schema_path(data: &Path) -> PathBuf {
    data.with_extension("schema")
}

/// Parses `argv`, runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::Validation(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<serde_json::Value> {
    let paths = Paths { root: cli.data_dir.clone() };
    let cfg = CliConfig::load(cli.config.as_deref().map(|p| paths.get(p)).as_deref())?;
    let ctx = Ctx { cfg, paths };
    match &cli.cmd {
        Command::Synth(a) => cmd::data::synth(a, &ctx),
        Command::Ingest(a) => cmd::data::ingest(a, &ctx),
        Command::Features(FeaturesCmd::Wrist(a)) => cmd::data::features_wrist(a, &ctx),
        Command::Features(FeaturesCmd::Pose(a)) => cmd::data::features_pose(a, &ctx),
        Command::Train(TrainCmd::Forest(a)) => cmd::train::forest(a, &ctx),
        Command::Train(TrainCmd::Seq(a)) => cmd::train::seq(a, &ctx),
        Command::Prune(a) => cmd::train::prune(a, &ctx),
        Command::Replay(a) => cmd::replay::replay(a, &ctx),
        Command::Serve(a) => cmd::serve::serve(a, &ctx),
        Command::Report(a) => cmd::report::report(a, &ctx),
    }
}
