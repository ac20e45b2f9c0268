use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;
use crate::config::RunConfig;
use crate::error::{CliError, Result, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "orsim", version, about = "Rotation-invariant object detection in aerial images")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the per-group power-law exponents used by the fast pyramid.
    Calibrate(Common),
    /// Train a boosted detector.
    Train(Common),
    /// Run a detector over a directory of images.
    Detect(Common),
    /// Score detections against annotations.
    Eval(Common),
    /// Generate a synthetic corpus.
    Synth(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output path; overrides the one named in the config.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "on|off")]
    two_step_nms: Option<OnOff>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::parse("", Path::new("."))?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.two_step_nms {
            cfg.two_step_nms = t == OnOff::On;
        }
        Ok(cfg)
    }
}

fn dispatch(command: &Command) -> Result<PathBuf> {
    match command {
        Command::Calibrate(c) => commands::calibrate(&c.config()?, c.out.as_deref()),
        Command::Train(c) => commands::train(&c.config()?, c.out.as_deref()),
        Command::Detect(c) => commands::detect_dir(&c.config()?, c.out.as_deref()),
        Command::Eval(c) => commands::eval(&c.config()?, c.out.as_deref()),
        Command::Synth(c) => commands::synth(&c.config()?, c.out.as_deref()),
    }
}

/// Parse `args` (program name first), run the command and return the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: {}", CliError::Usage("--threads must be positive".into()));
            return CliError::Usage(String::new()).exit_code();
        }
        // Fails only if a global pool already exists, e.g. in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli.command) {
        Ok(path) => {
            eprintln!("wrote {}", path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
