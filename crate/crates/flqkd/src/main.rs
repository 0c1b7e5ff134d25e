use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flqkd::cli::run;
use flqkd::config::{Mode, OutputFormat, RunConfig};
use flqkd::error::Error;

#[derive(Parser)]
#[command(
    name = "flqkd",
    version,
    about = "Floodlight-QKD security analysis: key-rate sweeps, attack bounds, and channel-monitor simulation"
)]
struct Cli {
    #[command(subcommand)]
    mode: ModeCmd,

    /// Config file of key = value lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output data file.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_name = "csv|jsonl")]
    format: Option<String>,

    /// RNG seed for monitor simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps (default: FLQKD_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum ModeCmd {
    /// Optimized secret-key rate versus one-way path length.
    KeyrateSweep,
    /// Optimized secret-key rate versus Eve's injection fraction.
    FeSweep,
    /// Per-mode information bounds versus source brightness.
    HolevoSweep,
    /// One optimized operating point at the configured path length.
    Point,
    /// Event-level channel-monitor simulation.
    MonitorSim,
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mode = match cli.mode {
        ModeCmd::KeyrateSweep => Mode::KeyrateSweep,
        ModeCmd::FeSweep => Mode::FeSweep,
        ModeCmd::HolevoSweep => Mode::HolevoSweep,
        ModeCmd::Point => Mode::Point,
        ModeCmd::MonitorSim => Mode::MonitorSim,
    };
    let mut config = RunConfig::new(mode);
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    // the subcommand wins over any mode key in the file
    config.apply("mode", mode.as_str())?;
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        config.apply(k.trim(), v.trim())?;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(fmt) = &cli.format {
        config.format = OutputFormat::parse(fmt)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    } else if let Ok(env_threads) = std::env::var("FLQKD_THREADS") {
        config.threads = env_threads
            .parse()
            .map_err(|_| Error::Config(format!("FLQKD_THREADS = '{env_threads}' is not an integer")))?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("flqkd: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = config.validate() {
        eprintln!("flqkd: {e}");
        return ExitCode::from(2);
    }

    let outcome = if config.threads > 0 {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
        {
            Ok(pool) => pool.install(|| run(&config)),
            Err(e) => {
                eprintln!("flqkd: cannot build thread pool: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        run(&config)
    };

    match outcome {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("flqkd: warning: {w}");
            }
            println!("wrote {}", config.out.display());
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("flqkd: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("flqkd: {e}");
            ExitCode::from(3)
        }
    }
}
