use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use torchpilot::cli::{cmd_features, cmd_run, cmd_suite, features_csv, resolve_out_dir};
use torchpilot::config::RunConfig;
use torchpilot::harness::RunResult;

#[derive(Parser)]
#[command(
    name = "torchpilot",
    version,
    about = "Vision-based oxy-fuel torch control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (falls back to TORCHPILOT_OUT, then the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump calibration and combustion frames as PPM files.
    #[arg(long)]
    dump_frames: bool,
    /// Worker threads for suite runs (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment (single run, or the suite if the
    /// config sets `suite = true`).
    Run(CommonArgs),
    /// Run the full 3x3 mode-by-thickness comparison.
    Suite(CommonArgs),
    /// Extract per-frame pool features from recorded PPM frames.
    Features {
        /// Directory holding cal_*.ppm and frame_*.ppm files.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the feature CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config file.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, torchpilot::error::Error> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_overrides(cfg: &mut RunConfig, args: &CommonArgs) {
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
}

fn report(results: &[RunResult]) -> bool {
    let mut any_abort = false;
    for r in results {
        let status = match r.cause {
            Some(cause) => {
                any_abort = true;
                format!("aborted ({})", cause.name())
            }
            None => "ok".into(),
        };
        println!(
            "{} {:.3} in: success_ratio={:.3} steps={} {}",
            r.mode.label(),
            r.thickness_in,
            r.success_ratio,
            r.steps,
            status
        );
    }
    any_abort
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => load_config(args.config.as_ref()).and_then(|mut cfg| {
            apply_overrides(&mut cfg, &args);
            let out = resolve_out_dir(args.out.as_deref(), &cfg);
            cmd_run(&cfg, &out, args.dump_frames).map(|results| report(&results))
        }),
        Command::Suite(args) => load_config(args.config.as_ref()).and_then(|mut cfg| {
            apply_overrides(&mut cfg, &args);
            let out = resolve_out_dir(args.out.as_deref(), &cfg);
            cmd_suite(&cfg, &out, args.dump_frames).map(|results| report(&results))
        }),
        Command::Features {
            frames,
            config,
            out,
        } => load_config(config.as_ref()).and_then(|cfg| {
            cmd_features(&frames, &cfg).and_then(|rows| {
                let csv = features_csv(&rows);
                match out {
                    Some(path) => std::fs::write(&path, csv)
                        .map_err(|e| torchpilot::error::Error::io(path, e))
                        .map(|_| false),
                    None => {
                        print!("{csv}");
                        Ok(false)
                    }
                }
            })
        }),
        Command::ValidateConfig { config } => RunConfig::load(&config).map(|_| {
            println!("ok: {}", config.display());
            false
        }),
    };

    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
