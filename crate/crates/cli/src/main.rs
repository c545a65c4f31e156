use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csisense_cli::commands;
use csisense_cli::config::{parse_protocol, RunConfig};
use csisense_cli::CliError;
use csisense_core::pipeline::{Resolution, Stage};
use csisense_core::scenario::Scenario;

#[derive(Parser)]
#[command(name = "csisense", version, about = "WiFi CSI action recognition experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the seed of the scenario or run config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic traces and a dataset manifest.
    Synth(SynthArgs),
    /// Evaluate a pipeline on a manifest under a protocol.
    Run(RunArgs),
    /// Render one stage of a trace as a grayscale image.
    Plot(PlotArgs),
    /// Print manifest or trace statistics.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario TOML; overrides --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cross-room, multi-location or identification.
    #[arg(long, default_value = "cross-room")]
    preset: String,
    /// Rooms, locations or subjects in the preset.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Trace length in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Write the resolved scenario here instead of generating traces.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Run config TOML; overrides --pipeline, --protocol and --resolution.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "svd120-1svm")]
    pipeline: String,
    #[arg(long, default_value = "kfold")]
    protocol: String,
    #[arg(long, default_value = "fast")]
    resolution: Resolution,
    /// Write the resolved run config here and exit.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    #[arg(long)]
    png: bool,
    /// Also train on every trace and save the model bundle.
    #[arg(long)]
    save_model: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    trace: PathBuf,
    #[arg(long, default_value = "preprocessed")]
    stage: Stage,
    /// Run config supplying preprocessing, SVD mode and image size.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "fast")]
    resolution: Resolution,
    /// Output PGM path; a PNG is written next to it with --png.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    png: bool,
}

#[derive(Args)]
struct InspectArgs {
    path: PathBuf,
    /// Print the first frame's tap profile of each pair.
    #[arg(long)]
    taps: bool,
}

fn scenario(a: &SynthArgs, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut s = match &a.config {
        Some(p) => commands::load_scenario(p)?,
        None => match a.preset.as_str() {
            "cross-room" => Scenario::cross_room(a.count, a.reps, 0),
            "multi-location" => Scenario::multi_location(a.count, a.reps, 0),
            "identification" => Scenario::identification(a.count, a.reps, 0),
            other => return Err(CliError::Usage(format!("unknown scenario preset {other:?}"))),
        },
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(d) = a.duration {
        s.duration = d;
    }
    Ok(s)
}

fn run_config(a: &RunArgs, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::preset(&a.pipeline, a.resolution, parse_protocol(&a.protocol)?)?,
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Synth(a) => {
            let s = scenario(&a, cli.seed)?;
            if let Some(p) = &a.dump_config {
                let text = toml::to_string(&s).map_err(|e| CliError::Usage(e.to_string()))?;
                return csisense_cli::fsutil::write_atomic(p, text.as_bytes());
            }
            let m = commands::cmd_synth(&s, &a.out)?;
            println!("wrote {} traces to {}", m.entries.len(), a.out.display());
        }
        Cmd::Run(a) => {
            let cfg = run_config(&a, cli.seed)?;
            if let Some(p) = &a.dump_config {
                return csisense_cli::fsutil::write_atomic(p, cfg.to_toml().as_bytes());
            }
            let out = commands::cmd_run(&a.manifest, &cfg, &a.out, a.png, a.save_model)?;
            print!("{}", out.doc.table());
            println!("report: {}", out.report_path.display());
        }
        Cmd::Plot(a) => {
            let mut cfg = RunConfig::preset("none-4svm", a.resolution, parse_protocol("kfold")?)?;
            if let Some(p) = &a.config {
                cfg = RunConfig::load(p)?;
            }
            let png = a.png.then(|| a.out.with_extension("png"));
            commands::cmd_plot(&a.trace, a.stage, &a.out, png.as_deref(), &cfg)?;
        }
        Cmd::Inspect(a) => print!("{}", commands::cmd_inspect(&a.path, a.taps)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("global pool set once");
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
