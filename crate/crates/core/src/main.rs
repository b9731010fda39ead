//! `uncertain-pose <experiment> --config <file> [--seed S] [--out DIR] [--jobs K]`

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use uncertain_pose::experiments::{run, Experiment, ExperimentConfig, ExperimentError};

#[derive(Parser, Debug)]
#[command(version, about = "Pose uncertainty experiments")]
struct Args {
    /// compose-sweep, relpose-alpha-sweep, slam-relpose, convert-demo or solve-graph
    experiment: String,
    /// JSON experiment config. Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

fn configure(args: &Args) -> Result<ExperimentConfig, ExperimentError> {
    let experiment = Experiment::parse(&args.experiment)
        .ok_or_else(|| ExperimentError::Usage(format!("unknown experiment {:?}", args.experiment)))?;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(experiment),
    };
    if cfg.experiment != experiment {
        return Err(ExperimentError::Usage(format!(
            "config is for {}, command line asks for {}",
            cfg.experiment.name(),
            experiment.name()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure(&args).and_then(|cfg| {
        if let Some(k) = cfg.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| ExperimentError::Usage(format!("cannot start {k} workers: {e}")))?;
        }
        run(&cfg)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
