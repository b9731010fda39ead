//! Runs an experiment from a JSON config through the library, the same way
//! the command-line tool does.
//!
//! `cargo run --release --example run_experiment -- [config.json]`
use uncertain_pose::experiments::{run, ExperimentConfig};

const DEFAULT: &str = r#"{
  "experiment": "relpose-alpha-sweep",
  "seed": 3,
  "output-dir": "out/example",
  "relpose-alpha-sweep": { "alphas": [0.5, 1, 2, 4], "samples": 10000 }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::from_json(DEFAULT)?,
    };
    cfg.validate()?;
    for path in run(&cfg)? {
        println!("wrote {}", path.display());
        if path.extension().is_some_and(|e| e == "csv") {
            print!("{}", std::fs::read_to_string(&path)?);
        }
    }
    Ok(())
}
