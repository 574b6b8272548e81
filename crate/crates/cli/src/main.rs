//! `scramble-probe <scenario> [--config <path>] [--out <dir>] [--seed <u64>] [--key value ...]`
//!
//! Scenarios: trace-distance, heatmap, noise-study, oracle, validate.
//! Any configuration key can be passed as `--key value` (dashes or
//! underscores). Exit codes: 0 success, 1 validation or run failure,
//! 2 configuration error. `RAYON_NUM_THREADS` sets the worker count.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use scramble_core::experiments::{
    heatmap_scenario, noise_study_scenario, oracle_scenario, run_validate, trace_distance_scenario, ExperimentConfig,
    Scenario,
};

#[derive(Parser, Debug)]
#[command(name = "scramble-probe", version, about = "Operator scrambling and Holevo information experiments")]
struct Cli {
    /// trace-distance | heatmap | noise-study | oracle | validate
    scenario: String,

    /// TOML file with configuration keys
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Further `--key value` or `--key=value` overrides
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

fn overrides(raw: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut it = raw.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else { bail!("expected `--key value`, found `{arg}`") };
        match key.split_once('=') {
            Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
            None => {
                let value = it.next().with_context(|| format!("missing value for `--{key}`"))?;
                pairs.push((key.to_string(), value.clone()));
            }
        }
    }
    Ok(pairs)
}

fn resolve(cli: &Cli) -> anyhow::Result<(Scenario, ExperimentConfig)> {
    let scenario: Scenario = cli.scenario.parse()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    let mut pairs = Vec::new();
    if let Some(out) = &cli.out {
        pairs.push(("out".into(), out.display().to_string()));
    }
    if let Some(seed) = cli.seed {
        pairs.push(("seed".into(), seed.to_string()));
    }
    pairs.extend(overrides(&cli.overrides)?);
    for (key, value) in pairs {
        match key.as_str() {
            "out" => cfg.out_dir = PathBuf::from(value),
            "config" => bail!("--config must precede the key overrides"),
            _ => cfg.set(&key, &value)?,
        }
    }
    cfg.scenario = Some(scenario);
    if scenario != Scenario::Validate {
        cfg.validate()?;
    }
    Ok((scenario, cfg))
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(scenario: Scenario, cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    match scenario {
        Scenario::TraceDistance => {
            let out = trace_distance_scenario(cfg)?;
            for (n, slope) in &out.slopes {
                match slope {
                    Some(s) => println!("N = {n}: log-log slope {s:.3}"),
                    None => println!("N = {n}: slope needs two ensemble sizes"),
                }
            }
            print_files(&out.files);
        }
        Scenario::Heatmap => {
            let out = heatmap_scenario(cfg)?;
            println!("max |protocol - exact| = {:.4}", out.protocol.max_abs_diff(&out.exact));
            print_files(&out.files);
        }
        Scenario::NoiseStudy => {
            let out = noise_study_scenario(cfg)?;
            println!("{} time points, {} mitigated curves", out.times.len(), out.mitigated.len());
            print_files(&out.files);
        }
        Scenario::Oracle => print_files(&oracle_scenario(cfg)?.files),
        Scenario::Validate => {
            let report = run_validate();
            print!("{}", report.render());
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, cfg) = match resolve(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(scenario, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
