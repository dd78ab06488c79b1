use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ersl_core::harness::{self, HarnessError};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "ersl", version, about = "Elongated randomly stretched lattice experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write edge lists and cluster labels.
    Generate(Overrides),
    /// Solve the Dirichlet problem across window sizes.
    Conductivity(Overrides),
    /// Estimate bad-layer event frequencies.
    Events(Overrides),
    /// Annealed centre-edge density as the filling cutoff grows.
    Density(Overrides),
    /// Random-walk mean squared displacement and exponent fit.
    Walk(Overrides),
    /// Run a config file as written.
    Sweep(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Window sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replicates per window size.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// ersl, rsl_elongated_unfilled, rsl_plain, full, bernoulli(p0), one_directional(law).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Filling cutoff L.
    #[arg(long = "fill-cutoff")]
    fill_cutoff: Option<u32>,
    #[arg(long)]
    allow_q_above_p: bool,
    /// Worker threads; defaults to ERSL_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn default_document() -> Value {
    json!({
        "params": {"p": 0.65, "q": 0.3, "sigma": 0.25, "L": 2},
        "n_list": [64],
    })
}

fn build_document(experiment: Option<&str>, o: &Overrides) -> Result<Value, HarnessError> {
    let mut doc = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| HarnessError::Config {
                pointer: "/".into(),
                message: e.to_string(),
            })?
        }
        None => default_document(),
    };
    let Value::Object(root) = &mut doc else {
        return Err(HarnessError::Config {
            pointer: "/".into(),
            message: "config must be a JSON object".into(),
        });
    };
    if let Some(e) = experiment {
        root.insert("experiment".into(), json!(e));
    }
    if let Some(n) = &o.n {
        root.insert("n_list".into(), json!(n));
    }
    if let Some(seed) = o.seed {
        root.insert("seed_base".into(), json!(seed));
    }
    if let Some(reps) = o.reps {
        root.insert("replicates".into(), json!(reps));
    }
    if let Some(out) = &o.out {
        root.insert("output_dir".into(), json!(out));
    }
    if let Some(model) = &o.model {
        let kind: ersl_core::ModelKind = model.parse().map_err(|e: String| HarnessError::Config {
            pointer: "/model".into(),
            message: e,
        })?;
        root.insert("model".into(), serde_json::to_value(kind).expect("model serializes"));
    }
    if o.allow_q_above_p {
        root.insert("allow_q_above_p".into(), json!(true));
    }
    let params = root.entry("params").or_insert_with(|| Value::Object(Map::new()));
    if let Value::Object(params) = params {
        for (key, value) in [("p", o.p), ("q", o.q), ("sigma", o.sigma)] {
            if let Some(v) = value {
                params.insert(key.into(), json!(v));
            }
        }
        if let Some(l) = o.fill_cutoff {
            params.insert("L".into(), json!(l));
        }
    }
    Ok(doc)
}

fn execute(experiment: Option<&str>, o: &Overrides) -> Result<harness::RunManifest, HarnessError> {
    let doc = build_document(experiment, o)?;
    let config = harness::parse_config(&doc.to_string())?;
    let threads = o.threads.or_else(harness::threads_from_env);
    let manifest = harness::run_with_threads(&config, threads)?;
    for name in &manifest.outputs {
        println!("{}", config.output_dir.join(name).display());
    }
    println!("{}", config.output_dir.join("manifest.json").display());
    Ok(manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, overrides) = match &cli.command {
        Command::Generate(o) => (Some("generate_only"), o),
        Command::Conductivity(o) => (Some("conductivity_sweep"), o),
        Command::Events(o) => (Some("event_frequencies"), o),
        Command::Density(o) => (Some("edge_density_vs_L"), o),
        Command::Walk(o) => (Some("walk_msd"), o),
        Command::Sweep(o) => (None, o),
    };
    match execute(experiment, overrides) {
        Ok(manifest) if manifest.has_failures() => {
            for f in &manifest.failures {
                eprintln!("row n={} replicate={} seed={} failed: {}", f.n, f.replicate, f.seed, f.error);
            }
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e @ HarnessError::Config { .. }) => {
            eprintln!("ersl: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ersl: {e}");
            ExitCode::from(1)
        }
    }
}
