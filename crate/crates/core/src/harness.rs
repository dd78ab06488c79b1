//! Seeded experiment orchestration: reads an [`ExperimentConfig`], runs the
//! named experiment over `(n, replicate)` rows and writes CSV/JSON outputs plus
//! a [`RunManifest`].
//!
//! Outputs depend only on the config: every row draws its randomness from
//! [`seed_for`] and rows are merged in key order, so reruns and runs with a
//! different thread count produce byte-identical files. Wall-clock data goes to
//! `timing.json`, never into the deterministic outputs.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conductivity::{normalized_energy_curve, write_sweep_csv, SolverConfig};
use crate::generators::{generate_window, ModelKind, RealizationSpec};
use crate::lattice::{cluster, edgelist, event_e_and_f, EventOutcome};
use crate::params::{ModelParams, Validation};
use crate::seeding::seed_for;
use crate::walker::{accumulate_walks, fit_exponent, MsdAccumulator, WalkConfig, WalkError};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "ERSL_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn config_error(pointer: &str, message: impl ToString) -> HarnessError {
    HarnessError::Config {
        pointer: pointer.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ConductivitySweep,
    EventFrequencies,
    #[serde(rename = "edge_density_vs_L")]
    EdgeDensityVsL,
    WalkMsd,
    GenerateOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySettings {
    pub l_values: Vec<u32>,
    /// Probability the smallest reported `L` must reach.
    pub target: f64,
    /// Seeds checked for exact nesting of open-edge sets between consecutive `L`.
    pub nesting_checks: u64,
}

impl Default for DensitySettings {
    fn default() -> Self {
        Self {
            l_values: vec![0, 1, 2, 3],
            target: 0.9,
            nesting_checks: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSettings {
    pub walkers_per_environment: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub fit_t_min: f64,
    pub fit_t_max: f64,
}

impl Default for WalkSettings {
    fn default() -> Self {
        Self {
            walkers_per_environment: 1000,
            t_min: 1.0,
            t_max: 1000.0,
            points: 16,
            fit_t_min: 10.0,
            fit_t_max: 1000.0,
        }
    }
}

impl WalkSettings {
    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig::geometric(self.walkers_per_environment, self.t_min, self.t_max, self.points)
    }
}

fn default_model() -> ModelKind {
    ModelKind::Ersl
}

fn default_replicates() -> u64 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub params: ModelParams,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub seed_base: u64,
    /// Replicates per window size; environments for `walk_msd`.
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Accept `q >= p` (non-percolating regimes).
    #[serde(default)]
    pub allow_q_above_p: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub walk: WalkSettings,
    #[serde(default)]
    pub density: DensitySettings,
}

impl ExperimentConfig {
    pub fn validation(&self) -> Validation {
        if self.allow_q_above_p {
            Validation::AllowQAboveP
        } else {
            Validation::Strict
        }
    }

    pub fn template(&self) -> RealizationSpec {
        RealizationSpec::new(self.params, 1, self.seed_base, self.model).with_validation(self.validation())
    }

    /// Checks the constraints serde cannot express.
    pub fn check(&self) -> Result<(), HarnessError> {
        if self.replicates == 0 {
            return Err(config_error("/replicates", "must be at least 1"));
        }
        if self.n_list.is_empty() {
            return Err(config_error("/n_list", "must not be empty"));
        }
        if let Some(i) = self.n_list.iter().position(|&n| n == 0) {
            return Err(config_error(&format!("/n_list/{i}"), "window size must be at least 1"));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(config_error("/n_list", "must be strictly ascending"));
        }
        if self.model.has_layers() || self.experiment == ExperimentKind::EdgeDensityVsL {
            self.params
                .validate_with(self.validation())
                .map_err(|e| config_error("/params", e))?;
        }
        match self.experiment {
            ExperimentKind::EventFrequencies if !self.model.has_layers() => {
                Err(config_error("/model", "event frequencies need a layered model"))
            }
            ExperimentKind::EdgeDensityVsL if self.model != ModelKind::Ersl => {
                Err(config_error("/model", "edge density sweeps run on the ersl model"))
            }
            ExperimentKind::WalkMsd => {
                let w = &self.walk;
                if w.walkers_per_environment == 0 || w.points < 2 || !(w.t_min > 0.0 && w.t_max > w.t_min) {
                    return Err(config_error("/walk", "need walkers >= 1, points >= 2, 0 < t_min < t_max"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form, with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Parses a config document; errors carry a JSON pointer to the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut pointer = String::new();
        for segment in e.path().iter() {
            match segment {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
                Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
                Segment::Unknown => pointer.push_str("/?"),
            }
        }
        if pointer.is_empty() {
            pointer.push('/');
        }
        config_error(&pointer, e.into_inner())
    })?;
    config.check()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowSeed {
    pub n: u64,
    pub replicate: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowFailure {
    pub n: u64,
    pub replicate: u64,
    pub seed: u64,
    pub error: String,
}

/// Deterministic record of a run: what ran, with which seeds, what failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub artifact_version: String,
    pub experiment: ExperimentKind,
    pub seed_base: u64,
    pub rows: Vec<RowSeed>,
    pub failures: Vec<RowFailure>,
    /// Walk environments skipped because the start vertex was isolated.
    pub skipped: Vec<RowSeed>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

#[derive(Debug, Serialize)]
struct Timing {
    started_unix: u64,
    wall_seconds: f64,
    threads: usize,
}

/// Parallelism cap from `ERSL_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&k: &usize| k > 0)
}

/// Runs `config` on a dedicated pool with `threads` workers (all cores when `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunManifest, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| io::Error::other(e.to_string()))?;
    pool.install(|| run(config))
}

/// Runs the configured experiment on the current rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, HarnessError> {
    config.check()?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    fs::create_dir_all(&config.output_dir)?;
    let mut manifest = RunManifest {
        config_hash: config.hash(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        experiment: config.experiment,
        seed_base: config.seed_base,
        rows: Vec::new(),
        failures: Vec::new(),
        skipped: Vec::new(),
        outputs: Vec::new(),
    };
    match config.experiment {
        ExperimentKind::GenerateOnly => generate_only(config, &mut manifest)?,
        ExperimentKind::ConductivitySweep => conductivity_sweep(config, &mut manifest)?,
        ExperimentKind::EventFrequencies => event_frequencies(config, &mut manifest)?,
        ExperimentKind::EdgeDensityVsL => edge_density(config, &mut manifest)?,
        ExperimentKind::WalkMsd => walk_msd(config, &mut manifest)?,
    }
    write_json(&config.output_dir.join("manifest.json"), &manifest)?;
    write_json(
        &config.output_dir.join("timing.json"),
        &Timing {
            started_unix,
            wall_seconds: started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        },
    )?;
    Ok(manifest)
}

fn create(config: &ExperimentConfig, manifest: &mut RunManifest, name: &str) -> io::Result<BufWriter<File>> {
    manifest.outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(config.output_dir.join(name))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::other)?;
    writeln!(out)?;
    out.flush()
}

fn rows(config: &ExperimentConfig, role: &str) -> Vec<RowSeed> {
    config
        .n_list
        .iter()
        .flat_map(|&n| {
            (0..config.replicates).map(move |replicate| RowSeed {
                n,
                replicate,
                seed: seed_for(config.seed_base, replicate, n, role),
            })
        })
        .collect()
}

/// Edge-list and cluster-label bytes for one realization.
type RenderedRow = (Vec<u8>, Vec<u8>);

fn generate_only(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let template = config.template();
    let jobs = rows(config, "generate");
    let results: Vec<Result<RenderedRow, String>> = jobs
        .par_iter()
        .map(|row| {
            let grid = generate_window(&template.with_n(row.n).with_seed(row.seed)).map_err(|e| e.to_string())?;
            let mut edges = Vec::new();
            edgelist::write_edge_list(&grid, &mut edges).map_err(|e| e.to_string())?;
            let mut clusters = Vec::new();
            cluster(&grid)
                .write_csv(grid.n(), &mut clusters)
                .map_err(|e| e.to_string())?;
            Ok((edges, clusters))
        })
        .collect();
    for (row, result) in jobs.into_iter().zip(results) {
        match result {
            Ok((edges, clusters)) => {
                create(config, manifest, &format!("edges_n{}_r{}.txt", row.n, row.replicate))?.write_all(&edges)?;
                create(config, manifest, &format!("clusters_n{}_r{}.csv", row.n, row.replicate))?
                    .write_all(&clusters)?;
            }
            Err(error) => manifest.failures.push(failure(&row, error)),
        }
        manifest.rows.push(row);
    }
    Ok(())
}

fn failure(row: &RowSeed, error: String) -> RowFailure {
    RowFailure {
        n: row.n,
        replicate: row.replicate,
        seed: row.seed,
        error,
    }
}

fn conductivity_sweep(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let records = normalized_energy_curve(
        &config.template(),
        &config.n_list,
        config.seed_base,
        config.replicates,
        &config.solver,
    );
    for r in &records {
        let row = RowSeed {
            n: r.n,
            replicate: r.replicate,
            seed: r.seed,
        };
        if let Err(e) = &r.outcome {
            manifest.failures.push(failure(&row, e.clone()));
        }
        manifest.rows.push(row);
    }
    let mut out = create(config, manifest, "conductivity.csv")?;
    write_sweep_csv(&records, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Per-window-size frequencies of the bad-layer event `E` and of `E ∩ F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventSummary {
    pub n: u64,
    pub replicates: u64,
    pub freq_e: f64,
    pub se_e: f64,
    pub freq_ef: f64,
    pub se_ef: f64,
    /// `P(E ∩ F) / P(E)`; NaN when `E` never occurred.
    pub freq_f_given_e: f64,
    /// `1 - 1/(p^{ℓ_n} n)`, the Chebyshev floor for `P(F | E)`.
    pub chebyshev_floor: f64,
    pub ell_n: f64,
}

pub const EVENTS_HEADER: &str = "n,replicates,freq_E,se_E,freq_EF,se_EF,freq_F_given_E,chebyshev_floor,ell_n";
pub const EVENT_ROWS_HEADER: &str = "n,replicate,seed,E_event,F_event,badness,layer_width,column_open,distinct_rows_open,ell_n,f_bound";

fn binomial_se(freq: f64, reps: u64) -> f64 {
    if reps > 1 {
        (freq * (1.0 - freq) / (reps - 1) as f64).sqrt()
    } else {
        0.0
    }
}

pub type EventRow = (RowSeed, Result<EventOutcome, String>);

/// Evaluates the two events for every `(n, replicate)` and summarizes by `n`.
pub fn event_summaries(
    template: &RealizationSpec,
    n_list: &[u64],
    seed_base: u64,
    replicates: u64,
) -> Result<(Vec<EventSummary>, Vec<EventRow>), HarnessError> {
    let derived = template
        .params
        .validate_with(template.validation)
        .map_err(|e| config_error("/params", e))?;
    let jobs: Vec<RowSeed> = n_list
        .iter()
        .flat_map(|&n| {
            (0..replicates).map(move |replicate| RowSeed {
                n,
                replicate,
                seed: seed_for(seed_base, replicate, n, "events"),
            })
        })
        .collect();
    let outcomes: Vec<Result<EventOutcome, String>> = jobs
        .par_iter()
        .map(|row| {
            let grid = generate_window(&template.with_n(row.n).with_seed(row.seed)).map_err(|e| e.to_string())?;
            event_e_and_f(&grid, &template.params, &derived).map_err(|e| e.to_string())
        })
        .collect();
    let rows: Vec<_> = jobs.into_iter().zip(outcomes).collect();
    let summaries = n_list
        .iter()
        .map(|&n| {
            let ok: Vec<_> = rows
                .iter()
                .filter(|(r, _)| r.n == n)
                .filter_map(|(_, o)| o.as_ref().ok())
                .collect();
            let reps = ok.len() as u64;
            let e = ok.iter().filter(|o| o.e).count() as f64;
            let ef = ok.iter().filter(|o| o.e && o.f).count() as f64;
            let freq_e = e / reps.max(1) as f64;
            let freq_ef = ef / reps.max(1) as f64;
            let ell_n = derived.threshold_badness(n);
            EventSummary {
                n,
                replicates: reps,
                freq_e,
                se_e: binomial_se(freq_e, reps),
                freq_ef,
                se_ef: binomial_se(freq_ef, reps),
                freq_f_given_e: if e > 0.0 { ef / e } else { f64::NAN },
                chebyshev_floor: 1.0 - 1.0 / (template.params.p.powf(ell_n) * n as f64),
                ell_n,
            }
        })
        .collect();
    Ok((summaries, rows))
}

fn event_frequencies(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let (summaries, rows) = event_summaries(&config.template(), &config.n_list, config.seed_base, config.replicates)?;
    let mut out = create(config, manifest, "events_rows.csv")?;
    writeln!(out, "{EVENT_ROWS_HEADER}")?;
    for (row, outcome) in rows {
        match outcome {
            Ok(o) => {
                let opt = |v: Option<String>| v.unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    row.n,
                    row.replicate,
                    row.seed,
                    o.e,
                    o.f,
                    opt(o.hit.map(|h| h.badness.to_string())),
                    opt(o.hit.map(|h| h.width.to_string())),
                    opt(o.count.map(|c| c.open.to_string())),
                    opt(o.count.map(|c| c.distinct_rows_open.to_string())),
                    o.threshold,
                    o.f_bound
                )?;
            }
            Err(e) => manifest.failures.push(failure(&row, e)),
        }
        manifest.rows.push(row);
    }
    out.flush()?;
    let mut out = create(config, manifest, "events.csv")?;
    writeln!(out, "{EVENTS_HEADER}")?;
    for s in &summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.n, s.replicates, s.freq_e, s.se_e, s.freq_ef, s.se_ef, s.freq_f_given_e, s.chebyshev_floor, s.ell_n
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Annealed open probability of the centre edge for one cutoff `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint {
    pub fill_cutoff: u32,
    pub estimate: f64,
    pub se: f64,
    /// Open edges at this `L` contain those at the previous tested `L` on every checked seed.
    pub nested: bool,
}

pub fn density_curve(
    template: &RealizationSpec,
    l_values: &[u32],
    reps: u64,
    seed_base: u64,
    nesting_checks: u64,
) -> Result<Vec<DensityPoint>, crate::generators::GenerationError> {
    let mut out: Vec<DensityPoint> = Vec::with_capacity(l_values.len());
    for (k, &l) in l_values.iter().enumerate() {
        let spec = RealizationSpec {
            params: template.params.with_fill_cutoff(l),
            ..*template
        };
        let (estimate, se) = crate::generators::annealed_edge_open_probability(&spec, reps, seed_base)?;
        let nested = if k == 0 {
            true
        } else {
            let previous = RealizationSpec {
                params: template.params.with_fill_cutoff(l_values[k - 1]),
                ..*template
            };
            (0..nesting_checks).try_fold(true, |acc, i| {
                let seed = seed_for(seed_base, i, template.n, "nesting");
                let hi = generate_window(&spec.with_seed(seed))?;
                let lo = generate_window(&previous.with_seed(seed))?;
                Ok::<_, crate::generators::GenerationError>(acc && hi.contains(&lo))
            })?
        };
        out.push(DensityPoint {
            fill_cutoff: l,
            estimate,
            se,
            nested,
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct DensitySummary {
    target: f64,
    smallest_l_reaching_target: Option<u32>,
    n_probe: u64,
    replicates: u64,
}

fn edge_density(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let settings = &config.density;
    let mut out = create(config, manifest, "density.csv")?;
    writeln!(out, "n_probe,L,reps,estimate,se,nested")?;
    let mut summaries = Vec::new();
    for &n in &config.n_list {
        let row = RowSeed {
            n,
            replicate: 0,
            seed: config.seed_base,
        };
        match density_curve(
            &config.template().with_n(n),
            &settings.l_values,
            config.replicates,
            config.seed_base,
            settings.nesting_checks,
        ) {
            Ok(points) => {
                for p in &points {
                    writeln!(out, "{},{},{},{},{},{}", n, p.fill_cutoff, config.replicates, p.estimate, p.se, p.nested)?;
                }
                summaries.push(DensitySummary {
                    target: settings.target,
                    smallest_l_reaching_target: points
                        .iter()
                        .find(|p| p.estimate >= settings.target)
                        .map(|p| p.fill_cutoff),
                    n_probe: n,
                    replicates: config.replicates,
                });
            }
            Err(e) => manifest.failures.push(failure(&row, e.to_string())),
        }
        manifest.rows.push(row);
    }
    out.flush()?;
    manifest.outputs.push("density_summary.json".into());
    write_json(&config.output_dir.join("density_summary.json"), &summaries)?;
    Ok(())
}

/// Pools walkers over `environments` independent realizations.
///
/// Environments whose start vertex is isolated are skipped and returned
/// separately; other errors abort.
pub fn pooled_msd(
    template: &RealizationSpec,
    n: u64,
    environments: u64,
    seed_base: u64,
    walk: &WalkConfig,
) -> Result<(crate::walker::MsdCurve, Vec<RowSeed>, Vec<RowSeed>), String> {
    let mut acc = MsdAccumulator::new(&walk.sample_times);
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for e in 0..environments {
        let row = RowSeed {
            n,
            replicate: e,
            seed: seed_for(seed_base, e, n, "environment"),
        };
        let grid = generate_window(&template.with_n(n).with_seed(row.seed)).map_err(|e| e.to_string())?;
        match accumulate_walks(&grid, walk, seed_for(seed_base, e, n, "walkers"), &mut acc) {
            Ok(()) => used.push(row),
            Err(WalkError::IsolatedStart(..)) => skipped.push(row),
            Err(other) => return Err(other.to_string()),
        }
    }
    Ok((acc.finish(), used, skipped))
}

fn walk_msd(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), HarnessError> {
    let walk = config.walk.walk_config();
    for &n in &config.n_list {
        match pooled_msd(&config.template(), n, config.replicates, config.seed_base, &walk) {
            Ok((curve, used, skipped)) => {
                let mut out = create(config, manifest, &format!("msd_n{n}.csv"))?;
                curve.write_csv(&mut out)?;
                out.flush()?;
                let fit = fit_exponent(&curve, config.walk.fit_t_min, config.walk.fit_t_max);
                let summary = match fit {
                    Ok(f) => serde_json::json!({
                        "slope": f.slope,
                        "slope_se": f.slope_se,
                        "fit_t_min": f.fit_t_min,
                        "fit_t_max": f.fit_t_max,
                        "walkers": curve.walkers,
                    }),
                    Err(e) => {
                        manifest.failures.push(failure(
                            &RowSeed {
                                n,
                                replicate: 0,
                                seed: config.seed_base,
                            },
                            e.to_string(),
                        ));
                        serde_json::json!({ "error": e.to_string(), "walkers": curve.walkers })
                    }
                };
                let name = format!("fit_n{n}.json");
                manifest.outputs.push(name.clone());
                write_json(&config.output_dir.join(name), &summary)?;
                manifest.rows.extend(used);
                manifest.skipped.extend(skipped);
            }
            Err(error) => manifest.failures.push(failure(
                &RowSeed {
                    n,
                    replicate: 0,
                    seed: config.seed_base,
                },
                error,
            )),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"experiment":"generate_only","params":{"p":0.65,"q":0.3,"sigma":0.25,"L":2},"model":{"kind":"full"},"n_list":[4]}"#;

    #[test]
    fn parses_minimal_config() {
        let c = parse_config(BASE).unwrap();
        assert_eq!(c.replicates, 1);
        assert_eq!(c.model, ModelKind::Full);
        assert_eq!(c.solver, SolverConfig::default());
    }

    #[test]
    fn errors_point_at_offending_key() {
        let text = BASE.replace(r#""q":0.3"#, r#""q":0.3,"r":1"#);
        match parse_config(&text) {
            Err(HarnessError::Config { pointer, .. }) => assert_eq!(pointer, "/params/r"),
            other => panic!("{other:?}"),
        }
        let text = BASE.replace(r#""L":2"#, r#""L":2.5"#);
        match parse_config(&text) {
            Err(HarnessError::Config { pointer, .. }) => assert_eq!(pointer, "/params/L"),
            other => panic!("{other:?}"),
        }
        let text = BASE.replace("[4]", "[8,4]");
        match parse_config(&text) {
            Err(HarnessError::Config { pointer, .. }) => assert_eq!(pointer, "/n_list"),
            other => panic!("{other:?}"),
        }
        let text = BASE.replace("[4]", "[4, 1.5]");
        match parse_config(&text) {
            Err(HarnessError::Config { pointer, .. }) => assert_eq!(pointer, "/n_list/1"),
            other => panic!("{other:?}"),
        }
        let text = BASE.replace(r#"{"kind":"full"}"#, r#"{"kind":"ersl"}"#).replace("0.3", "0.7");
        match parse_config(&text) {
            Err(HarnessError::Config { pointer, message }) => {
                assert_eq!(pointer, "/params");
                assert!(message.contains("q < p"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = parse_config(BASE).unwrap();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed_base = 9;
        assert_ne!(a.hash(), b.hash());
    }
}
