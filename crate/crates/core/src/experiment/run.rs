use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{width, ExperimentConfig, ExperimentKind, Format, StateConfig};
use crate::error::{Error, ErrorKind, Result};
use crate::lattice::container::{load_state, Stored};
use crate::lattice::Grid;
use crate::loss::{loss_sweep, sweep_csv};
use crate::measurement::{
    conditional_centroid_of, fringe_metrics, marginal_centroid, marginal_superposition, mphoton_absorption,
    spectral_power_beyond, spectral_support, spectrum, Distribution,
};
use crate::sampler::{run_histogram_logged, shift_experiment, CentroidHistogram, DetectorModel, Source};
use crate::states::{
    classical_product, correlated_biphoton, default_noon_envelope, gaussian_beam, gaussian_profile, noon_state,
    superpose_photon_numbers, GaussianBeamSpec, PhotonSuperposition, State,
};

/// Command-line overrides and the directory that relative state paths
/// resolve against.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub base_dir: Option<PathBuf>,
}

/// What a run wrote.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// Result file names with their SHA-256, manifest excluded.
    pub files: BTreeMap<String, String>,
    pub summary: Value,
    pub warnings: Vec<String>,
}

/// A state built from config: fixed photon number or a superposition.
#[derive(Debug, Clone)]
pub enum BuiltState {
    Fixed(State),
    Superposition(PhotonSuperposition),
}

impl BuiltState {
    pub fn max_photons(&self) -> usize {
        match self {
            BuiltState::Fixed(s) => s.photons(),
            BuiltState::Superposition(s) => s.components().iter().map(|c| c.1.photons()).max().unwrap_or(0),
        }
    }

    pub fn as_superposition(&self) -> Result<PhotonSuperposition> {
        match self {
            BuiltState::Fixed(s) => PhotonSuperposition::single(s.clone()),
            BuiltState::Superposition(s) => Ok(s.clone()),
        }
    }

    fn fixed(&self, what: &str) -> Result<&State> {
        match self {
            BuiltState::Fixed(s) => Ok(s),
            BuiltState::Superposition(_) => {
                Err(Error::Config(format!("{what} needs a fixed photon-number state, not a superposition")))
            }
        }
    }
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Grid> {
    let g = Grid::new(cfg.grid.points, cfg.grid.dx, cfg.grid.sin_theta)?;
    Ok(match cfg.grid.amplitude_cap {
        Some(cap) => g.with_amplitude_cap(cap),
        None => g,
    })
}

fn note_discarded(warnings: &mut Vec<String>, what: &str, discarded: f64) {
    if discarded > 1e-12 {
        warnings.push(format!("{what}: band projection discarded {discarded:.3e} of the power"));
    }
}

fn build_fixed(s: &StateConfig, grid: &Grid, base: &Path, warnings: &mut Vec<String>) -> Result<State> {
    let k0 = grid.k0();
    Ok(match s {
        StateConfig::Noon(c) => {
            let sigma = c.sigma_env.unwrap_or_else(|| default_noon_envelope(grid));
            let p = noon_state(c.n, grid, sigma)?;
            note_discarded(warnings, "noon", p.discarded_power);
            State::LowRank(p.state)
        }
        StateConfig::GaussianBeam(c) => {
            let spec = GaussianBeamSpec::new(c.n0, width(c.delta_k, c.delta_k_over_k0, k0), c.rho)?;
            let b = gaussian_beam(&spec, grid)?;
            note_discarded(warnings, "gaussian-beam", b.discarded_power);
            State::Dense(b.state)
        }
        StateConfig::CorrelatedBiphoton(c) => {
            let b = correlated_biphoton(
                grid,
                width(c.sigma_k, c.sigma_k_over_k0, k0),
                width(c.sigma_kappa, c.sigma_kappa_over_k0, k0),
            )?;
            note_discarded(warnings, "correlated-biphoton", b.discarded_power);
            State::Dense(b.state)
        }
        StateConfig::ClassicalProduct(c) => {
            let prof = gaussian_profile(grid, c.var_x, c.center)?;
            note_discarded(warnings, "classical-product", prof.discarded_power);
            State::LowRank(classical_product(c.n, grid, &prof.state)?)
        }
        StateConfig::File(f) => {
            let path = if f.path.is_absolute() { f.path.clone() } else { base.join(&f.path) };
            let state = match load_state(&path, grid.amplitude_cap())? {
                Stored::Tensor(t) => State::Dense(t),
                Stored::Product(p) => State::LowRank(p),
            };
            if !state.grid().same_lattice(grid) {
                return Err(Error::Mismatch(format!("{} was saved on a different grid", path.display())));
            }
            state
        }
        StateConfig::Superposition(_) => return Err(Error::Config("superpositions cannot be nested".into())),
    })
}

pub fn build_state(cfg: &ExperimentConfig, base: &Path, warnings: &mut Vec<String>) -> Result<BuiltState> {
    let grid = build_grid(cfg)?;
    match &cfg.state {
        StateConfig::Superposition(sup) => {
            let components = sup
                .components
                .iter()
                .map(|c| Ok((C64::from_polar(c.amplitude, c.phase), build_fixed(&c.state, &grid, base, warnings)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(BuiltState::Superposition(superpose_photon_numbers(C64::new(sup.vacuum, 0.0), components)?))
        }
        other => Ok(BuiltState::Fixed(build_fixed(other, &grid, base, warnings)?)),
    }
}

/// Result files of one experiment, in write order.
type Outputs = Vec<(String, String)>;

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn distribution_summary(d: &Distribution) -> Value {
    json!({
        "bins": d.len(),
        "spacing": d.spacing,
        "offset": d.offset,
        "mean": d.mean(),
        "variance": d.variance(),
        "fringe": fringe_metrics(d).ok(),
    })
}

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn histogram_outputs(h: &CentroidHistogram, outputs: &mut Outputs) {
    outputs.push(("histogram.csv".into(), h.to_csv()));
    outputs.push(("histogram_by_m.csv".into(), h.to_stratified_csv()));
}

fn expected_discard(built: &BuiltState, det: &DetectorModel) -> Result<f64> {
    let sup = built.as_superposition()?;
    Ok(sup.vacuum_probability()
        + sup
            .components()
            .iter()
            .map(|(c, s)| c.norm_sqr() * (1.0 - det.eta).powi(s.photons() as i32))
            .sum::<f64>())
}

fn sample_summary(h: &CentroidHistogram, seed: u64, expected: f64) -> Result<Value> {
    let pooled = h.statistics(seed)?;
    let strata: Vec<Value> = h
        .strata
        .keys()
        .filter(|&&m| h.stratum_count(m) >= 2)
        .map(|&m| {
            let s = h.stratum_statistics(m, seed)?;
            Ok(json!({"m": m, "count": h.stratum_count(m), "stats": s}))
        })
        .collect::<Result<_>>()?;
    let trials = h.trials as f64;
    Ok(json!({
        "trials": h.trials,
        "discarded": h.discarded,
        "rejected": h.rejected,
        "saturated": h.saturated,
        "discarded_fraction": h.discarded as f64 / trials,
        "expected_discarded_fraction": expected,
        "discarded_fraction_sigma": (expected * (1.0 - expected) / trials).sqrt(),
        "pooled": pooled,
        "strata": strata,
    }))
}

fn execute(cfg: &ExperimentConfig, built: &BuiltState, warnings: &mut Vec<String>) -> Result<(Value, Outputs)> {
    let mut outputs: Outputs = Vec::new();
    let grid = build_grid(cfg)?;
    let summary = match &cfg.experiment {
        ExperimentKind::ExactMarginal(_) => {
            let d = match built {
                BuiltState::Fixed(s) => marginal_centroid(s)?,
                BuiltState::Superposition(s) => marginal_superposition(s)?,
            };
            outputs.push(("marginal.csv".into(), d.to_csv(&meta(&[("distribution", "marginal".into())]))));
            json!({"photons": built.max_photons(), "marginal": distribution_summary(&d)})
        }
        ExperimentKind::ExactConditional(_) => {
            let d = conditional_centroid_of(built.fixed("exact-conditional")?)?;
            outputs.push(("conditional.csv".into(), d.to_csv(&meta(&[("distribution", "conditional".into())]))));
            json!({"photons": built.max_photons(), "conditional": distribution_summary(&d)})
        }
        ExperimentKind::Mphoton(c) => {
            let d = mphoton_absorption(&built.as_superposition()?, c.order)?;
            let m = meta(&[("distribution", "absorption".into()), ("order", c.order.to_string())]);
            outputs.push(("absorption.csv".into(), d.to_csv(&m)));
            json!({"order": c.order, "absorption": distribution_summary(&d)})
        }
        ExperimentKind::Sample(c) => {
            warnings.extend(c.detector.warnings(&grid));
            let source = match built {
                BuiltState::Fixed(s) => Source::new(s)?,
                BuiltState::Superposition(s) => Source::superposition(s)?,
            };
            let run = run_histogram_logged(&source, &c.detector, c.trials, c.seed, c.events)?;
            let h = &run.histogram;
            histogram_outputs(h, &mut outputs);
            let n = built.max_photons() as u32;
            if h.stratum_count(n) > 0 {
                let d = h.stratum(n)?;
                let m = meta(&[("distribution", "sampled".into()), ("m", n.to_string())]);
                outputs.push(("sampled.csv".into(), d.to_csv(&m)));
            }
            if let Some(ev) = run.events {
                outputs.push(("events.ndjson".into(), ev));
            }
            sample_summary(h, c.seed, expected_discard(built, &c.detector)?)?
        }
        ExperimentKind::Shift(c) => {
            warnings.extend(c.detector.warnings(&grid));
            let state = built.fixed("shift")?;
            let r = shift_experiment(state, c.d, &c.detector, c.trials, c.seed)?;
            histogram_outputs(&r.histogram, &mut outputs);
            let exact = marginal_centroid(&state.clone().translate(c.d))?;
            json!({
                "d": c.d,
                "d_hat": r.estimate.mean,
                "estimate": r.estimate,
                "trials": r.histogram.trials,
                "discarded": r.histogram.discarded,
                "lossless_exact_mean": exact.mean(),
                "lossless_exact_variance": exact.variance(),
            })
        }
        ExperimentKind::LossSweep(c) => {
            warnings.extend(c.detector.warnings(&grid));
            let (reference, rows) = loss_sweep(built.fixed("loss-sweep")?, &c.detector, &c.losses, c.trials, c.seed)?;
            outputs.push(("loss_sweep.csv".into(), sweep_csv(&rows)));
            json!({"reference": reference, "rows": rows})
        }
        ExperimentKind::SpectralCheck(c) => {
            let d = match built {
                BuiltState::Fixed(s) => marginal_centroid(s)?,
                BuiltState::Superposition(s) => marginal_superposition(s)?,
            };
            let n = built.max_photons() as f64;
            let bound = 2.0 * n * grid.k0() + grid.dk();
            let beyond = spectral_power_beyond(&d, bound);
            let mut csv = String::from("omega,power\n");
            let mut spec = spectrum(&d);
            spec.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (w, p) in spec {
                csv.push_str(&format!("{w:.16e},{p:.16e}\n"));
            }
            outputs.push(("spectrum.csv".into(), csv));
            json!({
                "photons": built.max_photons(),
                "bound": bound,
                "support": spectral_support(&d, c.rel_tol),
                "power_beyond_bound": beyond,
                "max_power_beyond": c.max_power_beyond,
                "within_bound": beyond <= c.max_power_beyond,
                "fringe": fringe_metrics(&d).ok(),
                "de_broglie_period": PI / (n * grid.k0()),
            })
        }
    };
    Ok((summary, outputs))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs a parsed config and writes the result files plus `manifest.json`.
pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.experiment.set_seed(seed);
    }
    if let Some(dir) = &opts.out_dir {
        cfg.output.directory = dir.clone();
    }
    cfg.validate()?;
    let base = opts.base_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut warnings = Vec::new();
    let built = build_state(&cfg, &base, &mut warnings)?;
    let (summary, mut outputs) = execute(&cfg, &built, &mut warnings)?;
    let formats = &cfg.output.formats;
    outputs.retain(|(name, _)| !name.ends_with(".csv") || formats.contains(&Format::Csv));
    if formats.contains(&Format::Json) {
        outputs.push(("summary.json".into(), to_json(&summary)));
    }
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir)?;
    let mut files = BTreeMap::new();
    for (name, content) in &outputs {
        fs::write(dir.join(name), content)?;
        files.insert(name.clone(), sha256_hex(content.as_bytes()));
    }
    let manifest = json!({
        "artifact": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "seed": cfg.experiment.seed(),
        "config": serde_json::to_value(&cfg).map_err(|e| Error::Config(e.to_string()))?,
        "files": files,
        "warnings": warnings,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    fs::write(dir.join("manifest.json"), to_json(&manifest))?;
    Ok(RunReport { out_dir: dir, files, summary, warnings })
}

/// Reads a TOML config and runs it; relative paths in the config resolve
/// against the config's directory.
pub fn run(path: impl AsRef<Path>, opts: &RunOptions) -> Result<RunReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let mut opts = opts.clone();
    if opts.base_dir.is_none() {
        opts.base_dir = Some(path.parent().map(Path::to_path_buf).unwrap_or_default());
    }
    run_config(&cfg, &opts)
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Schema => 2,
        ErrorKind::Physics => 3,
        ErrorKind::Resource => 4,
        ErrorKind::Io => 1,
    }
}

/// One-line machine-readable error report.
pub fn error_report(e: &Error) -> String {
    let kind = match e.kind() {
        ErrorKind::Schema => "schema",
        ErrorKind::Physics => "physics",
        ErrorKind::Resource => "resource",
        ErrorKind::Io => "io",
    };
    json!({"error": {"kind": kind, "exit_code": exit_code(e), "message": e.to_string()}}).to_string()
}
