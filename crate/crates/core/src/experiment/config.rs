//! Declarative experiment description, read from TOML.
//!
//! ```toml
//! [grid]
//! points = 64
//! dx = 0.25
//! sin_theta = 0.25
//!
//! [state]
//! kind = "noon"
//! n = 2
//!
//! [experiment]
//! kind = "sample"
//! trials = 100000
//! seed = 7
//! detector = { eta = 1.0, pixel_factor = 1 }
//!
//! [output]
//! directory = "out/noon2"
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossParams;
use crate::sampler::DetectorModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub state: StateConfig,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub dx: f64,
    pub sin_theta: f64,
    /// Largest dense tensor, in amplitudes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_cap: Option<usize>,
}

/// Momentum widths may be given absolutely or as a fraction of `k0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateConfig {
    Noon(NoonConfig),
    GaussianBeam(BeamConfig),
    CorrelatedBiphoton(BiphotonConfig),
    ClassicalProduct(ClassicalConfig),
    /// A state saved in the binary container format.
    File(FileConfig),
    Superposition(SuperpositionConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoonConfig {
    pub n: usize,
    /// Envelope rms width in momentum; defaults to `dk/16`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_env: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub n0: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_k_over_k0: Option<f64>,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiphotonConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_k_over_k0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_kappa_over_k0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    pub n: usize,
    /// Single-photon position variance of the Gaussian profile.
    pub var_x: f64,
    #[serde(default)]
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionConfig {
    /// Real vacuum amplitude `C_0`.
    #[serde(default)]
    pub vacuum: f64,
    pub components: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    pub state: Box<StateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentKind {
    ExactConditional(Empty),
    ExactMarginal(Empty),
    Mphoton(MphotonConfig),
    Sample(SampleConfig),
    Shift(ShiftConfig),
    LossSweep(LossSweepConfig),
    SpectralCheck(SpectralConfig),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MphotonConfig {
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub detector: DetectorModel,
    /// Also write the newline-delimited event log.
    #[serde(default)]
    pub events: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    pub d: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub detector: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSweepConfig {
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub detector: DetectorModel,
    pub losses: Vec<LossParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    /// Relative power threshold for the reported support.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Largest allowed fraction of power beyond `2 N k0 + dk`.
    #[serde(default = "default_rel_tol")]
    pub max_power_beyond: f64,
}

fn default_rel_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_dir(), formats: default_formats() }
    }
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ExactConditional(_) => "exact-conditional",
            ExperimentKind::ExactMarginal(_) => "exact-marginal",
            ExperimentKind::Mphoton(_) => "mphoton",
            ExperimentKind::Sample(_) => "sample",
            ExperimentKind::Shift(_) => "shift",
            ExperimentKind::LossSweep(_) => "loss-sweep",
            ExperimentKind::SpectralCheck(_) => "spectral-check",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentKind::Sample(c) => Some(c.seed),
            ExperimentKind::Shift(c) => Some(c.seed),
            ExperimentKind::LossSweep(c) => Some(c.seed),
            _ => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentKind::Sample(c) => c.seed = seed,
            ExperimentKind::Shift(c) => c.seed = seed,
            ExperimentKind::LossSweep(c) => c.seed = seed,
            _ => {}
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Schema-level checks that do not need the physics.
    pub fn validate(&self) -> Result<()> {
        let trials = match &self.experiment {
            ExperimentKind::Sample(c) => Some(c.trials),
            ExperimentKind::Shift(c) => Some(c.trials),
            ExperimentKind::LossSweep(c) => Some(c.trials),
            _ => None,
        };
        if trials == Some(0) {
            return Err(config_err("experiment.trials must be at least 1"));
        }
        match &self.experiment {
            ExperimentKind::Mphoton(c) if c.order == 0 => return Err(config_err("experiment.order must be at least 1")),
            ExperimentKind::LossSweep(c) if c.losses.is_empty() => {
                return Err(config_err("experiment.losses must list at least one setting"))
            }
            _ => {}
        }
        if self.output.formats.is_empty() {
            return Err(config_err("output.formats must not be empty"));
        }
        validate_state(&self.state, false)
    }
}

fn one_of(name: &str, abs: Option<f64>, rel: Option<f64>) -> Result<()> {
    match (abs, rel) {
        (Some(_), None) | (None, Some(_)) => Ok(()),
        _ => Err(config_err(format!("give exactly one of `{name}` and `{name}_over_k0`"))),
    }
}

fn validate_state(s: &StateConfig, nested: bool) -> Result<()> {
    match s {
        StateConfig::GaussianBeam(b) => one_of("delta_k", b.delta_k, b.delta_k_over_k0),
        StateConfig::CorrelatedBiphoton(b) => {
            one_of("sigma_k", b.sigma_k, b.sigma_k_over_k0)?;
            one_of("sigma_kappa", b.sigma_kappa, b.sigma_kappa_over_k0)
        }
        StateConfig::Superposition(sup) => {
            if nested {
                return Err(config_err("superpositions cannot be nested"));
            }
            if sup.components.is_empty() {
                return Err(config_err("superposition needs at least one component"));
            }
            sup.components.iter().try_for_each(|c| validate_state(&c.state, true))
        }
        _ => Ok(()),
    }
}

/// Resolves an absolute-or-relative width against `k0`.
pub(crate) fn width(abs: Option<f64>, rel: Option<f64>, k0: f64) -> f64 {
    abs.unwrap_or_else(|| rel.unwrap_or(0.0) * k0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOON: &str = r#"
        [grid]
        points = 64
        dx = 0.25
        sin_theta = 0.25

        [state]
        kind = "noon"
        n = 2

        [experiment]
        kind = "sample"
        trials = 10
        seed = 3
        detector = { eta = 0.5 }
    "#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml(NOON).unwrap();
        assert_eq!(cfg.state, StateConfig::Noon(NoonConfig { n: 2, sigma_env: None }));
        match &cfg.experiment {
            ExperimentKind::Sample(s) => {
                assert_eq!(s.detector.eta, 0.5);
                assert_eq!(s.detector.pixel_factor, 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for (from, to) in [
            ("n = 2", "n = 2\ncolour = 1"),
            ("seed = 3", "seed = 3\nworkers = 2"),
            ("detector = { eta = 0.5 }", "detector = { eta = 0.5, gain = 2 }"),
            ("sin_theta = 0.25", "sin_theta = 0.25\nlambda = 1"),
        ] {
            let bad = NOON.replace(from, to);
            assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Config(_))), "{to}");
        }
    }

    #[test]
    fn schema_checks() {
        assert!(ExperimentConfig::from_toml(&NOON.replace("trials = 10", "trials = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&NOON.replace("\"noon\"", "\"squeezed\"")).is_err());
        let beam = NOON.replace("kind = \"noon\"\n        n = 2", "kind = \"gaussian-beam\"\n        n0 = 2");
        assert!(ExperimentConfig::from_toml(&beam).is_err());
        let beam = beam.replace("n0 = 2", "n0 = 2\ndelta_k_over_k0 = 0.2");
        assert!(ExperimentConfig::from_toml(&beam).is_ok());
    }
}
