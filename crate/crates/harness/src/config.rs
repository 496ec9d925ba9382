//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use lsw_core::lsw_pde::{Closure, InitialProfile, KineticRegime, PdeConfig, RadiusGrid};
use lsw_core::monopole::LatticeConfig;
use lsw_core::particle_sim::{IntegratorConfig, OutputSchedule};
use lsw_core::sampling::RadiusDistribution;
use lsw_core::ScaleParameters;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scale: ScaleSection,
    pub initial: InitialSection,
    pub horizon: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub pde: PdeSection,
    #[serde(default)]
    pub survey: SurveySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSection {
    pub delta: f64,
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Integrate with `delta^alpha = 0` (the limit growth law) while keeping
    /// the lattice of spacing `delta`.
    #[serde(default)]
    pub zero_drag: bool,
    /// Permit `alpha <= 3/2 + epsilon`.
    #[serde(default)]
    pub diagnostics_only: bool,
}

fn default_epsilon() -> f64 {
    lsw_core::DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub radii: RadiusDistribution,
    #[serde(default)]
    pub seed: u64,
    /// Lattice displacement as a fraction of `delta`.
    #[serde(default)]
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Snapshot interval; zero means twenty snapshots over the horizon.
    pub cadence: f64,
    pub extra_times: Vec<f64>,
    pub formats: Vec<String>,
    /// Write the per-snapshot radii / density profile files.
    pub profiles: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            cadence: 0.0,
            extra_times: Vec::new(),
            formats: vec!["csv".into()],
            profiles: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PdeInitial {
    /// Normalized histogram of the particle initial radii.
    Histogram,
    Uniform {
        low: f64,
        high: f64,
    },
    Bump {
        low: f64,
        high: f64,
    },
    Gaussian {
        mean: f64,
        sd: f64,
        low: f64,
        high: f64,
    },
    /// Explicit cell values.
    Cells {
        values: Vec<f64>,
    },
}

impl PdeInitial {
    pub fn profile(&self) -> Option<InitialProfile> {
        match *self {
            Self::Uniform { low, high } => Some(InitialProfile::Uniform { low, high }),
            Self::Bump { low, high } => Some(InitialProfile::Bump { low, high }),
            Self::Gaussian {
                mean,
                sd,
                low,
                high,
            } => Some(InitialProfile::Gaussian {
                mean,
                sd,
                low,
                high,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeSection {
    pub regime: KineticRegime,
    /// Defaults to `1e-3 r_max`.
    pub r_min: Option<f64>,
    pub r_max: f64,
    pub cells: usize,
    pub cfl: f64,
    pub frozen_u_bar: Option<f64>,
    pub initial: PdeInitial,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            regime: KineticRegime::Reaction,
            r_min: None,
            r_max: 4.0,
            cells: 400,
            cfl: 0.9,
            frozen_u_bar: None,
            initial: PdeInitial::Histogram,
        }
    }
}

impl PdeSection {
    pub fn grid(&self) -> Result<RadiusGrid, HarnessError> {
        let r_min = self.r_min.unwrap_or(1e-3 * self.r_max);
        RadiusGrid::new(r_min, self.r_max, self.cells).map_err(|e| HarnessError::config("pde", e))
    }

    pub fn solver(&self) -> PdeConfig {
        PdeConfig {
            cfl: self.cfl,
            closure: match self.frozen_u_bar {
                Some(u) => Closure::Frozen(u),
                None => Closure::SelfConsistent,
            },
            ..PdeConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveySection {
    pub samples: usize,
    pub seed: u64,
    /// Particles whose boundary defect is evaluated (even stride).
    pub defect_particles: usize,
}

impl Default for SurveySection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            defect_particles: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub deltas: Vec<f64>,
    /// Defaults to the initial seed.
    pub seeds: Vec<u64>,
    /// Times at which W1 is reported; snapshots are forced there.
    pub checkpoints: Vec<f64>,
    /// Radius windows `[lo, hi]` of the weak-form test functions.
    pub test_windows: Vec<[f64; 2]>,
    /// Zero selects the number of CPUs.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            deltas: Vec::new(),
            seeds: Vec::new(),
            checkpoints: Vec::new(),
            test_windows: vec![[0.3, 1.2], [0.6, 1.6], [0.9, 2.0]],
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without validating, for callers that apply overrides first.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let cfg = Self::read(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scale()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(HarnessError::config("horizon", "must be positive"));
        }
        self.initial
            .radii
            .validate()
            .map_err(|e| HarnessError::config("initial.radii", e))?;
        if !(0.0..0.5).contains(&self.initial.jitter) {
            return Err(HarnessError::config(
                "initial.jitter",
                "must lie in [0, 1/2)",
            ));
        }
        self.integrator
            .validate(1)
            .map_err(|e| HarnessError::config("integrator", e))?;
        if !(self.output.cadence >= 0.0) {
            return Err(HarnessError::config(
                "output.cadence",
                "must be nonnegative",
            ));
        }
        if let Some(f) = self.output.formats.iter().find(|f| f.as_str() != "csv") {
            return Err(HarnessError::config(
                "output.formats",
                format!("unsupported format {f:?}"),
            ));
        }
        self.pde.grid()?;
        if !(self.pde.cfl > 0.0 && self.pde.cfl <= 1.0) {
            return Err(HarnessError::config("pde.cfl", "must lie in (0, 1]"));
        }
        if self.survey.samples == 0 {
            return Err(HarnessError::config("survey.samples", "must be positive"));
        }
        for w in &self.sweep.test_windows {
            if !(w[0] > 0.0 && w[1] > w[0]) {
                return Err(HarnessError::config(
                    "sweep.test_windows",
                    format!("bad window {w:?}"),
                ));
            }
        }
        for &t in &self.sweep.checkpoints {
            if !(t > 0.0 && t <= self.horizon) {
                return Err(HarnessError::config(
                    "sweep.checkpoints",
                    format!("{t} outside (0, horizon]"),
                ));
            }
        }
        for &d in &self.sweep.deltas {
            self.scale_for(d)?;
        }
        Ok(())
    }

    /// Scale parameters for the integration; `zero_drag` yields `delta^alpha = 0`.
    pub fn scale(&self) -> Result<ScaleParameters, HarnessError> {
        self.scale_for(self.scale.delta)
    }

    pub fn scale_for(&self, delta: f64) -> Result<ScaleParameters, HarnessError> {
        let s = &self.scale;
        let base = if s.diagnostics_only {
            ScaleParameters::diagnostics_only(delta, s.alpha, s.epsilon)
        } else {
            ScaleParameters::new(delta, s.alpha, s.epsilon)
        }
        .map_err(|e| HarnessError::config("scale", e))?;
        if s.zero_drag {
            return ScaleParameters::diagnostics_only(f64::MIN_POSITIVE, s.alpha, s.epsilon)
                .map_err(|e| HarnessError::config("scale", e));
        }
        Ok(base)
    }

    pub fn lattice(&self, delta: f64) -> LatticeConfig {
        LatticeConfig::new(delta, self.initial.jitter)
    }

    pub fn schedule(&self) -> OutputSchedule {
        let interval = if self.output.cadence > 0.0 {
            self.output.cadence
        } else {
            self.horizon / 20.0
        };
        let mut extra = self.output.extra_times.clone();
        extra.extend(&self.sweep.checkpoints);
        OutputSchedule {
            interval,
            extra_times: extra,
        }
    }

    /// Output times of the PDE run: the particle schedule.
    pub fn output_times(&self) -> Vec<f64> {
        self.schedule().times(self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
horizon = 1.0
[scale]
delta = 0.1
alpha = 2.0
[initial]
seed = 3
[initial.radii]
kind = "uniform"
low = 0.5
high = 1.5
"#;

    #[test]
    fn minimal_config_with_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.scale.epsilon, 0.01);
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert_eq!(cfg.pde.cells, 400);
        assert_eq!(cfg.output_times().len(), 20);
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("alpha = 2.0", "alpha = 2.0\nbeta = 1.0");
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn regime_gate() {
        let text = MINIMAL.replace("alpha = 2.0", "alpha = 1.4");
        let err = RunConfig::from_toml(&text).unwrap_err();
        assert!(
            err.to_string().contains("alpha must exceed 3/2 + epsilon"),
            "{err}"
        );
        let text = MINIMAL.replace("alpha = 2.0", "alpha = 1.4\ndiagnostics_only = true");
        assert!(RunConfig::from_toml(&text).is_ok());
    }

    #[test]
    fn field_level_messages() {
        let text = MINIMAL.replace("horizon = 1.0", "horizon = -1.0");
        assert!(RunConfig::from_toml(&text)
            .unwrap_err()
            .to_string()
            .contains("horizon"));
        let text = format!("{MINIMAL}\n[pde]\ncfl = 2.0\n");
        assert!(RunConfig::from_toml(&text)
            .unwrap_err()
            .to_string()
            .contains("pde.cfl"));
    }
}
