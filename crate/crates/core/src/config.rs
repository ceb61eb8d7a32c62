//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{BathShape, SpectralFunction, DEFAULT_GAMMA0};
use crate::error::{Error, Result};
use crate::generator::{EvolutionKind, DEFAULT_FREQ_TOL};
use crate::models::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub model: ModelSpec,
    pub bath: BathConfig,
    pub evolution: EvolutionKind,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default)]
    pub shape: BathShape,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    pub temperature: f64,
}

fn default_gamma0() -> f64 {
    DEFAULT_GAMMA0
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitialState {
    /// `|↑...↑><↑...↑|` in the computational basis.
    FullyPolarizedUp,
    /// `Σ_m |m_R><m_L| / d` for BTE, `Σ_m |m_R><m_R|` normalized for RTE.
    #[default]
    InfiniteTemperature,
    /// `|0_R><0_L|` for BTE, `|0_R><0_R|` for RTE, with level 0 the lowest.
    GroundProjectorBiorthogonal,
    /// A text matrix, one row per line; resolved against the config's directory.
    FileMatrix(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Integration horizon; `200 / gamma0` when absent.
    pub t_end_cap: Option<f64>,
    pub sample_dt: f64,
    pub steady_tol: f64,
    pub freq_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { t_end_cap: None, sample_dt: 1.0, steady_tol: 1e-10, freq_tol: DEFAULT_FREQ_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), formats: vec![OutputFormat::Csv, OutputFormat::Json] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(key, format!("must be positive and finite, got {v}")))
    }
}

impl SimulationConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimulationConfig = serde_json::from_str(text).map_err(|e| {
            let key = match e.classify() {
                serde_json::error::Category::Syntax | serde_json::error::Category::Eof => "<syntax>",
                _ => "<document>",
            };
            config_err(key, e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; a relative `FileMatrix` path is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let InitialState::FileMatrix(p) = &cfg.initial_state {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.initial_state = InitialState::FileMatrix(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| config_err("model", e.to_string()))?;
        positive("bath.temperature", self.bath.temperature)?;
        positive("bath.gamma0", self.bath.gamma0)?;
        if let Some(t) = self.run.t_end_cap {
            positive("run.t_end_cap", t)?;
        }
        positive("run.sample_dt", self.run.sample_dt)?;
        positive("run.steady_tol", self.run.steady_tol)?;
        positive("run.freq_tol", self.run.freq_tol)?;
        if self.output.formats.is_empty() {
            return Err(config_err("output.formats", "at least one format is required"));
        }
        if self.output.directory.as_os_str().is_empty() {
            return Err(config_err("output.directory", "must not be empty"));
        }
        Ok(())
    }

    pub fn spectral_function(&self) -> Result<SpectralFunction> {
        SpectralFunction::from_temperature(self.bath.shape, self.bath.gamma0, self.bath.temperature)
            .map_err(|e| config_err("bath", e.to_string()))
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.bath.temperature
    }

    pub fn t_end(&self) -> f64 {
        self.run.t_end_cap.unwrap_or(200.0 / self.bath.gamma0)
    }

    /// Creates the output directory, refusing paths that exist as files.
    pub fn prepare_output(&self) -> Result<&Path> {
        let dir = &self.output.directory;
        if dir.exists() && !dir.is_dir() {
            return Err(config_err("output.directory", format!("{} is not a directory", dir.display())));
        }
        std::fs::create_dir_all(dir)
            .map_err(|e| config_err("output.directory", format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUBIT: &str = r#"{
        "model": {"kind": "Qubit", "h_x": 1.0, "h_y": 0.5, "coupling": "SigmaZ"},
        "bath": {"temperature": 1.0},
        "evolution": "BTE"
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = SimulationConfig::from_json(QUBIT).unwrap();
        assert_eq!(c.bath.gamma0, DEFAULT_GAMMA0);
        assert_eq!(c.bath.shape, BathShape::Ohmic);
        assert_eq!(c.initial_state, InitialState::InfiniteTemperature);
        assert_eq!(c.t_end(), 2000.0);
    }

    #[test]
    fn round_trip() {
        let mut c = SimulationConfig::from_json(QUBIT).unwrap();
        c.initial_state = InitialState::FileMatrix("rho.txt".into());
        c.run.t_end_cap = Some(50.0);
        let again = SimulationConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn bad_values_name_the_key() {
        let bad = QUBIT.replace("\"temperature\": 1.0", "\"temperature\": -1.0");
        match SimulationConfig::from_json(&bad) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "bath.temperature"),
            other => panic!("{other:?}"),
        }
        let unknown = QUBIT.replace("\"evolution\"", "\"colour\": 1, \"evolution\"");
        match SimulationConfig::from_json(&unknown) {
            Err(Error::Config { message, .. }) => assert!(message.contains("colour") && message.contains("line")),
            other => panic!("{other:?}"),
        }
    }
}
