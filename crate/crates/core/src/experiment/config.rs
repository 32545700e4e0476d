use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::Statistics;
use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, HamiltonianParams, Preset};
use crate::maximizer::MaximizationConfig;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "ENTBOUND_OUTPUT_DIR";

/// Largest L swept without `allow_large`.
pub const DESK_MAX_L: usize = 11;
/// Largest L swept at all.
pub const HARD_MAX_L: usize = 13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSection {
    #[serde(rename = "M")]
    pub m: usize,
    pub n: usize,
    #[serde(default = "fermionic")]
    pub statistics: Statistics,
}

fn fermionic() -> Statistics {
    Statistics::Fermionic
}

/// A preset name or an explicit coupling set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianChoice {
    Preset(Preset),
    Custom(HamiltonianParams),
}

impl HamiltonianChoice {
    pub fn label(&self) -> String {
        match self {
            HamiltonianChoice::Preset(p) => p.name().to_string(),
            HamiltonianChoice::Custom(_) => "custom".to_string(),
        }
    }

    /// Couplings; presets take the sweep-wide boundary.
    pub fn params(&self, boundary: Boundary) -> HamiltonianParams {
        match self {
            HamiltonianChoice::Preset(p) => p.params().with_boundary(boundary),
            HamiltonianChoice::Custom(h) => *h,
        }
    }
}

/// One entry or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    /// File stem for the written artifacts.
    #[serde(default = "default_stem")]
    pub name: String,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Svg]
}

fn default_stem() -> String {
    "sweep".to_string()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            formats: default_formats(),
            name: default_stem(),
        }
    }
}

impl OutputSection {
    /// Configured directory, else `$ENTBOUND_OUTPUT_DIR`, else `./results`.
    pub fn resolved_dir(&self) -> PathBuf {
        self.dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

/// A saturation sweep: every (hamiltonian, L, beta) combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub hamiltonian: OneOrMany<HamiltonianChoice>,
    #[serde(default)]
    pub boundary: Boundary,
    pub betas: Vec<f64>,
    #[serde(rename = "L_values")]
    pub l_values: Vec<usize>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub maximizer: MaximizationConfig,
    #[serde(default)]
    pub output: OutputSection,
    /// Permit L above the desk-scale cap.
    #[serde(default)]
    pub allow_large: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The desk-scale reproduction of the saturation figure.
    pub fn desk_default() -> Self {
        ExperimentConfig {
            system: SystemSection {
                m: 4,
                n: 3,
                statistics: Statistics::Fermionic,
            },
            hamiltonian: OneOrMany::One(HamiltonianChoice::Preset(Preset::Nonintegrable)),
            boundary: Boundary::Open,
            betas: vec![0.01, 2.0],
            l_values: vec![8, 9, 10, 11],
            master_seed: 2020,
            maximizer: MaximizationConfig::default(),
            output: OutputSection::default(),
            allow_large: false,
        }
    }

    pub fn hamiltonians(&self) -> Vec<HamiltonianChoice> {
        self.hamiltonian.to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::domain("betas must not be empty"));
        }
        if self.l_values.is_empty() {
            return Err(Error::domain("L_values must not be empty"));
        }
        if self.hamiltonians().is_empty() {
            return Err(Error::domain("hamiltonian list must not be empty"));
        }
        if self.system.statistics != Statistics::Fermionic {
            return Err(Error::domain("sweeps simulate fermions only"));
        }
        for &b in &self.betas {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::domain(format!("beta must be finite and non-negative (got {b})")));
            }
        }
        let cap = if self.allow_large { HARD_MAX_L } else { DESK_MAX_L };
        for &l in &self.l_values {
            if l > cap {
                return Err(Error::domain(format!(
                    "L = {l} exceeds the limit of {cap}{}",
                    if self.allow_large { "" } else { " (pass --allow-large for L up to 13)" }
                )));
            }
            if self.system.m == 0 || self.system.m > l || self.system.n > l {
                return Err(Error::domain(format!(
                    "need 1 <= M <= L and n <= L (got L = {l}, M = {}, n = {})",
                    self.system.m, self.system.n
                )));
            }
        }
        for h in self.hamiltonians() {
            h.params(self.boundary).validate()?;
        }
        if self.output.formats.is_empty() {
            return Err(Error::domain("output.formats must not be empty"));
        }
        self.maximizer.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"system": {"M": 4, "n": 3}, "hamiltonian": "nonintegrable",
                "betas": [0.01], "L_values": [8, 9]}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.hamiltonians(), vec![HamiltonianChoice::Preset(Preset::Nonintegrable)]);
        assert_eq!(cfg.maximizer.rpts_seeds, 6);
    }

    #[test]
    fn parses_custom_and_lists() {
        let cfg = ExperimentConfig::from_json(
            r#"{"system": {"M": 2, "n": 1},
                "hamiltonian": ["interaction_only",
                                {"t": 1.0, "t_prime": 0.0, "V": 0.0, "V_prime": 0.0, "boundary": "periodic"}],
                "betas": [0.5], "L_values": [4], "master_seed": 9,
                "maximizer": {"rpts_seeds": 2},
                "output": {"formats": ["csv", "json"]}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        let hs = cfg.hamiltonians();
        assert_eq!(hs[1].label(), "custom");
        assert_eq!(hs[1].params(Boundary::Open).boundary, Boundary::Periodic);
        assert_eq!(cfg.maximizer.rpts_seeds, 2);
        assert_eq!(cfg.maximizer.restarts_per_seed, 3);
    }

    #[test]
    fn rejects_empty_betas() {
        let cfg = ExperimentConfig::from_json(
            r#"{"system": {"M": 4, "n": 3}, "hamiltonian": "nonintegrable",
                "betas": [], "L_values": [8]}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_preset_and_large_l() {
        assert!(ExperimentConfig::from_json(
            r#"{"system": {"M": 4, "n": 3}, "hamiltonian": "bogus",
                "betas": [1.0], "L_values": [8]}"#
        )
        .is_err());
        let mut cfg = ExperimentConfig::desk_default();
        cfg.l_values = vec![12];
        assert!(cfg.validate().is_err());
        cfg.allow_large = true;
        assert!(cfg.validate().is_ok());
        cfg.l_values = vec![14];
        assert!(cfg.validate().is_err());
    }
}
