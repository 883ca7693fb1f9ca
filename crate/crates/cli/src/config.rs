//! The flat TOML run configuration.

use std::path::{Path, PathBuf};

use genbath::{AmplifierConfig, Frame, HusimiGrid, Representation};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationKey {
    Generalized,
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKey {
    Rotating,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HusimiKeys {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for HusimiKeys {
    fn default() -> Self {
        Self { min: -6.0, max: 6.0, points: 121 }
    }
}

/// Written as `husimi.min = -6` or as a `[husimi]` table. Times are in units
/// of `1/gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    pub n_fock: usize,
    pub t_max: f64,
    pub sample_interval: f64,
    pub rtol: f64,
    pub atol: f64,
    pub representation: RepresentationKey,
    pub frame: FrameKey,
    pub husimi: HusimiKeys,
    // left out of the echo so that output bytes do not depend on where they go
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let a = AmplifierConfig::default();
        Self {
            omega: a.omega,
            g: a.g,
            gamma: a.gamma,
            n_fock: a.n_fock,
            t_max: a.t_max,
            sample_interval: a.sample_interval,
            rtol: a.rtol,
            atol: a.atol,
            representation: RepresentationKey::Generalized,
            frame: FrameKey::Rotating,
            husimi: HusimiKeys::default(),
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.amplifier().validate()?;
        cfg.grid()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn amplifier(&self) -> AmplifierConfig {
        AmplifierConfig {
            omega: self.omega,
            g: self.g,
            gamma: self.gamma,
            n_fock: self.n_fock,
            t_max: self.t_max,
            sample_interval: self.sample_interval,
            rtol: self.rtol,
            atol: self.atol,
            representation: match self.representation {
                RepresentationKey::Generalized => Representation::Generalized,
                RepresentationKey::Thermal => Representation::Thermal,
            },
            frame: match self.frame {
                FrameKey::Rotating => Frame::Rotating,
                FrameKey::Lab => Frame::Lab,
            },
        }
    }

    pub fn grid(&self) -> Result<HusimiGrid, CliError> {
        Ok(HusimiGrid::square(self.husimi.min, self.husimi.max, self.husimi.points)?)
    }
}
