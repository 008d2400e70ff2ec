//! Run configuration: the shipped defaults and user overrides in TOML.
//!
//! A user file only needs the keys it changes; it is merged key by key over
//! the shipped configuration before validation.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dsp::spectral::FrequencyGrid;
use crate::error::{Error, Result};
use crate::estimate::{PipelineConfig, RateMethod};
use crate::motion::{MotionConfig, MotionMethod, MotionThresholds};
use crate::select::SelectMode;
use crate::trace::Technology;

/// The shipped configuration file.
pub const SHIPPED_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    /// Optional here; the command line may supply it instead.
    pub technology: Option<Technology>,
    pub method: RateMethod,
    pub stream_select: SelectMode,
    /// A motion method name or `none`.
    pub motion: String,
    pub window: f64,
    pub tick: f64,
    pub cir_alpha: f64,
    pub grid: FrequencyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdTable {
    pub cir: MotionThresholds,
    pub csi: MotionThresholds,
    pub rss: MotionThresholds,
    pub sub: MotionThresholds,
    pub poly: MotionThresholds,
}

impl ThresholdTable {
    pub fn get(&self, tech: Technology) -> MotionThresholds {
        match tech {
            Technology::Cir => self.cir,
            Technology::Csi => self.csi,
            Technology::Rss => self.rss,
            Technology::Sub => self.sub,
            Technology::Poly => self.poly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    pub short_window: f64,
    pub long_window: f64,
    pub thresholds: ThresholdTable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineSection,
    pub motion: MotionSection,
    #[serde(default)]
    pub paths: PathsSection,
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses a motion setting: a method name or `none`.
pub fn parse_motion(s: &str) -> Result<Option<MotionMethod>> {
    if s.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn shipped() -> &'static RunConfig {
    static SHIPPED: OnceLock<RunConfig> = OnceLock::new();
    SHIPPED.get_or_init(|| {
        toml::from_str(SHIPPED_CONFIG).expect("shipped configuration is valid TOML for RunConfig")
    })
}

/// Shipped motion configuration for `method` on `tech`.
pub fn default_motion_config(tech: Technology, method: MotionMethod) -> MotionConfig {
    shipped().motion_config(tech, method)
}

impl RunConfig {
    pub fn shipped() -> RunConfig {
        shipped().clone()
    }

    /// Parses `text` as overrides of the shipped configuration and validates
    /// the result.
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let mut base: toml::Table =
            toml::from_str(SHIPPED_CONFIG).map_err(|e| Error::Config(e.to_string()))?;
        let over: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, over);
        let cfg: RunConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes to TOML")
    }

    pub fn motion_config(&self, tech: Technology, method: MotionMethod) -> MotionConfig {
        MotionConfig {
            method,
            short_window: self.motion.short_window,
            long_window: self.motion.long_window,
            thresholds: self.motion.thresholds.get(tech),
        }
    }

    /// Checks every value that does not depend on the technology choice.
    pub fn validate(&self) -> Result<()> {
        parse_motion(&self.pipeline.motion).map_err(|e| Error::Config(e.to_string()))?;
        for tech in [
            Technology::Cir,
            Technology::Csi,
            Technology::Rss,
            Technology::Sub,
            Technology::Poly,
        ] {
            let mut p = self.build(tech)?;
            p.motion = Some(self.motion_config(tech, MotionMethod::Mabd));
            p.validate()?;
        }
        Ok(())
    }

    fn build(&self, tech: Technology) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        let motion = parse_motion(&p.motion).map_err(|e| Error::Config(e.to_string()))?;
        Ok(PipelineConfig {
            technology: tech,
            method: p.method,
            stream_select: p.stream_select,
            motion: motion.map(|m| self.motion_config(tech, m)),
            window: p.window,
            tick: p.tick,
            grid: p.grid,
            cir_alpha: p.cir_alpha,
        })
    }

    /// Pipeline configuration for `tech`, or the configured technology when
    /// `tech` is `None`.
    pub fn pipeline_config(&self, tech: Option<Technology>) -> Result<PipelineConfig> {
        let tech = tech.or(self.pipeline.technology).ok_or_else(|| {
            Error::Config("no technology given in the configuration or on the command line".into())
        })?;
        let cfg = self.build(tech)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
