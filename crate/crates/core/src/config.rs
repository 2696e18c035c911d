//! Pipeline configuration: one TOML file holding every module's settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregate::{AggregationConfig, SelectionConfig};
use crate::error::{Error, Result};
use crate::motioncode::MotioncodeConfig;
use crate::noise::NoiseConfig;
use crate::posecode::{PosecodeInstance, PosecodeThresholds};
use crate::skeleton::SkeletonSpec;
use crate::textgen::{TemplateLibrary, TextgenConfig};

/// The documented configuration file with every key at its default.
pub const DEFAULT_CONFIG: &str = include_str!("../data/default.toml");

const DEFAULT_INSTANCES: &str = include_str!("../data/instances.toml");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceList {
    instances: Vec<PosecodeInstance>,
}

/// The bundled posecode instance set.
pub fn default_instances() -> Vec<PosecodeInstance> {
    toml::from_str::<InstanceList>(DEFAULT_INSTANCES)
        .expect("bundled instance list parses")
        .instances
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PosecodeConfig {
    pub thresholds: PosecodeThresholds,
    pub instances: Vec<PosecodeInstance>,
}

impl Default for PosecodeConfig {
    fn default() -> Self {
        PosecodeConfig {
            thresholds: PosecodeThresholds::default(),
            instances: default_instances(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub captions_per_motion: usize,
    pub emit_intermediate: bool,
    pub output_dir: PathBuf,
    pub noise: NoiseConfig,
    pub posecode: PosecodeConfig,
    pub motioncode: MotioncodeConfig,
    pub selection: SelectionConfig,
    pub aggregation: AggregationConfig,
    pub textgen: TextgenConfig,
    pub skeleton: SkeletonSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            captions_per_motion: 1,
            emit_intermediate: false,
            output_dir: PathBuf::from("captions"),
            noise: NoiseConfig::default(),
            posecode: PosecodeConfig::default(),
            motioncode: MotioncodeConfig::default(),
            selection: SelectionConfig::default(),
            aggregation: AggregationConfig::default(),
            textgen: TextgenConfig::default(),
            skeleton: SkeletonSpec::default(),
        }
    }
}

impl PipelineConfig {
    /// Parses and validates a TOML document. Missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<PipelineConfig> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. A relative template path is taken relative to the file.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config =
            PipelineConfig::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(t) = config.textgen.templates.as_mut() {
            if t.is_relative() {
                *t = path.parent().unwrap_or(Path::new(".")).join(&*t);
            }
        }
        Ok(config)
    }

    /// Applies `section.key = value` overrides on top of this config, as if
    /// they had been written into its file.
    pub fn with_overrides<'a>(&self, overrides: impl IntoIterator<Item = (&'a str, toml::Value)>) -> Result<PipelineConfig> {
        // TOML integers are signed, so the seed travels separately.
        let mut seed = self.seed;
        let base = PipelineConfig { seed: 0, ..self.clone() };
        let mut doc = toml::Value::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        for (key, value) in overrides {
            if key == "seed" {
                seed = value
                    .as_integer()
                    .and_then(|v| u64::try_from(v).ok())
                    .ok_or_else(|| Error::Config("override \"seed\" must be a non-negative integer".into()))?;
                continue;
            }
            let mut node = &mut doc;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let table = node
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("override {key:?}: {part:?} is not a table")))?;
                if i + 1 == parts.len() {
                    table.insert(part.to_string(), value.clone());
                    break;
                }
                node = table
                    .get_mut(*part)
                    .ok_or_else(|| Error::Config(format!("override {key:?}: no section {part:?}")))?;
            }
        }
        let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
        Ok(PipelineConfig { seed, ..PipelineConfig::from_toml(&text)? })
    }

    pub fn validate(&self) -> Result<()> {
        if self.captions_per_motion == 0 {
            return Err(Error::Config("captions_per_motion must be at least 1".into()));
        }
        let checks = [
            self.noise.validate(),
            self.posecode.thresholds.validate(),
            self.motioncode.validate(),
            self.selection.validate(),
            self.aggregation.validate(),
            self.textgen.validate(),
        ];
        for check in checks {
            check.map_err(Error::Config)?;
        }
        if self.posecode.instances.is_empty() {
            return Err(Error::Config("posecode.instances must not be empty".into()));
        }
        for (i, instance) in self.posecode.instances.iter().enumerate() {
            instance
                .validate()
                .map_err(|e| Error::Config(format!("posecode.instances[{i}]: {e}")))?;
        }
        self.skeleton.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// The configured template library, or the bundled one.
    pub fn templates(&self) -> Result<TemplateLibrary> {
        match &self.textgen.templates {
            Some(path) => TemplateLibrary::load(path),
            None => Ok(TemplateLibrary::default()),
        }
    }
}
