//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use greenstack::area::AreaConfig;
use greenstack::dse::{GaConfig, GeneDomains};
use greenstack::error::{Error, Result};
use greenstack::techlib::Dims;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "GREENSTACK_CONFIG";

/// One run's full configuration. Every field has a default, so an empty
/// document (or no config file at all) is valid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Technology node name from the table.
    pub node: String,
    pub dims: Dims,
    /// `builtin:<name>` or a path to a workload JSON file.
    pub workload: String,
    /// `builtin` or a path to a JSON list of multiplier specs.
    pub multiplier_library: String,
    /// Maximum allowed inference accuracy drop (absolute points).
    pub accuracy_delta: f64,
    pub fps_target: Option<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Mantissa multiplier operand width (hidden bit included).
    pub mantissa_width: u32,
    pub ga: GaConfig,
    pub domains: GeneDomains,
    pub area: AreaConfig,
    /// Optional technology-table JSON overriding the bundled nodes.
    pub nodes_table: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            node: "14nm".into(),
            dims: Dims::D3,
            workload: "builtin:vgg_toy".into(),
            multiplier_library: "builtin".into(),
            accuracy_delta: 0.03,
            fps_target: None,
            seed: 0,
            out_dir: PathBuf::from("out"),
            mantissa_width: 8,
            ga: GaConfig::default(),
            domains: GeneDomains::default(),
            area: AreaConfig::default(),
            nodes_table: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.accuracy_delta.is_nan() || self.accuracy_delta < 0.0 {
            return Err(Error::Config(format!(
                "accuracy_delta must be >= 0, got {}",
                self.accuracy_delta
            )));
        }
        if let Some(fps) = self.fps_target {
            if fps.is_nan() || fps <= 0.0 {
                return Err(Error::Config(format!("fps_target must be > 0, got {fps}")));
            }
        }
        self.ga.validate()?;
        self.domains.validate()?;
        Ok(())
    }
}
