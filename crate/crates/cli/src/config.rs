//! The experiment config file: one JSON document with sections mirroring the
//! library's typed configs. Unknown keys are rejected everywhere so a typo
//! fails loudly instead of silently falling back to a default.

use serde::Deserialize;

use ircsc_core::seed::{derive_seed, domain};
use ircsc_core::{
    default_wo_fs_m, ChannelFamily, CurveFitConfig, FeatureShape, RateConfig, Scheme, StiiConfig,
    SweepConfig, TaskModelConfig,
};

use crate::CliError;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    /// Master seed; every random stream in every command derives from it.
    pub seed: u64,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub stii: StiiSection,
    #[serde(default)]
    pub rate: RateSection,
    #[serde(default)]
    pub curve_fit: CurveFitSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_format_version() -> u32 {
    CONFIG_FORMAT_VERSION
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    pub input_dim: usize,
    pub num_classes: usize,
    pub hidden_dim: usize,
    pub length: usize,
    pub channels: usize,
    pub bits_per_element: u32,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_bitflip_prob: f64,
    pub train_mask_drop_prob: f64,
    /// Task seed; derived from the master seed when omitted.
    pub seed: Option<u64>,
}

impl Default for TaskSection {
    fn default() -> Self {
        let desk = TaskModelConfig::desk_default(0);
        Self {
            input_dim: desk.input_dim,
            num_classes: desk.num_classes,
            hidden_dim: desk.hidden_dim,
            length: desk.shape.length,
            channels: desk.shape.channels,
            bits_per_element: desk.shape.bits_per_element,
            learning_rate: desk.learning_rate,
            epochs: desk.epochs,
            batch_size: desk.batch_size,
            train_bitflip_prob: desk.train_bitflip_prob,
            train_mask_drop_prob: desk.train_mask_drop_prob,
            seed: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub train_samples: usize,
    pub test_samples: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            train_samples: 2000,
            test_samples: 500,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StiiSection {
    pub inherent_predictability: f64,
}

impl Default for StiiSection {
    fn default() -> Self {
        Self {
            inherent_predictability: 0.5,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateSection {
    pub symbol_interval_s: f64,
    pub modulation_order: u32,
}

impl Default for RateSection {
    fn default() -> Self {
        Self {
            symbol_interval_s: 0.05,
            modulation_order: 2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveFitSection {
    pub targets: Vec<f64>,
    pub snr_range_db: [f64; 2],
    pub samples_per_target: usize,
}

impl Default for CurveFitSection {
    fn default() -> Self {
        let d = CurveFitConfig::default();
        Self {
            targets: d.targets,
            snr_range_db: [d.snr_range_db.0, d.snr_range_db.1],
            samples_per_target: d.samples_per_target,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub schemes: Vec<String>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub tau: f64,
    pub family: String,
    pub eval_samples: usize,
    /// Fixed channel count for the WO-FS baseline; scaled from the 48-of-128
    /// ratio when omitted.
    pub wo_fs_fixed_m: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            schemes: vec![
                "ircsc".into(),
                "td-jscc".into(),
                "wo-ia".into(),
                "wo-fs".into(),
            ],
            snr_grid_db: vec![-10.0, -6.0, -2.0, 0.0, 2.0, 6.0, 12.0],
            trials: 20,
            tau: 90.0,
            family: "rayleigh".into(),
            eval_samples: 64,
            wo_fs_fixed_m: None,
        }
    }
}

impl AppConfig {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config '{path}': {e}")))?;
        let config: AppConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("config '{path}' is malformed: {e}")))?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            return Err(CliError::usage(format!(
                "config '{path}' has format version {}, expected {CONFIG_FORMAT_VERSION}",
                config.format_version
            )));
        }
        Ok(config)
    }

    pub fn task_config(&self) -> Result<TaskModelConfig, CliError> {
        let shape = FeatureShape::new(
            self.task.length,
            self.task.channels,
            self.task.bits_per_element,
        )
        .map_err(CliError::usage_from)?;
        let config = TaskModelConfig {
            input_dim: self.task.input_dim,
            num_classes: self.task.num_classes,
            hidden_dim: self.task.hidden_dim,
            shape,
            learning_rate: self.task.learning_rate,
            epochs: self.task.epochs,
            batch_size: self.task.batch_size,
            train_bitflip_prob: self.task.train_bitflip_prob,
            train_mask_drop_prob: self.task.train_mask_drop_prob,
            seed: self
                .task
                .seed
                .unwrap_or_else(|| derive_seed(self.seed, &[domain::TRAIN, 0])),
        };
        config.validate().map_err(CliError::usage_from)?;
        Ok(config)
    }

    pub fn stii_config(&self) -> Result<StiiConfig, CliError> {
        StiiConfig::new(self.stii.inherent_predictability).map_err(CliError::usage_from)
    }

    pub fn rate_config(&self) -> Result<RateConfig, CliError> {
        RateConfig::new(self.rate.symbol_interval_s, self.rate.modulation_order)
            .map_err(CliError::usage_from)
    }

    pub fn curve_fit_config(&self) -> CurveFitConfig {
        CurveFitConfig {
            targets: self.curve_fit.targets.clone(),
            snr_range_db: (
                self.curve_fit.snr_range_db[0],
                self.curve_fit.snr_range_db[1],
            ),
            samples_per_target: self.curve_fit.samples_per_target,
            seed: derive_seed(self.seed, &[domain::CURVE_FIT_SNR, 0]),
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let family: ChannelFamily = self.sweep.family.parse().map_err(CliError::usage_from)?;
        let schemes = self
            .sweep
            .schemes
            .iter()
            .map(|name| self.parse_scheme(name))
            .collect::<Result<Vec<Scheme>, CliError>>()?;
        Ok(SweepConfig {
            schemes,
            snr_grid_db: self.sweep.snr_grid_db.clone(),
            family,
            trials: self.sweep.trials,
            tau: self.sweep.tau,
            seed: derive_seed(self.seed, &[domain::SWEEP_TRIAL, 0]),
        })
    }

    fn parse_scheme(&self, name: &str) -> Result<Scheme, CliError> {
        match name.to_ascii_lowercase().as_str() {
            "ircsc" => Ok(Scheme::Ircsc),
            "td-jscc" => Ok(Scheme::TdJscc),
            "wo-ia" => Ok(Scheme::WoIa),
            "wo-fs" => {
                let fixed_m = self
                    .sweep
                    .wo_fs_fixed_m
                    .unwrap_or_else(|| default_wo_fs_m(self.task.channels));
                if fixed_m == 0 || fixed_m > self.task.channels {
                    return Err(CliError::usage(format!(
                        "wo_fs_fixed_m = {fixed_m} out of range 1..={}",
                        self.task.channels
                    )));
                }
                Ok(Scheme::WoFs { fixed_m })
            }
            other => Err(CliError::usage(format!(
                "unknown scheme '{other}' (expected ircsc, td-jscc, wo-ia, or wo-fs)"
            ))),
        }
    }
}
