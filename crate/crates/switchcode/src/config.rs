//! Experiment configuration. Every section rejects unknown keys, and
//! [`ExperimentConfig::validate`] runs before any data is generated.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use switchcode_core::{Activation, Matrix, MixtureComponent, MixtureSpec, ModelSpec, TrainConfig};

use crate::error::{Error, Result};

/// Whitening regularizer for image data when the config leaves it unset.
pub const IMAGE_WHITEN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Root seed. Data, initialization and shuffling use `seed`, `seed + 1`
    /// and `seed + 2` (wrapping).
    pub seed: u64,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Gaussian {
        num_samples: usize,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    Mog {
        num_samples: usize,
        components: Vec<ComponentConfig>,
    },
    LineManifold {
        num_samples: usize,
        extent: f64,
        noise_std: f64,
    },
    /// IDX files looked up in the `--mnist-dir` directory.
    Mnist {
        images: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<String>,
        /// Keep only the first `limit` images.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
    /// CSV or IDX file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhitenChoice {
    #[default]
    None,
    Pca,
    Zca,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    #[serde(default)]
    pub whiten: WhitenChoice,
    /// Unset means 1e-5 for image data and 0 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub units: usize,
    pub activation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: Vec<LayerConfig>,
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub l1_weight: f64,
    #[serde(default)]
    pub l2_weight: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub momentum: f64,
    #[serde(default)]
    pub learn_output_bias: bool,
    /// Write `checkpoints/epoch_NNNN.json` every this many epochs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    /// The (preprocessed) training data as `dataset.csv`.
    #[serde(default)]
    pub dataset_csv: bool,
    /// Feature hyperplanes: `planes.obj` for 3D data, `planes.csv` for 2D.
    #[serde(default)]
    pub planes: bool,
    #[serde(default)]
    pub pairing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiles: Option<TilesOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_tiles: Option<PairTilesOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<PcaOutput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOutput {
    /// `[[x_min, x_max], [y_min, y_max]]`.
    pub bounds: [[f64; 2]; 2],
    pub resolution: [usize; 2],
    /// Also write one grid per feature.
    #[serde(default)]
    pub per_feature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilesOutput {
    /// `[rows, cols]` of one tile.
    pub shape: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairTilesOutput {
    pub shape: [usize; 2],
    pub top: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaOutput {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile_shape: Option<[usize; 2]>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn config_err(what: &str) -> impl Fn(switchcode_core::Error) -> Error + '_ {
    move |e| Error::Config(format!("{what}: {e}"))
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_slice(bytes).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn data_seed(&self) -> u64 {
        self.seed
    }

    pub fn init_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }

    pub fn whiten_epsilon(&self) -> f64 {
        self.preprocess
            .epsilon
            .unwrap_or(if self.needs_mnist() { IMAGE_WHITEN_EPSILON } else { 0.0 })
    }

    pub fn needs_mnist(&self) -> bool {
        matches!(self.dataset, DatasetConfig::Mnist { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let generated = match &self.dataset {
            DatasetConfig::Gaussian { num_samples, .. }
            | DatasetConfig::LineManifold { num_samples, .. }
            | DatasetConfig::Mog { num_samples, .. } => Some(*num_samples),
            _ => None,
        };
        if generated == Some(0) {
            return Err(Error::Config("dataset.num_samples must be at least 1".into()));
        }
        if let DatasetConfig::Mog { .. } = &self.dataset {
            self.mixture_spec()?;
        }
        if let DatasetConfig::Gaussian { mean, covariance, .. } = &self.dataset {
            let c = matrix(covariance, "dataset.covariance")?;
            if c.rows() != mean.len() || c.cols() != mean.len() {
                return Err(Error::Config("dataset.covariance must be square and match mean".into()));
            }
        }
        if let DatasetConfig::Mnist { limit: Some(0), .. } = &self.dataset {
            return Err(Error::Config("dataset.limit must be at least 1".into()));
        }
        if self.preprocess.epsilon.is_some_and(|e| e.is_nan() || e < 0.0 || e.is_infinite()) {
            return Err(Error::Config("preprocess.epsilon must be nonnegative".into()));
        }
        if let Some(m) = &self.model {
            if m.layers.is_empty() {
                return Err(Error::Config("model.layers must not be empty".into()));
            }
            for (i, l) in m.layers.iter().enumerate() {
                if l.units == 0 {
                    return Err(Error::Config(format!("model.layers[{i}].units must be at least 1")));
                }
                parse_activation(&l.activation)?;
            }
        }
        match (&self.model, &self.train) {
            (Some(_), None) => return Err(Error::Config("model given without a train section".into())),
            (None, Some(_)) => return Err(Error::Config("train section given without a model".into())),
            _ => {}
        }
        if let Some(t) = &self.train {
            self.train_config(t).validate().map_err(config_err("train"))?;
            if t.checkpoint_every == Some(0) {
                return Err(Error::Config("train.checkpoint_every must be at least 1".into()));
            }
        }
        let o = &self.outputs;
        if self.model.is_none() && (o.planes || o.pairing || o.grid.is_some() || o.tiles.is_some() || o.pair_tiles.is_some()) {
            return Err(Error::Config("model outputs requested without a model".into()));
        }
        if let Some(g) = &o.grid {
            if g.resolution.contains(&0) {
                return Err(Error::Config("outputs.grid.resolution must be positive".into()));
            }
            if g.bounds.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Config("outputs.grid.bounds must be finite".into()));
            }
        }
        if let Some(p) = &o.pca {
            if p.k == 0 {
                return Err(Error::Config("outputs.pca.k must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn mixture_spec(&self) -> Result<MixtureSpec> {
        let DatasetConfig::Mog { components, .. } = &self.dataset else {
            return Err(Error::Config("dataset is not a mixture".into()));
        };
        let comps = components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(MixtureComponent {
                    weight: c.weight,
                    mean: c.mean.clone(),
                    covariance: matrix(&c.covariance, &format!("dataset.components[{i}].covariance"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureSpec::new(comps).map_err(config_err("dataset.components"))
    }

    pub fn model_spec(&self, input_dim: usize) -> Result<Option<ModelSpec>> {
        let Some(m) = &self.model else { return Ok(None) };
        let layers = m
            .layers
            .iter()
            .map(|l| Ok((l.units, parse_activation(&l.activation)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(ModelSpec {
            input_dim,
            layers,
            tied: m.tied,
        }))
    }

    pub fn train_config(&self, t: &TrainSection) -> TrainConfig {
        TrainConfig {
            l1_weight: t.l1_weight,
            l2_weight: t.l2_weight,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
            seed: self.shuffle_seed(),
            momentum: t.momentum,
            learn_output_bias: t.learn_output_bias,
        }
    }
}

pub fn parse_activation(name: &str) -> Result<Activation> {
    Activation::from_name(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown activation {name:?}; expected rectified_linear, sigmoid or identity"
        ))
    })
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
