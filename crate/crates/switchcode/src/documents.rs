//! JSON documents for models, PCA bases and whitening transforms. Matrices
//! are stored row-major with explicit shapes.

use serde::{Deserialize, Serialize};
use switchcode_core::preprocess::{PcaBasis, WhitenMode, WhitenTransform};
use switchcode_core::{Activation, Layer, Matrix, Model};

use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "switchcode-model";
pub const PCA_FORMAT: &str = "switchcode-pca";
pub const WHITEN_FORMAT: &str = "switchcode-whiten";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Matrix> for MatrixDoc {
    fn from(m: &Matrix) -> Self {
        MatrixDoc {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().to_vec(),
        }
    }
}

impl MatrixDoc {
    fn to_matrix(&self, what: &str) -> Result<Matrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Data(format!(
                "{what}: shape {}x{} needs {} values, found {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.data.len()
            )));
        }
        Ok(Matrix::from_vec(self.rows, self.cols, self.data.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub activation: String,
    pub weights: MatrixDoc,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub format: String,
    pub version: u32,
    pub tied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<usize>,
    pub layers: Vec<LayerDoc>,
    /// Present only for untied models, one matrix per layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder_weights: Option<Vec<MatrixDoc>>,
    pub decoder_biases: Vec<Vec<f64>>,
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Data(format!("expected a {expected} document, found {format:?}")));
    }
    if version != VERSION {
        return Err(Error::Data(format!("unsupported {expected} version {version}")));
    }
    Ok(())
}

impl ModelDoc {
    pub fn from_model(model: &Model, epoch: Option<usize>) -> Self {
        ModelDoc {
            format: MODEL_FORMAT.into(),
            version: VERSION,
            tied: model.is_tied(),
            epoch,
            layers: model
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    activation: l.activation.name().into(),
                    weights: (&l.weights).into(),
                    bias: l.bias.clone(),
                })
                .collect(),
            decoder_weights: model.decoder_weights().map(|ds| ds.iter().map(MatrixDoc::from).collect()),
            decoder_biases: model.decoder_biases().to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        check_header(&self.format, self.version, MODEL_FORMAT)?;
        if self.tied == self.decoder_weights.is_some() {
            return Err(Error::Data("tie flag disagrees with the presence of decoder weights".into()));
        }
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let act = Activation::from_name(&l.activation)
                    .ok_or_else(|| Error::Data(format!("layer {i}: unknown activation {:?}", l.activation)))?;
                Ok(Layer::new(l.weights.to_matrix(&format!("layer {i}"))?, l.bias.clone(), act)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let decoder = match &self.decoder_weights {
            Some(ds) => Some(
                ds.iter()
                    .enumerate()
                    .map(|(i, d)| d.to_matrix(&format!("decoder {i}")))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        Ok(Model::from_parts(layers, decoder, self.decoder_biases.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaDoc {
    pub format: String,
    pub version: u32,
    pub mean: Vec<f64>,
    pub components: MatrixDoc,
    pub eigenvalues: Vec<f64>,
}

impl From<&PcaBasis> for PcaDoc {
    fn from(p: &PcaBasis) -> Self {
        PcaDoc {
            format: PCA_FORMAT.into(),
            version: VERSION,
            mean: p.mean.clone(),
            components: (&p.components).into(),
            eigenvalues: p.eigenvalues.clone(),
        }
    }
}

impl PcaDoc {
    pub fn to_basis(&self) -> Result<PcaBasis> {
        check_header(&self.format, self.version, PCA_FORMAT)?;
        let components = self.components.to_matrix("components")?;
        if self.mean.len() != components.cols() || self.eigenvalues.len() != components.rows() {
            return Err(Error::Data("pca: mean or eigenvalue length disagrees with components".into()));
        }
        Ok(PcaBasis {
            mean: self.mean.clone(),
            components,
            eigenvalues: self.eigenvalues.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhitenDoc {
    pub format: String,
    pub version: u32,
    pub mode: String,
    pub epsilon: f64,
    pub mean: Vec<f64>,
    pub rotation: MatrixDoc,
    pub scales: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl From<&WhitenTransform> for WhitenDoc {
    fn from(t: &WhitenTransform) -> Self {
        WhitenDoc {
            format: WHITEN_FORMAT.into(),
            version: VERSION,
            mode: t.mode.as_str().into(),
            epsilon: t.epsilon,
            mean: t.mean.clone(),
            rotation: (&t.rotation).into(),
            scales: t.scales.clone(),
            eigenvalues: t.eigenvalues.clone(),
        }
    }
}

pub fn parse_whiten_mode(s: &str) -> Option<WhitenMode> {
    match s {
        "pca" => Some(WhitenMode::Pca),
        "zca" => Some(WhitenMode::Zca),
        _ => None,
    }
}

impl WhitenDoc {
    pub fn to_transform(&self) -> Result<WhitenTransform> {
        check_header(&self.format, self.version, WHITEN_FORMAT)?;
        let mode = parse_whiten_mode(&self.mode)
            .ok_or_else(|| Error::Data(format!("unknown whitening mode {:?}", self.mode)))?;
        let rotation = self.rotation.to_matrix("rotation")?;
        let n = self.mean.len();
        if rotation.rows() != n || rotation.cols() != n || self.scales.len() != n || self.eigenvalues.len() != n {
            return Err(Error::Data("whiten: inconsistent shapes".into()));
        }
        Ok(WhitenTransform {
            mean: self.mean.clone(),
            rotation,
            scales: self.scales.clone(),
            eigenvalues: self.eigenvalues.clone(),
            epsilon: self.epsilon,
            mode,
        })
    }
}

pub fn parse_model_json(bytes: &[u8]) -> Result<Model> {
    let doc: ModelDoc = serde_json::from_slice(bytes).map_err(|e| Error::Data(format!("model json: {e}")))?;
    doc.to_model()
}
