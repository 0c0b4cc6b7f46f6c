//! Switched-linear encoders.
//!
//! A rectified linear unit `h_j = [w_j·x + b_j]₊` is switched off whenever its
//! pre-activation is not strictly positive, so each input selects the linear
//! sub-model spanned by its active set `ψ_x = { j : w_j·x + b_j > 0 }`.
//! Triangle k-means and soft thresholding are members of the same family and
//! live here too.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, sq_dist, Matrix};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    RectifiedLinear,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::RectifiedLinear => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-z)),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and output `a = apply(z)`.
    /// The rectifier's derivative at exactly zero is zero.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::RectifiedLinear => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::RectifiedLinear => "rectified_linear",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rectified_linear" | "relu" => Some(Activation::RectifiedLinear),
            "sigmoid" | "logistic" => Some(Activation::Sigmoid),
            "identity" | "linear" => Some(Activation::Identity),
            _ => None,
        }
    }

    /// Whether the activation has a non-differentiable point at `z = 0`.
    pub fn has_kink(self) -> bool {
        matches!(self, Activation::RectifiedLinear)
    }
}

/// One encoder layer `σ(Wx + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::InvalidModel(format!(
                "bias length {} does not match {} weight rows",
                bias.len(),
                weights.rows()
            )));
        }
        if !weights.is_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidModel("layer parameters must be finite".into()));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn units(&self) -> usize {
        self.weights.rows()
    }

    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .row_iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, x) + b)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.pre_activation(x)
            .into_iter()
            .map(|z| self.activation.apply(z))
            .collect()
    }
}

/// Encoder stack plus mirrored decoder.
///
/// Decoder layer `l` maps the output of encoder layer `l` back to its input
/// width. When `tied`, its weights are the transpose of the encoder weights
/// and are not stored separately. Hidden decoder layers reuse the activation
/// of the encoder layer they mirror; the output layer is always linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    encoder: Vec<Layer>,
    decoder_weights: Option<Vec<Matrix>>,
    decoder_biases: Vec<Vec<f64>>,
}

/// Layer sizes and activations for [`Model::init`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub layers: Vec<(usize, Activation)>,
    pub tied: bool,
}

impl Model {
    /// Tied model with zero decoder biases.
    pub fn tied(encoder: Vec<Layer>) -> Result<Self> {
        let biases = encoder.iter().map(|l| vec![0.0; l.input_dim()]).collect();
        Model::from_parts(encoder, None, biases)
    }

    /// Untied model with zero decoder biases.
    pub fn untied(encoder: Vec<Layer>, decoder_weights: Vec<Matrix>) -> Result<Self> {
        let biases = encoder.iter().map(|l| vec![0.0; l.input_dim()]).collect();
        Model::from_parts(encoder, Some(decoder_weights), biases)
    }

    /// Single tied rectified layer with weights `W = Dᵀ` given as rows.
    pub fn tied_relu(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        Model::tied(vec![Layer::new(weights, bias, Activation::RectifiedLinear)?])
    }

    pub fn from_parts(
        encoder: Vec<Layer>,
        decoder_weights: Option<Vec<Matrix>>,
        decoder_biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if encoder.is_empty() {
            return Err(Error::InvalidModel("model needs at least one layer".into()));
        }
        for (l, pair) in encoder.windows(2).enumerate() {
            if pair[1].input_dim() != pair[0].units() {
                return Err(Error::InvalidModel(format!(
                    "layer {} expects {} inputs but layer {l} has {} units",
                    l + 1,
                    pair[1].input_dim(),
                    pair[0].units()
                )));
            }
        }
        if let Some(dw) = &decoder_weights {
            if dw.len() != encoder.len() {
                return Err(Error::InvalidModel(format!(
                    "{} decoder matrices for {} encoder layers",
                    dw.len(),
                    encoder.len()
                )));
            }
            for (l, (v, layer)) in dw.iter().zip(&encoder).enumerate() {
                if v.shape() != (layer.input_dim(), layer.units()) {
                    return Err(Error::InvalidModel(format!(
                        "decoder[{l}] has shape {:?}, expected ({}, {})",
                        v.shape(),
                        layer.input_dim(),
                        layer.units()
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidModel("decoder weights must be finite".into()));
                }
            }
        }
        if decoder_biases.len() != encoder.len() {
            return Err(Error::InvalidModel(format!(
                "{} decoder bias vectors for {} layers",
                decoder_biases.len(),
                encoder.len()
            )));
        }
        for (l, (c, layer)) in decoder_biases.iter().zip(&encoder).enumerate() {
            if c.len() != layer.input_dim() {
                return Err(Error::InvalidModel(format!(
                    "decoder bias {l} has length {}, expected {}",
                    c.len(),
                    layer.input_dim()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel("decoder biases must be finite".into()));
            }
        }
        Ok(Model {
            encoder,
            decoder_weights,
            decoder_biases,
        })
    }

    /// Weights uniform in `[-r, r]` with `r = sqrt(6 / (fan_in + fan_out))`,
    /// biases zero. Encoder matrices are drawn first, then decoder matrices.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        if spec.input_dim == 0 || spec.layers.is_empty() {
            return Err(Error::InvalidModel("empty model specification".into()));
        }
        let mut rng = Rng::from_seed(seed);
        let mut encoder = Vec::with_capacity(spec.layers.len());
        let mut fan_in = spec.input_dim;
        for &(units, activation) in &spec.layers {
            if units == 0 {
                return Err(Error::InvalidModel("layer with zero units".into()));
            }
            let w = uniform_matrix(&mut rng, units, fan_in);
            encoder.push(Layer::new(w, vec![0.0; units], activation)?);
            fan_in = units;
        }
        let decoder = if spec.tied {
            None
        } else {
            Some(
                encoder
                    .iter()
                    .map(|l| uniform_matrix(&mut rng, l.input_dim(), l.units()))
                    .collect(),
            )
        };
        let biases = encoder.iter().map(|l| vec![0.0; l.input_dim()]).collect();
        Model::from_parts(encoder, decoder, biases)
    }

    #[inline]
    pub fn is_tied(&self) -> bool {
        self.decoder_weights.is_none()
    }

    #[inline]
    pub fn layers(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.encoder
    }

    pub fn num_layers(&self) -> usize {
        self.encoder.len()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn code_dim(&self) -> usize {
        self.encoder[self.encoder.len() - 1].units()
    }

    /// Untied decoder matrices, `None` for tied models.
    pub fn decoder_weights(&self) -> Option<&[Matrix]> {
        self.decoder_weights.as_deref()
    }

    pub fn decoder_weights_mut(&mut self) -> Option<&mut [Matrix]> {
        self.decoder_weights.as_deref_mut()
    }

    pub fn decoder_biases(&self) -> &[Vec<f64>] {
        &self.decoder_biases
    }

    pub fn decoder_biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.decoder_biases
    }

    /// Output bias added to every reconstruction.
    pub fn decoder_bias(&self) -> &[f64] {
        &self.decoder_biases[0]
    }

    /// Decoder matrix for layer `l`, materialized if tied.
    pub fn decoder_matrix(&self, l: usize) -> Matrix {
        match &self.decoder_weights {
            Some(dw) => dw[l].clone(),
            None => self.encoder[l].weights.transpose(),
        }
    }

    /// The dictionary `D` (`n × k`) of a single-layer model.
    pub fn dictionary(&self) -> Result<Matrix> {
        self.require_single_layer()?;
        Ok(self.decoder_matrix(0))
    }

    /// Same computation with decoder weights stored explicitly as `Wᵀ`.
    pub fn untie(&self) -> Model {
        let dw = (0..self.encoder.len()).map(|l| self.decoder_matrix(l)).collect();
        Model {
            encoder: self.encoder.clone(),
            decoder_weights: Some(dw),
            decoder_biases: self.decoder_biases.clone(),
        }
    }

    /// Every parameter buffer in canonical order: encoder `W_l, b_l` for each
    /// layer, then untied decoder matrices, then decoder biases.
    pub fn parameter_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.encoder {
            out.push(l.weights.as_slice());
            out.push(&l.bias);
        }
        if let Some(dw) = &self.decoder_weights {
            out.extend(dw.iter().map(|m| m.as_slice()));
        }
        out.extend(self.decoder_biases.iter().map(|c| c.as_slice()));
        out
    }

    /// Mutable counterpart of [`Model::parameter_slices`].
    pub fn parameter_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in self.encoder.iter_mut() {
            out.push(l.weights.as_mut_slice());
            out.push(&mut l.bias);
        }
        if let Some(dw) = self.decoder_weights.as_mut() {
            out.extend(dw.iter_mut().map(|m| m.as_mut_slice()));
        }
        out.extend(self.decoder_biases.iter_mut().map(|c| c.as_mut_slice()));
        out
    }

    pub(crate) fn require_single_layer(&self) -> Result<&Layer> {
        if self.encoder.len() != 1 {
            return Err(Error::InvalidModel(format!(
                "expected a single-layer model, found {} layers",
                self.encoder.len()
            )));
        }
        Ok(&self.encoder[0])
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `V_l u + c_l` for decoder layer `l`.
    pub(crate) fn decoder_affine(&self, l: usize, u: &[f64]) -> Vec<f64> {
        let mut y = match &self.decoder_weights {
            Some(dw) => dw[l].matvec(u),
            None => self.encoder[l].weights.matvec_t(u),
        };
        for (v, c) in y.iter_mut().zip(&self.decoder_biases[l]) {
            *v += c;
        }
        y
    }

    pub fn encode(&self, x: &[f64]) -> Result<Encoding> {
        self.check_input(x)?;
        let last = self.encoder.len() - 1;
        let mut a = x.to_vec();
        for layer in &self.encoder[..last] {
            a = layer.forward(&a);
        }
        let layer = &self.encoder[last];
        let z = layer.pre_activation(&a);
        let active_set = z
            .iter()
            .enumerate()
            .filter_map(|(j, &v)| (v > 0.0).then_some(j))
            .collect();
        let h = z.into_iter().map(|v| layer.activation.apply(v)).collect();
        Ok(Encoding { h, active_set })
    }

    pub fn decode(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.code_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.code_dim(),
                found: h.len(),
            });
        }
        let mut u = h.to_vec();
        for l in (0..self.encoder.len()).rev() {
            let y = self.decoder_affine(l, &u);
            u = if l == 0 {
                y
            } else {
                let act = self.encoder[l - 1].activation;
                y.into_iter().map(|v| act.apply(v)).collect()
            };
        }
        Ok(u)
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x)?.h)
    }

    /// `½‖decode(encode(x)) − x‖²`
    pub fn reconstruction_loss(&self, x: &[f64]) -> Result<f64> {
        let xhat = self.reconstruct(x)?;
        Ok(0.5 * sq_dist(&xhat, x))
    }
}

fn uniform_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let r = libm::sqrt(6.0 / (rows + cols) as f64);
    Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-r, r))
}

/// Code of one input: coefficients and the indices whose pre-activation is
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub h: Vec<f64>,
    pub active_set: Vec<usize>,
}

pub fn encode(model: &Model, x: &[f64]) -> Result<Encoding> {
    model.encode(x)
}

pub fn decode(model: &Model, h: &[f64]) -> Result<Vec<f64>> {
    model.decode(h)
}

/// `{ j : w_j·x + b_j > 0 }`, ascending.
pub fn active_set(layer: &Layer, x: &[f64]) -> Result<Vec<usize>> {
    if x.len() != layer.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: layer.input_dim(),
            found: x.len(),
        });
    }
    Ok(layer
        .pre_activation(x)
        .iter()
        .enumerate()
        .filter_map(|(j, &z)| (z > 0.0).then_some(j))
        .collect())
}

/// Reconstruction loss restricted to the active features,
/// `½‖D_ψ(D_ψᵀx + b_ψ) − x‖²`, for a tied single-layer rectified model.
pub fn loss_active(model: &Model, x: &[f64]) -> Result<f64> {
    let layer = model.require_single_layer()?;
    if !model.is_tied() || layer.activation != Activation::RectifiedLinear {
        return Err(Error::InvalidModel(
            "restricted loss needs a tied rectified linear model".into(),
        ));
    }
    model.check_input(x)?;
    let psi = active_set(layer, x)?;
    let mut xhat = vec![0.0; x.len()];
    for &j in &psi {
        let w = layer.weights.row(j);
        axpy(dot(w, x) + layer.bias[j], w, &mut xhat);
    }
    for (v, c) in xhat.iter_mut().zip(model.decoder_bias()) {
        *v += c;
    }
    Ok(0.5 * sq_dist(&xhat, x))
}

/// `h_i = [μ − ‖x − c_i‖]₊` with `μ` the mean centroid distance.
pub fn triangle_kmeans_encode(centroids: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    if centroids.rows() == 0 {
        return Err(Error::InvalidArgument("no centroids".into()));
    }
    if centroids.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: centroids.cols(),
            found: x.len(),
        });
    }
    let dists: Vec<f64> = centroids
        .row_iter()
        .map(|c| libm::sqrt(sq_dist(c, x)))
        .collect();
    // offset form keeps μ exactly equal to the common distance when all agree
    let k = dists.len() as f64;
    let d0 = dists[0];
    let mu = d0 + dists.iter().map(|d| d - d0).sum::<f64>() / k;
    Ok(dists
        .iter()
        .map(|d| {
            let v = mu - d;
            if v > 0.0 {
                v
            } else {
                0.0
            }
        })
        .collect())
}

/// `h_i = [d_iᵀx − λ]₊` over the columns of `dictionary` (`n × k`).
pub fn soft_threshold_encode(dictionary: &Matrix, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    if dictionary.rows() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: dictionary.rows(),
            found: x.len(),
        });
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "threshold must be nonnegative, got {lambda}"
        )));
    }
    Ok((0..dictionary.cols())
        .map(|i| {
            let z = dot(&dictionary.column(i), x) - lambda;
            Activation::RectifiedLinear.apply(z)
        })
        .collect())
}

/// The feature most anti-aligned with feature `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativePair {
    pub feature: usize,
    pub partner: usize,
    pub dot: f64,
    pub cosine: f64,
}

/// `argmin_{i ≠ j} w_jᵀ w_i` over the encoder rows of a single-layer model;
/// ties go to the lowest index.
pub fn negative_pair(model: &Model, j: usize) -> Result<NegativePair> {
    let layer = model.require_single_layer()?;
    let w = &layer.weights;
    if w.rows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pairing needs at least two features, found {}",
            w.rows()
        )));
    }
    if j >= w.rows() {
        return Err(Error::InvalidArgument(format!(
            "feature {j} out of range for {} features",
            w.rows()
        )));
    }
    let wj = w.row(j);
    let mut best: Option<(usize, f64)> = None;
    for i in (0..w.rows()).filter(|&i| i != j) {
        let d = dot(wj, w.row(i));
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    let (partner, d) = best.expect("at least one other feature");
    let denom = norm(wj) * norm(w.row(partner));
    let cosine = if denom > 0.0 { d / denom } else { 0.0 };
    Ok(NegativePair {
        feature: j,
        partner,
        dot: d,
        cosine,
    })
}

/// Names an [`Activation`] or returns a descriptive error.
pub fn parse_activation(name: &str) -> Result<Activation> {
    Activation::from_name(name).ok_or_else(|| {
        Error::InvalidArgument(format!("unknown activation '{name}'"))
    })
}

impl core::fmt::Display for Activation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl ModelSpec {
    pub fn describe(&self) -> String {
        let mut s = self.input_dim.to_string();
        for (u, a) in &self.layers {
            s.push_str(&format!("-{u}{}", &a.name()[..1]));
        }
        if self.tied {
            s.push_str("-tied");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relu_layer(rows: &[&[f64]], bias: &[f64]) -> Layer {
        Layer::new(
            Matrix::from_rows(rows).unwrap(),
            bias.to_vec(),
            Activation::RectifiedLinear,
        )
        .unwrap()
    }

    #[test]
    fn identity_weights_rectify() {
        let m = Model::tied(vec![relu_layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0])]).unwrap();
        let e = m.encode(&[1.0, -1.0]).unwrap();
        assert_eq!(e.h, vec![1.0, 0.0]);
        assert_eq!(e.active_set, vec![0]);
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        let l = Layer::new(Matrix::zeros(1, 2), vec![0.0], Activation::Sigmoid).unwrap();
        let m = Model::tied(vec![l]).unwrap();
        assert_eq!(m.encode(&[3.0, 4.0]).unwrap().h, vec![0.5]);
    }

    #[test]
    fn opposed_features_one_active() {
        let l = relu_layer(&[&[1.0, 0.0], &[-1.0, 0.0]], &[0.0, 0.0]);
        assert_eq!(active_set(&l, &[1.0, 0.0]).unwrap(), vec![0]);
    }

    #[test]
    fn zero_code_decodes_to_bias() {
        let m = Model::tied(vec![relu_layer(&[&[1.0, 0.0]], &[0.0])]).unwrap();
        assert_eq!(m.decode(&[0.0]).unwrap(), vec![0.0, 0.0]);
        let mut m2 = m.clone();
        m2.decoder_biases_mut()[0] = vec![0.5, -1.0];
        assert_eq!(m2.decode(&[0.0]).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn tied_column_decode() {
        let m = Model::tied(vec![relu_layer(&[&[1.0, 0.0]], &[0.0])]).unwrap();
        assert_eq!(m.decode(&[2.0]).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn orthonormal_tied_reconstructs_nonnegative_span() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let m = Model::tied(vec![relu_layer(&[&[s, s], &[-s, s]], &[0.0, 0.0])]).unwrap();
        // x in the cone spanned by both rows
        let x = [0.0, 2.0];
        let xhat = m.reconstruct(&x).unwrap();
        assert!((xhat[0] - x[0]).abs() < 1e-15 && (xhat[1] - x[1]).abs() < 1e-15);
        let m = Model::tied(vec![relu_layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0])]).unwrap();
        assert_eq!(m.reconstruct(&[3.0, 0.25]).unwrap(), vec![3.0, 0.25]);
    }

    #[test]
    fn active_set_edge_cases() {
        let l = relu_layer(&[&[1.0, 2.0], &[-1.0, 0.5]], &[-1e300, -1e300]);
        assert!(active_set(&l, &[1.0, 1.0]).unwrap().is_empty());
        let l = relu_layer(&[&[1.0, 2.0], &[0.0, 0.0]], &[0.0, 0.0]);
        assert_eq!(active_set(&l, &[1.0, 2.0]).unwrap(), vec![0]);
        assert_eq!(active_set(&l, &[0.0, 0.0]).unwrap(), Vec::<usize>::new());
        // exact boundary is excluded
        let l = relu_layer(&[&[1.0, 1.0]], &[-2.0]);
        assert!(active_set(&l, &[1.0, 1.0]).unwrap().is_empty());
        assert!(active_set(&l, &[1.0]).is_err());
    }

    #[test]
    fn loss_active_cases() {
        let empty = Model::tied_relu(Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), vec![-10.0]).unwrap();
        assert_eq!(loss_active(&empty, &[1.0, 2.0]).unwrap(), 0.5 * 5.0);
        let m = Model::tied_relu(Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), vec![0.0]).unwrap();
        assert_eq!(loss_active(&m, &[1.0, 0.0]).unwrap(), 0.0);
        let sig = Model::tied(vec![Layer::new(Matrix::zeros(1, 2), vec![0.0], Activation::Sigmoid).unwrap()]).unwrap();
        assert!(loss_active(&sig, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn triangle_cases() {
        let one = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(triangle_kmeans_encode(&one, &[0.0, 0.0]).unwrap(), vec![0.0]);
        let two = Matrix::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(triangle_kmeans_encode(&two, &[0.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let tri = Matrix::from_rows(&[[1.0, 0.0], [-0.5, 0.75f64.sqrt()], [-0.5, -(0.75f64.sqrt())]]).unwrap();
        let h = triangle_kmeans_encode(&tri, &[0.0, 0.0]).unwrap();
        // distances agree only up to rounding here, so compare against the rule
        for v in h {
            assert!(v < 1e-15);
        }
        let sym = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        assert_eq!(triangle_kmeans_encode(&sym, &[0.0, 0.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn soft_threshold_cases() {
        let eye = Matrix::identity(3);
        assert_eq!(
            soft_threshold_encode(&eye, 0.0, &[1.0, -2.0, 0.5]).unwrap(),
            vec![1.0, 0.0, 0.5]
        );
        let d = Matrix::from_rows(&[[1.0], [0.0]]).unwrap();
        assert_eq!(soft_threshold_encode(&d, 0.5, &[2.0, 0.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn negative_pair_cases() {
        let m = Model::tied_relu(Matrix::from_rows(&[[1.0, 2.0], [-1.0, -2.0]]).unwrap(), vec![0.0; 2]).unwrap();
        let p = negative_pair(&m, 0).unwrap();
        assert_eq!((p.partner, p.dot), (1, -5.0));
        assert!((p.cosine + 1.0).abs() < 1e-15);
        let eye = Model::tied_relu(Matrix::identity(3), vec![0.0; 3]).unwrap();
        let p = negative_pair(&eye, 0).unwrap();
        assert_eq!((p.partner, p.dot), (1, 0.0));
        let single = Model::tied_relu(Matrix::identity(1), vec![0.0]).unwrap();
        assert!(negative_pair(&single, 0).is_err());
    }

    #[test]
    fn model_shape_validation() {
        let l0 = relu_layer(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], &[0.0, 0.0]);
        let bad = relu_layer(&[&[1.0, 0.0, 0.0]], &[0.0]);
        assert!(Model::tied(vec![l0.clone(), bad]).is_err());
        assert!(Model::untied(vec![l0.clone()], vec![Matrix::zeros(2, 3)]).is_err());
        assert!(Model::untied(vec![l0], vec![Matrix::zeros(3, 2)]).is_ok());
        assert!(Layer::new(Matrix::zeros(2, 2), vec![0.0], Activation::Identity).is_err());
    }

    #[test]
    fn two_layer_mirrored_decode() {
        let l0 = relu_layer(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]], &[0.0; 3]);
        let l1 = relu_layer(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0]], &[0.0; 2]);
        let v0 = Matrix::from_rows(&[[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]).unwrap();
        let v1 = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let m = Model::untied(vec![l0, l1], vec![v0, v1]).unwrap();
        // x̂ = V0 relu(V1 h + c1) + c0
        let xhat = m.decode(&[1.0, 2.0]).unwrap();
        // V1 h = (1, 2, -1) -> relu (1, 2, 0) -> V0 = (1, 2)
        assert_eq!(xhat, vec![1.0, 2.0]);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let spec = ModelSpec {
            input_dim: 4,
            layers: vec![(6, Activation::RectifiedLinear)],
            tied: false,
        };
        let a = Model::init(&spec, 3).unwrap();
        assert_eq!(a, Model::init(&spec, 3).unwrap());
        let r = (6.0f64 / 10.0).sqrt();
        assert!(a.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= r));
        assert!(a.layers()[0].bias.iter().all(|b| *b == 0.0));
        assert_eq!(a.decoder_weights().unwrap()[0].shape(), (4, 6));
    }
}
