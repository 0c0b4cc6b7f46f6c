//! Reconstruction loss, backpropagation, minibatch SGD, and finite-difference
//! gradient checking for every autoencoder variant in [`crate::encoders`].
//!
//! The per-sample objective is
//!
//! ```text
//! ½‖x̂ − x‖² + λ₁‖h‖₁
//! ```
//!
//! averaged over the batch, plus `λ₂` times the sum of squared weights
//! (encoder weights, and decoder weights when untied; biases excluded).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::encoders::{Activation, Model};
use crate::error::{Error, KinkSite, Result};
use crate::exec::{chunk_count, chunk_range, Executor, Sequential};
use crate::linalg::{axpy, dot, Matrix};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the L1 penalty on the code.
    pub l1_weight: f64,
    /// Weight decay on all weight matrices.
    pub l2_weight: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Heavy-ball momentum; `0` is plain SGD.
    pub momentum: f64,
    /// Whether SGD updates the output bias. The other decoder biases of deep
    /// models are always trained.
    pub learn_output_bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l1_weight: 0.0,
            l2_weight: 0.0,
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 10,
            seed: 0,
            momentum: 0.0,
            learn_output_bias: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.l1_weight >= 0.0 && self.l1_weight.is_finite()) {
            return bad(format!("l1 weight must be nonnegative, got {}", self.l1_weight));
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return bad(format!("l2 weight must be nonnegative, got {}", self.l2_weight));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        Ok(())
    }
}

/// Gradient buffers shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub encoder_weights: Vec<Matrix>,
    pub encoder_biases: Vec<Vec<f64>>,
    /// `None` for tied models; tied decoder terms are folded into
    /// `encoder_weights`.
    pub decoder_weights: Option<Vec<Matrix>>,
    pub decoder_biases: Vec<Vec<f64>>,
}

impl Gradient {
    pub fn zeros_for(model: &Model) -> Self {
        let layers = model.layers();
        Gradient {
            encoder_weights: layers
                .iter()
                .map(|l| Matrix::zeros(l.units(), l.input_dim()))
                .collect(),
            encoder_biases: layers.iter().map(|l| vec![0.0; l.units()]).collect(),
            decoder_weights: model.decoder_weights().map(|dw| {
                dw.iter()
                    .map(|m| Matrix::zeros(m.rows(), m.cols()))
                    .collect()
            }),
            decoder_biases: layers.iter().map(|l| vec![0.0; l.input_dim()]).collect(),
        }
    }

    /// Buffers in the order of [`Model::parameter_slices`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (w, b) in self.encoder_weights.iter().zip(&self.encoder_biases) {
            out.push(w.as_slice());
            out.push(b);
        }
        if let Some(dw) = &self.decoder_weights {
            out.extend(dw.iter().map(|m| m.as_slice()));
        }
        out.extend(self.decoder_biases.iter().map(|c| c.as_slice()));
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for (w, b) in self.encoder_weights.iter_mut().zip(self.encoder_biases.iter_mut()) {
            out.push(w.as_mut_slice());
            out.push(b);
        }
        if let Some(dw) = self.decoder_weights.as_mut() {
            out.extend(dw.iter_mut().map(|m| m.as_mut_slice()));
        }
        out.extend(self.decoder_biases.iter_mut().map(|c| c.as_mut_slice()));
        out
    }

    pub fn add_assign(&mut self, other: &Gradient) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            axpy(1.0, src, dst);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.slices().iter().map(|s| dot(s, s)).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Components of the batch objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// Mean `½‖x̂ − x‖²`.
    pub reconstruction: f64,
    /// Mean `‖h‖₁`; multiplied by `l1_weight` in `total`.
    pub code_l1: f64,
    /// Sum of squared weights; multiplied by `l2_weight` in `total`.
    pub weight_l2: f64,
    /// Mean fraction of code units with `h > 0`.
    pub active_fraction: f64,
    pub total: f64,
}

/// Sum of squared entries over all free weight matrices.
pub fn weight_sq_norm(model: &Model) -> f64 {
    let enc: f64 = model.layers().iter().map(|l| l.weights.frobenius_sq()).sum();
    let dec: f64 = model
        .decoder_weights()
        .map_or(0.0, |dw| dw.iter().map(|m| m.frobenius_sq()).sum());
    enc + dec
}

/// Forward activations kept for backpropagation.
struct Trace {
    /// `a_0 = x`, `a_{l+1} = σ_l(z_l)`; the last entry is the code.
    acts: Vec<Vec<f64>>,
    /// Encoder pre-activations `z_l`.
    pre: Vec<Vec<f64>>,
    /// Decoder pre-activations `y_l`, indexed by mirrored layer.
    dec_pre: Vec<Vec<f64>>,
    /// Decoder outputs `u_l`; `u_0 = x̂`.
    dec_out: Vec<Vec<f64>>,
}

fn hidden_decoder_activation(model: &Model, l: usize) -> Activation {
    // decoder layer l > 0 mirrors the activation feeding encoder layer l
    model.layers()[l - 1].activation
}

fn forward(model: &Model, x: &[f64]) -> Trace {
    let layers = model.layers();
    let depth = layers.len();
    let mut acts = Vec::with_capacity(depth + 1);
    let mut pre = Vec::with_capacity(depth);
    acts.push(x.to_vec());
    for layer in layers {
        let z = layer.pre_activation(&acts[acts.len() - 1]);
        let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
        pre.push(z);
        acts.push(a);
    }
    let mut dec_pre = vec![Vec::new(); depth];
    let mut dec_out = vec![Vec::new(); depth + 1];
    dec_out[depth] = acts[depth].clone();
    for l in (0..depth).rev() {
        let y = model.decoder_affine(l, &dec_out[l + 1]);
        let u = if l == 0 {
            y.clone()
        } else {
            let act = hidden_decoder_activation(model, l);
            y.iter().map(|&v| act.apply(v)).collect()
        };
        dec_pre[l] = y;
        dec_out[l] = u;
    }
    Trace {
        acts,
        pre,
        dec_pre,
        dec_out,
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct SampleStats {
    reconstruction: f64,
    code_l1: f64,
    active: usize,
}

impl SampleStats {
    fn add(&mut self, other: SampleStats) {
        self.reconstruction += other.reconstruction;
        self.code_l1 += other.code_l1;
        self.active += other.active;
    }
}

fn stats_of(trace: &Trace, x: &[f64]) -> SampleStats {
    let xhat = &trace.dec_out[0];
    let h = &trace.acts[trace.acts.len() - 1];
    SampleStats {
        reconstruction: 0.5 * crate::linalg::sq_dist(xhat, x),
        code_l1: h.iter().map(|v| libm::fabs(*v)).sum(),
        active: h.iter().filter(|&&v| v > 0.0).count(),
    }
}

/// Adds one sample's unregularized-by-λ₂ gradient into `acc`.
fn accumulate_sample(model: &Model, x: &[f64], l1_weight: f64, acc: &mut Gradient) -> SampleStats {
    let trace = forward(model, x);
    let layers = model.layers();
    let depth = layers.len();

    let mut delta: Vec<f64> = trace.dec_out[0].iter().zip(x).map(|(a, b)| a - b).collect();
    for l in 0..depth {
        if l > 0 {
            let act = hidden_decoder_activation(model, l);
            for ((d, &y), &u) in delta.iter_mut().zip(&trace.dec_pre[l]).zip(&trace.dec_out[l]) {
                *d *= act.derivative(y, u);
            }
        }
        let input = &trace.dec_out[l + 1];
        axpy(1.0, &delta, &mut acc.decoder_biases[l]);
        delta = match (model.decoder_weights(), acc.decoder_weights.as_mut()) {
            (Some(dw), Some(gdw)) => {
                gdw[l].add_outer(1.0, &delta, input);
                dw[l].matvec_t(&delta)
            }
            _ => {
                // tied: V_l = W_lᵀ, so ∂/∂W_l gains input · deltaᵀ
                acc.encoder_weights[l].add_outer(1.0, input, &delta);
                layers[l].weights.matvec(&delta)
            }
        };
    }

    let code = &trace.acts[depth];
    if l1_weight != 0.0 {
        for (d, &h) in delta.iter_mut().zip(code) {
            *d += l1_weight * sign(h);
        }
    }
    for l in (0..depth).rev() {
        let act = layers[l].activation;
        for ((d, &z), &a) in delta.iter_mut().zip(&trace.pre[l]).zip(&trace.acts[l + 1]) {
            *d *= act.derivative(z, a);
        }
        acc.encoder_weights[l].add_outer(1.0, &delta, &trace.acts[l]);
        axpy(1.0, &delta, &mut acc.encoder_biases[l]);
        if l > 0 {
            delta = layers[l].weights.matvec_t(&delta);
        }
    }
    stats_of(&trace, x)
}

fn check_batch(model: &Model, rows: &[&[f64]]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for r in rows {
        model.check_input(r)?;
    }
    Ok(())
}

fn finish_breakdown(model: &Model, cfg: &TrainConfig, sums: SampleStats, n: usize) -> LossBreakdown {
    let nf = n as f64;
    let reconstruction = sums.reconstruction / nf;
    let code_l1 = sums.code_l1 / nf;
    let weight_l2 = weight_sq_norm(model);
    LossBreakdown {
        reconstruction,
        code_l1,
        weight_l2,
        active_fraction: sums.active as f64 / (nf * model.code_dim() as f64),
        total: reconstruction + cfg.l1_weight * code_l1 + cfg.l2_weight * weight_l2,
    }
}

/// Gradient and loss over `rows` with a fixed chunked reduction order.
pub fn batch_gradient_with<E: Executor>(
    exec: &E,
    model: &Model,
    rows: &[&[f64]],
    cfg: &TrainConfig,
) -> Result<(Gradient, LossBreakdown)> {
    check_batch(model, rows)?;
    let n = rows.len();
    let partials = exec.map_indexed(chunk_count(n), |c| {
        let mut g = Gradient::zeros_for(model);
        let mut s = SampleStats::default();
        for i in chunk_range(c, n) {
            s.add(accumulate_sample(model, rows[i], cfg.l1_weight, &mut g));
        }
        (g, s)
    });
    let mut grad = Gradient::zeros_for(model);
    let mut sums = SampleStats::default();
    for (g, s) in &partials {
        grad.add_assign(g);
        sums.add(*s);
    }
    grad.scale(1.0 / n as f64);
    if cfg.l2_weight != 0.0 {
        let k = 2.0 * cfg.l2_weight;
        for (g, l) in grad.encoder_weights.iter_mut().zip(model.layers()) {
            axpy(k, l.weights.as_slice(), g.as_mut_slice());
        }
        if let (Some(gdw), Some(dw)) = (grad.decoder_weights.as_mut(), model.decoder_weights()) {
            for (g, w) in gdw.iter_mut().zip(dw) {
                axpy(k, w.as_slice(), g.as_mut_slice());
            }
        }
    }
    Ok((grad, finish_breakdown(model, cfg, sums, n)))
}

/// Loss components over `rows` without computing gradients.
pub fn evaluate_with<E: Executor>(
    exec: &E,
    model: &Model,
    rows: &[&[f64]],
    cfg: &TrainConfig,
) -> Result<LossBreakdown> {
    check_batch(model, rows)?;
    let n = rows.len();
    let partials = exec.map_indexed(chunk_count(n), |c| {
        let mut s = SampleStats::default();
        for i in chunk_range(c, n) {
            s.add(stats_of(&forward(model, rows[i]), rows[i]));
        }
        s
    });
    let mut sums = SampleStats::default();
    for s in partials {
        sums.add(s);
    }
    Ok(finish_breakdown(model, cfg, sums, n))
}

fn dataset_rows(data: &Dataset) -> Vec<&[f64]> {
    data.rows().collect()
}

pub fn loss_breakdown(model: &Model, batch: &Dataset, cfg: &TrainConfig) -> Result<LossBreakdown> {
    evaluate_with(&Sequential, model, &dataset_rows(batch), cfg)
}

/// Mean regularized reconstruction loss.
pub fn loss(model: &Model, batch: &Dataset, cfg: &TrainConfig) -> Result<f64> {
    Ok(loss_breakdown(model, batch, cfg)?.total)
}

/// Analytic gradient of [`loss`] with respect to every parameter.
pub fn grad(model: &Model, batch: &Dataset, cfg: &TrainConfig) -> Result<Gradient> {
    Ok(batch_gradient_with(&Sequential, model, &dataset_rows(batch), cfg)?.0)
}

/// Per-epoch history of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Full-data loss before the first update.
    pub initial_loss: f64,
    /// Full-data loss after each epoch.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
    /// Mean fraction of active code units after each epoch.
    pub sparsity_history: Vec<f64>,
}

fn output_bias_slot(model: &Model) -> usize {
    let depth = model.num_layers();
    2 * depth + if model.is_tied() { 0 } else { depth }
}

/// Minibatch SGD with a full reshuffle per epoch from `cfg.seed`.
pub fn sgd_train(model: &Model, data: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainReport)> {
    sgd_train_with(&Sequential, model, data, cfg, |_, _, _| {})
}

/// As [`sgd_train`], reporting `(epoch, model, breakdown)` after every epoch.
pub fn sgd_train_with<E, F>(
    exec: &E,
    model: &Model,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<(Model, TrainReport)>
where
    E: Executor,
    F: FnMut(usize, &Model, &LossBreakdown),
{
    cfg.validate()?;
    if data.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: data.dim(),
        });
    }
    let rows = dataset_rows(data);
    let mut model = model.clone();
    let initial = evaluate_with(exec, &model, &rows, cfg)?;
    if !initial.total.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            loss: initial.total,
        });
    }
    let mut report = TrainReport {
        initial_loss: initial.total,
        loss_history: Vec::with_capacity(cfg.epochs),
        final_loss: initial.total,
        sparsity_history: Vec::with_capacity(cfg.epochs),
    };
    if cfg.epochs == 0 {
        return Ok((model, report));
    }

    let frozen_slot = (!cfg.learn_output_bias).then(|| output_bias_slot(&model));
    let mut velocity: Option<Vec<Vec<f64>>> = (cfg.momentum > 0.0).then(|| {
        model
            .parameter_slices()
            .iter()
            .map(|s| vec![0.0; s.len()])
            .collect()
    });
    let mut rng = Rng::from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut batch: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for idx in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| rows[i]));
            let (g, b) = batch_gradient_with(exec, &model, &batch, cfg)?;
            if !b.total.is_finite() || !g.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: b.total,
                });
            }
            let lr = cfg.learning_rate;
            let params = model.parameter_slices_mut();
            for (slot, (p, gs)) in params.into_iter().zip(g.slices()).enumerate() {
                if Some(slot) == frozen_slot {
                    continue;
                }
                match velocity.as_mut() {
                    None => {
                        for (pi, gi) in p.iter_mut().zip(gs) {
                            *pi -= lr * gi;
                        }
                    }
                    Some(vel) => {
                        for ((pi, gi), vi) in p.iter_mut().zip(gs).zip(vel[slot].iter_mut()) {
                            *vi = cfg.momentum * *vi - lr * gi;
                            *pi += *vi;
                        }
                    }
                }
            }
        }
        let eval = evaluate_with(exec, &model, &rows, cfg)?;
        if !eval.total.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: eval.total,
            });
        }
        report.loss_history.push(eval.total);
        report.sparsity_history.push(eval.active_fraction);
        report.final_loss = eval.total;
        on_epoch(epoch, &model, &eval);
    }
    Ok((model, report))
}

/// Minimum distance from a kink, in units of the finite-difference step.
pub const KINK_MARGIN: f64 = 10.0;

/// Pre-activations within `KINK_MARGIN · step` of a non-differentiable point.
pub fn kink_sites(model: &Model, batch: &Dataset, cfg: &TrainConfig, step: f64) -> Result<Vec<KinkSite>> {
    let margin = KINK_MARGIN * step;
    let mut sites = Vec::new();
    let depth = model.num_layers();
    for (s, x) in batch.rows().enumerate() {
        model.check_input(x)?;
        let trace = forward(model, x);
        for (l, layer) in model.layers().iter().enumerate() {
            if layer.activation.has_kink() {
                for (j, &z) in trace.pre[l].iter().enumerate() {
                    if libm::fabs(z) < margin {
                        sites.push(KinkSite {
                            sample: s,
                            stage: format!("encoder[{l}]"),
                            unit: j,
                            value: z,
                        });
                    }
                }
            }
        }
        for l in 1..depth {
            if hidden_decoder_activation(model, l).has_kink() {
                for (j, &y) in trace.dec_pre[l].iter().enumerate() {
                    if libm::fabs(y) < margin {
                        sites.push(KinkSite {
                            sample: s,
                            stage: format!("decoder[{l}]"),
                            unit: j,
                            value: y,
                        });
                    }
                }
            }
        }
        // |h| is only kinked where the code can cross zero smoothly
        let last = model.layers()[depth - 1].activation;
        if cfg.l1_weight != 0.0 && last == Activation::Identity {
            for (j, &h) in trace.acts[depth].iter().enumerate() {
                if libm::fabs(h) < margin {
                    sites.push(KinkSite {
                        sample: s,
                        stage: String::from("code"),
                        unit: j,
                        value: h,
                    });
                }
            }
        }
    }
    Ok(sites)
}

/// Largest `|analytic − central difference| / max(1, |central difference|)`
/// over every parameter.
pub fn grad_check(model: &Model, batch: &Dataset, cfg: &TrainConfig, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let sites = kink_sites(model, batch, cfg, step)?;
    if !sites.is_empty() {
        return Err(Error::KinkProximity { units: sites });
    }
    let analytic = grad(model, batch, cfg)?;
    let analytic: Vec<Vec<f64>> = analytic.slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (slot, g) in analytic.iter().enumerate() {
        for (i, &ga) in g.iter().enumerate() {
            let orig = probe.parameter_slices()[slot][i];
            probe.parameter_slices_mut()[slot][i] = orig + step;
            let plus = loss(&probe, batch, cfg)?;
            probe.parameter_slices_mut()[slot][i] = orig - step;
            let minus = loss(&probe, batch, cfg)?;
            probe.parameter_slices_mut()[slot][i] = orig;
            let fd = (plus - minus) / (2.0 * step);
            worst = worst.max(libm::fabs(ga - fd) / libm::fabs(fd).max(1.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::Layer;

    fn column_model() -> Model {
        Model::tied_relu(Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), vec![0.0]).unwrap()
    }

    fn no_reg() -> TrainConfig {
        TrainConfig::default()
    }

    #[test]
    fn perfect_reconstruction_has_zero_loss_and_gradient() {
        let m = column_model();
        let d = Dataset::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(loss(&m, &d, &no_reg()).unwrap(), 0.0);
        assert_eq!(grad(&m, &d, &no_reg()).unwrap().norm(), 0.0);
    }

    #[test]
    fn orthogonal_input_costs_half_norm() {
        let d = Dataset::from_rows(&[[0.0, 1.0]]).unwrap();
        assert_eq!(loss(&column_model(), &d, &no_reg()).unwrap(), 0.5);
    }

    #[test]
    fn l1_adds_mean_code_norm() {
        let m = column_model();
        let d = Dataset::from_rows(&[[2.0, 0.0], [0.5, 1.0]]).unwrap();
        let base = loss(&m, &d, &no_reg()).unwrap();
        let cfg = TrainConfig {
            l1_weight: 0.3,
            ..no_reg()
        };
        let with = loss(&m, &d, &cfg).unwrap();
        assert_eq!(with, base + 0.3 * (2.0 + 0.5) / 2.0);
    }

    #[test]
    fn relu_kink_contributes_nothing() {
        // pre-activation exactly 0 for the only unit
        let m = column_model();
        let d = Dataset::from_rows(&[[0.0, 1.0]]).unwrap();
        let g = grad(&m, &d, &no_reg()).unwrap();
        assert_eq!(g.encoder_biases[0], vec![0.0]);
        assert_eq!(g.encoder_weights[0].as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn empty_batch_rejected() {
        let m = column_model();
        let rows: Vec<&[f64]> = Vec::new();
        assert!(matches!(
            batch_gradient_with(&Sequential, &m, &rows, &no_reg()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let m = column_model();
        let d = Dataset::from_rows(&[[1.0, 0.5], [0.2, 0.1]]).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..no_reg()
        };
        let (out, report) = sgd_train(&m, &d, &cfg).unwrap();
        assert_eq!(out, m);
        assert!(report.loss_history.is_empty());
        assert_eq!(report.final_loss, report.initial_loss);
    }

    #[test]
    fn divergence_names_epoch() {
        let l = Layer::new(Matrix::from_rows(&[[1.0, 1.0]]).unwrap(), vec![0.0], Activation::Identity).unwrap();
        let m = Model::tied(vec![l]).unwrap();
        let d = Dataset::from_rows(&[[100.0, 100.0]]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 10.0,
            epochs: 50,
            batch_size: 1,
            ..no_reg()
        };
        match sgd_train(&m, &d, &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn kink_precondition_lists_units() {
        let m = column_model();
        let d = Dataset::from_rows(&[[1e-9, 1.0], [1.0, 0.0]]).unwrap();
        match grad_check(&m, &d, &no_reg(), 1e-5) {
            Err(Error::KinkProximity { units }) => {
                assert_eq!(units.len(), 1);
                assert_eq!(units[0].sample, 0);
            }
            other => panic!("expected kink rejection, got {other:?}"),
        }
    }

    #[test]
    fn frozen_output_bias_stays_put() {
        let mut m = column_model();
        m.decoder_biases_mut()[0] = vec![0.25, -0.5];
        let d = Dataset::from_rows(&[[1.0, 0.5], [0.3, 0.9], [0.7, 0.2]]).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            ..no_reg()
        };
        let (out, _) = sgd_train(&m, &d, &cfg).unwrap();
        assert_eq!(out.decoder_bias(), &[0.25, -0.5]);
        let cfg = TrainConfig {
            learn_output_bias: true,
            ..cfg
        };
        let (out, _) = sgd_train(&m, &d, &cfg).unwrap();
        assert_ne!(out.decoder_bias(), &[0.25, -0.5]);
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = [
            TrainConfig { learning_rate: 0.0, ..no_reg() },
            TrainConfig { batch_size: 0, ..no_reg() },
            TrainConfig { l1_weight: -1.0, ..no_reg() },
            TrainConfig { momentum: 1.0, ..no_reg() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
