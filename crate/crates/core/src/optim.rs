//! Training: gradient steps on the encoder/decoder, gradient-then-proximal
//! steps on the lag matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::TimeSeriesData;
use crate::error::{NkdcdError, Result};
use crate::loss::{self, LossBreakdown, PenaltyKind, Reduction};
use crate::model::{Activation, LagStack, ModelVars, NkdcdModel};
use crate::numgrad::{Gradients, Matrix, Tape};

/// Loss magnitude treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Which group norm sits in the denominator of the single-round shrinkage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProxNorm {
    /// Norm of the post-gradient value being shrunk (the proximal operator proper).
    #[default]
    Intermediate,
    /// Norm of the iterate before the gradient step.
    PreGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Penalty weight.
    pub lambda: f64,
    /// Learning rate.
    pub tau: f64,
    /// Maximum lag `L`.
    pub max_lag: usize,
    /// Lift dimension `N`.
    pub lift_dim: usize,
    /// Width parameter `h` of the encoder/decoder.
    pub hidden: usize,
    /// Prediction targets per step.
    pub batch: usize,
    pub penalty: PenaltyKind,
    pub optimizer: OptimizerKind,
    pub adam: AdamParams,
    pub activation: Activation,
    pub use_bias: bool,
    pub reduction: Reduction,
    pub prox_norm: ProxNorm,
    /// Half-width of the uniform lag-matrix initialisation.
    pub lag_init_scale: f64,
    pub max_epochs: usize,
    /// Average smooth loss per series per step below which convergence may be declared.
    pub stop_threshold: f64,
    /// Epochs without relative improvement before stopping.
    pub patience: usize,
    /// Relative decrease that counts as an improvement.
    pub min_rel_decrease: f64,
    /// Score threshold used to read an adjacency off the trained lags.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.05,
            tau: 5e-4,
            max_lag: 5,
            lift_dim: 15,
            hidden: 16,
            batch: 500,
            penalty: PenaltyKind::Ilg,
            optimizer: OptimizerKind::Sgd,
            adam: AdamParams::default(),
            activation: Activation::LeakyRelu,
            use_bias: true,
            reduction: Reduction::Mean,
            prox_norm: ProxNorm::Intermediate,
            lag_init_scale: 0.01,
            max_epochs: 1000,
            stop_threshold: 0.9,
            patience: 50,
            min_rel_decrease: 1e-4,
            epsilon: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Settings for the sparse VAR(3) penalty comparison (linear networks).
    ///
    /// The 0.9 loss threshold is never reached on this data, so only the
    /// plateau rule stops training.
    pub fn var3(penalty: PenaltyKind) -> Self {
        TrainConfig {
            lambda: if penalty == PenaltyKind::Hlg { 1e-4 } else { 2e-2 },
            tau: 5e-2,
            max_lag: 5,
            lift_dim: 10,
            hidden: 4,
            batch: 500,
            penalty,
            activation: Activation::Linear,
            stop_threshold: f64::MAX,
            ..TrainConfig::default()
        }
    }

    /// Settings for Lorenz-96 with `n = 20`. With per-entry loss scaling,
    /// `tau = 5e-4, lambda = 0.05` needs thousands of epochs at `F = 10` and
    /// zeroes every block at `F = 40`, hence the larger step and lighter penalty.
    pub fn lorenz96(penalty: PenaltyKind) -> Self {
        TrainConfig {
            lambda: 0.02,
            tau: 5e-3,
            max_lag: 5,
            lift_dim: 15,
            hidden: 16,
            batch: 500,
            penalty,
            activation: Activation::LeakyRelu,
            max_epochs: 600,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NkdcdError::InvalidConfig(msg));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau must satisfy 0 < tau <= 1, got {}", self.tau));
        }
        if self.max_lag == 0 {
            return bad("max_lag must be >= 1".into());
        }
        if self.lift_dim == 0 {
            return bad("lift_dim must be >= 1".into());
        }
        if self.hidden < 2 || self.hidden % 2 != 0 {
            return bad(format!("hidden must be even and >= 2, got {}", self.hidden));
        }
        if self.batch == 0 {
            return bad("batch must be >= 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.lag_init_scale < 0.0 || !self.lag_init_scale.is_finite() {
            return bad("lag_init_scale must be finite and >= 0".into());
        }
        if self.epsilon < 0.0 {
            return bad("epsilon must be >= 0".into());
        }
        let AdamParams { beta1, beta2, eps } = self.adam;
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 {
            return bad("adam betas must lie in [0, 1) and eps must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxEpochs,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Smooth terms summed over the epoch's batches, penalty at the end of the epoch.
    pub loss: LossBreakdown,
    pub average_j1: f64,
    /// Largest change of `lambda * Omega` across any single prox step this epoch.
    pub max_prox_penalty_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub history: Vec<EpochRecord>,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<&LossBreakdown> {
        self.history.last().map(|r| &r.loss)
    }
}

/// Gradients of every trainable tensor, in [`ModelVars`] order.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub encoder: Vec<Matrix>,
    pub decoder: Vec<Matrix>,
    pub lags: Vec<Matrix>,
}

impl ParamGrads {
    pub fn collect(tape: &Tape, vars: &ModelVars, mut grads: Gradients) -> Self {
        let mut net = |layers: &[(crate::numgrad::Var, Option<crate::numgrad::Var>)]| {
            let mut out = Vec::new();
            for &(w, b) in layers {
                out.push(grads.take(tape, w));
                if let Some(b) = b {
                    out.push(grads.take(tape, b));
                }
            }
            out
        };
        let encoder = net(&vars.encoder);
        let decoder = net(&vars.decoder);
        let lags = vars.lags.iter().map(|&w| grads.take(tape, w)).collect();
        ParamGrads { encoder, decoder, lags }
    }

    pub fn is_finite(&self) -> bool {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .chain(&self.lags)
            .all(Matrix::is_finite)
    }
}

/// Plain gradient step on the encoder and decoder only.
pub fn sgd_step_encoder_decoder(model: &mut NkdcdModel, grads: &ParamGrads, tau: f64) -> Result<()> {
    if !grads.encoder.iter().all(Matrix::is_finite) {
        return Err(NkdcdError::NonFiniteGradient("encoder"));
    }
    if !grads.decoder.iter().all(Matrix::is_finite) {
        return Err(NkdcdError::NonFiniteGradient("decoder"));
    }
    for (p, g) in model.encoder.0.params_mut().zip(&grads.encoder) {
        p.axpy(-tau, g)?;
    }
    for (p, g) in model.decoder.0.params_mut().zip(&grads.decoder) {
        p.axpy(-tau, g)?;
    }
    Ok(())
}

fn shrink_factor(threshold: f64, norm: f64) -> f64 {
    if threshold == 0.0 {
        1.0
    } else if norm <= threshold {
        0.0
    } else {
        1.0 - threshold / norm
    }
}

fn prox_ulg_in_place(w: &mut LagStack, threshold: f64, reference: Option<&LagStack>) {
    let n = w.n_series();
    let max_lag = w.max_lag();
    let src = reference.unwrap_or(w);
    let factors: Vec<f64> = (0..n * n)
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            let sq: f64 = (0..max_lag).map(|l| src.block_sq_norm(l, i, j)).sum();
            shrink_factor(threshold, sq.sqrt())
        })
        .collect();
    for (ij, &f) in factors.iter().enumerate() {
        if f != 1.0 {
            for l in 0..max_lag {
                w.scale_block(l, ij / n, ij % n, f);
            }
        }
    }
}

fn prox_ilg_in_place(w: &mut LagStack, threshold: f64, reference: Option<&LagStack>) {
    let n = w.n_series();
    for l in 0..w.max_lag() {
        for i in 0..n {
            for j in 0..n {
                let norm = reference.unwrap_or(w).block_norm(l, i, j);
                let f = shrink_factor(threshold, norm);
                if f != 1.0 {
                    w.scale_block(l, i, j, f);
                }
            }
        }
    }
}

fn prox_hlg_in_place(w: &mut LagStack, threshold: f64) {
    let n = w.n_series();
    let max_lag = w.max_lag();
    for start in 0..max_lag {
        for i in 0..n {
            for j in 0..n {
                let sq: f64 = (start..max_lag).map(|l| w.block_sq_norm(l, i, j)).sum();
                let f = shrink_factor(threshold, sq.sqrt());
                if f != 1.0 {
                    for l in start..max_lag {
                        w.scale_block(l, i, j, f);
                    }
                }
            }
        }
    }
}

/// Uniform-lag shrinkage: each pair's `L` blocks scaled by `(1 - t/|group|)_+`.
pub fn prox_ulg(w_tilde: &LagStack, threshold: f64) -> LagStack {
    let mut w = w_tilde.clone();
    prox_ulg_in_place(&mut w, threshold, None);
    w
}

/// Hierarchical-lag shrinkage: `L` sequential rounds, round `l` shrinking the
/// suffix `{W_l, ..., W_L}` by its current joint norm.
pub fn prox_hlg(w_tilde: &LagStack, threshold: f64) -> LagStack {
    let mut w = w_tilde.clone();
    prox_hlg_in_place(&mut w, threshold);
    w
}

/// Independent-lag shrinkage of every block.
pub fn prox_ilg(w_tilde: &LagStack, threshold: f64) -> LagStack {
    let mut w = w_tilde.clone();
    prox_ilg_in_place(&mut w, threshold, None);
    w
}

pub fn prox(w_tilde: &LagStack, kind: PenaltyKind, threshold: f64) -> LagStack {
    match kind {
        PenaltyKind::Ulg => prox_ulg(w_tilde, threshold),
        PenaltyKind::Hlg => prox_hlg(w_tilde, threshold),
        PenaltyKind::Ilg => prox_ilg(w_tilde, threshold),
    }
}

/// In-place proximal step. With `reference`, single-round kinds take their group
/// norms from it instead of from `w` (the hierarchical kind always uses its own
/// round values).
pub fn prox_in_place(w: &mut LagStack, kind: PenaltyKind, threshold: f64, reference: Option<&LagStack>) {
    match kind {
        PenaltyKind::Ulg => prox_ulg_in_place(w, threshold, reference),
        PenaltyKind::Hlg => prox_hlg_in_place(w, threshold),
        PenaltyKind::Ilg => prox_ilg_in_place(w, threshold, reference),
    }
}

/// Adam moment estimates for a list of tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    params: AdamParams,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Adam {
    pub fn new(params: AdamParams, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v): (Vec<_>, Vec<_>) = shapes
            .into_iter()
            .map(|(r, c)| (Matrix::zeros(r, c), Matrix::zeros(r, c)))
            .unzip();
        Adam { params, m, v, t: 0 }
    }

    /// Advances the step counter; call once per optimisation step.
    pub fn tick(&mut self) {
        self.t += 1;
    }

    pub fn update(&mut self, slot: usize, param: &mut Matrix, grad: &Matrix, lr: f64) {
        let AdamParams { beta1, beta2, eps } = self.params;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        let m = self.m[slot].data_mut();
        let v = self.v[slot].data_mut();
        for (((p, &g), mk), vk) in param.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
            *mk = beta1 * *mk + (1.0 - beta1) * g;
            *vk = beta2 * *vk + (1.0 - beta2) * g * g;
            let mhat = *mk / bc1;
            let vhat = *vk / bc2;
            *p -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
}

fn model_shapes(model: &NkdcdModel) -> Vec<(usize, usize)> {
    let net = |mlp: &crate::model::Mlp| {
        mlp.layers
            .iter()
            .flat_map(|l| std::iter::once(l.weight.shape()).chain(l.bias.as_ref().map(Matrix::shape)))
            .collect::<Vec<_>>()
    };
    let mut shapes = net(&model.encoder.0);
    shapes.extend(net(&model.decoder.0));
    shapes.extend(model.lags.lags().iter().map(Matrix::shape));
    shapes
}

/// One full parameter update from a batch's gradients: gradient (or Adam) step
/// on everything, then the proximal map on the lag matrices. Returns the change
/// of `lambda * Omega` caused by the proximal map alone.
fn apply_update(
    model: &mut NkdcdModel,
    grads: &ParamGrads,
    cfg: &TrainConfig,
    adam: Option<&mut Adam>,
) -> Result<f64> {
    if !grads.is_finite() {
        return Err(NkdcdError::NonFiniteGradient("lag matrices"));
    }
    let reference = (cfg.prox_norm == ProxNorm::PreGradient).then(|| model.lags.clone());
    match adam {
        None => {
            sgd_step_encoder_decoder(model, grads, cfg.tau)?;
            for (l, g) in grads.lags.iter().enumerate() {
                model.lags.lag_mut(l).axpy(-cfg.tau, g)?;
            }
        }
        Some(adam) => {
            adam.tick();
            let mut slot = 0;
            for (p, g) in model.encoder.0.params_mut().zip(&grads.encoder) {
                adam.update(slot, p, g, cfg.tau);
                slot += 1;
            }
            for (p, g) in model.decoder.0.params_mut().zip(&grads.decoder) {
                adam.update(slot, p, g, cfg.tau);
                slot += 1;
            }
            for (l, g) in grads.lags.iter().enumerate() {
                adam.update(slot, model.lags.lag_mut(l), g, cfg.tau);
                slot += 1;
            }
        }
    }
    let before = cfg.lambda * loss::penalty(&model.lags, cfg.penalty);
    prox_in_place(&mut model.lags, cfg.penalty, cfg.tau * cfg.lambda, reference.as_ref());
    let after = cfg.lambda * loss::penalty(&model.lags, cfg.penalty);
    Ok(after - before)
}

/// Trains a model; see [`train_with_observer`].
pub fn train(data: &TimeSeriesData, cfg: &TrainConfig) -> Result<(NkdcdModel, TrainReport)> {
    train_with_observer(data, cfg, |_, _| {})
}

/// Trains a fresh model from `cfg.seed`, calling `observer` after every epoch.
///
/// Each epoch shuffles the prediction targets `L..T` and walks them in chunks
/// of `cfg.batch`; the first chunk also carries the reconstruction rows
/// `0..L`, so one epoch touches every term of the objective exactly once.
pub fn train_with_observer(
    data: &TimeSeriesData,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord, &NkdcdModel),
) -> Result<(NkdcdModel, TrainReport)> {
    cfg.validate()?;
    let x = &data.values;
    let (t_len, n) = x.shape();
    if t_len <= cfg.max_lag {
        return Err(NkdcdError::InsufficientData {
            len: t_len,
            max_lag: cfg.max_lag,
        });
    }
    if !x.is_finite() {
        return Err(NkdcdError::Domain("training data contains non-finite values".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = NkdcdModel::random(
        n,
        cfg.lift_dim,
        cfg.hidden,
        cfg.max_lag,
        cfg.activation,
        cfg.use_bias,
        cfg.lag_init_scale,
        &mut rng,
    )?;
    let mut adam = (cfg.optimizer == OptimizerKind::Adam).then(|| Adam::new(cfg.adam, model_shapes(&model)));

    let mut targets: Vec<usize> = (cfg.max_lag..t_len).collect();
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        targets.shuffle(&mut rng);
        let mut parts = [0.0f64; 4];
        let mut max_change = f64::NEG_INFINITY;
        for (k, chunk) in targets.chunks(cfg.batch).enumerate() {
            let mut recon_rows = chunk.to_vec();
            if k == 0 {
                recon_rows.extend(0..cfg.max_lag);
            }
            let mut tape = Tape::new();
            let vars = model.register(&mut tape);
            let batch = loss::j1_on_tape(&mut tape, &model, &vars, x, chunk, &recon_rows, cfg.reduction)?;
            let b = batch.breakdown(&tape);
            if !b.j1().is_finite() || b.j1() > DIVERGENCE_LIMIT {
                return Err(NkdcdError::Diverged { epoch, loss: b.j1() });
            }
            parts[0] += b.recon_autoencoder;
            parts[1] += b.lifted_var;
            parts[2] += b.nar_base;
            parts[3] += b.nar_autoencoded;
            let grads = ParamGrads::collect(&tape, &vars, tape.backward(batch.objective)?);
            let change = apply_update(&mut model, &grads, cfg, adam.as_mut()).map_err(|e| match e {
                NkdcdError::NonFiniteGradient(_) => NkdcdError::Diverged {
                    epoch,
                    loss: f64::NAN,
                },
                other => other,
            })?;
            max_change = max_change.max(change);
        }

        let pen = cfg.lambda * loss::penalty(&model.lags, cfg.penalty);
        let breakdown = LossBreakdown::from_parts(parts[0], parts[1], parts[2], parts[3], pen);
        if !breakdown.total.is_finite() || breakdown.total > DIVERGENCE_LIMIT {
            return Err(NkdcdError::Diverged {
                epoch,
                loss: breakdown.total,
            });
        }
        let average_j1 = breakdown.average_j1(n, t_len);
        let record = EpochRecord {
            epoch,
            loss: breakdown,
            average_j1,
            max_prox_penalty_change: max_change,
        };
        observer(&record, &model);
        history.push(record);

        if average_j1 < best * (1.0 - cfg.min_rel_decrease) {
            best = average_j1;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if average_j1 < cfg.stop_threshold && since_best >= cfg.patience {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok((
        model,
        TrainReport {
            epochs_run: history.len(),
            history,
            stop_reason,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_stack(values: &[f64]) -> LagStack {
        LagStack::from_matrices(1, 1, values.iter().map(|&v| Matrix::scalar(v)).collect()).unwrap()
    }

    fn values(s: &LagStack) -> Vec<f64> {
        s.lags().iter().map(|m| m.get(0, 0)).collect()
    }

    #[test]
    fn ulg_full_shrinkage_and_scaling() {
        let s = scalar_stack(&[0.3, 0.4]);
        assert_eq!(values(&prox_ulg(&s, 0.5)), vec![0.0, 0.0]);
        assert_eq!(values(&prox_ulg(&s, 0.6)), vec![0.0, 0.0]);
        let s = scalar_stack(&[3.0, 4.0]);
        let out = values(&prox_ulg(&s, 1.0));
        assert!((out[0] - 2.4).abs() < 1e-15 && (out[1] - 3.2).abs() < 1e-15);
        assert_eq!(prox_ulg(&s, 0.0), s);
    }

    #[test]
    fn hlg_two_round_example() {
        let s = scalar_stack(&[3.0, 4.0]);
        let out = values(&prox_hlg(&s, 1.0));
        assert!((out[0] - 2.4).abs() < 1e-12, "{out:?}");
        assert!((out[1] - 2.2).abs() < 1e-12, "{out:?}");
        assert_eq!(prox_hlg(&s, 0.0), s);
    }

    #[test]
    fn ilg_is_independent_across_lags() {
        let s = scalar_stack(&[0.5, 2.0]);
        let out = values(&prox_ilg(&s, 1.0));
        assert_eq!(out, vec![0.0, 1.0]);
        let z = scalar_stack(&[0.0, 0.0]);
        assert_eq!(prox_ilg(&z, 1.0), z);
    }

    #[test]
    fn pre_gradient_reference_changes_denominator() {
        let mut w = scalar_stack(&[2.0]);
        let reference = scalar_stack(&[4.0]);
        prox_in_place(&mut w, PenaltyKind::Ulg, 1.0, Some(&reference));
        // factor (1 - 1/4) applied to the intermediate value 2
        assert_eq!(values(&w), vec![1.5]);
    }

    #[test]
    fn sgd_step_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = NkdcdModel::random(2, 3, 4, 1, Activation::LeakyRelu, true, 0.01, &mut rng).unwrap();
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let one = tape_scalar(&mut tape);
        let g = tape.backward(one).unwrap();
        let zero = ParamGrads::collect(&tape, &vars, g);
        let mut m2 = model.clone();
        sgd_step_encoder_decoder(&mut m2, &zero, 0.5).unwrap();
        assert_eq!(m2, model);

        let mut grads = zero.clone();
        grads.encoder.iter_mut().for_each(|g| g.data_mut().iter_mut().for_each(|v| *v = 1.0));
        let mut m3 = model.clone();
        sgd_step_encoder_decoder(&mut m3, &grads, 0.0).unwrap();
        assert_eq!(m3, model);

        // w = 1, g = 2, tau = 0.1 -> 0.8
        let mut m4 = model.clone();
        m4.encoder.0.layers[0].weight.set(0, 0, 1.0);
        let mut g = zero.clone();
        g.encoder[0].set(0, 0, 2.0);
        sgd_step_encoder_decoder(&mut m4, &g, 0.1).unwrap();
        assert!((m4.encoder.0.layers[0].weight.get(0, 0) - 0.8).abs() < 1e-15);
        assert_eq!(m4.lags, model.lags);

        let mut bad = zero.clone();
        bad.decoder[0].set(0, 0, f64::NAN);
        assert!(sgd_step_encoder_decoder(&mut m4, &bad, 0.1).is_err());
    }

    fn tape_scalar(tape: &mut Tape) -> crate::numgrad::Var {
        let c = tape.constant(Matrix::scalar(1.0));
        tape.squared_norm(c)
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let cfg = TrainConfig {
            tau: 1.5,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            lambda: 0.0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            hidden: 5,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
