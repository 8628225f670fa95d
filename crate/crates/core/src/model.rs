//! Element-wise lifting encoder, block-structured lag matrices in the lifted
//! space, and the element-wise projection decoder.
//!
//! Every scalar series value is lifted by the *same* encoder to an
//! `N`-dimensional vector; the lifted state at time `t` is the concatenation of
//! the `n` per-series blocks. Lag matrices act on that concatenation, so block
//! `(i, j)` of lag `l` couples the lifted source series `j` to the lifted
//! target series `i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NkdcdError, Result};
use crate::numgrad::{affine_forward, leaky_relu, Matrix, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    LeakyRelu,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Option<Matrix>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, use_bias: bool, rng: &mut R) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weight = Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-a..=a));
        Dense {
            weight,
            bias: use_bias.then(|| Matrix::zeros(1, fan_out)),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize, use_bias: bool) -> Self {
        Dense {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: use_bias.then(|| Matrix::zeros(1, fan_out)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Feed-forward stack; the activation is applied after every layer but the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

impl Mlp {
    fn from_widths<R: Rng + ?Sized>(widths: &[usize], activation: Activation, use_bias: bool, rng: &mut R) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], use_bias, rng))
            .collect();
        Mlp { layers, activation }
    }

    fn zeros(widths: &[usize], activation: Activation, use_bias: bool) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1], use_bias))
            .collect();
        Mlp { layers, activation }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, Dense::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::out_dim)
    }

    /// Applies the network to every row of `x`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            h = affine_forward(&h, &layer.weight, layer.bias.as_ref())?;
            if k < last && self.activation == Activation::LeakyRelu {
                h = leaky_relu(&h);
            }
        }
        Ok(h)
    }

    fn register(&self, tape: &mut Tape) -> Vec<(Var, Option<Var>)> {
        self.layers
            .iter()
            .map(|l| (tape.param(l.weight.clone()), l.bias.clone().map(|b| tape.param(b))))
            .collect()
    }

    fn forward_tape(&self, tape: &mut Tape, vars: &[(Var, Option<Var>)], x: Var) -> Result<Var> {
        let last = vars.len() - 1;
        let mut h = x;
        for (k, &(w, b)) in vars.iter().enumerate() {
            h = tape.affine(h, w, b)?;
            if k < last && self.activation == Activation::LeakyRelu {
                h = tape.leaky_relu(h);
            }
        }
        Ok(h)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.as_ref().map_or(0, Matrix::len))
            .sum()
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.layers
            .iter_mut()
            .flat_map(|l| std::iter::once(&mut l.weight).chain(l.bias.as_mut()))
    }
}

fn check_width(hidden: usize, lift_dim: usize) -> Result<()> {
    if hidden < 2 || hidden % 2 != 0 {
        return Err(NkdcdError::InvalidConfig(format!(
            "hidden width h must be even and at least 2, got {hidden}"
        )));
    }
    if lift_dim == 0 {
        return Err(NkdcdError::InvalidConfig("lift dimension N must be at least 1".into()));
    }
    Ok(())
}

/// Scalar-to-`N` lifting network with layer shapes `1 x h/2`, `h/2 x h`, `h x N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderNet(pub Mlp);

impl EncoderNet {
    pub fn new<R: Rng + ?Sized>(
        hidden: usize,
        lift_dim: usize,
        activation: Activation,
        use_bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        check_width(hidden, lift_dim)?;
        Ok(EncoderNet(Mlp::from_widths(
            &[1, hidden / 2, hidden, lift_dim],
            activation,
            use_bias,
            rng,
        )))
    }

    pub fn zeros(hidden: usize, lift_dim: usize, activation: Activation, use_bias: bool) -> Result<Self> {
        check_width(hidden, lift_dim)?;
        Ok(EncoderNet(Mlp::zeros(&[1, hidden / 2, hidden, lift_dim], activation, use_bias)))
    }

    pub fn lift_dim(&self) -> usize {
        self.0.out_dim()
    }

    /// Lifts a `T x n` panel to `T x (n N)`.
    pub fn lift_panel(&self, x: &Matrix) -> Result<Matrix> {
        let (t, n) = x.shape();
        let column = x.clone().reshape(t * n, 1)?;
        self.0.forward(&column)?.reshape(t, n * self.lift_dim())
    }
}

/// `N`-to-scalar projection network with layer shapes `N x h`, `h x h/2`, `h/2 x 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderNet(pub Mlp);

impl DecoderNet {
    pub fn new<R: Rng + ?Sized>(
        hidden: usize,
        lift_dim: usize,
        activation: Activation,
        use_bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        check_width(hidden, lift_dim)?;
        Ok(DecoderNet(Mlp::from_widths(
            &[lift_dim, hidden, hidden / 2, 1],
            activation,
            use_bias,
            rng,
        )))
    }

    pub fn zeros(hidden: usize, lift_dim: usize, activation: Activation, use_bias: bool) -> Result<Self> {
        check_width(hidden, lift_dim)?;
        Ok(DecoderNet(Mlp::zeros(&[lift_dim, hidden, hidden / 2, 1], activation, use_bias)))
    }

    pub fn lift_dim(&self) -> usize {
        self.0.in_dim()
    }

    /// Projects a `T x (n N)` lifted panel back to `T x n`.
    pub fn project_panel(&self, lifted: &Matrix) -> Result<Matrix> {
        let (t, nn) = lifted.shape();
        let lift_dim = self.lift_dim();
        if nn % lift_dim != 0 {
            return Err(NkdcdError::Dimension(format!(
                "lifted width {nn} is not a multiple of N = {lift_dim}"
            )));
        }
        let n = nn / lift_dim;
        let blocks = lifted.clone().reshape(t * n, lift_dim)?;
        self.0.forward(&blocks)?.reshape(t, n)
    }
}

/// `L` lag matrices of shape `(n N) x (n N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagStack {
    n: usize,
    block: usize,
    lags: Vec<Matrix>,
}

impl LagStack {
    pub fn zeros(n: usize, block: usize, max_lag: usize) -> Result<Self> {
        if n == 0 || block == 0 || max_lag == 0 {
            return Err(NkdcdError::Dimension(format!(
                "lag stack needs n, N, L >= 1 (got n={n}, N={block}, L={max_lag})"
            )));
        }
        let d = n * block;
        Ok(LagStack {
            n,
            block,
            lags: vec![Matrix::zeros(d, d); max_lag],
        })
    }

    pub fn random_uniform<R: Rng + ?Sized>(n: usize, block: usize, max_lag: usize, scale: f64, rng: &mut R) -> Result<Self> {
        let mut s = LagStack::zeros(n, block, max_lag)?;
        for m in &mut s.lags {
            m.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-scale..=scale));
        }
        Ok(s)
    }

    pub fn from_matrices(n: usize, block: usize, lags: Vec<Matrix>) -> Result<Self> {
        let mut s = LagStack::zeros(n, block, lags.len().max(1))?;
        if lags.is_empty() {
            return Err(NkdcdError::Dimension("lag stack needs at least one lag".into()));
        }
        let d = n * block;
        for (l, m) in lags.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(NkdcdError::shape("lag matrix", m.shape(), (d, d)));
            }
            if !m.is_finite() {
                return Err(NkdcdError::Dimension(format!("lag {} contains non-finite values", l + 1)));
            }
        }
        s.lags = lags;
        Ok(s)
    }

    /// Number of series `n`.
    pub fn n_series(&self) -> usize {
        self.n
    }

    /// Block side `N`.
    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn max_lag(&self) -> usize {
        self.lags.len()
    }

    pub fn dim(&self) -> usize {
        self.n * self.block
    }

    /// Lag matrix `l`, zero-based (index 0 is lag 1).
    pub fn lag(&self, l: usize) -> &Matrix {
        &self.lags[l]
    }

    pub fn lag_mut(&mut self, l: usize) -> &mut Matrix {
        &mut self.lags[l]
    }

    pub fn lags(&self) -> &[Matrix] {
        &self.lags
    }

    pub fn into_lags(self) -> Vec<Matrix> {
        self.lags
    }

    /// Copy of block `(i, j)` of lag `l` (all zero-based).
    pub fn block(&self, l: usize, i: usize, j: usize) -> Matrix {
        let b = self.block;
        let m = &self.lags[l];
        Matrix::from_fn(b, b, |r, c| m.get(i * b + r, j * b + c))
    }

    pub fn set_block(&mut self, l: usize, i: usize, j: usize, value: &Matrix) -> Result<()> {
        let b = self.block;
        if value.shape() != (b, b) {
            return Err(NkdcdError::shape("set_block", value.shape(), (b, b)));
        }
        let m = &mut self.lags[l];
        for r in 0..b {
            for c in 0..b {
                m.set(i * b + r, j * b + c, value.get(r, c));
            }
        }
        Ok(())
    }

    pub fn block_sq_norm(&self, l: usize, i: usize, j: usize) -> f64 {
        let b = self.block;
        let m = &self.lags[l];
        (0..b)
            .map(|r| {
                let row = m.row(i * b + r);
                row[j * b..(j + 1) * b].iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    pub fn block_norm(&self, l: usize, i: usize, j: usize) -> f64 {
        self.block_sq_norm(l, i, j).sqrt()
    }

    pub fn scale_block(&mut self, l: usize, i: usize, j: usize, factor: f64) {
        let b = self.block;
        let m = &mut self.lags[l];
        for r in 0..b {
            let row = m.row_mut(i * b + r);
            row[j * b..(j + 1) * b].iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn scale(&self, c: f64) -> LagStack {
        LagStack {
            n: self.n,
            block: self.block,
            lags: self.lags.iter().map(|m| m.scale(c)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lags.iter().all(Matrix::is_finite)
    }

    /// Lifted one-step prediction for each target row `t`:
    /// `sum_l W_l * lifted[t - l]`.
    pub fn predict_rows(&self, lifted: &Matrix, targets: &[usize]) -> Result<Matrix> {
        if lifted.cols() != self.dim() {
            return Err(NkdcdError::shape("predict_rows", lifted.shape(), (lifted.rows(), self.dim())));
        }
        let mut out = Matrix::zeros(targets.len(), self.dim());
        for (l, w) in self.lags.iter().enumerate() {
            let idx = shifted(targets, l + 1)?;
            let past = lifted.gather_rows(&idx)?;
            out.add_assign(&past.matmul_nt(w)?)?;
        }
        Ok(out)
    }
}

pub(crate) fn shifted(targets: &[usize], lag: usize) -> Result<Vec<usize>> {
    targets
        .iter()
        .map(|&t| {
            t.checked_sub(lag).ok_or(NkdcdError::InsufficientHistory {
                needed: lag,
                got: t,
            })
        })
        .collect()
}

/// Per-time trajectories of a full forward pass.
///
/// `lifted` and `recon` have one row per time step `t = 0..T`; `lifted_pred`
/// and `pred` have one row per predicted step `t = L..T` (row `k` is time
/// `L + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    pub lifted: Matrix,
    pub lifted_pred: Matrix,
    pub pred: Matrix,
    pub recon: Matrix,
    pub max_lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NkdcdModel {
    pub encoder: EncoderNet,
    pub decoder: DecoderNet,
    pub lags: LagStack,
}

/// Tape handles for every trainable tensor of a model.
#[derive(Debug, Clone)]
pub struct ModelVars {
    pub encoder: Vec<(Var, Option<Var>)>,
    pub decoder: Vec<(Var, Option<Var>)>,
    pub lags: Vec<Var>,
}

impl NkdcdModel {
    pub fn new(encoder: EncoderNet, decoder: DecoderNet, lags: LagStack) -> Result<Self> {
        if encoder.lift_dim() != lags.block_size() || decoder.lift_dim() != lags.block_size() {
            return Err(NkdcdError::Dimension(format!(
                "encoder N={}, decoder N={}, lag block N={} disagree",
                encoder.lift_dim(),
                decoder.lift_dim(),
                lags.block_size()
            )));
        }
        if encoder.0.in_dim() != 1 || decoder.0.out_dim() != 1 {
            return Err(NkdcdError::Dimension("encoder input and decoder output must be scalar".into()));
        }
        Ok(NkdcdModel { encoder, decoder, lags })
    }

    /// Fresh model: Glorot networks, lag entries uniform in `[-lag_scale, lag_scale]`.
    #[allow(clippy::too_many_arguments)]
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        lift_dim: usize,
        hidden: usize,
        max_lag: usize,
        activation: Activation,
        use_bias: bool,
        lag_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let encoder = EncoderNet::new(hidden, lift_dim, activation, use_bias, rng)?;
        let decoder = DecoderNet::new(hidden, lift_dim, activation, use_bias, rng)?;
        let lags = LagStack::random_uniform(n, lift_dim, max_lag, lag_scale, rng)?;
        NkdcdModel::new(encoder, decoder, lags)
    }

    pub fn n_series(&self) -> usize {
        self.lags.n_series()
    }

    pub fn lift_dim(&self) -> usize {
        self.lags.block_size()
    }

    pub fn max_lag(&self) -> usize {
        self.lags.max_lag()
    }

    /// Lifts one observation vector of length `n` to length `n N`.
    pub fn lift(&self, x_t: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_series();
        if x_t.len() != n {
            return Err(NkdcdError::shape("lift", (1, x_t.len()), (1, n)));
        }
        Ok(self.encoder.lift_panel(&Matrix::row_vector(x_t))?.into_data())
    }

    /// `sum_l W_l X_{t-l}`; `history[0]` is the most recent lifted vector.
    pub fn predict_lifted(&self, history: &[Vec<f64>]) -> Result<Vec<f64>> {
        let max_lag = self.max_lag();
        if history.len() < max_lag {
            return Err(NkdcdError::InsufficientHistory {
                needed: max_lag,
                got: history.len(),
            });
        }
        let d = self.lags.dim();
        let mut out = vec![0.0; d];
        for (l, h) in history.iter().take(max_lag).enumerate() {
            if h.len() != d {
                return Err(NkdcdError::shape("predict_lifted", (1, h.len()), (1, d)));
            }
            let w = self.lags.lag(l);
            for (r, o) in out.iter_mut().enumerate() {
                *o += w.row(r).iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(out)
    }

    /// Projects one lifted vector of length `n N` back to length `n`.
    pub fn project(&self, lifted: &[f64]) -> Result<Vec<f64>> {
        let d = self.lags.dim();
        if lifted.len() != d {
            return Err(NkdcdError::shape("project", (1, lifted.len()), (1, d)));
        }
        Ok(self.decoder.project_panel(&Matrix::row_vector(lifted))?.into_data())
    }

    /// All four trajectories for a `T x n` panel.
    pub fn forward_all(&self, x: &Matrix) -> Result<Trajectories> {
        let (t_len, n) = x.shape();
        let max_lag = self.max_lag();
        if n != self.n_series() {
            return Err(NkdcdError::shape("forward_all", x.shape(), (t_len, self.n_series())));
        }
        if t_len <= max_lag {
            return Err(NkdcdError::InsufficientData { len: t_len, max_lag });
        }
        let lifted = self.encoder.lift_panel(x)?;
        let targets: Vec<usize> = (max_lag..t_len).collect();
        let lifted_pred = self.lags.predict_rows(&lifted, &targets)?;
        let pred = self.decoder.project_panel(&lifted_pred)?;
        let recon = self.decoder.project_panel(&lifted)?;
        Ok(Trajectories {
            lifted,
            lifted_pred,
            pred,
            recon,
            max_lag,
        })
    }

    /// Puts every trainable tensor on the tape as a parameter.
    pub fn register(&self, tape: &mut Tape) -> ModelVars {
        ModelVars {
            encoder: self.encoder.0.register(tape),
            decoder: self.decoder.0.register(tape),
            lags: self.lags.lags.iter().map(|w| tape.param(w.clone())).collect(),
        }
    }

    /// Tape version of [`EncoderNet::lift_panel`].
    pub fn lift_on_tape(&self, tape: &mut Tape, vars: &ModelVars, x: Var) -> Result<Var> {
        let (t, n) = tape.value(x).shape();
        let column = tape.reshape(x, t * n, 1)?;
        let h = self.encoder.0.forward_tape(tape, &vars.encoder, column)?;
        tape.reshape(h, t, n * self.lift_dim())
    }

    /// Tape version of [`DecoderNet::project_panel`].
    pub fn project_on_tape(&self, tape: &mut Tape, vars: &ModelVars, lifted: Var) -> Result<Var> {
        let (t, nn) = tape.value(lifted).shape();
        let lift_dim = self.lift_dim();
        let n = nn / lift_dim;
        let blocks = tape.reshape(lifted, t * n, lift_dim)?;
        let h = self.decoder.0.forward_tape(tape, &vars.decoder, blocks)?;
        tape.reshape(h, t, n)
    }

    /// Tape version of [`LagStack::predict_rows`].
    pub fn predict_on_tape(&self, tape: &mut Tape, vars: &ModelVars, lifted: Var, targets: &[usize]) -> Result<Var> {
        let mut acc: Option<Var> = None;
        for (l, &w) in vars.lags.iter().enumerate() {
            let past = tape.gather_rows(lifted, shifted(targets, l + 1)?)?;
            let term = tape.matmul_nt(past, w)?;
            acc = Some(match acc {
                None => term,
                Some(a) => tape.add(a, term)?,
            });
        }
        acc.ok_or_else(|| NkdcdError::Dimension("model has no lags".into()))
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.0.parameter_count()
            + self.decoder.0.parameter_count()
            + self.lags.lags.iter().map(Matrix::len).sum::<usize>()
    }
}
