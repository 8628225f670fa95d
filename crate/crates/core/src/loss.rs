//! Four-term reconstruction/prediction objective plus the group-lasso penalties.

use serde::{Deserialize, Serialize};

use crate::error::{NkdcdError, Result};
use crate::model::{LagStack, ModelVars, NkdcdModel, Trajectories};
use crate::numgrad::{Matrix, Tape, Var};

/// How the lag blocks are grouped by the sparsity penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    /// All lags of a series pair in one group.
    Ulg,
    /// Nested lag suffixes `{l, ..., L}` of a series pair, one group per `l`.
    Hlg,
    /// Every lag block of every pair on its own.
    Ilg,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 3] = [PenaltyKind::Ulg, PenaltyKind::Hlg, PenaltyKind::Ilg];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Ulg => "ulg",
            PenaltyKind::Hlg => "hlg",
            PenaltyKind::Ilg => "ilg",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = NkdcdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ulg" => Ok(PenaltyKind::Ulg),
            "hlg" => Ok(PenaltyKind::Hlg),
            "ilg" => Ok(PenaltyKind::Ilg),
            other => Err(NkdcdError::InvalidConfig(format!("unknown penalty kind '{other}'"))),
        }
    }
}

/// Scaling applied to each of the four smooth terms while optimising.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Plain sums over time.
    Sum,
    /// Each term divided by the number of entries of its residual.
    #[default]
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// `sum_t |x_t - xbar_t|^2`
    pub recon_autoencoder: f64,
    /// `sum_t |X_t - Xhat_t|^2` in the lifted space
    pub lifted_var: f64,
    /// `sum_t |x_t - xhat_t|^2`
    pub nar_base: f64,
    /// `sum_t |xbar_t - xhat_t|^2`
    pub nar_autoencoded: f64,
    /// `lambda * Omega(W)`
    pub penalty: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn from_parts(recon: f64, lifted: f64, nar: f64, nar_ae: f64, penalty: f64) -> Self {
        LossBreakdown {
            recon_autoencoder: recon,
            lifted_var: lifted,
            nar_base: nar,
            nar_autoencoded: nar_ae,
            penalty,
            total: recon + lifted + nar + nar_ae + penalty,
        }
    }

    /// Smooth part (everything but the penalty).
    pub fn j1(&self) -> f64 {
        self.recon_autoencoder + self.lifted_var + self.nar_base + self.nar_autoencoded
    }

    /// Smooth loss per series per time step, the quantity used by the stopping rule.
    pub fn average_j1(&self, n_series: usize, len: usize) -> f64 {
        self.j1() / (n_series * len) as f64
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = penalty;
        self.total = self.j1() + penalty;
        self
    }
}

fn sq_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    Ok(a.sub(b)?.squared_norm())
}

/// The four smooth terms evaluated on full trajectories, each summed over its own
/// time range (`[0, T)` for reconstruction, `[L, T)` for the others).
pub fn j1(x: &Matrix, traj: &Trajectories) -> Result<LossBreakdown> {
    let max_lag = traj.max_lag;
    let t_len = x.rows();
    let x_tail = x.slice_rows(max_lag, t_len)?;
    let recon_tail = traj.recon.slice_rows(max_lag, t_len)?;
    let lifted_tail = traj.lifted.slice_rows(max_lag, t_len)?;
    Ok(LossBreakdown::from_parts(
        sq_diff(x, &traj.recon)?,
        sq_diff(&lifted_tail, &traj.lifted_pred)?,
        sq_diff(&x_tail, &traj.pred)?,
        sq_diff(&recon_tail, &traj.pred)?,
        0.0,
    ))
}

/// Convenience: forward pass and [`j1`] with penalty for a model.
pub fn evaluate(model: &NkdcdModel, x: &Matrix, lambda: f64, kind: PenaltyKind) -> Result<LossBreakdown> {
    let traj = model.forward_all(x)?;
    Ok(j1(x, &traj)?.with_penalty(lambda * penalty(&model.lags, kind)))
}

/// Group-lasso penalty `Omega(W)`; every block norm is the Frobenius norm of
/// the block (or of the concatenated blocks for multi-lag groups).
pub fn penalty(lags: &LagStack, kind: PenaltyKind) -> f64 {
    let n = lags.n_series();
    let max_lag = lags.max_lag();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let sq: Vec<f64> = (0..max_lag).map(|l| lags.block_sq_norm(l, i, j)).collect();
            total += match kind {
                PenaltyKind::Ulg => sq.iter().sum::<f64>().sqrt(),
                PenaltyKind::Ilg => sq.iter().map(|s| s.sqrt()).sum(),
                PenaltyKind::Hlg => {
                    let mut suffix = 0.0;
                    let mut acc = 0.0;
                    for s in sq.iter().rev() {
                        suffix += s;
                        acc += suffix.sqrt();
                    }
                    acc
                }
            };
        }
    }
    total
}

/// Tape nodes for one mini-batch of the smooth objective.
///
/// The four term nodes always hold raw sums; `objective` is what gets
/// differentiated and depends on the [`Reduction`].
#[derive(Debug, Clone, Copy)]
pub struct BatchLoss {
    pub recon: Var,
    pub lifted: Var,
    pub nar: Var,
    pub nar_autoencoded: Var,
    pub objective: Var,
}

impl BatchLoss {
    /// Raw-sum breakdown of this batch.
    pub fn breakdown(&self, tape: &Tape) -> LossBreakdown {
        let v = |var: Var| tape.value(var).get(0, 0);
        LossBreakdown::from_parts(v(self.recon), v(self.lifted), v(self.nar), v(self.nar_autoencoded), 0.0)
    }
}

/// Builds the smooth objective for the prediction targets `targets` (rows of
/// `x`, each `>= L`) and reconstruction rows `recon_rows`.
///
/// The encoder and decoder run over the full panel so every lagged row is
/// available; rows outside the batch receive zero gradient.
pub fn j1_on_tape(
    tape: &mut Tape,
    model: &NkdcdModel,
    vars: &ModelVars,
    x: &Matrix,
    targets: &[usize],
    recon_rows: &[usize],
    reduction: Reduction,
) -> Result<BatchLoss> {
    let xv = tape.constant(x.clone());
    let lifted = model.lift_on_tape(tape, vars, xv)?;
    let recon = model.project_on_tape(tape, vars, lifted)?;

    let x_rec = tape.gather_rows(xv, recon_rows.to_vec())?;
    let recon_rec = tape.gather_rows(recon, recon_rows.to_vec())?;
    let d1 = tape.sub(x_rec, recon_rec)?;
    let t1 = tape.squared_norm(d1);

    let lifted_pred = model.predict_on_tape(tape, vars, lifted, targets)?;
    let lifted_tgt = tape.gather_rows(lifted, targets.to_vec())?;
    let d2 = tape.sub(lifted_tgt, lifted_pred)?;
    let t2 = tape.squared_norm(d2);

    let pred = model.project_on_tape(tape, vars, lifted_pred)?;
    let x_tgt = tape.gather_rows(xv, targets.to_vec())?;
    let d3 = tape.sub(x_tgt, pred)?;
    let t3 = tape.squared_norm(d3);

    let recon_tgt = tape.gather_rows(recon, targets.to_vec())?;
    let d4 = tape.sub(recon_tgt, pred)?;
    let t4 = tape.squared_norm(d4);

    let (o1, o2, o3, o4) = match reduction {
        Reduction::Sum => (t1, t2, t3, t4),
        Reduction::Mean => {
            let n = x.cols() as f64;
            let lifted_cols = (model.lift_dim() * x.cols()) as f64;
            let r = 1.0 / (recon_rows.len().max(1) as f64 * n);
            let p = 1.0 / targets.len().max(1) as f64;
            (
                tape.scale(t1, r),
                tape.scale(t2, p / lifted_cols),
                tape.scale(t3, p / n),
                tape.scale(t4, p / n),
            )
        }
    };
    let s12 = tape.add(o1, o2)?;
    let s34 = tape.add(o3, o4)?;
    let objective = tape.add(s12, s34)?;
    Ok(BatchLoss {
        recon: t1,
        lifted: t2,
        nar: t3,
        nar_autoencoded: t4,
        objective,
    })
}
