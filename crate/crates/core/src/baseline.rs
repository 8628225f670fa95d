//! Linear VAR with group-lasso sparsity, fitted by full-batch proximal gradient
//! using the same shrinkage operators as the lifted model (blocks of size 1).

use serde::{Deserialize, Serialize};

use crate::datagen::TimeSeriesData;
use crate::error::{NkdcdError, Result};
use crate::inference::{score_gc, GcScores};
use crate::loss::{self, PenaltyKind};
use crate::model::LagStack;
use crate::numgrad::Matrix;
use crate::optim::{prox_in_place, DIVERGENCE_LIMIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub lambda: f64,
    /// Step size; `None` uses `1 / Lipschitz` of the smooth part.
    pub tau: Option<f64>,
    pub max_lag: usize,
    pub penalty: PenaltyKind,
    pub max_iters: usize,
    /// Stop once the largest coefficient change in an iteration falls below this.
    pub tol: f64,
    /// Z-score each series before fitting.
    pub standardize: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            lambda: 0.05,
            tau: None,
            max_lag: 5,
            penalty: PenaltyKind::Ulg,
            max_iters: 5000,
            tol: 1e-10,
            standardize: true,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NkdcdError::InvalidConfig(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tau must be > 0, got {t}"));
            }
        }
        if self.max_lag == 0 {
            return bad("max_lag must be >= 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearVarModel {
    /// Coefficients on the fitting scale (standardized when enabled).
    pub lags: LagStack,
    pub config: BaselineConfig,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Smooth loss plus penalty at the returned coefficients.
    pub objective: f64,
}

impl LinearVarModel {
    pub fn n_series(&self) -> usize {
        self.lags.n_series()
    }

    /// Coefficients mapped back to the units of the raw data.
    pub fn lags_original(&self) -> LagStack {
        let n = self.n_series();
        let lags = self
            .lags
            .lags()
            .iter()
            .map(|w| Matrix::from_fn(n, n, |i, j| w.get(i, j) * self.std[i] / self.std[j]))
            .collect();
        LagStack::from_matrices(n, 1, lags).expect("shape preserved")
    }

    pub fn scores(&self) -> GcScores {
        score_gc(&self.lags)
    }

    /// One-step predictions on the raw scale for rows `L..T`.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let z = self.scale_in(x);
        let targets: Vec<usize> = (self.lags.max_lag()..x.rows()).collect();
        let p = self.lags.predict_rows(&z, &targets)?;
        Ok(Matrix::from_fn(p.rows(), p.cols(), |r, c| p.get(r, c) * self.std[c] + self.mean[c]))
    }

    fn scale_in(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |r, c| (x.get(r, c) - self.mean[c]) / self.std[c])
    }
}

/// `sum_t |x_t - sum_l W_l x_{t-l}|^2` over `t in L..T`.
pub fn var_loss(lags: &LagStack, x: &Matrix) -> Result<f64> {
    let max_lag = lags.max_lag();
    if x.rows() <= max_lag {
        return Err(NkdcdError::InsufficientData {
            len: x.rows(),
            max_lag,
        });
    }
    let targets: Vec<usize> = (max_lag..x.rows()).collect();
    let pred = lags.predict_rows(x, &targets)?;
    Ok(x.slice_rows(max_lag, x.rows())?.sub(&pred)?.squared_norm())
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
fn spectral_radius_psd(g: &Matrix) -> Result<f64> {
    let d = g.rows();
    let mut v = Matrix::filled(d, 1, 1.0 / (d as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..500 {
        let w = g.matmul(&v)?;
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w.scale(1.0 / norm);
        if (norm - est).abs() <= 1e-12 * norm {
            return Ok(norm);
        }
        est = norm;
    }
    Ok(est)
}

/// Fits the sparse VAR by proximal gradient on the whole panel.
pub fn fit_var(data: &TimeSeriesData, cfg: &BaselineConfig) -> Result<LinearVarModel> {
    cfg.validate()?;
    let (t_len, n) = data.values.shape();
    let max_lag = cfg.max_lag;
    if t_len <= max_lag {
        return Err(NkdcdError::InsufficientData { len: t_len, max_lag });
    }
    let (mean, std) = if cfg.standardize {
        data.column_stats()
    } else {
        (vec![0.0; n], vec![1.0; n])
    };
    let x = Matrix::from_fn(t_len, n, |r, c| (data.values.get(r, c) - mean[c]) / std[c]);

    // Lagged design: row t-L of z is [x_{t-1}, ..., x_{t-L}].
    let rows = t_len - max_lag;
    let z = Matrix::from_fn(rows, n * max_lag, |r, c| x.get(r + max_lag - 1 - c / n, c % n));
    let y = x.slice_rows(max_lag, t_len)?;
    let gram = z.matmul_tn(&z)?;
    let cross = y.matmul_tn(&z)?;
    let tau = match cfg.tau {
        Some(t) => t,
        None => {
            let lip = 2.0 * spectral_radius_psd(&gram)?;
            if lip == 0.0 {
                1.0
            } else {
                1.0 / lip
            }
        }
    };

    let unpack = |b: &Matrix| -> LagStack {
        let lags = (0..max_lag)
            .map(|l| Matrix::from_fn(n, n, |i, j| b.get(i, l * n + j)))
            .collect();
        LagStack::from_matrices(n, 1, lags).expect("consistent shapes")
    };

    let mut b = Matrix::zeros(n, n * max_lag);
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=cfg.max_iters {
        iterations = it;
        // gradient of |y - z b^T|^2 is 2 (b G - C)
        let mut grad = b.matmul(&gram)?;
        grad.axpy(-1.0, &cross)?;
        let mut step = b.clone();
        step.axpy(-2.0 * tau, &grad)?;
        let mut stack = unpack(&step);
        prox_in_place(&mut stack, cfg.penalty, tau * cfg.lambda, None);
        let next = Matrix::from_fn(n, n * max_lag, |i, c| stack.lag(c / n).get(i, c % n));
        if !next.is_finite() || next.max_abs() > DIVERGENCE_LIMIT {
            return Err(NkdcdError::Diverged {
                epoch: it,
                loss: f64::NAN,
            });
        }
        let change = next.sub(&b)?.max_abs();
        b = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    let lags = unpack(&b);
    let objective = var_loss(&lags, &x)? + cfg.lambda * loss::penalty(&lags, cfg.penalty);
    Ok(LinearVarModel {
        lags,
        config: cfg.clone(),
        mean,
        std,
        iterations,
        converged,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{simulate_var, TimeSeriesData};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn huge_lambda_zeros_everything() {
        let x = Matrix::from_fn(50, 3, |r, c| ((r * 7 + c * 11) % 13) as f64 - 6.0);
        let data = TimeSeriesData::new(x, None).unwrap();
        for kind in PenaltyKind::ALL {
            let cfg = BaselineConfig {
                lambda: 1e9,
                max_lag: 2,
                penalty: kind,
                ..BaselineConfig::default()
            };
            let m = fit_var(&data, &cfg).unwrap();
            assert!(m.lags.lags().iter().all(|w| w.data().iter().all(|&v| v == 0.0)));
        }
    }

    #[test]
    fn recovers_noiseless_var1() {
        let a = Matrix::from_rows(&[[0.5, 0.2, 0.0], [0.0, 0.4, -0.3], [0.1, 0.0, 0.6]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // tiny innovations keep the panel exciting without affecting the fit
        let (x, _) = simulate_var(&[a.clone()], &[vec![1.0, -1.0, 0.5]], 200, 0, 1e-9, &mut rng).unwrap();
        let data = TimeSeriesData::new(x, None).unwrap();
        let cfg = BaselineConfig {
            lambda: 0.0,
            max_lag: 1,
            standardize: false,
            max_iters: 200_000,
            tol: 1e-14,
            ..BaselineConfig::default()
        };
        let m = fit_var(&data, &cfg).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.lags.lag(0).get(i, j) - a.get(i, j)).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn original_scale_mapping() {
        let lags = LagStack::from_matrices(2, 1, vec![Matrix::from_rows(&[[0.5, 1.0], [0.0, 0.5]]).unwrap()]).unwrap();
        let m = LinearVarModel {
            lags,
            config: BaselineConfig::default(),
            mean: vec![0.0, 0.0],
            std: vec![2.0, 4.0],
            iterations: 0,
            converged: true,
            objective: 0.0,
        };
        let o = m.lags_original();
        assert_eq!(o.lag(0).get(0, 1), 0.5);
        assert_eq!(o.lag(0).get(0, 0), 0.5);
    }

    #[test]
    fn rejects_short_panel() {
        let data = TimeSeriesData::new(Matrix::zeros(3, 2), None).unwrap();
        let cfg = BaselineConfig {
            max_lag: 3,
            ..BaselineConfig::default()
        };
        assert!(matches!(fit_var(&data, &cfg), Err(NkdcdError::InsufficientData { .. })));
    }
}
