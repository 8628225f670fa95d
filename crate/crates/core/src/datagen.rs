//! Synthetic panels with known causal structure: sparse VAR processes and the
//! Lorenz-96 system.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{NkdcdError, Result};
use crate::numgrad::Matrix;

/// Square boolean matrix; entry `(i, j)` set means series `j` drives series `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjacency {
    n: usize,
    data: Vec<bool>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Adjacency {
            n,
            data: vec![false; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut a = Adjacency::empty(n);
        for i in 0..n {
            for j in 0..n {
                a.data[i * n + j] = f(i, j);
            }
        }
        a
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(NkdcdError::Dimension("adjacency must be square".into()));
        }
        Ok(Adjacency {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.n + j] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn row_count(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.get(i, j)).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }

    /// `true` when every edge of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &Adjacency) -> bool {
        self.n == other.n && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DatasetMeta {
    pub generator: String,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
}

/// A `T x n` panel of observations with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesData {
    pub values: Matrix,
    pub truth: Option<Adjacency>,
    pub meta: DatasetMeta,
}

impl TimeSeriesData {
    pub fn new(values: Matrix, truth: Option<Adjacency>) -> Result<Self> {
        if !values.is_finite() {
            return Err(NkdcdError::Domain("time series contains non-finite values".into()));
        }
        if let Some(t) = &truth {
            if t.n() != values.cols() {
                return Err(NkdcdError::Dimension(format!(
                    "truth is {0}x{0} but the panel has {1} series",
                    t.n(),
                    values.cols()
                )));
            }
        }
        Ok(TimeSeriesData {
            values,
            truth,
            meta: DatasetMeta::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn n_series(&self) -> usize {
        self.values.cols()
    }

    /// Column means and standard deviations (population form; zero spread maps to 1).
    pub fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let (t, n) = self.values.shape();
        let mut mean = vec![0.0; n];
        let mut std = vec![0.0; n];
        for c in 0..n {
            let col = self.values.column(c);
            let m = col.iter().sum::<f64>() / t.max(1) as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / t.max(1) as f64;
            mean[c] = m;
            std[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        (mean, std)
    }

    /// Copy with every column z-scored.
    pub fn standardized(&self) -> TimeSeriesData {
        let (mean, std) = self.column_stats();
        let values = Matrix::from_fn(self.values.rows(), self.values.cols(), |r, c| {
            (self.values.get(r, c) - mean[c]) / std[c]
        });
        TimeSeriesData {
            values,
            truth: self.truth.clone(),
            meta: self.meta.clone(),
        }
    }
}

/// Sparse VAR(3) generator: every series depends on itself and one other
/// randomly chosen series at lags 1..=3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Var3Spec {
    pub n: usize,
    pub len: usize,
    pub coupling: f64,
    pub self_coupling: f64,
    pub lags: usize,
    pub noise_std: f64,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for Var3Spec {
    fn default() -> Self {
        Var3Spec {
            n: 10,
            len: 1000,
            coupling: 0.1,
            self_coupling: 0.1,
            lags: 3,
            noise_std: 0.1,
            burn_in: 100,
            seed: 0,
        }
    }
}

/// Output of a VAR simulation, with the exact lag matrices and innovations used.
#[derive(Debug, Clone)]
pub struct VarSimulation {
    pub data: TimeSeriesData,
    pub lag_matrices: Vec<Matrix>,
    /// Innovation added at each recorded step, `T x n`.
    pub noise: Matrix,
}

/// Simulates `x_t = sum_l A_l x_{t-l} + e_t` from the given start rows
/// (`init[0]` oldest) and records `len` rows after `burn_in` extra steps.
pub fn simulate_var<R: Rng + ?Sized>(
    lag_matrices: &[Matrix],
    init: &[Vec<f64>],
    len: usize,
    burn_in: usize,
    noise_std: f64,
    rng: &mut R,
) -> Result<(Matrix, Matrix)> {
    let p = lag_matrices.len();
    let n = lag_matrices.first().map_or(0, Matrix::rows);
    if p == 0 || n == 0 {
        return Err(NkdcdError::Domain("VAR needs at least one non-empty lag matrix".into()));
    }
    if lag_matrices.iter().any(|m| m.shape() != (n, n)) {
        return Err(NkdcdError::Dimension("VAR lag matrices must all be n x n".into()));
    }
    if init.len() != p || init.iter().any(|r| r.len() != n) {
        return Err(NkdcdError::Dimension(format!("VAR needs {p} initial rows of length {n}")));
    }
    let mut hist: Vec<Vec<f64>> = init.to_vec();
    let mut values = Vec::with_capacity(len * n);
    let mut noise = Vec::with_capacity(len * n);
    for step in 0..burn_in + len {
        let mut next = vec![0.0; n];
        for (l, a) in lag_matrices.iter().enumerate() {
            let past = &hist[hist.len() - 1 - l];
            for (i, v) in next.iter_mut().enumerate() {
                *v += a.row(i).iter().zip(past).map(|(w, x)| w * x).sum::<f64>();
            }
        }
        let e: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                noise_std * z
            })
            .collect();
        next.iter_mut().zip(&e).for_each(|(v, e)| *v += e);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(NkdcdError::Integration { step });
        }
        if step >= burn_in {
            values.extend_from_slice(&next);
            noise.extend_from_slice(&e);
        }
        hist.push(next);
        if hist.len() > p {
            hist.remove(0);
        }
    }
    Ok((Matrix::new(len, n, values)?, Matrix::new(len, n, noise)?))
}

/// Draws the sparse structure and simulates it.
pub fn generate_var_detailed(spec: &Var3Spec) -> Result<VarSimulation> {
    let n = spec.n;
    if n < 2 {
        return Err(NkdcdError::Domain(format!("sparse VAR needs n >= 2, got {n}")));
    }
    if spec.len <= spec.lags || spec.lags == 0 {
        return Err(NkdcdError::Domain(format!(
            "sparse VAR needs T > lags >= 1 (T = {}, lags = {})",
            spec.len, spec.lags
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut truth = Adjacency::empty(n);
    let mut base = Matrix::zeros(n, n);
    for i in 0..n {
        let mut other = rng.random_range(0..n - 1);
        if other >= i {
            other += 1;
        }
        truth.set(i, i, true);
        truth.set(i, other, true);
        base.set(i, i, spec.self_coupling);
        base.set(i, other, spec.coupling);
    }
    let lag_matrices = vec![base; spec.lags];
    let init: Vec<Vec<f64>> = (0..spec.lags)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    spec.noise_std * z
                })
                .collect()
        })
        .collect();
    let (values, noise) = simulate_var(&lag_matrices, &init, spec.len, spec.burn_in, spec.noise_std, &mut rng)?;
    let mut data = TimeSeriesData::new(values, Some(truth))?;
    data.meta = DatasetMeta {
        generator: "var3".into(),
        params: BTreeMap::from([
            ("n".into(), n as f64),
            ("T".into(), spec.len as f64),
            ("coupling".into(), spec.coupling),
            ("self_coupling".into(), spec.self_coupling),
            ("lags".into(), spec.lags as f64),
            ("noise_std".into(), spec.noise_std),
            ("burn_in".into(), spec.burn_in as f64),
        ]),
        seed: Some(spec.seed),
    };
    Ok(VarSimulation {
        data,
        lag_matrices,
        noise,
    })
}

pub fn generate_var(spec: &Var3Spec) -> Result<TimeSeriesData> {
    Ok(generate_var_detailed(spec)?.data)
}

/// Lorenz-96 vector field with cyclic indexing.
pub fn lorenz96_deriv(x: &[f64], forcing: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    lorenz96_deriv_into(x, forcing, &mut out)?;
    Ok(out)
}

fn lorenz96_deriv_into(x: &[f64], forcing: f64, out: &mut [f64]) -> Result<()> {
    let n = x.len();
    if n < 4 {
        return Err(NkdcdError::Domain(format!("Lorenz-96 needs n >= 4, got {n}")));
    }
    for i in 0..n {
        let ip1 = x[(i + 1) % n];
        let im1 = x[(i + n - 1) % n];
        let im2 = x[(i + n - 2) % n];
        out[i] = (ip1 - im2) * im1 - x[i] + forcing;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lorenz96Spec {
    pub n: usize,
    pub forcing: f64,
    pub dt_sample: f64,
    pub len: usize,
    /// RK4 steps per sampling interval.
    pub substeps: usize,
    /// Samples discarded before recording.
    pub burn_in: usize,
    /// Half-width of the uniform perturbation added to `F` for the initial state.
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for Lorenz96Spec {
    fn default() -> Self {
        Lorenz96Spec {
            n: 20,
            forcing: 10.0,
            dt_sample: 0.1,
            len: 1000,
            substeps: 10,
            burn_in: 1000,
            init_noise: 0.01,
            seed: 0,
        }
    }
}

/// Classical RK4 stepping of the Lorenz-96 field.
#[derive(Debug)]
pub struct Lorenz96Integrator {
    forcing: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Lorenz96Integrator {
    pub fn new(n: usize, forcing: f64) -> Result<Self> {
        if n < 4 {
            return Err(NkdcdError::Domain(format!("Lorenz-96 needs n >= 4, got {n}")));
        }
        Ok(Lorenz96Integrator {
            forcing,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
        })
    }

    pub fn step(&mut self, x: &mut [f64], h: f64) -> Result<()> {
        let f = self.forcing;
        let [k1, k2, k3, k4] = &mut self.k;
        lorenz96_deriv_into(x, f, k1)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        lorenz96_deriv_into(&self.tmp, f, k2)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        lorenz96_deriv_into(&self.tmp, f, k3)?;
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * k3[i];
        }
        lorenz96_deriv_into(&self.tmp, f, k4)?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }

    /// Advances `x` by `samples` sampling intervals, returning every sampled state.
    pub fn sample(&mut self, x: &mut [f64], dt_sample: f64, substeps: usize, samples: usize) -> Result<Vec<Vec<f64>>> {
        let h = dt_sample / substeps as f64;
        let mut out = Vec::with_capacity(samples);
        for s in 0..samples {
            for k in 0..substeps {
                self.step(x, h)?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(NkdcdError::Integration { step: s * substeps + k });
                }
            }
            out.push(x.to_vec());
        }
        Ok(out)
    }
}

/// Ground truth of Lorenz-96: `j` drives `i` iff `j` is one of `i-2, i-1, i, i+1` (cyclic).
pub fn lorenz96_truth(n: usize) -> Adjacency {
    Adjacency::from_fn(n, |i, j| {
        j == i || j == (i + 1) % n || j == (i + n - 1) % n || j == (i + n - 2) % n
    })
}

pub fn generate_lorenz96(spec: &Lorenz96Spec) -> Result<TimeSeriesData> {
    let n = spec.n;
    if n < 4 {
        return Err(NkdcdError::Domain(format!("Lorenz-96 needs n >= 4, got {n}")));
    }
    if spec.len == 0 || spec.substeps == 0 || !(spec.dt_sample > 0.0) {
        return Err(NkdcdError::Domain("Lorenz-96 needs T >= 1, substeps >= 1, dt > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = if spec.init_noise > 0.0 {
                rng.random_range(-spec.init_noise..=spec.init_noise)
            } else {
                0.0
            };
            spec.forcing + u
        })
        .collect();
    let mut integ = Lorenz96Integrator::new(n, spec.forcing)?;
    integ.sample(&mut x, spec.dt_sample, spec.substeps, spec.burn_in)?;
    let rows = integ.sample(&mut x, spec.dt_sample, spec.substeps, spec.len)?;
    let mut data = TimeSeriesData::new(Matrix::from_rows(&rows)?, Some(lorenz96_truth(n)))?;
    data.meta = DatasetMeta {
        generator: "lorenz96".into(),
        params: BTreeMap::from([
            ("n".into(), n as f64),
            ("F".into(), spec.forcing),
            ("T".into(), spec.len as f64),
            ("dt_sample".into(), spec.dt_sample),
            ("substeps".into(), spec.substeps as f64),
            ("burn_in".into(), spec.burn_in as f64),
            ("init_noise".into(), spec.init_noise),
        ]),
        seed: Some(spec.seed),
    };
    Ok(data)
}
