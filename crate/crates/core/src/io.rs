//! On-disk formats: CSV panels and truth matrices, JSON checkpoints and
//! results, and JSON/TOML training configs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, LinearVarModel};
use crate::datagen::{Adjacency, DatasetMeta, TimeSeriesData};
use crate::error::{NkdcdError, Result};
use crate::inference::{Confusion, MetricsReport, PrPoint, RocPoint};
use crate::loss::LossBreakdown;
use crate::model::{Activation, DecoderNet, Dense, EncoderNet, LagStack, Mlp, NkdcdModel};
use crate::numgrad::Matrix;
use crate::optim::{StopReason, TrainConfig, TrainReport};

pub const CHECKPOINT_VERSION: u32 = 1;

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| NkdcdError::io(path, e))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| NkdcdError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| NkdcdError::io(path, e))
}

fn parse_cell(path: &Path, row: usize, col: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| NkdcdError::parse(path, format!("row {}, column {}: '{}' is not a number", row + 1, col + 1, cell)))?;
    if !v.is_finite() {
        return Err(NkdcdError::parse(path, format!("row {}, column {}: non-finite value", row + 1, col + 1)));
    }
    Ok(v)
}

/// Reads a rectangular numeric CSV. A first row that does not parse as numbers
/// is taken as a header and returned separately.
pub fn read_csv_matrix(path: &Path) -> Result<(Matrix, Option<Vec<String>>)> {
    let text = read_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header: Option<Vec<String>> = None;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| NkdcdError::parse(path, e))?;
        if k == 0 && rec.iter().any(|c| c.parse::<f64>().is_err()) {
            header = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(NkdcdError::parse(
                    path,
                    format!("row {} has {} fields, expected {c}", k + 1, rec.len()),
                ))
            }
            _ => {}
        }
        for (j, cell) in rec.iter().enumerate() {
            data.push(parse_cell(path, k, j, cell)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| NkdcdError::parse(path, "no data rows"))?;
    if let Some(h) = &header {
        if h.len() != cols {
            return Err(NkdcdError::parse(path, "header width differs from data width"));
        }
    }
    Ok((Matrix::new(rows, cols, data)?, header))
}

pub fn matrix_to_csv(m: &Matrix, header: Option<&[String]>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let err = |e: csv::Error| NkdcdError::Domain(format!("csv encoding failed: {e}"));
    if let Some(h) = header {
        w.write_record(h).map_err(err)?;
    }
    for r in 0..m.rows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string())).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| NkdcdError::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv_matrix(path: &Path, m: &Matrix, header: Option<&[String]>) -> Result<()> {
    write_string(path, &matrix_to_csv(m, header)?)
}

pub fn read_truth(path: &Path) -> Result<Adjacency> {
    let (m, _) = read_csv_matrix(path)?;
    if m.rows() != m.cols() {
        return Err(NkdcdError::parse(path, format!("truth must be square, got {}x{}", m.rows(), m.cols())));
    }
    let mut rows = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        let mut row = Vec::with_capacity(m.cols());
        for &v in m.row(r) {
            row.push(match v {
                0.0 => false,
                1.0 => true,
                other => return Err(NkdcdError::parse(path, format!("truth entries must be 0 or 1, got {other}"))),
            });
        }
        rows.push(row);
    }
    Adjacency::from_rows(&rows)
}

pub fn write_truth(path: &Path, a: &Adjacency) -> Result<()> {
    let m = Matrix::from_fn(a.n(), a.n(), |i, j| f64::from(u8::from(a.get(i, j))));
    write_csv_matrix(path, &m, None)
}

pub fn load_dataset(data: &Path, truth: Option<&Path>) -> Result<TimeSeriesData> {
    let (values, _) = read_csv_matrix(data)?;
    let truth = truth.map(read_truth).transpose()?;
    let mut d = TimeSeriesData::new(values, truth)?;
    d.meta.generator = "csv".into();
    Ok(d)
}

/// Loads a config from `.toml` or JSON (any other extension).
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_string(path)?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| NkdcdError::parse(path, e))
    } else {
        serde_json::from_str(&text).map_err(|e| NkdcdError::parse(path, e))
    }
}

pub fn load_train_config(path: &Path) -> Result<TrainConfig> {
    let cfg: TrainConfig = load_config(path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_baseline_config(path: &Path) -> Result<BaselineConfig> {
    let cfg: BaselineConfig = load_config(path)?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `in_dim x out_dim`.
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetFile {
    pub activation: Activation,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagFile {
    pub n: usize,
    pub block: usize,
    pub max_lag: usize,
    /// `blocks[l][i][j]` is block `(i, j)` of lag `l + 1`, row-major `N x N`.
    pub blocks: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub final_loss: Option<LossBreakdown>,
    pub final_average_j1: Option<f64>,
}

impl From<&TrainReport> for ReportSummary {
    fn from(r: &TrainReport) -> Self {
        ReportSummary {
            epochs_run: r.epochs_run,
            stop_reason: r.stop_reason,
            final_loss: r.final_loss().copied(),
            final_average_j1: r.history.last().map(|h| h.average_j1),
        }
    }
}

/// Column transform applied to the data before training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointFile {
    pub format_version: u32,
    pub config: TrainConfig,
    pub encoder: NetFile,
    pub decoder: NetFile,
    pub lags: LagFile,
    pub standardization: Option<Standardization>,
    pub report: Option<ReportSummary>,
}

fn net_to_file(mlp: &Mlp) -> NetFile {
    NetFile {
        activation: mlp.activation,
        layers: mlp
            .layers
            .iter()
            .map(|l| LayerFile {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                weight: l.weight.data().to_vec(),
                bias: l.bias.as_ref().map(|b| b.data().to_vec()),
            })
            .collect(),
    }
}

fn net_from_file(f: &NetFile) -> Result<Mlp> {
    let layers = f
        .layers
        .iter()
        .map(|l| {
            let weight = Matrix::new(l.in_dim, l.out_dim, l.weight.clone())?;
            let bias = l
                .bias
                .as_ref()
                .map(|b| Matrix::new(1, l.out_dim, b.clone()))
                .transpose()?;
            Ok(Dense { weight, bias })
        })
        .collect::<Result<Vec<_>>>()?;
    for w in layers.windows(2) {
        if w[0].out_dim() != w[1].in_dim() {
            return Err(NkdcdError::Dimension("consecutive layer widths disagree".into()));
        }
    }
    Ok(Mlp {
        layers,
        activation: f.activation,
    })
}

pub fn lags_to_file(s: &LagStack) -> LagFile {
    let n = s.n_series();
    LagFile {
        n,
        block: s.block_size(),
        max_lag: s.max_lag(),
        blocks: (0..s.max_lag())
            .map(|l| {
                (0..n)
                    .map(|i| (0..n).map(|j| s.block(l, i, j).into_data()).collect())
                    .collect()
            })
            .collect(),
    }
}

pub fn lags_from_file(f: &LagFile) -> Result<LagStack> {
    let mut s = LagStack::zeros(f.n, f.block, f.max_lag)?;
    if f.blocks.len() != f.max_lag {
        return Err(NkdcdError::Dimension(format!("expected {} lags, found {}", f.max_lag, f.blocks.len())));
    }
    for (l, lag) in f.blocks.iter().enumerate() {
        if lag.len() != f.n || lag.iter().any(|r| r.len() != f.n) {
            return Err(NkdcdError::Dimension(format!("lag {} is not {} x {} blocks", l + 1, f.n, f.n)));
        }
        for (i, row) in lag.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                s.set_block(l, i, j, &Matrix::new(f.block, f.block, b.clone())?)?;
            }
        }
    }
    if !s.is_finite() {
        return Err(NkdcdError::Domain("lag matrices contain non-finite values".into()));
    }
    Ok(s)
}

impl CheckpointFile {
    pub fn from_model(
        model: &NkdcdModel,
        config: &TrainConfig,
        standardization: Option<Standardization>,
        report: Option<&TrainReport>,
    ) -> Self {
        CheckpointFile {
            format_version: CHECKPOINT_VERSION,
            config: config.clone(),
            encoder: net_to_file(&model.encoder.0),
            decoder: net_to_file(&model.decoder.0),
            lags: lags_to_file(&model.lags),
            standardization,
            report: report.map(ReportSummary::from),
        }
    }

    pub fn model(&self) -> Result<NkdcdModel> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(NkdcdError::InvalidConfig(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.format_version
            )));
        }
        NkdcdModel::new(
            EncoderNet(net_from_file(&self.encoder)?),
            DecoderNet(net_from_file(&self.decoder)?),
            lags_from_file(&self.lags)?,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| NkdcdError::Domain(format!("checkpoint encoding failed: {e}")))
    }

    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        let ck: CheckpointFile = serde_json::from_str(text).map_err(|e| NkdcdError::parse(path, e))?;
        ck.model()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_string(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(path, &read_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFile {
    pub format_version: u32,
    pub model: LinearVarModel,
}

impl BaselineFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| NkdcdError::Domain(e.to_string()))?;
        write_string(path, &text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_string(path)?;
        serde_json::from_str(&text).map_err(|e| NkdcdError::parse(path, e))
    }
}

/// Mean and 95% half-width over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub values: Vec<f64>,
    pub mean: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub auroc: f64,
    pub aupr: f64,
    pub roc: Vec<RocPoint>,
    pub pr: Vec<PrPoint>,
    pub epsilon: f64,
    pub include_self: bool,
    pub adjacency: Vec<Vec<u8>>,
    pub confusion: Confusion,
    pub config: Option<serde_json::Value>,
    pub dataset: Option<DatasetMeta>,
    pub wall_clock_secs: f64,
    /// Per-seed AUROC when several runs were aggregated.
    pub auroc_over_seeds: Option<Aggregate>,
    pub aupr_over_seeds: Option<Aggregate>,
}

impl ResultsFile {
    pub fn from_report(r: MetricsReport, wall_clock_secs: f64) -> Self {
        ResultsFile {
            auroc: r.auroc,
            aupr: r.aupr,
            roc: r.roc,
            pr: r.pr,
            epsilon: r.epsilon,
            include_self: r.include_self,
            adjacency: r.adjacency,
            confusion: r.confusion,
            config: None,
            dataset: None,
            wall_clock_secs,
            auroc_over_seeds: None,
            aupr_over_seeds: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| NkdcdError::Domain(e.to_string()))?;
        write_string(path, &text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_string(path)?;
        serde_json::from_str(&text).map_err(|e| NkdcdError::parse(path, e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| NkdcdError::Domain(e.to_string()))?;
    write_string(path, &text)
}
