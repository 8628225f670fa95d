use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use nkdcd::baseline::{fit_var, BaselineConfig};
use nkdcd::datagen::{generate_lorenz96, generate_var, Lorenz96Spec, TimeSeriesData, Var3Spec};
use nkdcd::heatmap::render_svg;
use nkdcd::inference::{evaluate, mean_ci95, score_gc, threshold_adjacency, GcScores};
use nkdcd::io::{
    load_baseline_config, load_dataset, load_train_config, read_csv_matrix, read_truth, write_csv_matrix, write_json,
    write_truth, Aggregate, BaselineFile, CheckpointFile, ResultsFile, Standardization, CHECKPOINT_VERSION,
};
use nkdcd::model::{Activation, LagStack};
use nkdcd::numgrad::Matrix;
use nkdcd::optim::{train_with_observer, TrainConfig, TrainReport};
use nkdcd::{NkdcdError, Result};

#[derive(Parser)]
#[command(name = "nkdcd", version, about = "Granger-causal discovery with learned lifting and sparse lag matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset with known causal graph.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Threshold the scores of a trained model into an adjacency matrix.
    Infer(InferArgs),
    /// Score a model or score matrix against a truth matrix.
    Eval(EvalArgs),
    /// Fit the sparse linear VAR baseline.
    Baseline(BaselineArgs),
    /// Write one SVG heat map of block norms per lag.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Data CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Truth adjacency CSV to write.
    #[arg(long)]
    truth_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Sparse VAR(3): each series driven by itself and one random other series.
    Var3 {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 0.1)]
        coupling: f64,
        #[arg(long, default_value_t = 0.1)]
        self_coupling: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_std: f64,
        #[arg(long, default_value_t = 100)]
        burn_in: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Lorenz-96 sampled every `dt` time units.
    Lorenz96 {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 10.0)]
        f: f64,
        #[arg(long, default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[arg(long, default_value_t = 10)]
        substeps: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON or TOML training config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_checkpoint: PathBuf,
    /// Truth adjacency; when given, AUROC/AUPR are reported.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Results JSON (requires --truth).
    #[arg(long)]
    results: Option<PathBuf>,
    /// Number of independent initialisations, seeds `seed..seed+k`.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Z-score columns before training (default: on for nonlinear activations).
    #[arg(long, action = clap::ArgAction::Set)]
    standardize: Option<bool>,
    /// Print the loss every this many epochs (0 disables).
    #[arg(long, default_value_t = 100)]
    log_every: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    include_self: bool,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Threshold; defaults to the checkpoint's configured epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Adjacency CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Score matrix CSV to write.
    #[arg(long)]
    scores_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Score matrix CSV.
    #[arg(long, conflicts_with = "checkpoint", required_unless_present = "checkpoint")]
    scores: Option<PathBuf>,
    /// Model or baseline checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    include_self: bool,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fitted model JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    results: Option<PathBuf>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    include_self: bool,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Model or baseline checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory; files are named `lag_<l>.svg`.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { kind } => cmd_generate(kind),
        Command::Train(a) => cmd_train(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Heatmap(a) => cmd_heatmap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_dataset(data: &TimeSeriesData, out: &OutputArgs) -> Result<()> {
    write_csv_matrix(&out.out, &data.values, None)?;
    if let (Some(p), Some(t)) = (&out.truth_out, &data.truth) {
        write_truth(p, t)?;
    }
    let params: Vec<String> = data.meta.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!(
        "generated {}: T={} n={} seed={} [{}] -> {}",
        data.meta.generator,
        data.len(),
        data.n_series(),
        out.seed,
        params.join(", "),
        out.out.display()
    );
    Ok(())
}

fn cmd_generate(kind: GenerateKind) -> Result<()> {
    match kind {
        GenerateKind::Var3 {
            n,
            t,
            coupling,
            self_coupling,
            noise_std,
            burn_in,
            output,
        } => {
            let spec = Var3Spec {
                n,
                len: t,
                coupling,
                self_coupling,
                noise_std,
                burn_in,
                seed: output.seed,
                ..Var3Spec::default()
            };
            write_dataset(&generate_var(&spec)?, &output)
        }
        GenerateKind::Lorenz96 {
            n,
            f,
            t,
            dt,
            substeps,
            burn_in,
            output,
        } => {
            let spec = Lorenz96Spec {
                n,
                forcing: f,
                len: t,
                dt_sample: dt,
                substeps,
                burn_in,
                seed: output.seed,
                ..Lorenz96Spec::default()
            };
            write_dataset(&generate_lorenz96(&spec)?, &output)
        }
    }
}

fn seed_path(base: &Path, seed: u64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("json");
    base.with_file_name(format!("{stem}.seed{seed}.{ext}"))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let cap = std::env::var("NKDCD_THREADS")
        .ok()
        .map(|v| {
            v.parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| NkdcdError::InvalidConfig(format!("NKDCD_THREADS must be a positive integer, got '{v}'")))
        })
        .transpose()?;
    let threads = cap.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get())).min(jobs.max(1));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| NkdcdError::InvalidConfig(e.to_string()))
}

fn aggregate(values: Vec<f64>) -> Result<Aggregate> {
    let (mean, half_width) = mean_ci95(&values)?;
    Ok(Aggregate {
        values,
        mean,
        half_width,
    })
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    if a.seeds == 0 {
        return Err(NkdcdError::InvalidConfig("--seeds must be >= 1".into()));
    }
    if a.results.is_some() && a.truth.is_none() {
        return Err(NkdcdError::InvalidConfig("--results requires --truth".into()));
    }
    let cfg = match &a.config {
        Some(p) => load_train_config(p)?,
        None => TrainConfig::default(),
    };
    cfg.validate()?;
    let raw = load_dataset(&a.data, a.truth.as_deref())?;
    let standardize = a.standardize.unwrap_or(cfg.activation != Activation::Linear);
    let (data, standardization) = if standardize {
        let (mean, std) = raw.column_stats();
        (raw.standardized(), Some(Standardization { mean, std }))
    } else {
        (raw.clone(), None)
    };
    println!(
        "training on {} (T={}, n={}), penalty {}, {} seed(s), standardize={}",
        a.data.display(),
        data.len(),
        data.n_series(),
        cfg.penalty.name(),
        a.seeds,
        standardize
    );

    let start = Instant::now();
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|k| cfg.seed + k).collect();
    let multi = a.seeds > 1;
    let log_every = a.log_every;
    let run = |seed: u64| -> Result<(u64, CheckpointFile, TrainReport)> {
        let run_cfg = TrainConfig { seed, ..cfg.clone() };
        let (model, report) = train_with_observer(&data, &run_cfg, |r, _| {
            if log_every > 0 && r.epoch % log_every == 0 {
                let tag = if multi { format!("[seed {seed}] ") } else { String::new() };
                eprintln!(
                    "{tag}epoch {:>6}  J1 {:.6e}  avg {:.6}  penalty {:.6e}",
                    r.epoch,
                    r.loss.j1(),
                    r.average_j1,
                    r.loss.penalty
                );
            }
        })?;
        let ck = CheckpointFile::from_model(&model, &run_cfg, standardization.clone(), Some(&report));
        Ok((seed, ck, report))
    };
    let runs: Vec<Result<(u64, CheckpointFile, TrainReport)>> = if multi {
        thread_pool(a.seeds)?.install(|| seeds.par_iter().map(|&s| run(s)).collect())
    } else {
        vec![run(seeds[0])]
    };

    let mut aurocs = Vec::new();
    let mut auprs = Vec::new();
    let mut first_report = None;
    for (k, r) in runs.into_iter().enumerate() {
        let (seed, ck, report) = r?;
        let path = if k == 0 { a.out_checkpoint.clone() } else { seed_path(&a.out_checkpoint, seed) };
        ck.save(&path)?;
        println!(
            "seed {seed}: {} epochs, stopped: {:?}, checkpoint {}",
            report.epochs_run,
            report.stop_reason,
            path.display()
        );
        if let Some(truth) = &raw.truth {
            let scores = score_gc(&ck.model()?.lags);
            let m = evaluate(&scores, truth, cfg.epsilon, a.include_self)?;
            println!("seed {seed}: AUROC {:.4}  AUPR {:.4}", m.auroc, m.aupr);
            aurocs.push(m.auroc);
            auprs.push(m.aupr);
            if first_report.is_none() {
                first_report = Some(m);
            }
        }
    }
    if let Some(m) = first_report {
        let au = aggregate(aurocs)?;
        let ap = aggregate(auprs)?;
        if multi {
            println!("AUROC {:.4} ± {:.4}  AUPR {:.4} ± {:.4} (95% CI over {} seeds)", au.mean, au.half_width, ap.mean, ap.half_width, a.seeds);
        }
        if let Some(p) = &a.results {
            let mut res = ResultsFile::from_report(m, start.elapsed().as_secs_f64());
            res.config = serde_json::to_value(&cfg).ok();
            res.dataset = Some(raw.meta.clone());
            if multi {
                res.auroc_over_seeds = Some(au);
                res.aupr_over_seeds = Some(ap);
            }
            res.save(p)?;
        }
    }
    Ok(())
}

enum LoadedModel {
    Nkdcd(Box<CheckpointFile>),
    Baseline(Box<BaselineFile>),
}

impl LoadedModel {
    fn lags(&self) -> Result<LagStack> {
        match self {
            LoadedModel::Nkdcd(c) => Ok(c.model()?.lags),
            LoadedModel::Baseline(b) => Ok(b.model.lags.clone()),
        }
    }

    fn default_epsilon(&self) -> f64 {
        match self {
            LoadedModel::Nkdcd(c) => c.config.epsilon,
            LoadedModel::Baseline(_) => 0.0,
        }
    }

    fn config_json(&self) -> Option<serde_json::Value> {
        match self {
            LoadedModel::Nkdcd(c) => serde_json::to_value(&c.config).ok(),
            LoadedModel::Baseline(b) => serde_json::to_value(&b.model.config).ok(),
        }
    }
}

fn load_any_checkpoint(path: &Path) -> Result<LoadedModel> {
    match CheckpointFile::load(path) {
        Ok(c) => Ok(LoadedModel::Nkdcd(Box::new(c))),
        Err(NkdcdError::Parse { .. }) => match BaselineFile::load(path) {
            Ok(b) => Ok(LoadedModel::Baseline(Box::new(b))),
            Err(_) => CheckpointFile::load(path).map(|c| LoadedModel::Nkdcd(Box::new(c))),
        },
        Err(e) => Err(e),
    }
}

fn cmd_infer(a: InferArgs) -> Result<()> {
    let loaded = load_any_checkpoint(&a.checkpoint)?;
    let eps = a.epsilon.unwrap_or_else(|| loaded.default_epsilon());
    if eps < 0.0 || eps.is_nan() {
        return Err(NkdcdError::InvalidConfig(format!("epsilon must be >= 0, got {eps}")));
    }
    let scores = score_gc(&loaded.lags()?);
    let adj = threshold_adjacency(&scores, eps);
    write_truth(&a.out, &adj)?;
    if let Some(p) = &a.scores_out {
        write_csv_matrix(p, &scores.scores, None)?;
    }
    println!("{} edges at epsilon {eps} -> {}", adj.count(), a.out.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let truth = read_truth(&a.truth)?;
    let (scores, config) = match (&a.scores, &a.checkpoint) {
        (Some(p), _) => (GcScores::from_matrix(read_csv_matrix(p)?.0)?, None),
        (None, Some(p)) => {
            let loaded = load_any_checkpoint(p)?;
            (score_gc(&loaded.lags()?), loaded.config_json())
        }
        (None, None) => return Err(NkdcdError::InvalidConfig("need --scores or --checkpoint".into())),
    };
    let m = evaluate(&scores, &truth, a.epsilon, a.include_self)?;
    println!("AUROC {:.4}  AUPR {:.4}", m.auroc, m.aupr);
    let mut res = ResultsFile::from_report(m, start.elapsed().as_secs_f64());
    res.config = config;
    res.save(&a.out)
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = match &a.config {
        Some(p) => load_baseline_config(p)?,
        None => BaselineConfig::default(),
    };
    let data = load_dataset(&a.data, a.truth.as_deref())?;
    let model = fit_var(&data, &cfg)?;
    println!(
        "baseline {}: {} iterations (converged: {}), objective {:.6e}",
        cfg.penalty.name(),
        model.iterations,
        model.converged,
        model.objective
    );
    let file = BaselineFile {
        format_version: CHECKPOINT_VERSION,
        model,
    };
    file.save(&a.out)?;
    if let Some(truth) = &data.truth {
        let m = evaluate(&file.model.scores(), truth, 0.0, a.include_self)?;
        println!("AUROC {:.4}  AUPR {:.4}", m.auroc, m.aupr);
        if let Some(p) = &a.results {
            let mut res = ResultsFile::from_report(m, start.elapsed().as_secs_f64());
            res.config = serde_json::to_value(&cfg).ok();
            res.dataset = Some(data.meta.clone());
            res.save(p)?;
        }
    } else if a.results.is_some() {
        return Err(NkdcdError::InvalidConfig("--results requires --truth".into()));
    }
    Ok(())
}

fn cmd_heatmap(a: HeatmapArgs) -> Result<()> {
    let lags = load_any_checkpoint(&a.checkpoint)?.lags()?;
    let scores = score_gc(&lags);
    std::fs::create_dir_all(&a.out).map_err(|e| NkdcdError::Io {
        path: a.out.clone(),
        source: e,
    })?;
    for (l, m) in scores.per_lag.iter().enumerate() {
        let path = a.out.join(format!("lag_{}.svg", l + 1));
        std::fs::write(&path, render_svg(m, &format!("lag {} block norms", l + 1)))
            .map_err(|e| NkdcdError::Io { path: path.clone(), source: e })?;
    }
    write_json(&a.out.join("per_lag.json"), &scores.per_lag.iter().map(Matrix::to_nested).collect::<Vec<_>>())?;
    println!("wrote {} heat maps to {}", scores.per_lag.len(), a.out.display());
    Ok(())
}
