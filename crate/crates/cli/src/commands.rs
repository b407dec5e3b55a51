use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use soga_core::datagen::{gen_pair, DomainPairConfig};
use soga_core::eval::{auc_binary, verify_lemma1, verify_lemma2, LemmaOneConfig, LemmaOneReport, LemmaTwoReport, LemmaTwoSetup, MetricReport};
use soga_core::gnn::{load_checkpoint, save_checkpoint, train_source, Model, SourceTrainConfig};
use soga_core::graph::{load_graph, load_unlabeled, split_train_val, write_graph, Graph, GraphInput};
use soga_core::pipeline::{
    run_benchmark, sweep_lambdas, write_benchmark, write_sweep, BenchmarkConfig, DataSpec, SweepConfig,
};
use soga_core::soga::{adapt, SogaConfig};
use soga_core::structure::{mine_pairs, PairSet, StructPairConfig};
use soga_core::{Error, Result};

use crate::manifest::RunManifest;

fn write_text(path: &Path, body: impl AsRef<[u8]>) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenDataConfig {
    pub data: DomainPairConfig,
    /// Write the target manifest with `"labels": null`; labels go to a
    /// separate `target.eval_labels.txt` that no manifest references.
    pub unlabeled_target: bool,
}

pub fn gen_data(cfg: &GenDataConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut run = RunManifest::new("gen-data", cfg, vec![cfg.data.seed])?;
    let pair = gen_pair(&cfg.data)?;
    run.outputs.push(write_graph(&pair.source, out, "source")?);
    if cfg.unlabeled_target {
        let t = &pair.target;
        let bare = Graph::new(t.adjacency().clone(), t.features().clone(), None, t.n_classes())?;
        run.outputs.push(write_graph(&bare, out, "target")?);
        let labels: String = t
            .labels()
            .unwrap_or_default()
            .iter()
            .map(|y| format!("{y}\n"))
            .collect();
        run.outputs.push(write_text(&out.join("target.eval_labels.txt"), labels)?);
    } else {
        run.outputs.push(write_graph(&pair.target, out, "target")?);
    }
    run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    run.write(out)?;
    Ok(run)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub manifest: PathBuf,
    pub train: SourceTrainConfig,
    pub split_ratio: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            manifest: PathBuf::new(),
            train: SourceTrainConfig::default(),
            split_ratio: 0.8,
        }
    }
}

#[derive(Serialize)]
struct TrainSummary {
    arch: String,
    epochs: usize,
    best_epoch: usize,
    best_val_macro_f1: Option<f64>,
    train_nodes: usize,
    val_nodes: usize,
}

pub fn train(cfg: &TrainConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut run = RunManifest::new("train-source", cfg, vec![cfg.train.seed])?;
    run.hash_dataset(&cfg.manifest, true)?;
    let g = load_graph(&cfg.manifest)?;
    let split = split_train_val(&g, cfg.split_ratio, cfg.train.seed)?;
    let ckpt = train_source(&g, &split, &cfg.train)?;
    let path = out.join("source.ckpt");
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_checkpoint(&ckpt, &path)?;
    run.outputs.push(path);
    let summary = TrainSummary {
        arch: ckpt.arch.to_string(),
        epochs: ckpt.meta.epochs,
        best_epoch: ckpt.meta.best_epoch,
        best_val_macro_f1: ckpt.meta.best_val_macro_f1,
        train_nodes: split.train_idx.len(),
        val_nodes: split.val_idx.len(),
    };
    run.outputs
        .push(write_text(&out.join("training.json"), serde_json::to_string_pretty(&summary)?)?);
    run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    run.write(out)?;
    Ok(run)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MineConfig {
    pub manifest: PathBuf,
    pub pairs: StructPairConfig,
}

pub fn mine(cfg: &MineConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut run = RunManifest::new("mine-pairs", cfg, Vec::new())?;
    run.hash_dataset(&cfg.manifest, false)?;
    let g = load_unlabeled(&cfg.manifest)?;
    let (pairs, summary) = mine_pairs(g.adjacency(), &cfg.pairs)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let tsv = out.join("pairs.tsv");
    pairs.write_tsv(&tsv)?;
    run.outputs.push(tsv);
    run.outputs
        .push(write_text(&out.join("mining.json"), serde_json::to_string_pretty(&summary)?)?);
    run.timings.insert("mining_s".into(), summary.wall_time_s);
    run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    run.write(out)?;
    Ok(run)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    pub ckpt: PathBuf,
    pub target_manifest: PathBuf,
    /// Precomputed structural pairs; mined with `mining` when absent.
    pub pairs: Option<PathBuf>,
    pub mining: StructPairConfig,
    pub soga: SogaConfig,
}

/// Reads a label prior: a JSON array, or numbers separated by commas or
/// whitespace.
pub fn read_prior(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::config(format!("non-numeric prior entry {t:?} in {}", path.display())))
        })
        .collect()
}

pub fn adapt_cmd(cfg: &AdaptConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut run = RunManifest::new("adapt", cfg, vec![cfg.soga.seed])?;
    run.hash_file(&cfg.ckpt)?;
    run.hash_dataset(&cfg.target_manifest, false)?;
    let model = load_checkpoint(&cfg.ckpt)?;
    let target = load_unlabeled(&cfg.target_manifest)?;
    let pairs = match &cfg.pairs {
        Some(p) => {
            run.hash_file(p)?;
            PairSet::read_tsv(target.adjacency(), p)?
        }
        None => {
            let (pairs, summary) = mine_pairs(target.adjacency(), &cfg.mining)?;
            run.timings.insert("mining_s".into(), summary.wall_time_s);
            pairs
        }
    };
    let (adapted, record) = adapt(&model, &target, &pairs, &cfg.soga)?;
    run.timings.insert("adapt_s".into(), record.wall_time_s);

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let ckpt_path = out.join("adapted.ckpt");
    save_checkpoint(&adapted, &ckpt_path)?;
    run.outputs.push(ckpt_path);

    let mut curve = String::from("epoch,l_im,l_sc,total\n");
    for r in &record.epochs {
        curve.push_str(&format!("{},{:?},{:?},{:?}\n", r.epoch, r.l_im, r.l_sc, r.total));
    }
    run.outputs.push(write_text(&out.join("curve.csv"), curve)?);

    let pred = adapted.predict(&target)?;
    run.outputs
        .push(write_text(&out.join("predictions.csv"), predictions_csv(pred.as_tensor().data(), pred.n_classes()))?);
    run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    run.write(out)?;
    Ok(run)
}

fn predictions_csv(data: &[f64], k: usize) -> String {
    let mut s = String::new();
    for row in data.chunks(k) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Either one integer class per line, or one probability row per line.
    pub predictions: PathBuf,
    /// One integer label per line.
    pub labels: PathBuf,
    /// Defaults to the probability-row width, or the largest class seen + 1.
    pub n_classes: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: MetricReport,
    /// Present for two-class probability predictions.
    pub auc: Option<f64>,
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::data(format!("non-numeric token {t:?} in {}", path.display())))
                })
                .collect()
        })
        .collect()
}

pub fn eval(cfg: &EvalConfig) -> Result<EvalReport> {
    let rows = read_rows(&cfg.predictions)?;
    let truth: Vec<usize> = read_rows(&cfg.labels)?
        .iter()
        .map(|r| match r.as_slice() {
            [y] if *y >= 0.0 && y.fract() == 0.0 => Ok(*y as usize),
            _ => Err(Error::data("label file must hold one non-negative integer per line")),
        })
        .collect::<Result<_>>()?;
    if rows.len() != truth.len() {
        return Err(Error::data(format!(
            "{} predictions but {} labels",
            rows.len(),
            truth.len()
        )));
    }
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::data("ragged prediction rows"));
    }
    let hard = width == 1;
    let pred: Vec<usize> = if hard {
        rows.iter()
            .map(|r| {
                if r[0] >= 0.0 && r[0].fract() == 0.0 {
                    Ok(r[0] as usize)
                } else {
                    Err(Error::data(format!("invalid class prediction {}", r[0])))
                }
            })
            .collect::<Result<_>>()?
    } else {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
                    .0
            })
            .collect()
    };
    let seen = pred.iter().chain(&truth).max().map_or(1, |m| m + 1);
    let k = cfg.n_classes.unwrap_or(if hard { seen } else { width.max(seen) });
    let metrics = MetricReport::compute(&pred, &truth, k)?;
    let auc = if !hard && width == 2 {
        let scores: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let labels: Vec<bool> = truth.iter().map(|&y| y == 1).collect();
        auc_binary(&scores, &labels).ok()
    } else {
        None
    };
    Ok(EvalReport { metrics, auc })
}

pub fn eval_cmd(cfg: &EvalConfig, out: Option<&Path>) -> Result<EvalReport> {
    let report = eval(cfg)?;
    if let Some(out) = out {
        let mut run = RunManifest::new("eval", cfg, Vec::new())?;
        run.hash_file(&cfg.predictions)?;
        run.hash_file(&cfg.labels)?;
        run.outputs
            .push(write_text(&out.join("metrics.json"), serde_json::to_string_pretty(&report)?)?);
        run.write(out)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaConfig {
    pub lemma1: LemmaOneConfig,
    pub lemma2: LemmaTwoSetup,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma1: LemmaOneReport,
    pub lemma2: LemmaTwoReport,
}

pub fn lemmas_cmd(cfg: &LemmaConfig, out: Option<&Path>) -> Result<LemmaReport> {
    let start = Instant::now();
    let report = LemmaReport {
        lemma1: verify_lemma1(&cfg.lemma1)?,
        lemma2: verify_lemma2(&cfg.lemma2)?,
    };
    if let Some(out) = out {
        let mut run = RunManifest::new("verify-lemmas", cfg, vec![cfg.lemma1.seed, cfg.lemma2.seed])?;
        run.outputs
            .push(write_text(&out.join("lemmas.json"), serde_json::to_string_pretty(&report)?)?);
        run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
        run.write(out)?;
    }
    Ok(report)
}

fn hash_data(run: &mut RunManifest, data: &DataSpec) -> Result<()> {
    if let DataSpec::Files { source, target } = data {
        run.hash_dataset(source, true)?;
        run.hash_dataset(target, true)?;
    }
    Ok(())
}

pub fn benchmark_cmd(cfg: &BenchmarkConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut run = RunManifest::new("run-benchmark", cfg, cfg.seeds.clone())?;
    hash_data(&mut run, &cfg.data)?;
    let report = run_benchmark(cfg)?;
    run.outputs.extend(write_benchmark(&report, out)?);
    run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    run.write(out)?;
    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} cells failed; see results.json", report.cells.len());
    }
    Ok(run)
}

pub fn sweep_cmd(cfg: &SweepConfig, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut run = RunManifest::new("sweep-lambdas", cfg, vec![cfg.seed])?;
    hash_data(&mut run, &cfg.data)?;
    let report = sweep_lambdas(cfg)?;
    run.outputs.extend(write_sweep(&report, out)?);
    run.timings.insert("total_s".into(), start.elapsed().as_secs_f64());
    run.write(out)?;
    Ok(run)
}

