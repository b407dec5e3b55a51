//! Multi-architecture, multi-seed benchmark and the λ sweep.
//!
//! Target labels are held by the harness only and used after the fact for
//! scoring; adaptation receives the unlabeled view.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_pair, DomainPairConfig};
use crate::error::{Error, Result};
use crate::eval::{stability_stats, StabilityStats, DEFAULT_SKIP};
use crate::gnn::{train_source, Arch, Model, ModelCheckpoint, SourceTrainConfig};
use crate::graph::{load_graph, load_labels, load_unlabeled, split_train_val, Graph, GraphInput, UnlabeledGraph};
use crate::soga::{adapt_with_observer, EpochRecord, SogaConfig, Variant};
use crate::structure::{mine_pairs, MiningSummary, PairSet, StructPairConfig};

pub const DEFAULT_SEEDS: [u64; 5] = [1, 3, 5, 7, 9];

/// Where the source and target graphs come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSpec {
    Generate(DomainPairConfig),
    Files { source: PathBuf, target: PathBuf },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Generate(DomainPairConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub data: DataSpec,
    pub archs: Vec<Arch>,
    pub seeds: Vec<u64>,
    /// Per-cell `arch` and `seed` are overridden.
    pub source_train: SourceTrainConfig,
    pub split_ratio: f64,
    /// Per-cell `seed` is overridden.
    pub soga: SogaConfig,
    pub variants: Vec<Variant>,
    pub pairs: StructPairConfig,
    pub skip_n: usize,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            data: DataSpec::default(),
            archs: Arch::ALL.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            source_train: SourceTrainConfig::default(),
            split_ratio: 0.8,
            soga: SogaConfig::default(),
            variants: vec![Variant::Full],
            pairs: StructPairConfig::default(),
            skip_n: DEFAULT_SKIP,
            jobs: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.archs.is_empty() || self.seeds.is_empty() || self.variants.is_empty() {
            return Err(Error::config("benchmark needs at least one arch, seed and variant"));
        }
        self.source_train.validate()?;
        self.soga.validate()?;
        self.pairs.validate()?;
        if let DataSpec::Generate(g) = &self.data {
            g.validate()?;
        }
        Ok(())
    }
}

/// Source graph, unlabeled target and the separately held target labels.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub source: Graph,
    pub target: UnlabeledGraph,
    pub target_labels: Option<Vec<usize>>,
    pub n_classes: usize,
}

pub fn load_data(spec: &DataSpec) -> Result<LoadedData> {
    match spec {
        DataSpec::Generate(cfg) => {
            let pair = gen_pair(cfg)?;
            let labels = pair.target.labels().map(<[usize]>::to_vec);
            Ok(LoadedData {
                n_classes: pair.source.n_classes(),
                source: pair.source,
                target: pair.target.into_unlabeled(),
                target_labels: labels,
            })
        }
        DataSpec::Files { source, target } => {
            let source = load_graph(source)?;
            if source.labels().is_none() {
                return Err(Error::data("the source graph must be labeled"));
            }
            let target_labels = load_labels(target)?;
            let target_graph = load_unlabeled(target)?;
            if target_graph.adjacency().n_nodes() == 0 {
                return Err(Error::data("empty target graph"));
            }
            Ok(LoadedData {
                n_classes: source.n_classes(),
                source,
                target: target_graph,
                target_labels,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

fn score<M: Model>(model: &M, prepared: &M::Prepared, labels: &[usize], k: usize) -> Result<Scores> {
    let r = model.predict_prepared(prepared)?.evaluate(labels, k)?;
    Ok(Scores {
        macro_f1: r.macro_f1,
        micro_f1: r.micro_f1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub l_im: f64,
    pub l_sc: f64,
    pub total: f64,
    pub macro_f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub adapted: Option<Scores>,
    pub curve: Vec<CurvePoint>,
    pub stability: Option<StabilityStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub arch: Arch,
    pub seed: u64,
    pub source_val_macro_f1: Option<f64>,
    pub unadapted: Option<Scores>,
    pub variants: Vec<VariantResult>,
    pub error: Option<String>,
}

/// Adapts `model` and scores every epoch when labels are available.
/// Returns the adapted model, the curve and the final scores.
pub fn adapt_and_track<M: Model>(
    model: &M,
    target: &UnlabeledGraph,
    labels: Option<&[usize]>,
    k: usize,
    pairs: &PairSet,
    cfg: &SogaConfig,
) -> Result<(M, Vec<CurvePoint>, Option<Scores>)> {
    let mut trace: Vec<f64> = Vec::new();
    let (adapted, record) = adapt_with_observer(model, target, pairs, cfg, |epoch, m, prepared| {
        if let Some(y) = labels {
            if epoch > 0 {
                trace.push(m.predict_prepared(prepared)?.evaluate(y, k)?.macro_f1);
            }
        }
        Ok(())
    })?;
    let curve = record
        .epochs
        .iter()
        .enumerate()
        .map(|(i, e): (usize, &EpochRecord)| CurvePoint {
            epoch: e.epoch,
            l_im: e.l_im,
            l_sc: e.l_sc,
            total: e.total,
            macro_f1: trace.get(i).copied(),
        })
        .collect();
    let scores = match labels {
        Some(y) => Some(score(&adapted, &adapted.prepare(target)?, y, k)?),
        None => None,
    };
    Ok((adapted, curve, scores))
}

fn run_cell(
    data: &LoadedData,
    pairs: &PairSet,
    cfg: &BenchmarkConfig,
    arch: Arch,
    seed: u64,
) -> Result<CellResult> {
    let split = split_train_val(&data.source, cfg.split_ratio, seed)?;
    let train_cfg = SourceTrainConfig {
        arch,
        seed,
        ..cfg.source_train.clone()
    };
    let ckpt: ModelCheckpoint = train_source(&data.source, &split, &train_cfg)?;
    let labels = data.target_labels.as_deref();
    let k = data.n_classes;
    let unadapted = match labels {
        Some(y) => Some(score(&ckpt, &ckpt.prepare(&data.target)?, y, k)?),
        None => None,
    };
    let mut variants = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let soga = SogaConfig {
            seed,
            ..cfg.soga.for_variant(variant)
        };
        let (_, curve, adapted) = adapt_and_track(&ckpt, &data.target, labels, k, pairs, &soga)?;
        let trace: Vec<f64> = curve.iter().filter_map(|c| c.macro_f1).collect();
        let stability = if trace.len() == curve.len() {
            stability_stats(&trace, cfg.skip_n).ok()
        } else {
            None
        };
        variants.push(VariantResult {
            variant,
            adapted,
            curve,
            stability,
        });
    }
    Ok(CellResult {
        arch,
        seed,
        source_val_macro_f1: ckpt.meta.best_val_macro_f1,
        unadapted,
        variants,
        error: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arch: Arch,
    /// "unadapted" or a variant label.
    pub method: String,
    pub runs: usize,
    pub macro_mean: f64,
    pub macro_std: f64,
    pub macro_median: f64,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub micro_median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub arch: Arch,
    pub variant: Variant,
    pub seed: u64,
    pub skip_n: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub mining: MiningSummaryNoTime,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    pub stability: Vec<StabilityRow>,
}

/// Mining summary without the wall-clock field, so reports are reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningSummaryNoTime {
    pub kappa: usize,
    pub k_star: usize,
    pub candidates: usize,
    pub selected: usize,
}

impl From<&MiningSummary> for MiningSummaryNoTime {
    fn from(s: &MiningSummary) -> Self {
        MiningSummaryNoTime {
            kappa: s.kappa,
            k_star: s.k_star,
            candidates: s.candidates,
            selected: s.selected,
        }
    }
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn summary_row(arch: Arch, method: String, scores: &[Scores]) -> SummaryRow {
    let ma: Vec<f64> = scores.iter().map(|s| s.macro_f1).collect();
    let mi: Vec<f64> = scores.iter().map(|s| s.micro_f1).collect();
    let (macro_mean, macro_std) = mean_std(&ma);
    let (micro_mean, micro_std) = mean_std(&mi);
    SummaryRow {
        arch,
        method,
        runs: scores.len(),
        macro_mean,
        macro_std,
        macro_median: median(&ma),
        micro_mean,
        micro_std,
        micro_median: median(&mi),
    }
}

fn summarize(cfg: &BenchmarkConfig, cells: &[CellResult]) -> (Vec<SummaryRow>, Vec<StabilityRow>) {
    let mut rows = Vec::new();
    let mut stab = Vec::new();
    for &arch in &cfg.archs {
        let ok: Vec<&CellResult> = cells.iter().filter(|c| c.arch == arch && c.error.is_none()).collect();
        let un: Vec<Scores> = ok.iter().filter_map(|c| c.unadapted).collect();
        if !un.is_empty() {
            rows.push(summary_row(arch, "unadapted".into(), &un));
        }
        for &variant in &cfg.variants {
            let ad: Vec<Scores> = ok
                .iter()
                .flat_map(|c| c.variants.iter().filter(|v| v.variant == variant))
                .filter_map(|v| v.adapted)
                .collect();
            if !ad.is_empty() {
                rows.push(summary_row(arch, variant.label().into(), &ad));
            }
            for c in &ok {
                for v in c.variants.iter().filter(|v| v.variant == variant) {
                    if let Some(s) = &v.stability {
                        stab.push(StabilityRow {
                            arch,
                            variant,
                            seed: c.seed,
                            skip_n: s.skip_n,
                            mean: s.mean,
                            std: s.std,
                        });
                    }
                }
            }
        }
    }
    (rows, stab)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))
}

/// Trains, scores, adapts and re-scores every (arch, seed) cell. A failing
/// cell is recorded and the others continue.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let data = load_data(&cfg.data)?;
    if data.target_labels.is_none() {
        log::info!("target has no labels; evaluation steps are skipped");
    }
    run_benchmark_on(cfg, &data)
}

pub fn run_benchmark_on(cfg: &BenchmarkConfig, data: &LoadedData) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let pool = thread_pool(cfg.jobs)?;
    pool.install(|| {
        let (pairs, mining) = mine_pairs(data.target.adjacency(), &cfg.pairs)?;
        log::info!(
            "mined {} structural pairs from {} candidates in {:.1}s",
            mining.selected,
            mining.candidates,
            mining.wall_time_s
        );
        let grid: Vec<(Arch, u64)> = cfg
            .archs
            .iter()
            .flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s)))
            .collect();
        let cells: Vec<CellResult> = grid
            .par_iter()
            .map(|&(arch, seed)| {
                run_cell(data, &pairs, cfg, arch, seed).unwrap_or_else(|e| {
                    log::error!("cell ({arch}, seed {seed}) failed: {e}");
                    CellResult {
                        arch,
                        seed,
                        source_val_macro_f1: None,
                        unadapted: None,
                        variants: Vec::new(),
                        error: Some(e.to_string()),
                    }
                })
            })
            .collect();
        let (summary, stability) = summarize(cfg, &cells);
        Ok(BenchmarkReport {
            config: cfg.clone(),
            mining: (&mining).into(),
            cells,
            summary,
            stability,
        })
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn slug(arch: Arch) -> &'static str {
    match arch {
        Arch::Gcn => "gcn",
        Arch::Sage => "sage",
        Arch::Gat => "gat",
    }
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from("epoch,l_im,l_sc,total,macro_f1\n");
    for c in curve {
        let _ = writeln!(s, "{},{},{},{},{}", c.epoch, c.l_im, c.l_sc, c.total, fmt_opt(c.macro_f1));
    }
    s
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `results.json`, `summary.csv`, `stability.csv` and per-cell curves.
/// Returns the paths written.
pub fn write_benchmark(report: &BenchmarkReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let curves = dir.join("curves");
    fs::create_dir_all(&curves).map_err(|e| Error::io(&curves, e))?;
    let mut written = Vec::new();

    let p = dir.join("results.json");
    write(&p, serde_json::to_vec_pretty(report)?)?;
    written.push(p);

    let mut s = String::from("arch,method,runs,macro_f1_mean,macro_f1_std,macro_f1_median,micro_f1_mean,micro_f1_std,micro_f1_median\n");
    for r in &report.summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.arch, r.method, r.runs, r.macro_mean, r.macro_std, r.macro_median, r.micro_mean, r.micro_std, r.micro_median
        );
    }
    let p = dir.join("summary.csv");
    write(&p, s)?;
    written.push(p);

    let mut s = String::from("arch,variant,seed,skip_n,mean,std\n");
    for r in &report.stability {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.arch, r.variant.label(), r.seed, r.skip_n, r.mean, r.std);
    }
    let p = dir.join("stability.csv");
    write(&p, s)?;
    written.push(p);

    for c in &report.cells {
        for v in &c.variants {
            let p = curves.join(format!("{}_{}_seed{}.csv", slug(c.arch), v.variant.label(), c.seed));
            write(&p, curve_csv(&v.curve))?;
            written.push(p);
        }
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub data: DataSpec,
    pub arch: Arch,
    pub seed: u64,
    pub source_train: SourceTrainConfig,
    pub split_ratio: f64,
    pub soga: SogaConfig,
    pub pairs: StructPairConfig,
    /// The larger λ of each choice.
    pub big: f64,
    /// The smaller λ values, one run each per arm.
    pub small: Vec<f64>,
    pub skip: usize,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            data: DataSpec::default(),
            arch: Arch::Gcn,
            seed: 1,
            source_train: SourceTrainConfig::default(),
            split_ratio: 0.8,
            soga: SogaConfig::default(),
            pairs: StructPairConfig::default(),
            big: 1.0,
            small: (0..10).map(|i| i as f64 / 10.0).collect(),
            skip: 10,
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epoch: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArm {
    pub name: String,
    pub choices: Vec<(f64, f64)>,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub arms: Vec<SweepArm>,
}

/// Two arms, `λ1 > λ2` and `λ2 > λ1`, each with one run per `small` value.
/// Per epoch after `skip`, the Macro-F1 mean and std across the arm's runs.
pub fn sweep_lambdas(cfg: &SweepConfig) -> Result<SweepReport> {
    let data = load_data(&cfg.data)?;
    sweep_lambdas_on(cfg, &data)
}

pub fn sweep_lambdas_on(cfg: &SweepConfig, data: &LoadedData) -> Result<SweepReport> {
    cfg.soga.validate()?;
    if cfg.small.is_empty() {
        return Err(Error::config("sweep needs at least one lambda choice"));
    }
    if cfg.skip >= cfg.soga.epochs {
        return Err(Error::config(format!(
            "sweep skips {} epochs but only {} are run",
            cfg.skip, cfg.soga.epochs
        )));
    }
    let labels = data
        .target_labels
        .as_deref()
        .ok_or_else(|| Error::data("the lambda sweep scores every epoch and needs target labels"))?;
    let pool = thread_pool(cfg.jobs)?;
    pool.install(|| {
        let (pairs, _) = mine_pairs(data.target.adjacency(), &cfg.pairs)?;
        let split = split_train_val(&data.source, cfg.split_ratio, cfg.seed)?;
        let train_cfg = SourceTrainConfig {
            arch: cfg.arch,
            seed: cfg.seed,
            ..cfg.source_train.clone()
        };
        let ckpt = train_source(&data.source, &split, &train_cfg)?;
        let arms = [
            ("lambda1>lambda2", cfg.small.iter().map(|&s| (cfg.big, s)).collect::<Vec<_>>()),
            ("lambda2>lambda1", cfg.small.iter().map(|&s| (s, cfg.big)).collect::<Vec<_>>()),
        ];
        arms.into_iter()
            .map(|(name, choices)| {
                let traces: Vec<Vec<f64>> = choices
                    .par_iter()
                    .map(|&(l1, l2)| {
                        let soga = SogaConfig {
                            lambda1: l1,
                            lambda2: l2,
                            seed: cfg.seed,
                            ..cfg.soga.clone()
                        };
                        let (_, curve, _) =
                            adapt_and_track(&ckpt, &data.target, Some(labels), data.n_classes, &pairs, &soga)?;
                        Ok(curve.iter().filter_map(|c| c.macro_f1).collect())
                    })
                    .collect::<Result<_>>()?;
                let rows = (cfg.skip..cfg.soga.epochs)
                    .map(|e| {
                        let at: Vec<f64> = traces.iter().map(|t| t[e]).collect();
                        let (mean, std) = mean_std(&at);
                        SweepRow { epoch: e + 1, mean, std }
                    })
                    .collect();
                Ok(SweepArm {
                    name: name.into(),
                    choices,
                    rows,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(|arms| SweepReport {
                config: cfg.clone(),
                arms,
            })
    })
}

pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut s = String::from("arm,epoch,mean,std\n");
    for arm in &report.arms {
        for r in &arm.rows {
            let _ = writeln!(s, "{},{},{},{}", arm.name, r.epoch, r.mean, r.std);
        }
    }
    let csv = dir.join("sweep.csv");
    write(&csv, s)?;
    let json = dir.join("sweep.json");
    write(&json, serde_json::to_vec_pretty(report)?)?;
    Ok(vec![csv, json])
}
