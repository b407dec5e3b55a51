mod commands;
mod manifest;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use soga_core::gnn::Arch;
use soga_core::pipeline::{BenchmarkConfig, DataSpec, SweepConfig};
use soga_core::soga::{MarginalMode, Variant};
use soga_core::Result;

use commands::*;
use manifest::read_config;

#[derive(Parser)]
#[command(name = "soga", version, about = "Source-free unsupervised graph domain adaptation")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SOGA_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic source/target graph pair.
    GenData(GenDataArgs),
    /// Train a GNN on a labeled source graph.
    TrainSource(TrainArgs),
    /// Mine structural-role pairs of a graph.
    MinePairs(MineArgs),
    /// Adapt a source checkpoint to an unlabeled target graph.
    Adapt(AdaptArgs),
    /// Score predictions against a label file.
    Eval(EvalArgs),
    /// Numerically check the entropy lemmas.
    VerifyLemmas(LemmaArgs),
    /// Full multi-architecture, multi-seed benchmark.
    RunBenchmark(BenchmarkArgs),
    /// Sweep the local/structural pair weights.
    SweepLambdas(SweepArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// JSON config (or a previous run.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    n_classes: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    /// Target edge-density multiplier.
    #[arg(long)]
    density_ratio: Option<f64>,
    /// Norm of the target feature translation.
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the target manifest without labels.
    #[arg(long)]
    unlabeled_target: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    arch: Option<Arch>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split_ratio: Option<f64>,
}

#[derive(Args)]
struct PairArgs {
    /// Number of structural pairs (default: edge count).
    #[arg(long)]
    kappa: Option<usize>,
    /// Ring depth.
    #[arg(long)]
    k_star: Option<usize>,
    /// Compare every node pair instead of log-degree bins.
    #[arg(long)]
    no_bins: bool,
    /// Drop candidate pairs that are already edges.
    #[arg(long)]
    exclude_edges: bool,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pairs: PairArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginalArg {
    Entropy,
    Kl,
}

#[derive(Args)]
struct AdaptArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    target_manifest: Option<PathBuf>,
    /// Pair TSV from mine-pairs; mined on the fly if absent.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    neg: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    marginal: Option<MarginalArg>,
    /// Label prior for the KL marginal: JSON array or separated numbers.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Sum pair terms instead of averaging them per family.
    #[arg(long)]
    raw_sums: bool,
    #[command(flatten)]
    mining: PairArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    n_classes: Option<usize>,
    /// Also write metrics.json and run.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Labeled source manifest (with --target, replaces generated data).
    #[arg(long, requires = "target")]
    source: Option<PathBuf>,
    #[arg(long, requires = "source")]
    target: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    archs: Option<Vec<Arch>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<Variant>>,
    /// Adaptation epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    arch: Option<Arch>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    match s.to_ascii_lowercase().as_str() {
        "full" | "soga" => Ok(Variant::Full),
        "im" | "soga-im" => Ok(Variant::Im),
        "sc" | "soga-sc" => Ok(Variant::Sc),
        other => Err(format!("unknown variant {other:?} (full, im, sc)")),
    }
}

fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    path.map_or_else(|| Ok(C::default()), read_config)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn required(path: &Path, flag: &str) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(soga_core::Error::config(format!("{flag} is required (flag or config)")));
    }
    Ok(())
}

fn apply_pairs(cfg: &mut soga_core::structure::StructPairConfig, a: &PairArgs) {
    if a.kappa.is_some() {
        cfg.kappa = a.kappa;
    }
    set(&mut cfg.k_star, a.k_star);
    if a.no_bins {
        cfg.candidate_bins = None;
    }
    cfg.exclude_edges |= a.exclude_edges;
}

fn apply_data(data: &mut DataSpec, a: &DataArgs) {
    if let (Some(s), Some(t)) = (&a.source, &a.target) {
        *data = DataSpec::Files {
            source: s.clone(),
            target: t.clone(),
        };
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(v)?;
    // A closed pipe (e.g. `| head`) is not an error.
    let _ = writeln!(std::io::stdout().lock(), "{body}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs.unwrap_or(0);
    match cli.command {
        Command::GenData(a) => {
            let mut cfg: GenDataConfig = load(a.config.as_deref())?;
            let d = &mut cfg.data;
            set(&mut d.n_nodes, a.n_nodes);
            set(&mut d.n_classes, a.n_classes);
            set(&mut d.feature_dim, a.feature_dim);
            set(&mut d.p_in, a.p_in);
            set(&mut d.p_out, a.p_out);
            set(&mut d.density_ratio, a.density_ratio);
            set(&mut d.shift, a.shift);
            set(&mut d.noise, a.noise);
            set(&mut d.seed, a.seed);
            cfg.unlabeled_target |= a.unlabeled_target;
            let run = gen_data(&cfg, &a.out)?;
            print_json(&run.outputs)
        }
        Command::TrainSource(a) => {
            let mut cfg: TrainConfig = load(a.config.as_deref())?;
            set(&mut cfg.manifest, a.manifest);
            required(&cfg.manifest, "--manifest")?;
            let t = &mut cfg.train;
            set(&mut t.arch, a.arch);
            set(&mut t.max_epochs, a.epochs);
            set(&mut t.patience, a.patience);
            set(&mut t.hidden_dim, a.hidden);
            set(&mut t.lr, a.lr);
            set(&mut t.seed, a.seed);
            set(&mut cfg.split_ratio, a.split_ratio);
            let run = train(&cfg, &a.out)?;
            print_json(&run.outputs)
        }
        Command::MinePairs(a) => {
            let mut cfg: MineConfig = load(a.config.as_deref())?;
            set(&mut cfg.manifest, a.manifest);
            required(&cfg.manifest, "--manifest")?;
            apply_pairs(&mut cfg.pairs, &a.pairs);
            let run = mine(&cfg, &a.out)?;
            print_json(&run.outputs)
        }
        Command::Adapt(a) => {
            let mut cfg: AdaptConfig = load(a.config.as_deref())?;
            set(&mut cfg.ckpt, a.ckpt);
            set(&mut cfg.target_manifest, a.target_manifest);
            required(&cfg.ckpt, "--ckpt")?;
            required(&cfg.target_manifest, "--target-manifest")?;
            if a.pairs.is_some() {
                cfg.pairs = a.pairs;
            }
            apply_pairs(&mut cfg.mining, &a.mining);
            let s = &mut cfg.soga;
            set(&mut s.lambda1, a.lambda1);
            set(&mut s.lambda2, a.lambda2);
            set(&mut s.neg, a.neg);
            set(&mut s.lr, a.lr);
            set(&mut s.epochs, a.epochs);
            set(&mut s.seed, a.seed);
            if let Some(m) = a.marginal {
                s.marginal = match m {
                    MarginalArg::Entropy => MarginalMode::Entropy,
                    MarginalArg::Kl => MarginalMode::KlToPrior,
                };
            }
            if let Some(p) = &a.prior {
                s.prior = Some(read_prior(p)?);
            }
            if a.raw_sums {
                s.normalize_pairs = false;
            }
            let run = adapt_cmd(&cfg, &a.out)?;
            print_json(&run.outputs)
        }
        Command::Eval(a) => {
            let mut cfg: EvalConfig = load(a.config.as_deref())?;
            set(&mut cfg.predictions, a.predictions);
            set(&mut cfg.labels, a.labels);
            required(&cfg.predictions, "--predictions")?;
            required(&cfg.labels, "--labels")?;
            if a.n_classes.is_some() {
                cfg.n_classes = a.n_classes;
            }
            let report = eval_cmd(&cfg, a.out.as_deref())?;
            print_json(&report)
        }
        Command::VerifyLemmas(a) => {
            let mut cfg: LemmaConfig = load(a.config.as_deref())?;
            if let Some(s) = a.seed {
                cfg.lemma1.seed = s;
                cfg.lemma2.seed = s;
            }
            let report = lemmas_cmd(&cfg, a.out.as_deref())?;
            print_json(&report)
        }
        Command::RunBenchmark(a) => {
            let mut cfg: BenchmarkConfig = load(a.config.as_deref())?;
            apply_data(&mut cfg.data, &a.data);
            set(&mut cfg.archs, a.archs);
            set(&mut cfg.seeds, a.seeds);
            set(&mut cfg.variants, a.variants);
            set(&mut cfg.soga.epochs, a.epochs);
            set(&mut cfg.soga.lambda1, a.lambda1);
            set(&mut cfg.soga.lambda2, a.lambda2);
            if cli.jobs.is_some() {
                cfg.jobs = jobs;
            }
            let run = benchmark_cmd(&cfg, &a.out)?;
            print_json(&run.outputs)
        }
        Command::SweepLambdas(a) => {
            let mut cfg: SweepConfig = load(a.config.as_deref())?;
            apply_data(&mut cfg.data, &a.data);
            set(&mut cfg.arch, a.arch);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.soga.epochs, a.epochs);
            if cli.jobs.is_some() {
                cfg.jobs = jobs;
            }
            let run = sweep_cmd(&cfg, &a.out)?;
            print_json(&run.outputs)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs.filter(|&j| j > 0) {
        // Sizes the global pool used by pair mining.
        std::env::set_var("RAYON_NUM_THREADS", j.to_string());
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
