//! Acceptance suite. One line per criterion; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use soga_core::datagen::DomainPairConfig;
use soga_core::diff::{grad_check, Tensor, Var};
use soga_core::eval::{
    auc_binary, descend_entropy, lemma_two_scores, macro_f1, micro_f1, softmax_rows, verify_lemma2, LemmaTwoSetup,
};
use soga_core::gnn::{cross_entropy_on_tape, Arch, Mode, Model, ModelCheckpoint};
use soga_core::graph::{write_graph, Adjacency, Graph, UnlabeledGraph};
use soga_core::pipeline::{run_benchmark, BenchmarkConfig, CellResult, DataSpec};
use soga_core::soga::{
    conditional_entropy_on_tape, im_objective_on_tape, kl_marginal_on_tape, marginal_entropy_on_tape,
    sc_objective_on_tape, NegativeSampler, SogaConfig, Variant,
};
use soga_core::structure::{brute_force_pairs, mine_pairs, PairSet, StructPairConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Adjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Adjacency::from_edges(n, &edges).unwrap().0
}

const GRAD_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, k) = (10, 4);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, err: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(err);
    };

    for trial in 0..5 {
        let z = gaussian(&mut rng, n, k);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let idx: Vec<usize> = (0..n).filter(|i| i % 3 != 0).collect();
        let prior = {
            let raw: Vec<f64> = (0..k).map(|_| 0.5 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let adj = random_graph(&mut rng, n, 0.3);
        let pairs = PairSet {
            local: adj.edges().collect(),
            structural: vec![(0, 5), (1, 7), (2, 9), (3, 4)],
            distances: vec![0.0; 4],
        };
        let negatives = NegativeSampler::new(n, trial).draw(&pairs, 5);
        let cfg = SogaConfig {
            lambda1: 0.7,
            lambda2: 1.3,
            ..Default::default()
        };

        note(
            "cross-entropy",
            grad_check(
                |t, x| {
                    let p = t.row_softmax(x);
                    cross_entropy_on_tape(t, p, &labels, &idx)
                },
                &z,
                FD_STEP,
            )
            .map_err(|e| e.to_string())?,
        );
        note(
            "conditional entropy",
            grad_check(
                |t, x| {
                    let p = t.row_softmax(x);
                    Ok(conditional_entropy_on_tape(t, p))
                },
                &z,
                FD_STEP,
            )
            .map_err(|e| e.to_string())?,
        );
        note(
            "marginal entropy",
            grad_check(
                |t, x| {
                    let p = t.row_softmax(x);
                    Ok(marginal_entropy_on_tape(t, p))
                },
                &z,
                FD_STEP,
            )
            .map_err(|e| e.to_string())?,
        );
        note(
            "kl marginal",
            grad_check(
                |t, x| {
                    let p = t.row_softmax(x);
                    kl_marginal_on_tape(t, p, &prior)
                },
                &z,
                FD_STEP,
            )
            .map_err(|e| e.to_string())?,
        );
        note(
            "structure consistency",
            grad_check(
                |t, x| {
                    let p = t.row_softmax(x);
                    sc_objective_on_tape(t, p, &pairs, &negatives, &cfg)
                },
                &z,
                FD_STEP,
            )
            .map_err(|e| e.to_string())?,
        );

        // Total objective through each architecture, one parameter at a time.
        let feats = gaussian(&mut rng, n, 6);
        let target = UnlabeledGraph::new(adj.clone(), feats).unwrap();
        for arch in Arch::ALL {
            let model = ModelCheckpoint::init(arch, 6, 5, k, 2, 0.5, trial).unwrap();
            let prepared = model.prepare(&target).unwrap();
            for (pi, param) in model.parameters().iter().enumerate() {
                let err = grad_check(
                    |t, x| {
                        let params: Vec<Var> = model
                            .parameters()
                            .iter()
                            .enumerate()
                            .map(|(j, p)| if j == pi { x } else { t.constant(p.clone()) })
                            .collect();
                        let mut drop_rng = ChaCha8Rng::seed_from_u64(99);
                        let probs = model.forward_on_tape(t, &params, &prepared, Mode::Train, &mut drop_rng)?;
                        let im = im_objective_on_tape(t, probs, &cfg)?;
                        let sc = sc_objective_on_tape(t, probs, &pairs, &negatives, &cfg)?;
                        let total = t.add(im, sc)?;
                        Ok(t.scale(total, -1.0))
                    },
                    param,
                    FD_STEP,
                )
                .map_err(|e| e.to_string())?;
                note(
                    match arch {
                        Arch::Gcn => "total objective (GCN)",
                        Arch::Sage => "total objective (GraphSAGE)",
                        Arch::Gat => "total objective (GAT)",
                    },
                    err,
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let max = worst.values().cloned().fold(0.0, f64::max);
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k} {v:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(max < GRAD_TOL, || format!("max relative error {max:.2e} ({detail})"))?;
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!("max relative error {max:.2e} < 1e-4 in {secs:.1}s ({detail})"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (n, k) = (200, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rows = Vec::with_capacity(n);
    let mut expected = Vec::with_capacity(n);
    for i in 0..n {
        let eta = 1 + i % 3;
        let mut row: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut positions: Vec<usize> = (0..k).collect();
        for p in 0..eta {
            let q = rng.random_range(p..k);
            positions.swap(p, q);
        }
        let top_set = &positions[..eta];
        let rest_max = (0..k)
            .filter(|c| !top_set.contains(c))
            .map(|c| row[c])
            .fold(f64::NEG_INFINITY, f64::max);
        let top = rest_max + 0.05 + rng.random::<f64>();
        for &c in top_set {
            row[c] = top;
        }
        expected.push(
            (0..k)
                .map(|c| if top_set.contains(&c) { 1.0 / eta as f64 } else { 0.0 })
                .collect::<Vec<f64>>(),
        );
        rows.push(row);
    }
    let z0 = Tensor::from_rows(&rows).unwrap();
    let z = descend_entropy(z0, 4000, n as f64).map_err(|e| e.to_string())?;
    let p = softmax_rows(&z);
    let mut worst: f64 = 0.0;
    let mut within = 0;
    for (r, want) in expected.iter().enumerate() {
        let err = p.row(r).iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
        if err <= 1e-3 {
            within += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(within == n, || format!("{within}/{n} nodes within 1e-3 (worst {worst:.2e})"))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{within}/{n} nodes (eta 1, 2, 3) within 1e-3; worst linf {worst:.2e}; {secs:.1}s"))
}

fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn criterion_3() -> Outcome {
    let r = verify_lemma2(&LemmaTwoSetup::default()).map_err(|e| e.to_string())?;
    let (scores, labels) = lemma_two_scores(&LemmaTwoSetup::default()).map_err(|e| e.to_string())?;
    let oracle_before = pair_count_auc(&scores, &labels);
    let hard: Vec<f64> = scores.iter().map(|&s| if s > 0.5 { 1.0 } else { 0.0 }).collect();
    let oracle_after = pair_count_auc(&hard, &labels);
    ensure((r.auc_before - 0.49).abs() <= 0.02, || format!("before {}", r.auc_before))?;
    ensure((r.auc_before - oracle_before).abs() < 1e-12, || "before disagrees with oracle".into())?;
    ensure(r.auc_after == 0.7 && oracle_after == 0.7, || {
        format!("after {} (oracle {oracle_after})", r.auc_after)
    })?;
    ensure((r.improvement - 0.21).abs() < 1e-12, || format!("improvement {}", r.improvement))?;

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for grid in 0..20 {
        let setup = LemmaTwoSetup {
            r_p: rng.random_range(1..100) as f64 / 100.0,
            r_n: rng.random_range(1..100) as f64 / 100.0,
            seed: grid,
            steps: 500,
            ..Default::default()
        };
        let rep = verify_lemma2(&setup).map_err(|e| e.to_string())?;
        let (s, l) = lemma_two_scores(&setup).map_err(|e| e.to_string())?;
        let hard: Vec<f64> = s.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        let oracle = pair_count_auc(&hard, &l);
        let want = (setup.r_p + setup.r_n) / 2.0;
        ensure(rep.auc_after == oracle && (oracle - want).abs() < 1e-12, || {
            format!(
                "grid {grid} (r_p {}, r_n {}): after {} oracle {oracle} want {want}",
                setup.r_p, setup.r_n, rep.auc_after
            )
        })?;
    }
    Ok(format!(
        "before {:.4} (bound 0.49), after {} exactly, improvement {:.2}; 20/20 random grids at (r_p+r_n)/2",
        r.auc_before, r.auc_after, r.improvement
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let cfg = StructPairConfig {
        candidate_bins: None,
        ..Default::default()
    };
    let mut total_pairs = 0;
    for g in 0..50 {
        let n = rng.random_range(2..=100);
        let p = rng.random_range(0.01..0.15);
        let adj = random_graph(&mut rng, n, p);
        let (mined, _) = mine_pairs(&adj, &cfg).map_err(|e| e.to_string())?;
        let brute = brute_force_pairs(&adj, &cfg).map_err(|e| e.to_string())?;
        ensure(mined.structural == brute.structural, || format!("graph {g} (n={n}): pair lists differ"))?;
        let same_bits = mined
            .distances
            .iter()
            .zip(&brute.distances)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same_bits, || format!("graph {g}: distances differ"))?;
        ensure(mined.structural.len() == adj.n_edges().min(n * (n - 1) / 2), || {
            format!("graph {g}: expected kappa = |E| pairs")
        })?;
        total_pairs += mined.structural.len();
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("50/50 graphs bit-identical ({total_pairs} pairs total) in {secs:.1}s"))
}

fn oracle_f1(pred: &[usize], truth: &[usize], k: usize) -> (f64, f64) {
    let mut f1s = Vec::new();
    for c in 0..k {
        let tp = pred.iter().zip(truth).filter(|(p, t)| **p == c && **t == c).count() as f64;
        let fp = pred.iter().zip(truth).filter(|(p, t)| **p == c && **t != c).count() as f64;
        let fneg = pred.iter().zip(truth).filter(|(p, t)| **p != c && **t == c).count() as f64;
        // F1 = 2TP / (2TP + FP + FN), defined as 0 when the class never occurs.
        let den = 2.0 * tp + fp + fneg;
        f1s.push(if den == 0.0 { 0.0 } else { 2.0 * tp / den });
    }
    let macro_ = f1s.iter().sum::<f64>() / k as f64;
    let acc = pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64;
    (macro_, acc)
}

/// Mann-Whitney U from average ranks.
fn rank_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            ranks[t] = avg;
        }
        i = j + 1;
    }
    let np = labels.iter().filter(|&&l| l).count() as f64;
    let nn = labels.len() as f64 - np;
    let rp: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    (rp - np * (np + 1.0) / 2.0) / (np * nn)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    for inst in 0..1000 {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=6);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let (om, oa) = oracle_f1(&pred, &truth, k);
        let m = macro_f1(&pred, &truth, k).map_err(|e| e.to_string())?;
        let a = micro_f1(&pred, &truth, k).map_err(|e| e.to_string())?;
        worst = worst.max((m - om).abs()).max((a - oa).abs());

        let n2 = rng.random_range(2..=50);
        let mut labels: Vec<bool> = (0..n2).map(|_| rng.random::<bool>()).collect();
        labels[0] = true;
        labels[1] = false;
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n2).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let auc = auc_binary(&scores, &labels).map_err(|e| e.to_string())?;
        let err = (auc - rank_auc(&scores, &labels)).abs();
        ensure(err < 1e-12, || format!("instance {inst}: AUC {auc} vs rank oracle"))?;
        worst = worst.max(err);
    }
    ensure(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000/1000 instances match (max deviation {worst:.1e})"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn e2e_config(rho: f64) -> BenchmarkConfig {
    BenchmarkConfig {
        data: DataSpec::Generate(DomainPairConfig {
            n_nodes: 1000,
            n_classes: 4,
            density_ratio: rho,
            shift: 1.0,
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let defaults = SogaConfig::default();
    ensure(defaults.lambda1 == 1.0 && defaults.lambda2 == 1.0, || "defaults changed".into())?;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for rho in [0.25, 4.0] {
        let report = run_benchmark(&e2e_config(rho)).map_err(|e| e.to_string())?;
        for arch in Arch::ALL {
            let cells: Vec<&CellResult> = report.cells.iter().filter(|c| c.arch == arch).collect();
            if let Some(err) = cells.iter().find_map(|c| c.error.as_ref()) {
                failures.push(format!("rho {rho} {arch}: cell failed: {err}"));
                continue;
            }
            let un: Vec<f64> = cells.iter().filter_map(|c| c.unadapted.map(|s| s.macro_f1)).collect();
            let ad: Vec<f64> = cells
                .iter()
                .flat_map(|c| &c.variants)
                .filter(|v| v.variant == Variant::Full)
                .filter_map(|v| v.adapted.map(|s| s.macro_f1))
                .collect();
            if un.len() != 5 || ad.len() != 5 {
                failures.push(format!("rho {rho} {arch}: missing scores"));
                continue;
            }
            let (mu, ma) = (median(un), median(ad));
            lines.push(format!("rho {rho} {arch} {mu:.4}->{ma:.4}"));
            if ma <= mu {
                failures.push(format!("rho {rho} {arch}: adapted median {ma:.4} <= unadapted {mu:.4}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 900.0 {
        failures.push(format!("took {secs:.0}s"));
    }
    let detail = lines.join("; ");
    if failures.is_empty() {
        Ok(format!("median Macro-F1 unadapted->adapted: {detail}; {secs:.0}s"))
    } else {
        Err(format!("{} ({detail})", failures.join("; ")))
    }
}

fn criterion_7() -> Outcome {
    let cfg = BenchmarkConfig {
        archs: vec![Arch::Gcn],
        variants: vec![Variant::Full, Variant::Im, Variant::Sc],
        ..e2e_config(0.25)
    };
    let report = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    for v in [Variant::Full, Variant::Im, Variant::Sc] {
        let rows = report.stability.iter().filter(|r| r.variant == v).count();
        ensure(rows == 5, || format!("{} emitted {rows}/5 stability rows", v.label()))?;
    }
    let std_of = |v: Variant, seed: u64| {
        report
            .stability
            .iter()
            .find(|r| r.variant == v && r.seed == seed)
            .map(|r| r.std)
            .unwrap_or(f64::NAN)
    };
    let seeds = &cfg.seeds;
    let wins = seeds
        .iter()
        .filter(|&&s| std_of(Variant::Full, s) <= std_of(Variant::Im, s))
        .count();
    let fmt = |v: Variant| {
        let xs: Vec<f64> = seeds.iter().map(|&s| std_of(v, s)).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let soft = if wins >= 4 { "met" } else { "not met" };
    Ok(format!(
        "3 variants x 5 seeds emitted stability stats; mean std SOGA {:.4}, SOGA-IM {:.4}, SOGA-SC {:.4}; soft criterion {soft}: SOGA std <= SOGA-IM std in {wins}/5 seeds",
        fmt(Variant::Full),
        fmt(Variant::Im),
        fmt(Variant::Sc)
    ))
}

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn criterion_8() -> Status {
    let (Ok(source), Ok(target)) = (std::env::var("SOGA_FULLSCALE_SOURCE"), std::env::var("SOGA_FULLSCALE_TARGET"))
    else {
        return Status::Skip(
            "full-scale reproduction not CI-gated; set SOGA_FULLSCALE_SOURCE and SOGA_FULLSCALE_TARGET to ACMv9 and DBLPv8 manifests to run it".into(),
        );
    };
    let cfg = BenchmarkConfig {
        data: DataSpec::Files {
            source: PathBuf::from(source),
            target: PathBuf::from(target),
        },
        archs: vec![Arch::Gcn],
        ..Default::default()
    };
    match run_benchmark(&cfg) {
        Ok(r) => match r.summary.iter().find(|s| s.method == Variant::Full.label()) {
            Some(row) if (row.macro_mean - 0.928).abs() <= 0.05 => {
                Status::Pass(format!("GCN-SOGA Macro-F1 {:.4} within 0.05 of 0.928", row.macro_mean))
            }
            Some(row) => Status::Fail(format!("GCN-SOGA Macro-F1 {:.4} outside 0.928 +/- 0.05", row.macro_mean)),
            None => Status::Fail("no labeled target; cannot score".into()),
        },
        Err(e) => Status::Fail(e.to_string()),
    }
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 60;
    let adj = random_graph(&mut rng, n, 0.08);
    let source = Graph::new(
        adj.clone(),
        gaussian(&mut rng, n, 5),
        Some((0..n).map(|i| i % 3).collect()),
        3,
    )
    .map_err(|e| e.to_string())?;
    let target = Graph::new(adj, gaussian(&mut rng, n, 5), None, 3).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sp = write_graph(&source, dir.path(), "source").map_err(|e| e.to_string())?;
    let tp = write_graph(&target, dir.path(), "target").map_err(|e| e.to_string())?;
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&tp).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(manifest["labels"].is_null(), || "target manifest carries labels".into())?;

    let cfg = BenchmarkConfig {
        data: DataSpec::Files { source: sp, target: tp },
        archs: Arch::ALL.to_vec(),
        seeds: vec![1],
        source_train: soga_core::gnn::SourceTrainConfig {
            hidden_dim: 8,
            max_epochs: 20,
            patience: 5,
            ..Default::default()
        },
        soga: SogaConfig {
            epochs: 25,
            ..Default::default()
        },
        ..Default::default()
    };
    let report = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    for c in &report.cells {
        ensure(c.error.is_none(), || format!("{} failed: {:?}", c.arch, c.error))?;
        ensure(c.unadapted.is_none(), || "unlabeled target was scored".into())?;
        let v = &c.variants[0];
        ensure(v.adapted.is_none() && v.curve.len() == 25, || "adaptation did not complete".into())?;
        ensure(v.curve.iter().all(|p| p.macro_f1.is_none() && p.total.is_finite()), || {
            "curve carries label-derived values".into()
        })?;
    }
    Ok("label-free target manifest adapted end-to-end for GCN, GraphSAGE and GAT; scoring skipped".into())
}

fn main() {
    let started = Instant::now();
    type Criterion = (u32, &'static str, Box<dyn Fn() -> Status>);
    let criteria: Vec<Criterion> = vec![
        (1, "gradient suite", Box::new(|| to_status(criterion_1()))),
        (2, "Lemma 1 convergence", Box::new(|| to_status(criterion_2()))),
        (3, "Lemma 2 AUC", Box::new(|| to_status(criterion_3()))),
        (4, "pair-mining oracle", Box::new(|| to_status(criterion_4()))),
        (5, "metric oracles", Box::new(|| to_status(criterion_5()))),
        (6, "end-to-end adaptation", Box::new(|| to_status(criterion_6()))),
        (7, "ablation stability", Box::new(|| to_status(criterion_7()))),
        (8, "full-scale reproduction", Box::new(criterion_8)),
        (9, "label-free target contract", Box::new(|| to_status(criterion_9()))),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        match run() {
            Status::Pass(d) => println!("criterion {id} ({name}): PASS: {d}"),
            Status::Skip(d) => println!("criterion {id} ({name}): SKIP: {d}"),
            Status::Fail(d) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL: {d}");
            }
        }
    }
    println!("acceptance: {failed} failed; {:.0}s", started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn to_status(o: Outcome) -> Status {
    match o {
        Ok(d) => Status::Pass(d),
        Err(d) => Status::Fail(d),
    }
}
