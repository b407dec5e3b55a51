use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soga_core::diff::{sigmoid, Tensor};
use soga_core::gnn::{Arch, LinearProbe, Model, ModelCheckpoint, PredictionMatrix};
use soga_core::graph::{Adjacency, UnlabeledGraph};
use soga_core::soga::{
    adapt, adapt_with_observer, sc_objective, MarginalMode, Negatives, SogaConfig, Variant,
};
use soga_core::structure::PairSet;

fn onehot(k: usize, c: usize) -> Vec<f64> {
    (0..k).map(|j| if j == c { 1.0 } else { 0.0 }).collect()
}

fn no_pairs() -> PairSet {
    PairSet {
        local: Vec::new(),
        structural: Vec::new(),
        distances: Vec::new(),
    }
}

#[test]
fn single_pair_with_orthogonal_negatives() {
    let mut rows = vec![onehot(2, 0), onehot(2, 0)];
    rows.extend((0..5).map(|_| onehot(2, 1)));
    let pred = PredictionMatrix::from_rows(&rows).unwrap();
    let pairs = PairSet {
        local: vec![(0, 1)],
        ..no_pairs()
    };
    let negs = Negatives {
        per_pair: 5,
        local: vec![2, 3, 4, 5, 6],
        structural: Vec::new(),
    };
    let cfg = SogaConfig {
        lambda1: 1.0,
        lambda2: 0.0,
        ..Default::default()
    };
    let v = sc_objective(&pred, &pairs, &negs, &cfg).unwrap();
    let want = sigmoid(1.0).ln() - 5.0 * 0.5f64.ln();
    assert!((v - want).abs() < 1e-12);
    assert!((v - 3.1524).abs() < 1e-4);
}

#[test]
fn zero_lambdas_give_zero() {
    let pred = PredictionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4], vec![0.5, 0.5]]).unwrap();
    let pairs = PairSet {
        local: vec![(0, 1)],
        structural: vec![(1, 2)],
        distances: vec![0.0],
    };
    let negs = Negatives {
        per_pair: 1,
        local: vec![2],
        structural: vec![0],
    };
    let cfg = SogaConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        ..Default::default()
    };
    assert_eq!(sc_objective(&pred, &pairs, &negs, &cfg).unwrap(), 0.0);
}

#[test]
fn raw_sums_scale_with_pair_count() {
    let pred = PredictionMatrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
    let pairs = PairSet {
        local: vec![(0, 1), (1, 2), (2, 3)],
        ..no_pairs()
    };
    let negs = Negatives {
        per_pair: 1,
        local: vec![3, 0, 1],
        structural: Vec::new(),
    };
    let norm = sc_objective(&pred, &pairs, &negs, &SogaConfig::default()).unwrap();
    let raw = SogaConfig {
        normalize_pairs: false,
        ..Default::default()
    };
    let raw = sc_objective(&pred, &pairs, &negs, &raw).unwrap();
    assert!((raw - 3.0 * norm).abs() < 1e-12);
}

fn simplex_row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-6f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #[test]
    fn pair_scores_stay_in_bounds(k in 2usize..6, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut row = || {
            let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-9).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let pred = PredictionMatrix::from_rows(&[row(), row()]).unwrap();
        let pairs = PairSet { local: vec![(0, 1)], ..no_pairs() };
        let cfg = SogaConfig { lambda2: 0.0, ..Default::default() };
        let log_j = sc_objective(&pred, &pairs, &Negatives::default(), &cfg).unwrap();
        let j = log_j.exp();
        prop_assert!(j > 0.5 && j <= sigmoid(1.0) + 1e-15, "J = {}", j);
    }

    #[test]
    fn self_pair_of_onehot_is_the_upper_bound(row in simplex_row(4)) {
        let c = row.iter().enumerate().fold(0, |b, (i, v)| if *v > row[b] { i } else { b });
        let pred = PredictionMatrix::from_rows(&[onehot(4, c), onehot(4, c), row]).unwrap();
        let pairs = PairSet { local: vec![(0, 1)], ..no_pairs() };
        let cfg = SogaConfig { lambda2: 0.0, ..Default::default() };
        let v = sc_objective(&pred, &pairs, &Negatives::default(), &cfg).unwrap();
        prop_assert!((v - sigmoid(1.0).ln()).abs() < 1e-15);
    }
}

fn small_target(seed: u64, n: usize, d: usize) -> (UnlabeledGraph, PairSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.15 {
                edges.push((i, j));
            }
        }
    }
    let adj = Adjacency::from_edges(n, &edges).unwrap().0;
    let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let pairs = PairSet {
        local: adj.edges().collect(),
        structural: vec![(0, 1), (2, 3)],
        distances: vec![0.0, 0.0],
    };
    (UnlabeledGraph::new(adj, Tensor::from_vec(n, d, x).unwrap()).unwrap(), pairs)
}

#[test]
fn zero_epochs_returns_input_model() {
    let (g, pairs) = small_target(1, 20, 4);
    let m = ModelCheckpoint::init(Arch::Sage, 4, 6, 3, 1, 0.5, 2).unwrap();
    let cfg = SogaConfig {
        epochs: 0,
        ..Default::default()
    };
    let (out, record) = adapt(&m, &g, &pairs, &cfg).unwrap();
    assert_eq!(out, m);
    assert!(record.epochs.is_empty());
}

#[test]
fn entropy_only_probe_sharpens_every_node() {
    let (n, k) = (40, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w: Vec<f64> = (0..n * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let probe = LinearProbe::new(Tensor::from_vec(n, k, w).unwrap());
    let g = UnlabeledGraph::new(Adjacency::empty(n), Tensor::identity(n)).unwrap();
    let cfg = SogaConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        marginal_weight: 0.0,
        ..Default::default()
    };
    let mut prev: Option<Vec<f64>> = None;
    adapt_with_observer(&probe, &g, &no_pairs(), &cfg, |epoch, m, prepared| {
        let p = m.predict_prepared(prepared)?;
        let maxes: Vec<f64> = (0..n)
            .map(|i| p.as_tensor().row(i).iter().cloned().fold(0.0, f64::max))
            .collect();
        if let Some(before) = &prev {
            for (i, (a, b)) in before.iter().zip(&maxes).enumerate() {
                assert!(b + 1e-12 >= *a, "node {i} max probability fell at epoch {epoch}: {a} -> {b}");
            }
        }
        prev = Some(maxes);
        Ok(())
    })
    .unwrap();
}

#[test]
fn every_architecture_adapts_through_the_same_path() {
    let (g, pairs) = small_target(3, 24, 5);
    let cfg = SogaConfig {
        epochs: 5,
        lr: 1e-2,
        ..Default::default()
    };
    for arch in Arch::ALL {
        let m = ModelCheckpoint::init(arch, 5, 6, 3, 2, 0.5, 4).unwrap();
        let (out, record) = adapt(&m, &g, &pairs, &cfg).unwrap();
        assert_ne!(out.parameters(), m.parameters(), "{arch}");
        assert_eq!(record.epochs.len(), 5);
        assert!(record.epochs.iter().all(|e| e.total.is_finite()));
        let (again, _) = adapt(&m, &g, &pairs, &cfg).unwrap();
        assert_eq!(again, out, "{arch}: adaptation is not deterministic");
    }
    let probe = LinearProbe::new(Tensor::zeros(5, 3));
    let (out, _) = adapt(&probe, &g, &pairs, &cfg).unwrap();
    assert_ne!(out.weight(), probe.weight());
}

#[test]
fn variants_and_marginal_modes_run() {
    let (g, pairs) = small_target(5, 20, 4);
    let m = ModelCheckpoint::init(Arch::Gcn, 4, 6, 3, 1, 0.5, 1).unwrap();
    let base = SogaConfig {
        epochs: 3,
        ..Default::default()
    };
    for v in [Variant::Full, Variant::Im, Variant::Sc] {
        let (_, r) = adapt(&m, &g, &pairs, &base.for_variant(v)).unwrap();
        match v {
            Variant::Im => assert!(r.epochs.iter().all(|e| e.l_sc == 0.0)),
            Variant::Sc => assert!(r.epochs.iter().all(|e| e.l_im == 0.0)),
            Variant::Full => {}
        }
    }
    let kl = SogaConfig {
        marginal: MarginalMode::KlToPrior,
        prior: Some(vec![0.5, 0.25, 0.25]),
        ..base
    };
    let (_, r) = adapt(&m, &g, &pairs, &kl).unwrap();
    assert!(r.epochs.iter().all(|e| e.l_im.is_finite()));
    let wrong_k = SogaConfig {
        prior: Some(vec![0.5, 0.5]),
        ..kl
    };
    assert!(adapt(&m, &g, &pairs, &wrong_k).is_err());
}
