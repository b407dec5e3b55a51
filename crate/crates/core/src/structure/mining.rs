use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{bound_exceeds, distance_with, lower_bound, CostTable, DtwScratch};
use super::rings::RingSequences;
use super::{PairSet, StructPairConfig};
use crate::error::{Error, Result};
use crate::graph::Adjacency;

/// A scored candidate pair, totally ordered by `(distance, i, j)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Scored {
    pub(crate) dist: f64,
    pub(crate) i: usize,
    pub(crate) j: usize,
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.i.cmp(&other.i))
            .then(self.j.cmp(&other.j))
    }
}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scored {}

const CHUNK: usize = 2048;

/// Keeps the `cap` smallest items seen.
struct TopK {
    cap: usize,
    heap: BinaryHeap<Scored>,
}

impl TopK {
    fn new(cap: usize) -> Self {
        TopK {
            cap,
            heap: BinaryHeap::with_capacity(cap.min(1 << 20) + 1),
        }
    }

    fn push(&mut self, s: Scored) {
        if self.heap.len() < self.cap {
            self.heap.push(s);
        } else if let Some(top) = self.heap.peek() {
            if s < *top {
                self.heap.pop();
                self.heap.push(s);
            }
        }
    }

    /// Largest kept item's distance once full; anything strictly worse
    /// can be discarded.
    fn threshold(&self) -> f64 {
        match self.heap.peek() {
            Some(top) if self.heap.len() >= self.cap => top.dist,
            _ if self.cap == 0 => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningSummary {
    pub kappa: usize,
    pub k_star: usize,
    pub candidates: usize,
    pub selected: usize,
    pub wall_time_s: f64,
}

/// `floor(log_base(d + 1))`, computed by repeated multiplication so exact
/// powers land in the right bin.
pub(crate) fn degree_bin(d: usize, base: f64) -> i64 {
    let x = (d + 1) as f64;
    let mut bin = 0;
    let mut t = base;
    while t <= x {
        bin += 1;
        t *= base;
    }
    bin
}

pub(crate) fn resolve_kappa(adj: &Adjacency, cfg: &StructPairConfig) -> Result<usize> {
    match cfg.kappa {
        Some(0) => Err(Error::config("kappa must be at least 1")),
        Some(k) => Ok(k),
        None => Ok(adj.n_edges()),
    }
}

/// Top-κ structurally similar pairs among degree-bin candidates.
pub fn mine_pairs(adj: &Adjacency, cfg: &StructPairConfig) -> Result<(PairSet, MiningSummary)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = adj.n_nodes();
    let kappa = resolve_kappa(adj, cfg)?;
    let rings = RingSequences::compute(adj, cfg.k_star);
    let bins: Option<Vec<i64>> = cfg
        .candidate_bins
        .map(|base| (0..n).map(|i| degree_bin(adj.degree(i), base)).collect());
    let max_degree = (0..n).map(|i| adj.degree(i)).max().unwrap_or(0);
    let table = CostTable::new(max_degree as u32);

    // Best first: exact distances in ascending lower-bound order, stopping
    // once the next bound exceeds the current κ-th distance.
    let mut order: Vec<Scored> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (rings, bins) = (&rings, &bins);
            let table = table.as_ref();
            (i + 1..n).filter_map(move |j| {
                if let Some(b) = bins {
                    if (b[i] - b[j]).abs() > 1 {
                        return None;
                    }
                }
                if cfg.exclude_edges && adj.has_edge(i, j) {
                    return None;
                }
                let dist = lower_bound(rings.node(i), rings.node(j), table);
                Some(Scored { dist, i, j })
            })
        })
        .collect();
    let candidates = order.len();
    order.par_sort_unstable();

    let mut top = TopK::new(kappa);
    for chunk in order.chunks(CHUNK) {
        let limit = top.threshold();
        if bound_exceeds(chunk[0].dist, limit) {
            break;
        }
        let exact: Vec<Scored> = chunk
            .par_iter()
            .map_init(DtwScratch::default, |scratch, c| {
                let dist = if bound_exceeds(c.dist, limit) {
                    f64::INFINITY
                } else {
                    distance_with(rings.node(c.i), rings.node(c.j), table.as_ref(), scratch, limit)
                };
                Scored { dist, i: c.i, j: c.j }
            })
            .collect();
        for s in exact.into_iter().filter(|s| s.dist.is_finite()) {
            top.push(s);
        }
    }

    if candidates < kappa {
        log::warn!("only {candidates} candidate pairs for kappa = {kappa}; returning all of them");
    }
    let selected = top.heap.into_sorted_vec();
    let summary = MiningSummary {
        kappa,
        k_star: cfg.k_star,
        candidates,
        selected: selected.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((PairSet::from_scored(adj, selected), summary))
}
