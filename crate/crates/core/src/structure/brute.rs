use std::collections::{HashMap, VecDeque};

use super::distance::degree_cost;
use super::mining::{resolve_kappa, Scored};
use super::{PairSet, StructPairConfig};
use crate::error::{Error, Result};
use crate::graph::Adjacency;

pub const BRUTE_FORCE_MAX_NODES: usize = 2000;

fn all_pairs_hops(adj: &Adjacency) -> Vec<Vec<Option<usize>>> {
    let n = adj.n_nodes();
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let d = dist[u].unwrap_or(0);
                for &v in adj.neighbors(u) {
                    if dist[v].is_none() {
                        dist[v] = Some(d + 1);
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

fn memo_dtw(a: &[u32], b: &[u32], i: usize, j: usize, memo: &mut HashMap<(usize, usize), f64>) -> f64 {
    if let Some(&v) = memo.get(&(i, j)) {
        return v;
    }
    let best = if i == 0 && j == 0 {
        0.0
    } else if i == 0 {
        memo_dtw(a, b, 0, j - 1, memo)
    } else if j == 0 {
        memo_dtw(a, b, i - 1, 0, memo)
    } else {
        let up = memo_dtw(a, b, i - 1, j, memo);
        let left = memo_dtw(a, b, i, j - 1, memo);
        let diag = memo_dtw(a, b, i - 1, j - 1, memo);
        up.min(left).min(diag)
    };
    let v = degree_cost(a[i], b[j]) + best;
    memo.insert((i, j), v);
    v
}

/// Exact top-κ over all node pairs: rings read off an all-pairs hop matrix,
/// no candidate pruning. Test oracle for [`super::mine_pairs`].
pub fn brute_force_pairs(adj: &Adjacency, cfg: &StructPairConfig) -> Result<PairSet> {
    cfg.validate()?;
    let n = adj.n_nodes();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::config(format!(
            "brute-force pair search is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}"
        )));
    }
    let kappa = resolve_kappa(adj, cfg)?;
    let hops = all_pairs_hops(adj);
    let rings: Vec<Vec<Vec<u32>>> = (0..n)
        .map(|i| {
            (0..=cfg.k_star)
                .map(|h| {
                    let mut ring: Vec<u32> = (0..n)
                        .filter(|&u| hops[i][u] == Some(h))
                        .map(|u| adj.neighbors(u).len() as u32)
                        .collect();
                    ring.sort_unstable();
                    ring
                })
                .collect()
        })
        .collect();

    let mut all = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if cfg.exclude_edges && hops[i][j] == Some(1) {
                continue;
            }
            let mut dist = 0.0;
            for h in 0..=cfg.k_star {
                let (a, b) = (&rings[i][h], &rings[j][h]);
                if a.is_empty() && b.is_empty() {
                    continue;
                }
                if a.is_empty() || b.is_empty() {
                    break;
                }
                let mut memo = HashMap::new();
                dist += memo_dtw(a, b, a.len() - 1, b.len() - 1, &mut memo);
            }
            all.push(Scored { dist, i, j });
        }
    }
    all.sort();
    all.truncate(kappa);
    Ok(PairSet::from_scored(adj, all))
}
