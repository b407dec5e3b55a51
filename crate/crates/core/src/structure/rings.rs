use rayon::prelude::*;

use crate::graph::Adjacency;

/// Per node and hop `h = 0..=k*`, the ascending degrees of the nodes exactly
/// `h` hops away.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingSequences {
    k_star: usize,
    rings: Vec<Vec<Vec<u32>>>,
}

struct Bfs {
    stamp: Vec<usize>,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl Bfs {
    fn new(n: usize) -> Self {
        Bfs {
            stamp: vec![usize::MAX; n],
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn rings(&mut self, adj: &Adjacency, src: usize, k_star: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(k_star + 1);
        self.frontier.clear();
        self.frontier.push(src);
        self.stamp[src] = src;
        for h in 0..=k_star {
            if h > 0 {
                self.next.clear();
                for &u in &self.frontier {
                    for &v in adj.neighbors(u) {
                        if self.stamp[v] != src {
                            self.stamp[v] = src;
                            self.next.push(v);
                        }
                    }
                }
                std::mem::swap(&mut self.frontier, &mut self.next);
            }
            let mut ring: Vec<u32> = self.frontier.iter().map(|&u| adj.degree(u) as u32).collect();
            ring.sort_unstable();
            out.push(ring);
        }
        out
    }
}

impl RingSequences {
    pub fn compute(adj: &Adjacency, k_star: usize) -> Self {
        let n = adj.n_nodes();
        let rings = (0..n)
            .into_par_iter()
            .map_init(|| Bfs::new(n), |bfs, i| bfs.rings(adj, i, k_star))
            .collect();
        RingSequences { k_star, rings }
    }

    pub fn k_star(&self) -> usize {
        self.k_star
    }

    pub fn n_nodes(&self) -> usize {
        self.rings.len()
    }

    /// Rings of node `i`, indexed by hop.
    pub fn node(&self, i: usize) -> &[Vec<u32>] {
        &self.rings[i]
    }
}

pub fn ring_sequences(adj: &Adjacency, k_star: usize) -> RingSequences {
    RingSequences::compute(adj, k_star)
}
