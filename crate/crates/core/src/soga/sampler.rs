use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::structure::PairSet;

/// Uniform negative sampler over `[0, n)`, excluding both endpoints of the
/// positive pair.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    n: usize,
    rng: ChaCha8Rng,
}

/// Negatives for one epoch: `per_pair` node ids for each positive pair,
/// laid out pair-major, in the same order as the pair lists.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Negatives {
    pub per_pair: usize,
    pub local: Vec<usize>,
    pub structural: Vec<usize>,
}

impl NegativeSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        NegativeSampler {
            n,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Draws `count` nodes uniformly from `[0, n) \ {i, j}`. Returns nothing
    /// when that set is empty.
    pub fn sample(&mut self, i: usize, j: usize, count: usize) -> Vec<usize> {
        let excluded = if i == j { 1 } else { 2 };
        if self.n <= excluded {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = self.rng.random_range(0..self.n);
            if v != i && v != j {
                out.push(v);
            }
        }
        out
    }

    /// Fresh negatives for every pair of both families.
    pub fn draw(&mut self, pairs: &PairSet, per_pair: usize) -> Negatives {
        let mut family = |list: &[(usize, usize)]| -> Option<Vec<usize>> {
            let mut out = Vec::with_capacity(list.len() * per_pair);
            for &(i, j) in list {
                let s = self.sample(i, j, per_pair);
                if s.len() != per_pair {
                    return None;
                }
                out.extend(s);
            }
            Some(out)
        };
        let local = family(&pairs.local);
        let structural = family(&pairs.structural);
        match (local, structural) {
            (Some(local), Some(structural)) => Negatives {
                per_pair,
                local,
                structural,
            },
            _ => {
                log::warn!("graph too small for negative sampling; negative terms dropped");
                Negatives {
                    per_pair,
                    local: Vec::new(),
                    structural: Vec::new(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excludes_endpoints() {
        let mut s = NegativeSampler::new(5, 3);
        for _ in 0..200 {
            for v in s.sample(1, 3, 5) {
                assert!(v < 5 && v != 1 && v != 3);
            }
        }
    }

    #[test]
    fn roughly_uniform() {
        let mut s = NegativeSampler::new(6, 7);
        let mut counts = [0usize; 6];
        for v in s.sample(0, 1, 40_000) {
            counts[v] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        for &c in &counts[2..] {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "{counts:?}");
        }
    }

    #[test]
    fn too_small_graph() {
        let mut s = NegativeSampler::new(2, 1);
        assert!(s.sample(0, 1, 5).is_empty());
    }

    #[test]
    fn seeded_determinism() {
        let a = NegativeSampler::new(100, 9).sample(0, 1, 50);
        let b = NegativeSampler::new(100, 9).sample(0, 1, 50);
        assert_eq!(a, b);
    }
}
