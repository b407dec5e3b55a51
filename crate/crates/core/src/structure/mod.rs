//! Structural-role node pairs: nodes whose surrounding sorted degree
//! sequences are close under DTW.

mod brute;
mod distance;
mod mining;
mod rings;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Adjacency;

pub use brute::{brute_force_pairs, BRUTE_FORCE_MAX_NODES};
pub use distance::{degree_cost, dtw, struct_distance};
pub use mining::{mine_pairs, MiningSummary};
pub use rings::{ring_sequences, RingSequences};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructPairConfig {
    /// Number of structural pairs; `None` means the edge count.
    pub kappa: Option<usize>,
    pub k_star: usize,
    /// Log-degree bin base for candidate pruning; `None` compares all pairs.
    pub candidate_bins: Option<f64>,
    pub exclude_edges: bool,
}

impl Default for StructPairConfig {
    fn default() -> Self {
        StructPairConfig {
            kappa: None,
            k_star: 2,
            candidate_bins: Some(2.0),
            exclude_edges: false,
        }
    }
}

impl StructPairConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa == Some(0) {
            return Err(Error::config("kappa must be at least 1"));
        }
        if let Some(b) = self.candidate_bins {
            if !(b > 1.0) || !b.is_finite() {
                return Err(Error::config(format!("degree bin base {b} must exceed 1")));
            }
        }
        Ok(())
    }
}

/// Positive pairs for the structure-consistency objective.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairSet {
    /// Target edges, `u < v`.
    pub local: Vec<(usize, usize)>,
    /// Structurally similar pairs, `u < v`, ascending by distance.
    pub structural: Vec<(usize, usize)>,
    pub distances: Vec<f64>,
}

impl PairSet {
    pub(crate) fn from_scored(adj: &Adjacency, scored: Vec<mining::Scored>) -> Self {
        let (structural, distances) = scored.into_iter().map(|s| ((s.i, s.j), s.dist)).unzip();
        PairSet {
            local: adj.edges().collect(),
            structural,
            distances,
        }
    }

    /// Pairs built from an adjacency plus a previously mined structural list.
    pub fn with_structural(adj: &Adjacency, structural: Vec<(usize, usize)>, distances: Vec<f64>) -> Result<Self> {
        if structural.len() != distances.len() {
            return Err(Error::data("structural pairs and distances differ in length"));
        }
        let p = PairSet {
            local: adj.edges().collect(),
            structural,
            distances,
        };
        p.validate(adj.n_nodes())?;
        Ok(p)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for &(u, v) in self.local.iter().chain(&self.structural) {
            if u >= n || v >= n {
                return Err(Error::data(format!("pair ({u}, {v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::data(format!("self-pair ({u}, {u})")));
            }
        }
        Ok(())
    }

    /// Writes the structural pairs as `u<TAB>v<TAB>distance` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for (&(u, v), d) in self.structural.iter().zip(&self.distances) {
            writeln!(out, "{u}\t{v}\t{d:?}").expect("write to Vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads structural pairs written by [`PairSet::write_tsv`].
    pub fn read_tsv(adj: &Adjacency, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut structural = Vec::new();
        let mut distances = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::data(format!("{}:{}: expected u<TAB>v<TAB>distance", path.display(), lineno + 1));
            let mut parts = line.split('\t');
            let u: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let d: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            structural.push((u.min(v), u.max(v)));
            distances.push(d);
        }
        PairSet::with_structural(adj, structural, distances)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> Adjacency {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        Adjacency::from_edges(leaves + 1, &edges).unwrap().0
    }

    #[test]
    fn star_tie_break() {
        let adj = star(4);
        let cfg = StructPairConfig {
            kappa: Some(4),
            candidate_bins: None,
            ..Default::default()
        };
        let (p, _) = mine_pairs(&adj, &cfg).unwrap();
        assert_eq!(p.structural, vec![(1, 2), (1, 3), (1, 4), (2, 3)]);
        assert!(p.distances.iter().all(|&d| d == 0.0));
        assert_eq!(brute_force_pairs(&adj, &cfg).unwrap(), p);
    }

    #[test]
    fn two_triangles() {
        let (adj, _) =
            Adjacency::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        for kappa in [1, 7, 15] {
            let cfg = StructPairConfig {
                kappa: Some(kappa),
                ..Default::default()
            };
            let (p, _) = mine_pairs(&adj, &cfg).unwrap();
            assert_eq!(p.structural.len(), kappa);
            assert!(p.distances.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn single_edge() {
        let (adj, _) = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let (p, s) = mine_pairs(&adj, &StructPairConfig::default()).unwrap();
        assert_eq!(p.structural, vec![(0, 1)]);
        assert_eq!(p.local, vec![(0, 1)]);
        assert_eq!(s.kappa, 1);
    }

    #[test]
    fn empty_graph() {
        let adj = Adjacency::empty(5);
        let cfg = StructPairConfig::default();
        assert!(brute_force_pairs(&adj, &cfg).unwrap().structural.is_empty());
        assert!(mine_pairs(&adj, &cfg).unwrap().0.structural.is_empty());
    }

    #[test]
    fn exclude_edges() {
        let (adj, _) = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let cfg = StructPairConfig {
            exclude_edges: true,
            ..Default::default()
        };
        assert!(mine_pairs(&adj, &cfg).unwrap().0.structural.is_empty());
    }

    #[test]
    fn bins() {
        assert_eq!(mining::degree_bin(0, 2.0), 0);
        assert_eq!(mining::degree_bin(1, 2.0), 1);
        assert_eq!(mining::degree_bin(6, 2.0), 2);
        assert_eq!(mining::degree_bin(7, 2.0), 3);
    }

    #[test]
    fn tsv_round_trip() {
        let adj = star(4);
        let (p, _) = mine_pairs(&adj, &StructPairConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        p.write_tsv(&path).unwrap();
        assert_eq!(PairSet::read_tsv(&adj, &path).unwrap(), p);
    }
}
