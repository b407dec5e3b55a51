//! Graph data model, dataset ingestion and the source train/validation split.
//!
//! Graphs are undirected. Adjacency is kept in canonical CSR form: every
//! neighbor list is strictly increasing and both directions of each edge
//! are stored. Self-loops never enter the edge set.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::Tensor;
use crate::error::{Error, Result};

/// Symmetric adjacency in compressed sparse row layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Adjacency {
    /// Builds canonical adjacency from an arbitrary edge list. Directed input
    /// is symmetrized, duplicates are merged and self-loops dropped; the
    /// number of dropped self-loops is returned alongside.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<(Self, usize)> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut self_loops = 0;
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::data(format!(
                    "node index out of range: edge ({u}, {v}) with {n} nodes"
                )));
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut l in lists {
            l.sort_unstable();
            l.dedup();
            neighbors.extend(l);
            offsets.push(neighbors.len());
        }
        Ok((Adjacency { offsets, neighbors }, self_loops))
    }

    pub fn empty(n: usize) -> Self {
        Adjacency {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn neighbor_array(&self) -> &[usize] {
        &self.neighbors
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Ok(Adjacency::from_edges(self.n_nodes(), &edges)?.0)
    }
}

/// Read access shared by labeled and unlabeled graphs.
pub trait GraphInput {
    fn adjacency(&self) -> &Adjacency;
    fn features(&self) -> &Tensor;

    fn n_nodes(&self) -> usize {
        self.adjacency().n_nodes()
    }

    fn n_edges(&self) -> usize {
        self.adjacency().n_edges()
    }

    fn feature_dim(&self) -> usize {
        self.features().cols()
    }
}

/// Immutable attributed graph with optional node labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adjacency: Adjacency,
    features: Tensor,
    labels: Option<Vec<usize>>,
    n_classes: usize,
    node_ids: Option<Vec<String>>,
}

impl Graph {
    pub fn new(
        adjacency: Adjacency,
        features: Tensor,
        labels: Option<Vec<usize>>,
        n_classes: usize,
    ) -> Result<Self> {
        let n = adjacency.n_nodes();
        if features.rows() != n {
            return Err(Error::data(format!(
                "feature-row count {} does not match node count {n}",
                features.rows()
            )));
        }
        if !features.is_finite() {
            return Err(Error::data("features contain NaN or Inf"));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::data(format!(
                    "label count {} does not match node count {n}",
                    l.len()
                )));
            }
            if let Some(&bad) = l.iter().find(|&&y| y >= n_classes) {
                return Err(Error::data(format!(
                    "label {bad} outside [0, {n_classes})"
                )));
            }
        }
        Ok(Graph {
            adjacency,
            features,
            labels,
            n_classes,
            node_ids: None,
        })
    }

    pub fn with_node_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n_nodes() {
            return Err(Error::data("node id count does not match node count"));
        }
        self.node_ids = Some(ids);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn node_ids(&self) -> Option<&[String]> {
        self.node_ids.as_deref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        degrees(&self.adjacency)
    }

    /// Label-free copy for adaptation. The result has no label field at all.
    pub fn unlabeled(&self) -> UnlabeledGraph {
        UnlabeledGraph {
            adjacency: self.adjacency.clone(),
            features: self.features.clone(),
        }
    }

    pub fn into_unlabeled(self) -> UnlabeledGraph {
        UnlabeledGraph {
            adjacency: self.adjacency,
            features: self.features,
        }
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_nodes();
        let adjacency = self.adjacency.permuted(perm)?;
        let mut features = Tensor::zeros(n, self.features.cols());
        for i in 0..n {
            features.row_mut(perm[i]).copy_from_slice(self.features.row(i));
        }
        let labels = self.labels.as_ref().map(|l| {
            let mut out = vec![0; n];
            for i in 0..n {
                out[perm[i]] = l[i];
            }
            out
        });
        Graph::new(adjacency, features, labels, self.n_classes)
    }
}

impl GraphInput for Graph {
    fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    fn features(&self) -> &Tensor {
        &self.features
    }
}

/// Target-domain view: structure and features only. Adaptation takes this
/// type, so labels are unreachable from it:
///
/// ```compile_fail
/// fn peek(g: &soga_core::graph::UnlabeledGraph) -> Option<&[usize]> {
///     g.labels()
/// }
/// ```
///
/// ```
/// use soga_core::graph::{GraphInput, UnlabeledGraph};
/// fn nodes(g: &UnlabeledGraph) -> usize {
///     g.n_nodes()
/// }
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct UnlabeledGraph {
    adjacency: Adjacency,
    features: Tensor,
}

impl UnlabeledGraph {
    pub fn new(adjacency: Adjacency, features: Tensor) -> Result<Self> {
        if features.rows() != adjacency.n_nodes() {
            return Err(Error::data(format!(
                "feature-row count {} does not match node count {}",
                features.rows(),
                adjacency.n_nodes()
            )));
        }
        if !features.is_finite() {
            return Err(Error::data("features contain NaN or Inf"));
        }
        Ok(UnlabeledGraph {
            adjacency,
            features,
        })
    }
}

impl GraphInput for UnlabeledGraph {
    fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    fn features(&self) -> &Tensor {
        &self.features
    }
}

pub fn degrees(adj: &Adjacency) -> Vec<usize> {
    (0..adj.n_nodes()).map(|i| adj.degree(i)).collect()
}

/// Random train/validation partition of the labeled nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub seed: u64,
}

/// Shuffles all labeled nodes with `seed` and assigns the first
/// `ceil(ratio·n)` to training. No stratification.
pub fn split_train_val(g: &Graph, ratio: f64, seed: u64) -> Result<SplitAssignment> {
    if g.labels().is_none() {
        return Err(Error::data("cannot split an unlabeled graph"));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::config(format!("split ratio {ratio} outside (0, 1]")));
    }
    let n = g.n_nodes();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_train = ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let n_train = n_train.min(n);
    let val_idx = idx.split_off(n_train);
    Ok(SplitAssignment {
        train_idx: idx,
        val_idx,
        seed,
    })
}

/// On-disk dataset description. Paths are relative to the manifest file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub edges: PathBuf,
    pub features: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    pub n_classes: usize,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("manifest {}: {e}", path.display())))
    }
}

fn resolve(manifest: &Path, rel: &Path) -> PathBuf {
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        manifest
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(rel)
    }
}

fn parse_features(path: &Path) -> Result<Tensor> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>().map_err(|_| {
                    Error::data(format!(
                        "non-numeric feature token {tok:?} at {}:{}",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Tensor::from_rows(&rows).map_err(|_| {
        Error::data(format!("ragged feature rows in {}", path.display()))
    })
}

fn parse_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                Error::data(format!(
                    "malformed edge line {}:{}: {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        edges.push((u, v));
    }
    Ok(edges)
}

fn parse_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|_| Error::data(format!("non-integer label {l:?} in {}", path.display())))
        })
        .collect()
}

fn load_parts(manifest_path: &Path) -> Result<(DatasetManifest, Adjacency, Tensor)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let features = parse_features(&resolve(manifest_path, &manifest.features))?;
    let edges = parse_edges(&resolve(manifest_path, &manifest.edges))?;
    let (adjacency, self_loops) = Adjacency::from_edges(features.rows(), &edges)?;
    if self_loops > 0 {
        log::warn!(
            "{}: dropped {self_loops} self-loop(s)",
            manifest_path.display()
        );
    }
    Ok((manifest, adjacency, features))
}

/// Loads and validates a dataset described by a manifest file.
pub fn load_graph(manifest_path: &Path) -> Result<Graph> {
    let (manifest, adjacency, features) = load_parts(manifest_path)?;
    let labels = match &manifest.labels {
        Some(p) => Some(parse_labels(&resolve(manifest_path, p))?),
        None => None,
    };
    Graph::new(adjacency, features, labels, manifest.n_classes)
}

/// Loads structure and features only; the label file is never opened.
pub fn load_unlabeled(manifest_path: &Path) -> Result<UnlabeledGraph> {
    let (_, adjacency, features) = load_parts(manifest_path)?;
    UnlabeledGraph::new(adjacency, features)
}

/// Loads only the label file of a manifest (evaluation harness use).
pub fn load_labels(manifest_path: &Path) -> Result<Option<Vec<usize>>> {
    let manifest = DatasetManifest::read(manifest_path)?;
    manifest
        .labels
        .as_ref()
        .map(|p| parse_labels(&resolve(manifest_path, p)))
        .transpose()
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.edges.tsv`, `<stem>.features.csv`, optional
/// `<stem>.labels.txt` and `<stem>.json` into `dir`; returns the manifest path.
pub fn write_graph(g: &Graph, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let edges_name = format!("{stem}.edges.tsv");
    let feats_name = format!("{stem}.features.csv");
    let labels_name = format!("{stem}.labels.txt");

    let mut edges = String::from("# u\tv\n");
    for (u, v) in g.adjacency().edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write_file(&dir.join(&edges_name), &edges)?;

    let mut feats = String::new();
    let x = g.features();
    for r in 0..x.rows() {
        let row: Vec<String> = x.row(r).iter().map(|v| format!("{v:?}")).collect();
        feats.push_str(&row.join(","));
        feats.push('\n');
    }
    write_file(&dir.join(&feats_name), &feats)?;

    let labels = if let Some(l) = g.labels() {
        let body: String = l.iter().map(|y| format!("{y}\n")).collect();
        write_file(&dir.join(&labels_name), &body)?;
        Some(PathBuf::from(labels_name))
    } else {
        None
    };

    let manifest = DatasetManifest {
        edges: PathBuf::from(edges_name),
        features: PathBuf::from(feats_name),
        labels,
        n_classes: g.n_classes(),
    };
    let path = dir.join(format!("{stem}.json"));
    write_file(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        let (adj, _) = Adjacency::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        Graph::new(adj, Tensor::zeros(3, 2), Some(vec![0, 1, 0]), 2).unwrap()
    }

    #[test]
    fn path_graph_degrees() {
        let g = path3();
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn duplicate_and_reversed_edges_merge() {
        let (adj, loops) = Adjacency::from_edges(2, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(adj.n_edges(), 1);
        assert_eq!(loops, 0);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let (adj, loops) = Adjacency::from_edges(3, &[(0, 0), (0, 1), (2, 2)]).unwrap();
        assert_eq!(adj.n_edges(), 1);
        assert_eq!(loops, 2);
        assert!(!adj.has_edge(0, 0));
    }

    #[test]
    fn out_of_range_edge() {
        let err = Adjacency::from_edges(10, &[(0, 99)]).unwrap_err();
        assert!(err.to_string().contains("node index out of range"));
    }

    #[test]
    fn isolated_and_star_degrees() {
        let (adj, _) = Adjacency::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let d = degrees(&adj);
        assert_eq!(d[0], 4);
        assert_eq!(d[5], 0);
    }

    #[test]
    fn neighbor_lists_are_canonical() {
        let (adj, _) =
            Adjacency::from_edges(5, &[(4, 0), (2, 0), (0, 3), (3, 0), (1, 0)]).unwrap();
        assert_eq!(adj.neighbors(0), &[1, 2, 3, 4]);
        assert!(adj.has_edge(3, 0) && adj.has_edge(0, 3));
        assert_eq!(adj.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (0, 3), (0, 4)]);
    }

    fn labeled(n: usize) -> Graph {
        Graph::new(Adjacency::empty(n), Tensor::zeros(n, 1), Some(vec![0; n]), 1).unwrap()
    }

    #[test]
    fn split_ratios() {
        let s = split_train_val(&labeled(10), 0.8, 3).unwrap();
        assert_eq!((s.train_idx.len(), s.val_idx.len()), (8, 2));
        let s = split_train_val(&labeled(5), 0.8, 3).unwrap();
        assert_eq!((s.train_idx.len(), s.val_idx.len()), (4, 1));
        let s = split_train_val(&labeled(7), 0.8, 3).unwrap();
        assert_eq!((s.train_idx.len(), s.val_idx.len()), (6, 1));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let g = labeled(37);
        let a = split_train_val(&g, 0.8, 9).unwrap();
        let b = split_train_val(&g, 0.8, 9).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<_> = a.train_idx.iter().chain(&a.val_idx).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..37).collect::<Vec<_>>());
    }

    #[test]
    fn split_requires_labels() {
        let g = Graph::new(Adjacency::empty(3), Tensor::zeros(3, 1), None, 2).unwrap();
        assert!(split_train_val(&g, 0.8, 1).is_err());
    }

    #[test]
    fn rejects_bad_labels_and_nan() {
        assert!(Graph::new(Adjacency::empty(2), Tensor::zeros(2, 1), Some(vec![0, 5]), 2).is_err());
        let mut x = Tensor::zeros(2, 1);
        x.set(1, 0, f64::NAN);
        assert!(Graph::new(Adjacency::empty(2), x, None, 2).is_err());
    }
}
