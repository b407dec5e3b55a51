use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Arch, Mode, ModelCheckpoint, GAT_NEGATIVE_SLOPE};
use crate::diff::{Csr, Tape, Tensor, Var};
use crate::error::Result;
use crate::graph::{Adjacency, GraphInput};

pub(crate) struct ParamShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub is_bias: bool,
}

fn shape(name: impl Into<String>, rows: usize, cols: usize, is_bias: bool) -> ParamShape {
    ParamShape {
        name: name.into(),
        rows,
        cols,
        is_bias,
    }
}

/// Parameter layout per architecture. The checkpoint format stores tensors
/// in exactly this order.
pub(crate) fn param_shapes(
    arch: Arch,
    d: usize,
    hidden: usize,
    k: usize,
    heads: usize,
) -> Vec<ParamShape> {
    match arch {
        Arch::Gcn => vec![
            shape("conv1.weight", d, hidden, false),
            shape("conv1.bias", 1, hidden, true),
            shape("conv2.weight", hidden, k, false),
            shape("conv2.bias", 1, k, true),
        ],
        Arch::Sage => vec![
            shape("sage1.self", d, hidden, false),
            shape("sage1.neigh", d, hidden, false),
            shape("sage1.bias", 1, hidden, true),
            shape("sage2.self", hidden, k, false),
            shape("sage2.neigh", hidden, k, false),
            shape("sage2.bias", 1, k, true),
        ],
        Arch::Gat => {
            let mut v = Vec::new();
            for h in 0..heads {
                v.push(shape(format!("gat1.head{h}.weight"), d, hidden, false));
                v.push(shape(format!("gat1.head{h}.att_src"), hidden, 1, false));
                v.push(shape(format!("gat1.head{h}.att_dst"), hidden, 1, false));
            }
            v.push(shape("gat1.bias", 1, heads * hidden, true));
            for h in 0..heads {
                v.push(shape(format!("gat2.head{h}.weight"), heads * hidden, k, false));
                v.push(shape(format!("gat2.head{h}.att_src"), k, 1, false));
                v.push(shape(format!("gat2.head{h}.att_dst"), k, 1, false));
            }
            v.push(shape("gat2.bias", 1, k, true));
            v
        }
    }
}

pub(crate) fn init_param(s: &ParamShape, rng: &mut ChaCha8Rng) -> Tensor {
    if s.is_bias {
        return Tensor::zeros(s.rows, s.cols);
    }
    let bound = (6.0 / (s.rows + s.cols) as f64).sqrt();
    let data = (0..s.rows * s.cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::from_vec(s.rows, s.cols, data).expect("shape matches data")
}

/// Graph constants for one architecture, computed once per graph.
#[derive(Clone, Debug)]
pub struct Prepared {
    features: Tensor,
    propagation: Propagation,
}

#[derive(Clone, Debug)]
enum Propagation {
    /// `D̂^{-1/2}(A+I)D̂^{-1/2}`.
    Gcn(Arc<Csr>),
    /// Row-normalized `A` (neighbor mean; isolated rows are empty).
    Sage(Arc<Csr>),
    /// Neighbors ∪ self per destination row, plus per-edge endpoints.
    Gat {
        pattern: Arc<Csr>,
        dst: Arc<Vec<usize>>,
        src: Arc<Vec<usize>>,
    },
}

impl Prepared {
    pub fn new(arch: Arch, g: &dyn GraphInput) -> Self {
        let adj = g.adjacency();
        let propagation = match arch {
            Arch::Gcn => Propagation::Gcn(Arc::new(gcn_norm(adj))),
            Arch::Sage => Propagation::Sage(Arc::new(mean_adjacency(adj))),
            Arch::Gat => {
                let pattern = self_looped(adj);
                let mut dst = Vec::with_capacity(pattern.nnz());
                for r in 0..pattern.n_rows() {
                    dst.extend(std::iter::repeat_n(r, pattern.indptr()[r + 1] - pattern.indptr()[r]));
                }
                let src = pattern.indices().to_vec();
                Propagation::Gat {
                    pattern: Arc::new(pattern),
                    dst: Arc::new(dst),
                    src: Arc::new(src),
                }
            }
        };
        Prepared {
            features: g.features().clone(),
            propagation,
        }
    }

    /// The normalized propagation matrix (GCN/GraphSAGE) or attention
    /// pattern (GAT).
    pub fn propagation_matrix(&self) -> &Csr {
        match &self.propagation {
            Propagation::Gcn(a) | Propagation::Sage(a) => a,
            Propagation::Gat { pattern, .. } => pattern,
        }
    }
}

fn self_looped_lists(adj: &Adjacency) -> (Vec<usize>, Vec<usize>) {
    let n = adj.n_nodes();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(adj.neighbor_array().len() + n);
    indptr.push(0);
    for i in 0..n {
        let nb = adj.neighbors(i);
        let pos = nb.partition_point(|&j| j < i);
        indices.extend_from_slice(&nb[..pos]);
        indices.push(i);
        indices.extend_from_slice(&nb[pos..]);
        indptr.push(indices.len());
    }
    (indptr, indices)
}

fn self_looped(adj: &Adjacency) -> Csr {
    let n = adj.n_nodes();
    let (indptr, indices) = self_looped_lists(adj);
    let values = vec![1.0; indices.len()];
    Csr::new(n, n, indptr, indices, values).expect("valid structure")
}

pub(crate) fn gcn_norm(adj: &Adjacency) -> Csr {
    let n = adj.n_nodes();
    let (indptr, indices) = self_looped_lists(adj);
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / ((adj.degree(i) + 1) as f64).sqrt())
        .collect();
    let mut values = Vec::with_capacity(indices.len());
    for r in 0..n {
        for &c in &indices[indptr[r]..indptr[r + 1]] {
            values.push(inv_sqrt[r] * inv_sqrt[c]);
        }
    }
    Csr::new(n, n, indptr, indices, values).expect("valid structure")
}

fn mean_adjacency(adj: &Adjacency) -> Csr {
    let n = adj.n_nodes();
    let mut values = Vec::with_capacity(adj.neighbor_array().len());
    for i in 0..n {
        let d = adj.degree(i);
        values.extend(std::iter::repeat_n(1.0 / d as f64, d));
    }
    Csr::new(
        n,
        n,
        adj.offsets().to_vec(),
        adj.neighbor_array().to_vec(),
        values,
    )
    .expect("valid structure")
}

fn dropout(tape: &mut Tape, x: Var, p: f64, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Var> {
    if mode == Mode::Eval || p <= 0.0 {
        return Ok(x);
    }
    let (r, c) = tape.value(x).shape();
    let keep = 1.0 - p;
    let data = (0..r * c)
        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    let mask = Arc::new(Tensor::from_vec(r, c, data)?);
    tape.mul_const(x, mask)
}

#[allow(clippy::too_many_arguments)]
fn attention_head(
    tape: &mut Tape,
    x: Var,
    weight: Var,
    att_src: Var,
    att_dst: Var,
    pattern: &Arc<Csr>,
    dst: &Arc<Vec<usize>>,
    src: &Arc<Vec<usize>>,
) -> Result<Var> {
    let h = tape.matmul(x, weight)?;
    let s_src = tape.matmul(h, att_src)?;
    let s_dst = tape.matmul(h, att_dst)?;
    let e_dst = tape.gather_rows(s_dst, Arc::clone(dst))?;
    let e_src = tape.gather_rows(s_src, Arc::clone(src))?;
    let e = tape.add(e_dst, e_src)?;
    let e = tape.leaky_relu(e, GAT_NEGATIVE_SLOPE);
    let alpha = tape.segment_softmax(e, pattern)?;
    tape.edge_aggregate(alpha, h, pattern)
}

pub(crate) fn forward(
    ckpt: &ModelCheckpoint,
    tape: &mut Tape,
    p: &[Var],
    prepared: &Prepared,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<Var> {
    let drop = ckpt.dropout();
    let x = tape.constant(prepared.features.clone());
    let x = dropout(tape, x, drop, mode, rng)?;
    let logits = match &prepared.propagation {
        Propagation::Gcn(a) => {
            let h = tape.matmul(x, p[0])?;
            let h = tape.sparse_dense_matmul(a, h)?;
            let h = tape.add_row(h, p[1])?;
            let h = tape.relu(h);
            let h = dropout(tape, h, drop, mode, rng)?;
            let o = tape.matmul(h, p[2])?;
            let o = tape.sparse_dense_matmul(a, o)?;
            tape.add_row(o, p[3])?
        }
        Propagation::Sage(a) => {
            let agg = tape.sparse_dense_matmul(a, x)?;
            let hs = tape.matmul(x, p[0])?;
            let hn = tape.matmul(agg, p[1])?;
            let h = tape.add(hs, hn)?;
            let h = tape.add_row(h, p[2])?;
            let h = tape.relu(h);
            let h = dropout(tape, h, drop, mode, rng)?;
            let agg = tape.sparse_dense_matmul(a, h)?;
            let os = tape.matmul(h, p[3])?;
            let on = tape.matmul(agg, p[4])?;
            let o = tape.add(os, on)?;
            tape.add_row(o, p[5])?
        }
        Propagation::Gat { pattern, dst, src } => {
            let heads = ckpt.heads;
            let mut outs = Vec::with_capacity(heads);
            for h in 0..heads {
                let b = 3 * h;
                outs.push(attention_head(tape, x, p[b], p[b + 1], p[b + 2], pattern, dst, src)?);
            }
            let h = tape.concat_cols(&outs)?;
            let h = tape.add_row(h, p[3 * heads])?;
            let h = tape.relu(h);
            let h = dropout(tape, h, drop, mode, rng)?;
            let base = 3 * heads + 1;
            let mut acc: Option<Var> = None;
            for head in 0..heads {
                let b = base + 3 * head;
                let o = attention_head(tape, h, p[b], p[b + 1], p[b + 2], pattern, dst, src)?;
                acc = Some(match acc {
                    None => o,
                    Some(a) => tape.add(a, o)?,
                });
            }
            let o = tape.scale(acc.expect("at least one head"), 1.0 / heads as f64);
            tape.add_row(o, p[base + 3 * heads])?
        }
    };
    Ok(tape.row_softmax(logits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcn_norm_isolated_node() {
        let a = gcn_norm(&Adjacency::empty(1));
        assert_eq!(a.to_dense().data(), &[1.0]);
    }

    #[test]
    fn gcn_norm_two_clique() {
        let (adj, _) = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let a = gcn_norm(&adj).to_dense();
        for &v in a.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn gcn_norm_matches_dense_formula() {
        let (adj, _) = Adjacency::from_edges(4, &[(0, 1), (1, 2), (1, 3)]).unwrap();
        let a = gcn_norm(&adj).to_dense();
        let deg = [2.0f64, 4.0, 2.0, 2.0];
        for i in 0..4 {
            for j in 0..4 {
                let aij = if i == j || adj.has_edge(i, j) { 1.0 } else { 0.0 };
                let want = aij / (deg[i].sqrt() * deg[j].sqrt());
                assert!((a.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mean_adjacency_rows() {
        let (adj, _) = Adjacency::from_edges(4, &[(0, 1), (0, 2)]).unwrap();
        let m = mean_adjacency(&adj).to_dense();
        assert_eq!(m.row(0), &[0.0, 0.5, 0.5, 0.0]);
        assert_eq!(m.row(3), &[0.0; 4]);
    }

    #[test]
    fn self_loop_pattern_sorted() {
        let (adj, _) = Adjacency::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let p = self_looped(&adj);
        assert_eq!(p.indices(), &[0, 2, 1, 2, 0, 1, 2]);
    }
}
