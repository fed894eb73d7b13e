//! Hypergraph storage: incidence structure, degrees, and the hyperedge
//! interaction graph `HᵀH`.
//!
//! The incidence matrix `H` (n × m, `H(v, e) = 1` iff `v ∈ e`) is kept in two
//! compressed layouts at once. Column-major (per hyperedge) order defines the
//! canonical *incidence position* of each membership; the row-major (per
//! node) view stores, for each membership, its position in that order. Every
//! per-membership quantity in the crate (attention weights, HOR masks) is a
//! vector indexed by incidence position.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::{Error, Matrix, Result, SparseMatrix};

/// Degree matrix used to normalize `HᵀH + I`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InteractionNorm {
    /// Row sums of `HᵀH + I`, the usual self-loop GCN normalization.
    #[default]
    RowSum,
    /// Hyperedge degrees `D_E`, read literally off the layer formula.
    EdgeDegree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    edge_ptr: Vec<usize>,
    edge_nodes: Vec<usize>,
    node_ptr: Vec<usize>,
    node_edges: Vec<usize>,
    node_pos: Vec<usize>,
    node_degrees: Vec<u32>,
    edge_degrees: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureStats {
    pub n: usize,
    pub m: usize,
    pub max_edge_degree: usize,
}

impl Hypergraph {
    /// Builds a hypergraph over nodes `0..n`. Columns follow the order of
    /// `edges`; members within a hyperedge are stored in ascending id order.
    pub fn new<E: AsRef<[usize]>>(n: usize, edges: &[E]) -> Result<Self> {
        let m = edges.len();
        let mut edge_ptr = Vec::with_capacity(m + 1);
        let mut edge_nodes = Vec::new();
        edge_ptr.push(0);
        for (e, members) in edges.iter().enumerate() {
            let members = members.as_ref();
            if members.is_empty() {
                return Err(Error::EmptyHyperedge(e));
            }
            let mut sorted = members.to_vec();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::DuplicateMember { edge: e, node: w[0] });
                }
            }
            if let Some(&bad) = members.iter().find(|&&v| v >= n) {
                return Err(Error::NodeOutOfRange { edge: e, node: bad, n });
            }
            edge_nodes.extend_from_slice(&sorted);
            edge_ptr.push(edge_nodes.len());
        }

        let mut node_degrees = vec![0u32; n];
        for &v in &edge_nodes {
            node_degrees[v] += 1;
        }
        if let Some(v) = node_degrees.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedNode(v));
        }

        let mut node_ptr = Vec::with_capacity(n + 1);
        node_ptr.push(0);
        for &d in &node_degrees {
            node_ptr.push(node_ptr.last().unwrap() + d as usize);
        }
        let mut fill = node_ptr[..n].to_vec();
        let mut node_edges = vec![0; edge_nodes.len()];
        let mut node_pos = vec![0; edge_nodes.len()];
        #[allow(clippy::needless_range_loop)]
        for e in 0..m {
            for p in edge_ptr[e]..edge_ptr[e + 1] {
                let v = edge_nodes[p];
                node_edges[fill[v]] = e;
                node_pos[fill[v]] = p;
                fill[v] += 1;
            }
        }
        let edge_degrees = edge_ptr.windows(2).map(|w| (w[1] - w[0]) as u32).collect();

        Ok(Self {
            n,
            edge_ptr,
            edge_nodes,
            node_ptr,
            node_edges,
            node_pos,
            node_degrees,
            edge_degrees,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edge_degrees.len()
    }

    /// Number of memberships, i.e. nonzeros of `H`.
    pub fn nnz(&self) -> usize {
        self.edge_nodes.len()
    }

    pub fn node_degrees(&self) -> &[u32] {
        &self.node_degrees
    }

    pub fn edge_degrees(&self) -> &[u32] {
        &self.edge_degrees
    }

    /// Members of hyperedge `e`, ascending.
    pub fn members(&self, e: usize) -> &[usize] {
        &self.edge_nodes[self.edge_span(e)]
    }

    /// Incidence positions belonging to hyperedge `e`.
    pub fn edge_span(&self, e: usize) -> Range<usize> {
        self.edge_ptr[e]..self.edge_ptr[e + 1]
    }

    /// Hyperedges containing node `v`, ascending.
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.node_edges[self.node_ptr[v]..self.node_ptr[v + 1]]
    }

    /// Incidence positions of node `v`'s memberships, in the same order as
    /// [`Hypergraph::incident_edges`].
    pub fn node_positions(&self, v: usize) -> &[usize] {
        &self.node_pos[self.node_ptr[v]..self.node_ptr[v + 1]]
    }

    /// `(node, edge)` for every incidence position, in position order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m()).flat_map(move |e| self.members(e).iter().map(move |&v| (v, e)))
    }

    /// Hyperedge member lists, in column order.
    pub fn edges(&self) -> Vec<Vec<usize>> {
        (0..self.m()).map(|e| self.members(e).to_vec()).collect()
    }

    /// Per-hyperedge groups of incidence positions.
    pub fn edge_groups(&self) -> Vec<Vec<usize>> {
        (0..self.m()).map(|e| self.edge_span(e).collect()).collect()
    }

    /// Per-node groups of incidence positions.
    pub fn node_groups(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|v| self.node_positions(v).to_vec()).collect()
    }

    /// The incidence matrix `H` as a sparse n × m matrix of ones.
    pub fn incidence(&self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.n, self.m(), self.entries().map(|(v, e)| (v, e, 1.0)))
            .expect("entries are in range")
    }

    pub fn incidence_dense(&self) -> Matrix {
        self.incidence().to_dense()
    }

    /// `D_V^{-1/2}` as a vector.
    pub fn node_inv_sqrt_degrees(&self) -> Vec<f64> {
        self.node_degrees.iter().map(|&d| 1.0 / f64::from(d).sqrt()).collect()
    }

    /// `D_E^{-1/2}` as a vector.
    pub fn edge_inv_sqrt_degrees(&self) -> Vec<f64> {
        self.edge_degrees.iter().map(|&d| 1.0 / f64::from(d).sqrt()).collect()
    }

    /// Sparse `HᵀH`: entry `(i, j)` counts the nodes shared by hyperedges
    /// `i` and `j`.
    fn interaction_counts(&self) -> BTreeMap<(usize, usize), u32> {
        let mut counts = BTreeMap::new();
        for v in 0..self.n {
            let inc = self.incident_edges(v);
            for &a in inc {
                for &b in inc {
                    *counts.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// The hyperedge interaction adjacency `HᵀH` as a dense m × m matrix.
    pub fn interaction_adjacency(&self) -> Vec<Vec<u32>> {
        let m = self.m();
        let mut a = vec![vec![0u32; m]; m];
        for ((i, j), c) in self.interaction_counts() {
            a[i][j] = c;
        }
        a
    }

    /// `D^{-1/2} (HᵀH + I) D^{-1/2}` as a sparse operator.
    pub fn normalized_interaction_sparse(&self, norm: InteractionNorm) -> SparseMatrix {
        let m = self.m();
        let mut counts = self.interaction_counts();
        for i in 0..m {
            *counts.entry((i, i)).or_insert(0) += 1;
        }
        let degree: Vec<f64> = match norm {
            InteractionNorm::RowSum => {
                let mut rs = vec![0.0; m];
                for (&(i, _), &c) in &counts {
                    rs[i] += f64::from(c);
                }
                rs
            }
            InteractionNorm::EdgeDegree => self.edge_degrees.iter().map(|&d| f64::from(d)).collect(),
        };
        SparseMatrix::from_triplets(
            m,
            m,
            counts
                .into_iter()
                .map(|((i, j), c)| (i, j, f64::from(c) / (degree[i] * degree[j]).sqrt())),
        )
        .expect("indices are hyperedge ids")
    }

    /// Dense form of [`Hypergraph::normalized_interaction_sparse`] with the
    /// default row-sum normalization.
    pub fn normalized_interaction_with_self_loop(&self) -> Matrix {
        self.normalized_interaction_sparse(InteractionNorm::RowSum).to_dense()
    }

    pub fn structure_stats(&self) -> StructureStats {
        StructureStats {
            n: self.n,
            m: self.m(),
            max_edge_degree: self.edge_degrees.iter().copied().max().unwrap_or(0) as usize,
        }
    }
}
