use std::collections::{HashSet, VecDeque};
use std::str::FromStr;

use crate::hor::cosine_similarity;
use crate::{Error, Hypergraph, Matrix, Result};

/// One hyperedge per node: the node and everything within `hops` steps of it
/// in the graph. Hyperedges follow node order, and a hyperedge whose member
/// set already appeared is dropped, so `m ≤ n`.
pub fn neighbor_hypergraph(n: usize, edges: &[(usize, usize)], hops: usize) -> Result<Hypergraph> {
    if hops == 0 {
        return Err(Error::config("neighbor expansion needs at least one hop"));
    }
    let mut adj = vec![Vec::new(); n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        if u >= n || v >= n {
            return Err(Error::Config(format!(
                "graph edge {i} ({u}, {v}) has an endpoint outside [0, {n})"
            )));
        }
        if u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut seen_sets = HashSet::new();
    let mut hyperedges = Vec::new();
    let mut depth = vec![usize::MAX; n];
    for v in 0..n {
        let mut members = vec![v];
        depth[v] = 0;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            if depth[u] == hops {
                continue;
            }
            for &w in &adj[u] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &u in &members {
            depth[u] = usize::MAX;
        }
        members.sort_unstable();
        if seen_sets.insert(members.clone()) {
            hyperedges.push(members);
        }
    }
    Hypergraph::new(n, &hyperedges)
}

/// Dissimilarity used to rank neighbors in feature space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Distance {
    #[default]
    Euclidean,
    /// `1 − cos(x, y)`.
    Cosine,
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Distance::Euclidean),
            "cosine" => Ok(Distance::Cosine),
            other => Err(Error::Config(format!("unknown distance `{other}`"))),
        }
    }
}

impl Distance {
    fn between(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Distance::Cosine => 1.0 - cosine_similarity(a, b).expect("rows share a width"),
        }
    }
}

/// One hyperedge per node: the node plus its `k − 1` nearest other nodes,
/// ties going to the lower id. Every hyperedge has exactly `k` members and
/// `m = n`.
pub fn knn_hypergraph(features: &Matrix, k: usize, distance: Distance) -> Result<Hypergraph> {
    let n = features.rows();
    if k < 2 || k > n {
        return Err(Error::Config(format!("k = {k} must lie in [2, {n}]")));
    }
    let hyperedges: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&u| u != v)
                .map(|u| (distance.between(features.row(v), features.row(u)), u))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            std::iter::once(v)
                .chain(others.iter().take(k - 1).map(|&(_, u)| u))
                .collect()
        })
        .collect();
    Hypergraph::new(n, &hyperedges)
}
