//! Datasets: node features, labels, a train/test split, and the hypergraph
//! they live on.
//!
//! Hypergraphs come from three places: a hyperedge list on disk
//! ([`read_hypergraph`]), neighborhoods in a simple graph
//! ([`neighbor_hypergraph`]), or nearest neighbors in feature space
//! ([`knn_hypergraph`]). [`synth_generate`] draws a labelled benchmark with
//! controllable homophily.

mod construct;
mod io;
mod synth;

pub use construct::{knn_hypergraph, neighbor_hypergraph, Distance};
pub use io::{
    load_dataset, load_dir, parse_features, parse_graph, parse_hypergraph, parse_labels, parse_manifest, read_features,
    read_graph, read_hypergraph, read_labels, read_manifest, write_dir, write_features, write_graph, write_hypergraph,
    write_labels, write_manifest, Construction, DatasetFiles, Manifest,
};
pub use synth::{synth_generate, SynthConfig};

use crate::{Error, Hypergraph, Matrix, Result, Rng};

/// Share of nodes drawn into the training side of a split.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub hypergraph: Hypergraph,
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl Dataset {
    /// Validates the parts and draws a seeded 80/20 split. `classes` defaults
    /// to one more than the largest label.
    pub fn new(
        hypergraph: Hypergraph,
        features: Matrix,
        labels: Vec<usize>,
        classes: Option<usize>,
        split_seed: u64,
    ) -> Result<Self> {
        let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |&l| l + 1));
        check_parts(&hypergraph, &features, &labels, classes)?;
        let (train_idx, test_idx) = split(&labels, classes, split_seed)?;
        Ok(Self {
            hypergraph,
            features,
            labels,
            classes,
            train_idx,
            test_idx,
        })
    }

    /// Uses a caller-provided split, which must partition the nodes.
    pub fn with_split(
        hypergraph: Hypergraph,
        features: Matrix,
        labels: Vec<usize>,
        classes: usize,
        train_idx: Vec<usize>,
        test_idx: Vec<usize>,
    ) -> Result<Self> {
        check_parts(&hypergraph, &features, &labels, classes)?;
        let n = labels.len();
        let mut seen = vec![false; n];
        for &i in train_idx.iter().chain(&test_idx) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!(
                    "split must partition the nodes; index {i} is out of range or repeated"
                )));
            }
        }
        if seen.iter().any(|&s| !s) || train_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::config("split must cover every node with both sides nonempty"));
        }
        Ok(Self {
            hypergraph,
            features,
            labels,
            classes,
            train_idx,
            test_idx,
        })
    }

    /// The same data under a different split seed.
    pub fn resplit(&self, split_seed: u64) -> Result<Self> {
        let (train_idx, test_idx) = split(&self.labels, self.classes, split_seed)?;
        Ok(Self {
            train_idx,
            test_idx,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_width(&self) -> usize {
        self.features.cols()
    }

    /// Nodes per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Accuracy of always predicting the most frequent class.
    pub fn majority_baseline(&self) -> f64 {
        let best = self.class_counts().into_iter().max().unwrap_or(0);
        best as f64 / self.n() as f64
    }
}

fn check_parts(h: &Hypergraph, features: &Matrix, labels: &[usize], classes: usize) -> Result<()> {
    if features.rows() != h.n() || labels.len() != h.n() {
        return Err(Error::Shape {
            op: "dataset rows",
            left: (h.n(), features.rows()),
            right: (labels.len(), 1),
        });
    }
    if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::LabelOutOfRange { row, label, classes });
    }
    Ok(())
}

/// Seeded uniform split with `round(0.8 n)` training nodes. If a class would
/// be missing from the training side, its first test node is swapped with the
/// last training node of a class that can spare one.
pub fn split(labels: &[usize], classes: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::config("a split needs at least two nodes"));
    }
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if l >= classes {
            return Err(Error::config("label outside the class range"));
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(Error::Config(format!(
            "class {c} has no nodes, so it cannot be trained"
        )));
    }
    if classes > n - 1 {
        return Err(Error::config("too few nodes to put every class on the training side"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    let n_train = ((n as f64 * TRAIN_FRACTION).round() as usize).clamp(classes.max(1), n - 1);
    let (mut train, mut test) = (order[..n_train].to_vec(), order[n_train..].to_vec());

    let mut in_train = vec![0usize; classes];
    for &i in &train {
        in_train[labels[i]] += 1;
    }
    for c in 0..classes {
        if in_train[c] > 0 {
            continue;
        }
        let t = test.iter().position(|&i| labels[i] == c).expect("class has nodes");
        let s = train
            .iter()
            .rposition(|&i| in_train[labels[i]] > 1)
            .expect("some class has a spare training node");
        in_train[labels[train[s]]] -= 1;
        in_train[c] += 1;
        std::mem::swap(&mut train[s], &mut test[t]);
    }
    Ok((train, test))
}
