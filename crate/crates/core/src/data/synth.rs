use crate::data::Dataset;
use crate::{Error, Hypergraph, Matrix, Result, Rng};

/// Parameters of the synthetic benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub nodes_per_class: usize,
    pub edge_size: usize,
    pub hyperedges: usize,
    /// Chance that a member is drawn from the hyperedge's own class.
    pub homophily: f64,
    /// Standard deviation of the Gaussian feature noise.
    pub feature_noise: f64,
    /// Feature width; at least `classes`.
    pub feature_dim: usize,
    /// Chance that a hyperedge gains one extra member from another class.
    pub outlier_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 4,
            nodes_per_class: 50,
            edge_size: 6,
            hyperedges: 120,
            homophily: 0.9,
            feature_noise: 1.0,
            feature_dim: 16,
            outlier_rate: 0.0,
            seed: 7,
        }
    }
}

/// Draws without replacement, reshuffling once exhausted, so every item is
/// used before any is repeated.
struct Deck {
    items: Vec<usize>,
    next: usize,
}

impl Deck {
    fn new(items: Vec<usize>) -> Self {
        let next = items.len();
        Self { items, next }
    }

    fn draw(&mut self, rng: &mut Rng) -> usize {
        if self.next == self.items.len() {
            rng.shuffle(&mut self.items);
            self.next = 0;
        }
        self.next += 1;
        self.items[self.next - 1]
    }
}

/// Class-conditional Gaussian features around one-hot class means, and
/// hyperedges built around a class: hyperedge `e` belongs to class
/// `e mod C`, and each member comes from that class with probability
/// `homophily`, otherwise from all nodes. Node `v` has class
/// `v / nodes_per_class`.
///
/// Members are dealt from shuffled decks, which spreads memberships evenly;
/// a node that still ends up in no hyperedge joins one of its own class.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    let SynthConfig {
        classes: c,
        nodes_per_class: per,
        edge_size,
        hyperedges: m,
        ..
    } = *cfg;
    if c < 2 || per < 1 || edge_size < 1 || m < 1 {
        return Err(Error::config(
            "synthetic sizes must be positive, with at least two classes",
        ));
    }
    if edge_size > per {
        return Err(Error::Config(format!(
            "hyperedges of {edge_size} cannot be drawn from classes of {per} nodes"
        )));
    }
    if !(0.0..=1.0).contains(&cfg.homophily) || !(0.0..=1.0).contains(&cfg.outlier_rate) {
        return Err(Error::config("homophily and outlier rate must lie in [0, 1]"));
    }
    if cfg.feature_noise.is_nan() || cfg.feature_noise < 0.0 || cfg.feature_dim < c {
        return Err(Error::config(
            "feature noise must be nonnegative and the width at least the class count",
        ));
    }
    let n = c * per;
    let labels: Vec<usize> = (0..n).map(|v| v / per).collect();

    let mut rng = Rng::with_stream(cfg.seed, 0);
    let mut class_decks: Vec<Deck> = (0..c).map(|k| Deck::new((k * per..(k + 1) * per).collect())).collect();
    let mut all = Deck::new((0..n).collect());
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(m);
    for e in 0..m {
        let class = e % c;
        let mut members: Vec<usize> = Vec::with_capacity(edge_size + 1);
        while members.len() < edge_size {
            let v = if rng.uniform() < cfg.homophily {
                class_decks[class].draw(&mut rng)
            } else {
                all.draw(&mut rng)
            };
            if !members.contains(&v) {
                members.push(v);
            }
        }
        if cfg.outlier_rate > 0.0 && rng.uniform() < cfg.outlier_rate {
            let other = (class + 1 + rng.below(c - 1)) % c;
            loop {
                let v = class_decks[other].draw(&mut rng);
                if !members.contains(&v) {
                    members.push(v);
                    break;
                }
            }
        }
        edges.push(members);
    }

    let mut covered = vec![false; n];
    for &v in edges.iter().flatten() {
        covered[v] = true;
    }
    for v in (0..n).filter(|&v| !covered[v]) {
        let own: Vec<usize> = (0..m).filter(|&e| e % c == labels[v]).collect();
        let e = if own.is_empty() {
            rng.below(m)
        } else {
            own[rng.below(own.len())]
        };
        edges[e].push(v);
    }

    let mut noise = Rng::with_stream(cfg.seed, 1);
    let features = Matrix::from_fn(n, cfg.feature_dim, |v, j| {
        let mean = if j == labels[v] { 1.0 } else { 0.0 };
        mean + cfg.feature_noise * noise.normal()
    });
    let hypergraph = Hypergraph::new(n, &edges)?;
    Dataset::new(hypergraph, features, labels, Some(c), cfg.seed)
}
