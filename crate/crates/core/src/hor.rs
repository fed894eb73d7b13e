//! Hyperedge outlier removal (HOR).
//!
//! Every membership `(v, e)` is scored by the cosine similarity between the
//! node embedding `x_v` and the hyperedge embedding `y_e`. Memberships scoring
//! below `tau` are masked out of the current forward pass only; the stored
//! [`Hypergraph`] is never touched. A hyperedge always keeps its `min_keep`
//! most similar members (ties go to the lower node id).
//!
//! The mask is a constant for differentiation: no gradient flows through the
//! keep/drop decision, only through the surviving weights.

use std::rc::Rc;
use std::str::FromStr;

use crate::diff::{Tape, Var};
use crate::matrix::dot;
use crate::{Error, Hypergraph, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorConfig {
    /// Similarity threshold in `[-1, 1]`; `-1` keeps everything.
    pub tau: f64,
    /// Minimum surviving members per hyperedge, at least 1.
    pub min_keep: usize,
    /// Rescale surviving attention weights so each group sums to 1 again.
    pub renormalize: bool,
}

impl Default for HorConfig {
    fn default() -> Self {
        Self {
            tau: 0.0,
            min_keep: 1,
            renormalize: true,
        }
    }
}

impl HorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("HOR tau {} outside [-1, 1]", self.tau)));
        }
        if self.min_keep < 1 {
            return Err(Error::config("HOR min_keep must be at least 1"));
        }
        Ok(())
    }
}

/// Which propagation stages apply HOR.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum HorPlacement {
    #[default]
    Neither,
    /// N2HE only.
    OnlyS1,
    /// HE2N only.
    OnlyS3,
    Both,
}

impl HorPlacement {
    pub const ALL: [HorPlacement; 4] = [
        HorPlacement::Neither,
        HorPlacement::OnlyS1,
        HorPlacement::OnlyS3,
        HorPlacement::Both,
    ];

    pub fn n2he(self) -> bool {
        matches!(self, HorPlacement::OnlyS1 | HorPlacement::Both)
    }

    pub fn he2n(self) -> bool {
        matches!(self, HorPlacement::OnlyS3 | HorPlacement::Both)
    }

    pub fn from_flags(n2he: bool, he2n: bool) -> Self {
        match (n2he, he2n) {
            (false, false) => HorPlacement::Neither,
            (true, false) => HorPlacement::OnlyS1,
            (false, true) => HorPlacement::OnlyS3,
            (true, true) => HorPlacement::Both,
        }
    }

    /// Row label used in ablation tables.
    pub fn label(self) -> &'static str {
        match self {
            HorPlacement::Neither => "Neither",
            HorPlacement::OnlyS1 => "Only-S1",
            HorPlacement::OnlyS3 => "Only-S3",
            HorPlacement::Both => "Both",
        }
    }
}

impl FromStr for HorPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "neither" | "none" => Ok(HorPlacement::Neither),
            "s1" | "only-s1" => Ok(HorPlacement::OnlyS1),
            "s3" | "only-s3" => Ok(HorPlacement::OnlyS3),
            "both" => Ok(HorPlacement::Both),
            other => Err(Error::Config(format!(
                "unknown HOR placement `{other}` (expected neither, s1, s3, both)"
            ))),
        }
    }
}

/// `x·y / (|x||y|)`, or 0 when either norm is below 1e-12.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            op: "cosine_similarity",
            left: (1, x.len()),
            right: (1, y.len()),
        });
    }
    let nx = dot(x, x).sqrt();
    let ny = dot(y, y).sqrt();
    if nx < 1e-12 || ny < 1e-12 {
        return Ok(0.0);
    }
    Ok((dot(x, y) / (nx * ny)).clamp(-1.0, 1.0))
}

/// Cosine similarity of every membership, indexed by incidence position.
pub fn membership_similarities(x: &Matrix, y: &Matrix, h: &Hypergraph) -> Result<Vec<f64>> {
    if x.rows() != h.n() || y.rows() != h.m() || x.cols() != y.cols() {
        return Err(Error::Shape {
            op: "HOR embeddings",
            left: x.shape(),
            right: y.shape(),
        });
    }
    h.entries()
        .map(|(v, e)| cosine_similarity(x.row(v), y.row(e)))
        .collect()
}

/// Survivor mask over incidence positions.
pub fn hor_mask(x: &Matrix, y: &Matrix, h: &Hypergraph, cfg: &HorConfig) -> Result<Vec<bool>> {
    let sims = membership_similarities(x, y, h)?;
    Ok(mask_from_similarities(&sims, h, cfg))
}

pub fn mask_from_similarities(sims: &[f64], h: &Hypergraph, cfg: &HorConfig) -> Vec<bool> {
    let mut mask: Vec<bool> = sims.iter().map(|&s| s >= cfg.tau).collect();
    for e in 0..h.m() {
        let span = h.edge_span(e);
        let floor = cfg.min_keep.min(span.len());
        let kept = mask[span.clone()].iter().filter(|&&k| k).count();
        if kept >= floor {
            continue;
        }
        // members are stored in ascending node order, so a stable sort on
        // similarity breaks ties by lower node id
        let mut order: Vec<usize> = span.collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]));
        for &p in order.iter().take(floor) {
            mask[p] = true;
        }
    }
    mask
}

/// Applies a survivor mask to attention weights on the tape, optionally
/// renormalizing each group.
pub fn apply_mask(
    tape: &Tape,
    weights: Var,
    mask: &[bool],
    groups: Rc<Vec<Vec<usize>>>,
    renormalize: bool,
) -> Result<Var> {
    let (r, c) = tape.shape(weights);
    if c != 1 || r != mask.len() {
        return Err(Error::Shape {
            op: "apply_mask pattern",
            left: (r, c),
            right: (mask.len(), 1),
        });
    }
    tape.mask_renormalize(weights, Rc::new(mask.to_vec()), groups, renormalize)
}
