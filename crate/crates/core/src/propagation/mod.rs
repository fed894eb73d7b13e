//! The three propagation stages and the assembled convolution layer.
//!
//! With `X` the node embeddings and `Y` the hyperedge embeddings of one layer:
//!
//! ```text
//! N2HE   Y¹ = σ((α · D_E^-½ hor(H_att)ᵀ D_V^-½ X + Y) θ₁)
//! HE2HE  Y² = σ(D^-½ (HᵀH + I) D^-½ Y¹ θ₂)              (or a Chebyshev filter)
//! HE2N   X' = σ((β · D_V^-½ hor(H_att') D_E^-½ Y² + X) θ₃)
//! ```
//!
//! `H_att` holds attention weights normalized over each hyperedge's members,
//! `H_att'` over each node's hyperedges. With attention off both are the
//! plain incidence matrix. The layer returns `(X', Y²)` so that the hyperedge
//! embeddings carry over into the next layer.

mod chebyshev;
mod stages;
mod structure;

pub use chebyshev::{chebyshev_he2he, chebyshev_operator, chebyshev_scalar, power_iteration_lambda_max};
pub use stages::{
    attention_incidence, he2he, he2n, heihnn_layer, hgnn_layer, hgnn_operator, init_hyperedge_features, n2he,
    Direction, Incidence,
};
pub use structure::Structure;

use crate::diff::{Activation, Tape, Var};
use crate::hor::HorPlacement;
use crate::{Error, Matrix, Result, Rng};

/// How hyperedges exchange information in the HE2HE stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HyperedgeConv {
    /// One self-loop GCN step over the interaction graph.
    SelfLoopGcn,
    /// Order-`order` Chebyshev filter over the interaction graph Laplacian.
    Chebyshev { order: usize },
    /// Skip the stage: `Y² = Y¹`.
    Identity,
}

impl HyperedgeConv {
    /// `0` selects the single GCN step, `k ≥ 1` a Chebyshev filter of order k.
    pub fn from_order(k: usize) -> Self {
        if k == 0 {
            HyperedgeConv::SelfLoopGcn
        } else {
            HyperedgeConv::Chebyshev { order: k }
        }
    }

    pub fn chebyshev_order(self) -> Option<usize> {
        match self {
            HyperedgeConv::Chebyshev { order } => Some(order),
            _ => None,
        }
    }
}

/// Maps Laplacian eigenvalues into the Chebyshev domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChebyshevScaling {
    /// `L' = 2L/λ_max − I`, spectrum in `[-1, 1]`.
    #[default]
    Symmetric,
    /// `L' = L/λ_max − I`, spectrum in `[-1, 0]`.
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageActivations {
    pub n2he: Activation,
    pub he2he: Activation,
    pub he2n: Activation,
}

impl StageActivations {
    pub fn uniform(a: Activation) -> Self {
        Self {
            n2he: a,
            he2he: a,
            he2n: a,
        }
    }
}

impl Default for StageActivations {
    fn default() -> Self {
        Self::uniform(Activation::Relu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageConfig {
    pub use_attention: bool,
    pub hor_n2he: bool,
    pub hor_he2n: bool,
    pub he2he: HyperedgeConv,
    pub chebyshev_scaling: ChebyshevScaling,
    /// Learn the Chebyshev coefficients instead of freezing them.
    pub learn_chebyshev: bool,
    /// Keep the `+Y` / `+X` skip terms of N2HE and HE2N.
    pub residual: bool,
    pub activations: StageActivations,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            use_attention: true,
            hor_n2he: false,
            hor_he2n: false,
            he2he: HyperedgeConv::SelfLoopGcn,
            chebyshev_scaling: ChebyshevScaling::Symmetric,
            learn_chebyshev: true,
            residual: true,
            activations: StageActivations::default(),
        }
    }
}

impl StageConfig {
    /// The configuration under which one layer collapses to an HGNN layer:
    /// no attention, no HOR, no skip terms, HE2HE skipped, and linear inner
    /// stages. The outer activation stays.
    pub fn hgnn_reduction(outer: Activation) -> Self {
        Self {
            use_attention: false,
            hor_n2he: false,
            hor_he2n: false,
            he2he: HyperedgeConv::Identity,
            residual: false,
            activations: StageActivations {
                n2he: Activation::Identity,
                he2he: Activation::Identity,
                he2n: outer,
            },
            ..Self::default()
        }
    }

    pub fn hor_placement(&self) -> HorPlacement {
        HorPlacement::from_flags(self.hor_n2he, self.hor_he2n)
    }

    pub fn set_hor_placement(&mut self, p: HorPlacement) {
        self.hor_n2he = p.n2he();
        self.hor_he2n = p.he2n();
    }
}

/// Learnable matrices of one layer plus its fixed mixing scalars.
///
/// All embeddings inside a layer share one width, so the skip terms line up;
/// `theta1..3` are `width × width` and the attention projections are
/// `width × att_width`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParameters {
    pub theta1: Matrix,
    pub theta2: Matrix,
    pub theta3: Matrix,
    pub wq: Matrix,
    pub wk: Matrix,
    pub wq2: Matrix,
    pub wk2: Matrix,
    /// `1 × (K+1)` Chebyshev coefficients, present for Chebyshev HE2HE.
    pub chebyshev: Option<Matrix>,
    pub alpha: f64,
    pub beta: f64,
}

/// Uniform Glorot initialization, `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-limit, limit))
}

impl LayerParameters {
    pub const NAMES: [&'static str; 7] = ["theta1", "theta2", "theta3", "wq", "wk", "wq2", "wk2"];

    pub fn init(
        width: usize,
        att_width: usize,
        he2he: HyperedgeConv,
        alpha: f64,
        beta: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::Config(format!(
                "alpha {alpha} and beta {beta} must be nonnegative"
            )));
        }
        let chebyshev = he2he.chebyshev_order().map(|k| {
            let mut c = Matrix::zeros(1, k + 1);
            c[(0, 0)] = 1.0;
            c
        });
        Ok(Self {
            theta1: glorot(width, width, rng),
            theta2: glorot(width, width, rng),
            theta3: glorot(width, width, rng),
            wq: glorot(width, att_width, rng),
            wk: glorot(width, att_width, rng),
            wq2: glorot(width, att_width, rng),
            wk2: glorot(width, att_width, rng),
            chebyshev,
            alpha,
            beta,
        })
    }

    /// The learnable matrices in a fixed order, named as in [`Self::NAMES`]
    /// with `chebyshev` appended when present.
    pub fn matrices(&self) -> Vec<(&'static str, &Matrix)> {
        let mut out = vec![
            ("theta1", &self.theta1),
            ("theta2", &self.theta2),
            ("theta3", &self.theta3),
            ("wq", &self.wq),
            ("wk", &self.wk),
            ("wq2", &self.wq2),
            ("wk2", &self.wk2),
        ];
        if let Some(c) = &self.chebyshev {
            out.push(("chebyshev", c));
        }
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<(&'static str, &mut Matrix)> {
        let mut out = vec![
            ("theta1", &mut self.theta1),
            ("theta2", &mut self.theta2),
            ("theta3", &mut self.theta3),
            ("wq", &mut self.wq),
            ("wk", &mut self.wk),
            ("wq2", &mut self.wq2),
            ("wk2", &mut self.wk2),
        ];
        if let Some(c) = &mut self.chebyshev {
            out.push(("chebyshev", c));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|(_, m)| m.is_finite())
    }

    /// Records the parameters on `tape`. Frozen Chebyshev coefficients are
    /// recorded as constants.
    pub fn register(&self, tape: &Tape, learn_chebyshev: bool) -> LayerVars {
        LayerVars {
            theta1: tape.param(self.theta1.clone()),
            theta2: tape.param(self.theta2.clone()),
            theta3: tape.param(self.theta3.clone()),
            wq: tape.param(self.wq.clone()),
            wk: tape.param(self.wk.clone()),
            wq2: tape.param(self.wq2.clone()),
            wk2: tape.param(self.wk2.clone()),
            chebyshev: self.chebyshev.as_ref().map(|c| tape.leaf(c.clone(), learn_chebyshev)),
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// A layer's parameters as recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct LayerVars {
    pub theta1: Var,
    pub theta2: Var,
    pub theta3: Var,
    pub wq: Var,
    pub wk: Var,
    pub wq2: Var,
    pub wk2: Var,
    pub chebyshev: Option<Var>,
    pub alpha: f64,
    pub beta: f64,
}

impl LayerVars {
    pub fn vars(&self) -> Vec<(&'static str, Var)> {
        let mut out = vec![
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("wq", self.wq),
            ("wk", self.wk),
            ("wq2", self.wq2),
            ("wk2", self.wk2),
        ];
        if let Some(c) = self.chebyshev {
            out.push(("chebyshev", c));
        }
        out
    }
}

#[cfg(test)]
mod tests;
