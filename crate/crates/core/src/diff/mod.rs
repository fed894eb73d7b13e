//! Reverse-mode differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records each operation as it is evaluated. Values live on the
//! tape and are addressed by [`Var`] handles; [`Tape::backward`] then walks
//! the record in reverse. Model parameters are owned outside the tape and
//! re-registered as leaves for every step.
//!
//! Attention-weighted incidence matrices never become dense: their weights
//! are an `nnz × 1` column produced by [`Tape::pair_logits`] and
//! [`Tape::masked_softmax`], consumed by [`Tape::weighted_scatter`] against a
//! constant sparsity pattern.

mod gradcheck;
mod tape;

pub use gradcheck::{grad_check, GradCheck};
pub use tape::{ScatterEntry, ScatterPlan, Tape, Var};

use crate::Result;

/// Nonlinearity applied at the end of a propagation stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &Tape, v: Var) -> Var {
        match self {
            Activation::Relu => tape.relu(v),
            Activation::Identity => v,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" | "none" => Ok(Activation::Identity),
            other => Err(crate::Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}
