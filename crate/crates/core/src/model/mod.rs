//! The node classifier: an input projection, stacked HeIHNN layers and a
//! linear softmax head, plus training, evaluation, PGD attacks and sweeps.
//!
//! Hyperedge embeddings start as the mean of their members' input features
//! and are threaded through the layers alongside the node embeddings. Both
//! pass through one shared input projection so every layer works at the
//! hidden width and its skip terms line up.

mod attack;
mod check;
mod runs;
mod snapshot;
mod train;

pub use attack::{pgd_perturb, project_linf, PgdConfig};
pub use check::{model_grad_check, ParamCheck};
pub use runs::{
    ablate_hor, mean_std, parallel_map, run_once, run_repeats, sweep, AblationRow, RunResult, SweepCell, SweepTable,
    ALPHA_BETA_GRID,
};
pub use snapshot::{format_report, parse_history_csv, Snapshot};
pub use train::{
    accuracy, evaluate, micro_f1, train, EpochRecord, Optimizer, OptimizerKind, TrainConfig, TrainHistory,
};

use std::rc::Rc;

use crate::diff::{Activation, Tape, Var};
use crate::hor::HorConfig;
use crate::hypergraph::InteractionNorm;
use crate::propagation::{glorot, heihnn_layer, LayerParameters, LayerVars, StageActivations, StageConfig, Structure};
use crate::{Error, Hypergraph, Matrix, Result, Rng};

/// Random stream for parameter initialization.
const INIT_STREAM: u64 = 1;
/// Random stream for dropout masks.
const DROPOUT_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden: usize,
    pub att_width: usize,
    pub alpha: f64,
    pub beta: f64,
    pub stage: StageConfig,
    pub hor: HorConfig,
    pub dropout: f64,
    pub normalization: InteractionNorm,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 64,
            att_width: 64,
            alpha: 1.0,
            beta: 1.0,
            stage: StageConfig::default(),
            hor: HorConfig::default(),
            dropout: 0.5,
            normalization: InteractionNorm::RowSum,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 || self.hidden < 1 || self.att_width < 1 {
            return Err(Error::config("layers, hidden and attention widths must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config(format!(
                "alpha {} and beta {} must be nonnegative",
                self.alpha, self.beta
            )));
        }
        self.hor.validate()
    }

    pub fn activation(&self) -> Activation {
        self.stage.activations.he2n
    }

    pub fn set_activation(&mut self, a: Activation) {
        self.stage.activations = StageActivations::uniform(a);
    }

    /// Operators for `h` under this configuration.
    pub fn structure<'h>(&self, h: &'h Hypergraph) -> Result<Structure<'h>> {
        Structure::new(h, self.normalization, self.stage.he2he, self.stage.chebyshev_scaling)
    }
}

/// Whether dropout is active.
pub enum Mode<'a> {
    Train(&'a mut Rng),
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    /// `F × hidden` input projection.
    pub input: Matrix,
    pub layers: Vec<LayerParameters>,
    /// `hidden × C` output weights.
    pub head: Matrix,
    /// `1 × C` output bias.
    pub head_bias: Matrix,
}

/// A model's parameters as recorded on one tape.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub input: Var,
    pub layers: Vec<LayerVars>,
    pub head: Var,
    pub head_bias: Var,
}

impl Model {
    pub fn new(config: ModelConfig, in_width: usize, classes: usize) -> Result<Self> {
        config.validate()?;
        if in_width < 1 || classes < 1 {
            return Err(Error::config("input width and class count must be at least 1"));
        }
        let mut rng = Rng::with_stream(config.seed, INIT_STREAM);
        let input = glorot(in_width, config.hidden, &mut rng);
        let layers = (0..config.layers)
            .map(|_| {
                LayerParameters::init(
                    config.hidden,
                    config.att_width,
                    config.stage.he2he,
                    config.alpha,
                    config.beta,
                    &mut rng,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            input,
            layers,
            head: glorot(config.hidden, classes, &mut rng),
            head_bias: Matrix::zeros(1, classes),
        })
    }

    pub fn in_width(&self) -> usize {
        self.input.rows()
    }

    pub fn classes(&self) -> usize {
        self.head.cols()
    }

    /// Every parameter matrix with a stable name, learnable or not.
    pub fn named_parameters(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![("input".to_string(), &self.input)];
        for (l, layer) in self.layers.iter().enumerate() {
            for (name, m) in layer.matrices() {
                out.push((format!("layer{l}.{name}"), m));
            }
        }
        out.push(("head".to_string(), &self.head));
        out.push(("head_bias".to_string(), &self.head_bias));
        out
    }

    /// Parameters updated by training, in the order of
    /// [`ModelVars::learnable`].
    pub fn learnable_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let learn_cheb = self.config.stage.learn_chebyshev;
        let mut out = vec![("input".to_string(), &mut self.input)];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (name, m) in layer.matrices_mut() {
                if name != "chebyshev" || learn_cheb {
                    out.push((format!("layer{l}.{name}"), m));
                }
            }
        }
        out.push(("head".to_string(), &mut self.head));
        out.push(("head_bias".to_string(), &mut self.head_bias));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.named_parameters().iter().all(|(_, m)| m.is_finite())
    }

    pub fn register(&self, tape: &Tape) -> ModelVars {
        let learn_cheb = self.config.stage.learn_chebyshev;
        ModelVars {
            input: tape.param(self.input.clone()),
            layers: self.layers.iter().map(|l| l.register(tape, learn_cheb)).collect(),
            head: tape.param(self.head.clone()),
            head_bias: tape.param(self.head_bias.clone()),
        }
    }

    /// Logits (`n × C`) for input features `x0` on the tape.
    pub fn forward(&self, tape: &Tape, s: &Structure<'_>, vars: &ModelVars, x0: Var, mode: Mode<'_>) -> Result<Var> {
        let h = s.hypergraph;
        let (rows, cols) = tape.shape(x0);
        if rows != h.n() || cols != self.in_width() {
            return Err(Error::Shape {
                op: "model input",
                left: (rows, cols),
                right: (h.n(), self.in_width()),
            });
        }
        let cfg = &self.config;
        let mut rng = match mode {
            Mode::Train(rng) => Some(rng),
            Mode::Eval => None,
        };
        let p = if rng.is_some() { cfg.dropout } else { 0.0 };
        let x0 = tape.dropout(x0, p, rng.as_deref_mut())?;
        let y0 = tape.sparse_matmul(Rc::clone(&s.mean), x0)?;
        let mut x = tape.matmul(x0, vars.input)?;
        let mut y = tape.matmul(y0, vars.input)?;
        for layer in &vars.layers {
            let (xn, yn) = heihnn_layer(tape, s, x, y, layer, &cfg.stage, &cfg.hor)?;
            x = tape.dropout(xn, p, rng.as_deref_mut())?;
            y = yn;
        }
        let logits = tape.matmul(x, vars.head)?;
        tape.add_row_bias(logits, vars.head_bias)
    }

    /// Evaluation-mode logits as a plain matrix.
    pub fn logits(&self, s: &Structure<'_>, x0: &Matrix) -> Result<Matrix> {
        let tape = Tape::new();
        let vars = self.register(&tape);
        let x = tape.constant(x0.clone());
        let out = self.forward(&tape, s, &vars, x, Mode::Eval)?;
        Ok((*tape.value(out)).clone())
    }

    /// Predicted class per node, ties going to the lowest class id.
    pub fn predict(&self, s: &Structure<'_>, x0: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(s, x0)?;
        Ok((0..logits.rows()).map(|i| logits.argmax_row(i)).collect())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            matrices: self
                .named_parameters()
                .into_iter()
                .map(|(name, m)| (name, m.clone()))
                .collect(),
        }
    }

    /// Overwrites parameters from a snapshot; every name and shape must match.
    pub fn load_snapshot(&mut self, snap: &Snapshot) -> Result<()> {
        let expected: Vec<(String, (usize, usize))> = self
            .named_parameters()
            .into_iter()
            .map(|(name, m)| (name, m.shape()))
            .collect();
        if expected.len() != snap.matrices.len() {
            return Err(Error::Snapshot(format!(
                "expected {} matrices, found {}",
                expected.len(),
                snap.matrices.len()
            )));
        }
        for ((name, shape), (got, m)) in expected.iter().zip(&snap.matrices) {
            if name != got || *shape != m.shape() {
                return Err(Error::Snapshot(format!(
                    "expected {name} {shape:?}, found {got} {:?}",
                    m.shape()
                )));
            }
        }
        let mut values = snap.matrices.iter();
        self.input = values.next().expect("checked length").1.clone();
        for layer in &mut self.layers {
            for (_, m) in layer.matrices_mut() {
                *m = values.next().expect("checked length").1.clone();
            }
        }
        self.head = values.next().expect("checked length").1.clone();
        self.head_bias = values.next().expect("checked length").1.clone();
        Ok(())
    }
}

impl ModelVars {
    /// Vars updated by training, aligned with [`Model::learnable_mut`].
    pub fn learnable(&self, tape: &Tape) -> Vec<Var> {
        let mut out = vec![self.input];
        for layer in &self.layers {
            for (_, v) in layer.vars() {
                if tape.requires_grad(v) {
                    out.push(v);
                }
            }
        }
        out.push(self.head);
        out.push(self.head_bias);
        out
    }
}
