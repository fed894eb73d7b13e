use std::str::FromStr;

use crate::data::Dataset;
use crate::diff::Tape;
use crate::model::{Mode, Model, Snapshot, DROPOUT_STREAM};
use crate::{Error, Matrix, Result, Rng};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OptimizerKind {
    /// Adaptive moments with decoupled weight decay.
    #[default]
    Adam,
    /// Plain gradient descent with the same decoupled decay.
    Sgd,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" | "adamw" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// First-order optimizer over a fixed list of parameter matrices.
///
/// Each step first shrinks every parameter by `1 − lr·weight_decay`, then
/// applies the gradient update, so decay never passes through the moment
/// estimates.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    weight_decay: f64,
    t: i32,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, weight_decay: f64) -> Self {
        Self {
            kind,
            lr,
            weight_decay,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape {
                op: "optimizer step",
                left: (params.len(), 1),
                right: (grads.len(), 1),
            });
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| Matrix::zeros(g.rows(), g.cols())).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let decay = 1.0 - self.lr * self.weight_decay;
        let bc1 = 1.0 - BETA1.powi(self.t);
        let bc2 = 1.0 - BETA2.powi(self.t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::Shape {
                    op: "optimizer step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, &d) in p.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *w = *w * decay - self.lr * d;
                    }
                }
                OptimizerKind::Adam => {
                    let m = self.m[k].as_mut_slice();
                    let v = self.v[k].as_mut_slice();
                    for (((w, &d), mi), vi) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                        *mi = BETA1 * *mi + (1.0 - BETA1) * d;
                        *vi = BETA2 * *vi + (1.0 - BETA2) * d * d;
                        let step = (*mi / bc1) / ((*vi / bc2).sqrt() + ADAM_EPS);
                        *w = *w * decay - self.lr * step;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Stop once the training loss has not improved for this many epochs.
    pub patience: Option<usize>,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            weight_decay: 0.0005,
            epochs: 200,
            patience: None,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be finite and nonnegative",
                self.lr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight decay {} must be nonnegative",
                self.weight_decay
            )));
        }
        if self.patience == Some(0) {
            return Err(Error::config("patience must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Parameters after the last completed epoch.
    pub snapshot: Snapshot,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// `epoch,loss,train_acc,test_acc` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_acc,test_acc\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:?},{:?},{:?}\n",
                r.epoch, r.loss, r.train_acc, r.test_acc
            ));
        }
        out
    }
}

/// Full-graph training on the dataset's training rows.
pub fn train(model: &mut Model, data: &Dataset, tcfg: &TrainConfig) -> Result<TrainHistory> {
    tcfg.validate()?;
    check_fit(model, data)?;
    let s = model.config.structure(&data.hypergraph)?;
    let mut dropout = Rng::with_stream(model.config.seed, DROPOUT_STREAM);
    let mut opt = Optimizer::new(tcfg.optimizer, tcfg.lr, tcfg.weight_decay);
    let mut records = Vec::with_capacity(tcfg.epochs);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 1..=tcfg.epochs {
        let tape = Tape::new();
        let vars = model.register(&tape);
        let x0 = tape.constant(data.features.clone());
        let logits = model.forward(&tape, &s, &vars, x0, Mode::Train(&mut dropout))?;
        let loss_var = tape.cross_entropy(logits, &data.labels, &data.train_idx)?;
        let loss = tape.value(loss_var)[(0, 0)];
        if !loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        tape.backward(loss_var)?;
        let grads: Vec<Matrix> = vars.learnable(&tape).into_iter().map(|v| tape.grad(v)).collect();
        let params = model.learnable_mut().into_iter().map(|(_, m)| m).collect();
        opt.step(params, &grads)?;
        if !model.is_finite() {
            return Err(Error::Diverged(epoch));
        }

        let eval = model.logits(&s, &data.features)?;
        records.push(EpochRecord {
            epoch,
            loss,
            train_acc: accuracy(&eval, &data.labels, &data.train_idx)?,
            test_acc: accuracy(&eval, &data.labels, &data.test_idx)?,
        });

        if loss < best {
            best = loss;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if tcfg.patience.is_some_and(|p| since_best >= p) {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainHistory {
        records,
        snapshot: model.snapshot(),
        stopped_early,
    })
}

fn check_fit(model: &Model, data: &Dataset) -> Result<()> {
    if model.in_width() != data.feature_width() || model.classes() != data.classes {
        return Err(Error::Shape {
            op: "model vs dataset (features, classes)",
            left: (model.in_width(), model.classes()),
            right: (data.feature_width(), data.classes),
        });
    }
    Ok(())
}

/// Share of `indices` whose highest logit is the label.
pub fn accuracy(logits: &Matrix, labels: &[usize], indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::config("accuracy needs at least one index"));
    }
    let correct = indices.iter().filter(|&&i| logits.argmax_row(i) == labels[i]).count();
    Ok(correct as f64 / indices.len() as f64)
}

/// Micro-averaged F1 over all classes, counted from per-class true
/// positives, false positives and false negatives.
pub fn micro_f1(logits: &Matrix, labels: &[usize], indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::config("micro-F1 needs at least one index"));
    }
    let classes = logits.cols();
    let (mut tp, mut fp, mut fneg) = (vec![0usize; classes], vec![0usize; classes], vec![0usize; classes]);
    for &i in indices {
        let pred = logits.argmax_row(i);
        if pred == labels[i] {
            tp[pred] += 1;
        } else {
            fp[pred] += 1;
            fneg[labels[i]] += 1;
        }
    }
    let (tp, fp, fneg) = (
        tp.iter().sum::<usize>() as f64,
        fp.iter().sum::<usize>() as f64,
        fneg.iter().sum::<usize>() as f64,
    );
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fneg);
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Evaluation-mode accuracy on `indices`.
pub fn evaluate(model: &Model, data: &Dataset, indices: &[usize]) -> Result<f64> {
    check_fit(model, data)?;
    if indices.is_empty() {
        return Err(Error::config("evaluate needs at least one index"));
    }
    let s = model.config.structure(&data.hypergraph)?;
    let logits = model.logits(&s, &data.features)?;
    accuracy(&logits, &data.labels, indices)
}
