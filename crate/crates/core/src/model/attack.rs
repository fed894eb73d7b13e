use crate::data::Dataset;
use crate::diff::Tape;
use crate::model::{Mode, Model};
use crate::{Error, Matrix, Result};

/// Projected gradient ascent on the test rows' input features.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgdConfig {
    /// Radius of the `ℓ∞` ball around each original entry.
    pub eps: f64,
    pub steps: usize,
    /// Defaults to `eps / 4`.
    pub step_size: Option<f64>,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self {
            eps: 0.002,
            steps: 10,
            step_size: None,
        }
    }
}

impl PgdConfig {
    pub fn step_size(&self) -> f64 {
        self.step_size.unwrap_or(self.eps / 4.0)
    }
}

/// Moves `candidate` into `[original − eps, original + eps]` such that the
/// computed difference `candidate − original` also respects the bound.
pub fn project_linf(original: f64, candidate: f64, eps: f64) -> f64 {
    let mut x = candidate.clamp(original - eps, original + eps);
    // the clamp bounds are rounded, so step back by ulps if needed
    while x - original > eps {
        x = x.next_down();
    }
    while original - x > eps {
        x = x.next_up();
    }
    x
}

/// Perturbs the test rows of the feature matrix to raise the cross-entropy
/// of their true labels. Training rows are returned untouched, and the model
/// runs in evaluation mode.
pub fn pgd_perturb(model: &Model, data: &Dataset, cfg: &PgdConfig) -> Result<Matrix> {
    if !(cfg.eps >= 0.0 && cfg.eps.is_finite()) {
        return Err(Error::Config(format!(
            "PGD radius {} must be finite and nonnegative",
            cfg.eps
        )));
    }
    let step = cfg.step_size();
    if !(step >= 0.0 && step.is_finite()) {
        return Err(Error::Config(format!(
            "PGD step size {step} must be finite and nonnegative"
        )));
    }
    let original = &data.features;
    if cfg.eps == 0.0 || cfg.steps == 0 || data.test_idx.is_empty() {
        return Ok(original.clone());
    }
    let s = model.config.structure(&data.hypergraph)?;
    let mut x = original.clone();
    for _ in 0..cfg.steps {
        let tape = Tape::new();
        let vars = model.register(&tape);
        let input = tape.param(x.clone());
        let logits = model.forward(&tape, &s, &vars, input, Mode::Eval)?;
        let loss = tape.cross_entropy(logits, &data.labels, &data.test_idx)?;
        tape.backward(loss)?;
        let grad = tape.grad(input);
        for &i in &data.test_idx {
            let orig = original.row(i);
            let g = grad.row(i);
            for (j, value) in x.row_mut(i).iter_mut().enumerate() {
                let sign = if g[j] > 0.0 {
                    1.0
                } else if g[j] < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                *value = project_linf(orig[j], *value + step * sign, cfg.eps);
            }
        }
    }
    Ok(x)
}
