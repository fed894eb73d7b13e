use crate::data::Dataset;
use crate::diff::{grad_check, Tape, Var};
use crate::model::{Mode, Model, ModelVars};
use crate::{Matrix, Result};

/// Finite-difference check of one parameter matrix.
#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst: (usize, usize),
    pub analytic: Matrix,
    pub numeric: Matrix,
}

fn substitute(vars: &mut ModelVars, tape: &Tape, k: usize, v: Var) {
    let mut slots: Vec<&mut Var> = vec![&mut vars.input];
    for layer in &mut vars.layers {
        let cheb_learnable = layer.chebyshev.is_some_and(|c| tape.requires_grad(c));
        slots.extend([
            &mut layer.theta1,
            &mut layer.theta2,
            &mut layer.theta3,
            &mut layer.wq,
            &mut layer.wk,
            &mut layer.wq2,
            &mut layer.wk2,
        ]);
        if cheb_learnable {
            slots.push(layer.chebyshev.as_mut().expect("checked above"));
        }
    }
    slots.push(&mut vars.head);
    slots.push(&mut vars.head_bias);
    *slots[k] = v;
}

/// Compares the analytic gradient of the training loss with central
/// differences of step `eps`, for every learnable parameter. Dropout is off.
pub fn model_grad_check(model: &Model, data: &Dataset, eps: f64) -> Result<Vec<ParamCheck>> {
    let s = model.config.structure(&data.hypergraph)?;
    let mut probe = model.clone();
    let current: Vec<(String, Matrix)> = probe
        .learnable_mut()
        .into_iter()
        .map(|(name, m)| (name, m.clone()))
        .collect();
    current
        .into_iter()
        .enumerate()
        .map(|(k, (name, value))| {
            let loss = |tape: &Tape, v: Var| -> Result<Var> {
                let mut vars = model.register(tape);
                substitute(&mut vars, tape, k, v);
                let x0 = tape.constant(data.features.clone());
                let logits = model.forward(tape, &s, &vars, x0, Mode::Eval)?;
                tape.cross_entropy(logits, &data.labels, &data.train_idx)
            };
            let check = grad_check(loss, &value, eps)?;
            Ok(ParamCheck {
                name,
                max_rel_error: check.max_rel_error,
                worst: check.worst,
                analytic: check.analytic,
                numeric: check.numeric,
            })
        })
        .collect()
}
