use crate::diff::{Tape, Var};
use crate::{Error, Matrix, Result};

const REL_FLOOR: f64 = 1e-6;

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Entry with the largest relative error.
    pub worst: (usize, usize),
    pub analytic: Matrix,
    pub numeric: Matrix,
}

/// Checks the gradient of a scalar function at `x0` against central
/// differences with step `eps`.
///
/// The relative error of an entry is
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`. The floor keeps
/// entries whose true gradient sits at the roundoff level of the difference
/// quotient (about `1e-16 / eps` times the loss) from reading as failures;
/// below it, the check bounds the absolute error instead.
pub fn grad_check<F>(f: F, x0: &Matrix, eps: f64) -> Result<GradCheck>
where
    F: Fn(&Tape, Var) -> Result<Var>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Config(format!("finite-difference step {eps} must be positive")));
    }
    let analytic = {
        let tape = Tape::new();
        let x = tape.param(x0.clone());
        let y = f(&tape, x)?;
        tape.backward(y)?;
        tape.grad(x)
    };

    let eval = |x: Matrix| -> Result<f64> {
        let tape = Tape::new();
        let v = tape.constant(x);
        let y = f(&tape, v)?;
        let (r, c) = tape.shape(y);
        if (r, c) != (1, 1) {
            return Err(Error::NonScalar(r, c));
        }
        Ok(tape.value(y)[(0, 0)])
    };

    let mut numeric = Matrix::zeros(x0.rows(), x0.cols());
    let mut max_rel_error = 0.0;
    let mut worst = (0, 0);
    for i in 0..x0.rows() {
        for j in 0..x0.cols() {
            let mut plus = x0.clone();
            plus[(i, j)] += eps;
            let mut minus = x0.clone();
            minus[(i, j)] -= eps;
            let num = (eval(plus)? - eval(minus)?) / (2.0 * eps);
            numeric[(i, j)] = num;
            let a = analytic[(i, j)];
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(REL_FLOOR);
            if rel > max_rel_error {
                max_rel_error = rel;
                worst = (i, j);
            }
        }
    }
    Ok(GradCheck {
        max_rel_error,
        worst,
        analytic,
        numeric,
    })
}
