//! K-order Chebyshev filtering over the hyperedge interaction graph.

use std::rc::Rc;

use crate::diff::{Activation, Tape, Var};
use crate::propagation::ChebyshevScaling;
use crate::{Error, Matrix, Result, SparseMatrix};

const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITERS: usize = 1000;

/// `T_k(x)` by the three-term recursion.
pub fn chebyshev_scalar(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, stopping once the residual `|Av − λv|` of the unit iterate is
/// at most `1e-6 · max(1, λ)` or after 1000 iterations.
///
/// The Rayleigh quotient never exceeds the true maximum, so a capped run
/// returns an underestimate. A converged run is within the residual of an
/// eigenvalue.
pub fn power_iteration_lambda_max(a: &Matrix) -> f64 {
    let m = a.rows();
    if m == 0 {
        return 0.0;
    }
    // deterministic start with components along every direction
    let mut v = Matrix::from_fn(m, 1, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    let norm = v.frobenius_norm();
    v = v.scale(1.0 / norm);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.matmul(&v).expect("square operator");
        lambda = v.as_slice().iter().zip(w.as_slice()).map(|(x, y)| x * y).sum::<f64>();
        let residual = w
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= POWER_TOL * lambda.abs().max(1.0) {
            break;
        }
        let wn = w.frobenius_norm();
        if wn < 1e-300 {
            return 0.0;
        }
        v = w.scale(1.0 / wn);
    }
    lambda
}

/// Rescaled Laplacian `L'` of a symmetric weighted adjacency `a_he`.
///
/// `L = I − D^-½ A D^-½` with `D` the row sums of `A`. When the graph has no
/// spread at all (`λ_max ≈ 0`, e.g. a single hyperedge) `λ_max = 2` is used,
/// the usual fallback for normalized Laplacians.
pub fn chebyshev_operator(a_he: &Matrix, scaling: ChebyshevScaling) -> Result<Matrix> {
    let m = a_he.rows();
    if a_he.cols() != m {
        return Err(Error::Shape {
            op: "chebyshev_operator",
            left: a_he.shape(),
            right: (m, m),
        });
    }
    if a_he.max_abs_diff(&a_he.transpose()) > 1e-12 {
        return Err(Error::config("Chebyshev filtering needs a symmetric adjacency"));
    }
    let inv: Vec<f64> = (0..m)
        .map(|i| {
            let d: f64 = a_he.row(i).iter().sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let laplacian = Matrix::from_fn(m, m, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv[i] * a_he[(i, j)] * inv[j]
    });
    let mut lambda = power_iteration_lambda_max(&laplacian);
    if lambda < 1e-12 {
        lambda = 2.0;
    }
    let factor = match scaling {
        ChebyshevScaling::Symmetric => 2.0 / lambda,
        ChebyshevScaling::Unit => 1.0 / lambda,
    };
    Ok(Matrix::from_fn(m, m, |i, j| {
        factor * laplacian[(i, j)] - if i == j { 1.0 } else { 0.0 }
    }))
}

/// `σ((Σ_i c_i T_i(L') y) θ₂)` with `T_0 = y`, `T_1 = L'y`,
/// `T_{i+1} = 2 L' T_i − T_{i−1}`. The order `K` is `coeffs.cols() − 1`.
pub fn chebyshev_he2he(
    tape: &Tape,
    l_prime: Rc<SparseMatrix>,
    y: Var,
    coeffs: Var,
    theta2: Var,
    act: Activation,
) -> Result<Var> {
    let (rows, cols) = tape.shape(coeffs);
    if rows != 1 || cols < 2 {
        return Err(Error::Config(format!(
            "Chebyshev order must be at least 1, got {} coefficients",
            cols
        )));
    }
    let order = cols - 1;
    let mut terms = Vec::with_capacity(order + 1);
    terms.push(y);
    terms.push(tape.sparse_matmul(Rc::clone(&l_prime), y)?);
    for i in 1..order {
        let lt = tape.sparse_matmul(Rc::clone(&l_prime), terms[i])?;
        let doubled = tape.scale(lt, 2.0);
        let neg_prev = tape.scale(terms[i - 1], -1.0);
        terms.push(tape.add(doubled, neg_prev)?);
    }
    let filtered = tape.weighted_sum(&terms, coeffs)?;
    let out = tape.matmul(filtered, theta2)?;
    Ok(act.apply(tape, out))
}
