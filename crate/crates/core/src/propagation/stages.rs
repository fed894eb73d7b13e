use std::rc::Rc;

use crate::diff::{Activation, Tape, Var};
use crate::hor::{apply_mask, hor_mask, HorConfig};
use crate::propagation::{chebyshev_he2he, HyperedgeConv, LayerVars, StageConfig, Structure};
use crate::{Error, Hypergraph, Matrix, Result, SparseMatrix};

/// Which side of the incidence an attention distribution is normalized over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Over the member nodes of each hyperedge.
    N2he,
    /// Over the incident hyperedges of each node.
    He2n,
}

/// Incidence weights on a tape, one per incidence position.
#[derive(Clone, Copy, Debug)]
pub struct Incidence {
    pub weights: Var,
    /// The weights are attention distributions rather than plain ones.
    pub attention: bool,
}

impl Incidence {
    pub fn plain(tape: &Tape, s: &Structure<'_>) -> Self {
        Self {
            weights: tape.constant(s.ones.clone()),
            attention: false,
        }
    }
}

/// Mean of member-node features per hyperedge, `D_E^-1 Hᵀ X`.
pub fn init_hyperedge_features(h: &Hypergraph, x0: &Matrix) -> Result<Matrix> {
    if x0.rows() != h.n() {
        return Err(Error::Shape {
            op: "init_hyperedge_features",
            left: (h.n(), h.m()),
            right: x0.shape(),
        });
    }
    let mut y = Matrix::zeros(h.m(), x0.cols());
    for e in 0..h.m() {
        let members = h.members(e);
        let out = y.row_mut(e);
        for &v in members {
            for (o, &x) in out.iter_mut().zip(x0.row(v)) {
                *o += x;
            }
        }
        let d = members.len() as f64;
        out.iter_mut().for_each(|o| *o /= d);
    }
    Ok(y)
}

/// Attention weights `softmax((x_i W_Q) · (y_j W_K))` over each incidence
/// group. The zero pattern of `H` is kept exactly.
pub fn attention_incidence(
    tape: &Tape,
    s: &Structure<'_>,
    x: Var,
    y: Var,
    wq: Var,
    wk: Var,
    direction: Direction,
) -> Result<Incidence> {
    let q = tape.matmul(x, wq)?;
    let k = tape.matmul(y, wk)?;
    let logits = tape.pair_logits(q, k, Rc::clone(&s.pairs))?;
    let groups = match direction {
        Direction::N2he => Rc::clone(&s.edge_groups),
        Direction::He2n => Rc::clone(&s.node_groups),
    };
    Ok(Incidence {
        weights: tape.masked_softmax(logits, groups)?,
        attention: true,
    })
}

fn masked(
    tape: &Tape,
    s: &Structure<'_>,
    inc: Incidence,
    x: Var,
    y: Var,
    hor: &HorConfig,
    groups: &Rc<Vec<Vec<usize>>>,
) -> Result<Var> {
    let mask = hor_mask(&tape.value(x), &tape.value(y), s.hypergraph, hor)?;
    // plain incidence is not a distribution, so there is nothing to renormalize
    apply_mask(
        tape,
        inc.weights,
        &mask,
        Rc::clone(groups),
        hor.renormalize && inc.attention,
    )
}

/// Node-to-hyperedge stage.
#[allow(clippy::too_many_arguments)]
pub fn n2he(
    tape: &Tape,
    s: &Structure<'_>,
    inc: Incidence,
    x: Var,
    y: Var,
    p: &LayerVars,
    cfg: &StageConfig,
    hor: &HorConfig,
) -> Result<Var> {
    let weights = if cfg.hor_n2he {
        masked(tape, s, inc, x, y, hor, &s.edge_groups)?
    } else {
        inc.weights
    };
    let agg = tape.weighted_scatter(weights, x, Rc::clone(&s.n2he_plan))?;
    let mut pre = tape.scale(agg, p.alpha);
    if cfg.residual {
        pre = tape.add(pre, y)?;
    }
    let out = tape.matmul(pre, p.theta1)?;
    Ok(cfg.activations.n2he.apply(tape, out))
}

/// Hyperedge-to-hyperedge stage.
pub fn he2he(tape: &Tape, s: &Structure<'_>, y1: Var, p: &LayerVars, cfg: &StageConfig) -> Result<Var> {
    let act = cfg.activations.he2he;
    match cfg.he2he {
        HyperedgeConv::Identity => Ok(y1),
        HyperedgeConv::SelfLoopGcn => {
            let mixed = tape.sparse_matmul(Rc::clone(&s.interaction), y1)?;
            let out = tape.matmul(mixed, p.theta2)?;
            Ok(act.apply(tape, out))
        }
        HyperedgeConv::Chebyshev { .. } => {
            let l_prime = s
                .chebyshev
                .clone()
                .ok_or_else(|| Error::config("structure was built without a Chebyshev operator"))?;
            let coeffs = p
                .chebyshev
                .ok_or_else(|| Error::config("layer has no Chebyshev coefficients"))?;
            chebyshev_he2he(tape, l_prime, y1, coeffs, p.theta2, act)
        }
    }
}

/// Hyperedge-to-node stage.
#[allow(clippy::too_many_arguments)]
pub fn he2n(
    tape: &Tape,
    s: &Structure<'_>,
    inc: Incidence,
    y2: Var,
    x: Var,
    p: &LayerVars,
    cfg: &StageConfig,
    hor: &HorConfig,
) -> Result<Var> {
    let weights = if cfg.hor_he2n {
        masked(tape, s, inc, x, y2, hor, &s.node_groups)?
    } else {
        inc.weights
    };
    let agg = tape.weighted_scatter(weights, y2, Rc::clone(&s.he2n_plan))?;
    let mut pre = tape.scale(agg, p.beta);
    if cfg.residual {
        pre = tape.add(pre, x)?;
    }
    let out = tape.matmul(pre, p.theta3)?;
    Ok(cfg.activations.he2n.apply(tape, out))
}

/// One full layer: N2HE, HE2HE, HE2N. Returns the new node and hyperedge
/// embeddings.
pub fn heihnn_layer(
    tape: &Tape,
    s: &Structure<'_>,
    x: Var,
    y: Var,
    p: &LayerVars,
    cfg: &StageConfig,
    hor: &HorConfig,
) -> Result<(Var, Var)> {
    let h = s.hypergraph;
    let (xr, xc) = tape.shape(x);
    let (yr, yc) = tape.shape(y);
    if xr != h.n() || yr != h.m() || xc != yc {
        return Err(Error::Shape {
            op: "heihnn_layer",
            left: (xr, xc),
            right: (yr, yc),
        });
    }
    let inc = if cfg.use_attention {
        attention_incidence(tape, s, x, y, p.wq, p.wk, Direction::N2he)?
    } else {
        Incidence::plain(tape, s)
    };
    let y1 = n2he(tape, s, inc, x, y, p, cfg, hor)?;
    let y2 = he2he(tape, s, y1, p, cfg)?;
    let inc2 = if cfg.use_attention {
        attention_incidence(tape, s, x, y2, p.wq2, p.wk2, Direction::He2n)?
    } else {
        Incidence::plain(tape, s)
    };
    let x_next = he2n(tape, s, inc2, y2, x, p, cfg, hor)?;
    Ok((x_next, y2))
}

/// `D_V^-½ H D_E^-1 Hᵀ D_V^-½`, assembled hyperedge by hyperedge.
pub fn hgnn_operator(h: &Hypergraph) -> SparseMatrix {
    let dv = h.node_inv_sqrt_degrees();
    let mut triplets = Vec::new();
    for e in 0..h.m() {
        let members = h.members(e);
        let inv_size = 1.0 / members.len() as f64;
        for &u in members {
            for &v in members {
                triplets.push((u, v, dv[u] * inv_size * dv[v]));
            }
        }
    }
    SparseMatrix::from_triplets(h.n(), h.n(), triplets).expect("members are valid node ids")
}

/// The classical HGNN convolution `σ(gain · D_V^-½ H D_E^-1 Hᵀ D_V^-½ X θ)`.
pub fn hgnn_layer(tape: &Tape, h: &Hypergraph, x: Var, theta: Var, gain: f64, act: Activation) -> Result<Var> {
    let mixed = tape.sparse_matmul(Rc::new(hgnn_operator(h)), x)?;
    let mixed = tape.scale(mixed, gain);
    let out = tape.matmul(mixed, theta)?;
    Ok(act.apply(tape, out))
}
