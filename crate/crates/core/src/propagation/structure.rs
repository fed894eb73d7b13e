use std::rc::Rc;

use crate::diff::{ScatterEntry, ScatterPlan};
use crate::hypergraph::InteractionNorm;
use crate::propagation::{chebyshev_operator, ChebyshevScaling, HyperedgeConv};
use crate::{Hypergraph, Matrix, Result, SparseMatrix};

/// Constant operators derived from one hypergraph, built once and shared by
/// every layer and every training step.
pub struct Structure<'h> {
    pub hypergraph: &'h Hypergraph,
    /// `(node, edge)` per incidence position.
    pub pairs: Rc<Vec<(usize, usize)>>,
    /// Incidence positions grouped by hyperedge.
    pub edge_groups: Rc<Vec<Vec<usize>>>,
    /// Incidence positions grouped by node.
    pub node_groups: Rc<Vec<Vec<usize>>>,
    /// `D_E^-½ Hᵀ D_V^-½` with per-position weights.
    pub n2he_plan: Rc<ScatterPlan>,
    /// `D_V^-½ H D_E^-½` with per-position weights.
    pub he2n_plan: Rc<ScatterPlan>,
    /// `D_E^-1 Hᵀ`, the per-hyperedge mean.
    pub mean: Rc<SparseMatrix>,
    /// Normalized `HᵀH + I`.
    pub interaction: Rc<SparseMatrix>,
    /// Rescaled Laplacian for Chebyshev filtering.
    pub chebyshev: Option<Rc<SparseMatrix>>,
    /// Plain incidence weights, all ones.
    pub ones: Matrix,
}

impl<'h> Structure<'h> {
    pub fn new(
        h: &'h Hypergraph,
        norm: InteractionNorm,
        he2he: HyperedgeConv,
        scaling: ChebyshevScaling,
    ) -> Result<Self> {
        let dv = h.node_inv_sqrt_degrees();
        let de = h.edge_inv_sqrt_degrees();
        let pairs: Vec<(usize, usize)> = h.entries().collect();
        let n2he = pairs
            .iter()
            .map(|&(v, e)| ScatterEntry {
                dst: e,
                src: v,
                coef: de[e] * dv[v],
            })
            .collect();
        let he2n = pairs
            .iter()
            .map(|&(v, e)| ScatterEntry {
                dst: v,
                src: e,
                coef: dv[v] * de[e],
            })
            .collect();
        let mean = SparseMatrix::from_triplets(
            h.m(),
            h.n(),
            pairs.iter().map(|&(v, e)| (e, v, 1.0 / f64::from(h.edge_degrees()[e]))),
        )?;
        let chebyshev = match he2he {
            HyperedgeConv::Chebyshev { order } if order >= 1 => {
                let a = interaction_dense(h);
                let l = chebyshev_operator(&a, scaling)?;
                Some(Rc::new(SparseMatrix::from_dense(&l)))
            }
            HyperedgeConv::Chebyshev { .. } => {
                return Err(crate::Error::config("Chebyshev order must be at least 1"));
            }
            _ => None,
        };
        Ok(Self {
            hypergraph: h,
            edge_groups: Rc::new(h.edge_groups()),
            node_groups: Rc::new(h.node_groups()),
            n2he_plan: Rc::new(ScatterPlan {
                out_rows: h.m(),
                in_rows: h.n(),
                entries: n2he,
            }),
            he2n_plan: Rc::new(ScatterPlan {
                out_rows: h.n(),
                in_rows: h.m(),
                entries: he2n,
            }),
            mean: Rc::new(mean),
            interaction: Rc::new(h.normalized_interaction_sparse(norm)),
            chebyshev,
            ones: Matrix::filled(pairs.len(), 1, 1.0),
            pairs: Rc::new(pairs),
        })
    }

    /// Default operators: row-sum normalization, single GCN step.
    pub fn basic(h: &'h Hypergraph) -> Result<Self> {
        Self::new(
            h,
            InteractionNorm::RowSum,
            HyperedgeConv::SelfLoopGcn,
            ChebyshevScaling::Symmetric,
        )
    }
}

fn interaction_dense(h: &Hypergraph) -> Matrix {
    let a = h.interaction_adjacency();
    Matrix::from_fn(h.m(), h.m(), |i, j| f64::from(a[i][j]))
}
