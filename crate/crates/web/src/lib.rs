//! Browser demo over the synthetic benchmark: a training curve under chosen
//! α, β and outlier removal, an explorer for the removal mask, and a heatmap
//! of the hyperedge operators.
//!
//! The computations are plain functions returning serializable views; the
//! `wasm_bindgen` exports hand them to the page as JSON.

use heihnn::data::{synth_generate, Dataset, SynthConfig};
use heihnn::hor::{mask_from_similarities, membership_similarities, HorConfig, HorPlacement};
use heihnn::hypergraph::InteractionNorm;
use heihnn::model::{run_once, ModelConfig, TrainConfig};
use heihnn::propagation::{chebyshev_operator, init_hyperedge_features, ChebyshevScaling};
use heihnn::{Error, Matrix, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Width of the demo model, small enough to train in a browser tab.
const DEMO_HIDDEN: usize = 16;

fn demo_data(outlier_rate: f64, seed: u64) -> Result<Dataset> {
    synth_generate(&SynthConfig {
        outlier_rate,
        ..SynthConfig::default()
    })?
    .resplit(seed)
}

/// Most frequent label among the members of `e`, ties to the smaller label.
fn edge_class(data: &Dataset, e: usize) -> usize {
    let mut counts = vec![0usize; data.classes];
    for &v in data.hypergraph.members(e) {
        counts[data.labels[v]] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == best).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub test_acc: f64,
    pub majority_baseline: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRequest {
    pub alpha: f64,
    pub beta: f64,
    pub hor: HorPlacement,
    pub tau: f64,
    pub outlier_rate: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for CurveRequest {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            hor: HorPlacement::Neither,
            tau: 0.0,
            outlier_rate: 0.0,
            epochs: 100,
            lr: 0.01,
            seed: 0,
        }
    }
}

pub fn training_curve(req: &CurveRequest) -> Result<Curve> {
    let data = demo_data(req.outlier_rate, req.seed)?;
    let mut cfg = ModelConfig {
        hidden: DEMO_HIDDEN,
        att_width: DEMO_HIDDEN,
        alpha: req.alpha,
        beta: req.beta,
        hor: HorConfig {
            tau: req.tau,
            ..HorConfig::default()
        },
        ..ModelConfig::default()
    };
    cfg.stage.set_hor_placement(req.hor);
    let tcfg = TrainConfig {
        lr: req.lr,
        epochs: req.epochs,
        ..TrainConfig::default()
    };
    let run = run_once(&cfg, &tcfg, &data, req.seed)?;
    Ok(Curve {
        points: run
            .history
            .records
            .iter()
            .map(|r| CurvePoint {
                epoch: r.epoch,
                loss: r.loss,
                train_acc: r.train_acc,
                test_acc: r.test_acc,
            })
            .collect(),
        test_acc: run.test_acc,
        majority_baseline: data.majority_baseline(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberView {
    pub node: usize,
    pub label: usize,
    pub similarity: f64,
    pub kept: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeView {
    pub class: usize,
    pub members: Vec<MemberView>,
}

/// The removal mask on the raw features and their member means. An
/// outlier is a member whose label differs from its hyperedge's majority.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskView {
    pub edges: Vec<EdgeView>,
    pub outliers: usize,
    pub outliers_removed: usize,
    pub inliers: usize,
    pub inliers_removed: usize,
}

pub fn hor_mask_view(tau: f64, min_keep: usize, outlier_rate: f64, seed: u64) -> Result<MaskView> {
    let cfg = HorConfig {
        tau,
        min_keep,
        renormalize: true,
    };
    cfg.validate()?;
    let data = demo_data(outlier_rate, seed)?;
    let h = &data.hypergraph;
    let y = init_hyperedge_features(h, &data.features)?;
    let sims = membership_similarities(&data.features, &y, h)?;
    let mask = mask_from_similarities(&sims, h, &cfg);
    let mut view = MaskView {
        edges: Vec::with_capacity(h.m()),
        outliers: 0,
        outliers_removed: 0,
        inliers: 0,
        inliers_removed: 0,
    };
    for e in 0..h.m() {
        let class = edge_class(&data, e);
        let members: Vec<MemberView> = h
            .edge_span(e)
            .zip(h.members(e))
            .map(|(pos, &v)| MemberView {
                node: v,
                label: data.labels[v],
                similarity: sims[pos],
                kept: mask[pos],
            })
            .collect();
        for m in &members {
            let (total, removed) = if m.label == class {
                (&mut view.inliers, &mut view.inliers_removed)
            } else {
                (&mut view.outliers, &mut view.outliers_removed)
            };
            *total += 1;
            *removed += usize::from(!m.kept);
        }
        view.edges.push(EdgeView { class, members });
    }
    Ok(view)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    /// Self-looped interaction normalized by its row sums.
    RowSum,
    /// Self-looped interaction normalized by hyperedge sizes.
    EdgeDegree,
    /// Rescaled Laplacian of the interaction graph.
    Chebyshev,
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-sum" => Ok(OperatorKind::RowSum),
            "edge-degree" => Ok(OperatorKind::EdgeDegree),
            "chebyshev" => Ok(OperatorKind::Chebyshev),
            other => Err(Error::Config(format!("unknown operator `{other}`"))),
        }
    }
}

/// An m × m operator with rows and columns grouped by hyperedge class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Heatmap {
    pub size: usize,
    /// Row-major values in the permuted order.
    pub values: Vec<f64>,
    /// `order[i]` is the hyperedge shown at position `i`.
    pub order: Vec<usize>,
    pub classes: Vec<usize>,
    pub min: f64,
    pub max: f64,
}

pub fn operator_heatmap(kind: OperatorKind, outlier_rate: f64) -> Result<Heatmap> {
    let data = demo_data(outlier_rate, 0)?;
    let h = &data.hypergraph;
    let op: Matrix = match kind {
        OperatorKind::RowSum => h.normalized_interaction_sparse(InteractionNorm::RowSum).to_dense(),
        OperatorKind::EdgeDegree => h.normalized_interaction_sparse(InteractionNorm::EdgeDegree).to_dense(),
        OperatorKind::Chebyshev => {
            let adj = h.interaction_adjacency();
            let a = Matrix::from_fn(h.m(), h.m(), |i, j| f64::from(adj[i][j]));
            chebyshev_operator(&a, ChebyshevScaling::Symmetric)?
        }
    };
    let classes: Vec<usize> = (0..h.m()).map(|e| edge_class(&data, e)).collect();
    let mut order: Vec<usize> = (0..h.m()).collect();
    order.sort_by_key(|&e| (classes[e], e));
    let values: Vec<f64> = order
        .iter()
        .flat_map(|&i| order.iter().map(move |&j| (i, j)))
        .map(|(i, j)| op[(i, j)])
        .collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Heatmap {
        size: h.m(),
        classes: order.iter().map(|&e| classes[e]).collect(),
        values,
        order,
        min,
        max,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON [`Curve`] for one training run.
#[wasm_bindgen(js_name = trainCurve)]
#[allow(clippy::too_many_arguments)]
pub fn train_curve_js(
    alpha: f64,
    beta: f64,
    hor: &str,
    tau: f64,
    outlier_rate: f64,
    epochs: usize,
    lr: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    let hor = hor.parse().map_err(|e: Error| JsError::new(&e.to_string()))?;
    to_js(training_curve(&CurveRequest {
        alpha,
        beta,
        hor,
        tau,
        outlier_rate,
        epochs,
        lr,
        seed: u64::from(seed),
    }))
}

/// JSON [`MaskView`].
#[wasm_bindgen(js_name = horMask)]
pub fn hor_mask_js(tau: f64, min_keep: usize, outlier_rate: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(hor_mask_view(tau, min_keep, outlier_rate, u64::from(seed)))
}

/// JSON [`Heatmap`]; `kind` is `row-sum`, `edge-degree` or `chebyshev`.
#[wasm_bindgen(js_name = operatorHeatmap)]
pub fn operator_heatmap_js(kind: &str, outlier_rate: f64) -> std::result::Result<String, JsError> {
    let kind = kind.parse().map_err(|e: Error| JsError::new(&e.to_string()))?;
    to_js(operator_heatmap(kind, outlier_rate))
}
