use std::rc::Rc;

use super::*;
use crate::hor::HorConfig;
use crate::{Hypergraph, SparseMatrix};

fn scalar_params(he2he: HyperedgeConv) -> LayerParameters {
    let one = Matrix::filled(1, 1, 1.0);
    LayerParameters {
        theta1: one.clone(),
        theta2: one.clone(),
        theta3: one.clone(),
        wq: one.clone(),
        wk: one.clone(),
        wq2: one.clone(),
        wk2: one,
        chebyshev: he2he.chebyshev_order().map(|k| {
            let mut c = Matrix::zeros(1, k + 1);
            c[(0, 0)] = 1.0;
            c
        }),
        alpha: 1.0,
        beta: 1.0,
    }
}

fn linear_plain() -> StageConfig {
    StageConfig {
        use_attention: false,
        activations: StageActivations::uniform(Activation::Identity),
        ..StageConfig::default()
    }
}

fn two_edges() -> Hypergraph {
    Hypergraph::new(4, &[vec![0, 1, 3], vec![3, 2]]).unwrap()
}

#[test]
fn hyperedge_means() {
    let h = Hypergraph::new(2, &[vec![0, 1]]).unwrap();
    let y = init_hyperedge_features(&h, &Matrix::from_rows(&[[2.0, 0.0], [4.0, 2.0]])).unwrap();
    assert_eq!(y, Matrix::from_rows(&[[3.0, 1.0]]));

    let x0 = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [0.0, 3.0], [0.0, 6.0]]);
    let y = init_hyperedge_features(&two_edges(), &x0).unwrap();
    assert_eq!(y, Matrix::from_rows(&[[1.0, 2.0], [0.0, 4.5]]));

    let single = Hypergraph::new(3, &[vec![1], vec![0, 2]]).unwrap();
    let x0 = Matrix::from_rows(&[[1.0], [7.0], [3.0]]);
    assert_eq!(init_hyperedge_features(&single, &x0).unwrap().row(0), &[7.0]);
    assert!(init_hyperedge_features(&single, &Matrix::zeros(2, 1)).is_err());
}

#[test]
fn mean_operator_agrees_with_direct_mean() {
    let h = two_edges();
    let s = Structure::basic(&h).unwrap();
    let x0 = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.5 - 1.0);
    let direct = init_hyperedge_features(&h, &x0).unwrap();
    assert!(s.mean.mul_dense(&x0).unwrap().max_abs_diff(&direct) < 1e-15);
}

#[test]
fn attention_closed_form() {
    // one hyperedge of three nodes; q = x, k = y = 1, so logits are x
    let h = Hypergraph::new(3, &[vec![0, 1, 2]]).unwrap();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let ln2 = 2f64.ln();
    let x = tape.constant(Matrix::from_rows(&[[0.0], [ln2], [ln2]]));
    let y = tape.constant(Matrix::filled(1, 1, 1.0));
    let one = tape.constant(Matrix::filled(1, 1, 1.0));
    let inc = attention_incidence(&tape, &s, x, y, one, one, Direction::N2he).unwrap();
    let w = tape.value(inc.weights);
    for (got, want) in w.as_slice().iter().zip([0.2, 0.4, 0.4]) {
        assert!((got - want).abs() < 1e-12);
    }
    // each node sits in a single hyperedge, so he2n weights are all 1
    let inc = attention_incidence(&tape, &s, x, y, one, one, Direction::He2n).unwrap();
    assert!(tape
        .value(inc.weights)
        .as_slice()
        .iter()
        .all(|&w| (w - 1.0).abs() < 1e-15));
}

#[test]
fn attention_width_mismatch_is_rejected() {
    let h = two_edges();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let x = tape.constant(Matrix::zeros(4, 2));
    let y = tape.constant(Matrix::zeros(2, 2));
    let wq = tape.constant(Matrix::zeros(3, 2));
    let wk = tape.constant(Matrix::zeros(2, 2));
    assert!(attention_incidence(&tape, &s, x, y, wq, wk, Direction::N2he).is_err());
}

#[test]
fn scalar_stage_examples() {
    let h = Hypergraph::new(1, &[vec![0]]).unwrap();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let p = scalar_params(HyperedgeConv::SelfLoopGcn).register(&tape, true);
    let cfg = linear_plain();
    let hor = HorConfig::default();
    let one = tape.constant(Matrix::filled(1, 1, 1.0));
    let inc = Incidence::plain(&tape, &s);
    let y1 = n2he(&tape, &s, inc, one, one, &p, &cfg, &hor).unwrap();
    assert_eq!(tape.value(y1)[(0, 0)], 2.0);
    let x1 = he2n(&tape, &s, inc, one, one, &p, &cfg, &hor).unwrap();
    assert_eq!(tape.value(x1)[(0, 0)], 2.0);

    let (x, y) = heihnn_layer(&tape, &s, one, one, &p, &cfg, &hor).unwrap();
    assert_eq!(tape.value(y)[(0, 0)], 2.0);
    assert_eq!(tape.value(x)[(0, 0)], 3.0);
}

#[test]
fn zero_mixing_passes_the_skip_term_through() {
    let h = two_edges();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let mut params = LayerParameters::init(2, 2, HyperedgeConv::SelfLoopGcn, 0.0, 0.0, &mut Rng::new(3)).unwrap();
    params.theta1 = Matrix::identity(2);
    params.theta3 = Matrix::identity(2);
    let p = params.register(&tape, true);
    let cfg = StageConfig {
        activations: StageActivations::uniform(Activation::Identity),
        ..StageConfig::default()
    };
    let hor = HorConfig::default();
    let x = tape.constant(Matrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 - 1.5));
    let y = tape.constant(Matrix::from_fn(2, 2, |i, j| (i * j) as f64 + 0.25));
    let inc = attention_incidence(&tape, &s, x, y, p.wq, p.wk, Direction::N2he).unwrap();
    let y1 = n2he(&tape, &s, inc, x, y, &p, &cfg, &hor).unwrap();
    assert_eq!(*tape.value(y1), *tape.value(y));
    let inc = attention_incidence(&tape, &s, x, y, p.wq2, p.wk2, Direction::He2n).unwrap();
    let x1 = he2n(&tape, &s, inc, y, x, &p, &cfg, &hor).unwrap();
    assert_eq!(*tape.value(x1), *tape.value(x));
}

#[test]
fn he2he_examples() {
    let h = two_edges();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let p = scalar_params(HyperedgeConv::SelfLoopGcn).register(&tape, true);
    let cfg = linear_plain();
    let y1 = tape.constant(Matrix::from_rows(&[[1.0], [0.0]]));
    let out = tape.value(he2he(&tape, &s, y1, &p, &cfg).unwrap());
    assert!((out[(0, 0)] - 0.8).abs() < 1e-12);
    assert!((out[(1, 0)] - 1.0 / 20f64.sqrt()).abs() < 1e-12);

    // a lone hyperedge is a pure feature transform
    let lone = Hypergraph::new(3, &[vec![0, 1, 2]]).unwrap();
    let s = Structure::basic(&lone).unwrap();
    let mut params = scalar_params(HyperedgeConv::SelfLoopGcn);
    params.theta2 = Matrix::from_rows(&[[2.0, -1.0]]);
    let p = params.register(&tape, true);
    let y1 = tape.constant(Matrix::filled(1, 1, 1.5));
    let out = tape.value(he2he(&tape, &s, y1, &p, &cfg).unwrap());
    assert_eq!(*out, Matrix::from_rows(&[[3.0, -1.5]]));
}

#[test]
fn disjoint_hyperedges_do_not_mix() {
    let h = Hypergraph::new(4, &[vec![0, 1], vec![2, 3]]).unwrap();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let p = scalar_params(HyperedgeConv::SelfLoopGcn).register(&tape, true);
    let y1 = tape.constant(Matrix::from_rows(&[[1.0], [0.0]]));
    let out = tape.value(he2he(&tape, &s, y1, &p, &linear_plain()).unwrap());
    assert_eq!(out[(1, 0)], 0.0);
}

#[test]
fn chebyshev_scalar_identities() {
    assert_eq!(chebyshev_scalar(0, 0.5), 1.0);
    assert_eq!(chebyshev_scalar(1, 0.5), 0.5);
    assert_eq!(chebyshev_scalar(2, 0.5), -0.5);
    // T_k(cos t) = cos(k t)
    let t: f64 = 0.3;
    for k in 0..8 {
        assert!((chebyshev_scalar(k, t.cos()) - (k as f64 * t).cos()).abs() < 1e-12);
    }
}

#[test]
fn chebyshev_leading_coefficient_is_identity() {
    let h = Hypergraph::new(5, &[vec![0, 1], vec![1, 2, 3], vec![3, 4], vec![0, 4]]).unwrap();
    let conv = HyperedgeConv::Chebyshev { order: 3 };
    let s = Structure::new(&h, Default::default(), conv, ChebyshevScaling::Symmetric).unwrap();
    let tape = Tape::new();
    let p = scalar_params(conv).register(&tape, true);
    let cfg = StageConfig {
        he2he: conv,
        ..linear_plain()
    };
    let y = Matrix::from_rows(&[[0.5], [-1.0], [2.0], [0.25]]);
    let y1 = tape.constant(y.clone());
    let out = he2he(&tape, &s, y1, &p, &cfg).unwrap();
    assert!(tape.value(out).max_abs_diff(&y) < 1e-15);
}

#[test]
fn chebyshev_operator_errors_and_fallback() {
    let asym = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
    assert!(chebyshev_operator(&asym, ChebyshevScaling::Symmetric).is_err());
    assert!(chebyshev_operator(&Matrix::zeros(2, 3), ChebyshevScaling::Symmetric).is_err());
    // one hyperedge: L = 0, λ falls back to 2 and L' = -I
    let l = chebyshev_operator(&Matrix::filled(1, 1, 3.0), ChebyshevScaling::Symmetric).unwrap();
    assert!((l[(0, 0)] + 1.0).abs() < 1e-12);

    let h = Hypergraph::new(1, &[vec![0]]).unwrap();
    let zero = Structure::new(
        &h,
        Default::default(),
        HyperedgeConv::Chebyshev { order: 0 },
        ChebyshevScaling::Symmetric,
    );
    assert!(zero.is_err());

    let tape = Tape::new();
    let y = tape.constant(Matrix::zeros(1, 1));
    let c = tape.constant(Matrix::filled(1, 1, 1.0));
    let l = Rc::new(SparseMatrix::identity(1));
    assert!(chebyshev_he2he(&tape, l, y, c, c, Activation::Identity).is_err());
}

#[test]
fn power_iteration_on_known_spectrum() {
    let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
    assert!((power_iteration_lambda_max(&a) - 3.0).abs() < 1e-6);
    let d = Matrix::from_rows(&[[0.5, 0.0, 0.0], [0.0, 1.5, 0.0], [0.0, 0.0, 1.0]]);
    let got = power_iteration_lambda_max(&d);
    // the stopping rule bounds the step, so allow a few steps of slack
    assert!((got - 1.5).abs() < 1e-5, "{got}");
}

#[test]
fn hgnn_scalar_case() {
    let h = Hypergraph::new(1, &[vec![0]]).unwrap();
    let tape = Tape::new();
    let one = tape.constant(Matrix::filled(1, 1, 1.0));
    let out = hgnn_layer(&tape, &h, one, one, 1.0, Activation::Identity).unwrap();
    assert_eq!(tape.value(out)[(0, 0)], 1.0);
}

#[test]
fn reduction_mode_matches_hgnn_on_a_small_instance() {
    let h = Hypergraph::new(5, &[vec![0, 1, 2], vec![2, 3], vec![3, 4, 0], vec![1]]).unwrap();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let mut rng = Rng::new(11);
    let mut params = LayerParameters::init(3, 2, HyperedgeConv::Identity, 1.0, 1.0, &mut rng).unwrap();
    params.theta1 = Matrix::identity(3);
    let p = params.register(&tape, true);
    let cfg = StageConfig::hgnn_reduction(Activation::Relu);
    let x = tape.constant(glorot(5, 3, &mut rng));
    let y = tape.constant(Matrix::zeros(4, 3));
    let (xr, _) = heihnn_layer(&tape, &s, x, y, &p, &cfg, &HorConfig::default()).unwrap();
    let reference = hgnn_layer(&tape, &h, x, p.theta3, 1.0, Activation::Relu).unwrap();
    assert!(tape.value(xr).max_abs_diff(&tape.value(reference)) < 1e-12);
}

#[test]
fn layer_rejects_mismatched_shapes() {
    let h = two_edges();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let p = LayerParameters::init(2, 2, HyperedgeConv::SelfLoopGcn, 1.0, 1.0, &mut Rng::new(0))
        .unwrap()
        .register(&tape, true);
    let x = tape.constant(Matrix::zeros(3, 2));
    let y = tape.constant(Matrix::zeros(2, 2));
    assert!(heihnn_layer(&tape, &s, x, y, &p, &StageConfig::default(), &HorConfig::default()).is_err());
}

#[test]
fn negative_mixing_is_rejected() {
    let mut rng = Rng::new(0);
    assert!(LayerParameters::init(2, 2, HyperedgeConv::SelfLoopGcn, -0.1, 1.0, &mut rng).is_err());
    assert!(LayerParameters::init(2, 2, HyperedgeConv::SelfLoopGcn, 1.0, f64::NAN, &mut rng).is_err());
}

#[test]
fn hor_on_plain_incidence_only_zeroes() {
    // x_1 points away from the hyperedge mean, so it is masked; plain weights
    // stay 1 for survivors
    let h = Hypergraph::new(3, &[vec![0, 1, 2]]).unwrap();
    let s = Structure::basic(&h).unwrap();
    let tape = Tape::new();
    let mut params = scalar_params(HyperedgeConv::SelfLoopGcn);
    params.theta1 = Matrix::identity(2);
    params.theta2 = Matrix::identity(2);
    params.theta3 = Matrix::identity(2);
    let p = params.register(&tape, true);
    let cfg = StageConfig {
        hor_n2he: true,
        residual: false,
        ..linear_plain()
    };
    let x = tape.constant(Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.1], [1.0, 0.2]]));
    let y = tape.constant(Matrix::from_rows(&[[1.0, 0.0]]));
    let inc = Incidence::plain(&tape, &s);
    let y1 = n2he(&tape, &s, inc, x, y, &p, &cfg, &HorConfig::default()).unwrap();
    let scale = 1.0 / 3f64.sqrt();
    let want = [2.0 * scale, 0.2 * scale];
    for (g, w) in tape.value(y1).as_slice().iter().zip(want) {
        assert!((g - w).abs() < 1e-12);
    }
}
