//! Straight-line dense reference implementations and random instances.
//!
//! Nothing here calls into the crate's propagation, HOR or interaction code;
//! hypergraphs are read only through their member lists.

#![allow(dead_code)]

use heihnn::{Hypergraph, Matrix, Rng};

pub type Dense = Vec<Vec<f64>>;

pub fn dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn eye(n: usize) -> Dense {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    let c = a.first().map_or(0, Vec::len);
    (0..c).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn add(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn scale(a: &Dense, c: f64) -> Dense {
    a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

pub fn relu(a: &Dense) -> Dense {
    a.iter().map(|r| r.iter().map(|x| x.max(0.0)).collect()).collect()
}

pub fn diag(d: &[f64]) -> Dense {
    let mut a = zeros(d.len(), d.len());
    for (i, &x) in d.iter().enumerate() {
        a[i][i] = x;
    }
    a
}

pub fn max_diff(a: &Dense, b: &Matrix) -> f64 {
    assert_eq!((a.len(), a.first().map_or(0, Vec::len)), b.shape());
    let mut worst: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            worst = worst.max((x - b[(i, j)]).abs());
        }
    }
    worst
}

/// `H(v, e) = 1` iff `v ∈ e`.
pub fn incidence(h: &Hypergraph) -> Dense {
    let mut a = zeros(h.n(), h.m());
    for (e, members) in h.edges().iter().enumerate() {
        for &v in members {
            a[v][e] = 1.0;
        }
    }
    a
}

pub fn node_degrees(inc: &Dense) -> Vec<f64> {
    inc.iter().map(|r| r.iter().sum()).collect()
}

pub fn edge_degrees(inc: &Dense) -> Vec<f64> {
    let m = inc.first().map_or(0, Vec::len);
    (0..m).map(|e| inc.iter().map(|r| r[e]).sum()).collect()
}

fn inv_sqrt(d: &[f64]) -> Vec<f64> {
    d.iter().map(|x| 1.0 / x.sqrt()).collect()
}

/// Attention weights as an n × m matrix, softmax-normalized over the members
/// of each hyperedge (`per_edge`) or over the hyperedges of each node.
pub fn attention(inc: &Dense, x: &Dense, y: &Dense, wq: &Dense, wk: &Dense, per_edge: bool) -> Dense {
    let q = mul(x, wq);
    let k = mul(y, wk);
    let (n, m) = (inc.len(), inc[0].len());
    let mut score = zeros(n, m);
    for v in 0..n {
        for e in 0..m {
            if inc[v][e] != 0.0 {
                score[v][e] = q[v].iter().zip(&k[e]).map(|(a, b)| a * b).sum();
            }
        }
    }
    let mut out = zeros(n, m);
    if per_edge {
        for e in 0..m {
            let members: Vec<usize> = (0..n).filter(|&v| inc[v][e] != 0.0).collect();
            let top = members.iter().map(|&v| score[v][e]).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = members.iter().map(|&v| (score[v][e] - top).exp()).sum();
            for &v in &members {
                out[v][e] = (score[v][e] - top).exp() / z;
            }
        }
    } else {
        for v in 0..n {
            let edges: Vec<usize> = (0..m).filter(|&e| inc[v][e] != 0.0).collect();
            let top = edges.iter().map(|&e| score[v][e]).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = edges.iter().map(|&e| (score[v][e] - top).exp()).sum();
            for &e in &edges {
                out[v][e] = (score[v][e] - top).exp() / z;
            }
        }
    }
    out
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    (a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0)
}

/// Survivors as an n × m 0/1 matrix: similarity ≥ tau, topped up to the
/// `min_keep` most similar members of each hyperedge (ties to lower id).
pub fn hor_keep(inc: &Dense, x: &Dense, y: &Dense, tau: f64, min_keep: usize) -> Dense {
    let (n, m) = (inc.len(), inc[0].len());
    let mut keep = zeros(n, m);
    for e in 0..m {
        let members: Vec<usize> = (0..n).filter(|&v| inc[v][e] != 0.0).collect();
        let sims: Vec<f64> = members.iter().map(|&v| cosine(&x[v], &y[e])).collect();
        let mut kept = 0;
        for (i, &v) in members.iter().enumerate() {
            if sims[i] >= tau {
                keep[v][e] = 1.0;
                kept += 1;
            }
        }
        let floor = min_keep.min(members.len());
        if kept < floor {
            let mut order: Vec<usize> = (0..members.len()).collect();
            order.sort_by(|&a, &b| sims[b].partial_cmp(&sims[a]).unwrap().then(a.cmp(&b)));
            for &i in order.iter().take(floor) {
                keep[members[i]][e] = 1.0;
            }
        }
    }
    keep
}

/// Masks `w` by `keep`; with `renorm_per_edge` / `renorm_per_node` the
/// survivors of each group are rescaled to sum to 1.
pub fn apply_keep(w: &Dense, keep: &Dense, renorm: Option<bool>) -> Dense {
    let (n, m) = (w.len(), w[0].len());
    let mut out = zeros(n, m);
    for v in 0..n {
        for e in 0..m {
            out[v][e] = w[v][e] * keep[v][e];
        }
    }
    match renorm {
        Some(true) => {
            for e in 0..m {
                let s: f64 = (0..n).map(|v| out[v][e]).sum();
                if s > 0.0 {
                    (0..n).for_each(|v| out[v][e] /= s);
                }
            }
        }
        Some(false) => {
            for row in out.iter_mut() {
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter_mut().for_each(|x| *x /= s);
                }
            }
        }
        None => {}
    }
    out
}

/// `act((α · D_E^-½ Wᵀ D_V^-½ X + Y) θ₁)` for incidence weights `w`.
pub fn n2he(inc: &Dense, w: &Dense, x: &Dense, y: &Dense, theta: &Dense, alpha: f64, act: bool) -> Dense {
    let dv = diag(&inv_sqrt(&node_degrees(inc)));
    let de = diag(&inv_sqrt(&edge_degrees(inc)));
    let agg = mul(&mul(&mul(&de, &transpose(w)), &dv), x);
    let out = mul(&add(&scale(&agg, alpha), y), theta);
    if act {
        relu(&out)
    } else {
        out
    }
}

/// `act(D^-½ (HᵀH + I) D^-½ Y θ₂)` with `D` the row sums of `HᵀH + I`.
pub fn he2he(inc: &Dense, y: &Dense, theta: &Dense, act: bool) -> Dense {
    let a = add(&mul(&transpose(inc), inc), &eye(inc[0].len()));
    let d = diag(&inv_sqrt(&a.iter().map(|r| r.iter().sum()).collect::<Vec<f64>>()));
    let out = mul(&mul(&mul(&mul(&d, &a), &d), y), theta);
    if act {
        relu(&out)
    } else {
        out
    }
}

/// `act((β · D_V^-½ W D_E^-½ Y + X) θ₃)` for incidence weights `w`.
pub fn he2n(inc: &Dense, w: &Dense, y: &Dense, x: &Dense, theta: &Dense, beta: f64, act: bool) -> Dense {
    let dv = diag(&inv_sqrt(&node_degrees(inc)));
    let de = diag(&inv_sqrt(&edge_degrees(inc)));
    let agg = mul(&mul(&mul(&dv, w), &de), y);
    let out = mul(&add(&scale(&agg, beta), x), theta);
    if act {
        relu(&out)
    } else {
        out
    }
}

/// `Σ_k c_k T_k(L') Y θ₂` through the expanded polynomials
/// `T_0 = I, T_1 = L, T_2 = 2L² − I, T_3 = 4L³ − 3L`.
pub fn chebyshev(l: &Dense, y: &Dense, coeffs: &[f64], theta: &Dense, act: bool) -> Dense {
    assert!(coeffs.len() <= 4);
    let m = l.len();
    let l2 = mul(l, l);
    let l3 = mul(&l2, l);
    let t = [
        eye(m),
        l.clone(),
        add(&scale(&l2, 2.0), &scale(&eye(m), -1.0)),
        add(&scale(&l3, 4.0), &scale(l, -3.0)),
    ];
    let mut filter = zeros(m, m);
    for (c, tk) in coeffs.iter().zip(&t) {
        filter = add(&filter, &scale(tk, *c));
    }
    let out = mul(&mul(&filter, y), theta);
    if act {
        relu(&out)
    } else {
        out
    }
}

/// `I − D^-½ (HᵀH) D^-½`.
pub fn interaction_laplacian(inc: &Dense) -> Dense {
    let a = mul(&transpose(inc), inc);
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let m = a.len();
    let mut l = eye(m);
    for i in 0..m {
        for j in 0..m {
            l[i][j] -= a[i][j] / (d[i] * d[j]).sqrt();
        }
    }
    l
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let mut a = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// `act(D_V^-½ H D_E^-1 Hᵀ D_V^-½ X θ)`.
pub fn hgnn(inc: &Dense, x: &Dense, theta: &Dense, act: bool) -> Dense {
    let dv = diag(&inv_sqrt(&node_degrees(inc)));
    let de: Vec<f64> = edge_degrees(inc).iter().map(|d| 1.0 / d).collect();
    let op = mul(&mul(&mul(&mul(&dv, inc), &diag(&de)), &transpose(inc)), &dv);
    let out = mul(&mul(&op, x), theta);
    if act {
        relu(&out)
    } else {
        out
    }
}

/// `n` nodes, `m` hyperedges of 1 to `max_size` distinct members; any node
/// left uncovered is added to a random hyperedge.
pub fn random_hypergraph(rng: &mut Rng, n: usize, m: usize, max_size: usize) -> Hypergraph {
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(m);
    for _ in 0..m {
        let size = 1 + rng.below(max_size.min(n));
        let mut nodes: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut nodes);
        edges.push(nodes[..size].to_vec());
    }
    let mut covered = vec![false; n];
    for e in &edges {
        for &v in e {
            covered[v] = true;
        }
    }
    for (v, c) in covered.iter().enumerate() {
        if !c {
            let e = rng.below(m);
            edges[e].push(v);
        }
    }
    Hypergraph::new(n, &edges).unwrap()
}

pub fn random_matrix(rng: &mut Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.uniform_range(-1.0, 1.0))
}
