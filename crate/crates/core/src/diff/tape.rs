use std::cell::RefCell;
use std::rc::Rc;

use crate::matrix::dot;
use crate::{Error, Matrix, Result, Rng, SparseMatrix};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Constant sparse product plan: `out[dst] += coef * w[p] * x[src]` for the
/// `p`-th entry, where `w` is a differentiable weight vector.
#[derive(Clone, Debug)]
pub struct ScatterPlan {
    pub out_rows: usize,
    pub in_rows: usize,
    pub entries: Vec<ScatterEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterEntry {
    pub dst: usize,
    pub src: usize,
    pub coef: f64,
}

#[derive(Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRowBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Dropout(Var, Rc<Vec<f64>>),
    RowL2Norms(Var),
    Sum(Var),
    Sparse(Rc<SparseMatrix>, Var),
    PairLogits(Var, Var, Rc<Vec<(usize, usize)>>),
    MaskedSoftmax(Var, Rc<Vec<Vec<usize>>>),
    MaskRenorm {
        input: Var,
        mask: Rc<Vec<bool>>,
        groups: Rc<Vec<Vec<usize>>>,
        renormalize: bool,
    },
    WeightedScatter(Var, Var, Rc<ScatterPlan>),
    WeightedSum(Rc<Vec<Var>>, Var),
    CrossEntropy {
        logits: Var,
        labels: Rc<Vec<usize>>,
        rows: Rc<Vec<usize>>,
        probs: Rc<Matrix>,
    },
}

struct Node {
    value: Rc<Matrix>,
    grad: Option<Matrix>,
    op: Op,
    requires_grad: bool,
}

/// Records a computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, which is a topological order, so
/// [`Tape::backward`] simply walks the node list from the loss downwards.
/// Gradients accumulate (`+=`), because one value may feed several products.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn leaf(&self, value: Matrix, requires_grad: bool) -> Var {
        self.push(Rc::new(value), Op::Leaf, requires_grad)
    }

    pub fn constant(&self, value: Matrix) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&self, value: Matrix) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> Rc<Matrix> {
        Rc::clone(&self.nodes.borrow()[v.0].value)
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes.borrow()[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes.borrow()[v.0].requires_grad
    }

    /// Accumulated gradient, zeros if nothing has flowed into `v` yet.
    pub fn grad(&self, v: Var) -> Matrix {
        let nodes = self.nodes.borrow();
        let node = &nodes[v.0];
        node.grad
            .clone()
            .unwrap_or_else(|| Matrix::zeros(node.value.rows(), node.value.cols()))
    }

    pub fn zero_grad(&self) {
        for node in self.nodes.borrow_mut().iter_mut() {
            node.grad = None;
        }
    }

    fn push(&self, value: Rc<Matrix>, op: Op, requires_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            grad: None,
            op,
            requires_grad,
        });
        Var(nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        let nodes = self.nodes.borrow();
        vars.iter().any(|v| nodes[v.0].requires_grad)
    }

    fn record(&self, value: Matrix, op: Op, inputs: &[Var]) -> Var {
        let rg = self.any_grad(inputs);
        self.push(Rc::new(value), op, rg)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(&self.value(b))?;
        Ok(self.record(out, Op::MatMul(a, b), &[a, b]))
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(&self.value(b))?;
        Ok(self.record(out, Op::Add(a, b), &[a, b]))
    }

    /// Adds a `1 × c` row vector to every row of `a`.
    pub fn add_row_bias(&self, a: Var, bias: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(Error::Shape {
                op: "add_row_bias",
                left: av.shape(),
                right: bv.shape(),
            });
        }
        let mut out = (*av).clone();
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(bv.as_slice()) {
                *o += b;
            }
        }
        Ok(self.record(out, Op::AddRowBias(a, bias), &[a, bias]))
    }

    /// Elementwise product.
    pub fn mul(&self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::Shape {
                op: "mul",
                left: av.shape(),
                right: bv.shape(),
            });
        }
        let out = av.zip_map(&bv, |x, y| x * y);
        Ok(self.record(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&self, a: Var, c: f64) -> Var {
        let out = self.value(a).scale(c);
        self.record(out, Op::Scale(a, c), &[a])
    }

    pub fn relu(&self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.max(0.0));
        self.record(out, Op::Relu(a), &[a])
    }

    /// Inverted dropout: kept entries are scaled by `1 / (1 - p)`. Passing no
    /// generator means evaluation mode, where this is the identity.
    pub fn dropout(&self, a: Var, p: f64, rng: Option<&mut Rng>) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::config(format!("dropout rate {p} outside [0, 1)")));
        }
        let Some(rng) = rng else { return Ok(a) };
        if p == 0.0 {
            return Ok(a);
        }
        let av = self.value(a);
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..av.len())
            .map(|_| if rng.uniform() < p { 0.0 } else { keep })
            .collect();
        let data = av.as_slice().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let out = Matrix::from_vec(av.rows(), av.cols(), data)?;
        Ok(self.record(out, Op::Dropout(a, Rc::new(mask)), &[a]))
    }

    /// Euclidean norm of each row, as an `n × 1` column.
    pub fn row_l2_norms(&self, a: Var) -> Var {
        let av = self.value(a);
        let out = Matrix::from_fn(av.rows(), 1, |i, _| dot(av.row(i), av.row(i)).sqrt());
        self.record(out, Op::RowL2Norms(a), &[a])
    }

    pub fn sum(&self, a: Var) -> Var {
        let out = Matrix::filled(1, 1, self.value(a).sum());
        self.record(out, Op::Sum(a), &[a])
    }

    /// `s · v` for a constant sparse `s`.
    pub fn sparse_matmul(&self, s: Rc<SparseMatrix>, v: Var) -> Result<Var> {
        let out = s.mul_dense(&self.value(v))?;
        Ok(self.record(out, Op::Sparse(s, v), &[v]))
    }

    /// Bilinear logits `q[a] · k[b]` for each pair `(a, b)`, as a column.
    pub fn pair_logits(&self, q: Var, k: Var, pairs: Rc<Vec<(usize, usize)>>) -> Result<Var> {
        let (qv, kv) = (self.value(q), self.value(k));
        if qv.cols() != kv.cols() {
            return Err(Error::Shape {
                op: "pair_logits",
                left: qv.shape(),
                right: kv.shape(),
            });
        }
        if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= qv.rows() || b >= kv.rows()) {
            return Err(Error::Shape {
                op: "pair_logits index",
                left: (qv.rows(), kv.rows()),
                right: (a, b),
            });
        }
        let out = Matrix::from_fn(pairs.len(), 1, |p, _| {
            let (a, b) = pairs[p];
            dot(qv.row(a), kv.row(b))
        });
        Ok(self.record(out, Op::PairLogits(q, k, pairs), &[q, k]))
    }

    /// Softmax within each group of flat positions; positions outside every
    /// group come out as exactly zero.
    pub fn masked_softmax(&self, logits: Var, groups: Rc<Vec<Vec<usize>>>) -> Result<Var> {
        let lv = self.value(logits);
        let flat = lv.as_slice();
        let mut out = Matrix::zeros(lv.rows(), lv.cols());
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::EmptyGroup(g));
            }
            if let Some(&p) = group.iter().find(|&&p| p >= flat.len()) {
                return Err(Error::Shape {
                    op: "masked_softmax position",
                    left: lv.shape(),
                    right: (p, 0),
                });
            }
            let max = group.iter().map(|&p| flat[p]).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = group.iter().map(|&p| (flat[p] - max).exp()).sum();
            let o = out.as_mut_slice();
            for &p in group {
                o[p] = (flat[p] - max).exp() / total;
            }
        }
        Ok(self.record(out, Op::MaskedSoftmax(logits, groups), &[logits]))
    }

    /// Zeroes masked-out positions and, when `renormalize` is set, divides the
    /// survivors of each group by their sum (skipped for sums below 1e-12).
    /// The mask itself is a constant.
    pub fn mask_renormalize(
        &self,
        input: Var,
        mask: Rc<Vec<bool>>,
        groups: Rc<Vec<Vec<usize>>>,
        renormalize: bool,
    ) -> Result<Var> {
        let iv = self.value(input);
        if mask.len() != iv.len() {
            return Err(Error::Shape {
                op: "mask_renormalize",
                left: iv.shape(),
                right: (mask.len(), 1),
            });
        }
        let mut out = iv.zip_map(
            &Matrix::from_fn(iv.rows(), iv.cols(), |i, j| {
                f64::from(u8::from(mask[i * iv.cols() + j]))
            }),
            |x, m| x * m,
        );
        if renormalize {
            let o = out.as_mut_slice();
            for group in groups.iter() {
                let s: f64 = group.iter().map(|&p| o[p]).sum();
                if s.abs() >= 1e-12 {
                    for &p in group {
                        o[p] /= s;
                    }
                }
            }
        }
        let op = Op::MaskRenorm {
            input,
            mask,
            groups,
            renormalize,
        };
        Ok(self.record(out, op, &[input]))
    }

    /// Sparse product with differentiable entry weights; see [`ScatterPlan`].
    pub fn weighted_scatter(&self, weights: Var, x: Var, plan: Rc<ScatterPlan>) -> Result<Var> {
        let (wv, xv) = (self.value(weights), self.value(x));
        if wv.len() != plan.entries.len() || wv.cols() != 1 {
            return Err(Error::Shape {
                op: "weighted_scatter weights",
                left: wv.shape(),
                right: (plan.entries.len(), 1),
            });
        }
        if xv.rows() != plan.in_rows {
            return Err(Error::Shape {
                op: "weighted_scatter input",
                left: xv.shape(),
                right: (plan.in_rows, xv.cols()),
            });
        }
        let mut out = Matrix::zeros(plan.out_rows, xv.cols());
        for (e, &w) in plan.entries.iter().zip(wv.as_slice()) {
            let c = e.coef * w;
            if c == 0.0 {
                continue;
            }
            let src = xv.row(e.src);
            for (o, &s) in out.row_mut(e.dst).iter_mut().zip(src) {
                *o += c * s;
            }
        }
        Ok(self.record(out, Op::WeightedScatter(weights, x, plan), &[weights, x]))
    }

    /// `Σ coeffs[i] · terms[i]` with a learnable `1 × K` coefficient row.
    pub fn weighted_sum(&self, terms: &[Var], coeffs: Var) -> Result<Var> {
        let cv = self.value(coeffs);
        if terms.is_empty() || cv.rows() != 1 || cv.cols() != terms.len() {
            return Err(Error::Shape {
                op: "weighted_sum",
                left: cv.shape(),
                right: (1, terms.len()),
            });
        }
        let first = self.value(terms[0]);
        let mut out = Matrix::zeros(first.rows(), first.cols());
        for (&t, &c) in terms.iter().zip(cv.as_slice()) {
            let tv = self.value(t);
            if tv.shape() != out.shape() {
                return Err(Error::Shape {
                    op: "weighted_sum term",
                    left: out.shape(),
                    right: tv.shape(),
                });
            }
            out.add_assign(&tv.scale(c));
        }
        let mut inputs = terms.to_vec();
        inputs.push(coeffs);
        Ok(self.record(out, Op::WeightedSum(Rc::new(terms.to_vec()), coeffs), &inputs))
    }

    /// Mean over `rows` of `-log softmax(logits[row])[labels[row]]`.
    pub fn cross_entropy(&self, logits: Var, labels: &[usize], rows: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        if labels.len() != lv.rows() {
            return Err(Error::Shape {
                op: "cross_entropy labels",
                left: lv.shape(),
                right: (labels.len(), 1),
            });
        }
        if rows.is_empty() {
            return Err(Error::config("cross_entropy needs at least one row"));
        }
        let classes = lv.cols();
        let mut probs = Matrix::zeros(lv.rows(), classes);
        let mut total = 0.0;
        for &r in rows {
            let label = labels[r];
            if label >= classes {
                return Err(Error::LabelOutOfRange { row: r, label, classes });
            }
            let row = lv.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
            total += lse - row[label];
            for (p, &z) in probs.row_mut(r).iter_mut().zip(row) {
                *p = (z - lse).exp();
            }
        }
        let out = Matrix::filled(1, 1, total / rows.len() as f64);
        let op = Op::CrossEntropy {
            logits,
            labels: Rc::new(labels.to_vec()),
            rows: Rc::new(rows.to_vec()),
            probs: Rc::new(probs),
        };
        Ok(self.record(out, op, &[logits]))
    }

    /// Back-propagates from a scalar `loss`, accumulating into every
    /// ancestor that requires a gradient.
    pub fn backward(&self, loss: Var) -> Result<()> {
        let (r, c) = self.shape(loss);
        if (r, c) != (1, 1) {
            return Err(Error::NonScalar(r, c));
        }
        {
            let mut nodes = self.nodes.borrow_mut();
            let g = nodes[loss.0].grad.get_or_insert_with(|| Matrix::zeros(1, 1));
            g[(0, 0)] += 1.0;
        }
        for id in (0..=loss.0).rev() {
            let (op, value, grad) = {
                let nodes = self.nodes.borrow();
                let node = &nodes[id];
                if !node.requires_grad {
                    continue;
                }
                let Some(grad) = node.grad.as_ref() else { continue };
                if matches!(node.op, Op::Leaf) {
                    continue;
                }
                (node.op.clone(), Rc::clone(&node.value), grad.clone())
            };
            for (parent, contribution) in self.local_grads(&op, &value, &grad)? {
                self.accumulate(parent, contribution);
            }
        }
        Ok(())
    }

    fn accumulate(&self, v: Var, g: Matrix) {
        let mut nodes = self.nodes.borrow_mut();
        let node = &mut nodes[v.0];
        if !node.requires_grad {
            return;
        }
        match node.grad.as_mut() {
            Some(existing) => existing.add_assign(&g),
            None => node.grad = Some(g),
        }
    }

    fn local_grads(&self, op: &Op, out: &Matrix, g: &Matrix) -> Result<Vec<(Var, Matrix)>> {
        Ok(match op {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                vec![(*a, g.matmul_t(&bv)?), (*b, av.t_matmul(g)?)]
            }
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::AddRowBias(a, bias) => {
                let mut gb = Matrix::zeros(1, g.cols());
                for i in 0..g.rows() {
                    for (s, &x) in gb.as_mut_slice().iter_mut().zip(g.row(i)) {
                        *s += x;
                    }
                }
                vec![(*a, g.clone()), (*bias, gb)]
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                vec![(*a, g.zip_map(&bv, |x, y| x * y)), (*b, g.zip_map(&av, |x, y| x * y))]
            }
            Op::Scale(a, c) => vec![(*a, g.scale(*c))],
            Op::Relu(a) => {
                let av = self.value(*a);
                vec![(*a, g.zip_map(&av, |gx, x| if x > 0.0 { gx } else { 0.0 }))]
            }
            Op::Dropout(a, mask) => {
                let data = g.as_slice().iter().zip(mask.iter()).map(|(x, m)| x * m).collect();
                vec![(*a, Matrix::from_vec(g.rows(), g.cols(), data)?)]
            }
            Op::RowL2Norms(a) => {
                let av = self.value(*a);
                let mut ga = Matrix::zeros(av.rows(), av.cols());
                for i in 0..av.rows() {
                    let norm = out[(i, 0)];
                    if norm > 0.0 {
                        let s = g[(i, 0)] / norm;
                        for (d, &x) in ga.row_mut(i).iter_mut().zip(av.row(i)) {
                            *d = s * x;
                        }
                    }
                }
                vec![(*a, ga)]
            }
            Op::Sum(a) => {
                let (r, c) = self.shape(*a);
                vec![(*a, Matrix::filled(r, c, g[(0, 0)]))]
            }
            Op::Sparse(s, v) => vec![(*v, s.t_mul_dense(g)?)],
            Op::PairLogits(q, k, pairs) => {
                let (qv, kv) = (self.value(*q), self.value(*k));
                let mut gq = Matrix::zeros(qv.rows(), qv.cols());
                let mut gk = Matrix::zeros(kv.rows(), kv.cols());
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let gp = g[(p, 0)];
                    if gp == 0.0 {
                        continue;
                    }
                    for (d, &x) in gq.row_mut(a).iter_mut().zip(kv.row(b)) {
                        *d += gp * x;
                    }
                    for (d, &x) in gk.row_mut(b).iter_mut().zip(qv.row(a)) {
                        *d += gp * x;
                    }
                }
                vec![(*q, gq), (*k, gk)]
            }
            Op::MaskedSoftmax(logits, groups) => {
                let (gs, os) = (g.as_slice(), out.as_slice());
                let mut gl = Matrix::zeros(out.rows(), out.cols());
                let d = gl.as_mut_slice();
                for group in groups.iter() {
                    let inner: f64 = group.iter().map(|&p| gs[p] * os[p]).sum();
                    for &p in group {
                        d[p] += os[p] * (gs[p] - inner);
                    }
                }
                vec![(*logits, gl)]
            }
            Op::MaskRenorm {
                input,
                mask,
                groups,
                renormalize,
            } => {
                let iv = self.value(*input);
                let (gs, os, is) = (g.as_slice(), out.as_slice(), iv.as_slice());
                let mut gi = Matrix::zeros(iv.rows(), iv.cols());
                let d = gi.as_mut_slice();
                for p in 0..d.len() {
                    if mask[p] {
                        d[p] = gs[p];
                    }
                }
                if *renormalize {
                    for group in groups.iter() {
                        let s: f64 = group.iter().filter(|&&p| mask[p]).map(|&p| is[p]).sum();
                        if s.abs() < 1e-12 {
                            continue;
                        }
                        let inner: f64 = group.iter().map(|&p| gs[p] * os[p]).sum();
                        for &p in group {
                            if mask[p] {
                                d[p] = (gs[p] - inner) / s;
                            }
                        }
                    }
                }
                vec![(*input, gi)]
            }
            Op::WeightedScatter(weights, x, plan) => {
                let (wv, xv) = (self.value(*weights), self.value(*x));
                let mut gw = Matrix::zeros(wv.rows(), 1);
                let mut gx = Matrix::zeros(xv.rows(), xv.cols());
                for (p, e) in plan.entries.iter().enumerate() {
                    let go = g.row(e.dst);
                    gw.as_mut_slice()[p] = e.coef * dot(go, xv.row(e.src));
                    let c = e.coef * wv.as_slice()[p];
                    if c != 0.0 {
                        for (d, &x) in gx.row_mut(e.src).iter_mut().zip(go) {
                            *d += c * x;
                        }
                    }
                }
                vec![(*weights, gw), (*x, gx)]
            }
            Op::WeightedSum(terms, coeffs) => {
                let cv = self.value(*coeffs);
                let mut gc = Matrix::zeros(1, terms.len());
                let mut grads = Vec::with_capacity(terms.len() + 1);
                for (i, &t) in terms.iter().enumerate() {
                    let tv = self.value(t);
                    gc.as_mut_slice()[i] = dot(g.as_slice(), tv.as_slice());
                    grads.push((t, g.scale(cv.as_slice()[i])));
                }
                grads.push((*coeffs, gc));
                grads
            }
            Op::CrossEntropy {
                logits,
                labels,
                rows,
                probs,
            } => {
                let scale = g[(0, 0)] / rows.len() as f64;
                let mut gl = Matrix::zeros(probs.rows(), probs.cols());
                for &r in rows.iter() {
                    for (d, &p) in gl.row_mut(r).iter_mut().zip(probs.row(r)) {
                        *d += scale * p;
                    }
                    gl[(r, labels[r])] -= scale;
                }
                vec![(*logits, gl)]
            }
        })
    }
}
