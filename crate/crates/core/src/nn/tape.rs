//! Reverse-mode differentiation over a recorded forward pass.
//!
//! A [`Tape`] borrows a [`ParamSet`]; parameters enter the graph by index
//! without copying. Every builder method evaluates its node immediately and
//! records enough to run the chain rule backwards in [`Tape::backward`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::kernels::{dot, log_softmax, sigmoid, softmax};
use super::{Array, Grads, ParamSet};
use crate::error::{dim, Error, Result};

/// Handle to a value on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Param(usize),
    Node(usize),
}

#[derive(Debug)]
enum Op {
    Input,
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    OneMinus(Var),
    Slice(Var, usize),
    Concat(Vec<Var>),
    Row(Var, usize),
    Rows(Var, Vec<usize>),
    Conv1d { x: Var, w: Var, b: Var },
    MaxOverTime(Var, Vec<usize>),
    Mask(Var, Vec<f64>),
    Sum(Var),
    Dot(Var, Var),
    SumSquares(Var),
    NegLogSoftmax(Var, usize, Vec<f64>),
    BceWithLogits(Var, f64),
}

#[derive(Debug)]
struct Node {
    value: Array,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array {
        match v {
            Var::Param(i) => self.params.get(i),
            Var::Node(i) => &self.nodes[i].value,
        }
    }

    fn data(&self, v: Var) -> &[f64] {
        self.value(v).data()
    }

    fn push(&mut self, value: Array, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var::Node(self.nodes.len() - 1)
    }

    pub fn param(&self, index: usize) -> Var {
        assert!(index < self.params.len(), "parameter index {index} out of range");
        Var::Param(index)
    }

    pub fn input(&mut self, value: Array) -> Var {
        self.push(value, Op::Input)
    }

    fn same_len(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la == lb {
            Ok(())
        } else {
            Err(dim(format!("{what}: lengths {la} and {lb}")))
        }
    }

    /// `w x` for `w: [m, n]`, `x: [n]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let wv = self.value(w);
        let xv = self.data(x);
        if wv.shape().len() != 2 || wv.shape()[1] != xv.len() {
            return Err(dim(format!("matvec: {:?} times vector of {}", wv.shape(), xv.len())));
        }
        let n = xv.len();
        let out: Vec<f64> = wv.data().chunks_exact(n).map(|row| dot(row, xv)).collect();
        Ok(self.push(Array::vector(out), Op::MatVec(w, x)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "add")?;
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x + y).collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, out)?, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "sub")?;
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x - y).collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, out)?, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "mul")?;
        let out = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x * y).collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, out)?, Op::Mul(a, b)))
    }

    /// `W x + b`.
    pub fn affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let v = self.value(a);
        let shape = v.shape().to_vec();
        let out = v.data().iter().map(|&x| f(x)).collect();
        self.push(Array::from_vec(&shape, out).expect("same shape"), op)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| s * x, Op::Scale(a, s))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, libm::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| x.max(0.0), Op::Relu(a))
    }

    /// `1 - a`.
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.map(a, |x| 1.0 - x, Op::OneMinus(a))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let d = self.data(a);
        if start + len > d.len() {
            return Err(dim(format!("slice {start}..{} of {}", start + len, d.len())));
        }
        let out = d[start..start + len].to_vec();
        Ok(self.push(Array::vector(out), Op::Slice(a, start)))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.data(p));
        }
        self.push(Array::vector(out), Op::Concat(parts.to_vec()))
    }

    /// Row `r` of a `[R, C]` table as a vector.
    pub fn row(&mut self, table: Var, r: usize) -> Result<Var> {
        let t = self.value(table);
        if r >= t.rows() {
            return Err(dim(format!("row {r} of table with {} rows", t.rows())));
        }
        let out = t.row(r).to_vec();
        Ok(self.push(Array::vector(out), Op::Row(table, r)))
    }

    /// Gathers the listed rows of a `[R, C]` table into `[n, C]`.
    pub fn rows(&mut self, table: Var, rows: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let c = t.row_len();
        let mut out = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            if r >= t.rows() {
                return Err(dim(format!("row {r} of table with {} rows", t.rows())));
            }
            out.extend_from_slice(t.row(r));
        }
        Ok(self.push(Array::from_vec(&[rows.len(), c], out)?, Op::Rows(table, rows.to_vec())))
    }

    /// Valid convolution of `x: [T, E]` with `w: [F, k, E]` plus `b: [F]`,
    /// giving `[T - k + 1, F]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws) = (self.value(x).shape(), self.value(w).shape());
        if xs.len() != 2 || ws.len() != 3 || ws[2] != xs[1] || self.value(b).shape() != [ws[0]] {
            return Err(dim(format!("conv1d: input {xs:?}, filters {ws:?}")));
        }
        let (t, e, f, k) = (xs[0], xs[1], ws[0], ws[1]);
        if k == 0 || t < k {
            return Err(dim(format!("sequence length {t} shorter than filter width {k}")));
        }
        let p = t - k + 1;
        let (xd, wd, bd) = (self.data(x), self.data(w), self.data(b));
        let mut out = vec![0.0; p * f];
        for pos in 0..p {
            let window = &xd[pos * e..(pos + k) * e];
            for j in 0..f {
                out[pos * f + j] = bd[j] + dot(&wd[j * k * e..(j + 1) * k * e], window);
            }
        }
        Ok(self.push(Array::from_vec(&[p, f], out)?, Op::Conv1d { x, w, b }))
    }

    /// Column-wise maximum of a `[P, F]` array.
    pub fn max_over_time(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.shape().len() != 2 || v.shape()[0] == 0 {
            return Err(dim(format!("max over time needs [P, F], got {:?}", v.shape())));
        }
        let (p, f) = (v.shape()[0], v.shape()[1]);
        let d = v.data();
        let mut arg = vec![0usize; f];
        let mut out = vec![f64::NEG_INFINITY; f];
        for pos in 0..p {
            for j in 0..f {
                if d[pos * f + j] > out[j] {
                    out[j] = d[pos * f + j];
                    arg[j] = pos;
                }
            }
        }
        Ok(self.push(Array::vector(out), Op::MaxOverTime(a, arg)))
    }

    /// Elementwise product with a constant mask (dropout).
    pub fn mask(&mut self, a: Var, mask: &[f64]) -> Result<Var> {
        if self.value(a).len() != mask.len() {
            return Err(dim("mask length"));
        }
        let out = self.data(a).iter().zip(mask).map(|(x, m)| x * m).collect();
        Ok(self.push(Array::vector(out), Op::Mask(a, mask.to_vec())))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.push(Array::scalar(s), Op::Sum(a))
    }

    /// Sum of a list of scalars (or equal-length vectors) as one node chain.
    pub fn sum_all(&mut self, vars: &[Var]) -> Result<Var> {
        let (&first, rest) = vars.split_first().ok_or_else(|| dim("sum of nothing"))?;
        let mut acc = first;
        for &v in rest {
            acc = self.add(acc, v)?;
        }
        Ok(acc)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "dot")?;
        let s = dot(self.data(a), self.data(b));
        Ok(self.push(Array::scalar(s), Op::Dot(a, b)))
    }

    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s = self.value(a).sum_squares();
        self.push(Array::scalar(s), Op::SumSquares(a))
    }

    /// `-log softmax(logits)[target]`.
    pub fn neg_log_softmax(&mut self, logits: Var, target: usize) -> Result<Var> {
        let z = self.data(logits);
        if target >= z.len() {
            return Err(dim(format!("target {target} of {} logits", z.len())));
        }
        let loss = -log_softmax(z)[target];
        let probs = softmax(z);
        Ok(self.push(Array::scalar(loss), Op::NegLogSoftmax(logits, target, probs)))
    }

    /// Binary cross-entropy of `sigmoid(logit)` against `target`.
    pub fn bce_with_logits(&mut self, logit: Var, target: f64) -> Result<Var> {
        let z = self.data(logit);
        if z.len() != 1 {
            return Err(dim("bce expects a scalar logit"));
        }
        let z = z[0];
        let loss = z.max(0.0) - z * target + libm::log1p(libm::exp(-libm::fabs(z)));
        Ok(self.push(Array::scalar(loss), Op::BceWithLogits(logit, target)))
    }

    /// One LSTM update; gate blocks ordered input, forget, output, candidate.
    pub fn lstm_step(&mut self, w_x: Var, w_h: Var, bias: Var, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let hd = self.value(h).len();
        let zx = self.matvec(w_x, x)?;
        let zh = self.matvec(w_h, h)?;
        let z = self.add(zx, zh)?;
        let z = self.add(z, bias)?;
        let zi = self.slice(z, 0, hd)?;
        let zf = self.slice(z, hd, hd)?;
        let zo = self.slice(z, 2 * hd, hd)?;
        let zg = self.slice(z, 3 * hd, hd)?;
        let i = self.sigmoid(zi);
        let f = self.sigmoid(zf);
        let o = self.sigmoid(zo);
        let g = self.tanh(zg);
        let fc = self.mul(f, c)?;
        let ig = self.mul(i, g)?;
        let c2 = self.add(fc, ig)?;
        let tc = self.tanh(c2);
        let h2 = self.mul(o, tc)?;
        Ok((h2, c2))
    }

    /// Gradients of the scalar `loss` with respect to every parameter.
    pub fn backward(&self, loss: Var) -> Result<Grads> {
        let li = match loss {
            Var::Node(i) if i < self.nodes.len() => i,
            _ => return Err(Error::Usage("backward called before a forward pass produced the loss".into())),
        };
        if self.nodes[li].value.len() != 1 {
            return Err(Error::Usage("backward needs a scalar loss".into()));
        }
        let mut grads = Grads::zeros_like(self.params);
        let mut g: Vec<Option<Vec<f64>>> = Vec::new();
        g.resize_with(li + 1, || None);
        g[li] = Some(vec![1.0]);

        for i in (0..=li).rev() {
            let Some(gi) = g[i].take() else { continue };
            let node = &self.nodes[i];
            let y = node.value.data();
            let mut acc = Acc { tape: self, g: &mut g, grads: &mut grads };
            match &node.op {
                Op::Input => {}
                Op::MatVec(w, x) => {
                    let wv = self.value(*w).data();
                    let xv = self.data(*x);
                    let n = xv.len();
                    acc.with(*w, |dw| {
                        for (r, &gr) in gi.iter().enumerate() {
                            if gr != 0.0 {
                                for (d, &xj) in dw[r * n..(r + 1) * n].iter_mut().zip(xv) {
                                    *d += gr * xj;
                                }
                            }
                        }
                    });
                    acc.with(*x, |dx| {
                        for (r, &gr) in gi.iter().enumerate() {
                            if gr != 0.0 {
                                for (d, &wij) in dx.iter_mut().zip(&wv[r * n..(r + 1) * n]) {
                                    *d += gr * wij;
                                }
                            }
                        }
                    });
                }
                Op::Add(a, b) => {
                    acc.with(*a, |d| axpy(d, &gi, 1.0));
                    acc.with(*b, |d| axpy(d, &gi, 1.0));
                }
                Op::Sub(a, b) => {
                    acc.with(*a, |d| axpy(d, &gi, 1.0));
                    acc.with(*b, |d| axpy(d, &gi, -1.0));
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.data(*a), self.data(*b));
                    acc.with(*a, |d| {
                        for k in 0..d.len() {
                            d[k] += gi[k] * bv[k];
                        }
                    });
                    acc.with(*b, |d| {
                        for k in 0..d.len() {
                            d[k] += gi[k] * av[k];
                        }
                    });
                }
                Op::Scale(a, s) => acc.with(*a, |d| axpy(d, &gi, *s)),
                Op::Sigmoid(a) => acc.with(*a, |d| {
                    for k in 0..d.len() {
                        d[k] += gi[k] * y[k] * (1.0 - y[k]);
                    }
                }),
                Op::Tanh(a) => acc.with(*a, |d| {
                    for k in 0..d.len() {
                        d[k] += gi[k] * (1.0 - y[k] * y[k]);
                    }
                }),
                Op::Relu(a) => {
                    let av = self.data(*a);
                    acc.with(*a, |d| {
                        for k in 0..d.len() {
                            if av[k] > 0.0 {
                                d[k] += gi[k];
                            }
                        }
                    })
                }
                Op::OneMinus(a) => acc.with(*a, |d| axpy(d, &gi, -1.0)),
                Op::Slice(a, start) => acc.with(*a, |d| axpy(&mut d[*start..*start + gi.len()], &gi, 1.0)),
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        acc.with(p, |d| axpy(d, &gi[off..off + n], 1.0));
                        off += n;
                    }
                }
                Op::Row(t, r) => {
                    let c = gi.len();
                    acc.with(*t, |d| axpy(&mut d[r * c..(r + 1) * c], &gi, 1.0));
                }
                Op::Rows(t, rows) => {
                    let c = self.value(*t).row_len();
                    acc.with(*t, |d| {
                        for (k, &r) in rows.iter().enumerate() {
                            axpy(&mut d[r * c..(r + 1) * c], &gi[k * c..(k + 1) * c], 1.0);
                        }
                    });
                }
                Op::Conv1d { x, w, b } => {
                    let ws = self.value(*w).shape();
                    let (f, k, e) = (ws[0], ws[1], ws[2]);
                    let p = gi.len() / f;
                    let (xd, wd) = (self.data(*x), self.data(*w));
                    acc.with(*b, |db| {
                        for pos in 0..p {
                            axpy(db, &gi[pos * f..(pos + 1) * f], 1.0);
                        }
                    });
                    acc.with(*w, |dw| {
                        for pos in 0..p {
                            let window = &xd[pos * e..(pos + k) * e];
                            for j in 0..f {
                                let gj = gi[pos * f + j];
                                if gj != 0.0 {
                                    axpy(&mut dw[j * k * e..(j + 1) * k * e], window, gj);
                                }
                            }
                        }
                    });
                    acc.with(*x, |dx| {
                        for pos in 0..p {
                            for j in 0..f {
                                let gj = gi[pos * f + j];
                                if gj != 0.0 {
                                    axpy(&mut dx[pos * e..(pos + k) * e], &wd[j * k * e..(j + 1) * k * e], gj);
                                }
                            }
                        }
                    });
                }
                Op::MaxOverTime(a, arg) => {
                    let f = arg.len();
                    acc.with(*a, |d| {
                        for (j, &pos) in arg.iter().enumerate() {
                            d[pos * f + j] += gi[j];
                        }
                    });
                }
                Op::Mask(a, m) => acc.with(*a, |d| {
                    for k in 0..d.len() {
                        d[k] += gi[k] * m[k];
                    }
                }),
                Op::Sum(a) => acc.with(*a, |d| d.iter_mut().for_each(|x| *x += gi[0])),
                Op::Dot(a, b) => {
                    let (av, bv) = (self.data(*a), self.data(*b));
                    acc.with(*a, |d| axpy(d, bv, gi[0]));
                    acc.with(*b, |d| axpy(d, av, gi[0]));
                }
                Op::SumSquares(a) => {
                    let av = self.data(*a);
                    acc.with(*a, |d| axpy(d, av, 2.0 * gi[0]));
                }
                Op::NegLogSoftmax(z, target, probs) => acc.with(*z, |d| {
                    for k in 0..d.len() {
                        let onehot = if k == *target { 1.0 } else { 0.0 };
                        d[k] += gi[0] * (probs[k] - onehot);
                    }
                }),
                Op::BceWithLogits(z, target) => {
                    let zv = self.data(*z)[0];
                    acc.with(*z, |d| d[0] += gi[0] * (sigmoid(zv) - target));
                }
            }
        }
        Ok(grads)
    }
}

fn axpy(dst: &mut [f64], src: &[f64], a: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

struct Acc<'a, 'p> {
    tape: &'a Tape<'p>,
    g: &'a mut Vec<Option<Vec<f64>>>,
    grads: &'a mut Grads,
}

impl Acc<'_, '_> {
    fn with(&mut self, v: Var, f: impl FnOnce(&mut [f64])) {
        match v {
            Var::Param(i) => f(self.grads.get_mut(i).data_mut()),
            Var::Node(i) => {
                let n = self.tape.nodes[i].value.len();
                f(self.g[i].get_or_insert_with(|| vec![0.0; n]))
            }
        }
    }
}
