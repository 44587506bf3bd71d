//! Direct (tape-free) forward kernels used for sampling and scoring.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Array, Grads, ParamSet};
use crate::error::{dim, param, Result};
use crate::rng::{uniform, RngCore};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|x| libm::exp(x - m)).collect();
    let s: f64 = out.iter().sum();
    for x in &mut out {
        *x /= s;
    }
    out
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + libm::log(z.iter().map(|x| libm::exp(x - m)).sum::<f64>());
    z.iter().map(|x| x - lse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
        }
    }
}

/// LSTM cell weights. Gate blocks are stacked in the order input, forget,
/// output, candidate: `w_x` is `[4H, E]`, `w_h` is `[4H, H]`, `bias` is `[4H]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    pub w_x: &'a Array,
    pub w_h: &'a Array,
    pub bias: &'a Array,
}

impl<'a> LstmWeights<'a> {
    pub fn hidden(&self) -> usize {
        self.w_h.shape().get(1).copied().unwrap_or(0)
    }

    fn check(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<()> {
        let hd = self.hidden();
        let ok = self.w_x.shape().len() == 2
            && self.w_h.shape() == [4 * hd, hd]
            && self.w_x.shape()[0] == 4 * hd
            && self.bias.shape() == [4 * hd]
            && self.w_x.shape()[1] == x.len()
            && h.len() == hd
            && c.len() == hd;
        if ok {
            Ok(())
        } else {
            Err(dim(format!(
                "lstm step: w_x {:?}, w_h {:?}, bias {:?}, x {}, h {}, c {}",
                self.w_x.shape(),
                self.w_h.shape(),
                self.bias.shape(),
                x.len(),
                h.len(),
                c.len()
            )))
        }
    }

    /// One recurrent update; returns `(hidden', cell')`.
    pub fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(x, h, c)?;
        let mut h2 = vec![0.0; h.len()];
        let mut c2 = vec![0.0; c.len()];
        self.step_into(x, h, c, &mut h2, &mut c2);
        Ok((h2, c2))
    }

    /// `bias + w_x x` for every gate row; depends on the input alone, so
    /// callers with a small input alphabet can tabulate it.
    pub(crate) fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let e = x.len();
        let wx = self.w_x.data();
        for (r, (o, b)) in out.iter_mut().zip(self.bias.data()).enumerate() {
            *o = b + dot(&wx[r * e..(r + 1) * e], x);
        }
    }

    /// [`Self::step_into`] from a tabulated input projection. Bitwise equal
    /// to it: the sums associate the same way.
    pub(crate) fn step_projected(&self, zx: &[f64], h: &[f64], c: &[f64], h_out: &mut [f64], c_out: &mut [f64]) {
        let hd = h.len();
        let wh = self.w_h.data();
        let mut z = [0.0f64; 4];
        for j in 0..hd {
            for (g, zg) in z.iter_mut().enumerate() {
                let r = g * hd + j;
                *zg = zx[r] + dot(&wh[r * hd..(r + 1) * hd], h);
            }
            let i = sigmoid(z[0]);
            let f = sigmoid(z[1]);
            let o = sigmoid(z[2]);
            let g = libm::tanh(z[3]);
            let cj = f * c[j] + i * g;
            c_out[j] = cj;
            h_out[j] = o * libm::tanh(cj);
        }
    }

    /// Unchecked hot-path variant writing into caller buffers.
    pub(crate) fn step_into(&self, x: &[f64], h: &[f64], c: &[f64], h_out: &mut [f64], c_out: &mut [f64]) {
        let hd = h.len();
        let e = x.len();
        let wx = self.w_x.data();
        let wh = self.w_h.data();
        let b = self.bias.data();
        let mut z = [0.0f64; 4];
        for j in 0..hd {
            for (g, zg) in z.iter_mut().enumerate() {
                let r = g * hd + j;
                *zg = b[r] + dot(&wx[r * e..(r + 1) * e], x) + dot(&wh[r * hd..(r + 1) * hd], h);
            }
            let i = sigmoid(z[0]);
            let f = sigmoid(z[1]);
            let o = sigmoid(z[2]);
            let g = libm::tanh(z[3]);
            let cj = f * c[j] + i * g;
            c_out[j] = cj;
            h_out[j] = o * libm::tanh(cj);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler keep independent add chains.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// One bank of same-width convolution filters: `weight` is `[F, width, E]`,
/// `bias` is `[F]`.
#[derive(Debug, Clone, Copy)]
pub struct ConvBank<'a> {
    pub weight: &'a Array,
    pub bias: &'a Array,
}

impl ConvBank<'_> {
    pub fn width(&self) -> usize {
        self.weight.shape().get(1).copied().unwrap_or(0)
    }

    pub fn filters(&self) -> usize {
        self.weight.rows()
    }
}

/// Valid 1-D convolution over time, activation, then max over time, for
/// every filter of every bank. `embeddings` is `[T, E]`; the result holds
/// one value per filter, banks concatenated in order.
pub fn conv_maxpool(banks: &[ConvBank<'_>], embeddings: &Array, act: Activation) -> Result<Vec<f64>> {
    if embeddings.shape().len() != 2 {
        return Err(dim("embeddings must be [T, E]"));
    }
    let (t, e) = (embeddings.shape()[0], embeddings.shape()[1]);
    let mut out = Vec::new();
    for bank in banks {
        let w = bank.width();
        let f = bank.filters();
        if bank.weight.shape() != [f, w, e] || bank.bias.shape() != [f] {
            return Err(dim(format!("filter bank {:?} does not fit embedding width {e}", bank.weight.shape())));
        }
        if w == 0 || t < w {
            return Err(dim(format!("sequence length {t} shorter than filter width {w}")));
        }
        let x = embeddings.data();
        for k in 0..f {
            let filt = bank.weight.row(k);
            let mut best = f64::NEG_INFINITY;
            for p in 0..=t - w {
                let s = bank.bias.data()[k] + dot(filt, &x[p * e..(p + w) * e]);
                best = best.max(act.apply(s));
            }
            out.push(best);
        }
    }
    Ok(out)
}

/// Inverted-dropout mask: each entry is `1/keep` with probability `keep`,
/// otherwise 0, so the mask has unit mean.
pub fn dropout_mask<R: RngCore + ?Sized>(len: usize, keep: f64, rng: &mut R) -> Result<Array> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(param(format!("keep probability {keep} not in (0, 1]")));
    }
    let scale = 1.0 / keep;
    let data = (0..len).map(|_| if keep == 1.0 || uniform(rng) < keep { scale } else { 0.0 }).collect();
    Ok(Array::vector(data))
}

/// `coefficient * sum(w^2)` over the parameters flagged for decay.
pub fn l2_penalty(params: &ParamSet, coefficient: f64) -> f64 {
    coefficient * params.iter().filter(|p| p.decay).map(|p| p.value.sum_squares()).sum::<f64>()
}

/// Adds the gradient of [`l2_penalty`] to `grads`.
pub fn l2_gradient(params: &ParamSet, coefficient: f64, grads: &mut Grads) {
    if coefficient == 0.0 {
        return;
    }
    for (i, p) in params.iter().enumerate() {
        if p.decay {
            for (g, &w) in grads.get_mut(i).data_mut().iter_mut().zip(p.value.data()) {
                *g += 2.0 * coefficient * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn softmax_basics() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] < 1e-300);
        let z = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = z.iter().map(|x| x + 17.5).collect();
        for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((softmax(&z).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ls = log_softmax(&z);
        for (l, p) in ls.iter().zip(softmax(&z)) {
            assert!((libm::exp(*l) - p).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_lstm_gives_zero_hidden() {
        let (e, h) = (3, 2);
        let wx = Array::zeros(&[4 * h, e]);
        let wh = Array::zeros(&[4 * h, h]);
        let b = Array::zeros(&[4 * h]);
        let cell = LstmWeights { w_x: &wx, w_h: &wh, bias: &b };
        let (h2, c2) = cell.step(&[1.0, -2.0, 0.5], &[0.3, 0.1], &[0.0, 0.0]).unwrap();
        assert_eq!(h2, vec![0.0, 0.0]);
        assert_eq!(c2, vec![0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        let (e, h) = (2, 2);
        let wx = Array::zeros(&[4 * h, e]);
        let wh = Array::zeros(&[4 * h, h]);
        let mut b = Array::zeros(&[4 * h]);
        // forget block saturated open, input block saturated shut
        for j in 0..h {
            b.data_mut()[h + j] = 800.0;
            b.data_mut()[j] = -800.0;
        }
        let cell = LstmWeights { w_x: &wx, w_h: &wh, bias: &b };
        let (_, c2) = cell.step(&[0.7, 0.1], &[0.2, -0.4], &[1.5, -0.25]).unwrap();
        assert_eq!(c2, vec![1.5, -0.25]);
    }

    #[test]
    fn lstm_shape_errors() {
        let wx = Array::zeros(&[8, 3]);
        let wh = Array::zeros(&[8, 2]);
        let b = Array::zeros(&[8]);
        let cell = LstmWeights { w_x: &wx, w_h: &wh, bias: &b };
        assert!(cell.step(&[1.0, 2.0], &[0.0; 2], &[0.0; 2]).is_err());
        assert!(cell.step(&[1.0; 3], &[0.0; 3], &[0.0; 2]).is_err());
    }

    #[test]
    fn conv_maxpool_width_one_identity() {
        let w = Array::from_vec(&[1, 1, 1], vec![1.0]).unwrap();
        let b = Array::zeros(&[1]);
        let emb = Array::from_vec(&[3, 1], vec![1.0, 5.0, 3.0]).unwrap();
        let out = conv_maxpool(&[ConvBank { weight: &w, bias: &b }], &emb, Activation::Identity).unwrap();
        assert_eq!(out, vec![5.0]);
    }

    #[test]
    fn conv_maxpool_zero_filters_and_errors() {
        let w = Array::zeros(&[3, 2, 4]);
        let b = Array::zeros(&[3]);
        let emb = Array::filled(&[5, 4], 0.3);
        let bank = ConvBank { weight: &w, bias: &b };
        assert_eq!(conv_maxpool(&[bank], &emb, Activation::Tanh).unwrap(), vec![0.0; 3]);
        let short = Array::filled(&[1, 4], 0.3);
        assert!(conv_maxpool(&[bank], &short, Activation::Relu).is_err());
        let wrong = Array::filled(&[5, 3], 0.3);
        assert!(conv_maxpool(&[bank], &wrong, Activation::Relu).is_err());
    }

    #[test]
    fn dropout_mask_contract() {
        let mut rng = stream(11, 0);
        assert_eq!(dropout_mask(5, 1.0, &mut rng).unwrap().data(), &[1.0; 5]);
        assert!(dropout_mask(5, 0.0, &mut rng).is_err());
        assert!(dropout_mask(5, 1.5, &mut rng).is_err());
        let n = 1_000_000;
        let m = dropout_mask(n, 0.25, &mut rng).unwrap();
        let nonzero: Vec<f64> = m.data().iter().copied().filter(|&x| x != 0.0).collect();
        assert!(nonzero.iter().all(|&x| x == 4.0));
        // binomial sd = sqrt(0.25*0.75/1e6) ~ 4.3e-4, so 0.002 is > 4.5 sd
        let frac = nonzero.len() as f64 / n as f64;
        assert!((frac - 0.25).abs() < 0.002, "{frac}");
    }

    #[test]
    fn l2_penalty_values() {
        let mut ps = ParamSet::new();
        ps.push("w", Array::scalar(2.0), true);
        ps.push("b", Array::scalar(100.0), false);
        assert_eq!(l2_penalty(&ps, 0.5), 2.0);
        let mut zero = ParamSet::new();
        zero.push("w", Array::zeros(&[3, 3]), true);
        assert_eq!(l2_penalty(&zero, 0.5), 0.0);
    }
}
