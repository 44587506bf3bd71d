//! Central finite-difference checks of the analytic gradients.
//!
//! Every kernel can be exercised on random small instances. A coordinate
//! whose numerical derivative changes between step sizes sits on a kink
//! (ReLU at zero, a max-pool tie); such instances are redrawn rather than
//! scored, since no gradient is defined there.

use alloc::vec::Vec;

use super::{l2_gradient, l2_penalty, Array, Grads, ParamSet, Tape, Var};
use crate::discriminator::{CriticConfig, CriticMode, CriticNet};
use crate::error::{Error, Result};
use crate::generator::{GeneratorShape, PolicyNet};
use crate::rng::{self, RngCore, StreamRng};
use crate::vocab::{TokenSequence, Vocabulary};

/// Step of the five-point stencil.
pub const STEP: f64 = 1e-3;
/// Components smaller than this are compared on an absolute scale.
pub const FLOOR: f64 = 1e-4;
const KINK_TOLERANCE: f64 = 1e-8;
const MAX_REDRAWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    LstmStep,
    ConvMaxPool,
    Affine,
    Embedding,
    SoftmaxCrossEntropy,
    LogisticLoss,
    L2Penalty,
    Highway,
    GeneratorMle,
    PolicyGradient,
    CriticClassifier,
    CriticWasserstein,
}

impl Kernel {
    pub const ALL: [Kernel; 12] = [
        Kernel::LstmStep,
        Kernel::ConvMaxPool,
        Kernel::Affine,
        Kernel::Embedding,
        Kernel::SoftmaxCrossEntropy,
        Kernel::LogisticLoss,
        Kernel::L2Penalty,
        Kernel::Highway,
        Kernel::GeneratorMle,
        Kernel::PolicyGradient,
        Kernel::CriticClassifier,
        Kernel::CriticWasserstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::LstmStep => "lstm_step",
            Kernel::ConvMaxPool => "conv_maxpool",
            Kernel::Affine => "affine",
            Kernel::Embedding => "embedding",
            Kernel::SoftmaxCrossEntropy => "softmax_xent",
            Kernel::LogisticLoss => "logistic_loss",
            Kernel::L2Penalty => "l2_penalty",
            Kernel::Highway => "highway",
            Kernel::GeneratorMle => "generator_mle",
            Kernel::PolicyGradient => "policy_gradient",
            Kernel::CriticClassifier => "critic_classifier",
            Kernel::CriticWasserstein => "critic_wasserstein",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelReport {
    pub kernel: Kernel,
    pub instances: usize,
    pub redrawn: usize,
    pub max_relative_error: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    libm::fabs(analytic - numeric) / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn stencil(f: &mut impl FnMut(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    let (a, b, c, d) = (f(x + 2.0 * h)?, f(x + h)?, f(x - h)?, f(x - 2.0 * h)?);
    Ok((-a + 8.0 * b - 8.0 * c + d) / (12.0 * h))
}

/// Largest relative error over every parameter coordinate, or `None` when
/// some coordinate sits on a kink.
pub fn compare(params: &mut ParamSet, analytic: &Grads, mut loss: impl FnMut(&ParamSet) -> Result<f64>) -> Result<Option<f64>> {
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        for k in 0..params.get(i).len() {
            let x0 = params.get(i).data()[k];
            let mut at = |x: f64| -> Result<f64> {
                params.get_mut(i).data_mut()[k] = x;
                loss(params)
            };
            let coarse = stencil(&mut at, x0, STEP);
            let fine = stencil(&mut at, x0, STEP / 2.0);
            params.get_mut(i).data_mut()[k] = x0;
            let (coarse, fine) = (coarse?, fine?);
            if libm::fabs(coarse - fine) > KINK_TOLERANCE * fine.abs().max(1.0) {
                return Ok(None);
            }
            worst = worst.max(relative_error(analytic.get(i).data()[k], fine));
        }
    }
    Ok(Some(worst))
}

/// Checks a loss recorded on a tape against its backward pass.
pub fn check_tape<F>(params: &mut ParamSet, f: F) -> Result<Option<f64>>
where
    F: for<'t> Fn(&mut Tape<'t>) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(params);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    compare(params, &analytic, |p| {
        let mut tape = Tape::new(p);
        let loss = f(&mut tape)?;
        Ok(tape.value(loss).data()[0])
    })
}

fn randn(rng: &mut StreamRng, shape: &[usize], scale: f64) -> Array {
    let mut a = Array::zeros(shape);
    for x in a.data_mut() {
        *x = scale * rng::normal(rng);
    }
    a
}

fn below(rng: &mut StreamRng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Reduces an output to a scalar through a fixed random projection.
fn project<'t>(tape: &mut Tape<'t>, v: Var, weights: &[f64]) -> Result<Var> {
    let w = tape.input(Array::vector(weights.to_vec()));
    tape.dot(v, w)
}

fn projection(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng::normal(rng)).collect()
}

fn randomise(params: &mut ParamSet, rng: &mut StreamRng, scale: f64) {
    for p in params.iter_mut() {
        for x in p.value.data_mut() {
            *x = scale * rng::normal(rng);
        }
    }
}

/// One random instance; `None` when it landed on a kink.
fn instance(kernel: Kernel, rng: &mut StreamRng) -> Result<Option<f64>> {
    match kernel {
        Kernel::LstmStep => {
            let (e, h) = (1 + below(rng, 4), 1 + below(rng, 4));
            let mut ps = ParamSet::new();
            ps.push("w_x", randn(rng, &[4 * h, e], 0.5), true);
            ps.push("w_h", randn(rng, &[4 * h, h], 0.5), true);
            ps.push("b", randn(rng, &[4 * h], 0.5), false);
            ps.push("x", randn(rng, &[e], 1.0), false);
            ps.push("h", randn(rng, &[h], 0.5), false);
            ps.push("c", randn(rng, &[h], 0.5), false);
            let (rh, rc) = (projection(rng, h), projection(rng, h));
            check_tape(&mut ps, |t| {
                let v: Vec<Var> = (0..6).map(|i| t.param(i)).collect();
                let (h2, c2) = t.lstm_step(v[0], v[1], v[2], v[3], v[4], v[5])?;
                // A second step checks the recurrence through h and c.
                let (h3, c3) = t.lstm_step(v[0], v[1], v[2], v[3], h2, c2)?;
                let a = project(t, h3, &rh)?;
                let b = project(t, c3, &rc)?;
                t.add(a, b)
            })
        }
        Kernel::ConvMaxPool => {
            let (len, e, f) = (2 + below(rng, 5), 1 + below(rng, 3), 1 + below(rng, 3));
            let k = 1 + below(rng, len);
            let mut ps = ParamSet::new();
            ps.push("x", randn(rng, &[len, e], 1.0), false);
            ps.push("w", randn(rng, &[f, k, e], 0.5), true);
            ps.push("b", randn(rng, &[f], 0.5), false);
            let r = projection(rng, f);
            check_tape(&mut ps, |t| {
                let (x, w, b) = (t.param(0), t.param(1), t.param(2));
                let c = t.conv1d(x, w, b)?;
                let c = t.relu(c);
                let m = t.max_over_time(c)?;
                project(t, m, &r)
            })
        }
        Kernel::Affine => {
            let (m, n) = (1 + below(rng, 5), 1 + below(rng, 5));
            let mut ps = ParamSet::new();
            ps.push("w", randn(rng, &[m, n], 1.0), true);
            ps.push("x", randn(rng, &[n], 1.0), false);
            ps.push("b", randn(rng, &[m], 1.0), false);
            let r = projection(rng, m);
            check_tape(&mut ps, |t| {
                let (w, x, b) = (t.param(0), t.param(1), t.param(2));
                let y = t.affine(w, x, b)?;
                project(t, y, &r)
            })
        }
        Kernel::Embedding => {
            let (v, e, len) = (2 + below(rng, 4), 1 + below(rng, 3), 1 + below(rng, 5));
            let tokens: Vec<usize> = (0..len).map(|_| below(rng, v)).collect();
            let first = below(rng, v);
            let mut ps = ParamSet::new();
            ps.push("table", randn(rng, &[v, e], 1.0), true);
            let (r_rows, r_row) = (projection(rng, len * e), projection(rng, e));
            check_tape(&mut ps, |t| {
                let table = t.param(0);
                let rows = t.rows(table, &tokens)?;
                let row = t.row(table, first)?;
                let a = project(t, rows, &r_rows)?;
                let sq = t.sum_squares(row);
                let b = project(t, row, &r_row)?;
                let ab = t.add(a, b)?;
                t.add(ab, sq)
            })
        }
        Kernel::SoftmaxCrossEntropy => {
            let n = 2 + below(rng, 6);
            let target = below(rng, n);
            let mut ps = ParamSet::new();
            ps.push("z", randn(rng, &[n], 2.0), false);
            check_tape(&mut ps, |t| {
                let z = t.param(0);
                t.neg_log_softmax(z, target)
            })
        }
        Kernel::LogisticLoss => {
            let label = if below(rng, 2) == 0 { 0.0 } else { 1.0 };
            let mut ps = ParamSet::new();
            ps.push("z", randn(rng, &[1], 3.0), false);
            check_tape(&mut ps, |t| {
                let z = t.param(0);
                t.bce_with_logits(z, label)
            })
        }
        Kernel::L2Penalty => {
            let mut ps = ParamSet::new();
            for i in 0..1 + below(rng, 4) {
                let shape = [1 + below(rng, 3), 1 + below(rng, 3)];
                ps.push(alloc::format!("p{i}"), randn(rng, &shape, 1.0), below(rng, 3) != 0);
            }
            let coef = libm::exp(-6.0 * rng::uniform(rng));
            let mut analytic = Grads::zeros_like(&ps);
            l2_gradient(&ps, coef, &mut analytic);
            compare(&mut ps, &analytic, |p| Ok(l2_penalty(p, coef)))
        }
        Kernel::Highway => {
            let d = 1 + below(rng, 5);
            let mut ps = ParamSet::new();
            ps.push("f", randn(rng, &[d], 1.0), false);
            ps.push("wh", randn(rng, &[d, d], 0.7), true);
            ps.push("bh", randn(rng, &[d], 0.5), false);
            ps.push("wg", randn(rng, &[d, d], 0.7), true);
            ps.push("bg", randn(rng, &[d], 0.5), false);
            let r = projection(rng, d);
            let mask: Vec<f64> = (0..d).map(|_| if below(rng, 4) == 0 { 0.0 } else { 4.0 }).collect();
            check_tape(&mut ps, |t| {
                let v: Vec<Var> = (0..5).map(|i| t.param(i)).collect();
                let h = t.affine(v[1], v[0], v[2])?;
                let h = t.relu(h);
                let g = t.affine(v[3], v[0], v[4])?;
                let g = t.sigmoid(g);
                let carry = t.one_minus(g);
                let a = t.mul(g, h)?;
                let b = t.mul(carry, v[0])?;
                let out = t.add(a, b)?;
                let out = t.mask(out, &mask)?;
                project(t, out, &r)
            })
        }
        Kernel::GeneratorMle => {
            let shape = GeneratorShape { vocab_size: 2 + below(rng, 3), max_len: 2 + below(rng, 3), embed_dim: 2, hidden_dim: 2 };
            let mut net = PolicyNet::zeros(shape);
            randomise(net.params_mut(), rng, 0.5);
            let chars: Vec<char> = "abcd".chars().take(shape.vocab_size - 1).collect();
            let vocab = Vocabulary::build(&[chars.iter().collect::<alloc::string::String>()])?;
            let batch: Vec<TokenSequence> = (0..2)
                .map(|_| {
                    let tokens: Vec<usize> = (0..shape.max_len).map(|_| below(rng, shape.vocab_size)).collect();
                    TokenSequence::from_generated(&tokens, &vocab)
                })
                .collect::<Result<_>>()?;
            let (_, analytic) = net.mle_gradient(&batch)?;
            let mut params = net.params().clone();
            compare(&mut params, &analytic, |p| {
                let mut probe = PolicyNet::zeros(shape);
                *probe.params_mut() = p.clone();
                Ok(probe.mle_gradient(&batch)?.0)
            })
        }
        Kernel::PolicyGradient => {
            let shape = GeneratorShape { vocab_size: 2 + below(rng, 3), max_len: 2 + below(rng, 3), embed_dim: 2, hidden_dim: 2 };
            let mut net = PolicyNet::zeros(shape);
            randomise(net.params_mut(), rng, 0.5);
            let batch: Vec<Vec<usize>> = (0..2).map(|_| (0..shape.max_len).map(|_| below(rng, shape.vocab_size)).collect()).collect();
            let q: Vec<Vec<f64>> = batch.iter().map(|s| s.iter().map(|_| rng::uniform(rng)).collect()).collect();
            let baseline = 0.3;
            let analytic = net.policy_gradient(&batch, &q, baseline)?;
            let mut params = net.params().clone();
            compare(&mut params, &analytic, |p| {
                let mut probe = PolicyNet::zeros(shape);
                *probe.params_mut() = p.clone();
                surrogate(&probe, &batch, &q, baseline)
            })
        }
        Kernel::CriticClassifier | Kernel::CriticWasserstein => {
            let mode = if kernel == Kernel::CriticClassifier { CriticMode::Classifier } else { CriticMode::Wasserstein };
            let (v, len) = (2 + below(rng, 3), 2 + below(rng, 3));
            let mut config = CriticConfig::new(v, len, 2, mode);
            config.filters_per_width = 2;
            let mut net = CriticNet::zeros(config.clone())?;
            randomise(net.params_mut(), rng, 0.5);
            let draw = |rng: &mut StreamRng| -> Vec<Vec<usize>> { (0..2).map(|_| (0..len).map(|_| below(rng, v)).collect()).collect() };
            let (real, fake) = (draw(rng), draw(rng));
            let loss = |n: &CriticNet| -> Result<(f64, Grads)> {
                match mode {
                    CriticMode::Classifier => n.classifier_gradient::<_, StreamRng>(&real, &fake, None),
                    CriticMode::Wasserstein => n.wasserstein_gradient(&real, &fake).map(|(o, g)| (-o, g)),
                }
            };
            let (_, analytic) = loss(&net)?;
            let mut params = net.params().clone();
            compare(&mut params, &analytic, |p| {
                let mut probe = CriticNet::zeros(config.clone())?;
                *probe.params_mut() = p.clone();
                Ok(loss(&probe)?.0)
            })
        }
    }
}

/// `-(1 / (B T)) * sum (Q - baseline) * log p(y_t | y_<t)`, the loss whose
/// gradient the policy-gradient step follows.
pub fn surrogate(net: &PolicyNet, batch: &[Vec<usize>], q: &[Vec<f64>], baseline: f64) -> Result<f64> {
    let t_len = net.shape().max_len;
    let mut total = 0.0;
    for (seq, qs) in batch.iter().zip(q) {
        for t in 0..t_len {
            let p = net.step_distribution(&seq[..t])?;
            total += (qs[t] - baseline) * libm::log(p[seq[t]]);
        }
    }
    Ok(-total / (batch.len() * t_len) as f64)
}

/// Runs `instances` random checks of one kernel.
pub fn check_kernel(kernel: Kernel, instances: usize, seed: u64) -> Result<KernelReport> {
    let mut rng = rng::stream(rng::derive(seed, &[kernel as u64]), rng::tag::INIT);
    let mut report = KernelReport { kernel, instances: 0, redrawn: 0, max_relative_error: 0.0 };
    while report.instances < instances {
        match instance(kernel, &mut rng)? {
            Some(err) => {
                report.instances += 1;
                report.max_relative_error = report.max_relative_error.max(err);
            }
            None => {
                report.redrawn += 1;
                if report.redrawn > MAX_REDRAWS + instances {
                    return Err(Error::State(alloc::format!("{}: too many instances on kinks", kernel.name())));
                }
            }
        }
    }
    Ok(report)
}
