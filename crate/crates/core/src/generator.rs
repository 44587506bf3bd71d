//! The generator policy: an LSTM over character tokens that emits a
//! distribution for the next token given the prefix.
//!
//! Training uses teacher-forced maximum likelihood for pretraining and
//! REINFORCE for the adversarial phase. The action value of a partial
//! sequence is estimated by completing it N times with the policy itself and
//! averaging the terminal rewards; a full-length sequence is scored directly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim, param, Error, Result};
use crate::nn::{softmax, AdamState, Array, Grads, LstmWeights, ParamSet, Tape, Var};
use crate::rng::{self, categorical, RngCore, StreamRng};
use crate::vocab::TokenSequence;

const EMBEDDING: usize = 0;
const W_X: usize = 1;
const W_H: usize = 2;
const BIAS: usize = 3;
const OUT_W: usize = 4;
const OUT_B: usize = 5;

/// Largest number of sequences [`PolicyNet::expected_reward_exact`] will
/// enumerate.
pub const ENUMERATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorShape {
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

/// Recurrent state `(hidden, cell)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

/// Scores complete, full-length sequences in batches. Implemented for
/// closures so tests can plug in reward tables.
pub trait BatchReward: Sync {
    fn rewards(&self, batch: &[Vec<usize>]) -> Result<Vec<f64>>;
}

impl<F> BatchReward for F
where
    F: Fn(&[Vec<usize>]) -> Result<Vec<f64>> + Sync,
{
    fn rewards(&self, batch: &[Vec<usize>]) -> Result<Vec<f64>> {
        self(batch)
    }
}

/// N completions of one prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSet {
    pub prefix: Vec<usize>,
    pub completions: Vec<Vec<usize>>,
}

/// LSTM policy. The embedding table has one extra row, the learned start
/// token fed at the first step; the initial recurrent state is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    shape: GeneratorShape,
    params: ParamSet,
}

impl PolicyNet {
    /// All-zero parameters: a uniform policy.
    pub fn zeros(shape: GeneratorShape) -> Self {
        let (v, e, h) = (shape.vocab_size, shape.embed_dim, shape.hidden_dim);
        let mut params = ParamSet::new();
        params.push("gen.embedding", Array::zeros(&[v + 1, e]), true);
        params.push("gen.lstm.w_x", Array::zeros(&[4 * h, e]), true);
        params.push("gen.lstm.w_h", Array::zeros(&[4 * h, h]), true);
        params.push("gen.lstm.bias", Array::zeros(&[4 * h]), false);
        params.push("gen.out.weight", Array::zeros(&[v, h]), true);
        params.push("gen.out.bias", Array::zeros(&[v]), false);
        Self { shape, params }
    }

    /// Gaussian initialisation (std 0.1) of weights, zero biases.
    pub fn new<R: RngCore + ?Sized>(shape: GeneratorShape, rng: &mut R) -> Self {
        let mut net = Self::zeros(shape);
        for p in net.params.iter_mut().filter(|p| p.decay) {
            for x in p.value.data_mut() {
                *x = 0.1 * rng::normal(rng);
            }
        }
        net
    }

    pub fn shape(&self) -> GeneratorShape {
        self.shape
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn start_row(&self) -> usize {
        self.shape.vocab_size
    }

    pub fn initial_state(&self) -> State {
        let h = self.shape.hidden_dim;
        State { hidden: vec![0.0; h], cell: vec![0.0; h] }
    }

    fn cell(&self) -> LstmWeights<'_> {
        LstmWeights { w_x: self.params.get(W_X), w_h: self.params.get(W_H), bias: self.params.get(BIAS) }
    }

    /// Input projections of every embedding row, `[(V + 1) * 4H]`.
    fn projections(&self) -> Vec<f64> {
        let g = 4 * self.shape.hidden_dim;
        let emb = self.params.get(EMBEDDING);
        let cell = self.cell();
        let mut out = vec![0.0; (self.shape.vocab_size + 1) * g];
        for (row, chunk) in out.chunks_exact_mut(g).enumerate() {
            cell.project_into(emb.row(row), chunk);
        }
        out
    }

    /// Feeds embedding row `row` and writes the next-token logits.
    fn advance(&self, proj: &[f64], row: usize, state: &mut State, scratch: &mut State, logits: &mut [f64]) {
        let g = 4 * self.shape.hidden_dim;
        self.cell().step_projected(&proj[row * g..(row + 1) * g], &state.hidden, &state.cell, &mut scratch.hidden, &mut scratch.cell);
        core::mem::swap(state, scratch);
        let w = self.params.get(OUT_W);
        let b = self.params.get(OUT_B).data();
        let h = self.shape.hidden_dim;
        for (k, l) in logits.iter_mut().enumerate() {
            *l = b[k] + crate::nn::dot(&w.data()[k * h..(k + 1) * h], &state.hidden);
        }
    }

    fn check_tokens(&self, tokens: &[usize]) -> Result<()> {
        match tokens.iter().find(|&&t| t >= self.shape.vocab_size) {
            Some(&t) => Err(Error::TokenOutOfRange { id: t, size: self.shape.vocab_size }),
            None => Ok(()),
        }
    }

    /// Distribution of the next token after `prefix`.
    pub fn step_distribution(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        let proj = &self.projections();
        if prefix.len() >= self.shape.max_len {
            return Err(Error::State(format!("prefix of length {} is already complete", prefix.len())));
        }
        self.check_tokens(prefix)?;
        let mut st = self.initial_state();
        let mut scratch = self.initial_state();
        let mut logits = vec![0.0; self.shape.vocab_size];
        self.advance(proj, self.start_row(), &mut st, &mut scratch, &mut logits);
        for &t in prefix {
            self.advance(proj, t, &mut st, &mut scratch, &mut logits);
        }
        Ok(softmax(&logits))
    }

    /// Log-probability of a full sequence under the policy.
    pub fn log_prob(&self, tokens: &[usize]) -> Result<f64> {
        let proj = &self.projections();
        self.check_tokens(tokens)?;
        let mut st = self.initial_state();
        let mut scratch = self.initial_state();
        let mut logits = vec![0.0; self.shape.vocab_size];
        let mut row = self.start_row();
        let mut total = 0.0;
        for &t in tokens {
            self.advance(proj, row, &mut st, &mut scratch, &mut logits);
            total += crate::nn::log_softmax(&logits)[t];
            row = t;
        }
        Ok(total)
    }

    /// Continues `prefix` to full length by sampling, starting from the
    /// state reached after it.
    fn complete_from<R: RngCore + ?Sized>(&self, proj: &[f64], prefix: &[usize], state: &State, logits: &[f64], rng: &mut R) -> Vec<usize> {
        let mut out = prefix.to_vec();
        let mut st = state.clone();
        let mut scratch = self.initial_state();
        let mut logits = logits.to_vec();
        while out.len() < self.shape.max_len {
            let t = categorical(rng, &softmax(&logits));
            out.push(t);
            if out.len() < self.shape.max_len {
                self.advance(proj, t, &mut st, &mut scratch, &mut logits);
            }
        }
        out
    }

    /// States and next-token logits after each prefix length `0..len`.
    fn prefix_states(&self, proj: &[f64], tokens: &[usize], len: usize) -> Vec<(State, Vec<f64>)> {
        let mut st = self.initial_state();
        let mut scratch = self.initial_state();
        let mut logits = vec![0.0; self.shape.vocab_size];
        self.advance(proj, self.start_row(), &mut st, &mut scratch, &mut logits);
        let mut out = Vec::with_capacity(len + 1);
        out.push((st.clone(), logits.clone()));
        for &t in &tokens[..len] {
            self.advance(proj, t, &mut st, &mut scratch, &mut logits);
            out.push((st.clone(), logits.clone()));
        }
        out
    }

    /// Draws `batch_size` full-length sequences token by token.
    pub fn sample_batch<R: RngCore + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
        let proj = &self.projections();
        let st = self.initial_state();
        let mut scratch = self.initial_state();
        let mut logits = vec![0.0; self.shape.vocab_size];
        let mut s0 = st.clone();
        self.advance(proj, self.start_row(), &mut s0, &mut scratch, &mut logits);
        (0..batch_size).map(|_| self.complete_from(proj, &[], &s0, &logits, rng)).collect()
    }

    /// Completes `prefix` N times with the policy itself.
    pub fn rollout<R: RngCore + ?Sized>(&self, prefix: &[usize], n: usize, rng: &mut R) -> Result<RolloutSet> {
        let proj = &self.projections();
        if prefix.is_empty() || prefix.len() > self.shape.max_len {
            return Err(param(format!("rollout prefix length {} not in 1..={}", prefix.len(), self.shape.max_len)));
        }
        if n == 0 {
            return Err(param("rollout count must be positive"));
        }
        self.check_tokens(prefix)?;
        let completions = if prefix.len() == self.shape.max_len {
            vec![prefix.to_vec(); n]
        } else {
            let states = self.prefix_states(proj, prefix, prefix.len());
            let (st, logits) = &states[prefix.len()];
            (0..n).map(|_| self.complete_from(proj, prefix, st, logits, rng)).collect()
        };
        Ok(RolloutSet { prefix: prefix.to_vec(), completions })
    }

    /// Action value of taking `action` after `prefix`: the reward itself
    /// when that completes the sequence, otherwise the mean reward of N
    /// rollouts of `prefix + action`.
    pub fn q_value<R, F>(&self, prefix: &[usize], action: usize, n: usize, reward: F, rng: &mut R) -> Result<f64>
    where
        R: RngCore + ?Sized,
        F: Fn(&[usize]) -> f64,
    {
        let mut seq = prefix.to_vec();
        seq.push(action);
        if seq.len() > self.shape.max_len {
            return Err(param("prefix already has full length"));
        }
        if seq.len() == self.shape.max_len {
            return finite(reward(&seq));
        }
        let set = self.rollout(&seq, n, rng)?;
        let mut total = 0.0;
        for c in &set.completions {
            total += finite(reward(c))?;
        }
        Ok(total / n as f64)
    }

    /// Action values for every position of every sequence of `batch`
    /// (`q[b][t]` is the value of token `t` given the tokens before it).
    ///
    /// The reward is evaluated on whole batches: once on `batch` itself for
    /// the final position, and once per `(t, n)` on the batch of n-th
    /// completions of every length-`t` prefix. Rollout `(t, n, b)` draws from
    /// its own stream derived from `seed`, so the result does not depend on
    /// evaluation order or thread count.
    pub fn q_values<B: BatchReward + ?Sized>(&self, batch: &[Vec<usize>], n: usize, reward: &B, seed: u64) -> Result<Vec<Vec<f64>>> {
        let proj = &self.projections();
        let t_max = self.shape.max_len;
        if n == 0 {
            return Err(param("rollout count must be positive"));
        }
        for s in batch {
            if s.len() != t_max {
                return Err(dim(format!("sequence length {} != {t_max}", s.len())));
            }
            self.check_tokens(s)?;
        }
        let b = batch.len();
        let mut q = vec![vec![0.0; t_max]; b];
        let last = checked_rewards(reward, batch)?;
        for (row, r) in q.iter_mut().zip(last) {
            row[t_max - 1] = r;
        }
        if t_max == 1 || b == 0 {
            return Ok(q);
        }
        let states: Vec<Vec<(State, Vec<f64>)>> = batch.iter().map(|s| self.prefix_states(proj, s, t_max - 1)).collect();
        let jobs: Vec<(usize, usize)> = (1..t_max).flat_map(|t| (0..n).map(move |k| (t, k))).collect();
        let run = |&(t, k): &(usize, usize)| -> Result<Vec<f64>> {
            let completions: Vec<Vec<usize>> = (0..b)
                .map(|i| {
                    let mut r = rollout_stream(seed, t, k, i);
                    let (st, logits) = &states[i][t];
                    self.complete_from(proj, &batch[i][..t], st, logits, &mut r)
                })
                .collect();
            checked_rewards(reward, &completions)
        };
        #[cfg(feature = "parallel")]
        let results: Vec<Result<Vec<f64>>> = {
            use rayon::prelude::*;
            jobs.par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<Vec<f64>>> = jobs.iter().map(run).collect();
        for (&(t, _), rewards) in jobs.iter().zip(results) {
            for (row, r) in q.iter_mut().zip(rewards?) {
                row[t - 1] += r;
            }
        }
        let inv = 1.0 / n as f64;
        for row in &mut q {
            for x in &mut row[..t_max - 1] {
                *x *= inv;
            }
        }
        Ok(q)
    }

    /// Teacher-forced graph for one sequence; returns the per-step
    /// `-log p(y_t | y_<t)` nodes.
    fn record_nll<'t>(&'t self, tape: &mut Tape<'t>, tokens: &[usize]) -> Result<Vec<Var>> {
        let h = self.shape.hidden_dim;
        let (emb, wx, wh, bias, ow, ob) =
            (tape.param(EMBEDDING), tape.param(W_X), tape.param(W_H), tape.param(BIAS), tape.param(OUT_W), tape.param(OUT_B));
        let mut hidden = tape.input(Array::zeros(&[h]));
        let mut cell = tape.input(Array::zeros(&[h]));
        let mut row = self.start_row();
        let mut out = Vec::with_capacity(tokens.len());
        for &t in tokens {
            let x = tape.row(emb, row)?;
            let (h2, c2) = tape.lstm_step(wx, wh, bias, x, hidden, cell)?;
            hidden = h2;
            cell = c2;
            let logits = tape.affine(ow, hidden, ob)?;
            out.push(tape.neg_log_softmax(logits, t)?);
            row = t;
        }
        Ok(out)
    }

    /// Mean per-token negative log-likelihood of `batch` and its gradient.
    pub fn mle_gradient(&self, batch: &[TokenSequence]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(param("empty batch"));
        }
        let mut grads = Grads::zeros_like(&self.params);
        let mut total = 0.0;
        let mut count = 0usize;
        for seq in batch {
            if seq.len() != self.shape.max_len {
                return Err(dim(format!("sequence length {} != {}", seq.len(), self.shape.max_len)));
            }
            self.check_tokens(seq.tokens())?;
            let mut tape = Tape::new(&self.params);
            let steps = self.record_nll(&mut tape, seq.tokens())?;
            let loss = tape.sum_all(&steps)?;
            total += tape.value(loss).data()[0];
            count += steps.len();
            grads.add_scaled(&tape.backward(loss)?, 1.0);
        }
        grads.scale(1.0 / count as f64);
        Ok((total / count as f64, grads))
    }

    /// One teacher-forced Adam step; returns the loss before the update.
    pub fn mle_step(&mut self, batch: &[TokenSequence], opt: &mut AdamState) -> Result<f64> {
        let (loss, grads) = self.mle_gradient(batch)?;
        opt.step(&mut self.params, &grads)?;
        Ok(loss)
    }

    /// Gradient of `-(1/B) sum_b (1/T) sum_t (Q[b][t] - baseline) log p(y_t | y_<t)`,
    /// i.e. the negated REINFORCE estimate of the expected-reward gradient.
    pub fn policy_gradient(&self, batch: &[Vec<usize>], q: &[Vec<f64>], baseline: f64) -> Result<Grads> {
        if q.len() != batch.len() {
            return Err(Error::Contract(format!("{} Q rows for {} sequences", q.len(), batch.len())));
        }
        let mut grads = Grads::zeros_like(&self.params);
        if batch.is_empty() {
            return Ok(grads);
        }
        let t_max = self.shape.max_len;
        for (seq, qs) in batch.iter().zip(q) {
            if seq.len() != t_max || qs.len() != t_max {
                return Err(Error::Contract(format!("sequence of length {} with {} Q values, expected {t_max}", seq.len(), qs.len())));
            }
            if qs.iter().all(|&v| v - baseline == 0.0) {
                continue;
            }
            self.check_tokens(seq)?;
            let mut tape = Tape::new(&self.params);
            let steps = self.record_nll(&mut tape, seq)?;
            let weighted: Vec<Var> = steps.iter().zip(qs).map(|(&nll, &qv)| tape.scale(nll, qv - baseline)).collect();
            let loss = tape.sum_all(&weighted)?;
            grads.add_scaled(&tape.backward(loss)?, 1.0);
        }
        grads.scale(1.0 / (batch.len() * t_max) as f64);
        Ok(grads)
    }

    /// One REINFORCE ascent step. Returns the gradient norm.
    pub fn policy_gradient_step(&mut self, batch: &[Vec<usize>], q: &[Vec<f64>], baseline: f64, opt: &mut AdamState) -> Result<f64> {
        let grads = self.policy_gradient(batch, q, baseline)?;
        let norm = grads.norm();
        if !norm.is_finite() {
            return Err(Error::Reward);
        }
        opt.step(&mut self.params, &grads)?;
        Ok(norm)
    }

    /// Exact expected reward by enumerating every sequence of full length.
    pub fn expected_reward_exact<F: Fn(&[usize]) -> f64>(&self, reward: F) -> Result<f64> {
        let proj = &self.projections();
        let count = libm::pow(self.shape.vocab_size as f64, self.shape.max_len as f64);
        if count > ENUMERATION_LIMIT {
            return Err(Error::Guard(count));
        }
        let mut st = self.initial_state();
        let mut scratch = self.initial_state();
        let mut logits = vec![0.0; self.shape.vocab_size];
        self.advance(proj, self.start_row(), &mut st, &mut scratch, &mut logits);
        let mut prefix = Vec::with_capacity(self.shape.max_len);
        self.enumerate(proj, &mut prefix, &st, &logits, 1.0, &reward)
    }

    fn enumerate<F: Fn(&[usize]) -> f64>(
        &self,
        proj: &[f64],
        prefix: &mut Vec<usize>,
        st: &State,
        logits: &[f64],
        prob: f64,
        reward: &F,
    ) -> Result<f64> {
        let probs = softmax(logits);
        let mut total = 0.0;
        for (t, &p) in probs.iter().enumerate() {
            prefix.push(t);
            if prefix.len() == self.shape.max_len {
                total += prob * p * finite(reward(prefix))?;
            } else {
                let mut s2 = st.clone();
                let mut scratch = self.initial_state();
                let mut l2 = vec![0.0; logits.len()];
                self.advance(proj, t, &mut s2, &mut scratch, &mut l2);
                total += self.enumerate(proj, prefix, &s2, &l2, prob * p, reward)?;
            }
            prefix.pop();
        }
        Ok(total)
    }
}

/// Stream for rollout `k` of sequence `i` at prefix length `t`.
pub fn rollout_stream(seed: u64, t: usize, k: usize, i: usize) -> StreamRng {
    rng::stream(rng::derive(seed, &[t as u64, k as u64, i as u64]), rng::tag::ROLLOUT)
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Reward)
    }
}

fn checked_rewards<B: BatchReward + ?Sized>(reward: &B, batch: &[Vec<usize>]) -> Result<Vec<f64>> {
    let r = reward.rewards(batch)?;
    if r.len() != batch.len() {
        return Err(Error::Contract(format!("{} rewards for {} sequences", r.len(), batch.len())));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Reward);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn shape(v: usize, t: usize) -> GeneratorShape {
        GeneratorShape { vocab_size: v, max_len: t, embed_dim: 3, hidden_dim: 4 }
    }

    fn random_policy(v: usize, t: usize, seed: u64) -> PolicyNet {
        PolicyNet::new(shape(v, t), &mut stream(seed, 0))
    }

    /// Policy that always emits `k`: a huge output bias on that token.
    fn degenerate(v: usize, t: usize, k: usize) -> PolicyNet {
        let mut p = PolicyNet::zeros(shape(v, t));
        p.params_mut().get_mut(OUT_B).data_mut()[k] = 1e3;
        p
    }

    #[test]
    fn zero_policy_is_uniform() {
        let p = PolicyNet::zeros(shape(5, 4));
        let d = p.step_distribution(&[1, 2]).unwrap();
        assert!(d.iter().all(|&x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn step_distribution_contract() {
        let p = random_policy(6, 5, 1);
        let a = p.step_distribution(&[0, 3]).unwrap();
        assert_eq!(a, p.step_distribution(&[0, 3]).unwrap());
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(p.step_distribution(&[0; 5]), Err(Error::State(_))));
        assert!(p.step_distribution(&[9]).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_respects_degenerate_policy() {
        let p = random_policy(4, 6, 2);
        let a = p.sample_batch(8, &mut stream(5, 0));
        assert_eq!(a, p.sample_batch(8, &mut stream(5, 0)));
        assert!(a.iter().all(|s| s.len() == 6));
        let d = degenerate(4, 6, 2);
        assert!(d.sample_batch(5, &mut stream(1, 1)).iter().all(|s| s == &vec![2; 6]));
    }

    #[test]
    fn rollout_extends_prefix() {
        let p = random_policy(4, 6, 3);
        let set = p.rollout(&[1, 2], 7, &mut stream(1, 2)).unwrap();
        assert_eq!(set.completions.len(), 7);
        assert!(set.completions.iter().all(|c| c.len() == 6 && c[..2] == [1, 2]));
        let full = p.rollout(&[1, 2, 3, 0, 1, 2], 3, &mut stream(1, 2)).unwrap();
        assert!(full.completions.iter().all(|c| c == &vec![1, 2, 3, 0, 1, 2]));
        let d = degenerate(4, 6, 1);
        let set = d.rollout(&[3], 4, &mut stream(1, 3)).unwrap();
        assert!(set.completions.iter().all(|c| c == &set.completions[0]));
    }

    #[test]
    fn q_value_boundary_and_constants() {
        let p = random_policy(3, 4, 4);
        let reward = |s: &[usize]| 0.1 * s.iter().sum::<usize>() as f64 + 0.37;
        let q = p.q_value(&[0, 1, 2], 1, 5, reward, &mut stream(0, 0)).unwrap();
        assert_eq!(q, reward(&[0, 1, 2, 1]));
        let c = p.q_value(&[2], 0, 9, |_: &[usize]| 0.625, &mut stream(0, 1)).unwrap();
        assert_eq!(c, 0.625);
        let err = p.q_value(&[2], 0, 3, |_: &[usize]| f64::NAN, &mut stream(0, 1));
        assert_eq!(err, Err(Error::Reward));
    }

    #[test]
    fn q_values_last_column_is_reward() {
        let p = random_policy(3, 4, 6);
        let batch = p.sample_batch(5, &mut stream(9, 9));
        let reward = |b: &[Vec<usize>]| -> Result<Vec<f64>> { Ok(b.iter().map(|s| s[0] as f64 + 0.5 * s[3] as f64).collect()) };
        let q = p.q_values(&batch, 4, &reward, 17).unwrap();
        for (s, row) in batch.iter().zip(&q) {
            assert_eq!(row[3], s[0] as f64 + 0.5 * s[3] as f64);
            // the first token is fixed in every rollout of a prefix of length >= 1
            assert!(row[..3].iter().all(|&x| x >= s[0] as f64));
        }
        assert_eq!(q, p.q_values(&batch, 4, &reward, 17).unwrap());
        let bad = |b: &[Vec<usize>]| -> Result<Vec<f64>> { Ok(vec![0.0; b.len() + 1]) };
        assert!(matches!(p.q_values(&batch, 4, &bad, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn uniform_loss_is_log_vocab() {
        let p = PolicyNet::zeros(shape(7, 3));
        let v = crate::vocab::Vocabulary::build(&["abcdef"]).unwrap();
        let batch = [v.encode("ab", 3).unwrap(), v.encode("fed", 3).unwrap()];
        let (loss, _) = p.mle_gradient(&batch).unwrap();
        assert!((loss - libm::log(7.0)).abs() < 1e-12);
        assert!(p.mle_gradient(&[]).is_err());
    }

    #[test]
    fn zero_q_gives_zero_gradient_and_no_change() {
        let mut p = random_policy(3, 3, 7);
        let before = p.clone();
        let batch = p.sample_batch(4, &mut stream(1, 1));
        let q = vec![vec![0.0; 3]; 4];
        let mut opt = AdamState::new(p.params(), 0.1);
        let norm = p.policy_gradient_step(&batch, &q, 0.0, &mut opt).unwrap();
        assert_eq!(norm, 0.0);
        assert_eq!(p, before);
        let short = vec![vec![0.0; 2]; 4];
        assert!(matches!(p.policy_gradient(&batch, &short, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn enumeration_guard_and_constant_reward() {
        let p = random_policy(3, 4, 8);
        let j = p.expected_reward_exact(|_| 0.75).unwrap();
        assert!((j - 0.75).abs() < 1e-12);
        let big = PolicyNet::zeros(shape(40, 6));
        assert!(matches!(big.expected_reward_exact(|_| 1.0), Err(Error::Guard(_))));
        let u = PolicyNet::zeros(shape(2, 2));
        let j = u.expected_reward_exact(|s| if s == [1, 0] { 1.0 } else { 0.0 }).unwrap();
        assert!((j - 0.25).abs() < 1e-15);
    }

    #[test]
    fn log_prob_matches_step_distributions() {
        let p = random_policy(4, 3, 10);
        let seq = [2, 0, 3];
        let mut lp = 0.0;
        for t in 0..3 {
            lp += libm::log(p.step_distribution(&seq[..t]).unwrap()[seq[t]]);
        }
        assert!((lp - p.log_prob(&seq).unwrap()).abs() < 1e-12);
    }
}
