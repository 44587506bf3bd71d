//! CNN sequence critic: embedding, banks of convolution filters with
//! max-over-time pooling, one highway layer and a scalar head.
//!
//! As a classifier the head is read through a logistic and trained with
//! binary cross-entropy, dropout before the head and an L2 penalty on the
//! weight matrices. As a Wasserstein critic the head is a raw score trained
//! on `mean(real) - mean(fake)`, with every parameter clipped to `[-c, c]`
//! after each step.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim, param, Error, Result};
use crate::nn::{
    conv_maxpool, dot, dropout_mask, l2_gradient, l2_penalty, sigmoid, Activation, AdamState, Array, ConvBank, Grads, ParamSet, Tape, Var,
};
use crate::rng::{self, RngCore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticMode {
    Classifier,
    Wasserstein,
}

impl CriticMode {
    pub fn name(self) -> &'static str {
        match self {
            CriticMode::Classifier => "gan",
            CriticMode::Wasserstein => "wgan",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(CriticMode::Classifier),
            "wgan" => Ok(CriticMode::Wasserstein),
            _ => Err(Error::Config(format!("mode must be gan or wgan, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout_keep: f64,
    pub l2: f64,
    pub mode: CriticMode,
}

impl CriticConfig {
    /// Widths `1..=min(15, max_len)`, ten filters each, keep 0.25.
    pub fn new(vocab_size: usize, max_len: usize, embed_dim: usize, mode: CriticMode) -> Self {
        Self {
            vocab_size,
            max_len,
            embed_dim,
            filter_widths: default_widths(max_len),
            filters_per_width: 10,
            dropout_keep: 0.25,
            l2: 1e-4,
            mode,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.filter_widths.len() * self.filters_per_width
    }

    fn validate(&self) -> Result<()> {
        if self.filter_widths.is_empty() || self.filters_per_width == 0 {
            return Err(param("critic needs at least one filter"));
        }
        if let Some(&w) = self.filter_widths.iter().find(|&&w| w == 0 || w > self.max_len) {
            return Err(param(format!("filter width {w} not in 1..={}", self.max_len)));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(param(format!("keep probability {} not in (0, 1]", self.dropout_keep)));
        }
        if !(self.l2 >= 0.0) {
            return Err(param("l2 coefficient must be non-negative"));
        }
        Ok(())
    }
}

pub fn default_widths(max_len: usize) -> Vec<usize> {
    (1..=max_len.min(15)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticNet {
    config: CriticConfig,
    params: ParamSet,
    embedding: usize,
    convs: Vec<(usize, usize)>,
    highway: (usize, usize),
    gate: (usize, usize),
    head: (usize, usize),
}

impl CriticNet {
    pub fn zeros(config: CriticConfig) -> Result<Self> {
        config.validate()?;
        let (v, e, f, d) = (config.vocab_size, config.embed_dim, config.filters_per_width, config.feature_dim());
        let mut params = ParamSet::new();
        let embedding = params.push("disc.embedding", Array::zeros(&[v, e]), true);
        let convs = config
            .filter_widths
            .iter()
            .map(|&w| {
                let wi = params.push(format!("disc.conv{w}.weight"), Array::zeros(&[f, w, e]), true);
                let bi = params.push(format!("disc.conv{w}.bias"), Array::zeros(&[f]), false);
                (wi, bi)
            })
            .collect();
        let highway =
            (params.push("disc.highway.weight", Array::zeros(&[d, d]), true), params.push("disc.highway.bias", Array::zeros(&[d]), false));
        let gate = (params.push("disc.gate.weight", Array::zeros(&[d, d]), true), params.push("disc.gate.bias", Array::zeros(&[d]), false));
        let head = (params.push("disc.head.weight", Array::zeros(&[1, d]), true), params.push("disc.head.bias", Array::zeros(&[1]), false));
        Ok(Self { config, params, embedding, convs, highway, gate, head })
    }

    /// Gaussian weights (std 0.1), zero biases. A Wasserstein critic starts
    /// clipped.
    pub fn new<R: RngCore + ?Sized>(config: CriticConfig, clip: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        for p in net.params.iter_mut().filter(|p| p.decay) {
            for x in p.value.data_mut() {
                *x = 0.1 * rng::normal(rng);
            }
        }
        if net.config.mode == CriticMode::Wasserstein {
            check_clip(clip)?;
            net.params.clamp(clip);
        }
        Ok(net)
    }

    pub fn config(&self) -> &CriticConfig {
        &self.config
    }

    pub fn mode(&self) -> CriticMode {
        self.config.mode
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn check(&self, tokens: &[usize]) -> Result<()> {
        if tokens.len() != self.config.max_len {
            return Err(dim(format!("sequence length {} != {}", tokens.len(), self.config.max_len)));
        }
        match tokens.iter().find(|&&t| t >= self.config.vocab_size) {
            Some(&t) => Err(Error::TokenOutOfRange { id: t, size: self.config.vocab_size }),
            None => Ok(()),
        }
    }

    /// Head pre-activation, without dropout.
    pub fn logit(&self, tokens: &[usize]) -> Result<f64> {
        self.check(tokens)?;
        let e = self.config.embed_dim;
        let table = self.params.get(self.embedding);
        let mut x = Vec::with_capacity(tokens.len() * e);
        for &t in tokens {
            x.extend_from_slice(table.row(t));
        }
        let x = Array::from_vec(&[tokens.len(), e], x)?;
        let banks: Vec<ConvBank<'_>> =
            self.convs.iter().map(|&(w, b)| ConvBank { weight: self.params.get(w), bias: self.params.get(b) }).collect();
        let f = conv_maxpool(&banks, &x, Activation::Relu)?;
        Ok(self.head_logit(&f))
    }

    /// Highway layer and linear head on pooled features.
    fn head_logit(&self, f: &[f64]) -> f64 {
        let d = f.len();
        let (hw, hb) = (self.params.get(self.highway.0).data(), self.params.get(self.highway.1).data());
        let (gw, gb) = (self.params.get(self.gate.0).data(), self.params.get(self.gate.1).data());
        let mut out = vec![0.0; d];
        for k in 0..d {
            let h = (hb[k] + dot(&hw[k * d..(k + 1) * d], f)).max(0.0);
            let g = sigmoid(gb[k] + dot(&gw[k * d..(k + 1) * d], f));
            out[k] = g * h + (1.0 - g) * f[k];
        }
        self.params.get(self.head.1).data()[0] + dot(self.params.get(self.head.0).data(), &out)
    }

    /// `table[bank][(k * w + j) * V + v]`: filter `k`'s slice at offset `j`
    /// dotted with the embedding of token `v`. Convolving a sequence then
    /// needs only lookups and adds, which pays off once per batch.
    fn token_tables(&self) -> Vec<Vec<f64>> {
        let (v, e) = (self.config.vocab_size, self.config.embed_dim);
        let emb = self.params.get(self.embedding);
        self.convs
            .iter()
            .map(|&(wi, _)| {
                let weight = self.params.get(wi);
                let (f, w) = (weight.shape()[0], weight.shape()[1]);
                let mut t = Vec::with_capacity(f * w * v);
                for k in 0..f {
                    let row = weight.row(k);
                    for j in 0..w {
                        let slice = &row[j * e..(j + 1) * e];
                        t.extend((0..v).map(|tok| dot(slice, emb.row(tok))));
                    }
                }
                t
            })
            .collect()
    }

    fn logit_from_tables(&self, tables: &[Vec<f64>], tokens: &[usize]) -> Result<f64> {
        self.check(tokens)?;
        let (v, n) = (self.config.vocab_size, tokens.len());
        let mut f = Vec::with_capacity(self.config.feature_dim());
        for (&(wi, bi), table) in self.convs.iter().zip(tables) {
            let shape = self.params.get(wi).shape();
            let (filters, w) = (shape[0], shape[1]);
            let bias = self.params.get(bi).data();
            for k in 0..filters {
                let rows = &table[k * w * v..(k + 1) * w * v];
                let mut best = f64::NEG_INFINITY;
                for p in 0..=n - w {
                    let mut s = bias[k];
                    for (j, &tok) in tokens[p..p + w].iter().enumerate() {
                        s += rows[j * v + tok];
                    }
                    best = best.max(s.max(0.0));
                }
                f.push(best);
            }
        }
        Ok(self.head_logit(&f))
    }

    /// Probability of being real (classifier) or the raw critic value
    /// (Wasserstein). Deterministic: no dropout.
    pub fn score<S: AsRef<[usize]>>(&self, batch: &[S]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let tables = self.token_tables();
        batch
            .iter()
            .map(|s| {
                let z = self.logit_from_tables(&tables, s.as_ref())?;
                Ok(match self.config.mode {
                    CriticMode::Classifier => sigmoid(z),
                    CriticMode::Wasserstein => z,
                })
            })
            .collect()
    }

    /// Scores mapped to `[0, 1]`: the classifier probability itself, or the
    /// logistic of the critic value.
    pub fn reward<S: AsRef<[usize]>>(&self, batch: &[S]) -> Result<Vec<f64>> {
        let scores = self.score(batch)?;
        Ok(match self.config.mode {
            CriticMode::Classifier => scores,
            CriticMode::Wasserstein => scores.into_iter().map(sigmoid).collect(),
        })
    }

    /// Records the forward pass; `mask` is applied to the highway output.
    fn record<'t>(&'t self, tape: &mut Tape<'t>, tokens: &[usize], mask: Option<&[f64]>) -> Result<Var> {
        self.check(tokens)?;
        let emb = tape.param(self.embedding);
        let x = tape.rows(emb, tokens)?;
        let mut pooled = Vec::with_capacity(self.convs.len());
        for &(w, b) in &self.convs {
            let (w, b) = (tape.param(w), tape.param(b));
            let c = tape.conv1d(x, w, b)?;
            let c = tape.relu(c);
            pooled.push(tape.max_over_time(c)?);
        }
        let f = tape.concat(&pooled);
        let (hw, hb) = (tape.param(self.highway.0), tape.param(self.highway.1));
        let h = tape.affine(hw, f, hb)?;
        let h = tape.relu(h);
        let (gw, gb) = (tape.param(self.gate.0), tape.param(self.gate.1));
        let g = tape.affine(gw, f, gb)?;
        let g = tape.sigmoid(g);
        let carry = tape.one_minus(g);
        let a = tape.mul(g, h)?;
        let b = tape.mul(carry, f)?;
        let mut out = tape.add(a, b)?;
        if let Some(m) = mask {
            out = tape.mask(out, m)?;
        }
        let (ow, ob) = (tape.param(self.head.0), tape.param(self.head.1));
        tape.affine(ow, out, ob)
    }

    /// Mean binary cross-entropy (real labelled 1, fake 0) plus the L2 term,
    /// and its gradient. Dropout masks are drawn from `rng` when given.
    pub fn classifier_gradient<S: AsRef<[usize]>, R: RngCore + ?Sized>(
        &self,
        real: &[S],
        fake: &[S],
        mut rng: Option<&mut R>,
    ) -> Result<(f64, Grads)> {
        if real.is_empty() || fake.is_empty() {
            return Err(param("classifier step needs non-empty real and fake batches"));
        }
        let n = (real.len() + fake.len()) as f64;
        let d = self.config.feature_dim();
        let mut grads = Grads::zeros_like(&self.params);
        let mut total = 0.0;
        let labelled = real.iter().map(|s| (s, 1.0)).chain(fake.iter().map(|s| (s, 0.0)));
        for (s, label) in labelled {
            let mask = match rng.as_deref_mut() {
                Some(r) => Some(dropout_mask(d, self.config.dropout_keep, r)?.into_data()),
                None => None,
            };
            let mut tape = Tape::new(&self.params);
            let z = self.record(&mut tape, s.as_ref(), mask.as_deref())?;
            let loss = tape.bce_with_logits(z, label)?;
            total += tape.value(loss).data()[0];
            grads.add_scaled(&tape.backward(loss)?, 1.0);
        }
        grads.scale(1.0 / n);
        l2_gradient(&self.params, self.config.l2, &mut grads);
        Ok((total / n + l2_penalty(&self.params, self.config.l2), grads))
    }

    /// One classifier step with dropout; returns the pre-update loss.
    pub fn train_step_classifier<S: AsRef<[usize]>, R: RngCore + ?Sized>(
        &mut self,
        real: &[S],
        fake: &[S],
        opt: &mut AdamState,
        rng: &mut R,
    ) -> Result<f64> {
        self.require(CriticMode::Classifier)?;
        let (loss, grads) = self.classifier_gradient(real, fake, Some(rng))?;
        if !loss.is_finite() {
            return Err(Error::State(String::from("critic loss is not finite")));
        }
        opt.step(&mut self.params, &grads)?;
        Ok(loss)
    }

    /// `mean(score(real)) - mean(score(fake))` and the gradient of its
    /// negation.
    pub fn wasserstein_gradient<S: AsRef<[usize]>>(&self, real: &[S], fake: &[S]) -> Result<(f64, Grads)> {
        if real.is_empty() || fake.is_empty() {
            return Err(param("critic step needs non-empty real and fake batches"));
        }
        let mut grads = Grads::zeros_like(&self.params);
        let mut objective = 0.0;
        for (batch, sign) in [(real, -1.0), (fake, 1.0)] {
            let w = sign / batch.len() as f64;
            for s in batch {
                let mut tape = Tape::new(&self.params);
                let z = self.record(&mut tape, s.as_ref(), None)?;
                let out = tape.sum(z);
                objective -= w * tape.value(out).data()[0];
                grads.add_scaled(&tape.backward(out)?, w);
            }
        }
        Ok((objective, grads))
    }

    /// One critic ascent step followed by clipping every parameter to
    /// `[-clip, clip]`. Returns the pre-update objective.
    pub fn train_step_wasserstein<S: AsRef<[usize]>>(&mut self, real: &[S], fake: &[S], opt: &mut AdamState, clip: f64) -> Result<f64> {
        self.require(CriticMode::Wasserstein)?;
        check_clip(clip)?;
        let (objective, grads) = self.wasserstein_gradient(real, fake)?;
        if !objective.is_finite() {
            return Err(Error::State(String::from("critic objective is not finite")));
        }
        opt.step(&mut self.params, &grads)?;
        self.params.clamp(clip);
        Ok(objective)
    }

    fn require(&self, mode: CriticMode) -> Result<()> {
        if self.config.mode == mode {
            Ok(())
        } else {
            Err(Error::State(format!("critic is in {} mode", self.config.mode.name())))
        }
    }
}

fn check_clip(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(param(format!("clip value {c} must be positive")))
    }
}
