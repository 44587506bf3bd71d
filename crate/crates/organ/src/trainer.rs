//! MLE pretraining of both networks, then adversarial epochs in which the
//! generator follows REINFORCE on the mixed reward and the critic keeps
//! learning to separate corpus sequences from samples.

use std::sync::Arc;

use organ_core::discriminator::{default_widths, CriticConfig, CriticMode, CriticNet};
use organ_core::generator::{GeneratorShape, PolicyNet};
use organ_core::mol::{self, FragmentTable};
use organ_core::nn::AdamState;
use organ_core::objectives::{self, Objective, Task};
use organ_core::reward::{OrganReward, RewardSpec};
use organ_core::rng::{self, tag, RngCore};
use organ_core::{TokenSequence, Vocabulary};

use crate::checkpoint::Checkpoint;
use crate::config::TrainConfig;
use crate::corpus::{read_lines, Corpus};
use crate::error::{OrganError, Result};
use crate::evaluate::{mean_nll, reference_subset, Evaluator};
use crate::report::MetricReport;

/// Held corpus sequences used for the `nll` column.
const NLL_SEQUENCES: usize = 256;

/// Stream indices that keep pretraining and adversarial draws apart.
const PHASE_GEN: u64 = 0;
const PHASE_DISC: u64 = 1;
const PHASE_ADV: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainRow {
    pub phase: &'static str,
    pub epoch: usize,
    pub loss: f64,
}

pub struct Trainer {
    pub config: TrainConfig,
    pub corpus: Corpus,
    pub generator: PolicyNet,
    pub critic: CriticNet,
    pub mle_opt: AdamState,
    pub pg_opt: AdamState,
    pub critic_opt: AdamState,
    pub fragments: Option<Arc<FragmentTable>>,
    /// Adversarial epochs completed.
    pub epoch: usize,
    /// Decoded samples behind the latest adversarial report.
    pub last_samples: Vec<String>,
    evaluator: Evaluator,
    reward_objectives: Vec<Box<dyn Objective>>,
    spec: RewardSpec,
    nll_held: Vec<TokenSequence>,
}

fn critic_config(config: &TrainConfig, vocab: &Vocabulary, max_len: usize) -> CriticConfig {
    let mut widths = default_widths(max_len);
    widths.retain(|&w| w <= config.critic_max_width);
    CriticConfig {
        filter_widths: widths,
        filters_per_width: config.critic_filters,
        dropout_keep: config.dropout_keep,
        l2: config.l2,
        ..CriticConfig::new(vocab.size(), max_len, config.embed_dim, config.mode)
    }
}

fn reward_spec(config: &TrainConfig) -> Result<RewardSpec> {
    let spec = RewardSpec {
        lambda: config.lambda,
        objectives: config.objective_names(),
        schedule: config.schedule,
        uniqueness_penalty: config.uniqueness_penalty,
        invalid_reward: config.invalid_reward,
    };
    spec.validate()?;
    Ok(spec)
}

/// Fragment frequencies from the fragment corpus (or the training corpus),
/// when it has enough valid molecules.
fn fragment_table(config: &TrainConfig, corpus: &Corpus) -> Result<Option<FragmentTable>> {
    if config.task != Task::Molecules {
        return Ok(None);
    }
    let lines = match &config.fragment_corpus {
        Some(p) => read_lines(p)?,
        None => corpus.lines.clone(),
    };
    let mols: Vec<mol::Molecule> = lines.iter().filter_map(|l| mol::parse_smiles(l).ok()).collect();
    if mols.len() < mol::sascore::MIN_CORPUS {
        if config.objective_names().iter().any(|n| n == "synthesizability") {
            return Err(OrganError::Config(format!(
                "synthesizability needs at least {} valid molecules in the fragment corpus, found {}",
                mol::sascore::MIN_CORPUS,
                mols.len()
            )));
        }
        return Ok(None);
    }
    Ok(Some(FragmentTable::build(&mols)?))
}

/// Decoded batch for a divergence report.
fn dump(vocab: &Vocabulary, batch: &[Vec<usize>]) -> String {
    batch.iter().map(|s| vocab.decode_tokens(s).unwrap_or_else(|_| format!("{s:?}"))).collect::<Vec<_>>().join("\n")
}

impl Trainer {
    /// Fresh networks on the configured corpus.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let corpus = Corpus::load(&config.corpus, config.max_len_slack())?;
        let shape = GeneratorShape {
            vocab_size: corpus.vocab.size(),
            max_len: corpus.max_len,
            embed_dim: config.embed_dim,
            hidden_dim: config.hidden_dim,
        };
        let generator = PolicyNet::new(shape, &mut rng::stream(rng::derive(config.seed, &[0]), tag::INIT));
        let critic = CriticNet::new(
            critic_config(&config, &corpus.vocab, corpus.max_len),
            config.clip,
            &mut rng::stream(rng::derive(config.seed, &[1]), tag::INIT),
        )?;
        let fragments = fragment_table(&config, &corpus)?;
        let ckpt = Checkpoint {
            mle_opt: AdamState::new(generator.params(), config.mle_lr),
            pg_opt: AdamState::new(generator.params(), config.pg_lr),
            critic_opt: AdamState::new(critic.params(), config.critic_lr),
            vocab: corpus.vocab.clone(),
            config: config.clone(),
            epoch: 0,
            generator,
            critic,
            fragments,
        };
        Self::assemble(ckpt, config, corpus)
    }

    /// Resumes from a checkpoint under `config`, which may change the
    /// reward, schedule and loop settings but not the network shapes. The
    /// corpus is re-encoded with the checkpoint's vocabulary.
    pub fn from_checkpoint(ckpt: Checkpoint, mut config: TrainConfig) -> Result<Self> {
        if config.corpus.as_os_str().is_empty() {
            config.corpus = ckpt.config.corpus.clone();
        }
        config.validate()?;
        if config.task != ckpt.config.task {
            return Err(OrganError::Config(format!(
                "checkpoint was trained on {}, config says {}",
                ckpt.config.task.name(),
                config.task.name()
            )));
        }
        if config.mode != ckpt.critic.mode() {
            return Err(OrganError::Config(format!(
                "checkpoint critic is {}, config says {}",
                ckpt.critic.mode().name(),
                config.mode.name()
            )));
        }
        let corpus = Corpus::with_vocab(read_lines(&config.corpus)?, ckpt.vocab.clone(), ckpt.max_len())?;
        let mut ckpt = ckpt;
        if ckpt.fragments.is_none() {
            ckpt.fragments = fragment_table(&config, &corpus)?;
        }
        ckpt.pg_opt.learning_rate = config.pg_lr;
        ckpt.critic_opt.learning_rate = config.critic_lr;
        ckpt.mle_opt.learning_rate = config.mle_lr;
        Self::assemble(ckpt, config, corpus)
    }

    fn assemble(ckpt: Checkpoint, config: TrainConfig, corpus: Corpus) -> Result<Self> {
        let fragments = ckpt.fragments.map(Arc::new);
        let spec = reward_spec(&config)?;
        let reward_objectives =
            spec.objectives.iter().map(|n| objectives::lookup(n, fragments.as_ref())).collect::<organ_core::Result<Vec<_>>>()?;
        let reference = match config.task {
            Task::Molecules => reference_subset(&corpus.lines, config.reference_size, config.seed),
            Task::Music => Vec::new(),
        };
        let evaluator = Evaluator::new(config.task, fragments.as_ref(), &reference)?;
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        rng::shuffle(&mut rng::stream(rng::derive(config.seed, &[1]), tag::REFERENCE), &mut order);
        let nll_held = order.iter().take(NLL_SEQUENCES).map(|&i| corpus.sequences[i].clone()).collect();
        Ok(Self {
            config,
            corpus,
            generator: ckpt.generator,
            critic: ckpt.critic,
            mle_opt: ckpt.mle_opt,
            pg_opt: ckpt.pg_opt,
            critic_opt: ckpt.critic_opt,
            fragments,
            epoch: ckpt.epoch,
            last_samples: Vec::new(),
            evaluator,
            reward_objectives,
            spec,
            nll_held,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            vocab: self.corpus.vocab.clone(),
            epoch: self.epoch,
            generator: self.generator.clone(),
            critic: self.critic.clone(),
            mle_opt: self.mle_opt.clone(),
            pg_opt: self.pg_opt.clone(),
            critic_opt: self.critic_opt.clone(),
            fragments: self.fragments.as_deref().cloned(),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.corpus.vocab
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn reward_spec(&self) -> &RewardSpec {
        &self.spec
    }

    fn shuffled_batches(&self, parts: &[u64]) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.corpus.len()).collect();
        rng::shuffle(&mut rng::stream(rng::derive(self.config.seed, parts), tag::SHUFFLE), &mut order);
        order.chunks(self.config.batch_size).map(<[usize]>::to_vec).collect()
    }

    fn fakes(&self, n: usize, parts: &[u64]) -> Result<Vec<TokenSequence>> {
        let raw = self.generator.sample_batch(n, &mut rng::stream(rng::derive(self.config.seed, parts), tag::SAMPLE));
        Ok(raw.iter().map(|s| TokenSequence::from_generated(s, &self.corpus.vocab)).collect::<organ_core::Result<Vec<_>>>()?)
    }

    /// One pass of teacher-forced MLE over the shuffled corpus; returns the
    /// mean batch loss.
    pub fn pretrain_generator_epoch(&mut self, epoch: usize) -> Result<f64> {
        let batches = self.shuffled_batches(&[PHASE_GEN, epoch as u64]);
        let mut total = 0.0;
        for idx in &batches {
            let batch: Vec<TokenSequence> = idx.iter().map(|&i| self.corpus.sequences[i].clone()).collect();
            let loss = self.generator.mle_step(&batch, &mut self.mle_opt)?;
            if !loss.is_finite() {
                let raw: Vec<Vec<usize>> = batch.iter().map(|s| s.tokens().to_vec()).collect();
                return Err(OrganError::Diverged(format!(
                    "MLE loss {loss} in pretraining epoch {epoch} on batch:\n{}",
                    dump(&self.corpus.vocab, &raw)
                )));
            }
            total += loss;
        }
        Ok(total / batches.len() as f64)
    }

    /// One critic step on `real` against `fake`.
    fn critic_step(&mut self, real: &[TokenSequence], fake: &[TokenSequence], dropout: &mut dyn RngCore, context: &str) -> Result<f64> {
        let result = match self.critic.mode() {
            CriticMode::Classifier => self.critic.train_step_classifier(real, fake, &mut self.critic_opt, dropout),
            CriticMode::Wasserstein => self.critic.train_step_wasserstein(real, fake, &mut self.critic_opt, self.config.clip),
        };
        match result {
            Ok(loss) if loss.is_finite() => Ok(loss),
            Ok(loss) => Err(self.diverged_critic(&format!("critic loss {loss}"), fake, context)),
            Err(organ_core::Error::State(m)) => Err(self.diverged_critic(&m, fake, context)),
            Err(e) => Err(e.into()),
        }
    }

    fn diverged_critic(&self, what: &str, fake: &[TokenSequence], context: &str) -> OrganError {
        let raw: Vec<Vec<usize>> = fake.iter().map(|s| s.tokens().to_vec()).collect();
        OrganError::Diverged(format!("{what} in {context}; generated batch:\n{}", dump(&self.corpus.vocab, &raw)))
    }

    /// One pass over the shuffled corpus, each real batch paired with as
    /// many fresh samples.
    pub fn pretrain_critic_epoch(&mut self, epoch: usize) -> Result<f64> {
        let batches = self.shuffled_batches(&[PHASE_DISC, epoch as u64]);
        let mut total = 0.0;
        for (b, idx) in batches.iter().enumerate() {
            let real: Vec<TokenSequence> = idx.iter().map(|&i| self.corpus.sequences[i].clone()).collect();
            let parts = [PHASE_DISC, epoch as u64, b as u64];
            let fake = self.fakes(real.len(), &parts)?;
            let mut dropout = rng::stream(rng::derive(self.config.seed, &parts), tag::DROPOUT);
            total += self.critic_step(&real, &fake, &mut dropout, &format!("critic pretraining epoch {epoch}"))?;
        }
        Ok(total / batches.len() as f64)
    }

    /// Generator MLE epochs, then critic epochs against the pretrained
    /// generator.
    pub fn pretrain(&mut self, log: &mut dyn FnMut(&PretrainRow)) -> Result<()> {
        for epoch in 0..self.config.pretrain_gen_epochs {
            let loss = self.pretrain_generator_epoch(epoch)?;
            log(&PretrainRow { phase: "generator", epoch: epoch + 1, loss });
        }
        for epoch in 0..self.config.pretrain_disc_epochs {
            let loss = self.pretrain_critic_epoch(epoch)?;
            log(&PretrainRow { phase: "critic", epoch: epoch + 1, loss });
        }
        Ok(())
    }

    /// The objective in force this epoch, or none when the critic alone
    /// decides the reward.
    pub fn current_objective(&self) -> Option<&dyn Objective> {
        if self.spec.lambda == 1.0 || self.reward_objectives.is_empty() {
            return None;
        }
        Some(self.reward_objectives[self.spec.objective_for_epoch(self.epoch)].as_ref())
    }

    /// One adversarial epoch followed by an evaluation snapshot.
    pub fn adversarial_epoch(&mut self) -> Result<MetricReport> {
        let e = self.epoch as u64;
        for g in 0..self.config.g_steps as u64 {
            let batch = self
                .generator
                .sample_batch(self.config.batch_size, &mut rng::stream(rng::derive(self.config.seed, &[PHASE_ADV, e, g]), tag::SAMPLE));
            let reward =
                OrganReward { spec: &self.spec, critic: &self.critic, objective: self.current_objective(), vocab: &self.corpus.vocab };
            let q = self.generator.q_values(
                &batch,
                self.config.rollouts,
                &reward,
                rng::derive(self.config.seed, &[PHASE_ADV, e, g, tag::ROLLOUT]),
            );
            let q = match q {
                Ok(q) => q,
                Err(organ_core::Error::Reward) => {
                    return Err(OrganError::Diverged(format!(
                        "non-finite reward in epoch {e} on batch:\n{}",
                        dump(&self.corpus.vocab, &batch)
                    )))
                }
                Err(err) => return Err(err.into()),
            };
            match self.generator.policy_gradient_step(&batch, &q, self.config.baseline, &mut self.pg_opt) {
                Ok(_) => {}
                Err(organ_core::Error::Reward) => {
                    return Err(OrganError::Diverged(format!(
                        "non-finite policy gradient in epoch {e} on batch:\n{}",
                        dump(&self.corpus.vocab, &batch)
                    )))
                }
                Err(err) => return Err(err.into()),
            }
        }
        let mut d_total = 0.0;
        let d_steps = self.config.d_steps();
        for d in 0..d_steps as u64 {
            let parts = [PHASE_ADV, e, d, 1];
            let mut pick = rng::stream(rng::derive(self.config.seed, &parts), tag::SHUFFLE);
            let real: Vec<TokenSequence> = (0..self.config.batch_size)
                .map(|_| self.corpus.sequences[(pick.next_u64() % self.corpus.len() as u64) as usize].clone())
                .collect();
            let fake = self.fakes(self.config.batch_size, &parts)?;
            let mut dropout = rng::stream(rng::derive(self.config.seed, &parts), tag::DROPOUT);
            d_total += self.critic_step(&real, &fake, &mut dropout, &format!("adversarial epoch {e}"))?;
        }
        self.epoch += 1;
        let (texts, mut report) = self.evaluate(self.config.eval_samples, rng::derive(self.config.seed, &[PHASE_ADV, e]))?;
        report.d_loss = Some(d_total / d_steps as f64);
        self.last_samples = texts;
        Ok(report)
    }

    /// Runs the configured number of adversarial epochs. `on_epoch` sees
    /// the trainer after each epoch, e.g. to write checkpoints.
    pub fn train_adversarial(&mut self, on_epoch: &mut dyn FnMut(&Trainer, &MetricReport) -> Result<()>) -> Result<Vec<MetricReport>> {
        let mut reports = Vec::with_capacity(self.config.adversarial_epochs);
        for _ in 0..self.config.adversarial_epochs {
            let r = self.adversarial_epoch()?;
            on_epoch(self, &r)?;
            reports.push(r);
        }
        Ok(reports)
    }

    /// Samples `count` sequences from the `seed` evaluation stream and
    /// reports on them. Returns the decoded samples too.
    pub fn evaluate(&self, count: usize, seed: u64) -> Result<(Vec<String>, MetricReport)> {
        let (texts, mut report) = self.evaluator.sample_and_score(&self.generator, &self.corpus.vocab, count, seed)?;
        report.epoch = self.epoch;
        report.nll = mean_nll(&self.generator, &self.nll_held)?;
        Ok((texts, report))
    }
}

/// Adversarial training from the same checkpoint once per `lambda`, each
/// run on fresh state.
pub fn lambda_sweep(ckpt: &Checkpoint, config: &TrainConfig, lambdas: &[f64]) -> Result<Vec<(f64, Vec<MetricReport>)>> {
    if lambdas.len() < 2 {
        return Err(OrganError::Config("a sweep needs at least two lambda values".into()));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let run = TrainConfig { lambda, ..config.clone() };
            let mut t = Trainer::from_checkpoint(ckpt.clone(), run)?;
            Ok((lambda, t.train_adversarial(&mut |_, _| Ok(()))?))
        })
        .collect()
}
