//! Sampling a generator and scoring the samples.

use std::collections::HashMap;
use std::sync::Arc;

use organ_core::generator::PolicyNet;
use organ_core::mol::{self, Fingerprint, FragmentTable};
use organ_core::music::{self, MelodyTokens};
use organ_core::objectives::{self, Objective, Task};
use organ_core::rng::{self, tag};
use organ_core::Vocabulary;

use crate::error::Result;
use crate::report::MetricReport;

/// Molecules are compared against a fingerprinted reference subset of the
/// corpus; melodies against each other.
pub struct Evaluator {
    task: Task,
    objectives: Vec<Box<dyn Objective>>,
    reference: Vec<Fingerprint>,
}

/// The objectives evaluation reports for a task. Synthesizability needs a
/// fragment table and is left out without one.
pub fn report_objectives(task: Task, table: Option<&Arc<FragmentTable>>) -> Vec<&'static str> {
    task.objectives().iter().copied().filter(|&n| n != "synthesizability" || table.is_some()).collect()
}

/// Up to `size` parseable molecules from `lines`, in an order drawn from
/// `seed`.
pub fn reference_subset(lines: &[String], size: usize, seed: u64) -> Vec<mol::Molecule> {
    let mut order: Vec<usize> = (0..lines.len()).collect();
    rng::shuffle(&mut rng::stream(seed, tag::REFERENCE), &mut order);
    order.into_iter().filter_map(|i| mol::parse_smiles(&lines[i]).ok()).take(size).collect()
}

impl Evaluator {
    pub fn new(task: Task, table: Option<&Arc<FragmentTable>>, reference: &[mol::Molecule]) -> Result<Self> {
        let objectives =
            report_objectives(task, table).into_iter().map(|n| objectives::lookup(n, table)).collect::<organ_core::Result<Vec<_>>>()?;
        Ok(Self { task, objectives, reference: reference.iter().map(mol::fingerprint).collect() })
    }

    pub fn objective_names(&self) -> Vec<String> {
        self.objectives.iter().map(|o| o.name().to_string()).collect()
    }

    /// Scores decoded samples. `nll` and `d_loss` are left for the caller.
    pub fn score_texts(&self, texts: &[String]) -> Result<MetricReport> {
        let n = texts.len();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in texts {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let duplicated = texts.iter().filter(|t| counts[t.as_str()] > 1).count();
        let mean_len = if n == 0 { 0.0 } else { texts.iter().map(|t| t.chars().count()).sum::<usize>() as f64 / n as f64 };

        let (valid, diversity): (Vec<&String>, f64) = match self.task {
            Task::Molecules => {
                let parsed: Vec<(&String, mol::Molecule)> =
                    texts.iter().filter(|t| !t.is_empty()).filter_map(|t| mol::parse_smiles(t).ok().map(|m| (t, m))).collect();
                let diversity = if parsed.is_empty() || self.reference.is_empty() {
                    0.0
                } else {
                    let mut total = 0.0;
                    for (_, m) in &parsed {
                        total += mol::diversity(&mol::fingerprint(m), &self.reference)?;
                    }
                    total / parsed.len() as f64
                };
                (parsed.into_iter().map(|(t, _)| t).collect(), diversity)
            }
            Task::Music => {
                let parsed: Vec<(&String, MelodyTokens)> =
                    texts.iter().filter_map(|t| MelodyTokens::parse(t).ok().map(|m| (t, m))).collect();
                let melodies: Vec<MelodyTokens> = parsed.iter().map(|(_, m)| m.clone()).collect();
                let diversity = if melodies.len() < 2 { 0.0 } else { music::edit_diversity(&melodies)? };
                (parsed.into_iter().map(|(t, _)| t).collect(), diversity)
            }
        };

        let objectives = self
            .objectives
            .iter()
            .map(|o| {
                let scores: Vec<f64> = valid.iter().filter_map(|t| o.score(t)).collect();
                let mean = if scores.is_empty() { 0.0 } else { scores.iter().sum::<f64>() / scores.len() as f64 };
                (o.name().to_string(), mean)
            })
            .collect();

        Ok(MetricReport {
            epoch: 0,
            nll: f64::NAN,
            d_loss: None,
            validity: if n == 0 { 0.0 } else { valid.len() as f64 / n as f64 },
            diversity,
            objectives,
            mean_len,
            dup_frac: if n == 0 { 0.0 } else { duplicated as f64 / n as f64 },
            samples: n,
        })
    }

    /// Draws `count` samples from the `EVAL` stream of `seed` and scores
    /// them.
    pub fn sample_and_score(
        &self,
        generator: &PolicyNet,
        vocab: &Vocabulary,
        count: usize,
        seed: u64,
    ) -> Result<(Vec<String>, MetricReport)> {
        let texts = sample_texts(generator, vocab, count, seed)?;
        let report = self.score_texts(&texts)?;
        Ok((texts, report))
    }
}

pub fn sample_texts(generator: &PolicyNet, vocab: &Vocabulary, count: usize, seed: u64) -> Result<Vec<String>> {
    let batch = generator.sample_batch(count, &mut rng::stream(seed, tag::EVAL));
    Ok(batch.iter().map(|s| vocab.decode_tokens(s)).collect::<organ_core::Result<Vec<_>>>()?)
}

/// Mean per-token NLL of `sequences` under `generator`.
pub fn mean_nll(generator: &PolicyNet, sequences: &[organ_core::TokenSequence]) -> Result<f64> {
    if sequences.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    let mut tokens = 0usize;
    for s in sequences {
        total -= generator.log_prob(s.tokens())?;
        tokens += s.len();
    }
    Ok(total / tokens as f64)
}
