//! The training reward: a mixture of the critic's reward and a domain
//! objective, with duplicates in a batch sharing one copy's reward.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::discriminator::CriticNet;
use crate::error::{param, Error, Result};
use crate::generator::BatchReward;
use crate::objectives::Objective;
use crate::vocab::{TokenSequence, Vocabulary};

/// Which objective is active in a given adversarial epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Fixed(usize),
    Rotate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    pub lambda: f64,
    pub objectives: Vec<String>,
    pub schedule: Schedule,
    pub uniqueness_penalty: bool,
    pub invalid_reward: f64,
}

impl RewardSpec {
    pub fn new(lambda: f64, objectives: Vec<String>) -> Result<Self> {
        let spec = Self { lambda, objectives, schedule: Schedule::Rotate, uniqueness_penalty: true, invalid_reward: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(param(format!("lambda {} not in [0, 1]", self.lambda)));
        }
        if self.lambda < 1.0 && self.objectives.is_empty() {
            return Err(param("lambda < 1 needs at least one objective"));
        }
        if !(0.0..=1.0).contains(&self.invalid_reward) {
            return Err(param(format!("invalid reward {} not in [0, 1]", self.invalid_reward)));
        }
        if let Schedule::Fixed(i) = self.schedule {
            if i >= self.objectives.len().max(1) {
                return Err(param(format!("fixed objective index {i} out of range")));
            }
        }
        Ok(())
    }

    /// Index of the objective in force during `epoch`.
    pub fn objective_for_epoch(&self, epoch: usize) -> usize {
        match self.schedule {
            Schedule::Fixed(i) => i,
            Schedule::Rotate => epoch % self.objectives.len().max(1),
        }
    }
}

/// `lambda * critic + (1 - lambda) * objective`, with the endpoints returning
/// one input untouched.
pub fn mixed_reward(lambda: f64, critic: &[f64], objective: &[f64]) -> Result<Vec<f64>> {
    if critic.len() != objective.len() {
        return Err(Error::Contract(format!("{} critic rewards, {} objective values", critic.len(), objective.len())));
    }
    Ok(if lambda == 1.0 {
        critic.to_vec()
    } else if lambda == 0.0 {
        objective.to_vec()
    } else {
        critic.iter().zip(objective).map(|(d, o)| lambda * d + (1.0 - lambda) * o).collect()
    })
}

/// Divides each reward by the number of exact copies of its sequence in the
/// batch.
pub fn apply_uniqueness_penalty<S: AsRef<[usize]>>(rewards: &[f64], batch: &[S]) -> Result<Vec<f64>> {
    if rewards.len() != batch.len() {
        return Err(Error::Contract(format!("{} rewards for {} sequences", rewards.len(), batch.len())));
    }
    let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for s in batch {
        *counts.entry(s.as_ref()).or_default() += 1;
    }
    Ok(rewards
        .iter()
        .zip(batch)
        .map(|(&r, s)| match counts[s.as_ref()] {
            1 => r,
            k => r / k as f64,
        })
        .collect())
}

/// Decodes every sequence and scores it; strings the objective rejects get
/// `invalid_reward`.
pub fn evaluate_objective<S: AsRef<[usize]>>(
    objective: &dyn Objective,
    batch: &[S],
    vocab: &Vocabulary,
    invalid_reward: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|s| {
            let text = vocab.decode_tokens(s.as_ref())?;
            Ok(objective.score(&text).map_or(invalid_reward, |v| v.clamp(0.0, 1.0)))
        })
        .collect()
}

/// Anything that maps a batch of full-length sequences to rewards in
/// `[0, 1]`.
pub trait Critic: Sync {
    fn critic_rewards(&self, batch: &[TokenSequence]) -> Result<Vec<f64>>;
}

impl Critic for CriticNet {
    fn critic_rewards(&self, batch: &[TokenSequence]) -> Result<Vec<f64>> {
        self.reward(batch)
    }
}

/// The reward the generator is trained on during one epoch.
pub struct OrganReward<'a, C: Critic + ?Sized> {
    pub spec: &'a RewardSpec,
    pub critic: &'a C,
    pub objective: Option<&'a dyn Objective>,
    pub vocab: &'a Vocabulary,
}

impl<C: Critic + ?Sized> OrganReward<'_, C> {
    /// Rewards for normalised sequences. The critic is not consulted when
    /// `lambda` is 0, nor the objective when it is 1.
    pub fn rewards(&self, batch: &[TokenSequence]) -> Result<Vec<f64>> {
        let lambda = self.spec.lambda;
        let critic = if lambda > 0.0 { self.critic.critic_rewards(batch)? } else { Vec::new() };
        let objective = if lambda < 1.0 {
            let o = self.objective.ok_or_else(|| param("no objective for lambda < 1"))?;
            evaluate_objective(o, batch, self.vocab, self.spec.invalid_reward)?
        } else {
            Vec::new()
        };
        let mixed = if lambda == 1.0 {
            critic
        } else if lambda == 0.0 {
            objective
        } else {
            mixed_reward(lambda, &critic, &objective)?
        };
        if mixed.len() != batch.len() {
            return Err(Error::Contract(format!("{} rewards for {} sequences", mixed.len(), batch.len())));
        }
        if self.spec.uniqueness_penalty {
            apply_uniqueness_penalty(&mixed, batch)
        } else {
            Ok(mixed)
        }
    }
}

impl<C: Critic + ?Sized> BatchReward for OrganReward<'_, C> {
    fn rewards(&self, batch: &[Vec<usize>]) -> Result<Vec<f64>> {
        let normalised = batch.iter().map(|s| TokenSequence::from_generated(s, self.vocab)).collect::<Result<Vec<_>>>()?;
        OrganReward::rewards(self, &normalised)
    }
}
