//! Flat `key = value` run configuration. Every field is addressable by
//! name and unknown keys are rejected.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use organ_core::discriminator::CriticMode;
use organ_core::objectives::Task;
use organ_core::reward::Schedule;

use crate::error::{OrganError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub corpus: PathBuf,
    /// Molecules for the fragment table; the training corpus when unset.
    pub fragment_corpus: Option<PathBuf>,
    pub task: Task,
    pub lambda: f64,
    /// Objectives for the reward, in rotation order. Empty means every
    /// objective the task reports.
    pub objectives: Vec<String>,
    pub schedule: Schedule,
    pub uniqueness_penalty: bool,
    pub invalid_reward: f64,
    pub pretrain_gen_epochs: usize,
    pub pretrain_disc_epochs: usize,
    pub adversarial_epochs: usize,
    pub g_steps: usize,
    /// Critic batches per adversarial epoch; by default 1 for the
    /// classifier and 5 for the Wasserstein critic.
    pub d_steps: Option<usize>,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub critic_filters: usize,
    pub critic_max_width: usize,
    pub dropout_keep: f64,
    pub l2: f64,
    pub mle_lr: f64,
    pub critic_lr: f64,
    pub pg_lr: f64,
    pub rollouts: usize,
    pub baseline: f64,
    pub mode: CriticMode,
    pub clip: f64,
    pub seed: u64,
    /// Extra room over the longest corpus line; 0.1 for molecules and 0
    /// for melodies by default.
    pub max_len_slack: Option<f64>,
    pub eval_samples: usize,
    pub reference_size: usize,
    /// Write `model.ckpt` every this many adversarial epochs (0: at the end
    /// only).
    pub checkpoint_every: usize,
    pub sweep_lambdas: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::new(),
            fragment_corpus: None,
            task: Task::Molecules,
            lambda: 0.5,
            objectives: Vec::new(),
            schedule: Schedule::Rotate,
            uniqueness_penalty: true,
            invalid_reward: 0.0,
            pretrain_gen_epochs: 250,
            pretrain_disc_epochs: 10,
            adversarial_epochs: 100,
            g_steps: 1,
            d_steps: None,
            batch_size: 64,
            hidden_dim: 64,
            embed_dim: 32,
            critic_filters: 10,
            critic_max_width: 15,
            dropout_keep: 0.25,
            l2: 1e-4,
            mle_lr: 1e-3,
            critic_lr: 1e-3,
            pg_lr: 1e-4,
            rollouts: 16,
            baseline: 0.0,
            mode: CriticMode::Classifier,
            clip: 0.01,
            seed: 0,
            max_len_slack: None,
            eval_samples: 1000,
            reference_size: 500,
            checkpoint_every: 0,
            sweep_lambdas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| OrganError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(OrganError::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

fn auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show_auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl TrainConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "corpus" => self.corpus = PathBuf::from(value),
            "fragment_corpus" => self.fragment_corpus = if value.is_empty() || value == "auto" { None } else { Some(PathBuf::from(value)) },
            "task" => self.task = Task::parse(value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "objectives" => self.objectives = list(value).map(str::to_string).collect(),
            "schedule" => {
                self.schedule = match value {
                    "rotate" => Schedule::Rotate,
                    v => match v.strip_prefix("fixed:") {
                        Some(i) => Schedule::Fixed(parse(key, i)?),
                        None => return Err(OrganError::Config(format!("schedule: expected rotate or fixed:N, got {v:?}"))),
                    },
                }
            }
            "uniqueness_penalty" => self.uniqueness_penalty = parse_bool(key, value)?,
            "invalid_reward" => self.invalid_reward = parse(key, value)?,
            "pretrain_gen_epochs" => self.pretrain_gen_epochs = parse(key, value)?,
            "pretrain_disc_epochs" => self.pretrain_disc_epochs = parse(key, value)?,
            "adversarial_epochs" => self.adversarial_epochs = parse(key, value)?,
            "g_steps" => self.g_steps = parse(key, value)?,
            "d_steps" => self.d_steps = auto(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "critic_filters" => self.critic_filters = parse(key, value)?,
            "critic_max_width" => self.critic_max_width = parse(key, value)?,
            "dropout_keep" => self.dropout_keep = parse(key, value)?,
            "l2" => self.l2 = parse(key, value)?,
            "mle_lr" => self.mle_lr = parse(key, value)?,
            "critic_lr" => self.critic_lr = parse(key, value)?,
            "pg_lr" => self.pg_lr = parse(key, value)?,
            "rollouts" => self.rollouts = parse(key, value)?,
            "baseline" => self.baseline = parse(key, value)?,
            "mode" => {
                self.mode =
                    CriticMode::parse(value).map_err(|_| OrganError::Config(format!("mode: expected gan or wgan, got {value:?}")))?
            }
            "clip" => self.clip = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "max_len_slack" => self.max_len_slack = auto(key, value)?,
            "eval_samples" => self.eval_samples = parse(key, value)?,
            "reference_size" => self.reference_size = parse(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "sweep_lambdas" => self.sweep_lambdas = list(value).map(|v| parse(key, v)).collect::<Result<_>>()?,
            _ => return Err(OrganError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| OrganError::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            self.set(k.trim(), v).map_err(|e| match e {
                OrganError::Config(m) => OrganError::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| OrganError::Usage(format!("--set expects key=value, got {kv:?}")))?;
        self.set(k.trim(), v)
    }

    /// Every key in canonical order; parsing the text gives back `self`.
    pub fn to_text(&self) -> String {
        let schedule = match self.schedule {
            Schedule::Rotate => "rotate".to_string(),
            Schedule::Fixed(i) => format!("fixed:{i}"),
        };
        let entries: Vec<(&str, String)> = vec![
            ("corpus", self.corpus.display().to_string()),
            ("fragment_corpus", self.fragment_corpus.as_ref().map_or_else(|| "auto".to_string(), |p| p.display().to_string())),
            ("task", self.task.name().to_string()),
            ("lambda", self.lambda.to_string()),
            ("objectives", self.objectives.join(",")),
            ("schedule", schedule),
            ("uniqueness_penalty", self.uniqueness_penalty.to_string()),
            ("invalid_reward", self.invalid_reward.to_string()),
            ("pretrain_gen_epochs", self.pretrain_gen_epochs.to_string()),
            ("pretrain_disc_epochs", self.pretrain_disc_epochs.to_string()),
            ("adversarial_epochs", self.adversarial_epochs.to_string()),
            ("g_steps", self.g_steps.to_string()),
            ("d_steps", show_auto(&self.d_steps)),
            ("batch_size", self.batch_size.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("critic_filters", self.critic_filters.to_string()),
            ("critic_max_width", self.critic_max_width.to_string()),
            ("dropout_keep", self.dropout_keep.to_string()),
            ("l2", self.l2.to_string()),
            ("mle_lr", self.mle_lr.to_string()),
            ("critic_lr", self.critic_lr.to_string()),
            ("pg_lr", self.pg_lr.to_string()),
            ("rollouts", self.rollouts.to_string()),
            ("baseline", self.baseline.to_string()),
            ("mode", self.mode.name().to_string()),
            ("clip", self.clip.to_string()),
            ("seed", self.seed.to_string()),
            ("max_len_slack", show_auto(&self.max_len_slack)),
            ("eval_samples", self.eval_samples.to_string()),
            ("reference_size", self.reference_size.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("sweep_lambdas", join(&self.sweep_lambdas)),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn d_steps(&self) -> usize {
        self.d_steps.unwrap_or(match self.mode {
            CriticMode::Classifier => 1,
            CriticMode::Wasserstein => 5,
        })
    }

    pub fn max_len_slack(&self) -> f64 {
        self.max_len_slack.unwrap_or(match self.task {
            Task::Molecules => 0.1,
            Task::Music => 0.0,
        })
    }

    /// The configured objectives, or the task's full list.
    pub fn objective_names(&self) -> Vec<String> {
        if self.objectives.is_empty() {
            self.task.objectives().iter().map(|s| s.to_string()).collect()
        } else {
            self.objectives.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OrganError::Config(m));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} not in [0, 1]", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.invalid_reward) {
            return bad(format!("invalid_reward {} not in [0, 1]", self.invalid_reward));
        }
        for (k, v) in [
            ("g_steps", self.g_steps),
            ("batch_size", self.batch_size),
            ("hidden_dim", self.hidden_dim),
            ("embed_dim", self.embed_dim),
            ("critic_filters", self.critic_filters),
            ("critic_max_width", self.critic_max_width),
            ("rollouts", self.rollouts),
            ("eval_samples", self.eval_samples),
            ("reference_size", self.reference_size),
            ("d_steps", self.d_steps()),
        ] {
            if v == 0 {
                return bad(format!("{k} must be positive"));
            }
        }
        for (k, v) in [("mle_lr", self.mle_lr), ("critic_lr", self.critic_lr), ("pg_lr", self.pg_lr), ("clip", self.clip)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive, got {v}"));
            }
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad(format!("dropout_keep {} not in (0, 1]", self.dropout_keep));
        }
        for name in self.objective_names() {
            if Task::of_objective(&name) != Some(self.task) || name == "validity" {
                return bad(format!("objective {name:?} does not apply to the {} task", self.task.name()));
            }
        }
        if let Schedule::Fixed(i) = self.schedule {
            if i >= self.objective_names().len() {
                return bad(format!("fixed objective index {i} out of range"));
            }
        }
        Ok(())
    }
}
