//! Everything needed to resume or evaluate a run, in one container file.

use std::collections::BTreeMap;
use std::path::Path;

use organ_core::discriminator::{CriticConfig, CriticMode, CriticNet};
use organ_core::generator::{GeneratorShape, PolicyNet};
use organ_core::mol::FragmentTable;
use organ_core::nn::{AdamState, Container};
use organ_core::Vocabulary;

use crate::config::TrainConfig;
use crate::error::{read, write, OrganError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// The configuration the run was started with.
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    /// Adversarial epochs completed so far.
    pub epoch: usize,
    pub generator: PolicyNet,
    pub critic: CriticNet,
    pub mle_opt: AdamState,
    pub pg_opt: AdamState,
    pub critic_opt: AdamState,
    pub fragments: Option<FragmentTable>,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

struct Meta(BTreeMap<String, String>);

impl Meta {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| OrganError::Config(format!("checkpoint meta line {line:?}")))?;
            map.insert(k.to_string(), v.to_string());
        }
        Ok(Self(map))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.0.get(key).ok_or_else(|| OrganError::Config(format!("checkpoint meta lacks {key}")))?;
        v.parse().map_err(|_| OrganError::Config(format!("checkpoint meta {key}={v:?}")))
    }
}

impl Checkpoint {
    pub fn max_len(&self) -> usize {
        self.generator.shape().max_len
    }

    fn meta(&self) -> String {
        let g = self.generator.shape();
        let c = self.critic.config();
        let rows = [
            ("epoch", self.epoch.to_string()),
            ("gen.vocab_size", g.vocab_size.to_string()),
            ("gen.max_len", g.max_len.to_string()),
            ("gen.embed_dim", g.embed_dim.to_string()),
            ("gen.hidden_dim", g.hidden_dim.to_string()),
            ("disc.vocab_size", c.vocab_size.to_string()),
            ("disc.max_len", c.max_len.to_string()),
            ("disc.embed_dim", c.embed_dim.to_string()),
            ("disc.filter_widths", join(&c.filter_widths)),
            ("disc.filters_per_width", c.filters_per_width.to_string()),
            ("disc.dropout_keep", c.dropout_keep.to_string()),
            ("disc.l2", c.l2.to_string()),
            ("disc.mode", c.mode.name().to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn to_container(&self) -> Result<Container> {
        let mut c = Container::new();
        c.put_blob("config", self.config.to_text().into_bytes());
        c.put_blob("vocab", self.vocab.to_text().into_bytes());
        c.put_blob("meta", self.meta().into_bytes());
        c.put_params(self.generator.params());
        c.put_params(self.critic.params());
        c.put_adam("adam.mle", &self.mle_opt, self.generator.params())?;
        c.put_adam("adam.pg", &self.pg_opt, self.generator.params())?;
        c.put_adam("adam.critic", &self.critic_opt, self.critic.params())?;
        if let Some(t) = &self.fragments {
            c.put_blob("fragments", t.to_bytes());
        }
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let config = TrainConfig::parse_text(c.text("config")?)?;
        let vocab = Vocabulary::from_text(c.text("vocab")?)?;
        let meta = Meta::parse(c.text("meta")?)?;
        let shape = GeneratorShape {
            vocab_size: meta.get("gen.vocab_size")?,
            max_len: meta.get("gen.max_len")?,
            embed_dim: meta.get("gen.embed_dim")?,
            hidden_dim: meta.get("gen.hidden_dim")?,
        };
        let widths: String = meta.get("disc.filter_widths")?;
        let critic_config = CriticConfig {
            vocab_size: meta.get("disc.vocab_size")?,
            max_len: meta.get("disc.max_len")?,
            embed_dim: meta.get("disc.embed_dim")?,
            filter_widths: widths
                .split(',')
                .map(|w| w.parse().map_err(|_| OrganError::Config(format!("checkpoint filter width {w:?}"))))
                .collect::<Result<_>>()?,
            filters_per_width: meta.get("disc.filters_per_width")?,
            dropout_keep: meta.get("disc.dropout_keep")?,
            l2: meta.get("disc.l2")?,
            mode: CriticMode::parse(&meta.get::<String>("disc.mode")?)?,
        };
        if shape.vocab_size != vocab.size() || critic_config.vocab_size != vocab.size() {
            return Err(OrganError::Config("checkpoint vocabulary does not match the networks".into()));
        }
        let mut generator = PolicyNet::zeros(shape);
        c.load_params(generator.params_mut())?;
        let mut critic = CriticNet::zeros(critic_config)?;
        c.load_params(critic.params_mut())?;
        let fragments = match c.get("fragments") {
            Some(_) => Some(FragmentTable::from_bytes(c.blob("fragments")?)?),
            None => None,
        };
        Ok(Self {
            config,
            vocab,
            epoch: meta.get("epoch")?,
            mle_opt: c.load_adam("adam.mle", generator.params())?,
            pg_opt: c.load_adam("adam.pg", generator.params())?,
            critic_opt: c.load_adam("adam.critic", critic.params())?,
            generator,
            critic,
            fragments,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(self.to_container()?.to_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_container(&Container::from_bytes(bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read(path)?;
        Self::from_bytes(&bytes).map_err(|e| OrganError::Checkpoint { path: path.to_path_buf(), message: e.to_string() })
    }
}
