use std::path::Path;

use organ_core::vocab::max_len_for;
use organ_core::{TokenSequence, Vocabulary};

use crate::error::{read_text, OrganError, Result};

/// Training lines with their encoding.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub lines: Vec<String>,
    pub vocab: Vocabulary,
    pub max_len: usize,
    pub sequences: Vec<TokenSequence>,
}

/// Non-blank lines of a text file. A trailing carriage return is dropped so
/// CRLF files still load.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = read_text(path)?;
    Ok(text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

impl Corpus {
    /// Builds the vocabulary and fixed length from the lines themselves.
    pub fn build(lines: Vec<String>, slack: f64) -> Result<Self> {
        let vocab = Vocabulary::build(&lines)?;
        let max_len = max_len_for(&lines, slack)?;
        Self::with_vocab(lines, vocab, max_len)
    }

    /// Encodes with an existing vocabulary, e.g. one restored from a
    /// checkpoint.
    pub fn with_vocab(lines: Vec<String>, vocab: Vocabulary, max_len: usize) -> Result<Self> {
        if lines.is_empty() {
            return Err(organ_core::Error::EmptyCorpus.into());
        }
        let sequences = lines.iter().map(|l| vocab.encode(l, max_len)).collect::<organ_core::Result<Vec<_>>>()?;
        Ok(Self { lines, vocab, max_len, sequences })
    }

    pub fn load(path: &Path, slack: f64) -> Result<Self> {
        if path.as_os_str().is_empty() {
            return Err(OrganError::Config("corpus path is not set".into()));
        }
        Self::build(read_lines(path)?, slack)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}
