//! Character vocabulary and fixed-length padded token sequences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Reserved padding character. Padding marks the end of a sequence.
pub const PAD: char = '_';

/// Bijective character <-> id table. Ids are assigned in character-code
/// order with the pad character always last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    char_to_id: BTreeMap<char, usize>,
    id_to_char: Vec<char>,
}

impl Vocabulary {
    /// Collects the distinct characters of `corpus`. Line order does not
    /// matter.
    pub fn build<S: AsRef<str>>(corpus: &[S]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut chars = BTreeSet::new();
        for (line, s) in corpus.iter().enumerate() {
            for c in s.as_ref().chars() {
                if c == PAD {
                    return Err(Error::ReservedCharacter { line });
                }
                chars.insert(c);
            }
        }
        let mut id_to_char: Vec<char> = chars.into_iter().collect();
        id_to_char.push(PAD);
        Ok(Self::from_table(id_to_char))
    }

    fn from_table(id_to_char: Vec<char>) -> Self {
        let char_to_id = id_to_char.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Self { char_to_id, id_to_char }
    }

    pub fn size(&self) -> usize {
        self.id_to_char.len()
    }

    pub fn pad_id(&self) -> usize {
        self.id_to_char.len() - 1
    }

    pub fn id(&self, c: char) -> Option<usize> {
        self.char_to_id.get(&c).copied()
    }

    pub fn char(&self, id: usize) -> Option<char> {
        self.id_to_char.get(id).copied()
    }

    pub fn chars(&self) -> &[char] {
        &self.id_to_char
    }

    /// Encodes `s` followed by pad tokens up to `max_len`.
    pub fn encode(&self, s: &str, max_len: usize) -> Result<TokenSequence> {
        let len = s.chars().count();
        if len > max_len {
            return Err(Error::TooLong { len, max: max_len });
        }
        let mut tokens = Vec::with_capacity(max_len);
        for c in s.chars() {
            tokens.push(self.id(c).ok_or(Error::UnknownCharacter(c))?);
        }
        tokens.resize(max_len, self.pad_id());
        Ok(TokenSequence { tokens, effective_len: len })
    }

    /// The characters before the first pad.
    pub fn decode(&self, seq: &TokenSequence) -> Result<String> {
        self.decode_tokens(seq.tokens())
    }

    /// Decodes a raw token slice, stopping at the first pad. Anything after
    /// the first pad is ignored, which makes this total on sampler output.
    pub fn decode_tokens(&self, tokens: &[usize]) -> Result<String> {
        let pad = self.pad_id();
        let mut out = String::new();
        for &t in tokens {
            if t == pad {
                break;
            }
            let c = self.char(t).ok_or(Error::TokenOutOfRange { id: t, size: self.size() })?;
            out.push(c);
        }
        Ok(out)
    }

    /// `char<TAB>id` lines, one per symbol in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.id_to_char.iter().enumerate() {
            out.push_str(&format!("{c}\t{i}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Format(format!("vocabulary line {}: {line:?}", n + 1));
            let (c, id) = line.rsplit_once('\t').ok_or_else(bad)?;
            let mut cs = c.chars();
            let c = cs.next().ok_or_else(bad)?;
            if cs.next().is_some() {
                return Err(bad());
            }
            let id: usize = id.parse().map_err(|_| bad())?;
            entries.push((id, c));
        }
        entries.sort_unstable();
        let ok = entries.iter().enumerate().all(|(i, &(id, _))| i == id) && entries.last().map(|&(_, c)| c) == Some(PAD);
        let table: Vec<char> = entries.into_iter().map(|(_, c)| c).collect();
        let distinct: BTreeSet<char> = table.iter().copied().collect();
        if !ok || distinct.len() != table.len() {
            return Err(Error::Format("vocabulary ids must be contiguous, unique, with pad last".into()));
        }
        Ok(Self::from_table(table))
    }
}

/// `ceil(longest * (1 + slack))`, the fixed sequence length for a corpus.
pub fn max_len_for<S: AsRef<str>>(corpus: &[S], slack_fraction: f64) -> Result<usize> {
    if !(slack_fraction >= 0.0) {
        return Err(Error::Parameter(format!("slack fraction {slack_fraction} < 0")));
    }
    let longest = corpus.iter().map(|s| s.as_ref().chars().count()).max().ok_or(Error::EmptyCorpus)?;
    let x = longest as f64 * (1.0 + slack_fraction);
    // 10 * 1.1 is 11.000000000000002 in binary floating point.
    let nearest = libm::round(x);
    if libm::fabs(x - nearest) <= 1e-9 * x.max(1.0) {
        Ok(nearest as usize)
    } else {
        Ok(libm::ceil(x) as usize)
    }
}

/// A sequence of exactly `max_len` token ids in which nothing but pad
/// follows the first pad.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSequence {
    tokens: Vec<usize>,
    effective_len: usize,
}

impl TokenSequence {
    /// Normalises sampler output: ids are range-checked and everything from
    /// the first pad onwards becomes pad.
    pub fn from_generated(tokens: &[usize], vocab: &Vocabulary) -> Result<Self> {
        let pad = vocab.pad_id();
        let mut out = Vec::with_capacity(tokens.len());
        let mut effective_len = tokens.len();
        for (i, &t) in tokens.iter().enumerate() {
            if t >= vocab.size() {
                return Err(Error::TokenOutOfRange { id: t, size: vocab.size() });
            }
            if t == pad && effective_len == tokens.len() {
                effective_len = i;
            }
            out.push(if i >= effective_len { pad } else { t });
        }
        Ok(Self { tokens: out, effective_len })
    }

    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of the first pad, or the full length when there is none.
    pub fn effective_len(&self) -> usize {
        self.effective_len
    }
}

impl AsRef<[usize]> for TokenSequence {
    fn as_ref(&self) -> &[usize] {
        &self.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(lines: &[&str]) -> Vocabulary {
        Vocabulary::build(lines).unwrap()
    }

    #[test]
    fn builds_sorted_vocabulary_with_pad_last() {
        let v = vocab(&["CO", "C=O"]);
        assert_eq!(v.size(), 4);
        assert_eq!(v.chars(), &['=', 'C', 'O', '_']);
        assert_eq!(v.pad_id(), 3);
    }

    #[test]
    fn empty_line_corpus_has_only_pad() {
        let v = vocab(&[""]);
        assert_eq!(v.size(), 1);
        assert_eq!(v.chars(), &['_']);
    }

    #[test]
    fn rejects_reserved_and_empty() {
        assert_eq!(Vocabulary::build(&["CC", "C_C"]), Err(Error::ReservedCharacter { line: 1 }));
        assert_eq!(Vocabulary::build::<&str>(&[]), Err(Error::EmptyCorpus));
    }

    #[test]
    fn max_len_rounding() {
        assert_eq!(max_len_for(&["0123456789"], 0.10).unwrap(), 11);
        assert_eq!(max_len_for(&["x"; 1], 0.0).unwrap(), 1);
        let line36 = "1".repeat(36);
        assert_eq!(max_len_for(&[line36.as_str(), "12"], 0.0).unwrap(), 36);
        // A longest line of 46 characters with 10% slack gives the 51-token
        // length used for the molecule corpus.
        let line46 = "C".repeat(46);
        assert_eq!(max_len_for(&[line46.as_str()], 0.10).unwrap(), 51);
        assert_eq!(max_len_for(&["abc"], 0.5).unwrap(), 5);
        assert!(max_len_for::<&str>(&[], 0.1).is_err());
        assert!(max_len_for(&["a"], -0.1).is_err());
    }

    #[test]
    fn encode_pads_and_decode_inverts() {
        let v = vocab(&["CO", "C=O"]);
        let t = v.encode("CO", 4).unwrap();
        assert_eq!(t.tokens(), &[1, 2, 3, 3]);
        assert_eq!(t.effective_len(), 2);
        assert_eq!(v.decode(&t).unwrap(), "CO");
        let e = v.encode("", 2).unwrap();
        assert_eq!(e.tokens(), &[3, 3]);
        assert_eq!(v.decode(&e).unwrap(), "");
        assert_eq!(v.encode("CX", 4), Err(Error::UnknownCharacter('X')));
        assert_eq!(v.encode("COCO", 3), Err(Error::TooLong { len: 4, max: 3 }));
    }

    #[test]
    fn generated_sequences_are_truncated_at_first_pad() {
        let v = vocab(&["CO"]);
        let t = TokenSequence::from_generated(&[0, 2, 1, 0], &v).unwrap();
        assert_eq!(t.tokens(), &[0, 2, 2, 2]);
        assert_eq!(t.effective_len(), 1);
        assert_eq!(v.decode_tokens(&[0, 2, 1]).unwrap(), "C");
        assert!(matches!(v.decode_tokens(&[7]), Err(Error::TokenOutOfRange { id: 7, .. })));
        assert!(TokenSequence::from_generated(&[9], &v).is_err());
    }

    #[test]
    fn text_round_trip() {
        let v = vocab(&["C1=CC=CC=C1", "N#N"]);
        let text = v.to_text();
        assert_eq!(Vocabulary::from_text(&text).unwrap(), v);
        assert!(Vocabulary::from_text("C\t0\nO\t2\n_\t3\n").is_err());
        assert!(Vocabulary::from_text("C\t0\n").is_err());
    }

    #[test]
    fn build_is_order_independent() {
        assert_eq!(vocab(&["CO", "N#N", "c1ccccc1"]), vocab(&["c1ccccc1", "CO", "N#N"]));
    }
}
