//! Monophonic melodies as sixteenth-note token strings.
//!
//! Token 0 is silence, 1 holds the previous event, and `k >= 2` starts a
//! note at MIDI pitch `k + 46` (C3 = 48 up to B5 = 83). The text form writes
//! token `k` as `ALPHABET[k]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Error, Result};

pub const ALPHABET: &str = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZab";
pub const SILENCE: u8 = 0;
pub const HOLD: u8 = 1;
pub const MAX_TOKEN: u8 = 37;
pub const PITCH_OFFSET: u8 = 46;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MelodyTokens(Vec<u8>);

impl MelodyTokens {
    pub fn new(tokens: Vec<u8>) -> Result<Self> {
        match tokens.iter().find(|&&t| t > MAX_TOKEN) {
            Some(&t) => Err(Error::Format(format!("melody token {t} out of range 0..=37"))),
            None => Ok(Self(tokens)),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| ALPHABET.find(c).map(|i| i as u8).ok_or_else(|| Error::Format(format!("melody symbol {c:?}"))))
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }

    pub fn tokens(&self) -> &[u8] {
        &self.0
    }

    pub fn to_text(&self) -> alloc::string::String {
        self.0.iter().map(|&t| ALPHABET.as_bytes()[t as usize] as char).collect()
    }

    /// Pitches of the note onsets in order.
    pub fn note_events(&self) -> Vec<u8> {
        self.0.iter().filter(|&&t| t >= 2).map(|&t| t + PITCH_OFFSET).collect()
    }
}

fn interval_fraction(m: &MelodyTokens, accept: impl Fn(u8) -> bool) -> f64 {
    let ev = m.note_events();
    if ev.len() < 2 {
        return 0.0;
    }
    let hits = ev.windows(2).filter(|w| accept(w[0].abs_diff(w[1]))).count();
    hits as f64 / (ev.len() - 1) as f64
}

/// Fraction of consecutive note intervals that are perfect fifths
/// (7 semitones).
pub fn tonality(m: &MelodyTokens) -> f64 {
    interval_fraction(m, |d| d == 7)
}

/// Fraction of consecutive note intervals that are steps (1 or 2
/// semitones).
pub fn ratio_of_steps(m: &MelodyTokens) -> f64 {
    interval_fraction(m, |d| d == 1 || d == 2)
}

/// Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Mean over unordered pairs of the edit distance divided by the longer
/// length of the pair.
pub fn edit_diversity(batch: &[MelodyTokens]) -> Result<f64> {
    if batch.len() < 2 {
        return Err(param("edit diversity needs at least two melodies"));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in batch.iter().enumerate() {
        for b in &batch[i + 1..] {
            let longest = a.0.len().max(b.0.len());
            if longest > 0 {
                total += edit_distance(&a.0, &b.0) as f64 / longest as f64;
            }
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}
