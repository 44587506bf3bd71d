//! Synthetic accessibility in the style of Ertl and Schuffenhauer: the mean
//! corpus log-frequency of a molecule's circular fragments minus penalties
//! for size, spiro atoms, bridgeheads and macrocycles, calibrated so the
//! corpus 5th and 95th percentiles land on 0.1 and 0.9.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::Molecule;
use crate::error::{Error, Result};

pub const MAX_RADIUS: usize = 2;
pub const MIN_CORPUS: usize = 100;
const MAGIC: &[u8; 4] = b"ORGF";
const VERSION: u32 = 1;

fn fnv1a(h: u64, bytes: &[u8]) -> u64 {
    bytes.iter().fold(h, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

/// Hashed circular fragments of radius 0 to 2, one entry per occurrence.
///
/// Radius 0 is the atom itself (element, aromaticity, charge). A larger
/// radius is kept only when it adds bonds, and two atoms whose environments
/// cover the same bonds at the same radius contribute once (the smaller
/// hash, so atom order does not matter).
pub fn fragments(mol: &Molecule) -> Vec<u64> {
    let n = mol.atom_count();
    let mut ids: Vec<u64> =
        mol.atoms().iter().map(|a| fnv1a(FNV_OFFSET, &[0, a.element.atomic_number(), u8::from(a.aromatic), a.charge as u8])).collect();
    let mut out = ids.clone();
    let mut envs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for radius in 1..=MAX_RADIUS {
        let mut kept: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let mut next_ids = ids.clone();
        let mut next_envs = envs.clone();
        for i in 0..n {
            let mut nbrs: Vec<(u8, u64)> = mol.neighbors(i).iter().map(|&(j, k)| (mol.bonds()[k].order.code(), ids[j])).collect();
            nbrs.sort_unstable();
            let mut h = fnv1a(FNV_OFFSET, &[radius as u8]);
            h = fnv1a(h, &ids[i].to_le_bytes());
            for (b, id) in &nbrs {
                h = fnv1a(h, &[*b]);
                h = fnv1a(h, &id.to_le_bytes());
            }
            next_ids[i] = h;
            let env = &mut next_envs[i];
            for &(j, k) in mol.neighbors(i) {
                env.insert(k);
                env.extend(envs[j].iter().copied());
            }
            if env.len() == envs[i].len() {
                continue;
            }
            kept.entry(env.iter().copied().collect()).and_modify(|k| *k = (*k).min(h)).or_insert(h);
        }
        out.extend(kept.into_values());
        ids = next_ids;
        envs = next_envs;
    }
    out
}

/// Ertl's complexity penalties, in log10 units.
pub fn penalties(mol: &Molecule) -> f64 {
    let n = mol.atom_count() as f64;
    let size = libm::pow(n, 1.005) - n;
    let rings = mol.ring_list();
    let mut spiro = BTreeSet::new();
    let mut bridgeheads = BTreeSet::new();
    for (a, ra) in rings.iter().enumerate() {
        for rb in &rings[a + 1..] {
            let shared: Vec<usize> = ra.iter().copied().filter(|x| rb.contains(x)).collect();
            if shared.len() == 1 {
                spiro.insert(shared[0]);
            } else if shared.len() >= 3 {
                // Ends of the shared path: fewer than two shared neighbours.
                for &x in &shared {
                    let inside = mol.neighbors(x).iter().filter(|&&(y, _)| shared.contains(&y)).count();
                    if inside < 2 {
                        bridgeheads.insert(x);
                    }
                }
            }
        }
    }
    let macrocycle = if rings.iter().any(|r| r.len() > 8) { libm::log10(2.0) } else { 0.0 };
    size + libm::log10(spiro.len() as f64 + 1.0) + libm::log10(bridgeheads.len() as f64 + 1.0) + macrocycle
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentTable {
    molecules: u64,
    scores: BTreeMap<u64, f64>,
    p5: f64,
    p95: f64,
}

/// Linear-interpolated percentile of sorted values.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl FragmentTable {
    /// Document frequencies over the corpus, stored as `ln(count / N)`.
    pub fn build(corpus: &[Molecule]) -> Result<Self> {
        if corpus.len() < MIN_CORPUS {
            return Err(Error::Config(format!("fragment table needs at least {MIN_CORPUS} molecules, got {}", corpus.len())));
        }
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for m in corpus {
            let distinct: BTreeSet<u64> = fragments(m).into_iter().collect();
            for f in distinct {
                *counts.entry(f).or_default() += 1;
            }
        }
        let n = corpus.len() as f64;
        let scores = counts.into_iter().map(|(k, c)| (k, libm::log(c as f64 / n))).collect();
        let mut table = Self { molecules: corpus.len() as u64, scores, p5: 0.0, p95: 0.0 };
        let mut raw: Vec<f64> = corpus.iter().map(|m| table.raw_score(m)).collect();
        raw.sort_by(f64::total_cmp);
        table.p5 = percentile(&raw, 0.05);
        table.p95 = percentile(&raw, 0.95);
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn molecules(&self) -> u64 {
        self.molecules
    }

    pub fn calibration(&self) -> (f64, f64) {
        (self.p5, self.p95)
    }

    pub fn contains(&self, fragment: u64) -> bool {
        self.scores.contains_key(&fragment)
    }

    /// Unseen fragments count as half an occurrence.
    pub fn fragment_score(&self, fragment: u64) -> f64 {
        self.scores.get(&fragment).copied().unwrap_or_else(|| libm::log(0.5 / self.molecules.max(1) as f64))
    }

    /// Mean fragment score minus penalties, before calibration.
    pub fn raw_score(&self, mol: &Molecule) -> f64 {
        let frags = fragments(mol);
        let freq = if frags.is_empty() { 0.0 } else { frags.iter().map(|&f| self.fragment_score(f)).sum::<f64>() / frags.len() as f64 };
        freq - penalties(mol)
    }

    /// Calibrated score in `[0, 1]`; higher means easier to make.
    pub fn synthesizability(&self, mol: &Molecule) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Config("empty fragment table".into()));
        }
        let raw = self.raw_score(mol);
        let span = self.p95 - self.p5;
        let v = if span > 1e-12 {
            0.1 + 0.8 * (raw - self.p5) / span
        } else if raw > self.p95 + 1e-12 {
            1.0
        } else if raw < self.p5 - 1e-12 {
            0.0
        } else {
            0.5
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Little-endian: magic, version, molecule count, the two calibration
    /// points, entry count, then sorted `(fragment, score)` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + 16 * self.scores.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.molecules.to_le_bytes());
        out.extend_from_slice(&self.p5.to_le_bytes());
        out.extend_from_slice(&self.p95.to_le_bytes());
        out.extend_from_slice(&(self.scores.len() as u64).to_le_bytes());
        for (k, v) in &self.scores {
            out.extend_from_slice(&k.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("fragment table: {what}"));
        let mut at = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(at..at + n).ok_or_else(|| bad("truncated"))?;
            at += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().unwrap());
        let molecules = u64_at(take(8)?);
        let p5 = f64::from_bits(u64_at(take(8)?));
        let p95 = f64::from_bits(u64_at(take(8)?));
        let count = u64_at(take(8)?) as usize;
        let mut scores = BTreeMap::new();
        for _ in 0..count {
            let k = u64_at(take(8)?);
            let v = f64::from_bits(u64_at(take(8)?));
            scores.insert(k, v);
        }
        if take(1).is_ok() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self { molecules, scores, p5, p95 })
    }
}
