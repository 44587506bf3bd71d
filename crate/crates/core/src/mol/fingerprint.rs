//! Hashed linear-path fingerprints and Jaccard diversity.

use alloc::vec::Vec;

use super::graph::Molecule;
use crate::error::{param, Result};

pub const WIDTH: usize = 2048;
pub const MAX_PATH_BONDS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: [u64; WIDTH / 64],
}

impl Fingerprint {
    pub fn empty() -> Self {
        Self { words: [0; WIDTH / 64] }
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..WIDTH).filter(|&b| self.contains(b))
    }
}

/// Intersection over union; two empty sets count as identical.
pub fn jaccard(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Every simple path of 0 to 6 bonds, written as alternating atom and bond
/// codes and read in whichever direction is lexicographically smaller, is
/// hashed to one bit.
pub fn fingerprint(mol: &Molecule) -> Fingerprint {
    let mut fp = Fingerprint::empty();
    let code: Vec<u8> = mol.atoms().iter().map(|a| a.element.atomic_number() * 2 + u8::from(a.aromatic)).collect();
    let mut atoms = Vec::with_capacity(MAX_PATH_BONDS + 1);
    let mut bonds = Vec::with_capacity(MAX_PATH_BONDS);
    for start in 0..mol.atom_count() {
        atoms.push(start);
        walk(mol, &code, &mut atoms, &mut bonds, &mut fp);
        atoms.pop();
    }
    fp
}

fn walk(mol: &Molecule, code: &[u8], atoms: &mut Vec<usize>, bonds: &mut Vec<u8>, fp: &mut Fingerprint) {
    emit(code, atoms, bonds, fp);
    if bonds.len() == MAX_PATH_BONDS {
        return;
    }
    let last = *atoms.last().expect("path is never empty");
    for &(next, k) in mol.neighbors(last) {
        if atoms.contains(&next) {
            continue;
        }
        atoms.push(next);
        bonds.push(mol.bonds()[k].order.code());
        walk(mol, code, atoms, bonds, fp);
        atoms.pop();
        bonds.pop();
    }
}

fn emit(code: &[u8], atoms: &[usize], bonds: &[u8], fp: &mut Fingerprint) {
    let n = atoms.len();
    let forward = (0..2 * n - 1).map(|p| if p % 2 == 0 { code[atoms[p / 2]] } else { bonds[p / 2] });
    let backward = (0..2 * n - 1).map(|p| if p % 2 == 0 { code[atoms[n - 1 - p / 2]] } else { bonds[n - 2 - p / 2] });
    let mut key: Vec<u8> = if forward.clone().lt(backward.clone()) { forward.collect() } else { backward.collect() };
    key.push(n as u8);
    fp.set((fnv1a(&key) % WIDTH as u64) as usize);
}

/// `1 - mean Jaccard(fp, r)` over the reference set.
pub fn diversity(fp: &Fingerprint, reference: &[Fingerprint]) -> Result<f64> {
    if reference.is_empty() {
        return Err(param("diversity needs a non-empty reference set"));
    }
    let mean = reference.iter().map(|r| jaccard(fp, r)).sum::<f64>() / reference.len() as f64;
    Ok((1.0 - mean).clamp(0.0, 1.0))
}
