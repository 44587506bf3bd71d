//! SMILES over C, N, O, F and H, the molecular graph, and the molecular
//! objectives: solubility, druglikeness, synthesizability and fingerprint
//! diversity.

pub mod crippen;
pub mod fingerprint;
mod graph;
pub mod qed;
pub mod sascore;
mod smiles;

pub use crippen::{logp, solubility};
pub use fingerprint::{diversity, fingerprint, jaccard, Fingerprint};
pub use graph::{Atom, Bond, BondOrder, Element, Molecule};
pub use qed::druglikeness;
pub use sascore::FragmentTable;
pub use smiles::{parse_smiles, ErrorKind, SmilesError};

use crate::vocab::Vocabulary;

/// Fraction of decoded sequences that parse; empty strings are invalid and
/// undecodable sequences count as failures.
pub fn validity_fraction<S: AsRef<[usize]>>(batch: &[S], vocab: &Vocabulary) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let ok = batch.iter().filter(|s| vocab.decode_tokens(s.as_ref()).is_ok_and(|t| !t.is_empty() && parse_smiles(&t).is_ok())).count();
    ok as f64 / batch.len() as f64
}
