//! Druglikeness as a weighted geometric mean of five desirability humps
//! (a reduced form of Bickerton's QED).

use super::crippen;
use super::graph::{BondOrder, Element, Molecule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptors {
    pub molecular_weight: f64,
    pub logp: f64,
    pub acceptors: usize,
    pub donors: usize,
    pub aromatic_rings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Descriptor {
    MolecularWeight,
    LogP,
    Acceptors,
    Donors,
    AromaticRings,
}

impl Descriptor {
    pub const ALL: [Descriptor; 5] =
        [Descriptor::MolecularWeight, Descriptor::LogP, Descriptor::Acceptors, Descriptor::Donors, Descriptor::AromaticRings];

    pub fn weight(self) -> f64 {
        match self {
            Descriptor::MolecularWeight => 0.66,
            Descriptor::LogP => 0.46,
            Descriptor::Acceptors => 0.05,
            Descriptor::Donors => 0.61,
            Descriptor::AromaticRings => 0.48,
        }
    }

    /// `(x, desirability)` knots; the curve is linear between knots, flat
    /// before the first and zero from the last onward.
    pub fn knots(self) -> &'static [(f64, f64)] {
        match self {
            Descriptor::MolecularWeight => &[
                (0.0, 0.0),
                (50.0, 0.0547),
                (100.0, 0.1008),
                (150.0, 0.213),
                (200.0, 0.446),
                (250.0, 0.7847),
                (300.0, 1.0),
                (350.0, 0.8702),
                (400.0, 0.5703),
                (450.0, 0.3216),
                (500.0, 0.1737),
                (600.0, 0.0601),
                (700.0, 0.0341),
                (800.0, 0.0284),
                (1000.0, 0.0),
            ],
            Descriptor::LogP => &[
                (-6.0, 0.0),
                (-4.0, 0.0302),
                (-2.0, 0.0886),
                (-1.0, 0.2138),
                (0.0, 0.4716),
                (1.0, 0.7736),
                (2.0, 0.956),
                (2.5, 0.9933),
                (3.0, 1.0),
                (3.5, 0.9605),
                (4.0, 0.863),
                (5.0, 0.4689),
                (6.0, 0.1451),
                (7.0, 0.0477),
                (9.0, 0.0),
            ],
            Descriptor::Acceptors => &[
                (0.0, 0.0284),
                (1.0, 0.2333),
                (2.0, 0.9305),
                (3.0, 1.0),
                (4.0, 0.8865),
                (5.0, 0.7262),
                (6.0, 0.5246),
                (7.0, 0.3322),
                (8.0, 0.1913),
                (10.0, 0.0619),
                (12.0, 0.0292),
                (15.0, 0.0),
            ],
            Descriptor::Donors => &[
                (0.0, 0.5918),
                (1.0, 1.0),
                (2.0, 0.7922),
                (3.0, 0.3787),
                (4.0, 0.1469),
                (5.0, 0.0555),
                (6.0, 0.0231),
                (8.0, 0.0082),
                (10.0, 0.0),
            ],
            Descriptor::AromaticRings => {
                &[(0.0, 0.4725), (1.0, 0.8273), (2.0, 1.0), (3.0, 0.2567), (4.0, 0.0345), (5.0, 0.0122), (6.0, 0.0104), (8.0, 0.0)]
            }
        }
    }

    pub fn desirability(self, x: f64) -> f64 {
        let k = self.knots();
        if x <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        0.0
    }

    fn value(self, d: &Descriptors) -> f64 {
        match self {
            Descriptor::MolecularWeight => d.molecular_weight,
            Descriptor::LogP => d.logp,
            Descriptor::Acceptors => d.acceptors as f64,
            Descriptor::Donors => d.donors as f64,
            Descriptor::AromaticRings => d.aromatic_rings as f64,
        }
    }
}

pub fn molecular_weight(mol: &Molecule) -> f64 {
    mol.atoms().iter().map(|a| a.element.mass() + a.hydrogens as f64 * Element::H.mass()).sum()
}

fn total_valence(mol: &Molecule, i: usize) -> u32 {
    let bonds: f64 = mol.neighbors(i).iter().map(|&(_, k)| mol.bonds()[k].order.valence()).sum();
    libm::round(bonds + mol.atoms()[i].hydrogens as f64) as u32
}

fn hydrogens(mol: &Molecule, i: usize) -> usize {
    let atoms = mol.atoms();
    atoms[i].hydrogens as usize + mol.neighbors(i).iter().filter(|&&(j, _)| atoms[j].element == Element::H).count()
}

/// Nitrogen bonded to a carbonyl carbon.
fn amide_n(mol: &Molecule, i: usize) -> bool {
    let atoms = mol.atoms();
    mol.neighbors(i).iter().any(|&(c, k)| {
        atoms[c].element == Element::C
            && !atoms[c].aromatic
            && mol.bonds()[k].order == BondOrder::Single
            && mol.neighbors(c).iter().any(|&(o, ko)| atoms[o].element == Element::O && mol.bonds()[ko].order == BondOrder::Double)
    })
}

pub fn acceptors(mol: &Molecule) -> usize {
    (0..mol.atom_count())
        .filter(|&i| {
            let a = mol.atoms()[i];
            let (h, x, v) = (hydrogens(mol, i), mol.connections(i), total_valence(mol, i));
            match a.element {
                Element::O if a.aromatic => h == 0 && x == 2,
                Element::O => (x == 2 && v == 2 && h <= 1) || (x == 1 && h == 0 && v == 2) || (a.charge == -1 && x == 1),
                Element::N if a.aromatic => h == 0 && x == 2,
                Element::N => a.charge == 0 && ((h == 0 && x == 1 && v == 3) || (x == 3 && v == 3 && !amide_n(mol, i))),
                _ => false,
            }
        })
        .count()
}

pub fn donors(mol: &Molecule) -> usize {
    (0..mol.atom_count())
        .filter(|&i| {
            let a = mol.atoms()[i];
            let (h, v) = (hydrogens(mol, i), total_valence(mol, i));
            match a.element {
                Element::N if a.aromatic => h == 1 && a.charge == 0,
                Element::N => h > 0 && ((v == 3 && a.charge == 0) || (v == 4 && a.charge == 1)),
                Element::O => h == 1 && a.charge == 0,
                _ => false,
            }
        })
        .count()
}

pub fn aromatic_rings(mol: &Molecule) -> usize {
    mol.ring_list().iter().filter(|r| r.iter().all(|&i| mol.atoms()[i].aromatic)).count()
}

pub fn descriptors(mol: &Molecule) -> Descriptors {
    Descriptors {
        molecular_weight: molecular_weight(mol),
        logp: crippen::logp(mol),
        acceptors: acceptors(mol),
        donors: donors(mol),
        aromatic_rings: aromatic_rings(mol),
    }
}

/// Weighted geometric mean of the desirabilities; 0 as soon as one of them
/// is 0.
pub fn druglikeness_of(d: &Descriptors) -> f64 {
    let mut log_sum = 0.0;
    let mut weights = 0.0;
    for k in Descriptor::ALL {
        let des = k.desirability(k.value(d));
        if des <= 0.0 {
            return 0.0;
        }
        log_sum += k.weight() * libm::log(des);
        weights += k.weight();
    }
    libm::exp(log_sum / weights).clamp(0.0, 1.0)
}

pub fn druglikeness(mol: &Molecule) -> f64 {
    druglikeness_of(&descriptors(mol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::parse_smiles;

    #[test]
    fn peaks_give_one_and_zeros_give_zero() {
        let peak = Descriptors { molecular_weight: 300.0, logp: 3.0, acceptors: 3, donors: 1, aromatic_rings: 2 };
        assert!((druglikeness_of(&peak) - 1.0).abs() < 1e-12);
        assert_eq!(druglikeness_of(&Descriptors { molecular_weight: 0.0, ..peak }), 0.0);
        assert_eq!(druglikeness_of(&Descriptors { donors: 12, ..peak }), 0.0);
    }

    #[test]
    fn humps_interpolate_between_knots() {
        let mw = Descriptor::MolecularWeight;
        assert!((mw.desirability(275.0) - (0.7847 + 1.0) / 2.0).abs() < 1e-12);
        assert_eq!(mw.desirability(5000.0), 0.0);
        assert_eq!(Descriptor::LogP.desirability(-10.0), 0.0);
        assert_eq!(Descriptor::Donors.desirability(0.0), 0.5918);
    }

    #[test]
    fn counts_on_small_molecules() {
        let m = parse_smiles("CC(=O)NC1=CC=C(O)C=C1").unwrap();
        assert_eq!((acceptors(&m), donors(&m), aromatic_rings(&m)), (2, 2, 1));
        assert!((molecular_weight(&m) - 151.165).abs() < 0.01);
        let m = parse_smiles("C1=CC=NC=C1").unwrap();
        assert_eq!((acceptors(&m), donors(&m)), (1, 0));
    }
}
