//! Wildman-Crippen atom-contribution logP over C, N, O, F and H.
//!
//! Each atom gets the first matching type in the published rule order;
//! every hydrogen is typed by the atom carrying it. Atoms that match no
//! specific rule fall back to the element default (`CS`, `NS`, `OS`, `HS`).

use alloc::vec::Vec;

use super::graph::{BondOrder, Element, Molecule};

/// `(type, logP contribution)`.
const TABLE: &[(&str, f64)] = &[
    ("C1", 0.1441),
    ("C2", 0.0),
    ("C3", -0.2035),
    ("C4", -0.2051),
    ("C5", -0.2783),
    ("C6", 0.1551),
    ("C7", 0.0017),
    ("C8", 0.08452),
    ("C9", -0.1444),
    ("C10", -0.0516),
    ("C11", 0.1193),
    ("C12", -0.0967),
    ("C14", 0.0),
    ("C18", 0.1581),
    ("C19", 0.2955),
    ("C20", 0.2713),
    ("C21", 0.136),
    ("C22", 0.4619),
    ("C23", 0.5437),
    ("C25", -0.8186),
    ("C26", 0.264),
    ("CS", 0.08129),
    ("H1", 0.123),
    ("H2", -0.2677),
    ("H3", 0.2142),
    ("H4", 0.298),
    ("HS", 0.1125),
    ("N1", -1.019),
    ("N2", -0.7096),
    ("N3", -1.027),
    ("N4", -0.5188),
    ("N5", 0.08387),
    ("N6", 0.1836),
    ("N7", -0.3187),
    ("N8", -0.4458),
    ("N9", 0.01508),
    ("N10", -1.95),
    ("N11", -0.3239),
    ("N12", -1.119),
    ("N13", -0.3396),
    ("N14", 0.2887),
    ("NS", -0.4806),
    ("O1", 0.1552),
    ("O2", -0.2893),
    ("O3", -0.0684),
    ("O4", -0.4195),
    ("O5", 0.0335),
    ("O7", -1.189),
    ("O8", 0.1788),
    ("O9", -0.1526),
    ("O10", 0.1129),
    ("O11", 0.4833),
    ("O12", -1.326),
    ("OS", -0.1188),
    ("F", 0.4202),
    ("Hal", -2.996),
];

pub fn contribution(atom_type: &str) -> f64 {
    TABLE.iter().find(|(t, _)| *t == atom_type).map_or(0.0, |&(_, v)| v)
}

/// Octanol-water partition coefficient estimate.
pub fn logp(mol: &Molecule) -> f64 {
    let mut total = 0.0;
    for i in 0..mol.atom_count() {
        total += contribution(heavy_type(mol, i));
        let h = mol.atoms()[i].hydrogens as f64;
        if h > 0.0 {
            total += h * contribution(hydrogen_type(mol, i));
        }
    }
    total
}

pub const LOGP_RANGE: (f64, f64) = (-2.0, 7.0);

/// logP clipped to `LOGP_RANGE` and rescaled onto `[0, 1]`.
pub fn solubility_of_logp(logp: f64) -> f64 {
    let (lo, hi) = LOGP_RANGE;
    (logp.clamp(lo, hi) - lo) / (hi - lo)
}

pub fn solubility(mol: &Molecule) -> f64 {
    solubility_of_logp(logp(mol))
}

/// Types of the graph atoms, in atom order.
pub fn atom_types(mol: &Molecule) -> Vec<&'static str> {
    (0..mol.atom_count()).map(|i| heavy_type(mol, i)).collect()
}

struct View<'m> {
    mol: &'m Molecule,
}

impl View<'_> {
    fn el(&self, j: usize) -> Element {
        self.mol.atoms()[j].element
    }
    fn arom(&self, j: usize) -> bool {
        self.mol.atoms()[j].aromatic
    }
    fn charge(&self, j: usize) -> i8 {
        self.mol.atoms()[j].charge
    }
    /// Total hydrogens: implicit plus explicit hydrogen neighbours.
    fn h(&self, j: usize) -> usize {
        self.mol.atoms()[j].hydrogens as usize + self.mol.neighbors(j).iter().filter(|&&(w, _)| self.el(w) == Element::H).count()
    }
    fn x(&self, j: usize) -> usize {
        self.mol.connections(j)
    }
    fn c_al(&self, j: usize) -> bool {
        self.el(j) == Element::C && !self.arom(j)
    }
    fn c_ar(&self, j: usize) -> bool {
        self.el(j) == Element::C && self.arom(j)
    }
    fn heavy(&self, j: usize) -> bool {
        self.el(j) != Element::H
    }
    fn al_heavy(&self, j: usize) -> bool {
        self.heavy(j) && !self.arom(j)
    }
    /// Neighbours over single or aromatic bonds (an unmarked bond in the
    /// rule patterns).
    fn plain(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.mol
            .neighbors(i)
            .iter()
            .filter(|&&(_, k)| matches!(self.mol.bonds()[k].order, BondOrder::Single | BondOrder::Aromatic))
            .map(|&(w, _)| w)
    }
    fn count(&self, i: usize, pred: impl Fn(usize) -> bool) -> usize {
        self.plain(i).filter(|&j| pred(j)).count()
    }
    fn any(&self, i: usize, pred: impl Fn(usize) -> bool) -> bool {
        self.count(i, pred) > 0
    }
    fn by_order(&self, i: usize, order: BondOrder) -> impl Iterator<Item = usize> + '_ {
        self.mol.neighbors(i).iter().filter(move |&&(_, k)| self.mol.bonds()[k].order == order).map(|&(w, _)| w)
    }
    fn double(&self, i: usize, pred: impl Fn(usize) -> bool) -> bool {
        self.by_order(i, BondOrder::Double).any(pred)
    }
    fn triple(&self, i: usize, pred: impl Fn(usize) -> bool) -> bool {
        self.by_order(i, BondOrder::Triple).any(pred)
    }
    fn single(&self, i: usize, pred: impl Fn(usize) -> bool) -> bool {
        self.by_order(i, BondOrder::Single).any(pred)
    }
    fn arom_bonds(&self, i: usize) -> usize {
        self.by_order(i, BondOrder::Aromatic).filter(|&j| self.arom(j)).count()
    }
}

fn heavy_type(mol: &Molecule, i: usize) -> &'static str {
    let v = View { mol };
    match v.el(i) {
        Element::C if v.arom(i) => aromatic_carbon(&v, i),
        Element::C => aliphatic_carbon(&v, i),
        Element::N => nitrogen(&v, i),
        Element::O => oxygen(&v, i),
        Element::F if v.charge(i) == 0 => "F",
        Element::F => "Hal",
        Element::H => match mol.neighbors(i).first() {
            Some(&(j, _)) => hydrogen_type(mol, j),
            None => "HS",
        },
    }
}

fn aliphatic_carbon(v: &View, i: usize) -> &'static str {
    let (h, x) = (v.h(i), v.x(i));
    let n_c = v.count(i, |j| v.c_al(j));
    let n_al = v.count(i, |j| v.al_heavy(j));
    let het = v.any(i, |j| !v.arom(j) && matches!(v.el(j), Element::N | Element::O | Element::F));
    let arom_nb = v.any(i, |j| v.arom(j));
    let dbl_c = v.double(i, |j| v.c_al(j));
    if h == 4 || (h == 3 && n_c >= 1) || (h == 2 && n_c >= 2) {
        return "C1";
    }
    if (h == 1 && n_c >= 3) || (h == 0 && n_c >= 4) {
        return "C2";
    }
    if (h == 3 && het) || (h == 2 && x == 4 && het && n_al >= 2) {
        return "C3";
    }
    if (h == 1 && x == 4 && het && n_al >= 3) || (h == 0 && x == 4 && het && n_al >= 4) {
        return "C4";
    }
    if v.double(i, |j| !v.arom(j) && matches!(v.el(j), Element::N | Element::O | Element::F)) {
        return "C5";
    }
    let two_dbl_c = v.by_order(i, BondOrder::Double).filter(|&j| v.c_al(j)).count() >= 2;
    if dbl_c && ((h == 2) || (h == 1 && n_al >= 1) || (h == 0 && n_al >= 2)) || two_dbl_c {
        return "C6";
    }
    if x == 2 && v.triple(i, |j| v.al_heavy(j)) {
        return "C7";
    }
    if h == 3 && v.any(i, |j| v.c_ar(j)) {
        return "C8";
    }
    if h == 3 && arom_nb {
        return "C9";
    }
    if x == 4 && arom_nb {
        return match h {
            2 => "C10",
            1 => "C11",
            0 => "C12",
            _ => "CS",
        };
    }
    let n_arom = v.count(i, |j| v.arom(j));
    if (dbl_c && arom_nb && n_al >= 1)
        || (dbl_c && v.any(i, |j| v.c_ar(j)) && n_arom >= 2)
        || (h == 1 && dbl_c && arom_nb)
        || v.double(i, |j| v.c_ar(j))
    {
        return "C26";
    }
    "CS"
}

fn aromatic_carbon(v: &View, i: usize) -> &'static str {
    if v.any(i, |j| v.el(j) == Element::F) {
        return "C14";
    }
    if v.h(i) == 1 {
        return "C18";
    }
    let ar = v.arom_bonds(i);
    if ar >= 3 {
        return "C19";
    }
    if ar >= 2 {
        if v.single(i, |j| v.arom(j)) {
            return "C20";
        }
        if v.single(i, |j| v.c_al(j)) {
            return "C21";
        }
        if v.single(i, |j| v.el(j) == Element::N && !v.arom(j)) {
            return "C22";
        }
        if v.single(i, |j| v.el(j) == Element::O && !v.arom(j)) {
            return "C23";
        }
        if v.double(i, |j| !v.arom(j) && matches!(v.el(j), Element::C | Element::N | Element::O)) {
            return "C25";
        }
    }
    "CS"
}

fn nitrogen(v: &View, i: usize) -> &'static str {
    let (h, ch) = (v.h(i), v.charge(i));
    if v.arom(i) {
        return if ch == 0 {
            "N11"
        } else if ch > 0 {
            "N12"
        } else {
            "NS"
        };
    }
    let n_al = v.count(i, |j| v.al_heavy(j));
    let n_heavy = v.count(i, |j| v.heavy(j));
    let n_arom = v.count(i, |j| v.arom(j));
    if ch == 0 {
        if h == 2 && n_al >= 1 {
            return "N1";
        }
        if h == 1 && n_al >= 2 {
            return "N2";
        }
        if h == 2 && n_arom >= 1 {
            return "N3";
        }
        if h == 1 && n_arom >= 1 && n_heavy >= 2 {
            return "N4";
        }
        let dbl_heavy = v.double(i, |j| v.heavy(j));
        if h == 1 && dbl_heavy {
            return "N5";
        }
        if dbl_heavy && n_heavy >= 1 {
            return "N6";
        }
        if n_al >= 3 {
            return "N7";
        }
        if (n_arom >= 1 && n_al >= 1 && n_heavy >= 3) || n_arom >= 3 {
            return "N8";
        }
        if v.triple(i, |j| v.al_heavy(j)) {
            return "N9";
        }
    }
    if ch > 0 && (1..=3).contains(&h) {
        return "N10";
    }
    if ch > 0 && h == 0 {
        let dbl_al = v.double(i, |j| v.al_heavy(j));
        if n_al >= 4
            || (dbl_al && n_al >= 1 && n_heavy >= 2)
            || (v.double(i, |j| v.el(j) == Element::C) && v.double(i, |j| v.el(j) == Element::N))
        {
            return "N13";
        }
    }
    if (ch > 0 && v.triple(i, |j| v.al_heavy(j))) || ch < 0 {
        return "N14";
    }
    if ch > 0 {
        let neg_n = v.double(i, |j| v.el(j) == Element::N && !v.arom(j) && v.charge(j) < 0);
        let two_n = v.by_order(i, BondOrder::Double).filter(|&j| v.el(j) == Element::N && !v.arom(j)).count() >= 2;
        if neg_n && two_n {
            return "N14";
        }
    }
    "NS"
}

fn oxygen(v: &View, i: usize) -> &'static str {
    if v.arom(i) {
        return "O1";
    }
    let (h, x, ch) = (v.h(i), v.x(i), v.charge(i));
    if h == 1 || h == 2 {
        return "O2";
    }
    let n_al = v.count(i, |j| v.al_heavy(j));
    if n_al >= 2 {
        return "O3";
    }
    if v.any(i, |j| v.arom(j)) && v.count(i, |j| v.heavy(j)) >= 2 {
        return "O4";
    }
    if v.double(i, |j| matches!(v.el(j), Element::N | Element::O)) || (x == 1 && ch < 0 && v.any(i, |j| v.el(j) == Element::N)) {
        return "O5";
    }
    if ch == -1 && v.any(i, |j| v.c_al(j) && v.double(j, |k| k != i && v.el(k) == Element::O && !v.arom(k))) {
        return "O12";
    }
    if x == 1 && ch < 0 && v.any(i, |j| v.heavy(j) && !(v.el(j) == Element::N && !v.arom(j))) {
        return "O7";
    }
    if v.double(i, |j| v.c_ar(j)) {
        return "O8";
    }
    let carbonyl: Option<usize> = v.by_order(i, BondOrder::Double).find(|&j| v.c_al(j));
    if let Some(j) = carbonyl {
        let (jh, jx) = (v.h(j), v.x(j));
        let others: Vec<usize> = v.plain(j).collect();
        let n_c = others.iter().filter(|&&k| v.c_al(k)).count();
        let n_al = others.iter().filter(|&&k| v.al_heavy(k)).count();
        let has_no = others.iter().any(|&k| !v.arom(k) && matches!(v.el(k), Element::N | Element::O));
        let other_dbl_o = v.by_order(j, BondOrder::Double).any(|k| k != i && v.el(k) == Element::O && !v.arom(k));
        if (jh == 1 && n_c >= 1) || (n_c >= 1 && n_al >= 2) || (jh == 1 && has_no) || jh == 2 || (jx == 2 && other_dbl_o) {
            return "O9";
        }
        let n_c_ar = others.iter().filter(|&&k| v.c_ar(k)).count();
        let n_arom = others.iter().filter(|&&k| v.arom(k)).count();
        if (jh == 1 && n_c_ar >= 1) || ((n_c + n_c_ar) >= 1 && n_arom >= 1 && (n_c + n_arom) >= 2) || (n_c_ar >= 1 && n_al >= 1) {
            return "O10";
        }
        let hetero = others.iter().filter(|&&k| v.heavy(k) && v.el(k) != Element::C).count();
        if hetero >= 2 {
            return "O11";
        }
    }
    "OS"
}

/// Type shared by the hydrogens on atom `i`.
fn hydrogen_type(mol: &Molecule, i: usize) -> &'static str {
    let v = View { mol };
    let e = v.el(i);
    if matches!(e, Element::C | Element::H) {
        return "H1";
    }
    let aliph_o = e == Element::O && !v.arom(i);
    if aliph_o {
        // The other hydrogens on the oxygen count as neighbours too.
        let others_h = v.h(i) >= 2;
        let cx4_or_c = v.mol.neighbors(i).iter().any(|&(j, _)| (v.c_al(j) && v.x(j) == 4) || v.c_ar(j));
        let not_cnos = v.mol.neighbors(i).iter().any(|&(j, _)| !matches!(v.el(j), Element::C | Element::N | Element::O));
        if cx4_or_c || not_cnos || others_h {
            return "H2";
        }
    }
    if !matches!(e, Element::C | Element::N | Element::O) {
        return "H2";
    }
    if e == Element::N || (aliph_o && v.mol.neighbors(i).iter().any(|&(j, _)| v.el(j) == Element::N)) {
        return "H3";
    }
    if aliph_o {
        let enol = v.mol.neighbors(i).iter().any(|&(j, _)| {
            v.c_al(j) && v.double(j, |k| k != i && (matches!(v.el(k), Element::C | Element::N) || (v.el(k) == Element::O && !v.arom(k))))
        });
        let peroxide = v.mol.neighbors(i).iter().any(|&(j, _)| v.el(j) == Element::O && !v.arom(j));
        if enol || peroxide {
            return "H4";
        }
    }
    "HS"
}
