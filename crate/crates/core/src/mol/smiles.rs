//! SMILES reader for molecules over C, N, O, F and H.
//!
//! Accepted: organic-subset and bracket atoms, charges -1..+1, aromatic
//! `c`, `n`, `o` inside rings, bonds `- = # :` (and `/ \` read as single),
//! ring closures `0-9` and `%nn`, branches and `.`. Isotopes, chirality and
//! atom classes are read and discarded. After parsing, hydrogens are filled
//! in, aromatic input is checked for a Kekulé structure and Kekulé input is
//! re-perceived as aromatic where a ring has 4n+2 pi electrons.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{BondOrder, Element, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Empty,
    Syntax,
    UnknownAtom,
    Bracket,
    UnclosedRing,
    UnbalancedParen,
    RingBond,
    Valence,
    Aromatic,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Empty => "empty",
            ErrorKind::Syntax => "syntax",
            ErrorKind::UnknownAtom => "unknown_atom",
            ErrorKind::Bracket => "bracket",
            ErrorKind::UnclosedRing => "unclosed_ring",
            ErrorKind::UnbalancedParen => "unbalanced_paren",
            ErrorKind::RingBond => "ring_bond",
            ErrorKind::Valence => "valence",
            ErrorKind::Aromatic => "aromatic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} error at {position}: {message}", kind.name())]
pub struct SmilesError {
    pub kind: ErrorKind,
    pub position: usize,
    pub message: String,
}

fn fail<T>(kind: ErrorKind, position: usize, message: impl Into<String>) -> Result<T, SmilesError> {
    Err(SmilesError { kind, position, message: message.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
}

#[derive(Debug, Clone)]
struct RawAtom {
    element: Element,
    aromatic: bool,
    charge: i8,
    bracket_h: Option<u8>,
    position: usize,
}

struct Parser<'s> {
    s: &'s [u8],
    i: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<(usize, usize, Option<BondSym>)>,
}

pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    if text.is_empty() {
        return fail(ErrorKind::Empty, 0, "empty string");
    }
    let mut p = Parser { s: text.as_bytes(), i: 0, atoms: Vec::new(), bonds: Vec::new() };
    p.read()?;
    build(p.atoms, p.bonds)
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn read(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondSym, usize)> = None;
        let mut stack: Vec<usize> = Vec::new();
        let mut branch_start = false;
        let mut rings: Vec<Option<(usize, Option<BondSym>, usize)>> = vec![None; 100];

        while let Some(c) = self.peek() {
            let pos = self.i;
            match c {
                b'C' | b'N' | b'O' | b'F' | b'c' | b'n' | b'o' | b'[' => {
                    let atom = if c == b'[' { self.bracket_atom()? } else { self.organic_atom() };
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    if let Some(p) = prev {
                        self.bonds.push((p, idx, pending.take().map(|b| b.0)));
                    }
                    prev = Some(idx);
                    branch_start = false;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if prev.is_none() {
                        return fail(ErrorKind::Syntax, pos, "bond without a preceding atom");
                    }
                    if pending.is_some() {
                        return fail(ErrorKind::Syntax, pos, "two bond symbols in a row");
                    }
                    let sym = match c {
                        b'=' => BondSym::Double,
                        b'#' => BondSym::Triple,
                        b':' => BondSym::Aromatic,
                        _ => BondSym::Single,
                    };
                    pending = Some((sym, pos));
                    self.i += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return fail(ErrorKind::Syntax, pos, "ring closure without a preceding atom");
                    };
                    if branch_start {
                        return fail(ErrorKind::Syntax, pos, "ring closure at the start of a branch");
                    }
                    let n = self.ring_number()?;
                    let sym = pending.take().map(|b| b.0);
                    match rings[n].take() {
                        Some((other, open_sym, _)) => {
                            if other == atom {
                                return fail(ErrorKind::RingBond, pos, format!("ring {n} closes on its own atom"));
                            }
                            if self.bonds.iter().any(|&(a, b, _)| (a, b) == (other, atom) || (a, b) == (atom, other)) {
                                return fail(ErrorKind::RingBond, pos, format!("ring {n} duplicates an existing bond"));
                            }
                            let sym = match (open_sym, sym) {
                                (Some(a), Some(b)) if a != b => {
                                    return fail(ErrorKind::RingBond, pos, format!("ring {n} has conflicting bond symbols"))
                                }
                                (a, b) => a.or(b),
                            };
                            self.bonds.push((other, atom, sym));
                        }
                        None => rings[n] = Some((atom, sym, pos)),
                    }
                }
                b'(' => {
                    if prev.is_none() || branch_start || pending.is_some() {
                        return fail(ErrorKind::Syntax, pos, "misplaced '('");
                    }
                    stack.push(prev.unwrap_or_default());
                    branch_start = true;
                    self.i += 1;
                }
                b')' => {
                    let Some(top) = stack.pop() else {
                        return fail(ErrorKind::UnbalancedParen, pos, "')' without matching '('");
                    };
                    if branch_start || pending.is_some() {
                        return fail(ErrorKind::Syntax, pos, "empty branch or dangling bond");
                    }
                    prev = Some(top);
                    self.i += 1;
                }
                b'.' => {
                    if prev.is_none() || pending.is_some() || !stack.is_empty() {
                        return fail(ErrorKind::Syntax, pos, "misplaced '.'");
                    }
                    prev = None;
                    self.i += 1;
                }
                b']' => return fail(ErrorKind::Bracket, pos, "']' without '['"),
                c if c.is_ascii_alphabetic() => {
                    return fail(ErrorKind::UnknownAtom, pos, format!("atom symbol {:?} is not supported", c as char))
                }
                c => return fail(ErrorKind::Syntax, pos, format!("unexpected {:?}", c as char)),
            }
        }
        let end = self.s.len();
        if let Some((_, at)) = pending {
            return fail(ErrorKind::Syntax, at, "dangling bond");
        }
        if prev.is_none() {
            return fail(ErrorKind::Syntax, end, "trailing '.'");
        }
        if !stack.is_empty() {
            return fail(ErrorKind::UnbalancedParen, end, "unclosed '('");
        }
        if let Some((_, _, at)) = rings.iter().flatten().min_by_key(|r| r.2) {
            return fail(ErrorKind::UnclosedRing, *at, "ring closure never closed");
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> RawAtom {
        let c = self.s[self.i];
        let position = self.i;
        self.i += 1;
        let element = match c.to_ascii_uppercase() {
            b'C' => Element::C,
            b'N' => Element::N,
            b'O' => Element::O,
            _ => Element::F,
        };
        RawAtom { element, aromatic: c.is_ascii_lowercase(), charge: 0, bracket_h: None, position }
    }

    fn ring_number(&mut self) -> Result<usize, SmilesError> {
        let pos = self.i;
        if self.s[self.i] == b'%' {
            let d = self.s.get(self.i + 1..self.i + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
            let Some(d) = d else {
                return fail(ErrorKind::Syntax, pos, "'%' must be followed by two digits");
            };
            self.i += 3;
            Ok(((d[0] - b'0') * 10 + (d[1] - b'0')) as usize)
        } else {
            self.i += 1;
            Ok((self.s[pos] - b'0') as usize)
        }
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.i += 1;
        }
        core::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, SmilesError> {
        let open = self.i;
        self.i += 1;
        let unterminated = |p: &Self| if p.i >= p.s.len() { fail(ErrorKind::Bracket, open, "unterminated bracket atom") } else { Ok(()) };
        self.digits();
        unterminated(self)?;
        let sym_start = self.i;
        let c = self.s[self.i];
        if !c.is_ascii_alphabetic() {
            return fail(ErrorKind::Bracket, sym_start, "bracket atom without an element");
        }
        self.i += 1;
        if c.is_ascii_uppercase() && self.peek().is_some_and(|d| d.is_ascii_lowercase()) {
            self.i += 1;
        }
        let (element, aromatic) = match &self.s[sym_start..self.i] {
            b"C" => (Element::C, false),
            b"N" => (Element::N, false),
            b"O" => (Element::O, false),
            b"F" => (Element::F, false),
            b"H" => (Element::H, false),
            b"c" => (Element::C, true),
            b"n" => (Element::N, true),
            b"o" => (Element::O, true),
            other => {
                let name = String::from_utf8_lossy(other).into_owned();
                return fail(ErrorKind::UnknownAtom, sym_start, format!("element {name:?} is not supported"));
            }
        };
        if self.peek() == Some(b'@') {
            self.i += 1;
            if self.peek() == Some(b'@') {
                self.i += 1;
            }
        }
        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.i += 1;
            hydrogens = match self.peek() {
                Some(d) if d.is_ascii_digit() => {
                    self.i += 1;
                    d - b'0'
                }
                _ => 1,
            };
        }
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.i += 1;
            charge = unit;
            if self.peek().is_some_and(|d| d.is_ascii_digit()) {
                charge = unit * self.digits().unwrap_or(0) as i32;
            } else {
                while self.peek() == Some(sign) {
                    self.i += 1;
                    charge += unit;
                }
            }
            if !(-1..=1).contains(&charge) {
                return fail(ErrorKind::Bracket, open, format!("charge {charge} outside -1..+1"));
            }
        }
        if self.peek() == Some(b':') {
            self.i += 1;
            if self.digits().is_none() {
                return fail(ErrorKind::Bracket, self.i, "atom class needs digits");
            }
        }
        unterminated(self)?;
        if self.s[self.i] != b']' {
            return fail(ErrorKind::Bracket, self.i, format!("unexpected {:?} in bracket atom", self.s[self.i] as char));
        }
        self.i += 1;
        Ok(RawAtom { element, aromatic, charge: charge as i8, bracket_h: Some(hydrogens), position: open })
    }
}

/// Valences allowed for an element at a formal charge, smallest first.
/// Charged atoms take the valences of their isoelectronic neutral element.
fn allowed_valences(element: Element, charge: i8) -> &'static [u8] {
    match (element, charge) {
        (Element::H, 0) => &[1],
        (Element::H, _) => &[0],
        (Element::C, 0) => &[4],
        (Element::C, _) => &[3],
        (Element::N, 0) => &[3],
        (Element::N, 1) => &[4],
        (Element::N, _) => &[2],
        (Element::O, 0) => &[2],
        (Element::O, 1) => &[3],
        (Element::O, _) => &[1],
        (Element::F, 0) => &[1],
        (Element::F, 1) => &[2],
        (Element::F, _) => &[0],
    }
}

fn build(raw: Vec<RawAtom>, raw_bonds: Vec<(usize, usize, Option<BondSym>)>) -> Result<Molecule, SmilesError> {
    let n = raw.len();
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::with_capacity(raw_bonds.len());
    for &(a, b, sym) in &raw_bonds {
        let order = match sym {
            Some(BondSym::Single) => BondOrder::Single,
            Some(BondSym::Double) => BondOrder::Double,
            Some(BondSym::Triple) => BondOrder::Triple,
            Some(BondSym::Aromatic) => BondOrder::Aromatic,
            None if raw[a].aromatic && raw[b].aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        };
        bonds.push((a, b, order));
    }
    let in_ring = super::graph::ring_bonds(n, &bonds);
    let mut atom_in_ring = vec![false; n];
    for (k, &(a, b, _)) in bonds.iter().enumerate() {
        if in_ring[k] {
            atom_in_ring[a] = true;
            atom_in_ring[b] = true;
        }
    }
    for (i, atom) in raw.iter().enumerate() {
        if atom.aromatic && !atom_in_ring[i] {
            return fail(ErrorKind::Aromatic, atom.position, "aromatic atom outside a ring");
        }
    }
    for (k, bond) in bonds.iter_mut().enumerate() {
        if bond.2 == BondOrder::Aromatic {
            if !(raw[bond.0].aromatic && raw[bond.1].aromatic) {
                return fail(ErrorKind::Aromatic, raw[bond.1].position, "aromatic bond to a non-aromatic atom");
            }
            if !in_ring[k] {
                // Ring-linking bonds such as the one in biphenyl.
                bond.2 = BondOrder::Single;
            }
        }
    }

    // Valence and hydrogens; aromatic atoms record whether they still need
    // a double bond in the Kekulé structure.
    let mut sums = vec![0u8; n];
    let mut has_double_to_o = vec![false; n];
    let mut has_triple_to_n = vec![false; n];
    for &(a, b, order) in &bonds {
        let v = match order {
            BondOrder::Aromatic => 1,
            o => o.valence() as u8,
        };
        sums[a] += v;
        sums[b] += v;
        for (x, y) in [(a, b), (b, a)] {
            if order == BondOrder::Double && raw[y].element == Element::O && raw[y].charge == 0 {
                has_double_to_o[x] = true;
            }
            if order == BondOrder::Triple && raw[y].element == Element::N {
                has_triple_to_n[x] = true;
            }
        }
    }
    let mut hydrogens = vec![0u8; n];
    let mut needs_double = vec![false; n];
    let mut separate = Vec::new();
    for (i, atom) in raw.iter().enumerate() {
        let allowed = allowed_valences(atom.element, atom.charge);
        let max = *allowed.last().unwrap_or(&0);
        let s = sums[i] + atom.bracket_h.unwrap_or(0);
        // Neutral five-valent nitrogen in nitro, N-oxide or azide form is read
        // as its charge-separated equivalent.
        let hypervalent_n =
            atom.element == Element::N && atom.charge == 0 && !atom.aromatic && s == 5 && (has_double_to_o[i] || has_triple_to_n[i]);
        if atom.aromatic {
            if s > max {
                return fail(ErrorKind::Valence, atom.position, "aromatic atom over its valence");
            }
            match atom.bracket_h {
                Some(h) => {
                    hydrogens[i] = h;
                    needs_double[i] = s < max;
                }
                None => {
                    needs_double[i] = s < max;
                    hydrogens[i] = if needs_double[i] { max - s - 1 } else { 0 };
                }
            }
        } else if hypervalent_n {
            hydrogens[i] = 0;
            separate.push(i);
        } else {
            match atom.bracket_h {
                Some(h) => {
                    if s > max {
                        return fail(ErrorKind::Valence, atom.position, format!("valence {s} exceeds {max}"));
                    }
                    hydrogens[i] = h;
                }
                None => match allowed.iter().find(|&&v| v >= s) {
                    Some(&v) => hydrogens[i] = v - s,
                    None => return fail(ErrorKind::Valence, atom.position, format!("valence {s} exceeds {max}")),
                },
            }
        }
    }

    let Some(mate) = kekule_matching(n, &bonds, &needs_double) else {
        let at = raw.iter().zip(&needs_double).find(|(_, &d)| d).map_or(0, |(a, _)| a.position);
        return fail(ErrorKind::Aromatic, at, "aromatic system has no Kekulé structure");
    };
    // Aromaticity is re-derived from the Kekulé structure, as for input
    // written with explicit double bonds.
    for bond in &mut bonds {
        if bond.2 == BondOrder::Aromatic {
            bond.2 = if mate[bond.0] == Some(bond.1) { BondOrder::Double } else { BondOrder::Single };
        }
    }

    let mut charges: Vec<i8> = raw.iter().map(|a| a.charge).collect();
    for &i in &separate {
        let to_oxide = bonds.iter().position(|&(a, b, o)| {
            o == BondOrder::Double && (a == i || b == i) && {
                let y = if a == i { b } else { a };
                raw[y].element == Element::O && charges[y] == 0
            }
        });
        let to_nitrogen = || bonds.iter().position(|&(a, b, o)| o == BondOrder::Triple && (a == i || b == i));
        if let Some(k) = to_oxide.or_else(to_nitrogen) {
            let (a, b, o) = bonds[k];
            let y = if a == i { b } else { a };
            bonds[k].2 = if o == BondOrder::Double { BondOrder::Single } else { BondOrder::Double };
            charges[i] = 1;
            charges[y] = -1;
        }
    }

    let atoms = raw
        .iter()
        .zip(hydrogens.iter().zip(&charges))
        .map(|(a, (&h, &charge))| super::graph::Atom { element: a.element, aromatic: false, charge, hydrogens: h })
        .collect();
    let mut mol = Molecule::new(atoms, bonds);
    mol.perceive_aromaticity();
    Ok(mol)
}

/// Pairs the atoms flagged in `needs` along aromatic bonds so that every one
/// of them gets exactly one double bond, if that is possible.
fn kekule_matching(n: usize, bonds: &[(usize, usize, BondOrder)], needs: &[bool]) -> Option<Vec<Option<usize>>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b, o) in bonds {
        if o == BondOrder::Aromatic && needs[a] && needs[b] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut mate: Vec<Option<usize>> = vec![None; n];
    match_from(0, &adj, needs, &mut mate).then_some(mate)
}

fn match_from(start: usize, adj: &[Vec<usize>], needs: &[bool], mate: &mut [Option<usize>]) -> bool {
    let Some(i) = (start..needs.len()).find(|&i| needs[i] && mate[i].is_none()) else {
        return true;
    };
    for &j in &adj[i] {
        if mate[j].is_none() {
            mate[i] = Some(j);
            mate[j] = Some(i);
            if match_from(i + 1, adj, needs, mate) {
                return true;
            }
            mate[i] = None;
            mate[j] = None;
        }
    }
    false
}
