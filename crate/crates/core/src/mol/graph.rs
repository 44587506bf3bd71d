//! Molecular graph with hydrogens stored as per-atom counts.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    H,
    C,
    N,
    O,
    F,
}

impl Element {
    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
        }
    }

    /// Standard atomic weight.
    pub fn mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to valence; aromatic bonds count 1.5.
    pub fn valence(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    pub hydrogens: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, i: usize) -> usize {
        if self.a == i {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    rings: Vec<Vec<usize>>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, raw: Vec<(usize, usize, BondOrder)>) -> Self {
        let n = atoms.len();
        let in_ring = ring_bonds(n, &raw);
        let bonds: Vec<Bond> = raw.iter().zip(&in_ring).map(|(&(a, b, order), &r)| Bond { a, b, order, in_ring: r }).collect();
        let mut adjacency = vec![Vec::new(); n];
        for (k, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, k));
            adjacency[b.b].push((b.a, k));
        }
        let mut mol = Self { atoms, bonds, adjacency, rings: Vec::new() };
        mol.rings = mol.smallest_rings();
        mol
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbour, bond index)` pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Heavy neighbours plus hydrogens.
    pub fn connections(&self, i: usize) -> usize {
        self.degree(i) + self.atoms[i].hydrogens as usize
    }

    pub fn total_hydrogens(&self) -> usize {
        self.atoms.iter().map(|a| a.hydrogens as usize).sum()
    }

    pub fn atom_in_ring(&self, i: usize) -> bool {
        self.adjacency[i].iter().any(|&(_, k)| self.bonds[k].in_ring)
    }

    /// Smallest set of smallest rings, each as atom indices in ring order
    /// starting from the lowest index.
    pub fn rings(&self) -> Vec<Vec<usize>> {
        self.rings.clone()
    }

    pub fn ring_list(&self) -> &[Vec<usize>] {
        &self.rings
    }

    /// Number of independent cycles.
    pub fn ring_count(&self) -> usize {
        self.rings.len()
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.atoms.len()];
        let mut count = 0;
        for s in 0..self.atoms.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(w, _)| w == b).map(|&(_, k)| k)
    }

    /// Horton candidate cycles reduced to a minimum cycle basis by Gaussian
    /// elimination over GF(2).
    fn smallest_rings(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let m = self.bonds.len();
        let target = (m + self.component_count()).saturating_sub(n);
        if target == 0 {
            return Vec::new();
        }
        let words = m.div_ceil(64);
        let mut candidates: Vec<(usize, Vec<usize>, Vec<u64>)> = Vec::new();
        let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
        for v in 0..n {
            if !self.atom_in_ring(v) {
                continue;
            }
            let (dist, parent) = self.bfs(v);
            for (k, b) in self.bonds.iter().enumerate() {
                if !b.in_ring {
                    continue;
                }
                let (x, y) = (b.a, b.b);
                if dist[x] == usize::MAX || dist[y] == usize::MAX {
                    continue;
                }
                if parent[x] == Some(k) || parent[y] == Some(k) {
                    continue;
                }
                let px = self.path_to_root(x, &parent);
                let py = self.path_to_root(y, &parent);
                let sx: BTreeSet<usize> = px.iter().copied().collect();
                if py.iter().filter(|a| sx.contains(a)).count() != 1 {
                    continue;
                }
                let mut bits = vec![0u64; words];
                let mut mark = |a: usize, b: usize| {
                    let kk = self.bond_between(a, b).unwrap_or(k);
                    bits[kk / 64] ^= 1 << (kk % 64);
                };
                for w in px.windows(2) {
                    mark(w[0], w[1]);
                }
                for w in py.windows(2) {
                    mark(w[0], w[1]);
                }
                mark(x, y);
                if seen.insert(bits.clone()) {
                    let mut ring: Vec<usize> = px.iter().rev().copied().collect();
                    ring.extend(&py[..py.len() - 1]);
                    let size = ring.len();
                    candidates.push((size, canonical_ring(ring), bits));
                }
            }
        }
        candidates.sort();
        let mut basis: Vec<Vec<u64>> = Vec::new();
        let mut rings = Vec::new();
        for (_, ring, bits) in candidates {
            if rings.len() == target {
                break;
            }
            let mut r = bits.clone();
            for b in &basis {
                let lead = leading_bit(b);
                if let Some(l) = lead {
                    if r[l / 64] >> (l % 64) & 1 == 1 {
                        for (x, y) in r.iter_mut().zip(b) {
                            *x ^= y;
                        }
                    }
                }
            }
            if leading_bit(&r).is_some() {
                basis.push(r);
                basis.sort_by_key(|b| core::cmp::Reverse(leading_bit(b)));
                rings.push(ring);
            }
        }
        rings.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        rings
    }

    fn bfs(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let n = self.atoms.len();
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![None; n];
        let mut queue = alloc::collections::VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            let mut next: Vec<(usize, usize)> = self.adjacency[v].iter().copied().filter(|&(_, k)| self.bonds[k].in_ring).collect();
            next.sort_unstable();
            for (w, k) in next {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = Some(k);
                    queue.push_back(w);
                }
            }
        }
        (dist, parent)
    }

    /// Atoms from `x` back to the BFS root, inclusive.
    fn path_to_root(&self, x: usize, parent: &[Option<usize>]) -> Vec<usize> {
        let mut path = vec![x];
        let mut v = x;
        while let Some(k) = parent[v] {
            v = self.bonds[k].other(v);
            path.push(v);
        }
        path
    }

    /// Marks rings (and pairs of fused rings) with 4n+2 pi electrons as
    /// aromatic, working from a Kekulé structure.
    pub(crate) fn perceive_aromaticity(&mut self) {
        let electrons: Vec<Option<u8>> = (0..self.atoms.len()).map(|i| self.pi_electrons(i)).collect();
        let mut systems: Vec<Vec<usize>> = self.rings.clone();
        for (i, a) in self.rings.iter().enumerate() {
            for b in &self.rings[i + 1..] {
                let shared = a.iter().filter(|x| b.contains(x)).count();
                if shared == 2 {
                    let mut union: Vec<usize> = a.iter().chain(b).copied().collect();
                    union.sort_unstable();
                    union.dedup();
                    systems.push(union);
                }
            }
        }
        let mut aromatic_atoms = vec![false; self.atoms.len()];
        let mut aromatic_bonds = vec![false; self.bonds.len()];
        for ring in &systems {
            let mut total = 0u32;
            let mut ok = true;
            for &i in ring {
                match electrons[i] {
                    Some(e) => total += e as u32,
                    None => ok = false,
                }
            }
            if ok && total % 4 == 2 {
                for &i in ring {
                    aromatic_atoms[i] = true;
                }
                for (k, b) in self.bonds.iter().enumerate() {
                    if b.in_ring && ring.contains(&b.a) && ring.contains(&b.b) {
                        aromatic_bonds[k] = true;
                    }
                }
            }
        }
        for (a, &f) in self.atoms.iter_mut().zip(&aromatic_atoms) {
            a.aromatic = f;
        }
        for (b, &f) in self.bonds.iter_mut().zip(&aromatic_bonds) {
            if f {
                b.order = BondOrder::Aromatic;
            }
        }
    }

    fn pi_electrons(&self, i: usize) -> Option<u8> {
        let a = self.atoms[i];
        let mut double = None;
        for &(w, k) in &self.adjacency[i] {
            match self.bonds[k].order {
                BondOrder::Triple | BondOrder::Aromatic => return None,
                BondOrder::Double if double.is_some() => return None,
                BondOrder::Double => double = Some((w, k)),
                BondOrder::Single => {}
            }
        }
        if let Some((w, k)) = double {
            if self.bonds[k].in_ring {
                return Some(1);
            }
            return match self.atoms[w].element {
                Element::N | Element::O => Some(0),
                _ => None,
            };
        }
        match (a.element, a.charge) {
            (Element::C, -1) | (Element::N, -1) => Some(2),
            (Element::C, 1) => Some(0),
            (Element::N, 0) if self.connections(i) == 3 => Some(2),
            (Element::O, 0) => Some(2),
            _ => None,
        }
    }
}

fn leading_bit(bits: &[u64]) -> Option<usize> {
    bits.iter().enumerate().rev().find(|(_, &w)| w != 0).map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// Rotates a ring to start at its lowest atom and walk towards the lower
/// of that atom's two ring neighbours.
fn canonical_ring(mut ring: Vec<usize>) -> Vec<usize> {
    let n = ring.len();
    let start = (0..n).min_by_key(|&i| ring[i]).unwrap_or(0);
    ring.rotate_left(start);
    if n > 2 && ring[n - 1] < ring[1] {
        ring[1..].reverse();
    }
    ring
}

/// Flags bonds that lie on a cycle (the non-bridges).
pub(crate) fn ring_bonds(n: usize, bonds: &[(usize, usize, BondOrder)]) -> Vec<bool> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(a, b, _)) in bonds.iter().enumerate() {
        adj[a].push((b, k));
        adj[b].push((a, k));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // Iterative DFS: (vertex, parent edge, next neighbour index).
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (v, pe, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let (w, k) = adj[v][*next];
                *next += 1;
                if Some(k) == pe {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, Some(k), 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let (Some(k), Some(&(u, _, _))) = (pe, stack.last()) {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        is_bridge[k] = true;
                    }
                }
            }
        }
    }
    is_bridge.iter().map(|b| !b).collect()
}

#[cfg(test)]
mod tests {
    use super::super::parse_smiles;

    #[test]
    fn ring_perception() {
        assert_eq!(parse_smiles("CCO").unwrap().ring_count(), 0);
        assert_eq!(parse_smiles("C1CC2CCC1C2").unwrap().ring_count(), 2);
        let naph = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(naph.ring_count(), 2);
        assert!(naph.ring_list().iter().all(|r| r.len() == 6));
        let cubane = parse_smiles("C12C3C4C1C5C2C3C45").unwrap();
        assert_eq!(cubane.ring_count(), 5);
        assert!(cubane.ring_list().iter().all(|r| r.len() == 4));
    }

    #[test]
    fn aromaticity_from_kekule_input() {
        let arom = |s: &str| parse_smiles(s).unwrap().atoms().iter().filter(|a| a.aromatic).count();
        assert_eq!(arom("C1=CC=CC=C1"), 6);
        assert_eq!(arom("C1=CC2=CC=CC=C2C=C1"), 10);
        assert_eq!(arom("O1C=CC=C1"), 5);
        assert_eq!(arom("N1C=CC=C1"), 5);
        assert_eq!(arom("O=C1C=CC(=O)C=C1"), 0);
        assert_eq!(arom("O=C1C=CC=CN1"), 6);
        assert_eq!(arom("C1=CCC=C1"), 0);
        assert_eq!(arom("c1ccc1"), 0);
        assert_eq!(arom("C1=CC=CC=CC=C1"), 0);
    }

    #[test]
    fn bridges_are_not_ring_bonds() {
        let m = parse_smiles("C1CC1CC1CC1").unwrap();
        let ring: usize = m.bonds().iter().filter(|b| b.in_ring).count();
        assert_eq!(ring, 6);
        assert_eq!(m.component_count(), 1);
        assert_eq!(parse_smiles("C1CC1.O").unwrap().component_count(), 2);
    }
}
