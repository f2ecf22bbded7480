use std::collections::BTreeMap;

use super::{DataDomain, Literal, PortName, SyncSet};

/// One equality atom of a data constraint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `d(a) = d(b)`
    Ports(PortName, PortName),
    /// `d(a) = literal`
    Literal(PortName, Literal),
}

/// A conjunction of equality atoms. The empty conjunction is `true`.
///
/// Equality conjunctions are closed under conjunction and existential
/// quantification, so every guard has a canonical form computed from the
/// equivalence classes of its ports. Two satisfiable guards over a domain
/// with at least two values denote the same assignment set iff their
/// canonical forms are equal; over a singleton domain every satisfiable
/// guard is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    atoms: Vec<Atom>,
}

struct Classes {
    ports: Vec<PortName>,
    parent: Vec<usize>,
    lit: Vec<Option<Literal>>,
}

impl Classes {
    fn new() -> Self {
        Classes { ports: Vec::new(), parent: Vec::new(), lit: Vec::new() }
    }

    fn index(&mut self, index_of: &mut BTreeMap<PortName, usize>, p: &PortName) -> usize {
        if let Some(&i) = index_of.get(p) {
            return i;
        }
        let i = self.ports.len();
        self.ports.push(p.clone());
        self.parent.push(i);
        self.lit.push(None);
        index_of.insert(p.clone(), i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Returns false on a literal conflict.
    fn bind(&mut self, i: usize, l: &Literal) -> bool {
        let r = self.find(i);
        match &self.lit[r] {
            Some(existing) => existing == l,
            None => {
                self.lit[r] = Some(l.clone());
                true
            }
        }
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let la = self.lit[ra].take();
        let lb = self.lit[rb].take();
        self.parent[rb] = ra;
        match (la, lb) {
            (Some(x), Some(y)) if x != y => false,
            (Some(x), _) | (_, Some(x)) => {
                self.lit[ra] = Some(x);
                true
            }
            (None, None) => true,
        }
    }

    fn build<'a>(
        atoms: impl IntoIterator<Item = &'a Atom>,
        fixed: &BTreeMap<PortName, Literal>,
    ) -> Option<(Classes, BTreeMap<PortName, usize>)> {
        let mut c = Classes::new();
        let mut idx = BTreeMap::new();
        for atom in atoms {
            match atom {
                Atom::Ports(a, b) => {
                    let (ia, ib) = (c.index(&mut idx, a), c.index(&mut idx, b));
                    if !c.union(ia, ib) {
                        return None;
                    }
                }
                Atom::Literal(a, l) => {
                    let ia = c.index(&mut idx, a);
                    if !c.bind(ia, l) {
                        return None;
                    }
                }
            }
        }
        for (p, l) in fixed {
            let i = c.index(&mut idx, p);
            if !c.bind(i, l) {
                return None;
            }
        }
        Some((c, idx))
    }

    /// Port groups (sorted) with their bound literal, skipping dropped ports.
    fn groups(&mut self, keep: impl Fn(&PortName) -> bool) -> Vec<(Vec<PortName>, Option<Literal>)> {
        let mut by_root: BTreeMap<usize, Vec<PortName>> = BTreeMap::new();
        let mut lits: BTreeMap<usize, Option<Literal>> = BTreeMap::new();
        for i in 0..self.ports.len() {
            let r = self.find(i);
            lits.entry(r).or_insert_with(|| self.lit[r].clone());
            if keep(&self.ports[i]) {
                by_root.entry(r).or_default().push(self.ports[i].clone());
            }
        }
        by_root
            .into_iter()
            .map(|(r, mut ports)| {
                ports.sort();
                (ports, lits[&r].clone())
            })
            .collect()
    }
}

impl Guard {
    pub fn top() -> Self {
        Guard { atoms: Vec::new() }
    }

    /// Builds a guard from raw atoms (not normalized).
    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Self {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| match a {
                Atom::Ports(x, y) if y < x => Atom::Ports(y, x),
                other => other,
            })
            .collect();
        atoms.sort();
        atoms.dedup();
        Guard { atoms }
    }

    pub fn eq_ports(a: PortName, b: PortName) -> Self {
        Self::from_atoms([Atom::Ports(a, b)])
    }

    pub fn eq_literal(a: PortName, l: Literal) -> Self {
        Self::from_atoms([Atom::Literal(a, l)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_top(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn ports(&self) -> impl Iterator<Item = &PortName> {
        self.atoms.iter().flat_map(|a| match a {
            Atom::Ports(x, y) => vec![x, y],
            Atom::Literal(x, _) => vec![x],
        })
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Literal(_, l) => Some(l),
            Atom::Ports(..) => None,
        })
    }

    /// Raw conjunction; normalize afterwards to check satisfiability.
    pub fn conjoin(&self, other: &Guard) -> Guard {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Guard::from_atoms(atoms)
    }

    /// Canonical form, or `None` when unsatisfiable over `domain`.
    pub fn normalize(&self, domain: &DataDomain) -> Option<Guard> {
        self.project(|_| true, domain)
    }

    /// Existentially quantifies the ports for which `hidden` holds.
    pub fn exists(&self, hidden: impl Fn(&PortName) -> bool, domain: &DataDomain) -> Option<Guard> {
        self.project(|p| !hidden(p), domain)
    }

    fn project(&self, keep: impl Fn(&PortName) -> bool, domain: &DataDomain) -> Option<Guard> {
        let (mut classes, _) = Classes::build(&self.atoms, &BTreeMap::new())?;
        let groups = classes.groups(keep);
        // a literal outside the domain makes the whole conjunction false,
        // even when its class is quantified away
        if classes.lit.iter().flatten().any(|l| !domain.contains(l.as_str())) {
            return None;
        }
        if domain.is_agnostic() {
            return Some(Guard::top());
        }
        let mut atoms = Vec::new();
        for (ports, lit) in groups {
            match lit {
                Some(l) => atoms.extend(ports.iter().map(|p| Atom::Literal(p.clone(), l.clone()))),
                None => {
                    let rep = &ports[0];
                    atoms.extend(ports[1..].iter().map(|p| Atom::Ports(rep.clone(), p.clone())));
                }
            }
        }
        Some(Guard::from_atoms(atoms))
    }

    pub fn rename(&self, rn: impl Fn(&PortName) -> PortName) -> Guard {
        Guard::from_atoms(self.atoms.iter().map(|a| match a {
            Atom::Ports(x, y) => Atom::Ports(rn(x), rn(y)),
            Atom::Literal(x, l) => Atom::Literal(rn(x), l.clone()),
        }))
    }

    /// Finds an assignment for `ports` that satisfies the guard and agrees
    /// with `fixed`. Unconstrained ports take the first domain value.
    pub fn solve(
        &self,
        ports: &SyncSet,
        fixed: &BTreeMap<PortName, Literal>,
        domain: &DataDomain,
    ) -> Option<BTreeMap<PortName, Literal>> {
        let (mut classes, idx) = Classes::build(&self.atoms, fixed)?;
        if classes.lit.iter().flatten().any(|l| !domain.contains(l.as_str())) {
            return None;
        }
        let mut out = BTreeMap::new();
        for p in ports.iter() {
            let v = match idx.get(p) {
                Some(&i) => {
                    let r = classes.find(i);
                    classes.lit[r].clone().unwrap_or_else(|| domain.first().clone())
                }
                None => domain.first().clone(),
            };
            out.insert(p.clone(), v);
        }
        Some(out)
    }

    pub fn satisfied_by(&self, assignment: &BTreeMap<PortName, Literal>) -> bool {
        self.atoms.iter().all(|a| match a {
            Atom::Ports(x, y) => match (assignment.get(x), assignment.get(y)) {
                (Some(u), Some(v)) => u == v,
                _ => false,
            },
            Atom::Literal(x, l) => assignment.get(x) == Some(l),
        })
    }
}
