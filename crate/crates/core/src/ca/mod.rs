//! Constraint automata: representation and the operations of the algebra.
//!
//! Every automaton produced by the public operations is kept in canonical
//! form: states sorted by name, transitions sorted and deduplicated. That
//! makes every emitted artifact byte-stable.

mod bisim;
mod guard;
mod hide;
mod json;
mod product;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bisim::{bisimilar, minimize};
pub use guard::{Atom, Guard};
pub use hide::hide;
pub use json::{to_dot, CaJson, GuardAtomJson, TransitionJson};
pub use product::{product, product_bounded, product_unpruned};

/// Literal used by the singleton domain of data-agnostic mode.
pub const AGNOSTIC_LITERAL: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaError {
    #[error("operands were built over different data domains")]
    DomainMismatch,
    #[error("port `{0}` is not a port of the automaton")]
    UnknownPort(String),
    #[error("port sets differ: {left:?} vs {right:?}")]
    PortMismatch { left: Vec<String>, right: Vec<String> },
    #[error("transition budget of {budget} exceeded ({size} transitions)")]
    BudgetExceeded { budget: usize, size: usize },
    #[error("malformed automaton: {0}")]
    Malformed(String),
}

/// Identifier of a channel end (`F1.src`) or a boundary port (`A.ext`).
#[derive(Clone)]
pub struct PortName(Arc<str>);

// Names are cloned far more often than created, so most comparisons are
// between handles to the same allocation.
macro_rules! shared_str_ord {
    ($t:ty) => {
        impl PartialEq for $t {
            fn eq(&self, other: &Self) -> bool {
                Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
            }
        }

        impl Eq for $t {}

        impl std::hash::Hash for $t {
            fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
                self.0.hash(state)
            }
        }

        impl Ord for $t {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                if Arc::ptr_eq(&self.0, &other.0) {
                    std::cmp::Ordering::Equal
                } else {
                    self.0.cmp(&other.0)
                }
            }
        }

        impl PartialOrd for $t {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
    };
}

shared_str_ord!(PortName);
shared_str_ord!(Literal);

impl PortName {
    pub fn new(name: impl AsRef<str>) -> Self {
        PortName(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PortName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PortName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for PortName {
    fn from(s: &str) -> Self {
        PortName::new(s)
    }
}

impl Serialize for PortName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for PortName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(PortName::new(s))
    }
}

/// A data item flowing through ports.
#[derive(Clone)]
pub struct Literal(Arc<str>);

impl Literal {
    pub fn new(value: impl AsRef<str>) -> Self {
        Literal(Arc::from(value.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Finite, ordered set of literals all data constraints range over.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataDomain {
    values: Vec<Literal>,
}

impl DataDomain {
    /// The singleton domain: guards become vacuous.
    pub fn agnostic() -> Self {
        DataDomain { values: vec![Literal::new(AGNOSTIC_LITERAL)] }
    }

    pub fn explicit<I, S>(values: I) -> Result<Self, CaError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in values {
            let lit = Literal::new(v);
            if !seen.insert(lit.clone()) {
                return Err(CaError::Malformed(format!("duplicate literal `{lit}` in domain")));
            }
            out.push(lit);
        }
        if out.is_empty() {
            return Err(CaError::Malformed("data domain must have at least one value".into()));
        }
        Ok(DataDomain { values: out })
    }

    pub fn values(&self) -> &[Literal] {
        &self.values
    }

    pub fn is_agnostic(&self) -> bool {
        self.values.len() == 1
    }

    pub fn contains(&self, lit: &str) -> bool {
        self.values.iter().any(|v| v.as_str() == lit)
    }

    pub fn first(&self) -> &Literal {
        &self.values[0]
    }
}

impl Default for DataDomain {
    fn default() -> Self {
        DataDomain::agnostic()
    }
}

/// A sorted, duplicate-free set of ports labelling a transition.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SyncSet(Vec<PortName>);

impl SyncSet {
    pub fn new<I: IntoIterator<Item = PortName>>(ports: I) -> Self {
        let mut v: Vec<PortName> = ports.into_iter().collect();
        v.sort();
        v.dedup();
        SyncSet(v)
    }

    pub fn empty() -> Self {
        SyncSet(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PortName> {
        self.0.iter()
    }

    pub fn contains(&self, p: &PortName) -> bool {
        self.0.binary_search(p).is_ok()
    }

    pub fn union(&self, other: &SyncSet) -> SyncSet {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        SyncSet(out)
    }

    pub fn restrict(&self, keep: impl Fn(&PortName) -> bool) -> SyncSet {
        SyncSet(self.0.iter().filter(|p| keep(p)).cloned().collect())
    }

    pub fn is_subset(&self, other: &SyncSet) -> bool {
        self.0.iter().all(|p| other.contains(p))
    }

    pub fn as_slice(&self) -> &[PortName] {
        &self.0
    }
}

impl fmt::Display for SyncSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<PortName> for SyncSet {
    fn from_iter<T: IntoIterator<Item = PortName>>(iter: T) -> Self {
        SyncSet::new(iter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: usize,
    pub sync: SyncSet,
    pub guard: Guard,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintAutomaton {
    ports: Vec<PortName>,
    states: Vec<String>,
    initial: usize,
    transitions: Vec<Transition>,
    domain: DataDomain,
}

impl ConstraintAutomaton {
    /// Builds and validates an automaton, then brings it to canonical form.
    pub fn new(
        ports: impl IntoIterator<Item = PortName>,
        states: Vec<String>,
        initial: usize,
        transitions: Vec<Transition>,
        domain: DataDomain,
    ) -> Result<Self, CaError> {
        let ports = SyncSet::new(ports).0;
        if initial >= states.len() {
            return Err(CaError::Malformed(format!("initial state index {initial} out of range")));
        }
        let unique: BTreeSet<&String> = states.iter().collect();
        if unique.len() != states.len() {
            return Err(CaError::Malformed("duplicate state names".into()));
        }
        let port_set = SyncSet(ports.clone());
        for t in &transitions {
            if t.from >= states.len() || t.to >= states.len() {
                return Err(CaError::Malformed("transition endpoint out of range".into()));
            }
            if !t.sync.is_subset(&port_set) {
                return Err(CaError::Malformed(format!("sync set {} not within ports", t.sync)));
            }
            if !t.guard.ports().all(|p| t.sync.contains(p)) {
                return Err(CaError::Malformed(format!(
                    "guard of transition {} mentions ports outside its sync set",
                    t.sync
                )));
            }
            for lit in t.guard.literals() {
                if !domain.contains(lit.as_str()) {
                    return Err(CaError::Malformed(format!("literal `{lit}` not in domain")));
                }
            }
        }
        Ok(Self::assemble(ports, states, initial, transitions, domain))
    }

    /// Canonicalizes without validation; callers guarantee well-formedness.
    pub(crate) fn assemble(
        ports: Vec<PortName>,
        states: Vec<String>,
        initial: usize,
        transitions: Vec<Transition>,
        domain: DataDomain,
    ) -> Self {
        let mut order: Vec<usize> = (0..states.len()).collect();
        order.sort_by(|&a, &b| states[a].cmp(&states[b]));
        let mut remap = vec![0; states.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let states_sorted: Vec<String> = order.iter().map(|&i| states[i].clone()).collect();
        let mut transitions: Vec<Transition> =
            transitions.into_iter().map(|t| Transition { from: remap[t.from], to: remap[t.to], ..t }).collect();
        transitions.sort();
        transitions.dedup();
        ConstraintAutomaton { ports, states: states_sorted, initial: remap[initial], transitions, domain }
    }

    /// One state, no ports, no transitions: the unit of `product`.
    pub fn empty(domain: DataDomain) -> Self {
        Self::assemble(Vec::new(), vec!["q".into()], 0, Vec::new(), domain)
    }

    pub fn ports(&self) -> &[PortName] {
        &self.ports
    }

    pub fn has_port(&self, p: &PortName) -> bool {
        self.ports.binary_search(p).is_ok()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn domain(&self) -> &DataDomain {
        &self.domain
    }

    /// Exact cardinalities `(states, transitions)`.
    pub fn counts(&self) -> (usize, usize) {
        (self.states.len(), self.transitions.len())
    }

    /// Outgoing transition indices per state.
    pub fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        out
    }

    pub fn has_silent_transitions(&self) -> bool {
        self.transitions.iter().any(|t| t.sync.is_empty())
    }

    /// Removes states and transitions not reachable from the initial state.
    pub fn prune_unreachable(&self) -> ConstraintAutomaton {
        let out = self.outgoing();
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for &ti in &out[s] {
                let to = self.transitions[ti].to;
                if !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        self.restrict_states(&seen)
    }

    fn restrict_states(&self, keep: &[bool]) -> ConstraintAutomaton {
        let mut remap = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        for (i, name) in self.states.iter().enumerate() {
            if keep[i] {
                remap[i] = states.len();
                states.push(name.clone());
            }
        }
        let transitions = self
            .transitions
            .iter()
            .filter(|t| keep[t.from] && keep[t.to])
            .map(|t| Transition { from: remap[t.from], to: remap[t.to], sync: t.sync.clone(), guard: t.guard.clone() })
            .collect();
        Self::assemble(self.ports.clone(), states, remap[self.initial], transitions, self.domain.clone())
    }

    /// Renames ports; the mapping must be injective on this automaton's ports.
    pub fn rename_ports(&self, map: &BTreeMap<PortName, PortName>) -> Result<Self, CaError> {
        let rn = |p: &PortName| map.get(p).cloned().unwrap_or_else(|| p.clone());
        let ports: Vec<PortName> = self.ports.iter().map(rn).collect();
        if SyncSet::new(ports.iter().cloned()).len() != ports.len() {
            return Err(CaError::Malformed("port renaming is not injective".into()));
        }
        let transitions = self
            .transitions
            .iter()
            .map(|t| Transition {
                from: t.from,
                to: t.to,
                sync: t.sync.iter().map(rn).collect(),
                guard: t.guard.rename(rn),
            })
            .collect();
        Ok(Self::assemble(SyncSet::new(ports).0, self.states.clone(), self.initial, transitions, self.domain.clone()))
    }
}
