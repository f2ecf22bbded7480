use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Atom, CaError, ConstraintAutomaton, DataDomain, Guard, Literal, PortName, SyncSet, Transition};

/// Interchange form of an automaton. Arrays are emitted sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaJson {
    pub ports: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<TransitionJson>,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub from: String,
    pub sync: Vec<String>,
    pub guard: Vec<GuardAtomJson>,
    pub to: String,
}

/// `kind` is `"pp"` (port = port) or `"pl"` (port = literal).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardAtomJson {
    pub kind: String,
    pub a: String,
    pub b: String,
}

impl From<&ConstraintAutomaton> for CaJson {
    fn from(ca: &ConstraintAutomaton) -> Self {
        CaJson {
            ports: ca.ports().iter().map(|p| p.to_string()).collect(),
            states: ca.states().to_vec(),
            initial: ca.state_name(ca.initial()).to_string(),
            transitions: ca
                .transitions()
                .iter()
                .map(|t| TransitionJson {
                    from: ca.state_name(t.from).to_string(),
                    sync: t.sync.iter().map(|p| p.to_string()).collect(),
                    guard: t
                        .guard
                        .atoms()
                        .iter()
                        .map(|a| match a {
                            Atom::Ports(x, y) => {
                                GuardAtomJson { kind: "pp".into(), a: x.to_string(), b: y.to_string() }
                            }
                            Atom::Literal(x, l) => {
                                GuardAtomJson { kind: "pl".into(), a: x.to_string(), b: l.to_string() }
                            }
                        })
                        .collect(),
                    to: ca.state_name(t.to).to_string(),
                })
                .collect(),
            domain: ca.domain().values().iter().map(|l| l.to_string()).collect(),
        }
    }
}

impl TryFrom<CaJson> for ConstraintAutomaton {
    type Error = CaError;

    fn try_from(j: CaJson) -> Result<Self, CaError> {
        let domain = DataDomain::explicit(&j.domain)?;
        let index = |name: &str| {
            j.states.iter().position(|s| s == name).ok_or_else(|| CaError::Malformed(format!("unknown state `{name}`")))
        };
        let initial = index(&j.initial)?;
        let mut transitions = Vec::with_capacity(j.transitions.len());
        for t in &j.transitions {
            let mut atoms = Vec::with_capacity(t.guard.len());
            for g in &t.guard {
                atoms.push(match g.kind.as_str() {
                    "pp" => Atom::Ports(PortName::new(&g.a), PortName::new(&g.b)),
                    "pl" => Atom::Literal(PortName::new(&g.a), Literal::new(&g.b)),
                    other => return Err(CaError::Malformed(format!("unknown guard kind `{other}`"))),
                });
            }
            transitions.push(Transition {
                from: index(&t.from)?,
                sync: SyncSet::new(t.sync.iter().map(PortName::new)),
                guard: Guard::from_atoms(atoms),
                to: index(&t.to)?,
            });
        }
        ConstraintAutomaton::new(j.ports.iter().map(PortName::new), j.states.clone(), initial, transitions, domain)
    }
}

impl ConstraintAutomaton {
    pub fn to_json(&self) -> CaJson {
        CaJson::from(self)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("automaton serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, CaError> {
        let j: CaJson = serde_json::from_str(s).map_err(|e| CaError::Malformed(e.to_string()))?;
        ConstraintAutomaton::try_from(j)
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: one node per state, edges labelled by sorted sync set.
pub fn to_dot(name: &str, ca: &ConstraintAutomaton) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(name));
    out.push_str("  rankdir=LR;\n  __init [shape=point];\n");
    for s in ca.states() {
        let _ = writeln!(out, "  \"{}\" [shape=circle];", dot_escape(s));
    }
    let _ = writeln!(out, "  __init -> \"{}\";", dot_escape(ca.state_name(ca.initial())));
    for t in ca.transitions() {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            dot_escape(ca.state_name(t.from)),
            dot_escape(ca.state_name(t.to)),
            dot_escape(&t.sync.to_string())
        );
    }
    out.push_str("}\n");
    out
}
