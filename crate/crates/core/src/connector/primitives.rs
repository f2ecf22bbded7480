use std::collections::BTreeMap;
use std::fmt;

use crate::ca::{ConstraintAutomaton, DataDomain, Guard, Literal, PortName, SyncSet, Transition, AGNOSTIC_LITERAL};

use super::{external_port, ChannelKind, Connector, ConnectorError, NodeKind};

/// What a primitive automaton was derived from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    Channel(String),
    Node(String),
}

impl Owner {
    pub fn id(&self) -> &str {
        match self {
            Owner::Channel(id) | Owner::Node(id) => id,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveCA {
    pub owner: Owner,
    pub automaton: ConstraintAutomaton,
}

fn single_state(ports: Vec<PortName>, labels: Vec<(SyncSet, Guard)>, d: &DataDomain) -> ConstraintAutomaton {
    let transitions = labels
        .into_iter()
        .map(|(sync, guard)| Transition {
            from: 0,
            sync,
            guard: guard.normalize(d).expect("equality guards over one port class are satisfiable"),
            to: 0,
        })
        .collect();
    ConstraintAutomaton::new(ports, vec!["q".into()], 0, transitions, d.clone()).expect("well-formed primitive")
}

fn full_state(d: &DataDomain, lit: &Literal) -> String {
    if d.is_agnostic() {
        "full".into()
    } else {
        format!("full({lit})")
    }
}

fn fifo(i: PortName, o: PortName, init: Option<&str>, d: &DataDomain) -> Result<ConstraintAutomaton, ConnectorError> {
    let mut states = vec!["empty".to_string()];
    let mut transitions = Vec::new();
    for (k, lit) in d.values().iter().enumerate() {
        states.push(full_state(d, lit));
        let full = k + 1;
        let eq = |p: &PortName| Guard::eq_literal(p.clone(), lit.clone()).normalize(d).expect("literal in domain");
        transitions.push(Transition { from: 0, sync: SyncSet::new([i.clone()]), guard: eq(&i), to: full });
        transitions.push(Transition { from: full, sync: SyncSet::new([o.clone()]), guard: eq(&o), to: 0 });
    }
    let initial = match init {
        None => 0,
        Some(lit) => {
            let lit = if d.is_agnostic() { AGNOSTIC_LITERAL } else { lit };
            1 + d
                .values()
                .iter()
                .position(|v| v.as_str() == lit)
                .ok_or_else(|| ConnectorError::DomainMismatch(format!("initial literal `{lit}` not in domain")))?
        }
    };
    Ok(ConstraintAutomaton::new([i, o], states, initial, transitions, d.clone())?)
}

/// Small automata for every channel and node of `c`, sorted by owner id.
///
/// Channel ends are named `<id>.src` / `<id>.snk` and boundary nodes get
/// `<node>.ext`. Nodes merge their inputs and replicate to all outputs: a
/// source node's input is its external port, a sink node's output is.
pub fn primitive_automata(c: &Connector, d: &DataDomain) -> Result<Vec<PrimitiveCA>, ConnectorError> {
    if let Some(declared) = c.declared_domain() {
        let expected = DataDomain::explicit(declared)?;
        if &expected != d {
            return Err(ConnectorError::DomainMismatch(format!(
                "connector `{}` declares domain {{{}}}",
                c.name(),
                declared.join(",")
            )));
        }
    }
    let mut out = Vec::new();
    let mut inputs: BTreeMap<&str, Vec<PortName>> = BTreeMap::new();
    let mut outputs: BTreeMap<&str, Vec<PortName>> = BTreeMap::new();
    for ch in c.channels() {
        let (src, snk) = (ch.src_port(), ch.snk_port());
        let both = SyncSet::new([src.clone(), snk.clone()]);
        let automaton = match &ch.kind {
            ChannelKind::Sync => {
                single_state(vec![src.clone(), snk.clone()], vec![(both, Guard::eq_ports(src.clone(), snk.clone()))], d)
            }
            ChannelKind::SyncDrain => single_state(vec![src.clone(), snk.clone()], vec![(both, Guard::top())], d),
            ChannelKind::Fifo1 => fifo(src.clone(), snk.clone(), None, d)?,
            ChannelKind::Fifo1Full(lit) => fifo(src.clone(), snk.clone(), Some(lit), d)?,
        };
        out.push(PrimitiveCA { owner: Owner::Channel(ch.id.clone()), automaton });
        for (node, port) in ch.node_outputs() {
            outputs.entry(node).or_default().push(port);
        }
        for (node, port) in ch.node_inputs() {
            inputs.entry(node).or_default().push(port);
        }
    }
    for (name, kind) in c.nodes() {
        let mut ins = inputs.remove(name.as_str()).unwrap_or_default();
        let mut outs = outputs.remove(name.as_str()).unwrap_or_default();
        match kind {
            NodeKind::Source => ins.push(external_port(name)),
            NodeKind::Sink => outs.push(external_port(name)),
            NodeKind::Internal => {}
        }
        let labels = ins
            .iter()
            .map(|i| {
                let sync = SyncSet::new(std::iter::once(i.clone()).chain(outs.iter().cloned()));
                let guard =
                    Guard::from_atoms(outs.iter().flat_map(|o| Guard::eq_ports(i.clone(), o.clone()).atoms().to_vec()));
                (sync, guard)
            })
            .collect();
        let ports = ins.iter().chain(outs.iter()).cloned().collect();
        out.push(PrimitiveCA { owner: Owner::Node(name.clone()), automaton: single_state(ports, labels, d) });
    }
    out.sort_by(|a, b| a.owner.id().cmp(b.owner.id()));
    Ok(out)
}
