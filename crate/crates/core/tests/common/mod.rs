#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use reoc::ca::{hide, product, ConstraintAutomaton, DataDomain, PortName};
use reoc::connector::{primitive_automata, Channel, ChannelKind, Connector, NodeKind, PrimitiveCA};

/// Raw shape of a random connector: a spanning tree plus extra channels.
#[derive(Debug, Clone)]
pub struct Shape {
    /// (parent index, kind code, flip direction) for nodes 1..n
    pub tree: Vec<(usize, u8, bool)>,
    /// (a, b, kind code) extra channels
    pub extra: Vec<(usize, usize, u8)>,
    /// preference for making eligible nodes boundary
    pub boundary: Vec<bool>,
}

fn kind(code: u8) -> ChannelKind {
    match code % 4 {
        0 => ChannelKind::Sync,
        1 => ChannelKind::SyncDrain,
        2 => ChannelKind::Fifo1,
        _ => ChannelKind::Fifo1Full("*".into()),
    }
}

pub fn shape(max_nodes: usize, max_extra: usize) -> impl Strategy<Value = Shape> {
    (2..=max_nodes).prop_flat_map(move |n| {
        let tree = (1..n).map(|i| (0..i, any::<u8>(), any::<bool>())).collect::<Vec<_>>();
        let extra = prop::collection::vec((0..n, 0..n, any::<u8>()), 0..=max_extra);
        let boundary = prop::collection::vec(any::<bool>(), n);
        (tree, extra, boundary).prop_map(|(tree, extra, boundary)| Shape { tree, extra, boundary })
    })
}

/// Builds a valid data-agnostic connector. Node kinds are chosen so that no
/// boundary rule is violated: a node becomes a source only without incoming
/// ends and a sink only without outgoing ends.
pub fn realize(s: &Shape) -> Connector {
    let n = s.boundary.len();
    let name = |i: usize| format!("N{i}");
    let mut channels = Vec::new();
    for (i, &(parent, code, flip)) in s.tree.iter().enumerate() {
        let child = i + 1;
        let (a, b) = if flip { (child, parent) } else { (parent, child) };
        channels.push(Channel { id: format!("c{}", channels.len()), kind: kind(code), src: name(a), snk: name(b) });
    }
    for &(a, b, code) in &s.extra {
        channels.push(Channel { id: format!("c{}", channels.len()), kind: kind(code), src: name(a), snk: name(b) });
    }
    let mut incoming = vec![false; n];
    let mut outgoing = vec![false; n];
    let idx = |s: &str| s[1..].parse::<usize>().unwrap();
    for ch in &channels {
        outgoing[idx(&ch.src)] = true;
        if ch.kind == ChannelKind::SyncDrain {
            outgoing[idx(&ch.snk)] = true;
        } else {
            incoming[idx(&ch.snk)] = true;
        }
    }
    let nodes: BTreeMap<String, NodeKind> = (0..n)
        .map(|i| {
            let k = match (s.boundary[i], incoming[i], outgoing[i]) {
                (true, false, _) => NodeKind::Source,
                (true, true, false) => NodeKind::Sink,
                _ => NodeKind::Internal,
            };
            (name(i), k)
        })
        .collect();
    Connector::new("random", nodes, channels, None).expect("generator yields valid connectors")
}

pub fn connector(max_nodes: usize, max_extra: usize) -> impl Strategy<Value = Connector> {
    shape(max_nodes, max_extra).prop_map(|s| realize(&s))
}

pub fn primitives(c: &Connector) -> Vec<PrimitiveCA> {
    primitive_automata(c, &DataDomain::agnostic()).unwrap()
}

pub fn product_all(cas: impl IntoIterator<Item = ConstraintAutomaton>) -> ConstraintAutomaton {
    let mut it = cas.into_iter();
    let first = it.next().expect("at least one automaton");
    it.fold(first, |acc, a| product(&acc, &a).unwrap())
}

/// Hides every port that is not in `keep`.
pub fn hide_to(ca: &ConstraintAutomaton, keep: &BTreeSet<PortName>) -> ConstraintAutomaton {
    let hidden: BTreeSet<PortName> = ca.ports().iter().filter(|p| !keep.contains(*p)).cloned().collect();
    hide(ca, &hidden).unwrap()
}
