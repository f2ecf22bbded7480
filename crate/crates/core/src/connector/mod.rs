//! Connector source language: channels glued on named nodes.

mod families;
mod parse;
mod primitives;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::unionfind::UnionFind;
use thiserror::Error;

use crate::ca::{CaError, DataDomain, PortName, AGNOSTIC_LITERAL};

pub use families::{gen_family, Family, FamilySpec, MAX_FAMILY_SIZE};
pub use parse::parse_connector;
pub use primitives::{primitive_automata, Owner, PrimitiveCA};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConnectorError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}validation error: {message}", line.map(|l| format!("{l}: ")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },
    #[error("invalid size {size} for {family}: {reason}")]
    InvalidSize { family: String, size: usize, reason: String },
    #[error("data domain mismatch: {0}")]
    DomainMismatch(String),
}

impl ConnectorError {
    fn validation(message: impl Into<String>) -> Self {
        ConnectorError::Validation { line: None, message: message.into() }
    }
}

impl From<CaError> for ConnectorError {
    fn from(e: CaError) -> Self {
        ConnectorError::DomainMismatch(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    /// Written to by a computation thread.
    Source,
    /// Read from by a computation thread.
    Sink,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Sync,
    SyncDrain,
    Fifo1,
    /// One-place buffer that starts full with the given literal.
    Fifo1Full(String),
}

impl ChannelKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            ChannelKind::Sync => "sync",
            ChannelKind::SyncDrain => "syncdrain",
            ChannelKind::Fifo1 => "fifo1",
            ChannelKind::Fifo1Full(_) => "fifo1full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    pub id: String,
    pub kind: ChannelKind,
    /// For a syncdrain, `src` and `snk` are just its two ends.
    pub src: String,
    pub snk: String,
}

impl Channel {
    pub fn src_port(&self) -> PortName {
        PortName::new(format!("{}.src", self.id))
    }

    pub fn snk_port(&self) -> PortName {
        PortName::new(format!("{}.snk", self.id))
    }

    /// Ends through which data enters the channel from a node.
    pub(crate) fn node_outputs(&self) -> Vec<(&str, PortName)> {
        match self.kind {
            ChannelKind::SyncDrain => vec![(&self.src, self.src_port()), (&self.snk, self.snk_port())],
            _ => vec![(&self.src, self.src_port())],
        }
    }

    /// Ends through which data leaves the channel into a node.
    pub(crate) fn node_inputs(&self) -> Vec<(&str, PortName)> {
        match self.kind {
            ChannelKind::SyncDrain => Vec::new(),
            _ => vec![(&self.snk, self.snk_port())],
        }
    }
}

pub fn external_port(node: &str) -> PortName {
    PortName::new(format!("{node}.ext"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connector {
    name: String,
    nodes: BTreeMap<String, NodeKind>,
    channels: Vec<Channel>,
    domain: Option<Vec<String>>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Connector {
    pub fn new(
        name: impl Into<String>,
        nodes: BTreeMap<String, NodeKind>,
        channels: Vec<Channel>,
        domain: Option<Vec<String>>,
    ) -> Result<Self, ConnectorError> {
        let c = Connector { name: name.into(), nodes, channels, domain };
        c.validate(&HashMap::new())?;
        Ok(c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &BTreeMap<String, NodeKind> {
        &self.nodes
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn declared_domain(&self) -> Option<&[String]> {
        self.domain.as_deref()
    }

    pub fn data_domain(&self) -> DataDomain {
        match &self.domain {
            Some(values) => DataDomain::explicit(values).expect("validated domain"),
            None => DataDomain::agnostic(),
        }
    }

    /// Same connector over another domain (`None` = data-agnostic).
    pub fn with_domain(&self, domain: Option<Vec<String>>) -> Result<Self, ConnectorError> {
        Connector::new(self.name.clone(), self.nodes.clone(), self.channels.clone(), domain)
    }

    pub fn source_ports(&self) -> BTreeSet<PortName> {
        self.nodes_of(NodeKind::Source).map(external_port).collect()
    }

    pub fn sink_ports(&self) -> BTreeSet<PortName> {
        self.nodes_of(NodeKind::Sink).map(external_port).collect()
    }

    pub fn external_ports(&self) -> BTreeSet<PortName> {
        let mut all = self.source_ports();
        all.extend(self.sink_ports());
        all
    }

    fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &str> {
        self.nodes.iter().filter(move |(_, k)| **k == kind).map(|(n, _)| n.as_str())
    }

    pub(crate) fn validate(&self, lines: &HashMap<String, usize>) -> Result<(), ConnectorError> {
        let at = |key: &str, message: String| ConnectorError::Validation { line: lines.get(key).copied(), message };
        if !is_identifier(&self.name) {
            return Err(ConnectorError::validation(format!("invalid connector name `{}`", self.name)));
        }
        if let Some(values) = &self.domain {
            DataDomain::explicit(values).map_err(|e| at("domain", e.to_string()))?;
        }
        if self.channels.is_empty() {
            return Err(ConnectorError::validation("connector has no channels"));
        }
        for n in self.nodes.keys() {
            if !is_identifier(n) {
                return Err(at(n, format!("invalid node name `{n}`")));
            }
        }
        let mut ids = BTreeSet::new();
        for ch in &self.channels {
            if !is_identifier(&ch.id) {
                return Err(at(&ch.id, format!("invalid channel id `{}`", ch.id)));
            }
            if !ids.insert(ch.id.as_str()) {
                return Err(at(&ch.id, format!("duplicate channel id `{}`", ch.id)));
            }
            if self.nodes.contains_key(&ch.id) {
                return Err(at(&ch.id, format!("channel id `{}` clashes with a node name", ch.id)));
            }
            for end in [&ch.src, &ch.snk] {
                if !self.nodes.contains_key(end) {
                    return Err(at(&ch.id, format!("channel `{}` attaches to undeclared node `{end}`", ch.id)));
                }
            }
            if let ChannelKind::Fifo1Full(lit) = &ch.kind {
                let ok = match &self.domain {
                    Some(values) => values.iter().any(|v| v == lit),
                    None => lit == AGNOSTIC_LITERAL,
                };
                if !ok {
                    return Err(at(
                        &ch.id,
                        format!("initial literal `{lit}` of `{}` is not in the data domain", ch.id),
                    ));
                }
            }
        }
        for ch in &self.channels {
            for (node, _) in ch.node_inputs() {
                if self.nodes[node] == NodeKind::Source {
                    return Err(at(
                        &ch.id,
                        format!("boundary source `{node}` has an incoming end of channel `{}`", ch.id),
                    ));
                }
            }
            for (node, _) in ch.node_outputs() {
                if self.nodes[node] == NodeKind::Sink {
                    return Err(at(
                        &ch.id,
                        format!("boundary sink `{node}` has an outgoing end of channel `{}`", ch.id),
                    ));
                }
            }
        }
        let index: HashMap<&str, usize> = self.nodes.keys().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut uf = UnionFind::<usize>::new(index.len());
        for ch in &self.channels {
            uf.union(index[ch.src.as_str()], index[ch.snk.as_str()]);
        }
        let root = uf.find(0);
        if let Some(n) = self.nodes.keys().find(|n| uf.find(index[n.as_str()]) != root) {
            return Err(at(n, format!("connector graph is disconnected (node `{n}` is unreachable)")));
        }
        Ok(())
    }
}

/// Source text in the line-oriented grammar accepted by [`parse_connector`].
impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "connector {}", self.name)?;
        if let Some(values) = &self.domain {
            writeln!(f, "domain {}", values.join(", "))?;
        }
        for (kw, kind) in
            [("boundary_source", NodeKind::Source), ("boundary_sink", NodeKind::Sink), ("node", NodeKind::Internal)]
        {
            let names: Vec<&str> = self.nodes_of(kind).collect();
            if !names.is_empty() {
                writeln!(f, "{kw} {}", names.join(", "))?;
            }
        }
        for ch in &self.channels {
            match &ch.kind {
                ChannelKind::SyncDrain => writeln!(f, "syncdrain {} {} -- {}", ch.id, ch.src, ch.snk)?,
                ChannelKind::Fifo1Full(lit) => writeln!(f, "fifo1full {} {} -> {} init {lit}", ch.id, ch.src, ch.snk)?,
                kind => writeln!(f, "{} {} {} -> {}", kind.keyword(), ch.id, ch.src, ch.snk)?,
            }
        }
        Ok(())
    }
}
