use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::ca::AGNOSTIC_LITERAL;

use super::{Channel, ChannelKind, Connector, ConnectorError, NodeKind};

/// Upper bound on generated family sizes.
pub const MAX_FAMILY_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Alternator,
    AsyncMerger,
    Sequencer,
    SyncChain,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Alternator, Family::AsyncMerger, Family::Sequencer, Family::SyncChain];

    pub fn name(self) -> &'static str {
        match self {
            Family::Alternator => "alternator",
            Family::AsyncMerger => "asyncmerger",
            Family::Sequencer => "sequencer",
            Family::SyncChain => "sync_chain",
        }
    }

    pub fn min_size(self) -> usize {
        match self {
            Family::SyncChain => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown family `{s}` (expected alternator, asyncmerger, sequencer or sync_chain)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FamilySpec {
    pub family: Family,
    pub size: usize,
}

impl FamilySpec {
    pub fn new(family: Family, size: usize) -> Self {
        FamilySpec { family, size }
    }

    /// Recovers the spec from a generated name such as `alternator_3`.
    pub fn from_connector_name(name: &str) -> Option<Self> {
        let (family, size) = name.rsplit_once('_')?;
        Some(FamilySpec { family: family.parse().ok()?, size: size.parse().ok()? })
    }
}

struct Builder {
    nodes: BTreeMap<String, NodeKind>,
    channels: Vec<Channel>,
}

impl Builder {
    fn new() -> Self {
        Builder { nodes: BTreeMap::new(), channels: Vec::new() }
    }

    fn node(&mut self, name: String, kind: NodeKind) {
        self.nodes.insert(name, kind);
    }

    fn channel(&mut self, id: String, kind: ChannelKind, src: &str, snk: &str) {
        self.channels.push(Channel { id, kind, src: src.into(), snk: snk.into() });
    }
}

/// Generates a member of one of the built-in connector families.
///
/// * `alternator(k)`: producers `P1..Pk` tied by syncdrains `d1..d(k-1)`,
///   `P1` synced to merge node `M`, every other `Pi` feeding chain node
///   `N(i-1)`; buffers `Fi` shift from `Ni` towards `M` (`N0 = M`), and `M`
///   feeds consumer `Z`.
/// * `asyncmerger(k)`: buffers `Fi` from each `Pi` into `M`, then `M -> Z`.
/// * `sequencer(k)`: a ring of buffers `Fi` from `R(i-1)` to `Ri` around
///   internal nodes `R1..Rk`, with `F1` (out of `Rk`) holding the token;
///   each `Ri` syncs to its own consumer `Bi`.
/// * `sync_chain(n)`: `n` sync channels in series from `A` to `B`.
pub fn gen_family(spec: FamilySpec) -> Result<Connector, ConnectorError> {
    let FamilySpec { family, size: k } = spec;
    if k < family.min_size() {
        return Err(ConnectorError::InvalidSize {
            family: family.to_string(),
            size: k,
            reason: format!("must be at least {}", family.min_size()),
        });
    }
    if k > MAX_FAMILY_SIZE {
        return Err(ConnectorError::InvalidSize {
            family: family.to_string(),
            size: k,
            reason: format!("must be at most {MAX_FAMILY_SIZE}"),
        });
    }
    let mut b = Builder::new();
    match family {
        Family::Alternator => {
            for i in 1..=k {
                b.node(format!("P{i}"), NodeKind::Source);
            }
            b.node("Z".into(), NodeKind::Sink);
            b.node("M".into(), NodeKind::Internal);
            for i in 1..k {
                b.node(format!("N{i}"), NodeKind::Internal);
            }
            let chain = |i: usize| if i == 0 { "M".to_string() } else { format!("N{i}") };
            for i in 1..k {
                b.channel(format!("d{i}"), ChannelKind::SyncDrain, &format!("P{i}"), &format!("P{}", i + 1));
            }
            b.channel("s1".into(), ChannelKind::Sync, "P1", "M");
            for i in 1..k {
                b.channel(format!("s{}", i + 1), ChannelKind::Sync, &format!("P{}", i + 1), &chain(i));
            }
            for i in 1..k {
                b.channel(format!("F{i}"), ChannelKind::Fifo1, &chain(i), &chain(i - 1));
            }
            b.channel("sz".into(), ChannelKind::Sync, "M", "Z");
        }
        Family::AsyncMerger => {
            for i in 1..=k {
                b.node(format!("P{i}"), NodeKind::Source);
            }
            b.node("Z".into(), NodeKind::Sink);
            b.node("M".into(), NodeKind::Internal);
            for i in 1..=k {
                b.channel(format!("F{i}"), ChannelKind::Fifo1, &format!("P{i}"), "M");
            }
            b.channel("sz".into(), ChannelKind::Sync, "M", "Z");
        }
        Family::Sequencer => {
            for i in 1..=k {
                b.node(format!("R{i}"), NodeKind::Internal);
                b.node(format!("B{i}"), NodeKind::Sink);
            }
            for i in 1..=k {
                let prev = if i == 1 { k } else { i - 1 };
                let kind = if i == 1 { ChannelKind::Fifo1Full(AGNOSTIC_LITERAL.into()) } else { ChannelKind::Fifo1 };
                b.channel(format!("F{i}"), kind, &format!("R{prev}"), &format!("R{i}"));
            }
            for i in 1..=k {
                b.channel(format!("b{i}"), ChannelKind::Sync, &format!("R{i}"), &format!("B{i}"));
            }
        }
        Family::SyncChain => {
            b.node("A".into(), NodeKind::Source);
            b.node("B".into(), NodeKind::Sink);
            for i in 1..k {
                b.node(format!("X{i}"), NodeKind::Internal);
            }
            let at = |i: usize| match i {
                0 => "A".to_string(),
                i if i == k => "B".to_string(),
                i => format!("X{i}"),
            };
            for i in 1..=k {
                b.channel(format!("s{i}"), ChannelKind::Sync, &at(i - 1), &at(i));
            }
        }
    }
    Connector::new(format!("{family}_{k}"), b.nodes, b.channels, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(c: &Connector, kind: fn(&ChannelKind) -> bool) -> usize {
        c.channels().iter().filter(|ch| kind(&ch.kind)).count()
    }

    #[test]
    fn alternator_shape() {
        let c = gen_family(FamilySpec::new(Family::Alternator, 3)).unwrap();
        assert_eq!(c.name(), "alternator_3");
        assert_eq!(count(&c, |k| *k == ChannelKind::Fifo1), 2);
        assert_eq!(count(&c, |k| *k == ChannelKind::SyncDrain), 2);
        assert_eq!(count(&c, |k| *k == ChannelKind::Sync), 4);
        assert_eq!(c.nodes().len(), 7);
        assert_eq!(c.source_ports().len(), 3);
        assert_eq!(c.sink_ports().len(), 1);
    }

    #[test]
    fn asyncmerger_shape() {
        let c = gen_family(FamilySpec::new(Family::AsyncMerger, 3)).unwrap();
        let into_m = c.channels().iter().filter(|ch| ch.kind == ChannelKind::Fifo1 && ch.snk == "M").count();
        assert_eq!(into_m, 3);
    }

    #[test]
    fn sync_chain_base_case_is_one_sync() {
        let c = gen_family(FamilySpec::new(Family::SyncChain, 1)).unwrap();
        assert_eq!(c.nodes().len(), 2);
        assert_eq!(c.channels().len(), 1);
        assert_eq!(c.channels()[0].kind, ChannelKind::Sync);
    }

    #[test]
    fn sequencer_has_one_token() {
        let c = gen_family(FamilySpec::new(Family::Sequencer, 4)).unwrap();
        assert_eq!(count(&c, |k| matches!(k, ChannelKind::Fifo1Full(_))), 1);
        assert_eq!(count(&c, |k| *k == ChannelKind::Fifo1), 3);
    }

    #[test]
    fn sizes_are_bounded() {
        for f in Family::ALL {
            assert!(matches!(
                gen_family(FamilySpec::new(f, f.min_size() - 1)),
                Err(ConnectorError::InvalidSize { .. })
            ));
            assert!(gen_family(FamilySpec::new(f, MAX_FAMILY_SIZE + 1)).is_err());
            assert!(gen_family(FamilySpec::new(f, f.min_size())).is_ok());
        }
    }

    #[test]
    fn family_names_parse() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("ring".parse::<Family>().is_err());
    }
}
