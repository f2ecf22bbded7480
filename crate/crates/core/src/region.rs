//! Splitting primitive automata into synchronous and asynchronous regions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::ca::PortName;
use crate::connector::{Owner, PrimitiveCA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Synchronous,
    Asynchronous,
    Mixed,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Synchronous => "synchronous",
            RegionKind::Asynchronous => "asynchronous",
            RegionKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Asynchronous iff no transition synchronizes more than one port.
pub fn classify(p: &PrimitiveCA) -> RegionKind {
    if p.automaton.transitions().iter().all(|t| t.sync.len() <= 1) {
        RegionKind::Asynchronous
    } else {
        RegionKind::Synchronous
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub id: usize,
    pub kind: RegionKind,
    pub members: BTreeSet<Owner>,
    /// Ports that occur only among the members.
    pub internal_ports: BTreeSet<PortName>,
    /// Ports shared with another region or attached to the environment.
    pub boundary_ports: BTreeSet<PortName>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    regions: Vec<Region>,
    edges: BTreeSet<(usize, usize)>,
    /// port -> owners of the primitives mentioning it
    occurrences: BTreeMap<PortName, BTreeSet<Owner>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeOrder {
    Ascending,
    Descending,
}

impl RegionPartition {
    /// Regions in ascending id order.
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, id: usize) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// Unordered adjacency as pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn neighbors(&self, id: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| match (a == id, b == id) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn m1(&self) -> usize {
        self.regions.iter().filter(|r| r.kind == RegionKind::Asynchronous).count()
    }

    pub fn m2(&self) -> usize {
        self.regions.len() - self.m1()
    }

    /// Ports that occur in exactly one primitive; computation threads attach here.
    pub fn is_external(&self, p: &PortName) -> bool {
        self.occurrences.get(p).is_some_and(|o| o.len() == 1)
    }

    fn from_groups(
        groups: Vec<(RegionKind, BTreeSet<Owner>)>,
        occurrences: BTreeMap<PortName, BTreeSet<Owner>>,
    ) -> Self {
        let mut owner_region: BTreeMap<&Owner, usize> = BTreeMap::new();
        for (id, (_, members)) in groups.iter().enumerate() {
            for m in members {
                owner_region.insert(m, id);
            }
        }
        let mut regions: Vec<Region> = groups
            .iter()
            .enumerate()
            .map(|(id, (kind, members))| Region {
                id,
                kind: *kind,
                members: members.clone(),
                internal_ports: BTreeSet::new(),
                boundary_ports: BTreeSet::new(),
            })
            .collect();
        let mut edges = BTreeSet::new();
        for (port, owners) in &occurrences {
            let touched: BTreeSet<usize> = owners.iter().map(|o| owner_region[o]).collect();
            let internal = touched.len() == 1 && owners.len() > 1;
            for &r in &touched {
                if internal {
                    regions[r].internal_ports.insert(port.clone());
                } else {
                    regions[r].boundary_ports.insert(port.clone());
                }
            }
            for &a in &touched {
                for &b in touched.range(a + 1..) {
                    edges.insert((a, b));
                }
            }
        }
        RegionPartition { regions, edges, occurrences }
    }

    fn renumbered(&self, keep_ids: bool) -> Self {
        let groups = self.regions.iter().map(|r| (r.kind, r.members.clone())).collect();
        let mut out = Self::from_groups(groups, self.occurrences.clone());
        if keep_ids {
            let ids: Vec<usize> = self.regions.iter().map(|r| r.id).collect();
            for r in &mut out.regions {
                r.id = ids[r.id];
            }
            out.edges = out.edges.iter().map(|&(a, b)| (ids[a], ids[b])).collect();
        }
        out
    }

    /// Serializable report.
    pub fn report(&self) -> RegionReport {
        RegionReport {
            regions: self
                .regions
                .iter()
                .map(|r| RegionEntry {
                    id: r.id,
                    kind: r.kind,
                    members: r.members.iter().map(|m| m.id().to_string()).collect(),
                    boundary_ports: r.boundary_ports.iter().map(|p| p.to_string()).collect(),
                })
                .collect(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            m1: self.m1(),
            m2: self.m2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionReport {
    pub regions: Vec<RegionEntry>,
    pub edges: Vec<[usize; 2]>,
    pub m1: usize,
    pub m2: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionEntry {
    pub id: usize,
    pub kind: RegionKind,
    pub members: Vec<String>,
    pub boundary_ports: Vec<String>,
}

/// One region per asynchronous primitive; synchronous primitives grouped by
/// connected components of the port-sharing graph. Region ids follow the
/// order of each region's smallest member id.
pub fn split(primitives: &[PrimitiveCA]) -> RegionPartition {
    let mut occurrences: BTreeMap<PortName, BTreeSet<Owner>> = BTreeMap::new();
    for p in primitives {
        for port in p.automaton.ports() {
            occurrences.entry(port.clone()).or_default().insert(p.owner.clone());
        }
    }
    let kinds: Vec<RegionKind> = primitives.iter().map(classify).collect();
    let mut uf = UnionFind::<usize>::new(primitives.len());
    let index: BTreeMap<&Owner, usize> = primitives.iter().enumerate().map(|(i, p)| (&p.owner, i)).collect();
    for owners in occurrences.values() {
        let sync: Vec<usize> =
            owners.iter().map(|o| index[o]).filter(|&i| kinds[i] == RegionKind::Synchronous).collect();
        for w in sync.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let mut order: Vec<usize> = (0..primitives.len()).collect();
    order.sort_by(|&a, &b| primitives[a].owner.id().cmp(primitives[b].owner.id()));
    let mut groups: Vec<(RegionKind, BTreeSet<Owner>)> = Vec::new();
    let mut group_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    for i in order {
        let owner = primitives[i].owner.clone();
        if kinds[i] == RegionKind::Asynchronous {
            groups.push((RegionKind::Asynchronous, BTreeSet::from([owner])));
        } else {
            let root = uf.find(i);
            match group_of_root.get(&root) {
                Some(&g) => {
                    groups[g].1.insert(owner);
                }
                None => {
                    group_of_root.insert(root, groups.len());
                    groups.push((RegionKind::Synchronous, BTreeSet::from([owner])));
                }
            }
        }
    }
    RegionPartition::from_groups(groups, occurrences)
}

/// Absorbs every asynchronous region that has no external port and exactly
/// one neighbor, which is synchronous or mixed, into that neighbor (which
/// becomes mixed). Scans in ascending id order until nothing changes.
pub fn merge_mixed(pt: &RegionPartition) -> RegionPartition {
    merge_mixed_ordered(pt, MergeOrder::Ascending)
}

pub fn merge_mixed_ordered(pt: &RegionPartition, order: MergeOrder) -> RegionPartition {
    let mut cur = pt.clone();
    loop {
        let mut ids: Vec<usize> = cur.regions.iter().map(|r| r.id).collect();
        if order == MergeOrder::Descending {
            ids.reverse();
        }
        let mut changed = false;
        for id in ids {
            let Some(r) = cur.region(id) else { continue };
            if r.kind != RegionKind::Asynchronous || r.boundary_ports.iter().any(|p| cur.is_external(p)) {
                continue;
            }
            let nb = cur.neighbors(id);
            let [target] = nb.iter().copied().collect::<Vec<_>>()[..] else { continue };
            let target_kind = cur.region(target).map(|t| t.kind);
            if !matches!(target_kind, Some(RegionKind::Synchronous | RegionKind::Mixed)) {
                continue;
            }
            let absorbed = r.members.clone();
            let t = cur.regions.iter_mut().find(|r| r.id == target).expect("neighbor exists");
            t.members.extend(absorbed);
            t.kind = RegionKind::Mixed;
            cur.regions.retain(|r| r.id != id);
            cur = cur.renumbered(true);
            changed = true;
        }
        if !changed {
            return cur;
        }
    }
}
