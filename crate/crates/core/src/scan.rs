//! Search for transitions that buffer chains can never take.
//!
//! In a chain of one-place buffers `F1..Fm` (`Ii = Fi.src`, `Oi = Fi.snk`),
//! an upward move `{Ii, O(i+1)}` shifts a datum from `F(i+1)` into `Fi`.
//! Two consecutive moves taken at once would need the middle buffer to be
//! emptied and refilled in one step, which the full product never does,
//! while a region automaton that has hidden the buffers offers such unions.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::ca::{ConstraintAutomaton, DataDomain, PortName, SyncSet};
use crate::compile::{compile, fold_region, CompileError, Strategy, UnitRole};
use crate::connector::{primitive_automata, ChannelKind, Connector, ConnectorError};
use crate::region::RegionKind;

fn input(i: usize) -> PortName {
    PortName::new(format!("F{i}.src"))
}

fn output(i: usize) -> PortName {
    PortName::new(format!("F{i}.snk"))
}

/// `x` consecutive upward moves starting at buffer `start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternResult {
    pub start: usize,
    pub moves: usize,
    pub ports: Vec<String>,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub connector: String,
    pub buffers: usize,
    pub product_states: usize,
    pub product_transitions: usize,
    pub patterns: Vec<PatternResult>,
    /// Buffers whose input and output fire together in some product transition.
    pub same_buffer_hits: Vec<usize>,
    /// Region-automaton labels that empty and refill one buffer at once.
    pub region_cross_unions: Vec<String>,
}

impl ScanReport {
    pub fn pattern_free(&self) -> bool {
        self.patterns.iter().all(|p| !p.reachable) && self.same_buffer_hits.is_empty()
    }
}

fn buffer_count(c: &Connector) -> Result<usize, CompileError> {
    let mut m = 0;
    while c.channels().iter().any(|ch| ch.id == format!("F{}", m + 1) && ch.kind == ChannelKind::Fifo1) {
        m += 1;
    }
    if m == 0 {
        return Err(ConnectorError::Validation {
            line: None,
            message: format!("connector `{}` has no buffer chain F1, F2, ...", c.name()),
        }
        .into());
    }
    Ok(m)
}

fn contains_all(sync: &SyncSet, ports: &[PortName]) -> bool {
    ports.iter().all(|p| sync.contains(p))
}

/// Scans the unhidden product of all primitives of `c` for patterns whose
/// first move lies in `starts` (all buffers when `None`).
pub fn disabled_transition_scan(
    c: &Connector,
    starts: Option<std::ops::RangeInclusive<usize>>,
    budget: usize,
) -> Result<ScanReport, CompileError> {
    let m = buffer_count(c)?;
    let d = DataDomain::agnostic();
    let prims = primitive_automata(c, &d)?;
    let members: Vec<(String, ConstraintAutomaton)> =
        prims.iter().map(|p| (p.owner.id().to_string(), p.automaton.clone())).collect();
    let (full, _) = fold_region(&members, &BTreeSet::new(), budget)?;

    let starts = starts.unwrap_or(1..=m);
    let mut patterns = Vec::new();
    for start in starts {
        // moves {Ij, O(j+1)} for j = start .. start+x-1 need buffers up to start+x
        for moves in 2..=m.saturating_sub(start) {
            let ports: Vec<PortName> = (start..start + moves).flat_map(|j| [input(j), output(j + 1)]).collect();
            let reachable = full.transitions().iter().any(|t| contains_all(&t.sync, &ports));
            let mut names: Vec<String> = ports.iter().map(|p| p.to_string()).collect();
            names.sort();
            patterns.push(PatternResult { start, moves, ports: names, reachable });
        }
    }
    let same_buffer_hits =
        (1..=m).filter(|&i| full.transitions().iter().any(|t| contains_all(&t.sync, &[input(i), output(i)]))).collect();

    let mg = compile(c, Strategy::Middleground, &d, budget)?;
    let mut region_cross_unions = BTreeSet::new();
    for u in &mg.units {
        if u.role != UnitRole::Region(RegionKind::Synchronous) {
            continue;
        }
        for t in u.automaton.transitions() {
            if (1..=m).any(|i| contains_all(&t.sync, &[input(i), output(i)])) {
                region_cross_unions.insert(t.sync.to_string());
            }
        }
    }
    let (product_states, product_transitions) = full.counts();
    Ok(ScanReport {
        connector: c.name().to_string(),
        buffers: m,
        product_states,
        product_transitions,
        patterns,
        same_buffer_hits,
        region_cross_unions: region_cross_unions.into_iter().collect(),
    })
}
