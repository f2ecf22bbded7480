//! Compilation strategies: which automata become protocol units and how
//! their members are folded together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ca::{hide, minimize, product_bounded, CaError, ConstraintAutomaton, DataDomain, PortName};
use crate::connector::{primitive_automata, Connector, ConnectorError, PrimitiveCA};
use crate::region::{merge_mixed, split, RegionKind, RegionPartition};

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Centralized,
    Distributed,
    Middleground,
    Mixed,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::Centralized, Strategy::Distributed, Strategy::Middleground, Strategy::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Centralized => "centralized",
            Strategy::Distributed => "distributed",
            Strategy::Middleground => "middleground",
            Strategy::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected centralized, distributed, middleground or mixed)"))
    }
}

/// One intermediate product of a fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldStep {
    pub unit: usize,
    pub step: usize,
    pub operand: String,
    pub states: usize,
    pub transitions: usize,
    pub hidden: usize,
}

impl fmt::Display for FoldStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unit {} step {}: +{} -> {} states, {} transitions, {} ports hidden",
            self.unit, self.step, self.operand, self.states, self.transitions, self.hidden
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Connector(#[from] ConnectorError),
    #[error(transparent)]
    Automaton(#[from] CaError),
    #[error("transition budget {budget} exceeded in unit {unit} at fold step {step} ({size} transitions)")]
    BudgetExceeded { unit: usize, step: usize, size: usize, budget: usize, log: Vec<FoldStep> },
}

impl CompileError {
    /// Fold steps completed before the failure, for budget errors.
    pub fn fold_log(&self) -> &[FoldStep] {
        match self {
            CompileError::BudgetExceeded { log, .. } => log,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitRole {
    Region(RegionKind),
    Whole,
}

impl fmt::Display for UnitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitRole::Region(k) => k.fmt(f),
            UnitRole::Whole => f.write_str("whole"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub id: usize,
    /// Primitive owner, `r<region id>`, or `whole`.
    pub name: String,
    pub role: UnitRole,
    pub automaton: ConstraintAutomaton,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileStats {
    pub m1: usize,
    pub m2: usize,
    pub fold_log: Vec<FoldStep>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledProtocol {
    pub connector: String,
    pub strategy: Strategy,
    pub units: Vec<Unit>,
    /// Ports occurring in two units.
    pub shared_ports: BTreeMap<PortName, (usize, usize)>,
    /// Ports where computation threads attach.
    pub external_ports: BTreeSet<PortName>,
    pub stats: CompileStats,
}

impl CompiledProtocol {
    pub fn total_counts(&self) -> (usize, usize) {
        self.units.iter().fold((0, 0), |(s, t), u| {
            let (us, ut) = u.automaton.counts();
            (s + us, t + ut)
        })
    }

    pub fn max_counts(&self) -> (usize, usize) {
        self.units.iter().fold((0, 0), |(s, t), u| {
            let (us, ut) = u.automaton.counts();
            (s.max(us), t.max(ut))
        })
    }
}

/// Folds `members` into one automaton.
///
/// Starts from the first member and repeatedly adds the remaining member
/// that shares the most ports with the accumulator; ties go to the candidate
/// whose product (after hiding) has the fewest transitions, then to the
/// earlier member. After every product each `hide_set` port that no
/// remaining operand mentions is hidden, and the result is reduced to its
/// bisimulation quotient.
pub fn fold_region(
    members: &[(String, ConstraintAutomaton)],
    hide_set: &BTreeSet<PortName>,
    budget: usize,
) -> Result<(ConstraintAutomaton, Vec<FoldStep>), CompileError> {
    fold_unit(0, members, hide_set, budget, Vec::new())
}

fn fold_unit(
    unit: usize,
    members: &[(String, ConstraintAutomaton)],
    hide_set: &BTreeSet<PortName>,
    budget: usize,
    mut log: Vec<FoldStep>,
) -> Result<(ConstraintAutomaton, Vec<FoldStep>), CompileError> {
    let over =
        |step: usize, size: usize, log: Vec<FoldStep>| CompileError::BudgetExceeded { unit, step, size, budget, log };
    let Some((first_name, first)) = members.first() else {
        return Err(CaError::Malformed("cannot fold an empty region".into()).into());
    };
    let mut remaining: Vec<usize> = (1..members.len()).collect();
    let still_used = |remaining: &[usize], p: &PortName| remaining.iter().any(|&i| members[i].1.has_port(p));
    let settle = |acc: &ConstraintAutomaton, remaining: &[usize]| -> Result<(ConstraintAutomaton, usize), CaError> {
        let hidden: BTreeSet<PortName> =
            acc.ports().iter().filter(|p| hide_set.contains(*p) && !still_used(remaining, p)).cloned().collect();
        if hidden.is_empty() {
            return Ok((acc.prune_unreachable(), 0));
        }
        Ok((minimize(&hide(acc, &hidden)?), hidden.len()))
    };

    let (mut acc, hidden) = settle(first, &remaining)?;
    let (states, transitions) = acc.counts();
    log.push(FoldStep { unit, step: 0, operand: first_name.clone(), states, transitions, hidden });
    if transitions > budget {
        return Err(over(0, transitions, log));
    }
    let mut step = 0;
    while !remaining.is_empty() {
        step += 1;
        let shared = |i: usize| members[i].1.ports().iter().filter(|p| acc.has_port(p)).count();
        let best_share = remaining.iter().map(|&i| shared(i)).max().unwrap_or(0);
        let tied: Vec<usize> = remaining.iter().copied().filter(|&i| shared(i) == best_share).collect();
        let mut chosen: Option<(usize, ConstraintAutomaton, usize)> = None;
        let mut smallest_failure: Option<usize> = None;
        for &i in &tied {
            let rest: Vec<usize> = remaining.iter().copied().filter(|&j| j != i).collect();
            let candidate = match product_bounded(&acc, &members[i].1, budget) {
                Ok(p) => settle(&p, &rest)?,
                Err(CaError::BudgetExceeded { size, .. }) => {
                    smallest_failure = Some(smallest_failure.map_or(size, |s: usize| s.min(size)));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let better = match &chosen {
                None => true,
                Some((_, c, _)) => candidate.0.transitions().len() < c.transitions().len(),
            };
            if better {
                chosen = Some((i, candidate.0, candidate.1));
            }
        }
        let Some((i, next, hidden)) = chosen else {
            let size = smallest_failure.unwrap_or(budget + 1);
            return Err(over(step, size, log));
        };
        acc = next;
        remaining.retain(|&j| j != i);
        let (states, transitions) = acc.counts();
        log.push(FoldStep { unit, step, operand: members[i].0.clone(), states, transitions, hidden });
        if transitions > budget {
            return Err(over(step, transitions, log));
        }
    }
    Ok((acc, log))
}

fn ports_of(prims: &[&PrimitiveCA]) -> BTreeMap<PortName, usize> {
    let mut count = BTreeMap::new();
    for p in prims {
        for port in p.automaton.ports() {
            *count.entry(port.clone()).or_insert(0) += 1;
        }
    }
    count
}

/// Compiles `c` under strategy `s` over domain `d`. `budget` bounds the
/// transition count of every intermediate and final automaton.
pub fn compile(c: &Connector, s: Strategy, d: &DataDomain, budget: usize) -> Result<CompiledProtocol, CompileError> {
    let started = Instant::now();
    let prims = primitive_automata(c, d)?;
    let base = split(&prims);
    let partition = if s == Strategy::Mixed { merge_mixed(&base) } else { base };
    let by_owner: BTreeMap<&str, &PrimitiveCA> = prims.iter().map(|p| (p.owner.id(), p)).collect();

    let mut units = Vec::new();
    let mut log = Vec::new();
    match s {
        Strategy::Distributed => {
            for p in &prims {
                let kind = crate::region::classify(p);
                units.push(Unit {
                    id: units.len(),
                    name: p.owner.id().to_string(),
                    role: UnitRole::Region(kind),
                    automaton: p.automaton.clone(),
                });
            }
        }
        Strategy::Centralized => {
            let all: Vec<&PrimitiveCA> = prims.iter().collect();
            let hide_set: BTreeSet<PortName> =
                ports_of(&all).into_iter().filter(|(_, n)| *n > 1).map(|(p, _)| p).collect();
            let members: Vec<(String, ConstraintAutomaton)> =
                all.iter().map(|p| (p.owner.id().to_string(), p.automaton.clone())).collect();
            let (automaton, l) = fold_unit(0, &members, &hide_set, budget, log)?;
            log = l;
            units.push(Unit { id: 0, name: "whole".into(), role: UnitRole::Whole, automaton });
        }
        Strategy::Middleground | Strategy::Mixed => {
            for region in partition.regions() {
                let members: Vec<(String, ConstraintAutomaton)> =
                    region.members.iter().map(|o| (o.id().to_string(), by_owner[o.id()].automaton.clone())).collect();
                let id = units.len();
                let (automaton, l) = fold_unit(id, &members, &region.internal_ports, budget, log)?;
                log = l;
                units.push(Unit {
                    id,
                    name: format!("r{}", region.id),
                    role: UnitRole::Region(region.kind),
                    automaton,
                });
            }
        }
    }

    let (shared_ports, external_ports) = port_map(&units);
    Ok(CompiledProtocol {
        connector: c.name().to_string(),
        strategy: s,
        units,
        shared_ports,
        external_ports,
        stats: CompileStats { m1: partition.m1(), m2: partition.m2(), fold_log: log, elapsed: started.elapsed() },
    })
}

fn port_map(units: &[Unit]) -> (BTreeMap<PortName, (usize, usize)>, BTreeSet<PortName>) {
    let mut owners: BTreeMap<PortName, Vec<usize>> = BTreeMap::new();
    for u in units {
        for p in u.automaton.ports() {
            owners.entry(p.clone()).or_default().push(u.id);
        }
    }
    let mut shared = BTreeMap::new();
    let mut external = BTreeSet::new();
    for (p, us) in owners {
        match us[..] {
            [a, b] => {
                shared.insert(p, (a, b));
            }
            _ => {
                external.insert(p);
            }
        }
    }
    (shared, external)
}

/// Region counts without compiling, as reported for `s`.
pub fn partition_for(c: &Connector, s: Strategy, d: &DataDomain) -> Result<RegionPartition, CompileError> {
    let base = split(&primitive_automata(c, d)?);
    Ok(if s == Strategy::Mixed { merge_mixed(&base) } else { base })
}

/// One line of the statistics CSV.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct StatsRow {
    pub connector: String,
    pub k: Option<usize>,
    pub strategy: String,
    pub units: Option<usize>,
    pub m1: Option<usize>,
    pub m2: Option<usize>,
    pub max_states: Option<usize>,
    pub max_transitions: Option<usize>,
    pub total_states: Option<usize>,
    pub total_transitions: Option<usize>,
    pub compile_ms: u128,
    pub budget: usize,
    pub outcome: String,
}

impl StatsRow {
    /// `partition` supplies region counts when compilation failed.
    pub fn new(
        c: &Connector,
        s: Strategy,
        budget: usize,
        result: &Result<CompiledProtocol, CompileError>,
        partition: Option<&RegionPartition>,
        elapsed: Duration,
    ) -> Self {
        let k = crate::connector::FamilySpec::from_connector_name(c.name()).map(|f| f.size);
        let mut row = StatsRow {
            connector: c.name().to_string(),
            k,
            strategy: s.to_string(),
            units: None,
            m1: partition.map(|p| p.m1()),
            m2: partition.map(|p| p.m2()),
            max_states: None,
            max_transitions: None,
            total_states: None,
            total_transitions: None,
            compile_ms: elapsed.as_millis(),
            budget,
            outcome: String::new(),
        };
        match result {
            Ok(cp) => {
                let (ms, mt) = cp.max_counts();
                let (ts, tt) = cp.total_counts();
                row.units = Some(cp.units.len());
                row.m1 = Some(cp.stats.m1);
                row.m2 = Some(cp.stats.m2);
                row.max_states = Some(ms);
                row.max_transitions = Some(mt);
                row.total_states = Some(ts);
                row.total_transitions = Some(tt);
                row.outcome = "ok".into();
            }
            Err(CompileError::BudgetExceeded { .. }) => row.outcome = "budget_exceeded".into(),
            Err(_) => row.outcome = "error".into(),
        }
        row
    }
}

/// Renders rows as CSV with a header line.
pub fn stats_csv(rows: &[StatsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "connector",
            "k",
            "strategy",
            "units",
            "m1",
            "m2",
            "max_states",
            "max_transitions",
            "total_states",
            "total_transitions",
            "compile_ms",
            "budget",
            "outcome",
        ])
        .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::{bisimilar, hide, product, Guard, SyncSet, Transition};
    use crate::connector::{gen_family, Family, FamilySpec};

    fn agn() -> DataDomain {
        DataDomain::agnostic()
    }

    fn family(f: Family, k: usize) -> Connector {
        gen_family(FamilySpec::new(f, k)).unwrap()
    }

    fn labels(ca: &ConstraintAutomaton) -> BTreeSet<String> {
        ca.transitions().iter().map(|t| t.sync.to_string()).collect()
    }

    #[test]
    fn centralized_alternator_three_is_a_three_cycle() {
        let cp = compile(&family(Family::Alternator, 3), Strategy::Centralized, &agn(), DEFAULT_BUDGET).unwrap();
        assert_eq!(cp.units.len(), 1);
        let ca = &cp.units[0].automaton;
        assert_eq!(ca.counts(), (3, 3));
        assert_eq!(labels(ca), BTreeSet::from(["{P1.ext,P2.ext,P3.ext,Z.ext}".into(), "{Z.ext}".into()]));
        assert!(cp.shared_ports.is_empty());
        assert_eq!(cp.external_ports.len(), 4);
    }

    #[test]
    fn middleground_alternator_three_region_shapes() {
        let cp = compile(&family(Family::Alternator, 3), Strategy::Middleground, &agn(), DEFAULT_BUDGET).unwrap();
        assert_eq!(cp.units.len(), 3);
        let sr = cp.units.iter().find(|u| u.role == UnitRole::Region(RegionKind::Synchronous)).unwrap();
        assert_eq!(sr.automaton.counts(), (1, 4));
        assert_eq!(
            labels(&sr.automaton),
            BTreeSet::from([
                "{F1.snk,F1.src,F2.snk,Z.ext}".to_string(),
                "{F1.snk,Z.ext}".into(),
                "{F1.src,F2.snk}".into(),
                "{F1.src,F2.src,P1.ext,P2.ext,P3.ext,Z.ext}".into(),
            ])
        );
        // every buffer port is shared between the region and its buffer
        assert_eq!(cp.shared_ports.len(), 4);
    }

    #[test]
    fn distributed_units_are_the_primitives() {
        let c = family(Family::AsyncMerger, 2);
        let cp = compile(&c, Strategy::Distributed, &agn(), DEFAULT_BUDGET).unwrap();
        let prims = primitive_automata(&c, &agn()).unwrap();
        assert_eq!(cp.units.len(), prims.len());
        for (u, p) in cp.units.iter().zip(&prims) {
            assert_eq!(u.automaton, p.automaton);
        }
    }

    #[test]
    fn budget_failure_is_reproducible() {
        let c = family(Family::Alternator, 12);
        let a = compile(&c, Strategy::Middleground, &agn(), 500).unwrap_err();
        let b = compile(&c, Strategy::Middleground, &agn(), 500).unwrap_err();
        assert_eq!(a, b);
        assert!(matches!(a, CompileError::BudgetExceeded { budget: 500, .. }));
        assert!(!a.fold_log().is_empty());
    }

    fn fifo(i: &str, o: &str) -> ConstraintAutomaton {
        let (i, o) = (PortName::new(i), PortName::new(o));
        ConstraintAutomaton::new(
            [i.clone(), o.clone()],
            vec!["e".into(), "f".into()],
            0,
            vec![
                Transition { from: 0, sync: SyncSet::new([i]), guard: Guard::top(), to: 1 },
                Transition { from: 1, sync: SyncSet::new([o]), guard: Guard::top(), to: 0 },
            ],
            agn(),
        )
        .unwrap()
    }

    #[test]
    fn single_member_fold_is_hide_of_prune() {
        let a = fifo("I", "O");
        let hidden = BTreeSet::from([PortName::new("O")]);
        let (f, log) = fold_region(&[("a".into(), a.clone())], &hidden, DEFAULT_BUDGET).unwrap();
        assert!(bisimilar(&f, &hide(&a.prune_unreachable(), &hidden).unwrap()).unwrap());
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn disjoint_fold_without_hiding_is_the_product() {
        let (a, b) = (fifo("I1", "O1"), fifo("I2", "O2"));
        let (f, _) =
            fold_region(&[("a".into(), a.clone()), ("b".into(), b.clone())], &BTreeSet::new(), DEFAULT_BUDGET).unwrap();
        assert_eq!(f, product(&a, &b).unwrap());
    }

    #[test]
    fn alternator_four_fold_stays_small() {
        let c = family(Family::Alternator, 4);
        let cp = compile(&c, Strategy::Centralized, &agn(), DEFAULT_BUDGET).unwrap();
        assert_eq!(cp.units[0].automaton.counts(), (4, 4));
        assert!(cp.stats.fold_log.iter().all(|s| s.transitions <= 16), "{:?}", cp.stats.fold_log);

        // oracle: product of everything in owner order, then one hide
        let prims = primitive_automata(&c, &agn()).unwrap();
        let mut all = ConstraintAutomaton::empty(agn());
        for p in &prims {
            all = product(&all, &p.automaton).unwrap();
        }
        let internal: BTreeSet<PortName> =
            all.ports().iter().filter(|p| !c.external_ports().contains(*p)).cloned().collect();
        let mono = hide(&all, &internal).unwrap();
        assert!(bisimilar(&mono, &cp.units[0].automaton).unwrap());
    }

    #[test]
    fn stats_csv_header_and_row() {
        let c = family(Family::Alternator, 3);
        let t = Instant::now();
        let r = compile(&c, Strategy::Centralized, &agn(), DEFAULT_BUDGET);
        let row = StatsRow::new(&c, Strategy::Centralized, DEFAULT_BUDGET, &r, None, t.elapsed());
        let csv = stats_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "connector,k,strategy,units,m1,m2,max_states,max_transitions,total_states,total_transitions,compile_ms,budget,outcome"
        );
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&fields[..4], ["alternator_3", "3", "centralized", "1"]);
        assert_eq!(&fields[8..10], ["3", "3"]);
        assert_eq!(fields[12], "ok");
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
    }
}
