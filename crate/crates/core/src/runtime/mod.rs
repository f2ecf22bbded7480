//! Executing compiled protocols against scripted computation threads.

mod bench;
mod reference;
mod regional;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ca::{ConstraintAutomaton, DataDomain, Literal, PortName, Transition, AGNOSTIC_LITERAL};
use crate::connector::{external_port, Connector};

pub use bench::{bench, bench_csv, BenchRow, BenchSummary};
pub use reference::run_reference;
pub use regional::{run_regional, CommitRecord, RegionalRun};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("invalid script: {0}")]
    Script(String),
    #[error("malformed trace line {line}: {message}")]
    TraceSyntax { line: usize, message: String },
}

/// What the computation threads do: values written at sources, number of
/// reads at sinks. Port keys may be node names (`P1`) or ports (`P1.ext`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StimulusScript {
    #[serde(default)]
    pub writes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub reads: BTreeMap<String, usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

fn port_key(name: &str) -> PortName {
    if name.contains('.') {
        PortName::new(name)
    } else {
        external_port(name)
    }
}

impl StimulusScript {
    pub fn from_json_str(s: &str) -> Result<Self, RuntimeError> {
        serde_json::from_str(s).map_err(|e| RuntimeError::Script(e.to_string()))
    }

    pub fn total_ops(&self) -> usize {
        self.writes.values().map(Vec::len).sum::<usize>() + self.reads.values().sum::<usize>()
    }

    /// Domain a connector runs over for this script: the declared one, or,
    /// for data-agnostic connectors, the literals the script writes (if any
    /// besides the agnostic one).
    pub fn domain_for(&self, c: &Connector) -> DataDomain {
        if c.declared_domain().is_some() {
            return c.data_domain();
        }
        let lits: BTreeSet<&str> =
            self.writes.values().flatten().map(String::as_str).filter(|l| *l != AGNOSTIC_LITERAL).collect();
        if lits.is_empty() {
            DataDomain::agnostic()
        } else {
            DataDomain::explicit(lits).expect("non-empty distinct literals")
        }
    }

    /// Checks the script against the connector's boundary and `domain`.
    pub fn resolve(
        &self,
        sources: &BTreeSet<PortName>,
        sinks: &BTreeSet<PortName>,
        domain: &DataDomain,
    ) -> Result<Endpoints, RuntimeError> {
        let mut writes = BTreeMap::new();
        for (name, values) in &self.writes {
            let p = port_key(name);
            if !sources.contains(&p) {
                return Err(RuntimeError::Script(format!("`{name}` is not a boundary source")));
            }
            let mut q = VecDeque::new();
            for v in values {
                if !domain.contains(v) {
                    return Err(RuntimeError::Script(format!(
                        "literal `{v}` written at `{name}` is not in the data domain"
                    )));
                }
                q.push_back(Literal::new(v));
            }
            if writes.insert(p, q).is_some() {
                return Err(RuntimeError::Script(format!("port `{name}` listed twice")));
            }
        }
        let mut reads = BTreeMap::new();
        for (name, &n) in &self.reads {
            let p = port_key(name);
            if !sinks.contains(&p) {
                return Err(RuntimeError::Script(format!("`{name}` is not a boundary sink")));
            }
            if reads.insert(p, n).is_some() {
                return Err(RuntimeError::Script(format!("port `{name}` listed twice")));
            }
        }
        Ok(Endpoints { writes, reads })
    }

    /// Step bound: explicit, or ten per scripted operation.
    pub fn step_limit(&self) -> usize {
        self.max_steps.unwrap_or(10 * self.total_ops())
    }
}

/// Pending operations of the computation threads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Endpoints {
    pub writes: BTreeMap<PortName, VecDeque<Literal>>,
    pub reads: BTreeMap<PortName, usize>,
}

impl Endpoints {
    pub fn is_exhausted(&self) -> bool {
        self.writes.values().all(VecDeque::is_empty) && self.reads.values().all(|&n| n == 0)
    }

    pub fn pending(&self) -> usize {
        self.writes.values().map(VecDeque::len).sum::<usize>() + self.reads.values().sum::<usize>()
    }

    /// Pending operations per port, for diagnostics.
    pub fn pending_by_port(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for (p, q) in &self.writes {
            if !q.is_empty() {
                out.insert(p.to_string(), q.len());
            }
        }
        for (p, &n) in &self.reads {
            if n > 0 {
                out.insert(p.to_string(), n);
            }
        }
        out
    }

    /// Whether `p` (external) has a pending operation.
    fn ready(&self, p: &PortName) -> bool {
        self.writes.get(p).is_some_and(|q| !q.is_empty()) || self.reads.get(p).is_some_and(|&n| n > 0)
    }

    fn fixed_values(&self, ports: impl Iterator<Item = PortName>) -> BTreeMap<PortName, Literal> {
        ports.filter_map(|p| self.writes.get(&p).and_then(|q| q.front()).map(|v| (p.clone(), v.clone()))).collect()
    }

    fn consume(&mut self, p: &PortName) {
        if let Some(q) = self.writes.get_mut(p) {
            q.pop_front();
        } else if let Some(n) = self.reads.get_mut(p) {
            *n = n.saturating_sub(1);
        }
    }
}

/// One observable step: the boundary ports that fired and their values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub ports: Vec<String>,
    pub data: BTreeMap<String, String>,
}

pub type Trace = Vec<TraceStep>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    /// Every scripted operation was performed.
    Completed,
    /// Nothing can fire although operations remain.
    Stuck {
        pending: BTreeMap<String, usize>,
        states: Vec<(String, String)>,
    },
    StepLimit {
        steps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub trace: Trace,
    pub status: RunStatus,
}

fn trace_step(ports: impl Iterator<Item = PortName>, values: &BTreeMap<PortName, Literal>) -> Option<TraceStep> {
    let ports: Vec<PortName> = ports.collect();
    if ports.is_empty() {
        return None;
    }
    Some(TraceStep {
        ports: ports.iter().map(|p| p.to_string()).collect(),
        data: ports.iter().filter_map(|p| values.get(p).map(|v| (p.to_string(), v.to_string()))).collect(),
    })
}

/// Ordering used wherever a seeded choice is made among transitions.
fn choice_key<'a>(ca: &'a ConstraintAutomaton, t: &'a Transition) -> impl Ord + 'a {
    (&t.sync, ca.state_name(t.to), &t.guard)
}

/// Whether `t` is a prefix of some run of `big`.
pub fn accepts(big: &ConstraintAutomaton, t: &[TraceStep]) -> bool {
    let mut current: BTreeSet<usize> = BTreeSet::from([big.initial()]);
    for step in t {
        let ports: BTreeSet<PortName> = step.ports.iter().map(|p| port_key(p)).collect();
        let values: BTreeMap<PortName, Literal> =
            step.data.iter().map(|(p, v)| (port_key(p), Literal::new(v))).collect();
        let mut next = BTreeSet::new();
        for tr in big.transitions() {
            if !current.contains(&tr.from) || tr.sync.len() != ports.len() {
                continue;
            }
            if tr.sync.iter().all(|p| ports.contains(p))
                && tr.guard.satisfied_by(&values)
                && values.values().all(|v| big.domain().contains(v.as_str()))
            {
                next.insert(tr.to);
            }
        }
        if next.is_empty() {
            return false;
        }
        current = next;
    }
    true
}

/// Every value observed at a sink was written at a source in an earlier or
/// the same step, or is one of `initial` (pre-loaded buffer contents).
pub fn no_phantom_data(trace: &[TraceStep], sources: &BTreeSet<PortName>, initial: &BTreeSet<String>) -> bool {
    let mut seen: BTreeSet<&str> = initial.iter().map(String::as_str).collect();
    for step in trace {
        for (p, v) in &step.data {
            if sources.contains(&port_key(p)) {
                seen.insert(v);
            }
        }
        for (p, v) in &step.data {
            if !sources.contains(&port_key(p)) && !seen.contains(v.as_str()) {
                return false;
            }
        }
    }
    true
}

/// Parses trace lines `P1,P2;p1=v1,p2=v2` (blank lines ignored). Node names
/// without a `.` are read as their external ports.
pub fn parse_harness_trace(text: &str) -> Result<Trace, RuntimeError> {
    let mut trace = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| RuntimeError::TraceSyntax { line: i + 1, message: message.into() };
        let (ports, data) = line.split_once(';').ok_or_else(|| err("missing `;`"))?;
        let mut step_ports: Vec<String> = Vec::new();
        for p in ports.split(',').map(str::trim) {
            if p.is_empty() {
                return Err(err("empty port name"));
            }
            step_ports.push(port_key(p).to_string());
        }
        step_ports.sort();
        step_ports.dedup();
        let mut values = BTreeMap::new();
        for pair in data.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, v) = pair.split_once('=').ok_or_else(|| err("expected `port=value`"))?;
            let p = port_key(p.trim()).to_string();
            if !step_ports.contains(&p) {
                return Err(err("value for a port that did not fire"));
            }
            values.insert(p, v.trim().to_string());
        }
        trace.push(TraceStep { ports: step_ports, data: values });
    }
    Ok(trace)
}

/// Renders a trace in the line format read by [`parse_harness_trace`].
pub fn format_harness_trace(trace: &[TraceStep]) -> String {
    let strip = |p: &str| p.strip_suffix(".ext").unwrap_or(p).to_string();
    let mut out = String::new();
    for step in trace {
        let ports: Vec<String> = step.ports.iter().map(|p| strip(p)).collect();
        let data: Vec<String> = step.data.iter().map(|(p, v)| format!("{}={v}", strip(p))).collect();
        out.push_str(&ports.join(","));
        out.push(';');
        out.push_str(&data.join(","));
        out.push('\n');
    }
    out
}
