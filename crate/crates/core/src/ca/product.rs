use std::collections::{HashMap, VecDeque};

use super::{CaError, ConstraintAutomaton, Guard, PortName, SyncSet, Transition};

/// Synchronous product.
///
/// From a state pair, each operand either idles or takes one of its
/// transitions (not both idle). The combination is allowed iff the two
/// sides agree on the shared ports: `sync(ta) ∩ ports(b) = sync(tb) ∩ ports(a)`.
/// This single rule covers joint steps, independent steps, and the
/// simultaneous firing of transitions with disjoint port sets. Combined
/// guards that are unsatisfiable over the domain are dropped.
pub fn product(a: &ConstraintAutomaton, b: &ConstraintAutomaton) -> Result<ConstraintAutomaton, CaError> {
    build(a, b, None, false)
}

/// Like [`product`], failing as soon as more than `budget` transitions exist.
pub fn product_bounded(
    a: &ConstraintAutomaton,
    b: &ConstraintAutomaton,
    budget: usize,
) -> Result<ConstraintAutomaton, CaError> {
    build(a, b, Some(budget), false)
}

/// Product over the full cartesian state space, without reachability pruning.
pub fn product_unpruned(a: &ConstraintAutomaton, b: &ConstraintAutomaton) -> Result<ConstraintAutomaton, CaError> {
    build(a, b, None, true)
}

struct Side {
    /// per state: projection onto the other side's ports -> transition indices
    by_projection: Vec<HashMap<SyncSet, Vec<usize>>>,
    projections: Vec<SyncSet>,
}

impl Side {
    fn new(ca: &ConstraintAutomaton, other: &ConstraintAutomaton) -> Self {
        let projections: Vec<SyncSet> =
            ca.transitions().iter().map(|t| t.sync.restrict(|p| other.has_port(p))).collect();
        let mut by_projection = vec![HashMap::<SyncSet, Vec<usize>>::new(); ca.states().len()];
        for (i, t) in ca.transitions().iter().enumerate() {
            by_projection[t.from].entry(projections[i].clone()).or_default().push(i);
        }
        Side { by_projection, projections }
    }
}

fn build(
    a: &ConstraintAutomaton,
    b: &ConstraintAutomaton,
    budget: Option<usize>,
    full: bool,
) -> Result<ConstraintAutomaton, CaError> {
    if a.domain() != b.domain() {
        return Err(CaError::DomainMismatch);
    }
    let domain = a.domain().clone();
    let sa = Side::new(a, b);
    let sb = Side::new(b, a);
    let ports: Vec<PortName> = SyncSet::new(a.ports().iter().chain(b.ports()).cloned()).as_slice().to_vec();

    let name = |i: usize, j: usize| -> String {
        if a.states().len() == 1 {
            b.state_name(j).to_string()
        } else if b.states().len() == 1 {
            a.state_name(i).to_string()
        } else {
            format!("{}|{}", a.state_name(i), b.state_name(j))
        }
    };

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut states: Vec<String> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern =
        |i: usize, j: usize, states: &mut Vec<String>, pairs: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
            *index.entry((i, j)).or_insert_with(|| {
                let id = states.len();
                states.push(name(i, j));
                pairs.push((i, j));
                queue.push_back(id);
                id
            })
        };

    let initial = intern(a.initial(), b.initial(), &mut states, &mut pairs, &mut queue);
    if full {
        for i in 0..a.states().len() {
            for j in 0..b.states().len() {
                intern(i, j, &mut states, &mut pairs, &mut queue);
            }
        }
    }

    let mut transitions = Vec::new();
    let mut next_dedup = 0;
    let empty = SyncSet::empty();
    while let Some(src) = queue.pop_front() {
        let (i, j) = pairs[src];
        let mut local: Vec<(SyncSet, Guard, usize)> = Vec::new();
        let mut emit = |ta: Option<&Transition>,
                        tb: Option<&Transition>,
                        local: &mut Vec<(SyncSet, Guard, usize)>,
                        states: &mut Vec<String>,
                        pairs: &mut Vec<(usize, usize)>,
                        queue: &mut VecDeque<usize>| {
            let (sync, guard, ti, tj) = match (ta, tb) {
                (Some(x), Some(y)) => (x.sync.union(&y.sync), x.guard.conjoin(&y.guard), x.to, y.to),
                (Some(x), None) => (x.sync.clone(), x.guard.clone(), x.to, j),
                (None, Some(y)) => (y.sync.clone(), y.guard.clone(), i, y.to),
                (None, None) => return,
            };
            let Some(guard) = guard.normalize(&domain) else {
                return;
            };
            let dst = intern(ti, tj, states, pairs, queue);
            local.push((sync, guard, dst));
        };

        // a moves (b joins with the matching projection, or idles when the projection is empty)
        for (proj, a_list) in &sa.by_projection[i] {
            let b_list = sb.by_projection[j].get(proj);
            for &ai in a_list {
                let ta = &a.transitions()[ai];
                if proj.is_empty() {
                    emit(Some(ta), None, &mut local, &mut states, &mut pairs, &mut queue);
                }
                if let Some(b_list) = b_list {
                    for &bi in b_list {
                        let tb = &b.transitions()[bi];
                        emit(Some(ta), Some(tb), &mut local, &mut states, &mut pairs, &mut queue);
                    }
                }
            }
        }
        // b moves alone
        if let Some(b_list) = sb.by_projection[j].get(&empty) {
            for &bi in b_list {
                debug_assert!(sb.projections[bi].is_empty());
                emit(None, Some(&b.transitions()[bi]), &mut local, &mut states, &mut pairs, &mut queue);
            }
        }
        for (sync, guard, to) in local {
            transitions.push(Transition { from: src, sync, guard, to });
        }
        // the raw list may repeat a transition; only distinct ones count
        if let Some(limit) = budget {
            if transitions.len() > limit && transitions.len() >= next_dedup {
                transitions.sort_unstable();
                transitions.dedup();
                if transitions.len() > limit {
                    return Err(CaError::BudgetExceeded { budget: limit, size: transitions.len() });
                }
                next_dedup = 2 * transitions.len();
            }
        }
    }

    let out = ConstraintAutomaton::assemble(ports, states, initial, transitions, domain);
    match budget {
        Some(limit) if out.transitions().len() > limit => {
            Err(CaError::BudgetExceeded { budget: limit, size: out.transitions().len() })
        }
        _ => Ok(out),
    }
}
