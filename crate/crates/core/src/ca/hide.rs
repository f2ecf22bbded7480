use std::collections::BTreeSet;

use super::{CaError, ConstraintAutomaton, PortName, SyncSet, Transition};

/// Hides `hidden` ports and eliminates the resulting silent transitions.
///
/// Labels lose the hidden ports and guards are existentially quantified over
/// them. A transition left with an empty sync set is silent. For every state
/// `q` and every visible transition `p --N--> q'` with `p` in the silent
/// closure of `q`, the result has `q --N--> q'`; silent transitions are then
/// dropped and unreachable states pruned.
pub fn hide(a: &ConstraintAutomaton, hidden: &BTreeSet<PortName>) -> Result<ConstraintAutomaton, CaError> {
    if let Some(p) = hidden.iter().find(|p| !a.has_port(p)) {
        return Err(CaError::UnknownPort(p.to_string()));
    }
    if hidden.is_empty() && !a.has_silent_transitions() {
        return Ok(a.prune_unreachable());
    }
    let domain = a.domain();
    let n = a.states().len();
    let mut silent: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut visible: Vec<Vec<Transition>> = vec![Vec::new(); n];
    for t in a.transitions() {
        let sync = t.sync.restrict(|p| !hidden.contains(p));
        // guards of well-formed transitions are satisfiable, so quantifying
        // cannot fail; a `None` here would mean a dead transition anyway
        let Some(guard) = t.guard.exists(|p| hidden.contains(p), domain) else {
            continue;
        };
        if sync.is_empty() {
            silent[t.from].push(t.to);
        } else {
            visible[t.from].push(Transition { from: t.from, sync, guard, to: t.to });
        }
    }

    let mut transitions = Vec::new();
    let mut mark = vec![usize::MAX; n];
    let mut stack = Vec::new();
    for q in 0..n {
        // silent closure of q (includes q)
        mark[q] = q;
        stack.push(q);
        while let Some(s) = stack.pop() {
            for t in &visible[s] {
                transitions.push(Transition { from: q, ..t.clone() });
            }
            for &r in &silent[s] {
                if mark[r] != q {
                    mark[r] = q;
                    stack.push(r);
                }
            }
        }
    }

    let ports: Vec<PortName> = a.ports().iter().filter(|p| !hidden.contains(*p)).cloned().collect();
    let out = ConstraintAutomaton::assemble(
        SyncSet::new(ports).as_slice().to_vec(),
        a.states().to_vec(),
        a.initial(),
        transitions,
        domain.clone(),
    );
    Ok(out.prune_unreachable())
}
