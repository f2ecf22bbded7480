use std::collections::HashMap;

use super::{CaError, ConstraintAutomaton, Guard, SyncSet, Transition};

/// Labelled graph over the disjoint union of several automata, with labels
/// normalized to `(sync set, canonical guard)`.
struct Lts {
    edges: Vec<Vec<(u32, usize)>>,
}

impl Lts {
    fn build(parts: &[&ConstraintAutomaton]) -> (Self, Vec<usize>) {
        let mut labels: HashMap<(SyncSet, Guard), u32> = HashMap::new();
        let mut edges = Vec::new();
        let mut offsets = Vec::new();
        for ca in parts {
            let base = edges.len();
            offsets.push(base);
            edges.extend(std::iter::repeat_with(Vec::new).take(ca.states().len()));
            for t in ca.transitions() {
                // guards inside an automaton are already canonical unless it
                // was built by hand; normalizing again is cheap
                let guard = t.guard.normalize(ca.domain()).unwrap_or_default();
                let next = labels.len() as u32;
                let id = *labels.entry((t.sync.clone(), guard)).or_insert(next);
                edges[base + t.from].push((id, base + t.to));
            }
        }
        (Lts { edges }, offsets)
    }

    /// Coarsest strong bisimulation by signature refinement.
    fn blocks(&self) -> Vec<usize> {
        let n = self.edges.len();
        let mut block = vec![0usize; n];
        let mut count = 1;
        loop {
            let mut sigs: HashMap<(usize, Vec<(u32, usize)>), usize> = HashMap::new();
            let mut next = vec![0usize; n];
            for s in 0..n {
                let mut sig: Vec<(u32, usize)> = self.edges[s].iter().map(|&(l, t)| (l, block[t])).collect();
                sig.sort_unstable();
                sig.dedup();
                let fresh = sigs.len();
                next[s] = *sigs.entry((block[s], sig)).or_insert(fresh);
            }
            let new_count = sigs.len();
            block = next;
            if new_count == count {
                return block;
            }
            count = new_count;
        }
    }
}

/// Strong bisimilarity on normalized labels. Both operands must have the
/// same ports (rename first if needed) and the same data domain.
pub fn bisimilar(a: &ConstraintAutomaton, b: &ConstraintAutomaton) -> Result<bool, CaError> {
    if a.ports() != b.ports() {
        return Err(CaError::PortMismatch {
            left: a.ports().iter().map(|p| p.to_string()).collect(),
            right: b.ports().iter().map(|p| p.to_string()).collect(),
        });
    }
    if a.domain() != b.domain() {
        return Err(CaError::DomainMismatch);
    }
    let (lts, offsets) = Lts::build(&[a, b]);
    let block = lts.blocks();
    Ok(block[offsets[0] + a.initial()] == block[offsets[1] + b.initial()])
}

/// Quotient by strong bisimilarity. Each block keeps the smallest state
/// name among its members.
pub fn minimize(a: &ConstraintAutomaton) -> ConstraintAutomaton {
    let a = a.prune_unreachable();
    if a.states().len() <= 1 {
        return a;
    }
    let (lts, _) = Lts::build(&[&a]);
    let block = lts.blocks();
    let nblocks = block.iter().copied().max().map_or(0, |m| m + 1);
    if nblocks == a.states().len() {
        return a;
    }
    // states are sorted by name, so the first member seen is the smallest
    let mut names: Vec<Option<String>> = vec![None; nblocks];
    for (s, &b) in block.iter().enumerate() {
        if names[b].is_none() {
            names[b] = Some(a.state_name(s).to_string());
        }
    }
    let transitions = a
        .transitions()
        .iter()
        .map(|t| Transition { from: block[t.from], to: block[t.to], sync: t.sync.clone(), guard: t.guard.clone() })
        .collect();
    ConstraintAutomaton::assemble(
        a.ports().to_vec(),
        names.into_iter().map(|n| n.unwrap_or_default()).collect(),
        block[a.initial()],
        transitions,
        a.domain().clone(),
    )
}
