mod common;

use std::collections::{BTreeMap, BTreeSet};

use reoc::ca::{bisimilar, product_unpruned, ConstraintAutomaton, Literal, PortName, Transition};
use reoc::compile::{compile, Strategy, DEFAULT_BUDGET};
use reoc::connector::{external_port, gen_family, Family, FamilySpec};

use common::{primitives, product_all};

/// Centralized automaton over a domain with one value per producer.
fn tagged(f: Family, k: usize) -> ConstraintAutomaton {
    let values: Vec<String> = (1..=k).map(|i| format!("P{i}")).collect();
    let c = gen_family(FamilySpec::new(f, k)).unwrap().with_domain(Some(values)).unwrap();
    compile(&c, Strategy::Centralized, &c.data_domain(), DEFAULT_BUDGET).unwrap().units.remove(0).automaton
}

/// Values `Z` can carry when `t` fires and each producer `Pi` writes `"Pi"`.
fn z_values(ca: &ConstraintAutomaton, t: &Transition) -> Vec<Option<Literal>> {
    let z = external_port("Z");
    let mut fixed: BTreeMap<PortName, Literal> = BTreeMap::new();
    for p in t.sync.iter().filter(|p| **p != z) {
        fixed.insert(p.clone(), Literal::new(p.as_str().trim_end_matches(".ext")));
    }
    if !t.sync.contains(&z) {
        return if t.guard.satisfied_by(&fixed) { vec![None] } else { vec![] };
    }
    ca.domain()
        .values()
        .iter()
        .filter(|v| {
            let mut a = fixed.clone();
            a.insert(z.clone(), (*v).clone());
            t.guard.satisfied_by(&a)
        })
        .map(|v| Some(v.clone()))
        .collect()
}

#[test]
fn alternator_delivers_in_producer_order() {
    for k in 2..=5 {
        let ca = tagged(Family::Alternator, k);
        let out = ca.outgoing();
        let cycle: Vec<String> = (0..3 * k).map(|i| format!("P{}", i % k + 1)).collect();
        // every path of up to 3k steps, with the Z values it shows
        let mut frontier = vec![(ca.initial(), Vec::<String>::new())];
        for _ in 0..3 * k {
            let mut next = Vec::new();
            for (s, seen) in frontier {
                for &i in &out[s] {
                    let t = &ca.transitions()[i];
                    for z in z_values(&ca, t) {
                        let mut seen = seen.clone();
                        seen.extend(z.map(|v| v.to_string()));
                        assert_eq!(seen[..], cycle[..seen.len()], "k = {k}");
                        next.push((t.to, seen));
                    }
                }
            }
            assert!(!next.is_empty(), "k = {k}: walk got stuck");
            frontier = next;
        }
        assert!(frontier.iter().any(|(_, seen)| seen.len() >= 2 * k));
    }
}

fn permutations(items: &[String]) -> BTreeSet<Vec<String>> {
    if items.is_empty() {
        return BTreeSet::from([Vec::new()]);
    }
    let mut out = BTreeSet::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.insert(tail);
        }
    }
    out
}

#[test]
fn asyncmerger_delivers_in_any_order() {
    for k in 2..=3 {
        let ca = tagged(Family::AsyncMerger, k);
        let out = ca.outgoing();
        let producers: Vec<PortName> = (1..=k).map(|i| external_port(&format!("P{i}"))).collect();
        // (state, producers that already wrote, Z values so far)
        let mut stack = vec![(ca.initial(), BTreeSet::<PortName>::new(), Vec::<String>::new())];
        let mut complete = BTreeSet::new();
        while let Some((s, written, seen)) = stack.pop() {
            if seen.len() == k {
                complete.insert(seen);
                continue;
            }
            for &i in &out[s] {
                let t = &ca.transitions()[i];
                let writes: Vec<&PortName> = producers.iter().filter(|p| t.sync.contains(p)).collect();
                if writes.iter().any(|p| written.contains(*p)) {
                    continue;
                }
                for z in z_values(&ca, t) {
                    let mut w = written.clone();
                    w.extend(writes.iter().map(|p| (*p).clone()));
                    let mut seen = seen.clone();
                    seen.extend(z.map(|v| v.to_string()));
                    stack.push((t.to, w, seen));
                }
            }
        }
        let names: Vec<String> = (1..=k).map(|i| format!("P{i}")).collect();
        assert_eq!(complete, permutations(&names), "k = {k}");
    }
}

#[test]
fn sequencer_fires_sinks_round_robin() {
    for k in 2..=5 {
        let c = gen_family(FamilySpec::new(Family::Sequencer, k)).unwrap();
        let ca =
            compile(&c, Strategy::Centralized, &c.data_domain(), DEFAULT_BUDGET).unwrap().units.remove(0).automaton;
        let out = ca.outgoing();
        let mut s = ca.initial();
        for step in 0..3 * k {
            let [i] = out[s][..] else { panic!("k = {k}: state {s} is not deterministic") };
            let t = &ca.transitions()[i];
            let expected = external_port(&format!("B{}", step % k + 1));
            assert_eq!(t.sync.as_slice(), [expected], "k = {k}, step {step}");
            s = t.to;
        }
    }
}

#[test]
fn sync_chains_behave_like_one_sync() {
    let central = |n: usize| {
        let c = gen_family(FamilySpec::new(Family::SyncChain, n)).unwrap();
        compile(&c, Strategy::Centralized, &c.data_domain(), DEFAULT_BUDGET).unwrap().units.remove(0).automaton
    };
    let one = central(1);
    assert_eq!(one.counts(), (1, 1));
    for n in 2..=6 {
        assert!(bisimilar(&central(n), &one).unwrap(), "n = {n}");
    }
}

#[test]
fn pruning_keeps_the_reachable_part_of_the_product() {
    let c = gen_family(FamilySpec::new(Family::Sequencer, 4)).unwrap();
    let cas: Vec<ConstraintAutomaton> = primitives(&c).into_iter().map(|p| p.automaton).collect();
    let pruned = product_all(cas.iter().cloned());
    let unpruned = cas[1..].iter().fold(cas[0].clone(), |acc, a| product_unpruned(&acc, a).unwrap());
    // four buffers with one token among them
    assert_eq!(unpruned.states().len(), 16);
    assert_eq!(pruned.states().len(), 4);
    assert_eq!(unpruned.prune_unreachable().counts(), pruned.counts());
    assert!(bisimilar(&pruned, &unpruned).unwrap());
}
