use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ca::{ConstraintAutomaton, Guard, Literal, PortName, SyncSet, Transition};
use crate::compile::CompiledProtocol;

use super::{choice_key, trace_step, Endpoints, RunOutcome, RunStatus, TraceStep};

/// One unit's part in a committed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommitRecord {
    pub step: usize,
    pub unit: usize,
    pub from: usize,
    pub transition: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionalRun {
    pub outcome: RunOutcome,
    /// Per-unit transitions in commit order.
    pub commits: Vec<CommitRecord>,
    /// Committed steps, including those without boundary ports.
    pub steps: usize,
}

struct Cell {
    state: usize,
    endpoints: Endpoints,
}

struct Global {
    generation: u64,
    idle_at: Vec<Option<u64>>,
    stop: Option<RunStatus>,
    steps: usize,
    remaining: usize,
    trace: Vec<TraceStep>,
    commits: Vec<CommitRecord>,
}

struct Shared<'a> {
    units: Vec<&'a ConstraintAutomaton>,
    /// per unit: outgoing transition indices per state, in choice order
    choices: Vec<Vec<Vec<usize>>>,
    /// per unit: shared port -> the other owner
    partner: Vec<BTreeMap<PortName, usize>>,
    cells: Vec<Mutex<Cell>>,
    global: Mutex<Global>,
    wake: Condvar,
    max_steps: usize,
}

type Locked<'g> = BTreeMap<usize, MutexGuard<'g, Cell>>;

enum Search {
    Found(BTreeMap<usize, usize>, BTreeMap<PortName, Literal>),
    NeedMore(usize),
    Nothing,
}

impl Shared<'_> {
    fn transition(&self, u: usize, i: usize) -> &Transition {
        &self.units[u].transitions()[i]
    }

    /// Unit-local part of enabledness: own boundary ports ready and own guard
    /// satisfiable with the values waiting there.
    fn locally_enabled(&self, u: usize, cell: &Cell, t: &Transition) -> bool {
        let own: Vec<PortName> = t.sync.iter().filter(|p| !self.partner[u].contains_key(*p)).cloned().collect();
        own.iter().all(|p| cell.endpoints.ready(p))
            && t.guard.solve(&t.sync, &cell.endpoints.fixed_values(own.into_iter()), self.units[u].domain()).is_some()
    }

    fn candidates(&self, u: usize, cell: &Cell) -> Vec<usize> {
        self.choices[u][cell.state]
            .iter()
            .copied()
            .filter(|&i| self.locally_enabled(u, cell, self.transition(u, i)))
            .collect()
    }

    fn consistent(&self, w: usize, t: &Transition, assign: &BTreeMap<usize, usize>) -> bool {
        self.partner[w].iter().all(|(p, v)| match assign.get(v) {
            Some(&tv) => t.sync.contains(p) == self.transition(*v, tv).sync.contains(p),
            None => true,
        })
    }

    fn required(&self, assign: &BTreeMap<usize, usize>) -> Option<usize> {
        assign
            .iter()
            .flat_map(|(&v, &tv)| {
                self.transition(v, tv).sync.iter().filter_map(move |p| self.partner[v].get(p).copied())
            })
            .filter(|w| !assign.contains_key(w))
            .min()
    }

    fn data(&self, assign: &BTreeMap<usize, usize>, locked: &Locked<'_>) -> Option<BTreeMap<PortName, Literal>> {
        let mut sync = SyncSet::empty();
        let mut guard = Guard::top();
        let mut fixed = BTreeMap::new();
        for (&v, &tv) in assign {
            let t = self.transition(v, tv);
            sync = sync.union(&t.sync);
            guard = guard.conjoin(&t.guard);
            fixed.extend(locked[&v].endpoints.fixed_values(t.sync.iter().cloned()));
        }
        guard.solve(&sync, &fixed, self.units[0].domain())
    }

    fn extend(&self, assign: &mut BTreeMap<usize, usize>, locked: &Locked<'_>) -> Search {
        let Some(w) = self.required(assign) else {
            return match self.data(assign, locked) {
                Some(values) => Search::Found(assign.clone(), values),
                None => Search::Nothing,
            };
        };
        let Some(cell) = locked.get(&w) else {
            return Search::NeedMore(w);
        };
        for i in self.candidates(w, cell) {
            if !self.consistent(w, self.transition(w, i), assign) {
                continue;
            }
            assign.insert(w, i);
            match self.extend(assign, locked) {
                Search::Nothing => {}
                found => return found,
            }
            assign.remove(&w);
        }
        Search::Nothing
    }

    fn lock(&self, set: &BTreeSet<usize>) -> Locked<'_> {
        // ascending unit order everywhere rules out lock cycles
        set.iter().map(|&u| (u, self.cells[u].lock().expect("unit lock"))).collect()
    }

    fn commit(&self, assign: &BTreeMap<usize, usize>, values: &BTreeMap<PortName, Literal>, locked: &mut Locked<'_>) {
        let mut g = self.global.lock().expect("global lock");
        if g.stop.is_some() {
            return;
        }
        let step = g.steps;
        let mut external = Vec::new();
        let mut consumed = 0;
        for (&v, &tv) in assign {
            let t = self.transition(v, tv);
            let cell = locked.get_mut(&v).expect("participant is locked");
            g.commits.push(CommitRecord { step, unit: v, from: cell.state, transition: tv, to: t.to });
            cell.state = t.to;
            for p in t.sync.iter().filter(|p| !self.partner[v].contains_key(*p)) {
                cell.endpoints.consume(p);
                consumed += 1;
                external.push(p.clone());
            }
        }
        external.sort();
        g.trace.extend(trace_step(external.into_iter(), values));
        g.steps += 1;
        g.remaining = g.remaining.saturating_sub(consumed);
        g.generation += 1;
        if g.remaining == 0 {
            g.stop = Some(RunStatus::Completed);
        } else if g.steps >= self.max_steps {
            g.stop = Some(RunStatus::StepLimit { steps: g.steps });
        }
        self.wake.notify_all();
    }

    fn protocol_thread(&self, u: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(u as u64));
        let mut jitter = ChaCha8Rng::seed_from_u64(seed.rotate_left(32) ^ (u as u64 + 1));
        let concurrent = self.units.len() > 1;
        loop {
            if self.global.lock().expect("global lock").stop.is_some() {
                return;
            }
            if concurrent && jitter.gen_bool(0.5) {
                thread::yield_now();
            }
            let mut lockset = BTreeSet::from([u]);
            let mut draw: Option<usize> = None;
            let idle_gen = loop {
                let mut locked = self.lock(&lockset);
                let cands = self.candidates(u, &locked[&u]);
                if cands.is_empty() {
                    break Some(self.mark_idle(u));
                }
                let r = *draw.get_or_insert_with(|| rng.gen_range(0..cands.len())) % cands.len();
                let mut outcome = Search::Nothing;
                for k in 0..cands.len() {
                    let mut assign = BTreeMap::from([(u, cands[(r + k) % cands.len()])]);
                    match self.extend(&mut assign, &locked) {
                        Search::Nothing => continue,
                        other => {
                            outcome = other;
                            break;
                        }
                    }
                }
                match outcome {
                    Search::Found(assign, values) => {
                        self.commit(&assign, &values, &mut locked);
                        break None;
                    }
                    Search::NeedMore(w) => {
                        drop(locked);
                        lockset.insert(w);
                    }
                    Search::Nothing => break Some(self.mark_idle(u)),
                }
            };
            if let Some(gen) = idle_gen {
                let mut g = self.global.lock().expect("global lock");
                while g.stop.is_none() && g.generation == gen {
                    g = self.wake.wait(g).expect("global lock");
                }
            }
        }
    }

    fn mark_idle(&self, u: usize) -> u64 {
        let mut g = self.global.lock().expect("global lock");
        let gen = g.generation;
        g.idle_at[u] = Some(gen);
        self.wake.notify_all();
        gen
    }

    fn coordinate(&self) {
        let mut g = self.global.lock().expect("global lock");
        loop {
            if g.stop.is_some() {
                break;
            }
            let generation = g.generation;
            if g.idle_at.iter().all(|i| *i == Some(generation)) {
                g.stop = Some(RunStatus::Stuck { pending: BTreeMap::new(), states: Vec::new() });
                break;
            }
            g = self.wake.wait(g).expect("global lock");
        }
        self.wake.notify_all();
    }
}

/// Runs every unit of `cp` on its own thread.
///
/// A unit offers the transitions whose own boundary ports are ready; a step
/// that touches shared ports commits only together with transitions of the
/// partner units that agree on every shared port they have in common and on
/// the data. The initiating unit locks the units involved in ascending id
/// order (extending the set and retrying when the search reaches a unit it
/// has not locked), so a multi-unit step is atomic. When every unit has
/// found nothing to do since the last commit the run is quiescent.
pub fn run_regional(cp: &CompiledProtocol, endpoints: &Endpoints, seed: u64, max_steps: usize) -> RegionalRun {
    let units: Vec<&ConstraintAutomaton> = cp.units.iter().map(|u| &u.automaton).collect();
    let mut partner: Vec<BTreeMap<PortName, usize>> = vec![BTreeMap::new(); units.len()];
    for (p, &(a, b)) in &cp.shared_ports {
        partner[a].insert(p.clone(), b);
        partner[b].insert(p.clone(), a);
    }
    let choices = units
        .iter()
        .map(|ca| {
            ca.outgoing()
                .into_iter()
                .map(|mut out| {
                    out.sort_by(|&a, &b| {
                        choice_key(ca, &ca.transitions()[a]).cmp(&choice_key(ca, &ca.transitions()[b]))
                    });
                    out
                })
                .collect()
        })
        .collect();
    let cells = units
        .iter()
        .map(|ca| {
            let own = |p: &PortName| ca.has_port(p);
            Mutex::new(Cell {
                state: ca.initial(),
                endpoints: Endpoints {
                    writes: endpoints
                        .writes
                        .iter()
                        .filter(|(p, _)| own(p))
                        .map(|(p, q)| (p.clone(), q.clone()))
                        .collect(),
                    reads: endpoints.reads.iter().filter(|(p, _)| own(p)).map(|(p, n)| (p.clone(), *n)).collect(),
                },
            })
        })
        .collect();
    let remaining = endpoints.pending();
    let initial_stop = if remaining == 0 {
        Some(RunStatus::Completed)
    } else if max_steps == 0 {
        Some(RunStatus::StepLimit { steps: 0 })
    } else {
        None
    };
    let shared = Shared {
        choices,
        partner,
        cells,
        global: Mutex::new(Global {
            generation: 0,
            idle_at: vec![None; units.len()],
            stop: initial_stop,
            steps: 0,
            remaining,
            trace: Vec::new(),
            commits: Vec::new(),
        }),
        wake: Condvar::new(),
        max_steps,
        units,
    };
    thread::scope(|s| {
        for u in 0..shared.units.len() {
            let sh = &shared;
            s.spawn(move || sh.protocol_thread(u, seed));
        }
        shared.coordinate();
    });

    let g = shared.global.into_inner().expect("global lock");
    let cells: Vec<Cell> = shared.cells.into_iter().map(|c| c.into_inner().expect("unit lock")).collect();
    let status = match g.stop.expect("run stopped") {
        RunStatus::Stuck { .. } => {
            let mut pending = BTreeMap::new();
            for c in &cells {
                pending.extend(c.endpoints.pending_by_port());
            }
            let states = cp
                .units
                .iter()
                .zip(&cells)
                .map(|(u, c)| (u.name.clone(), u.automaton.state_name(c.state).to_string()))
                .collect();
            RunStatus::Stuck { pending, states }
        }
        other => other,
    };
    RegionalRun { outcome: RunOutcome { trace: g.trace, status }, commits: g.commits, steps: g.steps }
}
