use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ca::ConstraintAutomaton;

use super::{choice_key, trace_step, Endpoints, RunOutcome, RunStatus};

/// Single-threaded interpreter over one automaton whose ports are all
/// boundary ports.
///
/// A transition is enabled when each of its ports has a pending operation
/// and its guard can be met with the values waiting at its sources. The
/// enabled transitions are ordered by (sync set, target, guard) and one is
/// picked with a ChaCha8 generator seeded by `seed`.
pub fn run_reference(big: &ConstraintAutomaton, endpoints: &Endpoints, seed: u64, max_steps: usize) -> RunOutcome {
    let mut ep = endpoints.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = big.initial();
    let mut trace = Vec::new();
    let mut steps = 0;
    let out = big.outgoing();
    loop {
        if ep.is_exhausted() {
            return RunOutcome { trace, status: RunStatus::Completed };
        }
        if steps >= max_steps {
            return RunOutcome { trace, status: RunStatus::StepLimit { steps } };
        }
        let mut enabled: Vec<_> = out[state]
            .iter()
            .map(|&i| &big.transitions()[i])
            .filter(|t| t.sync.iter().all(|p| ep.ready(p)))
            .filter_map(|t| {
                let fixed = ep.fixed_values(t.sync.iter().cloned());
                t.guard.solve(&t.sync, &fixed, big.domain()).map(|values| (t, values))
            })
            .collect();
        if enabled.is_empty() {
            return RunOutcome {
                trace,
                status: RunStatus::Stuck {
                    pending: ep.pending_by_port(),
                    states: vec![("whole".into(), big.state_name(state).to_string())],
                },
            };
        }
        enabled.sort_by(|(a, _), (b, _)| choice_key(big, a).cmp(&choice_key(big, b)));
        let (t, values) = &enabled[rng.gen_range(0..enabled.len())];
        for p in t.sync.iter() {
            ep.consume(p);
        }
        trace.extend(trace_step(t.sync.iter().cloned(), values));
        state = t.to;
        steps += 1;
    }
}
