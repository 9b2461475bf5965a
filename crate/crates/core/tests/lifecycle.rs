use std::collections::HashMap;

use npls::engine::{Engine, EngineError, EventKind, InstanceState, NormEvent};
use npls::logic::{Formula, Term};
use npls_testkit::oracle::{Case, Step};
use proptest::prelude::*;

fn t(s: &str) -> Term {
    s.parse().unwrap()
}

/// Replays a tiny case, checking after every operation that terminal
/// instances stay exactly as they were.
fn replay_checking_finality(case: &Case) -> Result<(), TestCaseError> {
    let mut e = Engine::from_source(&case.source()).unwrap();
    let mut present = std::collections::BTreeSet::new();
    let mut terminal: HashMap<u64, (InstanceState, Option<u64>)> = HashMap::new();
    let mut events: Vec<NormEvent> = Vec::new();
    for step in &case.steps {
        let r = match *step {
            Step::Toggle(p, v) => {
                let f = Term::compound(p, vec![Term::int(v)]);
                if present.remove(&(p, v)) {
                    e.retract(&f)
                } else {
                    present.insert((p, v));
                    e.assert(f)
                }
            }
            Step::Tick(ms) => e.tick(e.now() + ms),
        };
        events.extend(r.unwrap());
        for (id, (state, at)) in &terminal {
            let i = e.instance(*id).unwrap();
            prop_assert_eq!((i.state, i.resolved_at), (*state, *at), "instance {} changed after terminating", id);
        }
        for i in e.instances() {
            if i.state.is_terminal() {
                terminal.entry(i.id).or_insert((i.state, i.resolved_at));
            }
        }
    }
    let mut seen: HashMap<u64, (usize, usize)> = HashMap::new();
    for ev in &events {
        let Some(id) = ev.instance().map(|i| i.id) else { continue };
        let entry = seen.entry(id).or_default();
        match ev.kind {
            EventKind::InstanceCreated(_) => entry.0 += 1,
            _ => entry.1 += 1,
        }
    }
    for (id, (created, resolved)) in seen {
        prop_assert_eq!(created, 1, "instance {}", id);
        prop_assert!(resolved <= 1, "instance {} resolved {} times", id, resolved);
    }
    Ok(())
}

const TIES: &str = "
np ties {
    norm by_fact: start(X) -> obligation(a, true, g(X), d(X)).
    norm by_time: start(X) -> obligation(b, true, g(X), `1 second`).
    norm banned: start(X) -> prohibition(c, true, g(X), d(X)).
}";

#[derive(Clone, Debug)]
enum Op {
    Update(Vec<(bool, &'static str, i64)>),
    Tick(u64),
}

fn op() -> impl Strategy<Value = Op> {
    let fact = (any::<bool>(), prop_oneof![Just("start"), Just("g"), Just("d")], 1i64..=2);
    prop_oneof![
        3 => proptest::collection::vec(fact, 1..4).prop_map(Op::Update),
        1 => (0u64..=1500).prop_map(Op::Tick),
    ]
}

fn lvl_program(limit: u32) -> String {
    format!(
        "np ladder {{
            norm climb: sanction(a, lvl(N)) & N < {limit} -> obligation(a, true, false, `0 seconds`)
                if unfulfilled: up(N).
            sanction-rule up(N) -> sanction(a, lvl(N + 1)).
        }}"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn terminal_states_are_final(seed in any::<u64>()) {
        replay_checking_finality(&Case::random(seed))?;
    }

    #[test]
    fn goal_wins_ties_with_the_deadline(ops in proptest::collection::vec(op(), 1..12)) {
        let mut e = Engine::from_source(TIES).unwrap();
        for op in ops {
            let events = match op {
                Op::Update(facts) => {
                    let (add, del): (Vec<_>, Vec<_>) = facts.into_iter().partition(|f| f.0);
                    let term = |(_, p, v): (bool, &str, i64)| Term::compound(p, vec![Term::int(v)]);
                    e.update(add.into_iter().map(term).collect(), del.into_iter().map(term).collect()).unwrap()
                }
                Op::Tick(ms) => e.tick(e.now() + ms).unwrap(),
            };
            // facts do not change during a step here, so the goal's truth
            // now is its truth when the instance resolved
            for i in events.iter().filter_map(|ev| ev.instance()).filter(|i| i.state.is_terminal()) {
                let goal = !e.solve(&i.target).unwrap().is_empty();
                let expected = match (i.norm.as_str(), goal) {
                    ("banned", true) => InstanceState::Unfulfilled,
                    ("banned", false) => InstanceState::Fulfilled,
                    (_, true) => InstanceState::Fulfilled,
                    (_, false) => InstanceState::Unfulfilled,
                };
                prop_assert_eq!(i.state, expected, "{:?}", i);
            }
        }
    }

    #[test]
    fn fixpoint_is_bounded_or_an_error(limit in 0u32..150, max in 1usize..=64) {
        let mut e = Engine::from_source(&lvl_program(limit)).unwrap();
        e.set_max_iterations(max);
        let before = e.fact_base().len();
        match e.assert(t("sanction(a, lvl(0))")) {
            Ok(_) => {
                prop_assert!(e.last_iterations() <= max);
                let top = Formula::atom(t(&format!("sanction(a, lvl({limit}))")));
                prop_assert!(!e.solve(&top).unwrap().is_empty());
            }
            Err(EngineError::FixpointNotReached(n)) => {
                prop_assert_eq!(n, max);
                prop_assert_eq!(e.fact_base().len(), before, "rolled back");
                prop_assert!(e.instances().is_empty());
            }
            Err(other) => prop_assert!(false, "unexpected error {other}"),
        }
    }
}

#[test]
fn ladder_needs_one_iteration_per_rung() {
    let mut e = Engine::from_source(&lvl_program(10)).unwrap();
    let _ = e.assert(t("sanction(a, lvl(0))")).unwrap();
    assert!(e.last_iterations() <= 64);
    let mut e = Engine::from_source(&lvl_program(1000)).unwrap();
    assert!(matches!(e.assert(t("sanction(a, lvl(0))")), Err(EngineError::FixpointNotReached(64))));
}
