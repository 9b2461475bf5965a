use std::time::Instant;

use npls::engine::{Engine, NormEvent, TraceWriter};
use npls::logic::Term;

const STORY: &str = include_str!("../../../demo/story.npl");
const GOLDEN_UNFULFILLED: &str = include_str!("golden/story_unfulfilled.jsonl");
const GOLDEN_FULFILLED: &str = include_str!("golden/story_fulfilled.jsonl");

fn t(s: &str) -> Term {
    s.parse().unwrap()
}

fn trace(events: &[NormEvent]) -> String {
    let mut w = TraceWriter::new(Vec::new());
    w.write_events(events).unwrap();
    String::from_utf8(w.into_inner()).unwrap()
}

fn unfulfilled_run() -> Vec<NormEvent> {
    let mut e = Engine::from_source(STORY).unwrap();
    let mut events = e.assert(t("vl(20)")).unwrap();
    events.extend(e.assert(t("extra(10)")).unwrap());
    events.extend(e.tick(3000).unwrap());
    events.extend(e.tick(5000).unwrap());
    events
}

fn fulfilled_run() -> (Engine, Vec<NormEvent>) {
    let mut e = Engine::from_source(STORY).unwrap();
    let mut events = e.assert(t("vl(20)")).unwrap();
    events.extend(e.assert(t("extra(10)")).unwrap());
    events.extend(e.tick(3000).unwrap());
    events.extend(e.tick(4000).unwrap());
    events.extend(e.assert(t("apply_fine(alice, 200)")).unwrap());
    events.extend(e.tick(5000).unwrap());
    (e, events)
}

#[test]
fn unfulfilled_branch_matches_golden_trace() {
    let start = Instant::now();
    let events = unfulfilled_run();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(trace(&events), GOLDEN_UNFULFILLED);
}

#[test]
fn unfulfilled_branch_order() {
    let got: Vec<(u64, String)> = unfulfilled_run().iter().map(|e| (e.time, e.as_term().to_string())).collect();
    let want = [
        (0, "created(n1, alice, b(0))"),
        (3000, "unfulfilled(n1, alice, b(0))"),
        (3000, "sanction(alice, fine(20))"),
        (3000, "created(n2, bob, apply_fine(alice, 200))"),
        (5000, "unfulfilled(n2, bob, apply_fine(alice, 200))"),
        (5000, "sanction(bob, remove_from_systems)"),
    ];
    let want: Vec<(u64, String)> = want.iter().map(|(t, s)| (*t, s.to_string())).collect();
    assert_eq!(got, want);
}

#[test]
fn fulfilled_branch_matches_golden_trace() {
    let (e, events) = fulfilled_run();
    assert_eq!(trace(&events), GOLDEN_FULFILLED);
    let on_bob: Vec<String> =
        e.sanction_facts().iter().filter(|f| f.args()[0] == Term::atom("bob")).map(ToString::to_string).collect();
    assert!(on_bob.is_empty(), "{on_bob:?}");
    let n2 = e.instances().iter().find(|i| i.norm == "n2").unwrap();
    assert_eq!(n2.resolved_at, Some(4000));
}
