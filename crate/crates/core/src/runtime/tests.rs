use super::*;
use crate::logic::Formula;

fn t(s: &str) -> Term {
    s.parse().unwrap()
}

fn f(s: &str) -> Formula {
    s.parse().unwrap()
}

const DUTY: &str = r#"
np duty {
    norm pay: owes(A, X) -> obligation(A, true, paid(A, X), `2 seconds`)
        if unfulfilled: fine(A).
    sanction-rule fine(A) -> sanction(A, penalty(10)).
}
"#;

fn duty_agent(id: &str, plans: Vec<Plan>) -> Agent {
    Agent::new(id, Engine::from_source(DUTY).unwrap(), plans)
}

struct Counter {
    calls: usize,
    fail_first: usize,
}

impl Environment for Counter {
    fn invoke(&mut self, ctx: &ActionContext<'_>, action: &Term) -> Result<Vec<Effect>, String> {
        self.calls += 1;
        if self.calls <= self.fail_first {
            return Err("device busy".into());
        }
        let n = ctx.beliefs.facts().filter(|f| f.functor() == Some(("paid", 2))).count();
        Ok(vec![
            Effect::Assert(action.clone()),
            Effect::Trace { kind: "env".into(), payload: format!("paid so far {n}") },
        ])
    }
}

#[test]
fn plan_fulfils_own_obligation() {
    let plans = vec![Plan::new("settle", TriggerKind::Created, t("created(pay, Me, G)")).then(Action::Assert(t("G")))];
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", plans)).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)")]).unwrap();
    sys.run_until_quiet(&mut NoEnvironment).unwrap();
    let a = sys.agent("alice").unwrap();
    assert!(a.beliefs().contains(&t("paid(alice, 5)")));
    assert_eq!(a.engine().instances()[0].state, crate::engine::InstanceState::Fulfilled);
    let kinds: Vec<&str> = sys.trace().iter().map(|r| r.kind.as_str()).collect();
    assert_eq!(kinds, ["instance-created", "plan", "instance-fulfilled"]);
    assert!(sys.trace().iter().all(|r| r.by.as_deref() == Some("alice")));
}

#[test]
fn unhandled_obligation_is_warned() {
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", vec![])).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)"), t("owes(bob, 1)")]).unwrap();
    sys.run_until_quiet(&mut NoEnvironment).unwrap();
    let warnings: Vec<_> = sys.trace().iter().filter(|r| r.kind == "unhandled-obligation").collect();
    // bob's obligation is not alice's concern
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].payload.contains("alice"));
}

#[test]
fn failing_guard_falls_through_to_next_plan() {
    let plans = vec![
        Plan::new("rich", TriggerKind::FactAdded, t("owes(A, X)"))
            .with_guard(f("X > 100"))
            .then(Action::Assert(t("broke(A)"))),
        Plan::new("cheap", TriggerKind::FactAdded, t("owes(A, X)")).then(Action::Assert(t("paid(A, X)"))),
    ];
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", plans)).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)")]).unwrap();
    sys.run_until_quiet(&mut NoEnvironment).unwrap();
    let b = sys.agent("alice").unwrap().beliefs();
    assert!(b.contains(&t("paid(alice, 5)")));
    assert!(!b.contains(&t("broke(alice)")));
}

#[test]
fn environment_failure_retries_once() {
    let plans = vec![Plan::new("settle", TriggerKind::Created, t("created(pay, Me, G)")).then(Action::Invoke(t("G")))];
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", plans)).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)")]).unwrap();
    let mut env = Counter { calls: 0, fail_first: 1 };
    sys.run_until_quiet(&mut env).unwrap();
    assert_eq!(env.calls, 2);
    let a = sys.agent("alice").unwrap();
    assert!(a.beliefs().contains(&t("paid(alice, 5)")));
    assert!(a.dead_letters().is_empty());
    assert!(sys.trace().iter().any(|r| r.kind == "env" && r.payload == "paid so far 0"));
}

#[test]
fn second_failure_dead_letters_without_effects() {
    let plans = vec![Plan::new("settle", TriggerKind::Created, t("created(pay, Me, G)"))
        .then(Action::Assert(t("tried(Me)")))
        .then(Action::Invoke(t("G")))];
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", plans)).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)")]).unwrap();
    let mut env = Counter { calls: 0, fail_first: 5 };
    sys.run_until_quiet(&mut env).unwrap();
    assert_eq!(env.calls, 2);
    let a = sys.agent("alice").unwrap();
    assert_eq!(a.dead_letters().len(), 1);
    assert_eq!(a.dead_letters()[0].error, "device busy");
    // the assert earlier in the body was not applied
    assert!(!a.beliefs().contains(&t("tried(alice)")));
}

#[test]
fn sanctions_reach_de_facto() {
    let plans = vec![Plan::new("comply", TriggerKind::SanctionCreated, t("sanction(Me, S)"))
        .then(Action::RecordDeFacto { rationale: "paid the penalty".into() })
        .then(Action::Retract(t("sanction(Me, S)")))];
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", plans)).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)")]).unwrap();
    sys.advance_to(2000).unwrap();
    sys.run_until_quiet(&mut NoEnvironment).unwrap();
    let a = sys.agent("alice").unwrap();
    let recs = a.de_facto().records();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].target, "alice");
    assert_eq!(recs[0].rule.as_deref(), Some("fine"));
    assert_eq!(recs[0].sanction, t("sanction(alice, penalty(10))"));
    assert_eq!(recs[0].status, DeFactoStatus::Executed);
    assert_eq!(recs[0].executed_at, Some(2000));
    assert!(!a.beliefs().contains(&t("sanction(alice, penalty(10))")));
    assert_eq!(a.de_facto().by_rule("fine").count(), 1);
}

#[test]
fn messages_are_fifo_per_pair() {
    let relay = vec![Plan::new("forward", TriggerKind::FactAdded, t("ping(N)")).then(Action::Send {
        to: t("bob"),
        facts: vec![t("pong(N)")],
    })];
    let log = vec![Plan::new("log", TriggerKind::FactAdded, t("pong(N)")).then(Action::Invoke(t("seen(N)")))];
    struct Log(Vec<Term>);
    impl Environment for Log {
        fn invoke(&mut self, _: &ActionContext<'_>, action: &Term) -> Result<Vec<Effect>, String> {
            self.0.push(action.clone());
            Ok(vec![])
        }
    }
    let mut sys = System::new();
    sys.add_agent(Agent::new("alice", Engine::from_source("np a {}").unwrap(), relay)).unwrap();
    sys.add_agent(Agent::new("bob", Engine::from_source("np b {}").unwrap(), log)).unwrap();
    for n in 1..=5 {
        sys.send("env", "alice", vec![t(&format!("ping({n})"))]).unwrap();
    }
    let mut env = Log(Vec::new());
    sys.run_until_quiet(&mut env).unwrap();
    let expected: Vec<Term> = (1..=5).map(|n| t(&format!("seen({n})"))).collect();
    assert_eq!(env.0, expected);
}

#[test]
fn unknown_agents_are_errors() {
    let mut sys = System::new();
    sys.add_agent(duty_agent("alice", vec![])).unwrap();
    assert!(matches!(sys.add_agent(duty_agent("alice", vec![])), Err(AgentError::DuplicateAgent(_))));
    assert!(matches!(sys.send("alice", "carol", vec![]), Err(AgentError::UnknownRecipient { .. })));
    assert!(matches!(sys.perceive("carol", vec![]), Err(AgentError::UnknownAgent(_))));
}

#[test]
fn redelivered_beliefs_do_not_retrigger() {
    let plans = vec![
        Plan::new("loop", TriggerKind::FactAdded, t("go")).then(Action::Send { to: t("alice"), facts: vec![t("go")] }),
        Plan::new("forget", TriggerKind::FactAdded, t("go")),
    ];
    let mut sys = System::new();
    sys.add_agent(Agent::new("alice", Engine::from_source("np a {}").unwrap(), plans)).unwrap();
    sys.perceive("alice", vec![t("go")]).unwrap();
    // `go` is already believed, so redelivery adds nothing and the loop dies out
    sys.run_until_quiet(&mut NoEnvironment).unwrap();
    assert!(sys.is_quiet());
}

#[test]
fn trace_streams_to_writer() {
    use std::sync::{Arc, Mutex};
    #[derive(Clone)]
    struct Shared(Arc<Mutex<Vec<u8>>>);
    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }
    let buf = Shared(Arc::new(Mutex::new(Vec::new())));
    let mut sys = System::new();
    sys.set_trace_writer(Box::new(buf.clone()));
    sys.add_agent(duty_agent("alice", vec![])).unwrap();
    sys.perceive("alice", vec![t("owes(alice, 5)")]).unwrap();
    let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
    let lines: Vec<TraceRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines, sys.trace());
}

#[test]
fn endless_conversation_is_not_quiet() {
    let plans = vec![Plan::new("count", TriggerKind::FactAdded, t("n(X)"))
        .then(Action::Send { to: t("alice"), facts: vec![t("n(X + 1)")] })];
    let mut sys = System::new();
    sys.add_agent(Agent::new("alice", Engine::from_source("np a {}").unwrap(), plans)).unwrap();
    sys.perceive("alice", vec![t("n(0)")]).unwrap();
    assert!(matches!(sys.run_until_quiet(&mut NoEnvironment), Err(AgentError::NotQuiet(QUIET_ROUND_LIMIT))));
}
