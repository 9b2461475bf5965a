//! A brute-force reference simulator for tiny normative programs.
//!
//! Programs use one condition variable `X` over the domain {1, 2}, unary
//! predicates `p`, `q`, `r` and sanction facts `sanction(agent, cK(V))`.
//! Instead of unification the simulator enumerates every grounding and
//! evaluates ground literals against a set of facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use npls::engine::{Engine, EngineError, InstanceState};
use npls::logic::Term;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DOMAIN: [i64; 2] = [1, 2];
const PREDS: [&str; 3] = ["p", "q", "r"];
const AGENTS: [&str; 2] = ["a", "b"];
const MAX_ITERATIONS: usize = 64;
pub const TICK_GRID_MS: u64 = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arg {
    X,
    Const(i64),
}

impl Arg {
    fn value(self, x: i64) -> i64 {
        match self {
            Arg::X => x,
            Arg::Const(c) => c,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::X => f.write_str("X"),
            Arg::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A ground fact of the tiny language.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fact {
    Pred(&'static str, i64),
    /// `sanction(agent, cK(v))`
    Sanction(&'static str, usize, i64),
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Pred(p, v) => write!(f, "{p}({v})"),
            Fact::Sanction(a, k, v) => write!(f, "sanction({a}, c{k}({v}))"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Atom {
    Pred(&'static str, Arg),
    Sanction(&'static str, usize, Arg),
}

impl Atom {
    fn ground(&self, x: i64) -> Fact {
        match *self {
            Atom::Pred(p, a) => Fact::Pred(p, a.value(x)),
            Atom::Sanction(t, k, a) => Fact::Sanction(t, k, a.value(x)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Pred(p, a) => write!(f, "{p}({a})"),
            Atom::Sanction(t, k, a) => write!(f, "sanction({t}, c{k}({a}))"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Lit {
    True,
    Pos(Atom),
    Neg(Atom),
    /// `X > c`
    Gt(i64),
}

impl Lit {
    fn holds(&self, facts: &BTreeSet<Fact>, x: i64) -> bool {
        match self {
            Lit::True => true,
            Lit::Pos(a) => facts.contains(&a.ground(x)),
            Lit::Neg(a) => !facts.contains(&a.ground(x)),
            Lit::Gt(c) => x > *c,
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::True => f.write_str("true"),
            Lit::Pos(a) => write!(f, "{a}"),
            Lit::Neg(a) => write!(f, "not {a}"),
            Lit::Gt(c) => write!(f, "X > {c}"),
        }
    }
}

fn conj_holds(lits: &[Lit], facts: &BTreeSet<Fact>, x: i64) -> bool {
    lits.iter().all(|l| l.holds(facts, x))
}

fn write_conj(out: &mut String, lits: &[Lit]) {
    for (i, l) in lits.iter().enumerate() {
        if i > 0 {
            out.push_str(" & ");
        }
        let _ = write!(out, "{l}");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Obligation,
    Permission,
    Prohibition,
}

#[derive(Clone, Debug)]
pub enum Due {
    Ms(u64),
    When(Lit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum State {
    Active,
    Fulfilled,
    Unfulfilled,
    Inactive,
}

impl From<InstanceState> for State {
    fn from(s: InstanceState) -> Self {
        match s {
            InstanceState::Active => State::Active,
            InstanceState::Fulfilled => State::Fulfilled,
            InstanceState::Unfulfilled => State::Unfulfilled,
            InstanceState::Inactive => State::Inactive,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TinyNorm {
    /// Starts with a positive literal over `X`.
    pub condition: Vec<Lit>,
    pub kind: Kind,
    pub bearer: &'static str,
    pub maintenance: Lit,
    pub goal: Lit,
    pub due: Due,
    /// Sanction rule indices (0-based) called with `X`, per terminal state.
    pub on: BTreeMap<State, Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct TinyRule {
    /// Over the parameter, written `V` in source and `X` internally.
    pub condition: Option<Lit>,
    pub target: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Assert the fact if absent, retract it if present.
    Toggle(&'static str, i64),
    Tick(u64),
}

#[derive(Clone, Debug)]
pub struct Case {
    pub norms: Vec<TinyNorm>,
    pub rules: Vec<TinyRule>,
    pub steps: Vec<Step>,
}

/// Final instance states (as a multiset) and sanction facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub instances: BTreeMap<(usize, i64, State), usize>,
    pub sanctions: BTreeSet<String>,
}

/// The step at which the fixpoint limit was exceeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Diverged(pub usize);

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn arg(&mut self) -> Arg {
        if self.rng.gen_bool(0.7) {
            Arg::X
        } else {
            Arg::Const(*DOMAIN.choose(&mut self.rng).unwrap())
        }
    }

    fn atom(&mut self, rules: usize) -> Atom {
        if rules > 0 && self.rng.gen_bool(0.25) {
            let k = self.rng.gen_range(0..rules);
            Atom::Sanction(AGENTS[self.rng.gen_range(0..2)], k + 1, self.arg())
        } else {
            Atom::Pred(PREDS.choose(&mut self.rng).unwrap(), self.arg())
        }
    }

    fn lit(&mut self, rules: usize) -> Lit {
        match self.rng.gen_range(0..10) {
            0 => Lit::True,
            1 => Lit::Gt(1),
            2..=3 => Lit::Neg(self.atom(rules)),
            _ => Lit::Pos(self.atom(rules)),
        }
    }

    fn norm(&mut self, rules: usize) -> TinyNorm {
        let first = match self.atom(rules) {
            Atom::Pred(p, _) => Atom::Pred(p, Arg::X),
            Atom::Sanction(t, k, _) => Atom::Sanction(t, k, Arg::X),
        };
        let mut condition = vec![Lit::Pos(first)];
        if self.rng.gen_bool(0.4) {
            condition.push(self.lit(rules));
        }
        let kind = match self.rng.gen_range(0..6) {
            0 => Kind::Permission,
            1 => Kind::Prohibition,
            _ => Kind::Obligation,
        };
        let maintenance = if self.rng.gen_bool(0.6) { Lit::True } else { self.lit(rules) };
        let goal = self.lit(rules);
        let due = if self.rng.gen_bool(0.75) {
            Due::Ms(TICK_GRID_MS * self.rng.gen_range(0..4))
        } else {
            Due::When(self.lit(rules))
        };
        let mut on = BTreeMap::new();
        if rules > 0 {
            for s in [State::Fulfilled, State::Unfulfilled, State::Inactive] {
                if self.rng.gen_bool(0.5) {
                    let calls = (0..self.rng.gen_range(1..=2)).map(|_| self.rng.gen_range(0..rules)).collect();
                    on.insert(s, calls);
                }
            }
        }
        TinyNorm { condition, kind, bearer: AGENTS[self.rng.gen_range(0..2)], maintenance, goal, due, on }
    }
}

impl Case {
    /// At most 3 norms, 2 sanction rules, 4 distinct toggled facts and 4
    /// ticks on a 500 ms grid.
    pub fn random(seed: u64) -> Case {
        let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed) };
        let nrules = g.rng.gen_range(0..=2);
        let rules = (0..nrules)
            .map(|_| {
                let condition = g.rng.gen_bool(0.5).then(|| match g.atom(0) {
                    Atom::Pred(p, a) if g.rng.gen_bool(0.5) => Lit::Neg(Atom::Pred(p, a)),
                    a => Lit::Pos(a),
                });
                TinyRule { condition, target: AGENTS[g.rng.gen_range(0..2)] }
            })
            .collect();
        let norms = (0..g.rng.gen_range(1..=3)).map(|_| g.norm(nrules)).collect();
        let mut pool: Vec<(&'static str, i64)> = PREDS.iter().flat_map(|p| DOMAIN.map(|v| (*p, v))).collect();
        pool.shuffle(&mut g.rng);
        pool.truncate(g.rng.gen_range(1..=4));
        let ticks = g.rng.gen_range(0..=4);
        let toggles = g.rng.gen_range(1..=6);
        let mut steps = Vec::new();
        for _ in 0..toggles {
            let (p, v) = *pool.choose(&mut g.rng).unwrap();
            steps.push(Step::Toggle(p, v));
        }
        for _ in 0..ticks {
            steps.push(Step::Tick(TICK_GRID_MS * g.rng.gen_range(1..=3)));
        }
        steps.shuffle(&mut g.rng);
        Case { norms, rules, steps }
    }

    pub fn source(&self) -> String {
        let mut s = String::from("np tiny {\n");
        for (i, n) in self.norms.iter().enumerate() {
            let _ = write!(s, "    norm n{}: ", i + 1);
            write_conj(&mut s, &n.condition);
            let kind = match n.kind {
                Kind::Obligation => "obligation",
                Kind::Permission => "permission",
                Kind::Prohibition => "prohibition",
            };
            let _ = write!(s, " -> {kind}({}, {}, {}, ", n.bearer, n.maintenance, n.goal);
            match &n.due {
                Due::Ms(ms) => {
                    let _ = write!(s, "`{ms} milliseconds`)");
                }
                Due::When(l) => {
                    let _ = write!(s, "{l})");
                }
            }
            for (state, calls) in &n.on {
                let word = match state {
                    State::Fulfilled => "fulfilled",
                    State::Unfulfilled => "unfulfilled",
                    _ => "inactive",
                };
                let calls: Vec<String> = calls.iter().map(|k| format!("sr{}(X)", k + 1)).collect();
                let _ = write!(s, " if {word}: {}", calls.join(", "));
            }
            s.push_str(".\n");
        }
        for (k, r) in self.rules.iter().enumerate() {
            let _ = write!(s, "    sanction-rule sr{}(V)", k + 1);
            if let Some(c) = &r.condition {
                let _ = write!(s, ": {}", c.to_string().replace('X', "V"));
            }
            let _ = writeln!(s, " -> sanction({}, c{}(V)).", r.target, k + 1);
        }
        s.push_str("}\n");
        s
    }

    pub fn simulate(&self) -> Result<Outcome, Diverged> {
        let mut sim = Sim { case: self, facts: BTreeSet::new(), now: 0, instances: Vec::new(), blocked: BTreeSet::new() };
        for (i, step) in self.steps.iter().enumerate() {
            let ok = match *step {
                Step::Toggle(p, v) => {
                    let f = Fact::Pred(p, v);
                    let before = sim.clone_state();
                    if !sim.facts.remove(&f) {
                        sim.facts.insert(f);
                    }
                    let ok = sim.quiesce();
                    if !ok {
                        sim.restore(before);
                    }
                    ok
                }
                Step::Tick(ms) => {
                    let before = sim.clone_state();
                    let target = sim.now + ms;
                    let ok = sim.advance(target);
                    if !ok {
                        sim.restore(before);
                    }
                    ok
                }
            };
            if !ok {
                return Err(Diverged(i));
            }
        }
        let mut instances = BTreeMap::new();
        for inst in &sim.instances {
            *instances.entry((inst.norm, inst.x, inst.state)).or_default() += 1;
        }
        let sanctions = sim.facts.iter().filter(|f| matches!(f, Fact::Sanction(..))).map(Fact::to_string).collect();
        Ok(Outcome { instances, sanctions })
    }

    /// The same case run through the real engine.
    pub fn run_engine(&self) -> Result<Result<Outcome, Diverged>, EngineError> {
        let mut engine = Engine::from_source(&self.source()).map_err(|e| match e {
            npls::engine::ProgramError::Load(e) => e,
            other => panic!("tiny program does not parse: {other}\n{}", self.source()),
        })?;
        let mut present = BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            let r = match *step {
                Step::Toggle(p, v) => {
                    let t = Term::compound(p, vec![Term::int(v)]);
                    if present.remove(&(p, v)) {
                        engine.retract(&t)
                    } else {
                        present.insert((p, v));
                        engine.assert(t)
                    }
                }
                Step::Tick(ms) => engine.tick(engine.now() + ms),
            };
            match r {
                Ok(_) => {}
                Err(EngineError::FixpointNotReached(_)) => return Ok(Err(Diverged(i))),
                Err(e) => return Err(e),
            }
        }
        let mut instances = BTreeMap::new();
        for inst in engine.instances() {
            let norm: usize = inst.norm.trim_start_matches('n').parse().expect("norm ids are nK");
            let x = inst.bindings.get("X").and_then(Term::as_number).expect("X is bound");
            let x = match x {
                npls::logic::Number::Int(i) => i,
                other => panic!("non-integer binding {other}"),
            };
            *instances.entry((norm - 1, x, State::from(inst.state))).or_default() += 1;
        }
        let sanctions = engine
            .fact_base()
            .facts()
            .filter(|f| f.functor() == Some(("sanction", 2)))
            .map(ToString::to_string)
            .collect();
        Ok(Ok(Outcome { instances, sanctions }))
    }
}

#[derive(Clone, Debug)]
struct Inst {
    norm: usize,
    x: i64,
    state: State,
    due_at: Option<u64>,
}

type Snapshot = (BTreeSet<Fact>, u64, Vec<Inst>, BTreeSet<(usize, i64)>);

struct Sim<'a> {
    case: &'a Case,
    facts: BTreeSet<Fact>,
    now: u64,
    instances: Vec<Inst>,
    blocked: BTreeSet<(usize, i64)>,
}

impl Sim<'_> {
    fn clone_state(&self) -> Snapshot {
        (self.facts.clone(), self.now, self.instances.clone(), self.blocked.clone())
    }

    fn restore(&mut self, s: Snapshot) {
        (self.facts, self.now, self.instances, self.blocked) = s;
    }

    /// Visits every timed deadline up to `target` in order.
    fn advance(&mut self, target: u64) -> bool {
        loop {
            let next = self
                .instances
                .iter()
                .filter(|i| i.state == State::Active)
                .filter_map(|i| i.due_at)
                .filter(|&t| t > self.now && t <= target)
                .min();
            match next {
                Some(t) => {
                    self.now = t;
                    if !self.quiesce() {
                        return false;
                    }
                }
                None => {
                    self.now = target;
                    return self.quiesce();
                }
            }
        }
    }

    fn quiesce(&mut self) -> bool {
        for _ in 0..MAX_ITERATIONS {
            if !self.round() {
                return true;
            }
        }
        false
    }

    /// One pass; true if any instance was created or resolved.
    fn round(&mut self) -> bool {
        let case = self.case;
        let facts = &self.facts;
        self.blocked.retain(|&(n, x)| conj_holds(&case.norms[n].condition, facts, x));
        let mut progress = false;
        for (n, norm) in case.norms.iter().enumerate() {
            for x in DOMAIN {
                let live = self.instances.iter().any(|i| i.norm == n && i.x == x && i.state == State::Active);
                if live || self.blocked.contains(&(n, x)) || !conj_holds(&norm.condition, &self.facts, x) {
                    continue;
                }
                let due_at = match norm.due {
                    Due::Ms(ms) => Some(self.now + ms),
                    Due::When(_) => None,
                };
                self.instances.push(Inst { norm: n, x, state: State::Active, due_at });
                progress = true;
            }
        }
        for idx in 0..self.instances.len() {
            let Inst { norm: n, x, state, due_at } = self.instances[idx];
            if state != State::Active {
                continue;
            }
            let norm = &case.norms[n];
            let goal = norm.goal.holds(&self.facts, x);
            let due = match &norm.due {
                Due::Ms(_) => due_at.is_some_and(|t| t <= self.now),
                Due::When(l) => l.holds(&self.facts, x),
            };
            let prohibition = norm.kind == Kind::Prohibition;
            let next = if !norm.maintenance.holds(&self.facts, x) {
                State::Inactive
            } else if goal {
                if prohibition { State::Unfulfilled } else { State::Fulfilled }
            } else if due {
                if prohibition { State::Fulfilled } else { State::Unfulfilled }
            } else {
                continue;
            };
            self.instances[idx].state = next;
            self.blocked.insert((n, x));
            progress = true;
            if norm.kind == Kind::Permission {
                continue;
            }
            for &k in norm.on.get(&next).into_iter().flatten() {
                let rule = &case.rules[k];
                if rule.condition.as_ref().is_none_or(|c| c.holds(&self.facts, x)) {
                    self.facts.insert(Fact::Sanction(rule.target, k + 1, x));
                }
            }
        }
        progress
    }
}
