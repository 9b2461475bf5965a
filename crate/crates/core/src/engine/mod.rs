//! Norm instances over a fact base and a logical clock.
//!
//! Every public operation is a transaction: it either completes and returns
//! the events it caused, or leaves the engine exactly as it was.

mod event;
mod deps;
mod instance;

use std::collections::{BTreeSet, HashMap, HashSet};

use indexmap::{IndexMap, IndexSet};

pub use event::{EventKind, NormEvent, TraceRecord, TraceWriter};
use deps::Deps;
pub use instance::{InstanceDeadline, InstanceState, ObligationInstance};

use crate::logic::{Change, FactBase, Formula, LogicError, Solver, Substitution, Term, DEFAULT_MAX_DEPTH};
use crate::parser::{parse_program, Consequence, Deadline, DeonticKind, Item, NormAst, ParseError, ProgramAst};
use crate::sanction::{fire_all, FireContext, SanctionFact, SanctionRule, SanctionSink};

pub const DEFAULT_MAX_ITERATIONS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Fixpoint iterations allowed per step before giving up.
    pub max_iterations: usize,
    /// Derivation depth limit for queries.
    pub max_depth: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { max_iterations: DEFAULT_MAX_ITERATIONS, max_depth: DEFAULT_MAX_DEPTH }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unresolved sanction rule '{rule}' in norm '{norm}'")]
    UnresolvedSanctionRule { norm: String, rule: String },
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("norm '{norm}' calls sanction rule '{rule}' with {found} argument(s) but it takes {expected}")]
    ArityMismatch { norm: String, rule: String, expected: usize, found: usize },
    #[error("norm '{norm}': bearer variable {var} does not occur in the condition")]
    UnboundBearer { norm: String, var: String },
    #[error("norm '{norm}': bearer {bearer} is neither a variable nor an agent id")]
    InvalidBearer { norm: String, bearer: Term },
    #[error("norm '{norm}': variable {var} in trigger call {call} does not occur in the condition")]
    UnboundTriggerVar { norm: String, call: Term, var: String },
    #[error("sanction rule '{rule}': variable {var} is neither a parameter nor bound by the condition")]
    UnclosedSanctionVar { rule: String, var: String },
    #[error("norm '{norm}': bearer {bearer} is not ground after activation")]
    NonGroundBearer { norm: String, bearer: Term },
    #[error("clock cannot move backward from {now} ms to {requested} ms")]
    ClockRegression { now: u64, requested: u64 },
    #[error("no fixpoint after {0} iterations; a norm or sanction cycle?")]
    FixpointNotReached(usize),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Parse or load failure for [`Engine::from_source`].
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Load(#[from] EngineError),
}

/// Filter for [`Engine::query_instances`]; `None` fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstanceFilter {
    pub norm: Option<String>,
    pub bearer: Option<String>,
    pub state: Option<InstanceState>,
}

impl InstanceFilter {
    pub fn norm(mut self, id: impl Into<String>) -> Self {
        self.norm = Some(id.into());
        self
    }

    pub fn bearer(mut self, agent: impl Into<String>) -> Self {
        self.bearer = Some(agent.into());
        self
    }

    pub fn state(mut self, state: InstanceState) -> Self {
        self.state = Some(state);
        self
    }

    pub fn accepts(&self, i: &ObligationInstance) -> bool {
        self.norm.as_ref().is_none_or(|n| *n == i.norm)
            && self.bearer.as_ref().is_none_or(|b| *b == i.bearer_name())
            && self.state.is_none_or(|s| s == i.state)
    }
}

#[derive(Clone, Debug)]
struct Norm {
    ast: NormAst,
    /// Named variables of the condition; groundings are keyed on these.
    vars: Vec<String>,
    deps: Deps,
}

type Key = (usize, Substitution);

#[derive(Clone, Debug, Default)]
struct State {
    fb: FactBase,
    now: u64,
    instances: Vec<ObligationInstance>,
    /// Non-terminal instance per grounding.
    live: HashMap<Key, usize>,
    /// Indices of active instances, in creation order.
    active: BTreeSet<usize>,
    /// Groundings whose instance terminated while the condition still held.
    blocked: IndexSet<Key>,
    sanctions: Vec<SanctionFact>,
}

#[derive(Clone, Debug)]
enum Undo {
    Asserted(Term),
    Retracted(Term, usize),
    Created(Key),
    Resolved(usize, Key),
    Blocked(Key),
    Unblocked(Key),
    Clock(u64),
    Sanction,
}

enum Abort {
    Regimented(NormEvent),
    Error(EngineError),
}

impl<E: Into<EngineError>> From<E> for Abort {
    fn from(e: E) -> Self {
        Abort::Error(e.into())
    }
}

/// Norm engine for one agent's normative program.
#[derive(Clone, Debug)]
pub struct Engine {
    name: String,
    norms: Vec<Norm>,
    rules: IndexMap<String, SanctionRule>,
    config: EngineConfig,
    st: State,
    journal: Vec<Undo>,
    /// Journal entries already seen by a fixpoint iteration.
    seen: usize,
    /// Every norm must be re-examined, e.g. after a rollback.
    stale: bool,
    last_iterations: usize,
}

impl Engine {
    pub fn load(ast: ProgramAst) -> Result<Engine, EngineError> {
        Engine::with_config(ast, EngineConfig::default())
    }

    pub fn from_source(src: &str) -> Result<Engine, ProgramError> {
        Ok(Engine::load(parse_program(src)?)?)
    }

    /// Compiles and validates `ast`. No step is run.
    pub fn with_config(ast: ProgramAst, config: EngineConfig) -> Result<Engine, EngineError> {
        let mut fb = FactBase::new();
        let mut norms = Vec::new();
        let mut rules = IndexMap::new();
        for item in &ast.items {
            if let Item::SanctionRule(r) = item {
                let rule = SanctionRule::from(r.clone());
                if let Some(var) = rule.unclosed_vars().into_iter().next() {
                    return Err(EngineError::UnclosedSanctionVar { rule: rule.id, var });
                }
                if rules.insert(rule.id.clone(), rule).is_some() {
                    return Err(EngineError::DuplicateId(r.id.clone()));
                }
            }
        }
        for item in ast.items {
            match item {
                Item::Rule(r) if r.body.is_none() && r.head.is_ground() => {
                    let _ = fb.assert_fact(r.head)?;
                }
                Item::Rule(r) => fb.add_rule(r)?,
                Item::Norm(n) => {
                    if norms.iter().any(|m: &Norm| m.ast.id == n.id) {
                        return Err(EngineError::DuplicateId(n.id));
                    }
                    norms.push(compile_norm(n, &rules)?);
                }
                Item::SanctionRule(_) => {}
            }
        }
        for norm in &mut norms {
            norm.deps = Deps::of(&norm.ast.condition, &fb);
        }
        let st = State { fb, ..State::default() };
        Ok(Engine { name: ast.name, norms, rules, config, st, journal: Vec::new(), seen: 0, stale: true, last_iterations: 0 })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn set_max_iterations(&mut self, n: usize) {
        self.config.max_iterations = n;
    }

    pub fn now(&self) -> u64 {
        self.st.now
    }

    pub fn norms(&self) -> impl Iterator<Item = &NormAst> {
        self.norms.iter().map(|n| &n.ast)
    }

    pub fn sanction_rules(&self) -> impl Iterator<Item = &SanctionRule> {
        self.rules.values()
    }

    pub fn fact_base(&self) -> &FactBase {
        &self.st.fb
    }

    /// Every instance ever created, in creation order.
    pub fn instances(&self) -> &[ObligationInstance] {
        &self.st.instances
    }

    pub fn instance(&self, id: u64) -> Option<&ObligationInstance> {
        self.st.instances.get(usize::try_from(id).ok()?.checked_sub(1)?)
    }

    pub fn query_instances(&self, filter: &InstanceFilter) -> Vec<ObligationInstance> {
        self.st.instances.iter().filter(|i| filter.accepts(i)).cloned().collect()
    }

    /// Every sanction produced so far, with provenance.
    pub fn sanction_log(&self) -> &[SanctionFact] {
        &self.st.sanctions
    }

    /// `sanction(_, _)` facts currently in the fact base.
    pub fn sanction_facts(&self) -> Vec<Term> {
        self.st.fb.facts().filter(|f| f.functor() == Some(("sanction", 2))).cloned().collect()
    }

    pub fn solve(&self, f: &Formula) -> Result<Vec<Substitution>, LogicError> {
        self.solver().solve(f)
    }

    /// Fixpoint iterations used by the most recent step.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    /// Earliest timed deadline of an active instance that lies in the future.
    pub fn next_deadline(&self) -> Option<u64> {
        self.st
            .active
            .iter()
            .filter_map(|&i| match self.st.instances[i].deadline {
                InstanceDeadline::At(t) if t > self.st.now => Some(t),
                _ => None,
            })
            .min()
    }

    pub fn assert(&mut self, fact: Term) -> Result<Vec<NormEvent>, EngineError> {
        self.update(vec![fact], Vec::new())
    }

    pub fn assert_all(&mut self, facts: impl IntoIterator<Item = Term>) -> Result<Vec<NormEvent>, EngineError> {
        self.update(facts.into_iter().collect(), Vec::new())
    }

    pub fn retract(&mut self, fact: &Term) -> Result<Vec<NormEvent>, EngineError> {
        self.update(Vec::new(), vec![fact.clone()])
    }

    /// Retracts then asserts, then runs one step, as a single transaction.
    pub fn update(&mut self, assert: Vec<Term>, retract: Vec<Term>) -> Result<Vec<NormEvent>, EngineError> {
        self.transact(|e, events| {
            for f in &retract {
                e.retract_fact(f)?;
            }
            for f in assert {
                let _ = e.assert_fact(f)?;
            }
            e.fixpoint(events)
        })
    }

    /// Runs the step loop at the current time.
    pub fn step(&mut self) -> Result<Vec<NormEvent>, EngineError> {
        self.transact(|e, events| e.fixpoint(events))
    }

    /// Advances the clock to `new_now`, stopping at each intermediate timed
    /// deadline in order so that instances resolve at their own deadline.
    pub fn tick(&mut self, new_now: u64) -> Result<Vec<NormEvent>, EngineError> {
        if new_now < self.st.now {
            return Err(EngineError::ClockRegression { now: self.st.now, requested: new_now });
        }
        self.transact(|e, events| {
            while let Some(t) = e.next_deadline().filter(|&t| t <= new_now) {
                e.set_clock(t);
                e.fixpoint(events)?;
            }
            e.set_clock(new_now);
            e.fixpoint(events)
        })
    }

    pub fn advance(&mut self, ms: u64) -> Result<Vec<NormEvent>, EngineError> {
        self.tick(self.st.now.saturating_add(ms))
    }

    fn solver(&self) -> Solver<'_> {
        Solver::new(&self.st.fb).with_max_depth(self.config.max_depth)
    }

    fn transact(
        &mut self,
        body: impl FnOnce(&mut Self, &mut Vec<NormEvent>) -> Result<(), Abort>,
    ) -> Result<Vec<NormEvent>, EngineError> {
        self.journal.clear();
        self.seen = 0;
        let mut events = Vec::new();
        let result = body(self, &mut events);
        if result.is_err() {
            self.rollback();
            self.stale = true;
        }
        self.journal.clear();
        self.seen = 0;
        match result {
            Ok(()) => Ok(events),
            Err(Abort::Regimented(e)) => Ok(vec![e]),
            Err(Abort::Error(e)) => Err(e),
        }
    }

    fn rollback(&mut self) {
        let st = &mut self.st;
        while let Some(u) = self.journal.pop() {
            match u {
                Undo::Asserted(t) => {
                    let _ = st.fb.retract_fact(&t);
                }
                Undo::Retracted(t, i) => st.fb.restore_at(t, i),
                Undo::Created(key) => {
                    st.live.remove(&key);
                    st.instances.pop();
                    st.active.remove(&st.instances.len());
                }
                Undo::Resolved(i, key) => {
                    let inst = &mut st.instances[i];
                    inst.state = InstanceState::Active;
                    inst.resolved_at = None;
                    st.live.insert(key, i);
                    st.active.insert(i);
                }
                Undo::Blocked(key) => {
                    st.blocked.shift_remove(&key);
                }
                Undo::Unblocked(key) => {
                    st.blocked.insert(key);
                }
                Undo::Clock(t) => st.now = t,
                Undo::Sanction => {
                    st.sanctions.pop();
                }
            }
        }
    }

    fn assert_fact(&mut self, fact: Term) -> Result<Change, LogicError> {
        assert_journaled(&mut self.st.fb, &mut self.journal, fact)
    }

    fn retract_fact(&mut self, fact: &Term) -> Result<(), LogicError> {
        if let Some(i) = self.st.fb.retract_indexed(fact)? {
            self.journal.push(Undo::Retracted(fact.clone(), i));
        }
        Ok(())
    }

    fn set_clock(&mut self, t: u64) {
        if t != self.st.now {
            self.journal.push(Undo::Clock(self.st.now));
            self.st.now = t;
        }
    }

    fn fixpoint(&mut self, events: &mut Vec<NormEvent>) -> Result<(), Abort> {
        for iteration in 1..=self.config.max_iterations {
            self.last_iterations = iteration;
            let scope = self.scope();
            self.check_regimentation(&scope)?;
            self.unblock(&scope)?;
            let created = self.create_instances(&scope, events)?;
            let resolved = self.evaluate(events)?;
            if !created && !resolved {
                return Ok(());
            }
        }
        Err(Abort::Error(EngineError::FixpointNotReached(self.config.max_iterations)))
    }

    /// Norms whose condition may have changed since the previous iteration.
    fn scope(&mut self) -> Vec<bool> {
        let stale = std::mem::take(&mut self.stale);
        let mut scope = vec![stale; self.norms.len()];
        let mut touched = HashSet::new();
        for u in &self.journal[self.seen..] {
            match u {
                Undo::Asserted(t) | Undo::Retracted(t, _) => {
                    touched.extend(t.functor().map(|(n, a)| (n.to_string(), a)));
                }
                // a fresh block may already be releasable
                Undo::Blocked(key) => scope[key.0] = true,
                _ => {}
            }
        }
        self.seen = self.journal.len();
        for (s, n) in scope.iter_mut().zip(&self.norms) {
            *s = *s || n.deps.touched_by(&touched);
        }
        scope
    }

    fn check_regimentation(&self, scope: &[bool]) -> Result<(), Abort> {
        for (norm, _) in self.norms.iter().zip(scope).filter(|(_, s)| **s) {
            let Consequence::Fail(atom) = &norm.ast.consequence else { continue };
            if let Some(s) = self.solver().solve(&norm.ast.condition)?.first() {
                let atom = atom.apply(s).fold_arith().map_err(LogicError::Arithmetic)?;
                let kind = EventKind::RegimentationFailure { norm: norm.ast.id.clone(), atom };
                return Err(Abort::Regimented(NormEvent { time: self.st.now, kind }));
            }
        }
        Ok(())
    }

    /// Releases blocked groundings whose condition no longer holds.
    fn unblock(&mut self, scope: &[bool]) -> Result<(), Abort> {
        if !scope.contains(&true) {
            return Ok(());
        }
        let mut released = Vec::new();
        for key in self.st.blocked.iter().filter(|k| scope[k.0]) {
            if !self.solver().holds(&self.norms[key.0].ast.condition, &key.1)? {
                released.push(key.clone());
            }
        }
        for key in released {
            self.st.blocked.shift_remove(&key);
            self.journal.push(Undo::Unblocked(key));
        }
        Ok(())
    }

    /// A grounding can only become new when its condition's inputs change:
    /// resolved groundings are blocked and released ones no longer hold.
    fn create_instances(&mut self, scope: &[bool], events: &mut Vec<NormEvent>) -> Result<bool, Abort> {
        let mut created = false;
        for ni in (0..self.norms.len()).filter(|i| scope[*i]) {
            let norm = &self.norms[ni];
            let Consequence::Deontic(d) = &norm.ast.consequence else { continue };
            let mut groundings: Vec<Substitution> =
                self.solver().solve(&norm.ast.condition)?.iter().map(|a| a.restrict(&norm.vars)).collect();
            groundings.sort();
            groundings.dedup();
            let mut fresh = Vec::new();
            for g in groundings {
                let key = (ni, g);
                if self.st.live.contains_key(&key) || self.st.blocked.contains(&key) {
                    continue;
                }
                let g = &key.1;
                let bearer = d.bearer.apply(g);
                if !bearer.is_ground() {
                    return Err(Abort::Error(EngineError::NonGroundBearer { norm: norm.ast.id.clone(), bearer }));
                }
                let fold = |f: &Formula| f.apply(g).fold_arith().map_err(LogicError::Arithmetic);
                let deadline = match &d.deadline {
                    Deadline::Time(ts) => InstanceDeadline::At(self.st.now.saturating_add(ts.duration_ms())),
                    Deadline::Formula(f) => InstanceDeadline::Formula(fold(f)?),
                };
                let instance = ObligationInstance {
                    id: (self.st.instances.len() + fresh.len() + 1) as u64,
                    norm: norm.ast.id.clone(),
                    kind: d.kind,
                    bindings: g.clone(),
                    bearer,
                    maintenance: fold(&d.maintenance)?,
                    target: fold(&d.target)?,
                    deadline,
                    state: InstanceState::Active,
                    created_at: self.st.now,
                    resolved_at: None,
                };
                fresh.push((key, instance));
            }
            for (key, instance) in fresh {
                let idx = self.st.instances.len();
                events.push(NormEvent::transition(self.st.now, instance.clone()));
                self.st.instances.push(instance);
                self.st.live.insert(key.clone(), idx);
                self.st.active.insert(idx);
                self.journal.push(Undo::Created(key));
                created = true;
            }
        }
        Ok(created)
    }

    /// Checks every active instance in creation order: maintenance, then
    /// goal, then deadline.
    fn evaluate(&mut self, events: &mut Vec<NormEvent>) -> Result<bool, Abort> {
        let mut resolved = false;
        let pending: Vec<usize> = self.st.active.iter().copied().collect();
        for idx in pending {
            let inst = &self.st.instances[idx];
            let solver = self.solver();
            let empty = Substitution::new();
            let prohibition = inst.kind == DeonticKind::Prohibition;
            let next = if !solver.holds(&inst.maintenance, &empty)? {
                InstanceState::Inactive
            } else if solver.holds(&inst.target, &empty)? {
                if prohibition { InstanceState::Unfulfilled } else { InstanceState::Fulfilled }
            } else if match &inst.deadline {
                InstanceDeadline::At(t) => *t <= self.st.now,
                InstanceDeadline::Formula(d) => solver.holds(d, &empty)?,
            } {
                if prohibition { InstanceState::Fulfilled } else { InstanceState::Unfulfilled }
            } else {
                continue;
            };
            self.resolve(idx, next, events);
            resolved = true;
        }
        Ok(resolved)
    }

    fn resolve(&mut self, idx: usize, state: InstanceState, events: &mut Vec<NormEvent>) {
        let now = self.st.now;
        let key = (self.norm_index(&self.st.instances[idx].norm), self.st.instances[idx].bindings.clone());
        let inst = &mut self.st.instances[idx];
        inst.state = state;
        inst.resolved_at = Some(now);
        let inst = inst.clone();
        self.st.live.remove(&key);
        self.st.active.remove(&idx);
        self.journal.push(Undo::Resolved(idx, key.clone()));
        if self.st.blocked.insert(key.clone()) {
            self.journal.push(Undo::Blocked(key.clone()));
        }
        events.push(NormEvent::transition(now, inst.clone()));
        if inst.kind == DeonticKind::Permission {
            return;
        }
        let Some(outcome) = state.outcome() else { return };
        let norm = &self.norms[key.0].ast;
        let Some(clause) = norm.trigger(outcome) else { return };
        let calls: Vec<Term> = clause.calls.iter().map(|c| c.apply(&inst.bindings)).collect();
        let ctx = FireContext { norm: &norm.id, instance: inst.id, outcome, time: now };
        let mut sink = JournalSink { fb: &mut self.st.fb, journal: &mut self.journal };
        let out = fire_all(&self.rules, &calls, ctx, &mut sink, self.config.max_depth);
        for fact in out.facts {
            events.push(NormEvent { time: now, kind: EventKind::SanctionCreated(fact.clone()) });
            self.st.sanctions.push(fact);
            self.journal.push(Undo::Sanction);
        }
        if let Some((call, err)) = out.error {
            let rule = call.functor().map_or_else(|| call.to_string(), |(n, _)| n.to_string());
            let kind = EventKind::RuleError { norm: norm.id.clone(), instance: inst.id, rule, message: err.to_string() };
            events.push(NormEvent { time: now, kind });
        }
    }

    fn norm_index(&self, id: &str) -> usize {
        self.norms.iter().position(|n| n.ast.id == id).expect("instances reference loaded norms")
    }
}

fn assert_journaled(fb: &mut FactBase, journal: &mut Vec<Undo>, fact: Term) -> Result<Change, LogicError> {
    let change = fb.assert_fact(fact.clone())?;
    if change.is_changed() {
        journal.push(Undo::Asserted(fact));
    }
    Ok(change)
}

struct JournalSink<'a> {
    fb: &'a mut FactBase,
    journal: &'a mut Vec<Undo>,
}

impl SanctionSink for JournalSink<'_> {
    fn fact_base(&self) -> &FactBase {
        self.fb
    }

    fn assert_sanction(&mut self, fact: Term) -> Result<Change, LogicError> {
        assert_journaled(self.fb, self.journal, fact)
    }
}

fn compile_norm(ast: NormAst, rules: &IndexMap<String, SanctionRule>) -> Result<Norm, EngineError> {
    let vars: Vec<String> = ast.condition.variables().into_iter().filter(|v| !v.starts_with('_')).collect();
    if let Consequence::Deontic(d) = &ast.consequence {
        match &d.bearer {
            Term::Var(v) if !vars.contains(v) => {
                return Err(EngineError::UnboundBearer { norm: ast.id.clone(), var: v.clone() });
            }
            Term::Var(_) | Term::Atom(_) => {}
            other => return Err(EngineError::InvalidBearer { norm: ast.id.clone(), bearer: other.clone() }),
        }
    }
    for clause in &ast.triggers {
        for call in &clause.calls {
            let (name, arity) = call.functor().expect("trigger calls parse as predicates");
            let Some(rule) = rules.get(name) else {
                return Err(EngineError::UnresolvedSanctionRule { norm: ast.id.clone(), rule: name.to_string() });
            };
            if rule.params.len() != arity {
                return Err(EngineError::ArityMismatch {
                    norm: ast.id.clone(),
                    rule: name.to_string(),
                    expected: rule.params.len(),
                    found: arity,
                });
            }
            if let Some(var) = call.variables().into_iter().find(|v| !v.starts_with('_') && !vars.contains(v)) {
                return Err(EngineError::UnboundTriggerVar { norm: ast.id.clone(), call: call.clone(), var });
            }
        }
    }
    Ok(Norm { ast, vars, deps: Deps::default() })
}
