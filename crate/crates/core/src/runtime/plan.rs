use std::fmt;

use crate::engine::{EventKind, NormEvent};
use crate::logic::{unify, Formula, Substitution, Term};

/// What an agent reacts to.
#[derive(Clone, Debug, PartialEq)]
pub enum AgentEvent {
    Norm(NormEvent),
    /// A fact newly added to the agent's beliefs by perception.
    FactAdded(Term),
}

impl AgentEvent {
    pub fn trigger_kind(&self) -> TriggerKind {
        match self {
            AgentEvent::FactAdded(_) => TriggerKind::FactAdded,
            AgentEvent::Norm(e) => match e.kind {
                EventKind::InstanceCreated(_) => TriggerKind::Created,
                EventKind::InstanceFulfilled(_) => TriggerKind::Fulfilled,
                EventKind::InstanceUnfulfilled(_) => TriggerKind::Unfulfilled,
                EventKind::InstanceInactive(_) => TriggerKind::Inactive,
                EventKind::SanctionCreated(_) => TriggerKind::SanctionCreated,
                EventKind::RegimentationFailure { .. } => TriggerKind::Regimentation,
                EventKind::RuleError { .. } => TriggerKind::RuleError,
            },
        }
    }

    /// Bindings from matching `pattern` against this event.
    pub fn matches(&self, pattern: &Term) -> Option<Substitution> {
        match self {
            AgentEvent::FactAdded(f) => unify(pattern, f, &Substitution::new()),
            AgentEvent::Norm(e) => e.matches(pattern),
        }
    }

    pub fn as_term(&self) -> Term {
        match self {
            AgentEvent::FactAdded(f) => f.clone(),
            AgentEvent::Norm(e) => e.as_term(),
        }
    }
}

impl fmt::Display for AgentEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentEvent::FactAdded(t) => write!(f, "+{t}"),
            AgentEvent::Norm(e) => write!(f, "{} {}", e.kind_name(), e.payload()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TriggerKind {
    FactAdded,
    Created,
    Fulfilled,
    Unfulfilled,
    Inactive,
    SanctionCreated,
    Regimentation,
    RuleError,
}

/// One step of a plan body. Terms may use variables bound by the trigger
/// pattern and the guard.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Assert(Term),
    Retract(Term),
    /// `to` must resolve to an agent id atom.
    Send { to: Term, facts: Vec<Term> },
    /// Hands the term to the environment, which answers with effects.
    Invoke(Term),
    /// Logs the triggering sanction as executed in the De Facto record.
    RecordDeFacto { rationale: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub name: String,
    pub kind: TriggerKind,
    pub pattern: Term,
    pub guard: Formula,
    pub body: Vec<Action>,
}

impl Plan {
    pub fn new(name: impl Into<String>, kind: TriggerKind, pattern: Term) -> Self {
        Plan { name: name.into(), kind, pattern, guard: Formula::truth(), body: Vec::new() }
    }

    pub fn with_guard(mut self, guard: Formula) -> Self {
        self.guard = guard;
        self
    }

    pub fn then(mut self, action: Action) -> Self {
        self.body.push(action);
        self
    }
}
