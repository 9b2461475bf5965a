use std::fmt;

use serde::Serialize;

use crate::logic::{Formula, Substitution, Term};
use crate::parser::{DeonticKind, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceState {
    Active,
    Fulfilled,
    Unfulfilled,
    Inactive,
}

impl InstanceState {
    pub fn is_terminal(self) -> bool {
        self != InstanceState::Active
    }

    pub fn name(self) -> &'static str {
        match self {
            InstanceState::Active => "active",
            InstanceState::Fulfilled => "fulfilled",
            InstanceState::Unfulfilled => "unfulfilled",
            InstanceState::Inactive => "inactive",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [InstanceState::Active, InstanceState::Fulfilled, InstanceState::Unfulfilled, InstanceState::Inactive]
            .into_iter()
            .find(|st| st.name() == s)
    }

    pub fn outcome(self) -> Option<Outcome> {
        match self {
            InstanceState::Active => None,
            InstanceState::Fulfilled => Some(Outcome::Fulfilled),
            InstanceState::Unfulfilled => Some(Outcome::Unfulfilled),
            InstanceState::Inactive => Some(Outcome::Inactive),
        }
    }
}

impl fmt::Display for InstanceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An instance's deadline after activation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceDeadline {
    /// Absolute logical time in milliseconds.
    At(u64),
    Formula(Formula),
}

impl fmt::Display for InstanceDeadline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceDeadline::At(t) => write!(f, "{t}"),
            InstanceDeadline::Formula(d) => write!(f, "{d}"),
        }
    }
}

/// A norm activated for one grounding of its condition.
///
/// Covers obligations, prohibitions and permissions alike.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObligationInstance {
    pub id: u64,
    pub norm: String,
    pub kind: DeonticKind,
    pub bindings: Substitution,
    pub bearer: Term,
    pub maintenance: Formula,
    pub target: Formula,
    pub deadline: InstanceDeadline,
    pub state: InstanceState,
    pub created_at: u64,
    pub resolved_at: Option<u64>,
}

impl ObligationInstance {
    pub fn bearer_name(&self) -> String {
        match &self.bearer {
            Term::Atom(a) | Term::Str(a) => a.clone(),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for ObligationInstance {
    /// `obligation(alice, true, b(0), 3000)`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {}, {}, {})", self.kind.keyword(), self.bearer, self.maintenance, self.target, self.deadline)
    }
}
