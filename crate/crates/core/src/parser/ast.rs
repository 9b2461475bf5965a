use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Formula, InferenceRule, Number, Term};

/// A parsed normative program: `np name { ... }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramAst {
    pub name: String,
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Rule(InferenceRule),
    Norm(NormAst),
    SanctionRule(SanctionRuleAst),
}

impl ProgramAst {
    pub fn new(name: impl Into<String>) -> Self {
        ProgramAst { name: name.into(), items: Vec::new() }
    }

    pub fn rules(&self) -> impl Iterator<Item = &InferenceRule> {
        self.items.iter().filter_map(|i| match i {
            Item::Rule(r) => Some(r),
            _ => None,
        })
    }

    pub fn norms(&self) -> impl Iterator<Item = &NormAst> {
        self.items.iter().filter_map(|i| match i {
            Item::Norm(n) => Some(n),
            _ => None,
        })
    }

    pub fn sanction_rules(&self) -> impl Iterator<Item = &SanctionRuleAst> {
        self.items.iter().filter_map(|i| match i {
            Item::SanctionRule(s) => Some(s),
            _ => None,
        })
    }
}

/// `norm id : condition -> consequence (if outcome: calls)* .`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormAst {
    pub id: String,
    pub condition: Formula,
    pub consequence: Consequence,
    /// At most one clause per outcome, ordered fulfilled, unfulfilled, inactive.
    pub triggers: Vec<TriggerClause>,
}

impl NormAst {
    pub fn trigger(&self, outcome: Outcome) -> Option<&TriggerClause> {
        self.triggers.iter().find(|t| t.outcome == outcome)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consequence {
    /// Regimentation: the condition must never hold.
    Fail(Term),
    Deontic(DeonticArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeonticKind {
    Obligation,
    Permission,
    Prohibition,
}

impl DeonticKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DeonticKind::Obligation => "obligation",
            DeonticKind::Permission => "permission",
            DeonticKind::Prohibition => "prohibition",
        }
    }
}

/// `(bearer, maintenance, target, deadline)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeonticArgs {
    pub kind: DeonticKind,
    /// A variable or an agent identifier.
    pub bearer: Term,
    pub maintenance: Formula,
    pub target: Formula,
    pub deadline: Deadline,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Deadline {
    Time(TimeSpec),
    Formula(Formula),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeUnit {
    Millisecond,
    Second,
    Minute,
    Hour,
    Day,
}

impl TimeUnit {
    pub fn millis(self) -> u64 {
        match self {
            TimeUnit::Millisecond => 1,
            TimeUnit::Second => 1_000,
            TimeUnit::Minute => 60_000,
            TimeUnit::Hour => 3_600_000,
            TimeUnit::Day => 86_400_000,
        }
    }

    /// Accepts singular and plural unit names.
    pub fn from_name(name: &str) -> Option<TimeUnit> {
        let singular = name.strip_suffix('s').unwrap_or(name);
        Some(match singular {
            "millisecond" => TimeUnit::Millisecond,
            "second" => TimeUnit::Second,
            "minute" => TimeUnit::Minute,
            "hour" => TimeUnit::Hour,
            "day" => TimeUnit::Day,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeUnit::Millisecond => "millisecond",
            TimeUnit::Second => "second",
            TimeUnit::Minute => "minute",
            TimeUnit::Hour => "hour",
            TimeUnit::Day => "day",
        }
    }
}

/// A relative duration such as `` `3 seconds` ``.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeSpec {
    /// Non-negative.
    pub amount: Number,
    pub unit: TimeUnit,
}

impl TimeSpec {
    pub fn new(amount: Number, unit: TimeUnit) -> Self {
        TimeSpec { amount, unit }
    }

    /// Exact for integer amounts; decimals round to the nearest millisecond.
    pub fn duration_ms(&self) -> u64 {
        match self.amount {
            Number::Int(i) => (i.max(0) as u64).saturating_mul(self.unit.millis()),
            Number::Float(f) => (f.0.max(0.0) * self.unit.millis() as f64).round() as u64,
        }
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plural = if self.amount == Number::Int(1) { "" } else { "s" };
        write!(f, "`{} {}{plural}`", self.amount, self.unit.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Fulfilled,
    Unfulfilled,
    Inactive,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Fulfilled, Outcome::Unfulfilled, Outcome::Inactive];

    pub fn keyword(self) -> &'static str {
        match self {
            Outcome::Fulfilled => "fulfilled",
            Outcome::Unfulfilled => "unfulfilled",
            Outcome::Inactive => "inactive",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Outcome> {
        Outcome::ALL.into_iter().find(|o| o.keyword() == s)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// `if outcome: sr1(args), sr2, ...`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerClause {
    pub outcome: Outcome,
    pub calls: Vec<Term>,
}

/// `sanction-rule id(params) : condition -> sanction(target, content) .`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SanctionRuleAst {
    pub id: String,
    pub params: Vec<Term>,
    /// Absent means `true`.
    pub condition: Option<Formula>,
    pub target: Term,
    pub content: Term,
}

impl fmt::Display for DeonticArgs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {}, {}, ", self.kind.keyword(), self.bearer, self.maintenance, self.target)?;
        match &self.deadline {
            Deadline::Time(t) => write!(f, "{t})"),
            Deadline::Formula(d) => write!(f, "{d})"),
        }
    }
}

impl fmt::Display for NormAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "norm {}: {}\n        -> ", self.id, self.condition)?;
        match &self.consequence {
            Consequence::Fail(t) => write!(f, "fail({t})")?,
            Consequence::Deontic(d) => write!(f, "{d}")?,
        }
        for clause in &self.triggers {
            write!(f, "\n        if {}:", clause.outcome)?;
            for (i, call) in clause.calls.iter().enumerate() {
                let sep = if i == 0 { " " } else { ", " };
                write!(f, "{sep}{call}")?;
            }
        }
        f.write_str(".")
    }
}

impl fmt::Display for SanctionRuleAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sanction-rule {}", Term::compound(self.id.clone(), self.params.clone()))?;
        if let Some(c) = &self.condition {
            write!(f, ": {c}")?;
        }
        write!(f, " -> sanction({}, {}).", self.target, self.content)
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Rule(r) => write!(f, "{r}"),
            Item::Norm(n) => write!(f, "{n}"),
            Item::SanctionRule(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "np {} {{", self.name)?;
        for item in &self.items {
            writeln!(f, "    {item}")?;
        }
        f.write_str("}\n")
    }
}
