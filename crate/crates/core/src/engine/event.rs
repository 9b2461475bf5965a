use std::io::{self, Write};

use serde::Serialize;

use super::{InstanceState, ObligationInstance};
use crate::logic::{unify, Substitution, Term};
use crate::sanction::SanctionFact;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    InstanceCreated(ObligationInstance),
    InstanceFulfilled(ObligationInstance),
    InstanceUnfulfilled(ObligationInstance),
    InstanceInactive(ObligationInstance),
    SanctionCreated(SanctionFact),
    /// A `fail` norm's condition held; the operation was rolled back.
    RegimentationFailure { norm: String, atom: Term },
    /// A sanction rule failed; the rest of its clause was skipped.
    RuleError { norm: String, instance: u64, rule: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormEvent {
    pub time: u64,
    pub kind: EventKind,
}

impl NormEvent {
    pub(crate) fn transition(time: u64, instance: ObligationInstance) -> Self {
        let kind = match instance.state {
            InstanceState::Active => EventKind::InstanceCreated(instance),
            InstanceState::Fulfilled => EventKind::InstanceFulfilled(instance),
            InstanceState::Unfulfilled => EventKind::InstanceUnfulfilled(instance),
            InstanceState::Inactive => EventKind::InstanceInactive(instance),
        };
        NormEvent { time, kind }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            EventKind::InstanceCreated(_) => "instance-created",
            EventKind::InstanceFulfilled(_) => "instance-fulfilled",
            EventKind::InstanceUnfulfilled(_) => "instance-unfulfilled",
            EventKind::InstanceInactive(_) => "instance-inactive",
            EventKind::SanctionCreated(_) => "sanction-created",
            EventKind::RegimentationFailure { .. } => "regimentation-failure",
            EventKind::RuleError { .. } => "rule-error",
        }
    }

    pub fn instance(&self) -> Option<&ObligationInstance> {
        match &self.kind {
            EventKind::InstanceCreated(i)
            | EventKind::InstanceFulfilled(i)
            | EventKind::InstanceUnfulfilled(i)
            | EventKind::InstanceInactive(i) => Some(i),
            _ => None,
        }
    }

    pub fn sanction(&self) -> Option<&SanctionFact> {
        match &self.kind {
            EventKind::SanctionCreated(s) => Some(s),
            _ => None,
        }
    }

    pub fn norm(&self) -> Option<&str> {
        match &self.kind {
            EventKind::RegimentationFailure { norm, .. } | EventKind::RuleError { norm, .. } => Some(norm),
            EventKind::SanctionCreated(s) => Some(&s.norm),
            _ => self.instance().map(|i| i.norm.as_str()),
        }
    }

    pub fn instance_id(&self) -> Option<u64> {
        match &self.kind {
            EventKind::SanctionCreated(s) => Some(s.instance),
            EventKind::RuleError { instance, .. } => Some(*instance),
            _ => self.instance().map(|i| i.id),
        }
    }

    /// The bearer of an instance event or the target of a sanction.
    pub fn agent(&self) -> Option<String> {
        match &self.kind {
            EventKind::SanctionCreated(s) => Some(match &s.target {
                Term::Atom(a) | Term::Str(a) => a.clone(),
                other => other.to_string(),
            }),
            _ => self.instance().map(ObligationInstance::bearer_name),
        }
    }

    /// Canonical text describing the event's content.
    pub fn payload(&self) -> String {
        match &self.kind {
            EventKind::SanctionCreated(s) => s.fact().to_string(),
            EventKind::RegimentationFailure { atom, .. } => atom.to_string(),
            EventKind::RuleError { rule, message, .. } => format!("{rule}: {message}"),
            _ => self.instance().map(ToString::to_string).unwrap_or_default(),
        }
    }

    /// The term that `expect` patterns and plan triggers match against:
    /// `created(Norm, Bearer, Goal)`, `fulfilled(..)`, `unfulfilled(..)`,
    /// `inactive(..)`, `sanction(Target, Content)`, `regimentation(Norm, Atom)`
    /// or `rule_error(Norm, Rule, Message)`.
    pub fn as_term(&self) -> Term {
        let instance_term = |tag: &str, i: &ObligationInstance| {
            Term::compound(tag, vec![Term::atom(i.norm.clone()), i.bearer.clone(), i.target.subject_term()])
        };
        match &self.kind {
            EventKind::InstanceCreated(i) => instance_term("created", i),
            EventKind::InstanceFulfilled(i) => instance_term("fulfilled", i),
            EventKind::InstanceUnfulfilled(i) => instance_term("unfulfilled", i),
            EventKind::InstanceInactive(i) => instance_term("inactive", i),
            EventKind::SanctionCreated(s) => s.fact(),
            EventKind::RegimentationFailure { norm, atom } => {
                Term::compound("regimentation", vec![Term::atom(norm.clone()), atom.clone()])
            }
            EventKind::RuleError { norm, rule, message, .. } => Term::compound(
                "rule_error",
                vec![Term::atom(norm.clone()), Term::atom(rule.clone()), Term::string(message.clone())],
            ),
        }
    }

    /// Matches `pattern` against [`as_term`](Self::as_term). A pattern with
    /// fewer arguments than the event term matches on its leading arguments,
    /// so `unfulfilled(n1)` matches any unfulfilled instance of `n1`.
    pub fn matches(&self, pattern: &Term) -> Option<Substitution> {
        let subject = self.as_term();
        let (Some((pn, pa)), Some((sn, sa))) = (pattern.functor(), subject.functor()) else {
            return None;
        };
        if pn != sn || pa > sa {
            return None;
        }
        let subject = if pa < sa { Term::compound(sn, subject.args()[..pa].to_vec()) } else { subject };
        unify(pattern, &subject, &Substitution::new())
    }

    pub fn record(&self) -> TraceRecord {
        TraceRecord {
            t: self.time,
            kind: self.kind_name().to_string(),
            norm: self.norm().map(str::to_string),
            instance: self.instance_id(),
            agent: self.agent(),
            payload: self.payload(),
            by: None,
        }
    }
}

/// One line of a structured trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub kind: String,
    pub norm: Option<String>,
    pub instance: Option<u64>,
    pub agent: Option<String>,
    pub payload: String,
    /// The agent whose engine or plan produced the record, in multi-agent runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<String>,
}

impl TraceRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}

/// Writes JSON-lines trace records, flushing after each so the file stays
/// valid even if the process dies mid-run.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter { out }
    }

    pub fn write(&mut self, record: &TraceRecord) -> io::Result<()> {
        writeln!(self.out, "{}", record.to_json())?;
        self.out.flush()
    }

    pub fn write_events<'a>(&mut self, events: impl IntoIterator<Item = &'a NormEvent>) -> io::Result<()> {
        for e in events {
            self.write(&e.record())?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
