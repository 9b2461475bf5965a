use serde::Serialize;

use crate::logic::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeFactoStatus {
    Pending,
    Executed,
    Skipped,
}

/// History entry for one sanction decision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeFactoRecord {
    /// The sanctioned agent.
    pub target: String,
    /// The sanction rule that produced the sanction, when known.
    pub rule: Option<String>,
    #[serde(serialize_with = "as_text")]
    pub sanction: Term,
    pub rationale: String,
    pub status: DeFactoStatus,
    /// Scenario-defined score; the runtime never computes it.
    pub efficacy: Option<f64>,
    pub decided_at: u64,
    /// Set exactly when `status` is `Executed`.
    pub executed_at: Option<u64>,
}

fn as_text<S: serde::Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(t)
}

impl DeFactoRecord {
    pub fn executed(target: impl Into<String>, rule: Option<String>, sanction: Term, rationale: impl Into<String>, at: u64) -> Self {
        DeFactoRecord {
            target: target.into(),
            rule,
            sanction,
            rationale: rationale.into(),
            status: DeFactoStatus::Executed,
            efficacy: None,
            decided_at: at,
            executed_at: Some(at),
        }
    }

    pub fn with_efficacy(mut self, score: f64) -> Self {
        self.efficacy = Some(score);
        self
    }
}

/// Append-only log of sanction decisions.
#[derive(Clone, Debug, Default)]
pub struct DeFacto {
    records: Vec<DeFactoRecord>,
}

impl DeFacto {
    pub fn record(&mut self, r: DeFactoRecord) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[DeFactoRecord] {
        &self.records
    }

    pub fn by_target<'a>(&'a self, target: &'a str) -> impl Iterator<Item = &'a DeFactoRecord> {
        self.records.iter().filter(move |r| r.target == target)
    }

    pub fn by_rule<'a>(&'a self, rule: &'a str) -> impl Iterator<Item = &'a DeFactoRecord> {
        self.records.iter().filter(move |r| r.rule.as_deref() == Some(rule))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
