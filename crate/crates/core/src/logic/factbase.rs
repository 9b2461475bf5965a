use indexmap::{IndexMap, IndexSet};

use super::{InferenceRule, LogicError, Term};

/// Whether an update actually changed the fact set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[must_use]
pub enum Change {
    Changed,
    Unchanged,
}

impl Change {
    pub fn is_changed(self) -> bool {
        self == Change::Changed
    }
}

type Key = (String, usize);

/// Borrowed form of [`Key`] so lookups need no allocation.
struct KeyRef<'a>(&'a str, usize);

impl std::hash::Hash for KeyRef<'_> {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        // must match the derived hash of (String, usize)
        self.0.hash(h);
        self.1.hash(h);
    }
}

impl indexmap::Equivalent<Key> for KeyRef<'_> {
    fn equivalent(&self, key: &Key) -> bool {
        self.0 == key.0 && self.1 == key.1
    }
}

/// Ground facts plus inference rules.
///
/// Facts are indexed by functor and arity and iterate in insertion order.
#[derive(Clone, Debug, Default)]
pub struct FactBase {
    facts: IndexMap<Key, IndexSet<Term>>,
    rules: Vec<InferenceRule>,
}

fn key_of(t: &Term) -> Result<Key, LogicError> {
    match t.functor() {
        Some((n, a)) if t.is_callable() => Ok((n.to_string(), a)),
        _ => Err(LogicError::NotCallable(t.clone())),
    }
}

impl FactBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assert_fact(&mut self, fact: Term) -> Result<Change, LogicError> {
        if !fact.is_ground() {
            return Err(LogicError::NonGroundFact(fact));
        }
        let key = key_of(&fact)?;
        let added = self.facts.entry(key).or_default().insert(fact);
        Ok(if added { Change::Changed } else { Change::Unchanged })
    }

    pub fn retract_fact(&mut self, fact: &Term) -> Result<Change, LogicError> {
        if !fact.is_ground() {
            return Err(LogicError::NonGroundFact(fact.clone()));
        }
        let key = key_of(fact)?;
        let removed = self.facts.get_mut(&key).is_some_and(|set| set.shift_remove(fact));
        Ok(if removed { Change::Changed } else { Change::Unchanged })
    }

    /// Retracts `fact`, returning the position it held within its predicate.
    pub(crate) fn retract_indexed(&mut self, fact: &Term) -> Result<Option<usize>, LogicError> {
        if !fact.is_ground() {
            return Err(LogicError::NonGroundFact(fact.clone()));
        }
        let key = key_of(fact)?;
        Ok(self.facts.get_mut(&key).and_then(|set| set.shift_remove_full(fact)).map(|(i, _)| i))
    }

    /// Undoes `retract_indexed`.
    pub(crate) fn restore_at(&mut self, fact: Term, index: usize) {
        if let Ok(key) = key_of(&fact) {
            self.facts.entry(key).or_default().shift_insert(index, fact);
        }
    }

    pub fn add_rule(&mut self, rule: InferenceRule) -> Result<(), LogicError> {
        key_of(&rule.head)?;
        if let Some(var) = rule.unrestricted_vars().into_iter().next() {
            return Err(LogicError::RangeRestriction { var, rule: rule.to_string() });
        }
        self.rules.push(rule);
        Ok(())
    }

    pub fn contains(&self, fact: &Term) -> bool {
        key_of(fact).ok().and_then(|k| self.facts.get(&k)).is_some_and(|set| set.contains(fact))
    }

    pub fn len(&self) -> usize {
        self.facts.values().map(IndexSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn facts(&self) -> impl Iterator<Item = &Term> {
        self.facts.values().flatten()
    }

    pub fn rules(&self) -> &[InferenceRule] {
        &self.rules
    }

    /// Facts that may unify with `goal`; a ground goal is a set lookup.
    pub(crate) fn candidates<'a>(&'a self, goal: &Term, name: &str, arity: usize) -> Box<dyn Iterator<Item = &'a Term> + 'a> {
        let Some(set) = self.facts.get(&KeyRef(name, arity)) else {
            return Box::new(std::iter::empty());
        };
        if goal.is_ground() {
            Box::new(set.get(goal).into_iter())
        } else {
            Box::new(set.iter())
        }
    }

    pub(crate) fn rules_for<'a>(&'a self, name: &'a str, arity: usize) -> impl Iterator<Item = &'a InferenceRule> {
        self.rules.iter().filter(move |r| r.head.functor() == Some((name, arity)))
    }
}
