//! Sanction rules and the facts they produce.

use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

use crate::logic::{unify, Change, FactBase, Formula, LogicError, Solver, Substitution, Term, DEFAULT_MAX_DEPTH};
use crate::parser::{Outcome, SanctionRuleAst};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SanctionError {
    #[error("unresolved sanction rule '{0}'")]
    UnknownRule(String),
    #[error("sanction rule '{rule}' takes {expected} argument(s), called with {found}")]
    ArityMismatch { rule: String, expected: usize, found: usize },
    #[error("sanction rule '{rule}': target {target} is not a ground agent id")]
    UnboundTarget { rule: String, target: Term },
    #[error("sanction rule '{rule}': content {content} is not a ground atom")]
    NonGroundContent { rule: String, content: Term },
    #[error("sanction rule '{rule}': {source}")]
    Logic { rule: String, source: LogicError },
}

/// `sanction-rule id(params) : condition -> sanction(target, content)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SanctionRule {
    pub id: String,
    pub params: Vec<Term>,
    pub condition: Formula,
    pub target: Term,
    pub content: Term,
}

impl From<SanctionRuleAst> for SanctionRule {
    fn from(ast: SanctionRuleAst) -> Self {
        SanctionRule {
            id: ast.id,
            params: ast.params,
            condition: ast.condition.unwrap_or_else(Formula::truth),
            target: ast.target,
            content: ast.content,
        }
    }
}

impl SanctionRule {
    /// Target or content variables bound neither by a parameter nor by the condition.
    pub fn unclosed_vars(&self) -> Vec<String> {
        let mut bound = self.condition.variables();
        for p in &self.params {
            bound.extend(p.variables());
        }
        let mut out = self.target.variables();
        out.extend(self.content.variables());
        out.into_iter().filter(|v| !bound.contains(v)).collect()
    }
}

impl fmt::Display for SanctionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sanction-rule {}", Term::compound(self.id.clone(), self.params.clone()))?;
        if !self.condition.is_truth() {
            write!(f, ": {}", self.condition)?;
        }
        write!(f, " -> sanction({}, {}).", self.target, self.content)
    }
}

/// Where a sanction came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FireContext<'a> {
    pub norm: &'a str,
    pub instance: u64,
    pub outcome: Outcome,
    pub time: u64,
}

/// A produced sanction plus its provenance. Only `sanction(target, content)`
/// enters the fact base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SanctionFact {
    #[serde(serialize_with = "as_text")]
    pub target: Term,
    #[serde(serialize_with = "as_text")]
    pub content: Term,
    pub rule: String,
    pub norm: String,
    pub instance: u64,
    pub outcome: Outcome,
    pub time: u64,
}

fn as_text<S: serde::Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(t)
}

impl SanctionFact {
    pub fn fact(&self) -> Term {
        Term::compound("sanction", vec![self.target.clone(), self.content.clone()])
    }
}

/// Evaluates one rule call. `call` has the triggering instance's bindings
/// already applied.
pub fn fire(rule: &SanctionRule, call: &Term, ctx: FireContext<'_>, fb: &FactBase) -> Result<Vec<SanctionFact>, SanctionError> {
    fire_with_depth(rule, call, ctx, fb, DEFAULT_MAX_DEPTH)
}

pub fn fire_with_depth(
    rule: &SanctionRule,
    call: &Term,
    ctx: FireContext<'_>,
    fb: &FactBase,
    max_depth: usize,
) -> Result<Vec<SanctionFact>, SanctionError> {
    let args = call.args();
    if args.len() != rule.params.len() {
        return Err(SanctionError::ArityMismatch { rule: rule.id.clone(), expected: rule.params.len(), found: args.len() });
    }
    let logic = |source| SanctionError::Logic { rule: rule.id.clone(), source };
    let mut s = Substitution::new();
    for (p, a) in rule.params.iter().zip(args) {
        let a = a.fold_arith().map_err(|e| logic(LogicError::Arithmetic(e)))?;
        match unify(p, &a, &s) {
            Some(next) => s = next,
            None => return Ok(Vec::new()),
        }
    }
    let answers = Solver::new(fb).with_max_depth(max_depth).solve_from(&rule.condition, &s).map_err(logic)?;
    let mut seen = IndexSet::new();
    for ans in answers {
        let target = rule.target.apply(&ans);
        if !target.is_ground() || !matches!(target, Term::Atom(_) | Term::Str(_) | Term::Number(_)) {
            return Err(SanctionError::UnboundTarget { rule: rule.id.clone(), target });
        }
        let content = rule.content.apply(&ans).fold_arith().map_err(|e| logic(LogicError::Arithmetic(e)))?;
        if !content.is_ground() || !content.is_callable() {
            return Err(SanctionError::NonGroundContent { rule: rule.id.clone(), content });
        }
        seen.insert((target, content));
    }
    Ok(seen
        .into_iter()
        .map(|(target, content)| SanctionFact {
            target,
            content,
            rule: rule.id.clone(),
            norm: ctx.norm.to_string(),
            instance: ctx.instance,
            outcome: ctx.outcome,
            time: ctx.time,
        })
        .collect())
}

/// Receives sanction facts as a clause is evaluated.
pub trait SanctionSink {
    fn fact_base(&self) -> &FactBase;
    fn assert_sanction(&mut self, fact: Term) -> Result<Change, LogicError>;
}

impl SanctionSink for FactBase {
    fn fact_base(&self) -> &FactBase {
        self
    }

    fn assert_sanction(&mut self, fact: Term) -> Result<Change, LogicError> {
        self.assert_fact(fact)
    }
}

/// Result of a trigger clause: the facts produced before any error, and the
/// error that stopped the clause, if one did.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClauseOutcome {
    pub facts: Vec<SanctionFact>,
    pub error: Option<(Term, SanctionError)>,
}

/// Evaluates `calls` left to right, asserting each rule's facts before the
/// next rule's condition is evaluated.
pub fn fire_all(
    rules: &IndexMap<String, SanctionRule>,
    calls: &[Term],
    ctx: FireContext<'_>,
    sink: &mut impl SanctionSink,
    max_depth: usize,
) -> ClauseOutcome {
    let mut out = ClauseOutcome::default();
    for call in calls {
        let result = match call.functor().and_then(|(name, _)| rules.get(name)) {
            Some(rule) => fire_with_depth(rule, call, ctx, sink.fact_base(), max_depth),
            None => Err(SanctionError::UnknownRule(call.functor().map_or_else(|| call.to_string(), |f| f.0.to_string()))),
        };
        let facts = match result {
            Ok(facts) => facts,
            Err(e) => {
                out.error = Some((call.clone(), e));
                return out;
            }
        };
        for f in facts {
            if let Err(source) = sink.assert_sanction(f.fact()) {
                out.error = Some((call.clone(), SanctionError::Logic { rule: f.rule.clone(), source }));
                return out;
            }
            out.facts.push(f);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn rules(src: &str) -> IndexMap<String, SanctionRule> {
        parse_program(src)
            .unwrap()
            .sanction_rules()
            .cloned()
            .map(|r| (r.id.clone(), SanctionRule::from(r)))
            .collect()
    }

    const STORY_RULES: &str = "
        sanction-rule sr1(A,V) : not emergency(A) -> sanction(A,fine(V)) .
        sanction-rule sr2 -> sanction(bob,remove_from_systems) .";

    fn ctx() -> FireContext<'static> {
        FireContext { norm: "n1", instance: 1, outcome: Outcome::Unfulfilled, time: 3000 }
    }

    fn t(s: &str) -> Term {
        s.parse().unwrap()
    }

    #[test]
    fn story_fine() {
        let rs = rules(STORY_RULES);
        let out = fire(&rs["sr1"], &t("sr1(alice, 20)"), ctx(), &FactBase::new()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].fact(), t("sanction(alice, fine(20))"));
        assert_eq!((out[0].rule.as_str(), out[0].instance, out[0].time), ("sr1", 1, 3000));
    }

    #[test]
    fn emergency_blocks_fine() {
        let rs = rules(STORY_RULES);
        let mut fb = FactBase::new();
        let _ = fb.assert_fact(t("emergency(alice)")).unwrap();
        assert!(fire(&rs["sr1"], &t("sr1(alice, 20)"), ctx(), &fb).unwrap().is_empty());
    }

    #[test]
    fn unconditional_rule() {
        let rs = rules(STORY_RULES);
        let out = fire(&rs["sr2"], &t("sr2"), ctx(), &FactBase::new()).unwrap();
        assert_eq!(out[0].fact(), t("sanction(bob, remove_from_systems)"));
    }

    #[test]
    fn arity_and_target_errors() {
        let rs = rules(STORY_RULES);
        let err = fire(&rs["sr1"], &t("sr1(alice)"), ctx(), &FactBase::new()).unwrap_err();
        assert!(matches!(err, SanctionError::ArityMismatch { expected: 2, found: 1, .. }));
        let rs = rules("sanction-rule s(A) -> sanction(A, warn).");
        let err = fire(&rs["s"], &t("s(X)"), ctx(), &FactBase::new()).unwrap_err();
        assert!(matches!(err, SanctionError::UnboundTarget { .. }));
    }

    #[test]
    fn one_fact_per_distinct_solution() {
        let rs = rules("sanction-rule s : owner(A, _) -> sanction(A, warn).");
        let mut fb = FactBase::new();
        for f in ["owner(a, 1)", "owner(a, 2)", "owner(b, 1)"] {
            let _ = fb.assert_fact(t(f)).unwrap();
        }
        let out = fire(&rs["s"], &t("s"), ctx(), &fb).unwrap();
        assert_eq!(out.iter().map(SanctionFact::fact).collect::<Vec<_>>(), vec![t("sanction(a, warn)"), t("sanction(b, warn)")]);
    }

    #[test]
    fn later_rules_see_earlier_sanctions() {
        let rs = rules(
            "sanction-rule first -> sanction(a, fine).
             sanction-rule second : sanction(a, fine) -> sanction(a, warn).",
        );
        let mut fb = FactBase::new();
        let out = fire_all(&rs, &[t("first"), t("second")], ctx(), &mut fb, DEFAULT_MAX_DEPTH);
        assert!(out.error.is_none());
        assert_eq!(out.facts.iter().map(SanctionFact::fact).collect::<Vec<_>>(), vec![t("sanction(a, fine)"), t("sanction(a, warn)")]);
        assert!(fb.contains(&t("sanction(a, warn)")));
        // Reversed order: `second` runs before the fine exists.
        let mut fb = FactBase::new();
        let out = fire_all(&rs, &[t("second"), t("first")], ctx(), &mut fb, DEFAULT_MAX_DEPTH);
        assert_eq!(out.facts.len(), 1);
        assert!(fire_all(&rs, &[], ctx(), &mut fb, DEFAULT_MAX_DEPTH).facts.is_empty());
    }

    #[test]
    fn error_aborts_rest_of_clause() {
        let rs = rules(
            "sanction-rule ok -> sanction(a, fine).
             sanction-rule bad : not p(X) -> sanction(a, warn).
             sanction-rule never -> sanction(b, fine).",
        );
        let mut fb = FactBase::new();
        let out = fire_all(&rs, &[t("ok"), t("bad"), t("never")], ctx(), &mut fb, DEFAULT_MAX_DEPTH);
        assert_eq!(out.facts.len(), 1);
        assert!(matches!(out.error, Some((_, SanctionError::Logic { .. }))));
        assert!(!fb.contains(&t("sanction(b, fine)")));
    }

    #[test]
    fn closure_check() {
        let rs = rules("sanction-rule s(A) : p(B) -> sanction(A, f(B, C)).");
        assert_eq!(rs["s"].unclosed_vars(), vec!["C".to_string()]);
    }
}
