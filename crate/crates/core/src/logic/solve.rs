//! Backward-chaining query evaluation with negation as failure.

use std::cell::Cell;
use std::cmp::Ordering;

use indexmap::IndexSet;

use super::subst::unify_into;
use super::{ArithError, CmpOp, FactBase, Formula, LogicError, Substitution, Term};

pub const DEFAULT_MAX_DEPTH: usize = 256;

/// Evaluates formulas against a fact base.
#[derive(Debug)]
pub struct Solver<'a> {
    fb: &'a FactBase,
    max_depth: usize,
    fresh: Cell<usize>,
}

/// All answers to `f` over `fb`, restricted to the variables of `f`.
pub fn solve(f: &Formula, fb: &FactBase) -> Result<Vec<Substitution>, LogicError> {
    Solver::new(fb).solve(f)
}

impl<'a> Solver<'a> {
    pub fn new(fb: &'a FactBase) -> Self {
        Solver { fb, max_depth: DEFAULT_MAX_DEPTH, fresh: Cell::new(0) }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn solve(&self, f: &Formula) -> Result<Vec<Substitution>, LogicError> {
        self.solve_from(f, &Substitution::new())
    }

    /// Answers extending `initial`, restricted to `initial`'s domain plus the
    /// variables of `f`, duplicates removed, in derivation order.
    pub fn solve_from(&self, f: &Formula, initial: &Substitution) -> Result<Vec<Substitution>, LogicError> {
        let mut keep: IndexSet<String> = initial.iter().map(|(k, _)| k.clone()).collect();
        f.collect_vars(&mut keep);
        let mut seen = IndexSet::new();
        for s in self.goal(f, initial.clone(), 0)? {
            seen.insert(s.restrict(&keep));
        }
        Ok(seen.into_iter().collect())
    }

    /// Whether `f` has at least one answer under `s`.
    pub fn holds(&self, f: &Formula, s: &Substitution) -> Result<bool, LogicError> {
        Ok(!self.goal(f, s.clone(), 0)?.is_empty())
    }

    fn goal(&self, f: &Formula, s: Substitution, depth: usize) -> Result<Vec<Substitution>, LogicError> {
        match f {
            Formula::Atom(t) => self.atom(t, s, depth),
            Formula::Not(inner) => {
                let applied = inner.apply(&s);
                if let Some(var) = applied.variables().into_iter().find(|v| !v.starts_with('_')) {
                    return Err(LogicError::UnboundInBuiltin { var, goal: format!("not {applied}") });
                }
                let none = self.goal(inner, s.clone(), depth)?.is_empty();
                Ok(if none { vec![s] } else { Vec::new() })
            }
            Formula::And(l, r) => {
                let mut out = Vec::new();
                for s1 in self.goal(l, s, depth)? {
                    out.extend(self.goal(r, s1, depth)?);
                }
                Ok(out)
            }
            Formula::Or(l, r) => {
                let mut out = self.goal(l, s.clone(), depth)?;
                out.extend(self.goal(r, s, depth)?);
                Ok(out)
            }
            Formula::Cmp(op, l, r) => {
                let ok = compare(*op, &l.apply(&s), &r.apply(&s))?;
                Ok(if ok { vec![s] } else { Vec::new() })
            }
        }
    }

    fn atom(&self, t: &Term, s: Substitution, depth: usize) -> Result<Vec<Substitution>, LogicError> {
        let goal = t.apply(&s).fold_arith().map_err(LogicError::Arithmetic)?;
        let Some((name, arity)) = goal.functor().filter(|_| goal.is_callable()) else {
            return Err(match goal {
                Term::Var(var) => LogicError::UnboundInBuiltin { var, goal: t.to_string() },
                other => LogicError::NotCallable(other),
            });
        };
        match (name, arity) {
            ("true", 0) => return Ok(vec![s]),
            ("false", 0) => return Ok(Vec::new()),
            _ => {}
        }
        let mut out = Vec::new();
        for fact in self.fb.candidates(&goal, name, arity) {
            let mut s1 = s.clone();
            if unify_into(&goal, fact, &mut s1) {
                out.push(s1);
            }
        }
        for rule in self.fb.rules_for(name, arity) {
            let n = self.fresh.get();
            self.fresh.set(n + 1);
            let mut rename = |v: &str| format!("{v}#{n}");
            let head = rule.head.map_vars(&mut rename);
            let mut s1 = s.clone();
            if !unify_into(&goal, &head, &mut s1) {
                continue;
            }
            if depth >= self.max_depth {
                return Err(LogicError::DepthExceeded(self.max_depth));
            }
            match &rule.body {
                None => out.push(s1),
                Some(body) => {
                    let body = body.map_terms(&mut |t| t.map_vars(&mut rename));
                    out.extend(self.goal(&body, s1, depth + 1)?);
                }
            }
        }
        Ok(out)
    }
}

fn compare(op: CmpOp, l: &Term, r: &Term) -> Result<bool, LogicError> {
    for side in [l, r] {
        if let Some(var) = side.variables().into_iter().next() {
            return Err(LogicError::UnboundInBuiltin {
                var,
                goal: format!("{l} {} {r}", op.symbol()),
            });
        }
    }
    let numeric = match (l.eval(), r.eval()) {
        (Ok(a), Ok(b)) => Some(a.compare(b)),
        (Err(ArithError::NotNumeric(_)), _) | (_, Err(ArithError::NotNumeric(_))) => None,
        (Err(e), _) | (_, Err(e)) => return Err(LogicError::Arithmetic(e)),
    };
    match (op, numeric) {
        (CmpOp::Eq, Some(ord)) => Ok(ord == Some(Ordering::Equal)),
        (CmpOp::Ne, Some(ord)) => Ok(ord != Some(Ordering::Equal)),
        // Equality on non-numeric ground terms is structural.
        (CmpOp::Eq, None) => Ok(fold(l)? == fold(r)?),
        (CmpOp::Ne, None) => Ok(fold(l)? != fold(r)?),
        (_, None) => {
            let bad = if l.eval().is_err() { l } else { r };
            Err(LogicError::Arithmetic(ArithError::NotNumeric(bad.to_string())))
        }
        (op, Some(ord)) => Ok(match (op, ord) {
            (_, None) => false,
            (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
            (CmpOp::Lt, Some(o)) => o == Ordering::Less,
            (CmpOp::Ge, Some(o)) => o != Ordering::Less,
            (CmpOp::Le, Some(o)) => o != Ordering::Greater,
            _ => unreachable!(),
        }),
    }
}

fn fold(t: &Term) -> Result<Term, LogicError> {
    t.fold_arith().map_err(LogicError::Arithmetic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::InferenceRule;

    fn c(name: &str, args: Vec<Term>) -> Term {
        Term::compound(name, args)
    }
    fn x() -> Term {
        Term::var("X")
    }

    #[test]
    fn conjunction_with_comparison() {
        let mut fb = FactBase::new();
        let _ = fb.assert_fact(c("vl", vec![Term::int(20)])).unwrap();
        let f = Formula::and(Formula::atom(c("vl", vec![x()])), Formula::Cmp(CmpOp::Gt, x(), Term::int(5)));
        let answers = solve(&f, &fb).unwrap();
        assert_eq!(answers.len(), 1);
        assert_eq!(answers[0].get("X"), Some(&Term::int(20)));
    }

    #[test]
    fn negation_as_failure() {
        let fb = FactBase::new();
        let f = Formula::not(Formula::atom(c("emergency", vec![Term::atom("alice")])));
        assert_eq!(solve(&f, &fb).unwrap(), vec![Substitution::new()]);
    }

    #[test]
    fn rules_are_chained() {
        let mut fb = FactBase::new();
        for t in [c("q", vec![Term::int(1)]), c("q", vec![Term::int(2)]), c("r", vec![Term::int(2)])] {
            let _ = fb.assert_fact(t).unwrap();
        }
        fb.add_rule(InferenceRule::new(
            c("p", vec![x()]),
            Formula::and(Formula::atom(c("q", vec![x()])), Formula::atom(c("r", vec![x()]))),
        ))
        .unwrap();
        let answers = solve(&Formula::atom(c("p", vec![x()])), &fb).unwrap();
        assert_eq!(answers.len(), 1);
        assert_eq!(answers[0].get("X"), Some(&Term::int(2)));
    }

    #[test]
    fn unbound_negation_and_comparison_are_errors() {
        let fb = FactBase::new();
        let f = Formula::not(Formula::atom(c("p", vec![x()])));
        assert!(matches!(solve(&f, &fb), Err(LogicError::UnboundInBuiltin { .. })));
        let f = Formula::Cmp(CmpOp::Gt, x(), Term::int(5));
        assert!(matches!(solve(&f, &fb), Err(LogicError::UnboundInBuiltin { .. })));
    }

    #[test]
    fn anonymous_variables_are_allowed_under_negation() {
        let mut fb = FactBase::new();
        let _ = fb.assert_fact(c("p", vec![Term::int(1)])).unwrap();
        let f = Formula::not(Formula::atom(c("p", vec![Term::var("_#0")])));
        assert!(solve(&f, &fb).unwrap().is_empty());
    }

    #[test]
    fn recursion_hits_depth_limit() {
        let mut fb = FactBase::new();
        fb.add_rule(InferenceRule::new(c("p", vec![x()]), Formula::atom(c("p", vec![x()])))).unwrap();
        let err = Solver::new(&fb).with_max_depth(16).solve(&Formula::atom(c("p", vec![Term::int(1)])));
        assert_eq!(err, Err(LogicError::DepthExceeded(16)));
    }

    #[test]
    fn duplicate_answers_are_removed() {
        let mut fb = FactBase::new();
        let _ = fb.assert_fact(c("p", vec![Term::int(1)])).unwrap();
        let f = Formula::or(Formula::atom(c("p", vec![x()])), Formula::atom(c("p", vec![x()])));
        assert_eq!(solve(&f, &fb).unwrap().len(), 1);
    }

    #[test]
    fn equality_is_numeric_or_structural() {
        let fb = FactBase::new();
        let eq = |l: Term, r: Term| solve(&Formula::Cmp(CmpOp::Eq, l, r), &fb).unwrap().len() == 1;
        assert!(eq(Term::int(2), Term::float(2.0)));
        assert!(eq(Term::atom("a"), Term::atom("a")));
        assert!(!eq(Term::atom("a"), Term::int(1)));
        let lt = Formula::Cmp(CmpOp::Lt, Term::atom("a"), Term::int(1));
        assert!(matches!(solve(&lt, &fb), Err(LogicError::Arithmetic(_))));
    }

    #[test]
    fn arithmetic_in_goal_arguments_is_folded() {
        let mut fb = FactBase::new();
        let _ = fb.assert_fact(c("apply_fine", vec![Term::atom("alice"), Term::int(200)])).unwrap();
        let goal = c("apply_fine", vec![Term::atom("alice"), c("*", vec![Term::int(20), Term::int(10)])]);
        assert_eq!(solve(&Formula::atom(goal), &fb).unwrap().len(), 1);
    }
}
