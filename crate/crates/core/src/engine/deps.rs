use std::collections::HashSet;

use crate::logic::{FactBase, Formula, Term};

pub(super) type PredKey = (String, usize);

/// Predicates a norm condition can observe, directly or through rules.
#[derive(Clone, Debug, Default)]
pub(super) struct Deps {
    keys: HashSet<PredKey>,
    /// A goal whose predicate is only known at run time.
    wild: bool,
}

impl Deps {
    pub(super) fn of(f: &Formula, fb: &FactBase) -> Deps {
        let mut deps = Deps::default();
        deps.walk(f, fb);
        deps
    }

    /// Whether a change to any of `touched` may change the condition.
    pub(super) fn touched_by(&self, touched: &HashSet<PredKey>) -> bool {
        self.wild || self.keys.iter().any(|k| touched.contains(k))
    }

    fn walk(&mut self, f: &Formula, fb: &FactBase) {
        match f {
            Formula::Atom(t) => self.goal(t, fb),
            Formula::Not(g) => self.walk(g, fb),
            Formula::And(a, b) | Formula::Or(a, b) => {
                self.walk(a, fb);
                self.walk(b, fb);
            }
            Formula::Cmp(..) => {}
        }
    }

    fn goal(&mut self, t: &Term, fb: &FactBase) {
        let Some((name, arity)) = t.functor().filter(|_| t.is_callable()) else {
            self.wild = true;
            return;
        };
        if !self.keys.insert((name.to_string(), arity)) {
            return;
        }
        for rule in fb.rules_for(name, arity) {
            if let Some(body) = &rule.body {
                self.walk(body, fb);
            }
        }
    }
}
