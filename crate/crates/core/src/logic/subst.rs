use std::collections::BTreeMap;
use std::fmt;

use super::Term;

/// Variable bindings.
///
/// Kept idempotent at all times: no bound variable occurs in any bound
/// value, so applying a substitution twice is the same as applying it once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<String, Term>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    /// Binds `var` to `value` after resolving `value` against the current
    /// bindings. Returns `false` (leaving `self` untouched) if the binding
    /// would be cyclic or conflicts with an existing one.
    pub fn bind(&mut self, var: &str, value: &Term) -> bool {
        let value = value.apply(self);
        if let Some(existing) = self.0.get(var) {
            return *existing == value;
        }
        if value == Term::Var(var.to_string()) {
            return true;
        }
        if value.contains_var(var) {
            return false;
        }
        for v in self.0.values_mut() {
            if v.contains_var(var) {
                *v = v.replace_var(var, &value);
            }
        }
        self.0.insert(var.to_string(), value);
        true
    }

    /// Keeps only the bindings of the given variables.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> Substitution {
        let mut out = BTreeMap::new();
        for v in vars {
            if let Some(t) = self.0.get(v) {
                out.insert(v.clone(), t.clone());
            }
        }
        Substitution(out)
    }

    /// Drops bindings of `_`-prefixed (don't-care) variables.
    pub fn without_anonymous(&self) -> Substitution {
        Substitution(self.0.iter().filter(|(k, _)| !k.starts_with('_')).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    /// True when every binding of `self` is also present in `other`.
    pub fn is_subset_of(&self, other: &Substitution) -> bool {
        self.0.iter().all(|(k, v)| other.get(k) == Some(v))
    }
}

impl FromIterator<(String, Term)> for Substitution {
    /// Builds a substitution by binding each pair in turn; pairs that would
    /// break idempotence or acyclicity are skipped.
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (k, v) in iter {
            s.bind(&k, &v);
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of `a` and `b` extending `s0`, with occurs-check.
pub fn unify(a: &Term, b: &Term, s0: &Substitution) -> Option<Substitution> {
    let mut s = s0.clone();
    unify_into(a, b, &mut s).then_some(s)
}

pub(crate) fn unify_into(a: &Term, b: &Term, s: &mut Substitution) -> bool {
    let a = walk(a, s).clone();
    let b = walk(b, s).clone();
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), t) | (t, Term::Var(x)) => s.bind(x, t),
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify_into(x, y, s))
        }
        (x, y) => x == y,
    }
}

// Bindings are fully resolved, so one lookup suffices.
fn walk<'a>(t: &'a Term, s: &'a Substitution) -> &'a Term {
    match t {
        Term::Var(v) => s.get(v).unwrap_or(t),
        _ => t,
    }
}
