//! Random well-formed program ASTs, for round-trip testing of the parser and
//! pretty-printer.

use npls::logic::{CmpOp, Formula, InferenceRule, Number, Term};
use npls::parser::{
    Consequence, Deadline, DeonticArgs, DeonticKind, Item, NormAst, Outcome, ProgramAst, SanctionRuleAst, TimeSpec,
    TimeUnit, TriggerClause,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PREDICATES: &[&str] = &["p", "q", "vl", "extra", "owes", "fill_bottle", "sanction", "b0"];
const CONSTANTS: &[&str] = &["a", "bob", "alice", "yogurt", "remove_from_systems", "x_1"];
const VARIABLES: &[&str] = &["X", "Y", "A", "LQ", "Mn", "V2"];
const STRINGS: &[&str] = &["", "hi", "two words", "say \"x\"", "back\\slash", "line\nbreak"];
const FLOATS: &[f64] = &[0.5, 1.25, 2.0, 1e-3, 123.75];
const CMP: &[CmpOp] = &[CmpOp::Gt, CmpOp::Lt, CmpOp::Ge, CmpOp::Le, CmpOp::Eq, CmpOp::Ne];
const UNITS: &[TimeUnit] = &[TimeUnit::Millisecond, TimeUnit::Second, TimeUnit::Minute, TimeUnit::Hour, TimeUnit::Day];

pub struct AstGen {
    rng: ChaCha8Rng,
}

impl AstGen {
    pub fn new(seed: u64) -> Self {
        AstGen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).expect("non-empty pool")
    }

    pub fn program(&mut self) -> ProgramAst {
        let mut ast = ProgramAst::new(self.pick(&["story", "unit", "plant", "p_2"]));
        let n = self.rng.gen_range(0..7);
        let (mut norms, mut srules) = (0, 0);
        for _ in 0..n {
            let item = match self.rng.gen_range(0..3) {
                0 => Item::Rule(self.rule()),
                1 => {
                    norms += 1;
                    Item::Norm(self.norm(format!("n{norms}")))
                }
                _ => {
                    srules += 1;
                    Item::SanctionRule(self.sanction_rule(format!("sr{srules}")))
                }
            };
            ast.items.push(item);
        }
        ast
    }

    pub fn number(&mut self) -> Number {
        match self.rng.gen_range(0..3) {
            0 => Number::float(self.pick(FLOATS)),
            1 => Number::Int(self.rng.gen_range(-50..0)),
            _ => Number::Int(self.rng.gen_range(0..1000)),
        }
    }

    /// A non-arithmetic leaf or compound term.
    pub fn term(&mut self, depth: u32) -> Term {
        let top = if depth == 0 { 4 } else { 6 };
        match self.rng.gen_range(0..top) {
            0 => Term::atom(self.pick(CONSTANTS)),
            1 => Term::Number(self.number()),
            2 => Term::var(self.pick(VARIABLES)),
            3 => Term::string(self.pick(STRINGS)),
            4 => self.predicate(depth - 1),
            _ => self.arith(depth - 1),
        }
    }

    fn arith(&mut self, depth: u32) -> Term {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return if self.rng.gen_bool(0.5) { Term::var(self.pick(VARIABLES)) } else { Term::Number(self.number()) };
        }
        if self.rng.gen_bool(0.15) {
            return Term::compound("-", vec![self.arith(depth - 1)]);
        }
        let op = self.pick(&["+", "-", "*", "/"]);
        Term::compound(op, vec![self.arith(depth - 1), self.arith(depth - 1)])
    }

    /// A callable term.
    pub fn predicate(&mut self, depth: u32) -> Term {
        let arity = self.rng.gen_range(0..4);
        let args = (0..arity).map(|_| self.term(depth)).collect();
        Term::compound(self.pick(PREDICATES), args)
    }

    pub fn formula(&mut self, depth: u32) -> Formula {
        let top = if depth == 0 { 2 } else { 5 };
        match self.rng.gen_range(0..top) {
            0 => Formula::atom(self.predicate(1)),
            1 => Formula::Cmp(self.pick(CMP), self.arith(2), self.arith(2)),
            2 => Formula::not(self.formula(depth - 1)),
            3 => Formula::and(self.formula(depth - 1), self.formula(depth - 1)),
            _ => Formula::or(self.formula(depth - 1), self.formula(depth - 1)),
        }
    }

    fn rule(&mut self) -> InferenceRule {
        let head = self.predicate(1);
        if self.rng.gen_bool(0.3) {
            InferenceRule::fact(head)
        } else {
            InferenceRule::new(head, self.formula(2))
        }
    }

    fn agent(&mut self) -> Term {
        if self.rng.gen_bool(0.5) {
            Term::var(self.pick(VARIABLES))
        } else {
            Term::atom(self.pick(CONSTANTS))
        }
    }

    fn norm(&mut self, id: String) -> NormAst {
        let condition = self.formula(3);
        let consequence = if self.rng.gen_bool(0.15) {
            Consequence::Fail(self.predicate(1))
        } else {
            let kind = self.pick(&[DeonticKind::Obligation, DeonticKind::Permission, DeonticKind::Prohibition]);
            let deadline = if self.rng.gen_bool(0.6) {
                let amount = if self.rng.gen_bool(0.3) {
                    Number::float(self.pick(FLOATS))
                } else {
                    Number::Int(self.rng.gen_range(0..100))
                };
                Deadline::Time(TimeSpec::new(amount, self.pick(UNITS)))
            } else {
                Deadline::Formula(self.formula(2))
            };
            Consequence::Deontic(DeonticArgs {
                kind,
                bearer: self.agent(),
                maintenance: self.formula(1),
                target: self.formula(2),
                deadline,
            })
        };
        let mut triggers = Vec::new();
        for outcome in Outcome::ALL {
            if self.rng.gen_bool(0.4) {
                let calls = (0..self.rng.gen_range(0..3)).map(|_| self.call()).collect();
                triggers.push(TriggerClause { outcome, calls });
            }
        }
        NormAst { id, condition, consequence, triggers }
    }

    /// A sanction-rule call; keywords are not rule ids.
    fn call(&mut self) -> Term {
        let args = (0..self.rng.gen_range(0..3)).map(|_| self.term(1)).collect();
        Term::compound(self.pick(&["sr1", "sr2", "fine", "warn"]), args)
    }

    fn sanction_rule(&mut self, id: String) -> SanctionRuleAst {
        let params = (0..self.rng.gen_range(0..3)).map(|_| self.term(0)).collect();
        let condition = self.rng.gen_bool(0.6).then(|| self.formula(2));
        SanctionRuleAst { id, params, condition, target: self.agent(), content: self.predicate(1) }
    }
}
