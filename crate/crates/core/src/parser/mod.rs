//! Source text to AST and back.

pub mod ast;
mod grammar;
mod lexer;

use std::fmt;
use std::str::FromStr;

pub use ast::*;
use grammar::Parser;

use crate::logic::{Formula, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// Two norms or two sanction rules share an id.
    DuplicateId,
}

/// A parse failure at a 1-based line and column (`offset` is in bytes).
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub offset: usize,
    /// Source text of the offending token; empty at end of input.
    pub token: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Parses `np name { ... }`, or a bare item list (named `main`).
pub fn parse_program(src: &str) -> Result<ProgramAst, ParseError> {
    Parser::new(src)?.program()
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Canonical source for `ast`; `parse_program` reads it back unchanged.
pub fn pretty_print(ast: &ProgramAst) -> String {
    ast.to_string()
}

impl FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl FromStr for ProgramAst {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{CmpOp, Number};

    const STORY: &str = r#"
np story {
    norm n1: vl(X) & X > 5
        -> obligation(alice,true, b(0), `3 seconds`)
        if unfulfilled: sr1(alice,X) .
    norm n2: sanction(A,fine(X)) & extra(C)
        -> obligation(bob,true, apply_fine(A,X*C), `2 seconds`)
        if unfulfilled: sr2 .
    sanction-rule sr1(A,V) : not emergency(A) -> sanction(A,fine(V)) .
    sanction-rule sr2 -> sanction(bob,remove_from_systems) .
}
"#;

    #[test]
    fn story_program() {
        let ast = parse_program(STORY).unwrap();
        assert_eq!(ast.name, "story");
        assert_eq!(ast.norms().count(), 2);
        assert_eq!(ast.sanction_rules().count(), 2);
        let n1 = ast.norms().next().unwrap();
        let Consequence::Deontic(d) = &n1.consequence else { panic!("n1 is an obligation") };
        assert_eq!(d.kind, DeonticKind::Obligation);
        let Deadline::Time(t) = d.deadline else { panic!("timed deadline") };
        assert_eq!(t.duration_ms(), 3000);
        assert_eq!(n1.triggers.len(), 1);
        let tsr = n1.trigger(Outcome::Unfulfilled).unwrap();
        assert_eq!(tsr.calls, vec![Term::compound("sr1", vec![Term::atom("alice"), Term::var("X")])]);
        let sr2 = ast.sanction_rules().nth(1).unwrap();
        assert!(sr2.params.is_empty() && sr2.condition.is_none());
        assert_eq!(sr2.content, Term::atom("remove_from_systems"));
    }

    #[test]
    fn empty_program() {
        let ast = parse_program("np empty {}").unwrap();
        assert_eq!(ast, ProgramAst::new("empty"));
        assert_eq!(parse_program(&pretty_print(&ast)).unwrap(), ast);
    }

    #[test]
    fn obligation_needs_four_arguments() {
        let e = parse_program("norm bad: p(X) -> obligation(a, true, q(X)) .").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!(e.token, ")");
        assert!(e.message.contains("4 arguments"), "{}", e.message);
    }

    #[test]
    fn story_round_trips() {
        let ast = parse_program(STORY).unwrap();
        let text = pretty_print(&ast);
        assert_eq!(parse_program(&text).unwrap(), ast, "{text}");
    }

    #[test]
    fn duplicate_ids_are_a_distinct_error() {
        let e = parse_program("norm a: p -> fail(q). norm a: r -> fail(q).").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateId);
        assert_eq!((e.line, e.column), (1, 28));
        let e = parse_program("sanction-rule s -> sanction(x, y). sanction-rule s -> sanction(x, z).").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateId);
    }

    #[test]
    fn trigger_clauses_are_normalised() {
        let ast = parse_program("norm n: p -> obligation(a, true, q, `1 second`) if inactive: s3 if fulfilled: s1 s2.")
            .unwrap();
        let n = ast.norms().next().unwrap();
        assert_eq!(n.triggers[0].outcome, Outcome::Fulfilled);
        assert_eq!(n.triggers[0].calls.len(), 2);
        assert_eq!(n.triggers[1].outcome, Outcome::Inactive);
        assert!(parse_program("norm n: p -> obligation(a, true, q, r) if inactive: s if inactive: t.").is_err());
    }

    #[test]
    fn formula_precedence() {
        let f: Formula = "not a & b | c".parse().unwrap();
        let a = || Formula::atom(Term::atom("a"));
        let expect =
            Formula::or(Formula::and(Formula::not(a()), Formula::atom(Term::atom("b"))), Formula::atom(Term::atom("c")));
        assert_eq!(f, expect);
        let g: Formula = "not (a & b)".parse().unwrap();
        assert!(matches!(g, Formula::Not(inner) if matches!(*inner, Formula::And(..))));
        let h: Formula = "(X + 1) * 2 >= 4".parse().unwrap();
        assert!(matches!(h, Formula::Cmp(CmpOp::Ge, Term::Compound(ref op, _), _) if op == "*"));
        let k: Formula = "(p(X)) & X =< -2".parse().unwrap();
        assert!(matches!(k, Formula::And(_, r) if *r == Formula::Cmp(CmpOp::Le, Term::var("X"), Term::int(-2))));
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let t: Term = "f(_, _, X)".parse().unwrap();
        assert_eq!(t.args()[0], Term::var("_#0"));
        assert_eq!(t.args()[1], Term::var("_#1"));
        assert_eq!(t.to_string(), "f(_, _, X)");
    }

    #[test]
    fn time_specs() {
        let time = |src: &str| {
            let ast = parse_program(&format!("norm n: p -> obligation(a, true, q, `{src}`).")).unwrap();
            let n = ast.norms().next().unwrap().clone();
            match n.consequence {
                Consequence::Deontic(DeonticArgs { deadline: Deadline::Time(t), .. }) => t,
                _ => unreachable!(),
            }
        };
        assert_eq!(time("1 minute").duration_ms(), 60_000);
        assert_eq!(time("2 hours").duration_ms(), 7_200_000);
        assert_eq!(time("1 day").duration_ms(), 86_400_000);
        assert_eq!(time("250 milliseconds").duration_ms(), 250);
        assert_eq!(time("1.5 seconds").amount, Number::float(1.5));
        assert_eq!(time("1.5 seconds").duration_ms(), 1500);
        assert!(parse_program("norm n: p -> obligation(a, true, q, `3 fortnights`).").is_err());
        assert!(parse_program("norm n: p -> obligation(a, true, q, `-3 seconds`).").is_err());
    }

    #[test]
    fn keywords_are_reserved_in_id_positions() {
        assert!(parse_program("norm if: p -> fail(q).").is_err());
        assert!(parse_program("sanction-rule norm -> sanction(a, b).").is_err());
        assert!(parse_program("not(a).").is_err());
        assert!(parse_program("sanction(a, b).").is_ok());
    }

    #[test]
    fn sanction_takes_two_arguments() {
        let e = parse_program("sanction-rule s -> sanction(a, b, c).").unwrap_err();
        assert_eq!(e.token, ",");
        assert!(parse_program("sanction-rule s -> sanction(a, b)").is_ok());
    }

    #[test]
    fn error_positions() {
        let e = parse_program("np x {\n  p(a) :- q(.\n}").unwrap_err();
        assert_eq!((e.line, e.column, e.token.as_str()), (2, 13, "."));
        let e = parse_program("np x {\n  p(a)").unwrap_err();
        assert_eq!((e.line, e.token.as_str()), (2, ""));
        assert!(parse_term("f()").is_err());
    }

    #[test]
    fn strings_and_deadline_formulas() {
        let ast = parse_program(r#"msg("hi \"you\""). norm n: p(A) -> prohibition(A, true, q, r(1) | s) ."#).unwrap();
        let text = pretty_print(&ast);
        assert!(text.contains(r#"msg("hi \"you\"")."#), "{text}");
        assert_eq!(parse_program(&text).unwrap(), ast);
    }
}
