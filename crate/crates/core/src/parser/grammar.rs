use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::logic::{CmpOp, Formula, InferenceRule, Number, Term};

const KEYWORDS: &[&str] = &[
    "norm",
    "obligation",
    "permission",
    "prohibition",
    "fail",
    "if",
    "fulfilled",
    "unfulfilled",
    "inactive",
    "sanction",
    "not",
    "np",
];

const DEFAULT_PROGRAM_NAME: &str = "main";

pub(crate) struct Parser {
    toks: Vec<Token>,
    i: usize,
    anon: usize,
    /// Position of the most recent norm or sanction-rule id.
    id_pos: Pos,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Self> {
        let toks = tokenize(src)?;
        let id_pos = toks[0].pos;
        Ok(Parser { toks, i: 0, anon: 0, id_pos })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = &self.toks[self.i];
        error_at(t.pos, message, &t.text)
    }

    fn expected(&self, what: &str) -> ParseError {
        self.error_here(format!("expected {what}, found {}", self.peek()))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.expected(&format!("'{tok}'")))
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    fn expect_ident(&mut self, word: &str) -> PResult<()> {
        if self.is_ident(word) {
            self.advance();
            Ok(())
        } else {
            Err(self.expected(&format!("'{word}'")))
        }
    }

    /// A non-keyword identifier, returned with its position.
    fn name(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(w) if KEYWORDS.contains(&w.as_str()) => {
                Err(self.error_here(format!("keyword '{w}' cannot be used as {what}")))
            }
            Tok::Ident(w) => {
                let pos = self.pos();
                self.advance();
                Ok((w, pos))
            }
            _ => Err(self.expected(what)),
        }
    }

    pub(crate) fn finish(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.expected("end of input"))
        }
    }

    // ---- program level ----

    pub(crate) fn program(&mut self) -> PResult<ProgramAst> {
        let wrapped = self.is_ident("np") && matches!(self.peek_at(1), Tok::Ident(_)) && *self.peek_at(2) == Tok::LBrace;
        let name = if wrapped {
            self.advance();
            let (name, _) = self.name("a program name")?;
            self.expect(Tok::LBrace)?;
            name
        } else {
            DEFAULT_PROGRAM_NAME.to_string()
        };
        let end = if wrapped { Tok::RBrace } else { Tok::Eof };
        let mut items = Vec::new();
        let mut norm_ids = HashSet::new();
        let mut rule_ids = HashSet::new();
        while *self.peek() != end {
            if *self.peek() == Tok::Eof {
                return Err(self.expected("'}'"));
            }
            let item = self.item()?;
            let dup = match &item {
                Item::Norm(n) => (!norm_ids.insert(n.id.clone())).then(|| format!("duplicate norm id '{}'", n.id)),
                Item::SanctionRule(s) => {
                    (!rule_ids.insert(s.id.clone())).then(|| format!("duplicate sanction-rule id '{}'", s.id))
                }
                Item::Rule(_) => None,
            };
            if let Some(message) = dup {
                let text = match &item {
                    Item::Norm(n) => n.id.clone(),
                    Item::SanctionRule(s) => s.id.clone(),
                    Item::Rule(_) => String::new(),
                };
                let mut e = error_at(self.id_pos, message, &text);
                e.kind = ParseErrorKind::DuplicateId;
                return Err(e);
            }
            items.push(item);
        }
        self.advance();
        self.finish()?;
        Ok(ProgramAst { name, items })
    }

    fn item(&mut self) -> PResult<Item> {
        if *self.peek() == Tok::SanctionRule {
            return self.sanction_rule().map(Item::SanctionRule);
        }
        if self.is_ident("norm") {
            return self.norm().map(Item::Norm);
        }
        self.rule().map(Item::Rule)
    }

    fn rule(&mut self) -> PResult<InferenceRule> {
        let head = self.predicate("a fact or rule head")?;
        let body = if self.eat(&Tok::ColonDash) { Some(self.formula()?) } else { None };
        self.expect(Tok::Dot)?;
        Ok(InferenceRule { head, body })
    }

    fn norm(&mut self) -> PResult<NormAst> {
        self.expect_ident("norm")?;
        let (id, id_pos) = self.name("a norm id")?;
        self.id_pos = id_pos;
        self.expect(Tok::Colon)?;
        let condition = self.formula()?;
        self.expect(Tok::Arrow)?;
        let consequence = self.consequence()?;
        let mut triggers: Vec<TriggerClause> = Vec::new();
        while self.is_ident("if") {
            self.advance();
            let outcome = match self.peek() {
                Tok::Ident(w) => Outcome::from_keyword(w),
                _ => None,
            }
            .ok_or_else(|| self.expected("'fulfilled', 'unfulfilled' or 'inactive'"))?;
            if triggers.iter().any(|t| t.outcome == outcome) {
                return Err(self.error_here(format!("second '{outcome}' clause in norm '{id}'")));
            }
            self.advance();
            self.expect(Tok::Colon)?;
            // calls name sanction rules, so a keyword ends the list
            let is_call = |t: &Tok| matches!(t, Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()));
            let mut calls = Vec::new();
            while is_call(self.peek()) {
                calls.push(self.predicate("a sanction-rule call")?);
                if self.eat(&Tok::Comma) && !is_call(self.peek()) {
                    return Err(self.expected("a sanction-rule call"));
                }
            }
            triggers.push(TriggerClause { outcome, calls });
        }
        triggers.sort_by_key(|t| t.outcome);
        self.expect(Tok::Dot)?;
        Ok(NormAst { id, condition, consequence, triggers })
    }

    fn consequence(&mut self) -> PResult<Consequence> {
        if self.is_ident("fail") {
            self.advance();
            self.expect(Tok::LParen)?;
            let t = self.predicate("an atom")?;
            self.expect(Tok::RParen)?;
            return Ok(Consequence::Fail(t));
        }
        let kind = match self.peek() {
            Tok::Ident(w) if w == "obligation" => DeonticKind::Obligation,
            Tok::Ident(w) if w == "permission" => DeonticKind::Permission,
            Tok::Ident(w) if w == "prohibition" => DeonticKind::Prohibition,
            _ => return Err(self.expected("'fail', 'obligation', 'permission' or 'prohibition'")),
        };
        self.advance();
        self.expect(Tok::LParen)?;
        let bearer = self.agent("a bearer (variable or identifier)")?;
        self.expect(Tok::Comma)?;
        let maintenance = self.formula()?;
        self.expect(Tok::Comma)?;
        let target = self.formula()?;
        if *self.peek() != Tok::Comma {
            return Err(self.expected(&format!("',' ({} takes 4 arguments)", kind.keyword())));
        }
        self.advance();
        let deadline = match self.peek().clone() {
            Tok::Time(text) => {
                let pos = self.pos();
                self.advance();
                Deadline::Time(time_spec(&text, pos)?)
            }
            _ => Deadline::Formula(self.formula()?),
        };
        if *self.peek() != Tok::RParen {
            return Err(self.expected(&format!("')' ({} takes 4 arguments)", kind.keyword())));
        }
        self.advance();
        Ok(Consequence::Deontic(DeonticArgs { kind, bearer, maintenance, target, deadline }))
    }

    fn sanction_rule(&mut self) -> PResult<SanctionRuleAst> {
        self.expect(Tok::SanctionRule)?;
        if let Tok::Ident(w) = self.peek() {
            if KEYWORDS.contains(&w.as_str()) {
                return Err(self.error_here(format!("keyword '{w}' cannot be used as a sanction-rule id")));
            }
        }
        self.id_pos = self.pos();
        let head = self.predicate("a sanction-rule id")?;
        let (id, params) = match head {
            Term::Atom(id) => (id, Vec::new()),
            Term::Compound(id, args) => (id, args),
            _ => unreachable!("predicate() only returns atoms and compounds"),
        };
        let condition = if self.eat(&Tok::Colon) { Some(self.formula()?) } else { None };
        self.expect(Tok::Arrow)?;
        self.expect_ident("sanction")?;
        self.expect(Tok::LParen)?;
        let target = self.agent("a sanction target (variable or identifier)")?;
        self.expect(Tok::Comma)?;
        let content = self.predicate("a sanction content atom")?;
        if *self.peek() == Tok::Comma {
            return Err(self.error_here("sanction(...) takes exactly 2 arguments"));
        }
        self.expect(Tok::RParen)?;
        self.eat(&Tok::Dot);
        Ok(SanctionRuleAst { id, params, condition, target, content })
    }

    fn agent(&mut self, what: &str) -> PResult<Term> {
        let t = match self.peek().clone() {
            Tok::Var(_) => self.primary()?,
            Tok::Ident(w) => {
                self.advance();
                Term::Atom(w)
            }
            _ => return Err(self.expected(what)),
        };
        Ok(t)
    }

    /// An atom or compound term usable as a predicate.
    fn predicate(&mut self, what: &str) -> PResult<Term> {
        if !matches!(self.peek(), Tok::Ident(_)) {
            return Err(self.expected(what));
        }
        if self.is_ident("not") {
            return Err(self.error_here("'not' cannot be used as a predicate name"));
        }
        self.primary()
    }

    // ---- formulas ----

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.eat(&Tok::Bar) {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        while self.eat(&Tok::Amp) {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> PResult<Formula> {
        // `not(...)` negates a parenthesized formula; it is never a compound term.
        if self.is_ident("not") {
            self.advance();
            return Ok(Formula::not(self.unary()?));
        }
        self.formula_primary()
    }

    fn formula_primary(&mut self) -> PResult<Formula> {
        if *self.peek() == Tok::LParen {
            let (save_i, save_anon) = (self.i, self.anon);
            self.advance();
            let grouped = self.formula().and_then(|f| {
                self.expect(Tok::RParen)?;
                if is_term_operator(self.peek()) || cmp_op(self.peek()).is_some() {
                    Err(self.expected("'&', '|' or the end of the formula"))
                } else {
                    Ok(f)
                }
            });
            let formula_err = match grouped {
                Ok(f) => return Ok(f),
                Err(e) => e,
            };
            self.i = save_i;
            self.anon = save_anon;
            return match self.comparison_or_atom() {
                Ok(f) => Ok(f),
                Err(e) if e.offset >= formula_err.offset => Err(e),
                Err(_) => Err(formula_err),
            };
        }
        self.comparison_or_atom()
    }

    fn comparison_or_atom(&mut self) -> PResult<Formula> {
        let start = self.toks[self.i].clone();
        if matches!(start.tok, Tok::Ident(ref w) if w == "not") {
            return Err(self.error_here("'not' cannot be used as a predicate name"));
        }
        let lhs = self.term()?;
        if let Some(op) = cmp_op(self.peek()) {
            self.advance();
            let rhs = self.term()?;
            return Ok(Formula::Cmp(op, lhs, rhs));
        }
        if !lhs.is_callable() {
            return Err(error_at(start.pos, format!("expected a formula, found {}", start.tok), &start.text));
        }
        Ok(Formula::Atom(lhs))
    }

    // ---- terms ----

    pub(crate) fn term(&mut self) -> PResult<Term> {
        let mut t = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => return Ok(t),
            };
            self.advance();
            t = Term::compound(op, vec![t, self.product()?]);
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut t = self.signed()?;
        loop {
            let op = match self.peek() {
                Tok::Star => "*",
                Tok::Slash => "/",
                _ => return Ok(t),
            };
            self.advance();
            t = Term::compound(op, vec![t, self.signed()?]);
        }
    }

    fn signed(&mut self) -> PResult<Term> {
        if *self.peek() != Tok::Minus {
            return self.primary();
        }
        self.advance();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Term::Number(Number::Int(-i)))
            }
            Tok::Float(x) => {
                self.advance();
                Ok(Term::Number(Number::float(-x)))
            }
            _ => {
                Ok(Term::Compound("-".into(), vec![self.signed()?]))
            }
        }
    }

    fn primary(&mut self) -> PResult<Term> {
        let tok = self.toks[self.i].clone();
        match tok.tok {
            Tok::Int(i) => {
                self.advance();
                Ok(Term::int(i))
            }
            Tok::Float(x) => {
                self.advance();
                Ok(Term::float(x))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Term::Str(s))
            }
            Tok::Var(v) => {
                self.advance();
                if v == "_" {
                    let n = self.anon;
                    self.anon += 1;
                    Ok(Term::Var(format!("_#{n}")))
                } else {
                    Ok(Term::Var(v))
                }
            }
            Tok::Ident(name) => {
                self.advance();
                if !self.eat(&Tok::LParen) {
                    return Ok(Term::Atom(name));
                }
                if *self.peek() == Tok::RParen {
                    return Err(self.expected("an argument"));
                }
                let mut args = vec![self.term()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Term::Compound(name, args))
            }
            Tok::LParen => {
                self.advance();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.expected("a term")),
        }
    }
}

fn is_term_operator(t: &Tok) -> bool {
    matches!(t, Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash)
}

fn cmp_op(t: &Tok) -> Option<CmpOp> {
    Some(match t {
        Tok::Gt => CmpOp::Gt,
        Tok::Lt => CmpOp::Lt,
        Tok::Ge => CmpOp::Ge,
        Tok::Le => CmpOp::Le,
        Tok::EqEq => CmpOp::Eq,
        Tok::NotEq => CmpOp::Ne,
        _ => return None,
    })
}

pub(crate) fn error_at(pos: Pos, message: impl Into<String>, token: &str) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax,
        message: message.into(),
        line: pos.line,
        column: pos.column,
        offset: pos.offset,
        token: token.to_string(),
    }
}

// `pos` is the opening backquote; the contents start one column later.
fn time_spec(text: &str, pos: Pos) -> PResult<TimeSpec> {
    let inner = Pos { offset: pos.offset + 1, line: pos.line, column: pos.column + 1 };
    let bad = |msg: &str| error_at(inner, msg, text);
    let mut words = text.split_whitespace();
    let (Some(amount), Some(unit), None) = (words.next(), words.next(), words.next()) else {
        return Err(bad("time literal must be `<number> <unit>`"));
    };
    let amount = if let Ok(i) = amount.parse::<i64>() {
        Number::Int(i)
    } else if let Ok(x) = amount.parse::<f64>().map_err(|_| ()).and_then(|x| if x.is_finite() { Ok(x) } else { Err(()) }) {
        Number::float(x)
    } else {
        return Err(bad("invalid amount in time literal"));
    };
    if amount.is_negative() {
        return Err(bad("time amount must be non-negative"));
    }
    let unit = TimeUnit::from_name(unit).ok_or_else(|| bad("unknown time unit"))?;
    Ok(TimeSpec { amount, unit })
}
