use std::fmt;

use super::{ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// Contents of a backquoted time literal.
    Time(String),
    SanctionRule,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    ColonDash,
    Arrow,
    Amp,
    Bar,
    Plus,
    Minus,
    Star,
    Slash,
    Gt,
    Lt,
    Ge,
    Le,
    EqEq,
    NotEq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Var(s) => return f.write_str(s),
            Tok::Int(i) => return write!(f, "{i}"),
            Tok::Float(x) => return write!(f, "{x:?}"),
            Tok::Str(s) => return write!(f, "{s:?}"),
            Tok::Time(s) => return write!(f, "`{s}`"),
            Tok::SanctionRule => "sanction-rule",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::ColonDash => ":-",
            Tok::Arrow => "->",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Gt => ">",
            Tok::Lt => "<",
            Tok::Ge => ">=",
            Tok::Le => "<=",
            Tok::EqEq => "==",
            Tok::NotEq => "\\==",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Pos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
    /// Source text of the token.
    pub text: String,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    i: usize,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer { src, chars: src.char_indices().collect(), i: 0, line: 1, column: 1 };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let pos = lx.pos();
        let Some(c) = lx.peek(0) else {
            out.push(Token { tok: Tok::Eof, pos, text: String::new() });
            return Ok(out);
        };
        let tok = lx.token(c, pos)?;
        let text = src[pos.offset..lx.offset()].to_string();
        out.push(Token { tok, pos, text });
    }
}

impl Lexer<'_> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.len(), |&(o, _)| o)
    }

    fn pos(&self) -> Pos {
        Pos { offset: self.offset(), line: self.line, column: self.column }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn error(&self, pos: Pos, message: impl Into<String>, token: impl Into<String>) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax,
            message: message.into(),
            line: pos.line,
            column: pos.column,
            offset: pos.offset,
            token: token.into(),
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|&c| is_ident_char(c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn token(&mut self, c: char, pos: Pos) -> Result<Tok, ParseError> {
        if c.is_lowercase() {
            let w = self.word();
            if w == "sanction" && self.peek(0) == Some('-') && self.lookahead_is("-rule") {
                for _ in 0..5 {
                    self.bump();
                }
                return Ok(Tok::SanctionRule);
            }
            return Ok(Tok::Ident(w));
        }
        if c.is_uppercase() || c == '_' {
            return Ok(Tok::Var(self.word()));
        }
        if c.is_ascii_digit() {
            return self.number(pos);
        }
        let two = (c, self.peek(1));
        let (tok, len) = match two {
            (':', Some('-')) => (Tok::ColonDash, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('<', Some('=')) | ('=', Some('<')) => (Tok::Le, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('\\', Some('=')) if self.peek(2) == Some('=') => (Tok::NotEq, 3),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            (':', _) => (Tok::Colon, 1),
            ('&', _) => (Tok::Amp, 1),
            ('|', _) => (Tok::Bar, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('>', _) => (Tok::Gt, 1),
            ('<', _) => (Tok::Lt, 1),
            ('"', _) => return self.string(pos),
            ('`', _) => return self.time(pos),
            _ => return Err(self.error(pos, format!("unexpected character '{c}'"), c.to_string())),
        };
        for _ in 0..len {
            self.bump();
        }
        Ok(tok)
    }

    // `-rule` followed by a character that cannot continue an identifier.
    fn lookahead_is(&self, s: &str) -> bool {
        let n = s.chars().count();
        s.chars().enumerate().all(|(k, c)| self.peek(k) == Some(c)) && !self.peek(n).is_some_and(is_ident_char)
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let start = self.offset();
        let mut float = false;
        while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            float = true;
            self.bump();
            while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = usize::from(matches!(self.peek(1), Some('+' | '-')));
            if self.peek(1 + sign).is_some_and(|c| c.is_ascii_digit()) {
                float = true;
                for _ in 0..=sign {
                    self.bump();
                }
                while self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = &self.src[start..self.offset()];
        if float {
            text.parse().map(Tok::Float).map_err(|_| self.error(pos, "invalid number", text))
        } else {
            text.parse().map(Tok::Int).map_err(|_| self.error(pos, "integer literal out of range", text))
        }
    }

    fn string(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(pos, "unterminated string literal", "\"")),
                Some('"') => return Ok(Tok::Str(s)),
                Some('\\') => {
                    let esc_pos = self.pos();
                    match self.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('r') => s.push('\r'),
                        Some('\\') => s.push('\\'),
                        Some('"') => s.push('"'),
                        Some(c) => return Err(self.error(esc_pos, format!("unknown escape '\\{c}'"), c.to_string())),
                        None => return Err(self.error(pos, "unterminated string literal", "\"")),
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn time(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(pos, "unterminated time literal", "`")),
                Some('`') => return Ok(Tok::Time(s)),
                Some(c) => s.push(c),
            }
        }
    }
}
