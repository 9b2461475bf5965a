//! Replay scripts: one directive per line.
//!
//! ```text
//! assert vl(20).
//! tick 3 seconds.
//! expect sanction(alice, fine(20)).
//! ```

use std::fmt;

use npls::engine::{Engine, EngineError, NormEvent};
use npls::logic::{Number, Term};
use npls::parser::{parse_term, TimeSpec, TimeUnit};

#[derive(Clone, Debug, PartialEq)]
pub enum Directive {
    Assert(Term),
    Retract(Term),
    Tick(TimeSpec),
    /// Variables in the pattern are wildcards.
    Expect(Term),
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Assert(t) => write!(f, "assert {t}."),
            Directive::Retract(t) => write!(f, "retract {t}."),
            Directive::Tick(ts) => write!(f, "tick {}.", ts.to_string().trim_matches('`')),
            Directive::Expect(t) => write!(f, "expect {t}."),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    /// 1-based.
    pub number: usize,
    pub directive: Directive,
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

pub fn parse_script(src: &str) -> Result<Vec<Line>, ScriptError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let number = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with("//") {
            continue;
        }
        let err = |message: String| ScriptError { line: number, message };
        let body = text.strip_suffix('.').ok_or_else(|| err("directive must end with '.'".into()))?;
        let (word, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        let term = |what: &str| {
            if rest.is_empty() {
                return Err(err(format!("{what} needs a term")));
            }
            parse_term(rest).map_err(|e| err(format!("{word}: {}", e.message)))
        };
        let directive = match word {
            "assert" => Directive::Assert(term("assert")?),
            "retract" => Directive::Retract(term("retract")?),
            "expect" => Directive::Expect(term("expect")?),
            "tick" => Directive::Tick(parse_duration(rest).map_err(err)?),
            other => return Err(err(format!("unknown directive '{other}'"))),
        };
        out.push(Line { number, directive });
    }
    Ok(out)
}

/// `3 seconds`, `500 ms`, `1.5 minutes`.
pub fn parse_duration(text: &str) -> Result<TimeSpec, String> {
    let mut words = text.split_whitespace();
    let (Some(amount), Some(unit), None) = (words.next(), words.next(), words.next()) else {
        return Err(format!("expected '<amount> <unit>', got '{text}'"));
    };
    let amount = match amount.parse::<i64>() {
        Ok(i) if i >= 0 => Number::Int(i),
        _ => match amount.parse::<f64>() {
            Ok(f) if f >= 0.0 && f.is_finite() => Number::float(f),
            _ => return Err(format!("'{amount}' is not a non-negative number")),
        },
    };
    let unit = match unit {
        "ms" => TimeUnit::Millisecond,
        u => TimeUnit::from_name(u).ok_or_else(|| format!("unknown time unit '{u}'"))?,
    };
    Ok(TimeSpec::new(amount, unit))
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("line {line}: {source}")]
    Engine { line: usize, source: EngineError },
    #[error("line {line}: unmet expectation {pattern}: {found}")]
    Unmet { line: usize, pattern: Term, found: String },
    #[error("trace: {0}")]
    Trace(#[from] std::io::Error),
}

/// Executes scripts against one engine.
pub struct Runner<'a> {
    engine: &'a mut Engine,
    events: Vec<NormEvent>,
    /// Events before this index have been consumed by `expect`.
    cursor: usize,
}

impl<'a> Runner<'a> {
    pub fn new(engine: &'a mut Engine) -> Self {
        Runner { engine, events: Vec::new(), cursor: 0 }
    }

    pub fn events(&self) -> &[NormEvent] {
        &self.events
    }

    /// `on_events` sees events as they are emitted; `before_tick` gets the
    /// logical milliseconds about to pass.
    pub fn run(
        &mut self,
        script: &[Line],
        mut on_events: impl FnMut(&[NormEvent]) -> std::io::Result<()>,
        mut before_tick: impl FnMut(u64),
    ) -> Result<(), RunError> {
        for line in script {
            let engine_err = |source| RunError::Engine { line: line.number, source };
            let fresh = match &line.directive {
                Directive::Assert(t) => self.engine.assert(t.clone()).map_err(engine_err)?,
                Directive::Retract(t) => self.engine.retract(t).map_err(engine_err)?,
                Directive::Tick(ts) => {
                    let ms = ts.duration_ms();
                    before_tick(ms);
                    let to = self.engine.now().saturating_add(ms);
                    self.engine.tick(to).map_err(engine_err)?
                }
                Directive::Expect(pattern) => {
                    self.expect(line.number, pattern)?;
                    continue;
                }
            };
            on_events(&fresh)?;
            self.events.extend(fresh);
        }
        Ok(())
    }

    /// Some event after the previous match must match; expectations form an
    /// ordered subsequence of the events, so unmentioned events are skipped.
    fn expect(&mut self, line: usize, pattern: &Term) -> Result<(), RunError> {
        let unmatched = &self.events[self.cursor..];
        match unmatched.iter().position(|e| e.matches(pattern).is_some()) {
            Some(i) => {
                self.cursor += i + 1;
                Ok(())
            }
            None => {
                let found = if unmatched.is_empty() {
                    "no event since the previous match".to_string()
                } else {
                    let terms: Vec<String> = unmatched.iter().map(|e| e.as_term().to_string()).collect();
                    format!("events since the previous match: {}", terms.join(", "))
                };
                Err(RunError::Unmet { line, pattern: pattern.clone(), found })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_directives_and_skips_comments() {
        let s = parse_script("// story\nassert vl(20).\n\ntick 3 seconds.\nexpect sanction(A, fine(20)).\nretract vl(20).\n").unwrap();
        let words: Vec<String> = s.iter().map(|l| format!("{} {}", l.number, l.directive)).collect();
        assert_eq!(
            words,
            ["2 assert vl(20).", "4 tick 3 seconds.", "5 expect sanction(A, fine(20)).", "6 retract vl(20)."]
        );
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("3 seconds").unwrap().duration_ms(), 3000);
        assert_eq!(parse_duration("1 second").unwrap().duration_ms(), 1000);
        assert_eq!(parse_duration("500 ms").unwrap().duration_ms(), 500);
        assert_eq!(parse_duration("1.5 minutes").unwrap().duration_ms(), 90_000);
        for bad in ["3", "three seconds", "-1 seconds", "2 fortnights", "1 s x"] {
            assert!(parse_duration(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_script("assert p.\nassert q\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_script("\n\nfrobnicate p.").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("frobnicate"));
        assert!(parse_script("assert p(.").is_err());
        assert!(parse_script("expect .").is_err());
    }

    #[test]
    fn expectations_consume_events_in_order() {
        let mut e = Engine::from_source("np t { norm n: p(X) -> obligation(a, true, q(X), `1 second`). }").unwrap();
        let script = parse_script("assert p(1).\nexpect created(n).\ntick 1 second.\nexpect unfulfilled(n, a).\n").unwrap();
        let mut r = Runner::new(&mut e);
        r.run(&script, |_| Ok(()), |_| {}).unwrap();
        assert_eq!(r.events().len(), 2);

        let mut e = Engine::from_source("np t { norm n: p(X) -> obligation(a, true, q(X), `1 second`). }").unwrap();
        let script = parse_script("assert p(1).\nexpect fulfilled(n).\n").unwrap();
        let err = Runner::new(&mut e).run(&script, |_| Ok(()), |_| {}).unwrap_err();
        assert!(matches!(err, RunError::Unmet { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("events since the previous match: created(n, a, q(1))"), "{err}");

        // a matched event is consumed, and earlier events cannot match later
        let mut e = Engine::from_source("np t { norm n: p(X) -> obligation(a, true, q(X), `1 second`). }").unwrap();
        let script = parse_script("assert p(1).\nassert p(2).\nexpect created(n, a, q(2)).\nexpect created(n, a, q(1)).\n").unwrap();
        let err = Runner::new(&mut e).run(&script, |_| Ok(()), |_| {}).unwrap_err();
        assert!(matches!(err, RunError::Unmet { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("no event since the previous match"), "{err}");
    }
}
