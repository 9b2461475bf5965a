//! Line-oriented interactive session over one engine.

use std::io::{self, BufRead, Write};

use npls::engine::{Engine, InstanceFilter, InstanceState, NormEvent};
use npls::parser::{parse_formula, parse_term};

use crate::script::parse_duration;

const HELP: &str = "\
commands:
  assert <term>            add a fact and step
  retract <term>           remove a fact and step
  tick <n> <unit>          advance the clock, e.g. tick 3 seconds
  step                     run the step loop at the current time
  norms                    list loaded norms
  obligations [k=v ...]    list instances; filters state=, norm=, bearer=
  sanctions                list sanction facts
  facts <query>            solve a formula against the fact base
  quit";

fn print_events(out: &mut impl Write, events: &[NormEvent]) -> io::Result<()> {
    for e in events {
        writeln!(out, "[{}] {}", e.time, e.as_term())?;
    }
    Ok(())
}

fn filter(args: &str) -> Result<InstanceFilter, String> {
    let mut f = InstanceFilter::default();
    for kv in args.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("filter '{kv}' is not key=value"))?;
        f = match k {
            "state" => f.state(InstanceState::from_name(v).ok_or_else(|| format!("unknown state '{v}'"))?),
            "norm" => f.norm(v),
            "bearer" => f.bearer(v),
            _ => return Err(format!("unknown filter key '{k}'")),
        };
    }
    Ok(f)
}

/// Runs one command; `Ok(false)` ends the session.
fn command(engine: &mut Engine, line: &str, out: &mut impl Write) -> io::Result<bool> {
    let line = line.trim();
    let line = line.strip_suffix('.').unwrap_or(line).trim_end();
    let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    let stepped = match word {
        "" => return Ok(true),
        "quit" | "exit" => return Ok(false),
        "help" => {
            writeln!(out, "{HELP}")?;
            return Ok(true);
        }
        "assert" | "retract" => match parse_term(rest) {
            Ok(t) if word == "assert" => engine.assert(t),
            Ok(t) => engine.retract(&t),
            Err(e) => {
                writeln!(out, "error: {}", e.message)?;
                return Ok(true);
            }
        },
        "tick" => match parse_duration(rest) {
            Ok(ts) => engine.tick(engine.now().saturating_add(ts.duration_ms())),
            Err(e) => {
                writeln!(out, "error: {e}")?;
                return Ok(true);
            }
        },
        "step" => engine.step(),
        "norms" => {
            for n in engine.norms() {
                writeln!(out, "{n}")?;
            }
            return Ok(true);
        }
        "obligations" => {
            match filter(rest) {
                Ok(f) => {
                    for i in engine.query_instances(&f) {
                        writeln!(out, "#{} {} {} {}", i.id, i.norm, i.state, i)?;
                    }
                }
                Err(e) => writeln!(out, "error: {e}")?,
            }
            return Ok(true);
        }
        "sanctions" => {
            for s in engine.sanction_log() {
                writeln!(out, "[{}] {} by {} on {}#{}", s.time, s.fact(), s.rule, s.norm, s.instance)?;
            }
            return Ok(true);
        }
        "facts" => {
            match parse_formula(rest).map_err(|e| e.message).and_then(|f| engine.solve(&f).map_err(|e| e.to_string())) {
                Ok(answers) if answers.is_empty() => writeln!(out, "no")?,
                Ok(answers) => {
                    for a in answers {
                        let a = a.without_anonymous();
                        if a.is_empty() {
                            writeln!(out, "yes")?;
                        } else {
                            let parts: Vec<String> = a.iter().map(|(v, t)| format!("{v} = {t}")).collect();
                            writeln!(out, "{}", parts.join(", "))?;
                        }
                    }
                }
                Err(e) => writeln!(out, "error: {e}")?,
            }
            return Ok(true);
        }
        other => {
            writeln!(out, "error: unknown command '{other}' (try help)")?;
            return Ok(true);
        }
    };
    match stepped {
        Ok(events) => print_events(out, &events)?,
        Err(e) => writeln!(out, "error: {e}")?,
    }
    Ok(true)
}

/// Reads commands until `quit` or end of input. With `prompt`, writes `> `
/// after each command.
pub fn repl(engine: &mut Engine, input: impl BufRead, out: &mut impl Write, prompt: bool) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if !command(engine, &line, out)? {
            return Ok(());
        }
        if prompt {
            write!(out, "> ")?;
        }
        out.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const STORY: &str = include_str!("../../../demo/story.npl");

    fn session(input: &str) -> String {
        let mut e = Engine::from_source(STORY).unwrap();
        let mut out = Vec::new();
        repl(&mut e, input.as_bytes(), &mut out, false).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn active_obligation_after_assert() {
        let out = session("assert vl(20).\nobligations state=active\n");
        assert_eq!(
            out,
            "[0] created(n1, alice, b(0))\n#1 n1 active obligation(alice, true, b(0), 3000)\n"
        );
    }

    #[test]
    fn no_sanctions_before_violation() {
        assert_eq!(session("assert vl(20)\nfacts sanction(A, S)\n").lines().last(), Some("no"));
    }

    #[test]
    fn tick_then_sanctions() {
        let out = session("assert vl(20)\ntick 3 seconds\nsanctions\nfacts sanction(alice, fine(X))\n");
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines.contains(&"[3000] sanction(alice, fine(20)) by sr1 on n1#1"), "{out}");
        assert_eq!(lines.last(), Some(&"X = 20"));
    }

    #[test]
    fn bad_commands_do_not_end_the_session() {
        let out = session("frob\nassert p(\nobligations colour=red\ntick 3 parsecs\nnorms\nquit\nassert vl(20)\n");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.iter().filter(|l| l.starts_with("error: ")).count(), 4, "{out}");
        assert!(lines[4].starts_with("norm n1: vl(X) & X > 5"));
        assert!(!out.contains("created"), "input after quit is ignored");
    }
}
