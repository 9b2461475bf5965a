use npls::parser::{parse_program, pretty_print, Consequence, Deadline, Outcome, ParseErrorKind};
use npls_testkit::gen::AstGen;

const STORY: &str = include_str!("../../../demo/story.npl");
const UNIT: &str = include_str!("../../myjoghurt/src/de_jure/unit.npl");
const PLANT: &str = include_str!("../../myjoghurt/src/de_jure/plant.npl");

fn round_trip(src: &str) {
    let ast = parse_program(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let printed = pretty_print(&ast);
    let again = parse_program(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert_eq!(again, ast, "\n{printed}");
    assert_eq!(pretty_print(&again), printed);
}

#[test]
fn story_program_shape() {
    let ast = parse_program(STORY).unwrap();
    assert_eq!(ast.name, "story");
    assert_eq!(ast.norms().count(), 2);
    assert_eq!(ast.sanction_rules().count(), 2);
    let n1 = ast.norms().next().unwrap();
    let Consequence::Deontic(d) = &n1.consequence else { panic!("n1 is an obligation") };
    let Deadline::Time(ts) = d.deadline else { panic!("timed deadline") };
    assert_eq!(ts.duration_ms(), 3000);
    assert_eq!(n1.triggers.len(), 1);
    assert_eq!(n1.triggers[0].outcome, Outcome::Unfulfilled);
    assert_eq!(n1.triggers[0].calls[0].to_string(), "sr1(alice, X)");
}

#[test]
fn fixed_programs_round_trip() {
    for src in [STORY, UNIT, PLANT, "np empty {}"] {
        round_trip(src);
    }
}

#[test]
fn generated_programs_round_trip() {
    let mut items = 0;
    for seed in 0..300 {
        let ast = AstGen::new(seed).program();
        items += ast.items.len();
        let printed = pretty_print(&ast);
        let parsed = parse_program(&printed).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{printed}"));
        assert_eq!(parsed, ast, "seed {seed}\n{printed}");
    }
    assert!(items > 600);
}

/// Byte offsets of `src` outside strings, backquotes and comments.
fn code_offsets(src: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut quote, mut comment) = (None, false);
    let bytes = src.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if comment {
            comment = b != b'\n';
            continue;
        }
        if let Some(q) = quote {
            if b == q && bytes[i - 1] != b'\\' {
                quote = None;
            }
            continue;
        }
        match b {
            b'"' | b'`' => quote = Some(b),
            b'/' if bytes.get(i + 1) == Some(&b'/') => comment = true,
            _ => out.push(i),
        }
    }
    out
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

#[test]
fn stray_character_is_reported_where_it_was_inserted() {
    for src in [STORY, UNIT] {
        for at in code_offsets(src) {
            let mutated = format!("{}${}", &src[..at], &src[at..]);
            let err = parse_program(&mutated).expect_err("`$` is not a token");
            assert_eq!(err.offset, at, "{mutated}");
            assert_eq!((err.line, err.column), line_col(&mutated, at));
            assert_eq!(err.token, "$");
        }
    }
}

#[test]
fn missing_terminator_is_reported_at_the_next_token() {
    let dots: Vec<usize> = code_offsets(STORY).into_iter().filter(|&i| STORY.as_bytes()[i] == b'.').collect();
    assert!(dots.len() >= 2);
    // the two norms need their `.`; the sanction rules' `.` is optional
    for &at in &dots[..2] {
        let mutated = format!("{} {}", &STORY[..at], &STORY[at + 1..]);
        let err = parse_program(&mutated).expect_err("norm without `.`");
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert!(err.offset > at, "{err}");
        let next = mutated[at + 1..].find(|c: char| !c.is_whitespace()).unwrap() + at + 1;
        assert_eq!(err.offset, next, "{err}");
        assert!(mutated[err.offset..].starts_with(&err.token));
    }
}

/// Small derivations of the published grammar, which has no parentheses
/// in formulas, space separated trigger calls and no `.` after sanction
/// rules.
fn table_corpus() -> Vec<String> {
    let formulas = ["p", "p(X)", "not p", "not not q(a, 1)", "p & q", "p | q(X)", "p & not q", "p(X) | q & r", "true"];
    let agents = ["X", "alice"];
    let deadlines = ["`3 seconds`", "`1 minute`", "`2.5 hours`", "`1 day`", "`500 milliseconds`", "q(X)"];
    let triggers = ["", " if unfulfilled: sr1", " if fulfilled: sr1(X) sr2", " if inactive:", " if unfulfilled: sr1(a) if fulfilled: sr2"];
    let mut items = Vec::new();
    for (i, f) in formulas.iter().enumerate() {
        items.push(format!("r{i}."));
        items.push(format!("r{i}(a, X) :- {f}."));
        items.push(format!("norm f{i} : {f} -> fail(bad(X))."));
        items.push(format!("sanction-rule s{i}(A) : {f} -> sanction(A, fine(10))"));
        items.push(format!("sanction-rule t{i} : {f} -> sanction(bob, warn)"));
        for (j, kind) in ["obligation", "permission", "prohibition"].iter().enumerate() {
            for (k, d) in deadlines.iter().enumerate() {
                let a = agents[(i + k) % 2];
                let t = triggers[(i + j + k) % triggers.len()];
                items.push(format!("norm n{i}_{j}_{k} : {f} -> {kind}({a}, {f}, {}, {d}){t}.", formulas[(k + 1) % 9]));
            }
        }
    }
    let mut corpus: Vec<String> = items.iter().map(|i| format!("np t {{ {i} }}")).collect();
    for w in items.chunks(3) {
        corpus.push(format!("np many {{\n{}\n}}", w.join("\n")));
    }
    corpus.push("np empty { }".into());
    corpus
}

#[test]
fn published_grammar_derivations_are_accepted() {
    let corpus = table_corpus();
    assert!(corpus.len() > 200);
    for src in &corpus {
        round_trip(src);
    }
}

#[test]
fn duplicate_ids_are_not_syntax_errors() {
    let err = parse_program("np d { norm a: p -> fail(x). norm a: q -> fail(y). }").unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::DuplicateId);
}
