//! Rule catalog soundness, guard counterexamples and manifest handling.

mod common;

use std::io::Write as _;

use common::soundness::{assignment, counterexample_holds, rule_soundness, COUNTEREXAMPLES};
use egraph_bounds::{
    analyze, load_manifest, parse, parse_manifest, rule_set, DomainEnv, Error, Interval, Rule,
    RunConfig,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

const CASES: usize = 300;

#[test]
fn every_catalog_rule_is_sound_at_random_points() {
    let mut rng = StdRng::seed_from_u64(0xbeef);
    for rule in rule_set() {
        rule_soundness(&rule, &mut rng, CASES).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn every_guarded_rule_has_a_breaking_counterexample() {
    let rules = rule_set();
    for rule in rules.iter().filter(|r| r.is_guarded()) {
        let (_, pairs) = COUNTEREXAMPLES
            .iter()
            .find(|(n, _)| *n == rule.name)
            .unwrap_or_else(|| panic!("no counterexample for {}", rule.name));
        counterexample_holds(rule, &assignment(pairs)).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn unsound_rule_fails_the_random_check() {
    let bad = Rule::new("bad", "(+ ?a ?b)", "(* ?a ?b)").unwrap();
    let mut rng = StdRng::seed_from_u64(1);
    assert!(rule_soundness(&bad, &mut rng, CASES).is_err());
}

#[test]
fn unsound_rule_is_caught_as_empty_meet() {
    let rules = parse_manifest("bad: (+ ?a ?b) => 100\n").unwrap();
    let env = DomainEnv::new().with("x", Interval::new(0.0, 1.0).unwrap());
    let cfg = RunConfig::default().with_rules(rules);
    let err = analyze(&parse("(+ x 1)").unwrap(), &env, &cfg).unwrap_err();
    assert!(err.is_soundness_violation(), "{err}");
    assert!(err.to_string().contains("bad"), "{err}");
}

#[test]
fn manifest_accepts_comments_blank_lines_and_guards() {
    let text = "\
# leading comment

flip: (/ ?a ?b) => (* ?a (recip ?b)) if (nonzero ?b)   # trailing
root: (sq (sqrt ?a)) => ?a if (nonneg ?a)
    ";
    let rules = parse_manifest(text).unwrap();
    assert_eq!(rules.len(), 2);
    assert_eq!(rules[0].name, "flip");
    assert_eq!(rules[0].guard.len(), 1);
    assert_eq!(rules[1].to_string(), "root: (sq (sqrt ?a)) => ?a if (nonneg ?a)");
}

#[test]
fn manifest_errors_name_the_line() {
    let cases = [
        ("ok: (+ ?a 0) => ?a\nbroken (+ ?a 0) => ?a\n", 2),
        ("free: (+ ?a 0) => ?b\n", 1),
        ("\n\nleaf: ?a => ?a\n", 3),
        ("g: (/ ?a ?a) => 1 if (positive ?a)\n", 1),
        ("d: (+ ?a 0) => ?a\nd: (* ?a 1) => ?a\n", 2),
        ("u: (frob ?a) => ?a\n", 1),
    ];
    for (text, line) in cases {
        match parse_manifest(text) {
            Err(Error::Manifest { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: expected a manifest error, got {other:?}"),
        }
    }
}

#[test]
fn manifest_loads_from_a_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "sub-cancel: (- ?a ?a) => 0").unwrap();
    let rules = load_manifest(f.path()).unwrap();
    assert_eq!(rules.len(), 1);
    assert!(load_manifest(std::path::Path::new("/nonexistent/rules")).is_err());
}

#[test]
fn catalog_round_trips_through_display() {
    let rules = rule_set();
    let text: String = rules.iter().map(|r| format!("{r}\n")).collect();
    assert_eq!(parse_manifest(&text).unwrap(), rules);
}
