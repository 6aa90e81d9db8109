//! Fixture-corpus checks for the statement kit.

use patchloom::statement::{abstract_arguments, reinsert_arguments, tokenize, validate_statement};

fn fixture() -> Vec<(bool, String)> {
    include_str!("../fixtures/statements.labels.tsv")
        .lines()
        .map(|l| {
            let (label, stmt) = l.split_once('\t').expect("label<TAB>statement");
            (label == "1", stmt.to_string())
        })
        .collect()
}

#[test]
fn validation_matches_reference_labels() {
    let cases = fixture();
    assert_eq!(cases.len(), 200);
    let mismatches: Vec<_> = cases
        .iter()
        .filter(|(expected, line)| {
            let got = tokenize(line).map(|t| validate_statement(&t)).unwrap_or(false);
            got != *expected
        })
        .collect();
    assert!(mismatches.is_empty(), "disagreements with reference labels: {mismatches:#?}");
}

#[test]
fn abstraction_round_trips_on_fixture() {
    for (_, line) in fixture() {
        let Ok(stmt) = tokenize(&line) else { continue };
        let Ok((abs, table)) = abstract_arguments(&stmt) else { continue };
        let back = reinsert_arguments(&abs, &table);
        assert_eq!(back.statement.tokens, stmt.tokens, "round trip failed for {line}");
        assert_eq!(back.emptied, 0);
    }
}
