use patchloom::corpus::{prepare, Category, TestRecord, TrainMeta};
use patchloom::eval::{
    classify_output, compute_metrics, default_thresholds, evaluate, read_counts_csv, sweep_csv, sweep_thresholds, to_csv,
    validity_rate, BugfixFilter, Counts, EvalReport, Filter, Metrics, Outcome, ReportRow, CSV_HEADER,
};
use patchloom::generator::{select, Candidate, Decoded, NaReason};
use patchloom::statement::{tokenize, TokenizedStatement};
use proptest::prelude::*;

fn toks(s: &str) -> TokenizedStatement {
    tokenize(s).unwrap()
}

const TABLE5: &str = include_str!("../fixtures/table5.csv");
const TABLE8: &str = include_str!("../fixtures/table8.csv");

#[test]
fn classification_examples() {
    let reference = toks("x = bar . foo ( a , b ) ;");
    assert_eq!(classify_output(Some(&toks("x = bar . foo ( a , b ) ;")), &reference), Outcome::Correct);
    assert_eq!(classify_output(Some(&toks("x = bar . foo ( c ) ;")), &reference), Outcome::ArgIncorrect);
    assert_eq!(classify_output(Some(&toks("x = baz . foo ( a , b ) ;")), &reference), Outcome::Incorrect);
    assert_eq!(classify_output(None, &reference), Outcome::NA);
}

#[test]
fn jetty_row() {
    let c = Counts {
        correct: 101,
        arg_incorrect: 11,
        incorrect: 9,
        na: 28,
    };
    assert_eq!(c.queries(), 149);
    let m = Metrics::from_counts(&c);
    assert!((m.precision - 101.0 / 121.0).abs() < 1e-12);
    assert!((m.recall - 101.0 / 149.0).abs() < 1e-12);
    assert_eq!(m.cells(), ["0.83", "0.68", "0.75"]);
}

fn check_table(text: &str) -> usize {
    let rows = read_counts_csv(text).unwrap();
    for r in &rows {
        let m = Metrics::from_counts(&r.counts);
        let printed = r.printed.as_ref().unwrap();
        if printed[0] == "--" {
            assert!(m.undefined, "{} {}", r.project, r.system);
            continue;
        }
        assert!(!m.undefined);
        for (got, want) in [m.precision, m.recall, m.f1].iter().zip(printed) {
            let want: f64 = want.parse().unwrap();
            assert!((got - want).abs() <= 0.005, "{} {}: {got} vs {want}", r.project, r.system);
        }
    }
    rows.len()
}

#[test]
fn published_tables_are_reproduced() {
    assert_eq!(check_table(TABLE5), 10);
    assert_eq!(check_table(TABLE8), 10);
}

#[test]
fn wicket_baseline_is_undefined() {
    let rows = read_counts_csv(TABLE8).unwrap();
    let r = rows.iter().find(|r| r.project == "wicket" && r.system == "baseline").unwrap();
    assert_eq!(r.counts.correct, 0);
    let m = Metrics::from_counts(&r.counts);
    assert!(m.undefined);
    assert_eq!(m.cells(), ["--", "--", "--"]);
    assert!(Metrics::from_counts(&Counts::default()).undefined);
}

#[test]
fn counts_csv_errors() {
    assert!(read_counts_csv("").is_err());
    assert!(read_counts_csv("a,b\n").is_err());
    let e = read_counts_csv("project,system,correct,arg_incorrect,incorrect,na\nx,y,1,2,z,4\n").unwrap_err();
    assert!(e.contains("line 2"), "{e}");
}

#[test]
fn validity_rate_of_published_sample() {
    let v: Vec<bool> = (0..233).map(|i| i < 230).collect();
    let r = validity_rate(&v);
    assert!((r - 0.987).abs() < 0.0005, "{r}");
    assert_eq!(validity_rate(&[]), 0.0);
}

#[test]
fn compute_metrics_counts_outcomes() {
    let r = compute_metrics(&[Outcome::Correct, Outcome::NA, Outcome::Incorrect, Outcome::Correct]);
    assert_eq!(r.counts.correct, 2);
    assert_eq!(r.n_queries, 4);
    assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
    assert!((r.recall - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn f1_lies_between_precision_and_recall(c in 1usize..200, a in 0usize..50, i in 0usize..50, n in 0usize..200) {
        let m = Metrics::from_counts(&Counts { correct: c, arg_incorrect: a, incorrect: i, na: n });
        prop_assert!(m.precision >= m.recall - 1e-12);
        prop_assert!(m.f1 >= m.recall.min(m.precision) - 1e-12);
        prop_assert!(m.f1 <= m.recall.max(m.precision) + 1e-12);
        prop_assert!(!m.undefined);
    }
}

fn record(query: &str, reference: &str, category: Category, bugfix: bool) -> TestRecord {
    TestRecord {
        query: toks(query),
        reference: toks(reference),
        meta: TrainMeta {
            pair_id: 0,
            commit_pre_origin: "a".into(),
            commit_post: "b".into(),
            year_pre: 2015,
            year_post: 2015,
            bugfix,
        },
        category,
    }
}

fn decoded(query: &str, abs: &str, score: f64) -> Decoded {
    Decoded {
        query: query.to_string(),
        prepared: prepare(query).map_err(NaReason::from),
        candidates: vec![Candidate {
            abstracted: toks(abs),
            score,
            finished: true,
        }],
    }
}

fn sweep_fixture() -> (Vec<TestRecord>, Vec<Decoded>) {
    let records = vec![
        record("return this . a ;", "return a ;", Category::NU, true),
        record("return this . b ;", "return b ;", Category::NU, false),
        record("return this . c ;", "return c ;", Category::NU, false),
        record("x = foo ( y ) ;", "x = bar ( y ) ;", Category::NU, true),
        record("x = foo ( z ) ;", "x = foo ( z , 1 ) ;", Category::UR, false),
        record("x = y . size ( ) == 0 ;", "x = y . isEmpty ( ) ;", Category::NU, false),
    ];
    let decoded = vec![
        decoded("return this . a ;", "return a ;", -0.05),
        decoded("return this . b ;", "return b ;", -0.45),
        decoded("return this . c ;", "return d ;", -0.65),
        decoded("x = foo ( y ) ;", "x = bar ( arg ) ;", -0.95),
        decoded("x = foo ( z ) ;", "x = bar ( arg ) ;", -0.2),
        decoded("x = y . size ( ) == 0 ;", "x = y . isEmpty ( ) ;", -1.15),
    ];
    (records, decoded)
}

/// Independent count at one threshold: provided when the score clears it,
/// correct when the expected text is produced.
fn oracle_counts(records: &[TestRecord], decoded: &[Decoded], t: f64, filter: Filter) -> Counts {
    let mut c = Counts::default();
    for (r, d) in records.iter().zip(decoded) {
        if !filter.accepts(r) {
            continue;
        }
        let cand = &d.candidates[0];
        if cand.score < t {
            c.na += 1;
            continue;
        }
        let args = &d.prepared.as_ref().unwrap().args;
        let patch = patchloom::statement::reinsert_arguments(&cand.abstracted, args).statement;
        if patch.tokens == r.reference.tokens {
            c.correct += 1;
        } else {
            c.incorrect += 1;
        }
    }
    c
}

#[test]
fn sweep_matches_recomputation() {
    let (records, decoded) = sweep_fixture();
    let thresholds = default_thresholds();
    assert_eq!(thresholds.len(), 12);
    assert!((thresholds[0] + 1.2).abs() < 1e-12 && (thresholds[11] + 0.1).abs() < 1e-12);
    for filter in [
        Filter::default(),
        Filter {
            category: None,
            bugfix: BugfixFilter::All,
        },
        Filter {
            category: Some(Category::NU),
            bugfix: BugfixFilter::BugfixOnly,
        },
    ] {
        let points = sweep_thresholds(&records, &decoded, &thresholds, filter).unwrap();
        for (t, r) in &points {
            assert_eq!(r.counts, oracle_counts(&records, &decoded, *t, filter), "t={t} {}", filter.label());
        }
    }
}

#[test]
fn sweep_point_equals_standalone_evaluation() {
    let (records, decoded) = sweep_fixture();
    let points = sweep_thresholds(&records, &decoded, &default_thresholds(), Filter::default()).unwrap();
    let (t, at) = points.iter().find(|(t, _)| (*t + 0.7).abs() < 1e-9).unwrap();
    let gens: Vec<_> = decoded.iter().map(|d| select(d, -0.7)).collect();
    let standalone = evaluate(&records, &gens, Filter::default(), Some(*t));
    assert_eq!(at, &standalone);
    assert_eq!(standalone.counts.correct, 2);
    assert_eq!(standalone.counts.incorrect, 1);
    assert_eq!(standalone.counts.na, 2);
    assert!(sweep_thresholds(&records, &decoded, &[-0.5, -0.7], Filter::default()).is_err());
}

#[test]
fn filters_select_categories_and_fix_flags() {
    let (records, _) = sweep_fixture();
    let count = |f: Filter| records.iter().filter(|r| f.accepts(r)).count();
    assert_eq!(count(Filter::default()), 5);
    assert_eq!(
        count(Filter {
            category: None,
            bugfix: BugfixFilter::All
        }),
        6
    );
    assert_eq!(
        count(Filter {
            category: None,
            bugfix: BugfixFilter::NonBugfixOnly
        }),
        4
    );
    assert_eq!(Filter::default().label(), "NU/all");
    assert_eq!("bugfix".parse::<BugfixFilter>().unwrap(), BugfixFilter::BugfixOnly);
    assert!("sometimes".parse::<BugfixFilter>().is_err());
}

#[test]
fn report_files() {
    let report = EvalReport::from_counts(
        Counts {
            correct: 101,
            arg_incorrect: 11,
            incorrect: 9,
            na: 28,
        },
        Some(-0.7),
        Filter::default(),
    );
    let csv = to_csv(&[ReportRow {
        project: "jetty".into(),
        filter: "NU/all".into(),
        threshold: Some(-0.7),
        report: report.clone(),
    }]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.next(), Some("jetty,NU/all,-0.7,101,11,9,28,0.834711,0.677852,0.748148"));
    let json = serde_json::to_string(&report).unwrap();
    let back: EvalReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);

    let s = sweep_csv(&[(-0.7, report.clone())], &report);
    assert_eq!(s.lines().next(), Some("threshold,f1_model,f1_baseline"));
    assert_eq!(s.lines().nth(1), Some("-0.7,0.748148,0.748148"));
}
