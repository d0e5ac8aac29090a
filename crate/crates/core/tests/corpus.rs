mod common;

use cbc_core::driver::analyze_source;
use cbc_core::lexer::tokenize;
use cbc_core::parser::parse;
use cbc_core::pretty::print_unit;
use common::checks::*;

fn reparse(src: &str) -> String {
    print_unit(&parse(&tokenize(src).unwrap()).unwrap())
}

#[test]
fn reference_programs_and_negative_goldens() {
    let detail = corpus_clean().unwrap();
    assert!(detail.contains("fixtures match"));
}

#[test]
fn every_positive_file_checks() {
    for f in positive_files() {
        if let Err(ds) = analyze_source(&read(&f)) {
            panic!("{f}: {}", ds[0].render(&f));
        }
    }
}

#[test]
fn printing_is_a_fixed_point() {
    for f in positive_files() {
        let once = reparse(&read(&f));
        assert_eq!(reparse(&once), once, "{f}");
        assert!(analyze_source(&once).is_ok(), "{f} no longer checks after printing");
    }
}

#[test]
fn diagnostic_positions_point_into_the_source() {
    for (name, golden) in negative_fixtures() {
        let src = std::fs::read_to_string(corpus_dir().join("neg").join(&name)).unwrap();
        for l in golden.lines() {
            let pos = l.split_whitespace().next().unwrap();
            let (line, col) = pos.split_once(':').unwrap();
            let (line, col): (usize, usize) = (line.parse().unwrap(), col.parse().unwrap());
            let text = src.lines().nth(line - 1).unwrap_or_else(|| panic!("{name}: line {line} out of range"));
            assert!(col >= 1 && col <= text.len(), "{name}: column {col} outside `{text}`");
            assert!(!text[col - 1..].starts_with(char::is_whitespace), "{name}: {pos} points at blank");
        }
    }
}

#[test]
fn diagnostics_are_stable_across_runs() {
    for (name, _) in negative_fixtures() {
        let src = std::fs::read_to_string(corpus_dir().join("neg").join(&name)).unwrap();
        assert_eq!(diag_lines(&src), diag_lines(&src), "{name}");
    }
}

#[test]
fn conversion_output_is_well_formed() {
    cps_structural().unwrap();
}
