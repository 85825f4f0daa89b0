use std::fs;
use std::path::Path;

use scuc_core::case_io::{
    case_to_string, parse_case, parse_case_str, read_report, schedule_csv, write_case, write_report, RunReport,
    SwitchRecord, TimingsReport,
};
use scuc_core::{fixtures, solve, BranchId, BusId, CaseError, GenId, Method, SolveOptions, Violation};

fn origin() -> &'static Path {
    Path::new("case.json")
}

#[test]
fn malformed_json_is_a_syntax_error() {
    let err = parse_case_str("{\"base_mva\": 100,", origin()).unwrap_err();
    assert!(matches!(err, CaseError::Json { .. }), "{err}");
    assert!(err.to_string().starts_with("case.json:1:"));
}

#[test]
fn unknown_generator_bus_is_a_validation_error() {
    let mut case = fixtures::tri3();
    case.generators[1].bus = BusId(99);
    let err = parse_case_str(&case_to_string(&case), origin()).unwrap_err();
    let CaseError::Validation { report, .. } = &err else { panic!("{err}") };
    assert_eq!(report.violations, vec![Violation::UnknownGeneratorBus { generator: GenId(2), bus: BusId(99) }]);
    let text = err.to_string();
    assert!(text.contains("generator 2") && text.contains("99"), "{text}");
}

#[test]
fn short_demand_names_bus_and_length() {
    let mut case = fixtures::tri3_with_demand(&[100.0, 120.0]);
    case.buses[2].demand.pop();
    let err = parse_case_str(&case_to_string(&case), origin()).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("bus 3") && text.contains("expected 2"), "{text}");
}

#[test]
fn unknown_field_is_a_schema_error() {
    let text = case_to_string(&fixtures::tri3()).replacen("\"base_mva\"", "\"colour\": 1, \"base_mva\"", 1);
    let err = parse_case_str(&text, origin()).unwrap_err();
    assert!(matches!(err, CaseError::Schema { .. }), "{err}");
    let missing = case_to_string(&fixtures::tri3()).replacen("\"horizon\": 1,", "", 1);
    assert!(matches!(parse_case_str(&missing, origin()), Err(CaseError::Schema { .. })));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(parse_case(dir.path().join("none.json")), Err(CaseError::Io { .. })));
}

#[test]
fn cases_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for (i, case) in [fixtures::tri3(), fixtures::fig1x(fixtures::FIG1X_L1), fixtures::random_meshed(11)]
        .into_iter()
        .enumerate()
    {
        let path = dir.path().join(format!("c{i}.json"));
        write_case(&case, &path).unwrap();
        assert_eq!(parse_case(&path).unwrap(), case);
    }
}

#[test]
fn report_and_schedule_are_written() {
    let case = fixtures::tri3_tight();
    let opts = SolveOptions::with_method(Method::AdScuc);
    let result = solve(&case, &opts).unwrap();
    let report = RunReport::new(&result, &opts);
    let dir = tempfile::tempdir().unwrap();
    let written = write_report(&report, &TimingsReport::from(&result), &case, dir.path()).unwrap();
    assert_eq!(read_report(&written.report).unwrap(), report);
    let csv = fs::read_to_string(&written.schedule).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, vec!["generator,t1", "1,1/190.000000", "2,1/10.000000"]);
    let timings: serde_json::Value = serde_json::from_str(&fs::read_to_string(&written.timings).unwrap()).unwrap();
    assert!(timings["total"].as_f64().unwrap() >= 0.0);
    assert_eq!(report.cuts_per_iteration, vec![1, 0]);
    assert_eq!(report.total_cuts, 1);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let case = fixtures::random_meshed(4);
    let opts = SolveOptions::with_method(Method::TdScucCnr);
    let a = RunReport::new(&solve(&case, &opts).unwrap(), &opts).to_json();
    let b = RunReport::new(&solve(&case, &opts).unwrap(), &opts).to_json();
    assert_eq!(a, b);
}

#[test]
fn switching_report_lists_the_action() {
    let case = fixtures::fig1x(fixtures::FIG1X_L1);
    let opts = SolveOptions::with_method(Method::AdScucCnr);
    let report = RunReport::new(&solve(&case, &opts).unwrap(), &opts);
    assert_eq!(report.switches, vec![SwitchRecord { contingency: BranchId(3), period: 0, opened: BranchId(2) }]);
    assert!(report.converged);
}

#[test]
fn infeasible_runs_have_a_header_only_schedule() {
    let case = fixtures::fig1x(fixtures::FIG1X_L1);
    let opts = SolveOptions::with_method(Method::TdScuc);
    let report = RunReport::new(&solve(&case, &opts).unwrap(), &opts);
    assert!(!report.converged);
    assert_eq!(schedule_csv(&case, report.schedule.as_ref()), "generator,t1\n");
}
