//! Case files, run reports and schedule exports.
//!
//! A run directory holds `report.json` (deterministic for identical runs),
//! `schedule.csv` and `timings.json` (wall-clock, varies between runs).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CaseError;
use crate::model::{validate_case, BranchId, MucSolution, SystemCase};
use crate::orchestrator::{OutcomeSummary, RunStatus, ScheduleResult, SolveOptions};

pub const REPORT_FILE: &str = "report.json";
pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const TIMINGS_FILE: &str = "timings.json";

fn io_error(path: &Path, source: std::io::Error) -> CaseError {
    CaseError::Io { path: path.to_path_buf(), source }
}

fn classify(path: &Path, err: serde_json::Error) -> CaseError {
    let path = path.to_path_buf();
    let (line, column, message) = (err.line(), err.column(), err.to_string());
    match err.classify() {
        serde_json::error::Category::Data => CaseError::Schema { path, line, column, message },
        _ => CaseError::Json { path, line, column, message },
    }
}

/// Parses and validates a case held in memory. `origin` only labels errors.
pub fn parse_case_str(text: &str, origin: &Path) -> Result<SystemCase, CaseError> {
    let case: SystemCase = serde_json::from_str(text).map_err(|e| classify(origin, e))?;
    let report = validate_case(&case);
    if !report.is_valid() {
        return Err(CaseError::Validation { path: origin.to_path_buf(), report });
    }
    Ok(case)
}

pub fn parse_case(path: impl AsRef<Path>) -> Result<SystemCase, CaseError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_case_str(&text, path)
}

pub fn case_to_string(case: &SystemCase) -> String {
    let mut s = serde_json::to_string_pretty(case).expect("case serializes");
    s.push('\n');
    s
}

pub fn write_case(case: &SystemCase, path: impl AsRef<Path>) -> Result<(), CaseError> {
    let path = path.as_ref();
    fs::write(path, case_to_string(case)).map_err(|e| io_error(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub contingency: BranchId,
    pub period: usize,
    pub opened: BranchId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub contingency: BranchId,
    pub period: usize,
}

/// Settings that shaped a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub max_iterations: usize,
    pub slack_tolerance: f64,
    pub milp_gap: f64,
    pub cbce_size: usize,
    pub z_max: usize,
    pub angle_span: f64,
    pub enumerate_kr: bool,
}

impl From<&SolveOptions> for ReportOptions {
    fn from(o: &SolveOptions) -> Self {
        Self {
            max_iterations: o.max_iterations,
            slack_tolerance: o.slack_tolerance,
            milp_gap: o.milp_gap,
            cbce_size: o.cbce_size,
            z_max: o.z_max,
            angle_span: o.angle_span,
            enumerate_kr: o.enumerate_kr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub status: RunStatus,
    pub converged: bool,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub cuts_per_iteration: Vec<usize>,
    pub master_objectives: Vec<f64>,
    pub pcfc_solves: usize,
    pub nr_pcfc_solves: usize,
    pub total_cuts: usize,
    /// Examinations of the last iteration.
    pub outcomes: Vec<OutcomeSummary>,
    pub switches: Vec<SwitchRecord>,
    pub unresolved: Vec<PairRecord>,
    pub options: ReportOptions,
    pub schedule: Option<MucSolution>,
}

impl RunReport {
    pub fn new(result: &ScheduleResult, options: &SolveOptions) -> Self {
        Self {
            method: result.method.name().to_string(),
            status: result.status,
            converged: result.converged(),
            objective: result.objective(),
            iterations: result.iterations,
            cuts_per_iteration: result.log.iter().map(|l| l.cuts_added).collect(),
            master_objectives: result.log.iter().map(|l| l.muc_objective).collect(),
            pcfc_solves: result.pcfc_solves(),
            nr_pcfc_solves: result.nr_pcfc_solves(),
            total_cuts: result.cuts.len(),
            outcomes: result.log.last().map(|l| l.outcomes.clone()).unwrap_or_default(),
            switches: result
                .switch_actions()
                .into_iter()
                .map(|(contingency, period, opened)| SwitchRecord { contingency, period, opened })
                .collect(),
            unresolved: result
                .unresolved
                .iter()
                .map(|&(contingency, period)| PairRecord { contingency, period })
                .collect(),
            options: options.into(),
            schedule: result.schedule.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingsReport {
    pub master: f64,
    pub screener: f64,
    pub pcfc: f64,
    pub nr_pcfc: f64,
    pub total: f64,
}

impl From<&ScheduleResult> for TimingsReport {
    fn from(r: &ScheduleResult) -> Self {
        let t = &r.timings;
        Self {
            master: t.master.as_secs_f64(),
            screener: t.screener.as_secs_f64(),
            pcfc: t.pcfc.as_secs_f64(),
            nr_pcfc: t.nr_pcfc.as_secs_f64(),
            total: t.total.as_secs_f64(),
        }
    }
}

/// Commitment and dispatch per generator and period, `u/p` in each cell.
pub fn schedule_csv(case: &SystemCase, schedule: Option<&MucSolution>) -> String {
    let mut out = String::from("generator");
    for t in 1..=case.horizon {
        write!(out, ",t{t}").unwrap();
    }
    out.push('\n');
    let Some(s) = schedule else {
        return out;
    };
    for (g, gen) in case.generators.iter().enumerate() {
        write!(out, "{}", gen.id).unwrap();
        for t in 0..case.horizon {
            let p = if s.p[g][t].abs() < 5e-7 { 0.0 } else { s.p[g][t] };
            write!(out, ",{}/{:.6}", u8::from(s.u[g][t]), p).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WrittenReport {
    pub report: PathBuf,
    pub schedule: PathBuf,
    pub timings: PathBuf,
}

pub fn write_report(
    report: &RunReport,
    timings: &TimingsReport,
    case: &SystemCase,
    dir: impl AsRef<Path>,
) -> Result<WrittenReport, CaseError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let written = WrittenReport {
        report: dir.join(REPORT_FILE),
        schedule: dir.join(SCHEDULE_FILE),
        timings: dir.join(TIMINGS_FILE),
    };
    fs::write(&written.report, report.to_json()).map_err(|e| io_error(&written.report, e))?;
    fs::write(&written.schedule, schedule_csv(case, report.schedule.as_ref()))
        .map_err(|e| io_error(&written.schedule, e))?;
    let mut t = serde_json::to_string_pretty(timings).expect("timings serialize");
    t.push('\n');
    fs::write(&written.timings, t).map_err(|e| io_error(&written.timings, e))?;
    Ok(written)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<RunReport, CaseError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| classify(path, e))
}
