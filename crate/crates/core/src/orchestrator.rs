//! Solution methods: the two extensive models and the four decomposition
//! loops, plus an independent N-1 audit of a finished schedule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ScucError, SubproblemError};
use crate::formulations::{
    build_extensive_scuc, build_extensive_scuc_cnr, build_muc, cut_from_outcome, CnrOptions, SwitchAction,
    SwitchedLineRating, DEFAULT_ANGLE_SPAN,
};
use crate::model::{BranchId, FeasibilityCut, MucSolution, OutcomeStatus, SubproblemOutcome, SystemCase};
use crate::network::{NetworkSensitivities, DEFAULT_CBCE_SIZE};
use crate::solver::{Engine, LpOptions, MicroLp, MilpOptions, SolveStatus};
use crate::subproblems::{run_csps, Checker, SwitchPool, DEFAULT_SLACK_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExtensiveScuc,
    ExtensiveScucCnr,
    TdScuc,
    AdScuc,
    TdScucCnr,
    AdScucCnr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ExtensiveScuc,
        Method::ExtensiveScucCnr,
        Method::TdScuc,
        Method::AdScuc,
        Method::TdScucCnr,
        Method::AdScucCnr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ExtensiveScuc => "extensive_scuc",
            Method::ExtensiveScucCnr => "extensive_scuc_cnr",
            Method::TdScuc => "td_scuc",
            Method::AdScuc => "ad_scuc",
            Method::TdScucCnr => "td_scuc_cnr",
            Method::AdScucCnr => "ad_scuc_cnr",
        }
    }

    pub fn is_extensive(self) -> bool {
        matches!(self, Method::ExtensiveScuc | Method::ExtensiveScucCnr)
    }

    pub fn uses_switching(self) -> bool {
        matches!(self, Method::ExtensiveScucCnr | Method::TdScucCnr | Method::AdScucCnr)
    }

    pub fn is_accelerated(self) -> bool {
        matches!(self, Method::AdScuc | Method::AdScucCnr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method `{s}`, expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub max_iterations: usize,
    pub slack_tolerance: f64,
    pub milp_gap: f64,
    pub cbce_size: usize,
    /// Switching budget of the extensive reconfigurable model.
    pub z_max: usize,
    pub workers: usize,
    pub angle_span: f64,
    /// Search every reconfigurable line instead of the ranked list.
    pub enumerate_kr: bool,
    pub switched_rating: SwitchedLineRating,
    /// Wall-clock limit per MILP solve.
    pub milp_time_limit: Option<Duration>,
    /// Also check screened-out pairs and record any that fail.
    pub audit_screening: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::AdScuc,
            max_iterations: 50,
            slack_tolerance: DEFAULT_SLACK_TOLERANCE,
            milp_gap: MilpOptions::default().gap,
            cbce_size: DEFAULT_CBCE_SIZE,
            z_max: 1,
            workers: 1,
            angle_span: DEFAULT_ANGLE_SPAN,
            enumerate_kr: false,
            switched_rating: SwitchedLineRating::default(),
            milp_time_limit: None,
            audit_screening: false,
        }
    }
}

impl SolveOptions {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ScucError> {
        let bad = |m: &str| Err(ScucError::Options(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.slack_tolerance >= 0.0 && self.slack_tolerance < 1.0) {
            return bad("slack tolerance must lie in [0, 1)");
        }
        if !(self.milp_gap >= 0.0 && self.milp_gap.is_finite()) {
            return bad("MILP gap must be finite and non-negative");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.angle_span > 0.0 && self.angle_span.is_finite()) {
            return bad("angle span must be positive");
        }
        Ok(())
    }

    fn pool(&self) -> SwitchPool {
        if self.enumerate_kr {
            SwitchPool::Enumerate
        } else {
            SwitchPool::Ranked
        }
    }

    fn milp(&self) -> MilpOptions {
        MilpOptions { gap: self.milp_gap, time_limit: self.milp_time_limit }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    /// The master (or extensive model) has no feasible point.
    Infeasible,
    IterationLimit,
    /// A solve hit its time limit without a proof.
    TimeLimit,
    /// A cut identical to an existing one was generated again.
    Stalled,
}

/// One `(contingency, period)` examination within an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub contingency: BranchId,
    pub period: usize,
    pub status: OutcomeStatus,
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch: Option<BranchId>,
}

impl From<&SubproblemOutcome> for OutcomeSummary {
    fn from(o: &SubproblemOutcome) -> Self {
        Self { contingency: o.contingency, period: o.period, status: o.status, slack: o.slack, switch: o.switch }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub muc_objective: f64,
    pub candidates: usize,
    pub critical: usize,
    pub pcfc_solves: usize,
    pub nr_pcfc_solves: usize,
    pub cuts_added: usize,
    pub outcomes: Vec<OutcomeSummary>,
    /// Screened-out pairs whose check nevertheless failed (audit mode).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub screening_misses: Vec<(BranchId, usize, f64)>,
    /// Master schedule examined in this iteration.
    #[serde(skip)]
    pub master: Option<MucSolution>,
    /// Slack of the check behind each cut added in this iteration, in order.
    #[serde(skip)]
    pub cut_slacks: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub master: Duration,
    pub screener: Duration,
    pub pcfc: Duration,
    pub nr_pcfc: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub method: Method,
    pub status: RunStatus,
    /// Final master (or extensive) schedule; `None` if none was found.
    pub schedule: Option<MucSolution>,
    pub iterations: usize,
    pub cuts: Vec<FeasibilityCut>,
    /// Corrective switches valid for the final schedule.
    pub switches: BTreeMap<(BranchId, usize), BranchId>,
    /// Pairs left without recourse at termination.
    pub unresolved: Vec<(BranchId, usize)>,
    pub log: Vec<IterationLog>,
    pub timings: PhaseTimings,
}

impl ScheduleResult {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn objective(&self) -> Option<f64> {
        self.schedule.as_ref().map(|s| s.objective)
    }

    pub fn pcfc_solves(&self) -> usize {
        self.log.iter().map(|l| l.pcfc_solves).sum()
    }

    pub fn nr_pcfc_solves(&self) -> usize {
        self.log.iter().map(|l| l.nr_pcfc_solves).sum()
    }

    pub fn switch_actions(&self) -> Vec<SwitchAction> {
        self.switches.iter().map(|(&(c, t), &j)| (c, t, j)).collect()
    }

    fn empty(method: Method, status: RunStatus) -> Self {
        Self {
            method,
            status,
            schedule: None,
            iterations: 0,
            cuts: Vec::new(),
            switches: BTreeMap::new(),
            unresolved: Vec::new(),
            log: Vec::new(),
            timings: PhaseTimings::default(),
        }
    }
}

/// Solves `case` with the method in `options` using the bundled engine.
pub fn solve(case: &SystemCase, options: &SolveOptions) -> Result<ScheduleResult, ScucError> {
    solve_with_engine(case, options, &MicroLp)
}

pub fn solve_with_engine(
    case: &SystemCase,
    options: &SolveOptions,
    engine: &dyn Engine,
) -> Result<ScheduleResult, ScucError> {
    options.validate()?;
    let report = crate::model::validate_case(case);
    if !report.is_valid() {
        return Err(crate::error::ModelError::Invalid(report).into());
    }
    let started = Instant::now();
    let sens = NetworkSensitivities::build(case, options.cbce_size)?;
    let mut result = if options.method.is_extensive() {
        solve_extensive(case, &sens, options, engine)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| ScucError::Options(format!("cannot start worker pool: {e}")))?;
        pool.install(|| decompose(case, &sens, options, engine))?
    };
    result.timings.total = started.elapsed();
    info!(
        "{}: {:?} after {} iteration(s), {} cut(s), {} switch(es)",
        options.method,
        result.status,
        result.iterations,
        result.cuts.len(),
        result.switches.len()
    );
    Ok(result)
}

fn solve_extensive(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    options: &SolveOptions,
    engine: &dyn Engine,
) -> Result<ScheduleResult, ScucError> {
    let started = Instant::now();
    let model = if options.method.uses_switching() {
        let cnr = CnrOptions { z_max: options.z_max, angle_span: options.angle_span, rating: options.switched_rating };
        build_extensive_scuc_cnr(case, sens, &cnr)?
    } else {
        build_extensive_scuc(case, sens)?
    };
    let solved = engine.solve_milp(&model.model, &options.milp())?;
    let mut result = ScheduleResult::empty(options.method, RunStatus::Converged);
    result.iterations = 1;
    result.timings.master = started.elapsed();
    match solved.status {
        SolveStatus::Optimal => {
            let schedule = model.extract(case, &solved);
            for (c, t, j) in model.switches(case, &solved) {
                result.switches.insert((c, t), j);
            }
            result.log.push(IterationLog {
                iteration: 1,
                muc_objective: schedule.objective,
                candidates: 0,
                critical: 0,
                pcfc_solves: 0,
                nr_pcfc_solves: 0,
                cuts_added: 0,
                outcomes: Vec::new(),
                screening_misses: Vec::new(),
                master: None,
                cut_slacks: Vec::new(),
            });
            result.schedule = Some(schedule);
        }
        SolveStatus::Infeasible => result.status = RunStatus::Infeasible,
        SolveStatus::Limit => {
            result.status = RunStatus::TimeLimit;
            if !solved.primal.is_empty() {
                result.schedule = Some(model.extract(case, &solved));
            }
        }
        SolveStatus::Unbounded => {
            return Err(crate::error::SolverError::Engine("extensive model reported unbounded".into()).into())
        }
    }
    Ok(result)
}

/// Per-pair work of one iteration.
struct PairWork {
    outcome: SubproblemOutcome,
    pcfc_time: Duration,
    nr_time: Duration,
    nr_solves: usize,
}

fn examine(
    checker: &Checker<'_>,
    muc: &MucSolution,
    c: usize,
    t: usize,
    method: Method,
    pool: SwitchPool,
) -> Result<PairWork, SubproblemError> {
    let id = checker.case.branches[c].id;
    let started = Instant::now();
    let mut outcome = checker.solve_pcfc(muc, id, t)?;
    let pcfc_time = started.elapsed();
    let mut work = PairWork { outcome: outcome.clone(), pcfc_time, nr_time: Duration::ZERO, nr_solves: 0 };
    if method.uses_switching() && outcome.status == OutcomeStatus::Infeasible {
        let started = Instant::now();
        let search = checker.find_corrective_switch(muc, id, t, pool)?;
        work.nr_time = started.elapsed();
        work.nr_solves = search.tried.len();
        if let Some((j, s2)) = search.found {
            outcome.switch = Some(j);
            outcome.status = OutcomeStatus::FeasibleViaSwitch;
            outcome.slack = s2;
            outcome.duals = None;
        }
        work.outcome = outcome;
    }
    Ok(work)
}

fn decompose(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    options: &SolveOptions,
    engine: &dyn Engine,
) -> Result<ScheduleResult, ScucError> {
    let method = options.method;
    let mut checker = Checker::new(case, sens, engine);
    checker.slack_tolerance = options.slack_tolerance;
    checker.lp = LpOptions::default();
    let all_pairs: Vec<(usize, usize)> =
        (0..case.horizon).flat_map(|t| sens.non_radial.iter().map(move |&c| (c, t))).collect();

    let mut result = ScheduleResult::empty(method, RunStatus::IterationLimit);
    for iteration in 1..=options.max_iterations {
        result.iterations = iteration;
        let started = Instant::now();
        let muc_model = build_muc(case, &result.cuts)?;
        let solved = engine.solve_milp(&muc_model.model, &options.milp())?;
        result.timings.master += started.elapsed();
        match solved.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => {
                result.status = RunStatus::Infeasible;
                result.schedule = None;
                result.switches.clear();
                return Ok(result);
            }
            SolveStatus::Limit => {
                result.status = RunStatus::TimeLimit;
                return Ok(result);
            }
            SolveStatus::Unbounded => {
                return Err(crate::error::SolverError::Engine("master reported unbounded".into()).into())
            }
        }
        let muc = muc_model.extract(case, &solved);
        debug!("iteration {iteration}: master objective {}", muc.objective);

        let started = Instant::now();
        let (candidates, screened_out) = if method.is_accelerated() {
            let screen = run_csps(case, sens, &muc, &all_pairs);
            let out: Vec<(usize, usize)> =
                all_pairs.iter().copied().filter(|p| !screen.is_critical(p.0, p.1)).collect();
            (screen.critical, out)
        } else {
            (all_pairs.clone(), Vec::new())
        };
        result.timings.screener += started.elapsed();

        let pool = options.pool();
        let work: Vec<PairWork> = candidates
            .par_iter()
            .map(|&(c, t)| examine(&checker, &muc, c, t, method, pool))
            .collect::<Result<_, _>>()?;

        let screening_misses: Vec<(BranchId, usize, f64)> = if options.audit_screening {
            let audited: Vec<SubproblemOutcome> = screened_out
                .par_iter()
                .map(|&(c, t)| checker.solve_pcfc(&muc, case.branches[c].id, t))
                .collect::<Result<_, _>>()?;
            audited
                .iter()
                .filter(|o| o.slack > options.slack_tolerance)
                .map(|o| (o.contingency, o.period, o.slack))
                .collect()
        } else {
            Vec::new()
        };

        let mut outcomes: Vec<OutcomeSummary> = screened_out
            .iter()
            .map(|&(c, t)| OutcomeSummary {
                contingency: case.branches[c].id,
                period: t,
                status: OutcomeStatus::ScreenedOut,
                slack: 0.0,
                switch: None,
            })
            .collect();
        let mut new_cuts = Vec::new();
        let mut cut_slacks = Vec::new();
        let mut switches = BTreeMap::new();
        let mut unresolved = Vec::new();
        let mut stalled = false;
        for w in &work {
            result.timings.pcfc += w.pcfc_time;
            result.timings.nr_pcfc += w.nr_time;
            let o = &w.outcome;
            outcomes.push(o.into());
            match o.status {
                OutcomeStatus::FeasibleViaSwitch => {
                    switches.insert((o.contingency, o.period), o.switch.expect("switch recorded"));
                }
                OutcomeStatus::Infeasible => {
                    unresolved.push((o.contingency, o.period));
                    let cut = cut_from_outcome(o, case, &muc)?;
                    if result.cuts.iter().chain(&new_cuts).any(|old| old.same_as(&cut, 1e-9)) {
                        stalled = true;
                    } else {
                        new_cuts.push(cut);
                        cut_slacks.push(o.slack);
                    }
                }
                _ => {}
            }
        }
        outcomes.sort_by_key(|o| (o.period, o.contingency));
        result.log.push(IterationLog {
            iteration,
            muc_objective: muc.objective,
            candidates: all_pairs.len(),
            critical: candidates.len(),
            pcfc_solves: work.len(),
            nr_pcfc_solves: work.iter().map(|w| w.nr_solves).sum(),
            cuts_added: new_cuts.len(),
            outcomes,
            screening_misses,
            master: Some(muc.clone()),
            cut_slacks,
        });
        result.schedule = Some(muc);
        result.switches = switches;
        result.unresolved = unresolved;
        if stalled {
            result.status = RunStatus::Stalled;
            result.cuts.extend(new_cuts);
            return Ok(result);
        }
        if new_cuts.is_empty() {
            result.status = RunStatus::Converged;
            return Ok(result);
        }
        result.cuts.extend(new_cuts);
    }
    Ok(result)
}

/// A pair for which no feasible recourse was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditFailure {
    pub contingency: BranchId,
    pub period: usize,
    /// Redispatch-only slack.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checked: usize,
    pub failures: Vec<AuditFailure>,
    /// Recorded switches that do not restore feasibility.
    pub bad_switches: Vec<SwitchAction>,
    /// Pairs that needed a switch and the first one found by enumeration.
    pub switches_found: Vec<SwitchAction>,
    /// Base-case defects of the schedule itself.
    pub base_case: Vec<String>,
}

impl VerificationReport {
    pub fn is_secure(&self) -> bool {
        self.failures.is_empty() && self.bad_switches.is_empty() && self.base_case.is_empty()
    }
}

/// Audits a schedule: checks every non-radial outage in every period from
/// scratch and, when `switching` is set, searches all reconfigurable lines
/// for pairs that fail redispatch alone.
pub fn verify_schedule(
    case: &SystemCase,
    schedule: &MucSolution,
    switching: bool,
    registry: &BTreeMap<(BranchId, usize), BranchId>,
    options: &SolveOptions,
) -> Result<VerificationReport, ScucError> {
    let sens = NetworkSensitivities::build(case, options.cbce_size)?;
    let mut checker = Checker::new(case, &sens, &MicroLp);
    checker.slack_tolerance = options.slack_tolerance;
    let mut report = VerificationReport { base_case: base_case_defects(case, schedule), ..Default::default() };
    if schedule.horizon() != case.horizon
        || schedule.p.len() != case.generators.len()
        || schedule.flow.len() != case.branches.len()
    {
        report.base_case.push("schedule dimensions do not match the case".into());
        return Ok(report);
    }
    let pairs: Vec<(usize, usize)> =
        (0..case.horizon).flat_map(|t| sens.non_radial.iter().map(move |&c| (c, t))).collect();
    report.checked = pairs.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| ScucError::Options(format!("cannot start worker pool: {e}")))?;
    let audited: Vec<(SubproblemOutcome, Option<BranchId>)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(c, t)| -> Result<_, SubproblemError> {
                let id = case.branches[c].id;
                let o = checker.solve_pcfc(schedule, id, t)?;
                if o.status != OutcomeStatus::Infeasible || !switching {
                    return Ok((o, None));
                }
                let found = checker.find_corrective_switch(schedule, id, t, SwitchPool::Enumerate)?.found;
                Ok((o, found.map(|(j, _)| j)))
            })
            .collect::<Result<_, _>>()
    })?;
    for (o, found) in audited {
        if o.status != OutcomeStatus::Infeasible {
            continue;
        }
        match found {
            Some(j) => report.switches_found.push((o.contingency, o.period, j)),
            None => report.failures.push(AuditFailure { contingency: o.contingency, period: o.period, slack: o.slack }),
        }
    }
    for (&(c, t), &j) in registry {
        let ok = t < case.horizon && checker.solve_nr_pcfc(schedule, c, t, j)?.switch.is_some();
        if !ok {
            report.bad_switches.push((c, t, j));
        }
    }
    Ok(report)
}

/// Audits the final schedule of a run. A run without a schedule yields an
/// empty report with nothing checked.
pub fn verify_solution(
    case: &SystemCase,
    result: &ScheduleResult,
    options: &SolveOptions,
) -> Result<VerificationReport, ScucError> {
    match &result.schedule {
        Some(s) => verify_schedule(case, s, result.method.uses_switching(), &result.switches, options),
        None => Ok(VerificationReport::default()),
    }
}

const BASE_TOLERANCE: f64 = 1e-6;

fn base_case_defects(case: &SystemCase, s: &MucSolution) -> Vec<String> {
    let mut out = Vec::new();
    let Ok(topo) = case.topology() else {
        out.push("case topology is invalid".into());
        return out;
    };
    if s.p.len() != case.generators.len() || s.horizon() != case.horizon || s.flow.len() != case.branches.len() {
        return out;
    }
    for (g, gen) in case.generators.iter().enumerate() {
        for t in 0..case.horizon {
            let on = if s.u[g][t] { 1.0 } else { 0.0 };
            let p = s.p[g][t];
            if p < gen.p_min * on - BASE_TOLERANCE || p + s.r[g][t] > gen.p_max * on + BASE_TOLERANCE {
                out.push(format!("generator {} period {t}: output {p} outside its limits", gen.id));
            }
        }
    }
    for (k, br) in case.branches.iter().enumerate() {
        for t in 0..case.horizon {
            let (f, to) = topo.ends[k];
            let implied = case.base_mva * br.susceptance * (s.theta[f][t] - s.theta[to][t]);
            if (implied - s.flow[k][t]).abs() > 1e-4 {
                out.push(format!("branch {} period {t}: flow does not match angles", br.id));
            }
            if s.flow[k][t].abs() > br.rate_long_term + BASE_TOLERANCE {
                out.push(format!("branch {} period {t}: flow {} exceeds rating", br.id, s.flow[k][t]));
            }
        }
    }
    let residual = s.max_balance_residual(case, &topo);
    if residual > BASE_TOLERANCE {
        out.push(format!("nodal balance mismatch of {residual} MW"));
    }
    out
}
