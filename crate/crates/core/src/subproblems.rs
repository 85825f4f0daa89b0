//! Per-outage, per-period checks run against a fixed master schedule.

use crate::error::{SolverError, SubproblemError};
use crate::model::{BranchId, MucSolution, OutcomeStatus, SubproblemDuals, SubproblemOutcome, SystemCase, Topology};
use crate::network::{is_connected, NetworkSensitivities};
use crate::solver::{Engine, LpOptions, MicroLp, ModelHandle, RowId, Sense, SolveStatus, VarId};

pub const DEFAULT_SLACK_TOLERANCE: f64 = 1e-6;
/// Slack allowed on the screener's overload test, MW.
pub const SCREEN_SLACK: f64 = 1e-6;
/// Tolerance on `sum(rhs * dual) == slack`.
pub const DUALITY_TOLERANCE: f64 = 1e-6;

/// Outcome of the LODF screen over a candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningResult {
    pub candidates: usize,
    /// Critical `(branch position, period)` pairs, in candidate order.
    pub critical: Vec<(usize, usize)>,
    /// Worst `|predicted flow| / rate_emergency` per candidate.
    pub worst_ratio: Vec<((usize, usize), f64)>,
}

impl ScreeningResult {
    pub fn is_critical(&self, c: usize, t: usize) -> bool {
        self.critical.contains(&(c, t))
    }
}

/// Flags the `(c, t)` candidates whose LODF-predicted post-outage flows
/// exceed an emergency rating. Pure arithmetic.
pub fn run_csps(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    muc: &MucSolution,
    candidates: &[(usize, usize)],
) -> ScreeningResult {
    let mut critical = Vec::new();
    let mut worst_ratio = Vec::with_capacity(candidates.len());
    for &(c, t) in candidates {
        let pre_c = muc.flow[c][t];
        let mut worst: f64 = 0.0;
        let mut overloaded = false;
        for (k, br) in case.branches.iter().enumerate() {
            if k == c {
                continue;
            }
            let predicted = (muc.flow[k][t] + sens.lodf(k, c) * pre_c).abs();
            worst = worst.max(predicted / br.rate_emergency);
            overloaded |= predicted > br.rate_emergency + SCREEN_SLACK;
        }
        if overloaded {
            critical.push((c, t));
        }
        worst_ratio.push(((c, t), worst));
    }
    ScreeningResult { candidates: candidates.len(), critical, worst_ratio }
}

struct CheckRows {
    beta_minus: Vec<RowId>,
    beta_plus: Vec<RowId>,
    alpha_minus: Vec<RowId>,
    alpha_plus: Vec<RowId>,
    flow: Vec<RowId>,
    f_minus: Vec<RowId>,
    f_plus: Vec<RowId>,
    balance: Vec<RowId>,
}

struct CheckModel {
    model: ModelHandle,
    slack: VarId,
    rows: CheckRows,
}

/// Redispatch feasibility LP for outage `c` (and optionally opened line `j`)
/// in period `t`. Every right-hand side is relaxed in proportion to the slack.
fn build_check(
    case: &SystemCase,
    topo: &Topology,
    muc: &MucSolution,
    c: usize,
    t: usize,
    opened: Option<usize>,
) -> CheckModel {
    let mut m = ModelHandle::new();
    let s = m.add_continuous(0.0, f64::INFINITY, 1.0);
    let n_gen = case.generators.len();
    let mut rows = CheckRows {
        beta_minus: Vec::with_capacity(n_gen),
        beta_plus: Vec::with_capacity(n_gen),
        alpha_minus: Vec::with_capacity(n_gen),
        alpha_plus: Vec::with_capacity(n_gen),
        flow: Vec::new(),
        f_minus: Vec::new(),
        f_plus: Vec::new(),
        balance: Vec::new(),
    };
    let mut p_c = Vec::with_capacity(n_gen);
    for (g, gen) in case.generators.iter().enumerate() {
        let pc = m.add_continuous(0.0, f64::INFINITY, 0.0);
        let on = if muc.u[g][t] { 1.0 } else { 0.0 };
        let p = muc.p[g][t];
        let down = gen.ramp_10 * on - p;
        let up = gen.ramp_10 * on + p;
        rows.beta_minus.push(m.add_row(format!("beta_minus[{g}]"), [(pc, -1.0), (s, down)], Sense::Le, down));
        rows.beta_plus.push(m.add_row(format!("beta_plus[{g}]"), [(pc, 1.0), (s, up)], Sense::Le, up));
        let lo = gen.p_min * on;
        let hi = gen.p_max * on;
        rows.alpha_minus.push(m.add_row(format!("alpha_minus[{g}]"), [(pc, -1.0), (s, -lo)], Sense::Le, -lo));
        rows.alpha_plus.push(m.add_row(format!("alpha_plus[{g}]"), [(pc, 1.0), (s, hi)], Sense::Le, hi));
        p_c.push(pc);
    }
    let theta: Vec<VarId> = (0..topo.n_bus)
        .map(|n| if n == topo.reference { m.add_continuous(0.0, 0.0, 0.0) } else { m.add_free(0.0) })
        .collect();
    let flow: Vec<VarId> = (0..case.branches.len()).map(|_| m.add_free(0.0)).collect();
    for (k, br) in case.branches.iter().enumerate() {
        let row = if k == c || Some(k) == opened {
            m.add_row(format!("open[{k}]"), [(flow[k], 1.0)], Sense::Eq, 0.0)
        } else {
            let (f, to) = topo.ends[k];
            let coef = case.base_mva * br.susceptance;
            m.add_row(
                format!("flow[{k}]"),
                [(flow[k], 1.0), (theta[f], -coef), (theta[to], coef)],
                Sense::Eq,
                0.0,
            )
        };
        rows.flow.push(row);
    }
    for (k, br) in case.branches.iter().enumerate() {
        let e = br.rate_emergency;
        rows.f_minus.push(m.add_row(format!("f_minus[{k}]"), [(flow[k], -1.0), (s, e)], Sense::Le, e));
        rows.f_plus.push(m.add_row(format!("f_plus[{k}]"), [(flow[k], 1.0), (s, e)], Sense::Le, e));
    }
    let balance = crate::formulations::balance_terms(topo, |g| Some(p_c[g]), |k| Some(flow[k]));
    for (n, mut terms) in balance.into_iter().enumerate() {
        let d = case.buses[n].demand[t];
        terms.push((s, d));
        rows.balance.push(m.add_row(format!("lambda[{n}]"), terms, Sense::Eq, d));
    }
    CheckModel { model: m, slack: s, rows }
}

/// Shared settings for the subproblem solves.
#[derive(Clone, Copy)]
pub struct Checker<'a> {
    pub case: &'a SystemCase,
    pub sens: &'a NetworkSensitivities,
    pub engine: &'a dyn Engine,
    pub lp: LpOptions,
    pub slack_tolerance: f64,
}

/// Where the corrective switch search draws candidates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchPool {
    /// The ranked nearby-branch list of the outage.
    #[default]
    Ranked,
    /// Every reconfigurable non-radial branch, by position.
    Enumerate,
}

/// Result of a corrective switch search.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSearch {
    /// First feasible `(opened branch, slack)`.
    pub found: Option<(BranchId, f64)>,
    /// Slack of every candidate actually solved, in order.
    pub tried: Vec<(BranchId, f64)>,
    /// Candidates skipped because opening them islands a bus.
    pub skipped: Vec<BranchId>,
}

impl<'a> Checker<'a> {
    pub fn new(case: &'a SystemCase, sens: &'a NetworkSensitivities, engine: &'a dyn Engine) -> Self {
        Self { case, sens, engine, lp: LpOptions::default(), slack_tolerance: DEFAULT_SLACK_TOLERANCE }
    }

    fn position(&self, c: BranchId) -> Result<usize, SubproblemError> {
        self.case
            .branch_position(c)
            .ok_or(SubproblemError::Network(crate::error::NetworkError::UnknownBranch(c)))
    }

    fn solve_check(
        &self,
        c: usize,
        t: usize,
        opened: Option<usize>,
        muc: &MucSolution,
        with_duals: bool,
    ) -> Result<(f64, Option<SubproblemDuals>), SubproblemError> {
        let contingency = self.case.branches[c].id;
        let check = build_check(self.case, &self.sens.topology, muc, c, t, opened);
        let wrap = |source: SolverError| SubproblemError::Solver { contingency, period: t, source };
        let result = if with_duals {
            self.engine.solve_lp(&check.model, &self.lp).map_err(wrap)?
        } else {
            self.engine.solve_lp_primal(&check.model, &self.lp).map_err(wrap)?
        };
        if result.status != SolveStatus::Optimal {
            return Err(SubproblemError::Unexpected {
                contingency,
                period: t,
                status: format!("{:?}", result.status),
            });
        }
        let slack = result.value(check.slack);
        if !(-self.lp.feasibility_tolerance..=1.0 + self.lp.feasibility_tolerance).contains(&slack) {
            return Err(SubproblemError::Unexpected {
                contingency,
                period: t,
                status: format!("slack {slack} outside [0, 1]"),
            });
        }
        let slack = slack.clamp(0.0, 1.0);
        if !with_duals {
            return Ok((slack, None));
        }
        let y = result.duals.as_ref().expect("LP solve returns duals");
        let dual_value = check.model.rhs_dot(y);
        if (dual_value - slack).abs() > DUALITY_TOLERANCE {
            return Err(wrap(SolverError::DualityGap { primal: slack, dual: dual_value }));
        }
        let pick = |ids: &[RowId]| ids.iter().map(|r| y[r.0]).collect::<Vec<f64>>();
        let rows = &check.rows;
        let duals = SubproblemDuals {
            alpha_plus: pick(&rows.alpha_plus),
            alpha_minus: pick(&rows.alpha_minus),
            beta_plus: pick(&rows.beta_plus),
            beta_minus: pick(&rows.beta_minus),
            f_plus: pick(&rows.f_plus),
            f_minus: pick(&rows.f_minus),
            s_flow: pick(&rows.flow),
            lambda: pick(&rows.balance),
        };
        Ok((slack, Some(duals)))
    }

    fn status(&self, slack: f64) -> OutcomeStatus {
        if slack <= self.slack_tolerance {
            OutcomeStatus::Feasible
        } else {
            OutcomeStatus::Infeasible
        }
    }

    /// Redispatch-only check of outage `c` in period `t`, with duals.
    pub fn solve_pcfc(&self, muc: &MucSolution, c: BranchId, t: usize) -> Result<SubproblemOutcome, SubproblemError> {
        let k = self.position(c)?;
        if !self.sens.is_non_radial(k) {
            return Err(crate::error::NetworkError::Bridge(c).into());
        }
        let (slack, duals) = self.solve_check(k, t, None, muc, true)?;
        Ok(SubproblemOutcome { contingency: c, period: t, slack, duals, switch: None, status: self.status(slack) })
    }

    /// Redispatch check of outage `c` with line `j` opened as well.
    pub fn solve_nr_pcfc(
        &self,
        muc: &MucSolution,
        c: BranchId,
        t: usize,
        j: BranchId,
    ) -> Result<SubproblemOutcome, SubproblemError> {
        let kc = self.position(c)?;
        let kj = self.position(j)?;
        if !self.sens.is_non_radial(kc) {
            return Err(crate::error::NetworkError::Bridge(c).into());
        }
        if !self.sens.reconfigurable.contains(&kj) || kj == kc {
            return Err(SubproblemError::Unexpected {
                contingency: c,
                period: t,
                status: format!("branch {j} cannot be opened"),
            });
        }
        let (slack, _) = self.solve_check(kc, t, Some(kj), muc, false)?;
        let status = self.status(slack);
        let switch = (status == OutcomeStatus::Feasible).then_some(j);
        let status = if switch.is_some() { OutcomeStatus::FeasibleViaSwitch } else { status };
        Ok(SubproblemOutcome { contingency: c, period: t, slack, duals: None, switch, status })
    }

    fn pool(&self, c: usize, pool: SwitchPool) -> Vec<usize> {
        match pool {
            SwitchPool::Ranked => self.sens.cbce_for(c).to_vec(),
            SwitchPool::Enumerate => self.sens.reconfigurable.iter().copied().filter(|&k| k != c).collect(),
        }
    }

    /// Tries candidate lines in order and stops at the first one that makes
    /// the outage survivable. Candidates that island a bus are skipped.
    pub fn find_corrective_switch(
        &self,
        muc: &MucSolution,
        c: BranchId,
        t: usize,
        pool: SwitchPool,
    ) -> Result<SwitchSearch, SubproblemError> {
        let kc = self.position(c)?;
        let mut search = SwitchSearch { found: None, tried: Vec::new(), skipped: Vec::new() };
        for kj in self.pool(kc, pool) {
            let j = self.case.branches[kj].id;
            if !is_connected(&self.sens.topology, &[kc, kj]) {
                search.skipped.push(j);
                continue;
            }
            let outcome = self.solve_nr_pcfc(muc, c, t, j)?;
            search.tried.push((j, outcome.slack));
            if outcome.switch.is_some() {
                search.found = Some((j, outcome.slack));
                break;
            }
        }
        Ok(search)
    }

    /// Every reconfigurable line whose opening makes the outage survivable.
    pub fn feasible_switches(&self, muc: &MucSolution, c: BranchId, t: usize) -> Result<Vec<BranchId>, SubproblemError> {
        let kc = self.position(c)?;
        let mut out = Vec::new();
        for kj in self.pool(kc, SwitchPool::Enumerate) {
            if !is_connected(&self.sens.topology, &[kc, kj]) {
                continue;
            }
            let j = self.case.branches[kj].id;
            if self.solve_nr_pcfc(muc, c, t, j)?.switch.is_some() {
                out.push(j);
            }
        }
        Ok(out)
    }
}

/// Redispatch-only check with the default engine and tolerances.
pub fn solve_pcfc(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    muc: &MucSolution,
    c: BranchId,
    t: usize,
) -> Result<SubproblemOutcome, SubproblemError> {
    Checker::new(case, sens, &MicroLp).solve_pcfc(muc, c, t)
}

/// Check with line `j` opened, default engine and tolerances.
pub fn solve_nr_pcfc(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    muc: &MucSolution,
    c: BranchId,
    t: usize,
    j: BranchId,
) -> Result<SubproblemOutcome, SubproblemError> {
    Checker::new(case, sens, &MicroLp).solve_nr_pcfc(muc, c, t, j)
}

/// First feasible switch from the ranked list, default engine and tolerances.
pub fn find_corrective_switch(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    muc: &MucSolution,
    c: BranchId,
    t: usize,
) -> Result<Option<(BranchId, f64)>, SubproblemError> {
    Ok(Checker::new(case, sens, &MicroLp).find_corrective_switch(muc, c, t, SwitchPool::Ranked)?.found)
}
