//! Master unit commitment, the two extensive models and feasibility cuts.
//!
//! Line flows are in MW: `flow_k = base_mva * b_k * (theta_from - theta_to)`.
//! Nodal balance reads `generation + inflow - outflow = demand`.

use std::f64::consts::PI;

use crate::error::ModelError;
use crate::model::{
    BranchId, FeasibilityCut, MucSolution, SubproblemDuals, SubproblemOutcome, SystemCase, Topology,
};
use crate::network::NetworkSensitivities;
use crate::solver::{ModelHandle, RowId, Sense, SolveResult, VarId};

pub const DEFAULT_ANGLE_SPAN: f64 = 2.0 * PI;

/// Objective weight of one opened line in the reconfigurable extensive
/// model, $. Not part of the reported operating cost.
pub const OPENING_COST: f64 = 1e-6;

/// Per-branch big-M constants, MW.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMPolicy {
    pub angle_span: f64,
    pub m: Vec<f64>,
}

impl BigMPolicy {
    pub fn new(case: &SystemCase, angle_span: f64) -> Self {
        let m = case
            .branches
            .iter()
            .map(|br| case.base_mva * br.susceptance.abs() * angle_span)
            .collect();
        Self { angle_span, m }
    }
}

/// Post-contingency limit applied to available lines in the
/// reconfigurable extensive model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchedLineRating {
    /// Short-term rating, consistent with the model without switching.
    #[default]
    Emergency,
    /// Long-term rating.
    LongTerm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnrOptions {
    pub z_max: usize,
    pub angle_span: f64,
    pub rating: SwitchedLineRating,
}

impl Default for CnrOptions {
    fn default() -> Self {
        Self { z_max: 1, angle_span: DEFAULT_ANGLE_SPAN, rating: SwitchedLineRating::default() }
    }
}

/// Base-case variables, indexed like [`MucSolution`].
#[derive(Debug, Clone)]
pub struct BaseVars {
    pub u: Vec<Vec<VarId>>,
    pub v: Vec<Vec<VarId>>,
    pub p: Vec<Vec<VarId>>,
    pub r: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
}

#[derive(Debug, Clone)]
pub struct MucModel {
    pub model: ModelHandle,
    pub vars: BaseVars,
    pub cut_rows: Vec<RowId>,
}

impl MucModel {
    pub fn extract(&self, case: &SystemCase, result: &SolveResult) -> MucSolution {
        extract_schedule(case, &self.vars, result)
    }
}

/// Variables of one `(contingency, period)` block.
#[derive(Debug, Clone)]
pub struct ContingencyBlock {
    pub contingency: usize,
    pub period: usize,
    pub p: Vec<VarId>,
    /// `None` for the outaged branch.
    pub flow: Vec<Option<VarId>>,
    pub theta: Vec<VarId>,
    /// `(branch, z)` for every switchable branch, reconfigurable model only.
    pub z: Vec<(usize, VarId)>,
}

#[derive(Debug, Clone)]
pub struct ExtensiveModel {
    pub model: ModelHandle,
    pub base: BaseVars,
    pub blocks: Vec<ContingencyBlock>,
    pub big_m: Option<BigMPolicy>,
}

/// A line opened in response to an outage: `(contingency, period, opened)`.
pub type SwitchAction = (BranchId, usize, BranchId);

impl ExtensiveModel {
    pub fn extract(&self, case: &SystemCase, result: &SolveResult) -> MucSolution {
        extract_schedule(case, &self.base, result)
    }

    /// Lines with `z = 0` in a solved reconfigurable model.
    pub fn switches(&self, case: &SystemCase, result: &SolveResult) -> Vec<SwitchAction> {
        let mut out = Vec::new();
        for block in &self.blocks {
            for &(k, z) in &block.z {
                if !result.flag(z) {
                    out.push((case.branches[block.contingency].id, block.period, case.branches[k].id));
                }
            }
        }
        out
    }

    /// Smallest `(M_k - |base * b_k * dtheta|) / M_k` over opened lines.
    /// Returns `None` when no line is opened.
    pub fn big_m_margin(&self, case: &SystemCase, topo: &Topology, result: &SolveResult) -> Option<f64> {
        let big_m = self.big_m.as_ref()?;
        let mut worst: Option<f64> = None;
        for block in &self.blocks {
            for &(k, z) in &block.z {
                if result.flag(z) {
                    continue;
                }
                let (f, to) = topo.ends[k];
                let implied = case.base_mva
                    * case.branches[k].susceptance
                    * (result.value(block.theta[f]) - result.value(block.theta[to]));
                let margin = (big_m.m[k] - implied.abs()) / big_m.m[k];
                worst = Some(worst.map_or(margin, |w: f64| w.min(margin)));
            }
        }
        worst
    }
}

fn as_bool(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn add_base_case(m: &mut ModelHandle, case: &SystemCase, topo: &Topology) -> BaseVars {
    let horizon = case.horizon;
    let n_gen = case.generators.len();
    let mut vars = BaseVars {
        u: Vec::with_capacity(n_gen),
        v: Vec::with_capacity(n_gen),
        p: Vec::with_capacity(n_gen),
        r: Vec::with_capacity(n_gen),
        flow: Vec::new(),
        theta: Vec::new(),
    };
    for gen in &case.generators {
        vars.u.push((0..horizon).map(|_| m.add_binary(gen.cost_no_load)).collect());
        vars.v.push((0..horizon).map(|_| m.add_binary(gen.cost_startup)).collect());
        vars.p.push((0..horizon).map(|_| m.add_continuous(0.0, gen.p_max, gen.cost_linear)).collect());
        vars.r.push((0..horizon).map(|_| m.add_continuous(0.0, f64::INFINITY, 0.0)).collect());
    }
    for br in &case.branches {
        let cap = br.rate_long_term;
        vars.flow.push((0..horizon).map(|_| m.add_continuous(-cap, cap, 0.0)).collect());
    }
    for _ in 0..topo.n_bus {
        vars.theta.push((0..horizon).map(|_| m.add_free(0.0)).collect());
    }

    for (g, gen) in case.generators.iter().enumerate() {
        let (u, v, p, r) = (&vars.u[g], &vars.v[g], &vars.p[g], &vars.r[g]);
        for t in 0..horizon {
            m.add_row(format!("pmin[{g},{t}]"), [(p[t], 1.0), (u[t], -gen.p_min)], Sense::Ge, 0.0);
            m.add_row(
                format!("pmax[{g},{t}]"),
                [(p[t], 1.0), (r[t], 1.0), (u[t], -gen.p_max)],
                Sense::Le,
                0.0,
            );
            m.add_row(format!("r10[{g},{t}]"), [(r[t], 1.0), (u[t], -gen.ramp_10)], Sense::Le, 0.0);
            let mut reserve: Vec<(VarId, f64)> = (0..n_gen).map(|q| (vars.r[q][t], 1.0)).collect();
            reserve.push((p[t], -1.0));
            reserve.push((r[t], -1.0));
            m.add_row(format!("reserve[{g},{t}]"), reserve, Sense::Ge, 0.0);

            // Hourly ramps, with the initial state as constants at t = 0.
            let u_prev = gen.initial_status && t == 0;
            let up_row = [(p[t], 1.0), (v[t], -gen.ramp_startup)];
            let down_row = [
                (p[t], -1.0),
                (u[t], -gen.ramp_hourly + gen.ramp_shutdown),
                (v[t], -gen.ramp_shutdown),
            ];
            if t == 0 {
                let p0 = gen.initial_output;
                let u0 = as_bool(u_prev);
                m.add_row(format!("ramp_up[{g},{t}]"), up_row, Sense::Le, gen.ramp_hourly * u0 + p0);
                m.add_row(
                    format!("ramp_down[{g},{t}]"),
                    down_row,
                    Sense::Le,
                    gen.ramp_shutdown * u0 - p0,
                );
                m.add_row(format!("startup[{g},{t}]"), [(v[t], 1.0), (u[t], -1.0)], Sense::Ge, -u0);
            } else {
                let mut up = up_row.to_vec();
                up.extend([(p[t - 1], -1.0), (u[t - 1], -gen.ramp_hourly)]);
                m.add_row(format!("ramp_up[{g},{t}]"), up, Sense::Le, 0.0);
                let mut down = down_row.to_vec();
                down.extend([(p[t - 1], 1.0), (u[t - 1], -gen.ramp_shutdown)]);
                m.add_row(format!("ramp_down[{g},{t}]"), down, Sense::Le, 0.0);
                m.add_row(
                    format!("startup[{g},{t}]"),
                    [(v[t], 1.0), (u[t], -1.0), (u[t - 1], 1.0)],
                    Sense::Ge,
                    0.0,
                );
            }
        }
        // Minimum up and down times over the stated index ranges (1-based t).
        let up = gen.min_up as usize;
        for t1 in up.max(1)..=horizon {
            let t = t1 - 1;
            let mut terms: Vec<(VarId, f64)> = ((t1 - up)..=t).map(|q| (v[q], 1.0)).collect();
            terms.push((u[t], -1.0));
            m.add_row(format!("min_up[{g},{t}]"), terms, Sense::Le, 0.0);
        }
        let down = gen.min_down as usize;
        for t1 in 1..=horizon.saturating_sub(down) {
            let t = t1 - 1;
            let mut terms: Vec<(VarId, f64)> = (t1..t1 + down).map(|q| (v[q], 1.0)).collect();
            terms.push((u[t], 1.0));
            m.add_row(format!("min_down[{g},{t}]"), terms, Sense::Le, 1.0);
        }
    }

    for t in 0..horizon {
        for (k, br) in case.branches.iter().enumerate() {
            let (f, to) = topo.ends[k];
            let coef = case.base_mva * br.susceptance;
            m.add_row(
                format!("flow[{k},{t}]"),
                [(vars.flow[k][t], 1.0), (vars.theta[f][t], -coef), (vars.theta[to][t], coef)],
                Sense::Eq,
                0.0,
            );
        }
        let balance = balance_terms(topo, |g| Some(vars.p[g][t]), |k| Some(vars.flow[k][t]));
        for (n, terms) in balance.into_iter().enumerate() {
            m.add_row(format!("balance[{n},{t}]"), terms, Sense::Eq, case.buses[n].demand[t]);
        }
        m.add_row(format!("ref_angle[{t}]"), [(vars.theta[topo.reference][t], 1.0)], Sense::Eq, 0.0);
    }
    vars
}

/// Left-hand sides of the nodal balance rows.
pub(crate) fn balance_terms(
    topo: &Topology,
    gen_var: impl Fn(usize) -> Option<VarId>,
    flow_var: impl Fn(usize) -> Option<VarId>,
) -> Vec<Vec<(VarId, f64)>> {
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); topo.n_bus];
    for (g, &n) in topo.gen_bus.iter().enumerate() {
        if let Some(v) = gen_var(g) {
            rows[n].push((v, 1.0));
        }
    }
    for (k, &(f, to)) in topo.ends.iter().enumerate() {
        if let Some(v) = flow_var(k) {
            rows[f].push((v, -1.0));
            rows[to].push((v, 1.0));
        }
    }
    rows
}

fn add_cut_row(m: &mut ModelHandle, vars: &BaseVars, cut: &FeasibilityCut, index: usize) -> RowId {
    let t = cut.period();
    let terms = cut
        .coef_u
        .iter()
        .zip(&cut.coef_p)
        .enumerate()
        .flat_map(|(g, (&cu, &cp))| [(vars.u[g][t], cu), (vars.p[g][t], cp)]);
    m.add_row(format!("cut[{index}]"), terms, Sense::Le, -cut.constant)
}

/// Master unit commitment with the supplied feasibility cuts.
pub fn build_muc(case: &SystemCase, cuts: &[FeasibilityCut]) -> Result<MucModel, ModelError> {
    let topo = case.topology()?;
    let mut model = ModelHandle::new();
    let vars = add_base_case(&mut model, case, &topo);
    let cut_rows = cuts.iter().enumerate().map(|(i, cut)| add_cut_row(&mut model, &vars, cut, i)).collect();
    Ok(MucModel { model, vars, cut_rows })
}

/// Reads a schedule out of a solved model.
pub fn extract_schedule(case: &SystemCase, vars: &BaseVars, result: &SolveResult) -> MucSolution {
    let reals = |table: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
        table.iter().map(|row| row.iter().map(|&v| result.value(v)).collect()).collect()
    };
    let flags = |table: &Vec<Vec<VarId>>| -> Vec<Vec<bool>> {
        table.iter().map(|row| row.iter().map(|&v| result.flag(v)).collect()).collect()
    };
    let mut sol = MucSolution {
        u: flags(&vars.u),
        v: flags(&vars.v),
        p: reals(&vars.p),
        r: reals(&vars.r),
        flow: reals(&vars.flow),
        theta: reals(&vars.theta),
        objective: 0.0,
    };
    sol.objective = sol.operating_cost(case);
    sol
}

fn add_contingency_generation(
    m: &mut ModelHandle,
    case: &SystemCase,
    base: &BaseVars,
    c: usize,
    t: usize,
) -> Vec<VarId> {
    let mut p_c = Vec::with_capacity(case.generators.len());
    for (g, gen) in case.generators.iter().enumerate() {
        let pc = m.add_continuous(0.0, f64::INFINITY, 0.0);
        let (u, p) = (base.u[g][t], base.p[g][t]);
        m.add_row(
            format!("ramp10_down[{g},{c},{t}]"),
            [(p, 1.0), (pc, -1.0), (u, -gen.ramp_10)],
            Sense::Le,
            0.0,
        );
        m.add_row(
            format!("ramp10_up[{g},{c},{t}]"),
            [(pc, 1.0), (p, -1.0), (u, -gen.ramp_10)],
            Sense::Le,
            0.0,
        );
        m.add_row(format!("cpmin[{g},{c},{t}]"), [(pc, 1.0), (u, -gen.p_min)], Sense::Ge, 0.0);
        m.add_row(format!("cpmax[{g},{c},{t}]"), [(pc, 1.0), (u, -gen.p_max)], Sense::Le, 0.0);
        p_c.push(pc);
    }
    p_c
}

fn add_contingency_balance(
    m: &mut ModelHandle,
    case: &SystemCase,
    topo: &Topology,
    block: &ContingencyBlock,
) {
    let (c, t) = (block.contingency, block.period);
    let rows = balance_terms(topo, |g| Some(block.p[g]), |k| block.flow[k]);
    for (n, terms) in rows.into_iter().enumerate() {
        m.add_row(format!("cbalance[{n},{c},{t}]"), terms, Sense::Eq, case.buses[n].demand[t]);
    }
}

/// Extensive N-1 model: base case plus one redispatch block per non-radial
/// outage and period.
pub fn build_extensive_scuc(case: &SystemCase, sens: &NetworkSensitivities) -> Result<ExtensiveModel, ModelError> {
    let topo = &sens.topology;
    let mut model = ModelHandle::new();
    let base = add_base_case(&mut model, case, topo);
    let mut blocks = Vec::new();
    for t in 0..case.horizon {
        for &c in &sens.non_radial {
            let p = add_contingency_generation(&mut model, case, &base, c, t);
            let theta: Vec<VarId> = (0..topo.n_bus)
                .map(|n| if n == topo.reference { model.add_continuous(0.0, 0.0, 0.0) } else { model.add_free(0.0) })
                .collect();
            let mut flow = Vec::with_capacity(case.branches.len());
            for (k, br) in case.branches.iter().enumerate() {
                if k == c {
                    flow.push(None);
                    continue;
                }
                let cap = br.rate_emergency;
                let var = model.add_continuous(-cap, cap, 0.0);
                let (f, to) = topo.ends[k];
                let coef = case.base_mva * br.susceptance;
                model.add_row(
                    format!("cflow[{k},{c},{t}]"),
                    [(var, 1.0), (theta[f], -coef), (theta[to], coef)],
                    Sense::Eq,
                    0.0,
                );
                flow.push(Some(var));
            }
            let block = ContingencyBlock { contingency: c, period: t, p, flow, theta, z: Vec::new() };
            add_contingency_balance(&mut model, case, topo, &block);
            blocks.push(block);
        }
    }
    Ok(ExtensiveModel { model, base, blocks, big_m: None })
}

/// Extensive N-1 model where each outage may be answered by opening at most
/// `z_max` reconfigurable lines.
pub fn build_extensive_scuc_cnr(
    case: &SystemCase,
    sens: &NetworkSensitivities,
    options: &CnrOptions,
) -> Result<ExtensiveModel, ModelError> {
    let topo = &sens.topology;
    let big_m = BigMPolicy::new(case, options.angle_span);
    let half_span = options.angle_span / 2.0;
    let mut model = ModelHandle::new();
    let base = add_base_case(&mut model, case, topo);
    let mut blocks = Vec::new();
    for t in 0..case.horizon {
        for &c in &sens.non_radial {
            let p = add_contingency_generation(&mut model, case, &base, c, t);
            // Angles are boxed so that every difference stays within the span
            // the big-M constants are sized for.
            let theta: Vec<VarId> = (0..topo.n_bus)
                .map(|n| {
                    if n == topo.reference {
                        model.add_continuous(0.0, 0.0, 0.0)
                    } else {
                        model.add_continuous(-half_span, half_span, 0.0)
                    }
                })
                .collect();
            let mut flow = Vec::with_capacity(case.branches.len());
            let mut z = Vec::new();
            for (k, br) in case.branches.iter().enumerate() {
                if k == c {
                    flow.push(None);
                    continue;
                }
                let cap = match options.rating {
                    SwitchedLineRating::Emergency => br.rate_emergency,
                    SwitchedLineRating::LongTerm => br.rate_long_term,
                };
                let var = model.add_free(0.0);
                let (f, to) = topo.ends[k];
                let coef = case.base_mva * br.susceptance;
                let definition = [(var, 1.0), (theta[f], -coef), (theta[to], coef)];
                if sens.reconfigurable.contains(&k) {
                    // Opening a line carries a negligible cost so that idle
                    // lines stay closed.
                    let zk = model.add_binary(-OPENING_COST);
                    let mk = big_m.m[k];
                    let mut lower = definition.to_vec();
                    lower.push((zk, -mk));
                    model.add_row(format!("cflow_lo[{k},{c},{t}]"), lower, Sense::Ge, -mk);
                    let mut upper = definition.to_vec();
                    upper.push((zk, mk));
                    model.add_row(format!("cflow_hi[{k},{c},{t}]"), upper, Sense::Le, mk);
                    model.add_row(format!("climit_hi[{k},{c},{t}]"), [(var, 1.0), (zk, -cap)], Sense::Le, 0.0);
                    model.add_row(format!("climit_lo[{k},{c},{t}]"), [(var, 1.0), (zk, cap)], Sense::Ge, 0.0);
                    z.push((k, zk));
                } else {
                    model.add_row(format!("cflow[{k},{c},{t}]"), definition, Sense::Eq, 0.0);
                    model.add_row(format!("climit_hi[{k},{c},{t}]"), [(var, 1.0)], Sense::Le, cap);
                    model.add_row(format!("climit_lo[{k},{c},{t}]"), [(var, 1.0)], Sense::Ge, -cap);
                }
                flow.push(Some(var));
            }
            // sum(1 - z) <= z_max over the switchable lines of this block.
            if !z.is_empty() {
                model.add_row(
                    format!("switch_count[{c},{t}]"),
                    z.iter().map(|&(_, zk)| (zk, -1.0)),
                    Sense::Le,
                    options.z_max as f64 - z.len() as f64,
                );
            }
            let block = ContingencyBlock { contingency: c, period: t, p, flow, theta, z };
            add_contingency_balance(&mut model, case, topo, &block);
            blocks.push(block);
        }
    }
    Ok(ExtensiveModel { model, base, blocks, big_m: Some(big_m) })
}

/// Feasibility cut from the duals of a post-contingency check.
///
/// The left-hand side is the check's dual objective written as a function
/// of the master commitment and dispatch of period `t`.
pub fn assemble_feasibility_cut(
    duals: &SubproblemDuals,
    case: &SystemCase,
    c: BranchId,
    t: usize,
) -> FeasibilityCut {
    let mut coef_u = Vec::with_capacity(case.generators.len());
    let mut coef_p = Vec::with_capacity(case.generators.len());
    for (g, gen) in case.generators.iter().enumerate() {
        coef_u.push(
            gen.p_max * duals.alpha_plus[g] - gen.p_min * duals.alpha_minus[g]
                + gen.ramp_10 * (duals.beta_plus[g] + duals.beta_minus[g]),
        );
        coef_p.push(duals.beta_plus[g] - duals.beta_minus[g]);
    }
    let lines: f64 = case
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| br.rate_emergency * (duals.f_plus[k] + duals.f_minus[k]))
        .sum();
    let loads: f64 = case.buses.iter().enumerate().map(|(n, bus)| bus.demand[t] * duals.lambda[n]).sum();
    FeasibilityCut { origin: (c, t), coef_u, coef_p, constant: lines + loads }
}

/// Tolerance of the cut self-check, absolute.
pub const CUT_CHECK_TOLERANCE: f64 = 1e-6;

/// Assembles the cut for an infeasible outcome and checks that it evaluates
/// to the outcome's slack at the schedule that produced it.
pub fn cut_from_outcome(
    outcome: &SubproblemOutcome,
    case: &SystemCase,
    muc: &MucSolution,
) -> Result<FeasibilityCut, crate::error::SolverError> {
    let duals = outcome
        .duals
        .as_ref()
        .ok_or_else(|| crate::error::SolverError::Engine("outcome carries no duals".into()))?;
    let cut = assemble_feasibility_cut(duals, case, outcome.contingency, outcome.period);
    let value = cut.evaluate(muc);
    if (value - outcome.slack).abs() > CUT_CHECK_TOLERANCE {
        return Err(crate::error::SolverError::DualityGap { primal: outcome.slack, dual: value });
    }
    Ok(cut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::solver::{solve_milp, MicroLp, MilpOptions, SolveStatus};
    use approx::assert_abs_diff_eq;

    fn tight() -> MilpOptions {
        MilpOptions { gap: 1e-9, ..MilpOptions::default() }
    }

    #[test]
    fn big_m_covers_the_span() {
        let case = fixtures::tri3();
        let policy = BigMPolicy::new(&case, DEFAULT_ANGLE_SPAN);
        for (k, br) in case.branches.iter().enumerate() {
            assert!(policy.m[k] >= br.susceptance.abs() * DEFAULT_ANGLE_SPAN);
        }
    }

    #[test]
    fn one_cut_adds_one_row() {
        let case = fixtures::tri3();
        let plain = build_muc(&case, &[]).unwrap();
        let cut = FeasibilityCut { origin: (BranchId(1), 0), coef_u: vec![1.0, 0.0], coef_p: vec![0.0, 1.0], constant: -1.0 };
        let with_cut = build_muc(&case, &[cut]).unwrap();
        assert_eq!(with_cut.model.num_rows(), plain.model.num_rows() + 1);
        assert_eq!(with_cut.model.num_vars(), plain.model.num_vars());
    }

    #[test]
    fn zero_ten_minute_ramp_blocks_all_output() {
        let mut case = fixtures::tri3_with_demand(&[0.0]);
        for gen in &mut case.generators {
            gen.ramp_10 = 0.0;
            gen.p_min = 0.0;
            gen.initial_status = false;
            gen.initial_output = 0.0;
        }
        let muc = build_muc(&case, &[]).unwrap();
        let res = solve_milp(&MicroLp, &muc.model, &tight()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let sol = muc.extract(&case, &res);
        assert!(sol.p.iter().flatten().all(|p| p.abs() < 1e-9));
        assert!(sol.r.iter().flatten().all(|r| r.abs() < 1e-9));

        case.buses[1].demand[0] = 10.0;
        let muc = build_muc(&case, &[]).unwrap();
        let res = solve_milp(&MicroLp, &muc.model, &tight()).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn schedule_balances_and_matches_objective() {
        let case = fixtures::tri3();
        let muc = build_muc(&case, &[]).unwrap();
        let res = solve_milp(&MicroLp, &muc.model, &tight()).unwrap();
        let sol = muc.extract(&case, &res);
        let topo = case.topology().unwrap();
        assert!(sol.max_balance_residual(&case, &topo) < 1e-6);
        assert_abs_diff_eq!(sol.objective, res.objective, epsilon = 1e-6);
        for t in 0..case.horizon {
            assert!(sol.theta[topo.reference][t].abs() < 1e-9);
        }
    }

    #[test]
    fn cut_coefficients_follow_the_dual_objective() {
        let case = fixtures::tri3();
        let n_g = case.generators.len();
        let n_k = case.branches.len();
        let mut duals = SubproblemDuals {
            alpha_plus: vec![0.0; n_g],
            alpha_minus: vec![0.0; n_g],
            beta_plus: vec![0.0; n_g],
            beta_minus: vec![0.0; n_g],
            f_plus: vec![0.0; n_k],
            f_minus: vec![0.0; n_k],
            s_flow: vec![0.0; n_k],
            lambda: vec![0.0; case.buses.len()],
        };
        duals.alpha_plus[0] = -1.0;
        duals.beta_minus[1] = -2.0;
        duals.f_plus[2] = -0.5;
        duals.lambda[1] = 0.25;
        let cut = assemble_feasibility_cut(&duals, &case, BranchId(1), 0);
        let g0 = &case.generators[0];
        let g1 = &case.generators[1];
        assert_abs_diff_eq!(cut.coef_u[0], -g0.p_max);
        assert_abs_diff_eq!(cut.coef_u[1], -2.0 * g1.ramp_10);
        assert_abs_diff_eq!(cut.coef_p[1], 2.0);
        assert_abs_diff_eq!(cut.constant, -0.5 * case.branches[2].rate_emergency + 0.25 * case.buses[1].demand[0]);
    }
}
