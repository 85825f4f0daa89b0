//! Thin modelling layer over an LP/MILP engine.
//!
//! Models are always minimisations. LP duals are reported in the
//! convention `objective = sum_i rhs_i * dual_i + sum_j bound_j * reduced_j`,
//! i.e. a `>=` row has a non-negative dual and a `<=` row a non-positive one.
//! When every bounded variable sits at a zero bound the bound term vanishes
//! and `sum_i rhs_i * dual_i` is the optimum.

use std::time::Duration;

use log::trace;
use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// An engine-independent linear model (minimise `cost . x`).
#[derive(Debug, Clone, Default)]
pub struct ModelHandle {
    lower: Vec<f64>,
    upper: Vec<f64>,
    kind: Vec<VarKind>,
    cost: Vec<f64>,
    rows: Vec<Row>,
}

impl ModelHandle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64, cost: f64) -> VarId {
        self.lower.push(lower);
        self.upper.push(upper);
        self.kind.push(VarKind::Continuous);
        self.cost.push(cost);
        VarId(self.cost.len() - 1)
    }

    pub fn add_free(&mut self, cost: f64) -> VarId {
        self.add_continuous(f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    pub fn add_binary(&mut self, cost: f64) -> VarId {
        self.lower.push(0.0);
        self.upper.push(1.0);
        self.kind.push(VarKind::Binary);
        self.cost.push(cost);
        VarId(self.cost.len() - 1)
    }

    /// Adds `sum(terms) sense rhs`. Repeated variables are merged and zero
    /// coefficients dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, a) in terms {
            assert!(v.0 < self.cost.len(), "row references undeclared variable {}", v.0);
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, b)) => *b += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        self.rows.push(Row { name: name.into(), terms: merged, sense, rhs });
        RowId(self.rows.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, id: RowId) -> &Row {
        &self.rows[id.0]
    }

    pub fn bounds(&self, v: VarId) -> (f64, f64) {
        (self.lower[v.0], self.upper[v.0])
    }

    pub fn kind(&self, v: VarId) -> VarKind {
        self.kind[v.0]
    }

    pub fn has_binaries(&self) -> bool {
        self.kind.contains(&VarKind::Binary)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest absolute bound or row violation of a point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|(v, a)| a * x[v.0]).sum();
            let gap = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// `sum_i rhs_i * dual_i`.
    pub fn rhs_dot(&self, duals: &[f64]) -> f64 {
        self.rows.iter().zip(duals).map(|(r, y)| r.rhs * y).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time limit reached; `primal` holds the incumbent if there is one.
    Limit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// NaN when no point is available.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row duals, LP solves only.
    pub duals: Option<Vec<f64>>,
    /// Reduced costs, LP solves only.
    pub reduced_costs: Option<Vec<f64>>,
    /// Relative gap, MILP solves only.
    pub mip_gap: Option<f64>,
}

impl SolveResult {
    fn without_point(status: SolveStatus) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: None,
            reduced_costs: None,
            mip_gap: None,
        }
    }

    pub fn has_point(&self) -> bool {
        !self.primal.is_empty() || (self.status == SolveStatus::Optimal && !self.objective.is_nan())
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    /// Binary value rounded to the nearest of {0, 1}.
    pub fn flag(&self, v: VarId) -> bool {
        self.primal[v.0] > 0.5
    }

    pub fn dual(&self, r: RowId) -> Option<f64> {
        self.duals.as_ref().map(|d| d[r.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    /// Relative optimality gap.
    pub gap: f64,
    pub time_limit: Option<Duration>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self { gap: 1e-4, time_limit: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub feasibility_tolerance: f64,
    /// Maximum accepted `|primal - dual|`, relative to `max(1, |primal|)`.
    pub duality_tolerance: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { feasibility_tolerance: 1e-7, duality_tolerance: 1e-6 }
    }
}

/// A pluggable LP/MILP engine. Implementations must not share mutable
/// state between calls so that distinct models can be solved concurrently.
pub trait Engine: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve_milp(&self, model: &ModelHandle, opts: &MilpOptions) -> Result<SolveResult, SolverError>;

    /// Solves an LP and reports normalised row duals.
    fn solve_lp(&self, model: &ModelHandle, opts: &LpOptions) -> Result<SolveResult, SolverError>;

    /// Solves an LP when only the primal point is needed.
    fn solve_lp_primal(&self, model: &ModelHandle, opts: &LpOptions) -> Result<SolveResult, SolverError> {
        self.solve_lp(model, opts)
    }
}

/// Adapter for the pure-Rust `microlp` simplex / branch-and-bound engine.
///
/// `microlp` does not expose duals, so `solve_lp` obtains them by solving
/// the explicit Lagrangian dual of the model and checking strong duality.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLp;

fn to_microlp(model: &ModelHandle) -> (Problem, Vec<microlp::Variable>) {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<microlp::Variable> = (0..model.num_vars())
        .map(|j| match model.kind[j] {
            VarKind::Binary if model.lower[j] == 0.0 && model.upper[j] == 1.0 => p.add_binary_var(model.cost[j]),
            VarKind::Binary => p.add_integer_var(
                model.cost[j],
                (model.lower[j].round() as i32, model.upper[j].round() as i32),
            ),
            VarKind::Continuous => p.add_var(model.cost[j], (model.lower[j], model.upper[j])),
        })
        .collect();
    for row in &model.rows {
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(row.terms.iter().map(|(v, a)| (vars[v.0], *a)).collect::<Vec<_>>(), op, row.rhs);
    }
    (p, vars)
}

fn map_error(err: microlp::Error) -> Result<SolveResult, SolverError> {
    match err {
        microlp::Error::Infeasible => Ok(SolveResult::without_point(SolveStatus::Infeasible)),
        microlp::Error::Unbounded => Ok(SolveResult::without_point(SolveStatus::Unbounded)),
        other => Err(SolverError::Engine(other.to_string())),
    }
}

impl MicroLp {
    fn solve_primal(
        &self,
        model: &ModelHandle,
        options: microlp::SolveOptions,
    ) -> Result<SolveResult, SolverError> {
        let (problem, vars) = to_microlp(model);
        let outcome = match problem.solve_with(options) {
            Ok(o) => o,
            Err(e) => return map_error(e),
        };
        match outcome {
            microlp::SolveOutcome::Solution(sol) => {
                let primal: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
                let status = match sol.termination_reason() {
                    microlp::TerminationReason::ProvenOptimal | microlp::TerminationReason::MipGap => {
                        SolveStatus::Optimal
                    }
                    _ => SolveStatus::Limit,
                };
                Ok(SolveResult {
                    status,
                    objective: model.objective_value(&primal),
                    primal,
                    duals: None,
                    reduced_costs: None,
                    mip_gap: if model.has_binaries() { sol.gap() } else { None },
                })
            }
            microlp::SolveOutcome::Interrupted(_) => Ok(SolveResult::without_point(SolveStatus::Limit)),
        }
    }

    fn lp_options(opts: &LpOptions) -> microlp::SolveOptions {
        let mut o = microlp::SolveOptions::default();
        o.tolerances.feasibility = opts.feasibility_tolerance;
        o
    }
}

/// Builds `max sum(rhs*y) + sum(l*w_lo) - sum(u*w_up)` subject to
/// `A^T y + w_lo - w_up = c`, with sign restrictions on `y` by row sense.
/// Returns the dual model (as a minimisation of the negated objective),
/// the row-dual variables and per-column `(w_lo, w_up)` variables.
#[allow(clippy::type_complexity)]
fn dual_model(model: &ModelHandle) -> (ModelHandle, Vec<VarId>, Vec<(Option<VarId>, Option<VarId>)>) {
    let mut dual = ModelHandle::new();
    let y: Vec<VarId> = model
        .rows
        .iter()
        .map(|row| match row.sense {
            Sense::Ge => dual.add_continuous(0.0, f64::INFINITY, -row.rhs),
            Sense::Le => dual.add_continuous(f64::NEG_INFINITY, 0.0, -row.rhs),
            Sense::Eq => dual.add_free(-row.rhs),
        })
        .collect();
    let mut columns: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, row) in model.rows.iter().enumerate() {
        for &(v, a) in &row.terms {
            columns[v.0].push((y[i], a));
        }
    }
    let mut bound_vars = Vec::with_capacity(model.num_vars());
    for j in 0..model.num_vars() {
        let (l, u) = (model.lower[j], model.upper[j]);
        let (lo, up) = if l.is_finite() && u.is_finite() && l == u {
            (Some(dual.add_free(-l)), None)
        } else {
            (
                l.is_finite().then(|| dual.add_continuous(0.0, f64::INFINITY, -l)),
                u.is_finite().then(|| dual.add_continuous(0.0, f64::INFINITY, u)),
            )
        };
        let mut terms = std::mem::take(&mut columns[j]);
        if let Some(w) = lo {
            terms.push((w, 1.0));
        }
        if let Some(w) = up {
            terms.push((w, -1.0));
        }
        dual.add_row(format!("col{j}"), terms, Sense::Eq, model.cost[j]);
        bound_vars.push((lo, up));
    }
    (dual, y, bound_vars)
}

impl Engine for MicroLp {
    fn name(&self) -> &'static str {
        "microlp"
    }

    fn solve_milp(&self, model: &ModelHandle, opts: &MilpOptions) -> Result<SolveResult, SolverError> {
        let mut options = microlp::SolveOptions::default();
        options.mip_gap = opts.gap;
        options.time_limit = opts.time_limit;
        let mut result = self.solve_primal(model, options)?;
        if !model.has_binaries() && result.status == SolveStatus::Optimal {
            result.mip_gap = Some(0.0);
        }
        Ok(result)
    }

    fn solve_lp(&self, model: &ModelHandle, opts: &LpOptions) -> Result<SolveResult, SolverError> {
        let mut primal = self.solve_lp_primal(model, opts)?;
        if primal.status != SolveStatus::Optimal {
            return Ok(primal);
        }
        let (dual, y, w) = dual_model(model);
        let solved = self.solve_primal(&dual, Self::lp_options(opts))?;
        if solved.status != SolveStatus::Optimal {
            return Err(SolverError::Engine(format!(
                "dual of a solved LP ended with status {:?}",
                solved.status
            )));
        }
        let duals: Vec<f64> = y.iter().map(|&v| solved.value(v)).collect();
        let reduced: Vec<f64> = w
            .iter()
            .map(|(lo, up)| {
                lo.map_or(0.0, |v| solved.value(v)) - up.map_or(0.0, |v| solved.value(v))
            })
            .collect();
        let dual_objective = -solved.objective;
        trace!("lp primal {} dual {}", primal.objective, dual_objective);
        if (dual_objective - primal.objective).abs()
            > opts.duality_tolerance * primal.objective.abs().max(1.0)
        {
            return Err(SolverError::DualityGap { primal: primal.objective, dual: dual_objective });
        }
        primal.duals = Some(duals);
        primal.reduced_costs = Some(reduced);
        Ok(primal)
    }

    fn solve_lp_primal(&self, model: &ModelHandle, opts: &LpOptions) -> Result<SolveResult, SolverError> {
        if model.has_binaries() {
            return Err(SolverError::NotLinear);
        }
        self.solve_primal(model, Self::lp_options(opts))
    }
}

/// Solves a model that may contain binaries.
pub fn solve_milp(
    engine: &dyn Engine,
    model: &ModelHandle,
    opts: &MilpOptions,
) -> Result<SolveResult, SolverError> {
    engine.solve_milp(model, opts)
}

/// Solves a pure LP and returns primal values and normalised duals.
pub fn solve_lp(engine: &dyn Engine, model: &ModelHandle, opts: &LpOptions) -> Result<SolveResult, SolverError> {
    engine.solve_lp(model, opts)
}
