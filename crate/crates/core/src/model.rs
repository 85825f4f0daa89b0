//! Power-system instance, solution artifacts and structural validation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(
    /// External bus identifier as it appears in case files.
    BusId
);
id_newtype!(
    /// External branch identifier as it appears in case files.
    BranchId
);
id_newtype!(
    /// External generator identifier as it appears in case files.
    GenId
);

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    /// Demand per period, MW.
    pub demand: Vec<f64>,
    #[serde(rename = "reference", default, skip_serializing_if = "is_false")]
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub id: BranchId,
    #[serde(rename = "from")]
    pub from_bus: BusId,
    #[serde(rename = "to")]
    pub to_bus: BusId,
    /// Per-unit on the case MVA base.
    pub susceptance: f64,
    /// Long-term thermal rating, MW.
    pub rate_long_term: f64,
    /// Short-term post-contingency rating, MW.
    pub rate_emergency: f64,
    /// Whether the operator may open this branch as a corrective action.
    /// Only honoured for non-radial branches.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub reconfigurable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    /// $/MWh
    pub cost_linear: f64,
    /// $/h while committed
    pub cost_no_load: f64,
    /// $ per start
    pub cost_startup: f64,
    pub ramp_hourly: f64,
    pub ramp_startup: f64,
    pub ramp_shutdown: f64,
    /// Ten-minute (outage response) ramp, also the reserve capability.
    pub ramp_10: f64,
    pub min_up: u32,
    pub min_down: u32,
    #[serde(default)]
    pub initial_status: bool,
    #[serde(default)]
    pub initial_output: f64,
}

/// A complete day-ahead instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCase {
    pub base_mva: f64,
    pub horizon: usize,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// Positional view of a validated case: every id resolved to a vector index.
#[derive(Debug, Clone)]
pub struct Topology {
    pub n_bus: usize,
    pub reference: usize,
    /// `(from, to)` bus positions per branch.
    pub ends: Vec<(usize, usize)>,
    /// Bus position per generator.
    pub gen_bus: Vec<usize>,
}

impl Topology {
    pub fn n_branch(&self) -> usize {
        self.ends.len()
    }

    /// Adjacency list of `(neighbor, branch)` pairs, skipping `removed` branches.
    pub fn adjacency(&self, removed: &[usize]) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n_bus];
        for (k, &(f, t)) in self.ends.iter().enumerate() {
            if removed.contains(&k) {
                continue;
            }
            adj[f].push((t, k));
            adj[t].push((f, k));
        }
        adj
    }

    /// Buses reachable from bus position 0 with `removed` branches taken out.
    pub fn reachable(&self, removed: &[usize]) -> Vec<bool> {
        let adj = self.adjacency(removed);
        let mut seen = vec![false; self.n_bus];
        if self.n_bus == 0 {
            return seen;
        }
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }
}

impl SystemCase {
    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn branch_position(&self, id: BranchId) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub fn generator_position(&self, id: GenId) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    /// Resolves ids to positions. Fails on dangling references or a missing
    /// reference bus; full invariant checking lives in [`validate_case`].
    pub fn topology(&self) -> Result<Topology, ModelError> {
        let pos: HashMap<BusId, usize> =
            self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let lookup = |id: BusId| pos.get(&id).copied().ok_or(ModelError::UnknownBus(id));
        let ends = self
            .branches
            .iter()
            .map(|br| Ok((lookup(br.from_bus)?, lookup(br.to_bus)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let gen_bus = self
            .generators
            .iter()
            .map(|g| lookup(g.bus))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let reference = self
            .buses
            .iter()
            .position(|b| b.is_reference)
            .ok_or(ModelError::NoReferenceBus)?;
        Ok(Topology { n_bus: self.buses.len(), reference, ends, gen_bus })
    }

    /// Total system demand in period `t`.
    pub fn total_demand(&self, t: usize) -> f64 {
        self.buses.iter().map(|b| b.demand[t]).sum()
    }

    /// Multiplies every demand value by `factor`.
    pub fn scale_demand(&mut self, factor: f64) {
        for b in &mut self.buses {
            for d in &mut b.demand {
                *d *= factor;
            }
        }
    }
}

/// One broken structural invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyHorizon,
    BadBaseMva(f64),
    DuplicateBus(BusId),
    DuplicateBranch(BranchId),
    DuplicateGenerator(GenId),
    DemandLength { bus: BusId, expected: usize, found: usize },
    NegativeDemand { bus: BusId, period: usize },
    ReferenceBusCount(usize),
    UnknownBranchBus { branch: BranchId, bus: BusId },
    SelfLoop(BranchId),
    BadSusceptance(BranchId),
    BadRating(BranchId),
    EmergencyBelowLongTerm(BranchId),
    UnknownGeneratorBus { generator: GenId, bus: BusId },
    GenerationLimits(GenId),
    NegativeRamp(GenId),
    MinUpDown(GenId),
    InitialOutput(GenId),
    Disconnected { isolated: Vec<BusId> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyHorizon => write!(f, "horizon must be at least 1"),
            BadBaseMva(v) => write!(f, "base_mva must be positive, got {v}"),
            DuplicateBus(id) => write!(f, "duplicate bus id {id}"),
            DuplicateBranch(id) => write!(f, "duplicate branch id {id}"),
            DuplicateGenerator(id) => write!(f, "duplicate generator id {id}"),
            DemandLength { bus, expected, found } => {
                write!(f, "bus {bus}: demand has {found} entries, expected {expected}")
            }
            NegativeDemand { bus, period } => write!(f, "bus {bus}: negative demand in period {period}"),
            ReferenceBusCount(n) => write!(f, "expected exactly one reference bus, found {n}"),
            UnknownBranchBus { branch, bus } => write!(f, "branch {branch}: unknown bus {bus}"),
            SelfLoop(id) => write!(f, "branch {id}: from and to bus coincide"),
            BadSusceptance(id) => write!(f, "branch {id}: susceptance must be positive"),
            BadRating(id) => write!(f, "branch {id}: long-term rating must be positive"),
            EmergencyBelowLongTerm(id) => {
                write!(f, "branch {id}: emergency rating below long-term rating")
            }
            UnknownGeneratorBus { generator, bus } => {
                write!(f, "generator {generator}: unknown bus {bus}")
            }
            GenerationLimits(id) => write!(f, "generator {id}: need 0 <= p_min <= p_max"),
            NegativeRamp(id) => write!(f, "generator {id}: ramp limits must be non-negative"),
            MinUpDown(id) => write!(f, "generator {id}: min_up and min_down must be >= 1"),
            InitialOutput(id) => write!(f, "generator {id}: initial output inconsistent with status"),
            Disconnected { isolated } => {
                let ids: Vec<String> = isolated.iter().map(|b| b.to_string()).collect();
                write!(f, "network is disconnected; buses cut off: {}", ids.join(", "))
            }
        }
    }
}

/// Every violated invariant of a case; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn duplicates<T: Copy + Eq + std::hash::Hash>(ids: impl Iterator<Item = T>) -> Vec<T> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for id in ids {
        if !seen.insert(id) && !dup.contains(&id) {
            dup.push(id);
        }
    }
    dup
}

/// Checks every structural invariant and reports all of them at once.
pub fn validate_case(case: &SystemCase) -> ValidationReport {
    use Violation::*;
    let mut v = Vec::new();

    if case.horizon == 0 {
        v.push(EmptyHorizon);
    }
    if !(case.base_mva > 0.0) {
        v.push(BadBaseMva(case.base_mva));
    }
    v.extend(duplicates(case.buses.iter().map(|b| b.id)).into_iter().map(DuplicateBus));
    v.extend(duplicates(case.branches.iter().map(|b| b.id)).into_iter().map(DuplicateBranch));
    v.extend(duplicates(case.generators.iter().map(|g| g.id)).into_iter().map(DuplicateGenerator));

    for bus in &case.buses {
        if bus.demand.len() != case.horizon {
            v.push(DemandLength { bus: bus.id, expected: case.horizon, found: bus.demand.len() });
        }
        if let Some(period) = bus.demand.iter().position(|d| !(*d >= 0.0)) {
            v.push(NegativeDemand { bus: bus.id, period });
        }
    }
    let refs = case.buses.iter().filter(|b| b.is_reference).count();
    if refs != 1 {
        v.push(ReferenceBusCount(refs));
    }

    let known: HashSet<BusId> = case.buses.iter().map(|b| b.id).collect();
    for br in &case.branches {
        for bus in [br.from_bus, br.to_bus] {
            if !known.contains(&bus) {
                v.push(UnknownBranchBus { branch: br.id, bus });
            }
        }
        if br.from_bus == br.to_bus {
            v.push(SelfLoop(br.id));
        }
        if !(br.susceptance > 0.0) {
            v.push(BadSusceptance(br.id));
        }
        if !(br.rate_long_term > 0.0) {
            v.push(BadRating(br.id));
        }
        if !(br.rate_emergency >= br.rate_long_term) {
            v.push(EmergencyBelowLongTerm(br.id));
        }
    }

    for g in &case.generators {
        if !known.contains(&g.bus) {
            v.push(UnknownGeneratorBus { generator: g.id, bus: g.bus });
        }
        if !(g.p_min >= 0.0 && g.p_min <= g.p_max) {
            v.push(GenerationLimits(g.id));
        }
        let ramps = [g.ramp_hourly, g.ramp_startup, g.ramp_shutdown, g.ramp_10];
        if ramps.iter().any(|r| !(*r >= 0.0)) {
            v.push(NegativeRamp(g.id));
        }
        if g.min_up < 1 || g.min_down < 1 {
            v.push(MinUpDown(g.id));
        }
        let consistent = if g.initial_status {
            g.initial_output >= g.p_min && g.initial_output <= g.p_max
        } else {
            g.initial_output == 0.0
        };
        if !consistent {
            v.push(InitialOutput(g.id));
        }
    }

    // Connectivity only makes sense once every branch endpoint resolves.
    if !case.buses.is_empty() && v.iter().all(|x| !matches!(x, UnknownBranchBus { .. })) {
        let pos: HashMap<BusId, usize> =
            case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let topo = Topology {
            n_bus: case.buses.len(),
            reference: 0,
            ends: case.branches.iter().map(|b| (pos[&b.from_bus], pos[&b.to_bus])).collect(),
            gen_bus: Vec::new(),
        };
        let seen = topo.reachable(&[]);
        let isolated: Vec<BusId> = case
            .buses
            .iter()
            .zip(&seen)
            .filter(|(_, s)| !**s)
            .map(|(b, _)| b.id)
            .collect();
        if !isolated.is_empty() {
            v.push(Disconnected { isolated });
        }
    }

    ValidationReport { violations: v }
}

/// Base-case schedule produced by a master (or extensive) solve.
///
/// All arrays are indexed positionally: `[generator][period]`,
/// `[branch][period]`, `[bus][period]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MucSolution {
    pub u: Vec<Vec<bool>>,
    pub v: Vec<Vec<bool>>,
    pub p: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub objective: f64,
}

impl MucSolution {
    pub fn horizon(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    /// Operating cost of the schedule: energy, no-load and start-up terms.
    pub fn operating_cost(&self, case: &SystemCase) -> f64 {
        let mut cost = 0.0;
        for (g, gen) in case.generators.iter().enumerate() {
            for t in 0..case.horizon {
                cost += gen.cost_linear * self.p[g][t]
                    + if self.u[g][t] { gen.cost_no_load } else { 0.0 }
                    + if self.v[g][t] { gen.cost_startup } else { 0.0 };
            }
        }
        cost
    }

    /// Largest nodal balance mismatch over all buses and periods, MW.
    pub fn max_balance_residual(&self, case: &SystemCase, topo: &Topology) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..case.horizon {
            let mut net = vec![0.0; topo.n_bus];
            for (g, &n) in topo.gen_bus.iter().enumerate() {
                net[n] += self.p[g][t];
            }
            for (k, &(f, to)) in topo.ends.iter().enumerate() {
                net[f] -= self.flow[k][t];
                net[to] += self.flow[k][t];
            }
            for (n, bus) in case.buses.iter().enumerate() {
                worst = worst.max((net[n] - bus.demand[t]).abs());
            }
        }
        worst
    }
}

/// Dual values of one post-contingency feasibility check.
///
/// Every inequality is posed as `lhs <= rhs` (the orientation the
/// formulation prints), so inequality duals are non-positive and
/// `sum(rhs * dual)` over all rows equals the optimal slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemDuals {
    /// Contingent maximum capacity, per generator.
    pub alpha_plus: Vec<f64>,
    /// Contingent minimum capacity, per generator.
    pub alpha_minus: Vec<f64>,
    /// Ten-minute ramp-up limit, per generator.
    pub beta_plus: Vec<f64>,
    /// Ten-minute ramp-down limit, per generator.
    pub beta_minus: Vec<f64>,
    /// Upper emergency limit, per branch.
    pub f_plus: Vec<f64>,
    /// Lower emergency limit, per branch.
    pub f_minus: Vec<f64>,
    /// Flow definition, per branch. The outaged branch holds the dual of
    /// its zero-flow row.
    pub s_flow: Vec<f64>,
    /// Nodal balance, per bus.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    ScreenedOut,
    Feasible,
    FeasibleViaSwitch,
    Infeasible,
}

/// Result of examining one `(contingency, period)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemOutcome {
    pub contingency: BranchId,
    pub period: usize,
    pub slack: f64,
    pub duals: Option<SubproblemDuals>,
    pub switch: Option<BranchId>,
    pub status: OutcomeStatus,
}

/// Benders feasibility cut over the master variables of one period:
/// `sum_g coef_u[g] * u[g][period] + coef_p[g] * p[g][period] + constant <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCut {
    pub origin: (BranchId, usize),
    pub coef_u: Vec<f64>,
    pub coef_p: Vec<f64>,
    pub constant: f64,
}

impl FeasibilityCut {
    pub fn period(&self) -> usize {
        self.origin.1
    }

    /// Left-hand side at a schedule; positive means the cut is violated.
    pub fn evaluate(&self, muc: &MucSolution) -> f64 {
        let t = self.period();
        self.constant
            + self
                .coef_u
                .iter()
                .zip(&self.coef_p)
                .enumerate()
                .map(|(g, (cu, cp))| cu * f64::from(u8::from(muc.u[g][t])) + cp * muc.p[g][t])
                .sum::<f64>()
    }

    /// Same origin and coefficients within `tol`.
    pub fn same_as(&self, other: &FeasibilityCut, tol: f64) -> bool {
        self.origin == other.origin
            && (self.constant - other.constant).abs() <= tol
            && self.coef_u.iter().zip(&other.coef_u).all(|(a, b)| (a - b).abs() <= tol)
            && self.coef_p.iter().zip(&other.coef_p).all(|(a, b)| (a - b).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tri3_is_valid() {
        assert!(validate_case(&fixtures::tri3()).is_valid());
    }

    #[test]
    fn emergency_below_long_term_is_named() {
        let mut case = fixtures::tri3();
        case.branches[1].rate_emergency = case.branches[1].rate_long_term - 1.0;
        let report = validate_case(&case);
        assert_eq!(report.violations, vec![Violation::EmergencyBelowLongTerm(case.branches[1].id)]);
    }

    #[test]
    fn isolated_bus_is_reported() {
        let mut case = fixtures::tri3();
        // drop both branches touching bus 3
        case.branches.retain(|b| b.from_bus != BusId(3) && b.to_bus != BusId(3));
        let report = validate_case(&case);
        assert!(report
            .violations
            .contains(&Violation::Disconnected { isolated: vec![BusId(3)] }));
    }

    #[test]
    fn generator_checks() {
        let mut case = fixtures::tri3();
        case.generators[0].p_min = 500.0;
        case.generators[1].bus = BusId(99);
        case.generators[1].min_up = 0;
        let report = validate_case(&case);
        assert!(report.violations.contains(&Violation::GenerationLimits(GenId(1))));
        assert!(report
            .violations
            .contains(&Violation::UnknownGeneratorBus { generator: GenId(2), bus: BusId(99) }));
        assert!(report.violations.contains(&Violation::MinUpDown(GenId(2))));
    }

    #[test]
    fn reference_and_demand_checks() {
        let mut case = fixtures::tri3();
        case.buses[0].is_reference = false;
        case.buses[1].demand.push(1.0);
        case.buses[2].demand[0] = -1.0;
        let report = validate_case(&case);
        assert!(report.violations.contains(&Violation::ReferenceBusCount(0)));
        assert!(report.violations.contains(&Violation::DemandLength {
            bus: BusId(2),
            expected: 1,
            found: 2
        }));
        assert!(report.violations.contains(&Violation::NegativeDemand { bus: BusId(3), period: 0 }));
    }

    #[test]
    fn duplicates_and_self_loops() {
        let mut case = fixtures::tri3();
        case.branches[2].id = case.branches[0].id;
        case.branches[1].to_bus = case.branches[1].from_bus;
        let report = validate_case(&case);
        assert!(report.violations.contains(&Violation::DuplicateBranch(case.branches[0].id)));
        assert!(report.violations.contains(&Violation::SelfLoop(case.branches[1].id)));
    }
}
