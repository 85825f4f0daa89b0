//! Reference implementations used as test oracles. Nothing here calls into
//! the library's network, formulation or solver code.

#![allow(dead_code)]

use std::collections::VecDeque;

use scuc_core::{Branch, BranchId, Bus, BusId, SystemCase};

/// Bus positions of each branch end, resolved by linear search.
pub fn ends(case: &SystemCase) -> Vec<(usize, usize)> {
    let pos = |id: BusId| case.buses.iter().position(|b| b.id == id).expect("known bus");
    case.branches.iter().map(|b| (pos(b.from_bus), pos(b.to_bus))).collect()
}

pub fn reference(case: &SystemCase) -> usize {
    case.buses.iter().position(|b| b.is_reference).expect("reference bus")
}

/// Component label per bus with the `removed` branch positions taken out.
pub fn components(case: &SystemCase, removed: &[usize]) -> Vec<usize> {
    let e = ends(case);
    let n = case.buses.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for (k, &(f, t)) in e.iter().enumerate() {
                if removed.contains(&k) {
                    continue;
                }
                let other = if f == a {
                    t
                } else if t == a {
                    f
                } else {
                    continue;
                };
                if label[other] == usize::MAX {
                    label[other] = next;
                    queue.push_back(other);
                }
            }
        }
        next += 1;
    }
    label
}

pub fn connected_without(case: &SystemCase, removed: &[usize]) -> bool {
    components(case, removed).iter().all(|&c| c == 0)
}

/// Branch positions whose removal splits the network.
pub fn brute_force_bridges(case: &SystemCase) -> Vec<usize> {
    (0..case.branches.len()).filter(|&k| !connected_without(case, &[k])).collect()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        assert!(a[piv][col].abs() > 1e-12, "singular system");
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// DC branch flows in MW for bus injections in MW, with the `removed`
/// branch positions out of service. Each island is solved around its own
/// slack bus (the case reference if present, else its lowest position),
/// which absorbs any mismatch.
pub fn dc_flows(case: &SystemCase, removed: &[usize], injection: &[f64]) -> Vec<f64> {
    let e = ends(case);
    let label = components(case, removed);
    let n = case.buses.len();
    let refb = reference(case);
    let mut theta = vec![0.0; n];
    let islands = label.iter().max().map_or(0, |m| m + 1);
    for island in 0..islands {
        let members: Vec<usize> = (0..n).filter(|&i| label[i] == island).collect();
        let slack = if label[refb] == island { refb } else { members[0] };
        let free: Vec<usize> = members.iter().copied().filter(|&i| i != slack).collect();
        if free.is_empty() {
            continue;
        }
        let idx = |bus: usize| free.iter().position(|&f| f == bus);
        let mut a = vec![vec![0.0; free.len()]; free.len()];
        for (k, &(f, t)) in e.iter().enumerate() {
            if removed.contains(&k) || label[f] != island {
                continue;
            }
            let y = case.base_mva * case.branches[k].susceptance;
            if let Some(i) = idx(f) {
                a[i][i] += y;
            }
            if let Some(j) = idx(t) {
                a[j][j] += y;
            }
            if let (Some(i), Some(j)) = (idx(f), idx(t)) {
                a[i][j] -= y;
                a[j][i] -= y;
            }
        }
        let b: Vec<f64> = free.iter().map(|&i| injection[i]).collect();
        for (i, v) in free.iter().zip(gauss_solve(a, b)) {
            theta[*i] = v;
        }
    }
    e.iter()
        .enumerate()
        .map(|(k, &(f, t))| {
            if removed.contains(&k) {
                0.0
            } else {
                case.base_mva * case.branches[k].susceptance * (theta[f] - theta[t])
            }
        })
        .collect()
}

/// Hop distance from every bus to the nearest endpoint of branch `c`.
pub fn hop_distance(case: &SystemCase, c: usize) -> Vec<usize> {
    let e = ends(case);
    let mut dist = vec![usize::MAX; case.buses.len()];
    let mut queue = VecDeque::new();
    for b in [e[c].0, e[c].1] {
        dist[b] = 0;
        queue.push_back(b);
    }
    while let Some(a) = queue.pop_front() {
        for &(f, t) in &e {
            for (x, y) in [(f, t), (t, f)] {
                if x == a && dist[y] == usize::MAX {
                    dist[y] = dist[a] + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    dist
}

/// Builds a bare network case (no generators) from bus count and edges.
pub fn network_case(n_bus: usize, edges: &[(usize, usize)]) -> SystemCase {
    SystemCase {
        base_mva: 100.0,
        horizon: 1,
        buses: (0..n_bus)
            .map(|i| Bus { id: BusId(i as u32 + 1), demand: vec![0.0], is_reference: i == 0 })
            .collect(),
        branches: edges
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| Branch {
                id: BranchId(k as u32 + 1),
                from_bus: BusId(a as u32 + 1),
                to_bus: BusId(b as u32 + 1),
                susceptance: 1.0 + (k % 7) as f64,
                rate_long_term: 100.0,
                rate_emergency: 120.0,
                reconfigurable: true,
            })
            .collect(),
        generators: Vec::new(),
    }
}

/// Finite union of closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet(pub Vec<(f64, f64)>);

const EPS: f64 = 1e-9;

impl IntervalSet {
    pub fn all() -> Self {
        Self(vec![(f64::NEG_INFINITY, f64::INFINITY)])
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps the points with `a * x <= b`.
    pub fn restrict(&mut self, a: f64, b: f64) {
        let cut = if a.abs() < 1e-12 {
            if b >= -EPS {
                return;
            }
            Self::empty()
        } else if a > 0.0 {
            Self(vec![(f64::NEG_INFINITY, b / a)])
        } else {
            Self(vec![(b / a, f64::INFINITY)])
        };
        *self = self.intersect(&cut);
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a, b) in &self.0 {
            for &(c, d) in &other.0 {
                let (lo, hi) = (a.max(c), b.min(d));
                if lo <= hi + EPS {
                    out.push((lo, hi.max(lo)));
                }
            }
        }
        Self(out)
    }

    pub fn union(&mut self, other: Self) {
        self.0.extend(other.0);
    }

    /// Minimum of `slope * x + offset` over the set.
    pub fn minimize(&self, slope: f64, offset: f64) -> Option<f64> {
        self.0
            .iter()
            .flat_map(|&(lo, hi)| [lo, hi])
            .filter(|x| x.is_finite())
            .map(|x| slope * x + offset)
            .min_by(f64::total_cmp)
    }
}

/// Post-contingency recourse allowed by [`two_unit_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recourse {
    /// Base case only.
    None,
    /// Ten-minute redispatch after every non-radial outage.
    Redispatch,
    /// Redispatch plus opening at most one reconfigurable non-radial line.
    Switching,
}

/// Affine map `x -> a + b x`, sampled from two evaluations.
fn affine(f: impl Fn(f64) -> Vec<f64>) -> Vec<(f64, f64)> {
    let (f0, f1) = (f(0.0), f(1.0));
    f0.iter().zip(&f1).map(|(a, b)| (*a, b - a)).collect()
}

/// Optimal cost of a single-period, two-unit case by enumeration of the
/// commitment patterns. With `x` the output of unit 0 and `D - x` that of
/// unit 1, every constraint (limits, reserve rows, line limits, and each
/// outage's redispatch feasibility) reduces to a set of admissible `x`.
///
/// Requires hourly, start-up and shut-down ramps of at least `p_max` and
/// minimum up and down times of one period, so that the inter-temporal
/// rows are slack.
pub fn two_unit_oracle(case: &SystemCase, recourse: Recourse) -> Option<f64> {
    assert_eq!(case.horizon, 1);
    assert_eq!(case.generators.len(), 2);
    for g in &case.generators {
        assert!(g.ramp_hourly >= g.p_max && g.ramp_startup >= g.p_max && g.ramp_shutdown >= g.p_max);
        assert!(g.min_up <= 1 && g.min_down <= 1);
    }
    let e = ends(case);
    let n = case.buses.len();
    let demand: Vec<f64> = case.buses.iter().map(|b| b.demand[0]).collect();
    let total: f64 = demand.iter().sum();
    let gen_bus: Vec<usize> = case
        .generators
        .iter()
        .map(|g| case.buses.iter().position(|b| b.id == g.bus).unwrap())
        .collect();
    let injection = |x: f64| -> Vec<f64> {
        let mut inj: Vec<f64> = demand.iter().map(|d| -d).collect();
        inj[gen_bus[0]] += x;
        inj[gen_bus[1]] += total - x;
        inj
    };
    let bridges = brute_force_bridges(case);
    let non_radial: Vec<usize> = (0..e.len()).filter(|k| !bridges.contains(k)).collect();
    let (g0, g1) = (&case.generators[0], &case.generators[1]);

    let mut best: Option<f64> = None;
    for (u0, u1) in [(false, false), (true, false), (false, true), (true, true)] {
        let on = |u: bool| if u { 1.0 } else { 0.0 };
        let (a0, a1) = (on(u0), on(u1));
        let start = |u: bool, init: bool| if u && !init { 1.0 } else { 0.0 };
        let fixed = g0.cost_no_load * a0
            + g1.cost_no_load * a1
            + g0.cost_startup * start(u0, g0.initial_status)
            + g1.cost_startup * start(u1, g1.initial_status);

        // Limits of both units expressed in x.
        let capacity = |set: &mut IntervalSet| {
            set.restrict(-1.0, -g0.p_min * a0);
            set.restrict(1.0, g0.p_max * a0);
            set.restrict(1.0, total - g1.p_min * a1);
            set.restrict(-1.0, g1.p_max * a1 - total);
        };
        let mut x = IntervalSet::all();
        capacity(&mut x);
        // Reserve: each unit's output is covered by the other's reserve,
        // which is bounded by its ten-minute ramp and its headroom.
        x.restrict(1.0, g1.ramp_10 * a1);
        x.restrict(0.0, g1.p_max * a1 - total);
        x.restrict(-1.0, g0.ramp_10 * a0 - total);
        x.restrict(0.0, g0.p_max * a0 - total);
        for (k, (f0, slope)) in affine(|v| dc_flows(case, &[], &injection(v))).into_iter().enumerate() {
            let r = case.branches[k].rate_long_term;
            x.restrict(slope, r - f0);
            x.restrict(-slope, r + f0);
        }

        if recourse != Recourse::None {
            let rho = (g0.ramp_10 * a0).min(g1.ramp_10 * a1);
            for &c in &non_radial {
                let mut options = vec![vec![c]];
                if recourse == Recourse::Switching {
                    for &j in &non_radial {
                        if j != c && case.branches[j].reconfigurable {
                            options.push(vec![c, j]);
                        }
                    }
                }
                let mut reach = IntervalSet::empty();
                for removed in options {
                    // Admissible contingent outputs y of unit 0.
                    let mut y = IntervalSet::all();
                    capacity(&mut y);
                    for (k, (f0, slope)) in
                        affine(|v| dc_flows(case, &removed, &injection(v))).into_iter().enumerate()
                    {
                        if removed.contains(&k) {
                            continue;
                        }
                        let r = case.branches[k].rate_emergency;
                        y.restrict(slope, r - f0);
                        y.restrict(-slope, r + f0);
                    }
                    let label = components(case, &removed);
                    for island in 0..=*label.iter().max().unwrap() {
                        let (b0, s) = affine(|v| {
                            let inj = injection(v);
                            vec![(0..n).filter(|&i| label[i] == island).map(|i| inj[i]).sum()]
                        })[0];
                        y.restrict(s, -b0 + 1e-9);
                        y.restrict(-s, b0 + 1e-9);
                    }
                    // x must lie within rho of some admissible y.
                    reach.union(IntervalSet(y.0.iter().map(|&(lo, hi)| (lo - rho, hi + rho)).collect()));
                }
                x = x.intersect(&reach);
            }
        }
        let slope = g0.cost_linear - g1.cost_linear;
        if let Some(v) = x.minimize(slope, g1.cost_linear * total + fixed) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// Minimum of `c . x` over `{x : A x <= b}` in two variables, by
/// enumerating every pairwise intersection of constraint lines. `None`
/// when no vertex is feasible.
pub fn vertex_lp_2d(c: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let ([a, b], p) = rows[i];
            let ([d, e], q) = rows[j];
            let det = a * e - b * d;
            if det.abs() < 1e-9 {
                continue;
            }
            let x = (p * e - b * q) / det;
            let y = (a * q - p * d) / det;
            if rows.iter().all(|([r, s], t)| r * x + s * y <= t + 1e-7) {
                let v = c[0] * x + c[1] * y;
                best = Some(best.map_or(v, |w: f64| w.min(v)));
            }
        }
    }
    best
}

/// Relative difference with a unit floor on the scale.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
