//! Graph and DC sensitivity analysis: bridges, PTDF, LODF, connectivity
//! and the ranked list of switching candidates closest to each contingency.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::NetworkError;
use crate::model::{BranchId, SystemCase, Topology};

/// Denominator below which `1 - ptdf_self` counts as zero.
pub const RADIAL_TOLERANCE: f64 = 1e-8;

/// Default length of the closest-branch candidate list.
pub const DEFAULT_CBCE_SIZE: usize = 20;

/// Branch positions of bridges, found with Tarjan's low-link over edge ids
/// so that parallel branches protect each other.
pub fn find_bridges(topo: &Topology) -> Vec<usize> {
    let adj = topo.adjacency(&[]);
    let n = topo.n_bus;
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut bridges = Vec::new();
    let mut timer = 0;

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        // (node, edge used to enter it, next adjacency index)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        while let Some(frame) = stack.last_mut() {
            let (node, via, idx) = *frame;
            if idx < adj[node].len() {
                frame.2 += 1;
                let (next, edge) = adj[node][idx];
                if edge == via {
                    continue;
                }
                if disc[next] == usize::MAX {
                    disc[next] = timer;
                    low[next] = timer;
                    timer += 1;
                    stack.push((next, edge, 0));
                } else {
                    low[node] = low[node].min(disc[next]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[node]);
                    if low[node] > disc[parent] {
                        bridges.push(via);
                    }
                }
            }
        }
    }
    bridges.sort_unstable();
    bridges
}

/// Splits the branches of a connected case into `(bridges, non_radial)`,
/// both as sorted branch ids.
pub fn classify_radial(case: &SystemCase) -> Result<(Vec<BranchId>, Vec<BranchId>), NetworkError> {
    let topo = case.topology()?;
    if !is_connected(&topo, &[]) {
        return Err(NetworkError::Disconnected);
    }
    let bridges = find_bridges(&topo);
    let ids = |pos: &mut dyn Iterator<Item = usize>| -> Vec<BranchId> {
        let mut v: Vec<BranchId> = pos.map(|k| case.branches[k].id).collect();
        v.sort_unstable();
        v
    };
    let non_radial = ids(&mut (0..topo.n_branch()).filter(|k| !bridges.contains(k)));
    Ok((ids(&mut bridges.into_iter()), non_radial))
}

pub fn is_connected(topo: &Topology, removed: &[usize]) -> bool {
    topo.reachable(removed).iter().all(|&s| s)
}

/// True iff every bus stays in one island after removing `removed`.
pub fn check_connectivity(case: &SystemCase, removed: &[BranchId]) -> Result<bool, NetworkError> {
    let topo = case.topology()?;
    let positions = removed
        .iter()
        .map(|&id| case.branch_position(id).ok_or(NetworkError::UnknownBranch(id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(is_connected(&topo, &positions))
}

/// PTDF matrix (branches x buses): MW on each branch per MW injected at a
/// bus and withdrawn at `reference`. The reference column is zero.
pub fn ptdf_matrix(
    case: &SystemCase,
    topo: &Topology,
    reference: usize,
) -> Result<DMatrix<f64>, NetworkError> {
    let n = topo.n_bus;
    let n_k = topo.n_branch();
    // Reduced index: buses other than the reference.
    let reduced: Vec<Option<usize>> = (0..n)
        .scan(0usize, |next, i| {
            Some(if i == reference {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();
    let m = n.saturating_sub(1);
    let mut b = DMatrix::<f64>::zeros(m, m);
    for (k, &(f, t)) in topo.ends.iter().enumerate() {
        let bk = case.branches[k].susceptance;
        if let Some(i) = reduced[f] {
            b[(i, i)] += bk;
        }
        if let Some(j) = reduced[t] {
            b[(j, j)] += bk;
        }
        if let (Some(i), Some(j)) = (reduced[f], reduced[t]) {
            b[(i, j)] -= bk;
            b[(j, i)] -= bk;
        }
    }
    let x = if m == 0 {
        DMatrix::zeros(0, 0)
    } else {
        b.lu().try_inverse().ok_or(NetworkError::SingularSusceptance)?
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NetworkError::SingularSusceptance);
    }
    let mut ptdf = DMatrix::<f64>::zeros(n_k, n);
    for (k, &(f, t)) in topo.ends.iter().enumerate() {
        let bk = case.branches[k].susceptance;
        for bus in 0..n {
            let Some(col) = reduced[bus] else { continue };
            let xf = reduced[f].map_or(0.0, |r| x[(r, col)]);
            let xt = reduced[t].map_or(0.0, |r| x[(r, col)]);
            ptdf[(k, bus)] = bk * (xf - xt);
        }
    }
    Ok(ptdf)
}

/// PTDF with respect to the case's designated reference bus.
pub fn compute_ptdf(case: &SystemCase) -> Result<DMatrix<f64>, NetworkError> {
    let topo = case.topology()?;
    if !is_connected(&topo, &[]) {
        return Err(NetworkError::Disconnected);
    }
    ptdf_matrix(case, &topo, topo.reference)
}

/// LODF columns for the outages in `non_radial` (branch positions):
/// `lodf[(k, i)]` is the share of the pre-outage flow on `non_radial[i]`
/// that moves onto branch `k`; the diagonal entry is -1.
pub fn lodf_matrix(
    case: &SystemCase,
    topo: &Topology,
    ptdf: &DMatrix<f64>,
    non_radial: &[usize],
) -> Result<DMatrix<f64>, NetworkError> {
    let n_k = topo.n_branch();
    let mut lodf = DMatrix::<f64>::zeros(n_k, non_radial.len());
    for (col, &c) in non_radial.iter().enumerate() {
        let (f, t) = topo.ends[c];
        let transfer = |k: usize| ptdf[(k, f)] - ptdf[(k, t)];
        let denom = 1.0 - transfer(c);
        if denom.abs() < RADIAL_TOLERANCE {
            return Err(NetworkError::NumericallyRadial(case.branches[c].id));
        }
        for k in 0..n_k {
            lodf[(k, col)] = if k == c { -1.0 } else { transfer(k) / denom };
        }
    }
    Ok(lodf)
}

/// Hop distance from every bus to the nearer endpoint of branch `c`.
fn hop_distances(topo: &Topology, c: usize) -> Vec<usize> {
    let adj = topo.adjacency(&[]);
    let mut dist = vec![usize::MAX; topo.n_bus];
    let (f, t) = topo.ends[c];
    let mut queue = VecDeque::new();
    for s in [f, t] {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(n) = queue.pop_front() {
        for &(m, _) in &adj[n] {
            if dist[m] == usize::MAX {
                dist[m] = dist[n] + 1;
                queue.push_back(m);
            }
        }
    }
    dist
}

/// Closest-branch candidate list for contingency `c` drawn from `pool`
/// (branch positions): ascending hop distance between endpoints, ties by
/// branch id, truncated to `size`.
pub fn rank_candidates(
    case: &SystemCase,
    topo: &Topology,
    c: usize,
    pool: &[usize],
    size: usize,
) -> Vec<usize> {
    let dist = hop_distances(topo, c);
    let mut scored: Vec<(usize, BranchId, usize)> = pool
        .iter()
        .filter(|&&k| k != c)
        .map(|&k| {
            let (f, t) = topo.ends[k];
            (dist[f].min(dist[t]), case.branches[k].id, k)
        })
        .collect();
    scored.sort_unstable();
    scored.into_iter().take(size).map(|(_, _, k)| k).collect()
}

/// Ranked switching candidates for contingency `c`, as branch ids.
pub fn rank_cbce(case: &SystemCase, c: BranchId, size: usize) -> Result<Vec<BranchId>, NetworkError> {
    let topo = case.topology()?;
    let cpos = case.branch_position(c).ok_or(NetworkError::UnknownBranch(c))?;
    let bridges = find_bridges(&topo);
    if bridges.contains(&cpos) {
        return Err(NetworkError::Bridge(c));
    }
    let pool: Vec<usize> = (0..topo.n_branch())
        .filter(|k| !bridges.contains(k) && case.branches[*k].reconfigurable)
        .collect();
    Ok(rank_candidates(case, &topo, cpos, &pool, size)
        .into_iter()
        .map(|k| case.branches[k].id)
        .collect())
}

/// Precomputed sensitivities of one case. Immutable once built.
#[derive(Debug, Clone)]
pub struct NetworkSensitivities {
    pub topology: Topology,
    /// Bridge branch positions, ascending.
    pub bridges: Vec<usize>,
    /// Non-radial branch positions, ascending: the contingency set.
    pub non_radial: Vec<usize>,
    /// Non-radial branches the operator may open.
    pub reconfigurable: Vec<usize>,
    pub ptdf: DMatrix<f64>,
    /// Branches x non-radial outages.
    pub lodf: DMatrix<f64>,
    /// Column of `lodf` for each branch position, `None` for bridges.
    lodf_column: Vec<Option<usize>>,
    /// Candidate list per non-radial outage, aligned with `non_radial`.
    pub cbce: Vec<Vec<usize>>,
}

impl NetworkSensitivities {
    pub fn build(case: &SystemCase, cbce_size: usize) -> Result<Self, NetworkError> {
        let topology = case.topology()?;
        if !is_connected(&topology, &[]) {
            return Err(NetworkError::Disconnected);
        }
        let bridges = find_bridges(&topology);
        let non_radial: Vec<usize> =
            (0..topology.n_branch()).filter(|k| !bridges.contains(k)).collect();
        let reconfigurable: Vec<usize> = non_radial
            .iter()
            .copied()
            .filter(|&k| case.branches[k].reconfigurable)
            .collect();
        let ptdf = ptdf_matrix(case, &topology, topology.reference)?;
        let lodf = lodf_matrix(case, &topology, &ptdf, &non_radial)?;
        let mut lodf_column = vec![None; topology.n_branch()];
        for (col, &c) in non_radial.iter().enumerate() {
            lodf_column[c] = Some(col);
        }
        let cbce = non_radial
            .iter()
            .map(|&c| rank_candidates(case, &topology, c, &reconfigurable, cbce_size))
            .collect();
        Ok(Self { topology, bridges, non_radial, reconfigurable, ptdf, lodf, lodf_column, cbce })
    }

    /// LODF of monitored branch `k` for the outage of non-radial branch `c`.
    ///
    /// # Panics
    /// If `c` is a bridge.
    pub fn lodf(&self, k: usize, c: usize) -> f64 {
        let col = self.lodf_column[c].expect("LODF requested for a radial branch");
        self.lodf[(k, col)]
    }

    pub fn is_non_radial(&self, k: usize) -> bool {
        self.lodf_column[k].is_some()
    }

    /// Candidate list for outage `c` (branch position).
    pub fn cbce_for(&self, c: usize) -> &[usize] {
        let col = self.lodf_column[c].expect("candidate list requested for a radial branch");
        &self.cbce[col]
    }

    /// Branch flows for a nodal injection vector (MW, sums to zero).
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        (0..self.ptdf.nrows())
            .map(|k| injection.iter().enumerate().map(|(n, p)| self.ptdf[(k, n)] * p).sum())
            .collect()
    }

    /// Post-outage flows predicted from pre-outage flows.
    pub fn post_outage_flows(&self, flows: &[f64], c: usize) -> Vec<f64> {
        flows
            .iter()
            .enumerate()
            .map(|(k, f)| if k == c { 0.0 } else { f + self.lodf(k, c) * flows[c] })
            .collect()
    }
}
