//! Small hand-built networks and a seeded generator of meshed test cases.
//!
//! The hand-built cases are deliberately tiny so that every expected value
//! can be checked by enumeration:
//!
//! * `TRI3`: three buses in a triangle, equal susceptances, a cheap unit at
//!   bus 1, an expensive unit at bus 3 and load at bus 2.
//! * `STAR4`: a hub with three leaves; every branch is a bridge.
//! * `FIG1X`: four buses where bus 1 feeds a load at bus 4 over a direct
//!   line (3), a two-line internal path (2 then 4) and a weak external
//!   corridor through bus 3 (5 then 6). Losing line 3 pushes most of its
//!   flow onto the internal path and overloads line 4; opening line 2
//!   reroutes everything through the external corridor.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::model::{Branch, BranchId, Bus, BusId, GenId, Generator, SystemCase};
use crate::network;

/// Load at bus 4 of FIG1X where SCUC needs the local unit but switching
/// does not.
pub const FIG1X_L0: f64 = 80.0;
/// Load at bus 4 of FIG1X where SCUC is infeasible without switching.
pub const FIG1X_L1: f64 = 100.0;

fn bus(id: u32, demand: Vec<f64>, reference: bool) -> Bus {
    Bus { id: BusId(id), demand, is_reference: reference }
}

fn branch(id: u32, from: u32, to: u32, b: f64, rate: f64, emergency: f64) -> Branch {
    Branch {
        id: BranchId(id),
        from_bus: BusId(from),
        to_bus: BusId(to),
        susceptance: b,
        rate_long_term: rate,
        rate_emergency: emergency,
        reconfigurable: true,
    }
}

#[allow(clippy::too_many_arguments)]
fn unit(
    id: u32,
    at: u32,
    p_min: f64,
    p_max: f64,
    cost: f64,
    no_load: f64,
    startup: f64,
    ramp_10: f64,
    initial: Option<f64>,
) -> Generator {
    Generator {
        id: GenId(id),
        bus: BusId(at),
        p_min,
        p_max,
        cost_linear: cost,
        cost_no_load: no_load,
        cost_startup: startup,
        ramp_hourly: p_max,
        ramp_startup: p_max,
        ramp_shutdown: p_max,
        ramp_10,
        min_up: 1,
        min_down: 1,
        initial_status: initial.is_some(),
        initial_output: initial.unwrap_or(0.0),
    }
}

/// Three-bus triangle with 150 MW at bus 2 for one period.
pub fn tri3() -> SystemCase {
    tri3_with_demand(&[150.0])
}

/// TRI3 with the bus-2 demand profile given explicitly; the horizon is its
/// length.
pub fn tri3_with_demand(demand: &[f64]) -> SystemCase {
    let horizon = demand.len();
    SystemCase {
        base_mva: 100.0,
        horizon,
        buses: vec![
            bus(1, vec![0.0; horizon], true),
            bus(2, demand.to_vec(), false),
            bus(3, vec![0.0; horizon], false),
        ],
        branches: vec![
            branch(1, 1, 2, 10.0, 200.0, 250.0),
            branch(2, 1, 3, 10.0, 200.0, 250.0),
            branch(3, 2, 3, 10.0, 200.0, 250.0),
        ],
        generators: vec![
            unit(1, 1, 20.0, 300.0, 10.0, 100.0, 500.0, 100.0, Some(150.0)),
            unit(2, 3, 0.0, 250.0, 30.0, 50.0, 200.0, 200.0, Some(0.0)),
        ],
    }
}

/// TRI3 with 50 MW moved onto bus 3, a slow-ramping cheap unit and a tight
/// emergency rating on branch 1 (bus 1 to bus 2). Losing branch 2 leaves
/// branch 1 as bus 1's only outlet, so the cheap unit must be backed down
/// preventively.
pub fn tri3_tight() -> SystemCase {
    let mut case = tri3();
    case.buses[2].demand = vec![50.0];
    case.generators[0].ramp_10 = 30.0;
    case.branches[0].rate_long_term = 150.0;
    case.branches[0].rate_emergency = 160.0;
    case
}

/// TRI3 plus a radial spur from bus 3 to a new bus 4 carrying 20 MW.
pub fn tri3_spur() -> SystemCase {
    let mut case = tri3();
    case.buses.push(bus(4, vec![20.0], false));
    case.branches.push(branch(4, 3, 4, 10.0, 200.0, 250.0));
    case
}

/// Hub bus 1 with a generator and three radial leaves carrying load.
pub fn star4() -> SystemCase {
    SystemCase {
        base_mva: 100.0,
        horizon: 1,
        buses: vec![
            bus(1, vec![0.0], true),
            bus(2, vec![30.0], false),
            bus(3, vec![30.0], false),
            bus(4, vec![30.0], false),
        ],
        branches: vec![
            branch(1, 1, 2, 10.0, 100.0, 120.0),
            branch(2, 1, 3, 10.0, 100.0, 120.0),
            branch(3, 1, 4, 10.0, 100.0, 120.0),
        ],
        generators: vec![
            unit(1, 1, 0.0, 200.0, 10.0, 50.0, 0.0, 200.0, Some(90.0)),
            unit(2, 1, 0.0, 200.0, 20.0, 50.0, 0.0, 200.0, Some(0.0)),
        ],
    }
}

/// FIG1X for one period with `load` MW at bus 4.
///
/// Two identical cheap units sit at bus 1 (both are needed for the reserve
/// requirement) and a small expensive unit without ten-minute ramp sits at
/// bus 4. Conductances of the three bus-1-to-bus-4 paths are 10 (line 3),
/// 10 (lines 2+4) and 2 (lines 5+6), so losing line 3 puts 10/12 of the
/// transfer on line 4 (emergency rating 60 MW).
pub fn fig1x(load: f64) -> SystemCase {
    SystemCase {
        base_mva: 100.0,
        horizon: 1,
        buses: vec![
            bus(1, vec![0.0], true),
            bus(2, vec![0.0], false),
            bus(3, vec![0.0], false),
            bus(4, vec![load], false),
        ],
        branches: vec![
            branch(2, 1, 2, 20.0, 100.0, 120.0),
            branch(3, 1, 4, 10.0, 100.0, 120.0),
            branch(4, 2, 4, 20.0, 50.0, 60.0),
            branch(5, 1, 3, 4.0, 100.0, 120.0),
            branch(6, 3, 4, 4.0, 100.0, 120.0),
        ],
        generators: vec![
            unit(1, 1, 0.0, 150.0, 10.0, 100.0, 0.0, 150.0, Some(load)),
            unit(2, 1, 0.0, 150.0, 12.0, 100.0, 0.0, 150.0, Some(0.0)),
            unit(4, 4, 0.0, 20.0, 50.0, 0.0, 0.0, 0.0, None),
        ],
    }
}

/// FIG1X with the external corridor de-rated so that no single opening
/// relieves the loss of line 3.
pub fn fig1x_derated(load: f64) -> SystemCase {
    let mut case = fig1x(load);
    for br in case.branches.iter_mut().filter(|b| b.id.0 >= 5) {
        br.rate_long_term = 15.0;
        br.rate_emergency = 20.0;
    }
    case
}

/// Scales every emergency and long-term rating by `factor`.
pub fn scale_ratings(case: &mut SystemCase, factor: f64) {
    for br in &mut case.branches {
        br.rate_long_term *= factor;
        br.rate_emergency *= factor;
    }
}

/// Size parameters for [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub buses: usize,
    pub generators: usize,
    pub horizon: usize,
}

/// Small meshed case: 4-8 buses, 3-5 units, 4-8 periods, all drawn from
/// `seed`.
pub fn random_meshed(seed: u64) -> SystemCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GenSpec {
        buses: rng.gen_range(4..=8),
        generators: rng.gen_range(3..=5),
        horizon: rng.gen_range(4..=8),
    };
    generate(spec, rng.gen())
}

/// A 24-bus, 10-unit, 4-period case with RTS-like density.
pub fn rts_like(seed: u64) -> SystemCase {
    generate(GenSpec { buses: 24, generators: 10, horizon: 4 }, seed)
}

/// Seeded meshed network whose proportional reference dispatch is N-1
/// secure by construction. Ratings are set just above the reference flows
/// so that a purely economic dispatch usually is not.
pub fn generate(spec: GenSpec, seed: u64) -> SystemCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.buses.max(2);
    let horizon = spec.horizon.max(1);

    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for i in 2..=n as u32 {
        let j = rng.gen_range(1..i);
        pairs.push((j, i));
    }
    let extra = n / 2 + 1;
    let mut attempts = 0;
    while pairs.len() < n - 1 + extra && attempts < 200 {
        attempts += 1;
        let a = rng.gen_range(1..=n as u32);
        let b = rng.gen_range(1..=n as u32);
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&(a, b)) {
            pairs.push((a, b));
        }
    }
    let branches: Vec<Branch> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            branch(k as u32 + 1, a, b, rng.gen_range(5.0..20.0f64).round(), 1.0, 1.0)
        })
        .collect();

    let generators: Vec<Generator> = (0..spec.generators.max(2))
        .map(|g| {
            let p_max: f64 = rng.gen_range(150.0..250.0f64).round();
            let p_min = (p_max * rng.gen_range(0.1..0.3)).round();
            Generator {
                id: GenId(g as u32 + 1),
                bus: BusId(rng.gen_range(1..=n as u32)),
                p_min,
                p_max,
                cost_linear: rng.gen_range(10.0..50.0f64).round(),
                cost_no_load: rng.gen_range(50.0..300.0f64).round(),
                cost_startup: rng.gen_range(100.0..1000.0f64).round(),
                ramp_hourly: (0.5 * p_max).round(),
                ramp_startup: (0.5 * p_max).round().max(p_min),
                ramp_shutdown: (0.5 * p_max).round().max(p_min),
                ramp_10: 0.0,
                min_up: rng.gen_range(1..=3),
                min_down: rng.gen_range(1..=3),
                initial_status: true,
                initial_output: 0.0,
            }
        })
        .collect();
    let mut generators = generators;
    // Cheap units ramp slowly within ten minutes, expensive ones quickly.
    let mut by_cost: Vec<usize> = (0..generators.len()).collect();
    by_cost.sort_by(|&a, &b| generators[a].cost_linear.total_cmp(&generators[b].cost_linear).then(a.cmp(&b)));
    let slow = generators.len() / 2;
    for (rank, &g) in by_cost.iter().enumerate() {
        let share = if rank < slow { rng.gen_range(0.02..0.08) } else { rng.gen_range(0.50..0.60) };
        generators[g].ramp_10 = (share * generators[g].p_max).round();
    }
    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();

    // Load shares over a random half (at least) of the buses.
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(n / 2) {
        weights[i] = 0.0;
    }
    let wsum: f64 = weights.iter().sum();
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let level: Vec<f64> = (0..horizon)
        .map(|t| 0.36 + 0.05 * (phase + t as f64 * 0.8).sin())
        .collect();
    let buses: Vec<Bus> = (0..n)
        .map(|i| {
            let demand = level
                .iter()
                .map(|l| (l * capacity * weights[i] / wsum * 100.0).round() / 100.0)
                .collect();
            bus(i as u32 + 1, demand, i == 0)
        })
        .collect();

    let mut case = SystemCase { base_mva: 100.0, horizon, buses, branches, generators };

    // Reference dispatch: every unit at the same fraction of its capacity.
    let alpha: Vec<f64> = (0..horizon).map(|t| case.total_demand(t) / capacity).collect();
    for g in &mut case.generators {
        g.initial_output = alpha[0] * g.p_max;
    }
    set_secure_ratings(&mut case, &alpha, &mut rng);
    case
}

fn set_secure_ratings(case: &mut SystemCase, alpha: &[f64], rng: &mut ChaCha8Rng) {
    let topo = case.topology().expect("generated case resolves");
    let sens = network::NetworkSensitivities::build(case, 0).expect("generated case is connected");
    let n_k = topo.n_branch();
    let mut base_max = vec![0.0f64; n_k];
    let mut post_max = vec![0.0f64; n_k];
    for (t, a) in alpha.iter().enumerate() {
        let mut inj = vec![0.0; topo.n_bus];
        for (g, gen) in case.generators.iter().enumerate() {
            inj[topo.gen_bus[g]] += a * gen.p_max;
        }
        for (i, b) in case.buses.iter().enumerate() {
            inj[i] -= b.demand[t];
        }
        let flow = sens.flows(&inj);
        for k in 0..n_k {
            base_max[k] = base_max[k].max(flow[k].abs());
        }
        for &c in &sens.non_radial {
            for k in 0..n_k {
                if k != c {
                    let post = flow[k] + sens.lodf(k, c) * flow[c];
                    post_max[k] = post_max[k].max(post.abs());
                }
            }
        }
    }
    for (k, br) in case.branches.iter_mut().enumerate() {
        let long_term = (base_max[k] * rng.gen_range(1.0..1.15)).max(10.0).ceil();
        let emergency = (long_term.max(post_max[k]) * rng.gen_range(1.0..1.02)).ceil();
        br.rate_long_term = long_term;
        br.rate_emergency = emergency.max(long_term);
    }
}
