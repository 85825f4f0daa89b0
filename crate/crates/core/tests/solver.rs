mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use scuc_core::solver::{
    solve_lp, solve_milp, Engine, LpOptions, MicroLp, MilpOptions, ModelHandle, Sense, SolveStatus,
};

use common::vertex_lp_2d;

#[test]
fn small_milp_picks_the_cheaper_block() {
    // Cover 7 units with blocks of 5 (cost 4) and 3 (cost 3).
    let mut m = ModelHandle::new();
    let a = m.add_binary(4.0);
    let b = m.add_binary(3.0);
    let c = m.add_binary(3.0);
    m.add_row("cover", [(a, 5.0), (b, 3.0), (c, 3.0)], Sense::Ge, 7.0);
    let r = solve_milp(&MicroLp, &m, &MilpOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_abs_diff_eq!(r.objective, 7.0, epsilon = 1e-9);
    assert!(r.flag(a));
}

#[test]
fn infeasible_and_unbounded_are_distinguished() {
    let mut m = ModelHandle::new();
    let x = m.add_continuous(0.0, 1.0, 1.0);
    m.add_row("too_big", [(x, 1.0)], Sense::Ge, 2.0);
    assert_eq!(solve_lp(&MicroLp, &m, &LpOptions::default()).unwrap().status, SolveStatus::Infeasible);

    let mut m = ModelHandle::new();
    let x = m.add_free(-1.0);
    m.add_row("floor", [(x, 1.0)], Sense::Ge, 0.0);
    assert_eq!(solve_lp(&MicroLp, &m, &LpOptions::default()).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn lp_rejects_binaries() {
    let mut m = ModelHandle::new();
    m.add_binary(1.0);
    assert!(solve_lp(&MicroLp, &m, &LpOptions::default()).is_err());
}

#[test]
fn equality_duals_are_marginal_prices() {
    // Two suppliers at 10 and 30 per MW; the first is capped at 40.
    let mut m = ModelHandle::new();
    let a = m.add_continuous(0.0, 40.0, 10.0);
    let b = m.add_continuous(0.0, 100.0, 30.0);
    let bal = m.add_row("balance", [(a, 1.0), (b, 1.0)], Sense::Eq, 60.0);
    let r = solve_lp(&MicroLp, &m, &LpOptions::default()).unwrap();
    assert_abs_diff_eq!(r.objective, 1000.0, epsilon = 1e-7);
    assert_abs_diff_eq!(r.dual(bal).unwrap(), 30.0, epsilon = 1e-7);
    let rc = r.reduced_costs.unwrap();
    assert_abs_diff_eq!(rc[a.0], -20.0, epsilon = 1e-7);
    assert_abs_diff_eq!(rc[b.0], 0.0, epsilon = 1e-7);
}

#[test]
fn repeated_solves_are_identical() {
    let mut m = ModelHandle::new();
    let x = m.add_continuous(0.0, 10.0, 1.0);
    let y = m.add_continuous(0.0, 10.0, 1.0);
    m.add_row("sum", [(x, 1.0), (y, 1.0)], Sense::Ge, 4.0);
    let a = solve_lp(&MicroLp, &m, &LpOptions::default()).unwrap();
    let b = solve_lp(&MicroLp, &m, &LpOptions::default()).unwrap();
    assert_eq!(a.primal, b.primal);
    assert_eq!(a.duals, b.duals);
    assert_eq!(MicroLp.name(), "microlp");
}

fn row_strategy() -> impl Strategy<Value = ([f64; 2], f64)> {
    ((-5i32..=5, -5i32..=5), 1i32..=20).prop_map(|((a, b), r)| ([a as f64, b as f64], r as f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_matches_vertex_enumeration(
        c in (-5i32..=5, -5i32..=5),
        rows in proptest::collection::vec(row_strategy(), 1..6),
        lo in -8i32..=-1,
        hi in 1i32..=8,
    ) {
        let c = [c.0 as f64, c.1 as f64];
        let mut m = ModelHandle::new();
        let x = m.add_continuous(lo as f64, hi as f64, c[0]);
        let y = m.add_continuous(lo as f64, hi as f64, c[1]);
        let mut all = rows.clone();
        for (i, (a, r)) in rows.iter().enumerate() {
            let sense = if i % 2 == 0 { Sense::Le } else { Sense::Ge };
            let (a, r) = if sense == Sense::Le { (*a, *r) } else { ([-a[0], -a[1]], -r) };
            m.add_row(format!("r{i}"), [(x, a[0]), (y, a[1])], sense, r);
        }
        all.push(([1.0, 0.0], hi as f64));
        all.push(([-1.0, 0.0], -lo as f64));
        all.push(([0.0, 1.0], hi as f64));
        all.push(([0.0, -1.0], -lo as f64));
        let expected = vertex_lp_2d(c, &all).unwrap();

        let r = solve_lp(&MicroLp, &m, &LpOptions::default()).unwrap();
        prop_assert_eq!(r.status, SolveStatus::Optimal);
        prop_assert!((r.objective - expected).abs() < 1e-6, "{} vs {}", r.objective, expected);
        prop_assert!(m.max_violation(&r.primal) < 1e-7);

        let duals = r.duals.clone().unwrap();
        let rc = r.reduced_costs.clone().unwrap();
        for (row, d) in m.rows().iter().zip(&duals) {
            match row.sense {
                Sense::Le => prop_assert!(*d <= 1e-9),
                Sense::Ge => prop_assert!(*d >= -1e-9),
                Sense::Eq => {}
            }
        }
        let bound_terms: f64 = rc.iter().zip(&r.primal).map(|(w, v)| w * v).sum();
        prop_assert!((m.rhs_dot(&duals) + bound_terms - r.objective).abs() < 1e-6);

        let milp = solve_milp(&MicroLp, &m, &MilpOptions::default()).unwrap();
        prop_assert!((milp.objective - expected).abs() < 1e-6);
    }
}
