use super::*;
use crate::heuristics::Mode;
use crate::model::{Objective, RawConstraint, Relation};
use alloc::vec;

fn x(v: u32) -> Literal {
    Literal::positive(v)
}
fn nx(v: u32) -> Literal {
    Literal::negative(v)
}

fn ge(terms: &[(i64, Literal)], rhs: i64) -> RawConstraint {
    RawConstraint::new(terms.to_vec(), Relation::Ge, rhs)
}

fn all_modes() -> Vec<SolverConfig> {
    Mode::ALL
        .iter()
        .map(|&m| {
            let mut cfg = SolverConfig::new(HeuristicConfig::new(m));
            cfg.audit = true;
            cfg
        })
        .collect()
}

#[test]
fn luby_prefix() {
    let seq: Vec<u64> = (0..15).map(luby).collect();
    assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
}

#[test]
fn pigeonhole_three_into_two_is_unsat() {
    // p_{i,j}: pigeon i in hole j, variable 2 * i + j + 1.
    let p = |i: u32, j: u32| x(2 * i + j + 1);
    let mut inst = Instance::new(6);
    for i in 0..3 {
        inst.add_raw(&ge(&[(1, p(i, 0)), (1, p(i, 1))], 1)).unwrap();
    }
    for j in 0..2 {
        inst.add_raw(&RawConstraint::new(
            (0..3).map(|i| (1, p(i, j))).collect(),
            Relation::Le,
            1,
        ))
        .unwrap();
    }
    for cfg in all_modes() {
        let r = solve(&inst, cfg, &mut Budget::unlimited()).unwrap();
        assert_eq!(r.status, Status::Unsat);
        assert!(r.stats.conflicts > 0);
    }
}

#[test]
fn satisfiable_model_is_checked() {
    let mut inst = Instance::new(4);
    inst.add_raw(&ge(&[(3, x(1)), (2, x(2)), (1, x(3))], 3)).unwrap();
    inst.add_raw(&ge(&[(1, nx(1)), (1, nx(2))], 1)).unwrap();
    inst.add_raw(&RawConstraint::new(vec![(1, x(3)), (1, x(4))], Relation::Eq, 1))
        .unwrap();
    for cfg in all_modes() {
        let r = solve(&inst, cfg, &mut Budget::unlimited()).unwrap();
        assert_eq!(r.status, Status::Sat);
        let m = r.model.unwrap();
        assert!(inst.is_satisfied_by(|v| m[v as usize]));
    }
}

#[test]
fn trivially_unsat_input() {
    let mut inst = Instance::new(1);
    inst.add_raw(&ge(&[(1, x(1))], 2)).unwrap();
    let r = solve(&inst, SolverConfig::default(), &mut Budget::unlimited()).unwrap();
    assert_eq!(r.status, Status::Unsat);
}

#[test]
fn optimum_of_small_problem() {
    // min 2x1 + 3x2 + 4x3 subject to x1 + x2 + x3 >= 2.
    let mut inst = Instance::new(3);
    inst.add_raw(&ge(&[(1, x(1)), (1, x(2)), (1, x(3))], 2)).unwrap();
    inst.set_objective(Objective {
        terms: vec![(2, x(1)), (3, x(2)), (4, x(3))],
    })
    .unwrap();
    let mut seen = Vec::new();
    let mut record = |v: Slack| seen.push(v);
    let mut budget = Budget {
        on_solution: Some(&mut record),
        ..Budget::default()
    };
    let r = optimize(&inst, SolverConfig::default(), &mut budget).unwrap();
    assert_eq!(r.status, Status::Optimum(5));
    assert_eq!(r.objective, Some(5));
    assert_eq!(seen.last(), Some(&5));
    assert!(seen.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn conflict_budget_times_out() {
    let p = |i: u32, j: u32| x(5 * i + j + 1);
    let mut inst = Instance::new(30);
    for i in 0..6 {
        inst.add_raw(&ge(&(0..5).map(|j| (1, p(i, j))).collect::<Vec<_>>(), 1))
            .unwrap();
    }
    for j in 0..5 {
        inst.add_raw(&RawConstraint::new(
            (0..6).map(|i| (1, p(i, j))).collect(),
            Relation::Le,
            1,
        ))
        .unwrap();
    }
    let r = solve(&inst, SolverConfig::default(), &mut Budget::conflicts(3)).unwrap();
    assert_eq!(r.status, Status::Timeout);
    assert_eq!(r.stats.conflicts, 3);
}

#[test]
fn stop_callback_is_honoured() {
    let mut inst = Instance::new(3);
    inst.add_raw(&ge(&[(1, x(1)), (1, x(2))], 1)).unwrap();
    let mut stop = || true;
    let mut budget = Budget {
        stop: Some(&mut stop),
        ..Budget::default()
    };
    let r = solve(&inst, SolverConfig::default(), &mut budget).unwrap();
    assert_eq!(r.status, Status::Timeout);
}

#[test]
fn learned_clause_database_is_reduced() {
    let p = |i: u32, j: u32| x(5 * i + j + 1);
    let mut inst = Instance::new(30);
    for i in 0..6 {
        inst.add_raw(&ge(&(0..5).map(|j| (1, p(i, j))).collect::<Vec<_>>(), 1))
            .unwrap();
    }
    for j in 0..5 {
        inst.add_raw(&RawConstraint::new(
            (0..6).map(|i| (1, p(i, j))).collect(),
            Relation::Le,
            1,
        ))
        .unwrap();
    }
    let cfg = SolverConfig {
        restart_base: 5,
        max_learned: 10,
        ..SolverConfig::default()
    };
    let r = solve(&inst, cfg, &mut Budget::unlimited()).unwrap();
    assert_eq!(r.status, Status::Unsat);
    assert!(r.stats.deleted > 0);
}
