mod common;

use campus_milp::{solve_lp, solve_milp, LpStatus, MilpOptions, MilpStatus};
use common::oracle::{dense_max, enumerate_binaries};
use common::random_milp::random_instance;
use proptest::prelude::*;

fn exact_opts() -> MilpOptions {
    MilpOptions {
        gap: 0.0,
        ..Default::default()
    }
}

#[test]
fn milp_matches_enumeration_on_seeded_instances() {
    for seed in 0..60u64 {
        let inst = random_instance(seed, 12, 30);
        let oracle = enumerate_binaries(&inst.dense, &inst.binaries);
        let sol = solve_milp(&inst.model, &exact_opts()).unwrap();
        match oracle {
            None => assert_eq!(sol.status, MilpStatus::Infeasible, "seed {seed}"),
            Some(best) => {
                assert_eq!(sol.status, MilpStatus::Optimal, "seed {seed}");
                assert!(
                    (sol.objective - best).abs() <= 1e-6,
                    "seed {seed}: solver {} oracle {best}",
                    sol.objective
                );
                let v = inst.model.max_violation(&sol.values).unwrap();
                assert!(v.max() <= 1e-6, "seed {seed}: {v:?}");
                assert!(sol.gap >= 0.0 && sol.best_bound >= sol.objective - 1e-9);
            }
        }
    }
}

#[test]
fn lp_relaxation_matches_dense_oracle() {
    for seed in 100..160u64 {
        let inst = random_instance(seed, 6, 30);
        let oracle = dense_max(&inst.dense);
        let sol = solve_lp(&inst.model).unwrap();
        match oracle {
            None => assert_eq!(sol.status, LpStatus::Infeasible, "seed {seed}"),
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
                assert!((sol.objective - best).abs() <= 1e-7, "seed {seed}");
                assert!(inst.model.max_violation(&sol.values).unwrap().row <= 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_points_are_feasible_and_objective_recomputes(seed in 1000u64..100_000) {
        let inst = random_instance(seed, 8, 20);
        let sol = solve_milp(&inst.model, &MilpOptions::default()).unwrap();
        if sol.status == MilpStatus::Optimal {
            let v = inst.model.max_violation(&sol.values).unwrap();
            prop_assert!(v.max() <= 1e-6);
            let recomputed = inst.model.evaluate_objective(&sol.values);
            prop_assert!((recomputed - sol.objective).abs() <= 1e-8);
            prop_assert!(sol.best_bound + 1e-9 >= sol.objective);
            for b in &inst.binaries {
                let x = sol.values[*b];
                prop_assert!((x - x.round()).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn simplex_is_deterministic(seed in 0u64..10_000) {
        let inst = random_instance(seed, 0, 25);
        let a = solve_lp(&inst.model).unwrap();
        let b = solve_lp(&inst.model).unwrap();
        prop_assert_eq!(a.values, b.values);
    }
}
