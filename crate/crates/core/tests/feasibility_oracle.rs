mod common;

use common::{oracle_feasible, oracle_min_powers, powers_satisfy, random_instance};
use proptest::prelude::*;
use wnd_core::feasibility::{self, ActivatedSystem, PowerIteration, SirConstraint};
use wnd_core::model::all_assignments;
use wnd_core::{Instance, ServerAssignment};

fn random_assignment(seed: u64, inst: &Instance) -> ServerAssignment {
    let nb = inst.n_transmitters() as u64;
    let servers = (0..inst.n_receivers() as u64)
        .map(|t| {
            let r = (seed.wrapping_mul(6364136223846793005).wrapping_add(t * 1442695040888963407) >> 33) % (nb + 1);
            (r < nb).then_some(r as usize)
        })
        .collect();
    ServerAssignment::from_servers(servers)
}

fn subsystem(inst: &Instance, constraints: &[SirConstraint]) -> ServerAssignment {
    let mut x = ServerAssignment::unserved(inst.n_receivers());
    for c in constraints {
        x.set(c.receiver, Some(c.server));
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn verdict_matches_vertex_oracle(seed in any::<u64>(), nr in 1usize..6, nb in 1usize..4, pick in any::<u64>()) {
        let inst = random_instance(seed, nr, nb);
        let x = random_assignment(pick, &inst);
        let verdict = feasibility::check(&feasibility::assignment_to_system(&x, &inst));
        prop_assert_eq!(verdict.feasible, oracle_feasible(&inst, &x));
        prop_assert_eq!(verdict.feasible, verdict.minimal_powers.is_some());
        prop_assert_eq!(verdict.feasible, verdict.witness.is_none());
    }

    #[test]
    fn minimal_powers_are_least_and_satisfying(seed in any::<u64>(), nr in 1usize..6, nb in 1usize..4, pick in any::<u64>()) {
        let inst = random_instance(seed, nr, nb);
        let x = random_assignment(pick, &inst);
        let sys = feasibility::assignment_to_system(&x, &inst);
        if let (Some(p), Some(q)) = (feasibility::minimal_powers(&sys), oracle_min_powers(&inst, &x)) {
            let scale = q.iter().cloned().fold(0.0, f64::max);
            for b in 0..nb {
                prop_assert!((p.0[b] - q[b]).abs() <= 1e-7 * scale, "b{} {} vs {}", b, p.0[b], q[b]);
            }
            prop_assert!(powers_satisfy(&inst, &x, &p.0, 1e-12 * scale.max(inst.noise)));
        }
    }

    #[test]
    fn subsystem_is_irreducible(seed in any::<u64>(), nr in 2usize..6, nb in 1usize..4, pick in any::<u64>()) {
        let inst = random_instance(seed, nr, nb);
        let x = random_assignment(pick, &inst);
        let sys = feasibility::assignment_to_system(&x, &inst);
        match feasibility::minimal_infeasible_subsystem(&sys) {
            Err(_) => prop_assert!(oracle_feasible(&inst, &x)),
            Ok(iis) => {
                prop_assert!(!iis.is_empty());
                prop_assert!(iis.iter().all(|c| sys.constraints.contains(c)));
                prop_assert!(!oracle_feasible(&inst, &subsystem(&inst, &iis)));
                for drop in 0..iis.len() {
                    let mut rest = iis.clone();
                    rest.remove(drop);
                    prop_assert!(oracle_feasible(&inst, &subsystem(&inst, &rest)));
                }
            }
        }
    }

    #[test]
    fn warm_start_matches_cold(seed in any::<u64>(), nr in 2usize..6, nb in 1usize..4, pick in any::<u64>()) {
        let inst = random_instance(seed, nr, nb);
        let x = random_assignment(pick, &inst);
        let sys = feasibility::assignment_to_system(&x, &inst);
        let Some(full) = feasibility::minimal_powers(&sys) else { return Ok(()) };
        let mut part = sys.constraints.clone();
        part.pop();
        let part_sys = ActivatedSystem::new(&inst, part).unwrap();
        let start = feasibility::minimal_powers(&part_sys).expect("subsystem of a feasible system");
        let warm = feasibility::minimal_powers_from(&sys, &Default::default(), &start).expect("same verdict");
        for b in 0..nb {
            prop_assert!((warm.0[b] - full.0[b]).abs() <= 1e-9 * full.0[b].max(1e-300));
        }
    }

    #[test]
    fn iterates_never_decrease(seed in any::<u64>(), nr in 1usize..6, nb in 1usize..4, pick in any::<u64>()) {
        let inst = random_instance(seed, nr, nb);
        let x = random_assignment(pick, &inst);
        let sys = feasibility::assignment_to_system(&x, &inst);
        let mut prev = vec![0.0; nb];
        for p in PowerIteration::new(&sys, 1e-12).take(200) {
            prop_assert!(p.0.iter().zip(&prev).all(|(a, b)| a >= b));
            prev = p.0;
        }
    }
}

#[test]
fn exhaustive_agreement_on_small_instances() {
    for seed in 0..40 {
        let inst = random_instance(seed, 3, 2);
        for x in all_assignments(3, 2) {
            let verdict = feasibility::is_feasible(&feasibility::assignment_to_system(&x, &inst));
            assert_eq!(verdict, oracle_feasible(&inst, &x), "seed {seed} {:?}", x.servers());
        }
    }
}

/// A three-constraint infeasible system all of whose two-element subsets
/// are feasible, found by brute force over the oracle; the filter must
/// return the full set.
#[test]
fn filter_keeps_every_constraint_when_all_are_needed() {
    let mut found = 0;
    for seed in 0..2000 {
        let inst = random_instance(seed, 3, 3);
        let x = ServerAssignment::from_servers(vec![Some(0), Some(1), Some(2)]);
        if oracle_feasible(&inst, &x) {
            continue;
        }
        let all_pairs_ok = (0..3).all(|drop| {
            let mut y = x.clone();
            y.set(drop, None);
            oracle_feasible(&inst, &y)
        });
        if !all_pairs_ok {
            continue;
        }
        let sys = feasibility::assignment_to_system(&x, &inst);
        let iis = feasibility::minimal_infeasible_subsystem(&sys).unwrap();
        assert_eq!(iis, sys.constraints, "seed {seed}");
        found += 1;
        if found == 5 {
            break;
        }
    }
    assert!(found > 0, "no instance needing all three constraints in the seed range");
}
