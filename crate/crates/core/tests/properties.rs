use std::collections::HashMap;

use lowrank_bandit::bandit::{
    chain_replace, lowrank_elim, noise_free_max, ElimConfig, Exploration, RegretMode,
};
use lowrank_bandit::environment::{generate_instance, oracle_quantities, HottTopicsInstance, NoiseModel};
use lowrank_bandit::matcore::{det, enum_subsets, row_block, submatrix, DSubset};
use lowrank_bandit::Error;
use proptest::prelude::*;

fn instance(k: usize, l: usize, d: usize, seed: u64) -> Option<HottTopicsInstance> {
    match generate_instance(k, l, d, seed, 1e-4, 0.0) {
        Ok(i) => Some(i),
        Err(Error::GenerationFailed { .. }) => None,
        Err(e) => panic!("unexpected error {e}"),
    }
}

fn shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=3).prop_flat_map(|d| (d..=7usize, d..=7usize, Just(d), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn determinant_factorizes((k, l, d, seed) in shape()) {
        let Some(inst) = instance(k, l, d, seed) else { return Ok(()) };
        for rows in enum_subsets(k, d).unwrap() {
            let du = det(&row_block(inst.u(), &rows).unwrap()).unwrap();
            for cols in enum_subsets(l, d).unwrap() {
                let dv = det(&row_block(inst.v(), &cols).unwrap()).unwrap();
                let dr = det(&submatrix(inst.rbar(), &rows, &cols).unwrap()).unwrap();
                prop_assert!((dr - du * dv).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn factors_are_in_the_simplex((k, l, d, seed) in shape()) {
        let Some(inst) = instance(k, l, d, seed) else { return Ok(()) };
        for m in [inst.u(), inst.v()] {
            for i in 0..m.rows() {
                let r = m.row(i);
                prop_assert!(r.iter().all(|&x| x >= 0.0));
                prop_assert!(r.iter().sum::<f64>() <= 1.0 + 1e-9);
            }
        }
        let ((i, j), v) = inst.rbar().max_entry();
        prop_assert!(inst.base_rows().contains(i));
        prop_assert!(inst.base_cols().contains(j));
        prop_assert!(v <= 1.0 + 1e-12);
    }

    #[test]
    fn noise_free_search_matches_oracle((k, l, d, seed) in shape()) {
        let Some(inst) = instance(k, l, d, seed) else { return Ok(()) };
        let o = oracle_quantities(&inst).unwrap();
        let found = noise_free_max(inst.rbar(), d).unwrap();
        prop_assert_eq!(found.rows, o.best_drow);
        prop_assert_eq!(found.cols, o.best_dcol);
    }

    #[test]
    fn gaps_and_volumes_are_consistent((k, l, d, seed) in shape()) {
        let Some(inst) = instance(k, l, d, seed) else { return Ok(()) };
        let o = oracle_quantities(&inst).unwrap();
        prop_assert!(o.c_min > 0.0 && o.c_min <= o.c_max);
        for (s, g) in &o.gaps_rows {
            prop_assert!(*g >= 0.0);
            prop_assert!((o.sq_volumes_rows[s] + g - o.sq_volumes_rows[&o.best_drow]).abs() < 1e-12);
        }
        prop_assert!(o.gaps_cols.values().all(|&g| g >= 0.0));
    }

    #[test]
    fn elimination_runs_are_deterministic_and_bounded(
        (k, l, d, seed) in shape(),
        n in 1u64..40_000,
        run_seed in any::<u64>(),
        chain in any::<bool>(),
        sum in any::<bool>(),
    ) {
        let Some(inst) = instance(k, l, d, seed) else { return Ok(()) };
        let cfg = ElimConfig::new(n, run_seed)
            .with_exploration(if chain { Exploration::Chain } else { Exploration::Restricted })
            .with_regret_mode(if sum { RegretMode::SumEntries } else { RegretMode::BestEntry });
        let a = lowrank_elim(&inst, &NoiseModel::Bernoulli, &cfg).unwrap();
        let b = lowrank_elim(&inst, &NoiseModel::Bernoulli, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.observations_used, n);
        prop_assert_eq!(a.steps.len() as u64, n);
        for st in &a.stages {
            prop_assert!(st.observations <= 2 * (k + l) as u64 * st.n_ell);
        }
        if !sum {
            prop_assert!(a.steps.iter().all(|s| s.regret >= 0.0));
        }
        // Eliminated subsets chain back to an active one on each side.
        let rows: HashMap<DSubset, DSubset> = a
            .eliminations
            .iter()
            .filter(|e| e.side == lowrank_bandit::bandit::Side::Row)
            .map(|e| (e.subset.clone(), e.eliminator.clone()))
            .collect();
        for s in &a.row_subsets {
            prop_assert!(a.final_rows.contains(&chain_replace(s, &rows).unwrap()));
        }
    }

    #[test]
    fn instance_json_round_trips((k, l, d, seed) in shape()) {
        let Some(inst) = instance(k, l, d, seed) else { return Ok(()) };
        let back = HottTopicsInstance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.u(), inst.u());
        prop_assert_eq!(back.v(), inst.v());
        prop_assert_eq!(back.rbar(), inst.rbar());
    }
}

#[test]
fn clean_noiseless_runs_keep_the_optimum() {
    for seed in 0..10 {
        let inst = generate_instance(5, 5, 2, seed, 1e-3, 0.0).unwrap();
        let o = oracle_quantities(&inst).unwrap();
        let t = lowrank_elim(&inst, &NoiseModel::noiseless(), &ElimConfig::new(500_000, seed).without_steps())
            .unwrap();
        assert!(t.final_rows.contains(&o.best_drow));
        assert!(t.final_cols.contains(&o.best_dcol));
    }
}
