mod common;

use cbc_core::paracopy::{sequentialize, sequentialize_naive, MoveSet};
use common::paracopy_oracle::*;
use proptest::prelude::*;
use rand::SeedableRng;

fn equivalent(ms: &MoveSet, plan: &cbc_core::paracopy::CopyPlan, seed: u64) -> bool {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let start = Store::random(&mut rng);
    let (mut a, mut b) = (start.clone(), start);
    run_simultaneous(ms, &mut a);
    run_plan(plan, &mut b);
    a.observable() == b.observable()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn min_plan_matches_simultaneous(seed in any::<u64>(), perm in any::<bool>()) {
        let ms = random_moveset(&mut rng(seed), perm);
        prop_assert!(ms.is_well_formed());
        let plan = sequentialize(&ms);
        prop_assert!(equivalent(&ms, &plan, seed ^ 0x9e37));
    }

    #[test]
    fn naive_plan_matches_simultaneous(seed in any::<u64>()) {
        let ms = random_moveset(&mut rng(seed), false);
        prop_assert!(equivalent(&ms, &sequentialize_naive(&ms), seed));
    }

    #[test]
    fn permutation_temps_equal_cycle_count(seed in any::<u64>()) {
        let ms = random_moveset(&mut rng(seed), true);
        let plan = sequentialize(&ms);
        let cycles = independent_cycle_count(&ms);
        prop_assert_eq!(plan.temps_used, cycles);
        let moved = ms.moves.iter().filter(|m| m.src != m.dst).count();
        prop_assert_eq!(plan.steps.len(), moved + cycles);
    }
}
