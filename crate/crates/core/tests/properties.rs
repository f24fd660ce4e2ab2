use num_traits::{One, Zero};
use privaudit_core::generators::{build_prior, random_instance, InstanceBounds, PriorSpec};
use privaudit_core::leakage::{bdp_ratio, bdp_ratio_set_oracle, dp_ratio};
use privaudit_core::membership::{
    mp_check_analytic, mp_check_direct, scale_distribution, FamilySpec,
};
use privaudit_core::model::{assignments, subsets_excluding, ConditionalCache, Fixing};
use privaudit_core::rational::q;
use privaudit_core::semantic::{posterior_game0, posterior_game_i, BeliefFamily};
use privaudit_core::{
    conditional_output_distribution, statistical_distance, Mechanism, ModelError, Ratio, Q,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bounds(max_outputs: usize) -> InstanceBounds {
    InstanceBounds {
        max_n: 3,
        max_domain: 3,
        max_outputs,
        weight_bound: 6,
    }
}

fn instance(seed: u64, max_outputs: usize) -> (Mechanism, privaudit_core::JointPrior) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, &bounds(max_outputs))
        .unwrap()
        .build()
        .unwrap()
}

fn distribution(weights: &[u32]) -> Vec<Q> {
    let total: u32 = weights.iter().sum::<u32>().max(1);
    let mut v: Vec<Q> = weights.iter().map(|&w| q(w as i64, total as i64)).collect();
    if weights.iter().all(|&w| w == 0) {
        v[0] = Q::one();
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistical_distance_is_a_metric(
        a in prop::collection::vec(0u32..20, 4),
        b in prop::collection::vec(0u32..20, 4),
        c in prop::collection::vec(0u32..20, 4),
    ) {
        let (a, b, c) = (distribution(&a), distribution(&b), distribution(&c));
        let ab = statistical_distance(&a, &b).unwrap();
        prop_assert_eq!(&ab, &statistical_distance(&b, &a).unwrap());
        prop_assert!(ab >= Q::zero() && ab <= Q::one());
        prop_assert!(statistical_distance(&a, &a).unwrap().is_zero());
        let bc = statistical_distance(&b, &c).unwrap();
        let ac = statistical_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn singleton_bdp_matches_set_oracle(seed in any::<u64>()) {
        let (m, p) = instance(seed, 6);
        prop_assert_eq!(bdp_ratio(&m, &p).unwrap().ratio, bdp_ratio_set_oracle(&m, &p).unwrap());
    }

    #[test]
    fn bdp_is_at_least_dp(seed in any::<u64>()) {
        let (m, p) = instance(seed, 6);
        prop_assert!(bdp_ratio(&m, &p).unwrap().ratio >= dp_ratio(&m).0);
    }

    #[test]
    fn direct_and_analytic_membership_checks_agree(
        seed in any::<u64>(),
        pick in any::<prop::sample::Index>(),
        weight in 1i64..16,
        level in 10i64..50,
    ) {
        let (m, p) = instance(seed, 8);
        let family = FamilySpec::supported(m.space(), &p);
        let s = scale_distribution(&family.scenarios[pick.index(family.scenarios.len())], &q(weight, 16)).unwrap();
        let r = Ratio::finite(q(level, 10));
        let analytic = mp_check_analytic(&m, &p, &s, &r).unwrap();
        let direct = mp_check_direct(&m, &p, &s, &r).unwrap();
        prop_assert_eq!(analytic.pass, direct.pass);
    }

    #[test]
    fn rescaling_keeps_the_singleton_statistic(
        seed in any::<u64>(),
        pick in any::<prop::sample::Index>(),
        weight in 1i64..16,
    ) {
        let (m, p) = instance(seed, 8);
        let family = FamilySpec::supported(m.space(), &p);
        let s = &family.scenarios[pick.index(family.scenarios.len())];
        let t = scale_distribution(s, &q(weight, 16)).unwrap();
        let r = Ratio::finite(q(2, 1));
        prop_assert_eq!(
            mp_check_analytic(&m, &p, s, &r).unwrap().statistic,
            mp_check_analytic(&m, &p, &t, &r).unwrap().statistic
        );
    }

    #[test]
    fn cache_matches_direct_conditioning(seed in any::<u64>()) {
        let (m, p) = instance(seed, 5);
        let cache = ConditionalCache::build(&m, p.table()).unwrap();
        let space = m.space();
        let d = space.domain().len();
        for i in 0..space.n() {
            for known in subsets_excluding(space.n(), i) {
                for xs in assignments(known.len(), d) {
                    for v in 0..d {
                        let f = Fixing::new(i, v, known.clone(), xs.clone());
                        match conditional_output_distribution(&m, p.table(), &f) {
                            Ok(row) => prop_assert_eq!(cache.get(&f), Some(row.as_slice())),
                            Err(ModelError::ZeroMass(_)) => prop_assert_eq!(cache.get(&f), None),
                            Err(e) => return Err(TestCaseError::fail(e.to_string())),
                        }
                    }
                }
            }
        }
    }

    /// Game `i` for `M` is game 0 for `x ↦ M(x with x_i = ⊥)` when the
    /// adversary knows everything else, or for any `S` under a product law.
    #[test]
    fn game_i_is_game_zero_of_the_substituted_mechanism(seed in any::<u64>(), product in any::<bool>()) {
        let (m, _) = instance(seed, 5);
        let space = m.space().clone();
        let d = space.domain().len();
        let n = space.n();
        let law = if product {
            let marginals = (0..n)
                .map(|k| (0..d).map(|v| q(1 + ((v + k) % 3) as i64, 1)).collect::<Vec<Q>>())
                .map(|w| { let t: Q = w.iter().sum(); w.into_iter().map(|x| x / &t).collect() })
                .collect();
            build_prior(&PriorSpec::Product { marginals }, &space).unwrap()
        } else {
            build_prior(&PriorSpec::Uniform { include_bottom: true }, &space).unwrap()
        };
        let universe: Vec<usize> = (0..space.size()).collect();
        let beliefs = BeliefFamily::RandomSampled { seed, count: 3 }.generate(&space, &universe).unwrap();
        let bottom = space.default_value();
        for i in 0..n {
            let sub = Mechanism::from_fn(space.clone(), m.outputs().to_vec(), |db| {
                m.row_of(&db.with_value(i, bottom)).to_vec()
            })
            .unwrap();
            let sets = if product { subsets_excluding(n, i) } else { vec![(0..n).filter(|&k| k != i).collect()] };
            for known in sets {
                for member in &beliefs {
                    for y in 0..m.output_count() {
                        let gi = posterior_game_i(&m, &member.belief, law.table(), i, &known, y);
                        let g0 = posterior_game0(&sub, &member.belief, law.table(), i, &known, y);
                        match (gi, g0) {
                            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                            (Err(_), Err(_)) => {}
                            (a, b) => return Err(TestCaseError::fail(format!("{a:?} vs {b:?}"))),
                        }
                    }
                }
            }
        }
    }
}
