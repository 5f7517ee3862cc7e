use gaptopk::verification::{mechanism_equivalence, EquivalenceFixture};
use gaptopk::{secure_top_k_gap, MechanismConfig, QueryVector, Rational};
use proptest::prelude::*;

fn cfg(k: usize, eps: &str) -> MechanismConfig {
    MechanismConfig::new(k, eps.parse::<Rational>().unwrap()).unwrap()
}

#[test]
fn equivalence_on_a_fine_grid() {
    let fx = EquivalenceFixture {
        name: "fine-grid".into(),
        counts: vec![4, 4, 3, 1, 0, 0],
        k: 2,
        epsilon: Rational::from_integer(1),
        base_denom: 10,
        refine_factor: 10,
    };
    let rep = mechanism_equivalence(&fx, 200_000, 77).unwrap();
    assert!(rep.tv < rep.threshold, "{rep:?}");
}

#[test]
fn refine_levels_stay_small() {
    // Default parameters: eps = 1, gamma_star = 1/10, M = 10.
    let fixtures: [&[u64]; 3] = [&[3, 2, 1, 0, 0], &[2, 2, 2], &[5, 5, 5, 5, 5, 5]];
    for counts in fixtures {
        let q = QueryVector::from_counts(counts, 10);
        let k = (counts.len() - 2).clamp(1, 2);
        let max = (0..10_000)
            .map(|s| {
                secure_top_k_gap(&q, &cfg(k, "1").with_seed(s))
                    .unwrap()
                    .refine_levels
            })
            .max()
            .unwrap();
        assert!(max <= 4, "max refine level {max} on {counts:?}");
    }
}

#[test]
fn os_entropy_key_runs() {
    let q = QueryVector::from_counts(&[9, 8, 7, 6], 10);
    let key = gaptopk::StreamKey::from_os_entropy();
    let out = gaptopk::secure_top_k_gap_with_key(&q, &cfg(2, "1"), &key).unwrap();
    assert_eq!(out.selections.len(), 2);
}

fn queries() -> impl Strategy<Value = (Vec<u64>, usize)> {
    (prop::collection::vec(0u64..30, 3..40), 1usize..6).prop_map(|(v, k)| {
        let k = k.min(v.len() - 2);
        (v, k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn output_contract((counts, k) in queries(), seed in any::<u64>()) {
        let q = QueryVector::from_counts(&counts, 10);
        let out = secure_top_k_gap(&q, &cfg(k, "1").with_seed(seed)).unwrap();
        let idx = out.indices();
        prop_assert_eq!(idx.len(), k);
        let mut u = idx.clone();
        u.sort();
        u.dedup();
        prop_assert_eq!(u.len(), k);
        for g in out.gaps() {
            prop_assert_eq!(g.base_denom(), 10);
        }
        prop_assert_eq!(out.pool_sizes.len(), out.refine_levels as usize);
        let refined: usize = out.pool_sizes.iter().sum();
        prop_assert_eq!(out.stats.geometric_calls, (counts.len() + refined) as u64);
    }

    #[test]
    fn pruning_is_invisible((counts, k) in queries(), seed in any::<u64>()) {
        let q = QueryVector::from_counts(&counts, 10);
        let base = cfg(k, "1/2").with_seed(seed);
        let a = secure_top_k_gap(&q, &base.clone().with_prune(true)).unwrap();
        let b = secure_top_k_gap(&q, &base.with_prune(false)).unwrap();
        prop_assert_eq!(a.selections, b.selections);
        prop_assert!(a.stats.geometric_calls <= b.stats.geometric_calls);
    }

    #[test]
    fn clear_winner_is_selected(seed in any::<u64>()) {
        // A lead of 1000 at eps = 1, k = 1 is overturned with probability e^-500.
        let mut counts = vec![0u64; 10];
        counts[3] = 1000;
        let q = QueryVector::from_counts(&counts, 10);
        let out = secure_top_k_gap(&q, &cfg(1, "1").with_seed(seed)).unwrap();
        prop_assert_eq!(out.indices(), vec![3]);
        let gap = out.selections[0].gap.value();
        prop_assert!(gap >= Rational::from_integer(900));
    }
}
