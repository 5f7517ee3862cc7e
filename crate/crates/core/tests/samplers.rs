use gaptopk::verification::{
    bernoulli_exp_mean, chi_square_sf, geometric_gof, shuffle_gof, uniform_gof, ALPHA,
    GEOMETRIC_CASES,
};
use gaptopk::{BitSource, Phase, RandomBits, Sampler, StreamId, StreamKey};
use proptest::prelude::*;

const N: u64 = 300_000;

fn sampler(seed: u64) -> Sampler<BitSource> {
    Sampler::new(BitSource::seeded(seed, StreamId::new(0, Phase::Level(0))))
}

#[test]
fn geometric_matches_analytic_pmf() {
    for (i, &(s, t)) in GEOMETRIC_CASES.iter().enumerate() {
        let r = geometric_gof(s, t, N, 40 + i as u64).unwrap();
        assert!(r.pass, "geometric({s},{t}): {r:?}");
    }
}

#[test]
fn bernoulli_exp_means() {
    for (i, &(s, t)) in GEOMETRIC_CASES.iter().enumerate() {
        let m = bernoulli_exp_mean(s, t, N, 60 + i as u64).unwrap();
        assert!(m.pass, "{m:?}");
    }
}

#[test]
fn bernoulli_exp_depends_only_on_the_ratio() {
    // Two-sample proportion test of (1, 2) against (2, 4).
    let mut a = sampler(5);
    let mut b = sampler(6);
    let x = (0..N)
        .filter(|_| a.bernoulli_exp_neg(1, 2).unwrap())
        .count() as f64;
    let y = (0..N)
        .filter(|_| b.bernoulli_exp_neg(2, 4).unwrap())
        .count() as f64;
    let n = N as f64;
    let p = (x + y) / (2.0 * n);
    let z = (x / n - y / n) / (p * (1.0 - p) * 2.0 / n).sqrt();
    assert!(chi_square_sf(z * z, 1) > ALPHA, "z = {z}");
}

#[test]
fn uniform_and_shuffle_are_uniform() {
    assert!(uniform_gof(6, 600_000, 3).unwrap().pass);
    assert!(uniform_gof(7, N, 4).unwrap().pass);
    assert!(shuffle_gof(3, 120_000, 5).unwrap().pass);
    assert!(shuffle_gof(4, 240_000, 6).unwrap().pass);
}

#[test]
fn sampler_counts_per_geometric_draw() {
    // Per draw at rate 1/20: one geometric call and several Bernoulli and
    // uniform calls, every Bernoulli costing exactly one uniform.
    let mut s = sampler(9);
    for _ in 0..10_000 {
        s.geometric(1, 20).unwrap();
    }
    let st = s.stats();
    assert_eq!(st.geometric_calls, 10_000);
    assert!(st.bernoulli_calls > 3 * st.geometric_calls);
    assert!(st.uniform_calls > st.bernoulli_calls);
}

proptest! {
    #[test]
    fn replay_reproduces_samples(seed in any::<u64>(), query in 0u64..1000, level in 0u32..8) {
        let key = StreamKey::from_seed(seed);
        let id = StreamId::new(query, Phase::Level(level));
        let mut a = Sampler::new(key.substream(id));
        let mut b = Sampler::new(key.substream(id));
        for _ in 0..20 {
            prop_assert_eq!(a.geometric(3, 7).unwrap(), b.geometric(3, 7).unwrap());
            prop_assert_eq!(a.uniform_below(1000).unwrap(), b.uniform_below(1000).unwrap());
        }
        prop_assert_eq!(a.stats(), b.stats());
        prop_assert_eq!(a.source().bits_consumed(), b.source().bits_consumed());
    }

    #[test]
    fn geometric_mod_is_residue_of_geometric(seed in any::<u64>(), m in 1u64..50, s in 1u64..5, t in 1u64..60) {
        let rate = gaptopk::ExpRate::new(s, t).unwrap();
        let mut a = sampler(seed);
        let mut b = sampler(seed);
        for _ in 0..10 {
            let full = a.geometric_rate(&rate).unwrap();
            let r = b.geometric_mod(&rate, m).unwrap();
            prop_assert_eq!(full % m, r.into());
        }
    }

    #[test]
    fn uniform_stays_below_bound(seed in any::<u64>(), bound in 1u64..u64::MAX) {
        let mut s = sampler(seed);
        for _ in 0..16 {
            prop_assert!(s.uniform_below(bound).unwrap() < bound);
        }
    }
}
