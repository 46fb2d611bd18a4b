use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uipt_core::laws::{
    hull_volume_gf_closed, hull_volume_gf_conditional, hull_volume_gf_iterate, perimeter_pmf_exact, slice_gf,
};
use uipt_core::series::q;
use uipt_core::skeleton::{iterate_closed, iterate_compose, CriticalPair};
use uipt_core::verify::{chi_square_pmf, estimate_gf};
use uipt_core::{Ring, Sampler, Series, Q};

fn small_q() -> impl Strategy<Value = Q> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| q(n, d))
}

fn series_q(order: usize) -> impl Strategy<Value = Series<Q>> {
    prop::collection::vec(small_q(), order + 1).prop_map(Series::new)
}

fn unit_series(order: usize) -> impl Strategy<Value = Series<Q>> {
    series_q(order).prop_map(|s| {
        let mut c = s.into_coeffs();
        c[0] = Q::one();
        Series::new(c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in series_q(8), b in series_q(8), c in series_q(8)) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.sub(&a), Series::zero(8));
    }

    #[test]
    fn inverse_and_sqrt(a in unit_series(10)) {
        prop_assert_eq!(a.mul(&a.inv().unwrap()), Series::one(10));
        let r = a.sqrt().unwrap();
        prop_assert_eq!(r.mul(&r), a);
    }

    #[test]
    fn reversion_round_trips(tail in series_q(6), lead in 1i64..5) {
        let mut c = tail.into_coeffs();
        c[0] = Q::zero();
        c[1] = q(lead, 1);
        let f = Series::new(c);
        let g = f.revert().unwrap();
        prop_assert_eq!(f.compose(&g).unwrap(), Series::var(6));
        prop_assert_eq!(g.revert().unwrap(), f);
    }

    #[test]
    fn json_round_trips(a in series_q(12)) {
        prop_assert_eq!(Series::<Q>::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn hull_gf_is_a_monotone_probability_gf(s in 0.01f64..0.999, ds in 0.0f64..0.5, r in 0u64..60) {
        let s2 = (s + ds * (1.0 - s)).min(1.0);
        let a = hull_volume_gf_closed(s, r).unwrap();
        let b = hull_volume_gf_closed(s2, r).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(a <= b + 1e-15);
        // bigger hulls have smaller GF
        prop_assert!(hull_volume_gf_closed(s, r + 1).unwrap() <= a + 1e-15);
        prop_assert!((a - hull_volume_gf_iterate(s, r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn iterate_closed_form_is_composition(t in 0.05f64..=1.0, r in 0u64..25, u in 0.0f64..0.99) {
        let pair = CriticalPair::from_t(t).unwrap();
        let a = iterate_closed(&pair, r, u).unwrap();
        let b = iterate_compose(&pair, r, u).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn equal_arguments_collapse_slices(r in 1u64..6, cuts in prop::collection::vec(1usize..4, 1..4), s in 0.3f64..1.0) {
        let qq: usize = cuts.iter().sum();
        let joint = slice_gf(r, qq, &cuts, &vec![s; cuts.len()]).unwrap();
        let single = slice_gf(r, qq, &[qq], &[s]).unwrap();
        prop_assert!((joint - single).abs() < 1e-12 * single.max(1e-300));
        let cond = hull_volume_gf_conditional(s, r, qq).unwrap();
        prop_assert!((s * single - cond).abs() < 1e-12);
    }

    #[test]
    fn perimeter_pmf_is_positive_and_subunit(r in 1u64..10) {
        let pmf = perimeter_pmf_exact(r, 40);
        let total = pmf.iter().fold(Q::zero(), |a, p| a.add(p));
        prop_assert!(pmf.iter().all(|p| p.to_f64() > 0.0));
        prop_assert!(total.to_f64() < 1.0);
    }

    #[test]
    fn chi_square_is_well_formed(counts in prop::collection::vec(0u64..200, 3..12)) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let pmf = vec![1.0 / counts.len() as f64; counts.len()];
        if let Ok(c) = chi_square_pmf(&counts, &pmf, 5.0) {
            prop_assert!(c.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&c.p_value));
            prop_assert!(c.dof + 1 == c.bins);
        }
    }
}

#[test]
fn root_perimeter_is_one() {
    let pmf = perimeter_pmf_exact(0, 5);
    assert_eq!(pmf[0], Q::one());
    assert!(pmf[1..].iter().all(|p| *p == Q::zero()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_hulls_satisfy_volume_identity(seed in any::<u64>(), r in 1u64..6) {
        let sampler = Sampler::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = sampler.sample_hull(r, &mut rng).unwrap();
        prop_assert!(h.volume_identity_holds());
        prop_assert_eq!(h.trajectory.radius(), r);
        prop_assert_eq!(h.slots.len() as u64, r);
        let e = estimate_gf(&[h.volume], 1.0, seed).unwrap();
        prop_assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn slice_volumes_add_up(seed in any::<u64>(), cuts in prop::collection::vec(1u64..4, 1..4)) {
        let sampler = Sampler::new();
        let qq: u64 = cuts.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sampler.sample_slices(2, qq, &cuts, &mut rng).unwrap();
        prop_assert_eq!(s.volumes.iter().sum::<u64>() + 1, s.hull.volume);
        prop_assert_eq!(s.hull.trajectory.last(), qq);
    }
}
