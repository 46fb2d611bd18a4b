//! Sampler against exact laws, with fixed seeds.

use uipt_core::laws::{hull_volume_gf_conditional, hull_volume_pmf, perimeter_pmf};
use uipt_core::sampler::run_trials;
use uipt_core::verify::{chi_square_pmf, estimate_gf, histogram, P_FLOOR};
use uipt_core::Sampler;

#[test]
fn hull_volume_histogram_matches_exact_pmf() {
    let sampler = Sampler::new();
    let pmf = hull_volume_pmf(1, 80).unwrap();
    let vols = run_trials(11, 20_000, 2, |_, rng| sampler.sample_hull(1, rng).map(|h| h.volume)).unwrap();
    let c = chi_square_pmf(&histogram(vols), &pmf.probs, 5.0).unwrap();
    assert!(c.p_value > P_FLOOR, "{c:?}");
}

#[test]
fn perimeter_histogram_matches_exact_law() {
    let sampler = Sampler::new();
    let law = perimeter_pmf(2, 2000).unwrap();
    let mut pmf = vec![0.0];
    pmf.extend(&law.probs);
    let ps = run_trials(12, 20_000, 2, |_, rng| {
        sampler.sample_perimeter_chain(2, rng).map(|t| t.last())
    })
    .unwrap();
    let c = chi_square_pmf(&histogram(ps), &pmf, 5.0).unwrap();
    assert!(c.p_value > P_FLOOR, "{c:?}");
}

/// The conditioned sampler and rejection from unconditioned hulls must agree
/// with each other and with the conditional GF.
#[test]
fn conditioned_hulls_match_restricted_unconditioned() {
    let sampler = Sampler::new();
    let (r, qq, s) = (2u64, 3u64, 0.95);
    let conditioned = run_trials(13, 20_000, 2, |_, rng| {
        sampler.sample_hull_conditioned(r, qq, rng).map(|h| h.volume)
    })
    .unwrap();
    let restricted: Vec<u64> = run_trials(14, 150_000, 2, |_, rng| sampler.sample_hull(r, rng))
        .unwrap()
        .into_iter()
        .filter(|h| h.trajectory.last() == qq)
        .map(|h| h.volume)
        .collect();
    assert!(restricted.len() > 5_000, "{}", restricted.len());
    let exact = hull_volume_gf_conditional(s, r, qq as usize).unwrap();
    let a = estimate_gf(&conditioned, s, 13).unwrap();
    let b = estimate_gf(&restricted, s, 14).unwrap();
    assert!(a.within(exact, 3.0), "{a:?} vs {exact}");
    assert!(b.within(exact, 3.0), "{b:?} vs {exact}");
    let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.estimate - b.estimate).abs() <= 3.0 * pooled);
}
