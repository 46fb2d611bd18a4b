//! Scaling limits of hull, conditioned-hull and slice volumes, the jump law
//! `ξ`, and finite-size convergence ladders against the exact laws.

use serde::Serialize;
use thiserror::Error;

use crate::enumeration::{h_terms_at_rho, ALPHA};
use crate::laws::{self, LawError};
use crate::series::{ln_coeff_of_power, Series};
use crate::skeleton::{phi_t_coeffs, CriticalPair, SkeletonError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("quadrature did not reach {target:e} (estimate {estimate:e})")]
    Quadrature { target: f64, estimate: f64 },
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

type Result<T> = std::result::Result<T, AsymptoticsError>;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(AsymptoticsError::Domain(format!("{name} = {v} must be positive")))
    }
}

/// `(cosh z / sinh³ z, coth² z)` without overflow.
fn hyperbolic(z: f64) -> (f64, f64) {
    let e = (-2.0 * z).exp();
    let one_minus = -(-2.0 * z).exp_m1();
    let c = 4.0 * e * (1.0 + e) / one_minus.powi(3);
    let coth = (1.0 + e) / one_minus;
    (c, coth * coth)
}

/// `lim E[exp(−λ|B_{xR}|/R⁴)] = 3^{3/2} cosh z / (cosh² z + 2)^{3/2}`,
/// `z = (6λ)^{1/4} x`.
pub fn hull_limit(lambda: f64, x: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("x", x)?;
    let z = (6.0 * lambda).powf(0.25) * x;
    let e = (-z).exp();
    let sech2 = 4.0 * e * e / ((1.0 + e * e) * (1.0 + e * e));
    Ok(3f64.powf(1.5) * sech2 / (1.0 + 2.0 * sech2).powf(1.5))
}

/// Prefactor and exponent rate of one conditioned block; `root` selects the
/// power of `6λ` in front of the `coth²` term (`1/2` is the consistent one).
fn block(lambda: f64, x: f64, root: f64) -> (f64, f64) {
    if lambda == 0.0 {
        return (1.0, 0.0);
    }
    let s = 6.0 * lambda;
    let z = s.powf(0.25) * x;
    let (c, coth2) = hyperbolic(z);
    let pre = x.powi(3) * s.powf(0.75) * c;
    let rate = s.powf(root) * (coth2 - 2.0 / 3.0) - 1.0 / (x * x);
    (pre, rate)
}

/// `lim E[exp(−λ|B_{xR}|/R⁴) | |∂B_{xR}| = ℓR²]`
/// `= x³(6λ)^{3/4} cosh z / sinh³ z · exp(−ℓ(√(6λ)(coth² z − 2/3) − 1/x²))`.
pub fn hull_cond_limit(lambda: f64, x: f64, ell: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("x", x)?;
    positive("ell", ell)?;
    let (pre, rate) = block(lambda, x, 0.5);
    Ok(pre * (-ell * rate).exp())
}

/// The same display with `(6λ)^{1/4}` in the exponent; kept to show that it
/// fails the `λ → 0` check and disagrees with the finite-size values.
pub fn hull_cond_limit_printed(lambda: f64, x: f64, ell: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("x", x)?;
    positive("ell", ell)?;
    let (pre, rate) = block(lambda, x, 0.25);
    Ok(pre * (-ell * rate).exp())
}

fn slice_limit_with(x: f64, ell: f64, arcs: &[f64], lambdas: &[f64], root: f64) -> Result<f64> {
    positive("x", x)?;
    positive("ell", ell)?;
    if arcs.is_empty() || arcs.len() != lambdas.len() {
        return Err(AsymptoticsError::Domain(
            "arcs and lambdas must have equal nonzero length".into(),
        ));
    }
    let total: f64 = arcs.iter().sum();
    if arcs.iter().any(|&a| !(a > 0.0)) || (total - ell).abs() > 1e-12 * ell.max(1.0) {
        return Err(AsymptoticsError::Domain(format!(
            "arcs {arcs:?} must be positive and sum to ell = {ell}"
        )));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(AsymptoticsError::Domain("lambdas must be nonnegative".into()));
    }
    let mut sum = 0.0;
    let mut expo = 0.0;
    for (&a, &l) in arcs.iter().zip(lambdas) {
        let (pre, rate) = block(l, x, root);
        sum += a / ell * pre;
        expo += a * rate;
    }
    Ok(sum * (-expo).exp())
}

/// Joint limit of the slice volumes for arcs `ℓ_i` with parameters `λ_i`.
pub fn slice_limit(x: f64, ell: f64, arcs: &[f64], lambdas: &[f64]) -> Result<f64> {
    slice_limit_with(x, ell, arcs, lambdas, 0.5)
}

pub fn slice_limit_printed(x: f64, ell: f64, arcs: &[f64], lambdas: &[f64]) -> Result<f64> {
    slice_limit_with(x, ell, arcs, lambdas, 0.25)
}

/// Density `(2πx⁵)^{−1/2} e^{−1/(2x)}` of `ξ`.
pub fn xi_density(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-0.5 / x).exp() / (2.0 * std::f64::consts::PI * x.powi(5)).sqrt()
}

/// Quadrature of `E[e^{−λξ}]` next to the two closed-form candidates.
#[derive(Clone, Debug, Serialize)]
pub struct XiLaplace {
    pub lambda: f64,
    pub quadrature: f64,
    pub error_estimate: f64,
    /// `(1 + √(2λ)) e^{−√(2λ)}`.
    pub candidate_sqrt: f64,
    /// `(1 + √(2λ)) e^{−2λ}`.
    pub candidate_linear: f64,
    pub deviation_sqrt: f64,
    pub deviation_linear: f64,
}

impl XiLaplace {
    /// Name of the candidate within `tol` of the quadrature, if exactly one is.
    pub fn matching(&self, tol: f64) -> Option<&'static str> {
        match (self.deviation_sqrt <= tol, self.deviation_linear <= tol) {
            (true, false) => Some("sqrt"),
            (false, true) => Some("linear"),
            _ => None,
        }
    }
}

pub const XI_TOLERANCE: f64 = 1e-8;

pub fn xi_laplace(lambda: f64) -> Result<XiLaplace> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(AsymptoticsError::Domain(format!(
            "lambda = {lambda} must be nonnegative"
        )));
    }
    // x = 1/w², then w = v/(1−v): ∫₀¹ 2w² e^{−w²/2 − λ/w²} / √(2π) dw/dv dv
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let f = |v: f64| {
        if v <= 0.0 || v >= 1.0 {
            return 0.0;
        }
        let w = v / (1.0 - v);
        let dw = 1.0 / ((1.0 - v) * (1.0 - v));
        let e = -0.5 * w * w - if lambda > 0.0 { lambda / (w * w) } else { 0.0 };
        2.0 * w * w * e.exp() * dw / norm
    };
    let out = quadrature::double_exponential::integrate(f, 0.0, 1.0, 1e-12);
    if !(out.error_estimate <= XI_TOLERANCE) {
        return Err(AsymptoticsError::Quadrature {
            target: XI_TOLERANCE,
            estimate: out.error_estimate,
        });
    }
    let a = (2.0 * lambda).sqrt();
    let candidate_sqrt = (1.0 + a) * (-a).exp();
    let candidate_linear = (1.0 + a) * (-2.0 * lambda).exp();
    Ok(XiLaplace {
        lambda,
        quadrature: out.integral,
        error_estimate: out.error_estimate,
        candidate_sqrt,
        candidate_linear,
        deviation_sqrt: (out.integral - candidate_sqrt).abs(),
        deviation_linear: (out.integral - candidate_linear).abs(),
    })
}

/// `e^{−a}(1 + a)` with `a = (2/3) δ √(6λ)`, the transform of `(4/3)δ² ξ`.
pub fn hulldiff_limit(lambda: f64, delta: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("delta", delta)?;
    let a = 2.0 / 3.0 * delta * (6.0 * lambda).sqrt();
    Ok((-a).exp() * (1.0 + a))
}

#[derive(Clone, Debug, Serialize)]
pub struct HulldiffCheck {
    pub n: u64,
    pub p: usize,
    pub q: usize,
    pub finite: f64,
    pub limit: f64,
    pub rel_gap: f64,
}

/// `t^{q−p} [u^p] φ_t^q / [u^p] φ^q` at `s = e^{−λ/n⁴}`, `p = ⌊ℓn²⌋`,
/// `q = ⌊(ℓ−δ)n²⌋`, against [`hulldiff_limit`].
pub fn hulldiff_finite_check(ell: f64, delta: f64, lambda: f64, n: u64) -> Result<HulldiffCheck> {
    positive("delta", delta)?;
    positive("lambda", lambda)?;
    if !(ell > delta) {
        return Err(AsymptoticsError::Domain("need ell > delta".into()));
    }
    let n2 = (n * n) as f64;
    let p = (ell * n2).floor() as usize;
    let q = ((ell - delta) * n2).floor() as usize;
    if p > 10_000 || q == 0 {
        return Err(AsymptoticsError::Domain(format!(
            "p = {p}, q = {q} outside the supported range"
        )));
    }
    let s = (-lambda / (n2 * n2)).exp();
    let pair = CriticalPair::from_s(s)?;
    let gt = phi_t_coeffs(&pair, p);
    let g1 = phi_t_coeffs(&CriticalPair::critical(), p);
    let lt = ln_coeff_of_power(gt.coeffs(), q as u64, p);
    let l1 = ln_coeff_of_power(g1.coeffs(), q as u64, p);
    let ln_t = (-pair.one_minus_t).ln_1p();
    let finite = ((q as f64 - p as f64) * ln_t + lt - l1).exp();
    let limit = hulldiff_limit(lambda, delta)?;
    Ok(HulldiffCheck {
        n,
        p,
        q,
        finite,
        limit,
        rel_gap: (finite - limit).abs() / limit,
    })
}

/// Sum of a series whose terms decay like `C k^{−β}` along each residue
/// class mod `stride`; the tail of each class is added by Euler–Maclaurin with
/// `β` estimated from the last terms.
pub fn tail_corrected_sum(terms: &[f64], stride: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..stride {
        let class: Vec<f64> = terms.iter().skip(c).step_by(stride).copied().collect();
        total += class.iter().sum::<f64>();
        let n = class.len();
        if n < 8 {
            continue;
        }
        let (a_n, a_half) = (class[n - 1], class[n / 2 - 1]);
        if a_n == 0.0 || a_half / a_n <= 1.0 {
            continue;
        }
        let nf = n as f64;
        let beta = (a_half / a_n).ln() / (nf / (n / 2) as f64).ln();
        if beta <= 1.0 {
            continue;
        }
        total += a_n * (nf / (beta - 1.0) - 0.5 + beta / (12.0 * nf));
    }
    total
}

/// `h(ρ)` from `n` series terms with a tail correction.
pub fn h_at_rho(n: usize) -> f64 {
    tail_corrected_sum(&h_terms_at_rho(n), 2)
}

/// `T(ρ, α)` from the expansion in `z` of `T(ρz, α)`, which reads
/// `(1 − z/√3)/2 + √(z²/3 − 1/3 + (1 − h(ρz)/α)²)/2`, summed at `z = 1`.
pub fn t_rho_alpha(n: usize) -> f64 {
    let d = h_terms_at_rho(n);
    let mut one_minus_h = vec![0.0; n + 1];
    one_minus_h[0] = 1.0;
    for (k, v) in d.iter().enumerate().take(n + 1) {
        one_minus_h[k] -= v / ALPHA;
    }
    let omh = Series::from_poly(one_minus_h, n);
    let mut rad = omh.mul(&omh);
    let mut c = rad.coeffs().to_vec();
    c[0] -= 1.0 / 3.0;
    if n >= 2 {
        c[2] += 1.0 / 3.0;
    }
    rad = Series::from_poly(c, n);
    let root = rad.sqrt().expect("positive constant term");
    let s = tail_corrected_sum(root.coeffs(), 2);
    (1.0 - 1.0 / 3f64.sqrt()) / 2.0 + s / 2.0
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderRow {
    #[serde(rename = "R")]
    pub scale: u64,
    pub finite: f64,
    pub limit: f64,
    pub rel_gap: f64,
}

impl LadderRow {
    fn new(scale: u64, finite: f64, limit: f64) -> Self {
        LadderRow {
            scale,
            finite,
            limit,
            rel_gap: (finite - limit).abs() / limit,
        }
    }
}

pub const LADDER: [u64; 4] = [25, 50, 100, 200];

fn s_of(lambda: f64, big_r: u64) -> f64 {
    (-lambda / (big_r as f64).powi(4)).exp()
}

fn floor_u64(v: f64) -> u64 {
    v.floor() as u64
}

/// Finite `E[s^{|B_r|}]` at `s = e^{−λ/R⁴}`, `r = ⌊xR⌋` against [`hull_limit`].
pub fn hull_ladder(lambda: f64, x: f64, scales: &[u64]) -> Result<Vec<LadderRow>> {
    let limit = hull_limit(lambda, x)?;
    scales
        .iter()
        .map(|&big_r| {
            let r = floor_u64(x * big_r as f64);
            let v = laws::hull_volume_gf_closed(s_of(lambda, big_r), r)?;
            Ok(LadderRow::new(big_r, v, limit))
        })
        .collect()
}

/// Conditioned hull via the layer GF with `p = 1`, `q = ⌊ℓR²⌋`.
pub fn hull_cond_ladder(lambda: f64, x: f64, ell: f64, scales: &[u64]) -> Result<Vec<LadderRow>> {
    let limit = hull_cond_limit(lambda, x, ell)?;
    scales
        .iter()
        .map(|&big_r| {
            let r = floor_u64(x * big_r as f64);
            let q = (ell * (big_r * big_r) as f64).floor() as usize;
            let v = laws::layer_volume_gf(s_of(lambda, big_r), r, 1, q)?;
            Ok(LadderRow::new(big_r, v, limit))
        })
        .collect()
}

/// Slice GF with arcs `⌊ℓ_i R²⌋` and `s_i = e^{−λ_i/R⁴}`.
pub fn slice_ladder(x: f64, arcs: &[f64], lambdas: &[f64], scales: &[u64]) -> Result<Vec<LadderRow>> {
    let ell: f64 = arcs.iter().sum();
    let limit = slice_limit(x, ell, arcs, lambdas)?;
    scales
        .iter()
        .map(|&big_r| {
            let r = floor_u64(x * big_r as f64);
            let r2 = (big_r * big_r) as f64;
            let qs: Vec<usize> = arcs.iter().map(|a| (a * r2).floor() as usize).collect();
            let q = qs.iter().sum();
            let ss: Vec<f64> = lambdas.iter().map(|&l| s_of(l, big_r)).collect();
            let v = laws::slice_gf(r, q, &qs, &ss)?;
            Ok(LadderRow::new(big_r, v, limit))
        })
        .collect()
}

pub fn hulldiff_ladder(ell: f64, delta: f64, lambda: f64, ns: &[u64]) -> Result<Vec<HulldiffCheck>> {
    ns.iter()
        .map(|&n| hulldiff_finite_check(ell, delta, lambda, n))
        .collect()
}

/// True when relative gaps strictly decrease along the ladder.
pub fn gaps_decrease(gaps: &[f64]) -> bool {
    gaps.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_at_zero() {
        assert!((hull_limit(1e-14, 1.0).unwrap() - 1.0).abs() < 1e-6);
        assert!((hull_limit(1.0, 1e-9).unwrap() - 1.0).abs() < 1e-9);
        assert!((hull_cond_limit(1e-10, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-4);
        assert!(hull_cond_limit_printed(1e-10, 1.0, 1.0).unwrap() < 1e-3);
        assert!((slice_limit(1.0, 1.0, &[0.4, 0.6], &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let a = slice_limit(1.3, 2.0, &[2.0], &[0.7]).unwrap();
        assert!((a - hull_cond_limit(0.7, 1.3, 2.0).unwrap()).abs() < 1e-15);
        assert!(slice_limit(1.0, 1.0, &[0.5, 0.6], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn hyperbolic_matches_naive() {
        for z in [0.01, 0.5, 2.0, 10.0] {
            let (c, k) = hyperbolic(z);
            let (ch, sh) = (f64::cosh(z), f64::sinh(z));
            assert!((c - ch / sh.powi(3)).abs() < 1e-10 * c);
            assert!((k - (ch / sh).powi(2)).abs() < 1e-12 * k);
        }
    }

    #[test]
    fn xi_transform() {
        let z = xi_laplace(0.0).unwrap();
        assert!((z.quadrature - 1.0).abs() < 1e-10);
        let mut last = 1.0;
        for l in [0.25, 0.5, 1.0, 4.0] {
            let x = xi_laplace(l).unwrap();
            // at λ = 1/2 the two candidates coincide
            if l != 0.5 {
                assert_eq!(x.matching(1e-6), Some("sqrt"), "{x:?}");
            }
            assert!(x.quadrature < last);
            last = x.quadrature;
        }
        for (l, d) in [(1.0, 1.0), (0.3, 0.7)] {
            let a = hulldiff_limit(l, d).unwrap();
            let b = xi_laplace(4.0 / 3.0 * d * d * l).unwrap().quadrature;
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constants_at_rho() {
        assert!((h_at_rho(10_000) - 1.0 / 12.0).abs() < 1e-6);
        let want = (3.0 - 3f64.sqrt()) / 6.0;
        assert!((t_rho_alpha(4000) - want).abs() < 1e-4);
    }

    #[test]
    fn hull_ladder_converges() {
        let rows = hull_ladder(1.0, 1.0, &LADDER).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
        assert!(gaps_decrease(&gaps), "{gaps:?}");
        assert!(gaps[3] < 0.05);
    }

    #[test]
    fn conditioned_and_slice_ladders_converge() {
        let rows = hull_cond_ladder(1.0, 1.0, 1.0, &LADDER).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
        assert!(gaps_decrease(&gaps) && gaps[3] < 0.05);
        let rows = slice_ladder(1.0, &[0.5, 0.5], &[1.0, 2.0], &LADDER).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
        assert!(gaps_decrease(&gaps) && gaps[3] < 0.05);
    }

    #[test]
    fn jump_law_ladder() {
        let rows = hulldiff_ladder(1.0, 0.3, 1.0, &[20, 40, 60]).unwrap();
        let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
        assert!(gaps_decrease(&gaps) && gaps[2] < 0.05);
        // p ≈ q: the ratio approaches 1 as n grows
        let a = hulldiff_finite_check(1.0, 1e-3, 1.0, 20).unwrap();
        let b = hulldiff_finite_check(1.0, 1e-3, 1.0, 40).unwrap();
        assert!(a.rel_gap < 0.1 && b.rel_gap < a.rel_gap, "{a:?} {b:?}");
    }
}
