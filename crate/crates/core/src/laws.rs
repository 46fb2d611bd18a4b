//! Exact finite-size laws: perimeters of hulls, perimeter transitions, the
//! hull-volume generating function (two routes) and its mass function, layer
//! volumes and slice volumes.

use serde::Serialize;
use thiserror::Error;

use crate::enumeration::{self, k_weight, ln_k_weight, EnumError};
use crate::series::{ln_coeff_of_power, q, QSqrt3, Ring, Series, SeriesError, Q};
use crate::skeleton::{self, iterate_gap0, iterate_prime0, CriticalPair, SkeletonError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Enumeration(#[from] EnumError),
    #[error("negative probability {value} at n = {n}")]
    NegativeCoefficient { n: usize, value: f64 },
    #[error("value underflows: {0}")]
    Underflow(String),
}

/// `P(|∂B_r| = q)` for `q ≤ qmax`.
#[derive(Clone, Debug, Serialize)]
pub struct PerimeterPmf {
    pub r: u64,
    /// `probs[q - 1] = P(q)`.
    pub probs: Vec<f64>,
    /// Upper bound on the mass beyond `qmax`.
    pub tail_bound: f64,
}

impl PerimeterPmf {
    pub fn prob(&self, q: usize) -> f64 {
        if q == 0 {
            0.0
        } else {
            self.probs.get(q - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn total(&self) -> f64 {
        enumeration::neumaier_sum(&self.probs)
    }
}

fn x_of_r(r: u64) -> Q {
    let r1 = (r + 1) as i64;
    Q::one().sub(&q(1, r1 * r1))
}

/// `P(q) = K(q) (1 − 1/(r+1)²)^{q−1} / (r+1)³` exactly.
pub fn perimeter_prob_exact(r: u64, qq: usize) -> Q {
    assert!(qq >= 1);
    let r1 = (r + 1) as i64;
    k_weight(qq) * x_of_r(r).pow(qq as i32 - 1) * q(1, r1 * r1 * r1)
}

pub fn ln_perimeter_prob(r: u64, qq: usize) -> f64 {
    let r1 = (r + 1) as f64;
    let lx = (-1.0 / (r1 * r1)).ln_1p();
    ln_k_weight(qq) + (qq as f64 - 1.0) * lx - 3.0 * r1.ln()
}

pub fn perimeter_pmf(r: u64, qmax: usize) -> Result<PerimeterPmf, LawError> {
    if r == 0 || qmax == 0 {
        return Err(LawError::Domain("need r ≥ 1 and qmax ≥ 1".into()));
    }
    let probs: Vec<f64> = (1..=qmax).map(|qq| ln_perimeter_prob(r, qq).exp()).collect();
    // successive ratios x(2q+1)/(2q) decrease in q
    let r1 = (r + 1) as f64;
    let x = 1.0 - 1.0 / (r1 * r1);
    let ratio = x * (2 * qmax + 1) as f64 / (2 * qmax) as f64;
    let tail_bound = if ratio < 1.0 {
        probs[qmax - 1] * ratio / (1.0 - ratio)
    } else {
        1.0
    };
    Ok(PerimeterPmf { r, probs, tail_bound })
}

pub fn perimeter_pmf_exact(r: u64, qmax: usize) -> Vec<Q> {
    (1..=qmax).map(|qq| perimeter_prob_exact(r, qq)).collect()
}

/// `K(q) (1/q) [u](φ^{r})^q` with the iterate expanded as an exact series.
pub fn perimeter_prob_coefficient_route(r: u64, qq: usize) -> Result<Q, LawError> {
    let g = skeleton::iterate_series_critical(r, 1)?;
    let c = g.powi(qq as u64).coeffs()[1].clone();
    Ok(k_weight(qq) * c * q(1, qq as i64))
}

/// `P(P_{i+r} = q | P_i = p) = K(q)/K(p) · (p/q) · [u^p](φ^{r})^q`, exactly.
pub fn perimeter_transition_exact(p: usize, qq: usize, r: u64) -> Result<Q, LawError> {
    check_pq(p, qq, r)?;
    let g = skeleton::iterate_series_critical(r, p)?;
    let c = g.powi(qq as u64).coeff(p)?.clone();
    Ok(k_weight(qq) / k_weight(p) * q(p as i64, qq as i64) * c)
}

fn check_pq(p: usize, qq: usize, r: u64) -> Result<(), LawError> {
    if p == 0 || qq == 0 || r == 0 {
        return Err(LawError::Domain("need p, q, r ≥ 1".into()));
    }
    Ok(())
}

/// Float version of [`perimeter_transition_exact`], computed in log space.
pub fn perimeter_transition(p: usize, qq: usize, r: u64) -> Result<f64, LawError> {
    check_pq(p, qq, r)?;
    let g = skeleton::iterate_series_float(&CriticalPair::critical(), r, p)?;
    Ok(transition_from_series(g.coeffs(), p, qq))
}

fn transition_from_series(g: &[f64], p: usize, qq: usize) -> f64 {
    let l = ln_k_weight(qq) - ln_k_weight(p) + (p as f64 / qq as f64).ln() + ln_coeff_of_power(g, qq as u64, p);
    l.exp()
}

/// Row `q ↦ P(p → q)` in `r` steps for `q = 1..=qmax`.
pub fn perimeter_transition_row(p: usize, r: u64, qmax: usize) -> Result<Vec<f64>, LawError> {
    check_pq(p, 1, r)?;
    let g = skeleton::iterate_series_float(&CriticalPair::critical(), r, p)?;
    Ok((1..=qmax).map(|qq| transition_from_series(g.coeffs(), p, qq)).collect())
}

/// `E[s^{|B_r|}]` from the hyperbolic closed form.
pub fn hull_volume_gf_closed(s: f64, r: u64) -> Result<f64, LawError> {
    let pair = CriticalPair::from_s(s)?;
    if r == 0 {
        // B_0 is the root alone
        return Ok(s);
    }
    if pair.is_critical() {
        return Ok(1.0);
    }
    if pair.t == 0.0 {
        return Ok(0.0);
    }
    let w = (r + 1) as f64 * pair.b().sqrt().asinh();
    // 3^{3/2} cosh w / (cosh² w + 2)^{3/2} = 3^{3/2} sech² w / (1 + 2 sech² w)^{3/2}
    let e = (-w).exp();
    let sech2 = 4.0 * e * e / ((1.0 + e * e) * (1.0 + e * e));
    Ok(3f64.powf(1.5) * sech2 / (1.0 + 2.0 * sech2).powf(1.5))
}

/// `E[s^{|B_r|}] = s (1 − t φ_t^{r}(0))^{−3/2} [u]φ_t^{r}`.
pub fn hull_volume_gf_iterate(s: f64, r: u64) -> Result<f64, LawError> {
    let pair = CriticalPair::from_s(s)?;
    if pair.t == 0.0 {
        return Ok(0.0);
    }
    let gap = iterate_gap0(&pair, r)?;
    let base = pair.one_minus_t + pair.t * gap;
    Ok(s * base.powf(-1.5) * iterate_prime0(&pair, r)?)
}

/// Exact mass function of the hull volume.
#[derive(Clone, Debug, Serialize)]
pub struct HullPmf {
    pub r: u64,
    /// `P(V = n)` in `Q(√3)` for `n ≤ nmax`.
    #[serde(skip)]
    pub exact: Vec<QSqrt3>,
    pub probs: Vec<f64>,
    pub partial_sum: f64,
}

/// `P(|B_r| = n)` for `n ≤ nmax`.
///
/// Every ingredient of the iterate formula is a power series in `t` with
/// rational coefficients; the result is re-expanded in `s` by composing with
/// the reversion of `s(t) = √3 t √(1 − 2t/3)` in `Q(√3)`.
pub fn hull_volume_pmf(r: u64, nmax: usize) -> Result<HullPmf, LawError> {
    if nmax == 0 {
        return Err(LawError::Domain("nmax must be at least 1".into()));
    }
    let n = nmax;
    let theta = theta_t_series(n)?;
    let mut a = Series::<Q>::zero(n);
    let mut d = Series::<Q>::one(n);
    for _ in 0..r {
        let (val, der) = horner_with_derivative(&theta, &a);
        d = d.mul(&der);
        a = val;
    }
    let t = Series::<Q>::var(n);
    let one_minus_ta = Series::one(n).sub(&t.mul(&a));
    let root = one_minus_ta.sqrt()?;
    let inv_pow = root.mul(&root).mul(&root).inv()?;
    let root_s = Series::one(n).sub(&t.scale(&q(2, 3))).sqrt()?;
    let g = t.mul(&root_s).mul(&inv_pow).mul(&d);
    // F(t) = √3 · G(t); s(t) = √3 · t · √(1 − 2t/3)
    let lift = |x: &Series<Q>| x.map(|c| QSqrt3::new(Q::zero(), c.clone()));
    let f = lift(&g);
    let s_of_t = lift(&t.mul(&root_s));
    let t_of_s = s_of_t.revert()?;
    let pmf = f.compose(&t_of_s)?;
    let mut probs = Vec::with_capacity(n + 1);
    for (k, c) in pmf.coeffs().iter().enumerate() {
        let v = c.to_f64();
        if c.signum() < 0 {
            return Err(LawError::NegativeCoefficient { n: k, value: v });
        }
        probs.push(v);
    }
    let partial_sum = probs.iter().sum();
    Ok(HullPmf {
        r,
        exact: pmf.into_coeffs(),
        probs,
        partial_sum,
    })
}

/// `θ_t(i)` as power series in `t` for `i ≤ n`, each known to order `n`.
fn theta_t_series(n: usize) -> Result<Vec<Series<Q>>, LawError> {
    let t = Series::<Q>::var(n);
    let kappa = t.mul(&Series::from_poly(vec![Q::from_i64(3), Q::from_i64(-2)], n).inv()?);
    let mut e = kappa.scale(&q(1, 4));
    let mut out = vec![Series::one(n).sub(&e)];
    for k in 1..=n {
        let next = e.mul(&kappa).scale(&q(2 * k as i64 + 1, 2 * (k as i64 + 2)));
        out.push(e.sub(&next));
        e = next;
    }
    Ok(out)
}

/// `(Σ θ_i a^i, Σ i θ_i a^{i−1})` by Horner's rule.
fn horner_with_derivative(theta: &[Series<Q>], a: &Series<Q>) -> (Series<Q>, Series<Q>) {
    let n = a.order();
    let mut val = theta[theta.len() - 1].clone();
    let mut der = Series::zero(n);
    for th in theta[..theta.len() - 1].iter().rev() {
        der = der.mul(a).add(&val);
        val = val.mul(a).add(th);
    }
    (val, der)
}

/// `E[s^{|L|} | P = p, P′ = q]` for a layer of height `r`:
/// `s^p t^{q−p} [u^p](φ_t^{r})^q / [u^p](φ^{r})^q`.
pub fn layer_volume_gf(s: f64, r: u64, p: usize, qq: usize) -> Result<f64, LawError> {
    check_pq(p, qq, r)?;
    let pair = CriticalPair::from_s(s)?;
    if pair.is_critical() {
        return Ok(1.0);
    }
    if pair.t == 0.0 {
        return Ok(0.0);
    }
    let gt = skeleton::iterate_series_float(&pair, r, p)?;
    let g1 = skeleton::iterate_series_float(&CriticalPair::critical(), r, p)?;
    let lt = ln_coeff_of_power(gt.coeffs(), qq as u64, p);
    let l1 = ln_coeff_of_power(g1.coeffs(), qq as u64, p);
    if !lt.is_finite() || !l1.is_finite() {
        return Err(LawError::Underflow(format!("[u^{p}] power {qq} at r = {r}")));
    }
    let ln_t = (-pair.one_minus_t).ln_1p();
    Ok((p as f64 * s.ln() + (qq as f64 - p as f64) * ln_t + lt - l1).exp())
}

/// `E[s^{|B_r|} | |∂B_r| = q] = s t^{q−1} (φ_t^{r}(0)/φ^{r}(0))^{q−1} [u]φ_t^{r} / [u]φ^{r}`.
pub fn hull_volume_gf_conditional(s: f64, r: u64, qq: usize) -> Result<f64, LawError> {
    check_pq(1, qq, r)?;
    let pair = CriticalPair::from_s(s)?;
    if pair.t == 0.0 {
        return Ok(0.0);
    }
    let crit = CriticalPair::critical();
    let lr = ln_iterate_ratio(&pair, r)?;
    let ln_t = (-pair.one_minus_t).ln_1p();
    let prime = iterate_prime0(&pair, r)? / iterate_prime0(&crit, r)?;
    Ok(s * ((qq as f64 - 1.0) * (ln_t + lr)).exp() * prime)
}

/// `ln(φ_t^{r}(0) / φ^{r}(0))`, accurate near criticality.
fn ln_iterate_ratio(pair: &CriticalPair, r: u64) -> Result<f64, LawError> {
    let crit = CriticalPair::critical();
    let (gt, g1) = (iterate_gap0(pair, r)?, iterate_gap0(&crit, r)?);
    Ok((-gt).ln_1p() - (-g1).ln_1p())
}

/// Joint generating function of the shifted slice volumes for boundary arcs
/// `arcs` (summing to `q`) with variables `values`.
pub fn slice_gf(r: u64, qq: usize, arcs: &[usize], values: &[f64]) -> Result<f64, LawError> {
    if r == 0 {
        return Err(LawError::Domain("r must be at least 1".into()));
    }
    if arcs.is_empty() || arcs.len() != values.len() {
        return Err(LawError::Domain(
            "arcs and values must have the same nonzero length".into(),
        ));
    }
    if arcs.contains(&0) || arcs.iter().sum::<usize>() != qq {
        return Err(LawError::Domain(format!(
            "arcs {arcs:?} must be positive and sum to q = {qq}"
        )));
    }
    let crit = CriticalPair::critical();
    let prime1 = iterate_prime0(&crit, r)?;
    let mut ln_prod = 0.0;
    let mut sum = 0.0;
    for (&qk, &s) in arcs.iter().zip(values) {
        if !(s > 0.0 && s <= 1.0) {
            return Err(LawError::Domain(format!("s = {s} outside (0,1]")));
        }
        let pair = CriticalPair::from_s(s)?;
        let ln_t = (-pair.one_minus_t).ln_1p();
        let lr = ln_iterate_ratio(&pair, r)?;
        ln_prod += qk as f64 * (ln_t + lr);
        let prime = iterate_prime0(&pair, r)? / prime1;
        sum += qk as f64 / qq as f64 / pair.t * prime * (-lr).exp();
    }
    Ok(ln_prod.exp() * sum)
}

/// Brute-force reference for [`slice_gf`]: sums over all skeleton forests of
/// height `r ∈ {1, 2}` with `q` trees, at most `mmax` vertices in the middle
/// generation, weighting slots by exact Boltzmann generating functions.
pub mod oracle {
    use super::*;
    use crate::enumeration::{boundary_at_rho, TriangulationCounts, RHO};
    use crate::series::q_to_f64;
    use num_bigint::BigInt;
    use num_traits::Zero;

    /// Value and certified bound on the truncation error.
    #[derive(Clone, Debug, Serialize)]
    pub struct Certified {
        pub value: f64,
        pub error_bound: f64,
    }

    /// `E[s^{n+1}]` for `n` the inner-vertex count of a Boltzmann triangulation
    /// of the `(c+2)`-gon, from exact counts.
    struct SlotGf {
        counts: &'static TriangulationCounts,
        nterms: usize,
    }

    /// Counts are shared across calls: the exact disk series dominates the cost.
    static COUNTS: std::sync::OnceLock<TriangulationCounts> = std::sync::OnceLock::new();

    impl SlotGf {
        fn new(nterms: usize, pmax: usize) -> Result<Self, LawError> {
            let counts = COUNTS.get_or_init(TriangulationCounts::new);
            let (n0, p0) = counts.extent();
            counts.warm(nterms.max(n0), pmax.max(p0))?;
            Ok(SlotGf { counts, nterms })
        }

        /// Value and error bound. The tail `Σ_{n>N} P(n) s^{n+1}` is at most
        /// `s^{N+2}` times the mass not covered by the computed terms.
        fn eval(&self, c: usize, s: f64) -> Result<(f64, f64), LawError> {
            let p = c + 2;
            if s == 1.0 {
                return Ok((1.0, 0.0));
            }
            let ln_tp = boundary_at_rho(p).to_f64().ln();
            let (ln_rho, ln_s) = (RHO.ln(), s.ln());
            let mut acc = 0.0;
            let mut mass = 0.0;
            for n in 0..=self.nterms {
                let count = self.counts.count(n, p)?;
                if count.is_zero() {
                    continue;
                }
                let pn = (ln_bigint(&count) + n as f64 * ln_rho - ln_tp).exp();
                mass += pn;
                acc += pn * ((n + 1) as f64 * ln_s).exp();
            }
            let slack = 1e-14 * self.nterms as f64;
            let tail = s.powi(self.nterms as i32 + 2) * (1.0 - mass).max(0.0);
            Ok((acc, tail + slack))
        }
    }

    fn ln_bigint(x: &BigInt) -> f64 {
        let bits = x.bits();
        if bits <= 1000 {
            return q_to_f64(&Q::from_integer(x.clone())).ln();
        }
        let shift = bits - 1000;
        q_to_f64(&Q::from_integer(x >> shift)).ln() + shift as f64 * std::f64::consts::LN_2
    }

    fn compositions(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
        fn rec(rest: usize, parts: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
            if parts == 1 {
                cur.push(rest);
                f(cur);
                cur.pop();
                return;
            }
            for c in 0..=rest {
                cur.push(c);
                rec(rest - c, parts - 1, cur, f);
                cur.pop();
            }
        }
        if parts == 0 {
            if total == 0 {
                f(&[]);
            }
            return;
        }
        rec(total, parts, &mut Vec::with_capacity(parts), f);
    }

    pub fn slice_gf_bruteforce(
        r: u64,
        qq: usize,
        arcs: &[usize],
        values: &[f64],
        mmax: usize,
        nterms: usize,
    ) -> Result<Certified, LawError> {
        if !(r == 1 || r == 2) {
            return Err(LawError::Domain("brute force covers r = 1 and r = 2".into()));
        }
        if arcs.iter().sum::<usize>() != qq || arcs.len() != values.len() {
            return Err(LawError::Domain("arcs must sum to q".into()));
        }
        let theta = skeleton::OffspringLaw::critical().theta_vec(mmax + 1);
        let mmax = if r == 1 { 1 } else { mmax };
        let slots = SlotGf::new(nterms, mmax + 2)?;
        // arc label of tree k under rotation i
        let label = |i: usize, k: usize| {
            let pos = (k + qq - i) % qq;
            let mut acc = 0;
            for (j, &a) in arcs.iter().enumerate() {
                acc += a;
                if pos < acc {
                    return j;
                }
            }
            unreachable!()
        };
        // table[j][c] = slot GF at values[j] for c children
        let mut table = Vec::with_capacity(values.len());
        let mut slot_err = 0.0f64;
        for &s in values {
            let mut row = Vec::with_capacity(mmax + 1);
            for c in 0..=mmax {
                let (v, e) = slots.eval(c, s)?;
                slot_err = slot_err.max(e);
                row.push(v);
            }
            table.push(row);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        let mut visit = |top: &[usize], mid: &[usize]| {
            let mut w = 1.0;
            for &c in top.iter().chain(mid) {
                w *= theta[c];
            }
            // tree index of each middle vertex
            let mut parent = Vec::with_capacity(mid.len());
            for (k, &c) in top.iter().enumerate() {
                parent.extend(std::iter::repeat_n(k, c));
            }
            let mut rot = 0.0;
            for i in 0..qq {
                let mut g = 1.0;
                for (k, &c) in top.iter().enumerate() {
                    g *= table[label(i, k)][c];
                }
                for (j, &c) in mid.iter().enumerate() {
                    g *= table[label(i, parent[j])][c];
                }
                rot += g;
            }
            num += w * rot / qq as f64;
            den += w;
        };
        if r == 1 {
            // one vertex at height 1, in the first tree
            let mut top = vec![0; qq];
            top[0] = 1;
            visit(&top, &[]);
        } else {
            for m in 1..=mmax {
                compositions(m, qq, &mut |top: &[usize]| {
                    // the height-2 vertex hangs below one of the first top[0] middle vertices
                    for j in 0..top[0] {
                        let mut mid = vec![0; m];
                        mid[j] = 1;
                        visit(top, &mid);
                    }
                });
            }
        }
        // dropped forests: weight of middle size m is θ(1) θ(0)^{m−1} [u^m](u φ′ φ^{q−1})
        let dropped = if r == 1 {
            0.0
        } else {
            let horizon = 4 * mmax + 200;
            let th = skeleton::OffspringLaw::critical().theta_vec(horizon);
            let dphi: Vec<f64> = (0..=horizon).map(|k| k as f64 * th[k]).collect();
            let mut f = dphi;
            for _ in 1..qq {
                f = crate::series::conv_trunc(&f, &th, horizon);
            }
            let mut acc = 0.0;
            for (m, fm) in f.iter().enumerate().skip(mmax + 1) {
                acc += th[1] * th[0].powi(m as i32 - 1) * fm;
            }
            // geometric remainder past the horizon, [u^m] ≤ m
            let x = th[0];
            let h = horizon as f64;
            acc + th[1] * x.powf(h) * (h + 1.0) / ((1.0 - x) * (1.0 - x))
        };
        let verts = (qq + mmax) as f64;
        let value = num / den;
        Ok(Certified {
            value,
            error_bound: verts * slot_err + 2.0 * dropped / den,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perimeter_examples() {
        assert_eq!(perimeter_prob_exact(1, 1), q(1, 8));
        let want = k_weight(3) * q(8, 9).pow(2) * q(1, 27);
        assert_eq!(perimeter_prob_exact(2, 3), want);
        assert_eq!(perimeter_prob_coefficient_route(2, 3).unwrap(), want);
        for r in 1..=20 {
            let pmf = perimeter_pmf(r, 20_000).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-10, "r={r}");
            assert!(pmf.tail_bound < 1e-10);
        }
    }

    #[test]
    fn transition_from_root_loop_is_perimeter_law() {
        for qq in 1..=6 {
            assert_eq!(
                perimeter_transition_exact(1, qq, 2).unwrap(),
                perimeter_prob_exact(2, qq)
            );
            let f = perimeter_transition(1, qq, 2).unwrap();
            assert!((f - perimeter_prob_exact(2, qq).to_f64()).abs() < 1e-15);
        }
        let e = perimeter_transition_exact(3, 5, 1).unwrap().to_f64();
        assert!((perimeter_transition(3, 5, 1).unwrap() - e).abs() < 1e-14 * e.max(1.0));
    }

    #[test]
    fn transition_rows_are_stochastic() {
        for p in 1..=10 {
            let row = perimeter_transition_row(p, 1, 600).unwrap();
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-8, "p={p} sum={s}");
        }
    }

    #[test]
    fn hull_routes_agree() {
        for &s in &[0.2, 0.5, 0.9, 0.99, 0.999999] {
            for r in [0u64, 1, 2, 7, 50] {
                let a = hull_volume_gf_closed(s, r).unwrap();
                let b = hull_volume_gf_iterate(s, r).unwrap();
                assert!((a - b).abs() < 1e-12, "s={s} r={r} {a} {b}");
            }
            assert!((hull_volume_gf_closed(s, 0).unwrap() - s).abs() < 1e-14);
        }
        assert_eq!(hull_volume_gf_closed(1.0, 4).unwrap(), 1.0);
    }

    #[test]
    fn hull_pmf_small() {
        let p0 = hull_volume_pmf(0, 6).unwrap();
        assert_eq!(p0.exact[1], QSqrt3::one());
        assert!(p0.exact.iter().enumerate().all(|(k, c)| k == 1 || c.is_zero()));
        let p = hull_volume_pmf(1, 14).unwrap();
        assert!(p.exact[0].is_zero() && p.exact[1].is_zero());
        // the pmf reproduces the GF at small s where the tail is negligible
        let s: f64 = 0.05;
        let direct: f64 = p.probs.iter().enumerate().map(|(n, v)| v * s.powi(n as i32)).sum();
        assert!((direct - hull_volume_gf_closed(s, 1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mixture_of_conditionals() {
        for (s, r) in [(0.9, 2u64), (0.5, 1), (0.99, 4)] {
            let pmf = perimeter_pmf(r, 4000).unwrap();
            let mix: f64 = (1..=4000)
                .map(|qq| pmf.prob(qq) * hull_volume_gf_conditional(s, r, qq).unwrap())
                .sum();
            assert!((mix - hull_volume_gf_closed(s, r).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn layer_gf_matches_conditional_at_p1() {
        for (s, r, qq) in [(0.9, 2u64, 3usize), (0.7, 1, 1), (0.999, 5, 40)] {
            let a = layer_volume_gf(s, r, 1, qq).unwrap();
            let b = hull_volume_gf_conditional(s, r, qq).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
        assert_eq!(layer_volume_gf(1.0, 3, 4, 7).unwrap(), 1.0);
    }

    #[test]
    fn slice_reduces_to_conditional_hull() {
        for (s, r, qq) in [(0.8, 1u64, 3usize), (0.95, 3, 10)] {
            let a = slice_gf(r, qq, &[qq], &[s]).unwrap() * s;
            let b = hull_volume_gf_conditional(s, r, qq).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!((slice_gf(2, 5, &[2, 3], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(slice_gf(2, 5, &[2, 2], &[0.5, 0.5]).is_err());
        assert!(slice_gf(2, 5, &[0, 5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn slice_bruteforce_r1() {
        let c = oracle::slice_gf_bruteforce(1, 3, &[1, 2], &[0.8, 0.9], 0, 150).unwrap();
        let v = slice_gf(1, 3, &[1, 2], &[0.8, 0.9]).unwrap();
        assert!((c.value - v).abs() < 1e-8 + c.error_bound, "{} {}", c.value, v);
    }

    #[test]
    fn slice_bruteforce_r2() {
        let c = oracle::slice_gf_bruteforce(2, 2, &[1, 1], &[0.6, 0.7], 70, 70).unwrap();
        let v = slice_gf(2, 2, &[1, 1], &[0.6, 0.7]).unwrap();
        assert!(c.error_bound < 1e-6, "{}", c.error_bound);
        assert!(
            (c.value - v).abs() < 1e-9 + c.error_bound,
            "{} {} {}",
            c.value,
            v,
            c.error_bound
        );
    }
}
