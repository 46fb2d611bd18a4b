//! Counts of triangulations with a simple boundary and the constants attached
//! to their generating function.
//!
//! `T(x, y) = Σ |T_{n,p}| x^n y^{p-1}`, where `|T_{n,p}|` is the number of
//! triangulations of the `p`-gon with `n` inner vertices.

use std::sync::RwLock;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::series::{q, QSqrt3, Ring, Series, SeriesError, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("inexact division by x while building T_{p}")]
    InexactDivision { p: usize },
    #[error("count |T_({n},{p})| is not a nonnegative integer")]
    NonInteger { n: usize, p: usize },
    #[error("invalid argument: {0}")]
    Domain(String),
}

/// `ρ`, `α` and `T(ρ, α)`.
#[derive(Clone, Debug)]
pub struct Constants {
    pub rho: QSqrt3,
    pub rho_f64: f64,
    pub alpha: Q,
    pub alpha_f64: f64,
    pub t_rho_alpha: QSqrt3,
}

impl Constants {
    pub fn new() -> Self {
        Constants {
            rho: rho(),
            rho_f64: RHO,
            alpha: q(1, 12),
            alpha_f64: ALPHA,
            t_rho_alpha: QSqrt3::new(q(1, 2), q(-1, 6)),
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::new()
    }
}

/// `1/(12√3)`.
pub const RHO: f64 = 0.048_112_522_432_468_814;
/// `1/12`.
pub const ALPHA: f64 = 1.0 / 12.0;

/// `ρ = √3/36` in the quadratic field.
pub fn rho() -> QSqrt3 {
    QSqrt3::new(Q::zero(), q(1, 36))
}

/// The series `h` with `h(0) = 0` and `x² = h²(1 − 8h)`.
///
/// Lagrange inversion of `h = x (1 − 8h)^{-1/2}` gives a two-step recurrence
/// `c_{n+2} = c_n · 48(3n+2)(3n−2) / ((n+1)(n+2))` with `c_1 = 1`, `c_2 = 4`.
pub fn h_series<R: Ring>(order: usize) -> Series<R> {
    let mut c = vec![R::zero(); order + 1];
    if order >= 1 {
        c[1] = R::one();
    }
    if order >= 2 {
        c[2] = R::from_i64(4);
    }
    for n in 1..order.saturating_sub(1) {
        let n = n as i64;
        let num = R::from_i64(48 * (3 * n + 2) * (3 * n - 2));
        let den = R::from_i64((n + 1) * (n + 2)).inv().expect("nonzero");
        c[n as usize + 2] = c[n as usize].mul(&num).mul(&den);
    }
    Series::new(c)
}

/// Terms `[x^k]h · ρ^k` for `k ≤ n`; their sum tends to `h(ρ) = α`.
pub fn h_terms_at_rho(n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n + 1];
    if n >= 1 {
        d[1] = RHO;
    }
    if n >= 2 {
        d[2] = 4.0 * RHO * RHO;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        d[k + 2] = d[k] * (3.0 * kf + 2.0) * (3.0 * kf - 2.0) / (9.0 * (kf + 1.0) * (kf + 2.0));
    }
    d
}

/// `T(x, 0) = (6h² + x − h)/(2x)` to the given order.
pub fn t_disk_series<R: Ring>(order: usize) -> Result<Series<R>, EnumError> {
    let h = h_series::<R>(order + 1);
    let x = Series::<R>::var(order + 1);
    let num = h.mul(&h).scale(&R::from_i64(6)).add(&x).sub(&h);
    if !num.coeffs()[1].is_zero() {
        return Err(EnumError::InexactDivision { p: 1 });
    }
    let half = R::from_i64(2).inv().expect("2 is invertible");
    Ok(num
        .div_x()
        .map_err(|_| EnumError::InexactDivision { p: 1 })?
        .scale(&half))
}

/// `T_1, …, T_pmax` to order `order`, by the coefficient recurrence of
/// Tutte's equation `a_{k+1} = (a_k − δ_{k,1} − Σ_{i+j=k} a_i a_j)/x`
/// with `a_k = T_{k+1}`. Every division by `x` is checked for exactness.
pub fn boundary_series_all<R: Ring>(pmax: usize, order: usize) -> Result<Vec<Series<R>>, EnumError> {
    if pmax == 0 {
        return Err(EnumError::Domain("p must be at least 1".into()));
    }
    let top = order + pmax - 1;
    let mut a: Vec<Series<R>> = vec![t_disk_series::<R>(top)?];
    for k in 0..pmax - 1 {
        let cur = top - k;
        let mut s = a[k].truncate(cur);
        for i in 0..=k {
            s = s.sub(&a[i].truncate(cur).mul(&a[k - i].truncate(cur)));
        }
        if k == 1 {
            s = s.add_const(&R::one().neg());
        }
        let next = s.div_x().map_err(|_| EnumError::InexactDivision { p: k + 2 })?;
        a.push(next);
    }
    Ok(a.into_iter().map(|s| s.truncate(order)).collect())
}

/// Integer version of [`boundary_series_all`]: the disk series is computed
/// over `Q` and checked integral, then the recurrence runs on `BigInt`.
pub fn boundary_counts_int(pmax: usize, order: usize) -> Result<Vec<Vec<BigInt>>, EnumError> {
    if pmax == 0 {
        return Err(EnumError::Domain("p must be at least 1".into()));
    }
    let top = order + pmax - 1;
    let disk = t_disk_series::<Q>(top)?;
    let mut first = Vec::with_capacity(top + 1);
    for (n, c) in disk.coeffs().iter().enumerate() {
        if !c.is_integer() || c.is_negative() {
            return Err(EnumError::NonInteger { n, p: 1 });
        }
        first.push(c.to_integer());
    }
    let mut a: Vec<Vec<BigInt>> = vec![first];
    for k in 0..pmax - 1 {
        let cur = top - k;
        let mut s: Vec<BigInt> = a[k][..=cur].to_vec();
        // Σ_{i+j=k} a_i a_j, pairing i and k − i
        for i in 0..=k / 2 {
            let j = k - i;
            let twice = i != j;
            for (m, x) in a[i][..=cur].iter().enumerate() {
                if x.sign() == num_bigint::Sign::NoSign {
                    continue;
                }
                for (l, y) in a[j][..=cur - m].iter().enumerate() {
                    let prod = x * y;
                    if twice {
                        s[m + l] -= &prod << 1;
                    } else {
                        s[m + l] -= prod;
                    }
                }
            }
        }
        if k == 1 {
            s[0] -= 1;
        }
        if s[0].sign() != num_bigint::Sign::NoSign {
            return Err(EnumError::InexactDivision { p: k + 2 });
        }
        s.remove(0);
        if let Some(n) = s.iter().position(|c| c.sign() == num_bigint::Sign::Minus) {
            return Err(EnumError::NonInteger { n, p: k + 2 });
        }
        a.push(s);
    }
    Ok(a.into_iter()
        .map(|mut v| {
            v.truncate(order + 1);
            v
        })
        .collect())
}

/// `T_p(x)` to order `order`.
pub fn boundary_series<R: Ring>(p: usize, order: usize) -> Result<Series<R>, EnumError> {
    Ok(boundary_series_all::<R>(p, order)?.pop().expect("nonempty"))
}

/// Exact counts `|T_{n,p}|`, filled by an explicit warm-up.
#[derive(Debug, Default)]
pub struct TriangulationCounts {
    table: RwLock<Vec<Vec<BigInt>>>,
}

impl TriangulationCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ensure counts for `n ≤ nmax`, `p ≤ pmax` are cached.
    pub fn warm(&self, nmax: usize, pmax: usize) -> Result<(), EnumError> {
        {
            let t = self.table.read().expect("poisoned");
            if t.len() >= pmax && t.first().is_some_and(|r| r.len() > nmax) {
                return Ok(());
            }
        }
        let rows = boundary_counts_int(pmax, nmax)?;
        *self.table.write().expect("poisoned") = rows;
        Ok(())
    }

    pub fn count(&self, n: usize, p: usize) -> Result<BigInt, EnumError> {
        if p == 0 {
            return Err(EnumError::Domain("p must be at least 1".into()));
        }
        if let Some(c) = self.table.read().expect("poisoned").get(p - 1).and_then(|r| r.get(n)) {
            return Ok(c.clone());
        }
        let (nmax, pmax) = self.extent();
        self.warm(nmax.max(n), pmax.max(p))?;
        Ok(self.table.read().expect("poisoned")[p - 1][n].clone())
    }

    /// Cached extent `(nmax, pmax)`.
    pub fn extent(&self) -> (usize, usize) {
        let t = self.table.read().expect("poisoned");
        (t.first().map_or(0, |r| r.len().saturating_sub(1)), t.len())
    }

    /// Rows `(n, p, count)` in the cache, `p`-major.
    pub fn rows(&self) -> Vec<(usize, usize, BigInt)> {
        let t = self.table.read().expect("poisoned");
        let mut out = Vec::new();
        for (pi, row) in t.iter().enumerate() {
            for (n, c) in row.iter().enumerate() {
                out.push((n, pi + 1, c.clone()));
            }
        }
        out
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |a, k| a * BigInt::from(k))
}

/// `m!!` for `m ≥ -1`.
fn double_factorial(m: i64) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut k = m;
    while k > 1 {
        acc *= BigInt::from(k);
        k -= 2;
    }
    acc
}

/// Closed form `4^{n-1} p (2p)! (2p+3n−5)!! / (p!² n! (2p+n−1)!!)`,
/// valid for every `(n, p)` except `(0, 1)` where the count is 0.
pub fn count_closed(n: usize, p: usize) -> BigInt {
    assert!(p >= 1);
    if n == 0 && p == 1 {
        return BigInt::from(0);
    }
    let (ni, pi) = (n as i64, p as i64);
    let num = BigInt::from(p) * factorial(2 * p) * double_factorial(2 * pi + 3 * ni - 5);
    let den = factorial(p).pow(2) * factorial(n) * double_factorial(2 * pi + ni - 1);
    let v = if n == 0 {
        Q::new(num, den * BigInt::from(4))
    } else {
        Q::new(num * BigInt::from(4).pow(n as u32 - 1), den)
    };
    debug_assert!(v.is_integer());
    v.to_integer()
}

/// `ln |T_{n,p}|` from the Gamma form of [`count_closed`]; `None` at `(0, 1)`.
pub fn ln_count_closed(n: usize, p: usize) -> Option<f64> {
    if n == 0 && p == 1 {
        return None;
    }
    let (n, p) = (n as f64, p as f64);
    Some(
        (3.0 * n - 4.0) * std::f64::consts::LN_2 + p.ln() + ln_gamma(2.0 * p + 1.0)
            - 2.0 * ln_gamma(p + 1.0)
            - ln_gamma(n + 1.0)
            + ln_gamma(p + 1.5 * n - 1.5)
            - ln_gamma(p + 0.5 * n + 0.5),
    )
}

/// `binom(3/2, p)` exactly.
fn binom_three_halves(p: usize) -> Q {
    let mut acc = Q::one();
    for j in 0..p {
        acc = acc * (q(3, 2) - Q::from_integer(BigInt::from(j))) / Q::from_integer(BigInt::from(j + 1));
    }
    acc
}

/// `T_p(ρ)` from the factorisation `T(ρ, y) = (y − ρ)/(2y) + (α − y)^{3/2}/y`:
/// `T_p(ρ) = (ρ/2) α^{-p} (−1)^p binom(3/2, p) + δ_{p,1}/2`.
pub fn boundary_at_rho(p: usize) -> QSqrt3 {
    assert!(p >= 1);
    let mut c = binom_three_halves(p) * Q::from_integer(BigInt::from(12).pow(p as u32)) / Q::from_integer(2.into());
    if p % 2 == 1 {
        c = -c;
    }
    let v = rho().mul(&QSqrt3::rational(c));
    if p == 1 {
        v.add(&QSqrt3::rational(q(1, 2)))
    } else {
        v
    }
}

/// `T_1(ρ), …, T_pmax(ρ)` read off the series `(α − y)^{3/2}` computed with
/// the series square root in the quadratic field.
pub fn boundary_at_rho_series(pmax: usize) -> Result<Vec<QSqrt3>, EnumError> {
    let alpha = QSqrt3::rational(q(1, 12));
    let base = Series::from_poly(vec![alpha, QSqrt3::from_i64(-1)], pmax);
    let pow = base.sqrt()?.mul(&base);
    Ok((1..=pmax)
        .map(|p| {
            let c = pow.coeffs()[p].clone();
            if p == 1 {
                c.add(&QSqrt3::rational(q(1, 2)))
            } else {
                c
            }
        })
        .collect())
}

/// Checks `ρ² + y² − 4y³ + 12yα² − 2yα = 4(α − y)³` as polynomials.
pub fn radicand_factorization_holds() -> bool {
    let r = rho();
    let a = QSqrt3::rational(q(1, 12));
    let lin = a.mul(&a).mul(&QSqrt3::from_i64(12)).sub(&a.mul(&QSqrt3::from_i64(2)));
    let lhs = Series::from_poly(vec![r.mul(&r), lin, QSqrt3::one(), QSqrt3::from_i64(-4)], 3);
    let am = Series::from_poly(vec![a, QSqrt3::from_i64(-1)], 3);
    let rhs = am.mul(&am).mul(&am).scale(&QSqrt3::from_i64(4));
    lhs == rhs
}

/// `ln T_p(ρ)` in floating point, usable for large `p`.
pub fn ln_boundary_at_rho(p: usize) -> f64 {
    assert!(p >= 1);
    if p == 1 {
        return (0.5 - 3f64.sqrt() / 4.0).ln();
    }
    // (−1)^p binom(3/2, p) = Γ(p − 3/2) / (Γ(−3/2) Γ(p+1)), Γ(−3/2) = 4√π/3
    let pf = p as f64;
    (RHO / 2.0).ln() + pf * 12f64.ln() + ln_gamma(pf - 1.5)
        - (4.0 * std::f64::consts::PI.sqrt() / 3.0).ln()
        - ln_gamma(pf + 1.0)
}

/// `C(p) = 3^{p−2} p (2p)! / (4 √(2π) p!²)` split into its exact rational
/// part and the float value.
#[derive(Clone, Debug, Serialize)]
pub struct CConstant {
    pub p: usize,
    /// `3^{p−2} p (2p)! / (4 p!²)`, i.e. `C(p)·√(2π)`.
    #[serde(serialize_with = "ser_q")]
    pub rational: Q,
    pub value: f64,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.repr())
}

pub fn c_constant(p: usize) -> CConstant {
    assert!(p >= 1);
    let three = Q::from_integer(3.into());
    let pow3 = if p >= 2 {
        Q::from_integer(BigInt::from(3).pow(p as u32 - 2))
    } else {
        three.recip()
    };
    let rational = pow3 * Q::from_integer(BigInt::from(p) * factorial(2 * p))
        / Q::from_integer(factorial(p).pow(2) * BigInt::from(4));
    let pf = p as f64;
    let ln = (pf - 2.0) * 3f64.ln() + pf.ln() + ln_gamma(2.0 * pf + 1.0)
        - 2.0 * ln_gamma(pf + 1.0)
        - 4f64.ln()
        - 0.5 * (2.0 * std::f64::consts::PI).ln();
    CConstant {
        p,
        rational,
        value: ln.exp(),
    }
}

/// `K(q) = α^q C(q) / (α C(1)) = 2q binom(2q, q) / 4^q`.
pub fn k_weight(q: usize) -> Q {
    assert!(q >= 1);
    let b = factorial(2 * q) / factorial(q).pow(2);
    Q::new(BigInt::from(2 * q) * b, BigInt::from(4).pow(q as u32))
}

pub fn ln_k_weight(q: usize) -> f64 {
    let qf = q as f64;
    (2.0 * qf).ln() + ln_gamma(2.0 * qf + 1.0) - 2.0 * ln_gamma(qf + 1.0) - qf * 4f64.ln()
}

/// Inner-vertex law of a Boltzmann triangulation of the `p`-gon.
#[derive(Clone, Debug, Serialize)]
pub struct SlotPmf {
    pub p: usize,
    /// `probs[n] = |T_{n,p}| ρ^n / T_p(ρ)`.
    pub probs: Vec<f64>,
    /// `1 − Σ probs`.
    pub tail: f64,
    /// True when the tail exceeds the requested epsilon.
    pub truncated: bool,
}

/// Boltzmann weights up to `nmax` (or adaptively, doubling until the tail is
/// at most `tail_eps`, when `nmax` is `None`).
pub fn boltzmann_slot_pmf(p: usize, nmax: Option<usize>, tail_eps: f64) -> Result<SlotPmf, EnumError> {
    if p == 0 {
        return Err(EnumError::Domain("p must be at least 1".into()));
    }
    const HARD_CAP: usize = 1 << 22;
    let mut n = nmax.unwrap_or(1024);
    loop {
        let probs = slot_probs(p, n);
        let tail = (1.0 - neumaier_sum(&probs)).max(0.0);
        if tail <= tail_eps || nmax.is_some() || n >= HARD_CAP {
            return Ok(SlotPmf {
                p,
                probs,
                tail,
                truncated: tail > tail_eps,
            });
        }
        n *= 2;
    }
}

/// `ln(|T_{n,p}| ρ^n / T_p(ρ))`.
pub fn ln_slot_prob(n: usize, p: usize) -> f64 {
    if n >= STIRLING_FROM {
        return ln_slot_prob_large(n, p);
    }
    match ln_count_closed(n, p) {
        Some(l) => l + n as f64 * RHO.ln() - ln_boundary_at_rho(p),
        None => f64::NEG_INFINITY,
    }
}

const STIRLING_FROM: usize = 100_000;

/// Large-`n` form of [`ln_slot_prob`]. Each `lnΓ(cn + d)` is expanded by
/// Stirling's series and the `n ln n` and linear parts, which cancel against
/// `3n ln 2 + n ln ρ`, are dropped before evaluation.
fn ln_slot_prob_large(n: usize, p: usize) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let piece = |c: f64, d: f64| {
        let z = c * nf + d;
        let corr = 1.0 / (12.0 * z) - 1.0 / (360.0 * z.powi(3)) + 1.0 / (1260.0 * z.powi(5));
        (d - 0.5) * (c.ln() + nf.ln()) + (c * nf + d - 0.5) * (d / (c * nf)).ln_1p() - d + half_ln_2pi + corr
    };
    let body = -piece(1.0, 1.0) + piece(1.5, pf - 1.5) - piece(0.5, pf + 0.5);
    -4.0 * std::f64::consts::LN_2 + pf.ln() + ln_gamma(2.0 * pf + 1.0)
        - 2.0 * ln_gamma(pf + 1.0)
        - ln_boundary_at_rho(p)
        + body
}

/// Slot probabilities for `n ≤ nmax`, seeded at `n = 1, 2` and continued with
/// the two-step ratio of the closed form.
pub fn slot_probs(p: usize, nmax: usize) -> Vec<f64> {
    // log space: the seeds underflow once p is a few hundred
    let mut l = vec![f64::NEG_INFINITY; nmax + 1];
    for (n, v) in l.iter_mut().enumerate().take(nmax.min(2) + 1) {
        *v = ln_slot_prob(n, p);
    }
    let pf = p as f64;
    let c = (4.0f64 / 27.0).ln();
    for n in 1..nmax.saturating_sub(1) {
        let nf = n as f64;
        let a = pf + 1.5 * nf;
        l[n + 2] = l[n] + c + ((a + 0.5) * (a - 0.5) * (a - 1.5)).ln()
            - ((pf + 0.5 * nf + 0.5) * (nf + 1.0) * (nf + 2.0)).ln();
    }
    l.into_iter().map(f64::exp).collect()
}

pub(crate) fn neumaier_sum(v: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_prob_stirling_branch_is_continuous() {
        for p in [2usize, 3, 10, 200] {
            for n in [STIRLING_FROM, 3 * STIRLING_FROM] {
                let direct = ln_count_closed(n, p).unwrap() + n as f64 * RHO.ln() - ln_boundary_at_rho(p);
                let large = ln_slot_prob_large(n, p);
                assert!((direct - large).abs() < 1e-8, "p={p} n={n} {direct} {large}");
            }
            // n^{-5/2} decay far out
            let a = ln_slot_prob(1 << 40, p);
            let b = ln_slot_prob(1 << 41, p);
            assert!((a - b - 2.5 * std::f64::consts::LN_2).abs() < 1e-6);
        }
    }

    #[test]
    fn integer_and_rational_recurrences_agree() {
        let ints = boundary_counts_int(7, 25).unwrap();
        let rats = boundary_series_all::<Q>(7, 25).unwrap();
        for (row, ser) in ints.iter().zip(&rats) {
            for (c, r) in row.iter().zip(ser.coeffs()) {
                assert_eq!(&Q::from_integer(c.clone()), r);
            }
        }
    }

    #[test]
    fn h_first_coefficients() {
        let h = h_series::<Q>(6);
        let want = [0, 1, 4, 40, 512];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(h.coeffs()[k], Q::from_i64(*w));
        }
    }

    #[test]
    fn h_newton_oracle() {
        // y = h/x solves y²(1 − 8xy) = 1; plain fixed-point y ← (1 − 8xy)^{-1/2}
        let n = 12;
        let x = Series::<Q>::var(n);
        let mut y = Series::<Q>::one(n);
        for _ in 0..=n {
            let inner = Series::one(n).sub(&x.mul(&y).scale(&Q::from_i64(8)));
            y = inner.sqrt().unwrap().inv().unwrap();
        }
        let h = h_series::<Q>(n + 1);
        assert_eq!(y.mul_x(), h);
    }

    #[test]
    fn h_defining_equation() {
        let n = 60;
        let h = h_series::<Q>(n);
        let x = Series::<Q>::var(n);
        let one_minus = Series::one(n).sub(&h.scale(&Q::from_i64(8)));
        let res = x.mul(&x).sub(&h.mul(&h).mul(&one_minus));
        assert!(res.coeffs().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn disk_and_first_boundaries() {
        let t0 = t_disk_series::<Q>(5).unwrap();
        let want = [0, 1, 4, 32, 336, 4096];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(t0.coeffs()[k], Q::from_i64(*w));
        }
        let t2 = boundary_series::<Q>(2, 5).unwrap();
        let want2 = [1, 3, 24, 256, 3168, 43008];
        for (k, w) in want2.iter().enumerate() {
            assert_eq!(t2.coeffs()[k], Q::from_i64(*w));
        }
        assert_eq!(boundary_series::<Q>(1, 5).unwrap(), t0);
    }

    #[test]
    fn closed_form_count_matches_recurrence() {
        let counts = TriangulationCounts::new();
        counts.warm(20, 8).unwrap();
        for p in 1..=8 {
            for n in 0..=20 {
                assert_eq!(counts.count(n, p).unwrap(), count_closed(n, p), "n={n} p={p}");
            }
        }
        let l = ln_count_closed(7, 3).unwrap();
        let exact = crate::series::q_to_f64(&Q::from_integer(count_closed(7, 3)));
        assert!((l - exact.ln()).abs() < 1e-12);
    }

    #[test]
    fn rho_constants() {
        let c = Constants::new();
        assert_eq!(c.rho.mul(&c.rho), QSqrt3::rational(q(1, 432)));
        assert_eq!(c.alpha, q(1, 12));
        assert!((c.rho.to_f64() - RHO).abs() < 1e-17);
        // ρ√3 = α
        assert_eq!(c.rho.mul(&QSqrt3::sqrt3()), QSqrt3::rational(c.alpha.clone()));
    }

    #[test]
    fn factorised_radicand() {
        assert!(radicand_factorization_holds());
        let s = boundary_at_rho_series(12).unwrap();
        for p in 1..=12 {
            assert_eq!(s[p - 1], boundary_at_rho(p));
        }
        assert_eq!(boundary_at_rho(1), QSqrt3::new(q(1, 2), q(-1, 4)));
        assert_eq!(boundary_at_rho(2), QSqrt3::new(q(0, 1), q(3, 4)));
        for p in 1..=30 {
            assert!((ln_boundary_at_rho(p) - boundary_at_rho(p).to_f64().ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn c_constant_values() {
        let c1 = c_constant(1);
        assert_eq!(c1.rational, q(1, 6));
        let want = 1.0 / (6.0 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((c1.value - want).abs() < 1e-15);
        let (c5, c6) = (c_constant(5), c_constant(6));
        assert!((c6.value / c5.value - 6.0 * 11.0 / 5.0).abs() < 1e-12);
        assert_eq!(&c6.rational / &c5.rational, q(66, 5));
        assert_eq!(k_weight(1), Q::one());
        for qq in 1..=20 {
            let alpha_pow = q(1, 12).pow(qq as i32 - 1);
            let direct = alpha_pow * &c_constant(qq).rational / &c1.rational;
            assert_eq!(direct, k_weight(qq));
            assert!((ln_k_weight(qq) - k_weight(qq).to_f64().ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn slot_pmf_normalised() {
        let pmf = boltzmann_slot_pmf(1, None, 1e-6).unwrap();
        assert_eq!(pmf.probs[0], 0.0);
        assert!(!pmf.truncated);
        let s: f64 = pmf.probs.iter().sum::<f64>() + pmf.tail;
        assert!((s - 1.0).abs() < 1e-12);
        let small = boltzmann_slot_pmf(3, Some(50), 1e-9).unwrap();
        assert!(small.truncated);
        let counts = TriangulationCounts::new();
        counts.warm(12, 3).unwrap();
        let tp = boundary_at_rho(3).to_f64();
        for n in 0..=12 {
            let c = counts.count(n, 3).unwrap();
            let w = crate::series::q_to_f64(&Q::from_integer(c)) * RHO.powi(n as i32) / tp;
            assert!((small.probs[n] - w).abs() < 1e-13 * w.max(1e-300), "n={n}");
        }
    }
}
