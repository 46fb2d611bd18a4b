//! Offspring laws of the skeleton forest: the critical law `θ` with
//! generating function `φ`, the volume-tilted family `φ_t`, the map
//! `s ↦ t(s)` and closed forms for the iterates `φ_t^{r}`.

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::enumeration::{ALPHA, RHO};
use crate::series::{q, QSqrt3, Ring, Series, SeriesError, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// A pair `(s, t)` in `[0,1]²` with `s² = t²(3 − 2t)`.
///
/// `one_minus_t` is kept separately because near criticality it carries
/// far more relative precision than `1.0 - t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPair {
    pub s: f64,
    pub t: f64,
    pub one_minus_t: f64,
}

impl CriticalPair {
    pub fn critical() -> Self {
        CriticalPair {
            s: 1.0,
            t: 1.0,
            one_minus_t: 0.0,
        }
    }

    pub fn from_s(s: f64) -> Result<Self, SkeletonError> {
        let eps = eps_from_s(s)?;
        Ok(CriticalPair {
            s,
            t: 1.0 - eps,
            one_minus_t: eps,
        })
    }

    pub fn from_t(t: f64) -> Result<Self, SkeletonError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(SkeletonError::Domain(format!("t = {t} outside [0,1]")));
        }
        Ok(CriticalPair {
            s: t * (3.0 - 2.0 * t).sqrt(),
            t,
            one_minus_t: 1.0 - t,
        })
    }

    pub fn is_critical(&self) -> bool {
        self.one_minus_t == 0.0
    }

    /// `b = 3(1 − t)/t`.
    pub fn b(&self) -> f64 {
        3.0 * self.one_minus_t / self.t
    }

    /// `a = √((3 − 2t)/t) = √(1 + b)`.
    pub fn a(&self) -> f64 {
        (1.0 + self.b()).sqrt()
    }

    fn require_positive(&self) -> Result<(), SkeletonError> {
        if self.t <= 0.0 {
            Err(SkeletonError::Domain("t = 0 is not a valid tilt".into()))
        } else {
            Ok(())
        }
    }
}

/// Solve `3ε² − 2ε³ = 1 − s²` for `ε = 1 − t` by bisection.
fn eps_from_s(s: f64) -> Result<f64, SkeletonError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(SkeletonError::Domain(format!("s = {s} outside [0,1]")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let rhs = -(2.0 * s.ln()).exp_m1();
    let f = |e: f64| e * e * (3.0 - 2.0 * e) - rhs;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish; the derivative 6ε(1 − ε) vanishes only at the endpoints
    let mut e = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = 6.0 * e * (1.0 - e);
        if d <= 0.0 {
            break;
        }
        let next = e - f(e) / d;
        if next > lo && next < hi {
            e = next;
        }
    }
    Ok(e)
}

/// The unique `t ∈ [0,1]` with `s² = t²(3 − 2t)`.
pub fn t_from_s(s: f64) -> Result<f64, SkeletonError> {
    Ok(1.0 - eps_from_s(s)?)
}

/// `φ(u) = 1 − (1 + (1 − u)^{-1/2})^{-2}`.
pub fn phi_eval(u: f64) -> Result<f64, SkeletonError> {
    phi_t_eval(&CriticalPair::critical(), u)
}

/// `φ_t(u) = 1 − (a/√(1−u) + √(1 + b/(1−u)))^{-2}`.
pub fn phi_t_eval(pair: &CriticalPair, u: f64) -> Result<f64, SkeletonError> {
    pair.require_positive()?;
    if !(0.0..=1.0).contains(&u) {
        return Err(SkeletonError::Domain(format!("u = {u} outside [0,1]")));
    }
    if u >= 1.0 - 1e-12 {
        return Ok(1.0);
    }
    let w = 1.0 - u;
    let sum = pair.a() / w.sqrt() + (1.0 + pair.b() / w).sqrt();
    Ok(1.0 - 1.0 / (sum * sum))
}

/// `φ_t′(u)`.
pub fn phi_t_prime(pair: &CriticalPair, u: f64) -> Result<f64, SkeletonError> {
    pair.require_positive()?;
    if !(0.0..1.0).contains(&u) {
        return Err(SkeletonError::Domain(format!("u = {u} outside [0,1)")));
    }
    let (a, b, w) = (pair.a(), pair.b(), 1.0 - u);
    let root = (1.0 + b / w).sqrt();
    let sum = a / w.sqrt() + root;
    let dsum = 0.5 * a * w.powf(-1.5) + 0.5 * b / (w * w * root);
    Ok(2.0 * dsum / (sum * sum * sum))
}

/// Closed form of the `r`-fold iterate `φ_t^{r}(u)`.
pub fn iterate_closed(pair: &CriticalPair, r: u64, u: f64) -> Result<f64, SkeletonError> {
    pair.require_positive()?;
    if !(0.0..=1.0).contains(&u) {
        return Err(SkeletonError::Domain(format!("u = {u} outside [0,1]")));
    }
    if r == 0 {
        return Ok(u);
    }
    if u >= 1.0 - 1e-12 {
        return Ok(1.0);
    }
    if pair.is_critical() {
        let v = 1.0 / (1.0 - u).sqrt() + r as f64;
        return Ok(1.0 - 1.0 / (v * v));
    }
    let b = pair.b();
    let w = (b / (1.0 - u)).sqrt().asinh() + r as f64 * b.sqrt().asinh();
    Ok(1.0 - b * inv_sinh2(w))
}

/// `1/sinh²(w) = 4e/(1 − e)²` with `e = exp(−2w)`.
fn inv_sinh2(w: f64) -> f64 {
    let e = (-2.0 * w).exp();
    let d = -(-2.0 * w).exp_m1();
    4.0 * e / (d * d)
}

/// `[u] φ_t^{r}(u)`, the derivative of the iterate at zero.
pub fn iterate_prime0(pair: &CriticalPair, r: u64) -> Result<f64, SkeletonError> {
    pair.require_positive()?;
    if r == 0 {
        return Ok(1.0);
    }
    if pair.is_critical() {
        return Ok(1.0 / ((r + 1) as f64).powi(3));
    }
    let b = pair.b();
    let w = (r + 1) as f64 * b.sqrt().asinh();
    let e = (-2.0 * w).exp();
    let coth = (1.0 + e) / -(-2.0 * w).exp_m1();
    Ok(b.powf(1.5) / pair.a() * coth * inv_sinh2(w))
}

/// `φ_t^{r}(0)` and `[u]φ_t^{r}` together.
pub fn iterate_at_zero(pair: &CriticalPair, r: u64) -> Result<(f64, f64), SkeletonError> {
    Ok((iterate_closed(pair, r, 0.0)?, iterate_prime0(pair, r)?))
}

/// `1 − φ_t^{r}(0)`, accurate when the iterate is close to one.
pub fn iterate_gap0(pair: &CriticalPair, r: u64) -> Result<f64, SkeletonError> {
    pair.require_positive()?;
    if r == 0 {
        return Ok(1.0);
    }
    if pair.is_critical() {
        return Ok(1.0 / ((r + 1) as f64).powi(2));
    }
    let b = pair.b();
    Ok(b * inv_sinh2((r + 1) as f64 * b.sqrt().asinh()))
}

/// `r`-fold application of [`phi_t_eval`]; the reference for the closed form.
pub fn iterate_compose(pair: &CriticalPair, r: u64, mut u: f64) -> Result<f64, SkeletonError> {
    for _ in 0..r {
        u = phi_t_eval(pair, u)?;
    }
    Ok(u)
}

/// `φ_t ∘ g` for a series `g` with `g(0) < 1`, with `a = √((3−2t)/t)` and
/// `b = 3(1−t)/t` given in the ring.
pub fn phi_t_of_series<R: Ring>(a: &R, b: &R, g: &Series<R>) -> Result<Series<R>, SkeletonError> {
    let n = g.order();
    let one_minus = Series::one(n).sub(g);
    let inv = one_minus.inv()?;
    let inv_sqrt = one_minus.sqrt()?.inv()?;
    let inner = inv.scale(b).add_const(&R::one()).sqrt()?;
    let sum = inv_sqrt.scale(a).add(&inner);
    let sq = sum.mul(&sum).inv()?;
    Ok(Series::one(n).sub(&sq))
}

/// Closed-form expansion of `φ_t` around 0 in any ring where the needed
/// square roots exist.
pub fn phi_t_series_closed<R: Ring>(t: &R, order: usize) -> Result<Series<R>, SkeletonError> {
    let tinv = t
        .inv()
        .ok_or_else(|| SkeletonError::Domain("t = 0 is not a valid tilt".into()))?;
    let b = R::from_i64(3).mul(&R::one().sub(t)).mul(&tinv);
    let a = R::one()
        .add(&b)
        .sqrt()
        .ok_or(SkeletonError::Series(SeriesError::NonSquare))?;
    phi_t_of_series(&a, &b, &Series::var(order))
}

/// `Φ_{s,t}(u) = ρs/((αt)²u) · (T(ρs, αtu) − T(ρs, 0))` with `T` taken from the
/// explicit radicand `x² + y² − 4y³ + 12yh² − 2yh` at `x = ρs`, `h = αt`.
/// The ring must contain `√3` (float or the quadratic field).
pub fn phi_t_series_tseries<R: Ring>(t: &R, order: usize) -> Result<Series<R>, SkeletonError> {
    let sqrt3 = R::from_i64(3)
        .sqrt()
        .ok_or_else(|| SkeletonError::Domain("the ring lacks √3".into()))?;
    let s = t.mul(
        &R::from_i64(3)
            .sub(&t.mul(&R::from_i64(2)))
            .sqrt()
            .ok_or(SkeletonError::Series(SeriesError::NonSquare))?,
    );
    let rho = sqrt3.mul(&R::from_q(&q(1, 36)));
    let alpha = R::from_q(&q(1, 12));
    let x = rho.mul(&s);
    let ht = alpha.mul(t);
    let n = order + 2;
    // y = ht·u
    let lin = ht.mul(&ht).mul(&R::from_i64(12)).sub(&ht.mul(&R::from_i64(2))).mul(&ht);
    let quad = ht.mul(&ht);
    let cub = quad.mul(&ht).mul(&R::from_i64(-4));
    let radicand = Series::from_poly(vec![x.mul(&x), lin, quad, cub], n);
    let num = radicand.sqrt()?.add(&Series::from_poly(vec![x.neg(), ht.clone()], n));
    let inv2y = ht.add(&ht).inv().ok_or(SeriesError::NonInvertible)?;
    let t_series = num.div_x()?.scale(&inv2y);
    let t0 = t_series.coeffs()[0].clone();
    let scale = x.mul(&ht.mul(&ht).inv().ok_or(SeriesError::NonInvertible)?);
    Ok(t_series.add_const(&t0.neg()).div_x()?.scale(&scale))
}

/// `θ(0..=N)` exactly, from the closed form of `φ`.
pub fn phi_coeffs(order: usize) -> Result<Series<Q>, SkeletonError> {
    phi_t_series_closed(&Q::one(), order)
}

/// `θ(0..=N)` from the definition through `T(ρ, αu)`, exactly in `Q(√3)`.
pub fn phi_coeffs_tseries(order: usize) -> Result<Series<QSqrt3>, SkeletonError> {
    phi_t_series_tseries(&QSqrt3::one(), order)
}

/// `θ_t(0..=n)` from `κ = t/(3 − 2t)`: the tail `P(X > k) = e_k` satisfies
/// `e_0 = κ/4`, `e_k = e_{k−1} κ(2k+1)/(2(k+2))`.
pub fn theta_catalan<R: Ring>(t: &R, n: usize) -> Vec<R> {
    let kappa = t.mul(&R::from_i64(3).sub(&t.mul(&R::from_i64(2))).inv().expect("t < 3/2"));
    let mut theta = Vec::with_capacity(n + 1);
    let mut e = kappa.mul(&R::from_q(&q(1, 4)));
    theta.push(R::one().sub(&e));
    for k in 1..=n {
        let ratio = R::from_q(&q(2 * k as i64 + 1, 2 * (k as i64 + 2)));
        let next = e.mul(&kappa).mul(&ratio);
        theta.push(e.sub(&next));
        e = next;
    }
    theta
}

/// `θ_t(0..=N)` as a float series.
pub fn phi_t_coeffs(pair: &CriticalPair, order: usize) -> Series<f64> {
    Series::new(OffspringLaw::new(*pair).theta_vec(order))
}

/// Float expansion of the `r`-fold iterate `φ_t^{r}` around 0.
pub fn iterate_series_float(pair: &CriticalPair, r: u64, order: usize) -> Result<Series<f64>, SkeletonError> {
    pair.require_positive()?;
    let (a, b) = (pair.a(), pair.b());
    let mut g = Series::var(order);
    for _ in 0..r {
        g = phi_t_of_series(&a, &b, &g)?;
    }
    Ok(g)
}

/// Exact expansion of `φ^{r}` at criticality; all square roots are rational
/// because `1 − φ^{k}(0) = 1/(k+1)²`.
pub fn iterate_series_critical(r: u64, order: usize) -> Result<Series<Q>, SkeletonError> {
    let (a, b) = (Q::one(), Q::zero());
    let mut g = Series::var(order);
    for _ in 0..r {
        g = phi_t_of_series(&a, &b, &g)?;
    }
    Ok(g)
}

/// The offspring law `θ_t` with a cached head and an analytic tail.
#[derive(Clone, Debug)]
pub struct OffspringLaw {
    pair: CriticalPair,
    ln_kappa: f64,
    /// `tails[k] = P(X > k)`.
    tails: Vec<f64>,
}

impl OffspringLaw {
    const HEAD: usize = 4096;

    pub fn new(pair: CriticalPair) -> Self {
        let kappa = pair.t / (1.0 + 2.0 * pair.one_minus_t);
        let mut tails = Vec::with_capacity(Self::HEAD + 1);
        let mut e = kappa / 4.0;
        tails.push(e);
        for k in 1..=Self::HEAD {
            e *= kappa * (2 * k + 1) as f64 / (2 * (k + 2)) as f64;
            tails.push(e);
        }
        OffspringLaw {
            pair,
            ln_kappa: kappa.ln(),
            tails,
        }
    }

    pub fn critical() -> Self {
        Self::new(CriticalPair::critical())
    }

    pub fn pair(&self) -> &CriticalPair {
        &self.pair
    }

    /// `ln P(X > k)`.
    pub fn ln_tail(&self, k: u64) -> f64 {
        let k = k as f64;
        (k + 1.0) * self.ln_kappa + ln_gamma(2.0 * k + 3.0)
            - ln_gamma(k + 2.0)
            - ln_gamma(k + 3.0)
            - (k + 1.0) * 4f64.ln()
    }

    /// `P(X > k)`.
    pub fn tail(&self, k: u64) -> f64 {
        match self.tails.get(k as usize) {
            Some(&e) => e,
            None => self.ln_tail(k).exp(),
        }
    }

    pub fn theta(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0 - self.tails[0];
        }
        if (k as usize) < self.tails.len() {
            return self.tails[k as usize - 1] - self.tails[k as usize];
        }
        let kf = k as f64;
        let ratio = self.ln_kappa.exp() * (2.0 * kf + 1.0) / (2.0 * (kf + 2.0));
        self.tail(k - 1) * (1.0 - ratio)
    }

    pub fn theta_vec(&self, n: usize) -> Vec<f64> {
        (0..=n as u64).map(|k| self.theta(k)).collect()
    }

    /// `Σ_{k ≤ n} k θ(k)`.
    pub fn partial_mean(&self, n: u64) -> f64 {
        // Σ_{k≤n} kθ(k) = Σ_{k<n} P(X>k) − n P(X>n)
        let s: f64 = (0..n).map(|k| self.tail(k)).sum();
        s - n as f64 * self.tail(n)
    }

    /// Inverse-CDF draw; the tail is searched analytically beyond the head.
    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> u64 {
        let v = 1.0 - rng.random::<f64>();
        self.quantile(v)
    }

    /// Smallest `k` with `P(X > k) < v`.
    pub fn quantile(&self, v: f64) -> u64 {
        if v > self.tails[0] {
            return 0;
        }
        let last = *self.tails.last().expect("nonempty");
        if last < v {
            return self.tails.partition_point(|&e| e >= v) as u64;
        }
        let lv = v.ln();
        let mut lo = self.tails.len() as u64 - 1;
        let mut hi = lo * 2;
        while self.ln_tail(hi) >= lv {
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.ln_tail(mid) >= lv {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// `ρ s (α t)^{-1}` for the pair, the scale relating `Φ_{s,t}` to `T_2(ρs)`.
pub fn rho_s_over_alpha_t(pair: &CriticalPair) -> f64 {
    RHO * pair.s / (ALPHA * pair.t)
}
