//! Truncated formal power series over a pluggable coefficient ring.
//!
//! A [`Series`] stores the coefficients of degree `0..=order`; anything above
//! `order` is unknown, not zero. Binary operations truncate to the smaller
//! order of their operands.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rationals.
pub type Q = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("ring mismatch: {left} vs {right}")]
    RingMismatch { left: String, right: String },
    #[error("composition needs a zero constant term in the inner series")]
    NonZeroConstant,
    #[error("coefficient is not invertible in the ring")]
    NonInvertible,
    #[error("constant term has no square root in the ring")]
    NonSquare,
    #[error("coefficient {k} requested beyond truncation order {order}")]
    BeyondOrder { k: usize, order: usize },
    #[error("division by x is inexact: constant term is nonzero")]
    InexactDivision,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Coefficient ring used by [`Series`].
pub trait Ring: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    /// Ring tag used in serialization.
    const NAME: &'static str;
    /// Exact rings never round.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_q(q: &Q) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    /// Principal (nonnegative) square root when it exists in the ring.
    fn sqrt(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn repr(&self) -> String;
    fn parse_repr(s: &str) -> Option<Self>;

    fn div(&self, rhs: &Self) -> Option<Self> {
        rhs.inv().map(|i| self.mul(&i))
    }
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn q_repr(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn q_parse(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if num_traits::Zero::is_zero(&d) {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

fn q_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| Q::new(n, d))
}

/// Convert a rational to the nearest double, also for huge numerators and denominators.
pub fn q_to_f64(x: &Q) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(x) {
        if v.is_finite() && (v != 0.0 || x.is_zero()) {
            return v;
        }
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift > 0 {
        Q::new(x.numer().clone(), x.denom() << (shift as usize))
    } else {
        Q::new(x.numer() << ((-shift) as usize), x.denom().clone())
    };
    ToPrimitive::to_f64(&scaled).unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

impl Ring for Q {
    const NAME: &'static str = "rational";
    const EXACT: bool = true;

    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_i64(n: i64) -> Self {
        Q::from_integer(BigInt::from(n))
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        (!num_traits::Zero::is_zero(self)).then(|| self.recip())
    }
    fn sqrt(&self) -> Option<Self> {
        q_sqrt(self)
    }
    fn to_f64(&self) -> f64 {
        q_to_f64(self)
    }
    fn repr(&self) -> String {
        q_repr(self)
    }
    fn parse_repr(s: &str) -> Option<Self> {
        q_parse(s)
    }
}

impl Ring for f64 {
    const NAME: &'static str = "float64";
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_q(q: &Q) -> Self {
        q_to_f64(q)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn repr(&self) -> String {
        format!("{self:?}")
    }
    fn parse_repr(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// Element `a + b·√3` of the quadratic field over the rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt3 {
    pub a: Q,
    pub b: Q,
}

impl QSqrt3 {
    pub fn new(a: Q, b: Q) -> Self {
        QSqrt3 { a, b }
    }

    pub fn rational(a: Q) -> Self {
        QSqrt3 { a, b: Q::zero() }
    }

    /// √3 itself.
    pub fn sqrt3() -> Self {
        QSqrt3 {
            a: Q::zero(),
            b: Q::one(),
        }
    }

    pub fn is_rational(&self) -> bool {
        num_traits::Zero::is_zero(&self.b)
    }

    /// Galois conjugate `a − b·√3`.
    pub fn conj(&self) -> Self {
        QSqrt3 {
            a: self.a.clone(),
            b: -&self.b,
        }
    }

    /// Field norm `a² − 3b²`.
    pub fn norm(&self) -> Q {
        &self.a * &self.a - Q::from_integer(3.into()) * &self.b * &self.b
    }

    /// Exact sign of the real number `a + b√3`.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sa == 0 {
            return sb;
        }
        if sb == 0 || sa == sb {
            return sa;
        }
        // opposite signs: compare a² with 3b²
        let n = self.norm();
        if num_traits::Zero::is_zero(&n) {
            0
        } else if n.is_positive() {
            sa
        } else {
            sb
        }
    }
}

fn sign_of(x: &Q) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl fmt::Display for QSqrt3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.repr())
    }
}

impl Ring for QSqrt3 {
    const NAME: &'static str = "rational_sqrt3";
    const EXACT: bool = true;

    fn zero() -> Self {
        QSqrt3::rational(Q::zero())
    }
    fn one() -> Self {
        QSqrt3::rational(Q::one())
    }
    fn from_i64(n: i64) -> Self {
        QSqrt3::rational(Q::from_integer(n.into()))
    }
    fn from_q(q: &Q) -> Self {
        QSqrt3::rational(q.clone())
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(&self.a) && num_traits::Zero::is_zero(&self.b)
    }
    fn add(&self, rhs: &Self) -> Self {
        QSqrt3::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
    fn sub(&self, rhs: &Self) -> Self {
        QSqrt3::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
    fn mul(&self, rhs: &Self) -> Self {
        let three = Q::from_integer(3.into());
        QSqrt3::new(
            &self.a * &rhs.a + three * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
    fn neg(&self) -> Self {
        QSqrt3::new(-&self.a, -&self.b)
    }
    fn inv(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            return None;
        }
        if self.is_rational() {
            return Some(QSqrt3::rational(self.a.recip()));
        }
        let n = self.norm();
        let c = self.conj();
        Some(QSqrt3::new(&c.a / &n, &c.b / &n))
    }
    fn sqrt(&self) -> Option<Self> {
        if self.signum() < 0 {
            return None;
        }
        if Ring::is_zero(self) {
            return Some(Ring::zero());
        }
        let three = Q::from_integer(3.into());
        if self.is_rational() {
            if let Some(r) = q_sqrt(&self.a) {
                return Some(QSqrt3::rational(r));
            }
            return q_sqrt(&(&self.a / &three)).map(|d| QSqrt3::new(Q::zero(), d));
        }
        // (c + d√3)² = a + b√3  ⇒  c² = (a ± √(a² − 3b²))/2, d = b/(2c)
        let disc = q_sqrt(&self.norm())?;
        let two = Q::from_integer(2.into());
        for c2 in [(&self.a + &disc) / &two, (&self.a - &disc) / &two] {
            if let Some(c) = q_sqrt(&c2) {
                if num_traits::Zero::is_zero(&c) {
                    continue;
                }
                let d = &self.b / (&two * &c);
                let cand = QSqrt3::new(c, d);
                let root = if cand.signum() < 0 { cand.neg() } else { cand };
                if root.mul(&root) == *self {
                    return Some(root);
                }
            }
        }
        None
    }
    fn to_f64(&self) -> f64 {
        if self.is_rational() {
            return q_to_f64(&self.a);
        }
        let a = q_to_f64(&self.a);
        let b = q_to_f64(&self.b) * 3f64.sqrt();
        // cancellation guard: a + b√3 = norm / (a − b√3)
        if a * b < 0.0 && (a + b).abs() < 1e-8 * a.abs() {
            q_to_f64(&self.norm()) / (a - b)
        } else {
            a + b
        }
    }
    fn repr(&self) -> String {
        if self.b.is_zero() {
            return q_repr(&self.a);
        }
        let b = q_repr(&self.b);
        if self.a.is_zero() {
            return format!("{b}*sqrt3");
        }
        if self.b.is_negative() {
            format!("{}{}*sqrt3", q_repr(&self.a), b)
        } else {
            format!("{}+{}*sqrt3", q_repr(&self.a), b)
        }
    }
    fn parse_repr(s: &str) -> Option<Self> {
        let s = s.trim();
        let Some(body) = s.strip_suffix("*sqrt3") else {
            return q_parse(s).map(QSqrt3::rational);
        };
        // split at the sign that starts the √3 part (not the leading sign)
        let idx = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let Some(idx) = idx else {
            return Some(QSqrt3::new(Q::zero(), q_parse(body)?));
        };
        let (a, b) = body.split_at(idx);
        let b = b.strip_prefix('+').unwrap_or(b);
        Some(QSqrt3::new(q_parse(a)?, q_parse(b)?))
    }
}

/// Truncated power series `Σ_{k ≤ order} c_k x^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<R> {
    coeffs: Vec<R>,
}

impl<R: Ring> Series<R> {
    /// Series whose truncation order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<R>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least its constant term");
        Series { coeffs }
    }

    /// A polynomial known exactly, zero-padded up to `order`.
    pub fn from_poly(mut coeffs: Vec<R>, order: usize) -> Self {
        coeffs.truncate(order + 1);
        coeffs.resize(order + 1, R::zero());
        Series { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Series::from_poly(vec![], order)
    }

    pub fn one(order: usize) -> Self {
        Series::constant(R::one(), order)
    }

    pub fn constant(c: R, order: usize) -> Self {
        Series::from_poly(vec![c], order)
    }

    /// The series `x`.
    pub fn var(order: usize) -> Self {
        Series::from_poly(vec![R::zero(), R::one()], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<R> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Result<&R, SeriesError> {
        self.coeffs
            .get(k)
            .ok_or(SeriesError::BeyondOrder { k, order: self.order() })
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order());
        Series::new(self.coeffs[..=order].to_vec())
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> Series<S> {
        Series::new(self.coeffs.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> Series<f64> {
        self.map(|c| c.to_f64())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        Series::new((0..=n).map(|k| self.coeffs[k].add(&rhs.coeffs[k])).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        Series::new((0..=n).map(|k| self.coeffs[k].sub(&rhs.coeffs[k])).collect())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg())
    }

    pub fn scale(&self, c: &R) -> Self {
        self.map(|x| x.mul(c))
    }

    pub fn add_const(&self, c: &R) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0].add(c);
        out
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = R::zero();
            for i in 0..=k {
                let (a, b) = (&self.coeffs[i], &rhs.coeffs[k - i]);
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.add(&a.mul(b));
                }
            }
            out.push(acc);
        }
        Series::new(out)
    }

    /// Multiply by `x`; the order grows by one.
    pub fn mul_x(&self) -> Self {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(R::zero());
        c.extend(self.coeffs.iter().cloned());
        Series::new(c)
    }

    /// Exact division by `x`; the order drops by one.
    pub fn div_x(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::InexactDivision);
        }
        if self.order() == 0 {
            return Err(SeriesError::BeyondOrder { k: 1, order: 0 });
        }
        Ok(Series::new(self.coeffs[1..].to_vec()))
    }

    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Series::zero(0);
        }
        Series::new(
            (1..=self.order())
                .map(|k| self.coeffs[k].mul(&R::from_i64(k as i64)))
                .collect(),
        )
    }

    /// Multiplicative inverse; needs an invertible constant term.
    pub fn inv(&self) -> Result<Self, SeriesError> {
        let h0 = self.coeffs[0].inv().ok_or(SeriesError::NonInvertible)?;
        let n = self.order();
        let mut h = Vec::with_capacity(n + 1);
        h.push(h0.clone());
        for k in 1..=n {
            let mut acc = R::zero();
            for i in 1..=k {
                if !self.coeffs[i].is_zero() {
                    acc = acc.add(&self.coeffs[i].mul(&h[k - i]));
                }
            }
            h.push(acc.mul(&h0).neg());
        }
        Ok(Series::new(h))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&rhs.inv()?))
    }

    /// Principal square root; the constant term must be a square in the ring.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let g0 = self.coeffs[0].sqrt().ok_or(SeriesError::NonSquare)?;
        let inv2g0 = g0.add(&g0).inv().ok_or(SeriesError::NonSquare)?;
        let n = self.order();
        let mut g = Vec::with_capacity(n + 1);
        g.push(g0);
        for k in 1..=n {
            let mut acc = self.coeffs[k].clone();
            for i in 1..k {
                acc = acc.sub(&g[i].mul(&g[k - i]));
            }
            g.push(acc.mul(&inv2g0));
        }
        Ok(Series::new(g))
    }

    /// `f^k` by binary exponentiation.
    pub fn powi(&self, mut k: u64) -> Self {
        let mut acc = Series::one(self.order());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `f ∘ g` by Horner's rule; `g` must have zero constant term.
    pub fn compose(&self, g: &Self) -> Result<Self, SeriesError> {
        if !g.coeffs[0].is_zero() {
            return Err(SeriesError::NonZeroConstant);
        }
        let n = self.order().min(g.order());
        let g = g.truncate(n);
        let mut acc = Series::constant(self.coeffs[n].clone(), n);
        for k in (0..n).rev() {
            acc = acc.mul(&g).add_const(&self.coeffs[k]);
        }
        Ok(acc)
    }

    /// Compositional inverse by Lagrange inversion:
    /// `[x^n] g = (1/n) [w^{n-1}] (w / f(w))^n`.
    pub fn revert(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonZeroConstant);
        }
        let n = self.order();
        if n == 0 {
            return Ok(Series::zero(0));
        }
        if self.coeffs[1].inv().is_none() {
            return Err(SeriesError::NonInvertible);
        }
        let psi = self.div_x()?.inv()?;
        let mut out = vec![R::zero(); n + 1];
        let mut pw = psi.clone();
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let nk = R::from_i64(k as i64).inv().ok_or(SeriesError::NonInvertible)?;
            *slot = pw.coeffs[k - 1].mul(&nk);
            if k < n {
                pw = pw.mul(&psi);
            }
        }
        Ok(Series::new(out))
    }

    /// Partial sum `Σ c_k v^k` over the stored coefficients.
    pub fn eval(&self, v: &R) -> R {
        let mut acc = R::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(v).add(c);
        }
        acc
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            ring: R::NAME.to_string(),
            order: self.order(),
            coeffs: self.coeffs.iter().map(Ring::repr).collect(),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self, SeriesError> {
        if j.ring != R::NAME {
            return Err(SeriesError::RingMismatch {
                left: j.ring.clone(),
                right: R::NAME.to_string(),
            });
        }
        if j.coeffs.len() != j.order + 1 {
            return Err(SeriesError::Parse(format!(
                "order {} but {} coefficients",
                j.order,
                j.coeffs.len()
            )));
        }
        let coeffs = j
            .coeffs
            .iter()
            .map(|s| R::parse_repr(s).ok_or_else(|| SeriesError::Parse(s.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Series::new(coeffs))
    }
}

impl<R: Ring> fmt::Display for Series<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c.repr())?,
                1 => write!(f, "({})x", c.repr())?,
                _ => write!(f, "({})x^{k}", c.repr())?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(x^{})", self.order() + 1)
    }
}

/// Serialized form `{"ring": .., "order": N, "coeffs": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub ring: String,
    pub order: usize,
    pub coeffs: Vec<String>,
}

/// A series whose ring is only known at runtime, e.g. after deserialization.
#[derive(Clone, Debug, PartialEq)]
pub enum DynSeries {
    Rational(Series<Q>),
    Sqrt3(Series<QSqrt3>),
    Float(Series<f64>),
}

macro_rules! dyn_binop {
    ($name:ident) => {
        pub fn $name(&self, rhs: &DynSeries) -> Result<DynSeries, SeriesError> {
            use DynSeries::*;
            match (self, rhs) {
                (Rational(a), Rational(b)) => Ok(Rational(a.$name(b))),
                (Sqrt3(a), Sqrt3(b)) => Ok(Sqrt3(a.$name(b))),
                (Float(a), Float(b)) => Ok(Float(a.$name(b))),
                _ => Err(SeriesError::RingMismatch {
                    left: self.ring().to_string(),
                    right: rhs.ring().to_string(),
                }),
            }
        }
    };
}

impl DynSeries {
    pub fn ring(&self) -> &'static str {
        match self {
            DynSeries::Rational(_) => Q::NAME,
            DynSeries::Sqrt3(_) => QSqrt3::NAME,
            DynSeries::Float(_) => f64::NAME,
        }
    }

    dyn_binop!(add);
    dyn_binop!(sub);
    dyn_binop!(mul);

    pub fn to_json(&self) -> SeriesJson {
        match self {
            DynSeries::Rational(s) => s.to_json(),
            DynSeries::Sqrt3(s) => s.to_json(),
            DynSeries::Float(s) => s.to_json(),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self, SeriesError> {
        match j.ring.as_str() {
            r if r == Q::NAME => Series::from_json(j).map(DynSeries::Rational),
            r if r == QSqrt3::NAME => Series::from_json(j).map(DynSeries::Sqrt3),
            r if r == f64::NAME => Series::from_json(j).map(DynSeries::Float),
            other => Err(SeriesError::Parse(format!("unknown ring {other}"))),
        }
    }
}

/// `ln [u^p] g(u)^q` for a float series with `g(0) > 0` and nonnegative
/// coefficients, known at least to order `p`.
///
/// The coefficients are exponentially tilted so that the tilted mean is close
/// to `p/q` before binary powering; this keeps all intermediate values near
/// one even when `g(0)^q` underflows.
pub fn ln_coeff_of_power(g: &[f64], q: u64, p: usize) -> f64 {
    assert!(g.len() > p, "series order below the requested coefficient");
    assert!(g[0] > 0.0);
    if q == 0 {
        return if p == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let g = &g[..=p];
    let target = p as f64 / q as f64;
    let mean = |kap: f64| {
        let (mut w, mut m, mut pw) = (0.0, 0.0, 1.0);
        for (i, &c) in g.iter().enumerate() {
            w += c * pw;
            m += i as f64 * c * pw;
            pw *= kap;
        }
        m / w
    };
    let kappa = if p == 0 || mean(1.0) <= target {
        1.0
    } else {
        let (mut lo, mut hi) = (1e-300f64, 1.0f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mean(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo < 1.0 + 1e-13 {
                break;
            }
        }
        (lo * hi).sqrt()
    };
    let mut h = Vec::with_capacity(p + 1);
    let mut pw = 1.0;
    for &c in g {
        h.push(c * pw);
        pw *= kappa;
    }
    let total: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= total);
    let c = coeff_of_power(&h, q, p);
    -(p as f64) * kappa.ln() + q as f64 * total.ln() + c.ln()
}

/// `[u^p] h^q` by binary powering of the truncated float series `h`.
pub fn coeff_of_power(h: &[f64], mut q: u64, p: usize) -> f64 {
    let mut acc = vec![0.0; p + 1];
    acc[0] = 1.0;
    let mut base = h[..=p].to_vec();
    while q > 0 {
        if q & 1 == 1 {
            acc = conv_trunc(&acc, &base, p);
        }
        q >>= 1;
        if q > 0 {
            base = conv_trunc(&base, &base, p);
        }
    }
    acc[p]
}

/// Truncated convolution of two float coefficient slices.
pub fn conv_trunc(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &ai) in a.iter().enumerate().take(n + 1) {
        if ai == 0.0 {
            continue;
        }
        for (o, &bj) in out[i..].iter_mut().zip(b.iter()) {
            *o += ai * bj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(v: &[i64]) -> Series<Q> {
        Series::new(v.iter().map(|&x| Q::from_i64(x)).collect())
    }

    #[test]
    fn add_identity_and_cancellation() {
        let a = Series::from_poly(vec![Q::one(), Q::one()], 5);
        assert_eq!(a.add(&Series::zero(5)), a);
        let b = Series::from_poly(vec![Q::one(), Q::from_i64(-1)], 5);
        assert_eq!(a.add(&b), Series::from_poly(vec![Q::from_i64(2)], 5));
    }

    #[test]
    fn orders_propagate_as_min() {
        let a = Series::<Q>::one(7);
        let b = Series::<Q>::var(3);
        assert_eq!(a.add(&b).order(), 3);
        assert_eq!(a.mul(&b).order(), 3);
    }

    #[test]
    fn mul_square() {
        let a = Series::from_poly(vec![Q::one(), Q::one()], 4);
        assert_eq!(a.mul(&a), Series::from_poly(qs(&[1, 2, 1]).into_coeffs(), 4));
        assert_eq!(a.mul(&Series::one(4)), a);
    }

    #[test]
    fn compose_small() {
        let f = Series::from_poly(vec![Q::one(), Q::one()], 6);
        let g = Series::from_poly(vec![Q::zero(), Q::one(), Q::one()], 6);
        assert_eq!(
            f.compose(&g).unwrap(),
            Series::from_poly(qs(&[1, 1, 1]).into_coeffs(), 6)
        );
        assert_eq!(f.compose(&Series::var(6)).unwrap(), f);
        assert_eq!(f.compose(&f), Err(SeriesError::NonZeroConstant));
    }

    #[test]
    fn sqrt_of_square() {
        let f = Series::from_poly(qs(&[1, 2, 1]).into_coeffs(), 8);
        assert_eq!(f.sqrt().unwrap(), Series::from_poly(qs(&[1, 1]).into_coeffs(), 8));
        assert_eq!(Series::<Q>::one(3).sqrt().unwrap(), Series::one(3));
        let g = Series::from_poly(qs(&[2, 1]).into_coeffs(), 4);
        assert_eq!(g.sqrt(), Err(SeriesError::NonSquare));
    }

    #[test]
    fn sqrt_one_minus_four_x_is_catalan() {
        let f = Series::from_poly(qs(&[1, -4]).into_coeffs(), 12);
        let g = f.sqrt().unwrap();
        assert_eq!(g.mul(&g), f);
        // [x^n] sqrt(1-4x) = -2 Cat(n-1)/... = -2 binom(2n-2, n-1)/n
        let cat = [1i64, 1, 2, 5, 14, 42];
        for n in 1..=6usize {
            assert_eq!(g.coeffs()[n], Q::from_i64(-2 * cat[n - 1]));
        }
    }

    #[test]
    fn powi_and_binomial() {
        let a = Series::from_poly(vec![Q::one(), Q::one()], 10);
        assert_eq!(a.powi(0), Series::one(10));
        assert_eq!(a.powi(3), Series::from_poly(qs(&[1, 3, 3, 1]).into_coeffs(), 10));
        assert_eq!(*a.powi(10).coeff(4).unwrap(), Q::from_i64(210));
        assert!(a.coeff(11).is_err());
    }

    #[test]
    fn revert_examples() {
        let x = Series::<Q>::var(9);
        assert_eq!(x.revert().unwrap(), x);
        // x/(1-x) reverts to x/(1+x)
        let one_minus = Series::from_poly(qs(&[1, -1]).into_coeffs(), 9);
        let f = x.mul(&one_minus.inv().unwrap());
        let one_plus = Series::from_poly(qs(&[1, 1]).into_coeffs(), 9);
        assert_eq!(f.revert().unwrap(), x.mul(&one_plus.inv().unwrap()));
        let bad = Series::from_poly(qs(&[0, 0, 1]).into_coeffs(), 4);
        assert_eq!(bad.revert(), Err(SeriesError::NonInvertible));
    }

    #[test]
    fn qsqrt3_arithmetic() {
        let s3 = QSqrt3::sqrt3();
        assert_eq!(s3.mul(&s3), QSqrt3::from_i64(3));
        let x = QSqrt3::new(q(1, 2), q(-1, 4));
        assert_eq!(x.mul(&x.inv().unwrap()), QSqrt3::one());
        assert_eq!(x.signum(), 1);
        assert_eq!(QSqrt3::new(q(1, 1), q(-1, 1)).signum(), -1);
        // (2 + √3)² = 7 + 4√3
        let y = QSqrt3::new(q(7, 1), q(4, 1));
        assert_eq!(y.sqrt().unwrap(), QSqrt3::new(q(2, 1), q(1, 1)));
        assert_eq!(QSqrt3::from_q(&q(1, 12)).sqrt().unwrap(), QSqrt3::new(q(0, 1), q(1, 6)));
        assert!(QSqrt3::from_i64(2).sqrt().is_none());
        assert!(QSqrt3::from_i64(-4).sqrt().is_none());
    }

    #[test]
    fn repr_round_trip() {
        for x in [
            QSqrt3::new(q(1, 2), q(-1, 4)),
            QSqrt3::new(q(-3, 7), q(5, 2)),
            QSqrt3::from_i64(0),
            QSqrt3::new(q(0, 1), q(-1, 36)),
            QSqrt3::new(q(0, 1), q(13, 324)),
            QSqrt3::new(q(7, 108), q(0, 1)),
        ] {
            assert_eq!(QSqrt3::parse_repr(&x.repr()).unwrap(), x);
        }
        assert_eq!(QSqrt3::new(q(1, 2), q(-1, 4)).repr(), "1/2-1/4*sqrt3");
        assert_eq!(Q::parse_repr("7").unwrap(), Q::from_i64(7));
        let v = 0.1f64 + 0.2;
        assert_eq!(f64::parse_repr(&v.repr()).unwrap(), v);
    }

    #[test]
    fn json_round_trip_and_mismatch() {
        let f = Series::new(vec![Q::one(), q(-3, 5), q(22, 7)]);
        let j = f.to_json();
        assert_eq!(j.coeffs[1], "-3/5");
        let text = serde_json::to_string(&j).unwrap();
        let back: SeriesJson = serde_json::from_str(&text).unwrap();
        assert_eq!(Series::<Q>::from_json(&back).unwrap(), f);
        let d = DynSeries::from_json(&back).unwrap();
        let e = DynSeries::Float(f.to_f64());
        assert!(matches!(d.add(&e), Err(SeriesError::RingMismatch { .. })));
        assert!(Series::<f64>::from_json(&back).is_err());
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = Q::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 2000usize);
        assert!((q_to_f64(&big) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn tilted_power_coefficient() {
        let g = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let direct = coeff_of_power(&g, 7, 4);
        assert!((ln_coeff_of_power(&g, 7, 4) - direct.ln()).abs() < 1e-12);
        let g1 = [0.75, 0.125, 0.06, 0.03];
        let d = coeff_of_power(&g1, 3000, 3);
        assert!(d == 0.0 || d.is_finite());
        let l = ln_coeff_of_power(&g1, 3000, 3);
        assert!(l.is_finite() && l < -800.0);
    }
}
