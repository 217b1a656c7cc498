//! Exact rationals, continued fractions and the diophantine checks used to
//! qualify rotation numbers.
//!
//! Irrational parameters are always represented by a finite continued
//! fraction prefix; the resulting rational carries a validity horizon of
//! half its denominator, past which its orbits stop looking irrational.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact arbitrary-precision fraction, always in lowest terms with a
/// positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let d = denom.into();
        if d.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(numer.into(), d)))
    }

    /// Panicking constructor for literals in code and tests.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom).expect("nonzero denominator")
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_big(numer: BigUint, denom: BigUint) -> Self {
        Rational(BigRational::new(
            BigInt::from_biguint(Sign::Plus, numer),
            BigInt::from_biguint(Sign::Plus, denom),
        ))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn denom_unsigned(&self) -> BigUint {
        self.0.denom().magnitude().clone()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Fractional part, in `[0, 1)`.
    pub fn fract_part(&self) -> Self {
        Rational(&self.0 - self.0.floor())
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    /// True when `0 < self < 1`.
    pub fn in_open_unit(&self) -> bool {
        self.0.is_positive() && self.0 < BigRational::one()
    }

    /// True when `0 <= self < 1`.
    pub fn in_unit(&self) -> bool {
        !self.0.is_negative() && self.0 < BigRational::one()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        match s.split_once('/') {
            Some((p, q)) => {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                Rational::new(p, q)
            }
            None => Ok(Rational::from_integer(
                s.parse::<BigInt>().map_err(|_| bad())?,
            )),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for CFExpansion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_list_string())
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

/// Finite simple continued fraction `[0; a_1, ..., a_K]` together with its
/// convergents `p_k / q_k`, `k = 0..=K`, where `p_0 = 0` and `q_0 = 1`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CFExpansion {
    quotients: Vec<u64>,
    convergents: Vec<(BigUint, BigUint)>,
}

impl CFExpansion {
    /// Builds an expansion from partial quotients. Every quotient must be
    /// positive, and the value must lie in `(0, 1)` (so `[1]` is rejected).
    pub fn new(quotients: Vec<u64>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::Domain("empty quotient list".into()));
        }
        if quotients.contains(&0) {
            return Err(Error::Domain("partial quotients must be positive".into()));
        }
        if quotients == [1] {
            return Err(Error::Domain("[1] has value 1, outside (0,1)".into()));
        }
        let convergents = convergents_of(&quotients);
        Ok(CFExpansion {
            quotients,
            convergents,
        })
    }

    /// `[1, 1, ..., 1]` of the given depth: convergents of the golden mean.
    pub fn golden(depth: usize) -> Self {
        CFExpansion::new(vec![1; depth.max(2)]).expect("all-ones prefix of depth >= 2")
    }

    /// Random prefix with quotients uniform in `1..=max_quotient`, in
    /// canonical form.
    pub fn random_prefix<R: Rng + ?Sized>(rng: &mut R, depth: usize, max_quotient: u64) -> Self {
        let mut q: Vec<u64> = (0..depth.max(2))
            .map(|_| rng.random_range(1..=max_quotient.max(1)))
            .collect();
        canonicalize(&mut q);
        CFExpansion::new(q).expect("canonical random prefix")
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    /// Number of partial quotients `K`.
    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// Partial quotient `a_n`, 1-based.
    pub fn a(&self, n: usize) -> u64 {
        self.quotients[n - 1]
    }

    pub fn convergents(&self) -> &[(BigUint, BigUint)] {
        &self.convergents
    }

    /// Denominator `q_k`, `k = 0..=K`.
    pub fn q(&self, k: usize) -> &BigUint {
        &self.convergents[k].1
    }

    /// `q_k` as `u64` when it fits.
    pub fn q_u64(&self, k: usize) -> Option<u64> {
        self.convergents[k].1.to_u64()
    }

    pub fn denominators_u64(&self) -> Vec<u64> {
        self.convergents
            .iter()
            .map_while(|(_, q)| q.to_u64())
            .collect()
    }

    pub fn value(&self) -> Rational {
        let (p, q) = self.convergents.last().expect("non-empty");
        Rational::from_big(p.clone(), q.clone())
    }

    pub fn is_canonical(&self) -> bool {
        self.quotients.len() == 1 || *self.quotients.last().unwrap() >= 2
    }

    /// Same value with a trailing `1` merged into the previous quotient.
    pub fn canonical(&self) -> Self {
        let mut q = self.quotients.clone();
        canonicalize(&mut q);
        CFExpansion::new(q).expect("canonical form of a valid expansion")
    }

    /// Largest orbit length for which the rational value stands in for an
    /// irrational rotation number: `floor(q_K / 2)`.
    pub fn horizon(&self) -> u64 {
        (self.q(self.depth()) / 2u32).to_u64().unwrap_or(u64::MAX)
    }

    /// Comma-separated quotient list.
    pub fn to_list_string(&self) -> String {
        self.quotients
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromStr for CFExpansion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let q = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad quotient {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CFExpansion::new(q)
    }
}

impl fmt::Display for CFExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_list_string())
    }
}

fn canonicalize(q: &mut Vec<u64>) {
    if q.len() >= 2 && *q.last().unwrap() == 1 {
        q.pop();
        *q.last_mut().unwrap() += 1;
    }
}

fn convergents_of(quotients: &[u64]) -> Vec<(BigUint, BigUint)> {
    let mut out = Vec::with_capacity(quotients.len() + 1);
    // (p_{-1}, q_{-1}) = (1, 0), (p_0, q_0) = (0, 1)
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    out.push((p.clone(), q.clone()));
    for &a in quotients {
        let p_next = &p * a + &p_prev;
        let q_next = &q * a + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        out.push((p.clone(), q.clone()));
    }
    out
}

/// Continued fraction of `x in (0, 1)` by the Gauss map on exact rationals.
///
/// Stops when the remainder vanishes or after `max_depth` quotients; the
/// result is canonical (last quotient at least 2).
pub fn cf_expand(x: &Rational, max_depth: usize) -> Result<CFExpansion> {
    if !x.in_open_unit() {
        return Err(Error::Domain(format!("{x} is not in (0,1)")));
    }
    if max_depth == 0 {
        return Err(Error::Domain("max_depth must be positive".into()));
    }
    let mut num = x.numer().magnitude().clone();
    let mut den = x.denom().magnitude().clone();
    let mut quotients = Vec::new();
    while !num.is_zero() && quotients.len() < max_depth {
        let (a, rem) = den.div_rem(&num);
        quotients.push(
            a.to_u64()
                .ok_or_else(|| Error::Domain("partial quotient exceeds 64 bits".into()))?,
        );
        den = std::mem::replace(&mut num, rem);
    }
    canonicalize(&mut quotients);
    CFExpansion::new(quotients)
}

/// Exact value of `[0; a_1, ..., a_K]`.
pub fn cf_value(quotients: &[u64]) -> Result<Rational> {
    if quotients.is_empty() {
        return Err(Error::Domain("empty quotient list".into()));
    }
    if quotients.contains(&0) {
        return Err(Error::Domain("partial quotients must be positive".into()));
    }
    let mut v = Rational::zero();
    for &a in quotients.iter().rev() {
        v = (Rational::from_integer(a) + v).recip();
    }
    Ok(v)
}

pub fn convergents(cf: &CFExpansion) -> &[(BigUint, BigUint)] {
    cf.convergents()
}

/// `<<q alpha>>`, the distance from `q alpha` to the nearest integer.
pub fn dist_nearest_int(q: &BigUint, alpha: &Rational) -> Rational {
    let qa = (Rational::from_integer(BigInt::from(q.clone())) * alpha).fract_part();
    let other = Rational::one() - &qa;
    qa.min(other)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    /// Indices `n` (1-based) with `a_n^3 >= n^4`.
    pub violations: Vec<usize>,
    /// `(N, (1/N) * sum_{i <= N, a_i >= C} ln a_i)` for every `N <= K`.
    pub log_defect: Vec<(usize, f64)>,
    pub max_quotient: u64,
}

impl DiophantineReport {
    /// Violations at indices strictly greater than `after`.
    pub fn late_violations(&self, after: usize) -> Vec<usize> {
        self.violations
            .iter()
            .copied()
            .filter(|&n| n > after)
            .collect()
    }
}

pub fn diophantine_report(cf: &CFExpansion, c: u64) -> DiophantineReport {
    let mut violations = Vec::new();
    let mut log_defect = Vec::with_capacity(cf.depth());
    let mut big_log_sum = 0.0f64;
    for (idx, &a) in cf.quotients().iter().enumerate() {
        let n = idx + 1;
        let a_cubed = BigUint::from(a).pow(3);
        let n_fourth = BigUint::from(n).pow(4);
        if a_cubed >= n_fourth {
            violations.push(n);
        }
        // sum of all logs minus the logs of quotients below C
        if a >= c {
            big_log_sum += (a as f64).ln();
        }
        log_defect.push((n, big_log_sum / n as f64));
    }
    DiophantineReport {
        violations,
        log_defect,
        max_quotient: max_quotient_prefix(cf),
    }
}

pub fn max_quotient_prefix(cf: &CFExpansion) -> u64 {
    cf.quotients().iter().copied().max().unwrap_or(0)
}
