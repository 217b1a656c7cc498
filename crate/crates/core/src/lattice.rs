//! Integer kernel for long orbits.
//!
//! Every point that occurs in an experiment (interval data, sampled points
//! `k / 2^64`, target centers and radii) has a denominator dividing one
//! common modulus `Q`. Points are then stored as numerators in `[0, Q)` and a
//! map step is one comparison plus one modular add. The numerator width is
//! picked from the size of `Q`.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::iet::Iet;
use crate::numbers::Rational;

/// Unsigned numerator type for a lattice of modulus `Q`.
pub trait Lane: Clone + Ord + Eq + Hash + Send + Sync + Debug + 'static {
    fn origin() -> Self;
    fn from_big(v: &BigUint) -> Option<Self>;
    fn to_big(&self) -> BigUint;
    /// `a + b mod m` for `a, b < m`.
    fn add_mod(&self, b: &Self, m: &Self) -> Self;
    /// `a - b mod m` for `a, b < m`.
    fn sub_mod(&self, b: &Self, m: &Self) -> Self;
    /// `m - a` for `a <= m`.
    fn complement(&self, m: &Self) -> Self;
    fn is_origin(&self) -> bool;
}

macro_rules! prim_lane {
    ($t:ty) => {
        impl Lane for $t {
            #[inline]
            fn origin() -> Self {
                0
            }
            fn from_big(v: &BigUint) -> Option<Self> {
                let digits = v.to_u64_digits();
                let mut out: $t = 0;
                for (i, d) in digits.iter().enumerate() {
                    let shift = 64 * i as u32;
                    if shift >= <$t>::BITS {
                        if *d != 0 {
                            return None;
                        }
                        continue;
                    }
                    let part = (*d as $t).checked_shl(shift)?;
                    if (part >> shift) as u64 != *d {
                        return None;
                    }
                    out |= part;
                }
                Some(out)
            }
            fn to_big(&self) -> BigUint {
                BigUint::from(*self)
            }
            #[inline]
            fn add_mod(&self, b: &Self, m: &Self) -> Self {
                let room = *m - *b;
                if *self >= room {
                    *self - room
                } else {
                    *self + *b
                }
            }
            #[inline]
            fn sub_mod(&self, b: &Self, m: &Self) -> Self {
                if *self >= *b {
                    *self - *b
                } else {
                    *self + (*m - *b)
                }
            }
            #[inline]
            fn complement(&self, m: &Self) -> Self {
                *m - *self
            }
            #[inline]
            fn is_origin(&self) -> bool {
                *self == 0
            }
        }
    };
}

prim_lane!(u64);
prim_lane!(u128);

impl Lane for BigUint {
    fn origin() -> Self {
        Zero::zero()
    }
    fn from_big(v: &BigUint) -> Option<Self> {
        Some(v.clone())
    }
    fn to_big(&self) -> BigUint {
        self.clone()
    }
    fn add_mod(&self, b: &Self, m: &Self) -> Self {
        let s = self + b;
        if &s >= m {
            s - m
        } else {
            s
        }
    }
    fn sub_mod(&self, b: &Self, m: &Self) -> Self {
        if self >= b {
            self - b
        } else {
            self + m - b
        }
    }
    fn complement(&self, m: &Self) -> Self {
        m - self
    }
    fn is_origin(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// An IET acting on numerators over the modulus `Q`.
#[derive(Clone, Debug)]
pub struct Lattice<L: Lane> {
    modulus: L,
    modulus_big: BigUint,
    /// Numerators of the left endpoints of `I_1, ..., I_d`.
    lefts: Vec<L>,
    /// Forward translation of each interval, as an addend mod `Q`.
    shifts: Vec<L>,
    /// Image left endpoints sorted, with the interval each one came from.
    image_lefts: Vec<L>,
    image_owner: Vec<usize>,
}

impl<L: Lane> Lattice<L> {
    pub fn modulus(&self) -> &L {
        &self.modulus
    }

    pub fn modulus_big(&self) -> &BigUint {
        &self.modulus_big
    }

    /// Index (0-based) of the interval containing `x`.
    #[inline]
    pub fn interval_of(&self, x: &L) -> usize {
        self.lefts.partition_point(|l| l <= x) - 1
    }

    #[inline]
    pub fn step(&self, x: &L) -> L {
        let j = if self.lefts.len() == 2 {
            (x >= &self.lefts[1]) as usize
        } else {
            self.interval_of(x)
        };
        x.add_mod(&self.shifts[j], &self.modulus)
    }

    #[inline]
    pub fn step_back(&self, x: &L) -> L {
        let k = self.image_lefts.partition_point(|l| l <= x) - 1;
        x.sub_mod(&self.shifts[self.image_owner[k]], &self.modulus)
    }

    pub fn iterate(&self, x: &L, k: u64) -> L {
        let mut y = x.clone();
        for _ in 0..k {
            y = self.step(&y);
        }
        y
    }

    /// Numerator of a point of `[0, 1)` lying on this lattice.
    pub fn point(&self, r: &Rational) -> Result<L> {
        let big = lattice_numerator(r, &self.modulus_big)?;
        L::from_big(&big).ok_or_else(|| Error::Domain("numerator exceeds lane".into()))
    }

    /// Numerator of a length in `[0, 1]`.
    pub fn length(&self, r: &Rational) -> Result<L> {
        if r.is_negative() || r > &Rational::one() {
            return Err(Error::Domain(format!("{r} is not a length")));
        }
        let scaled = r.clone() * Rational::from_integer(BigInt::from(self.modulus_big.clone()));
        if !scaled.denom().is_one() {
            return Err(Error::Domain(format!("{r} is not on the lattice")));
        }
        let big = scaled.numer().magnitude().clone();
        L::from_big(&big).ok_or_else(|| Error::Domain("numerator exceeds lane".into()))
    }

    pub fn to_rational(&self, x: &L) -> Rational {
        Rational::from_big(x.to_big(), self.modulus_big.clone())
    }

    /// `floor(r Q)` and `ceil(r Q)` for `r` in `[0, 1]`; both fit the lane.
    pub fn floor_ceil(&self, r: &Rational) -> (L, L) {
        let (f, c) = floor_ceil_scaled(r, &self.modulus_big);
        (
            L::from_big(&f).expect("at most Q"),
            L::from_big(&c).expect("at most Q"),
        )
    }
}

/// Numerator of `r` over `q`, failing when `r` is not a multiple of `1/q`
/// or lies outside `[0, 1)`.
pub fn lattice_numerator(r: &Rational, q: &BigUint) -> Result<BigUint> {
    if !r.in_unit() {
        return Err(Error::Domain(format!("{r} is not in [0,1)")));
    }
    let scaled = r.clone() * Rational::from_integer(BigInt::from(q.clone()));
    if !scaled.denom().is_one() {
        return Err(Error::Domain(format!("{r} is not on the lattice 1/{q}")));
    }
    Ok(scaled.numer().magnitude().clone())
}

/// `floor(r q)` and `ceil(r q)` for non-negative `r`.
pub fn floor_ceil_scaled(r: &Rational, q: &BigUint) -> (BigUint, BigUint) {
    let n = r.numer().magnitude() * q;
    let d = r.denom().magnitude();
    let (f, rem) = n.div_rem(d);
    let c = if rem.is_zero() { f.clone() } else { &f + 1u32 };
    (f, c)
}

/// A lattice with the narrowest lane that holds its modulus.
#[derive(Clone, Debug)]
pub enum AnyLattice {
    Small(Lattice<u64>),
    Narrow(Lattice<u128>),
    Wide(Lattice<BigUint>),
}

/// Expands `$body` once per lane with `$lat` bound to the concrete lattice.
#[macro_export]
macro_rules! with_lattice {
    ($any:expr, $lat:ident => $body:expr) => {
        match $any {
            $crate::lattice::AnyLattice::Small($lat) => $body,
            $crate::lattice::AnyLattice::Narrow($lat) => $body,
            $crate::lattice::AnyLattice::Wide($lat) => $body,
        }
    };
}

impl AnyLattice {
    /// Lattice for `T` whose modulus is also divisible by every entry of
    /// `extra` (e.g. `2^64` for sampled points).
    pub fn new(t: &Iet, extra: &[BigUint]) -> Self {
        let mut q = t.common_denominator();
        for e in extra {
            q = q.lcm(e);
        }
        Self::with_modulus(t, q)
    }

    pub fn with_modulus(t: &Iet, q: BigUint) -> Self {
        if q.bits() <= 63 {
            AnyLattice::Small(build(t, &q))
        } else if q.bits() <= 126 {
            AnyLattice::Narrow(build(t, &q))
        } else {
            AnyLattice::Wide(build(t, &q))
        }
    }

    pub fn modulus(&self) -> BigUint {
        with_lattice!(self, l => l.modulus_big().clone())
    }

    pub fn lane_name(&self) -> &'static str {
        match self {
            AnyLattice::Small(_) => "u64",
            AnyLattice::Narrow(_) => "u128",
            AnyLattice::Wide(_) => "biguint",
        }
    }
}

fn build<L: Lane>(t: &Iet, q: &BigUint) -> Lattice<L> {
    let conv = |r: &Rational| -> L {
        let v = r.clone() * Rational::from_integer(BigInt::from_biguint(Sign::Plus, q.clone()));
        debug_assert!(v.denom().is_one());
        L::from_big(v.numer().magnitude()).expect("fits chosen lane")
    };
    let modulus = L::from_big(q).expect("fits chosen lane");
    let lefts: Vec<L> = t.lefts().iter().map(conv).collect();
    let image: Vec<L> = t.image_lefts().iter().map(conv).collect();
    let shifts: Vec<L> = image
        .iter()
        .zip(&lefts)
        .map(|(im, l)| im.sub_mod(l, &modulus))
        .collect();
    let mut order: Vec<usize> = (0..lefts.len()).collect();
    order.sort_by(|&a, &b| image[a].cmp(&image[b]));
    Lattice {
        modulus,
        modulus_big: q.clone(),
        lefts,
        shifts,
        image_lefts: order.iter().map(|&j| image[j].clone()).collect(),
        image_owner: order,
    }
}

/// `2^64`, the denominator of sampled points.
pub fn dyadic64() -> BigUint {
    BigUint::one() << 64u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::{make_iet, rotation_iet};

    #[test]
    fn lane_conversion_bounds() {
        let big = BigUint::one() << 70u32;
        assert_eq!(u64::from_big(&big), None);
        assert_eq!(u128::from_big(&big), Some(1u128 << 70));
        assert_eq!(u64::from_big(&BigUint::from(7u32)), Some(7));
        assert_eq!(u64::add_mod(&5, &4, &7), 2);
        assert_eq!(u64::sub_mod(&1, &4, &7), 4);
    }

    #[test]
    fn lattice_matches_exact_rotation() {
        let t = rotation_iet(&Rational::frac(13, 21)).unwrap();
        for extra in [vec![], vec![dyadic64()], vec![BigUint::one() << 130u32]] {
            let any = AnyLattice::new(&t, &extra);
            with_lattice!(&any, lat => {
                let mut x = lat.point(&Rational::zero()).unwrap();
                let mut exact = Rational::zero();
                for _ in 0..50 {
                    x = lat.step(&x);
                    exact = t.apply(&exact, 1);
                    assert_eq!(lat.to_rational(&x), exact);
                    assert_eq!(lat.to_rational(&lat.step_back(&x)), t.apply(&exact, -1));
                }
            });
        }
    }

    #[test]
    fn lattice_matches_exact_iet() {
        let t = make_iet(
            vec![
                Rational::frac(1, 7),
                Rational::frac(2, 7),
                Rational::frac(3, 14),
                Rational::frac(5, 14),
            ],
            vec![4, 3, 2, 1],
        )
        .unwrap();
        let any = AnyLattice::new(&t, &[dyadic64()]);
        assert_eq!(any.lane_name(), "u128");
        with_lattice!(&any, lat => {
            let start = Rational::frac(3, 11 * 128).fract_part();
            let start = Rational::new(
                (start * Rational::from_integer(1i64 << 40)).floor(),
                1i64 << 40,
            ).unwrap();
            let mut x = lat.point(&start).unwrap();
            let mut exact = start;
            for _ in 0..200 {
                x = lat.step(&x);
                exact = t.apply(&exact, 1);
                assert_eq!(lat.to_rational(&x), exact);
            }
        });
    }

    #[test]
    fn off_lattice_point_rejected() {
        let t = rotation_iet(&Rational::frac(1, 3)).unwrap();
        let any = AnyLattice::new(&t, &[]);
        with_lattice!(&any, lat => {
            assert!(lat.point(&Rational::frac(1, 2)).is_err());
            assert!(lat.point(&Rational::one()).is_err());
        });
    }

    #[test]
    fn floor_ceil_scaling() {
        let q = BigUint::from(10u32);
        let (f, c) = floor_ceil_scaled(&Rational::frac(1, 3), &q);
        assert_eq!((f, c), (BigUint::from(3u32), BigUint::from(4u32)));
        let (f, c) = floor_ceil_scaled(&Rational::frac(1, 2), &q);
        assert_eq!((f, c), (BigUint::from(5u32), BigUint::from(5u32)));
    }
}
