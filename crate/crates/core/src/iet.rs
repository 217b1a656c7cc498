//! Interval exchange transformations on `[0, 1)` with exact rational data.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{AnyLattice, Lane, Lattice};
use crate::numbers::{cf_expand, dist_nearest_int, CFExpansion, Rational};
use crate::with_lattice;

/// Half-open arc `[left, left + length)` of the circle `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CircleInterval {
    left: Rational,
    length: Rational,
}

impl CircleInterval {
    pub fn new(left: Rational, length: Rational) -> Result<Self> {
        if length.is_negative() || length > Rational::one() {
            return Err(Error::Domain(format!("arc length {length} outside [0,1]")));
        }
        Ok(CircleInterval {
            left: left.fract_part(),
            length,
        })
    }

    /// Arc from `a` to `b` going forward (wrapping when `b < a`).
    pub fn between(a: &Rational, b: &Rational) -> Self {
        let a = a.fract_part();
        let length = (b.clone() - &a).fract_part();
        CircleInterval { left: a, length }
    }

    pub fn full() -> Self {
        CircleInterval {
            left: Rational::zero(),
            length: Rational::one(),
        }
    }

    /// Ball `[y - r, y + r)`, the whole circle once `2r >= 1`.
    pub fn ball(y: &Rational, r: &Rational) -> Self {
        let two_r = r.clone() + r;
        if two_r >= Rational::one() {
            return Self::full();
        }
        CircleInterval {
            left: (y.clone() - r).fract_part(),
            length: two_r,
        }
    }

    pub fn left(&self) -> &Rational {
        &self.left
    }

    pub fn length(&self) -> &Rational {
        &self.length
    }

    /// Right end as a point of `[0, 1)`.
    pub fn right(&self) -> Rational {
        (self.left.clone() + &self.length).fract_part()
    }

    pub fn measure(&self) -> Rational {
        self.length.clone()
    }

    pub fn wraps(&self) -> bool {
        self.left.clone() + &self.length > Rational::one()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        (x.clone() - &self.left).fract_part() < self.length
    }

    pub fn rotate(&self, by: &Rational) -> Self {
        CircleInterval {
            left: (self.left.clone() + by).fract_part(),
            length: self.length.clone(),
        }
    }

    pub fn to_set(&self) -> IntervalSet {
        let end = self.left.clone() + &self.length;
        let one = Rational::one();
        if end <= one {
            IntervalSet::from_pieces(vec![(self.left.clone(), end)])
        } else {
            IntervalSet::from_pieces(vec![
                (Rational::zero(), end - &one),
                (self.left.clone(), one),
            ])
        }
    }
}

impl fmt::Display for CircleInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, +{})", self.left, self.length)
    }
}

/// Finite union of half-open subintervals of `[0, 1)`, kept sorted with
/// touching pieces merged.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct IntervalSet {
    pieces: Vec<(Rational, Rational)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalSet {
            pieces: vec![(Rational::zero(), Rational::one())],
        }
    }

    /// Normalizes arbitrary (possibly overlapping, unsorted) pieces; empty
    /// pieces are dropped.
    pub fn from_pieces(mut raw: Vec<(Rational, Rational)>) -> Self {
        raw.retain(|(a, b)| a < b);
        raw.sort();
        let mut pieces: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            if let Some(last) = pieces.last_mut() {
                if a <= last.1 {
                    if b > last.1 {
                        last.1 = b;
                    }
                    continue;
                }
            }
            pieces.push((a, b));
        }
        IntervalSet { pieces }
    }

    pub fn pieces(&self) -> &[(Rational, Rational)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.pieces
            .iter()
            .fold(Rational::zero(), |acc, (a, b)| acc + (b.clone() - a))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let k = self.pieces.partition_point(|(a, _)| a <= x);
        k > 0 && x < &self.pieces[k - 1].1
    }

    /// Number of arcs once the pieces at `0` and at `1` are glued.
    pub fn arc_count(&self) -> usize {
        let n = self.pieces.len();
        if n >= 2 && self.pieces[0].0.is_zero() && self.pieces[n - 1].1 == Rational::one() {
            n - 1
        } else {
            n
        }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut raw = self.pieces.clone();
        raw.extend(other.pieces.iter().cloned());
        IntervalSet::from_pieces(raw)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a1, b1) = &self.pieces[i];
            let (a2, b2) = &other.pieces[j];
            let lo = if a1 > a2 { a1 } else { a2 };
            let hi = if b1 < b2 { b1 } else { b2 };
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_pieces(out)
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.intersection(&other.complement())
    }

    pub fn complement(&self) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        for (a, b) in &self.pieces {
            if &cursor < a {
                out.push((cursor.clone(), a.clone()));
            }
            cursor = b.clone();
        }
        if cursor < Rational::one() {
            out.push((cursor, Rational::one()));
        }
        IntervalSet::from_pieces(out)
    }

    /// Measure of the intersection, without building it.
    pub fn overlap(&self, other: &IntervalSet) -> Rational {
        let mut total = Rational::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let (a1, b1) = &self.pieces[i];
            let (a2, b2) = &other.pieces[j];
            let lo = if a1 > a2 { a1 } else { a2 };
            let hi = if b1 < b2 { b1 } else { b2 };
            if lo < hi {
                total = total + (hi.clone() - lo);
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// Rotation of the set by `by` on the circle.
    pub fn rotate(&self, by: &Rational) -> IntervalSet {
        let mut raw = Vec::new();
        for (a, b) in &self.pieces {
            let arc = CircleInterval::new(a.clone(), b.clone() - a).expect("piece inside [0,1)");
            raw.extend(arc.rotate(by).to_set().pieces);
        }
        IntervalSet::from_pieces(raw)
    }
}

/// A `d`-interval exchange of `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Iet {
    lengths: Vec<Rational>,
    /// `π(j)` for `j = 1..d`, stored 1-based as given.
    permutation: Vec<usize>,
    lefts: Vec<Rational>,
    image_lefts: Vec<Rational>,
    /// Intervals in the order of their images.
    image_order: Vec<usize>,
    rotation: Option<CFExpansion>,
}

#[derive(Serialize, Deserialize)]
struct IetRecord {
    lengths: Vec<Rational>,
    permutation: Vec<usize>,
}

impl Serialize for Iet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IetRecord {
            lengths: self.lengths.clone(),
            permutation: self.permutation.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Iet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = IetRecord::deserialize(d)?;
        make_iet(rec.lengths, rec.permutation).map_err(serde::de::Error::custom)
    }
}

/// Validates the data and precomputes both endpoint lists.
pub fn make_iet(lengths: Vec<Rational>, permutation: Vec<usize>) -> Result<Iet> {
    let d = lengths.len();
    if d == 0 {
        return Err(Error::Construction("no intervals".into()));
    }
    if permutation.len() != d {
        return Err(Error::Construction(format!(
            "{d} lengths but {} permutation entries",
            permutation.len()
        )));
    }
    if let Some(l) = lengths.iter().find(|l| l <= &&Rational::zero()) {
        return Err(Error::Construction(format!("non-positive length {l}")));
    }
    let total = lengths.iter().fold(Rational::zero(), |a, l| a + l);
    if total != Rational::one() {
        return Err(Error::Construction(format!("lengths sum to {total}, not 1")));
    }
    let mut seen = vec![false; d];
    for &p in &permutation {
        if p == 0 || p > d || seen[p - 1] {
            return Err(Error::Construction(format!(
                "{permutation:?} is not a permutation of 1..{d}"
            )));
        }
        seen[p - 1] = true;
    }
    let mut lefts = Vec::with_capacity(d);
    let mut acc = Rational::zero();
    for l in &lengths {
        lefts.push(acc.clone());
        acc = acc + l;
    }
    let mut image_order: Vec<usize> = (0..d).collect();
    image_order.sort_by_key(|&j| permutation[j]);
    let mut image_lefts = vec![Rational::zero(); d];
    let mut acc = Rational::zero();
    for &j in &image_order {
        image_lefts[j] = acc.clone();
        acc = acc + &lengths[j];
    }
    let rotation = if d == 2 && permutation == [2, 1] {
        cf_expand(&lengths[1], usize::MAX).ok()
    } else {
        None
    };
    Ok(Iet {
        lengths,
        permutation,
        lefts,
        image_lefts,
        image_order,
        rotation,
    })
}

/// `R_α` as the exchange of `[0, 1-α)` and `[1-α, 1)`.
pub fn rotation_iet(alpha: &Rational) -> Result<Iet> {
    if !alpha.in_open_unit() {
        return Err(Error::Domain(format!("rotation number {alpha} not in (0,1)")));
    }
    make_iet(vec![Rational::one() - alpha, alpha.clone()], vec![2, 1])
}

impl Iet {
    pub fn d(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[Rational] {
        &self.lengths
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn lefts(&self) -> &[Rational] {
        &self.lefts
    }

    pub fn image_lefts(&self) -> &[Rational] {
        &self.image_lefts
    }

    /// Continued fraction of `α` when this is a rotation.
    pub fn rotation_cf(&self) -> Option<&CFExpansion> {
        self.rotation.as_ref()
    }

    pub fn rotation_number(&self) -> Option<&Rational> {
        self.rotation.as_ref().map(|_| &self.lengths[1])
    }

    /// Interior breakpoints `l_1, l_1 + l_2, ...`.
    pub fn discontinuities(&self) -> &[Rational] {
        &self.lefts[1..]
    }

    pub fn common_denominator(&self) -> BigUint {
        self.lengths
            .iter()
            .fold(BigUint::one(), |acc, l| acc.lcm(&l.denom_unsigned()))
    }

    /// Orbit length below which the rational data stands in for an
    /// irrational one: half the common denominator.
    pub fn horizon(&self) -> u64 {
        (self.common_denominator() / 2u32).to_u64().unwrap_or(u64::MAX)
    }

    pub fn check_horizon(&self, n: u64) -> Result<()> {
        let h = self.horizon();
        if n >= h {
            Err(Error::Horizon {
                requested: n,
                horizon: h,
            })
        } else {
            Ok(())
        }
    }

    /// Index (0-based) of the interval containing `x`.
    pub fn interval_of(&self, x: &Rational) -> usize {
        self.lefts.partition_point(|l| l <= x) - 1
    }

    fn forward(&self, x: &Rational) -> Rational {
        let j = self.interval_of(x);
        x.clone() - &self.lefts[j] + &self.image_lefts[j]
    }

    fn backward(&self, y: &Rational) -> Rational {
        let k = self
            .image_order
            .partition_point(|&j| &self.image_lefts[j] <= y);
        let j = self.image_order[k - 1];
        y.clone() - &self.image_lefts[j] + &self.lefts[j]
    }

    /// `T^k(x)`, negative `k` iterating the inverse.
    pub fn apply(&self, x: &Rational, k: i64) -> Rational {
        let mut y = x.clone();
        if k >= 0 {
            for _ in 0..k {
                y = self.forward(&y);
            }
        } else {
            for _ in 0..k.unsigned_abs() {
                y = self.backward(&y);
            }
        }
        y
    }

    /// Letter (1-based) of `x`.
    pub fn letter(&self, x: &Rational) -> usize {
        self.interval_of(x) + 1
    }

    /// `T^{-1}(S)` as a union of linear pieces.
    pub fn preimage(&self, set: &IntervalSet) -> IntervalSet {
        let one = Rational::one();
        let mut raw = Vec::new();
        for j in 0..self.d() {
            let lo = &self.image_lefts[j];
            let hi = self.image_lefts[j].clone() + &self.lengths[j];
            let window = IntervalSet::from_pieces(vec![(lo.clone(), hi.min(one.clone()))]);
            for (a, b) in set.intersection(&window).pieces() {
                let shift = self.lefts[j].clone() - lo;
                raw.push((a.clone() + &shift, b.clone() + &shift));
            }
        }
        IntervalSet::from_pieces(raw)
    }

    /// `T(S)` as a union of linear pieces.
    pub fn image(&self, set: &IntervalSet) -> IntervalSet {
        let mut raw = Vec::new();
        for j in 0..self.d() {
            let lo = &self.lefts[j];
            let hi = self.lefts[j].clone() + &self.lengths[j];
            let window = IntervalSet::from_pieces(vec![(lo.clone(), hi)]);
            for (a, b) in set.intersection(&window).pieces() {
                let shift = self.image_lefts[j].clone() - lo;
                raw.push((a.clone() + &shift, b.clone() + &shift));
            }
        }
        IntervalSet::from_pieces(raw)
    }

    /// `T^{-k}(S)` for `k >= 0`.
    pub fn preimage_iter(&self, set: &IntervalSet, k: u64) -> IntervalSet {
        let mut s = set.clone();
        for _ in 0..k {
            s = self.preimage(&s);
        }
        s
    }

    /// Own lattice: modulus is the common denominator of the lengths.
    pub fn lattice(&self) -> AnyLattice {
        AnyLattice::new(self, &[])
    }

    /// `{0}` together with `D` pulled back `0..n-1` times, sorted with
    /// repeats removed.
    pub fn discontinuity_set(&self, n: u64) -> Vec<Rational> {
        let any = self.lattice();
        with_lattice!(&any, lat => {
            let mut pts = discontinuity_numerators(self, lat, n);
            pts.sort();
            pts.dedup();
            pts.iter().map(|p| lat.to_rational(p)).collect()
        })
    }

    /// Minimum circular gap of the discontinuity multiset of `T^n`; `0`
    /// when two of its points coincide.
    ///
    /// Rotations use the three-distance value `min_{k <= n} <<kα>>`, which
    /// is `<<q α>>` for the largest convergent denominator `q <= n`.
    pub fn e_t(&self, n: u64) -> Rational {
        match &self.rotation {
            Some(cf) => rotation_e_t(cf, &self.lengths[1], n),
            None => self.e_t_enumerated(n),
        }
    }

    /// `e_T(n)` by sorting the full discontinuity multiset.
    pub fn e_t_enumerated(&self, n: u64) -> Rational {
        let any = self.lattice();
        with_lattice!(&any, lat => {
            let mut pts = discontinuity_numerators(self, lat, n);
            match min_circular_gap(&mut pts, lat.modulus()) {
                Some(g) => lat.to_rational(&g),
                None => Rational::zero(),
            }
        })
    }

    /// True iff no point of `D ∪ {0}` reaches a point of `D ∪ {0}` in
    /// `1..=depth` forward steps. The step from the left end of the interval
    /// whose image starts at `0` onto `0` itself is part of how `T` is
    /// written down and is not counted.
    pub fn keane_check(&self, depth: u64) -> bool {
        let any = self.lattice();
        with_lattice!(&any, lat => keane_on(self, lat, depth))
    }
}

/// Interval whose image begins at `0`; its left end maps to `0` by fiat.
fn structural_pair(t: &Iet) -> Option<Rational> {
    let j = t.image_order[0];
    let l = &t.lefts[j];
    if l.is_zero() {
        None
    } else {
        Some(l.clone())
    }
}

fn keane_on<L: Lane>(t: &Iet, lat: &Lattice<L>, depth: u64) -> bool {
    let mut seeds: Vec<L> = vec![L::origin()];
    for p in t.discontinuities() {
        seeds.push(lat.point(p).expect("breakpoint on own lattice"));
    }
    let targets: HashSet<L> = seeds.iter().cloned().collect();
    let skip = structural_pair(t).map(|p| lat.point(&p).expect("on lattice"));
    for p in &seeds {
        let mut x = p.clone();
        for m in 1..=depth {
            x = lat.step(&x);
            if targets.contains(&x) {
                let structural = m == 1 && x.is_origin() && skip.as_ref() == Some(p);
                if !structural {
                    return false;
                }
            }
        }
    }
    true
}

/// Multiset `{0} ∪ {T^{-k} δ : δ ∈ D, 0 <= k < n}` as numerators. Pulling
/// `0` back only reproduces the orbit of the breakpoint sent to `0`, so it
/// enters once.
pub fn discontinuity_numerators<L: Lane>(t: &Iet, lat: &Lattice<L>, n: u64) -> Vec<L> {
    let mut out = Vec::with_capacity(1 + t.discontinuities().len() * n as usize);
    out.push(L::origin());
    for p in t.discontinuities() {
        let mut x = lat.point(p).expect("breakpoint on own lattice");
        for k in 0..n {
            if k > 0 {
                x = lat.step_back(&x);
            }
            out.push(x.clone());
        }
    }
    out
}

/// Minimum circular gap; `None` if two entries coincide.
pub fn min_circular_gap<L: Lane>(pts: &mut [L], modulus: &L) -> Option<L> {
    pts.sort();
    if pts.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let first = pts.first()?;
    let last = pts.last()?;
    let mut best = first.add_mod(&last.complement(modulus), modulus);
    if pts.len() == 1 {
        return Some(modulus.clone());
    }
    for w in pts.windows(2) {
        let g = w[1].sub_mod(&w[0], modulus);
        if g < best {
            best = g;
        }
    }
    Some(best)
}

fn rotation_e_t(cf: &CFExpansion, alpha: &Rational, n: u64) -> Rational {
    let n_big = BigUint::from(n);
    if &n_big >= cf.q(cf.depth()) {
        return Rational::zero();
    }
    let mut best = None;
    for k in 0..=cf.depth() {
        if cf.q(k) <= &n_big {
            best = Some(k);
        }
    }
    match best {
        Some(k) => dist_nearest_int(cf.q(k), alpha),
        None => Rational::one(),
    }
}

impl fmt::Display for Iet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ls: Vec<String> = self.lengths.iter().map(|l| l.to_string()).collect();
        write!(f, "lengths=({}) pi={:?}", ls.join(","), self.permutation)
    }
}
