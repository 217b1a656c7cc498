//! Shrinking-target hit counts for balls `B(y, r_i)` along orbits.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iet::{CircleInterval, Iet, IntervalSet};
use crate::lattice::{floor_ceil_scaled, AnyLattice, Lane, Lattice};
use crate::numbers::Rational;
use crate::with_lattice;

/// Numerator of the dyadic harmonic numbers behind `log_harmonic`.
pub const LOG_HARMONIC_SCALE_BITS: u32 = 40;

/// Largest index `radius_eval` will sum up to for `log_harmonic`.
const LOG_HARMONIC_RANDOM_ACCESS_LIMIT: u64 = 200_000_000;

/// Radius sequences `r_1, r_2, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RadiusSpec {
    /// `r_i = t / i`.
    Harmonic(Rational),
    /// `r_i = 2^40 / (i H(i))` with `H(1) = 2^40` and
    /// `H(i) = H(i-1) + floor(2^40 / i)`: a dyadic truncation of the
    /// harmonic numbers, so `i r_i` is non-increasing, `sum r_i` diverges
    /// and `r_i >= 1 / (i (1 + ln i))`.
    LogHarmonic,
    /// `r_i = c`.
    Constant(Rational),
    /// Explicit `r_1, ..., r_k`.
    Table(Vec<Rational>),
}

impl RadiusSpec {
    /// `i r_i` non-increasing.
    pub fn khinchin(&self) -> bool {
        match self {
            RadiusSpec::Harmonic(_) | RadiusSpec::LogHarmonic => true,
            RadiusSpec::Constant(c) => c.is_zero(),
            RadiusSpec::Table(v) => v.windows(2).enumerate().all(|(k, w)| {
                let i = Rational::from_integer(k as i64 + 1);
                let j = Rational::from_integer(k as i64 + 2);
                j * &w[1] <= i * &w[0]
            }),
        }
    }

    /// `r_i` non-increasing.
    pub fn monotone(&self) -> bool {
        match self {
            RadiusSpec::Table(v) => v.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }

    pub fn cursor(&self) -> RadiusCursor<'_> {
        RadiusCursor {
            spec: self,
            i: 0,
            harmonic: BigUint::zero(),
        }
    }

    /// Largest index with a defined radius.
    pub fn max_index(&self) -> Option<u64> {
        match self {
            RadiusSpec::Table(v) => Some(v.len() as u64),
            _ => None,
        }
    }
}

impl fmt::Display for RadiusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiusSpec::Harmonic(t) => write!(f, "harmonic:{t}"),
            RadiusSpec::LogHarmonic => write!(f, "log_harmonic"),
            RadiusSpec::Constant(c) => write!(f, "constant:{c}"),
            RadiusSpec::Table(v) => {
                let parts: Vec<String> = v.iter().map(|r| r.to_string()).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for RadiusSpec {
    type Err = Error;

    /// `harmonic:1/2`, `log_harmonic`, `constant:1/3`, `table:1/2,1/3` or
    /// `table:@path` (whitespace or comma separated rationals).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, arg) = s.split_once(':').unwrap_or((s, ""));
        let parse_list = |text: &str| -> Result<Vec<Rational>> {
            text.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse())
                .collect()
        };
        let spec = match family {
            "harmonic" => RadiusSpec::Harmonic(arg.parse()?),
            "log_harmonic" => RadiusSpec::LogHarmonic,
            "constant" => RadiusSpec::Constant(arg.parse()?),
            "table" => match arg.strip_prefix('@') {
                Some(path) => RadiusSpec::Table(parse_list(&std::fs::read_to_string(path)?)?),
                None => RadiusSpec::Table(parse_list(arg)?),
            },
            other => return Err(Error::Parse(format!("unknown radius family {other:?}"))),
        };
        let negative = match &spec {
            RadiusSpec::Harmonic(t) | RadiusSpec::Constant(t) => t.is_negative(),
            RadiusSpec::Table(v) => v.iter().any(|r| r.is_negative()),
            RadiusSpec::LogHarmonic => false,
        };
        if negative {
            return Err(Error::Domain("radii must be non-negative".into()));
        }
        Ok(spec)
    }
}

/// Sequential evaluation of a radius sequence, yielding unreduced
/// `(numerator, denominator)` pairs.
pub struct RadiusCursor<'a> {
    spec: &'a RadiusSpec,
    i: u64,
    harmonic: BigUint,
}

impl RadiusCursor<'_> {
    /// Index of the radius returned by the last call.
    pub fn index(&self) -> u64 {
        self.i
    }

    pub fn next_parts(&mut self) -> Result<(BigUint, BigUint)> {
        self.i += 1;
        let i = self.i;
        match self.spec {
            RadiusSpec::Harmonic(t) => Ok((
                t.numer().magnitude().clone(),
                t.denom().magnitude() * i,
            )),
            RadiusSpec::Constant(c) => Ok((c.numer().magnitude().clone(), c.denom().magnitude().clone())),
            RadiusSpec::Table(v) => {
                let r = v.get(i as usize - 1).ok_or(Error::Horizon {
                    requested: i,
                    horizon: v.len() as u64,
                })?;
                Ok((r.numer().magnitude().clone(), r.denom().magnitude().clone()))
            }
            RadiusSpec::LogHarmonic => {
                let scale = BigUint::one() << LOG_HARMONIC_SCALE_BITS;
                if i == 1 {
                    self.harmonic = scale.clone();
                } else {
                    self.harmonic += &scale / i;
                }
                Ok((scale, &self.harmonic * i))
            }
        }
    }

    pub fn next_value(&mut self) -> Result<Rational> {
        let (n, d) = self.next_parts()?;
        Ok(Rational::from_big(n, d))
    }
}

/// Exact `r_i`.
pub fn radius_eval(spec: &RadiusSpec, i: u64) -> Result<Rational> {
    if i == 0 {
        return Err(Error::Domain("radius index starts at 1".into()));
    }
    match spec {
        RadiusSpec::Harmonic(t) => Ok(t.clone() / Rational::from_integer(i)),
        RadiusSpec::Constant(c) => Ok(c.clone()),
        RadiusSpec::Table(v) => v.get(i as usize - 1).cloned().ok_or(Error::Horizon {
            requested: i,
            horizon: v.len() as u64,
        }),
        RadiusSpec::LogHarmonic => {
            if i > LOG_HARMONIC_RANDOM_ACCESS_LIMIT {
                return Err(Error::Budget(format!(
                    "log_harmonic random access at {i} (use a cursor)"
                )));
            }
            let scale = 1u128 << LOG_HARMONIC_SCALE_BITS;
            let h: u128 = scale + (2..=i as u128).map(|k| scale / k).sum::<u128>();
            Ok(Rational::from_big(
                BigUint::from(scale),
                BigUint::from(h) * i,
            ))
        }
    }
}

/// `sum min(2 r_i, 1)` as an exact value or, once the exact denominator
/// would exceed `EXACT_BITS`, as a dyadic enclosure `[lo, hi]` with
/// resolution `2^-64` per term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExpectedSum {
    pub lo: Rational,
    pub hi: Rational,
}

impl ExpectedSum {
    pub fn exact(&self) -> Option<&Rational> {
        (self.lo == self.hi).then_some(&self.lo)
    }

    pub fn mid(&self) -> Rational {
        (self.lo.clone() + &self.hi) * Rational::frac(1, 2)
    }
}

const EXACT_BITS: u64 = 1024;

struct ExpectedAcc {
    exact: Option<Rational>,
    lo: BigUint,
    hi: BigUint,
}

impl ExpectedAcc {
    fn new() -> Self {
        ExpectedAcc {
            exact: Some(Rational::zero()),
            lo: BigUint::zero(),
            hi: BigUint::zero(),
        }
    }

    fn add(&mut self, num: &BigUint, den: &BigUint) {
        let unit = BigUint::one() << 64u32;
        let two_num = num << 1u32;
        let full = &two_num >= den;
        if let Some(e) = self.exact.take() {
            let term = if full {
                Rational::one()
            } else {
                Rational::from_big(two_num.clone(), den.clone())
            };
            let s = e + term;
            if s.denom_unsigned().bits() <= EXACT_BITS {
                self.exact = Some(s);
                return;
            }
            let (f, c) = floor_ceil_scaled(&s, &unit);
            self.lo = f;
            self.hi = c;
            return;
        }
        if full {
            self.lo += &unit;
            self.hi += &unit;
        } else {
            let (q, rem) = (two_num << 64u32).div_rem(den);
            if !rem.is_zero() {
                self.hi += 1u32;
            }
            self.lo += &q;
            self.hi += q;
        }
    }

    fn snapshot(&self) -> ExpectedSum {
        match &self.exact {
            Some(e) => ExpectedSum {
                lo: e.clone(),
                hi: e.clone(),
            },
            None => {
                let unit = BigUint::one() << 64u32;
                ExpectedSum {
                    lo: Rational::from_big(self.lo.clone(), unit.clone()),
                    hi: Rational::from_big(self.hi.clone(), unit),
                }
            }
        }
    }
}

/// `E_N` at each requested `N`, in order.
pub fn expected_sums(spec: &RadiusSpec, checkpoints: &[u64]) -> Result<Vec<ExpectedSum>> {
    let mut cur = spec.cursor();
    let mut acc = ExpectedAcc::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        while cur.index() < n {
            let (num, den) = cur.next_parts()?;
            acc.add(&num, &den);
        }
        out.push(acc.snapshot());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitCheckpoint {
    pub n: u64,
    pub hits: u64,
    pub expected: ExpectedSum,
    /// `S_N / E_N` (midpoint of the enclosure); absent when `E_N = 0`.
    pub ratio: Option<Rational>,
}

impl HitCheckpoint {
    pub fn ratio_f64(&self) -> Option<f64> {
        self.ratio.as_ref().map(|r| r.to_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitSeries {
    pub checkpoints: Vec<HitCheckpoint>,
}

impl HitSeries {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b';').from_writer(out);
        w.write_record(["N", "S_N", "E_N_num", "E_N_den", "ratio_float"])?;
        for c in &self.checkpoints {
            let mid = c.expected.mid();
            w.write_record([
                c.n.to_string(),
                c.hits.to_string(),
                mid.numer().to_string(),
                mid.denom().to_string(),
                c.ratio_f64().map(|r| format!("{r:.9}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One orbit's hit series plus the hit times themselves (up to a cap).
#[derive(Clone, Debug)]
pub struct HitRun {
    pub series: HitSeries,
    pub hit_times: Vec<u64>,
    pub times_truncated: bool,
}

impl HitRun {
    /// Hits at times in `[a, b]`; requires untruncated times.
    pub fn count_between(&self, a: u64, b: u64) -> u64 {
        let lo = self.hit_times.partition_point(|&t| t < a);
        let hi = self.hit_times.partition_point(|&t| t <= b);
        (hi - lo) as u64
    }
}

fn validate_checkpoints(t: &Iet, checkpoints: &[u64]) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("checkpoints must be strictly increasing".into()));
    }
    if checkpoints.first() == Some(&0) {
        return Err(Error::Domain("checkpoints start at 1".into()));
    }
    if let Some(&last) = checkpoints.last() {
        t.check_horizon(last)?;
    }
    Ok(())
}

/// Lattice holding `T`, every point in `xs` and the center `y`.
fn lattice_for(t: &Iet, xs: &[Rational], y: &Rational) -> AnyLattice {
    let mut dens: Vec<BigUint> = xs.iter().map(|x| x.denom_unsigned()).collect();
    dens.push(y.denom_unsigned());
    dens.sort();
    dens.dedup();
    AnyLattice::new(t, &dens)
}

const CHUNK: u64 = 1 << 15;

struct Threshold<L> {
    ceil: L,
    floor: L,
    full: bool,
}

struct SeedState<L> {
    x: L,
    hits: u64,
    at: Vec<u64>,
    times: Vec<u64>,
    truncated: bool,
}

/// `S_N` for many starting points at once; radii are evaluated once per
/// index and shared by all orbits.
pub fn hit_runs(
    t: &Iet,
    xs: &[Rational],
    y: &Rational,
    spec: &RadiusSpec,
    checkpoints: &[u64],
    record_cap: usize,
) -> Result<Vec<HitRun>> {
    validate_checkpoints(t, checkpoints)?;
    if let (Some(max), Some(&last)) = (spec.max_index(), checkpoints.last()) {
        if last > max {
            return Err(Error::Horizon {
                requested: last,
                horizon: max,
            });
        }
    }
    let any = lattice_for(t, xs, y);
    let (states, expected) =
        with_lattice!(&any, lat => hit_kernel(lat, xs, y, spec, checkpoints, record_cap)?);
    Ok(states
        .into_iter()
        .map(|(at, times, truncated)| HitRun {
            series: HitSeries {
                checkpoints: checkpoints
                    .iter()
                    .zip(at)
                    .zip(&expected)
                    .map(|((&n, hits), e)| {
                        let mid = e.mid();
                        HitCheckpoint {
                            n,
                            hits,
                            expected: e.clone(),
                            ratio: (!mid.is_zero())
                                .then(|| Rational::from_integer(hits) / mid),
                        }
                    })
                    .collect(),
            },
            hit_times: times,
            times_truncated: truncated,
        })
        .collect())
}

type KernelOut = (Vec<(Vec<u64>, Vec<u64>, bool)>, Vec<ExpectedSum>);

fn hit_kernel<L: Lane>(
    lat: &Lattice<L>,
    xs: &[Rational],
    y: &Rational,
    spec: &RadiusSpec,
    checkpoints: &[u64],
    record_cap: usize,
) -> Result<KernelOut> {
    let q = lat.modulus().clone();
    let q_big = lat.modulus_big().clone();
    let yc = lat.point(y)?;
    let mut states: Vec<SeedState<L>> = xs
        .iter()
        .map(|x| {
            Ok(SeedState {
                x: lat.point(x)?,
                hits: 0,
                at: Vec::with_capacity(checkpoints.len()),
                times: Vec::new(),
                truncated: false,
            })
        })
        .collect::<Result<_>>()?;
    let mut cursor = spec.cursor();
    let mut acc = ExpectedAcc::new();
    let mut expected = Vec::with_capacity(checkpoints.len());
    let mut start = 1u64;
    for &cp in checkpoints {
        while start <= cp {
            let end = (start + CHUNK - 1).min(cp);
            let mut th = Vec::with_capacity((end - start + 1) as usize);
            for _ in start..=end {
                let (num, den) = cursor.next_parts()?;
                acc.add(&num, &den);
                let full = (&num << 1u32) >= den;
                let (f, c) = if full {
                    (BigUint::zero(), BigUint::zero())
                } else {
                    let (fl, rem) = (&num * &q_big).div_rem(&den);
                    let cl = if rem.is_zero() { fl.clone() } else { &fl + 1u32 };
                    (fl, cl)
                };
                th.push(Threshold {
                    ceil: L::from_big(&c).expect("threshold below Q"),
                    floor: L::from_big(&f).expect("threshold below Q"),
                    full,
                });
            }
            states.par_iter_mut().for_each(|s| {
                for (k, t) in th.iter().enumerate() {
                    s.x = lat.step(&s.x);
                    let hit = t.full || {
                        let u = s.x.sub_mod(&yc, &q);
                        u < t.ceil || u.complement(&q) <= t.floor
                    };
                    if hit {
                        s.hits += 1;
                        if s.times.len() < record_cap {
                            s.times.push(start + k as u64);
                        } else {
                            s.truncated = true;
                        }
                    }
                }
            });
            start = end + 1;
        }
        for s in states.iter_mut() {
            s.at.push(s.hits);
        }
        expected.push(acc.snapshot());
    }
    Ok((
        states.into_iter().map(|s| (s.at, s.times, s.truncated)).collect(),
        expected,
    ))
}

/// Hit series of a single orbit.
pub fn hit_ratio_series(
    t: &Iet,
    x: &Rational,
    y: &Rational,
    spec: &RadiusSpec,
    checkpoints: &[u64],
) -> Result<HitSeries> {
    let mut runs = hit_runs(t, std::slice::from_ref(x), y, spec, checkpoints, 0)?;
    Ok(runs.remove(0).series)
}

/// Powers of two `n` (including `1`) up to `n_max` with
/// `e_T(2n) > ξ / (2n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleSequence {
    pub xi: Rational,
    pub scales: Vec<u64>,
    pub warning: Option<String>,
}

impl ScaleSequence {
    /// `n_i / n_{i-1}` for consecutive scales.
    pub fn scale_ratios(&self) -> Vec<u64> {
        self.scales.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

pub fn select_scales(t: &Iet, xi: &Rational, n_max: u64) -> Result<ScaleSequence> {
    if xi <= &Rational::zero() {
        return Err(Error::Domain("xi must be positive".into()));
    }
    let horizon = t.horizon();
    let mut scales = Vec::new();
    let mut warning = None;
    let mut n = 1u64;
    while n <= n_max {
        if 2 * n >= horizon {
            warning = Some(format!("scan stopped at n={n}: 2n reaches the horizon {horizon}"));
            break;
        }
        let m = Rational::from_integer(2 * n);
        if t.e_t(2 * n) > xi.clone() / m {
            scales.push(n);
        }
        n *= 2;
    }
    if scales.is_empty() && warning.is_none() {
        warning = Some(format!("no scale up to {n_max} satisfies e_T(2n) > xi/(2n)"));
    }
    Ok(ScaleSequence {
        xi: xi.clone(),
        scales,
        warning,
    })
}

/// Hits of `T^j x` in `B(y, r_j)` for `j` in `[n, 2n]`.
pub fn window_count(t: &Iet, x: &Rational, y: &Rational, spec: &RadiusSpec, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("window start must be positive".into()));
    }
    let cps: Vec<u64> = if n > 1 { vec![n - 1, 2 * n] } else { vec![2] };
    let s = hit_ratio_series(t, x, y, spec, &cps)?;
    let c = &s.checkpoints;
    Ok(if n > 1 { c[1].hits - c[0].hits } else { c[0].hits })
}

/// `sum_{j=n}^{2n} min(2 r_j, 1)`, which is `∫ g` by invariance of Lebesgue
/// measure.
pub fn window_integral(spec: &RadiusSpec, n: u64) -> Result<Rational> {
    let mut total = Rational::zero();
    for j in n..=2 * n {
        let r = radius_eval(spec, j)?;
        total = total + (r.clone() + r).min(Rational::one());
    }
    Ok(total)
}

/// Brute check of `window_count` by iterating the exact map.
pub fn window_count_exact(t: &Iet, x: &Rational, y: &Rational, spec: &RadiusSpec, n: u64) -> Result<u64> {
    let mut p = t.apply(x, n as i64);
    let mut count = 0;
    for j in n..=2 * n {
        if CircleInterval::ball(y, &radius_eval(spec, j)?).contains(&p) {
            count += 1;
        }
        p = t.apply(&p, 1);
    }
    Ok(count)
}

fn ball_preimages(t: &Iet, y: &Rational, spec: &RadiusSpec, n: u64) -> Result<Vec<IntervalSet>> {
    (n..=2 * n)
        .map(|a| {
            let ball = CircleInterval::ball(y, &radius_eval(spec, a)?).to_set();
            Ok(match t.rotation_number() {
                Some(alpha) => {
                    let back = -(Rational::from_integer(a) * alpha);
                    ball.rotate(&back)
                }
                None => t.preimage_iter(&ball, a),
            })
        })
        .collect()
}

/// `∫ g_i g_j` as an exact sum of preimage overlaps.
pub fn window_correlation(
    t: &Iet,
    y: &Rational,
    spec: &RadiusSpec,
    n_i: u64,
    n_j: u64,
    budget: u64,
) -> Result<Rational> {
    let pairs = (n_i + 1).saturating_mul(n_j + 1);
    if pairs > budget {
        return Err(Error::Budget(format!(
            "{pairs} preimage pairs for windows of sizes {} and {} exceed {budget}",
            n_i + 1,
            n_j + 1
        )));
    }
    t.check_horizon(2 * n_i.max(n_j))?;
    let a_sets = ball_preimages(t, y, spec, n_i)?;
    let b_sets = if n_i == n_j {
        a_sets.clone()
    } else {
        ball_preimages(t, y, spec, n_j)?
    };
    Ok(a_sets
        .par_iter()
        .map(|a| b_sets.iter().fold(Rational::zero(), |acc, b| acc + a.overlap(b)))
        .reduce(Rational::zero, |x, y| x + y))
}

/// Window hit bound `g_i <= 1 + (2 n / ξ) 2 r_n`.
pub fn hit_bound_holds(spec: &RadiusSpec, xi: &Rational, n: u64, count: u64) -> Result<bool> {
    let r = radius_eval(spec, n)?;
    let bound = Rational::one()
        + Rational::from_integer(2 * n) / xi * Rational::from_integer(2) * r;
    Ok(Rational::from_integer(count) <= bound)
}

/// Between-window bound `count <= 6 ξ^{-1} sqrt(2 n r_{2n}) sqrt(n_next / n)`,
/// compared after squaring.
pub fn max_bound_holds(
    spec: &RadiusSpec,
    xi: &Rational,
    n: u64,
    n_next: u64,
    count: u64,
) -> Result<bool> {
    let t = Rational::from_integer(2 * n) * radius_eval(spec, 2 * n)?;
    let s = Rational::frac(n_next as i64, n as i64);
    let c = Rational::from_integer(count);
    Ok(c.clone() * c * xi * xi <= Rational::from_integer(36) * t * s)
}

/// `floor(C^j)`.
fn floor_power(c: &Rational, j: u64) -> BigUint {
    let mut p = Rational::one();
    for _ in 0..j {
        p = p * c;
    }
    p.floor().magnitude().clone()
}

/// Scale classes `G` and `B` for `j = 0..=j_max`, evaluated literally with
/// `r` at `floor(C^j)`.
pub fn partition_scales_gb(
    spec: &RadiusSpec,
    c: &Rational,
    rho: &Rational,
    m: &Rational,
    j_max: u64,
) -> Result<(Vec<u64>, Vec<u64>)> {
    if c <= &Rational::one() || m <= &Rational::one() || !rho.in_open_unit() {
        return Err(Error::Domain("need C > 1, M > 1 and 0 < rho < 1".into()));
    }
    let mut g = Vec::new();
    let mut b = Vec::new();
    for j in 0..=j_max {
        let lo = floor_power(c, j);
        let hi = floor_power(c, j + 1);
        let lo_i = lo.to_u64().ok_or_else(|| Error::Budget("C^j exceeds u64".into()))?;
        let hi_i = hi.to_u64().ok_or_else(|| Error::Budget("C^j exceeds u64".into()))?;
        if spec.max_index().is_some_and(|k| hi_i > k) {
            break;
        }
        let r_hi = radius_eval(spec, hi_i.max(1))?;
        let r_lo = radius_eval(spec, lo_i.max(1))?;
        let mut cj1 = Rational::one();
        for _ in 0..=j {
            cj1 = cj1 * c;
        }
        let big = r_hi >= m.clone() / cj1;
        if !big {
            continue;
        }
        if r_lo <= rho.clone() * &r_hi {
            g.push(j);
        } else {
            b.push(j);
        }
    }
    Ok((g, b))
}

/// `r_i` as a double; `log_harmonic` beyond a short exact prefix uses the
/// asymptotic expansion of its dyadic harmonic number.
pub fn radius_f64(spec: &RadiusSpec, i: u64) -> Result<f64> {
    match spec {
        RadiusSpec::LogHarmonic if i > 4096 => {
            let x = i as f64;
            let h = x.ln() + 0.577_215_664_901_532_9 + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
            Ok(1.0 / (x * h))
        }
        _ => Ok(radius_eval(spec, i)?.to_f64()),
    }
}

/// Checkpoints `2^i - 1` and `2^{i+1}` needed for the dyadic windows
/// `[2^i, 2^{i+1}]` inside `[1, n_max]`.
pub fn dyadic_checkpoints(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut lo = 1u64;
    while lo.checked_mul(2).is_some_and(|hi| hi <= n_max) {
        if lo > 1 {
            out.push(lo - 1);
        }
        out.push(2 * lo);
        lo *= 2;
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn series_lookup(series: &HitSeries, n: u64) -> Option<&HitCheckpoint> {
    series.checkpoints.iter().find(|c| c.n == n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlBadPoint {
    pub horizon: u64,
    /// Largest ratio over the dyadic windows ending by `horizon`.
    pub running_max: f64,
}

/// Ratio of window hits to `Σ min(2 r_j, 1) + ln(r_{2^i} / r_{2^{i+1}}) + 1`
/// over `[2^i, 2^{i+1}]`, as a running maximum indexed by the window end.
/// `series` must contain every point of `dyadic_checkpoints`.
pub fn control_bad_profile(series: &HitSeries, spec: &RadiusSpec) -> Result<Vec<ControlBadPoint>> {
    let n_max = series.checkpoints.last().map_or(0, |c| c.n);
    let mut out = Vec::new();
    let mut best = 0.0f64;
    let mut lo = 1u64;
    let missing = |n: u64| Error::Precondition(format!("series lacks checkpoint {n}"));
    while 2 * lo <= n_max {
        let hi = 2 * lo;
        let end = series_lookup(series, hi).ok_or_else(|| missing(hi))?;
        let (hits_before, e_before) = if lo == 1 {
            (0, Rational::zero())
        } else {
            let c = series_lookup(series, lo - 1).ok_or_else(|| missing(lo - 1))?;
            (c.hits, c.expected.mid())
        };
        let sum2r = (end.expected.mid() - e_before).to_f64();
        let (rl, rh) = (radius_f64(spec, lo)?, radius_f64(spec, hi)?);
        let log_term = if rl > 0.0 && rh > 0.0 { (rl / rh).ln() } else { 0.0 };
        best = best.max((end.hits - hits_before) as f64 / (sum2r + log_term + 1.0));
        out.push(ControlBadPoint {
            horizon: hi,
            running_max: best,
        });
        lo = hi;
    }
    Ok(out)
}

/// `|count / (len 2 s / 2^{j+1}) - 1|` for hits of `B(1/2, s / 2^{j+1})`
/// over `[2^j, 2^{j+1}]`, `len = 2^j`, one row per starting point and one
/// column per `j` in `j_range`.
pub fn big_r_deviations(
    t: &Iet,
    xs: &[Rational],
    s: u64,
    j_range: std::ops::RangeInclusive<u32>,
) -> Result<Vec<Vec<f64>>> {
    let j_hi = *j_range.end();
    t.check_horizon(1u64 << (j_hi + 1))?;
    let half = Rational::frac(1, 2);
    let any = lattice_for(t, xs, &half);
    with_lattice!(&any, lat => {
        let q = lat.modulus().clone();
        let yc = lat.point(&half)?;
        let windows: Vec<(u32, L2<_>)> = j_range
            .clone()
            .map(|j| {
                let r = Rational::from_integer(s) / Rational::from_integer(1i64 << (j + 1));
                let full = r.clone() + &r >= Rational::one();
                let (f, c) = lat.floor_ceil(&r.min(Rational::one()));
                (j, L2 { floor: f, ceil: c, full })
            })
            .collect();
        let rows = xs
            .par_iter()
            .map(|x| {
                let mut p = lat.point(x).expect("on lattice");
                let mut i = 0u64;
                let mut row = Vec::with_capacity(windows.len());
                for (j, th) in &windows {
                    let a = 1u64 << j;
                    let b = 1u64 << (j + 1);
                    while i < a {
                        p = lat.step(&p);
                        i += 1;
                    }
                    let mut walker = p.clone();
                    let mut count = 0u64;
                    for _ in a..=b {
                        let u = walker.sub_mod(&yc, &q);
                        if th.full || u < th.ceil || u.complement(&q) <= th.floor {
                            count += 1;
                        }
                        walker = lat.step(&walker);
                    }
                    let expected = (b - a) as f64 * 2.0 * s as f64 / b as f64;
                    row.push((count as f64 / expected - 1.0).abs());
                }
                row
            })
            .collect();
        Ok(rows)
    })
}

struct L2<L> {
    floor: L,
    ceil: L,
    full: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::rotation_iet;
    use crate::numbers::CFExpansion;

    fn r(p: i64, q: i64) -> Rational {
        Rational::frac(p, q)
    }

    #[test]
    fn radius_examples() {
        assert_eq!(radius_eval(&RadiusSpec::Harmonic(r(1, 2)), 4).unwrap(), r(1, 8));
        assert_eq!(radius_eval(&RadiusSpec::Constant(r(1, 2)), 77).unwrap(), r(1, 2));
        let table = RadiusSpec::Table(vec![r(1, 2), r(1, 3), r(1, 5)]);
        assert_eq!(radius_eval(&table, 2).unwrap(), r(1, 3));
        assert!(radius_eval(&table, 4).is_err());
        assert_eq!("harmonic:1/2".parse::<RadiusSpec>().unwrap(), RadiusSpec::Harmonic(r(1, 2)));
        assert_eq!("table:1/2, 1/3".parse::<RadiusSpec>().unwrap(), RadiusSpec::Table(vec![r(1, 2), r(1, 3)]));
        assert!("bogus:1".parse::<RadiusSpec>().is_err());
        assert!("constant:-1/2".parse::<RadiusSpec>().is_err());
    }

    #[test]
    fn log_harmonic_properties() {
        let spec = RadiusSpec::LogHarmonic;
        let mut cur = spec.cursor();
        let mut prev_ir = Rational::from_integer(2);
        let mut prev_r = Rational::from_integer(2);
        for i in 1..=3000u64 {
            let ri = cur.next_value().unwrap();
            if i % 500 == 1 {
                assert_eq!(ri, radius_eval(&spec, i).unwrap());
            }
            let ir = ri.clone() * Rational::from_integer(i);
            assert!(ir <= prev_ir && ri <= prev_r);
            let lower = 1.0 / (i as f64 * (1.0 + (i as f64).ln()));
            assert!(ri.to_f64() >= lower * (1.0 - 1e-12), "i={i}");
            prev_ir = ir;
            prev_r = ri;
        }
        assert!(spec.khinchin() && spec.monotone());
        assert!(!RadiusSpec::Constant(r(1, 3)).khinchin());
    }

    #[test]
    fn expected_sum_exact_then_enclosed() {
        let spec = RadiusSpec::Harmonic(r(1, 2));
        let e = expected_sums(&spec, &[4, 10, 5000]).unwrap();
        assert_eq!(e[0].exact().unwrap(), &(r(1, 1) + r(1, 2) + r(1, 3) + r(1, 4)));
        assert!(e[1].exact().is_some());
        let approx: f64 = (1..=5000).map(|i| 1.0 / i as f64).sum();
        assert!(e[2].exact().is_none());
        assert!(e[2].lo.to_f64() <= approx + 1e-9 && e[2].hi.to_f64() >= approx - 1e-9);
        assert!((e[2].hi.clone() - &e[2].lo).to_f64() < 1e-12);
        let c = expected_sums(&RadiusSpec::Constant(r(3, 4)), &[7]).unwrap();
        assert_eq!(c[0].exact().unwrap(), &r(7, 1));
    }

    #[test]
    fn hit_series_trivial_specs() {
        let t = rotation_iet(&CFExpansion::golden(30).value()).unwrap();
        let x = r(1, 3);
        let s = hit_ratio_series(&t, &x, &r(1, 2), &RadiusSpec::Constant(r(1, 2)), &[1, 10, 100]).unwrap();
        for c in &s.checkpoints {
            assert_eq!(c.hits, c.n);
            assert_eq!(c.ratio.clone().unwrap(), Rational::one());
        }
        let zeros = RadiusSpec::Table(vec![Rational::zero(); 100]);
        let s = hit_ratio_series(&t, &x, &r(1, 2), &zeros, &[50, 100]).unwrap();
        assert!(s.checkpoints.iter().all(|c| c.hits == 0 && c.ratio.is_none()));
        assert!(matches!(
            hit_ratio_series(&t, &x, &r(1, 2), &zeros, &[50, 101]),
            Err(Error::Horizon { .. })
        ));
        let small = rotation_iet(&r(13, 21)).unwrap();
        assert!(matches!(
            hit_ratio_series(&small, &x, &r(1, 2), &zeros, &[10, 11]),
            Err(Error::Horizon { .. })
        ));
    }

    #[test]
    fn lattice_hits_match_exact_scan() {
        let t = rotation_iet(&CFExpansion::new(vec![2, 1, 3, 1, 1, 2, 4, 1, 2, 2, 3]).unwrap().value()).unwrap();
        let spec = RadiusSpec::Harmonic(r(3, 2));
        let y = r(1, 2);
        for k in [1i64, 77, 1000, 12345] {
            let x = r(k, 1 << 20);
            let mut p = x.clone();
            let mut hits = 0;
            let n = 600u64;
            let mut brute = Vec::new();
            for i in 1..=n {
                p = t.apply(&p, 1);
                if CircleInterval::ball(&y, &radius_eval(&spec, i).unwrap()).contains(&p) {
                    hits += 1;
                }
                if i % 100 == 0 {
                    brute.push(hits);
                }
            }
            let cps: Vec<u64> = (1..=6).map(|k| k * 100).collect();
            let s = hit_ratio_series(&t, &x, &y, &spec, &cps).unwrap();
            let got: Vec<u64> = s.checkpoints.iter().map(|c| c.hits).collect();
            assert_eq!(got, brute);
            assert!(s.checkpoints.windows(2).all(|w| w[0].hits <= w[1].hits));
            for n in [1u64, 7, 32, 100] {
                assert_eq!(
                    window_count(&t, &x, &y, &spec, n).unwrap(),
                    window_count_exact(&t, &x, &y, &spec, n).unwrap()
                );
            }
        }
    }

    #[test]
    fn scale_examples() {
        let t = rotation_iet(&CFExpansion::golden(40).value()).unwrap();
        let s = select_scales(&t, &r(1, 10), 1 << 20).unwrap();
        assert_eq!(s.scales, (0..=20).map(|k| 1u64 << k).collect::<Vec<_>>());
        assert!(s.scale_ratios().iter().all(|&a| a == 2));
        let s = select_scales(&t, &r(2, 1), 1 << 20).unwrap();
        assert!(s.scales.is_empty() && s.warning.is_some());

        let mut q = vec![1u64; 30];
        q[14] = 5000;
        let spike = rotation_iet(&CFExpansion::new(q).unwrap().value()).unwrap();
        let s = select_scales(&spike, &r(1, 10), 1 << 24).unwrap();
        let all: Vec<u64> = (0..=24).map(|k| 1u64 << k).collect();
        assert!(s.scales.len() < all.len());
        assert!(s.scales.contains(&1));
    }

    #[test]
    fn window_integral_examples() {
        let zeros = RadiusSpec::Table(vec![Rational::zero(); 20]);
        assert_eq!(window_integral(&zeros, 4).unwrap(), Rational::zero());
        assert_eq!(window_integral(&RadiusSpec::Constant(r(1, 2)), 4).unwrap(), r(5, 1));
        let h = window_integral(&RadiusSpec::Harmonic(r(1, 2)), 4).unwrap();
        assert_eq!(h, r(1, 4) + r(1, 5) + r(1, 6) + r(1, 7) + r(1, 8));
    }

    #[test]
    fn correlation_consistency() {
        let t = rotation_iet(&CFExpansion::golden(30).value()).unwrap();
        let y = r(1, 2);
        let h = RadiusSpec::Harmonic(r(1, 2));
        let single = RadiusSpec::Table(vec![r(1, 10); 4]);
        let c = window_correlation(&t, &y, &single, 1, 1, 100).unwrap();
        let i = window_integral(&single, 1).unwrap();
        assert!(c >= i.clone() * &i);
        let full = RadiusSpec::Constant(r(1, 2));
        let c = window_correlation(&t, &y, &full, 2, 8, 1000).unwrap();
        assert_eq!(c, window_integral(&full, 2).unwrap() * window_integral(&full, 8).unwrap());
        for n in [1u64, 2, 4, 8] {
            let cc = window_correlation(&t, &y, &h, n, n, 10_000).unwrap();
            let ii = window_integral(&h, n).unwrap();
            assert!(cc >= ii.clone() * &ii);
        }
        assert!(matches!(window_correlation(&t, &y, &h, 100, 100, 1000), Err(Error::Budget(_))));
    }

    #[test]
    fn gb_examples() {
        let c = r(2, 1);
        let rho = r(1, 2);
        let (g, b) = partition_scales_gb(&RadiusSpec::Harmonic(r(1, 2)), &c, &rho, &r(3, 2), 20).unwrap();
        assert!(g.is_empty() && b.is_empty());
        let (g, b) = partition_scales_gb(&RadiusSpec::Constant(r(1, 8)), &c, &rho, &r(3, 2), 30).unwrap();
        assert!(g.is_empty());
        // 1/8 >= (3/2)/2^{j+1} from j = 3 on
        assert_eq!(b, (3..=30).collect::<Vec<_>>());
        // radii halving every decade, C = 10
        let stair: Vec<Rational> = (1..=100_000i64)
            .map(|i| r(1, 1i64 << ((i as f64).log10().floor() as u32)))
            .collect();
        let spec = RadiusSpec::Table(stair);
        let (g, b) = partition_scales_gb(&spec, &r(10, 1), &rho, &r(30, 1), 10).unwrap();
        // r_{10^{j+1}} = 2^{-(j+1)} >= 30 / 10^{j+1}  iff  5^{j+1} >= 30
        assert!(g.is_empty());
        assert_eq!(b, vec![2, 3, 4]);
    }

    #[test]
    fn control_bad_from_series() {
        let t = rotation_iet(&CFExpansion::golden(40).value()).unwrap();
        let spec = RadiusSpec::Harmonic(r(1, 2));
        let cps = dyadic_checkpoints(1 << 12);
        assert_eq!(&cps[..6], &[1, 2, 3, 4, 7, 8]);
        let s = hit_ratio_series(&t, &r(1, 3), &r(1, 2), &spec, &cps).unwrap();
        let prof = control_bad_profile(&s, &spec).unwrap();
        assert_eq!(prof.len(), 12);
        assert!(prof.windows(2).all(|w| w[0].running_max <= w[1].running_max));
        let first = hit_ratio_series(&t, &r(1, 3), &r(1, 2), &spec, &[1 << 12]).unwrap();
        assert!(control_bad_profile(&first, &spec).is_err());
        let lh = RadiusSpec::LogHarmonic;
        for i in [4097u64, 10_000, 100_000] {
            let exact = radius_eval(&lh, i).unwrap().to_f64();
            assert!((radius_f64(&lh, i).unwrap() / exact - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bounds_on_golden_windows() {
        let t = rotation_iet(&CFExpansion::golden(40).value()).unwrap();
        let xi = r(1, 10);
        let spec = RadiusSpec::Harmonic(r(1, 2));
        let scales = select_scales(&t, &xi, 1 << 14).unwrap();
        let xs: Vec<Rational> = (1..=8).map(|k| r(k * 7919, 1 << 20)).collect();
        let runs = hit_runs(&t, &xs, &r(1, 2), &spec, &[1 << 15], usize::MAX).unwrap();
        for run in &runs {
            for w in scales.scales.windows(2) {
                let g = run.count_between(w[0], 2 * w[0]);
                assert!(hit_bound_holds(&spec, &xi, w[0], g).unwrap());
                let between = run.count_between(2 * w[0], w[1]);
                assert!(max_bound_holds(&spec, &xi, w[0], w[1], between).unwrap());
            }
        }
    }
}
