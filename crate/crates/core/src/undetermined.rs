//! Targets `V_j = R^{-j} U_j` built from the atom of `1 - α` in the
//! partition cut by the orbit of `0`, for a rotation `R` by `α`.

use std::io::Write;
use std::ops::Range;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iet::{rotation_iet, CircleInterval, IntervalSet};
use crate::lattice::{AnyLattice, Lane, Lattice};
use crate::numbers::{cf_expand, CFExpansion, Rational};
use crate::with_lattice;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AtomMode {
    /// Closed-form interval from `(r_j, s_j, t_j)`.
    Formula,
    /// Atom of `1 - α` in `[0, 1)` cut at `{k α : 0 <= k <= j + 1}`.
    Brute,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomDescription {
    pub j: u64,
    pub r: u64,
    /// May be `q_{-1} = 0` while `j + 2 < q_1`.
    pub s: u64,
    pub t: u64,
    pub u: CircleInterval,
    pub measure: Rational,
}

/// Arc `[left, left + len)` as numerators over `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Arc {
    left: BigUint,
    len: BigUint,
}

/// Rotation number with its expansion and numerators, shared by every
/// atom computation.
#[derive(Clone, Debug)]
pub struct AtomContext {
    cf: CFExpansion,
    alpha: Rational,
    p: BigUint,
    q: BigUint,
    /// `q_0, ..., q_K`.
    qs: Vec<BigUint>,
}

impl AtomContext {
    pub fn new(alpha: &Rational) -> Result<Self> {
        let cf = cf_expand(alpha, usize::MAX)?;
        Ok(Self::from_cf(&cf))
    }

    pub fn from_cf(cf: &CFExpansion) -> Self {
        let cf = cf.canonical();
        let alpha = cf.value();
        let qs = cf.convergents().iter().map(|(_, q)| q.clone()).collect();
        AtomContext {
            p: alpha.numer().magnitude().clone(),
            q: alpha.denom_unsigned(),
            alpha,
            cf,
            qs,
        }
    }

    pub fn cf(&self) -> &CFExpansion {
        &self.cf
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// Largest `j` whose atom is defined: `q_K - 3`.
    pub fn max_index(&self) -> u64 {
        self.q.to_u64().unwrap_or(u64::MAX).saturating_sub(3)
    }

    fn q_k(&self, k: usize) -> Option<u64> {
        self.qs.get(k).and_then(|q| q.to_u64())
    }

    fn check_index(&self, j: u64) -> Result<()> {
        if j == 0 {
            return Err(Error::Domain("atom index starts at 1".into()));
        }
        if BigUint::from(j) >= self.q {
            return Err(Error::Horizon {
                requested: j,
                horizon: self.max_index(),
            });
        }
        if j > self.max_index() {
            return Err(Error::BoundaryDegenerate(j));
        }
        Ok(())
    }

    /// `(r, s, t)` at `m = j + 2`: `r = max{q_k <= m}`,
    /// `s = max{q_k : q_{k+1} <= m}` over `k >= -1`,
    /// `t = max{T >= 0 : s + T r <= m}`.
    pub fn rst(&self, j: u64) -> Result<(u64, u64, u64)> {
        if j == 0 {
            return Err(Error::Domain("atom index starts at 1".into()));
        }
        if BigUint::from(j) >= self.q {
            return Err(Error::Horizon {
                requested: j,
                horizon: self.max_index(),
            });
        }
        let m = j + 2;
        let top = self
            .qs
            .iter()
            .rposition(|q| q <= &BigUint::from(m))
            .expect("q_0 = 1 <= m");
        let r = self.q_k(top).expect("r <= m");
        let s = if top == 0 { 0 } else { self.q_k(top - 1).expect("s <= m") };
        Ok((r, s, (m - s) / r))
    }

    fn arc_from_rst(&self, r: u64, s: u64, t: u64) -> Arc {
        let q = &self.q;
        let ra = (&self.p * r) % q;
        let sa = (&self.p * s) % q;
        let moved = (&sa + &ra * t) % q;
        let (left, right) = if (&ra << 1u32) < *q { (moved, ra) } else { (ra, moved) };
        let len = ((right + q) - &left) % q;
        // back through R^{-1}
        let left = ((left + q) - &self.p) % q;
        Arc { left, len }
    }

    fn formula_arc(&self, j: u64) -> Result<Arc> {
        self.check_index(j)?;
        let (r, s, t) = self.rst(j)?;
        Ok(self.arc_from_rst(r, s, t))
    }

    fn brute_arc(&self, j: u64) -> Result<Arc> {
        self.check_index(j)?;
        let target = &self.q - &self.p;
        let (lo, hi) = match (self.q.to_u64(), self.p.to_u64()) {
            (Some(q), Some(p)) => {
                let (q, p, target) = (q as u128, p as u128, (q - p) as u128);
                let (mut lo, mut hi, mut c) = (0u128, q, 0u128);
                for _ in 0..=j + 1 {
                    if c == target {
                        return Err(Error::BoundaryDegenerate(j));
                    }
                    if c < target {
                        lo = lo.max(c);
                    } else {
                        hi = hi.min(c);
                    }
                    c = (c + p) % q;
                }
                (BigUint::from(lo), BigUint::from(hi))
            }
            _ => {
                let (mut lo, mut hi, mut c) = (BigUint::zero(), self.q.clone(), BigUint::zero());
                for _ in 0..=j + 1 {
                    if c == target {
                        return Err(Error::BoundaryDegenerate(j));
                    }
                    if c < target {
                        lo = lo.max(c.clone());
                    } else {
                        hi = hi.min(c.clone());
                    }
                    c = (c + &self.p) % &self.q;
                }
                (lo, hi)
            }
        };
        Ok(Arc {
            len: hi - &lo,
            left: lo,
        })
    }

    fn arc(&self, j: u64, mode: AtomMode) -> Result<Arc> {
        match mode {
            AtomMode::Formula => self.formula_arc(j),
            AtomMode::Brute => self.brute_arc(j),
        }
    }

    fn to_interval(&self, a: &Arc) -> CircleInterval {
        CircleInterval::new(
            Rational::from_big(a.left.clone(), self.q.clone()),
            Rational::from_big(a.len.clone(), self.q.clone()),
        )
        .expect("arc inside the circle")
    }

    pub fn atom(&self, j: u64, mode: AtomMode) -> Result<AtomDescription> {
        let a = self.arc(j, mode)?;
        let (r, s, t) = self.rst(j)?;
        Ok(AtomDescription {
            j,
            r,
            s,
            t,
            measure: Rational::from_big(a.len.clone(), self.q.clone()),
            u: self.to_interval(&a),
        })
    }

    fn v_arc(&self, j: u64, mode: AtomMode) -> Result<Arc> {
        let mut a = self.arc(j, mode)?;
        let shift = (&self.p * j) % &self.q;
        a.left = ((a.left + &self.q) - shift) % &self.q;
        Ok(a)
    }

    /// `V_j = R^{-j} U_j`.
    pub fn v(&self, j: u64, mode: AtomMode) -> Result<CircleInterval> {
        Ok(self.to_interval(&self.v_arc(j, mode)?))
    }

    /// `floor(x q)` for `x` in `[0, 1)`.
    fn scaled_floor(&self, x: &Rational) -> Result<BigUint> {
        if !x.in_unit() {
            return Err(Error::Domain(format!("{x} is not in [0,1)")));
        }
        Ok((x.numer().magnitude() * &self.q) / x.denom().magnitude())
    }
}

/// Membership in an arc over `q` of a point with `floor(x q) = w`:
/// endpoints are integers so the fractional part of `x q` never matters.
fn arc_contains(a: &Arc, w: &BigUint, q: &BigUint) -> bool {
    ((w + q) - &a.left) % q < a.len
}

/// `rst` computed from a fresh context.
pub fn rst(j: u64, cf: &CFExpansion) -> Result<(u64, u64, u64)> {
    AtomContext::from_cf(cf).rst(j)
}

pub fn atom(j: u64, alpha: &Rational, mode: AtomMode) -> Result<AtomDescription> {
    AtomContext::new(alpha)?.atom(j, mode)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UndeterminedRow {
    pub n: u64,
    pub hits: u64,
    pub lambda: Rational,
    /// `ln S_n / ln Λ_n`, absent while either is at most 1.
    pub log_ratio: Option<f64>,
}

/// `Σ_{i<=m} a_i >= Σ_{j<=q_m} χ_{V_j}(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpperBoundCheck {
    pub m: usize,
    pub q_m: u64,
    pub quotient_sum: u64,
    pub count: u64,
    pub holds: bool,
}

/// `Σ_{j ∈ [q_i, q_{i+1})} λ(V_j) <= 2 a_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LambdaWindowCheck {
    pub i: usize,
    pub lambda: Rational,
    pub bound: u64,
    pub holds: bool,
}

/// Reported alongside the bound checks at `n = q_m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuterBounds {
    pub m: usize,
    pub count: u64,
    pub half_m_holds: bool,
    /// `Σ a_i / (q_m (ln q_m)^3)` (the outer bound asks for it to stay bounded).
    pub log_cube_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UndeterminedSeries {
    pub rows: Vec<UndeterminedRow>,
    pub upper_bounds: Vec<UpperBoundCheck>,
    pub lambda_windows: Vec<LambdaWindowCheck>,
    pub outer: Vec<OuterBounds>,
}

impl UndeterminedSeries {
    /// All exact bound checks hold.
    pub fn asserted_hold(&self) -> bool {
        self.upper_bounds.iter().all(|c| c.holds) && self.lambda_windows.iter().all(|c| c.holds)
    }

    pub fn last_log_ratio(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.log_ratio)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b';').from_writer(out);
        w.write_record(["n", "S_n", "Lambda_num", "Lambda_den", "log_ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.hits.to_string(),
                r.lambda.numer().to_string(),
                r.lambda.denom().to_string(),
                r.log_ratio.map(|v| format!("{v:.9}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `S_n = #{j <= n : R^j x ∈ U_j}` and `Λ_n = Σ_{j<=n} λ(V_j)` at each
/// checkpoint, with the atom recomputed only when `(r, s, t)` changes.
pub fn undetermined_series(ctx: &AtomContext, x: &Rational, checkpoints: &[u64]) -> Result<UndeterminedSeries> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) || checkpoints.first() == Some(&0) {
        return Err(Error::Domain("checkpoints must be positive and strictly increasing".into()));
    }
    let Some(&n_max) = checkpoints.last() else {
        return Ok(UndeterminedSeries {
            rows: vec![],
            upper_bounds: vec![],
            lambda_windows: vec![],
            outer: vec![],
        });
    };
    if n_max > ctx.max_index() {
        return Err(Error::Horizon {
            requested: n_max,
            horizon: ctx.max_index(),
        });
    }
    let w = ctx.scaled_floor(x)?;
    let t = rotation_iet(&ctx.alpha)?;
    let any = AnyLattice::new(&t, &[]);
    with_lattice!(&any, lat => series_kernel(lat, ctx, &w, checkpoints, n_max))
}

fn series_kernel<L: Lane>(
    lat: &Lattice<L>,
    ctx: &AtomContext,
    w: &BigUint,
    checkpoints: &[u64],
    n_max: u64,
) -> Result<UndeterminedSeries> {
    let q = lat.modulus().clone();
    let lane = |v: &BigUint| L::from_big(v).expect("residue below q");
    let p = lane(&ctx.p);
    // position of R^j x as floor(q R^j x)
    let mut y = lane(w);
    let mut key = (0, 0, u64::MAX);
    let (mut left, mut len) = (L::origin(), L::origin());
    let mut len_big = BigUint::zero();
    let (mut hits, mut lambda_num) = (0u64, BigUint::zero());

    let qs: Vec<u64> = ctx.qs.iter().map_while(|q| q.to_u64()).collect();
    let quotients = ctx.cf.quotients();
    let mut next_cp = 0usize;
    let mut m_next = 1usize;
    let mut window_i = 0usize;
    let mut window_start = BigUint::zero();

    let mut out = UndeterminedSeries {
        rows: Vec::with_capacity(checkpoints.len()),
        upper_bounds: vec![],
        lambda_windows: vec![],
        outer: vec![],
    };
    let q_rat = ctx.q.clone();
    for j in 1..=n_max {
        y = y.add_mod(&p, &q);
        let k = ctx.rst(j)?;
        if k != key {
            key = k;
            let a = ctx.arc_from_rst(k.0, k.1, k.2);
            left = lane(&a.left);
            len = lane(&a.len);
            len_big = a.len;
        }
        if y.sub_mod(&left, &q) < len {
            hits += 1;
        }
        lambda_num += &len_big;

        while m_next < qs.len() && qs[m_next] <= j {
            let quotient_sum: u64 = quotients[..m_next].iter().sum();
            out.upper_bounds.push(UpperBoundCheck {
                m: m_next,
                q_m: j,
                quotient_sum,
                count: hits,
                holds: quotient_sum >= hits,
            });
            let ln_q = (j as f64).ln();
            out.outer.push(OuterBounds {
                m: m_next,
                count: hits,
                half_m_holds: 2 * hits >= m_next as u64,
                log_cube_ratio: quotient_sum as f64 / (j as f64 * ln_q.powi(3)).max(f64::MIN_POSITIVE),
            });
            m_next += 1;
        }
        // close I_i = [q_i, q_{i+1}) at j = q_{i+1} - 1
        while window_i + 1 < qs.len() && qs[window_i + 1] <= j + 1 {
            let lam = Rational::from_big(&lambda_num - &window_start, q_rat.clone());
            let bound = 2 * quotients[window_i];
            out.lambda_windows.push(LambdaWindowCheck {
                i: window_i,
                holds: lam <= Rational::from_integer(bound),
                lambda: lam,
                bound,
            });
            window_start = lambda_num.clone();
            window_i += 1;
        }
        if j == checkpoints[next_cp] {
            let lambda = Rational::from_big(lambda_num.clone(), q_rat.clone());
            let lf = lambda.to_f64();
            out.rows.push(UndeterminedRow {
                n: j,
                hits,
                log_ratio: (hits > 1 && lf > 1.0).then(|| (hits as f64).ln() / lf.ln()),
                lambda,
            });
            next_cp += 1;
        }
    }
    Ok(out)
}

/// Ranges `[q_i, q_i + q_{i-1})` and `[q_{i-1} + (b-1) q_i, q_{i-1} + b q_i)`,
/// `2 <= b <= a_{i+1}`, tiling `[1, j_max]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JPartition {
    pub intervals: Vec<Range<u64>>,
    /// `i` with the range inside `[q_i, q_{i+1})`.
    pub level: Vec<usize>,
    /// `(i, index)` where `intervals[index] = J_2^i`.
    pub markers: Vec<(usize, usize)>,
}

impl JPartition {
    pub fn j2(&self, i: usize) -> Option<&Range<u64>> {
        self.markers
            .iter()
            .find(|(k, _)| *k == i)
            .map(|&(_, idx)| &self.intervals[idx])
    }
}

/// `J_2^i = [q_i + q_{i-1}, 2 q_i + q_{i-1})` for `i >= 1`.
pub fn j2_range(cf: &CFExpansion, i: usize) -> Option<Range<u64>> {
    if i == 0 || i > cf.depth() {
        return None;
    }
    let qi = cf.q_u64(i)?;
    let qm = cf.q_u64(i - 1)?;
    Some(qi + qm..2 * qi + qm)
}

pub fn j_partition(cf: &CFExpansion, j_max: u64) -> Result<JPartition> {
    let cf = cf.canonical();
    let q_k = cf.q(cf.depth());
    if &BigUint::from(j_max) >= q_k {
        return Err(Error::Horizon {
            requested: j_max,
            horizon: q_k.to_u64().unwrap_or(u64::MAX).saturating_sub(1),
        });
    }
    let mut part = JPartition {
        intervals: vec![],
        level: vec![],
        markers: vec![],
    };
    let end = j_max + 1;
    'outer: for i in 0..cf.depth() {
        let qi = cf.q_u64(i).expect("q_i <= j_max");
        let qm = if i == 0 { 0 } else { cf.q_u64(i - 1).expect("q_{i-1} <= j_max") };
        if qi >= end {
            break;
        }
        let a = cf.a(i + 1);
        let first = std::iter::once(qi..qi + qm);
        let rest = (2..=a).map(move |b| qm + (b - 1) * qi..qm + b * qi);
        for r in first.chain(rest) {
            if r.start >= end {
                break 'outer;
            }
            if r.is_empty() {
                continue;
            }
            if i >= 1 && r.start == qi + qm && r.end == 2 * qi + qm {
                part.markers.push((i, part.intervals.len()));
            }
            part.intervals.push(r.start..r.end.min(end));
            part.level.push(i);
        }
    }
    // a_{i+1} = 1 places J_2^i at the start of the next level
    for i in 1..=cf.depth() {
        if part.markers.iter().any(|(k, _)| *k == i) {
            continue;
        }
        if let Some(r) = j2_range(&cf, i) {
            if let Some(idx) = part.intervals.iter().position(|x| *x == r) {
                part.markers.push((i, idx));
            }
        }
    }
    part.markers.sort();
    Ok(part)
}

fn j2_checked(ctx: &AtomContext, i: usize) -> Result<Range<u64>> {
    let r = j2_range(&ctx.cf, i)
        .ok_or_else(|| Error::Domain(format!("J_2^{i} is not defined for this expansion")))?;
    if r.end - 1 > ctx.max_index() {
        return Err(Error::Horizon {
            requested: r.end - 1,
            horizon: ctx.max_index(),
        });
    }
    Ok(r)
}

/// `h_i(x) = Σ_{j ∈ J_2^i} χ_{V_j}(x)`; a value above 1 is reported as an
/// error.
pub fn h_window_with(ctx: &AtomContext, x: &Rational, i: usize, mode: AtomMode) -> Result<u32> {
    let range = j2_checked(ctx, i)?;
    let w = ctx.scaled_floor(x)?;
    let mut total = 0;
    for j in range {
        if arc_contains(&ctx.v_arc(j, mode)?, &w, &ctx.q) {
            total += 1;
        }
    }
    if total > 1 {
        return Err(Error::Degenerate(format!("h_{i}({x}) = {total}: V_j overlap inside J_2^{i}")));
    }
    Ok(total)
}

pub fn h_window(ctx: &AtomContext, x: &Rational, i: usize) -> Result<u32> {
    h_window_with(ctx, x, i, AtomMode::Formula)
}

/// Measure of `{h_i = 1}`, the union of `V_j` over `J_2^i`.
pub fn h_support(ctx: &AtomContext, i: usize, mode: AtomMode) -> Result<IntervalSet> {
    let mut set = IntervalSet::empty();
    for j in j2_checked(ctx, i)? {
        set = set.union(&ctx.v(j, mode)?.to_set());
    }
    Ok(set)
}

/// Whether the `V_l`, `l` in `range`, are pairwise disjoint (exact: sum
/// of measures equals the measure of the union).
pub fn pairwise_disjoint(ctx: &AtomContext, range: Range<u64>, mode: AtomMode) -> Result<bool> {
    let mut arcs: Vec<(BigUint, BigUint)> = Vec::new();
    for l in range {
        let a = ctx.v_arc(l, mode)?;
        let end = &a.left + &a.len;
        if end > ctx.q {
            arcs.push((a.left.clone(), ctx.q.clone()));
            arcs.push((BigUint::zero(), end - &ctx.q));
        } else if !a.len.is_zero() {
            arcs.push((a.left, end));
        }
    }
    arcs.sort();
    Ok(arcs.windows(2).all(|w| w[0].1 <= w[1].0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingRow {
    pub range: Range<u64>,
    pub expected: Rational,
    pub count: u64,
    pub within: bool,
}

/// Points `R^{-l}(0)`, `l` in each `J_m`, landing in `[c, d)`, compared with
/// `λ([c, d)) |J_m| ± 1`.
pub fn counting_report(ctx: &AtomContext, j_max: u64, c: &Rational, d: &Rational) -> Result<Vec<CountingRow>> {
    let part = j_partition(&ctx.cf, j_max)?;
    let target = CircleInterval::between(c, d);
    let lam = target.measure();
    let mut rows = Vec::new();
    for r in part.intervals {
        let mut count = 0;
        for l in r.clone() {
            let pos = (&ctx.q - (&ctx.p * l) % &ctx.q) % &ctx.q;
            if target.contains(&Rational::from_big(pos, ctx.q.clone())) {
                count += 1;
            }
        }
        let expected = lam.clone() * Rational::from_integer(r.end - r.start);
        let c = Rational::from_integer(count);
        let within = c >= expected.clone() - Rational::one() && c <= expected.clone() + Rational::one();
        rows.push(CountingRow {
            range: r,
            expected,
            count,
            within,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeAlpha {
    pub cf: CFExpansion,
    pub c_achieved: Rational,
}

/// `base` with `a_m` (1-based) replaced by `k`.
pub fn spike_alpha(base: &CFExpansion, m: usize, k: u64) -> Result<SpikeAlpha> {
    if m == 0 || m > base.depth() {
        return Err(Error::Domain(format!("m = {m} outside 1..={}", base.depth())));
    }
    let before: u64 = base.quotients()[..m - 1].iter().sum();
    if k <= before {
        return Err(Error::Precondition(format!(
            "K = {k} does not exceed the preceding quotient sum {before}"
        )));
    }
    let mut q = base.quotients().to_vec();
    q[m - 1] = k;
    Ok(SpikeAlpha {
        cf: CFExpansion::new(q)?,
        c_achieved: Rational::frac(k as i64, before.max(1) as i64),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeWitness {
    /// First index of the intersected family `j0 + c q_{m-1}`, `c < a_m`.
    pub j0: u64,
    pub a_m: u64,
    pub window: Range<u64>,
    /// Intersection of the family, one `V_j` from each of the `a_m` ranges
    /// of the window.
    pub x_interval: IntervalSet,
    pub count_max: u64,
    pub x_prime_interval: CircleInterval,
    pub count_min: u64,
    /// Largest window count found by sweeping all arc endpoints.
    pub sweep_max: u64,
    /// `x_interval` lies where the sweep reports `count_max`.
    pub routes_agree: bool,
    /// The family started at `q_{m-1} + q_{m-2}` instead; its last member
    /// is `q_m`, just past the window.
    pub shifted_j0: u64,
    pub shifted_x_interval: IntervalSet,
}

impl SpikeWitness {
    pub fn contrast(&self) -> Rational {
        Rational::frac(self.count_max as i64, self.count_min.max(1) as i64)
    }
}

fn family_intersection(ctx: &AtomContext, j0: u64, step: u64, count: u64) -> Result<IntervalSet> {
    let mut x = IntervalSet::full();
    for c in 0..count {
        x = x.intersection(&ctx.v(j0 + c * step, AtomMode::Formula)?.to_set());
        if x.is_empty() {
            break;
        }
    }
    Ok(x)
}

/// Window `[q_{m-1}, q_m)`: exact intersection of `V_{(c+1) q_{m-1}}`,
/// `c < a_m`, checked against an endpoint sweep of every `V_j` in the
/// window.
pub fn spike_witness(cf: &CFExpansion, m: usize) -> Result<SpikeWitness> {
    let ctx = AtomContext::from_cf(cf);
    if m < 2 || m > ctx.cf.depth() {
        return Err(Error::Domain(format!("m = {m} outside 2..={}", ctx.cf.depth())));
    }
    let get = |k: usize| {
        ctx.q_k(k)
            .ok_or_else(|| Error::Budget(format!("q_{k} exceeds 64 bits")))
    };
    let (q1, q2, qm) = (get(m - 1)?, get(m - 2)?, get(m)?);
    if qm > ctx.max_index() {
        return Err(Error::Horizon {
            requested: qm,
            horizon: ctx.max_index(),
        });
    }
    let a_m = ctx.cf.a(m);
    let x = family_intersection(&ctx, q1, q1, a_m)?;
    let shifted_x = family_intersection(&ctx, q1 + q2, q1, a_m)?;

    let q = ctx
        .q
        .to_u128()
        .filter(|&q| q < 1 << 126)
        .ok_or_else(|| Error::Budget("sweep needs q below 2^126".into()))?;
    let mut events: Vec<(u128, i64)> = Vec::with_capacity(2 * (qm - q1) as usize);
    let mut base = 0i64;
    let p = ctx.p.to_u128().expect("p < q");
    let mut key = (0, 0, u64::MAX);
    let mut arc = (0u128, 0u128);
    for j in q1..qm {
        let k = ctx.rst(j)?;
        if k != key {
            key = k;
            let a = ctx.arc_from_rst(k.0, k.1, k.2);
            arc = (a.left.to_u128().unwrap(), a.len.to_u128().unwrap());
        }
        let shift = (p * (j as u128 % q)) % q;
        let left = (arc.0 + q - shift) % q;
        let end = left + arc.1;
        if arc.1 == 0 {
            continue;
        }
        if end > q {
            base += 1;
            events.push((end - q, -1));
            events.push((left, 1));
        } else {
            events.push((left, 1));
            events.push((end, -1));
        }
    }
    events.sort_unstable();
    let mut cells: Vec<(u128, u128, i64)> = Vec::new();
    let mut count = base;
    let mut pos = 0u128;
    for (at, delta) in events {
        if at > pos {
            cells.push((pos, at, count));
            pos = at;
        }
        count += delta;
    }
    if pos < q {
        cells.push((pos, q, count));
    }
    let sweep_max = cells.iter().map(|c| c.2).max().unwrap_or(0) as u64;
    let rat = |v: u128| Rational::from_big(BigUint::from(v), ctx.q.clone());

    let count_max = match x.pieces().first() {
        Some((a, _)) => {
            let w = ctx.scaled_floor(a)?;
            let mut total = 0;
            for j in q1..qm {
                if arc_contains(&ctx.v_arc(j, AtomMode::Formula)?, &w, &ctx.q) {
                    total += 1;
                }
            }
            total
        }
        None => 0,
    };
    let top = IntervalSet::from_pieces(
        cells
            .iter()
            .filter(|c| c.2 as u64 == count_max)
            .map(|c| (rat(c.0), rat(c.1)))
            .collect(),
    );
    let routes_agree = !x.is_empty() && x.difference(&top).is_empty();

    let min_positive = cells.iter().map(|c| c.2).filter(|&c| c > 0).min().unwrap_or(0);
    let cell = cells
        .iter()
        .find(|c| c.2 == min_positive)
        .ok_or_else(|| Error::Degenerate("no window cell is covered".into()))?;
    Ok(SpikeWitness {
        j0: q1,
        a_m,
        window: q1..qm,
        x_interval: x,
        count_max,
        x_prime_interval: CircleInterval::between(&rat(cell.0), &rat(cell.1)),
        count_min: min_positive as u64,
        sweep_max,
        routes_agree,
        shifted_j0: q1 + q2,
        shifted_x_interval: shifted_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::frac(p, q)
    }

    #[test]
    fn rst_examples() {
        let ctx = AtomContext::new(&r(13, 21)).unwrap();
        assert_eq!(ctx.rst(7).unwrap(), (8, 5, 0));
        assert_eq!(ctx.rst(1).unwrap(), (3, 2, 0));
        assert_eq!(ctx.rst(5).unwrap().0, 5);
        assert_eq!(ctx.rst(5).unwrap().1, 3);
        assert!(matches!(ctx.rst(21), Err(Error::Horizon { .. })));
        // m = 3 < q_1 = 5 uses q_{-1} = 0
        let ctx = AtomContext::new(&cf_value_of(&[5, 2, 3])).unwrap();
        assert_eq!(ctx.rst(1).unwrap(), (1, 0, 3));
    }

    fn cf_value_of(q: &[u64]) -> Rational {
        CFExpansion::new(q.to_vec()).unwrap().value()
    }

    #[test]
    fn atom_examples() {
        let alpha = r(13, 21);
        let b = atom(7, &alpha, AtomMode::Brute).unwrap();
        let f = atom(7, &alpha, AtomMode::Formula).unwrap();
        assert_eq!(b.u, CircleInterval::new(r(7, 21), r(3, 21)).unwrap());
        assert_eq!(b.u, f.u);
        assert_eq!(f.u.rotate(&alpha), CircleInterval::new(r(20, 21), r(3, 21)).unwrap());
        for mode in [AtomMode::Brute, AtomMode::Formula] {
            assert_eq!(atom(1, &alpha, mode).unwrap().measure, r(8, 21));
        }
        assert!(matches!(atom(19, &alpha, AtomMode::Brute), Err(Error::BoundaryDegenerate(19))));
        assert!(matches!(atom(21, &alpha, AtomMode::Brute), Err(Error::Horizon { .. })));
    }

    #[test]
    fn formula_matches_brute_and_closed_measure() {
        for qs in [vec![1u64; 18], vec![2, 3, 1, 4, 1, 1, 2, 5, 2], vec![7, 1, 1, 3, 2, 6], vec![1, 2, 3, 4, 3, 2, 1, 2]] {
            let ctx = AtomContext::from_cf(&CFExpansion::new(qs).unwrap());
            let qk = ctx.max_index().min(3000);
            for j in 1..=qk {
                let f = ctx.atom(j, AtomMode::Formula).unwrap();
                assert_eq!(f, ctx.atom(j, AtomMode::Brute).unwrap(), "j={j}");
                if f.s >= 1 {
                    let nn = |k: u64| crate::numbers::dist_nearest_int(&BigUint::from(k), ctx.alpha());
                    let closed = nn(f.r) + nn(f.s) - Rational::from_integer(f.t) * nn(f.r);
                    assert_eq!(closed, f.measure, "j={j}");
                }
                let v = ctx.v(j, AtomMode::Formula).unwrap();
                assert_eq!(v.rotate(&(Rational::from_integer(j) * ctx.alpha())), f.u);
            }
        }
    }

    #[test]
    fn membership_consistency() {
        let ctx = AtomContext::from_cf(&CFExpansion::new(vec![2, 1, 3, 1, 2, 2, 1, 4]).unwrap());
        let q = ctx.alpha().denom_unsigned().to_i64().unwrap();
        for j in [1u64, 4, 9, 30, 77] {
            let v = ctx.v(j, AtomMode::Brute).unwrap();
            let u = ctx.atom(j, AtomMode::Brute).unwrap().u;
            for k in 0..2 * q {
                let x = r(k, 2 * q);
                let moved = (x.clone() + Rational::from_integer(j) * ctx.alpha()).fract_part();
                assert_eq!(v.contains(&x), u.contains(&moved));
            }
        }
    }

    #[test]
    fn partition_examples() {
        let p = j_partition(&CFExpansion::new(vec![1; 7]).unwrap(), 12).unwrap();
        assert_eq!(&p.intervals[..4], &[1..2, 2..3, 3..5, 5..8]);
        assert_eq!(p.intervals.last().unwrap(), &(8..13));
        // q: 1, 1, 2, 3, 5, 18 with a_5 = 3
        let cf = CFExpansion::new(vec![1, 1, 1, 1, 3, 2]).unwrap();
        let p = j_partition(&cf, 30).unwrap();
        let at5: Vec<_> = p.intervals.iter().zip(&p.level).filter(|(_, l)| **l == 4).map(|(r, _)| r.clone()).collect();
        assert_eq!(at5, vec![5..8, 8..13, 13..18]);
        let mut next = 1;
        for r in &p.intervals {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, 31);
        for &(i, idx) in &p.markers {
            let r = &p.intervals[idx];
            assert_eq!(r.start, cf.q_u64(i).unwrap() + cf.q_u64(i - 1).unwrap());
        }
        assert!(j_partition(&cf, 1000).is_err());
    }

    #[test]
    fn disjoint_on_partition_ranges() {
        let cf = CFExpansion::new(vec![3, 1, 2, 4, 1, 1, 3, 2, 2]).unwrap();
        let ctx = AtomContext::from_cf(&cf);
        let p = j_partition(ctx.cf(), ctx.max_index()).unwrap();
        for r in &p.intervals {
            assert!(pairwise_disjoint(&ctx, r.clone(), AtomMode::Formula).unwrap(), "{r:?}");
        }
    }

    #[test]
    fn h_window_on_small_fixture() {
        let ctx = AtomContext::new(&r(13, 21)).unwrap();
        let s = h_support(&ctx, 3, AtomMode::Brute).unwrap();
        assert!(s.measure() > r(1, 2));
        for k in 0..42 {
            let x = r(k, 42);
            assert_eq!(h_window(&ctx, &x, 3).unwrap() == 1, s.contains(&x));
        }
        assert!(h_window(&ctx, &r(0, 1), 6).is_err());
    }

    #[test]
    fn series_small() {
        let ctx = AtomContext::from_cf(&CFExpansion::new(vec![1, 2, 1, 3, 1, 1, 2, 2, 1, 3, 2]).unwrap());
        let x = r(12345, 1 << 20);
        let n = ctx.max_index().min(2000);
        let s = undetermined_series(&ctx, &x, &[10, 100, n]).unwrap();
        let mut hits = 0;
        let mut lam = Rational::zero();
        let mut rows = Vec::new();
        for j in 1..=n {
            let u = ctx.atom(j, AtomMode::Brute).unwrap();
            let moved = (x.clone() + Rational::from_integer(j) * ctx.alpha()).fract_part();
            if u.u.contains(&moved) {
                hits += 1;
            }
            lam = lam + u.measure;
            if j == 10 || j == 100 || j == n {
                rows.push((hits, lam.clone()));
            }
        }
        let got: Vec<_> = s.rows.iter().map(|r| (r.hits, r.lambda.clone())).collect();
        assert_eq!(got, rows);
        assert!(s.asserted_hold());
        assert!(!s.upper_bounds.is_empty() && !s.lambda_windows.is_empty());
        assert!(undetermined_series(&ctx, &x, &[]).unwrap().rows.is_empty());
    }

    #[test]
    fn spike_examples() {
        let base = CFExpansion::new(vec![1; 20]).unwrap();
        let s = spike_alpha(&base, 12, 10_000).unwrap();
        assert_eq!(s.c_achieved, r(10_000, 11));
        assert_eq!(s.cf.a(12), 10_000);
        assert_eq!(s.cf.q_u64(12).unwrap(), 10_000 * 144 + 89);
        assert!(matches!(spike_alpha(&base, 12, 11), Err(Error::Precondition(_))));

        let small = spike_alpha(&base, 8, 40).unwrap();
        let w = spike_witness(&small.cf, 8).unwrap();
        assert_eq!(w.count_max, 40);
        assert_eq!(w.sweep_max, 40);
        assert_eq!(w.count_min, 1);
        assert!(w.routes_agree);
        assert!(!w.shifted_x_interval.is_empty());
    }
}
