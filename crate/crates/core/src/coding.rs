//! Symbolic coding: itineraries, allowed blocks and Rokhlin towers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::iet::{CircleInterval, Iet, IntervalSet};
use crate::lattice::{Lane, Lattice};
use crate::numbers::Rational;
use crate::with_lattice;

/// Finite itinerary over the alphabet `{1, ..., d}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    /// Number of positions whose letter lies in `b`.
    pub fn count_in(&self, b: &[u8]) -> usize {
        self.0.iter().filter(|c| b.contains(c)).count()
    }

    /// Greedy count of non-overlapping occurrences of `pattern`.
    pub fn disjoint_occurrences(&self, pattern: &Word) -> usize {
        let (h, p) = (&self.0, &pattern.0);
        if p.is_empty() || p.len() > h.len() {
            return 0;
        }
        let mut count = 0;
        let mut i = 0;
        while i + p.len() <= h.len() {
            if &h[i..i + p.len()] == p.as_slice() {
                count += 1;
                i += p.len();
            } else {
                i += 1;
            }
        }
        count
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&c| c < 10) {
            for c in &self.0 {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
            f.write_str(&parts.join("."))
        }
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Letters of `x, Tx, ..., T^{n-1}x`.
pub fn code_word(t: &Iet, x: &Rational, n: usize) -> Word {
    let mut y = x.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(t.letter(&y) as u8);
        y = t.apply(&y, 1);
    }
    Word(out)
}

fn code_word_lattice<L: Lane>(lat: &Lattice<L>, x: &L, n: usize) -> Vec<u8> {
    let mut y = x.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(lat.interval_of(&y) as u8 + 1);
        y = lat.step(&y);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockEntry {
    pub word: Word,
    pub interval: CircleInterval,
}

/// The `n`-cylinders of `T`, one entry per component of `[0, 1)` cut at
/// the discontinuities of `T^n`.
#[derive(Clone, Debug)]
pub struct BlockTable {
    pub n: usize,
    pub entries: Vec<BlockEntry>,
    pub eps_n: Rational,
}

impl BlockTable {
    /// Number of distinct words, i.e. `|B_n|`.
    pub fn distinct_words(&self) -> usize {
        self.entries
            .iter()
            .map(|e| &e.word)
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn smallest(&self) -> &BlockEntry {
        self.entries
            .iter()
            .min_by(|a, b| a.interval.length().cmp(b.interval.length()))
            .expect("at least one block")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b';').from_writer(out);
        w.write_record(["word", "left", "length"])?;
        for e in &self.entries {
            w.write_record([
                e.word.to_string(),
                e.interval.left().to_string(),
                e.interval.length().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn allowed_blocks(t: &Iet, n: usize) -> BlockTable {
    let cuts = t.discontinuity_set(n as u64);
    let any = t.lattice();
    let words: Vec<Vec<u8>> = with_lattice!(&any, lat => {
        cuts.iter()
            .map(|c| code_word_lattice(lat, &lat.point(c).expect("cut on own lattice"), n))
            .collect()
    });
    let mut entries = Vec::with_capacity(cuts.len());
    for (k, (c, w)) in cuts.iter().zip(words).enumerate() {
        let right = cuts.get(k + 1).cloned().unwrap_or_else(Rational::one);
        entries.push(BlockEntry {
            word: Word(w),
            interval: CircleInterval::new(c.clone(), right - c).expect("sub-interval of [0,1)"),
        });
    }
    let eps_n = entries
        .iter()
        .map(|e| e.interval.length().clone())
        .min()
        .expect("at least one block");
    BlockTable { n, entries, eps_n }
}

/// `|B_l|` for `l = 1..=l_max`, by refining cylinder classes one letter at
/// a time.
pub fn block_counts(t: &Iet, l_max: usize) -> Vec<usize> {
    let any = t.lattice();
    with_lattice!(&any, lat => block_counts_on(t, lat, l_max))
}

fn block_counts_on<L: Lane>(t: &Iet, lat: &Lattice<L>, l_max: usize) -> Vec<usize> {
    let breaks: Vec<L> = t
        .discontinuities()
        .iter()
        .map(|p| lat.point(p).expect("breakpoint on own lattice"))
        .collect();
    // left endpoint -> (class of its (l)-word, T^l of the endpoint)
    let mut comps: BTreeMap<L, (u32, L)> = BTreeMap::new();
    let mut pulled: Vec<L> = breaks.clone();
    let mut counts = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let mut fresh: Vec<L> = Vec::new();
        if l == 1 {
            fresh.push(L::origin());
            fresh.extend(breaks.iter().cloned());
        } else {
            for p in pulled.iter_mut() {
                *p = lat.step_back(p);
                fresh.push(p.clone());
            }
        }
        for x in fresh {
            if comps.contains_key(&x) {
                continue;
            }
            let parent_class = comps
                .range(..x.clone())
                .next_back()
                .map(|(_, (c, _))| *c)
                .unwrap_or(0);
            let pos = lat.iterate(&x, (l - 1) as u64);
            comps.insert(x, (parent_class, pos));
        }
        let mut ids: HashMap<(u32, u8), u32> = HashMap::new();
        for (class, pos) in comps.values_mut() {
            let letter = lat.interval_of(pos) as u8;
            let next = ids.len() as u32;
            *class = *ids.entry((*class, letter)).or_insert(next);
            *pos = lat.step(pos);
        }
        counts.push(ids.len());
    }
    counts
}

/// `(m_n[B], M_n[B])`: extreme in-`B` letter frequencies over allowed
/// `n`-blocks. Empty `B` gives `(0, 0)`, the full alphabet `(1, 1)`.
pub fn letter_frequency_range(t: &Iet, b: &[u8], n: usize) -> (Rational, Rational) {
    let table = allowed_blocks(t, n);
    frequency_range(&table, b, t.d())
}

fn frequency_range(table: &BlockTable, b: &[u8], d: usize) -> (Rational, Rational) {
    let set: HashSet<u8> = b.iter().copied().filter(|&c| c >= 1 && c as usize <= d).collect();
    if set.is_empty() {
        return (Rational::zero(), Rational::zero());
    }
    if set.len() == d {
        return (Rational::one(), Rational::one());
    }
    let letters: Vec<u8> = set.into_iter().collect();
    let counts = table.entries.iter().map(|e| e.word.count_in(&letters));
    let (lo, hi) = counts.fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c), hi.max(c)));
    let n = table.n as i64;
    (Rational::frac(lo as i64, n), Rational::frac(hi as i64, n))
}

/// Measure of blocks whose in-`B` frequency sits in the middle half of
/// `[m_n, M_n]`, with two lower bounds for it.
#[derive(Clone, Debug, Serialize)]
pub struct ProportionCheck {
    pub n: usize,
    pub low: Rational,
    pub high: Rational,
    pub mid_measure: Rational,
    /// `eps_n` times the number of attainable frequencies `k/n` in the
    /// middle range; each is realised by a distinct block.
    pub counted_bound: Rational,
    /// `c (M_n - m_n) / 2` with `c = n eps_n`.
    pub stated_bound: Rational,
}

impl ProportionCheck {
    pub fn counted_holds(&self) -> bool {
        self.mid_measure >= self.counted_bound
    }

    pub fn stated_holds(&self) -> bool {
        self.mid_measure >= self.stated_bound
    }
}

pub fn proportion_between(t: &Iet, b: &[u8], n: usize) -> ProportionCheck {
    let table = allowed_blocks(t, n);
    let (low, high) = frequency_range(&table, b, t.d());
    let q = Rational::frac(1, 4);
    let tq = Rational::frac(3, 4);
    let lo_edge = tq.clone() * &low + q.clone() * &high;
    let hi_edge = q * &low + tq * &high;
    let letters: Vec<u8> = b.to_vec();
    let nn = Rational::from_integer(n as i64);
    let mut mid_measure = Rational::zero();
    for e in &table.entries {
        let f = Rational::frac(e.word.count_in(&letters) as i64, n as i64);
        if f >= lo_edge && f <= hi_edge {
            mid_measure = mid_measure + e.interval.length();
        }
    }
    // integers k with lo_edge <= k/n <= hi_edge
    let k_lo = -((-(lo_edge.clone() * &nn)).floor());
    let k_hi = (hi_edge * &nn).floor();
    let attainable = if k_hi >= k_lo {
        Rational::from_integer(k_hi - k_lo + 1)
    } else {
        Rational::zero()
    };
    let counted_bound = table.eps_n.clone() * attainable;
    let c = nn * &table.eps_n;
    let stated_bound = c * (high.clone() - &low) * Rational::frac(1, 2);
    ProportionCheck {
        n,
        low,
        high,
        mid_measure,
        counted_bound,
        stated_bound,
    }
}

/// Base interval and height `m + 1` of a Rokhlin tower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tower {
    pub base: CircleInterval,
    pub height: u64,
}

impl Tower {
    /// Levels `T^j(base)`, `0 <= j < height`, as linear intervals.
    pub fn levels(&self, t: &Iet) -> Vec<(Rational, Rational)> {
        let len = self.base.length().clone();
        let mut x = self.base.left().clone();
        let mut out = Vec::with_capacity(self.height as usize);
        for _ in 0..self.height {
            out.push((x.clone(), x.clone() + &len));
            x = t.apply(&x, 1);
        }
        out
    }
}

pub fn write_towers_csv<W: Write>(towers: &[Tower], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b';').from_writer(out);
    w.write_record(["base_left", "base_length", "height"])?;
    for tw in towers {
        w.write_record([
            tw.base.left().to_string(),
            tw.base.length().to_string(),
            tw.height.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Piece of a column under construction: a sub-interval of a base together
/// with the top level reached so far.
struct Column {
    base: (Rational, Rational),
    top: Rational,
    height: u64,
}

/// Covers `[0, 1)` by Rokhlin towers of heights in `[n, 2n]`.
///
/// Seeds are `n`-cylinders taken left to right whenever their first `n`
/// levels are disjoint from each other and from earlier seeds. The seeds'
/// union is the base; columns grow by forward images, splitting at
/// breakpoints of `T` and wherever an image returns to the base, always
/// extending the lowest top first. Columns taller than `2n` are then cut
/// into stacked towers, and neighbouring towers that move together are
/// merged.
pub fn build_towers(t: &Iet, n: usize) -> Result<Vec<Tower>> {
    if n == 0 {
        return Err(Error::Domain("tower height must be positive".into()));
    }
    if t.e_t(2 * n as u64).is_zero() {
        return Err(Error::Degenerate(format!(
            "two discontinuities of T^{} coincide",
            2 * n
        )));
    }
    let seeds = seed_bases(t, n);
    let base = IntervalSet::from_pieces(seeds.clone());
    let columns = grow_columns(t, &seeds, &base, n)?;
    let mut towers = Vec::new();
    for (left, len, h) in columns {
        chop(t, &left, &len, h, n as u64, &mut towers);
    }
    Ok(merge_towers(t, towers))
}

fn seed_bases(t: &Iet, n: usize) -> Vec<(Rational, Rational)> {
    let table = allowed_blocks(t, n);
    let mut occupied = IntervalSet::empty();
    let mut seeds = Vec::new();
    for e in &table.entries {
        let len = e.interval.length().clone();
        let mut levels = Vec::with_capacity(n);
        let mut x = e.interval.left().clone();
        for _ in 0..n {
            levels.push((x.clone(), x.clone() + &len));
            x = t.apply(&x, 1);
        }
        let own = IntervalSet::from_pieces(levels.clone());
        if own.measure() != len.clone() * Rational::from_integer(n as i64) {
            continue;
        }
        if !own.overlap(&occupied).is_zero() {
            continue;
        }
        occupied = occupied.union(&own);
        seeds.push(levels[0].clone());
    }
    seeds
}

fn grow_columns(
    t: &Iet,
    seeds: &[(Rational, Rational)],
    base: &IntervalSet,
    n: usize,
) -> Result<Vec<(Rational, Rational, u64)>> {
    let budget = (t.horizon().max(4 * n as u64)).min(1 << 24);
    let mut open: Vec<Column> = seeds
        .iter()
        .map(|(a, b)| Column {
            base: (a.clone(), b.clone()),
            top: t.apply(a, n as i64 - 1),
            height: n as u64,
        })
        .collect();
    let mut done = Vec::new();
    let mut breaks: Vec<Rational> = t.discontinuities().to_vec();
    breaks.push(Rational::one());
    while !open.is_empty() {
        let k = (0..open.len())
            .min_by(|&i, &j| open[i].top.cmp(&open[j].top))
            .expect("non-empty");
        let col = open.swap_remove(k);
        if col.height > budget {
            return Err(Error::Budget(format!(
                "column above {} did not return within {budget} steps",
                col.base.0
            )));
        }
        let len = col.base.1.clone() - &col.base.0;
        let top_end = col.top.clone() + &len;
        // split the top where T is discontinuous
        let mut cuts = vec![col.top.clone()];
        for b in &breaks {
            if b > &col.top && b < &top_end {
                cuts.push(b.clone());
            }
        }
        cuts.push(top_end);
        for w in cuts.windows(2) {
            let offset = w[0].clone() - &col.top;
            let piece_len = w[1].clone() - &w[0];
            let image = t.apply(&w[0], 1);
            let image_end = image.clone() + &piece_len;
            // split the image at base boundaries
            let mut marks = vec![image.clone()];
            for (a, b) in base.pieces() {
                for p in [a, b] {
                    if p > &image && p < &image_end {
                        marks.push(p.clone());
                    }
                }
            }
            marks.push(image_end);
            marks.sort();
            for m in marks.windows(2) {
                let sub_off = offset.clone() + (m[0].clone() - &image);
                let sub_len = m[1].clone() - &m[0];
                let b0 = col.base.0.clone() + &sub_off;
                let b1 = b0.clone() + &sub_len;
                if base.contains(&m[0]) {
                    done.push((b0, sub_len, col.height));
                } else {
                    open.push(Column {
                        base: (b0, b1),
                        top: m[0].clone(),
                        height: col.height + 1,
                    });
                }
            }
        }
    }
    done.sort();
    Ok(done)
}

fn chop(t: &Iet, left: &Rational, len: &Rational, h: u64, n: u64, out: &mut Vec<Tower>) {
    if h <= 2 * n {
        out.push(Tower {
            base: CircleInterval::new(left.clone(), len.clone()).expect("column base"),
            height: h,
        });
        return;
    }
    let q = h / n;
    let r = h % n;
    let mut x = left.clone();
    for k in 0..q {
        let height = if k + 1 == q { n + r } else { n };
        out.push(Tower {
            base: CircleInterval::new(x.clone(), len.clone()).expect("column level"),
            height,
        });
        x = t.apply(&x, height as i64);
    }
}

fn merge_towers(t: &Iet, mut towers: Vec<Tower>) -> Vec<Tower> {
    towers.sort_by(|a, b| a.base.left().cmp(b.base.left()));
    loop {
        let mut merged = false;
        let mut out: Vec<Tower> = Vec::with_capacity(towers.len());
        for tw in towers {
            if let Some(prev) = out.last_mut() {
                if prev.height == tw.height && moves_together(t, prev, &tw) {
                    let len = prev.base.length().clone() + tw.base.length();
                    prev.base = CircleInterval::new(prev.base.left().clone(), len).expect("merged base");
                    merged = true;
                    continue;
                }
            }
            out.push(tw);
        }
        towers = out;
        if !merged {
            return towers;
        }
    }
}

fn moves_together(t: &Iet, a: &Tower, b: &Tower) -> bool {
    let mut x = a.base.left().clone();
    let mut y = b.base.left().clone();
    for _ in 0..a.height {
        if x.clone() + a.base.length() != y {
            return false;
        }
        x = t.apply(&x, 1);
        y = t.apply(&y, 1);
    }
    true
}

/// Exact verification of a tower family.
#[derive(Clone, Debug, Serialize)]
pub struct TowerCheck {
    pub count: usize,
    pub partition: bool,
    pub continuous: bool,
    pub min_height: u64,
    pub max_height: u64,
    pub heights_in_range: bool,
    pub count_within_3d: bool,
    /// Base endpoints all lie among the discontinuities of `T^{2n}`.
    pub bases_on_2n_cuts: bool,
    pub min_level_measure: Rational,
}

impl TowerCheck {
    pub fn all_ok(&self) -> bool {
        self.partition && self.continuous && self.heights_in_range && self.count_within_3d
    }
}

pub fn check_towers(t: &Iet, towers: &[Tower], n: usize) -> TowerCheck {
    let n = n as u64;
    let mut levels = Vec::new();
    let mut continuous = true;
    let mut mass = Rational::zero();
    for tw in towers {
        let lv = tw.levels(t);
        for (k, (a, b)) in lv.iter().enumerate() {
            if (k as u64) + 1 < tw.height {
                // the whole level sits in a single interval of T
                let j = t.interval_of(a);
                let end = t.lefts().get(j + 1).cloned().unwrap_or_else(Rational::one);
                if b > &end {
                    continuous = false;
                }
            }
            if b > &Rational::one() {
                continuous = false;
            }
        }
        mass = mass + tw.base.length().clone() * Rational::from_integer(tw.height as i64);
        levels.extend(lv);
    }
    levels.sort();
    let mut partition = mass == Rational::one();
    let mut cursor = Rational::zero();
    for (a, b) in &levels {
        if a != &cursor {
            partition = false;
            break;
        }
        cursor = b.clone();
    }
    partition &= cursor == Rational::one();
    let cut_set: HashSet<Rational> = t
        .discontinuity_set(2 * n)
        .into_iter()
        .chain(std::iter::once(Rational::one()))
        .collect();
    let bases_on_2n_cuts = towers
        .iter()
        .all(|tw| cut_set.contains(tw.base.left()) && cut_set.contains(&(tw.base.left().clone() + tw.base.length())));
    let min_height = towers.iter().map(|t| t.height).min().unwrap_or(0);
    let max_height = towers.iter().map(|t| t.height).max().unwrap_or(0);
    TowerCheck {
        count: towers.len(),
        partition,
        continuous,
        min_height,
        max_height,
        heights_in_range: towers.iter().all(|tw| tw.height >= n && tw.height <= 2 * n),
        count_within_3d: towers.len() <= 3 * t.d(),
        bases_on_2n_cuts,
        min_level_measure: towers
            .iter()
            .map(|t| t.base.length().clone())
            .min()
            .unwrap_or_else(Rational::zero),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::{make_iet, rotation_iet};
    use crate::numbers::CFExpansion;

    fn r(p: i64, q: i64) -> Rational {
        Rational::frac(p, q)
    }

    #[test]
    fn code_word_examples() {
        let id = make_iet(vec![r(1, 2), r(1, 2)], vec![1, 2]).unwrap();
        assert_eq!(code_word(&id, &r(1, 4), 3), Word(vec![1, 1, 1]));
        let t = rotation_iet(&r(13, 21)).unwrap();
        assert_eq!(code_word(&t, &r(0, 1), 5), Word(vec![1, 2, 1, 2, 2]));
        assert_eq!(code_word(&t, &r(0, 1), 1), Word(vec![1]));
    }

    #[test]
    fn allowed_block_examples() {
        let t = rotation_iet(&r(13, 21)).unwrap();
        let b1 = allowed_blocks(&t, 1);
        assert_eq!(b1.entries.len(), 2);
        assert_eq!(b1.entries[0].interval, CircleInterval::new(r(0, 1), r(8, 21)).unwrap());
        let b2 = allowed_blocks(&t, 2);
        let lefts: Vec<Rational> = b2.entries.iter().map(|e| e.interval.left().clone()).collect();
        assert_eq!(lefts, vec![r(0, 1), r(8, 21), r(16, 21)]);
        // brute: code every point k/21 and group
        for e in &b2.entries {
            for k in 0..21 {
                let x = r(k, 21);
                if e.interval.contains(&x) {
                    assert_eq!(code_word(&t, &x, 2), e.word);
                }
            }
        }
        assert_eq!(b2.eps_n, r(5, 21));
        let four = make_iet(vec![r(1, 7), r(2, 7), r(3, 14), r(5, 14)], vec![4, 3, 2, 1]).unwrap();
        assert_eq!(allowed_blocks(&four, 1).entries.len(), 4);
    }

    #[test]
    fn blocks_tile_and_shrink() {
        let t = rotation_iet(&CFExpansion::golden(20).value()).unwrap();
        let mut prev = Rational::one();
        for n in 1..40 {
            let b = allowed_blocks(&t, n);
            let total = b.entries.iter().fold(Rational::zero(), |a, e| a + e.interval.length());
            assert_eq!(total, Rational::one());
            assert!(b.eps_n <= prev);
            prev = b.eps_n.clone();
            let words: HashSet<&Word> = b.entries.iter().map(|e| &e.word).collect();
            for k in 0..50 {
                let x = r(k * 7 + 1, 353);
                assert!(words.contains(&code_word(&t, &x, n)));
            }
        }
    }

    #[test]
    fn block_counts_match_tables() {
        let t = make_iet(
            vec![r(1, 7), r(2, 7), r(3, 14), r(5, 14)],
            vec![4, 3, 2, 1],
        )
        .unwrap();
        let counts = block_counts(&t, 30);
        for (l, c) in counts.iter().enumerate() {
            assert_eq!(*c, allowed_blocks(&t, l + 1).distinct_words(), "l={}", l + 1);
        }
        let g = rotation_iet(&CFExpansion::golden(18).value()).unwrap();
        let counts = block_counts(&g, 60);
        for (l, c) in counts.iter().enumerate() {
            assert_eq!(*c, l + 2);
        }
    }

    #[test]
    fn frequency_examples() {
        let t = rotation_iet(&r(13, 21)).unwrap();
        assert_eq!(letter_frequency_range(&t, &[1, 2], 5), (r(1, 1), r(1, 1)));
        assert_eq!(letter_frequency_range(&t, &[], 5), (r(0, 1), r(0, 1)));
        // 2-blocks of 13/21: 12 (from 0), 21 (from 8/21), 22 (from 16/21)
        let words: Vec<String> = allowed_blocks(&t, 2).entries.iter().map(|e| e.word.to_string()).collect();
        assert_eq!(words, vec!["12", "21", "22"]);
        assert_eq!(letter_frequency_range(&t, &[2], 2), (r(1, 2), r(1, 1)));
    }

    #[test]
    fn proportion_counted_bound_holds() {
        for cf in [CFExpansion::golden(20), CFExpansion::new(vec![2, 1, 3, 1, 2, 2, 1, 4, 2, 3]).unwrap()] {
            let t = rotation_iet(&cf.value()).unwrap();
            for n in [5usize, 8, 13, 20, 34, 50] {
                let p = proportion_between(&t, &[1], n);
                assert!(p.counted_holds(), "n={n}: {p:?}");
            }
        }
    }

    #[test]
    fn tower_examples() {
        let t = rotation_iet(&r(13, 21)).unwrap();
        let towers = build_towers(&t, 3).unwrap();
        let c = check_towers(&t, &towers, 3);
        assert!(c.partition && c.continuous && c.heights_in_range, "{c:?}");
        assert!(c.count <= 6);

        let id = make_iet(vec![r(1, 4); 4], vec![1, 2, 3, 4]).unwrap();
        assert!(matches!(build_towers(&id, 2), Err(Error::Degenerate(_))));

        let g = rotation_iet(&CFExpansion::golden(40).value()).unwrap();
        let towers = build_towers(&g, 50).unwrap();
        let c = check_towers(&g, &towers, 50);
        assert!(c.all_ok(), "{c:?}");
    }

    #[test]
    fn disjoint_occurrence_counter() {
        let w = Word(vec![1, 2, 1, 2, 1, 2]);
        assert_eq!(w.disjoint_occurrences(&Word(vec![1, 2, 1])), 1);
        assert_eq!(w.disjoint_occurrences(&Word(vec![1, 2])), 3);
        assert_eq!(w.disjoint_occurrences(&Word(vec![2, 2])), 0);
    }
}
