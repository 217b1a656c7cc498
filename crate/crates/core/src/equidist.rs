//! Block-frequency discrepancy between two orbits across tower scales.

use std::io::Write;

use num_bigint::BigUint;
use serde::Serialize;

use crate::coding::{allowed_blocks, Word};
use crate::error::{Error, Result};
use crate::iet::{CircleInterval, Iet};
use crate::lattice::{AnyLattice, Lane, Lattice};
use crate::numbers::Rational;
use crate::targets::select_scales;
use crate::with_lattice;

/// `#{1 <= j <= N : T^j x ∈ J}` at each checkpoint `N`.
pub fn interval_counts(t: &Iet, j: &CircleInterval, x: &Rational, checkpoints: &[u64]) -> Result<Vec<u64>> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) || checkpoints.first() == Some(&0) {
        return Err(Error::Domain("checkpoints must be positive and strictly increasing".into()));
    }
    if let Some(&last) = checkpoints.last() {
        t.check_horizon(last)?;
    }
    let dens: Vec<BigUint> = [x, j.left(), j.length()].iter().map(|r| r.denom_unsigned()).collect();
    let any = AnyLattice::new(t, &dens);
    with_lattice!(&any, lat => count_kernel(lat, j, x, checkpoints))
}

fn count_kernel<L: Lane>(lat: &Lattice<L>, j: &CircleInterval, x: &Rational, checkpoints: &[u64]) -> Result<Vec<u64>> {
    let q = lat.modulus().clone();
    let left = lat.point(j.left())?;
    let full = j.length() >= &Rational::one();
    let len = if full { L::origin() } else { lat.point(j.length())? };
    let mut p = lat.point(x)?;
    let mut count = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut i = 0u64;
    for &cp in checkpoints {
        while i < cp {
            p = lat.step(&p);
            i += 1;
            if full || p.sub_mod(&left, &q) < len {
                count += 1;
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// `|#{j <= N : T^j x ∈ J} - #{j <= N : T^j x' ∈ J}| / N`.
pub fn block_discrepancy(t: &Iet, j: &CircleInterval, x: &Rational, x2: &Rational, n: u64) -> Result<Rational> {
    Ok(discrepancies(t, j, x, x2, &[n])?.remove(0))
}

fn discrepancies(t: &Iet, j: &CircleInterval, x: &Rational, x2: &Rational, horizons: &[u64]) -> Result<Vec<Rational>> {
    let (a, b) = rayon::join(
        || interval_counts(t, j, x, horizons),
        || interval_counts(t, j, x2, horizons),
    );
    let (a, b) = (a?, b?);
    Ok(horizons
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(&n, (&ca, &cb))| Rational::frac(ca.abs_diff(cb) as i64, n as i64))
        .collect())
}

/// Keeps a scale only when it exceeds twice the last kept one.
pub fn thin_scales(scales: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for &n in scales {
        if out.last().is_none_or(|&last| n > 2 * last) {
            out.push(n);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayLevel {
    pub l: usize,
    pub horizon: u64,
    pub discrepancy: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayProfile {
    pub base_scale: u64,
    pub block: Word,
    pub block_interval: CircleInterval,
    pub levels: Vec<DecayLevel>,
    /// Least-squares slope of `ln(discrepancy)` against `L` over the nonzero
    /// levels; NaN with fewer than two of them.
    pub fitted_slope: f64,
}

impl DecayProfile {
    pub fn at(&self, l: usize) -> Option<&Rational> {
        self.levels.iter().find(|v| v.l == l).map(|v| &v.discrepancy)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b';').from_writer(out);
        w.write_record(["L", "horizon", "disc_num", "disc_den", "disc_float"])?;
        for v in &self.levels {
            w.write_record([
                v.l.to_string(),
                v.horizon.to_string(),
                v.discrepancy.numer().to_string(),
                v.discrepancy.denom().to_string(),
                format!("{:.9e}", v.discrepancy.to_f64()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "base_scale": self.base_scale,
            "block": self.block.to_string(),
            "levels": self.levels.len(),
            "fitted_slope": if self.fitted_slope.is_finite() {
                serde_json::json!(self.fitted_slope)
            } else {
                serde_json::Value::Null
            },
        })
    }
}

fn fit_slope(levels: &[DecayLevel]) -> f64 {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|v| !v.discrepancy.is_zero())
        .map(|v| (v.l as f64, v.discrepancy.to_f64().ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Thinned scales `n_1 < n_2 < ...` from `select_scales` up to the horizon.
pub fn tower_scales(t: &Iet, xi: &Rational) -> Result<Vec<u64>> {
    let s = select_scales(t, xi, t.horizon())?;
    Ok(thin_scales(&s.scales))
}

/// Discrepancy at horizons `n_{i+L}`, `L = 0..=l_max`, for the smallest
/// `n_i`-block (or the block at `block_index` in left-endpoint order).
pub fn decay_profile_with(
    t: &Iet,
    xi: &Rational,
    i: usize,
    x: &Rational,
    x2: &Rational,
    l_max: usize,
    block_index: Option<usize>,
) -> Result<DecayProfile> {
    if i == 0 {
        return Err(Error::Domain("scale index is 1-based".into()));
    }
    let scales = tower_scales(t, xi)?;
    if scales.len() < i + l_max {
        return Err(Error::InsufficientScales {
            needed: i + l_max,
            available: scales.len(),
        });
    }
    let base = scales[i - 1];
    let table = allowed_blocks(t, base as usize);
    let entry = match block_index {
        Some(k) => table
            .entries
            .get(k)
            .ok_or_else(|| Error::Domain(format!("block index {k} out of {}", table.entries.len())))?,
        None => table.smallest(),
    };
    let horizons: Vec<u64> = scales[i - 1..i + l_max].to_vec();
    let disc = discrepancies(t, &entry.interval, x, x2, &horizons)?;
    let levels: Vec<DecayLevel> = horizons
        .iter()
        .zip(disc)
        .enumerate()
        .map(|(l, (&horizon, discrepancy))| DecayLevel { l, horizon, discrepancy })
        .collect();
    Ok(DecayProfile {
        base_scale: base,
        block: entry.word.clone(),
        block_interval: entry.interval.clone(),
        fitted_slope: fit_slope(&levels),
        levels,
    })
}

pub fn decay_profile(t: &Iet, xi: &Rational, i: usize, x: &Rational, x2: &Rational, l_max: usize) -> Result<DecayProfile> {
    decay_profile_with(t, xi, i, x, x2, l_max, None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppearanceRow {
    pub outer: u64,
    pub blocks: usize,
    pub min_occurrences: usize,
    /// `min_occurrences / (ε_{n_i} n_{i+r})`.
    pub delta: f64,
}

/// Disjoint occurrences of `w` (an `n_i`-block) inside every `n`-block
/// for each outer scale `n`.
pub fn appearance_report(t: &Iet, w: &Word, inner: u64, outers: &[u64]) -> Vec<AppearanceRow> {
    let eps = allowed_blocks(t, inner as usize).eps_n.to_f64();
    outers
        .iter()
        .map(|&n| {
            let table = allowed_blocks(t, n as usize);
            let min = table
                .entries
                .iter()
                .map(|e| e.word.disjoint_occurrences(w))
                .min()
                .unwrap_or(0);
            AppearanceRow {
                outer: n,
                blocks: table.entries.len(),
                min_occurrences: min,
                delta: min as f64 / (eps * n as f64),
            }
        })
        .collect()
}
