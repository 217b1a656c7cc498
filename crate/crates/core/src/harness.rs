//! Experiment configs, seeded sampling, runs and file output.
//!
//! Config files are flat `key = value` lines (`#` starts a comment):
//!
//! | key | value |
//! |-----|-------|
//! | `kind` | `hits`, `undetermined` or `decay` |
//! | `map` | `golden:60`, `cf:1,2,3`, `alpha:13/21`, `random:40:4:0` (depth, max quotient, sample index) or `iet:1/3,1/6,1/2\|3,1,2` |
//! | `radius` | `harmonic:1/2`, `log_harmonic`, `constant:1/3`, `table:...` (hits only) |
//! | `center` | target center, default `1/2` |
//! | `seeds` | number of sampled points (pairs for `decay`) |
//! | `master_seed` | 64-bit seed of the point stream |
//! | `checkpoints` | `geometric:start,factor,count` or a comma list |
//! | `horizon_guard` | `on` (reject checkpoints past the horizon) or `off` (drop them) |
//! | `xi` | scale parameter, default `1/10` |
//! | `base_index`, `l_max` | decay profile scale index and depth |
//! | `out` | output directory |
//!
//! Points are `k / 2^64` with `k` drawn from ChaCha8 seeded by
//! `master_seed` on stream 0; random expansions use stream 1.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equidist::{decay_profile, DecayProfile};
use crate::error::{Error, Result};
use crate::iet::{make_iet, rotation_iet, Iet};
use crate::numbers::{cf_expand, CFExpansion, Rational};
use crate::targets::{
    control_bad_profile, dyadic_checkpoints, hit_bound_holds, hit_runs, max_bound_holds, select_scales,
    ControlBadPoint, HitCheckpoint, HitSeries, RadiusSpec,
};
use crate::undetermined::{undetermined_series, AtomContext, UndeterminedSeries};

/// Seed fixed before any acceptance run.
pub const DEFAULT_MASTER_SEED: u64 = 20261014;

const POINT_STREAM: u64 = 0;
const CF_STREAM: u64 = 1;

/// `count` distinct points `k / 2^64`, in draw order.
pub fn sample_points(master_seed: u64, count: usize) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(POINT_STREAM);
    let mut seen = std::collections::HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let den = BigUint::from(1u8) << 64u32;
    while out.len() < count {
        let k = rng.next_u64();
        if seen.insert(k) {
            out.push(Rational::from_big(BigUint::from(k), den.clone()));
        }
    }
    out
}

/// `count` random prefixes with quotients uniform in `1..=max_quotient`.
pub fn sample_cfs(master_seed: u64, count: usize, depth: usize, max_quotient: u64) -> Vec<CFExpansion> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(CF_STREAM);
    (0..count)
        .map(|_| CFExpansion::random_prefix(&mut rng, depth, max_quotient))
        .collect()
}

/// Map named by a descriptor string.
#[derive(Clone, Debug)]
pub struct MapSpec {
    pub descriptor: String,
    pub iet: Iet,
    pub cf: Option<CFExpansion>,
}

pub fn parse_map(desc: &str, master_seed: u64) -> Result<MapSpec> {
    let desc = desc.trim();
    let (family, arg) = desc
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("map descriptor {desc:?} lacks a family")))?;
    let cf = match family {
        "golden" => Some(CFExpansion::golden(parse_num(arg)?)),
        "cf" => Some(arg.parse()?),
        "alpha" => Some(cf_expand(&arg.parse()?, usize::MAX)?),
        "random" => {
            let parts: Vec<&str> = arg.split(':').collect();
            let [depth, max_q, index] = parts[..] else {
                return Err(Error::Parse("random map is random:depth:max_quotient:index".into()));
            };
            let index: usize = parse_num(index)?;
            let mut all = sample_cfs(master_seed, index + 1, parse_num(depth)?, parse_num(max_q)?);
            Some(all.swap_remove(index))
        }
        "iet" => None,
        other => return Err(Error::Parse(format!("unknown map family {other:?}"))),
    };
    let iet = match &cf {
        Some(cf) => rotation_iet(&cf.value())?,
        None => {
            let (lengths, perm) = arg
                .split_once('|')
                .ok_or_else(|| Error::Parse("iet map is iet:lengths|permutation".into()))?;
            let lengths = lengths.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<Rational>>>()?;
            let perm = perm.split(',').map(parse_num).collect::<Result<Vec<usize>>>()?;
            make_iet(lengths, perm)?
        }
    };
    Ok(MapSpec {
        descriptor: desc.to_string(),
        iet,
        cf,
    })
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .replace('_', "")
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Hits,
    Undetermined,
    Decay,
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hits" => Ok(ExperimentKind::Hits),
            "undetermined" => Ok(ExperimentKind::Undetermined),
            "decay" => Ok(ExperimentKind::Decay),
            other => Err(Error::Parse(format!("unknown experiment kind {other:?}"))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Hits => "hits",
            ExperimentKind::Undetermined => "undetermined",
            ExperimentKind::Decay => "decay",
        })
    }
}

/// `geometric:start,factor,count` or an explicit comma list.
pub fn parse_checkpoints(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let cps: Vec<u64> = if let Some(g) = s.strip_prefix("geometric:") {
        let v = g.split(',').map(parse_num).collect::<Result<Vec<u64>>>()?;
        let [start, factor, count] = v[..] else {
            return Err(Error::Parse("geometric schedule is start,factor,count".into()));
        };
        if factor < 2 || start == 0 {
            return Err(Error::Parse("geometric schedule needs start >= 1 and factor >= 2".into()));
        }
        let mut out = Vec::new();
        let mut n = start;
        for _ in 0..count {
            out.push(n);
            n = n.checked_mul(factor).ok_or_else(|| Error::Parse("schedule overflows".into()))?;
        }
        out
    } else {
        let body = s.strip_prefix("list:").unwrap_or(s);
        body.split(',').filter(|t| !t.trim().is_empty()).map(parse_num).collect::<Result<_>>()?
    };
    if cps.windows(2).any(|w| w[1] <= w[0]) || cps.first() == Some(&0) {
        return Err(Error::Parse("checkpoints must be positive and strictly increasing".into()));
    }
    Ok(cps)
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub map: String,
    pub radius: Option<RadiusSpec>,
    pub center: Rational,
    pub seeds: usize,
    pub master_seed: u64,
    pub checkpoints: Vec<u64>,
    pub horizon_guard: bool,
    pub xi: Rational,
    pub base_index: usize,
    pub l_max: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, map: &str) -> Self {
        ExperimentConfig {
            kind,
            map: map.to_string(),
            radius: None,
            center: Rational::frac(1, 2),
            seeds: 16,
            master_seed: DEFAULT_MASTER_SEED,
            checkpoints: vec![],
            horizon_guard: true,
            xi: Rational::frac(1, 10),
            base_index: 3,
            l_max: 8,
            out: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", k + 1)))?;
            if map.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {}", k + 1, key.trim())));
            }
        }
        let take = |m: &mut BTreeMap<String, String>, k: &str| m.remove(k);
        let kind: ExperimentKind = take(&mut map, "kind")
            .ok_or_else(|| Error::Parse("missing key kind".into()))?
            .parse()?;
        let mut cfg = ExperimentConfig::new(
            kind,
            &take(&mut map, "map").ok_or_else(|| Error::Parse("missing key map".into()))?,
        );
        if let Some(v) = take(&mut map, "radius") {
            cfg.radius = Some(v.parse()?);
        }
        if let Some(v) = take(&mut map, "center") {
            cfg.center = v.parse()?;
        }
        if let Some(v) = take(&mut map, "seeds") {
            cfg.seeds = parse_num(&v)?;
        }
        if let Some(v) = take(&mut map, "master_seed") {
            cfg.master_seed = parse_num(&v)?;
        }
        if let Some(v) = take(&mut map, "checkpoints") {
            cfg.checkpoints = parse_checkpoints(&v)?;
        }
        if let Some(v) = take(&mut map, "horizon_guard") {
            cfg.horizon_guard = match v.as_str() {
                "on" | "true" => true,
                "off" | "false" => false,
                other => return Err(Error::Parse(format!("horizon_guard must be on or off, got {other:?}"))),
            };
        }
        if let Some(v) = take(&mut map, "xi") {
            cfg.xi = v.parse()?;
        }
        if let Some(v) = take(&mut map, "base_index") {
            cfg.base_index = parse_num(&v)?;
        }
        if let Some(v) = take(&mut map, "l_max") {
            cfg.l_max = parse_num(&v)?;
        }
        if let Some(v) = take(&mut map, "out") {
            cfg.out = Some(PathBuf::from(v));
        }
        if let Some(k) = map.keys().next() {
            return Err(Error::Parse(format!("unknown key {k}")));
        }
        if cfg.kind == ExperimentKind::Hits && cfg.radius.is_none() {
            return Err(Error::Parse("hits experiments need a radius".into()));
        }
        if cfg.seeds == 0 {
            return Err(Error::Parse("seeds must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl AssertionResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        AssertionResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedReport {
    pub index: usize,
    pub x: Rational,
    pub x2: Option<Rational>,
    /// `|ratio - 1|`, `|log_ratio - 1|` or the discrepancy, per checkpoint.
    pub deviations: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hits: Option<HitSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undetermined: Option<UndeterminedSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_bad: Option<Vec<ControlBadPoint>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub n: u64,
    pub count: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub map: String,
    pub master_seed: u64,
    pub checkpoints: Vec<u64>,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Vec<AggregateRow>,
    pub assertions: Vec<AssertionResult>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn median_at(&self, k: usize) -> Option<f64> {
        self.aggregate.get(k).map(|a| a.median)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Aggregate row `k` recomputed from per-seed deviations.
pub fn aggregate_at(seeds: &[SeedReport], n: u64, k: usize) -> AggregateRow {
    let mut v: Vec<f64> = seeds
        .iter()
        .filter_map(|s| s.deviations.get(k).copied().flatten())
        .filter(|d| d.is_finite())
        .collect();
    v.sort_by(f64::total_cmp);
    AggregateRow {
        n,
        count: v.len(),
        median: quantile(&v, 0.5),
        q10: quantile(&v, 0.1),
        q90: quantile(&v, 0.9),
        max: v.last().copied().unwrap_or(f64::NAN),
    }
}

fn applicable_checkpoints(cfg: &ExperimentConfig, limit: u64, notes: &mut Vec<String>) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for &n in &cfg.checkpoints {
        if n > limit {
            if cfg.horizon_guard {
                return Err(Error::Horizon {
                    requested: n,
                    horizon: limit,
                });
            }
            notes.push(format!("checkpoint {n} dropped: past the horizon {limit}"));
        } else {
            out.push(n);
        }
    }
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let map = parse_map(&cfg.map, cfg.master_seed)?;
    let mut notes = Vec::new();
    let mut report = match cfg.kind {
        ExperimentKind::Hits => run_hits(cfg, &map, &mut notes)?,
        ExperimentKind::Undetermined => run_undetermined(cfg, &map, &mut notes)?,
        ExperimentKind::Decay => run_decay(cfg, &map)?,
    };
    report.notes.extend(notes);
    report.wall_time = started.elapsed();
    Ok(report)
}

fn finish(cfg: &ExperimentConfig, map: &MapSpec, checkpoints: Vec<u64>, seeds: Vec<SeedReport>, assertions: Vec<AssertionResult>) -> RunReport {
    let aggregate = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &n)| aggregate_at(&seeds, n, k))
        .collect();
    RunReport {
        kind: cfg.kind.clone(),
        map: map.descriptor.clone(),
        master_seed: cfg.master_seed,
        checkpoints,
        seeds,
        aggregate,
        assertions,
        notes: vec![],
        wall_time: Duration::ZERO,
    }
}

fn run_hits(cfg: &ExperimentConfig, map: &MapSpec, notes: &mut Vec<String>) -> Result<RunReport> {
    let spec = cfg.radius.as_ref().ok_or_else(|| Error::Parse("hits experiments need a radius".into()))?;
    let t = &map.iet;
    let mut limit = t.horizon().saturating_sub(1);
    if let Some(k) = spec.max_index() {
        limit = limit.min(k);
    }
    let cps = applicable_checkpoints(cfg, limit, notes)?;
    let Some(&n_max) = cps.last() else {
        return Ok(finish(cfg, map, cps, vec![], vec![]));
    };
    let scales = select_scales(t, &cfg.xi, n_max / 2)?;
    if let Some(w) = &scales.warning {
        notes.push(w.clone());
    }
    let sc = &scales.scales;
    let mut points: Vec<u64> = cps.clone();
    points.extend(dyadic_checkpoints(n_max));
    for (k, &n) in sc.iter().enumerate() {
        points.extend([n - 1, 2 * n, 2 * n - 1]);
        if let Some(&next) = sc.get(k + 1) {
            points.push(next);
        }
    }
    points.retain(|&p| p >= 1 && p <= n_max);
    points.sort_unstable();
    points.dedup();

    let xs = sample_points(cfg.master_seed, cfg.seeds);
    let runs = hit_runs(t, &xs, &cfg.center, spec, &points, 0)?;

    let s_at = |series: &HitSeries, n: u64| -> u64 {
        if n == 0 {
            return 0;
        }
        series.checkpoints.iter().find(|c| c.n == n).map_or(0, |c| c.hits)
    };
    let (mut hit_viol, mut hit_checked) = (0usize, 0usize);
    let (mut max_viol, mut max_checked) = (0usize, 0usize);
    let mut seeds = Vec::with_capacity(xs.len());
    let mut cb_first = 0.0f64;
    let mut cb_last = 0.0f64;
    let cb_first_h = dyadic_floor(cps[0]);
    let cb_last_h = dyadic_floor(n_max);
    for (index, (x, run)) in xs.iter().zip(runs).enumerate() {
        let full = &run.series;
        for (k, &n) in sc.iter().enumerate() {
            if 2 * n > n_max {
                break;
            }
            let g = s_at(full, 2 * n) - s_at(full, n - 1);
            hit_checked += 1;
            if !hit_bound_holds(spec, &cfg.xi, n, g)? {
                hit_viol += 1;
            }
            if let Some(&next) = sc.get(k + 1) {
                if next <= n_max && spec.khinchin() {
                    let between = s_at(full, next) - s_at(full, 2 * n - 1);
                    max_checked += 1;
                    if !max_bound_holds(spec, &cfg.xi, n, next, between)? {
                        max_viol += 1;
                    }
                }
            }
        }
        let cb = control_bad_profile(full, spec)?;
        let at = |h: u64| cb.iter().find(|p| p.horizon == h).map_or(0.0, |p| p.running_max);
        cb_first = cb_first.max(at(cb_first_h));
        cb_last = cb_last.max(at(cb_last_h));
        let kept: Vec<HitCheckpoint> = full
            .checkpoints
            .iter()
            .filter(|c| cps.binary_search(&c.n).is_ok())
            .cloned()
            .collect();
        seeds.push(SeedReport {
            index,
            x: x.clone(),
            x2: None,
            deviations: kept.iter().map(|c| c.ratio_f64().map(|r| (r - 1.0).abs())).collect(),
            hits: Some(HitSeries { checkpoints: kept }),
            undetermined: None,
            decay: None,
            control_bad: Some(cb),
        });
    }
    let mut assertions = vec![
        AssertionResult::new(
            "hit_bound",
            hit_viol == 0,
            format!("{hit_viol} violations in {hit_checked} windows over {} scales", sc.len()),
        ),
        AssertionResult::new(
            "s_monotone",
            seeds.iter().all(|s| {
                s.hits.as_ref().is_some_and(|h| {
                    h.checkpoints.windows(2).all(|w| w[0].hits <= w[1].hits) && h.checkpoints.iter().all(|c| c.hits <= c.n)
                })
            }),
            "S_N non-decreasing and at most N".into(),
        ),
    ];
    if spec.khinchin() {
        assertions.push(AssertionResult::new(
            "max_bound",
            max_viol == 0,
            format!("{max_viol} violations in {max_checked} between-window sums"),
        ));
    }
    if spec.monotone() && cb_last_h > cb_first_h {
        assertions.push(AssertionResult::new(
            "control_bad_doubling",
            cb_last <= 2.0 * cb_first.max(f64::MIN_POSITIVE),
            format!("max over seeds of the running ratio max: {cb_first:.4} by {cb_first_h}, {cb_last:.4} by {cb_last_h}"),
        ));
    }
    Ok(finish(cfg, map, cps, seeds, assertions))
}

fn dyadic_floor(n: u64) -> u64 {
    if n < 2 {
        return 0;
    }
    1u64 << (63 - n.leading_zeros())
}

fn run_undetermined(cfg: &ExperimentConfig, map: &MapSpec, notes: &mut Vec<String>) -> Result<RunReport> {
    let cf = map
        .cf
        .as_ref()
        .ok_or_else(|| Error::Parse("undetermined experiments need a rotation map".into()))?;
    let ctx = AtomContext::from_cf(cf);
    let cps = applicable_checkpoints(cfg, ctx.max_index(), notes)?;
    if cps.is_empty() {
        return Ok(finish(cfg, map, cps, vec![], vec![]));
    }
    let xs = sample_points(cfg.master_seed, cfg.seeds);
    let series: Vec<UndeterminedSeries> = xs
        .par_iter()
        .map(|x| undetermined_series(&ctx, x, &cps))
        .collect::<Result<_>>()?;
    let upper_ok = series.iter().all(|s| s.upper_bounds.iter().all(|c| c.holds));
    let lambda_ok = series.iter().all(|s| s.lambda_windows.iter().all(|c| c.holds));
    let checked: usize = series.iter().map(|s| s.upper_bounds.len()).sum();
    let windows: usize = series.iter().map(|s| s.lambda_windows.len()).sum();
    let seeds = xs
        .into_iter()
        .zip(series)
        .enumerate()
        .map(|(index, (x, s))| SeedReport {
            index,
            x,
            x2: None,
            deviations: s.rows.iter().map(|r| r.log_ratio.map(|v| (v - 1.0).abs())).collect(),
            hits: None,
            undetermined: Some(s),
            decay: None,
            control_bad: None,
        })
        .collect();
    let assertions = vec![
        AssertionResult::new("upper_bound", upper_ok, format!("{checked} checks at n = q_m")),
        AssertionResult::new("lambda_window", lambda_ok, format!("{windows} windows [q_i, q_i+1)")),
    ];
    Ok(finish(cfg, map, cps, seeds, assertions))
}

fn run_decay(cfg: &ExperimentConfig, map: &MapSpec) -> Result<RunReport> {
    let pts = sample_points(cfg.master_seed, 2 * cfg.seeds);
    let profiles: Vec<DecayProfile> = pts
        .par_chunks(2)
        .map(|p| decay_profile(&map.iet, &cfg.xi, cfg.base_index, &p[0], &p[1], cfg.l_max))
        .collect::<Result<_>>()?;
    let cps: Vec<u64> = profiles
        .first()
        .map(|p| p.levels.iter().map(|l| l.horizon).collect())
        .unwrap_or_default();
    let in_unit = profiles
        .iter()
        .all(|p| p.levels.iter().all(|l| !l.discrepancy.is_negative() && l.discrepancy <= Rational::one()));
    let seeds = pts
        .chunks(2)
        .zip(profiles)
        .enumerate()
        .map(|(index, (p, prof))| SeedReport {
            index,
            x: p[0].clone(),
            x2: Some(p[1].clone()),
            deviations: prof.levels.iter().map(|l| Some(l.discrepancy.to_f64())).collect(),
            hits: None,
            undetermined: None,
            decay: Some(prof),
            control_bad: None,
        })
        .collect();
    let assertions = vec![AssertionResult::new("discrepancy_in_unit", in_unit, "every level in [0, 1]".into())];
    Ok(finish(cfg, map, cps, seeds, assertions))
}

/// Writes `report.json`, `aggregate.csv` and one `seed_NNN.csv` per seed.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(b';')
        .from_path(dir.join("aggregate.csv"))?;
    w.write_record(["n", "count", "median", "q10", "q90", "max"])?;
    for a in &report.aggregate {
        w.write_record([
            a.n.to_string(),
            a.count.to_string(),
            format!("{:.9}", a.median),
            format!("{:.9}", a.q10),
            format!("{:.9}", a.q90),
            format!("{:.9}", a.max),
        ])?;
    }
    w.flush()?;
    for s in &report.seeds {
        let file = std::fs::File::create(dir.join(format!("seed_{:03}.csv", s.index)))?;
        if let Some(h) = &s.hits {
            h.write_csv(file)?;
        } else if let Some(u) = &s.undetermined {
            u.write_csv(file)?;
        } else if let Some(d) = &s.decay {
            d.write_csv(file)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_points(7, 50);
        assert_eq!(a, sample_points(7, 50));
        assert_ne!(a, sample_points(8, 50));
        let three = sample_points(1, 3);
        assert_eq!(three.len(), 3);
        assert!(three[0] != three[1] && three[1] != three[2] && three[0] != three[2]);
        assert!(three.iter().all(|x| x.in_unit() && x.denom_unsigned() <= BigUint::from(1u8) << 64u32));
        let cfs = sample_cfs(7, 3, 25, 4);
        assert_eq!(cfs, sample_cfs(7, 3, 25, 4));
        assert!(cfs.iter().all(|c| c.is_canonical()));
    }

    #[test]
    fn config_parsing() {
        let text = "# A3-like\nkind = hits\nmap = golden:60\nradius = harmonic:1/2\nseeds = 4\ncheckpoints = geometric:100,10,3\nhorizon_guard = off\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.checkpoints, vec![100, 1000, 10_000]);
        assert!(!c.horizon_guard);
        assert_eq!(c.master_seed, DEFAULT_MASTER_SEED);
        assert!(ExperimentConfig::parse("kind = hits\nmap = golden:10\n").is_err());
        assert!(ExperimentConfig::parse("kind = hits\nmap = golden:10\nradius = log_harmonic\nbogus = 1\n").is_err());
        assert!(parse_checkpoints("5,3").is_err());
        assert_eq!(parse_checkpoints("list:1,2,30").unwrap(), vec![1, 2, 30]);
        assert!(parse_map("iet:1/3,1/6,1/2|3,1,2", 0).unwrap().cf.is_none());
        assert_eq!(parse_map("alpha:13/21", 0).unwrap().cf.unwrap().quotients(), &[1, 1, 1, 1, 1, 2]);
    }

    #[test]
    fn constant_half_run_is_exact() {
        let mut c = ExperimentConfig::new(ExperimentKind::Hits, "golden:40");
        c.radius = Some(RadiusSpec::Constant(Rational::frac(1, 2)));
        c.seeds = 3;
        c.checkpoints = vec![10, 100, 1000];
        let r = run_experiment(&c).unwrap();
        assert!(r.all_passed(), "{:?}", r.assertions);
        assert!(r.aggregate.iter().all(|a| a.max == 0.0 && a.count == 3));
        for (k, a) in r.aggregate.iter().enumerate() {
            assert_eq!(a, &aggregate_at(&r.seeds, a.n, k));
        }
    }

    #[test]
    fn horizon_guard_behaviour() {
        let mut c = ExperimentConfig::new(ExperimentKind::Hits, "alpha:13/21");
        c.radius = Some(RadiusSpec::Harmonic(Rational::frac(1, 2)));
        c.checkpoints = vec![5, 50];
        assert!(matches!(run_experiment(&c), Err(Error::Horizon { .. })));
        c.horizon_guard = false;
        c.checkpoints = vec![50, 500];
        let r = run_experiment(&c).unwrap();
        assert!(r.seeds.is_empty() && r.aggregate.is_empty());
        assert_eq!(r.notes.len(), 2);
    }
}
