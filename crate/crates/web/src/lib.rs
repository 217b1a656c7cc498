//! Browser bindings. Each operation takes plain strings and returns a JSON
//! document, so the same functions are callable from native tests.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use shrinklab::coding::{build_towers, check_towers};
use shrinklab::harness::{parse_checkpoints, parse_map, DEFAULT_MASTER_SEED};
use shrinklab::numbers::Rational;
use shrinklab::targets::{hit_ratio_series, RadiusSpec};

const MAX_ORBIT: u64 = 20_000;
const MAX_TOWER_N: usize = 2_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rational(s: &str) -> Result<Rational, String> {
    s.trim().parse::<Rational>().map_err(err)
}

/// Orbit of `x` for `n` steps plus the sorted gaps between the visited points.
pub fn orbit_json(map: &str, x: &str, n: u64) -> Result<Value, String> {
    if n > MAX_ORBIT {
        return Err(format!("n is capped at {MAX_ORBIT} in the browser"));
    }
    let t = parse_map(map, DEFAULT_MASTER_SEED).map_err(err)?.iet;
    t.check_horizon(n).map_err(err)?;
    let mut p = rational(x)?;
    let mut pts = Vec::with_capacity(n as usize + 1);
    for _ in 0..=n {
        pts.push(p.clone());
        p = t.apply(&p, 1);
    }
    let mut sorted = pts.clone();
    sorted.sort();
    let mut gaps: Vec<Rational> = sorted.windows(2).map(|w| w[1].clone() - &w[0]).collect();
    gaps.push(Rational::one() - &sorted[sorted.len() - 1] + &sorted[0]);
    let mut distinct: Vec<String> = gaps.iter().map(|g| g.to_string()).collect();
    distinct.sort();
    distinct.dedup();
    Ok(json!({
        "points": pts.iter().map(|p| p.to_f64()).collect::<Vec<_>>(),
        "distinct_gaps": distinct,
        "min_gap": gaps.iter().min().map(|g| g.to_f64()),
    }))
}

/// Hit counts and ratios `S_N / E_N` for a ball around `center`.
pub fn hits_json(map: &str, radius: &str, center: &str, x: &str, checkpoints: &str) -> Result<Value, String> {
    let t = parse_map(map, DEFAULT_MASTER_SEED).map_err(err)?.iet;
    if radius.contains('@') {
        return Err("radius tables must be inline in the browser".into());
    }
    let spec: RadiusSpec = radius.parse().map_err(err)?;
    let cps = parse_checkpoints(checkpoints).map_err(err)?;
    if cps.last().is_some_and(|&n| n > 10_000_000) {
        return Err("checkpoints are capped at 10^7 in the browser".into());
    }
    let s = hit_ratio_series(&t, &rational(x)?, &rational(center)?, &spec, &cps).map_err(err)?;
    let rows: Vec<Value> = s
        .checkpoints
        .iter()
        .map(|c| json!({"n": c.n, "hits": c.hits, "expected": c.expected.mid().to_f64(), "ratio": c.ratio_f64()}))
        .collect();
    Ok(json!({ "rows": rows }))
}

/// Rokhlin towers over the `n`-blocks with their levels and the exact checks.
pub fn towers_json(map: &str, n: usize) -> Result<Value, String> {
    if n > MAX_TOWER_N {
        return Err(format!("n is capped at {MAX_TOWER_N} in the browser"));
    }
    let t = parse_map(map, DEFAULT_MASTER_SEED).map_err(err)?.iet;
    let towers = build_towers(&t, n).map_err(err)?;
    let check = check_towers(&t, &towers, n);
    let list: Vec<Value> = towers
        .iter()
        .map(|tw| {
            json!({
                "base_left": tw.base.left().to_f64(),
                "width": tw.base.length().to_f64(),
                "height": tw.height,
                "levels": tw.levels(&t).iter().map(|(a, _)| a.to_f64()).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({ "towers": list, "check": check }))
}

fn wrap(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn orbit(map: &str, x: &str, n: u32) -> Result<String, JsError> {
    wrap(orbit_json(map, x, n as u64))
}

#[wasm_bindgen]
pub fn hits(map: &str, radius: &str, center: &str, x: &str, checkpoints: &str) -> Result<String, JsError> {
    wrap(hits_json(map, radius, center, x, checkpoints))
}

#[wasm_bindgen]
pub fn towers(map: &str, n: u32) -> Result<String, JsError> {
    wrap(towers_json(map, n as usize))
}
