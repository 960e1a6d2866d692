// SPDX-License-Identifier: Apache-2.0

//! Browser bindings. Every export returns a JSON string so the page needs
//! nothing beyond `JSON.parse`.

use iwastat::arith::FundamentalDiscriminant;
use iwastat::classgroup::ClassGroup;
use iwastat::{cldensity, iwasawa, randmatrix};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest `|Δ|` the page accepts, to keep the tab responsive.
pub const MAX_ABS_DELTA: u64 = 10_000_000;
/// Largest `|Δ|` for `λ`, whose cost grows like `|Δ| p^{n+1}`.
pub const MAX_LAMBDA_DELTA: u64 = 20_000;
pub const MAX_MATRIX_WORK: u64 = 50_000_000;

fn field(delta: i64, limit: u64) -> Result<FundamentalDiscriminant, String> {
    let d = FundamentalDiscriminant::new(delta).map_err(|e| e.to_string())?;
    if d.abs() > limit {
        return Err(format!("|Δ| is limited to {limit} here"));
    }
    Ok(d)
}

pub fn class_group_json(delta: i64) -> Result<String, String> {
    let d = field(delta, MAX_ABS_DELTA)?;
    let g = ClassGroup::new(d).map_err(|e| e.to_string())?;
    let s = g.structure().map_err(|e| e.to_string())?;
    let forms: Vec<_> = g
        .forms()
        .iter()
        .take(200)
        .map(|f| [f.a, f.b, f.c])
        .collect();
    let ranks: Vec<_> = [3u64, 5, 7]
        .iter()
        .map(|&p| json!({ "p": p, "r": s.p_rank(p) }))
        .collect();
    Ok(json!({
        "delta": d.value(),
        "h": g.class_number(),
        "divisors": s.divisors(),
        "ranks": ranks,
        "forms": forms,
    })
    .to_string())
}

pub fn lambda_json(delta: i64, p: u32) -> Result<String, String> {
    let d = field(delta, MAX_LAMBDA_DELTA)?;
    let r = iwasawa::lambda_invariant(d, p as u64, iwasawa::DEFAULT_MAX_LEVEL)
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "delta": d.value(),
        "p": p,
        "splitting": d.splitting(p as u64).to_string(),
        "lambda": r.lambda,
        "stable": r.stable,
        "method": r.method.to_string(),
        "level_used": r.level_used,
    })
    .to_string())
}

pub fn densities_json(p: u32, n: u32) -> Result<String, String> {
    let p = p as u64;
    let err = |e: cldensity::DensityError| e.to_string();
    let rows: Result<Vec<_>, String> = (0..=n)
        .map(|k| {
            let v = cldensity::density_rank_exact(p, k).map_err(err)?;
            Ok(json!({ "rank": k, "value": v.value, "error_bound": v.error_bound }))
        })
        .collect();
    let ge = if n >= 1 {
        Some(cldensity::lambda_lower_bound(p, n).map_err(err)?)
    } else {
        None
    };
    Ok(json!({
        "p": p,
        "n": n,
        "rank_exact": rows?,
        "lambda_lower_bound": ge.map(|v| json!({ "value": v.value, "error_bound": v.error_bound })),
    })
    .to_string())
}

pub fn corank_json(p: u32, size: u32, trials: u32, seed: u32) -> Result<String, String> {
    let work = (size as u64).pow(3) * trials as u64;
    if work > MAX_MATRIX_WORK {
        return Err(format!(
            "size³ × trials is limited to {MAX_MATRIX_WORK} here"
        ));
    }
    let h = randmatrix::sample_corank_distribution(p as u64, size, trials as u64, seed as u64)
        .map_err(|e| e.to_string())?;
    let rows = h.rows().map_err(|e| e.to_string())?;
    let tv = h.total_variation().map_err(|e| e.to_string())?;
    Ok(json!({ "p": p, "size": size, "trials": trials, "seed": seed, "rows": rows, "total_variation": tv }).to_string())
}

#[wasm_bindgen(js_name = classGroup)]
pub fn class_group(delta: f64) -> Result<String, JsError> {
    class_group_json(delta as i64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lambda(delta: f64, p: u32) -> Result<String, JsError> {
    lambda_json(delta as i64, p).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn densities(p: u32, n: u32) -> Result<String, JsError> {
    densities_json(p, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = corankHistogram)]
pub fn corank_histogram(p: u32, size: u32, trials: u32, seed: u32) -> Result<String, JsError> {
    corank_json(p, size, trials, seed).map_err(|e| JsError::new(&e))
}
