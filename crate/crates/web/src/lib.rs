//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain scalars/strings and returns a JSON string, so the
//! page needs no generated TypeScript glue beyond `JSON.parse`.

use pwlbasis::expand::{self, BasisTag, Target};
use pwlbasis::gram::{self, GramSystem};
use pwlbasis::index::canonicalize;
use pwlbasis::pwl::{eval_dilated, eval_ridge, Family};
use pwlbasis::relu;
use pwlbasis::transfer::{RIESZ_A, RIESZ_B};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 1 << 14;
const MAX_GRAM: u64 = 512;
const MAX_TERMS: u64 = 4096;

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "C" | "c" => Ok(Family::CSaw),
        "S" | "s" => Ok(Family::SSaw),
        "hat" => Ok(Family::Hat),
        other => Err(format!("unknown family '{other}'")),
    }
}

fn parse_freq(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<i64>().map_err(|e| format!("bad frequency '{v}': {e}")))
        .collect()
}

fn check_points(points: usize) -> Result<(), String> {
    if (2..=MAX_POINTS).contains(&points) {
        Ok(())
    } else {
        Err(format!("points must be in 2..={MAX_POINTS}"))
    }
}

/// Points on the diagonal segment `x(t) = (t, ..., t)` so ridge functions in any dimension plot as curves.
fn diagonal(dim: usize, points: usize) -> Vec<(f64, Vec<f64>)> {
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (t, vec![t; dim])
        })
        .collect()
}

/// Samples `family(k . x)` along the diagonal of the unit cube together with
/// its compiled ReLU network.
pub fn sample_basis_value(family: &str, k: &str, points: usize) -> Result<Value, String> {
    let family = parse_family(family)?;
    let k = parse_freq(k)?;
    check_points(points)?;
    let net = if k.len() == 1 && k[0] > 0 {
        relu::compile_univariate(family, k[0] as u64)
    } else {
        let (canon, _) = canonicalize(&k).map_err(|e| e.to_string())?;
        if canon.entries() != k.as_slice() {
            return Err(format!("frequency must be canonical, e.g. {:?}", canon.entries()));
        }
        relu::compile_ridge(family, &canon)
    }
    .map_err(|e| e.to_string())?;
    let mut t = Vec::with_capacity(points);
    let mut direct = Vec::with_capacity(points);
    let mut network = Vec::with_capacity(points);
    let mut worst: f64 = 0.0;
    for (s, x) in diagonal(k.len(), points) {
        let d = if k.len() == 1 && k[0] > 0 {
            eval_dilated(family, k[0] as u64, x[0])
        } else {
            eval_ridge(family, &k, &x)
        }
        .map_err(|e| e.to_string())?;
        let n = relu::net_eval(&net, &x).map_err(|e| e.to_string())?;
        worst = worst.max((d - n).abs());
        t.push(s);
        direct.push(d);
        network.push(n);
    }
    Ok(json!({
        "t": t,
        "direct": direct,
        "relu": network,
        "hidden_units": net.hidden_size(),
        "max_deviation": worst,
    }))
}

/// Sorted spectrum of a normalized truncated Gram matrix and the Riesz interval it must lie in.
pub fn gram_spectrum_value(system: &str, n: u64) -> Result<Value, String> {
    if !(1..=MAX_GRAM).contains(&n) {
        return Err(format!("size must be in 1..={MAX_GRAM}"));
    }
    let sys = match system {
        "r1c" => GramSystem::R1C { n },
        "r1s" => GramSystem::R1S { n },
        "r1" => GramSystem::R1Full { n },
        "hat" => GramSystem::Hat { n },
        "rn2" => GramSystem::Rn { dim: 2, bound: n.min(8) },
        other => return Err(format!("unknown system '{other}'")),
    };
    let g = gram::gram(&sys, false).map_err(|e| e.to_string())?;
    let mut ev = g.spectrum().map_err(|e| e.to_string())?;
    ev.sort_by(f64::total_cmp);
    Ok(json!({
        "size": g.size(),
        "eigenvalues": ev,
        "lambda_min": ev.first(),
        "lambda_max": ev.last(),
        "riesz_a": RIESZ_A,
        "riesz_b": RIESZ_B,
    }))
}

/// Partial sum of the hat-basis expansion of `target` with `n` terms.
pub fn hat_partial_sum_value(target: &str, n: u64, points: usize) -> Result<Value, String> {
    if !(1..=MAX_TERMS).contains(&n) {
        return Err(format!("terms must be in 1..={MAX_TERMS}"));
    }
    check_points(points)?;
    let f: Target = target.parse().map_err(|e: pwlbasis::Error| e.to_string())?;
    if f.dim() != 1 {
        return Err("the demo plots univariate targets only".into());
    }
    let e = expand::expand(&f, BasisTag::Hat, n).map_err(|e| e.to_string())?;
    let grid = diagonal(1, points);
    let mut t = Vec::with_capacity(points);
    let mut exact = Vec::with_capacity(points);
    let mut partial = Vec::with_capacity(points);
    let mut sq = 0.0;
    for (s, x) in &grid {
        let a = f.eval(x);
        let p = e.eval(x).map_err(|e| e.to_string())?;
        sq += (a - p).powi(2);
        t.push(*s);
        exact.push(a);
        partial.push(p);
    }
    let coeffs: Vec<f64> = (1..=n.min(64)).map(|k| e.coeffs.get(k)).collect();
    Ok(json!({
        "t": t,
        "target": exact,
        "partial_sum": partial,
        "rms_error": (sq / points as f64).sqrt(),
        "leading_coefficients": coeffs,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample_basis(family: &str, k: &str, points: usize) -> Result<String, JsValue> {
    to_js(sample_basis_value(family, k, points))
}

#[wasm_bindgen]
pub fn gram_spectrum(system: &str, n: u32) -> Result<String, JsValue> {
    to_js(gram_spectrum_value(system, u64::from(n)))
}

#[wasm_bindgen]
pub fn hat_partial_sum(target: &str, n: u32, points: usize) -> Result<String, JsValue> {
    to_js(hat_partial_sum_value(target, u64::from(n), points))
}
