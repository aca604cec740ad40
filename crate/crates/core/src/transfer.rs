//! Coefficient sequences, Dirichlet convolution and the transfer operators.
//!
//! The hat function has the sine expansion `S = sum_k tau_k e_k`, and the
//! sawtooth pair has `C = (8/pi^2) sum cos(2 pi d x) / d^2`,
//! `S = (8/pi^2) sum (-1)^m sin(2 pi d x) / d^2` over odd `d = 2m + 1`.
//! The operators `T` built from these coefficients map the trigonometric
//! systems onto the piecewise-linear ones; in coefficient space they act by
//! Dirichlet convolution.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;

/// `tau_1 = 4 sqrt(2) / pi^2`.
pub const TAU1: f64 = 0.573_159_168_250_756_3;

/// `8 / pi^2`.
pub const EIGHT_OVER_PI2: f64 = 0.810_569_469_138_702_2;

/// Lower Riesz constant `{(4 sqrt 6 / pi^2)(2 - pi^2/8)}^2`.
pub const RIESZ_A: f64 = 0.578_720_370_966_571_8;

/// Upper Riesz constant.
pub const RIESZ_B: f64 = 1.5;

/// Sine coefficient `tau_k = sqrt(2) int_0^1 S(t) sin(k pi t) dt` of the hat.
pub fn tau(k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroDilation);
    }
    Ok(tau_unchecked(k))
}

#[inline]
fn tau_unchecked(k: u64) -> f64 {
    if k % 2 == 0 {
        0.0
    } else {
        let v = TAU1 / (k as f64 * k as f64);
        if (k / 2) % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

/// `tau_m = prod tau_{m_i}`.
pub fn tau_multi(m: &MultiIndex) -> f64 {
    m.entries().iter().map(|&k| tau_unchecked(k)).product()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaKind {
    Cos,
    Sin,
}

/// Fourier coefficient of `C` (cos) or `S` (sin) at frequency `2m + 1`.
pub fn gamma(m: u64, kind: GammaKind) -> f64 {
    let d = (2 * m + 1) as f64;
    let v = EIGHT_OVER_PI2 / (d * d);
    match kind {
        GammaKind::Sin if m % 2 == 1 => -v,
        _ => v,
    }
}

/// Upper bound for `sum_{odd k > L} 1/k^2` with `L` odd: `1 / (2L)`.
pub fn odd_inverse_square_tail(last_odd: u64) -> f64 {
    if last_odd == 0 {
        return f64::INFINITY;
    }
    1.0 / (2.0 * last_odd as f64)
}

/// Largest odd number `<= n` (0 for n = 0).
pub fn last_odd(n: u64) -> u64 {
    if n == 0 {
        0
    } else if n % 2 == 1 {
        n
    } else {
        n - 1
    }
}

/// Real coefficient sequence indexed by positive integers (dim 1) or
/// integer vectors, truncated at `cutoff`, with an l1 bound on what was dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffSeq {
    pub dim: usize,
    pub cutoff: u64,
    #[serde(with = "entry_list")]
    pub entries: BTreeMap<Vec<i64>, f64>,
    /// `None` when no bound is known.
    pub tail_bound: Option<f64>,
}

mod entry_list {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<i64>, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> = m
            .iter()
            .map(|(k, v)| {
                k.iter()
                    .map(|&i| serde_json::Value::from(i))
                    .chain(std::iter::once(serde_json::Value::from(*v)))
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<Vec<i64>, f64>, D::Error> {
        let rows: Vec<Vec<serde_json::Value>> = Vec::deserialize(d)?;
        let mut out = BTreeMap::new();
        for row in rows {
            let (val, idx) = row.split_last().ok_or_else(|| D::Error::custom("empty entry"))?;
            let v = val.as_f64().ok_or_else(|| D::Error::custom("value must be a number"))?;
            let k = idx
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| D::Error::custom("index must be an integer")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            out.insert(k, v);
        }
        Ok(out)
    }
}

impl CoeffSeq {
    pub fn new_1d(cutoff: u64) -> Self {
        Self {
            dim: 1,
            cutoff,
            entries: BTreeMap::new(),
            tail_bound: Some(0.0),
        }
    }

    /// Dense vector `a_1..a_N` as a dim-1 sequence, dropping zeros.
    pub fn from_dense(values: &[f64], tail_bound: Option<f64>) -> Self {
        let mut s = Self::new_1d(values.len() as u64);
        for (i, &v) in values.iter().enumerate() {
            if v != 0.0 {
                s.entries.insert(vec![i as i64 + 1], v);
            }
        }
        s.tail_bound = tail_bound;
        s
    }

    /// `a_1..a_cutoff` as a dense vector (dim 1 only).
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        self.require_1d()?;
        let mut out = vec![0.0; self.cutoff as usize];
        for (k, v) in &self.entries {
            let i = k[0];
            if i >= 1 && i as u64 <= self.cutoff {
                out[i as usize - 1] = *v;
            }
        }
        Ok(out)
    }

    pub fn get(&self, k: u64) -> f64 {
        self.entries.get(&vec![k as i64]).copied().unwrap_or(0.0)
    }

    pub fn l1(&self) -> f64 {
        self.entries.values().map(|v| v.abs()).sum()
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coefficient sequences serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: CoeffSeq = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        if c.entries.keys().any(|k| k.len() != c.dim) {
            return Err(Error::Malformed("index length differs from dim".into()));
        }
        Ok(c)
    }
}

/// `tau_1..tau_N` with the bound `TAU1 / (2L)` on the dropped l1 mass.
pub fn tau_seq(cutoff: u64) -> Result<CoeffSeq> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be >= 1".into()));
    }
    let vals: Vec<f64> = (1..=cutoff).map(tau_unchecked).collect();
    Ok(CoeffSeq::from_dense(&vals, Some(TAU1 * odd_inverse_square_tail(last_odd(cutoff)))))
}

/// `gamma` as a sequence over odd multipliers `d <= cutoff` (index `d`).
pub fn gamma_seq(kind: GammaKind, cutoff: u64) -> Result<CoeffSeq> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be >= 1".into()));
    }
    let vals: Vec<f64> = (1..=cutoff)
        .map(|d| if d % 2 == 1 { gamma((d - 1) / 2, kind) } else { 0.0 })
        .collect();
    Ok(CoeffSeq::from_dense(
        &vals,
        Some(EIGHT_OVER_PI2 * odd_inverse_square_tail(last_odd(cutoff))),
    ))
}

/// Truncated Dirichlet convolution `(a * b)_k = sum_{d | k} a_d b_{k/d}`, `k <= n`.
pub fn dirichlet_convolve(a: &CoeffSeq, b: &CoeffSeq, n: u64) -> Result<CoeffSeq> {
    a.require_1d()?;
    b.require_1d()?;
    if n == 0 {
        return Err(Error::InvalidArgument("cutoff must be >= 1".into()));
    }
    let mut out = vec![0.0; n as usize];
    for (i, va) in &a.entries {
        let i = i[0] as u64;
        if i == 0 || i > n {
            continue;
        }
        for (j, vb) in &b.entries {
            let j = j[0] as u64;
            match i.checked_mul(j) {
                Some(k) if k <= n => out[k as usize - 1] += va * vb,
                Some(_) => break,
                None => break,
            }
        }
    }
    let res = CoeffSeq::from_dense(&out, None);
    let tail = match (a.tail_bound, b.tail_bound) {
        (Some(ta), Some(tb)) => Some(((a.l1() + ta) * (b.l1() + tb) - res.l1()).max(0.0)),
        _ => None,
    };
    Ok(CoeffSeq { tail_bound: tail, ..res })
}

/// Dense Dirichlet inverse `b` with `a * b = delta_1` on `1..=n`.
///
/// `O(n log n)` via forward accumulation over the support of `a`.
pub fn dirichlet_inverse_dense(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let a1 = *a.first().ok_or(Error::Singular)?;
    if a1 == 0.0 {
        return Err(Error::Singular);
    }
    let support: Vec<(usize, f64)> = a
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i + 1, *v))
        .collect();
    let mut inv = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for k in 1..=n {
        let delta = if k == 1 { 1.0 } else { 0.0 };
        let v = (delta - acc[k - 1]) / a1;
        inv[k - 1] = v;
        if v == 0.0 {
            continue;
        }
        for &(d, ad) in &support {
            let Some(m) = d.checked_mul(k) else { break };
            if m > n {
                break;
            }
            acc[m - 1] += ad * v;
        }
    }
    Ok(inv)
}

/// Dirichlet inverse up to `n`. When `a` is dominated by `a_1`
/// (`sum_{k>1} |a_k| + tail < |a_1|`), the stored bound comes from the Neumann series.
pub fn dirichlet_inverse(a: &CoeffSeq, n: u64) -> Result<CoeffSeq> {
    a.require_1d()?;
    if n == 0 {
        return Err(Error::InvalidArgument("cutoff must be >= 1".into()));
    }
    let dense: Vec<f64> = (1..=a.cutoff.min(n)).map(|k| a.get(k)).collect();
    let inv = dirichlet_inverse_dense(&dense, n as usize)?;
    let mut out = CoeffSeq::from_dense(&inv, None);
    let a1 = a.get(1).abs();
    if let Some(t) = a.tail_bound {
        let rest = a.l1() - a1 + t;
        if rest < a1 {
            // ||a^{-1}||_1 <= 1 / (|a_1| - rest)
            out.tail_bound = Some((1.0 / (a1 - rest) - out.l1()).max(0.0));
        }
    }
    Ok(out)
}

/// Which transfer operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `T g(t) = sum_m tau_m g(m t)`
    THat1d,
    /// `T g(x) = sum_m tau_m g(m x)` over `m in N^n`
    TTensor,
    /// `T f(x) = (8/pi^2) [sum_{d = 1 mod 4} f(d x)/d^2 + sum_{d = 3 mod 4} f(d(1 - x))/d^2]`
    TRidge,
}

/// Operator with its truncation: `m` odd terms per axis (multipliers `1, 3, .., 2m - 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub m: u64,
    pub n: usize,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, m: u64, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("truncation M must be >= 1".into()));
        }
        if n == 0 || (kind == OperatorKind::THat1d && n != 1) {
            return Err(Error::InvalidArgument(format!("dimension {n} invalid for {kind:?}")));
        }
        Ok(Self { kind, m, n })
    }

    /// Largest multiplier used.
    pub fn last_multiplier(&self) -> u64 {
        2 * self.m - 1
    }

    /// Bound on the l1 mass of the dropped coefficients.
    pub fn coefficient_tail(&self) -> f64 {
        let l = self.last_multiplier();
        match self.kind {
            OperatorKind::THat1d => TAU1 * odd_inverse_square_tail(l),
            OperatorKind::TTensor => {
                let partial: f64 = (1..=l).step_by(2).map(|k| tau_unchecked(k).abs()).sum();
                let t = TAU1 * odd_inverse_square_tail(l);
                (partial + t).powi(self.n as i32) - partial.powi(self.n as i32)
            }
            OperatorKind::TRidge => EIGHT_OVER_PI2 * odd_inverse_square_tail(l),
        }
    }
}

/// Truncated operator value with its error bound `tail * sup|f|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TValue {
    pub value: f64,
    pub error_bound: f64,
}

/// Evaluates the truncated `T f` at `x`.
///
/// `f` must already carry the extension the operator expects: odd and
/// 2-periodic per axis for the hat and tensor kinds (see
/// [`odd_periodic_extension`]), 1-periodic for the ridge kind.
pub fn apply_t(spec: &OperatorSpec, f: &dyn Fn(&[f64]) -> f64, x: &[f64], sup_f: f64) -> Result<TValue> {
    if x.len() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            got: x.len(),
        });
    }
    let l = spec.last_multiplier();
    let mut y = vec![0.0; spec.n];
    let value = match spec.kind {
        OperatorKind::THat1d => {
            let mut acc = 0.0;
            // Smallest terms first.
            for k in (1..=l).rev().step_by(2) {
                y[0] = k as f64 * x[0];
                acc += tau_unchecked(k) * f(&y);
            }
            acc
        }
        OperatorKind::TTensor => {
            let terms = (spec.m as u128).checked_pow(spec.n as u32).unwrap_or(u128::MAX);
            if terms > 1 << 32 {
                return Err(Error::SizeGuard(format!("{terms} tensor terms")));
            }
            let mut idx = vec![1u64; spec.n];
            let mut acc = 0.0;
            loop {
                let mut c = 1.0;
                for i in 0..spec.n {
                    c *= tau_unchecked(idx[i]);
                    y[i] = idx[i] as f64 * x[i];
                }
                acc += c * f(&y);
                let mut i = 0;
                loop {
                    if i == spec.n {
                        return Ok(TValue {
                            value: acc,
                            error_bound: spec.coefficient_tail() * sup_f,
                        });
                    }
                    idx[i] += 2;
                    if idx[i] <= l {
                        break;
                    }
                    idx[i] = 1;
                    i += 1;
                }
            }
        }
        OperatorKind::TRidge => {
            let mut acc = 0.0;
            for d in (1..=l).rev().step_by(2) {
                let df = d as f64;
                if d % 4 == 1 {
                    for i in 0..spec.n {
                        y[i] = df * x[i];
                    }
                } else {
                    for i in 0..spec.n {
                        y[i] = df * (1.0 - x[i]);
                    }
                }
                acc += f(&y) / (df * df);
            }
            EIGHT_OVER_PI2 * acc
        }
    };
    Ok(TValue {
        value,
        error_bound: spec.coefficient_tail() * sup_f,
    })
}

/// Odd, 2-periodic extension of a function given on `[0, 1]`, per axis.
pub fn odd_periodic_extension<F: Fn(&[f64]) -> f64>(f: F) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let mut sign = 1.0;
        let y: Vec<f64> = x
            .iter()
            .map(|&t| {
                let s = t.rem_euclid(2.0);
                if s <= 1.0 {
                    s
                } else {
                    sign = -sign;
                    2.0 - s
                }
            })
            .collect();
        sign * f(&y)
    }
}

/// 1-periodic extension of a function given on `[0, 1)^n`.
pub fn periodic_extension<F: Fn(&[f64]) -> f64>(f: F) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|t| t.rem_euclid(1.0)).collect();
        f(&y)
    }
}

/// Operator norm bound and the contraction factor of the Neumann remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormBound {
    pub norm_bound: f64,
    /// `||M|| / a` where `T = a (Id - M/a)`; the Neumann series converges iff `< 1`.
    pub contraction: f64,
}

pub fn operator_norm_bound(spec: &OperatorSpec) -> NormBound {
    let p = PI * PI / 8.0;
    match spec.kind {
        OperatorKind::THat1d | OperatorKind::TTensor => NormBound {
            norm_bound: SQRT_2.powi(-(spec.n as i32)),
            contraction: p.powi(spec.n as i32) - 1.0,
        },
        OperatorKind::TRidge => NormBound {
            norm_bound: 1.0,
            contraction: p - 1.0,
        },
    }
}

/// `sum_{k != 1} |tau_{2k-1}| < |tau_1|` in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub n: u32,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs = (pi^2/8)^n - 1`
    pub ratio: f64,
    pub holds: bool,
}

pub fn schauder_criterion(n: u32) -> Result<Criterion> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let rhs = TAU1.powi(n as i32);
    let ratio = (PI * PI / 8.0).powi(n as i32) - 1.0;
    Ok(Criterion {
        n,
        lhs: rhs * ratio,
        rhs,
        ratio,
        holds: ratio < 1.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszKind {
    Hat1d,
    RidgeN,
}

/// Riesz constants from `A >= (a - ||M||)^2`, `B <= 3 ||T||^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RieszConstants {
    pub a_lower: f64,
    pub b_upper: f64,
    /// Leading coefficient of the normalized operator.
    pub a: f64,
    pub m_norm: f64,
}

pub fn riesz_constants_via_neumann(kind: RieszKind) -> RieszConstants {
    let a = match kind {
        RieszKind::Hat1d => 3f64.sqrt() * TAU1,
        RieszKind::RidgeN => (1.5f64).sqrt() * EIGHT_OVER_PI2,
    };
    let m_norm = a * (PI * PI / 8.0 - 1.0);
    RieszConstants {
        a_lower: (a - m_norm).powi(2),
        b_upper: 3.0 * 0.5,
        a,
        m_norm,
    }
}
