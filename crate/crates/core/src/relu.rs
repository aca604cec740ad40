//! Exact one-hidden-layer ReLU networks for the sawtooth and hat dilations
//! and their ridge versions.
//!
//! A piecewise-linear `g` on `[lo, hi]` with kinks `p_i` is
//! `g(lo) + s_0 ReLU(u - lo) + sum (s_i - s_{i-1}) ReLU(u - p_i)`; with
//! `u = k . x` every hidden unit has direction `k` and bias `-p_i`. All kinks
//! are multiples of 1/4 and all slope changes are small integers, so the
//! weights are exact in binary64.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{FreqIndex, MultiIndex};
use crate::pwl::{eval_base_exact, eval_ridge, Family, PwlPeriodic};

/// Largest univariate dilation accepted by [`compile_univariate`].
pub const MAX_UNIVARIATE_DILATION: u64 = 1 << 14;
/// Largest `|k|_1` accepted by [`compile_ridge`].
pub const MAX_RIDGE_L1: u64 = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenUnit {
    pub w: Vec<f64>,
    pub b: f64,
}

/// `net(x) = c0 + sum c_i max(0, w_i . x + b_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNet {
    pub input_dim: usize,
    pub hidden: Vec<HiddenUnit>,
    pub c: Vec<f64>,
    pub c0: f64,
}

impl ReluNet {
    pub fn zero(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: Vec::new(),
            c: Vec::new(),
            c0: 0.0,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.len() != self.hidden.len() {
            return Err(Error::Malformed(format!(
                "{} output coefficients for {} hidden units",
                self.c.len(),
                self.hidden.len()
            )));
        }
        for u in &self.hidden {
            if u.w.len() != self.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim,
                    got: u.w.len(),
                });
            }
        }
        let all = self
            .hidden
            .iter()
            .flat_map(|u| u.w.iter().chain(std::iter::once(&u.b)))
            .chain(&self.c)
            .chain(std::iter::once(&self.c0));
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("non-finite weight".into()));
        }
        Ok(())
    }

    /// Linear regions of a univariate net on `[0, 1]`.
    pub fn linear_regions_on_unit(&self) -> usize {
        let mut kinks: Vec<f64> = self
            .hidden
            .iter()
            .zip(&self.c)
            .filter(|(u, c)| **c != 0.0 && u.w[0] != 0.0)
            .map(|(u, _)| -u.b / u.w[0])
            .filter(|t| *t > 0.0 && *t < 1.0)
            .collect();
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        kinks.len() + 1
    }
}

/// Evaluates the network in binary64.
pub fn net_eval(net: &ReluNet, x: &[f64]) -> Result<f64> {
    if x.len() != net.input_dim {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim,
            got: x.len(),
        });
    }
    let mut acc = net.c0;
    for (u, c) in net.hidden.iter().zip(&net.c) {
        let pre: f64 = u.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + u.b;
        acc += c * pre.max(0.0);
    }
    Ok(acc)
}

fn exact(v: f64) -> BigRational {
    BigRational::from_f64(v).expect("finite weight")
}

/// Evaluates the network in exact rational arithmetic.
pub fn net_eval_exact(net: &ReluNet, x: &[BigRational]) -> Result<BigRational> {
    if x.len() != net.input_dim {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim,
            got: x.len(),
        });
    }
    net.validate()?;
    let mut acc = exact(net.c0);
    for (u, c) in net.hidden.iter().zip(&net.c) {
        let mut pre = exact(u.b);
        for (w, v) in u.w.iter().zip(x) {
            pre += exact(*w) * v;
        }
        if pre.is_positive() {
            acc += exact(*c) * pre;
        }
    }
    Ok(acc)
}

fn ratio_f64(r: &Ratio<i64>) -> f64 {
    // denominators are 1, 2 or 4 and numerators are far below 2^53
    *r.numer() as f64 / *r.denom() as f64
}

/// Net for `family(u)` with `u = k . x`, where `u` ranges over `[lo, hi]`.
fn compile_on_range(family: Family, k: &[i64], lo: i64, hi: i64) -> ReluNet {
    let kl = PwlPeriodic::base(family).kinks_in(lo, hi);
    let w: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    let mut hidden = vec![HiddenUnit {
        w: w.clone(),
        b: -(lo as f64),
    }];
    let mut c = vec![ratio_f64(&kl.start_slope)];
    for (p, ds) in &kl.kinks {
        hidden.push(HiddenUnit {
            w: w.clone(),
            b: -ratio_f64(p),
        });
        c.push(ratio_f64(ds));
    }
    ReluNet {
        input_dim: k.len(),
        hidden,
        c,
        c0: ratio_f64(&kl.start_value),
    }
}

/// Exact net for `family(k t)` on `[0, 1]`.
pub fn compile_univariate(family: Family, k: u64) -> Result<ReluNet> {
    if k == 0 {
        return Err(Error::ZeroDilation);
    }
    if k > MAX_UNIVARIATE_DILATION {
        return Err(Error::SizeGuard(format!("dilation {k} exceeds {MAX_UNIVARIATE_DILATION}")));
    }
    Ok(compile_on_range(family, &[k as i64], 0, k as i64))
}

/// Exact net for `family(k . x)` on `[0, 1]^n`.
pub fn compile_ridge(family: Family, k: &FreqIndex) -> Result<ReluNet> {
    if !family.is_sawtooth() {
        return Err(Error::Unsupported("ridge functions are built from the C and S families".into()));
    }
    let e = k.entries();
    if e.iter().all(|&v| v == 0) {
        return Err(Error::ZeroFrequency);
    }
    let l1: u64 = e.iter().map(|v| v.unsigned_abs()).sum();
    if l1 > MAX_RIDGE_L1 {
        return Err(Error::SizeGuard(format!("|k|_1 = {l1} exceeds {MAX_RIDGE_L1}")));
    }
    let lo: i64 = e.iter().map(|&v| v.min(0)).sum();
    let hi: i64 = e.iter().map(|&v| v.max(0)).sum();
    Ok(compile_on_range(family, e, lo, hi))
}

/// Tensor-product elements are refused for `n >= 2`: a shallow ReLU network
/// cannot reproduce the multiplication of its inputs.
pub fn compile_tensor(family: Family, m: &MultiIndex) -> Result<ReluNet> {
    if m.len() == 1 {
        return compile_univariate(family, m.entries()[0]);
    }
    Err(Error::Unsupported(
        "tensor-product elements have no exact shallow ReLU network (ReLU networks cannot reproduce the multiplication function)".into(),
    ))
}

/// Largest `|net - family(k . x)|` over the exact rational nodes
/// `x_i = j_i / den`, `0 <= j_i <= den`; zero means the compilation is exact.
pub fn exact_replay_defect(net: &ReluNet, family: Family, k: &[i64], den: i64, max_nodes: usize) -> Result<BigRational> {
    let n = k.len();
    if n != net.input_dim || den < 1 {
        return Err(Error::InvalidArgument("replay needs matching dimension and den >= 1".into()));
    }
    let side = (den + 1) as usize;
    let total = side.checked_pow(n as u32).filter(|&t| t <= max_nodes).ok_or_else(|| Error::SizeGuard("replay grid too large".into()))?;
    let mut worst = BigRational::zero();
    let d = BigInt::from(den);
    for idx in 0..total {
        let mut rem = idx;
        let mut x = Vec::with_capacity(n);
        let mut u = BigRational::zero();
        for &ki in k {
            let j = (rem % side) as i64;
            rem /= side;
            let xi = BigRational::new(BigInt::from(j), d.clone());
            u += &xi * BigInt::from(ki);
            x.push(xi);
        }
        let diff = (net_eval_exact(net, &x)? - eval_base_exact(family, &u)).abs();
        if diff > worst {
            worst = diff;
        }
    }
    Ok(worst)
}

/// Largest binary64 deviation from direct evaluation over `points`.
pub fn max_deviation(net: &ReluNet, family: Family, k: &[i64], points: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in points {
        let direct = if k.len() == 1 && !family.is_sawtooth() {
            family.value(k[0] as f64 * x[0])
        } else {
            eval_ridge(family, k, x)?
        };
        worst = worst.max((net_eval(net, x)? - direct).abs());
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
struct UnitJson {
    w: Vec<f64>,
    w_hex: Vec<String>,
    b: f64,
    b_hex: String,
}

#[derive(Serialize, Deserialize)]
struct OutputJson {
    c: Vec<f64>,
    c_hex: Vec<String>,
    c0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c0_hex: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    input_dim: usize,
    hidden: Vec<UnitJson>,
    output: OutputJson,
}

pub fn to_hex(v: f64) -> String {
    format!("0x{:016x}", v.to_bits())
}

pub fn from_hex(s: &str) -> Result<f64> {
    let digits = s
        .strip_prefix("0x")
        .filter(|d| d.len() == 16)
        .ok_or_else(|| Error::Malformed(format!("bad hex weight '{s}'")))?;
    let bits = u64::from_str_radix(digits, 16).map_err(|_| Error::Malformed(format!("bad hex weight '{s}'")))?;
    Ok(f64::from_bits(bits))
}

/// Hex is authoritative; the decimal copy must agree bit for bit.
fn checked(dec: f64, hex: &str) -> Result<f64> {
    let v = from_hex(hex)?;
    if !v.is_finite() {
        return Err(Error::Malformed("non-finite weight".into()));
    }
    if v.to_bits() != dec.to_bits() {
        return Err(Error::Malformed(format!("decimal {dec:e} and hex {hex} disagree")));
    }
    Ok(v)
}

pub fn export_json(net: &ReluNet) -> Result<String> {
    net.validate()?;
    let j = NetJson {
        input_dim: net.input_dim,
        hidden: net
            .hidden
            .iter()
            .map(|u| UnitJson {
                w: u.w.clone(),
                w_hex: u.w.iter().map(|v| to_hex(*v)).collect(),
                b: u.b,
                b_hex: to_hex(u.b),
            })
            .collect(),
        output: OutputJson {
            c: net.c.clone(),
            c_hex: net.c.iter().map(|v| to_hex(*v)).collect(),
            c0: net.c0,
            c0_hex: Some(to_hex(net.c0)),
        },
    };
    Ok(serde_json::to_string_pretty(&j).expect("nets serialize"))
}

pub fn import_json(s: &str) -> Result<ReluNet> {
    let j: NetJson = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut hidden = Vec::with_capacity(j.hidden.len());
    for u in &j.hidden {
        if u.w.len() != u.w_hex.len() {
            return Err(Error::Malformed("w and w_hex lengths differ".into()));
        }
        let w = u.w.iter().zip(&u.w_hex).map(|(d, h)| checked(*d, h)).collect::<Result<_>>()?;
        hidden.push(HiddenUnit {
            w,
            b: checked(u.b, &u.b_hex)?,
        });
    }
    let o = &j.output;
    if o.c.len() != o.c_hex.len() {
        return Err(Error::Malformed("c and c_hex lengths differ".into()));
    }
    let c = o.c.iter().zip(&o.c_hex).map(|(d, h)| checked(*d, h)).collect::<Result<_>>()?;
    let c0 = match &o.c0_hex {
        Some(h) => checked(o.c0, h)?,
        None => o.c0,
    };
    let net = ReluNet {
        input_dim: j.input_dim,
        hidden,
        c,
        c0,
    };
    net.validate()?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(m: usize) -> Vec<Vec<f64>> {
        (0..=m).map(|i| vec![i as f64 / m as f64]).collect()
    }

    #[test]
    fn univariate_examples() {
        let c1 = compile_univariate(Family::CSaw, 1).unwrap();
        assert_eq!(net_eval(&c1, &[0.0]).unwrap(), 1.0);
        assert_eq!(net_eval(&c1, &[0.5]).unwrap(), -1.0);
        assert_eq!(net_eval(&c1, &[1.0]).unwrap(), 1.0);
        assert!((net_eval(&c1, &[0.3]).unwrap() + 0.2).abs() < 1e-15);
        let kinks: Vec<f64> = c1.hidden.iter().map(|u| -u.b / u.w[0]).collect();
        assert_eq!(kinks, vec![0.0, 0.5]);

        let h = compile_univariate(Family::Hat, 1).unwrap();
        assert_eq!(net_eval(&h, &[0.5]).unwrap(), 1.0);
        assert_eq!(net_eval(&h, &[0.25]).unwrap(), 0.5);

        let s3 = compile_univariate(Family::SSaw, 3).unwrap();
        assert!(max_deviation(&s3, Family::SSaw, &[3], &grid(100_000)).unwrap() <= 1e-12);
    }

    #[test]
    fn hidden_size_and_regions() {
        for family in Family::ALL {
            for k in 1..=32u64 {
                let net = compile_univariate(family, k).unwrap();
                let interior = match family {
                    Family::CSaw => 2 * k - 1,
                    Family::SSaw => 2 * k,
                    Family::Hat => k,
                } as usize;
                assert_eq!(net.hidden_size(), interior + 1, "{family} {k}");
                let regions = net.linear_regions_on_unit();
                assert!(regions == 2 * k as usize || regions == 2 * k as usize + 1 || family == Family::Hat);
                assert_eq!(regions, interior + 1);
            }
        }
    }

    #[test]
    fn exact_replay_is_zero() {
        for family in Family::ALL {
            for k in [1u64, 2, 3, 7] {
                let net = compile_univariate(family, k).unwrap();
                assert!(exact_replay_defect(&net, family, &[k as i64], 96, 1 << 20).unwrap().is_zero());
            }
        }
        for k in [vec![1, 1], vec![2, -1], vec![0, 3]] {
            for family in [Family::CSaw, Family::SSaw] {
                let net = compile_ridge(family, &FreqIndex::canonical(k.clone()).unwrap()).unwrap();
                assert!(exact_replay_defect(&net, family, &k, 24, 1 << 20).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn ridge_examples() {
        let e = FreqIndex::canonical(vec![1, 0]).unwrap();
        let net = compile_ridge(Family::CSaw, &e).unwrap();
        let uni = compile_univariate(Family::CSaw, 1).unwrap();
        for t in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert_eq!(net_eval(&net, &[t, 0.9]).unwrap(), net_eval(&uni, &[t]).unwrap());
        }
        let net = compile_ridge(Family::CSaw, &FreqIndex::canonical(vec![1, 1]).unwrap()).unwrap();
        assert_eq!(net_eval(&net, &[0.25, 0.25]).unwrap(), -1.0);

        let k = vec![2, -1, 3];
        let net = compile_ridge(Family::SSaw, &FreqIndex::canonical(k.clone()).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..100_000).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        assert!(max_deviation(&net, Family::SSaw, &k, &pts).unwrap() <= 1e-12);
    }

    #[test]
    fn refusals_and_guards() {
        assert!(matches!(compile_univariate(Family::CSaw, 0), Err(Error::ZeroDilation)));
        assert!(matches!(compile_univariate(Family::CSaw, (1 << 14) + 1), Err(Error::SizeGuard(_))));
        let big = FreqIndex::canonical(vec![4096, 1]).unwrap();
        assert!(matches!(compile_ridge(Family::CSaw, &big), Err(Error::SizeGuard(_))));
        let m = MultiIndex::new(vec![1, 2]).unwrap();
        assert!(matches!(compile_tensor(Family::Hat, &m), Err(Error::Unsupported(_))));
        let e = FreqIndex::canonical(vec![1]).unwrap();
        assert!(matches!(compile_ridge(Family::Hat, &e), Err(Error::Unsupported(_))));
    }

    #[test]
    fn net_eval_examples() {
        assert_eq!(net_eval(&ReluNet::zero(2), &[0.3, 0.4]).unwrap(), 0.0);
        let one = ReluNet {
            input_dim: 1,
            hidden: vec![HiddenUnit { w: vec![1.0], b: 0.0 }],
            c: vec![1.0],
            c0: 0.0,
        };
        assert_eq!(net_eval(&one, &[2.0]).unwrap(), 2.0);
        assert!(matches!(net_eval(&one, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn json_round_trip() {
        let net = compile_univariate(Family::SSaw, 5).unwrap();
        let s = export_json(&net).unwrap();
        assert_eq!(import_json(&s).unwrap(), net);
        assert!(import_json(&s[..s.len() / 2]).is_err());
        let tampered = s.replacen("\"c0\": 0.0", "\"c0\": 0.5", 1);
        assert!(import_json(&tampered).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..4);
            let h = rng.random_range(0..6);
            let mut val = || (rng.random::<f64>() - 0.5) * 10f64.powi(rng.random_range(-20..20));
            let net = ReluNet {
                input_dim: n,
                hidden: (0..h)
                    .map(|_| HiddenUnit {
                        w: (0..n).map(|_| val()).collect(),
                        b: val(),
                    })
                    .collect(),
                c: (0..h).map(|_| val()).collect(),
                c0: val(),
            };
            let back = import_json(&export_json(&net).unwrap()).unwrap();
            assert_eq!(back, net);
        }
    }
}
