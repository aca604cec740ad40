//! Coefficient extraction, change of basis, reconstruction and convergence
//! experiments.
//!
//! Coefficient conventions (all with respect to the listed functions):
//!
//! | basis         | elements                                   |
//! |---------------|--------------------------------------------|
//! | `Sine`        | `e_k = sqrt(2) sin(k pi t)`                |
//! | `Hat`         | `S_j` (not normalized)                     |
//! | `TensorSine`  | `e_m = prod e_{m_i}(x_i)`                  |
//! | `TensorHat`   | `S_m = prod S_{m_i}(x_i)`                  |
//! | `TrigRidge`   | `1`, `sqrt(2) cos(2 pi k.x)`, `sqrt(2) sin(2 pi k.x)` |
//! | `CsRidge`     | `1`, `sqrt(3) C(k.x)`, `sqrt(3) S(k.x)`    |
//!
//! Changes of basis never solve Gram systems: hat coefficients are
//! `tau^{-1} * alpha` (Dirichlet inverse), tensor-hat coefficients apply this
//! axis by axis, and sawtooth ridge coefficients are obtained ray by ray with
//! the inverse of the cos/sin Fourier coefficient sequences.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{gram, GramSystem};
use crate::index::{canonicalize, rectangle_indices, ridge_indices, square_prefix, FreqIndex, MultiIndex};
use crate::par;
use crate::pwl::{dot, Family};
use crate::quadrature::{gl_rule, integrate_qmc, kink_hints, tensor_nodes, KinkHints, NormEstimate, QmcRule};
use crate::transfer::{dirichlet_inverse_dense, gamma, tau, CoeffSeq, GammaKind, TAU1};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Node budget for materialized multivariate quadrature rules.
const MAX_NODES: usize = 1 << 23;

// ---------------------------------------------------------------------------
// Input functions

/// Built-in input functions on `[0,1]^n`.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// The constant 1 (its odd extension is the square wave).
    Const { dim: usize },
    /// `t (1 - t)`
    Parabola,
    /// `e_j`
    Sine(u64),
    /// `scale * family(k t)`
    Pwl { family: Family, k: u64, scale: f64 },
    /// `scale * family(k . x)`
    Ridge { family: Family, k: Vec<i64>, scale: f64 },
    /// `sqrt(2) cos(2 pi k.x)` or `sqrt(2) sin(2 pi k.x)`
    TrigRidge { cos: bool, k: Vec<i64> },
    /// `prod f_i(x_i)` of univariate factors.
    Product(Vec<Target>),
    /// Linear combination.
    Sum(Vec<(f64, Target)>),
    /// Linear interpolation of samples `(t_i, y_i)`, constant beyond the ends.
    Grid { t: Vec<f64>, y: Vec<f64> },
}

impl Target {
    pub fn square_wave() -> Self {
        Target::Const { dim: 1 }
    }

    pub fn tensor_hat(m: &[u64]) -> Self {
        Target::Product(
            m.iter()
                .map(|&k| Target::Pwl {
                    family: Family::Hat,
                    k,
                    scale: 1.0,
                })
                .collect(),
        )
    }

    pub fn tensor_sine(m: &[u64]) -> Self {
        Target::Product(m.iter().map(|&k| Target::Sine(k)).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            Target::Const { dim } => *dim,
            Target::Parabola | Target::Sine(_) | Target::Pwl { .. } | Target::Grid { .. } => 1,
            Target::Ridge { k, .. } | Target::TrigRidge { k, .. } => k.len(),
            Target::Product(f) => f.len(),
            Target::Sum(t) => t.first().map_or(1, |(_, f)| f.dim()),
        }
    }

    /// Checks indices, dimensions and sample data.
    pub fn validate(&self) -> Result<()> {
        match self {
            Target::Const { dim } if *dim == 0 => Err(Error::InvalidArgument("dimension must be >= 1".into())),
            Target::Sine(0) | Target::Pwl { k: 0, .. } => Err(Error::ZeroDilation),
            Target::Ridge { family, k, .. } => {
                if !family.is_sawtooth() {
                    return Err(Error::Unsupported("ridge targets need the C or S family".into()));
                }
                if k.is_empty() || k.iter().all(|&v| v == 0) {
                    return Err(Error::ZeroFrequency);
                }
                Ok(())
            }
            Target::TrigRidge { k, .. } if k.is_empty() || k.iter().all(|&v| v == 0) => Err(Error::ZeroFrequency),
            Target::Product(f) => {
                if f.is_empty() {
                    return Err(Error::InvalidArgument("empty product".into()));
                }
                for g in f {
                    g.validate()?;
                    if g.dim() != 1 {
                        return Err(Error::InvalidArgument("product factors must be univariate".into()));
                    }
                }
                Ok(())
            }
            Target::Sum(t) => {
                let d = self.dim();
                for (c, f) in t {
                    f.validate()?;
                    if f.dim() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: f.dim(),
                        });
                    }
                    if !c.is_finite() {
                        return Err(Error::InvalidArgument("non-finite coefficient".into()));
                    }
                }
                Ok(())
            }
            Target::Grid { t, y } => {
                if t.len() < 2 || t.len() != y.len() {
                    return Err(Error::Malformed("grid needs >= 2 samples with matching lengths".into()));
                }
                if t.windows(2).any(|w| !(w[0] < w[1])) || y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Malformed("grid abscissae must be strictly increasing, values finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Target::Const { .. } => 1.0,
            Target::Parabola => x[0] * (1.0 - x[0]),
            Target::Sine(j) => SQRT_2 * (*j as f64 * PI * x[0]).sin(),
            Target::Pwl { family, k, scale } => scale * family.value(*k as f64 * x[0]),
            Target::Ridge { family, k, scale } => scale * family.value(dot(k, x)),
            Target::TrigRidge { cos, k } => {
                let p = 2.0 * PI * dot(k, x);
                SQRT_2 * if *cos { p.cos() } else { p.sin() }
            }
            Target::Product(f) => f.iter().zip(x).map(|(g, xi)| g.eval(std::slice::from_ref(xi))).product(),
            Target::Sum(t) => t.iter().map(|(c, f)| c * f.eval(x)).sum(),
            Target::Grid { t, y } => {
                let s = x[0];
                if s <= t[0] {
                    return y[0];
                }
                if s >= t[t.len() - 1] {
                    return y[y.len() - 1];
                }
                let i = t.partition_point(|v| *v <= s) - 1;
                y[i] + (y[i + 1] - y[i]) * (s - t[i]) / (t[i + 1] - t[i])
            }
        }
    }

    /// Kinks of a univariate target inside `(0, 1)`.
    pub fn hints_1d(&self) -> Vec<f64> {
        match self {
            Target::Pwl { family, k, .. } => kink_hints(*family, *k),
            Target::Sum(t) => t.iter().flat_map(|(_, f)| f.hints_1d()).collect(),
            Target::Grid { t, .. } => t.clone(),
            _ => Vec::new(),
        }
    }

    pub fn kink_hints(&self) -> KinkHints {
        let n = self.dim();
        let mut h = KinkHints::none(n);
        self.add_hints(&mut h);
        h
    }

    fn add_hints(&self, h: &mut KinkHints) {
        match self {
            Target::Ridge { family, k, .. } => h.add_ridge(*family, k),
            Target::Product(f) => {
                for (i, g) in f.iter().enumerate() {
                    h.axis[i].extend(g.hints_1d());
                }
            }
            Target::Sum(t) => {
                for (_, f) in t {
                    f.add_hints(h);
                }
            }
            other if other.dim() == 1 => h.axis[0].extend(other.hints_1d()),
            _ => {}
        }
    }

    /// Upper bound on `sup |f|`.
    pub fn sup(&self) -> f64 {
        match self {
            Target::Const { .. } => 1.0,
            Target::Parabola => 0.25,
            Target::Sine(_) | Target::TrigRidge { .. } => SQRT_2,
            Target::Pwl { scale, .. } | Target::Ridge { scale, .. } => scale.abs(),
            Target::Product(f) => f.iter().map(Target::sup).product(),
            Target::Sum(t) => t.iter().map(|(c, f)| c.abs() * f.sup()).sum(),
            Target::Grid { y, .. } => y.iter().fold(0.0, |a, v| a.max(v.abs())),
        }
    }

    /// `||f||_2^2` on the unit cube when known in closed form.
    pub fn norm_sq(&self) -> Option<f64> {
        match self {
            Target::Const { .. } | Target::Sine(_) | Target::TrigRidge { .. } => Some(1.0),
            Target::Parabola => Some(1.0 / 30.0),
            Target::Pwl { scale, .. } | Target::Ridge { scale, .. } => Some(scale * scale / 3.0),
            Target::Product(f) => f.iter().map(Target::norm_sq).product(),
            _ => None,
        }
    }

    /// Closed-form sine coefficient `int_0^1 f e_k` of a univariate target.
    pub fn sine_coeff(&self, k: u64) -> Option<f64> {
        let odd = k % 2 == 1;
        match self {
            Target::Const { dim: 1 } => Some(if odd { 2.0 * SQRT_2 / (k as f64 * PI) } else { 0.0 }),
            Target::Parabola => Some(if odd { 4.0 * SQRT_2 / (k as f64 * PI).powi(3) } else { 0.0 }),
            Target::Sine(j) => Some(if k == *j { 1.0 } else { 0.0 }),
            Target::Pwl {
                family: Family::Hat,
                k: j,
                scale,
            } => Some(if k % j == 0 { scale * tau(k / j).ok()? } else { 0.0 }),
            Target::Sum(t) => t.iter().map(|(c, f)| f.sine_coeff(k).map(|a| c * a)).sum(),
            _ => None,
        }
    }

    /// Closed-form tensor sine coefficient of a product target.
    pub fn tensor_sine_coeff(&self, m: &[u64]) -> Option<f64> {
        match self {
            Target::Product(f) if f.len() == m.len() => f.iter().zip(m).map(|(g, &k)| g.sine_coeff(k)).product(),
            _ if m.len() == 1 => self.sine_coeff(m[0]),
            _ => None,
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("bad index list '{s}'")))
        })
        .collect()
}

fn parse_scalar(s: &str) -> Result<f64> {
    match s.trim() {
        "sqrt2" => Ok(SQRT_2),
        "sqrt3" => Ok(SQRT_3),
        v => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidArgument(format!("bad coefficient '{v}'"))),
    }
}

fn parse_term(s: &str) -> Result<Target> {
    let (name, args) = match s.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (s.trim(), None),
    };
    let need = || args.ok_or_else(|| Error::InvalidArgument(format!("'{name}' needs arguments")));
    let t = match name {
        "square" | "square-wave" => Target::square_wave(),
        "const" => Target::Const {
            dim: args.map(|a| a.parse().map_err(|_| Error::InvalidArgument(format!("bad dimension '{a}'")))).transpose()?.unwrap_or(1),
        },
        "parabola" => Target::Parabola,
        "sine" | "e" => Target::Sine(need()?.parse().map_err(|_| Error::InvalidArgument("bad sine index".into()))?),
        "C" | "S" | "hat" => {
            let k: u64 = need()?.parse().map_err(|_| Error::InvalidArgument("bad dilation".into()))?;
            Target::Pwl {
                family: name.parse()?,
                k,
                scale: 1.0,
            }
        }
        "ridge-C" | "ridge-S" => Target::Ridge {
            family: name[6..].parse()?,
            k: parse_list(need()?)?,
            scale: 1.0,
        },
        "cos" | "sin" => Target::TrigRidge {
            cos: name == "cos",
            k: parse_list(need()?)?,
        },
        "tensor-hat" => Target::tensor_hat(&parse_list(need()?)?),
        "tensor-sine" => Target::tensor_sine(&parse_list(need()?)?),
        "product" => Target::Product(need()?.split(';').map(parse_term).collect::<Result<_>>()?),
        other => return Err(Error::InvalidArgument(format!("unknown function '{other}'"))),
    };
    Ok(t)
}

impl FromStr for Target {
    type Err = Error;

    /// Grammar: `term (+ term)*`, `term = [coef*]name[:args]`, e.g.
    /// `sqrt3*ridge-S:1,2 + sqrt3*ridge-C:2,0`, `product:parabola;parabola`.
    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split('+') {
            let (c, body) = match part.split_once('*') {
                Some((c, b)) => (parse_scalar(c)?, b),
                None => (1.0, part),
            };
            terms.push((c, parse_term(body)?));
        }
        let t = if terms.len() == 1 && terms[0].0 == 1.0 {
            terms.pop().expect("one term").1
        } else {
            Target::Sum(terms)
        };
        t.validate()?;
        Ok(t)
    }
}

impl Target {
    /// Samples from `t,value` CSV text (header optional).
    pub fn from_csv_grid(text: &str) -> Result<Self> {
        let (mut t, mut y) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',');
            let a = cols.next().unwrap_or("").trim();
            let b = cols.next().unwrap_or("").trim();
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    y.push(b);
                }
                _ if lineno == 0 => continue,
                _ => return Err(Error::Malformed(format!("line {}: expected 't,value'", lineno + 1))),
            }
        }
        let g = Target::Grid { t, y };
        g.validate()?;
        Ok(g)
    }
}

// ---------------------------------------------------------------------------
// Expansions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTag {
    Sine,
    TensorSine,
    TrigRidge,
    Hat,
    TensorHat,
    CsRidge,
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisTag::Sine => "sine",
            BasisTag::TensorSine => "tensor_sine",
            BasisTag::TrigRidge => "trig_ridge",
            BasisTag::Hat => "hat",
            BasisTag::TensorHat => "tensor_hat",
            BasisTag::CsRidge => "cs_ridge",
        })
    }
}

impl FromStr for BasisTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "sine" => BasisTag::Sine,
            "tensor_sine" => BasisTag::TensorSine,
            "trig_ridge" | "trig" => BasisTag::TrigRidge,
            "hat" => BasisTag::Hat,
            "tensor_hat" => BasisTag::TensorHat,
            "cs_ridge" | "cs" | "rn" => BasisTag::CsRidge,
            other => return Err(Error::InvalidArgument(format!("unknown basis '{other}'"))),
        })
    }
}

/// Finite expansion in one of the supported bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub basis: BasisTag,
    pub dim: usize,
    /// Coefficient of the constant function (ridge systems only).
    pub constant: f64,
    /// Sine / hat / cos / C coefficients.
    pub coeffs: CoeffSeq,
    /// sin / S coefficients of ridge systems.
    pub sin_coeffs: Option<CoeffSeq>,
    /// `||f||^2 - (captured energy)` when `||f||` is known and the basis is orthonormal.
    pub discarded_energy: Option<f64>,
}

impl Expansion {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("expansions serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: Expansion = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        for c in std::iter::once(&e.coeffs).chain(e.sin_coeffs.iter()) {
            if c.dim != e.dim || c.entries.keys().any(|k| k.len() != e.dim) {
                return Err(Error::Malformed("coefficient index length differs from dim".into()));
            }
        }
        let ridge = matches!(e.basis, BasisTag::TrigRidge | BasisTag::CsRidge);
        if ridge != e.sin_coeffs.is_some() {
            return Err(Error::Malformed("sin_coeffs present iff the basis is a ridge system".into()));
        }
        Ok(e)
    }

    /// Value of the expansion at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut acc = self.constant;
        for (k, c) in &self.coeffs.entries {
            acc += c * self.element(k, false, x);
        }
        if let Some(s) = &self.sin_coeffs {
            for (k, c) in &s.entries {
                acc += c * self.element(k, true, x);
            }
        }
        Ok(acc)
    }

    fn element(&self, k: &[i64], sin_slot: bool, x: &[f64]) -> f64 {
        element_value(self.basis, k, sin_slot, x)
    }

    /// Keeps only the terms whose index satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(&[i64]) -> bool) -> Expansion {
        let filt = |c: &CoeffSeq| CoeffSeq {
            entries: c.entries.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), *v)).collect(),
            tail_bound: None,
            ..c.clone()
        };
        Expansion {
            coeffs: filt(&self.coeffs),
            sin_coeffs: self.sin_coeffs.as_ref().map(filt),
            discarded_energy: None,
            ..self.clone()
        }
    }

    pub fn term_count(&self) -> usize {
        self.coeffs.entries.len() + self.sin_coeffs.as_ref().map_or(0, |s| s.entries.len()) + usize::from(self.constant != 0.0)
    }
}

/// Value of one basis element.
pub fn element_value(basis: BasisTag, k: &[i64], sin_slot: bool, x: &[f64]) -> f64 {
    match basis {
        BasisTag::Sine | BasisTag::TensorSine => k
            .iter()
            .zip(x)
            .map(|(&m, &t)| SQRT_2 * (m as f64 * PI * t).sin())
            .product(),
        BasisTag::Hat | BasisTag::TensorHat => k.iter().zip(x).map(|(&m, &t)| Family::Hat.value(m as f64 * t)).product(),
        BasisTag::TrigRidge => {
            let p = 2.0 * PI * dot(k, x);
            SQRT_2 * if sin_slot { p.sin() } else { p.cos() }
        }
        BasisTag::CsRidge => {
            let f = if sin_slot { Family::SSaw } else { Family::CSaw };
            SQRT_3 * f.value(dot(k, x))
        }
    }
}

/// Evaluates the expansion at each point.
pub fn reconstruct(e: &Expansion, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.iter().map(|x| e.eval(x)).collect()
}

fn dense_to_seq(dim: usize, cutoff: u64, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> CoeffSeq {
    CoeffSeq {
        dim,
        cutoff,
        entries: entries.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        tail_bound: None,
    }
}

/// Sine coefficients `alpha_k = int_0^1 f e_k`, `k <= n`, by Gauss-Legendre
/// split at the kinks of `f` with panels no wider than `1/(4n)`.
pub fn sine_coeffs(f: &Target, n: u64) -> Result<Expansion> {
    f.validate()?;
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    if n == 0 || n > 1 << 16 {
        return Err(Error::InvalidArgument(format!("cutoff {n} out of range 1..=65536")));
    }
    let mut hints = f.hints_1d();
    hints.extend((1..4 * n).map(|j| j as f64 / (4 * n) as f64));
    let (xs, ws) = gl_rule(&hints, 1);
    let fw: Vec<f64> = xs.iter().zip(&ws).map(|(x, w)| w * f.eval(&[*x])).collect();
    let alpha = par::map_collect(n as usize, |i| {
        let k = (i + 1) as f64 * PI;
        xs.iter().zip(&fw).map(|(x, v)| v * SQRT_2 * (k * x).sin()).sum::<f64>()
    });
    let captured: f64 = alpha.iter().map(|a| a * a).sum();
    Ok(Expansion {
        basis: BasisTag::Sine,
        dim: 1,
        constant: 0.0,
        coeffs: CoeffSeq::from_dense(&alpha, None),
        sin_coeffs: None,
        discarded_energy: f.norm_sq().map(|e| (e - captured).max(0.0)),
    })
}

/// Closed-form sine coefficients, when the target has them.
pub fn analytic_sine_coeffs(f: &Target, n: u64) -> Option<Expansion> {
    let alpha: Vec<f64> = (1..=n).map(|k| f.sine_coeff(k)).collect::<Option<_>>()?;
    let captured: f64 = alpha.iter().map(|a| a * a).sum();
    Some(Expansion {
        basis: BasisTag::Sine,
        dim: 1,
        constant: 0.0,
        coeffs: CoeffSeq::from_dense(&alpha, None),
        sin_coeffs: None,
        discarded_energy: f.norm_sq().map(|e| (e - captured).max(0.0)),
    })
}

fn require(e: &Expansion, basis: BasisTag) -> Result<()> {
    if e.basis != basis {
        return Err(Error::InvalidArgument(format!("expected a {basis} expansion, got {}", e.basis)));
    }
    Ok(())
}

/// Dirichlet inverse of `tau` on `1..=n`.
pub fn tau_inverse(n: usize) -> Result<Vec<f64>> {
    let t: Vec<f64> = (1..=n as u64).map(|k| tau(k).expect("k >= 1")).collect();
    dirichlet_inverse_dense(&t, n)
}

fn dirichlet_dense(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == 0.0 {
            continue;
        }
        let i = i + 1;
        for (j, &bj) in b.iter().enumerate() {
            let k = i * (j + 1);
            if k > n {
                break;
            }
            out[k - 1] += ai * bj;
        }
    }
    out
}

/// Hat coefficients `beta = tau^{-1} * alpha`, so that `sum beta_j S_j` has
/// sine coefficients `alpha_k` for every `k <= cutoff`.
pub fn to_hat_coeffs(e: &Expansion) -> Result<Expansion> {
    require(e, BasisTag::Sine)?;
    let n = e.coeffs.cutoff as usize;
    let alpha = e.coeffs.to_dense()?;
    let beta = dirichlet_dense(&tau_inverse(n)?, &alpha, n);
    Ok(Expansion {
        basis: BasisTag::Hat,
        coeffs: CoeffSeq::from_dense(&beta, None),
        discarded_energy: None,
        ..e.clone()
    })
}

/// Sine coefficients `tau * beta` of a hat expansion, up to `k`.
pub fn hat_to_sine(e: &Expansion, k: u64) -> Result<Expansion> {
    require(e, BasisTag::Hat)?;
    let beta = e.coeffs.to_dense()?;
    let t: Vec<f64> = (1..=k).map(|m| tau(m).expect("m >= 1")).collect();
    let alpha = dirichlet_dense(&t, &beta, k as usize);
    Ok(Expansion {
        basis: BasisTag::Sine,
        coeffs: CoeffSeq::from_dense(&alpha, None),
        discarded_energy: None,
        ..e.clone()
    })
}

/// Contracts the last axis of a row-major tensor with `mat` (`rows x last`),
/// putting the new axis first.
fn contract_last(data: &[f64], shape: &[usize], mat: &[f64], rows: usize) -> (Vec<f64>, Vec<usize>) {
    let last = *shape.last().expect("non-empty shape");
    let rest: usize = shape[..shape.len() - 1].iter().product();
    let out = par::map_collect(rows, |m| {
        let row = &mat[m * last..(m + 1) * last];
        (0..rest)
            .map(|r| {
                let src = &data[r * last..(r + 1) * last];
                row.iter().zip(src).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect::<Vec<f64>>()
    })
    .concat();
    let mut new_shape = vec![rows];
    new_shape.extend_from_slice(&shape[..shape.len() - 1]);
    (out, new_shape)
}

/// Multi-indices of `{1..side}^n` in row-major order.
fn cube_indices(n: usize, side: u64) -> Vec<Vec<i64>> {
    rectangle_indices(&vec![side; n]).into_iter().map(|m| m.as_i64()).collect()
}

/// Per-axis Gauss-Legendre rules for a product-grid integration.
fn axis_rules(f: &Target, sides: &[u64], extra: impl Fn(usize) -> Vec<f64>) -> Vec<(Vec<f64>, Vec<f64>)> {
    let hints = f.kink_hints();
    (0..sides.len())
        .map(|i| {
            let mut h = hints.axis[i].clone();
            h.extend(extra(i));
            gl_rule(&h, 1)
        })
        .collect()
}

fn grid_values(f: &Target, rules: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<f64>> {
    let shape: Vec<usize> = rules.iter().map(|r| r.0.len()).collect();
    let total: usize = shape.iter().product();
    if total > MAX_NODES * 4 {
        return Err(Error::SizeGuard(format!("{total} grid points")));
    }
    let n = shape.len();
    let inner: usize = shape[1..].iter().product();
    Ok(par::map_collect(shape[0], |i0| {
        let mut x = vec![0.0; n];
        let mut out = Vec::with_capacity(inner);
        for r in 0..inner {
            x[0] = rules[0].0[i0];
            let mut rem = r;
            for d in (1..n).rev() {
                x[d] = rules[d].0[rem % shape[d]];
                rem /= shape[d];
            }
            let w: f64 = (0..n)
                .map(|d| {
                    let idx = if d == 0 { i0 } else { (r / shape[d + 1..].iter().product::<usize>()) % shape[d] };
                    rules[d].1[idx]
                })
                .product();
            out.push(w * f.eval(&x));
        }
        out
    })
    .concat())
}

/// Tensor sine coefficients `int f e_m` for `m in {1..side}^n`.
///
/// Targets with only axis-aligned kinks use a product Gauss-Legendre grid and
/// sum factorization; ridge-type targets fall back to the nested kink-split rule.
pub fn tensor_sine_coeffs(f: &Target, side: u64) -> Result<Expansion> {
    f.validate()?;
    let n = f.dim();
    if side == 0 || (side as u128).pow(n as u32) > 1 << 22 {
        return Err(Error::SizeGuard(format!("{side}^{n} coefficients")));
    }
    let s = side as usize;
    let hints = f.kink_hints();
    let values: Vec<f64> = if hints.planes.is_empty() {
        let rules = axis_rules(f, &vec![side; n], |_| (1..4 * s).map(|j| j as f64 / (4 * s) as f64).collect());
        let mut data = grid_values(f, &rules)?;
        let mut shape: Vec<usize> = rules.iter().map(|r| r.0.len()).collect();
        for axis in (0..n).rev() {
            let xs = &rules[axis].0;
            let mat: Vec<f64> = (1..=s)
                .flat_map(|m| xs.iter().map(move |x| SQRT_2 * (m as f64 * PI * x).sin()))
                .collect();
            let (d, sh) = contract_last(&data, &shape, &mat, s);
            data = d;
            shape = sh;
        }
        data
    } else {
        let mut h = hints;
        h.add_uniform(4 * s);
        let nodes = tensor_nodes(n, &h, 1, MAX_NODES)?;
        let fw: Vec<f64> = (0..nodes.len()).map(|i| nodes.weights[i] * f.eval(nodes.point(i))).collect();
        let idx = cube_indices(n, side);
        par::map_collect(idx.len(), |j| {
            (0..nodes.len())
                .map(|i| fw[i] * element_value(BasisTag::TensorSine, &idx[j], false, nodes.point(i)))
                .sum::<f64>()
        })
    };
    let idx = cube_indices(n, side);
    let captured: f64 = values.iter().map(|v| v * v).sum();
    Ok(Expansion {
        basis: BasisTag::TensorSine,
        dim: n,
        constant: 0.0,
        coeffs: dense_to_seq(n, side, idx.into_iter().zip(values)),
        sin_coeffs: None,
        discarded_energy: f.norm_sq().map(|e| (e - captured).max(0.0)),
    })
}

/// Applies `tau^{-1}` along every axis of a tensor sine expansion on `{1..side}^n`.
pub fn tensor_hat_coeffs(e: &Expansion) -> Result<Expansion> {
    require(e, BasisTag::TensorSine)?;
    let n = e.dim;
    let s = e.coeffs.cutoff as usize;
    let total = s.checked_pow(n as u32).filter(|&t| t <= 1 << 22).ok_or_else(|| Error::SizeGuard("tensor too large".into()))?;
    let mut data = vec![0.0; total];
    let flat = |k: &[i64]| k.iter().fold(0usize, |acc, &m| acc * s + (m as usize - 1));
    for (k, v) in &e.coeffs.entries {
        if k.iter().all(|&m| m >= 1 && m as usize <= s) {
            data[flat(k)] = *v;
        }
    }
    let inv = tau_inverse(s)?;
    for axis in 0..n {
        let stride = s.pow((n - 1 - axis) as u32);
        let mut out = vec![0.0; total];
        for base in 0..total {
            if (base / stride) % s != 0 {
                continue;
            }
            // fibre along `axis` starting at `base`
            let fib: Vec<f64> = (0..s).map(|i| data[base + i * stride]).collect();
            let conv = dirichlet_dense(&inv, &fib, s);
            for i in 0..s {
                out[base + i * stride] = conv[i];
            }
        }
        data = out;
    }
    let idx = cube_indices(n, s as u64);
    Ok(Expansion {
        basis: BasisTag::TensorHat,
        coeffs: dense_to_seq(n, s as u64, idx.into_iter().zip(data)),
        discarded_energy: None,
        ..e.clone()
    })
}

/// Coefficients in the orthonormal ridge trigonometric system for canonical
/// `k` with `|k|_inf <= bound`, by kink-split nested Gauss-Legendre.
pub fn trig_ridge_coeffs(f: &Target, bound: u64) -> Result<Expansion> {
    f.validate()?;
    let n = f.dim();
    let ks = ridge_indices(n, bound)?;
    let mut hints = f.kink_hints();
    hints.add_uniform(4 * bound as usize);
    let nodes = tensor_nodes(n, &hints, 1, MAX_NODES)?;
    let fw: Vec<f64> = (0..nodes.len()).map(|i| nodes.weights[i] * f.eval(nodes.point(i))).collect();
    let constant = compensated_sum(&fw);
    let pairs = par::map_collect(ks.len(), |j| {
        let k = ks[j].entries();
        let (mut a, mut b) = (0.0, 0.0);
        for (i, v) in fw.iter().enumerate() {
            let (s, c) = (2.0 * PI * dot(k, nodes.point(i))).sin_cos();
            a += v * c;
            b += v * s;
        }
        (SQRT_2 * a, SQRT_2 * b)
    });
    let captured = constant * constant + pairs.iter().map(|(a, b)| a * a + b * b).sum::<f64>();
    let keys: Vec<Vec<i64>> = ks.iter().map(|k| k.entries().to_vec()).collect();
    Ok(Expansion {
        basis: BasisTag::TrigRidge,
        dim: n,
        constant,
        coeffs: dense_to_seq(n, bound, keys.iter().cloned().zip(pairs.iter().map(|p| p.0))),
        sin_coeffs: Some(dense_to_seq(n, bound, keys.into_iter().zip(pairs.iter().map(|p| p.1)))),
        discarded_energy: f.norm_sq().map(|e| (e - captured).max(0.0)),
    })
}

/// Root of the ray through `k`: `k / u` with `u` the largest odd divisor of `gcd(k)`.
pub fn ray_root(k: &FreqIndex) -> (Vec<i64>, u64) {
    let g = k.content();
    let u = g >> g.trailing_zeros();
    (k.entries().iter().map(|v| v / u as i64).collect(), u)
}

/// Groups ridge coefficients by ray: root -> dense vector over multipliers `1..=len`.
fn rays(c: &CoeffSeq, bound: u64) -> Result<BTreeMap<Vec<i64>, Vec<f64>>> {
    let mut out: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
    for (k, v) in &c.entries {
        let (fk, sign) = canonicalize(k)?;
        if sign < 0 {
            return Err(Error::NonCanonical(k.clone()));
        }
        let (root, u) = ray_root(&fk);
        let len = (bound / FreqIndex::new(root.clone())?.inf_norm()) as usize;
        let e = out.entry(root).or_insert_with(|| vec![0.0; len]);
        if (u as usize) <= e.len() {
            e[u as usize - 1] = *v;
        }
    }
    Ok(out)
}

fn ray_map(c: &CoeffSeq, bound: u64, kind: GammaKind, inverse: bool) -> Result<CoeffSeq> {
    let mut entries = BTreeMap::new();
    for (root, a) in rays(c, bound)? {
        let len = a.len();
        let g: Vec<f64> = (1..=len as u64)
            .map(|d| if d % 2 == 1 { gamma((d - 1) / 2, kind) } else { 0.0 })
            .collect();
        let out = if inverse {
            let gi = dirichlet_inverse_dense(&g, len)?;
            dirichlet_dense(&gi, &a, len).into_iter().map(|v| v * (2.0f64 / 3.0).sqrt()).collect::<Vec<_>>()
        } else {
            dirichlet_dense(&g, &a, len).into_iter().map(|v| v * 1.5f64.sqrt()).collect()
        };
        for (i, v) in out.into_iter().enumerate() {
            if v != 0.0 {
                entries.insert(root.iter().map(|r| r * (i as i64 + 1)).collect(), v);
            }
        }
    }
    Ok(CoeffSeq {
        dim: c.dim,
        cutoff: bound,
        entries,
        tail_bound: None,
    })
}

/// Sawtooth ridge coefficients from ridge trigonometric ones, ray by ray:
/// `A = sqrt(2/3) gamma^{-1} * a` over odd multipliers of each root.
pub fn to_cs_coeffs(e: &Expansion) -> Result<Expansion> {
    require(e, BasisTag::TrigRidge)?;
    let bound = e.coeffs.cutoff;
    let sin = e.sin_coeffs.as_ref().ok_or_else(|| Error::Malformed("missing sin coefficients".into()))?;
    Ok(Expansion {
        basis: BasisTag::CsRidge,
        coeffs: ray_map(&e.coeffs, bound, GammaKind::Cos, true)?,
        sin_coeffs: Some(ray_map(sin, bound, GammaKind::Sin, true)?),
        discarded_energy: None,
        ..e.clone()
    })
}

/// Inverse of [`to_cs_coeffs`] on the same truncation.
pub fn cs_to_trig(e: &Expansion) -> Result<Expansion> {
    require(e, BasisTag::CsRidge)?;
    let bound = e.coeffs.cutoff;
    let sin = e.sin_coeffs.as_ref().ok_or_else(|| Error::Malformed("missing S coefficients".into()))?;
    Ok(Expansion {
        basis: BasisTag::TrigRidge,
        coeffs: ray_map(&e.coeffs, bound, GammaKind::Cos, false)?,
        sin_coeffs: Some(ray_map(sin, bound, GammaKind::Sin, false)?),
        discarded_energy: None,
        ..e.clone()
    })
}

/// One-call expansion of `f` in `basis` at the given truncation
/// (`N` for univariate bases, side for tensor bases, `|k|_inf` bound for ridge bases).
pub fn expand(f: &Target, basis: BasisTag, cutoff: u64) -> Result<Expansion> {
    match basis {
        BasisTag::Sine => sine_coeffs(f, cutoff),
        BasisTag::Hat => to_hat_coeffs(&sine_coeffs(f, cutoff)?),
        BasisTag::TensorSine => tensor_sine_coeffs(f, cutoff),
        BasisTag::TensorHat => tensor_hat_coeffs(&tensor_sine_coeffs(f, cutoff)?),
        BasisTag::TrigRidge => trig_ridge_coeffs(f, cutoff),
        BasisTag::CsRidge => to_cs_coeffs(&trig_ridge_coeffs(f, cutoff)?),
    }
}

// ---------------------------------------------------------------------------
// Convergence experiments

/// Partial-sum schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// First `N` terms (univariate) or the first `N` multi-indices in square order.
    Prefix(Vec<u64>),
    /// Rectangles `m <= bound` (Pringsheim partial sums).
    Rectangles(Vec<Vec<u64>>),
    /// Ridge frequencies with `|k|_inf <= b`.
    InfBound(Vec<u64>),
}

impl Truncation {
    fn len(&self) -> usize {
        match self {
            Truncation::Prefix(v) | Truncation::InfBound(v) => v.len(),
            Truncation::Rectangles(v) => v.len(),
        }
    }

    fn label(&self, i: usize) -> String {
        match self {
            Truncation::Prefix(v) | Truncation::InfBound(v) => v[i].to_string(),
            Truncation::Rectangles(v) => v[i].iter().map(u64::to_string).collect::<Vec<_>>().join("x"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub stage: usize,
    pub cutoff: String,
    pub terms: usize,
    pub q: f64,
    pub error: f64,
    pub est_quadrature_error: f64,
    /// L2 error computed in coefficient space (q = 2 only, when available).
    pub coeff_tail_l2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub basis: BasisTag,
    pub rows: Vec<ConvergenceRow>,
    /// Per exponent: errors strictly decrease along the schedule.
    pub strictly_decreasing: Vec<(f64, bool)>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("stage,cutoff,terms,q,error,est_quadrature_error,coeff_tail_l2\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e},{}\n",
                r.stage,
                r.cutoff,
                r.terms,
                r.q,
                r.error,
                r.est_quadrature_error,
                r.coeff_tail_l2.map_or(String::new(), |v| format!("{v:.16e}"))
            ));
        }
        s
    }

    pub fn errors(&self, q: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.q == q).map(|r| r.error).collect()
    }
}

/// Options for [`convergence_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOptions {
    /// Gauss-Legendre panels per kink segment (the error estimate uses twice as many).
    pub panels: usize,
    /// Seed for the lattice shifts of ridge-basis experiments.
    pub seed: u64,
    /// Lattice size for ridge-basis experiments.
    pub qmc_points: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            panels: 1,
            seed: 0x5eed,
            qmc_points: 1 << 14,
        }
    }
}

fn check_qs(qs: &[f64]) -> Result<()> {
    if qs.is_empty() {
        return Err(Error::InvalidArgument("no exponents given".into()));
    }
    for &q in qs {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::InvalidExponent(q));
        }
    }
    Ok(())
}

/// Sums `w |r|^q` for several exponents at once.
fn power_sums(residual: &[f64], weights: &[f64], qs: &[f64]) -> Vec<f64> {
    qs.iter()
        .map(|&q| residual.iter().zip(weights).map(|(r, w)| w * r.abs().powf(q)).sum())
        .collect()
}

/// `||f - P_N f||_q` along a schedule of partial sums.
pub fn convergence_experiment(
    f: &Target,
    basis: BasisTag,
    qs: &[f64],
    schedule: &Truncation,
    opts: &ExperimentOptions,
) -> Result<ConvergenceTable> {
    f.validate()?;
    check_qs(qs)?;
    if schedule.len() == 0 {
        return Err(Error::InvalidArgument("empty schedule".into()));
    }
    let rows = match basis {
        BasisTag::Sine | BasisTag::Hat => univariate_experiment(f, basis, qs, schedule, opts)?,
        BasisTag::TensorSine | BasisTag::TensorHat => tensor_experiment(f, basis, qs, schedule, opts)?,
        BasisTag::TrigRidge | BasisTag::CsRidge => ridge_experiment(f, basis, qs, schedule, opts)?,
    };
    let strictly_decreasing = qs
        .iter()
        .map(|&q| {
            let e: Vec<f64> = rows.iter().filter(|r| r.q == q).map(|r| r.error).collect();
            (q, e.windows(2).all(|w| w[1] < w[0]))
        })
        .collect();
    Ok(ConvergenceTable {
        basis,
        rows,
        strictly_decreasing,
    })
}

fn prefix_schedule(schedule: &Truncation) -> Result<&[u64]> {
    match schedule {
        Truncation::Prefix(v) if v.iter().all(|&n| n >= 1) => Ok(v),
        _ => Err(Error::InvalidArgument("univariate bases need a prefix schedule of positive cutoffs".into())),
    }
}

/// `<f, S_j>` for `j <= n` from closed-form sine coefficients:
/// `sum_m tau_m alpha_{jm}`, summed up to `jm <= k_max`.
fn hat_moments(f: &Target, n: usize, k_max: u64) -> Option<Vec<f64>> {
    f.sine_coeff(1)?;
    Some(par::map_collect(n, |i| {
        let j = i as u64 + 1;
        let mut acc = 0.0;
        let top = k_max / j;
        let top = if top % 2 == 0 { top - 1 } else { top };
        let mut m = top;
        while m >= 1 {
            acc += tau(m).expect("m >= 1") * f.sine_coeff(j * m).unwrap_or(0.0);
            if m < 2 {
                break;
            }
            m -= 2;
        }
        acc
    }))
}

fn univariate_experiment(
    f: &Target,
    basis: BasisTag,
    qs: &[f64],
    schedule: &Truncation,
    opts: &ExperimentOptions,
) -> Result<Vec<ConvergenceRow>> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    let cutoffs = prefix_schedule(schedule)?;
    let nmax = *cutoffs.iter().max().expect("non-empty");
    let sine = match analytic_sine_coeffs(f, nmax) {
        Some(e) => e,
        None => sine_coeffs(f, nmax)?,
    };
    let alpha = sine.coeffs.to_dense()?;
    let coeffs = match basis {
        BasisTag::Sine => alpha.clone(),
        _ => to_hat_coeffs(&sine)?.coeffs.to_dense()?,
    };
    // Coefficient-space L2 data for the hat basis.
    let hat_data = if basis == BasisTag::Hat && qs.contains(&2.0) {
        match (f.norm_sq(), hat_moments(f, nmax as usize, 1 << 22)) {
            (Some(nf), Some(c)) => {
                let g = gram(&GramSystem::Hat { n: nmax }, false)?.to_f64();
                Some((nf, c, g))
            }
            _ => None,
        }
    } else {
        None
    };
    let mut rows = Vec::new();
    for (stage, &n) in cutoffs.iter().enumerate() {
        let n = n as usize;
        let mut hints = f.hints_1d();
        match basis {
            BasisTag::Hat => {
                for j in 1..=n as u64 {
                    hints.extend(kink_hints(Family::Hat, j));
                }
            }
            _ => hints.extend((1..4 * n).map(|j| j as f64 / (4 * n) as f64)),
        }
        hints.sort_by(f64::total_cmp);
        hints.dedup();
        let partial = |x: f64| -> f64 {
            let mut acc = 0.0;
            for j in (0..n).rev() {
                let c = coeffs[j];
                if c != 0.0 {
                    acc += c * element_value(basis, &[j as i64 + 1], false, &[x]);
                }
            }
            acc
        };
        let estimate = |panels: usize| {
            let (xs, ws) = gl_rule(&hints, panels);
            let r = par::map_collect(xs.len(), |i| f.eval(&[xs[i]]) - partial(xs[i]));
            power_sums(&r, &ws, qs)
        };
        let coarse = estimate(opts.panels);
        let fine = estimate(2 * opts.panels);
        let tail = |q: f64| -> Option<f64> {
            if q != 2.0 {
                return None;
            }
            match basis {
                BasisTag::Sine => f
                    .norm_sq()
                    .map(|nf| (nf - alpha[..n].iter().map(|a| a * a).sum::<f64>()).max(0.0).sqrt()),
                _ => hat_data.as_ref().map(|(nf, c, g)| {
                    let b = &coeffs[..n];
                    let cross: f64 = b.iter().zip(c).map(|(x, y)| x * y).sum();
                    let mut quad = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            quad += b[i] * b[j] * g[i][j];
                        }
                    }
                    // Normalized Gram: <S_i, S_j> = g_ij / 3.
                    (nf - 2.0 * cross + quad / 3.0).max(0.0).sqrt()
                }),
            }
        };
        for (qi, &q) in qs.iter().enumerate() {
            let e_fine = fine[qi].max(0.0).powf(1.0 / q);
            let e_coarse = coarse[qi].max(0.0).powf(1.0 / q);
            rows.push(ConvergenceRow {
                stage,
                cutoff: schedule.label(stage),
                terms: coeffs[..n].iter().filter(|c| **c != 0.0).count(),
                q,
                error: e_fine,
                est_quadrature_error: (e_fine - e_coarse).abs(),
                coeff_tail_l2: tail(q),
            });
        }
    }
    Ok(rows)
}

/// Index sets of the schedule stages for tensor bases.
fn tensor_stages(n: usize, schedule: &Truncation) -> Result<Vec<Vec<MultiIndex>>> {
    match schedule {
        Truncation::Prefix(counts) => counts.iter().map(|&c| square_prefix(n, c as usize)).collect(),
        Truncation::Rectangles(bounds) => bounds
            .iter()
            .map(|b| {
                if b.len() != n || b.contains(&0) {
                    Err(Error::InvalidArgument(format!("rectangle bound {b:?} invalid for n = {n}")))
                } else {
                    Ok(rectangle_indices(b))
                }
            })
            .collect(),
        Truncation::InfBound(_) => Err(Error::InvalidArgument("tensor bases need prefix or rectangle schedules".into())),
    }
}

fn tensor_experiment(
    f: &Target,
    basis: BasisTag,
    qs: &[f64],
    schedule: &Truncation,
    opts: &ExperimentOptions,
) -> Result<Vec<ConvergenceRow>> {
    let n = f.dim();
    if n != 2 {
        return Err(Error::Unsupported(
            "tensor convergence experiments run on the product grid for n = 2".into(),
        ));
    }
    let stages = tensor_stages(n, schedule)?;
    let sides: Vec<u64> = (0..n)
        .map(|d| stages.iter().flatten().map(|m| m.entries()[d]).max().unwrap_or(1))
        .collect();
    let side = *sides.iter().max().expect("n >= 1");
    // Coefficients on the cube {1..side}^n.
    let analytic: Option<Vec<f64>> = cube_indices(n, side)
        .iter()
        .map(|m| f.tensor_sine_coeff(&m.iter().map(|&v| v as u64).collect::<Vec<_>>()))
        .collect();
    let sine = match analytic {
        Some(v) => Expansion {
            basis: BasisTag::TensorSine,
            dim: n,
            constant: 0.0,
            coeffs: dense_to_seq(n, side, cube_indices(n, side).into_iter().zip(v)),
            sin_coeffs: None,
            discarded_energy: None,
        },
        None => tensor_sine_coeffs(f, side)?,
    };
    let exp = if basis == BasisTag::TensorHat { tensor_hat_coeffs(&sine)? } else { sine };
    let coeff = |m: &MultiIndex| exp.coeffs.entries.get(&m.as_i64()).copied().unwrap_or(0.0);

    // Coefficient-space L2 pieces for product targets.
    let l2_data = if qs.contains(&2.0) {
        let factors = match f {
            Target::Product(g) => Some(g.clone()),
            _ => None,
        };
        match (f.norm_sq(), factors) {
            (Some(nf), Some(g)) if basis == BasisTag::TensorHat => {
                let moments: Option<Vec<Vec<f64>>> =
                    g.iter().zip(&sides).map(|(gi, &s)| hat_moments(gi, s as usize, 1 << 20)).collect();
                let gm = gram(&GramSystem::Hat { n: side }, false)?.to_f64();
                moments.map(|m| (nf, m, Some(gm)))
            }
            (Some(nf), _) if basis == BasisTag::TensorSine => Some((nf, Vec::new(), None)),
            _ => None,
        }
    } else {
        None
    };

    let mut rows = Vec::new();
    for (stage, set) in stages.iter().enumerate() {
        let st_sides: Vec<usize> = (0..n)
            .map(|d| set.iter().map(|m| m.entries()[d]).max().unwrap_or(1) as usize)
            .collect();
        let mut hints = f.kink_hints();
        for d in 0..n {
            match basis {
                BasisTag::TensorHat => {
                    for j in 1..=st_sides[d] as u64 {
                        hints.axis[d].extend(kink_hints(Family::Hat, j));
                    }
                }
                _ => {
                    let s = st_sides[d];
                    hints.axis[d].extend((1..4 * s).map(|j| j as f64 / (4 * s) as f64));
                }
            }
        }
        // Coefficient matrix B[m1][m2] restricted to the stage's index set.
        let (s1, s2) = (st_sides[0], st_sides[1]);
        let mut b = vec![0.0; s1 * s2];
        for m in set {
            let e = m.entries();
            b[(e[0] as usize - 1) * s2 + e[1] as usize - 1] = coeff(m);
        }
        let estimate = |panels: usize| -> Vec<f64> {
            let rx = gl_rule(&hints.axis[0], panels);
            let ry = gl_rule(&hints.axis[1], panels);
            let phi = |m: usize, t: f64| element_value(basis, &[m as i64], false, &[t]);
            // U[m1][y] = sum_m2 B[m1][m2] phi_m2(y)
            let py: Vec<Vec<f64>> = (1..=s2).map(|m| ry.0.iter().map(|&y| phi(m, y)).collect()).collect();
            let mut u = vec![vec![0.0; ry.0.len()]; s1];
            for m1 in 0..s1 {
                for m2 in 0..s2 {
                    let c = b[m1 * s2 + m2];
                    if c != 0.0 {
                        for (uy, p) in u[m1].iter_mut().zip(&py[m2]) {
                            *uy += c * p;
                        }
                    }
                }
            }
            let sums = par::map_collect(rx.0.len(), |ix| {
                let x = rx.0[ix];
                let px: Vec<f64> = (1..=s1).map(|m| phi(m, x)).collect();
                let mut r = Vec::with_capacity(ry.0.len());
                let mut w = Vec::with_capacity(ry.0.len());
                for (iy, &y) in ry.0.iter().enumerate() {
                    let p: f64 = (0..s1).map(|m1| px[m1] * u[m1][iy]).sum();
                    r.push(f.eval(&[x, y]) - p);
                    w.push(rx.1[ix] * ry.1[iy]);
                }
                power_sums(&r, &w, qs)
            });
            (0..qs.len()).map(|qi| sums.iter().map(|s| s[qi]).sum()).collect()
        };
        let coarse = estimate(opts.panels);
        let fine = estimate(2 * opts.panels);
        let tail = |q: f64| -> Option<f64> {
            if q != 2.0 {
                return None;
            }
            let (nf, moments, g) = l2_data.as_ref()?;
            match g {
                None => Some((nf - set.iter().map(|m| coeff(m).powi(2)).sum::<f64>()).max(0.0).sqrt()),
                Some(g) => {
                    let idx = |m: &MultiIndex, d: usize| m.entries()[d] as usize - 1;
                    let cross: f64 = set
                        .iter()
                        .map(|m| coeff(m) * (0..n).map(|d| moments[d][idx(m, d)]).product::<f64>())
                        .sum();
                    let quad: f64 = par::map_collect(set.len(), |i| {
                        let a = &set[i];
                        set.iter()
                            .map(|bm| {
                                coeff(a) * coeff(bm) * (0..n).map(|d| g[idx(a, d)][idx(bm, d)] / 3.0).product::<f64>()
                            })
                            .sum::<f64>()
                    })
                    .into_iter()
                    .sum();
                    Some((nf - 2.0 * cross + quad).max(0.0).sqrt())
                }
            }
        };
        for (qi, &q) in qs.iter().enumerate() {
            let e_fine = fine[qi].max(0.0).powf(1.0 / q);
            let e_coarse = coarse[qi].max(0.0).powf(1.0 / q);
            rows.push(ConvergenceRow {
                stage,
                cutoff: schedule.label(stage),
                terms: set.len(),
                q,
                error: e_fine,
                est_quadrature_error: (e_fine - e_coarse).abs(),
                coeff_tail_l2: tail(q),
            });
        }
    }
    Ok(rows)
}

fn ridge_experiment(
    f: &Target,
    basis: BasisTag,
    qs: &[f64],
    schedule: &Truncation,
    opts: &ExperimentOptions,
) -> Result<Vec<ConvergenceRow>> {
    let bounds = match schedule {
        Truncation::InfBound(b) if b.iter().all(|&v| v >= 1) => b,
        _ => return Err(Error::InvalidArgument("ridge bases need an |k|_inf bound schedule".into())),
    };
    let n = f.dim();
    let bmax = *bounds.iter().max().expect("non-empty");
    let exp = expand(f, basis, bmax)?;
    let rule = QmcRule::new(opts.qmc_points.max(if n >= 4 { 1 << 16 } else { 1 }), opts.seed);
    let mut rows = Vec::new();
    for (stage, &b) in bounds.iter().enumerate() {
        let part = exp.restrict(|k| k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) <= b);
        let ests: Vec<NormEstimate> = qs
            .iter()
            .map(|&q| {
                let g = |x: &[f64]| (f.eval(x) - part.eval(x).unwrap_or(f64::NAN)).abs().powf(q);
                integrate_qmc(&g, n, rule)
            })
            .collect::<Result<_>>()?;
        let captured = part.constant.powi(2)
            + part.coeffs.entries.values().map(|v| v * v).sum::<f64>()
            + part.sin_coeffs.as_ref().map_or(0.0, |s| s.entries.values().map(|v| v * v).sum());
        for (qi, &q) in qs.iter().enumerate() {
            let i = ests[qi];
            let e = i.value.max(0.0).powf(1.0 / q);
            rows.push(ConvergenceRow {
                stage,
                cutoff: schedule.label(stage),
                terms: part.term_count(),
                q,
                error: e,
                est_quadrature_error: if i.value > 0.0 { e / (q * i.value) * i.error_estimate } else { i.error_estimate },
                coeff_tail_l2: match (q == 2.0, basis, f.norm_sq()) {
                    (true, BasisTag::TrigRidge, Some(nf)) => Some((nf - captured).max(0.0).sqrt()),
                    _ => None,
                },
            });
        }
    }
    Ok(rows)
}

/// Neumaier-compensated sum.
fn compensated_sum(v: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in v {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Distinct ridge roots of the canonical frequencies with `|k|_inf <= bound`.
pub fn ray_roots(n: usize, bound: u64) -> Result<BTreeSet<Vec<i64>>> {
    Ok(ridge_indices(n, bound)?.iter().map(|k| ray_root(k).0).collect())
}

/// Largest coefficient-space discrepancy `|tau * beta - alpha|` on `1..=n`.
pub fn hat_round_trip_defect(alpha: &[f64]) -> Result<f64> {
    let n = alpha.len();
    let beta = dirichlet_dense(&tau_inverse(n)?, alpha, n);
    let t: Vec<f64> = (1..=n as u64).map(|k| tau(k).expect("k >= 1")).collect();
    let back = dirichlet_dense(&t, &beta, n);
    Ok(back.iter().zip(alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `sqrt(2/3) / gamma_1` scaling check helper: coefficient of `sqrt(3) C_k` on `c_k`.
pub fn leading_ridge_coefficient() -> f64 {
    1.5f64.sqrt() * gamma(0, GammaKind::Cos)
}

/// Leading hat coefficient relation `beta_1 = alpha_1 / tau_1` for a single sine mode.
pub fn leading_hat_coefficient(alpha1: f64) -> f64 {
    alpha1 / TAU1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::tau_seq;
    use proptest::prelude::*;

    #[test]
    fn sine_coefficient_examples() {
        let hat = Target::Pwl {
            family: Family::Hat,
            k: 1,
            scale: 1.0,
        };
        let e = sine_coeffs(&hat, 32).unwrap();
        for k in 1..=32 {
            assert!((e.coeffs.get(k) - tau(k).unwrap()).abs() < 1e-12, "k = {k}");
        }
        let e = sine_coeffs(&Target::Sine(3), 16).unwrap();
        for k in 1..=16 {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((e.coeffs.get(k) - want).abs() < 1e-13);
        }
        let e = sine_coeffs(&Target::square_wave(), 16).unwrap();
        assert!((e.coeffs.get(1) - 0.900_316_316).abs() < 1e-9);
        for k in 1..=16 {
            assert!((e.coeffs.get(k) - Target::square_wave().sine_coeff(k).unwrap()).abs() < 1e-13);
        }
        assert!(e.discarded_energy.unwrap() > 0.0);
        let p = sine_coeffs(&Target::Parabola, 16).unwrap();
        for k in 1..=16 {
            assert!((p.coeffs.get(k) - Target::Parabola.sine_coeff(k).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn hat_coefficient_examples() {
        let s = tau_seq(64).unwrap();
        let e = Expansion {
            basis: BasisTag::Sine,
            dim: 1,
            constant: 0.0,
            coeffs: s,
            sin_coeffs: None,
            discarded_energy: None,
        };
        let h = to_hat_coeffs(&e).unwrap();
        assert!((h.coeffs.get(1) - 1.0).abs() < 1e-15);
        assert!(h.coeffs.entries.iter().all(|(k, v)| k[0] == 1 || v.abs() < 1e-15));
        let e5 = analytic_sine_coeffs(&Target::Sine(5), 60).unwrap();
        let h = to_hat_coeffs(&e5).unwrap();
        let inv = tau_inverse(12).unwrap();
        for k in 1..=60u64 {
            let want = if k % 5 == 0 { inv[(k / 5 - 1) as usize] } else { 0.0 };
            assert!((h.coeffs.get(k) - want).abs() < 1e-15);
        }
        let s3 = "hat:3".parse::<Target>().unwrap();
        let h = expand(&s3, BasisTag::Hat, 64).unwrap();
        for k in 1..=64 {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((h.coeffs.get(k) - want).abs() < 1e-10, "k = {k}: {}", h.coeffs.get(k));
        }
        let pts: Vec<Vec<f64>> = (0..=4096).map(|i| vec![i as f64 / 4096.0]).collect();
        let vals = reconstruct(&h, &pts).unwrap();
        for (p, v) in pts.iter().zip(vals) {
            assert!((v - Family::Hat.value(3.0 * p[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn reconstruct_examples() {
        let mut c = CoeffSeq::new_1d(1);
        c.entries.insert(vec![1], 1.0);
        let e = Expansion {
            basis: BasisTag::Hat,
            dim: 1,
            constant: 0.0,
            coeffs: c,
            sin_coeffs: None,
            discarded_energy: None,
        };
        assert_eq!(e.eval(&[0.5]).unwrap(), 1.0);
        let z = e.restrict(|_| false);
        assert_eq!(z.eval(&[0.3]).unwrap(), 0.0);
        assert!(e.eval(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn tensor_examples() {
        let f = Target::tensor_hat(&[1, 1]);
        let h = expand(&f, BasisTag::TensorHat, 8).unwrap();
        for (k, v) in &h.coeffs.entries {
            let want = if k == &vec![1, 1] { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{k:?}: {v}");
        }
        let f = Target::tensor_hat(&[2, 3]);
        let h = expand(&f, BasisTag::TensorHat, 12).unwrap();
        for (k, v) in &h.coeffs.entries {
            let want = if k == &vec![2, 3] { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9, "{k:?}: {v}");
        }
        // e_(3,1) -> tau^{-1} (x) tau^{-1} on the grid {(3m, m')}
        let e = expand(&Target::tensor_sine(&[3, 1]), BasisTag::TensorHat, 9).unwrap();
        let inv = tau_inverse(9).unwrap();
        for (k, v) in &e.coeffs.entries {
            let want = if k[0] % 3 == 0 { inv[k[0] as usize / 3 - 1] * inv[k[1] as usize - 1] } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{k:?}");
        }
    }

    #[test]
    fn ridge_examples() {
        let one = Target::Const { dim: 2 };
        let e = trig_ridge_coeffs(&one, 2).unwrap();
        assert!((e.constant - 1.0).abs() < 1e-14);
        assert!(e.coeffs.entries.values().all(|v| v.abs() < 1e-13));
        let cs = to_cs_coeffs(&e).unwrap();
        assert!((cs.constant - 1.0).abs() < 1e-14);

        let c = "cos:1,-1".parse::<Target>().unwrap();
        let e = trig_ridge_coeffs(&c, 2).unwrap();
        for (k, v) in &e.coeffs.entries {
            let want = if k == &vec![1, -1] { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }

        // sqrt(3) C_(1,0) has cos coefficients sqrt(3/2) gamma(m) at (2m+1, 0).
        let f = "sqrt3*ridge-C:1,0".parse::<Target>().unwrap();
        let e = trig_ridge_coeffs(&f, 5).unwrap();
        for (m, d) in [(0u64, 1i64), (1, 3), (2, 5)] {
            let got = e.coeffs.entries[&vec![d, 0]];
            assert!((got - 1.5f64.sqrt() * gamma(m, GammaKind::Cos)).abs() < 1e-12);
        }
        let cs = to_cs_coeffs(&e).unwrap();
        for (k, v) in &cs.coeffs.entries {
            let want = if k == &vec![1, 0] { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{k:?}: {v}");
        }
        let back = cs_to_trig(&cs).unwrap();
        for (k, v) in &e.coeffs.entries {
            assert!((back.coeffs.entries.get(k).copied().unwrap_or(0.0) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn ray_roots_keep_powers_of_two() {
        let r = |v: &[i64]| ray_root(&FreqIndex::canonical(v.to_vec()).unwrap());
        assert_eq!(r(&[3, 0]), (vec![1, 0], 3));
        assert_eq!(r(&[2, 0]), (vec![2, 0], 1));
        assert_eq!(r(&[6, -12]), (vec![2, -4], 3));
        assert_eq!(r(&[1, 2]), (vec![1, 2], 1));
    }

    #[test]
    fn parsing() {
        assert_eq!("square".parse::<Target>().unwrap(), Target::Const { dim: 1 });
        assert_eq!(
            "2*parabola".parse::<Target>().unwrap(),
            Target::Sum(vec![(2.0, Target::Parabola)])
        );
        assert_eq!("tensor-hat:2,3".parse::<Target>().unwrap(), Target::tensor_hat(&[2, 3]));
        assert!("hat:0".parse::<Target>().is_err());
        assert!("ridge-C:0,0".parse::<Target>().is_err());
        assert!("wobble".parse::<Target>().is_err());
        let g = Target::from_csv_grid("t,value\n0,0\n0.5,1\n1,0\n").unwrap();
        assert_eq!(g.eval(&[0.25]), 0.5);
        assert!(Target::from_csv_grid("t,value\n0,0\nx,1\n").is_err());
        assert_eq!("tensor_hat".parse::<BasisTag>().unwrap(), BasisTag::TensorHat);
    }

    #[test]
    fn json_round_trip() {
        let e = expand(&"hat:3".parse().unwrap(), BasisTag::Hat, 8).unwrap();
        let s = e.to_json();
        assert!(s.contains("\"basis\":\"hat\""));
        assert_eq!(Expansion::from_json(&s).unwrap(), e);
        assert!(Expansion::from_json(&s[..s.len() - 3]).is_err());
    }

    #[test]
    fn sine_experiment_matches_parseval() {
        let t = convergence_experiment(
            &Target::square_wave(),
            BasisTag::Sine,
            &[2.0],
            &Truncation::Prefix(vec![9, 33]),
            &ExperimentOptions::default(),
        )
        .unwrap();
        let want9: f64 = (5..2_000_000u64).rev().map(|m| 8.0 / ((2 * m + 1) as f64 * PI).powi(2)).sum::<f64>();
        assert!((t.rows[0].error - want9.sqrt()).abs() < 1e-5);
        for r in &t.rows {
            assert!((r.error - r.coeff_tail_l2.unwrap()).abs() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn hat_round_trip_is_identity(alpha in proptest::collection::vec(-1.0f64..1.0, 1..128)) {
            prop_assert!(hat_round_trip_defect(&alpha).unwrap() < 1e-13);
        }
    }
}
