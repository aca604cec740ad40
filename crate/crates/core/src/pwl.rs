//! Evaluation of the piecewise-linear basis families.
//!
//! Three base shapes are supported:
//!
//! * `CSaw`: `C(x) = 4|x - 1/2| - 1` on `[0, 1]`, extended 1-periodically,
//! * `SSaw`: `S(x) = |2 - 4|x - 1/4|| - 1` on `[0, 1]`, extended 1-periodically,
//! * `Hat`: the tent `2t` / `2(1 - t)` on `[0, 1]`, extended by
//!   `S(t) = (-1)^floor(t) S({t})` (antiperiodic with period 1, periodic with period 2).
//!
//! Dilations are evaluated by argument reduction, so the cost is O(1)
//! regardless of the dilation index.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::rational::ExactRational;

/// Largest supported magnitude of a (dilated) argument. Beyond this the
/// fractional part of a binary64 value carries no information.
pub const MAX_ARGUMENT: f64 = 4_503_599_627_370_496.0; // 2^52

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "C")]
    CSaw,
    #[serde(rename = "S")]
    SSaw,
    #[serde(rename = "hat")]
    Hat,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::CSaw, Family::SSaw, Family::Hat];

    /// Value of the base function without the range check of [`eval_base`].
    #[inline]
    pub fn value(self, t: f64) -> f64 {
        let fl = t.floor();
        let r = t - fl;
        match self {
            Family::CSaw => {
                if r <= 0.5 {
                    1.0 - 4.0 * r
                } else {
                    4.0 * r - 3.0
                }
            }
            Family::SSaw => {
                if r <= 0.25 {
                    4.0 * r
                } else if r <= 0.75 {
                    2.0 - 4.0 * r
                } else {
                    4.0 * r - 4.0
                }
            }
            Family::Hat => {
                let v = if r <= 0.5 { 2.0 * r } else { 2.0 - 2.0 * r };
                if fl.rem_euclid(2.0) == 1.0 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Whether the family is one of the two sawtooth shapes usable in ridge systems.
    pub fn is_sawtooth(self) -> bool {
        matches!(self, Family::CSaw | Family::SSaw)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Family::CSaw => "C",
            Family::SSaw => "S",
            Family::Hat => "hat",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c" | "csaw" | "c_saw" | "cos" => Ok(Family::CSaw),
            "s" | "ssaw" | "s_saw" | "sin" => Ok(Family::SSaw),
            "hat" | "h" => Ok(Family::Hat),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

fn check_range(t: f64) -> Result<()> {
    if t.abs() > MAX_ARGUMENT {
        Err(Error::OutOfRange(t))
    } else {
        Ok(())
    }
}

/// Value of the base function of `family` at `t`.
pub fn eval_base(family: Family, t: f64) -> Result<f64> {
    check_range(t)?;
    Ok(family.value(t))
}

/// Value of the dilation `family(k t)`.
pub fn eval_dilated(family: Family, k: u64, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroDilation);
    }
    eval_base(family, k as f64 * t)
}

/// Exact value of `family(k t)` at a rational `t`.
pub fn eval_dilated_exact(family: Family, k: u64, t: &ExactRational) -> Result<ExactRational> {
    if k == 0 {
        return Err(Error::ZeroDilation);
    }
    let u = t.as_big() * BigRational::from_integer(BigInt::from(k));
    Ok(eval_base_exact(family, &u).into())
}

/// Exact value of the base function at a rational argument.
pub fn eval_base_exact(family: Family, t: &BigRational) -> BigRational {
    let fl = t.floor();
    let r = t - &fl;
    let half = BigRational::new(1.into(), 2.into());
    let quarter = BigRational::new(1.into(), 4.into());
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    match family {
        Family::CSaw => {
            if r <= half {
                int(1) - int(4) * r
            } else {
                int(4) * r - int(3)
            }
        }
        Family::SSaw => {
            if r <= quarter {
                int(4) * r
            } else if r <= int(3) * &quarter {
                int(2) - int(4) * r
            } else {
                int(4) * r - int(4)
            }
        }
        Family::Hat => {
            let v = if r <= half { int(2) * &r } else { int(2) - int(2) * &r };
            if fl.to_integer().is_odd() {
                -v
            } else {
                v
            }
        }
    }
}

/// A periodic piecewise-linear function given by exact breakpoints on one period.
///
/// Only the three base shapes are constructed; this is the exact description
/// used for kink enumeration by the quadrature and ReLU compilers.
#[derive(Clone, Debug, PartialEq)]
pub struct PwlPeriodic {
    period: Ratio<i64>,
    breakpoints: Vec<Ratio<i64>>,
    values: Vec<Ratio<i64>>,
    antiperiodic: bool,
}

impl PwlPeriodic {
    pub fn base(family: Family) -> Self {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        let (breakpoints, values, antiperiodic) = match family {
            Family::CSaw => (
                vec![r(0, 1), r(1, 2), r(1, 1)],
                vec![r(1, 1), r(-1, 1), r(1, 1)],
                false,
            ),
            Family::SSaw => (
                vec![r(0, 1), r(1, 4), r(3, 4), r(1, 1)],
                vec![r(0, 1), r(1, 1), r(-1, 1), r(0, 1)],
                false,
            ),
            Family::Hat => (
                vec![r(0, 1), r(1, 2), r(1, 1)],
                vec![r(0, 1), r(1, 1), r(0, 1)],
                true,
            ),
        };
        Self {
            period: Ratio::one(),
            breakpoints,
            values,
            antiperiodic,
        }
    }

    pub fn period(&self) -> Ratio<i64> {
        self.period
    }

    pub fn breakpoints(&self) -> &[Ratio<i64>] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Ratio<i64>] {
        &self.values
    }

    pub fn is_antiperiodic(&self) -> bool {
        self.antiperiodic
    }

    fn period_sign(&self, n: i64) -> i64 {
        if self.antiperiodic && n.is_odd() {
            -1
        } else {
            1
        }
    }

    /// Linear interpolation between the stored breakpoints.
    pub fn eval(&self, t: f64) -> f64 {
        let p = *self.period.numer() as f64 / *self.period.denom() as f64;
        let n = (t / p).floor();
        let r = t - n * p;
        let sign = if self.antiperiodic && n.rem_euclid(2.0) == 1.0 { -1.0 } else { 1.0 };
        let f = |q: &Ratio<i64>| *q.numer() as f64 / *q.denom() as f64;
        let i = self
            .breakpoints
            .windows(2)
            .position(|w| r <= f(&w[1]))
            .unwrap_or(self.breakpoints.len() - 2);
        let (x0, x1) = (f(&self.breakpoints[i]), f(&self.breakpoints[i + 1]));
        let (y0, y1) = (f(&self.values[i]), f(&self.values[i + 1]));
        if r == x0 {
            return sign * y0;
        }
        if r == x1 {
            return sign * y1;
        }
        sign * (y0 + (y1 - y0) * (r - x0) / (x1 - x0))
    }

    /// Slope of the segment with index `seg` in period `n`.
    fn slope(&self, n: i64, seg: usize) -> Ratio<i64> {
        let dy = self.values[seg + 1] - self.values[seg];
        let dx = self.breakpoints[seg + 1] - self.breakpoints[seg];
        dy / dx * Ratio::from_integer(self.period_sign(n))
    }

    /// Exact value at a breakpoint `n * period + breakpoints[i]`.
    fn value_at(&self, n: i64, i: usize) -> Ratio<i64> {
        self.values[i] * Ratio::from_integer(self.period_sign(n))
    }

    /// Kinks strictly inside `(lo, hi)` as `(position, slope change)`, plus
    /// the slope just right of `lo` and the value at `lo`.
    ///
    /// Breakpoints at which the slope does not change are dropped.
    pub fn kinks_in(&self, lo: i64, hi: i64) -> KinkList {
        assert!(lo < hi && self.period == Ratio::one());
        let last = self.breakpoints.len() - 1;
        let mut kinks = Vec::new();
        let mut prev_slope = self.slope(lo, 0);
        for n in lo..hi {
            for i in 0..last {
                let pos = Ratio::from_integer(n) + self.breakpoints[i];
                let slope = self.slope(n, i);
                if pos > Ratio::from_integer(lo) && slope != prev_slope {
                    kinks.push((pos, slope - prev_slope));
                }
                prev_slope = slope;
            }
        }
        KinkList {
            start_value: self.value_at(lo, 0),
            start_slope: self.slope(lo, 0),
            kinks,
        }
    }
}

/// Exact kink description of a base function on an integer interval.
#[derive(Clone, Debug, PartialEq)]
pub struct KinkList {
    pub start_value: Ratio<i64>,
    pub start_slope: Ratio<i64>,
    pub kinks: Vec<(Ratio<i64>, Ratio<i64>)>,
}

/// Outcome of checking that the hat dilation `S_j` interpolates `sin(j pi t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HatInterpolation {
    pub j: u64,
    /// Number of nodes `m / (2j)`, `m = 0..=2j`.
    pub nodes: usize,
    /// Exact rational evaluation matches the exact sine values {-1, 0, 1}.
    pub exact: bool,
    /// Largest |S_j(t) - sin(j pi t)| over the nodes in binary64.
    pub max_abs_deviation: f64,
    /// Whether the dyadic nodes `m / 2^j` (m = 0..=2^j, only checked for
    /// j <= 20) are also interpolation nodes.
    pub dyadic_nodes_interpolate: Option<bool>,
}

/// Checks `S_j(m/(2j)) = sin(j pi m/(2j))` for `m = 0..=2j`.
pub fn hat_interpolates_sine(j: u64) -> Result<HatInterpolation> {
    if j == 0 {
        return Err(Error::ZeroDilation);
    }
    let mut exact = true;
    let mut max_dev: f64 = 0.0;
    for m in 0..=2 * j {
        // sin(m pi / 2) cycles through 0, 1, 0, -1.
        let target: i64 = match m % 4 {
            1 => 1,
            3 => -1,
            _ => 0,
        };
        let node = BigRational::new(BigInt::from(m), BigInt::from(2 * j));
        let y = eval_base_exact(Family::Hat, &(node * BigRational::from_integer(j.into())));
        if y != BigRational::from_integer(target.into()) {
            exact = false;
        }
        let t = m as f64 / (2 * j) as f64;
        let approx = Family::Hat.value(j as f64 * t);
        let sine = (j as f64 * std::f64::consts::PI * t).sin();
        max_dev = max_dev.max((approx - sine).abs());
    }
    let dyadic_nodes_interpolate = (j <= 20).then(|| {
        let den = 1u64 << j;
        (0..=den).all(|m| {
            let node = BigRational::new(BigInt::from(m), BigInt::from(den));
            let y = eval_base_exact(Family::Hat, &(node.clone() * BigRational::from_integer(j.into())));
            let t = m as f64 / den as f64;
            let sine = (j as f64 * std::f64::consts::PI * t).sin();
            let yv = num_traits::ToPrimitive::to_f64(&y).unwrap_or(f64::NAN);
            (yv - sine).abs() <= 1e-12
        })
    });
    Ok(HatInterpolation {
        j,
        nodes: (2 * j + 1) as usize,
        exact,
        max_abs_deviation: max_dev,
        dyadic_nodes_interpolate,
    })
}

/// Tensor-product value `phi(m_1 x_1) ... phi(m_n x_n)`.
pub fn eval_tensor(family: Family, m: &MultiIndex, x: &[f64]) -> Result<f64> {
    if m.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            got: x.len(),
        });
    }
    m.entries()
        .iter()
        .zip(x)
        .try_fold(1.0, |acc, (&mi, &xi)| Ok(acc * eval_dilated(family, mi, xi)?))
}

/// Dot product `k . x` accumulated with fused multiply-adds.
#[inline]
pub fn dot(k: &[i64], x: &[f64]) -> f64 {
    k.iter().zip(x).fold(0.0, |acc, (&ki, &xi)| (ki as f64).mul_add(xi, acc))
}

/// Ridge value `phi(k . x)` for a sawtooth family.
pub fn eval_ridge(family: Family, k: &[i64], x: &[f64]) -> Result<f64> {
    if !family.is_sawtooth() {
        return Err(Error::Unsupported(format!(
            "ridge functions are defined for the C and S sawtooth families, not '{family}'"
        )));
    }
    if k.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: k.len(),
            got: x.len(),
        });
    }
    if k.iter().all(|&v| v == 0) {
        return Err(Error::ZeroFrequency);
    }
    eval_base(family, dot(k, x))
}

/// Reference trigonometric systems.
#[derive(Clone, Debug, PartialEq)]
pub enum TrigKind {
    /// `e_j(t) = sqrt(2) sin(j pi t)`.
    Sine(u64),
    /// `e_m(x) = 2^{n/2} prod sin(pi m_i x_i)`.
    TensorSine(MultiIndex),
    /// `sqrt(2) cos(2 pi k . x)`.
    CosRidge(Vec<i64>),
    /// `sqrt(2) sin(2 pi k . x)`.
    SinRidge(Vec<i64>),
    Const,
}

pub fn eval_trig(kind: &TrigKind, x: &[f64]) -> Result<f64> {
    use std::f64::consts::{PI, SQRT_2};
    let need_dim = |n: usize| {
        if x.len() != n {
            Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            })
        } else {
            Ok(())
        }
    };
    match kind {
        TrigKind::Sine(j) => {
            if *j == 0 {
                return Err(Error::ZeroDilation);
            }
            need_dim(1)?;
            Ok(SQRT_2 * (*j as f64 * PI * x[0]).sin())
        }
        TrigKind::TensorSine(m) => {
            need_dim(m.len())?;
            Ok(m.entries()
                .iter()
                .zip(x)
                .map(|(&mi, &xi)| SQRT_2 * (mi as f64 * PI * xi).sin())
                .product())
        }
        TrigKind::CosRidge(k) | TrigKind::SinRidge(k) => {
            need_dim(k.len())?;
            if k.iter().all(|&v| v == 0) {
                return Err(Error::ZeroFrequency);
            }
            let phase = 2.0 * PI * dot(k, x);
            Ok(if matches!(kind, TrigKind::CosRidge(_)) {
                SQRT_2 * phase.cos()
            } else {
                SQRT_2 * phase.sin()
            })
        }
        TrigKind::Const => Ok(1.0),
    }
}

/// Exact slope magnitude of the dilation `family(k t)`.
pub fn dilated_slope(family: Family, k: u64) -> i64 {
    let s = match family {
        Family::CSaw | Family::SSaw => 4,
        Family::Hat => 2,
    };
    s * k as i64
}

/// Convenience: rational `n / d` as a `BigRational`.
pub fn big_ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Whether a rational argument's value of `family` lies in `[-1, 1]`.
pub fn within_unit(family: Family, t: &BigRational) -> bool {
    let v = eval_base_exact(family, t);
    v.abs() <= BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn base_values() {
        assert_eq!(eval_base(Family::CSaw, 0.0).unwrap(), 1.0);
        assert_eq!(eval_base(Family::SSaw, 0.25).unwrap(), 1.0);
        assert_eq!(eval_base(Family::Hat, 1.5).unwrap(), -1.0);
        assert_eq!(eval_base(Family::SSaw, 0.75).unwrap(), -1.0);
        assert_eq!(eval_base(Family::CSaw, 0.5).unwrap(), -1.0);
        assert_eq!(eval_base(Family::Hat, 0.5).unwrap(), 1.0);
        assert_eq!(eval_base(Family::Hat, -0.5).unwrap(), -1.0);
    }

    #[test]
    fn dilated_values() {
        assert_eq!(eval_dilated(Family::CSaw, 3, 1.0 / 6.0).unwrap(), -1.0);
        assert_eq!(eval_dilated(Family::Hat, 0, 0.3), Err(Error::ZeroDilation));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(eval_base(Family::CSaw, 1e17), Err(Error::OutOfRange(_))));
        assert!(eval_base(Family::CSaw, MAX_ARGUMENT).is_ok());
        assert!(eval_dilated(Family::SSaw, 1 << 40, 1e6).is_err());
    }

    #[test]
    fn hat_two_is_s_saw() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let a = eval_dilated(Family::Hat, 2, x).unwrap();
            let b = eval_dilated(Family::SSaw, 1, x).unwrap();
            assert!((a - b).abs() <= 1e-15, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn hat_even_dilations_are_s_saw_dilations_on_dyadic_grid() {
        for m in 1..=64u64 {
            for i in 0..=4096 {
                let x = i as f64 / 4096.0;
                assert_eq!(
                    eval_dilated(Family::Hat, 2 * m, x).unwrap(),
                    eval_dilated(Family::SSaw, m, x).unwrap(),
                    "m = {m}, x = {x}"
                );
            }
        }
    }

    #[test]
    fn hat_even_dilations_exact_on_rational_grid() {
        for m in 1..=64i64 {
            for i in 0..=97 {
                let x = big_ratio(i, 97);
                let a = eval_base_exact(Family::Hat, &(x.clone() * big_ratio(2 * m, 1)));
                let b = eval_base_exact(Family::SSaw, &(x * big_ratio(m, 1)));
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn hat_interpolation() {
        for j in [1, 2, 7, 30] {
            let rep = hat_interpolates_sine(j).unwrap();
            assert!(rep.exact, "j = {j}");
            assert_eq!(rep.nodes, 2 * j as usize + 1);
            assert!(rep.max_abs_deviation <= 1e-12);
        }
        // The dyadic node set only works for j <= 2.
        assert_eq!(hat_interpolates_sine(2).unwrap().dyadic_nodes_interpolate, Some(true));
        assert_eq!(hat_interpolates_sine(3).unwrap().dyadic_nodes_interpolate, Some(false));
        assert!(hat_interpolates_sine(0).is_err());
    }

    #[test]
    fn tensor_values() {
        let m = |v: &[u64]| MultiIndex::new(v.to_vec()).unwrap();
        assert_eq!(eval_tensor(Family::Hat, &m(&[1, 1]), &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(eval_tensor(Family::Hat, &m(&[2, 1]), &[0.25, 0.5]).unwrap(), 1.0);
        assert_eq!(eval_tensor(Family::Hat, &m(&[1, 1]), &[0.5, 1.5]).unwrap(), -1.0);
        assert!(matches!(
            eval_tensor(Family::Hat, &m(&[1, 1]), &[0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ridge_values() {
        assert_eq!(eval_ridge(Family::CSaw, &[1, 2], &[0.25, 0.25]).unwrap(), 0.0);
        assert_eq!(eval_ridge(Family::CSaw, &[0, 0], &[0.25, 0.25]), Err(Error::ZeroFrequency));
        assert!(eval_ridge(Family::Hat, &[1], &[0.25]).is_err());
    }

    #[test]
    fn trig_values() {
        use std::f64::consts::SQRT_2;
        assert!((eval_trig(&TrigKind::Sine(1), &[0.5]).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((eval_trig(&TrigKind::CosRidge(vec![1, 0]), &[0.0, 0.37]).unwrap() - SQRT_2).abs() < 1e-15);
        let m = MultiIndex::new(vec![1, 1]).unwrap();
        assert!((eval_trig(&TrigKind::TensorSine(m), &[0.5, 0.5]).unwrap() - 2.0).abs() < 1e-15);
        assert!(eval_trig(&TrigKind::Sine(0), &[0.5]).is_err());
        assert!(eval_trig(&TrigKind::SinRidge(vec![1]), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn breakpoint_values_are_exact() {
        for family in Family::ALL {
            let p = PwlPeriodic::base(family);
            assert_eq!(p.breakpoints().first(), Some(&Ratio::from_integer(0)));
            assert_eq!(p.breakpoints().last(), Some(&p.period()));
            assert_eq!(p.breakpoints().len(), p.values().len());
            for (b, v) in p.breakpoints().iter().zip(p.values()) {
                let t = *b.numer() as f64 / *b.denom() as f64;
                let expect = *v.numer() as f64 / *v.denom() as f64;
                assert_eq!(p.eval(t), expect);
                assert_eq!(family.value(t), expect);
            }
        }
    }

    #[test]
    fn kink_lists() {
        // C on (0, 1): one interior kink at 1/2, slope -4 -> +4.
        let k = PwlPeriodic::base(Family::CSaw).kinks_in(0, 1);
        assert_eq!(k.start_value, Ratio::from_integer(1));
        assert_eq!(k.start_slope, Ratio::from_integer(-4));
        assert_eq!(k.kinks, vec![(Ratio::new(1, 2), Ratio::from_integer(8))]);
        // hat on (0, 3): kinks only at 1/2, 3/2, 5/2.
        let k = PwlPeriodic::base(Family::Hat).kinks_in(0, 3);
        let pos: Vec<_> = k.kinks.iter().map(|(p, _)| *p).collect();
        assert_eq!(pos, vec![Ratio::new(1, 2), Ratio::new(3, 2), Ratio::new(5, 2)]);
        // S on (-1, 1): kinks at -3/4, -1/4, 1/4, 3/4; 0 is not a kink.
        let k = PwlPeriodic::base(Family::SSaw).kinks_in(-1, 1);
        assert_eq!(k.kinks.len(), 4);
        assert_eq!(k.start_value, Ratio::from_integer(0));
    }

    proptest! {
        #[test]
        fn symmetries(x in -50.0f64..50.0) {
            let c = |t: f64| Family::CSaw.value(t);
            let s = |t: f64| Family::SSaw.value(t);
            let h = |t: f64| Family::Hat.value(t);
            prop_assert!((c(x) - c(1.0 - x)).abs() <= 1e-12);
            prop_assert!((s(x) + s(1.0 - x)).abs() <= 1e-12);
            prop_assert!((h(x + 1.0) + h(x)).abs() <= 1e-12);
            for f in Family::ALL {
                prop_assert!(f.value(x).abs() <= 1.0);
            }
        }

        #[test]
        fn interpolation_matches_closed_form(x in -20.0f64..20.0) {
            for f in Family::ALL {
                let p = PwlPeriodic::base(f);
                prop_assert!((p.eval(x) - f.value(x)).abs() <= 1e-12);
            }
        }

        #[test]
        fn ridge_parity(k in proptest::collection::vec(-6i64..=6, 3), x in proptest::collection::vec(0.0f64..1.0, 3)) {
            prop_assume!(k.iter().any(|&v| v != 0));
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            let s = eval_ridge(Family::SSaw, &k, &x).unwrap();
            let sn = eval_ridge(Family::SSaw, &neg, &x).unwrap();
            prop_assert!((s + sn).abs() <= 1e-12);
            let c = eval_ridge(Family::CSaw, &k, &x).unwrap();
            let cn = eval_ridge(Family::CSaw, &neg, &x).unwrap();
            prop_assert!((c - cn).abs() <= 1e-12);
        }

        #[test]
        fn exact_evaluation_bounded(n in -1000i64..1000, d in 1i64..200) {
            let t = big_ratio(n, d);
            for f in Family::ALL {
                prop_assert!(within_unit(f, &t));
            }
        }
    }
}
