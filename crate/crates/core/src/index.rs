//! Frequency vectors, multi-indices and the enumeration orders used by the
//! truncated systems.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer frequency vector `k != 0` of a ridge function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreqIndex {
    entries: Vec<i64>,
    canonical: bool,
}

impl FreqIndex {
    pub fn new(entries: Vec<i64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("frequency vector must have length >= 1".into()));
        }
        let first = entries.iter().copied().find(|&v| v != 0).ok_or(Error::ZeroFrequency)?;
        Ok(Self {
            canonical: first > 0,
            entries,
        })
    }

    /// Builds a canonical index, rejecting inputs whose first non-zero entry is negative.
    pub fn canonical(entries: Vec<i64>) -> Result<Self> {
        let k = Self::new(entries)?;
        if !k.canonical {
            return Err(Error::NonCanonical(k.entries));
        }
        Ok(k)
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn inf_norm(&self) -> u64 {
        self.entries.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }

    /// gcd of the absolute values of the entries.
    pub fn content(&self) -> u64 {
        self.entries.iter().fold(0u64, |g, v| g.gcd(&v.unsigned_abs()))
    }

    /// Primitive vector `k / gcd` together with the gcd.
    pub fn primitive(&self) -> (Vec<i64>, u64) {
        let g = self.content();
        (self.entries.iter().map(|v| v / g as i64).collect(), g)
    }
}

impl fmt::Display for FreqIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.entries.iter())
    }
}

fn write_tuple<T: fmt::Display>(f: &mut fmt::Formatter<'_>, it: impl Iterator<Item = T>) -> fmt::Result {
    f.write_str("(")?;
    for (i, v) in it.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(")")
}

/// Flips `k` so that its first non-zero entry is positive.
///
/// The returned sign is `-1` iff the input was flipped: `sin(2 pi k.x)` and
/// `S_k` pick it up, `cos(2 pi k.x)` and `C_k` do not.
pub fn canonicalize(k: &[i64]) -> Result<(FreqIndex, i8)> {
    let idx = FreqIndex::new(k.to_vec())?;
    if idx.canonical {
        Ok((idx, 1))
    } else {
        let flipped = k.iter().map(|v| -v).collect();
        Ok((FreqIndex::canonical(flipped)?, -1))
    }
}

/// Positive-integer multi-index `m` in `N^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u64>);

impl MultiIndex {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("multi-index must have length >= 1".into()));
        }
        if entries.contains(&0) {
            return Err(Error::ZeroDilation);
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> u64 {
        self.0.iter().copied().min().unwrap_or(0)
    }

    /// Componentwise order `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise product `m k`.
    pub fn mul(&self, other: &MultiIndex) -> Result<MultiIndex> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let v = self.0.iter().zip(&other.0).map(|(a, b)| a.checked_mul(*b)).collect::<Option<Vec<_>>>();
        v.map(MultiIndex).ok_or_else(|| Error::SizeGuard("multi-index product overflows".into()))
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&v| v as i64).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.0.iter())
    }
}

/// All vectors in `{1..m}^d` in lexicographic order.
fn cube(d: usize, m: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::with_capacity(d)];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (1..=m).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// The shell `{max = m}` of `N^n` in square order.
pub fn square_shell(n: usize, m: u64) -> Vec<MultiIndex> {
    assert!(n >= 1 && m >= 1);
    let mut out: Vec<MultiIndex> = cube(n - 1, m)
        .into_iter()
        .map(|mut p| {
            p.push(m);
            MultiIndex(p)
        })
        .collect();
    let mut rest: Vec<Vec<u64>> = cube(n - 1, m)
        .into_iter()
        .filter(|p| p.iter().any(|&v| v == m))
        .flat_map(|p| {
            (1..m).map(move |last| {
                let mut q = p.clone();
                q.push(last);
                q
            })
        })
        .collect();
    rest.sort_unstable_by(|a, b| b.cmp(a));
    out.extend(rest.into_iter().map(MultiIndex));
    out
}

/// `{1..N}^n` enumerated shell by shell; every prefix of length `m^n` is the cube `{1..m}^n`.
pub fn square_order(n: usize, side: u64) -> Result<Vec<MultiIndex>> {
    if n == 0 || side == 0 {
        return Err(Error::InvalidArgument("square_order needs n >= 1 and N >= 1".into()));
    }
    let total = (side as u128).checked_pow(n as u32).filter(|&t| t <= 1 << 26);
    if total.is_none() {
        return Err(Error::SizeGuard(format!("{side}^{n} indices")));
    }
    Ok((1..=side).flat_map(|m| square_shell(n, m)).collect())
}

/// The first `count` elements of the square ordering of `N^n`.
pub fn square_prefix(n: usize, count: usize) -> Result<Vec<MultiIndex>> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if count > 1 << 26 {
        return Err(Error::SizeGuard(format!("{count} indices")));
    }
    let mut out = Vec::with_capacity(count);
    let mut m = 1;
    while out.len() < count {
        out.extend(square_shell(n, m));
        m += 1;
    }
    out.truncate(count);
    Ok(out)
}

fn check_schedule(schedule: &[u64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty Pringsheim schedule".into()));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "Pringsheim schedule must be strictly increasing positive side lengths".into(),
        ));
    }
    Ok(())
}

/// Cubic rectangle bounds `(s, ..., s)` for each schedule entry `s`.
pub fn pringsheim_rectangles(n: usize, schedule: &[u64]) -> Result<Vec<Vec<u64>>> {
    pringsheim_rectangles_scaled(&vec![1; n], schedule)
}

/// Rectangle bounds `(a_1 s, ..., a_n s)`; with `min a_i = 1` the minimum side follows the schedule.
pub fn pringsheim_rectangles_scaled(aspect: &[u64], schedule: &[u64]) -> Result<Vec<Vec<u64>>> {
    check_schedule(schedule)?;
    if aspect.is_empty() || aspect.contains(&0) {
        return Err(Error::InvalidArgument("aspect factors must be positive".into()));
    }
    Ok(schedule
        .iter()
        .map(|&s| aspect.iter().map(|&a| a * s).collect())
        .collect())
}

/// Stage (0-based) at which a rectangle with the given bound is admitted:
/// the last schedule entry not exceeding its minimum side.
pub fn pringsheim_stage(bound: &[u64], schedule: &[u64]) -> Result<Option<usize>> {
    check_schedule(schedule)?;
    let min = bound.iter().copied().min().unwrap_or(0);
    Ok(schedule.iter().rposition(|&s| s <= min))
}

/// All indices `k <= bound` componentwise.
pub fn rectangle_indices(bound: &[u64]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u64>| {
                (1..=b).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(MultiIndex).collect()
}

/// Canonical `k in Z^n` with `0 < |k|_inf <= bound`, ordered by `(|k|_inf, lexicographic)`.
pub fn ridge_indices(n: usize, bound: u64) -> Result<Vec<FreqIndex>> {
    if n == 0 || bound == 0 {
        return Err(Error::InvalidArgument("ridge enumeration needs n >= 1 and bound >= 1".into()));
    }
    let side = 2 * bound as u128 + 1;
    if side.checked_pow(n as u32).filter(|&t| t <= 1 << 24).is_none() {
        return Err(Error::SizeGuard(format!("ridge indices with n = {n}, bound = {bound}")));
    }
    let b = bound as i64;
    let mut all = vec![Vec::new()];
    for _ in 0..n {
        all = all
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-b..=b).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let mut out: Vec<FreqIndex> = all
        .into_iter()
        .filter(|k| k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
        .map(|k| FreqIndex {
            entries: k,
            canonical: true,
        })
        .collect();
    out.sort_by(|a, b| a.inf_norm().cmp(&b.inf_norm()).then_with(|| a.entries.cmp(&b.entries)));
    Ok(out)
}
