//! Exact inner products and Gram matrices of the sawtooth, ridge and hat systems.
//!
//! All matrices are normalized: every non-constant element is scaled to unit
//! L2 norm, i.e. entries are `3 <phi, psi>` (products of such factors for
//! tensor hats), so the diagonal is exactly 1.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::Serialize;

use crate::eigen::eigenvalues_sym;
use crate::error::{Error, Result};
use crate::index::{ridge_indices, square_order, FreqIndex, MultiIndex};
use crate::par;
use crate::pwl::Family;
use crate::quadrature::integrate_pwl_product;
use crate::rational::ExactRational;
use crate::transfer::{RIESZ_A, RIESZ_B};

/// 2-adic valuation.
pub fn v2(j: u64) -> u32 {
    j.trailing_zeros()
}

fn check_pos(j: u64, k: u64) -> Result<()> {
    if j == 0 || k == 0 {
        Err(Error::ZeroDilation)
    } else {
        Ok(())
    }
}

/// Magnitude `gcd^4 / (3 j^2 k^2)`, or `None` when the 2-adic valuations differ.
fn magnitude(j: u64, k: u64) -> Option<ExactRational> {
    if v2(j) != v2(k) {
        return None;
    }
    let g = BigInt::from(j.gcd(&k));
    let num = g.pow(4);
    let den = BigInt::from(3) * BigInt::from(j).pow(2) * BigInt::from(k).pow(2);
    Some(ExactRational::new(num, den).expect("positive denominator"))
}

/// Whether `<S_j, S_k>` is negative: `(j + k) / (2 gcd)` is an even integer.
fn ss_negative(j: u64, k: u64) -> bool {
    let g = j.gcd(&k);
    let (a, b) = (j / g, k / g);
    (a + b) % 2 == 0 && ((a + b) / 2) % 2 == 0
}

/// `<C_j, C_k>` on `[0, 1]`.
pub fn ip_cc(j: u64, k: u64) -> Result<ExactRational> {
    check_pos(j, k)?;
    Ok(magnitude(j, k).unwrap_or_else(ExactRational::zero))
}

/// `<S_j, S_k>` on `[0, 1]`.
pub fn ip_ss(j: u64, k: u64) -> Result<ExactRational> {
    check_pos(j, k)?;
    Ok(match magnitude(j, k) {
        Some(m) if ss_negative(j, k) => -m,
        Some(m) => m,
        None => ExactRational::zero(),
    })
}

/// `<C_j, S_k>`, which always vanishes.
pub fn ip_cs(j: u64, k: u64) -> Result<ExactRational> {
    check_pos(j, k)?;
    Ok(ExactRational::zero())
}

/// Binary64 value of `3 <f_j, g_k>` for the sawtooth families.
pub fn normalized_ip_f64(f: Family, j: u64, g: Family, k: u64) -> f64 {
    if f != g || v2(j) != v2(k) {
        return 0.0;
    }
    let gcd = j.gcd(&k) as f64;
    let r = gcd * gcd / (j as f64 * k as f64);
    let m = r * r;
    if f == Family::SSaw && ss_negative(j, k) {
        -m
    } else {
        m
    }
}

fn ip_family(f: Family, j: u64, g: Family, k: u64) -> Result<ExactRational> {
    match (f, g) {
        (Family::CSaw, Family::CSaw) => ip_cc(j, k),
        (Family::SSaw, Family::SSaw) => ip_ss(j, k),
        (Family::CSaw, Family::SSaw) | (Family::SSaw, Family::CSaw) => ip_cs(j, k),
        _ => integrate_pwl_product(f, j, g, k),
    }
}

/// `<f(k . x), g(l . x)>` on `[0,1]^n` for canonical `k`, `l`.
///
/// Non-parallel frequencies give 0. For `k = a p`, `l = e b p` with `p`
/// primitive, the integral reduces to the univariate `<f_a, g_b>`, with the
/// sign `e` applied to the odd family.
pub fn ridge_ip(f: Family, k: &FreqIndex, g: Family, l: &FreqIndex) -> Result<ExactRational> {
    if !f.is_sawtooth() || !g.is_sawtooth() {
        return Err(Error::Unsupported("ridge inner products need the C or S family".into()));
    }
    for idx in [k, l] {
        if !idx.is_canonical() {
            return Err(Error::NonCanonical(idx.entries().to_vec()));
        }
    }
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: l.dim(),
        });
    }
    let (pk, a) = k.primitive();
    let (pl, b) = l.primitive();
    let eps = if pk == pl {
        1
    } else if pk.iter().zip(&pl).all(|(x, y)| *x == -*y) {
        -1
    } else {
        return Ok(ExactRational::zero());
    };
    let v = ip_family(f, a, g, b)?;
    Ok(if f == Family::SSaw && g == Family::SSaw && eps < 0 { -v } else { v })
}

/// A truncated basis whose Gram matrix can be assembled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum GramSystem {
    /// `sqrt(3) C_1, ..., sqrt(3) C_N`
    R1C { n: u64 },
    /// `sqrt(3) S_1, ..., sqrt(3) S_N`
    R1S { n: u64 },
    /// `1, sqrt(3) C_1..C_N, sqrt(3) S_1..S_N`
    R1Full { n: u64 },
    /// `1` and `sqrt(3) C_k, sqrt(3) S_k` for canonical `k` with `|k|_inf <= bound`.
    Rn { dim: usize, bound: u64 },
    /// `sqrt(3) S_1, ..., sqrt(3) S_N` (hat dilations).
    Hat { n: u64 },
    /// `3^{d/2} S_m` for the first `side^d` multi-indices in square order.
    TensorHat { dim: usize, side: u64 },
}

impl GramSystem {
    pub fn labels(&self) -> Result<Vec<BasisLabel>> {
        let uni = |f: Family, n: u64| (1..=n).map(move |j| BasisLabel::Ridge { family: f, k: vec![j as i64] });
        let guard = |n: u64| {
            if n == 0 {
                Err(Error::InvalidArgument("system size must be >= 1".into()))
            } else if n > 1 << 14 {
                Err(Error::SizeGuard(format!("system size {n}")))
            } else {
                Ok(())
            }
        };
        Ok(match *self {
            GramSystem::R1C { n } => {
                guard(n)?;
                uni(Family::CSaw, n).collect()
            }
            GramSystem::R1S { n } => {
                guard(n)?;
                uni(Family::SSaw, n).collect()
            }
            GramSystem::R1Full { n } => {
                guard(n)?;
                std::iter::once(BasisLabel::Constant)
                    .chain(uni(Family::CSaw, n))
                    .chain(uni(Family::SSaw, n))
                    .collect()
            }
            GramSystem::Rn { dim, bound } => {
                let ks = ridge_indices(dim, bound)?;
                let mut v = vec![BasisLabel::Constant];
                for k in &ks {
                    for f in [Family::CSaw, Family::SSaw] {
                        v.push(BasisLabel::Ridge {
                            family: f,
                            k: k.entries().to_vec(),
                        });
                    }
                }
                v
            }
            GramSystem::Hat { n } => {
                guard(n)?;
                (1..=n).map(|j| BasisLabel::Hat { m: vec![j] }).collect()
            }
            GramSystem::TensorHat { dim, side } => {
                guard(side)?;
                square_order(dim, side)?
                    .into_iter()
                    .map(|m| BasisLabel::Hat { m: m.entries().to_vec() })
                    .collect()
            }
        })
    }

    fn hat_side(&self) -> Option<u64> {
        match *self {
            GramSystem::Hat { n } => Some(n),
            GramSystem::TensorHat { side, .. } => Some(side),
            _ => None,
        }
    }
}

impl fmt::Display for GramSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GramSystem::R1C { n } => write!(f, "r1c(N={n})"),
            GramSystem::R1S { n } => write!(f, "r1s(N={n})"),
            GramSystem::R1Full { n } => write!(f, "r1(N={n})"),
            GramSystem::Rn { dim, bound } => write!(f, "rn(n={dim},bound={bound})"),
            GramSystem::Hat { n } => write!(f, "hat(N={n})"),
            GramSystem::TensorHat { dim, side } => write!(f, "tensor-hat(n={dim},side={side})"),
        }
    }
}

/// Descriptor of one Gram row/column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisLabel {
    Constant,
    Ridge { family: Family, k: Vec<i64> },
    Hat { m: Vec<u64> },
}

impl BasisLabel {
    /// Factor turning the raw element into a unit-norm one.
    pub fn normalization(&self) -> f64 {
        match self {
            BasisLabel::Constant => 1.0,
            BasisLabel::Ridge { .. } => 3f64.sqrt(),
            BasisLabel::Hat { m } => 3f64.sqrt().powi(m.len() as i32),
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tuple = |v: Vec<String>| if v.len() == 1 { v[0].clone() } else { format!("({})", v.join(",")) };
        match self {
            BasisLabel::Constant => f.write_str("1"),
            BasisLabel::Ridge { family, k } => {
                write!(f, "{family}{}", tuple(k.iter().map(|v| v.to_string()).collect()))
            }
            BasisLabel::Hat { m } => write!(f, "hat{}", tuple(m.iter().map(|v| v.to_string()).collect())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GramEntries {
    Exact(Vec<Vec<ExactRational>>),
    Numeric(Vec<Vec<f64>>),
}

/// Normalized Gram matrix with its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub system: GramSystem,
    pub labels: Vec<BasisLabel>,
    pub entries: GramEntries,
    pub normalization: Vec<f64>,
}

/// 1-D table `3 <S_i, S_j>` for `i, j <= side`.
fn hat_table(side: u64) -> Result<Vec<Vec<ExactRational>>> {
    let rows = par::map_collect(side as usize, |i| {
        (1..=side)
            .map(|j| {
                integrate_pwl_product(Family::Hat, i as u64 + 1, Family::Hat, j)
                    .map(|v| v * ExactRational::from_integer(3))
            })
            .collect::<Result<Vec<_>>>()
    });
    rows.into_iter().collect()
}

fn exact_entry(a: &BasisLabel, b: &BasisLabel, hats: Option<&[Vec<ExactRational>]>) -> Result<ExactRational> {
    Ok(match (a, b) {
        (BasisLabel::Constant, BasisLabel::Constant) => ExactRational::from_integer(1),
        (BasisLabel::Constant, _) | (_, BasisLabel::Constant) => ExactRational::zero(),
        (BasisLabel::Ridge { family: f, k }, BasisLabel::Ridge { family: g, k: l }) => {
            let k = FreqIndex::canonical(k.clone())?;
            let l = FreqIndex::canonical(l.clone())?;
            ridge_ip(*f, &k, *g, &l)? * ExactRational::from_integer(3)
        }
        (BasisLabel::Hat { m }, BasisLabel::Hat { m: k }) => {
            let t = hats.ok_or_else(|| Error::InvalidArgument("missing hat table".into()))?;
            m.iter()
                .zip(k)
                .fold(ExactRational::from_integer(1), |acc, (&i, &j)| acc * t[i as usize - 1][j as usize - 1].clone())
        }
        _ => return Err(Error::Unsupported(format!("mixed Gram entry {a} / {b}"))),
    })
}

fn numeric_entry(a: &BasisLabel, b: &BasisLabel, hats: Option<&[Vec<f64>]>) -> Result<f64> {
    Ok(match (a, b) {
        (BasisLabel::Constant, BasisLabel::Constant) => 1.0,
        (BasisLabel::Constant, _) | (_, BasisLabel::Constant) => 0.0,
        (BasisLabel::Ridge { family: f, k }, BasisLabel::Ridge { family: g, k: l }) => {
            let k = FreqIndex::canonical(k.clone())?;
            let l = FreqIndex::canonical(l.clone())?;
            let (pk, a) = k.primitive();
            let (pl, b) = l.primitive();
            if pk == pl {
                normalized_ip_f64(*f, a, *g, b)
            } else if pk.iter().zip(&pl).all(|(x, y)| *x == -*y) {
                let v = normalized_ip_f64(*f, a, *g, b);
                if *f == Family::SSaw { -v } else { v }
            } else {
                0.0
            }
        }
        (BasisLabel::Hat { m }, BasisLabel::Hat { m: k }) => {
            let t = hats.ok_or_else(|| Error::InvalidArgument("missing hat table".into()))?;
            m.iter().zip(k).map(|(&i, &j)| t[i as usize - 1][j as usize - 1]).product()
        }
        _ => return Err(Error::Unsupported(format!("mixed Gram entry {a} / {b}"))),
    })
}

/// Assembles the normalized Gram matrix of `system`, exactly or in binary64.
pub fn gram(system: &GramSystem, exact: bool) -> Result<GramMatrix> {
    let labels = system.labels()?;
    let n = labels.len();
    if n > 1 << 14 {
        return Err(Error::SizeGuard(format!("Gram matrix of size {n}")));
    }
    let table = system.hat_side().map(hat_table).transpose()?;
    let entries = if exact {
        let rows = par::map_collect(n, |i| {
            (0..n)
                .map(|j| exact_entry(&labels[i], &labels[j], table.as_deref()))
                .collect::<Result<Vec<_>>>()
        });
        GramEntries::Exact(rows.into_iter().collect::<Result<_>>()?)
    } else {
        let ftable: Option<Vec<Vec<f64>>> = table
            .as_ref()
            .map(|t| t.iter().map(|r| r.iter().map(ExactRational::to_f64).collect()).collect());
        let rows = par::map_collect(n, |i| {
            (0..n)
                .map(|j| numeric_entry(&labels[i], &labels[j], ftable.as_deref()))
                .collect::<Result<Vec<_>>>()
        });
        GramEntries::Numeric(rows.into_iter().collect::<Result<_>>()?)
    };
    let normalization = labels.iter().map(BasisLabel::normalization).collect();
    Ok(GramMatrix {
        system: system.clone(),
        labels,
        entries,
        normalization,
    })
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.entries, GramEntries::Exact(_))
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        match &self.entries {
            GramEntries::Exact(m) => m.iter().map(|r| r.iter().map(ExactRational::to_f64).collect()).collect(),
            GramEntries::Numeric(m) => m.clone(),
        }
    }

    pub fn exact(&self) -> Option<&[Vec<ExactRational>]> {
        match &self.entries {
            GramEntries::Exact(m) => Some(m),
            GramEntries::Numeric(_) => None,
        }
    }

    /// Sorted eigenvalues.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        eigenvalues_sym(&self.to_f64(), 1e-15)
    }

    /// Non-zero entries as `row,col,value` lines with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let m = self.to_f64();
        let mut out = String::from("row,col,value\n");
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "{i},{j},{v:.16e}");
                }
            }
        }
        out
    }

    /// Exact JSON form: labels plus non-zero entries as numerator/denominator strings.
    pub fn to_exact_json(&self) -> Result<serde_json::Value> {
        let m = self
            .exact()
            .ok_or_else(|| Error::InvalidArgument("exact JSON needs an exactly assembled matrix".into()))?;
        let mut entries = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    entries.push(serde_json::json!({
                        "row": i,
                        "col": j,
                        "num": v.numerator().to_string(),
                        "den": v.denominator().to_string(),
                    }));
                }
            }
        }
        Ok(serde_json::json!({
            "system": self.system,
            "size": self.size(),
            "labels": self.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "normalization": self.normalization,
            "entries": entries,
        }))
    }
}

/// The sets `I^r = { j <= N : v2(j) = r }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    pub n: u64,
    pub blocks: Vec<Vec<u64>>,
}

pub fn block_partition(n: u64) -> Result<BlockPartition> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let levels = 64 - n.leading_zeros() as usize;
    let mut blocks = vec![Vec::new(); levels];
    for j in 1..=n {
        blocks[v2(j) as usize].push(j);
    }
    Ok(BlockPartition { n, blocks })
}

/// `eps_j = +1` if the odd part of `j` is `1 mod 4`, else `-1`.
pub fn sign_of(j: u64) -> i8 {
    let odd = j >> v2(j);
    if odd % 4 == 1 {
        1
    } else {
        -1
    }
}

pub fn sign_diagonal(n: u64) -> Vec<i8> {
    (1..=n).map(sign_of).collect()
}

/// Outcome of comparing the spectra of the C and S Gram matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectraReport {
    pub n: u64,
    /// `G^S = D G^C D` entrywise in exact arithmetic.
    pub identity_holds: bool,
    pub max_gap: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn spectra_coincide(n: u64) -> Result<SpectraReport> {
    let gc = gram(&GramSystem::R1C { n }, true)?;
    let gs = gram(&GramSystem::R1S { n }, true)?;
    let d = sign_diagonal(n);
    let (c, s) = (gc.exact().expect("exact"), gs.exact().expect("exact"));
    let mut identity_holds = true;
    for i in 0..n as usize {
        for j in 0..n as usize {
            let flipped = if d[i] * d[j] < 0 { -c[i][j].clone() } else { c[i][j].clone() };
            if flipped != s[i][j] {
                identity_holds = false;
            }
        }
    }
    let ec = gc.spectrum()?;
    let es = gs.spectrum()?;
    let max_gap = ec.iter().zip(&es).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SpectraReport {
        n,
        identity_holds,
        max_gap,
        lambda_min: ec[0],
        lambda_max: ec[ec.len() - 1],
    })
}

/// Extreme eigenvalues of a normalized truncated Gram matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RieszReport {
    pub system: GramSystem,
    pub size: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Both bounds inside `[A, B]` of the infinite system (with 1e-6 slack).
    pub within_riesz_interval: bool,
}

pub fn riesz_bounds(system: &GramSystem) -> Result<RieszReport> {
    let g = gram(system, false)?;
    let ev = g.spectrum()?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    Ok(RieszReport {
        system: system.clone(),
        size: g.size(),
        lambda_min: lo,
        lambda_max: hi,
        within_riesz_interval: lo >= RIESZ_A - 1e-6 && hi <= RIESZ_B + 1e-6,
    })
}

/// Convenience for tests and the CLI: the multi-index of a hat label.
pub fn hat_index(label: &BasisLabel) -> Option<MultiIndex> {
    match label {
        BasisLabel::Hat { m } => MultiIndex::new(m.clone()).ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> ExactRational {
        ExactRational::from_i64(n, d)
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(ip_cc(1, 1).unwrap(), r(1, 3));
        assert_eq!(ip_cc(2, 3).unwrap(), r(0, 1));
        assert_eq!(ip_cc(3, 9).unwrap(), r(1, 27));
        assert_eq!(ip_cc(2, 6).unwrap(), r(1, 27));
        assert_eq!(ip_ss(1, 3).unwrap(), r(-1, 27));
        assert_eq!(ip_ss(1, 5).unwrap(), r(1, 75));
        assert_eq!(ip_ss(3, 5).unwrap(), r(-1, 675));
        assert_eq!(ip_cs(4, 6).unwrap(), r(0, 1));
        assert!(ip_cc(0, 1).is_err());
    }

    #[test]
    fn ridge_examples() {
        let k = |v: &[i64]| FreqIndex::canonical(v.to_vec()).unwrap();
        use Family::*;
        assert_eq!(ridge_ip(CSaw, &k(&[1, 0]), CSaw, &k(&[3, 0])).unwrap(), r(1, 27));
        assert_eq!(ridge_ip(CSaw, &k(&[1, 1]), CSaw, &k(&[1, 2])).unwrap(), r(0, 1));
        assert_eq!(ridge_ip(SSaw, &k(&[1, 1]), SSaw, &k(&[1, 1])).unwrap(), r(1, 3));
        assert_eq!(ridge_ip(CSaw, &k(&[1, 2]), SSaw, &k(&[1, 2])).unwrap(), r(0, 1));
        let neg = FreqIndex::new(vec![-1, 0]).unwrap();
        assert!(matches!(ridge_ip(CSaw, &neg, CSaw, &k(&[1, 0])), Err(Error::NonCanonical(_))));
        assert!(ridge_ip(Hat, &k(&[1]), Hat, &k(&[1])).is_err());
    }

    #[test]
    fn gram_examples() {
        let g = gram(&GramSystem::R1C { n: 1 }, true).unwrap();
        assert_eq!(g.exact().unwrap(), &[vec![r(1, 1)]]);
        let g = gram(&GramSystem::R1C { n: 3 }, true).unwrap();
        let m = g.exact().unwrap();
        assert_eq!(m[0][2], r(1, 9));
        assert_eq!(m[0][1], r(0, 1));
        let ev = g.spectrum().unwrap();
        assert!((ev[0] - 8.0 / 9.0).abs() < 1e-15 && (ev[2] - 10.0 / 9.0).abs() < 1e-15);
        let g = gram(&GramSystem::Rn { dim: 2, bound: 1 }, true).unwrap();
        let m = g.exact().unwrap();
        for i in 0..g.size() {
            assert_eq!(m[i][i], r(1, 1));
        }
        // bound 1 frequencies are pairwise non-parallel: the matrix is the identity.
        assert!(m.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, v)| (i == j) != v.is_zero())));
    }

    #[test]
    fn hat_gram_diagonal_is_one() {
        let g = gram(&GramSystem::Hat { n: 12 }, true).unwrap();
        let m = g.exact().unwrap();
        for i in 0..12 {
            assert_eq!(m[i][i], r(1, 1));
        }
        let t = gram(&GramSystem::TensorHat { dim: 2, side: 3 }, true).unwrap();
        assert_eq!(t.size(), 9);
        assert_eq!(t.exact().unwrap()[4][4], r(1, 1));
    }

    #[test]
    fn numeric_matches_exact() {
        for sys in [
            GramSystem::R1Full { n: 24 },
            GramSystem::Rn { dim: 2, bound: 3 },
            GramSystem::Hat { n: 10 },
        ] {
            let e = gram(&sys, true).unwrap().to_f64();
            let f = gram(&sys, false).unwrap().to_f64();
            for (a, b) in e.iter().flatten().zip(f.iter().flatten()) {
                assert!((a - b).abs() <= 1e-15, "{sys}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn partitions_and_signs() {
        let p = block_partition(8).unwrap();
        assert_eq!(p.blocks, vec![vec![1, 3, 5, 7], vec![2, 6], vec![4], vec![8]]);
        assert_eq!(block_partition(1).unwrap().blocks, vec![vec![1]]);
        assert_eq!(block_partition(6).unwrap().blocks, vec![vec![1, 3, 5], vec![2, 6], vec![4]]);
        assert_eq!(sign_of(1), 1);
        assert_eq!(sign_of(3), -1);
        assert_eq!(sign_of(5), 1);
        assert_eq!(sign_of(6), -1);
        assert_eq!(sign_of(12), -1);
    }

    #[test]
    fn spectra_examples() {
        let r = spectra_coincide(3).unwrap();
        assert!(r.identity_holds && r.max_gap <= 1e-12);
        assert!((r.lambda_min - 8.0 / 9.0).abs() < 1e-14);
        let r = spectra_coincide(1).unwrap();
        assert!(r.identity_holds && r.max_gap == 0.0);
    }

    #[test]
    fn riesz_examples() {
        let r = riesz_bounds(&GramSystem::R1Full { n: 3 }).unwrap();
        assert!((r.lambda_min - 8.0 / 9.0).abs() < 1e-14);
        assert!((r.lambda_max - 10.0 / 9.0).abs() < 1e-14);
        let r = riesz_bounds(&GramSystem::R1C { n: 1 }).unwrap();
        assert_eq!((r.lambda_min, r.lambda_max), (1.0, 1.0));
        let r = riesz_bounds(&GramSystem::Rn { dim: 2, bound: 3 }).unwrap();
        assert!(r.within_riesz_interval);
    }

    #[test]
    fn serialization() {
        let g = gram(&GramSystem::R1C { n: 3 }, true).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("row,col,value\n0,0,1.0000000000000000e0\n"));
        assert!(csv.contains("0,2,1.1111111111111110e-1"));
        let js = g.to_exact_json().unwrap();
        assert_eq!(js["entries"][1]["num"], "1");
        assert_eq!(js["entries"][1]["den"], "9");
        assert_eq!(js["labels"][2], "C3");
        assert!(gram(&GramSystem::R1C { n: 3 }, false).unwrap().to_exact_json().is_err());
    }
}
