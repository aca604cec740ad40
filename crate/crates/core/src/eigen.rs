//! Dense symmetric eigenvalues by cyclic Jacobi rotations.
//!
//! The Gram matrices here are block structured, so the matrix is first split
//! into the connected components of its non-zero pattern and each component
//! is diagonalized on its own.

use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 30;

/// Relative symmetry tolerance accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// All eigenvalues of the symmetric matrix `m`, sorted ascending.
///
/// Iterates until the off-diagonal Frobenius norm of every component is
/// below `tol * ||M||_F`.
pub fn eigenvalues_sym(m: &[Vec<f64>], tol: f64) -> Result<Vec<f64>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let scale = frobenius(m);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[i][j] - m[j][i]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(worst / scale));
    }

    let mut out = Vec::with_capacity(n);
    for comp in components(m) {
        let mut a: Vec<Vec<f64>> = comp
            .iter()
            .map(|&i| comp.iter().map(|&j| 0.5 * (m[i][j] + m[j][i])).collect())
            .collect();
        jacobi(&mut a, tol * scale)?;
        out.extend((0..a.len()).map(|i| a[i][i]));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Smallest and largest eigenvalue.
pub fn extreme_eigenvalues(m: &[Vec<f64>], tol: f64) -> Result<(f64, f64)> {
    let ev = eigenvalues_sym(m, tol)?;
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::InvalidArgument("empty matrix".into())),
    }
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Connected components of the graph with an edge wherever `m[i][j] != 0`.
fn components(m: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = m.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..i {
            if m[i][j] != 0.0 || m[j][i] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn off_norm(a: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..i {
            s += 2.0 * a[i][j] * a[i][j];
        }
    }
    s.sqrt()
}

fn jacobi(a: &mut [Vec<f64>], threshold: f64) -> Result<()> {
    let n = a.len();
    if n < 2 {
        return Ok(());
    }
    for _ in 0..MAX_SWEEPS {
        if off_norm(a) <= threshold {
            return Ok(());
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let off = off_norm(a);
    if off <= threshold {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two() {
        for s in [1.0, -1.0] {
            let m = vec![vec![1.0, s / 9.0], vec![s / 9.0, 1.0]];
            let ev = eigenvalues_sym(&m, 1e-15).unwrap();
            assert!((ev[0] - 8.0 / 9.0).abs() < 1e-15);
            assert!((ev[1] - 10.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity() {
        let n = 7;
        let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
        assert_eq!(eigenvalues_sym(&m, 1e-14).unwrap(), vec![1.0; n]);
    }

    #[test]
    fn rejects_bad_input() {
        let m = vec![vec![1.0, 0.5], vec![0.4, 1.0]];
        assert!(matches!(eigenvalues_sym(&m, 1e-12), Err(Error::NotSymmetric(_))));
        let m = vec![vec![1.0, 0.5]];
        assert!(eigenvalues_sym(&m, 1e-12).is_err());
    }

    #[test]
    fn known_spectrum() {
        // Second-difference matrix: 2 - 2 cos(k pi / (n + 1)).
        let n: usize = 12;
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match i.abs_diff(j) {
                        0 => 2.0,
                        1 => -1.0,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        let ev = eigenvalues_sym(&m, 1e-15).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - want).abs() < 1e-13, "{e} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn trace_and_frobenius_preserved(v in proptest::collection::vec(-1.0f64..1.0, 36)) {
            let n: usize = 6;
            let m: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| v[i.min(j) * n + i.max(j)]).collect())
                .collect();
            let ev = eigenvalues_sym(&m, 1e-14).unwrap();
            let tr: f64 = (0..n).map(|i| m[i][i]).sum();
            prop_assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-12);
            let f2: f64 = m.iter().flatten().map(|x| x * x).sum();
            prop_assert!((ev.iter().map(|x| x * x).sum::<f64>() - f2).abs() < 1e-11);
        }
    }
}
