//! Integration on the unit interval and cube.
//!
//! * products of two dilated base functions: exact, in rational arithmetic,
//! * a dilated base function against a trigonometric factor: closed form,
//! * general integrands: composite 16-point Gauss-Legendre split at kinks,
//!   randomized Kronecker lattices, and plain Monte Carlo.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::pwl::Family;
use crate::rational::ExactRational;

/// Largest dilation accepted by the exact product integrator.
pub const MAX_EXACT_DILATION: u64 = 1 << 14;

const GL_ORDER: usize = 16;

/// Nodes and weights of the 16-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_16() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER).try_into_arrays())
}

trait IntoArrays {
    fn try_into_arrays(self) -> ([f64; GL_ORDER], [f64; GL_ORDER]);
}

impl IntoArrays for (Vec<f64>, Vec<f64>) {
    fn try_into_arrays(self) -> ([f64; GL_ORDER], [f64; GL_ORDER]) {
        (
            self.0.try_into().expect("rule size"),
            self.1.try_into().expect("rule size"),
        )
    }
}

/// Gauss-Legendre rule of order `n` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Kink positions of `family(j x)` in `[0, 1]`, as numerators over `4 j`,
/// including both endpoints.
fn grid_points(family: Family, j: u64) -> impl Iterator<Item = u64> {
    let top = 4 * j;
    (0..=top).filter(move |&q| {
        q == 0
            || q == top
            || match family {
                Family::CSaw => q % 2 == 0,
                Family::SSaw => q % 2 == 1,
                Family::Hat => q % 4 == 2,
            }
    })
}

/// `u * family(j v / u)`, an integer for integer `v` since all slopes are integers.
fn scaled_value(family: Family, j: u64, v: i128, u: i128) -> i128 {
    let y = j as i128 * v;
    let (fl, r) = (y.div_euclid(u), y.rem_euclid(u));
    match family {
        Family::CSaw => {
            if 2 * r <= u {
                u - 4 * r
            } else {
                4 * r - 3 * u
            }
        }
        Family::SSaw => {
            if 4 * r <= u {
                4 * r
            } else if 4 * r <= 3 * u {
                2 * u - 4 * r
            } else {
                4 * r - 4 * u
            }
        }
        Family::Hat => {
            let v = if 2 * r <= u { 2 * r } else { 2 * u - 2 * r };
            if fl.rem_euclid(2) == 1 {
                -v
            } else {
                v
            }
        }
    }
}

/// Exact `int_0^1 f(j x) g(k x) dx`.
///
/// Both factors are linear between the merged kinks, so Simpson's rule is
/// exact on every segment; all nodes lie on the grid `x = v / U` with
/// `U = 16 lcm(j, k)`, where the scaled values `U f` are integers.
pub fn integrate_pwl_product(f: Family, j: u64, g: Family, k: u64) -> Result<ExactRational> {
    if j == 0 || k == 0 {
        return Err(Error::ZeroDilation);
    }
    if j > MAX_EXACT_DILATION || k > MAX_EXACT_DILATION {
        return Err(Error::SizeGuard(format!(
            "dilations {j}, {k} exceed the breakpoint guard {MAX_EXACT_DILATION}"
        )));
    }
    let l = j.lcm(&k);
    let u = 16 * l as i128;
    // Grid numerator q over 4j maps to v = q * (U / 4j).
    let sj = (u / (4 * j as i128)) as u64;
    let sk = (u / (4 * k as i128)) as u64;
    let mut pts: Vec<u64> = grid_points(f, j).map(|q| q * sj).chain(grid_points(g, k).map(|q| q * sk)).collect();
    pts.sort_unstable();
    pts.dedup();
    let prod = |v: i128| scaled_value(f, j, v, u) * scaled_value(g, k, v, u);
    let mut acc: i128 = 0;
    for w in pts.windows(2) {
        let (v0, v1) = (w[0] as i128, w[1] as i128);
        // v0, v1 are multiples of 4 so the midpoint is an integer grid point.
        let vm = (v0 + v1) / 2;
        acc += (v1 - v0) * (prod(v0) + 4 * prod(vm) + prod(v1));
    }
    let den = BigInt::from(6) * BigInt::from(u).pow(3);
    ExactRational::new(BigInt::from(acc), den)
}

/// Trigonometric factor for [`integrate_pwl_trig`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrigFactor {
    /// `sin(j pi t)`
    SinPi(u64),
    /// `cos(2 pi k t)`
    Cos2Pi(u64),
    /// `sin(2 pi k t)`
    Sin2Pi(u64),
}

/// `int_0^1 f(j t) w(t) dt` by exact antiderivatives of `(a + b t) w(t)` on each linear piece.
pub fn integrate_pwl_trig(f: Family, j: u64, w: TrigFactor) -> Result<f64> {
    if j == 0 {
        return Err(Error::ZeroDilation);
    }
    if j > 1 << 24 {
        return Err(Error::SizeGuard(format!("dilation {j}")));
    }
    let (omega, is_sin) = match w {
        TrigFactor::SinPi(m) => (m as f64 * PI, true),
        TrigFactor::Cos2Pi(m) => (2.0 * m as f64 * PI, false),
        TrigFactor::Sin2Pi(m) => (2.0 * m as f64 * PI, true),
    };
    let den = (4 * j) as f64;
    let pts: Vec<u64> = grid_points(f, j).collect();
    let mut acc = 0.0;
    for p in pts.windows(2) {
        let (t0, t1) = (p[0] as f64 / den, p[1] as f64 / den);
        let (y0, y1) = (f.value(p[0] as f64 / 4.0), f.value(p[1] as f64 / 4.0));
        let b = (y1 - y0) / (t1 - t0);
        acc += linear_trig_integral(y0, b, t0, t1, omega, is_sin);
    }
    Ok(acc)
}

/// `int_{t0}^{t1} (y0 + b (t - t0)) w(omega t) dt`, `w = sin` or `cos`.
fn linear_trig_integral(y0: f64, b: f64, t0: f64, t1: f64, omega: f64, is_sin: bool) -> f64 {
    let h = t1 - t0;
    if omega == 0.0 {
        return if is_sin { 0.0 } else { y0 * h + 0.5 * b * h * h };
    }
    let y1 = y0 + b * h;
    let (s0, c0) = (omega * t0).sin_cos();
    let (s1, c1) = (omega * t1).sin_cos();
    let o2 = omega * omega;
    if is_sin {
        // d/dt [-(y) cos / w + b sin / w^2]
        (-(y1 * c1 - y0 * c0)) / omega + b * (s1 - s0) / o2
    } else {
        (y1 * s1 - y0 * s0) / omega + b * (c1 - c0) / o2
    }
}

/// Integral or norm value with a panel-doubling (or sample) error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

fn segments(hints: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = hints.iter().copied().filter(|h| *h > 0.0 && *h < 1.0).collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    pts
}

/// Composite Gauss-Legendre over `[lo, hi]` with `panels` equal panels.
fn gl_interval(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre_16();
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        let mid = a + 0.5 * h;
        let mut s = 0.0;
        for i in 0..GL_ORDER {
            s += w[i] * f(mid + 0.5 * h * x[i]);
        }
        acc += 0.5 * h * s;
    }
    acc
}

fn gl_split(f: &dyn Fn(f64) -> f64, pts: &[f64], panels: usize) -> f64 {
    pts.windows(2).map(|s| gl_interval(f, s[0], s[1], panels)).sum()
}

/// Nodes and weights of the composite rule on `[0, 1]` split at `hints`.
pub fn gl_rule(hints: &[f64], panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre_16();
    let pts = segments(hints);
    let mut xs = Vec::with_capacity((pts.len() - 1) * panels * GL_ORDER);
    let mut ws = Vec::with_capacity(xs.capacity());
    for s in pts.windows(2) {
        let h = (s[1] - s[0]) / panels.max(1) as f64;
        for p in 0..panels.max(1) {
            let mid = s[0] + (p as f64 + 0.5) * h;
            for i in 0..GL_ORDER {
                xs.push(mid + 0.5 * h * gx[i]);
                ws.push(0.5 * h * gw[i]);
            }
        }
    }
    (xs, ws)
}

/// Flattened quadrature nodes on `[0,1]^n`: `points[i*n..(i+1)*n]` has weight `weights[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    pub n: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn integrate(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
        let parts = par::map_collect(self.len().div_ceil(4096), |c| {
            let hi = ((c + 1) * 4096).min(self.len());
            (c * 4096..hi).map(|i| self.weights[i] * f(self.point(i))).sum::<f64>()
        });
        parts.into_iter().sum()
    }
}

/// Materializes the nested kink-split Gauss-Legendre rule used by
/// [`integrate_tensor`], refusing to build more than `max_nodes` nodes.
pub fn tensor_nodes(n: usize, hints: &KinkHints, panels: usize, max_nodes: usize) -> Result<NodeSet> {
    if n == 0 || panels == 0 {
        return Err(Error::InvalidArgument("tensor rule needs n >= 1 and panels >= 1".into()));
    }
    let mut set = NodeSet {
        n,
        points: Vec::new(),
        weights: Vec::new(),
    };
    let mut x = Vec::with_capacity(n);
    fn rec(
        hints: &KinkHints,
        n: usize,
        panels: usize,
        x: &mut Vec<f64>,
        w: f64,
        set: &mut NodeSet,
        max_nodes: usize,
    ) -> Result<()> {
        if x.len() == n {
            if set.weights.len() >= max_nodes {
                return Err(Error::SizeGuard(format!("more than {max_nodes} quadrature nodes")));
            }
            set.points.extend_from_slice(x);
            set.weights.push(w);
            return Ok(());
        }
        let pts = axis_breakpoints(hints, x.len(), x, n);
        let (gx, gw) = gauss_legendre_16();
        for s in pts.windows(2) {
            let h = (s[1] - s[0]) / panels as f64;
            for p in 0..panels {
                let mid = s[0] + (p as f64 + 0.5) * h;
                for q in 0..GL_ORDER {
                    x.push(mid + 0.5 * h * gx[q]);
                    rec(hints, n, panels, x, w * 0.5 * h * gw[q], set, max_nodes)?;
                    x.pop();
                }
            }
        }
        Ok(())
    }
    rec(hints, n, panels, &mut x, 1.0, &mut set, max_nodes)?;
    Ok(set)
}

/// `int_0^1 f` split at `hints`, `panels` Gauss-Legendre panels per segment,
/// with the difference to the half-panel rule as error estimate.
pub fn integrate(f: &dyn Fn(f64) -> f64, hints: &[f64], panels: usize) -> Result<NormEstimate> {
    if panels == 0 {
        return Err(Error::InvalidArgument("panels must be >= 1".into()));
    }
    let pts = segments(hints);
    let fine = gl_split(f, &pts, 2 * panels);
    let coarse = gl_split(f, &pts, panels);
    Ok(NormEstimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0) || !q.is_finite() {
        Err(Error::InvalidExponent(q))
    } else {
        Ok(())
    }
}

fn norm_from_integral(i: NormEstimate, q: f64) -> NormEstimate {
    let value = i.value.max(0.0).powf(1.0 / q);
    // d(I^{1/q}) = I^{1/q - 1} dI / q
    let error_estimate = if i.value > 0.0 {
        value / (q * i.value) * i.error_estimate
    } else {
        i.error_estimate.powf(1.0 / q)
    };
    NormEstimate { value, error_estimate }
}

/// `||f||_{L_q(0,1)}` for `1 < q < inf` by composite Gauss-Legendre split at `hints`.
pub fn lq_norm(f: &dyn Fn(f64) -> f64, q: f64, hints: &[f64], panels: usize) -> Result<NormEstimate> {
    check_q(q)?;
    let g = |t: f64| f(t).abs().powf(q);
    Ok(norm_from_integral(integrate(&g, hints, panels)?, q))
}

/// Kink information for integrands on `[0,1]^n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KinkHints {
    /// Per-axis breakpoints.
    pub axis: Vec<Vec<f64>>,
    /// Hyperplane families `w . x = c`, one entry `(w, offsets)` each.
    pub planes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl KinkHints {
    pub fn none(n: usize) -> Self {
        Self {
            axis: vec![Vec::new(); n],
            planes: Vec::new(),
        }
    }

    /// Breakpoints `j / m` on every axis, bounding the panel width by `1/m`.
    pub fn add_uniform(&mut self, m: usize) {
        for axis in &mut self.axis {
            axis.extend((1..m).map(|j| j as f64 / m as f64));
        }
    }

    /// Kinks of `phi(k . x)` for a sawtooth family: `k . x` in `step Z` plus `shift`.
    pub fn add_ridge(&mut self, family: Family, k: &[i64]) {
        let lo: i64 = k.iter().map(|&v| v.min(0)).sum();
        let hi: i64 = k.iter().map(|&v| v.max(0)).sum();
        // base kinks in quarters: C at even quarters, S at odd quarters
        let offsets = (4 * lo..=4 * hi)
            .filter(|q| match family {
                Family::CSaw => q.rem_euclid(2) == 0,
                Family::SSaw => q.rem_euclid(2) == 1,
                Family::Hat => q.rem_euclid(4) == 2,
            })
            .map(|q| q as f64 / 4.0)
            .collect();
        self.planes.push((k.iter().map(|&v| v as f64).collect(), offsets));
    }
}

/// Breakpoints on axis `i` given the already fixed coordinates `x[..i]`.
fn axis_breakpoints(hints: &KinkHints, i: usize, x: &[f64], n: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = hints.axis.get(i).cloned().unwrap_or_default();
    let rest = n - i - 1;
    for (w, offsets) in &hints.planes {
        if w[i] == 0.0 {
            continue;
        }
        let fixed: f64 = (0..i).map(|j| w[j] * x[j]).sum();
        for corner in 0..(1usize << rest) {
            let tail: f64 = (0..rest)
                .filter(|b| corner >> b & 1 == 1)
                .map(|b| w[i + 1 + b])
                .sum();
            for c in offsets {
                let t = (c - fixed - tail) / w[i];
                if t > 0.0 && t < 1.0 {
                    pts.push(t);
                }
            }
        }
    }
    segments(&pts)
}

fn nested(f: &dyn Fn(&[f64]) -> f64, hints: &KinkHints, x: &mut Vec<f64>, n: usize, panels: usize) -> f64 {
    let i = x.len();
    if i == n {
        return f(x);
    }
    let pts = axis_breakpoints(hints, i, x, n);
    let (gx, gw) = gauss_legendre_16();
    let mut acc = 0.0;
    for s in pts.windows(2) {
        let h = (s[1] - s[0]) / panels as f64;
        for p in 0..panels {
            let mid = s[0] + (p as f64 + 0.5) * h;
            for q in 0..GL_ORDER {
                x.push(mid + 0.5 * h * gx[q]);
                acc += 0.5 * h * gw[q] * nested(f, hints, x, n, panels);
                x.pop();
            }
        }
    }
    acc
}

/// `int_{[0,1]^n} f` by nested Gauss-Legendre with kink splitting, `n <= 3`.
pub fn integrate_tensor(f: &(dyn Fn(&[f64]) -> f64 + Sync), n: usize, hints: &KinkHints, panels: usize) -> Result<NormEstimate> {
    if n == 0 || n > 3 {
        return Err(Error::InvalidArgument(format!(
            "tensor Gauss-Legendre supports 1 <= n <= 3, got {n}"
        )));
    }
    if panels == 0 {
        return Err(Error::InvalidArgument("panels must be >= 1".into()));
    }
    if hints.planes.iter().any(|(w, _)| w.len() != n) || hints.axis.len() > n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: hints.planes.first().map_or(hints.axis.len(), |p| p.0.len()),
        });
    }
    let run = |p: usize| {
        // Parallelize over the outermost segments and panels.
        let pts = axis_breakpoints(hints, 0, &[], n);
        let (gx, gw) = gauss_legendre_16();
        let mut jobs = Vec::new();
        for s in pts.windows(2) {
            let h = (s[1] - s[0]) / p as f64;
            for k in 0..p {
                jobs.push((s[0] + (k as f64 + 0.5) * h, h));
            }
        }
        par::map_collect(jobs.len(), |idx| {
            let (mid, h) = jobs[idx];
            let mut acc = 0.0;
            let mut x = Vec::with_capacity(n);
            for q in 0..GL_ORDER {
                x.clear();
                x.push(mid + 0.5 * h * gx[q]);
                acc += 0.5 * h * gw[q] * nested(f, hints, &mut x, n, p);
            }
            acc
        })
        .into_iter()
        .sum::<f64>()
    };
    let fine = run(2 * panels);
    let coarse = run(panels);
    Ok(NormEstimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

/// Randomly shifted rank-1 Kronecker lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QmcRule {
    pub points: usize,
    pub shifts: usize,
    pub seed: u64,
}

impl QmcRule {
    pub fn new(points: usize, seed: u64) -> Self {
        Self {
            points,
            shifts: 16,
            seed,
        }
    }
}

/// Generator of the `R_n` sequence: `alpha_i = phi^{-i}` with `phi^{n+1} = phi + 1`.
fn kronecker_alpha(n: usize) -> Vec<f64> {
    let mut phi: f64 = 2.0;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (n as f64 + 1.0));
    }
    (1..=n).map(|i| phi.powi(-(i as i32)).fract()).collect()
}

/// Mean of `f` over the shifted lattice, one estimate per shift.
pub fn integrate_qmc(f: &(dyn Fn(&[f64]) -> f64 + Sync), n: usize, rule: QmcRule) -> Result<NormEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if rule.shifts < 2 || rule.points == 0 {
        return Err(Error::InvalidArgument("QMC needs >= 2 shifts and >= 1 point".into()));
    }
    if n >= 4 && rule.points < 1 << 16 {
        return Err(Error::InvalidArgument(format!(
            "QMC in dimension {n} needs at least 2^16 points, got {}",
            rule.points
        )));
    }
    let alpha = kronecker_alpha(n);
    let mut rng = ChaCha8Rng::seed_from_u64(rule.seed);
    let shifts: Vec<Vec<f64>> = (0..rule.shifts)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let means = par::map_collect(rule.shifts, |s| {
        let shift = &shifts[s];
        let mut x = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..rule.points {
            for d in 0..n {
                x[d] = (shift[d] + i as f64 * alpha[d]).fract();
            }
            acc += f(&x);
        }
        acc / rule.points as f64
    });
    Ok(mean_and_error(&means))
}

fn mean_and_error(v: &[f64]) -> NormEstimate {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    NormEstimate {
        value: mean,
        error_estimate: (var / m).sqrt(),
    }
}

/// Multivariate quadrature mode for [`lq_norm_multi`].
#[derive(Clone, Debug, PartialEq)]
pub enum MultiMode {
    TensorGl { hints: KinkHints, panels: usize },
    Qmc(QmcRule),
}

/// `||f||_{L_q((0,1)^n)}` with an error estimate.
pub fn lq_norm_multi(f: &(dyn Fn(&[f64]) -> f64 + Sync), q: f64, n: usize, mode: &MultiMode) -> Result<NormEstimate> {
    check_q(q)?;
    let g = |x: &[f64]| f(x).abs().powf(q);
    let i = match mode {
        MultiMode::TensorGl { hints, panels } => integrate_tensor(&g, n, hints, *panels)?,
        MultiMode::Qmc(rule) => integrate_qmc(&g, n, *rule)?,
    };
    Ok(norm_from_integral(i, q))
}

/// Monte Carlo estimate of `int f g` over `[0,1]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

const MC_CHUNK: u64 = 1 << 16;

/// `count` uniform points in `[0,1)^n` from a seeded ChaCha8 stream.
pub fn random_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Plain Monte Carlo with ChaCha8; chunk `c` uses stream `c` of the seeded
/// generator, so results do not depend on the thread count.
pub fn mc_inner_product(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("need >= 1000 samples, got {samples}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = par::map_collect(chunks as usize, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = MC_CHUNK.min(samples - c as u64 * MC_CHUNK);
        let mut x = vec![0.0; n];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            for xi in x.iter_mut() {
                *xi = rng.random::<f64>();
            }
            let v = f(&x) * g(&x);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
        samples,
        seed,
    })
}

/// Kinks of `family(j t)` inside `(0, 1)`.
pub fn kink_hints(family: Family, j: u64) -> Vec<f64> {
    let den = (4 * j) as f64;
    grid_points(family, j).map(|q| q as f64 / den).filter(|t| *t > 0.0 && *t < 1.0).collect()
}

/// Panel count giving width at most `1 / (4 freq)` on the unit interval.
pub fn panels_for_frequency(freq: u64) -> usize {
    (4 * freq.max(1)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::eval_dilated;
    use proptest::prelude::*;

    #[test]
    fn gl_exact_on_polynomials() {
        let (x, w) = gauss_legendre_16();
        for deg in 0..=31 {
            let s: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((s - exact).abs() <= 1e-15, "degree {deg}: {s} vs {exact}");
        }
    }

    #[test]
    fn exact_products() {
        use Family::*;
        assert_eq!(integrate_pwl_product(CSaw, 1, CSaw, 1).unwrap(), ExactRational::from_i64(1, 3));
        assert_eq!(integrate_pwl_product(CSaw, 1, SSaw, 1).unwrap(), ExactRational::zero());
        assert_eq!(integrate_pwl_product(Hat, 1, Hat, 1).unwrap(), ExactRational::from_i64(1, 3));
        assert_eq!(integrate_pwl_product(CSaw, 3, CSaw, 9).unwrap(), ExactRational::from_i64(1, 27));
        assert_eq!(integrate_pwl_product(SSaw, 3, SSaw, 5).unwrap(), ExactRational::from_i64(-1, 675));
        assert!(integrate_pwl_product(CSaw, 0, CSaw, 1).is_err());
        assert!(matches!(
            integrate_pwl_product(CSaw, 1 << 15, CSaw, 1),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn trig_products() {
        use std::f64::consts::SQRT_2;
        let tau1 = 4.0 * SQRT_2 / (PI * PI);
        let t = SQRT_2 * integrate_pwl_trig(Family::Hat, 1, TrigFactor::SinPi(1)).unwrap();
        assert!((t - tau1).abs() < 1e-15);
        assert!(integrate_pwl_trig(Family::Hat, 1, TrigFactor::SinPi(2)).unwrap().abs() < 1e-15);
        let c = integrate_pwl_trig(Family::CSaw, 1, TrigFactor::Cos2Pi(1)).unwrap();
        assert!((c - 4.0 / (PI * PI)).abs() < 1e-15);
        let s = integrate_pwl_trig(Family::SSaw, 1, TrigFactor::Sin2Pi(3)).unwrap();
        assert!((s + 4.0 / (9.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn lq_norms() {
        let one = |_: f64| 1.0;
        for q in [1.5, 2.0, 3.0] {
            assert!((lq_norm(&one, q, &[], 1).unwrap().value - 1.0).abs() < 1e-14);
        }
        let e1 = |t: f64| 2f64.sqrt() * (PI * t).sin();
        assert!((lq_norm(&e1, 2.0, &[], 4).unwrap().value - 1.0).abs() < 1e-12);
        let s1 = |t: f64| 3f64.sqrt() * Family::SSaw.value(t);
        let n = lq_norm(&s1, 2.0, &kink_hints(Family::SSaw, 1), 1).unwrap();
        assert!((n.value - 1.0).abs() < 1e-12);
        assert!(n.error_estimate < 1e-12);
        assert!(matches!(lq_norm(&one, 1.0, &[], 1), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn multivariate_norms() {
        let one = |_: &[f64]| 1.0;
        let gl = MultiMode::TensorGl {
            hints: KinkHints::none(2),
            panels: 1,
        };
        assert!((lq_norm_multi(&one, 2.0, 2, &gl).unwrap().value - 1.0).abs() < 1e-14);
        let c = |x: &[f64]| 3f64.sqrt() * Family::CSaw.value(x[0] + x[1]);
        let mut hints = KinkHints::none(2);
        hints.add_ridge(Family::CSaw, &[1, 1]);
        let mode = MultiMode::TensorGl { hints, panels: 1 };
        assert!((lq_norm_multi(&c, 2.0, 2, &mode).unwrap().value - 1.0).abs() < 1e-10);
        let e = |x: &[f64]| 2.0 * (PI * x[0]).sin() * (PI * x[1]).sin();
        assert!((lq_norm_multi(&e, 2.0, 2, &gl).unwrap().value - 1.0).abs() < 1e-12);
        let bad = MultiMode::TensorGl {
            hints: KinkHints::none(4),
            panels: 1,
        };
        assert!(lq_norm_multi(&one, 2.0, 4, &bad).is_err());
        assert!(lq_norm_multi(&one, 2.0, 4, &MultiMode::Qmc(QmcRule::new(1000, 1))).is_err());
    }

    #[test]
    fn qmc_agrees_with_tensor_rule() {
        let f = |x: &[f64]| Family::CSaw.value(x[0] + 2.0 * x[1] - x[2]).powi(2) + x[0] * x[2];
        let mut hints = KinkHints::none(3);
        hints.add_ridge(Family::CSaw, &[1, 2, -1]);
        let gl = integrate_tensor(&f, 3, &hints, 1).unwrap();
        let qmc = integrate_qmc(&f, 3, QmcRule::new(1 << 14, 7)).unwrap();
        assert!((gl.value - (1.0 / 3.0 + 0.25)).abs() < 1e-12);
        assert!((qmc.value - gl.value).abs() <= 5.0 * qmc.error_estimate.max(1e-9));
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let c1 = |x: &[f64]| Family::CSaw.value(x[0]);
        let c3 = |x: &[f64]| Family::CSaw.value(3.0 * x[0]);
        let a = mc_inner_product(&c1, &c3, 2, 200_000, 42).unwrap();
        let b = mc_inner_product(&c1, &c3, 2, 200_000, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - 1.0 / 27.0).abs() <= 3.0 * a.std_error);
        assert!(mc_inner_product(&c1, &c3, 2, 10, 42).is_err());
    }

    proptest! {
        #[test]
        fn exact_matches_gauss_legendre(fi in 0usize..3, gi in 0usize..3, j in 1u64..40, k in 1u64..40) {
            let (f, g) = (Family::ALL[fi], Family::ALL[gi]);
            let exact = integrate_pwl_product(f, j, g, k).unwrap().to_f64();
            let mut hints = kink_hints(f, j);
            hints.extend(kink_hints(g, k));
            let h = |t: f64| eval_dilated(f, j, t).unwrap() * eval_dilated(g, k, t).unwrap();
            let num = integrate(&h, &hints, 1).unwrap().value;
            prop_assert!((exact - num).abs() <= 1e-13, "{} vs {}", exact, num);
        }
    }
}
