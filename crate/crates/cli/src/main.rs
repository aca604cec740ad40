use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use pwlbasis::expand::{
    convergence_experiment, expand, reconstruct, BasisTag, Expansion, ExperimentOptions, Target, Truncation,
};
use pwlbasis::gram::{gram, riesz_bounds, spectra_coincide, GramSystem};
use pwlbasis::index::{canonicalize, pringsheim_rectangles_scaled, ridge_indices};
use pwlbasis::pwl::{eval_dilated, eval_dilated_exact, eval_ridge, Family};
use pwlbasis::quadrature::random_points;
use pwlbasis::relu::{compile_ridge, compile_univariate, export_json, import_json, max_deviation, ReluNet};
use pwlbasis::transfer::{
    apply_t, dirichlet_inverse_dense, odd_periodic_extension, periodic_extension, riesz_constants_via_neumann,
    schauder_criterion, tau, OperatorKind, OperatorSpec, RieszKind, RIESZ_A, RIESZ_B,
};
use pwlbasis::{Error, ExactRational, FreqIndex};

const REPORT_SCHEMA: &str = "pwlbasis.run-report/1";

#[derive(Parser)]
#[command(name = "pwlbasis", version, about = "Piecewise-linear Fourier-like bases: Gram matrices, transfer operators, expansions, ReLU export")]
struct Cli {
    /// Write the primary output (CSV or JSON) to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a machine-readable run report on stdout.
    #[arg(long = "json-report", global = true)]
    json_report: bool,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a basis function (univariate dilation or ridge function).
    Eval(EvalArgs),
    /// Truncated normalized Gram matrix as CSV, or exact rational JSON with --exact.
    Gram(GramArgs),
    /// Compare the spectra of the C and S Gram matrices.
    Spectra(SpectraArgs),
    /// Extreme eigenvalues of a truncated Gram matrix against the Riesz interval.
    Riesz(GramArgs),
    /// Sine coefficients of the hat function and their Dirichlet inverse.
    Tau(TauArgs),
    /// Check the truncated transfer operator against the basis functions it produces.
    TransferVerify(TransferArgs),
    /// Expand a built-in or sampled function in one of the bases.
    Expand(ExpandArgs),
    /// Evaluate a stored expansion on a grid.
    Reconstruct(ReconstructArgs),
    /// L_q errors of partial sums along a truncation schedule.
    Convergence(ConvergenceArgs),
    /// Dimension criterion for the multivariate Neumann argument.
    Criterion(CriterionArgs),
    /// Compile a basis function into an exact ReLU network (JSON).
    ReluExport(ReluArgs),
    /// Sample grids of C, S, C_2 and S_2 on [0, 1] as CSV.
    Plotdata(PlotArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// C, S or hat.
    #[arg(long)]
    family: Family,
    /// Dilation `k`, or a comma-separated frequency vector for ridge functions.
    #[arg(long, allow_hyphen_values = true)]
    k: String,
    /// Comma-separated arguments (univariate); rationals such as 1/3 with --exact.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Points for ridge functions: `x1,x2;y1,y2;...`.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Uniform grid with M + 1 points on [0, 1] (univariate).
    #[arg(long = "M")]
    m: Option<usize>,
    /// Exact rational evaluation.
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemKind {
    /// 1, sqrt3 C_k, sqrt3 S_k (k <= N)
    R1,
    /// sqrt3 C_k (k <= N)
    R1c,
    /// sqrt3 S_k (k <= N)
    R1s,
    /// 1, sqrt3 C_k, sqrt3 S_k (canonical k in Z^n, |k|_inf <= bound)
    Rn,
    /// sqrt3 S_j (hat dilations, j <= N)
    Hat,
    /// 3^(n/2) S_m, first N^n multi-indices in square order
    TensorHat,
}

#[derive(Args)]
struct GramArgs {
    #[arg(long, value_enum, default_value = "r1")]
    system: SystemKind,
    /// Truncation (univariate systems) or side length (tensor-hat).
    #[arg(long = "N", default_value_t = 8)]
    n_trunc: u64,
    /// Dimension (rn, tensor-hat).
    #[arg(long = "n", default_value_t = 2)]
    dim: usize,
    /// |k|_inf bound (rn).
    #[arg(long, default_value_t = 2)]
    bound: u64,
    /// Exact rational entries (JSON).
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct SpectraArgs {
    #[arg(long = "N", default_value_t = 64)]
    n_trunc: u64,
    /// Check the spectral gap and the exact sign-similarity identity.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct TauArgs {
    #[arg(long = "N", default_value_t = 16)]
    n_trunc: u64,
    /// Also list the Dirichlet inverse.
    #[arg(long)]
    inverse: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransferKind {
    /// e_j -> S_j for j <= N
    Hat,
    /// cos / sin(2 pi k.x) -> C(k.x) / S(k.x), |k|_inf <= bound
    Ridge,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long, value_enum, default_value = "hat")]
    kind: TransferKind,
    /// Number of odd terms kept in the operator.
    #[arg(long = "M", default_value_t = 10_000)]
    m: u64,
    /// Largest hat dilation checked.
    #[arg(long = "N", default_value_t = 8)]
    n_trunc: u64,
    #[arg(long = "n", default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    bound: u64,
    /// Grid resolution (hat) or number of random points per function (ridge).
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ExpandArgs {
    /// Function, e.g. `square`, `parabola`, `sine:5`, `hat:3`, `tensor-hat:2,3`,
    /// `sqrt3*ridge-S:1,2`, `product:parabola;square`, sums with `+`.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// CSV file with `t,value` samples (linearly interpolated; univariate only).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// sine, hat, tensor-sine, tensor-hat, trig-ridge or cs-ridge.
    #[arg(long, default_value = "hat")]
    basis: String,
    /// Cutoff: N (univariate), side (tensor), |k|_inf bound (ridge).
    #[arg(long = "N", default_value_t = 64)]
    n_trunc: u64,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Expansion JSON written by `expand`.
    #[arg(long)]
    expansion: PathBuf,
    /// Grid with M + 1 points per axis.
    #[arg(long = "M", default_value_t = 100)]
    m: usize,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value = "hat")]
    basis: String,
    /// Exponents.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,3")]
    q: Vec<f64>,
    /// Schedule: cutoffs (univariate), prefix counts (tensor), |k|_inf bounds (ridge),
    /// or rectangle scales with --aspect.
    #[arg(long = "N", value_delimiter = ',', default_value = "4,16,64,256")]
    schedule: Vec<u64>,
    /// Pringsheim rectangles `aspect * s` for s in the schedule (tensor bases).
    #[arg(long, value_delimiter = ',')]
    aspect: Option<Vec<u64>>,
    /// Lattice points for ridge bases.
    #[arg(long = "M", default_value_t = 1 << 14)]
    m: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Args)]
struct CriterionArgs {
    #[arg(long = "n", default_value_t = 3)]
    dim: u32,
}

#[derive(Args)]
struct ReluArgs {
    #[arg(long)]
    family: Option<Family>,
    /// Dilation or ridge frequency vector.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    /// Verify an existing network file instead of compiling one (needs --family and --k).
    #[arg(long)]
    import: Option<PathBuf>,
    /// Verification points.
    #[arg(long = "M", default_value_t = 100_000)]
    m: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "M", default_value_t = 400)]
    m: usize,
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    measured: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct RunReport {
    schema: &'static str,
    command: String,
    parameters: Vec<String>,
    outputs: Vec<String>,
    checks: Vec<Check>,
    result: Value,
    seed: Option<u64>,
    wall_time_s: f64,
}

/// What a subcommand produced.
struct Outcome {
    data: String,
    checks: Vec<Check>,
    result: Value,
    seed: Option<u64>,
}

impl Outcome {
    fn new(data: String, result: Value) -> Self {
        Self {
            data,
            checks: Vec::new(),
            result,
            seed: None,
        }
    }

    /// `measured <= tolerance`
    fn check_le(mut self, name: &str, measured: f64, tolerance: f64) -> Self {
        self.checks.push(Check {
            name: name.into(),
            pass: measured <= tolerance,
            measured,
            tolerance,
        });
        self
    }

    /// `measured >= threshold`
    fn check_ge(mut self, name: &str, measured: f64, threshold: f64) -> Self {
        self.checks.push(Check {
            name: name.into(),
            pass: measured >= threshold,
            measured,
            tolerance: threshold,
        });
        self
    }

    /// Boolean check recorded as measured 0 (holds) or 1 (fails) with tolerance 0.
    fn check_true(mut self, name: &str, holds: bool) -> Self {
        self.checks.push(Check {
            name: name.into(),
            pass: holds,
            measured: if holds { 0.0 } else { 1.0 },
            tolerance: 0.0,
        });
        self
    }
}

type CmdResult = Result<Outcome, String>;

fn err(e: Error) -> String {
    e.to_string()
}

fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_k_vector(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<i64>().map_err(|_| format!("bad frequency entry '{v}'")))
        .collect()
}

fn parse_points(s: &str, n: usize) -> Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .map(|p| {
            let x: Vec<f64> = p
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad coordinate '{v}'")))
                .collect::<Result<_, _>>()?;
            if x.len() != n {
                return Err(format!("point '{p}' has {} coordinates, expected {n}", x.len()));
            }
            Ok(x)
        })
        .collect()
}

fn unit_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let k = parse_k_vector(&a.k)?;
    let mut out = String::new();
    if k.len() == 1 && k[0] > 0 && a.x.is_none() {
        let kk = k[0] as u64;
        out.push_str("t,value\n");
        if a.exact {
            let ts = a.t.as_deref().ok_or("--exact needs --t")?;
            for t in ts.split(',') {
                let r: ExactRational = t.parse().map_err(err)?;
                let v = eval_dilated_exact(a.family, kk, &r).map_err(err)?;
                out.push_str(&format!("{r},{v}\n"));
            }
        } else {
            let ts: Vec<f64> = match (&a.t, a.m) {
                (Some(t), _) => t
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad argument '{v}'")))
                    .collect::<Result<_, _>>()?,
                (None, Some(m)) if m >= 1 => unit_grid(m),
                _ => return Err("give --t or --M".into()),
            };
            for t in ts {
                out.push_str(&format!("{},{}\n", csv_num(t), csv_num(eval_dilated(a.family, kk, t).map_err(err)?)));
            }
        }
        return Ok(Outcome::new(out, json!({"family": a.family.to_string(), "k": k})));
    }
    if a.exact {
        return Err("--exact is available for univariate dilations".into());
    }
    let xs = parse_points(a.x.as_deref().ok_or("ridge evaluation needs --x")?, k.len())?;
    let header: Vec<String> = (1..=k.len()).map(|i| format!("x{i}")).collect();
    out.push_str(&format!("{},value\n", header.join(",")));
    for x in xs {
        let v = eval_ridge(a.family, &k, &x).map_err(err)?;
        let cols: Vec<String> = x.iter().map(|v| csv_num(*v)).collect();
        out.push_str(&format!("{},{}\n", cols.join(","), csv_num(v)));
    }
    Ok(Outcome::new(out, json!({"family": a.family.to_string(), "k": k})))
}

fn system_of(a: &GramArgs) -> GramSystem {
    let n = a.n_trunc;
    match a.system {
        SystemKind::R1 => GramSystem::R1Full { n },
        SystemKind::R1c => GramSystem::R1C { n },
        SystemKind::R1s => GramSystem::R1S { n },
        SystemKind::Rn => GramSystem::Rn {
            dim: a.dim,
            bound: a.bound,
        },
        SystemKind::Hat => GramSystem::Hat { n },
        SystemKind::TensorHat => GramSystem::TensorHat { dim: a.dim, side: n },
    }
}

fn cmd_gram(a: &GramArgs) -> CmdResult {
    let system = system_of(a);
    let g = gram(&system, a.exact).map_err(err)?;
    let data = if a.exact {
        serde_json::to_string_pretty(&g.to_exact_json().map_err(err)?).expect("json")
    } else {
        g.to_csv()
    };
    let labels: Vec<String> = g.labels.iter().map(|l| l.to_string()).collect();
    Ok(Outcome::new(
        data,
        json!({"system": system.to_string(), "size": g.size(), "exact": a.exact, "labels": labels}),
    ))
}

fn cmd_spectra(a: &SpectraArgs) -> CmdResult {
    let r = spectra_coincide(a.n_trunc).map_err(err)?;
    let data = serde_json::to_string_pretty(&r).expect("json");
    let mut o = Outcome::new(data, serde_json::to_value(&r).expect("json"));
    if a.compare {
        o = o
            .check_le("spectral gap", r.max_gap, 1e-10)
            .check_true("G^S = D G^C D (exact)", r.identity_holds);
    }
    Ok(o)
}

fn cmd_riesz(a: &GramArgs) -> CmdResult {
    let system = system_of(a);
    let r = riesz_bounds(&system).map_err(err)?;
    let nm = match a.system {
        SystemKind::Hat | SystemKind::TensorHat => riesz_constants_via_neumann(RieszKind::Hat1d),
        _ => riesz_constants_via_neumann(RieszKind::RidgeN),
    };
    let result = json!({
        "report": r,
        "neumann_lower_bound": nm.a_lower,
        "upper_bound": nm.b_upper,
        "interval": [RIESZ_A, RIESZ_B],
    });
    let data = serde_json::to_string_pretty(&result).expect("json");
    let mut o = Outcome::new(data, result);
    if !matches!(a.system, SystemKind::TensorHat) {
        o = o
            .check_ge("lambda_min >= A - 1e-6", r.lambda_min, 0.578720 - 1e-6)
            .check_le("lambda_max <= B + 1e-6", r.lambda_max, 1.5 + 1e-6);
    }
    Ok(o)
}

fn cmd_tau(a: &TauArgs) -> CmdResult {
    let n = a.n_trunc as usize;
    if n == 0 {
        return Err("--N must be >= 1".into());
    }
    let t: Vec<f64> = (1..=a.n_trunc).map(|k| tau(k).map_err(err)).collect::<Result<_, _>>()?;
    let inv = if a.inverse { Some(dirichlet_inverse_dense(&t, n).map_err(err)?) } else { None };
    let mut out = String::from(if a.inverse { "k,tau,tau_inverse\n" } else { "k,tau\n" });
    for k in 0..n {
        match &inv {
            Some(i) => out.push_str(&format!("{},{},{}\n", k + 1, csv_num(t[k]), csv_num(i[k]))),
            None => out.push_str(&format!("{},{}\n", k + 1, csv_num(t[k]))),
        }
    }
    let want = 4.0 * std::f64::consts::SQRT_2 / (std::f64::consts::PI.powi(2));
    Ok(Outcome::new(out, json!({"N": n, "tau1": t[0]})).check_le("|tau_1 - 4 sqrt2 / pi^2|", (t[0] - want).abs(), 1e-15))
}

fn cmd_transfer(a: &TransferArgs) -> CmdResult {
    use std::f64::consts::{PI, SQRT_2};
    match a.kind {
        TransferKind::Hat => {
            let spec = OperatorSpec::new(OperatorKind::THat1d, a.m, 1).map_err(err)?;
            let bound = SQRT_2 * spec.coefficient_tail();
            let grid = unit_grid(a.points.max(1));
            let mut out = String::from("j,max_deviation,bound\n");
            let mut worst: f64 = 0.0;
            for j in 1..=a.n_trunc {
                let e = odd_periodic_extension(move |x: &[f64]| SQRT_2 * (j as f64 * PI * x[0]).sin());
                let mut w: f64 = 0.0;
                for &x in &grid {
                    let t = apply_t(&spec, &e, &[x], SQRT_2).map_err(err)?;
                    w = w.max((t.value - Family::Hat.value(j as f64 * x)).abs());
                }
                worst = worst.max(w);
                out.push_str(&format!("{j},{},{}\n", csv_num(w), csv_num(bound)));
            }
            Ok(Outcome::new(out, json!({"kind": "hat", "M": a.m, "max_deviation": worst, "bound": bound}))
                .check_le("sup |T e_j - S_j|", worst, bound))
        }
        TransferKind::Ridge => {
            let spec = OperatorSpec::new(OperatorKind::TRidge, a.m, a.dim).map_err(err)?;
            let bound = spec.coefficient_tail();
            let pts = random_points(a.dim, a.points.max(1), a.seed);
            let mut out = String::from("k,family,max_deviation,bound\n");
            let mut worst: f64 = 0.0;
            for k in ridge_indices(a.dim, a.bound).map_err(err)? {
                let kv = k.entries().to_vec();
                for (cos, family) in [(true, Family::CSaw), (false, Family::SSaw)] {
                    let kk = kv.clone();
                    let f = periodic_extension(move |x: &[f64]| {
                        let p = 2.0 * PI * pwlbasis::pwl::dot(&kk, x);
                        if cos {
                            p.cos()
                        } else {
                            p.sin()
                        }
                    });
                    let mut w: f64 = 0.0;
                    for x in &pts {
                        let t = apply_t(&spec, &f, x, 1.0).map_err(err)?;
                        w = w.max((t.value - family.value(pwlbasis::pwl::dot(&kv, x))).abs());
                    }
                    worst = worst.max(w);
                    let label: Vec<String> = kv.iter().map(i64::to_string).collect();
                    out.push_str(&format!("\"({})\",{family},{},{}\n", label.join(","), csv_num(w), csv_num(bound)));
                }
            }
            let mut o = Outcome::new(out, json!({"kind": "ridge", "M": a.m, "n": a.dim, "max_deviation": worst, "bound": bound}))
                .check_le("sup |T c_k - C_k|, |T s_k - S_k|", worst, bound);
            o.seed = Some(a.seed);
            Ok(o)
        }
    }
}

fn load_target(f: &Option<String>, csv: &Option<PathBuf>) -> Result<(Target, bool), String> {
    match (f, csv) {
        (Some(s), None) => Ok((s.parse().map_err(err)?, false)),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok((Target::from_csv_grid(&text).map_err(err)?, true))
        }
        _ => Err("give exactly one of --f and --csv".into()),
    }
}

const INTERPOLATION_NOTE: &str =
    "input sampled from CSV and linearly interpolated; accuracy is limited by the sample spacing";

fn cmd_expand(a: &ExpandArgs) -> CmdResult {
    let (target, sampled) = load_target(&a.f, &a.csv)?;
    let basis: BasisTag = a.basis.parse().map_err(err)?;
    let e = expand(&target, basis, a.n_trunc).map_err(err)?;
    let mut result = json!({
        "basis": basis.to_string(),
        "dim": e.dim,
        "terms": e.term_count(),
        "discarded_energy": e.discarded_energy,
    });
    if sampled {
        result["note"] = json!(INTERPOLATION_NOTE);
    }
    Ok(Outcome::new(e.to_json(), result))
}

fn grid_points(n: usize, m: usize) -> Result<Vec<Vec<f64>>, String> {
    let side = m + 1;
    let total = side.checked_pow(n as u32).filter(|&t| t <= 1 << 24).ok_or("grid too large")?;
    Ok((0..total)
        .map(|mut i| {
            let mut x = vec![0.0; n];
            for d in (0..n).rev() {
                x[d] = (i % side) as f64 / m as f64;
                i /= side;
            }
            x
        })
        .collect())
}

fn cmd_reconstruct(a: &ReconstructArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.expansion).map_err(|e| format!("{}: {e}", a.expansion.display()))?;
    let e = Expansion::from_json(&text).map_err(err)?;
    let pts = grid_points(e.dim, a.m.max(1))?;
    let vals = reconstruct(&e, &pts).map_err(err)?;
    let header: Vec<String> = (1..=e.dim).map(|i| format!("x{i}")).collect();
    let mut out = format!("{},value\n", header.join(","));
    for (x, v) in pts.iter().zip(vals) {
        let cols: Vec<String> = x.iter().map(|v| csv_num(*v)).collect();
        out.push_str(&format!("{},{}\n", cols.join(","), csv_num(v)));
    }
    Ok(Outcome::new(out, json!({"basis": e.basis.to_string(), "dim": e.dim, "points": pts.len()})))
}

fn cmd_convergence(a: &ConvergenceArgs) -> CmdResult {
    let (target, sampled) = load_target(&a.f, &a.csv)?;
    let basis: BasisTag = a.basis.parse().map_err(err)?;
    let schedule = match (&a.aspect, basis) {
        (Some(aspect), _) => Truncation::Rectangles(pringsheim_rectangles_scaled(aspect, &a.schedule).map_err(err)?),
        (None, BasisTag::TrigRidge | BasisTag::CsRidge) => Truncation::InfBound(a.schedule.clone()),
        (None, _) => Truncation::Prefix(a.schedule.clone()),
    };
    let opts = ExperimentOptions {
        seed: a.seed,
        qmc_points: a.m,
        ..ExperimentOptions::default()
    };
    let t = convergence_experiment(&target, basis, &a.q, &schedule, &opts).map_err(err)?;
    let mut result = json!({
        "basis": basis.to_string(),
        "strictly_decreasing": t.strictly_decreasing,
        "rows": t.rows,
    });
    if sampled {
        result["note"] = json!(INTERPOLATION_NOTE);
    }
    let mut o = Outcome::new(t.to_csv(), result);
    for (q, dec) in &t.strictly_decreasing {
        o = o.check_true(&format!("L_{q} errors strictly decrease"), *dec);
    }
    let gaps: Vec<f64> = t
        .rows
        .iter()
        .filter_map(|r| r.coeff_tail_l2.map(|c| (r.error - c).abs()))
        .collect();
    if !gaps.is_empty() {
        o = o.check_le("|L2 error - coefficient tail|", gaps.iter().copied().fold(0.0, f64::max), 1e-6);
    }
    if matches!(basis, BasisTag::TrigRidge | BasisTag::CsRidge) {
        o.seed = Some(a.seed);
    }
    Ok(o)
}

fn cmd_criterion(a: &CriterionArgs) -> CmdResult {
    let c = schauder_criterion(a.dim).map_err(err)?;
    let data = serde_json::to_string_pretty(&c).expect("json");
    Ok(Outcome::new(data, serde_json::to_value(c).expect("json")))
}

fn relu_target(a: &ReluArgs) -> Result<(Family, Vec<i64>), String> {
    let family = a.family.ok_or("--family is required")?;
    let k = parse_k_vector(a.k.as_deref().ok_or("--k is required")?)?;
    Ok((family, k))
}

fn compile(family: Family, k: &[i64]) -> Result<ReluNet, String> {
    if k.len() == 1 && (family == Family::Hat || k[0] > 0) {
        if k[0] <= 0 {
            return Err(Error::ZeroDilation.to_string());
        }
        compile_univariate(family, k[0] as u64).map_err(err)
    } else {
        let (fk, sign) = canonicalize(k).map_err(err)?;
        if sign < 0 {
            return Err(format!("frequency {k:?} is not canonical; use {:?}", fk.entries()));
        }
        compile_ridge(family, &FreqIndex::canonical(fk.entries().to_vec()).map_err(err)?).map_err(err)
    }
}

fn cmd_relu(a: &ReluArgs) -> CmdResult {
    let (family, k) = relu_target(a)?;
    let net = match &a.import {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            import_json(&text).map_err(err)?
        }
        None => compile(family, &k)?,
    };
    let n = net.input_dim;
    if n != k.len() {
        return Err(format!("network has input dimension {n}, frequency has {}", k.len()));
    }
    let pts: Vec<Vec<f64>> = if n == 1 {
        unit_grid(a.m.max(1)).into_iter().map(|t| vec![t]).collect()
    } else {
        random_points(n, a.m.max(1), a.seed)
    };
    let dev = max_deviation(&net, family, &k, &pts).map_err(err)?;
    let json_text = export_json(&net).map_err(err)?;
    let back = import_json(&json_text).map_err(err)?;
    let mut o = Outcome::new(
        json_text,
        json!({
            "family": family.to_string(),
            "k": k,
            "hidden": net.hidden_size(),
            "max_deviation": dev,
        }),
    )
    .check_le("max |net - direct|", dev, 1e-12)
    .check_true("JSON round trip bit-exact", back == net);
    if n > 1 {
        o.seed = Some(a.seed);
    }
    Ok(o)
}

fn cmd_plotdata(a: &PlotArgs) -> CmdResult {
    let mut out = String::from("t,C,S,C2,S2\n");
    for t in unit_grid(a.m.max(1)) {
        let v = [
            Family::CSaw.value(t),
            Family::SSaw.value(t),
            Family::CSaw.value(2.0 * t),
            Family::SSaw.value(2.0 * t),
        ];
        out.push_str(&format!("{},{},{},{},{}\n", csv_num(t), csv_num(v[0]), csv_num(v[1]), csv_num(v[2]), csv_num(v[3])));
    }
    Ok(Outcome::new(out, json!({"points": a.m.max(1) + 1})))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eval(_) => "eval",
        Command::Gram(_) => "gram",
        Command::Spectra(_) => "spectra",
        Command::Riesz(_) => "riesz",
        Command::Tau(_) => "tau",
        Command::TransferVerify(_) => "transfer-verify",
        Command::Expand(_) => "expand",
        Command::Reconstruct(_) => "reconstruct",
        Command::Convergence(_) => "convergence",
        Command::Criterion(_) => "criterion",
        Command::ReluExport(_) => "relu-export",
        Command::Plotdata(_) => "plotdata",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = pwlbasis::set_threads(t) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Gram(a) => cmd_gram(a),
        Command::Spectra(a) => cmd_spectra(a),
        Command::Riesz(a) => cmd_riesz(a),
        Command::Tau(a) => cmd_tau(a),
        Command::TransferVerify(a) => cmd_transfer(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Criterion(a) => cmd_criterion(a),
        Command::ReluExport(a) => cmd_relu(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    let o = match res {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut outputs = Vec::new();
    if let Some(p) = &cli.out {
        if let Err(e) = std::fs::write(p, &o.data) {
            eprintln!("error: {}: {e}", p.display());
            return ExitCode::from(2);
        }
        outputs.push(p.display().to_string());
    }
    let all_pass = o.checks.iter().all(|c| c.pass);
    if cli.json_report {
        let mut result = o.result;
        if cli.out.is_none() {
            result["data"] = json!(o.data);
        }
        let report = RunReport {
            schema: REPORT_SCHEMA,
            command: command_name(&cli.command).into(),
            parameters: std::env::args().skip(1).collect(),
            outputs,
            checks: o.checks,
            result,
            seed: o.seed,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("json")));
    } else {
        if cli.out.is_none() {
            emit(&o.data);
            if !o.data.ends_with('\n') {
                emit("\n");
            }
        }
        for c in &o.checks {
            eprintln!(
                "check {}: {} (measured {:e}, tolerance {:e})",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.measured,
                c.tolerance
            );
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(s: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}
