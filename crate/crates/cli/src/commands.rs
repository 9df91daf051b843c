use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use spai_mg::lfa::{
    default_samples, optimal_smoothing_at, verify_theorem_2d, verify_theorem_3d, CoarseOperator,
    SearchBox2d, TwoGridAnalysis,
};
use spai_mg::{
    assemble_rhs, error_inf, example, laplacian, named, solve, tee, upsilon, CycleType, MgConfig,
    SmootherChoice, SmootherId, Stencil,
};

use crate::output::{emit, record_text, sig6, Format, RunRecord, SCHEMA_VERSION};
use crate::UsageError;

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Either a named smoother or a custom stencil from one of the
/// parametrized families.
#[derive(Debug, Clone, Args)]
pub struct SmootherArgs {
    /// Named smoother id (jacobi2d, m5tw, m5, vanka9, m9, jacobi3d, m7).
    #[arg(long, conflicts_with_all = ["upsilon", "tee"])]
    pub smoother: Option<SmootherId>,
    /// 2D 9-point stencil h^2 [g b g; b a b; g b g], given as a,b,g.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "tee"
    )]
    pub upsilon: Option<Vec<f64>>,
    /// 3D 7-point stencil (h^2/4) with center 2a and faces b, given as a,b.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tee: Option<Vec<f64>>,
    /// Factor applied to a custom stencil, e.g. 1/24.
    #[arg(long, value_parser = parse_ratio)]
    pub scale: Option<f64>,
    /// Expected dimension; checked against the smoother.
    #[arg(long)]
    pub dim: Option<usize>,
}

struct Resolved {
    stencil: Stencil,
    id: Option<SmootherId>,
    label: String,
}

impl SmootherArgs {
    fn resolve(&self) -> Result<Resolved> {
        expect_len("--upsilon", &self.upsilon, 3)?;
        expect_len("--tee", &self.tee, 2)?;
        let resolved = match (&self.smoother, &self.upsilon, &self.tee) {
            (Some(id), None, None) => {
                if self.scale.is_some() {
                    return Err(UsageError::new("--scale applies to --upsilon/--tee only").into());
                }
                Resolved {
                    stencil: named(*id).stencil,
                    id: Some(*id),
                    label: id.to_string(),
                }
            }
            (None, Some(v), None) => Resolved {
                stencil: upsilon(v[0], v[1], v[2]).scaled(self.scale.unwrap_or(1.0)),
                id: None,
                label: format!("upsilon({},{},{})", v[0], v[1], v[2]),
            },
            (None, None, Some(v)) => Resolved {
                stencil: tee(v[0], v[1]).scaled(self.scale.unwrap_or(1.0)),
                id: None,
                label: format!("tee({},{})", v[0], v[1]),
            },
            (None, None, None) => {
                let dim = self.dim.unwrap_or(2);
                let id = if dim == 3 {
                    SmootherId::M7
                } else {
                    SmootherId::M9
                };
                Resolved {
                    stencil: named(id).stencil,
                    id: Some(id),
                    label: id.to_string(),
                }
            }
            _ => return Err(UsageError::new("give one of --smoother, --upsilon, --tee").into()),
        };
        if let Some(dim) = self.dim {
            if dim != resolved.stencil.dim() {
                return Err(UsageError::new(format!(
                    "--dim {dim} does not match the {}D smoother {}",
                    resolved.stencil.dim(),
                    resolved.label
                ))
                .into());
            }
        }
        Ok(resolved)
    }
}

fn expect_len(flag: &str, values: &Option<Vec<f64>>, len: usize) -> Result<()> {
    match values {
        Some(v) if v.len() != len => Err(UsageError::new(format!(
            "{flag} takes {len} comma-separated values, got {}",
            v.len()
        ))
        .into()),
        _ => Ok(()),
    }
}

/// Parses `p/q` or a decimal number.
pub fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            p / q
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoarseArg {
    Rediscretized,
    Galerkin,
}

impl From<CoarseArg> for CoarseOperator {
    fn from(c: CoarseArg) -> Self {
        match c {
            CoarseArg::Rediscretized => CoarseOperator::Rediscretized,
            CoarseArg::Galerkin => CoarseOperator::Galerkin,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LfaSmoothArgs {
    #[command(flatten)]
    pub smoother: SmootherArgs,
    /// Relaxation parameter at which to report the smoothing factor.
    #[arg(long, value_parser = parse_ratio)]
    pub omega: Option<f64>,
    /// Samples per frequency axis (default 257 in 2D, 129 in 3D).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Mesh size.
    #[arg(long, value_parser = parse_ratio, default_value = "1")]
    pub h: f64,
}

pub fn lfa_smooth(args: &LfaSmoothArgs, out: &OutputArgs, command: String) -> Result<bool> {
    let s = args.smoother.resolve()?;
    let dim = s.stencil.dim();
    let samples = args.samples.unwrap_or_else(|| default_samples(dim));
    let res = optimal_smoothing_at(&laplacian(dim)?, &s.stencil, samples, args.h)?;
    let mut rec = RunRecord::new(command);
    rec.smoother = Some(s.label);
    rec.dim = Some(dim);
    rec.h = Some(args.h);
    rec.lambda0 = Some(res.lambda0);
    rec.lambda1 = Some(res.lambda1);
    rec.omega_opt = Some(res.omega_opt);
    rec.mu_opt = Some(res.mu_opt);
    if let Some(id) = s.id {
        rec.mu_opt_label = Some(format!("analytic {}", named(id).mu_opt_label));
    }
    match args.omega {
        Some(w) => {
            rec.omega = Some(w);
            rec.mu = Some(res.mu(w));
        }
        None => {
            rec.omega = Some(res.omega_opt);
            rec.omega_label =
                s.id.map(|id| format!("analytic {}", named(id).omega_opt_label));
            rec.mu = Some(res.mu_opt);
        }
    }
    emit(&[rec], out.format, out.out.as_deref(), record_text)?;
    Ok(true)
}

#[derive(Debug, Clone, Args)]
pub struct LfaTwoGridArgs {
    #[command(flatten)]
    pub smoother: SmootherArgs,
    /// Relaxation parameter; optimized over (0, 1] when omitted.
    #[arg(long, value_parser = parse_ratio)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub nu1: usize,
    #[arg(long, default_value_t = 0)]
    pub nu2: usize,
    /// Mesh size 1/N with N even (default 1/256 in 2D, 1/64 in 3D).
    #[arg(long, value_parser = parse_ratio)]
    pub h: Option<f64>,
    /// Coarse-grid operator.
    #[arg(long, value_enum, default_value_t = CoarseArg::Rediscretized)]
    pub coarse: CoarseArg,
}

fn default_h(dim: usize) -> f64 {
    if dim == 3 {
        1.0 / 64.0
    } else {
        1.0 / 256.0
    }
}

pub fn lfa_twogrid(args: &LfaTwoGridArgs, out: &OutputArgs, command: String) -> Result<bool> {
    let s = args.smoother.resolve()?;
    let dim = s.stencil.dim();
    let h = args.h.unwrap_or_else(|| default_h(dim));
    let a = laplacian(dim)?;
    let tg = TwoGridAnalysis::with_coarse_operator(&a, &s.stencil, h, args.coarse.into())?;
    let result = match args.omega {
        Some(w) => tg.factor(w, args.nu1, args.nu2),
        None => tg.optimize_omega(args.nu1, args.nu2, (0.0, 1.0))?,
    };
    let smoothing = optimal_smoothing_at(&a, &s.stencil, default_samples(dim), h)?;
    let mut rec = RunRecord::new(command);
    rec.smoother = Some(s.label);
    rec.dim = Some(dim);
    rec.h = Some(h);
    rec.omega = Some(result.omega);
    if args.omega.is_none() {
        rec.omega_label = Some("two-grid optimum".into());
    }
    rec.nu1 = Some(args.nu1);
    rec.nu2 = Some(args.nu2);
    rec.rho_h = Some(result.rho);
    rec.mu = Some(smoothing.mu(result.omega));
    emit(&[rec], out.format, out.out.as_deref(), record_text)?;
    Ok(true)
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// Coarse-grid operator.
    #[arg(long, value_enum, default_value_t = CoarseArg::Rediscretized)]
    pub coarse: CoarseArg,
}

#[derive(Debug, Clone, Serialize)]
struct Table1Row {
    schema_version: u32,
    dim: usize,
    smoother: SmootherId,
    h: f64,
    omega_tg: f64,
    mu: f64,
    rho1: f64,
    rho2: f64,
    rho3: f64,
    rho4: f64,
}

pub fn table1(args: &Table1Args, out: &OutputArgs) -> Result<bool> {
    let ids = [
        SmootherId::Jacobi2d,
        SmootherId::M5,
        SmootherId::M9,
        SmootherId::Jacobi3d,
        SmootherId::M7,
    ];
    let mut rows = Vec::new();
    for id in ids {
        let dim = id.dim();
        let h = default_h(dim);
        let a = laplacian(dim)?;
        let m = named(id).stencil;
        let tg = TwoGridAnalysis::with_coarse_operator(&a, &m, h, args.coarse.into())?;
        let best = tg.optimize_omega(1, 0, (0.0, 1.0))?;
        let mu = optimal_smoothing_at(&a, &m, default_samples(dim), h)?.mu(best.omega);
        let rho: Vec<f64> = (1..=4).map(|nu| tg.factor(best.omega, nu, 0).rho).collect();
        rows.push(Table1Row {
            schema_version: SCHEMA_VERSION,
            dim,
            smoother: id,
            h,
            omega_tg: best.omega,
            mu,
            rho1: rho[0],
            rho2: rho[1],
            rho3: rho[2],
            rho4: rho[3],
        });
    }
    if out.format == Format::Text {
        println!(
            "{:<4} {:<9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "dim", "smoother", "omega_tg", "mu", "rho(1)", "rho(2)", "rho(3)", "rho(4)"
        );
    }
    emit(&rows, out.format, out.out.as_deref(), |r| {
        format!(
            "{:<4} {:<9} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            format!("{}D", r.dim),
            r.smoother.as_str(),
            r.omega_tg,
            r.mu,
            r.rho1,
            r.rho2,
            r.rho3,
            r.rho4
        )
    })?;
    Ok(true)
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Example problem (1, 2 or 3).
    #[arg(long)]
    pub example: usize,
    /// Fine mesh count N (h = 1/N), a power-of-two multiple of 4.
    #[arg(long = "N", alias = "n")]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = CycleArg::W)]
    pub cycle: CycleArg,
    #[arg(long, default_value_t = 1)]
    pub nu1: usize,
    #[arg(long, default_value_t = 0)]
    pub nu2: usize,
    /// Named smoother id (default m9 in 2D, m7 in 3D).
    #[arg(long)]
    pub smoother: Option<SmootherId>,
    /// Relaxation parameter (default: the smoother's analytic optimum).
    #[arg(long, value_parser = parse_ratio)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CycleArg {
    V,
    W,
}

impl From<CycleArg> for CycleType {
    fn from(c: CycleArg) -> Self {
        match c {
            CycleArg::V => CycleType::V,
            CycleArg::W => CycleType::W,
        }
    }
}

struct SolveOutcome {
    id: SmootherId,
    dim: usize,
    omega: f64,
    iterations: usize,
    rho_hat: f64,
    converged: bool,
    error_inf: f64,
    wall_time: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_solve(
    ex: usize,
    n: usize,
    cycle: CycleType,
    nu1: usize,
    nu2: usize,
    smoother: Option<SmootherId>,
    omega: Option<f64>,
    seed: u64,
    tol: f64,
    max_iters: usize,
) -> Result<SolveOutcome> {
    let p = example(ex)?;
    let id = smoother.unwrap_or(if p.dim == 3 {
        SmootherId::M7
    } else {
        SmootherId::M9
    });
    if id.dim() != p.dim {
        return Err(UsageError::new(format!(
            "smoother {id} is {}D but example {ex} is {}D",
            id.dim(),
            p.dim
        ))
        .into());
    }
    let start = Instant::now();
    let b = assemble_rhs(&p, n)?;
    let mut cfg =
        MgConfig::new(cycle, nu1, nu2, SmootherChoice::Named { id, omega }).with_seed(seed);
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    let omega = cfg.smoother.omega();
    let (u, report) = solve(&b, cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(SolveOutcome {
        id,
        dim: p.dim,
        omega,
        iterations: report.iterations,
        rho_hat: report.rho_hat,
        converged: report.converged,
        error_inf: error_inf(&u, &p)?,
        wall_time,
    })
}

pub fn solve_cmd(args: &SolveArgs, out: &OutputArgs, command: String) -> Result<bool> {
    let r = run_solve(
        args.example,
        args.n,
        args.cycle.into(),
        args.nu1,
        args.nu2,
        args.smoother,
        args.omega,
        args.seed,
        args.tol,
        args.max_iters,
    )?;
    let mut rec = RunRecord::new(command);
    rec.smoother = Some(r.id.to_string());
    rec.dim = Some(r.dim);
    rec.example = Some(args.example);
    rec.n = Some(args.n);
    rec.h = Some(1.0 / args.n as f64);
    rec.omega = Some(r.omega);
    if args.omega.is_none() {
        rec.omega_label = Some(format!("analytic {}", named(r.id).omega_opt_label));
    }
    rec.cycle = Some(CycleType::from(args.cycle).to_string());
    rec.nu1 = Some(args.nu1);
    rec.nu2 = Some(args.nu2);
    rec.seed = Some(args.seed);
    rec.rho_hat = Some(r.rho_hat);
    rec.iterations = Some(r.iterations);
    rec.converged = Some(r.converged);
    rec.error_inf = Some(r.error_inf);
    rec.wall_time_s = Some(r.wall_time);
    emit(&[rec], out.format, out.out.as_deref(), record_text)?;
    if !r.converged {
        eprintln!(
            "did not reach tol = {} within {} iterations",
            args.tol, args.max_iters
        );
    }
    Ok(r.converged)
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// 2D search box a_lo,a_hi,b_lo,b_hi (results are informational).
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    pub search_box: Option<Vec<f64>>,
    /// Search the 5-point family (no x1 x2 term) instead.
    #[arg(long)]
    pub five_point: bool,
    /// Parameter scan points per axis (2D).
    #[arg(long, default_value_t = 61)]
    pub coarse_res: usize,
    /// X^H samples per axis during refinement (2D).
    #[arg(long, default_value_t = 201)]
    pub fine_res: usize,
    /// 3D range of a, lo,hi.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [3.0, 20.0])]
    pub range: Vec<f64>,
    /// 3D scan points.
    #[arg(long, default_value_t = 171)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize)]
struct VerifyRecord {
    schema_version: u32,
    command: String,
    dim: usize,
    family: String,
    best_a: f64,
    best_b: Option<f64>,
    best_j: Option<f64>,
    m: f64,
    chi: f64,
    omega_opt: Option<f64>,
    checks: String,
    passed: bool,
    informational: bool,
    search_resolution: String,
}

pub fn verify(args: &VerifyArgs, out: &OutputArgs, command: String) -> Result<bool> {
    let start = Instant::now();
    let (v, family, informational) = match args.dim {
        2 => {
            expect_len("--box", &args.search_box.clone(), 4)?;
            let mut search = if args.five_point {
                SearchBox2d::five_point()
            } else {
                SearchBox2d::default()
            };
            if let Some(b) = &args.search_box {
                search.a = (b[0], b[1]);
                search.b = (b[2], b[3]);
            }
            let family = if args.five_point {
                "5-point"
            } else {
                "9-point"
            };
            (
                verify_theorem_2d(search, args.coarse_res, args.fine_res)?,
                family,
                args.search_box.is_some(),
            )
        }
        3 => {
            expect_len("--range", &Some(args.range.clone()), 2)?;
            let default_range = args.range == [3.0, 20.0];
            (
                verify_theorem_3d((args.range[0], args.range[1]), args.resolution)?,
                "7-point",
                !default_range,
            )
        }
        d => bail!(UsageError::new(format!("--dim must be 2 or 3, got {d}"))),
    };
    let checks: Vec<String> = v
        .checks
        .iter()
        .map(|c| {
            format!(
                "{}={}({})",
                c.name,
                sig6(c.value),
                if c.passed { "ok" } else { "miss" }
            )
        })
        .collect();
    let rec = VerifyRecord {
        schema_version: SCHEMA_VERSION,
        command,
        dim: args.dim,
        family: family.into(),
        best_a: v.result.best_params[0],
        best_b: v.result.best_params.get(1).copied(),
        best_j: v.result.best_j,
        m: v.result.m,
        chi: v.result.chi,
        omega_opt: v.result.omega_opt,
        checks: checks.join(" "),
        passed: v.passed,
        informational,
        search_resolution: v.result.search_resolution.clone(),
    };
    let elapsed = start.elapsed().as_secs_f64();
    emit(&[rec], out.format, out.out.as_deref(), |r| {
        let params = match r.best_b {
            Some(b) => format!("a = {}, b = {}", sig6(r.best_a), sig6(b)),
            None => format!("a = {}", sig6(r.best_a)),
        };
        let verdict = if r.informational {
            "informational (custom search range)"
        } else if r.passed {
            "PASS"
        } else {
            "FAIL"
        };
        format!(
            "{}D {} family: best {params}\nJ = {}  m = {}  chi = {}  omega = {}\nchecks: {}\nresult: {verdict}  ({elapsed:.2} s, {})",
            r.dim,
            r.family,
            r.best_j.map(sig6).unwrap_or_else(|| "inadmissible".into()),
            sig6(r.m),
            sig6(r.chi),
            r.omega_opt.map(sig6).unwrap_or_else(|| "-".into()),
            r.checks,
            r.search_resolution
        )
    })?;
    Ok(informational || v.passed)
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    pub examples: Vec<usize>,
    /// Mesh counts for 2D examples.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
    pub sizes: Vec<usize>,
    /// Mesh counts for 3D examples.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64])]
    pub sizes_3d: Vec<usize>,
    /// Smoothers; each run uses those matching the example's dimension.
    #[arg(long, value_delimiter = ',', default_values_t = [SmootherId::Jacobi2d, SmootherId::M5, SmootherId::M9, SmootherId::Jacobi3d, SmootherId::M7])]
    pub smoothers: Vec<SmootherId>,
    /// Cycles: w runs W(1+0), v runs V(1+1).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CycleArg::W, CycleArg::V])]
    pub cycles: Vec<CycleArg>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64])]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
struct BenchRow {
    example: usize,
    dim: usize,
    #[serde(rename = "N")]
    n: usize,
    smoother: SmootherId,
    omega: f64,
    cycle: String,
    nu1: usize,
    nu2: usize,
    iters: usize,
    rho_hat: f64,
    error_inf: f64,
    wall_time_s: f64,
    seed: u64,
}

pub fn bench(args: &BenchArgs, out: &OutputArgs) -> Result<bool> {
    let mut rows = Vec::new();
    let mut all_converged = true;
    for &ex in &args.examples {
        let dim = example(ex)?.dim;
        let sizes = if dim == 3 {
            &args.sizes_3d
        } else {
            &args.sizes
        };
        for &n in sizes {
            for &id in args.smoothers.iter().filter(|id| id.dim() == dim) {
                for &cycle in &args.cycles {
                    let (nu1, nu2) = match cycle {
                        CycleArg::W => (1, 0),
                        CycleArg::V => (1, 1),
                    };
                    for &seed in &args.seeds {
                        let r = run_solve(
                            ex,
                            n,
                            cycle.into(),
                            nu1,
                            nu2,
                            Some(id),
                            None,
                            seed,
                            1e-10,
                            100,
                        )?;
                        all_converged &= r.converged;
                        rows.push(BenchRow {
                            example: ex,
                            dim,
                            n,
                            smoother: id,
                            omega: r.omega,
                            cycle: CycleType::from(cycle).to_string(),
                            nu1,
                            nu2,
                            iters: r.iterations,
                            rho_hat: r.rho_hat,
                            error_inf: r.error_inf,
                            wall_time_s: r.wall_time,
                            seed,
                        });
                    }
                }
            }
        }
    }
    if out.format == Format::Text {
        println!(
            "{:>3} {:>5} {:<9} {:>9} {:<7} {:>5} {:>8} {:>11} {:>8} {:>5}",
            "ex",
            "N",
            "smoother",
            "omega",
            "cycle",
            "iters",
            "rho_hat",
            "error_inf",
            "time_s",
            "seed"
        );
    }
    emit(&rows, out.format, out.out.as_deref(), |r| {
        format!(
            "{:>3} {:>5} {:<9} {:>9} {:<7} {:>5} {:>8.4} {:>11.3e} {:>8.3} {:>5}",
            r.example,
            r.n,
            r.smoother.as_str(),
            sig6(r.omega),
            format!("{}({}+{})", r.cycle, r.nu1, r.nu2),
            r.iters,
            r.rho_hat,
            r.error_inf,
            r.wall_time_s,
            r.seed
        )
    })?;
    Ok(all_converged)
}
