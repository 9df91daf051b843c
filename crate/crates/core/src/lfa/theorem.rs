//! Brute-force checks of the optimal 9-point (2D) and 7-point (3D)
//! smoother parameters.
//!
//! Both searches work in the coordinates `x_i = cos(theta_i)`, where the
//! high frequencies map onto `X^H = [-1,1]^d \ (0,1]^d`.
//!
//! * 2D, 9-point family normalized to `8 gamma = 1`: the product symbol is
//!   `f_{a,b}(x) = [b + a(x1+x2) + c x1 x2](2 - x1 - x2)` with `c = 1`
//!   (`c = 0` gives the 5-point family). The smoothing factor of the best
//!   relaxation parameter is `J(a,b) = (chi - m)/(chi + m)` where `m`, `chi`
//!   are the min and max of `f_{a,b}` on `X^H`.
//! * 3D, 7-point family normalized to `beta = 2/5`, `alpha = a beta`: the
//!   product symbol is `(2/5) f_a` with `f_a(x) = (a + t)(3 - t)`,
//!   `t = x1 + x2 + x3`.
//!
//! Extremes are located on a uniform grid and then polished by a shrinking
//! local pattern search that stays inside `X^H`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(9 + 8 sqrt 10) / 215`
pub const MU_OPT_9: f64 = 0.159_526_610_610_916_44;
/// `(309 - 12 sqrt 10) / 1720`
pub const OMEGA_OPT_9: f64 = 0.157_588_760_510_453_17;
/// Minimizer `(a, b) = (5/3, 11/3)` of `J`.
pub const PARAMS_OPT_9: (f64, f64) = (5.0 / 3.0, 11.0 / 3.0);
/// `m_{5/3,11/3} = 16/3`
pub const M_OPT_9: f64 = 16.0 / 3.0;
/// `chi_{5/3,11/3} = (4352 + 320 sqrt 10) / 729`
pub const CHI_OPT_9: f64 = 7.357_927_093_626_723;
/// Best 5-point smoothing factor, `9/41`.
pub const MU_OPT_5: f64 = 9.0 / 41.0;
pub const MU_OPT_7: f64 = 25.0 / 73.0;
pub const OMEGA_OPT_7: f64 = 20.0 / 73.0;
pub const A_OPT_7: f64 = 4.0;
/// Face weight of the normalized 7-point family.
pub const BETA_7: f64 = 2.0 / 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremSearchResult {
    /// `(a, b)` in 2D, `(a)` in 3D.
    pub best_params: Vec<f64>,
    /// `(chi - m)/(chi + m)`; `None` when the parameters are inadmissible.
    pub best_j: Option<f64>,
    pub m: f64,
    pub chi: f64,
    pub omega_opt: Option<f64>,
    pub admissible: bool,
    pub argmin_x: Vec<f64>,
    pub argmax_x: Vec<f64>,
    /// Closed-form `m_a`, `chi_a` (3D only, `a > 3`).
    pub analytic_m: Option<f64>,
    pub analytic_chi: Option<f64>,
    pub search_resolution: String,
}

impl TheoremSearchResult {
    /// `m / chi`
    pub fn ratio(&self) -> Option<f64> {
        self.admissible.then(|| self.m / self.chi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            expected,
            tolerance,
            passed: (value - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerification {
    pub result: TheoremSearchResult,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl TheoremVerification {
    fn new(result: TheoremSearchResult, checks: Vec<Check>) -> Self {
        let passed = result.admissible && checks.iter().all(|c| c.passed);
        Self {
            result,
            checks,
            passed,
        }
    }
}

fn in_xh(x: &[f64; 3], dim: usize) -> bool {
    x[..dim].iter().all(|v| (-1.0..=1.0).contains(v)) && !x[..dim].iter().all(|v| *v > 0.0)
}

/// Uniform sample of `X^H` with `n` points per axis. With `ordered` only
/// points with `x1 <= x2 <= ...` are kept (valid for symmetric functions).
struct XhGrid {
    dim: usize,
    step: f64,
    points: Vec<[f64; 3]>,
}

impl XhGrid {
    fn new(dim: usize, n: usize, ordered: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 samples per axis, got {n}"
            )));
        }
        let step = 2.0 / (n - 1) as f64;
        let coord = |j: usize| {
            if j == n - 1 {
                1.0
            } else {
                -1.0 + j as f64 * step
            }
        };
        let total = n.pow(dim as u32);
        let points = (0..total)
            .filter_map(|flat| {
                let mut idx = [0usize; 3];
                let mut rest = flat;
                for i in idx.iter_mut().take(dim) {
                    *i = rest % n;
                    rest /= n;
                }
                if ordered && idx[..dim].windows(2).any(|w| w[0] > w[1]) {
                    return None;
                }
                let mut x = [0.0; 3];
                for d in 0..dim {
                    x[d] = coord(idx[d]);
                }
                in_xh(&x, dim).then_some(x)
            })
            .collect();
        Ok(Self { dim, step, points })
    }
}

#[derive(Debug, Clone, Copy)]
struct Extremes {
    min: f64,
    argmin: [f64; 3],
    max: f64,
    argmax: [f64; 3],
}

/// Shrinking pattern search for a local extremum of `f` inside `X^H`.
/// `sign = 1` minimizes, `sign = -1` maximizes.
fn polish(
    f: &(impl Fn(&[f64; 3]) -> f64 + Sync),
    dim: usize,
    start: [f64; 3],
    step: f64,
    sign: f64,
) -> (f64, [f64; 3]) {
    const K: i32 = 3;
    let mut best = start;
    let mut best_v = sign * f(&start);
    let mut w = step;
    while w > 1e-13 {
        let center = best;
        let span = (2 * K + 1) as usize;
        for flat in 0..span.pow(dim as u32) {
            let mut x = center;
            let mut rest = flat;
            for xd in x.iter_mut().take(dim) {
                let k = (rest % span) as i32 - K;
                rest /= span;
                *xd = (*xd + w * k as f64 / K as f64).clamp(-1.0, 1.0);
            }
            if !in_xh(&x, dim) {
                continue;
            }
            let v = sign * f(&x);
            if v < best_v {
                best_v = v;
                best = x;
            }
        }
        w /= 3.0;
    }
    (sign * best_v, best)
}

fn extremes(f: &(impl Fn(&[f64; 3]) -> f64 + Sync), grid: &XhGrid) -> Extremes {
    let (_, argmin, _, argmax) = grid
        .points
        .par_iter()
        .map(|x| {
            let v = f(x);
            (v, *x, v, *x)
        })
        .reduce(
            || (f64::INFINITY, [0.0; 3], f64::NEG_INFINITY, [0.0; 3]),
            |a, b| {
                let lo = if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    (b.0, b.1)
                } else {
                    (a.0, a.1)
                };
                let hi = if b.2 > a.2 || (b.2 == a.2 && b.3 < a.3) {
                    (b.2, b.3)
                } else {
                    (a.2, a.3)
                };
                (lo.0, lo.1, hi.0, hi.1)
            },
        );
    let (min, argmin) = polish(f, grid.dim, argmin, grid.step, 1.0);
    let (max, argmax) = polish(f, grid.dim, argmax, grid.step, -1.0);
    Extremes {
        min,
        argmin,
        max,
        argmax,
    }
}

fn product_2d(a: f64, b: f64, cross: f64) -> impl Fn(&[f64; 3]) -> f64 + Sync {
    move |x: &[f64; 3]| {
        let s = x[0] + x[1];
        (b + a * s + cross * x[0] * x[1]) * (2.0 - s)
    }
}

fn product_3d(a: f64) -> impl Fn(&[f64; 3]) -> f64 + Sync {
    move |x: &[f64; 3]| {
        let t = x[0] + x[1] + x[2];
        (a + t) * (3.0 - t)
    }
}

fn result_from(
    params: Vec<f64>,
    ext: Extremes,
    dim: usize,
    omega_scale: f64,
    resolution: String,
) -> TheoremSearchResult {
    let admissible = ext.min > 0.0;
    TheoremSearchResult {
        best_params: params,
        best_j: admissible.then(|| (ext.max - ext.min) / (ext.max + ext.min)),
        m: ext.min,
        chi: ext.max,
        omega_opt: admissible.then(|| 2.0 / (omega_scale * (ext.max + ext.min))),
        admissible,
        argmin_x: ext.argmin[..dim].to_vec(),
        argmax_x: ext.argmax[..dim].to_vec(),
        analytic_m: None,
        analytic_chi: None,
        search_resolution: resolution,
    }
}

fn eval_family_on(a: f64, b: f64, cross: f64, grid: &XhGrid) -> TheoremSearchResult {
    let ext = extremes(&product_2d(a, b, cross), grid);
    result_from(
        vec![a, b],
        ext,
        2,
        1.0,
        format!("X^H grid step {:.4} with local refinement", grid.step),
    )
}

/// `J(a, b)` for the normalized 9-point family.
pub fn eval_j_2d(a: f64, b: f64, n_samples: usize) -> Result<TheoremSearchResult> {
    eval_j_family_2d(a, b, 1.0, n_samples)
}

/// `J(a, b)` for `f = [b + a(x1+x2) + cross x1 x2](2 - x1 - x2)`.
pub fn eval_j_family_2d(
    a: f64,
    b: f64,
    cross: f64,
    n_samples: usize,
) -> Result<TheoremSearchResult> {
    Ok(eval_family_on(
        a,
        b,
        cross,
        &XhGrid::new(2, n_samples, true)?,
    ))
}

/// Closed-form extremes of `f_a` on `X^H` for `a > 3`.
pub fn analytic_extremes_3d(a: f64) -> Option<(f64, f64)> {
    if a <= 3.0 {
        return None;
    }
    let m = (6.0 * a - 18.0).min(a + 2.0);
    let chi = if a <= 9.0 {
        (a + 3.0) * (a + 3.0) / 4.0
    } else {
        6.0 * a - 18.0
    };
    Some((m, chi))
}

fn eval_r_on(a: f64, grid: &XhGrid) -> TheoremSearchResult {
    let ext = extremes(&product_3d(a), grid);
    let mut res = result_from(
        vec![a],
        ext,
        3,
        BETA_7,
        format!("X^H grid step {:.4} with local refinement", grid.step),
    );
    if let Some((m, chi)) = analytic_extremes_3d(a) {
        res.analytic_m = Some(m);
        res.analytic_chi = Some(chi);
    }
    res
}

/// Sampled and closed-form `m_a`, `chi_a` for the normalized 7-point family.
pub fn eval_r_3d(a: f64, n_samples: usize) -> Result<TheoremSearchResult> {
    Ok(eval_r_on(a, &XhGrid::new(3, n_samples, true)?))
}

/// Parameter box for the 2D search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox2d {
    pub a: (f64, f64),
    pub b: (f64, f64),
    /// Coefficient of `x1 x2`: 1 for the 9-point family, 0 for 5-point.
    pub cross: f64,
}

impl Default for SearchBox2d {
    fn default() -> Self {
        Self {
            a: (0.0, 3.0),
            b: (1.0, 6.0),
            cross: 1.0,
        }
    }
}

impl SearchBox2d {
    pub fn five_point() -> Self {
        Self {
            cross: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if ok(self.a) && ok(self.b) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid search box {self:?}"
            )))
        }
    }
}

fn axis_points(range: (f64, f64), n: usize) -> Vec<f64> {
    if range.0 == range.1 || n < 2 {
        return vec![range.0];
    }
    let step = (range.1 - range.0) / (n - 1) as f64;
    (0..n).map(|i| range.0 + i as f64 * step).collect()
}

fn objective(r: &TheoremSearchResult) -> f64 {
    r.best_j.unwrap_or(f64::INFINITY)
}

/// Minimizes `J(a, b)` over `search` by a `coarse_res x coarse_res` scan
/// followed by a shrinking local search evaluated on an `X^H` grid with
/// `fine_res` points per axis.
pub fn minimize_j_2d(
    search: SearchBox2d,
    coarse_res: usize,
    fine_res: usize,
) -> Result<TheoremSearchResult> {
    search.validate()?;
    let coarse_grid = XhGrid::new(2, 41, true)?;
    let fine_grid = XhGrid::new(2, fine_res, true)?;
    let a_pts = axis_points(search.a, coarse_res);
    let b_pts = axis_points(search.b, coarse_res);
    let candidates: Vec<(f64, f64)> = b_pts
        .iter()
        .flat_map(|&b| a_pts.iter().map(move |&a| (a, b)))
        .collect();
    let best = candidates
        .par_iter()
        .map(|&(a, b)| eval_family_on(a, b, search.cross, &coarse_grid))
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|x, y| objective(x).total_cmp(&objective(y)))
        .expect("non-empty candidate set");
    if !best.admissible {
        let mut res = eval_family_on(
            best.best_params[0],
            best.best_params[1],
            search.cross,
            &fine_grid,
        );
        res.search_resolution = resolution_note(coarse_res, fine_res);
        return Ok(res);
    }

    let step_of = |r: (f64, f64)| {
        if coarse_res > 1 {
            (r.1 - r.0) / (coarse_res - 1) as f64
        } else {
            0.0
        }
    };
    let mut wa = step_of(search.a);
    let mut wb = step_of(search.b);
    let mut incumbent = eval_family_on(
        best.best_params[0],
        best.best_params[1],
        search.cross,
        &fine_grid,
    );
    const K: i32 = 5;
    while wa.max(wb) > 1e-9 {
        let (ca, cb) = (incumbent.best_params[0], incumbent.best_params[1]);
        let mut trial: Vec<(f64, f64)> = Vec::new();
        for i in -K..=K {
            for j in -K..=K {
                if i == 0 && j == 0 {
                    continue;
                }
                let a = (ca + wa * i as f64 / K as f64).clamp(search.a.0, search.a.1);
                let b = (cb + wb * j as f64 / K as f64).clamp(search.b.0, search.b.1);
                trial.push((a, b));
            }
        }
        let round_best = trial
            .par_iter()
            .map(|&(a, b)| eval_family_on(a, b, search.cross, &fine_grid))
            .collect::<Vec<_>>()
            .into_iter()
            .min_by(|x, y| objective(x).total_cmp(&objective(y)))
            .expect("non-empty trial set");
        if objective(&round_best) < objective(&incumbent) {
            incumbent = round_best;
        } else {
            wa /= 2.5;
            wb /= 2.5;
        }
    }
    incumbent.search_resolution = resolution_note(coarse_res, fine_res);
    Ok(incumbent)
}

fn resolution_note(coarse_res: usize, fine_res: usize) -> String {
    format!(
        "{coarse_res}x{coarse_res} parameter scan (X^H 41/axis), local refinement with X^H {fine_res}/axis"
    )
}

/// Searches for the best normalized 9-point smoother (or 5-point when
/// `search.cross == 0`) and checks the result against the closed forms.
pub fn verify_theorem_2d(
    search: SearchBox2d,
    coarse_res: usize,
    fine_res: usize,
) -> Result<TheoremVerification> {
    let result = minimize_j_2d(search, coarse_res, fine_res)?;
    let j = result.best_j.unwrap_or(f64::NAN);
    let checks = if search.cross == 0.0 {
        let ratio = result.best_params[0] / result.best_params[1];
        vec![
            Check::new("J", j, MU_OPT_5, 1e-3),
            Check::new("a/b", ratio, 1.0 / 3.0, 1e-2),
        ]
    } else {
        vec![
            Check::new("J", j, MU_OPT_9, 1e-3),
            Check::new("a", result.best_params[0], PARAMS_OPT_9.0, 0.05),
            Check::new("b", result.best_params[1], PARAMS_OPT_9.1, 0.05),
            Check::new("m", result.m, M_OPT_9, 1e-3),
            Check::new("chi", result.chi, CHI_OPT_9, 1e-3),
        ]
    };
    Ok(TheoremVerification::new(result, checks))
}

/// Maximizes `r_a = m_a / chi_a` over `a_range` with `resolution` scan
/// points, then refines, and checks against `a = 4`, `mu = 25/73`.
pub fn verify_theorem_3d(a_range: (f64, f64), resolution: usize) -> Result<TheoremVerification> {
    let (lo, hi) = a_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!(
            "invalid range {a_range:?}"
        )));
    }
    let coarse = XhGrid::new(3, 17, true)?;
    let fine = XhGrid::new(3, 33, true)?;
    let score = |r: &TheoremSearchResult| r.ratio().unwrap_or(f64::NEG_INFINITY);
    let pts = axis_points(a_range, resolution);
    let best = pts
        .par_iter()
        .map(|&a| eval_r_on(a, &coarse))
        .collect::<Vec<_>>()
        .into_iter()
        .max_by(|x, y| {
            score(x)
                .total_cmp(&score(y))
                .then(y.best_params[0].total_cmp(&x.best_params[0]))
        })
        .expect("non-empty scan");

    let mut w = if resolution > 1 {
        (hi - lo) / (resolution - 1) as f64
    } else {
        0.0
    };
    let mut incumbent = eval_r_on(best.best_params[0], &fine);
    while w > 1e-10 {
        let c = incumbent.best_params[0];
        let round_best = (-5..=5)
            .filter(|&k| k != 0)
            .map(|k| eval_r_on((c + w * k as f64 / 5.0).clamp(lo, hi), &fine))
            .max_by(|x, y| score(x).total_cmp(&score(y)))
            .expect("non-empty trial set");
        if score(&round_best) > score(&incumbent) {
            incumbent = round_best;
        } else {
            w /= 2.5;
        }
    }
    incumbent.search_resolution = format!(
        "{resolution}-point scan of a in [{lo}, {hi}] (X^H 17/axis), local refinement with X^H 33/axis"
    );
    let checks = vec![
        Check::new("a", incumbent.best_params[0], A_OPT_7, 0.02),
        Check::new("mu", incumbent.best_j.unwrap_or(f64::NAN), MU_OPT_7, 1e-3),
        Check::new(
            "omega",
            incumbent.omega_opt.unwrap_or(f64::NAN),
            OMEGA_OPT_7,
            1e-3,
        ),
    ];
    Ok(TheoremVerification::new(incumbent, checks))
}
