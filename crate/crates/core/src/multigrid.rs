//! Geometric multigrid for the finite-difference Poisson problem.
//!
//! Coarse operators are re-discretized Laplacians at `H = 2h`; grid
//! transfer is full weighting and d-linear interpolation; the coarsest
//! level is solved directly by LU factorization of the assembled matrix.
//! Smoothing is the simultaneous update `u <- u + w M (b - A u)` with `M`
//! a stencil smoother applied with zero extension.

use std::time::Instant;

use nalgebra::{DVector, Dyn, LU};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stencil::{laplacian, named, SmootherId, Stencil};

/// `u <- u + w M (b - A u)`, `steps` times, with `A` the Laplacian at the
/// grid's mesh size.
pub fn smooth(
    u: &mut Grid,
    b: &Grid,
    a: &Stencil,
    m: &Stencil,
    omega: f64,
    steps: usize,
) -> Result<()> {
    u.check_same_shape(b)?;
    let mut r = Grid::zeros(u.dim(), u.n())?;
    for _ in 0..steps {
        residual_into(a, u, b, &mut r)?;
        m.apply_into(&r, u, omega)?;
    }
    Ok(())
}

fn residual_into(a: &Stencil, u: &Grid, b: &Grid, r: &mut Grid) -> Result<()> {
    r.values_mut().copy_from_slice(b.values());
    a.apply_into(u, r, -1.0)
}

/// `b - A u`
pub fn residual(a: &Stencil, u: &Grid, b: &Grid) -> Result<Grid> {
    u.check_same_shape(b)?;
    let mut r = Grid::zeros(u.dim(), u.n())?;
    residual_into(a, u, b, &mut r)?;
    Ok(r)
}

fn check_coarsenable(n: usize) -> Result<()> {
    if !n.is_multiple_of(2) || n / 2 < 2 {
        return Err(Error::InvalidGridSize(format!(
            "N = {n} cannot be coarsened (needs even N >= 4)"
        )));
    }
    Ok(())
}

/// 1D full-weighting / linear-interpolation weights at offsets -1, 0, 1.
const WEIGHTS: [f64; 3] = [0.5, 1.0, 0.5];

/// Full-weighting restriction to the grid with mesh count `N/2`.
pub fn restrict(fine: &Grid) -> Result<Grid> {
    check_coarsenable(fine.n())?;
    let dim = fine.dim();
    let mut coarse = Grid::zeros(dim, fine.n() / 2)?;
    let mc = coarse.points_per_axis();
    let mf = fine.points_per_axis();
    let norm = 0.5f64.powi(dim as i32);
    let nz = if dim == 3 { mc } else { 1 };
    let src = fine.values();
    let dst = coarse.values_mut();
    for kc in 0..nz {
        for jc in 0..mc {
            for ic in 0..mc {
                // Fine index of a coarse point is 2*(c+1)-1 = 2c+1.
                let (fi, fj, fk) = (2 * ic + 1, 2 * jc + 1, 2 * kc + 1);
                let mut acc = 0.0;
                let dz: &[usize] = if dim == 3 { &[0, 1, 2] } else { &[1] };
                for &z in dz {
                    let wz = if dim == 3 { WEIGHTS[z] } else { 1.0 };
                    let zf = if dim == 3 { fk + z - 1 } else { 0 };
                    for (y, wy) in WEIGHTS.iter().enumerate() {
                        let row = (zf * mf + fj + y - 1) * mf;
                        let w = wz * wy;
                        acc +=
                            w * (0.5 * src[row + fi - 1] + src[row + fi] + 0.5 * src[row + fi + 1]);
                    }
                }
                dst[(kc * mc + jc) * mc + ic] = norm * acc;
            }
        }
    }
    Ok(coarse)
}

/// d-linear interpolation onto the grid with mesh count `fine_n = 2 N`.
pub fn prolong(coarse: &Grid, fine_n: usize) -> Result<Grid> {
    if fine_n != 2 * coarse.n() {
        return Err(Error::ShapeMismatch(format!(
            "cannot interpolate N = {} onto N = {fine_n}",
            coarse.n()
        )));
    }
    let dim = coarse.dim();
    let mut fine = Grid::zeros(dim, fine_n)?;
    let mc = coarse.points_per_axis() as i64;
    let mf = fine.points_per_axis();
    let src = coarse.values();
    let nz = if dim == 3 { mf } else { 1 };
    // Coarse value at coarse index c (zero on the boundary c = -1 or c = mc).
    let get = |i: i64, j: i64, k: i64| -> f64 {
        if i < 0 || j < 0 || k < 0 || i >= mc || j >= mc || (dim == 3 && k >= mc) {
            0.0
        } else {
            src[((k * mc + j) * mc + i) as usize]
        }
    };
    // Fine index f (zero-based interior) sits at mesh node f+1; even nodes
    // coincide with coarse node (f+1)/2, i.e. coarse index (f+1)/2 - 1.
    let parents = |f: usize| -> [(i64, f64); 2] {
        let node = f as i64 + 1;
        if node % 2 == 0 {
            [(node / 2 - 1, 1.0), (0, 0.0)]
        } else {
            [((node - 1) / 2 - 1, 0.5), ((node + 1) / 2 - 1, 0.5)]
        }
    };
    let dst = fine.values_mut();
    for kf in 0..nz {
        let pk = if dim == 3 {
            parents(kf)
        } else {
            [(0, 1.0), (0, 0.0)]
        };
        for jf in 0..mf {
            let pj = parents(jf);
            for i_f in 0..mf {
                let pi = parents(i_f);
                let mut acc = 0.0;
                for &(k, wk) in &pk {
                    if wk == 0.0 {
                        continue;
                    }
                    for &(j, wj) in &pj {
                        if wj == 0.0 {
                            continue;
                        }
                        for &(i, wi) in &pi {
                            if wi != 0.0 {
                                acc += wk * wj * wi * get(i, j, k);
                            }
                        }
                    }
                }
                dst[(kf * mf + jf) * mf + i_f] = acc;
            }
        }
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleType {
    V,
    W,
}

impl CycleType {
    fn recursions(self) -> usize {
        match self {
            CycleType::V => 1,
            CycleType::W => 2,
        }
    }
}

impl std::fmt::Display for CycleType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CycleType::V => "V",
            CycleType::W => "W",
        })
    }
}

impl std::str::FromStr for CycleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v" | "V" => Ok(CycleType::V),
            "w" | "W" => Ok(CycleType::W),
            other => Err(Error::InvalidConfig(format!(
                "unknown cycle type `{other}`"
            ))),
        }
    }
}

/// Smoother used inside the cycle.
#[derive(Debug, Clone)]
pub enum SmootherChoice {
    /// Named smoother; `omega = None` uses its analytic optimum.
    Named {
        id: SmootherId,
        omega: Option<f64>,
    },
    Custom {
        stencil: Stencil,
        omega: f64,
    },
}

impl SmootherChoice {
    pub fn named(id: SmootherId) -> Self {
        SmootherChoice::Named { id, omega: None }
    }

    pub fn stencil(&self) -> Stencil {
        match self {
            SmootherChoice::Named { id, .. } => named(*id).stencil,
            SmootherChoice::Custom { stencil, .. } => stencil.clone(),
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            SmootherChoice::Named { id, omega } => {
                omega.unwrap_or_else(|| named(*id).omega_opt_analytic)
            }
            SmootherChoice::Custom { omega, .. } => *omega,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SmootherChoice::Named { id, .. } => id.to_string(),
            SmootherChoice::Custom { .. } => "custom".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MgConfig {
    pub cycle: CycleType,
    pub nu1: usize,
    pub nu2: usize,
    pub smoother: SmootherChoice,
    /// Mesh count of the coarsest level (`h0 = 1/coarsest_n`).
    pub coarsest_n: usize,
    /// Stop once `||r_k|| / ||r_0|| <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    pub rng_seed: u64,
}

impl MgConfig {
    pub fn new(cycle: CycleType, nu1: usize, nu2: usize, smoother: SmootherChoice) -> Self {
        Self {
            cycle,
            nu1,
            nu2,
            smoother,
            coarsest_n: 4,
            tol: 1e-10,
            max_iters: 100,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.nu1 + self.nu2 == 0 {
            return Err(Error::InvalidConfig("nu1 + nu2 must be at least 1".into()));
        }
        if self.coarsest_n < 2 {
            return Err(Error::InvalidConfig("coarsest N must be at least 2".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||r_k||_2` for `k = 0..=iterations`.
    pub residual_norms: Vec<f64>,
    /// `(||r_K|| / ||r_0||)^(1/K)` of the last iteration.
    pub rho_hat: f64,
    pub converged: bool,
    pub error_inf: Option<f64>,
    pub wall_time: f64,
}

impl SolveReport {
    /// `(||r_k|| / ||r_0||)^(1/k)` for every `k >= 1`.
    pub fn rate_history(&self) -> Vec<f64> {
        let r0 = self.residual_norms[0];
        self.residual_norms
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, r)| rate(r / r0, k))
            .collect()
    }
}

fn rate(reduction: f64, k: usize) -> f64 {
    if reduction == 0.0 {
        0.0
    } else {
        reduction.powf(1.0 / k as f64)
    }
}

/// A multigrid hierarchy for one dimension and fine mesh count.
pub struct Multigrid {
    config: MgConfig,
    dim: usize,
    fine_n: usize,
    laplacian: Stencil,
    smoother: Stencil,
    omega: f64,
    coarse_lu: LU<f64, Dyn, Dyn>,
}

impl Multigrid {
    pub fn new(dim: usize, fine_n: usize, config: MgConfig) -> Result<Self> {
        config.validate()?;
        let smoother = config.smoother.stencil();
        if smoother.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: smoother.dim(),
            });
        }
        let mut n = fine_n;
        while n > config.coarsest_n && n.is_multiple_of(2) {
            n /= 2;
        }
        if n != config.coarsest_n {
            return Err(Error::InvalidGridSize(format!(
                "N = {fine_n} does not halve down to the coarsest N = {}",
                config.coarsest_n
            )));
        }
        let laplacian = laplacian(dim)?;
        let coarse_lu = laplacian.assemble_dense(config.coarsest_n)?.lu();
        if !coarse_lu.is_invertible() {
            return Err(Error::SingularCoarseMatrix);
        }
        Ok(Self {
            omega: config.smoother.omega(),
            config,
            dim,
            fine_n,
            laplacian,
            smoother,
            coarse_lu,
        })
    }

    pub fn config(&self) -> &MgConfig {
        &self.config
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn laplacian(&self) -> &Stencil {
        &self.laplacian
    }

    fn coarse_solve(&self, b: &Grid) -> Grid {
        let rhs = DVector::from_column_slice(b.values());
        let x = self
            .coarse_lu
            .solve(&rhs)
            .expect("coarsest matrix checked invertible");
        Grid::from_values(b.dim(), b.n(), x.as_slice().to_vec()).expect("coarsest grid shape")
    }

    /// One cycle on the level of `u`, improving `u` in place.
    pub fn cycle(&self, u: &mut Grid, b: &Grid) -> Result<()> {
        u.check_same_shape(b)?;
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.dim(),
            });
        }
        if u.n() == self.config.coarsest_n {
            *u = self.coarse_solve(b);
            return Ok(());
        }
        if u.n() < self.config.coarsest_n {
            return Err(Error::InvalidGridSize(format!(
                "N = {} is below the coarsest level",
                u.n()
            )));
        }
        let (a, m, w) = (&self.laplacian, &self.smoother, self.omega);
        smooth(u, b, a, m, w, self.config.nu1)?;
        let r = residual(a, u, b)?;
        let rc = restrict(&r)?;
        let mut ec = Grid::zeros(self.dim, rc.n())?;
        for _ in 0..self.config.cycle.recursions() {
            self.cycle(&mut ec, &rc)?;
        }
        u.axpy(1.0, &prolong(&ec, u.n())?);
        smooth(u, b, a, m, w, self.config.nu2)
    }

    /// Seeded uniform `(0, 1)` initial guess.
    pub fn initial_guess(&self) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        let mut u = Grid::zeros(self.dim, self.fine_n).expect("validated shape");
        for v in u.values_mut() {
            *v = rng.sample(Open01);
        }
        u
    }

    /// Cycles from the random initial guess until the relative residual
    /// drops below `tol` or `max_iters` is reached.
    pub fn solve(&self, b: &Grid) -> Result<(Grid, SolveReport)> {
        if b.dim() != self.dim || b.n() != self.fine_n {
            return Err(Error::ShapeMismatch(format!(
                "right-hand side is {}D with N = {}, hierarchy is {}D with N = {}",
                b.dim(),
                b.n(),
                self.dim,
                self.fine_n
            )));
        }
        let start = Instant::now();
        let mut u = self.initial_guess();
        let r0 = residual(&self.laplacian, &u, b)?.norm2();
        let mut norms = vec![r0];
        let mut converged = r0 == 0.0;
        while !converged && norms.len() <= self.config.max_iters {
            self.cycle(&mut u, b)?;
            let rk = residual(&self.laplacian, &u, b)?.norm2();
            norms.push(rk);
            converged = rk / r0 <= self.config.tol;
        }
        let iterations = norms.len() - 1;
        let rho_hat = if iterations == 0 {
            0.0
        } else {
            rate(norms[iterations] / r0, iterations)
        };
        Ok((
            u,
            SolveReport {
                iterations,
                residual_norms: norms,
                rho_hat,
                converged,
                error_inf: None,
                wall_time: start.elapsed().as_secs_f64(),
            },
        ))
    }
}

/// Builds the hierarchy for `b` and solves.
pub fn solve(b: &Grid, config: MgConfig) -> Result<(Grid, SolveReport)> {
    Multigrid::new(b.dim(), b.n(), config)?.solve(b)
}
