//! Local Fourier analysis of Richardson-type relaxation `I - w M A`.
//!
//! For symmetric stencils the relaxation symbol is the scalar
//! `1 - w M(theta) A(theta)`. If the product symbol stays within
//! `[lambda0, lambda1]` with `lambda0 > 0` over the high frequencies, the
//! optimal smoothing factor is `(lambda1 - lambda0) / (lambda1 + lambda0)`,
//! attained at `w = 2 / (lambda0 + lambda1)`.
//!
//! Two-grid analysis lives in [`twogrid`] and the exhaustive min-max
//! checks of the optimal 9-point and 7-point smoothers in [`theorem`].

pub mod theorem;
pub mod twogrid;

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{Frequency, Stencil};

pub use theorem::{
    eval_j_2d, eval_j_family_2d, eval_r_3d, verify_theorem_2d, verify_theorem_3d, Check,
    SearchBox2d, TheoremSearchResult, TheoremVerification, MU_OPT_7, MU_OPT_9,
};
pub use twogrid::{
    optimize_omega_twogrid, two_grid_factor, CoarseOperator, TwoGridAnalysis, TwoGridResult,
};

/// Default per-axis resolution for high-frequency sampling.
pub const DEFAULT_SAMPLES_2D: usize = 257;
pub const DEFAULT_SAMPLES_3D: usize = 129;

pub fn default_samples(dim: usize) -> usize {
    if dim == 3 {
        DEFAULT_SAMPLES_3D
    } else {
        DEFAULT_SAMPLES_2D
    }
}

/// Uniform sampling of the closure of the high-frequency set.
///
/// Each axis carries `samples_per_axis` equispaced points spanning
/// `[-pi/2, 3pi/2]` (both ends). A tensor point is kept when any component
/// is at least `pi/2`. With an odd count the grid hits `0`, `pi/2` and `pi`
/// exactly, which is where the product-symbol extrema of all the standard
/// smoothers lie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyDomain {
    pub dim: usize,
    pub samples_per_axis: usize,
}

impl FrequencyDomain {
    pub fn new(dim: usize, samples_per_axis: usize) -> Result<Self> {
        crate::grid::check_dim(dim)?;
        if samples_per_axis < 3 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 samples per axis, got {samples_per_axis}"
            )));
        }
        Ok(Self {
            dim,
            samples_per_axis,
        })
    }

    pub fn axis_values(&self) -> Vec<f64> {
        let n = self.samples_per_axis;
        let step = 2.0 * PI / (n - 1) as f64;
        (0..n).map(|j| -FRAC_PI_2 + j as f64 * step).collect()
    }

    fn is_high_index(&self, idx: &[usize; 3], axis: &[f64]) -> bool {
        idx[..self.dim]
            .iter()
            .any(|&j| axis[j] >= FRAC_PI_2 - 1e-12)
    }

    /// All sampled high frequencies.
    pub fn high_samples(&self) -> Vec<Frequency> {
        let axis = self.axis_values();
        let n = self.samples_per_axis;
        let total = n.pow(self.dim as u32);
        (0..total)
            .filter_map(|flat| {
                let idx = unflatten(flat, n);
                self.is_high_index(&idx, &axis)
                    .then(|| Frequency::new(idx[..self.dim].iter().map(|&j| axis[j]).collect()))
            })
            .collect()
    }
}

fn unflatten(flat: usize, n: usize) -> [usize; 3] {
    [flat % n, (flat / n) % n, flat / (n * n)]
}

/// Extremes of the product symbol `A(theta) M(theta)` over the high frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolRange {
    pub min: f64,
    pub argmin: Frequency,
    pub max: f64,
    pub argmax: Frequency,
}

fn check_pair(a: &Stencil, m: &Stencil) -> Result<()> {
    if a.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: m.dim(),
        });
    }
    a.check_symmetric()?;
    m.check_symmetric()
}

/// Min and max of `A(theta) M(theta)` over the sampled high frequencies.
pub fn product_symbol_range(
    a: &Stencil,
    m: &Stencil,
    domain: FrequencyDomain,
    h: f64,
) -> Result<SymbolRange> {
    check_pair(a, m)?;
    if a.dim() != domain.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: domain.dim,
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mesh size h = {h} must be positive"
        )));
    }
    let axis = domain.axis_values();
    let phases: Vec<(f64, f64)> = axis.iter().map(|t| (t.cos(), t.sin())).collect();
    let n = domain.samples_per_axis;
    let total = n.pow(domain.dim as u32);

    // (min, argmin, max, argmax) over flat indices; ties keep the lower index.
    let identity = (f64::INFINITY, usize::MAX, f64::NEG_INFINITY, usize::MAX);
    let (min, imin, max, imax) = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let idx = unflatten(flat, n);
            if !domain.is_high_index(&idx, &axis) {
                return None;
            }
            let mut ph = [(1.0, 0.0); 3];
            for d in 0..domain.dim {
                ph[d] = phases[idx[d]];
            }
            let p = a.symbol_from_phases(&ph, h) * m.symbol_from_phases(&ph, h);
            Some((p, flat, p, flat))
        })
        .reduce(
            || identity,
            |x, y| {
                let (min, imin) = pick(x.0, x.1, y.0, y.1, |a, b| a < b);
                let (max, imax) = pick(x.2, x.3, y.2, y.3, |a, b| a > b);
                (min, imin, max, imax)
            },
        );
    if imin == usize::MAX {
        return Err(Error::InvalidParameter(
            "no high frequencies sampled".into(),
        ));
    }
    let freq = |flat: usize| {
        let idx = unflatten(flat, n);
        Frequency::new(idx[..domain.dim].iter().map(|&j| axis[j]).collect())
    };
    Ok(SymbolRange {
        min,
        argmin: freq(imin),
        max,
        argmax: freq(imax),
    })
}

fn pick(a: f64, ia: usize, b: f64, ib: usize, better: impl Fn(f64, f64) -> bool) -> (f64, usize) {
    if better(b, a) || (b == a && ib < ia) {
        (b, ib)
    } else {
        (a, ia)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfaResult {
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu_opt: f64,
    pub omega_opt: f64,
    /// Smoothing factor at a caller-chosen relaxation parameter.
    pub mu_at_omega: Option<f64>,
    pub argmin_theta: Frequency,
    pub argmax_theta: Frequency,
}

impl LfaResult {
    /// Smoothing factor `max |1 - w p|` over the sampled product symbol.
    /// `|1 - w p|` is convex in `p`, so the sampled extremes suffice.
    pub fn mu(&self, omega: f64) -> f64 {
        (1.0 - omega * self.lambda0)
            .abs()
            .max((1.0 - omega * self.lambda1).abs())
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.mu_at_omega = Some(self.mu(omega));
        self
    }
}

/// Smoothing factor of `I - w M A` at `h = 1`.
pub fn smoothing_factor(a: &Stencil, m: &Stencil, omega: f64, n_samples: usize) -> Result<f64> {
    smoothing_factor_at(a, m, omega, n_samples, 1.0)
}

pub fn smoothing_factor_at(
    a: &Stencil,
    m: &Stencil,
    omega: f64,
    n_samples: usize,
    h: f64,
) -> Result<f64> {
    if omega == 0.0 {
        check_pair(a, m)?;
        return Ok(1.0);
    }
    let range = product_symbol_range(a, m, FrequencyDomain::new(a.dim(), n_samples)?, h)?;
    Ok((1.0 - omega * range.min)
        .abs()
        .max((1.0 - omega * range.max).abs()))
}

/// Optimal relaxation parameter and smoothing factor at `h = 1`.
pub fn optimal_smoothing(a: &Stencil, m: &Stencil, n_samples: usize) -> Result<LfaResult> {
    optimal_smoothing_at(a, m, n_samples, 1.0)
}

pub fn optimal_smoothing_at(
    a: &Stencil,
    m: &Stencil,
    n_samples: usize,
    h: f64,
) -> Result<LfaResult> {
    let range = product_symbol_range(a, m, FrequencyDomain::new(a.dim(), n_samples)?, h)?;
    if !(range.min > 0.0) {
        return Err(Error::InadmissibleSmoother {
            value: range.min,
            theta: range.argmin.theta,
        });
    }
    let (l0, l1) = (range.min, range.max);
    Ok(LfaResult {
        lambda0: l0,
        lambda1: l1,
        mu_opt: (l1 - l0) / (l1 + l0),
        omega_opt: 2.0 / (l0 + l1),
        mu_at_omega: None,
        argmin_theta: range.argmin,
        argmax_theta: range.argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{laplacian, named, upsilon, SmootherId};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn domain_sampling() {
        let d = FrequencyDomain::new(2, 5).unwrap();
        let axis = d.axis_values();
        close(axis[0], -FRAC_PI_2, 1e-15);
        close(axis[2], FRAC_PI_2, 1e-15);
        close(axis[4], 1.5 * PI, 1e-15);
        // 25 points minus the 2x2 strictly-low block.
        assert_eq!(d.high_samples().len(), 21);
        assert!(FrequencyDomain::new(2, 2).is_err());
    }

    #[test]
    fn jacobi_smoothing_factor() {
        let a = laplacian(2).unwrap();
        let j = named(SmootherId::Jacobi2d).stencil;
        close(smoothing_factor(&a, &j, 0.8, 257).unwrap(), 0.6, 2e-3);
    }

    #[test]
    fn zero_omega_is_identity() {
        let a = laplacian(3).unwrap();
        let m = named(SmootherId::M7).stencil;
        assert_eq!(smoothing_factor(&a, &m, 0.0, 9).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = laplacian(2).unwrap();
        let m = named(SmootherId::M7).stencil;
        assert!(matches!(
            smoothing_factor(&a, &m, 0.5, 9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vanka_closed_form() {
        let a = laplacian(2).unwrap();
        let res = optimal_smoothing(&a, &named(SmootherId::Vanka9).stencil, 257).unwrap();
        close(res.mu_opt, 0.28, 2e-3);
        close(res.omega_opt, 0.96, 2e-3);
        assert!(res.argmin_theta.is_high() && res.argmax_theta.is_high());
    }

    #[test]
    fn inadmissible_smoother_is_reported() {
        let a = laplacian(2).unwrap();
        // Negative center weight makes the product symbol negative somewhere.
        let bad = upsilon(-1.0, 0.0, 0.0);
        assert!(matches!(
            optimal_smoothing(&a, &bad, 33),
            Err(Error::InadmissibleSmoother { .. })
        ));
    }

    #[test]
    fn mu_at_omega_matches_direct_factor() {
        let a = laplacian(2).unwrap();
        let m = named(SmootherId::M5).stencil;
        let res = optimal_smoothing(&a, &m, 129).unwrap().with_omega(0.3);
        close(
            res.mu_at_omega.unwrap(),
            smoothing_factor(&a, &m, 0.3, 129).unwrap(),
            1e-15,
        );
    }
}
