//! Two-grid LFA convergence factor with full-weighting restriction,
//! d-linear interpolation and a re-discretized coarse operator.
//!
//! A low frequency `theta` couples with its `2^d` harmonics
//! `theta + pi * alpha`, `alpha in {0,1}^d`. On that space the two-grid
//! error propagator is the small dense matrix
//!
//! ```text
//! E = S^nu2 (I - p (1/A_2h(2 theta)) r^T diag(A(theta^alpha))) S^nu1
//! ```
//!
//! with `S = diag(1 - w M A)` and `p_alpha = r_alpha = prod_i (1 + cos theta_i^alpha) / 2`.
//! The Galerkin variant replaces `A_2h(2 theta)` by `sum_alpha r_alpha A(theta^alpha) p_alpha`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Schur};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{Frequency, Stencil};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoGridResult {
    pub rho: f64,
    pub nu1: usize,
    pub nu2: usize,
    pub omega: f64,
    pub h: f64,
    pub argmax_theta: Frequency,
}

/// How the coarse-grid operator is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseOperator {
    /// The fine stencil evaluated with mesh size `2h`.
    #[default]
    Rediscretized,
    /// `R A P`.
    Galerkin,
}

#[derive(Debug, Clone)]
struct HarmonicBlock {
    theta: [f64; 3],
    a: [f64; 8],
    m: [f64; 8],
    transfer: [f64; 8],
    coarse: f64,
}

/// Frequency-wise data of a two-grid method that does not depend on the
/// relaxation parameter, so scans over `w` reuse it.
#[derive(Debug, Clone)]
pub struct TwoGridAnalysis {
    dim: usize,
    h: f64,
    blocks: Vec<HarmonicBlock>,
}

/// True when every coefficient is invariant under flipping the sign of any
/// single offset component, so the symbol depends on `cos theta_i` only.
fn axis_reflection_symmetric(s: &Stencil) -> bool {
    s.entries().iter().all(|(o, c)| {
        (0..s.dim()).all(|axis| {
            let mut f = *o;
            f[axis] = -f[axis];
            s.coefficient(f) == *c
        })
    })
}

fn mesh_count(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "mesh size h = {h} must lie in (0, 1/2]"
        )));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-9 || !(n as usize).is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "h = {h} must be 1/N with N even"
        )));
    }
    Ok(n as usize)
}

impl TwoGridAnalysis {
    /// Samples the grid-resolved low frequencies `theta = 2 pi k / N`
    /// (excluding `theta = 0`) for `h = 1/N`.
    pub fn new(a: &Stencil, m: &Stencil, h: f64) -> Result<Self> {
        Self::with_coarse_operator(a, m, h, CoarseOperator::Rediscretized)
    }

    pub fn with_coarse_operator(
        a: &Stencil,
        m: &Stencil,
        h: f64,
        coarse_op: CoarseOperator,
    ) -> Result<Self> {
        if a.dim() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: m.dim(),
            });
        }
        a.check_symmetric()?;
        m.check_symmetric()?;
        let dim = a.dim();
        let n = mesh_count(h)? as i64;

        // With reflection symmetry only k in [0, N/4] per axis is needed.
        let ks: Vec<i64> = if axis_reflection_symmetric(a) && axis_reflection_symmetric(m) {
            (0..=n / 4).collect()
        } else {
            (-(n / 4)..(n + 3) / 4).collect()
        };
        let per_axis = ks.len();
        let total = per_axis.pow(dim as u32);
        let harmonics = 1usize << dim;
        let scale =
            a.entries().iter().map(|(_, c)| c.abs()).sum::<f64>() * (2.0 * h).powi(a.h_exponent());

        let blocks = (0..total)
            .filter_map(|flat| {
                let mut theta = [0.0; 3];
                let mut rest = flat;
                for t in theta.iter_mut().take(dim) {
                    *t = TAU * ks[rest % per_axis] as f64 / n as f64;
                    rest /= per_axis;
                }
                if theta.iter().all(|t| *t == 0.0) {
                    return None;
                }
                let mut coarse_phase = [(1.0, 0.0); 3];
                for d in 0..dim {
                    coarse_phase[d] = ((2.0 * theta[d]).cos(), (2.0 * theta[d]).sin());
                }
                let coarse = a.symbol_from_phases(&coarse_phase, 2.0 * h);
                let mut block = HarmonicBlock {
                    theta,
                    a: [0.0; 8],
                    m: [0.0; 8],
                    transfer: [0.0; 8],
                    coarse,
                };
                for alpha in 0..harmonics {
                    let mut ph = [(1.0, 0.0); 3];
                    let mut transfer = 1.0;
                    for d in 0..dim {
                        let shift = if alpha >> d & 1 == 1 { PI } else { 0.0 };
                        let t = theta[d] + shift;
                        ph[d] = (t.cos(), t.sin());
                        transfer *= (1.0 + ph[d].0) / 2.0;
                    }
                    block.a[alpha] = a.symbol_from_phases(&ph, h);
                    block.m[alpha] = m.symbol_from_phases(&ph, h);
                    block.transfer[alpha] = transfer;
                }
                if coarse_op == CoarseOperator::Galerkin {
                    block.coarse = (0..harmonics)
                        .map(|i| block.transfer[i] * block.transfer[i] * block.a[i])
                        .sum();
                }
                Some(block)
            })
            .collect::<Vec<_>>();

        if let Some(b) = blocks.iter().find(|b| !(b.coarse.abs() > 1e-13 * scale)) {
            return Err(Error::SingularCoarseSymbol {
                theta: b.theta[..dim].to_vec(),
            });
        }
        Ok(Self { dim, h, blocks })
    }

    pub fn sample_count(&self) -> usize {
        self.blocks.len()
    }

    fn error_matrix(&self, b: &HarmonicBlock, omega: f64, nu1: usize, nu2: usize) -> DMatrix<f64> {
        let size = 1usize << self.dim;
        let smooth: Vec<f64> = (0..size).map(|i| 1.0 - omega * b.m[i] * b.a[i]).collect();
        DMatrix::from_fn(size, size, |i, j| {
            let identity = if i == j { 1.0 } else { 0.0 };
            let correction = identity - b.transfer[i] * b.transfer[j] * b.a[j] / b.coarse;
            smooth[i].powi(nu2 as i32) * correction * smooth[j].powi(nu1 as i32)
        })
    }

    /// Largest spectral radius of the harmonic error propagator over all
    /// sampled low frequencies.
    pub fn factor(&self, omega: f64, nu1: usize, nu2: usize) -> TwoGridResult {
        let (rho, idx) = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(i, b)| (spectral_radius(self.error_matrix(b, omega, nu1, nu2)), i))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |x, y| {
                    if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                        y
                    } else {
                        x
                    }
                },
            );
        TwoGridResult {
            rho,
            nu1,
            nu2,
            omega,
            h: self.h,
            argmax_theta: Frequency::new(self.blocks[idx].theta[..self.dim].to_vec()),
        }
    }

    /// Minimizes the factor over `w` in `(lo, hi]`: a uniform scan of 100
    /// cells followed by golden-section refinement of the best cell.
    pub fn optimize_omega(
        &self,
        nu1: usize,
        nu2: usize,
        range: (f64, f64),
    ) -> Result<TwoGridResult> {
        let (lo, hi) = range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "empty omega range ({lo}, {hi}]"
            )));
        }
        const CELLS: usize = 100;
        let step = (hi - lo) / CELLS as f64;
        let mut best = self.factor(lo + step, nu1, nu2);
        for i in 2..=CELLS {
            let candidate = self.factor(lo + i as f64 * step, nu1, nu2);
            if candidate.rho < best.rho {
                best = candidate;
            }
        }

        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = ((best.omega - step).max(lo), (best.omega + step).min(hi));
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.factor(c, nu1, nu2);
        let mut fd = self.factor(d, nu1, nu2);
        while b - a > 1e-7 {
            if fc.rho <= fd.rho {
                (b, d, fd) = (d, c, fc);
                c = b - inv_phi * (b - a);
                fc = self.factor(c, nu1, nu2);
            } else {
                (a, c, fc) = (c, d, fd);
                d = a + inv_phi * (b - a);
                fd = self.factor(d, nu1, nu2);
            }
        }
        for candidate in [fc, fd] {
            if candidate.rho < best.rho
                || (candidate.rho == best.rho && candidate.omega < best.omega)
            {
                best = candidate;
            }
        }
        Ok(best)
    }
}

/// Spectral radius from the real Schur form, with a norm-growth fallback
/// `||E^(2^k)||^(1/2^k)` if the QR iteration does not converge.
pub(crate) fn spectral_radius(mat: DMatrix<f64>) -> f64 {
    if let Some(schur) = Schur::try_new(mat.clone(), 1e-15, 10_000) {
        return schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    let mut power = mat;
    let mut log_scale = 0.0;
    let mut exponent = 1.0;
    for _ in 0..40 {
        let norm = power.norm();
        if norm == 0.0 {
            return 0.0;
        }
        power /= norm;
        log_scale += norm.ln() / exponent;
        power = &power * &power;
        exponent *= 2.0;
    }
    (log_scale + power.norm().ln() / exponent).exp()
}

/// Two-grid convergence factor for `nu1` pre- and `nu2` post-smoothing steps.
pub fn two_grid_factor(
    a: &Stencil,
    m: &Stencil,
    omega: f64,
    nu1: usize,
    nu2: usize,
    h: f64,
) -> Result<TwoGridResult> {
    Ok(TwoGridAnalysis::new(a, m, h)?.factor(omega, nu1, nu2))
}

/// Relaxation parameter minimizing the two-grid factor over `omega_range`
/// (conventionally `(0, 1]`).
pub fn optimize_omega_twogrid(
    a: &Stencil,
    m: &Stencil,
    nu1: usize,
    nu2: usize,
    h: f64,
    omega_range: (f64, f64),
) -> Result<TwoGridResult> {
    TwoGridAnalysis::new(a, m, h)?.optimize_omega(nu1, nu2, omega_range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{laplacian, named, SmootherId, Stencil};

    #[test]
    fn spectral_radius_of_rotation_and_diagonal() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(rot) - 0.5).abs() < 1e-14);
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, -0.7, 0.3]));
        assert!((spectral_radius(diag) - 0.7).abs() < 1e-14);
    }

    #[test]
    fn split_invariance() {
        let a = laplacian(2).unwrap();
        let m = named(SmootherId::M9).stencil;
        let tg = TwoGridAnalysis::new(&a, &m, 1.0 / 64.0).unwrap();
        let r11 = tg.factor(0.158, 1, 1).rho;
        let r20 = tg.factor(0.158, 2, 0).rho;
        let r02 = tg.factor(0.158, 0, 2).rho;
        assert!((r11 - r20).abs() < 1e-10, "{r11} vs {r20}");
        assert!((r11 - r02).abs() < 1e-10, "{r11} vs {r02}");
    }

    #[test]
    fn pure_correction_has_unit_radius() {
        let a = laplacian(2).unwrap();
        let m = named(SmootherId::Jacobi2d).stencil;
        let rho = two_grid_factor(&a, &m, 0.8, 0, 0, 1.0 / 32.0).unwrap().rho;
        assert!((rho - 1.0).abs() < 1e-10, "{rho}");
    }

    #[test]
    fn rejects_bad_mesh_size() {
        let a = laplacian(2).unwrap();
        let m = named(SmootherId::Jacobi2d).stencil;
        assert!(two_grid_factor(&a, &m, 0.8, 1, 0, 0.3).is_err());
        assert!(two_grid_factor(&a, &m, 0.8, 1, 0, 1.0 / 5.0).is_err());
        assert!(two_grid_factor(&a, &m, 0.8, 1, 0, 1.0 / 6.0).is_ok());
    }

    #[test]
    fn point_symmetric_stencil_uses_full_sampling() {
        // Point-symmetric but not axis-reflection symmetric.
        let skew = Stencil::new(
            2,
            [([0, 0, 0], 0.25), ([1, 1, 0], 0.01), ([-1, -1, 0], 0.01)],
            2,
        )
        .unwrap();
        let a = laplacian(2).unwrap();
        assert!(!axis_reflection_symmetric(&skew));
        let tg = TwoGridAnalysis::new(&a, &skew, 1.0 / 16.0).unwrap();
        assert_eq!(tg.sample_count(), 8 * 8 - 1);
        let sym =
            TwoGridAnalysis::new(&a, &named(SmootherId::Jacobi2d).stencil, 1.0 / 16.0).unwrap();
        assert_eq!(sym.sample_count(), 5 * 5 - 1);
    }

    #[test]
    fn galerkin_and_rediscretized_agree_for_jacobi_nu1() {
        let a = laplacian(2).unwrap();
        let m = named(SmootherId::Jacobi2d).stencil;
        let h = 1.0 / 32.0;
        let r = TwoGridAnalysis::new(&a, &m, h)
            .unwrap()
            .factor(0.8, 1, 0)
            .rho;
        let g = TwoGridAnalysis::with_coarse_operator(&a, &m, h, CoarseOperator::Galerkin)
            .unwrap()
            .factor(0.8, 1, 0)
            .rho;
        assert!(
            (r - 0.6).abs() < 1e-10 && (g - 0.6).abs() < 1e-10,
            "{r} {g}"
        );
    }
}
