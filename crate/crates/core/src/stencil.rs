//! Symmetric finite-difference stencils, their Fourier symbols, and their
//! action on interior grids.
//!
//! A [`Stencil`] is a sparse map from integer offsets to coefficients plus
//! an exponent `e` so that the operator it represents at mesh size `h` is
//! `h^e * sum_o c_o u[i + o]`. The Laplacian uses `e = -2`, the sparse
//! approximate inverse smoothers use `e = +2`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_dim, Grid};

/// Offset of a stencil entry; unused trailing components are zero.
pub type Offset = [i32; 3];

/// A point of the Fourier domain `[-pi/2, 3pi/2)^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub theta: Vec<f64>,
}

impl Frequency {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    /// Low frequencies are `[-pi/2, pi/2)^dim`; everything else is high.
    pub fn is_low(&self) -> bool {
        use std::f64::consts::FRAC_PI_2;
        self.theta
            .iter()
            .all(|t| (-FRAC_PI_2..FRAC_PI_2).contains(t))
    }

    pub fn is_high(&self) -> bool {
        !self.is_low()
    }

    /// Shifts every component into `[-pi/2, 3pi/2)`.
    pub fn wrapped(theta: &[f64]) -> Self {
        use std::f64::consts::{FRAC_PI_2, TAU};
        Self {
            theta: theta
                .iter()
                .map(|t| (t + FRAC_PI_2).rem_euclid(TAU) - FRAC_PI_2)
                .collect(),
        }
    }
}

/// Imaginary residue tolerated when collapsing a symmetric symbol to a real.
const IMAG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    dim: usize,
    entries: Vec<(Offset, f64)>,
    h_exponent: i32,
    symmetric: bool,
}

fn mirror(o: Offset) -> Offset {
    [-o[0], -o[1], -o[2]]
}

impl Stencil {
    /// Builds a stencil from `(offset, coefficient)` pairs. Repeated
    /// offsets are summed and exact zeros dropped. Non-symmetric stencils
    /// are accepted here; [`Stencil::symbol`] rejects them.
    pub fn new(
        dim: usize,
        entries: impl IntoIterator<Item = (Offset, f64)>,
        h_exponent: i32,
    ) -> Result<Self> {
        check_dim(dim)?;
        let mut map: BTreeMap<Offset, f64> = BTreeMap::new();
        for (o, c) in entries {
            if o[dim..].iter().any(|&k| k != 0) {
                return Err(Error::InvalidStencil(format!(
                    "offset {o:?} has a component beyond dimension {dim}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidStencil(format!(
                    "coefficient at {o:?} is not finite"
                )));
            }
            *map.entry(o).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        if map.is_empty() {
            return Err(Error::InvalidStencil("stencil has no entries".into()));
        }
        let symmetric = map
            .iter()
            .all(|(o, c)| map.get(&mirror(*o)).is_some_and(|m| m == c));
        Ok(Self {
            dim,
            entries: map.into_iter().collect(),
            h_exponent,
            symmetric,
        })
    }

    /// Builds a stencil from exact rational coefficients.
    pub fn from_rational(
        dim: usize,
        entries: impl IntoIterator<Item = (Offset, Rational64)>,
        h_exponent: i32,
    ) -> Result<Self> {
        Self::new(
            dim,
            entries.into_iter().map(|(o, c)| (o, ratio_to_f64(c))),
            h_exponent,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h_exponent(&self) -> i32 {
        self.h_exponent
    }

    pub fn entries(&self) -> &[(Offset, f64)] {
        &self.entries
    }

    pub fn coefficient(&self, o: Offset) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| *k == o)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Largest `|o_i|` over all entries.
    pub fn radius(&self) -> i32 {
        self.entries
            .iter()
            .flat_map(|(o, _)| o.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn check_symmetric(&self) -> Result<()> {
        if self.symmetric {
            return Ok(());
        }
        let (offset, value) = self
            .entries
            .iter()
            .copied()
            .find(|(o, c)| self.coefficient(mirror(*o)) != *c)
            .expect("non-symmetric stencil has an unmatched entry");
        Err(Error::SymmetryViolation {
            offset,
            value,
            mirror: self.coefficient(mirror(offset)),
        })
    }

    pub fn scaled(&self, factor: f64) -> Stencil {
        let mut out = self.clone();
        for (_, c) in &mut out.entries {
            *c *= factor;
        }
        out
    }

    /// Entry-wise sum; both stencils must share dimension and h-exponent.
    pub fn plus(&self, other: &Stencil) -> Result<Stencil> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.h_exponent != other.h_exponent {
            return Err(Error::InvalidStencil(format!(
                "cannot add stencils with h-exponents {} and {}",
                self.h_exponent, other.h_exponent
            )));
        }
        Stencil::new(
            self.dim,
            self.entries.iter().chain(&other.entries).copied(),
            self.h_exponent,
        )
    }

    /// Fourier symbol `h^e * sum_o c_o exp(i o.theta)` of a symmetric stencil.
    pub fn symbol(&self, theta: &[f64], h: f64) -> Result<f64> {
        self.check_symmetric()?;
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: theta.len(),
            });
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mesh size h = {h} must be positive"
            )));
        }
        let mut phases = [(1.0, 0.0); 3];
        for (axis, t) in theta.iter().enumerate() {
            phases[axis] = (t.cos(), t.sin());
        }
        Ok(self.symbol_from_phases(&phases, h))
    }

    /// Symbol evaluation from precomputed `(cos theta_i, sin theta_i)`.
    /// Callers must have checked symmetry.
    pub(crate) fn symbol_from_phases(&self, phases: &[(f64, f64); 3], h: f64) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        let mut scale = 0.0;
        for (o, c) in &self.entries {
            let (mut pr, mut pi) = (1.0, 0.0);
            for axis in 0..self.dim {
                let (cr, ci) = match o[axis] {
                    0 => continue,
                    1 => phases[axis],
                    -1 => (phases[axis].0, -phases[axis].1),
                    k => {
                        let angle = k as f64 * phases[axis].1.atan2(phases[axis].0);
                        (angle.cos(), angle.sin())
                    }
                };
                (pr, pi) = (pr * cr - pi * ci, pr * ci + pi * cr);
            }
            re += c * pr;
            im += c * pi;
            scale += c.abs();
        }
        debug_assert!(
            im.abs() <= IMAG_TOLERANCE * scale.max(1.0),
            "symmetric stencil produced imaginary symbol residue {im}"
        );
        re * h.powi(self.h_exponent)
    }

    /// Applies the stencil to interior values, treating everything outside
    /// the interior as zero (the truncated-matrix convention).
    pub fn apply(&self, u: &Grid) -> Result<Grid> {
        let mut out = Grid::zeros(u.dim(), u.n())?;
        self.apply_into(u, &mut out, 1.0)?;
        Ok(out)
    }

    /// `out += alpha * S u` with zero extension.
    pub fn apply_into(&self, u: &Grid, out: &mut Grid, alpha: f64) -> Result<()> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.dim(),
            });
        }
        u.check_same_shape(out)?;
        let m = u.points_per_axis() as i64;
        let mz = if self.dim == 3 { m } else { 1 };
        let scale = alpha * u.h().powi(self.h_exponent);
        let src = u.values();
        let dst = out.values_mut();
        for (o, c) in &self.entries {
            let c = c * scale;
            let (ox, oy, oz) = (o[0] as i64, o[1] as i64, o[2] as i64);
            let x0 = (-ox).max(0);
            let x1 = (m - ox).min(m);
            if x0 >= x1 {
                continue;
            }
            for z in (-oz).max(0)..(mz - oz).min(mz) {
                for y in (-oy).max(0)..(m - oy).min(m) {
                    let row = ((z * m + y) * m + x0) as usize;
                    let from = (((z + oz) * m + (y + oy)) * m + ox + x0) as usize;
                    let len = (x1 - x0) as usize;
                    let d = &mut dst[row..row + len];
                    let s = &src[from..from + len];
                    for (d, s) in d.iter_mut().zip(s) {
                        *d += c * s;
                    }
                }
            }
        }
        Ok(())
    }

    /// Dense matrix of the truncated operator on the `(N-1)^dim` interior
    /// points of a grid with mesh count `n`.
    pub fn assemble_dense(&self, n: usize) -> Result<DMatrix<f64>> {
        let probe = Grid::zeros(self.dim, n)?;
        let size = probe.len();
        let m = probe.points_per_axis() as i64;
        let scale = probe.h().powi(self.h_exponent);
        let mut mat = DMatrix::zeros(size, size);
        for row in 0..size {
            let ijk = probe.multi_index(row);
            for (o, c) in &self.entries {
                let mut col = [0usize; 3];
                let inside = (0..self.dim).all(|axis| {
                    let k = ijk[axis] as i64 + o[axis] as i64;
                    col[axis] = k.max(0) as usize;
                    (0..m).contains(&k)
                });
                if inside {
                    mat[(row, probe.index(col))] += c * scale;
                }
            }
        }
        Ok(mat)
    }
}

pub(crate) fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn faces(dim: usize) -> impl Iterator<Item = Offset> {
    (0..dim).flat_map(|axis| {
        [1, -1].into_iter().map(move |s| {
            let mut o = [0; 3];
            o[axis] = s;
            o
        })
    })
}

fn corners2d() -> impl Iterator<Item = Offset> {
    [[1, 1, 0], [1, -1, 0], [-1, 1, 0], [-1, -1, 0]].into_iter()
}

/// Standard second-order Laplacian (`-Delta`): 5-point in 2D, 7-point in 3D.
pub fn laplacian(dim: usize) -> Result<Stencil> {
    check_dim(dim)?;
    Stencil::new(
        dim,
        std::iter::once(([0; 3], 2.0 * dim as f64)).chain(faces(dim).map(|o| (o, -1.0))),
        -2,
    )
}

/// Symmetric 9-point smoother family `h^2 [g b g; b a b; g b g]`.
pub fn upsilon(alpha: f64, beta: f64, gamma: f64) -> Stencil {
    Stencil::new(
        2,
        std::iter::once(([0; 3], alpha))
            .chain(faces(2).map(|o| (o, beta)))
            .chain(corners2d().map(|o| (o, gamma))),
        2,
    )
    .expect("finite 9-point stencil")
}

/// Symmetric 7-point smoother family `(h^2/4)` with center `2 alpha` and
/// face neighbours `beta`.
pub fn tee(alpha: f64, beta: f64) -> Stencil {
    Stencil::new(
        3,
        std::iter::once(([0; 3], alpha / 2.0)).chain(faces(3).map(|o| (o, beta / 4.0))),
        2,
    )
    .expect("finite 7-point stencil")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherId {
    Jacobi2d,
    M5tw,
    M5,
    Vanka9,
    M9,
    Jacobi3d,
    M7,
}

impl SmootherId {
    pub const ALL: [SmootherId; 7] = [
        SmootherId::Jacobi2d,
        SmootherId::M5tw,
        SmootherId::M5,
        SmootherId::Vanka9,
        SmootherId::M9,
        SmootherId::Jacobi3d,
        SmootherId::M7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SmootherId::Jacobi2d => "jacobi2d",
            SmootherId::M5tw => "m5tw",
            SmootherId::M5 => "m5",
            SmootherId::Vanka9 => "vanka9",
            SmootherId::M9 => "m9",
            SmootherId::Jacobi3d => "jacobi3d",
            SmootherId::M7 => "m7",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SmootherId::Jacobi3d | SmootherId::M7 => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for SmootherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmootherId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SmootherId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownSmoother(s.to_string()))
    }
}

/// A named smoother together with its analytic optimal relaxation
/// parameter and smoothing factor.
#[derive(Debug, Clone)]
pub struct NamedSmoother {
    pub id: SmootherId,
    pub stencil: Stencil,
    /// Exact coefficients the stencil was built from.
    pub exact_entries: Vec<(Offset, Rational64)>,
    pub omega_opt_analytic: f64,
    pub mu_opt_analytic: f64,
    /// Closed forms as text, e.g. `("20/73", "25/73")`.
    pub omega_opt_label: &'static str,
    pub mu_opt_label: &'static str,
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Exact entries `scale * (center, faces, corners)`; corners only in 2D.
fn exact_pattern(
    dim: usize,
    scale: Rational64,
    center: i64,
    face: i64,
    corner: i64,
) -> Vec<(Offset, Rational64)> {
    let mut entries = vec![([0; 3], scale * center)];
    if face != 0 {
        entries.extend(faces(dim).map(|o| (o, scale * face)));
    }
    if corner != 0 {
        entries.extend(corners2d().map(|o| (o, scale * corner)));
    }
    entries
}

pub fn named(id: SmootherId) -> NamedSmoother {
    let sqrt10 = 10f64.sqrt();
    let (exact_entries, omega, mu, omega_label, mu_label) = match id {
        SmootherId::Jacobi2d => (exact_pattern(2, r(1, 4), 1, 0, 0), 0.8, 0.6, "4/5", "3/5"),
        // lambda0 = 40/61 at x1 = x2 = -1, lambda1 = 841/732 at x1 + x2 = -5/12.
        SmootherId::M5tw => (
            exact_pattern(2, r(1, 61), 17, 3, 0),
            1464.0 / 1321.0,
            361.0 / 1321.0,
            "1464/1321",
            "361/1321",
        ),
        SmootherId::M5 => (
            exact_pattern(2, r(8, 41), 6, 1, 0),
            0.25,
            9.0 / 41.0,
            "1/4",
            "9/41",
        ),
        SmootherId::Vanka9 => (
            exact_pattern(2, r(1, 96), 28, 4, 1),
            24.0 / 25.0,
            7.0 / 25.0,
            "24/25",
            "7/25",
        ),
        SmootherId::M9 => (
            exact_pattern(2, r(1, 24), 44, 10, 3),
            (309.0 - 12.0 * sqrt10) / 1720.0,
            (9.0 + 8.0 * sqrt10) / 215.0,
            "(309-12*sqrt(10))/1720",
            "(9+8*sqrt(10))/215",
        ),
        SmootherId::Jacobi3d => (
            exact_pattern(3, r(1, 6), 1, 0, 0),
            6.0 / 7.0,
            5.0 / 7.0,
            "6/7",
            "5/7",
        ),
        SmootherId::M7 => (
            exact_pattern(3, r(1, 10), 8, 1, 0),
            20.0 / 73.0,
            25.0 / 73.0,
            "20/73",
            "25/73",
        ),
    };
    let stencil = Stencil::from_rational(id.dim(), exact_entries.iter().copied(), 2)
        .expect("named stencils are valid");
    NamedSmoother {
        id,
        stencil,
        exact_entries,
        omega_opt_analytic: omega,
        mu_opt_analytic: mu,
        omega_opt_label: omega_label,
        mu_opt_label: mu_label,
    }
}

/// Looks a smoother up by its string id.
pub fn named_by_str(id: &str) -> Result<NamedSmoother> {
    Ok(named(id.parse()?))
}
