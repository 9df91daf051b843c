//! Manufactured Poisson problems `-Delta u = f` in the unit square/cube
//! with Dirichlet data `u = g`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{check_dim, Grid};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    pub u_exact: Option<ScalarField>,
    pub f: ScalarField,
    pub g: ScalarField,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_exact", &self.u_exact.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        u_exact: Option<ScalarField>,
        f: ScalarField,
        g: ScalarField,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            name: name.into(),
            dim,
            u_exact,
            f,
            g,
        })
    }
}

fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

/// The three benchmark problems:
///
/// 1. `u = (x^2 - x^4)(y^4 - y^2)` in 2D,
/// 2. `u = x ln(x) y ln(y)` in 2D (source singular at `x = 0`, `y = 0`),
/// 3. `u = sin(pi x) sin(pi y) sin(pi z)` in 3D.
///
/// All three have `g = 0`.
pub fn example(k: usize) -> Result<Problem> {
    let zero = field(|_| 0.0);
    match k {
        1 => Problem::new(
            "example1",
            2,
            Some(field(|p| {
                let (x, y) = (p[0], p[1]);
                (x * x - x.powi(4)) * (y.powi(4) - y * y)
            })),
            field(|p| {
                let (x, y) = (p[0], p[1]);
                2.0 * (1.0 - 6.0 * x * x) * (y * y - y.powi(4))
                    + 2.0 * (1.0 - 6.0 * y * y) * (x * x - x.powi(4))
            }),
            zero,
        ),
        2 => Problem::new(
            "example2",
            2,
            Some(field(|p| {
                let (x, y) = (p[0], p[1]);
                x * x.ln() * y * y.ln()
            })),
            field(|p| {
                let (x, y) = (p[0], p[1]);
                -x * x.ln() / y - y * y.ln() / x
            }),
            zero,
        ),
        3 => Problem::new(
            "example3",
            3,
            Some(field(|p| p.iter().map(|x| (PI * x).sin()).product())),
            field(|p| 3.0 * PI * PI * p.iter().map(|x| (PI * x).sin()).product::<f64>()),
            zero,
        ),
        other => Err(Error::UnknownExample(other)),
    }
}

/// Right-hand side of the 5-/7-point system on the interior of an `N` mesh:
/// `f` at each point plus `g / h^2` for every stencil arm that leaves the
/// domain.
pub fn assemble_rhs(p: &Problem, n: usize) -> Result<Grid> {
    let mut b = Grid::zeros(p.dim, n)?;
    let h = b.h();
    let inv_h2 = 1.0 / (h * h);
    let m = b.points_per_axis();
    let mut x = [0.0; 3];
    for idx in 0..b.len() {
        b.coords_into(idx, &mut x);
        let point = &x[..p.dim];
        let fv = (p.f)(point);
        if !fv.is_finite() {
            return Err(Error::NonFinite {
                what: "source term",
                value: fv,
                point: point.to_vec(),
            });
        }
        let ijk = b.multi_index(idx);
        let mut lift = 0.0;
        for axis in 0..p.dim {
            for (edge, boundary) in [(0usize, 0.0), (m - 1, 1.0)] {
                if ijk[axis] == edge {
                    let mut q = x;
                    q[axis] = boundary;
                    lift += (p.g)(&q[..p.dim]);
                }
            }
        }
        b.values_mut()[idx] = fv + inv_h2 * lift;
    }
    Ok(b)
}

/// `max_i |u_h[i] - u(x_i)|` over interior points.
pub fn error_inf(u_h: &Grid, p: &Problem) -> Result<f64> {
    let exact = p.u_exact.as_ref().ok_or(Error::MissingExactSolution)?;
    if u_h.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: u_h.dim(),
        });
    }
    let mut x = [0.0; 3];
    let mut err: f64 = 0.0;
    for (idx, v) in u_h.values().iter().enumerate() {
        u_h.coords_into(idx, &mut x);
        err = err.max((v - exact(&x[..p.dim])).abs());
    }
    Ok(err)
}

/// Samples the exact solution at interior points.
pub fn exact_grid(p: &Problem, n: usize) -> Result<Grid> {
    let exact = p.u_exact.as_ref().ok_or(Error::MissingExactSolution)?;
    Grid::from_fn(p.dim, n, |x| exact(x))
}
