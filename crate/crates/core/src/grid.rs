//! Interior unknowns of a uniform mesh on the unit square or cube.
//!
//! A grid with mesh count `N` has `h = 1/N` and stores the `(N-1)^dim`
//! interior points in lexicographic order with `x` varying fastest. The
//! interior point with zero-based indices `(i, j, k)` sits at
//! `((i+1)h, (j+1)h, (k+1)h)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 3 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

impl Grid {
    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if n < 2 {
            return Err(Error::InvalidGridSize(format!(
                "N = {n} must be at least 2"
            )));
        }
        Ok(Self {
            dim,
            n,
            values: vec![0.0; (n - 1).pow(dim as u32)],
        })
    }

    pub fn from_values(dim: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        let mut grid = Self::zeros(dim, n)?;
        if values.len() != grid.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values supplied for {} interior points",
                values.len(),
                grid.values.len()
            )));
        }
        grid.values = values;
        Ok(grid)
    }

    /// Samples `f` at every interior point.
    pub fn from_fn(dim: usize, n: usize, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut grid = Self::zeros(dim, n)?;
        let mut x = [0.0; 3];
        for idx in 0..grid.values.len() {
            grid.coords_into(idx, &mut x);
            grid.values[idx] = f(&x[..dim]);
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mesh count per axis, `h = 1/N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Interior points per axis, `N - 1`.
    pub fn points_per_axis(&self) -> usize {
        self.n - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Flat index of the interior point `(i, j[, k])`.
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        let m = self.points_per_axis();
        match self.dim {
            2 => ijk[1] * m + ijk[0],
            _ => (ijk[2] * m + ijk[1]) * m + ijk[0],
        }
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let m = self.points_per_axis();
        [idx % m, (idx / m) % m, idx / (m * m)]
    }

    pub fn coords_into(&self, idx: usize, x: &mut [f64; 3]) {
        let h = self.h();
        let ijk = self.multi_index(idx);
        for axis in 0..3 {
            x[axis] = if axis < self.dim {
                (ijk[axis] + 1) as f64 * h
            } else {
                0.0
            };
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut x = [0.0; 3];
        self.coords_into(idx, &mut x);
        x[..self.dim].to_vec()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n
    }

    pub(crate) fn check_same_shape(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}D grid with N = {} vs {}D grid with N = {}",
                self.dim, self.n, other.dim, other.n
            )))
        }
    }

    pub fn dot(&self, other: &Grid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Grid) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }
}
