//! Uniform cell-centred mesh on `[-L, L]` and the fields that live on it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 16;

/// Uniform mesh of `n` cells covering `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    half_width: T,
    n: usize,
    dx: T,
}

impl<T: Scalar> Grid<T> {
    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > T::zero()) {
            return Err(invalid("L", format!("half-width must be positive, got {half_width}")));
        }
        if n < MIN_CELLS {
            return Err(invalid("N", format!("need at least {MIN_CELLS} cells, got {n}")));
        }
        let dx = (half_width + half_width) / T::from_usize_lossy(n);
        Ok(Self { half_width, n, dx })
    }

    #[inline]
    pub fn half_width(&self) -> T {
        self.half_width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.dx
    }

    /// Centre of cell `j`: `-L + (j + 1/2) dx`.
    #[inline]
    pub fn center(&self, j: usize) -> T {
        -self.half_width + (T::from_usize_lossy(j) + T::lit(0.5)) * self.dx
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n).map(|j| self.center(j)).collect()
    }

    /// Samples `f` at every cell centre.
    pub fn sample(&self, time: T, f: impl Fn(T) -> T) -> Field<T> {
        Field {
            grid: *self,
            values: (0..self.n).map(|j| f(self.center(j))).collect(),
            time,
        }
    }

    pub fn zeros(&self, time: T) -> Field<T> {
        Field {
            grid: *self,
            values: vec![T::zero(); self.n],
            time,
        }
    }

    /// Grid equality up to rounding in `dx`.
    pub fn same_as(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

/// Cell values on a [`Grid`] at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
    pub time: T,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>, time: T) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        let field = Self { grid, values, time };
        field.check_finite("field")?;
        Ok(field)
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `dx * sum(values)` with compensated summation.
    pub fn mass(&self) -> T {
        compensated_sum(self.values.iter().copied()) * self.grid.dx()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `dx * sum(|x_j| u_j)`.
    pub fn first_absolute_moment(&self) -> T {
        let g = self.grid;
        compensated_sum(self.values.iter().enumerate().map(|(j, &v)| g.center(j).abs() * v)) * g.dx()
    }

    /// Pointwise combination of two fields on the same grid; keeps `self.time`.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            time: self.time,
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            time: self.time,
        }
    }
}
