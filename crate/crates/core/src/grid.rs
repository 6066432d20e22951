//! Uniform cell-centred grids and cell-average fields.
//!
//! Values are stored row-major with x fastest: cell `(i, j)` (0-based) lives
//! at `j * nx + i`. A 1D grid is the special case `ny == 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    origin: [f64; 2],
    two_d: bool,
}

impl Grid {
    pub fn new_1d(nx: usize, dx: f64, origin: f64) -> Result<Self> {
        if nx < 2 {
            return Err(Error::Parameter(format!("nx must be >= 2, got {nx}")));
        }
        check_spacing("dx", dx)?;
        Ok(Self {
            nx,
            ny: 1,
            dx,
            dy: 1.0,
            origin: [origin, 0.0],
            two_d: false,
        })
    }

    pub fn new_2d(nx: usize, ny: usize, dx: f64, dy: f64, origin: [f64; 2]) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Parameter(format!(
                "2D grid needs nx, ny >= 2, got {nx}x{ny}"
            )));
        }
        check_spacing("dx", dx)?;
        check_spacing("dy", dy)?;
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            origin,
            two_d: true,
        })
    }

    /// `n` cells covering `[0, length]`.
    pub fn unit_1d(n: usize, length: f64) -> Result<Self> {
        Self::new_1d(n, length / n as f64, 0.0)
    }

    /// `nx x ny` cells covering `[0, lx] x [0, ly]`.
    pub fn unit_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new_2d(nx, ny, lx / nx as f64, ly / ny as f64, [0.0, 0.0])
    }

    pub fn dim(&self) -> usize {
        if self.two_d {
            2
        } else {
            1
        }
    }

    pub fn is_2d(&self) -> bool {
        self.two_d
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Cell height; 1 for 1D grids so that `cell_measure` is `dx`.
    pub fn dy(&self) -> f64 {
        if self.two_d {
            self.dy
        } else {
            1.0
        }
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_measure(&self) -> f64 {
        self.dx * self.dy()
    }

    pub fn domain_measure(&self) -> f64 {
        self.cell_measure() * self.len() as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Centre of cell `(i, j)`, 0-based: `origin + (i + 1/2) dx`.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
        ]
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dy()]
    }
}

fn check_spacing(name: &str, h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {h}")))
    }
}

/// Cell averages of the phase variable on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite field value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let [x, y] = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.grid.nx();
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.grid.ny()).map(|j| self.at(i, j)).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Strict bound `|phi| < bound` at every cell.
    pub fn is_admissible(&self, bound: f64) -> bool {
        self.values.iter().all(|v| v.abs() < bound)
    }
}
