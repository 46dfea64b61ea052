//! Spatial discretization of the periodic cell `C = (0, L)` and of
//! subintervals, with second-derivative stencils under periodic and
//! Dirichlet boundary conditions.
//!
//! Nodes sit at `x_j = j * dx`, `j = 0..n-1`, `dx = L / n`, so a shift
//! by one period is an exact index roll. All second derivatives are
//! second-order central differences.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum node count accepted by any discretization.
pub const MIN_NODES: usize = 16;

/// Uniform grid covering one full period (or an integer number of
/// periods) with wraparound index arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    length: f64,
    n: usize,
}

impl PeriodicGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("grid length must be positive, got {length}")));
        }
        if n < MIN_NODES {
            return Err(Error::Config(format!("grid too small: n = {n} < {MIN_NODES}")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }

    /// New grid with `factor` times the resolution on the same cell.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::Usage(format!("refinement factor must be >= 2, got {factor}")));
        }
        let n = self
            .n
            .checked_mul(factor)
            .ok_or_else(|| Error::Config("refined node count overflows".into()))?;
        Self::new(self.length, n)
    }
}

/// Grid-sampled scalar function on a periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field length {} does not match grid ({})",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degeneracy("field contains non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Trapezoidal (here: rectangle, the grid is uniform periodic)
    /// integral over the covered cell.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cyclic roll by `shift` nodes: entry `j` of the result is entry
    /// `j - shift` of the input (a shift of the graph to the right).
    pub fn roll(&self, shift: isize) -> Field {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(((j - shift) % n + n) % n) as usize])
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// `delta * d2/dx2` by central differences with wraparound.
    pub fn second_derivative(&self, delta: f64) -> Result<Field> {
        if !(delta > 0.0) {
            return Err(Error::Usage(format!("diffusivity must be positive, got {delta}")));
        }
        let n = self.values.len();
        let w = delta / (self.grid.dx() * self.grid.dx());
        let mut out = vec![0.0; n];
        for j in 0..n {
            let left = self.values[(j + n - 1) % n];
            let right = self.values[(j + 1) % n];
            out[j] = w * (left - 2.0 * self.values[j] + right);
        }
        Field::new(self.grid, out)
    }
}

/// One-dimensional ball `B(center, radius)` with `m` interior nodes;
/// Dirichlet data vanishes at both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub center: f64,
    pub radius: f64,
    pub resolution: usize,
}

impl Interval {
    pub fn new(center: f64, radius: f64, resolution: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("interval radius must be positive, got {radius}")));
        }
        if resolution < MIN_NODES {
            return Err(Error::Config(format!(
                "interval resolution {resolution} < {MIN_NODES}"
            )));
        }
        Ok(Self {
            center,
            radius,
            resolution,
        })
    }

    /// Spacing between interior nodes; the endpoints are ghost nodes.
    pub fn dx(&self) -> f64 {
        2.0 * self.radius / (self.resolution as f64 + 1.0)
    }

    /// Interior node positions, endpoints excluded.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let a = self.center - self.radius;
        let h = self.dx();
        (1..=self.resolution).map(move |j| a + j as f64 * h)
    }
}

/// `delta * d2/dx2` on interval values with zero Dirichlet ghost nodes.
pub fn dirichlet_second_derivative(values: &[f64], interval: &Interval, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::Usage(format!("diffusivity must be positive, got {delta}")));
    }
    if values.len() != interval.resolution {
        return Err(Error::Usage(format!(
            "value count {} does not match interval resolution {}",
            values.len(),
            interval.resolution
        )));
    }
    let m = values.len();
    let h = interval.dx();
    let w = delta / (h * h);
    let mut out = vec![0.0; m];
    for j in 0..m {
        let left = if j == 0 { 0.0 } else { values[j - 1] };
        let right = if j + 1 == m { 0.0 } else { values[j + 1] };
        out[j] = w * (left - 2.0 * values[j] + right);
    }
    Ok(out)
}
