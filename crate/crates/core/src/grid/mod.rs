//! Uniform periodic grids on the unit torus `[0, 1)^d`, `d` in {2, 3}.
//!
//! Fields are stored row-major: the flat index of cell `(i_0, .., i_{d-1})` is
//! `((i_0 * n) + i_1) * n + ..`, and cell `i` sits at `x_k = i_k * h`.
//! Stencil operators run over axis-0 slabs in parallel; every reduction sums
//! per-slab partials in slab order so results do not depend on the worker
//! count.

mod ops;
pub mod snapshot;
mod spectral;

pub(crate) use ops::fill_cells;
pub use ops::{
    backward_divergence, ball_sum, forward_gradient, gradient, laplacian, periodic_distance,
    translate,
};
pub use spectral::{helmholtz_solve, periodic_convolve, periodic_convolve_vector, HelmholtzSolver, LaplacianSymbol};

use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Grid point coordinates, padded to three entries (unused axes are zero).
pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    d: usize,
    n: usize,
    h: f64,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {d}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(invalid(format!("cells per axis must be a power of two >= 4, got {n}")));
        }
        Ok(TorusGrid { d, n, h: 1.0 / n as f64 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell volume `h^d`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cells per axis-0 slab.
    #[inline]
    pub fn slab_len(&self) -> usize {
        self.n.pow(self.d as u32 - 1)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut rest = idx;
        for axis in (0..self.d).rev() {
            c[axis] = rest % self.n;
            rest /= self.n;
        }
        c
    }

    #[inline]
    pub fn index(&self, c: &[usize]) -> usize {
        c[..self.d].iter().fold(0, |acc, &ci| acc * self.n + (ci % self.n))
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for axis in 0..self.d {
            p[axis] = c[axis] as f64 * self.h;
        }
        p
    }

    /// Flat index of the neighbour one cell along `axis` in direction `step` (±1).
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, step: isize) -> usize {
        let stride = self.stride(axis);
        let c = (idx / stride) % self.n;
        let shifted = (c as isize + step).rem_euclid(self.n as isize) as usize;
        idx - c * stride + shifted * stride
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        ScalarField { grid, data: vec![value; grid.len()] }
    }

    pub fn from_vec(grid: TorusGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(invalid(format!("field has {} entries, grid needs {}", data.len(), grid.len())));
        }
        Ok(ScalarField { grid, data })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&Point) -> f64 + Sync) -> Self {
        let data = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        ScalarField { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        ScalarField { grid: self.grid, data: self.data.par_iter().map(|&v| f(v)).collect() }
    }

    /// `h^d * sum(values)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * slab_sum(&self.grid, &self.data, |v| v)
    }

    pub fn mean(&self) -> f64 {
        slab_sum(&self.grid, &self.data, |v| v) / self.grid.len() as f64
    }

    /// Largest value and its index.
    pub fn max_with_index(&self) -> (f64, usize) {
        self.data
            .iter()
            .enumerate()
            .fold((f64::NEG_INFINITY, 0), |(m, mi), (i, &v)| if v > m { (v, i) } else { (m, mi) })
    }

    pub fn max(&self) -> f64 {
        self.max_with_index().0
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField { grid, comps: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    pub fn constant(grid: TorusGrid, value: &[f64]) -> Result<Self> {
        if value.len() != grid.dim() {
            return Err(invalid(format!("vector has {} components, grid dimension is {}", value.len(), grid.dim())));
        }
        Ok(VectorField { grid, comps: value.iter().map(|&v| vec![v; grid.len()]).collect() })
    }

    pub fn from_components(grid: TorusGrid, comps: Vec<ScalarField>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(invalid(format!("need {} components, got {}", grid.dim(), comps.len())));
        }
        if comps.iter().any(|c| *c.grid() != grid) {
            return Err(invalid("vector components must share one grid"));
        }
        Ok(VectorField { grid, comps: comps.into_iter().map(|c| c.data).collect() })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&Point) -> Point + Sync) -> Self {
        let comps = (0..grid.dim())
            .map(|k| (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))[k]).collect())
            .collect();
        VectorField { grid, comps }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid, data: self.comps[k].clone() }
    }

    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let data = (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        ScalarField { grid: self.grid, data }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Point {
        let mut p = [0.0; 3];
        for (k, c) in self.comps.iter().enumerate() {
            p[k] = c[idx];
        }
        p
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

/// Deterministic sum of `f(v)` over a field: per-slab partials, then summed
/// in slab order.
pub fn slab_sum(grid: &TorusGrid, data: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = data
        .par_chunks(grid.slab_len())
        .map(|slab| slab.iter().map(|&v| f(v)).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Deterministic sum of `f(i)` over all cell indices.
pub fn slab_sum_indexed(grid: &TorusGrid, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let slab = grid.slab_len();
    let partials: Vec<f64> = (0..grid.n())
        .into_par_iter()
        .map(|s| (s * slab..(s + 1) * slab).map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}
