use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ScalarField, TorusGrid, VectorField};
use crate::error::{invalid, Result};

/// Forward/inverse plans for the separable d-dimensional transform.
#[derive(Clone)]
struct FftNd {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Inverse transform including the `1 / n^d` normalisation.
    fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        for axis in 0..self.grid.dim() {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                data.par_chunks_mut(n).for_each(|line| plan.process(line));
                continue;
            }
            // gather strided lines into contiguous scratch, transform, scatter
            let block = n * stride;
            let mut scratch = vec![Complex64::new(0.0, 0.0); data.len()];
            {
                let src = &*data;
                scratch.par_chunks_mut(n).enumerate().for_each(|(line, out)| {
                    let (o, j) = (line / stride, line % stride);
                    let base = o * block + j;
                    for (i, v) in out.iter_mut().enumerate() {
                        *v = src[base + i * stride];
                    }
                    plan.process(out);
                });
            }
            data.par_chunks_mut(block).enumerate().for_each(|(o, blk)| {
                for j in 0..stride {
                    let line = &scratch[(o * stride + j) * n..(o * stride + j + 1) * n];
                    for (i, v) in line.iter().enumerate() {
                        blk[i * stride + j] = *v;
                    }
                }
            });
        }
    }
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.par_iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Eigenvalues of `-laplacian` for every Fourier mode:
/// `sum_k (2 / h^2) (1 - cos(2 pi m_k h))`.
#[derive(Clone, Debug)]
pub struct LaplacianSymbol {
    values: Vec<f64>,
}

impl LaplacianSymbol {
    pub fn new(grid: &TorusGrid) -> Self {
        let h = grid.h();
        let axis: Vec<f64> = (0..grid.n())
            .map(|m| (2.0 / (h * h)) * (1.0 - (std::f64::consts::TAU * m as f64 * h).cos()))
            .collect();
        let values = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                (0..grid.dim()).map(|k| axis[c[k]]).sum()
            })
            .collect();
        LaplacianSymbol { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Cached solver for `(I - a laplacian) v = f` by Fourier diagonalisation.
#[derive(Clone)]
pub struct HelmholtzSolver {
    fft: FftNd,
    symbol: LaplacianSymbol,
}

impl HelmholtzSolver {
    pub fn new(grid: TorusGrid) -> Self {
        HelmholtzSolver { fft: FftNd::new(grid), symbol: LaplacianSymbol::new(&grid) }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.fft.grid
    }

    pub fn solve(&self, f: &ScalarField, a: f64) -> Result<ScalarField> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("Helmholtz coefficient must be positive, got {a}")));
        }
        if f.grid() != self.grid() {
            return Err(invalid("field grid does not match solver grid"));
        }
        let mut buf = to_complex(&f.data);
        self.fft.forward(&mut buf);
        buf.par_iter_mut()
            .zip(self.symbol.values.par_iter())
            .for_each(|(v, &lam)| *v /= 1.0 + a * lam);
        self.fft.inverse(&mut buf);
        Ok(ScalarField { grid: *f.grid(), data: buf.into_par_iter().map(|c| c.re).collect() })
    }
}

/// One-off `(I - a laplacian)^{-1} f`.
pub fn helmholtz_solve(f: &ScalarField, a: f64) -> Result<ScalarField> {
    HelmholtzSolver::new(*f.grid()).solve(f, a)
}

/// Circular convolution with a kernel anchored at cell 0. The kernel is
/// normalised to unit sum first, so the mean of `f` is preserved.
pub fn periodic_convolve(f: &ScalarField, kernel: &ScalarField) -> Result<ScalarField> {
    let fft = FftNd::new(*f.grid());
    let khat = kernel_transform(&fft, f.grid(), kernel)?;
    Ok(convolve_with(&fft, f, &khat))
}

pub fn periodic_convolve_vector(u: &VectorField, kernel: &ScalarField) -> Result<VectorField> {
    let grid = *u.grid();
    let fft = FftNd::new(grid);
    let khat = kernel_transform(&fft, &grid, kernel)?;
    let comps = u
        .comps
        .iter()
        .map(|c| convolve_with(&fft, &ScalarField { grid, data: c.clone() }, &khat).data)
        .collect();
    Ok(VectorField { grid, comps })
}

fn kernel_transform(fft: &FftNd, grid: &TorusGrid, kernel: &ScalarField) -> Result<Vec<Complex64>> {
    if kernel.grid() != grid {
        return Err(invalid("kernel grid does not match field grid"));
    }
    if kernel.data.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(invalid("convolution kernel must be finite and non-negative"));
    }
    let total: f64 = kernel.data.iter().sum();
    if total <= 0.0 {
        return Err(invalid("convolution kernel is identically zero"));
    }
    let mut k: Vec<Complex64> = kernel.data.iter().map(|&v| Complex64::new(v / total, 0.0)).collect();
    fft.forward(&mut k);
    Ok(k)
}

fn convolve_with(fft: &FftNd, f: &ScalarField, khat: &[Complex64]) -> ScalarField {
    let mut buf = to_complex(&f.data);
    fft.forward(&mut buf);
    buf.par_iter_mut().zip(khat.par_iter()).for_each(|(v, k)| *v *= k);
    fft.inverse(&mut buf);
    ScalarField { grid: *f.grid(), data: buf.into_par_iter().map(|c| c.re).collect() }
}
