//! Backward heat kernel, its cut-off version, and the check that the
//! kernel-weighted energy decays at most at the rate the forcing allows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{f_field, mu_density, xi_density};
use crate::error::{invalid, Result};
use crate::grid::{ball_sum, periodic_distance, slab_sum_indexed, Point, ScalarField, TorusGrid};
use crate::solver::SimState;

/// Probe `(y, s)` of the monotonicity formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub y: Point,
    pub s: f64,
    /// Use the truncated kernel `eta * rho` instead of the periodic sum.
    pub cutoff: bool,
}

impl KernelSpec {
    pub fn new(y: &[f64], s: f64, cutoff: bool) -> Self {
        let mut p = [0.0; 3];
        p[..y.len().min(3)].copy_from_slice(&y[..y.len().min(3)]);
        KernelSpec { y: p, s, cutoff }
    }
}

/// Image truncation order for `tau = s - t`; the neglected tail is below
/// `1e-14`.
pub fn image_count(tau: f64) -> usize {
    (1.0 + 12.0 * tau.sqrt()).ceil() as usize
}

fn check_tau(yks: &KernelSpec, t: f64) -> Result<f64> {
    let tau = yks.s - t;
    if !(tau > 0.0) {
        return Err(invalid(format!("kernel needs t < s, got t = {t}, s = {}", yks.s)));
    }
    Ok(tau)
}

/// Per-axis image sum `sum_k exp(-(dx + k)^2 / (4 tau))`.
fn axis_sum(dx: f64, tau: f64, images: usize) -> f64 {
    let k = images as i64;
    (-k..=k)
        .map(|j| {
            let z = dx + j as f64;
            (-z * z / (4.0 * tau)).exp()
        })
        .sum()
}

fn prefactor(tau: f64, d: usize) -> f64 {
    (4.0 * std::f64::consts::PI * tau).powf(-0.5 * (d as f64 - 1.0))
}

/// Periodic backward heat kernel `rho_{y,s}(x, t)`, summed over lattice
/// images.
pub fn rho(yks: &KernelSpec, x: &Point, t: f64, d: usize) -> Result<f64> {
    let tau = check_tau(yks, t)?;
    let images = image_count(tau);
    let mut prod = prefactor(tau, d);
    for k in 0..d {
        prod *= axis_sum((x[k] - yks.y[k]).rem_euclid(1.0), tau, images);
    }
    Ok(prod)
}

/// Kernel of the nearest image only.
pub fn rho_nearest(yks: &KernelSpec, x: &Point, t: f64, d: usize) -> Result<f64> {
    let tau = check_tau(yks, t)?;
    let r = periodic_distance(x, &yks.y, d);
    Ok(prefactor(tau, d) * (-r * r / (4.0 * tau)).exp())
}

/// Radial cutoff: 1 on `B_{1/4}`, 0 outside `B_{1/2}`, quintic smoothstep
/// in between.
pub fn eta(x: &Point, y: &Point, d: usize) -> f64 {
    let r = periodic_distance(x, y, d);
    if r <= 0.25 {
        1.0
    } else if r >= 0.5 {
        0.0
    } else {
        let z = (r - 0.25) / 0.25;
        1.0 - z * z * z * (10.0 + z * (-15.0 + 6.0 * z))
    }
}

/// `eta * rho` (nearest image).
pub fn rho_tilde(yks: &KernelSpec, x: &Point, t: f64, d: usize) -> Result<f64> {
    Ok(eta(x, &yks.y, d) * rho_nearest(yks, x, t, d)?)
}

/// Kernel sampled on the grid at time `t`.
pub fn kernel_field(grid: TorusGrid, yks: &KernelSpec, t: f64) -> Result<ScalarField> {
    let tau = check_tau(yks, t)?;
    let d = grid.dim();
    if yks.cutoff {
        return Ok(ScalarField::from_fn(grid, |x| eta(x, &yks.y, d) * rho_nearest(yks, x, t, d).unwrap()));
    }
    // separable: tabulate each axis once
    let images = image_count(tau);
    let h = grid.h();
    let tables: Vec<Vec<f64>> = (0..d)
        .map(|k| (0..grid.n()).map(|i| axis_sum((i as f64 * h - yks.y[k]).rem_euclid(1.0), tau, images)).collect())
        .collect();
    let pre = prefactor(tau, d);
    let data = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.coords(i);
            (0..d).fold(pre, |acc, k| acc * tables[k][c[k]])
        })
        .collect();
    ScalarField::from_vec(grid, data)
}

fn weighted_integral(kernel: &ScalarField, density: &ScalarField) -> f64 {
    kernel.grid().cell_volume() * slab_sum_indexed(kernel.grid(), |i| kernel.data[i] * density.data[i])
}

/// `int rho dmu` (or `int rho~ dmu` when the probe uses the cutoff).
pub fn weighted_mu(state: &SimState, yks: &KernelSpec) -> Result<f64> {
    let k = kernel_field(*state.phi.grid(), yks, state.t)?;
    Ok(weighted_integral(&k, &mu_density(state)))
}

/// One probe evaluation along a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonoSample {
    pub t: f64,
    /// `int rho dmu`.
    pub i_value: f64,
    /// `(1 / 2 sigma) int rho |f|^2 W / eps`.
    pub rhs_density: f64,
    /// `mu(B_{1/2}(y))`, used by the cutoff tail term.
    pub mu_half_ball: f64,
    /// `int rho |xi| / (s - t)`; reported only.
    pub xi_weighted: f64,
}

pub fn sample(state: &SimState, yks: &KernelSpec) -> Result<MonoSample> {
    let grid = *state.phi.grid();
    let k = kernel_field(grid, yks, state.t)?;
    let mu = mu_density(state);
    let f = f_field(state);
    let eps = state.eps;
    let sigma = state.potential.sigma;
    let phi = &state.phi.data;
    let rhs = grid.cell_volume()
        * slab_sum_indexed(&grid, |i| k.data[i] * f.data[i] * f.data[i] * state.potential.w(phi[i]) / eps)
        / (2.0 * sigma);
    let xi = xi_density(state);
    let tau = yks.s - state.t;
    let xi_weighted = grid.cell_volume() * slab_sum_indexed(&grid, |i| k.data[i] * xi.data[i].abs()) / tau;
    Ok(MonoSample {
        t: state.t,
        i_value: weighted_integral(&k, &mu),
        rhs_density: rhs,
        mu_half_ball: ball_sum(&mu, &yks.y, 0.5)?,
        xi_weighted,
    })
}

/// `tol = c (h^2 + dt) (s - t)^{-(d+1)/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonoTolerance {
    pub c: f64,
    pub h: f64,
    pub dt: f64,
    pub d: usize,
}

impl MonoTolerance {
    pub fn at(&self, tau: f64) -> f64 {
        self.c * (self.h * self.h + self.dt) * tau.powf(-0.5 * (self.d as f64 + 1.0))
    }
}

/// Frozen coefficient of the tolerance model.
pub const TOL_MONO_C: f64 = 1.0;

/// Largest admissible `s - t_0`.
pub const MAX_HORIZON: f64 = 2.0;

/// Minimum of `(s - t_max) / dt_hook`.
pub const MIN_HOOKS_BEFORE_S: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonoRow {
    pub t_k: f64,
    #[serde(rename = "I")]
    pub i_value: f64,
    pub rhs_integral: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonoReport {
    pub rows: Vec<MonoRow>,
    pub worst_margin: f64,
    pub pass: bool,
}

/// Checks `I(t_{k+1}) - I(t_k) <= int_{t_k}^{t_{k+1}} RHS + tol` for every
/// consecutive pair of samples. With the cutoff the right side also carries
/// `tail_c3 * exp(-1 / (128 (s - t))) * mu(B_{1/2}(y))`.
///
/// `margin = int RHS + tol - (I(t_{k+1}) - I(t_k))`; the row passes when it
/// is non-negative. Row `k` reports the interval ending at `t_k`.
pub fn check_monotonicity(
    samples: &[MonoSample],
    yks: &KernelSpec,
    tol: &MonoTolerance,
    tail_c3: f64,
) -> Result<MonoReport> {
    validate_samples(samples, yks)?;
    let tail = |m: &MonoSample| {
        if yks.cutoff {
            tail_c3 * (-1.0 / (128.0 * (yks.s - m.t))).exp() * m.mu_half_ball
        } else {
            0.0
        }
    };
    let mut rows = Vec::with_capacity(samples.len());
    rows.push(MonoRow { t_k: samples[0].t, i_value: samples[0].i_value, rhs_integral: 0.0, margin: 0.0, pass: true });
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        let rhs = 0.5 * dt * (a.rhs_density + tail(a) + b.rhs_density + tail(b));
        let margin = rhs + tol.at(yks.s - a.t) - (b.i_value - a.i_value);
        rows.push(MonoRow { t_k: b.t, i_value: b.i_value, rhs_integral: rhs, margin, pass: margin >= 0.0 });
    }
    let worst_margin = rows[1..].iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let pass = rows.iter().all(|r| r.pass);
    Ok(MonoReport { rows, worst_margin, pass })
}

fn validate_samples(samples: &[MonoSample], yks: &KernelSpec) -> Result<()> {
    if samples.len() < 2 {
        return Err(invalid("monotonicity check needs at least two samples"));
    }
    if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(invalid("sample times must be strictly increasing"));
    }
    let (first, last) = (samples[0].t, samples[samples.len() - 1].t);
    if !(last < yks.s) {
        return Err(invalid(format!("sample at t = {last} is not before s = {}", yks.s)));
    }
    if yks.s - first > MAX_HORIZON {
        return Err(invalid(format!("s - t_0 = {} exceeds {MAX_HORIZON}", yks.s - first)));
    }
    let widest = samples.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max);
    if (yks.s - last) / widest < MIN_HOOKS_BEFORE_S {
        return Err(invalid(format!(
            "hook spacing {widest} is too coarse: need (s - t_max) / dt_hook >= {MIN_HOOKS_BEFORE_S}"
        )));
    }
    Ok(())
}

/// Smallest tail coefficient that makes every interval of a cut-off probe
/// pass without tolerance; used once to calibrate the frozen constant.
pub fn calibrate_tail(samples: &[MonoSample], yks: &KernelSpec) -> Result<f64> {
    validate_samples(samples, yks)?;
    let mut c3 = 0.0f64;
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dt = b.t - a.t;
        let excess = (b.i_value - a.i_value) - 0.5 * dt * (a.rhs_density + b.rhs_density);
        let weight = |m: &MonoSample| (-1.0 / (128.0 * (yks.s - m.t))).exp() * m.mu_half_ball;
        let tail = 0.5 * dt * (weight(a) + weight(b));
        if excess > 0.0 && tail > 0.0 {
            c3 = c3.max(excess / tail);
        }
    }
    Ok(c3)
}
