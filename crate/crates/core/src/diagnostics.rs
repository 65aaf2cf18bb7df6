//! Measured quantities: energy and discrepancy densities, the density ratio
//! `D(t)`, the forcing term `f`, `w = |grad r|^2 - 1`, approximate curvature
//! and velocity, and the interface radius of a shrinking sphere.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{ball_sum, fill_cells, gradient, laplacian, slab_sum_indexed, Point, ScalarField, TorusGrid, VectorField};
use crate::solver::SimState;

/// `omega_{d-1}`: length of the unit interval for `d = 2`, area of the unit
/// disc for `d = 3`.
pub fn omega(d: usize) -> f64 {
    match d {
        2 => 2.0,
        3 => std::f64::consts::PI,
        _ => panic!("unsupported dimension {d}"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mu_total: f64,
    pub xi_max: f64,
    pub xi_l1: f64,
    #[serde(rename = "D_t")]
    pub d_t: f64,
    pub dissipation: f64,
    pub f_l2: f64,
    pub w_max: f64,
    pub interface_radius: Option<f64>,
    pub phi_margin: f64,
}

/// CSV header, in column order.
pub const RECORD_COLUMNS: [&str; 10] = [
    "t",
    "mu_total",
    "xi_max",
    "xi_l1",
    "D_t",
    "dissipation",
    "f_l2",
    "w_max",
    "interface_radius",
    "phi_margin",
];

/// Centers and radii over which the supremum in `D(t)` is sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySampling {
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
}

impl DensitySampling {
    /// `lattice^d` evenly spaced centers and radii `2^-k`, `k = 2 ..= log2(n / 2)`.
    pub fn dyadic(grid: &TorusGrid, lattice: usize) -> Self {
        Self::geometric(grid, lattice, 1)
    }

    /// Radii `2^(-j / p)`, `j = p + 1 ..= p log2(n / 2)`, with `p = per_octave`.
    /// `p = 1` gives the dyadic list; larger `p` also fills `(1/4, 1/2)`.
    pub fn geometric(grid: &TorusGrid, lattice: usize, per_octave: usize) -> Self {
        let p = per_octave.max(1) as i32;
        let d = grid.dim();
        let total = lattice.pow(d as u32);
        let centers = (0..total)
            .map(|mut c| {
                let mut p = [0.0; 3];
                for k in (0..d).rev() {
                    p[k] = (c % lattice) as f64 / lattice as f64;
                    c /= lattice;
                }
                p
            })
            .collect();
        let kmax = (grid.n() / 2).trailing_zeros() as i32;
        let radii = (p + 1..=kmax * p).map(|j| 0.5f64.powf(j as f64 / p as f64)).collect();
        DensitySampling { centers, radii }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagOptions {
    /// Center for [`interface_radius`]; `None` skips the column.
    pub interface_center: Option<Point>,
    pub sampling: DensitySampling,
}

impl DiagOptions {
    pub fn new(grid: &TorusGrid) -> Self {
        DiagOptions { interface_center: None, sampling: DensitySampling::dyadic(grid, 16) }
    }

    pub fn with_center(mut self, center: &[f64]) -> Self {
        let mut p = [0.0; 3];
        p[..center.len()].copy_from_slice(center);
        self.interface_center = Some(p);
        self
    }
}

fn grad_sq(phi: &ScalarField) -> Vec<f64> {
    let g = gradient(phi);
    (0..phi.data.len()).into_par_iter().map(|i| g.comps.iter().map(|c| c[i] * c[i]).sum()).collect()
}

fn sigma_of(state: &SimState) -> f64 {
    state.potential.sigma
}

/// `(1/sigma)(eps |grad phi|^2 / 2 + W(phi) / eps)`.
pub fn mu_density(state: &SimState) -> ScalarField {
    densities(state).0
}

/// `(1/sigma)(eps |grad phi|^2 / 2 - W(phi) / eps)`.
pub fn xi_density(state: &SimState) -> ScalarField {
    densities(state).1
}

fn densities(state: &SimState) -> (ScalarField, ScalarField) {
    let grid = *state.phi.grid();
    let g2 = grad_sq(&state.phi);
    let (eps, inv_sigma) = (state.eps, 1.0 / sigma_of(state));
    let w: Vec<f64> = state.phi.data.par_iter().map(|&s| state.potential.w(s) / eps).collect();
    let mu = fill_cells(&grid, |i| inv_sigma * (0.5 * eps * g2[i] + w[i]));
    let xi = fill_cells(&grid, |i| inv_sigma * (0.5 * eps * g2[i] - w[i]));
    (ScalarField::from_vec(grid, mu).unwrap(), ScalarField::from_vec(grid, xi).unwrap())
}

pub fn mu_total(state: &SimState) -> f64 {
    mu_density(state).integral()
}

/// `max{1, mu(Omega), sup mu(B_r(x)) / (omega_{d-1} r^{d-1})}` over the
/// sampled balls.
pub fn density_ratio(mu: &ScalarField, sampling: &DensitySampling) -> Result<f64> {
    if sampling.centers.is_empty() || sampling.radii.is_empty() {
        return Err(invalid("density ratio needs at least one center and one radius"));
    }
    let d = mu.grid().dim();
    let w = omega(d);
    let mut best = 1.0f64.max(mu.integral());
    for &r in &sampling.radii {
        let norm = w * r.powi(d as i32 - 1);
        let m = sampling
            .centers
            .par_iter()
            .map(|c| ball_sum(mu, c, r).map(|v| v / norm))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.max(m);
    }
    Ok(best)
}

/// `A = lap(phi) - W'(phi) / eps^2`.
pub fn allen_cahn_residual(state: &SimState) -> ScalarField {
    let lap = laplacian(&state.phi);
    let inv_eps2 = 1.0 / (state.eps * state.eps);
    let data = fill_cells(state.phi.grid(), |i| lap.data[i] - state.potential.dw(state.phi.data[i]) * inv_eps2);
    ScalarField::from_vec(*state.phi.grid(), data).unwrap()
}

/// `int eps A^2`.
pub fn dissipation(state: &SimState) -> f64 {
    let a = allen_cahn_residual(state);
    let eps = state.eps;
    state.phi.grid().cell_volume() * slab_sum_indexed(state.phi.grid(), |i| eps * a.data[i] * a.data[i])
}

/// `f = -u . grad r - g - L r` with `r = r_delta(phi)`.
pub fn f_field(state: &SimState) -> ScalarField {
    let r = state.r_field();
    let fd = &state.forcing;
    let l = fd.l_eps;
    let gr = if fd.u_is_zero { None } else { Some(gradient(&r)) };
    let data = fill_cells(state.phi.grid(), |i| {
        let adv = gr
            .as_ref()
            .map(|g| g.comps.iter().zip(&fd.u_eps.comps).map(|(gk, uk)| gk[i] * uk[i]).sum::<f64>())
            .unwrap_or(0.0);
        -adv - fd.g_eps.data[i] - l * r.data[i]
    });
    ScalarField::from_vec(*state.phi.grid(), data).unwrap()
}

/// `int f^2 W(phi) / eps`.
pub fn f_weighted(state: &SimState, f: &ScalarField) -> f64 {
    let eps = state.eps;
    let phi = &state.phi.data;
    state.phi.grid().cell_volume()
        * slab_sum_indexed(state.phi.grid(), |i| f.data[i] * f.data[i] * state.potential.w(phi[i]) / eps)
}

/// `2 int f^2 W / eps`.
pub fn f_l2(state: &SimState) -> f64 {
    2.0 * f_weighted(state, &f_field(state))
}

/// `int (L r)^2 W / eps`, the clamping contribution to `f`.
pub fn l_term(state: &SimState) -> f64 {
    let l = state.forcing.l_eps;
    let r = state.r_field();
    let eps = state.eps;
    let phi = &state.phi.data;
    state.phi.grid().cell_volume()
        * slab_sum_indexed(state.phi.grid(), |i| {
            let lr = l * r.data[i];
            lr * lr * state.potential.w(phi[i]) / eps
        })
}

/// `|grad r|^2 - 1` from centered differences of `r_delta(phi)`.
///
/// Only cells whose whole stencil lies on the exact branch
/// `|phi| <= 1 - delta` carry a value; elsewhere `r_delta` is the flat clamp
/// (or the bridge into it) and the field is set to `-1`.
pub fn w_field(state: &SimState) -> ScalarField {
    let grid = *state.phi.grid();
    let r = state.r_field();
    let phi = &state.phi.data;
    let clamp = &state.clamp;
    let half_inv_h = 0.5 / grid.h();
    let data = fill_cells(&grid, |i| {
        if !clamp.is_exact(phi[i]) {
            return -1.0;
        }
        let mut acc = 0.0;
        for axis in 0..grid.dim() {
            let (p, m) = (grid.neighbor(i, axis, 1), grid.neighbor(i, axis, -1));
            if !clamp.is_exact(phi[p]) || !clamp.is_exact(phi[m]) {
                return -1.0;
            }
            let dk = (r.data[p] - r.data[m]) * half_inv_h;
            acc += dk * dk;
        }
        acc - 1.0
    });
    ScalarField::from_vec(grid, data).unwrap()
}

pub fn w_max(state: &SimState) -> f64 {
    w_field(state).max()
}

/// Approximate mean curvature vector, unit normal and normal velocity.
#[derive(Clone, Debug)]
pub struct CurvatureVelocity {
    pub h_eps: VectorField,
    pub nu_eps: VectorField,
    pub v_eps: VectorField,
}

/// `|grad phi|` below `1e-6 / eps` counts as zero.
pub fn gradient_threshold(eps: f64) -> f64 {
    1e-6 / eps
}

pub fn curvature_velocity(state: &SimState) -> CurvatureVelocity {
    let grid = *state.phi.grid();
    let d = grid.dim();
    let g = gradient(&state.phi);
    let a = allen_cahn_residual(state);
    let phi_t = state.rhs();
    let theta = gradient_threshold(state.eps);
    let norms: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| g.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect();
    let build = |scale: &(dyn Fn(usize, f64) -> f64 + Sync)| {
        let comps = (0..d)
            .map(|k| {
                fill_cells(&grid, |i| {
                    let n = norms[i];
                    if n > theta {
                        scale(i, n) * g.comps[k][i] / n
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        VectorField::from_components(
            grid,
            comps_to_fields(grid, comps),
        )
        .unwrap()
    };
    CurvatureVelocity {
        h_eps: build(&|i, n| -a.data[i] / n),
        nu_eps: build(&|_, _| 1.0),
        v_eps: build(&|i, n| -phi_t.data[i] / n),
    }
}

fn comps_to_fields(grid: TorusGrid, comps: Vec<Vec<f64>>) -> Vec<ScalarField> {
    comps.into_iter().map(|c| ScalarField::from_vec(grid, c).unwrap()).collect()
}

/// Mean distance from `center` to the zero level of `phi`, taken along the
/// positive and negative coordinate axes through the nearest grid point.
/// `phi` is expected to be positive at the center.
pub fn interface_radius(phi: &ScalarField, center: &[f64]) -> Result<f64> {
    let grid = *phi.grid();
    let d = grid.dim();
    if center.len() < d {
        return Err(invalid(format!("center has {} coordinates, need {d}", center.len())));
    }
    let n = grid.n();
    let h = grid.h();
    let mut c = [0usize; 3];
    for k in 0..d {
        c[k] = ((center[k].rem_euclid(1.0) / h).round() as usize) % n;
    }
    let origin = grid.index(&c[..d]);
    if !(phi.data[origin] > 0.0) {
        return Err(Error::Extinct);
    }
    let mut total = 0.0;
    for axis in 0..d {
        // offset of the grid line from the requested center along this axis
        let mut off = c[axis] as f64 * h - center[axis].rem_euclid(1.0);
        if off > 0.5 {
            off -= 1.0;
        } else if off < -0.5 {
            off += 1.0;
        }
        for dir in [1isize, -1] {
            let mut prev = phi.data[origin];
            let mut idx = origin;
            let mut found = None;
            for step in 1..=n / 2 {
                idx = grid.neighbor(idx, axis, dir);
                let v = phi.data[idx];
                if v <= 0.0 {
                    let frac = prev / (prev - v);
                    found = Some((step as f64 - 1.0 + frac) * h);
                    break;
                }
                prev = v;
            }
            let s = found.ok_or(Error::Extinct)?;
            total += (s + dir as f64 * off).abs();
        }
    }
    Ok(total / (2 * d) as f64)
}

/// Linearly interpolated zero crossings of `phi` along the grid line
/// parallel to `axis` through the grid point nearest `through`. Positions are
/// coordinates in `[0, 1)`.
pub fn zero_crossings(phi: &ScalarField, axis: usize, through: &[f64]) -> Result<Vec<f64>> {
    let grid = *phi.grid();
    let d = grid.dim();
    if axis >= d || through.len() < d {
        return Err(invalid("zero_crossings needs a valid axis and a full point"));
    }
    let (n, h) = (grid.n(), grid.h());
    let mut c = [0usize; 3];
    for k in 0..d {
        c[k] = ((through[k].rem_euclid(1.0) / h).round() as usize) % n;
    }
    let mut out = Vec::new();
    for i in 0..n {
        c[axis] = i;
        let a = phi.data[grid.index(&c[..d])];
        c[axis] = (i + 1) % n;
        let b = phi.data[grid.index(&c[..d])];
        if (a > 0.0) != (b > 0.0) {
            let frac = a / (a - b);
            out.push(((i as f64 + frac) * h).rem_euclid(1.0));
        }
    }
    Ok(out)
}

/// Evaluates every record column at the current state.
pub fn record(state: &SimState, opts: &DiagOptions) -> Result<DiagnosticsRecord> {
    let (mu, xi) = densities(state);
    let mu_total = mu.integral();
    let xi_max = xi.max();
    let xi_l1 = state.phi.grid().cell_volume() * slab_sum_indexed(state.phi.grid(), |i| xi.data[i].abs());
    let d_t = density_ratio(&mu, &opts.sampling)?;
    let interface_radius = match &opts.interface_center {
        Some(c) => Some(interface_radius(&state.phi, c)?),
        None => None,
    };
    let rec = DiagnosticsRecord {
        t: state.t,
        mu_total,
        xi_max,
        xi_l1,
        d_t,
        dissipation: dissipation(state),
        f_l2: f_l2(state),
        w_max: w_max(state),
        interface_radius,
        phi_margin: 1.0 - state.phi.max_abs(),
    };
    let finite = [rec.mu_total, rec.xi_max, rec.xi_l1, rec.d_t, rec.dissipation, rec.f_l2, rec.w_max];
    if let Some(k) = finite.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: RECORD_COLUMNS[k + 1], index: 0, t: state.t });
    }
    Ok(rec)
}

/// Energy bookkeeping at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub mu: f64,
    /// `int eps A^2`.
    pub dissipation: f64,
    /// `int f^2 W / eps`.
    pub forcing: f64,
}

impl EnergySample {
    pub fn of(state: &SimState) -> Self {
        EnergySample {
            t: state.t,
            mu: mu_total(state),
            dissipation: dissipation(state),
            forcing: f_weighted(state, &f_field(state)),
        }
    }
}

/// Residual of the energy inequality over `[a.t, b.t]` from the samples in
/// between (trapezoidal in time):
/// `mu(b) - mu(a) + (1/2 sigma) int eps A^2 - (1/sigma) int f^2 W / eps`.
pub fn energy_residual(samples: &[EnergySample], sigma: f64) -> f64 {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else { return 0.0 };
    let mut diss = 0.0;
    let mut forcing = 0.0;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        diss += 0.5 * dt * (w[0].dissipation + w[1].dissipation);
        forcing += 0.5 * dt * (w[0].forcing + w[1].forcing);
    }
    last.mu - first.mu + diss / (2.0 * sigma) - forcing / sigma
}
