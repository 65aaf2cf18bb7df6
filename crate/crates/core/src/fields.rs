//! Initial data, mollified transport/forcing fields, the clamping coefficient
//! `L`, the compatible choice of `eps`, and the clamped inverse profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    gradient, periodic_convolve, periodic_convolve_vector, periodic_distance, Point, ScalarField, TorusGrid,
    VectorField,
};
use crate::potential::ProfileSpec;

/// Default clamp width of `r_delta`.
pub const DEFAULT_CLAMP_DELTA: f64 = 1e-6;

/// `r_delta` with its branch constants precomputed.
///
/// Inside `[-1 + delta, 1 - delta]` this is the inverse profile. Beyond
/// `|s| >= 1` it is the constant `q^{-1}(1 - delta) + 1` (resp. `q^{-1}(-1 + delta) - 1`).
/// On `1 - delta < |s| < 1` the two are joined by a cubic Hermite segment that
/// matches value and slope at both ends, which keeps the map C^1 and
/// monotone.
#[derive(Clone, Debug)]
pub struct ClampedInverse {
    profile: ProfileSpec,
    delta: f64,
    a_hi: f64,
    a_lo: f64,
    m_hi: f64,
    m_lo: f64,
}

impl ClampedInverse {
    pub fn new(profile: &ProfileSpec, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("clamp delta must lie in (0, 1), got {delta}")));
        }
        Ok(ClampedInverse {
            profile: profile.clone(),
            delta,
            a_hi: profile.q_inv(1.0 - delta),
            a_lo: profile.q_inv(-1.0 + delta),
            m_hi: profile.q_inv_prime(1.0 - delta) * delta,
            m_lo: profile.q_inv_prime(-1.0 + delta) * delta,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn profile(&self) -> &ProfileSpec {
        &self.profile
    }

    /// Whether `s` lies on the middle branch, where `r_delta = (q^eps)^{-1}`.
    #[inline]
    pub fn is_exact(&self, s: f64) -> bool {
        s.abs() <= 1.0 - self.delta
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let hi = 1.0 - self.delta;
        if s >= 1.0 {
            self.a_hi + 1.0
        } else if s <= -1.0 {
            self.a_lo - 1.0
        } else if s > hi {
            let t = (s - hi) / self.delta;
            hermite(self.a_hi, self.m_hi, self.a_hi + 1.0, 0.0, t)
        } else if s < -hi {
            let t = (s + 1.0) / self.delta;
            hermite(self.a_lo - 1.0, 0.0, self.a_lo, self.m_lo, t)
        } else {
            self.profile.q_inv(s)
        }
    }

    pub fn apply(&self, phi: &ScalarField) -> ScalarField {
        phi.map(|s| self.eval(s))
    }
}

#[inline]
fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
}

/// `r^eps_delta(s)`.
pub fn clamped_r(p: &ProfileSpec, s: f64, delta: f64) -> f64 {
    ClampedInverse::new(p, delta).expect("delta in (0, 1)").eval(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialShape {
    /// Ball; `phi -> +1` inside.
    Sphere { center: Vec<f64>, radius: f64 },
    /// Slab `lo < x_axis < hi`.
    Strip { axis: usize, lo: f64, hi: f64 },
    /// Spherical shell `inner < |x - center| < outer`.
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    /// Union of two disjoint balls.
    TwoSpheres { center_a: Vec<f64>, radius_a: f64, center_b: Vec<f64>, radius_b: f64 },
}

fn as_point(c: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..c.len().min(3)].copy_from_slice(&c[..c.len().min(3)]);
    p
}

impl InitialShape {
    pub fn validate(&self, d: usize) -> Result<()> {
        let check_center = |c: &[f64]| {
            if c.len() != d {
                Err(invalid(format!("shape center has {} coordinates, need {d}", c.len())))
            } else {
                Ok(())
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v < 0.5 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (0, 1/2), got {v}")))
            }
        };
        match self {
            InitialShape::Sphere { center, radius } => {
                check_center(center)?;
                positive("radius", *radius)
            }
            InitialShape::Strip { axis, lo, hi } => {
                if *axis >= d {
                    return Err(invalid(format!("strip axis {axis} out of range for d = {d}")));
                }
                if !(hi > lo && hi - lo < 1.0) {
                    return Err(invalid(format!("strip bounds need lo < hi < lo + 1, got [{lo}, {hi}]")));
                }
                Ok(())
            }
            InitialShape::Annulus { center, inner, outer } => {
                check_center(center)?;
                positive("inner radius", *inner)?;
                positive("outer radius", *outer)?;
                if inner >= outer {
                    return Err(invalid("annulus needs inner < outer"));
                }
                Ok(())
            }
            InitialShape::TwoSpheres { center_a, radius_a, center_b, radius_b } => {
                check_center(center_a)?;
                check_center(center_b)?;
                positive("radius_a", *radius_a)?;
                positive("radius_b", *radius_b)?;
                let gap = periodic_distance(&as_point(center_a), &as_point(center_b), d) - radius_a - radius_b;
                if gap <= 0.0 {
                    return Err(invalid("spheres overlap"));
                }
                Ok(())
            }
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, x: &Point, d: usize) -> f64 {
        match self {
            InitialShape::Sphere { center, radius } => radius - periodic_distance(x, &as_point(center), d),
            InitialShape::Strip { axis, lo, hi } => {
                let w = hi - lo;
                let s = (x[*axis] - lo).rem_euclid(1.0);
                if s < w {
                    s.min(w - s)
                } else {
                    -(s - w).min(1.0 - s)
                }
            }
            InitialShape::Annulus { center, inner, outer } => {
                let rho = periodic_distance(x, &as_point(center), d);
                (rho - inner).min(outer - rho)
            }
            InitialShape::TwoSpheres { center_a, radius_a, center_b, radius_b } => {
                let a = radius_a - periodic_distance(x, &as_point(center_a), d);
                let b = radius_b - periodic_distance(x, &as_point(center_b), d);
                a.max(b)
            }
        }
    }

    /// Largest distance the signed-distance function can reach on either
    /// side of the interface before it meets a second front or a periodic
    /// image.
    pub fn clearance(&self, d: usize) -> f64 {
        match self {
            InitialShape::Sphere { radius, .. } => radius.min(0.5 - radius),
            InitialShape::Strip { lo, hi, .. } => {
                let w = hi - lo;
                (0.5 * w).min(0.5 * (1.0 - w))
            }
            InitialShape::Annulus { inner, outer, .. } => inner.min(0.5 * (outer - inner)).min(0.5 - outer),
            InitialShape::TwoSpheres { center_a, radius_a, center_b, radius_b } => {
                let gap = periodic_distance(&as_point(center_a), &as_point(center_b), d) - radius_a - radius_b;
                radius_a.min(*radius_b).min(0.5 - radius_a.max(*radius_b)).min(0.5 * gap)
            }
        }
    }

    pub fn sphere_center(&self) -> Option<&[f64]> {
        match self {
            InitialShape::Sphere { center, .. } => Some(center),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialOptions {
    /// Minimum clearance, in units of `eps`.
    pub clearance_factor: f64,
    /// Multiplier on the signed distance before the profile is applied;
    /// `1` gives `|grad r_0| <= 1`, larger values build corrupted data.
    pub steepness: f64,
}

impl Default for InitialOptions {
    fn default() -> Self {
        InitialOptions { clearance_factor: 4.0, steepness: 1.0 }
    }
}

/// `phi_0 = q^eps(clamp(d(x), -R, R))` with `R = min(clearance, 10 eps)`.
pub fn initial_phi(grid: TorusGrid, shape: &InitialShape, p: &ProfileSpec) -> Result<ScalarField> {
    initial_phi_with(grid, shape, p, &InitialOptions::default())
}

pub fn initial_phi_with(
    grid: TorusGrid,
    shape: &InitialShape,
    p: &ProfileSpec,
    opts: &InitialOptions,
) -> Result<ScalarField> {
    let d = grid.dim();
    shape.validate(d)?;
    if !(opts.steepness > 0.0) {
        return Err(invalid("steepness must be positive"));
    }
    let clearance = shape.clearance(d);
    let required = opts.clearance_factor * p.eps;
    if clearance < required {
        return Err(Error::Clearance { clearance, required });
    }
    let cut = clearance.min(10.0 * p.eps);
    Ok(ScalarField::from_fn(grid, |x| {
        let r = (opts.steepness * shape.signed_distance(x, d)).clamp(-cut, cut);
        p.q(r)
    }))
}

/// `1 - max |phi|`.
pub fn phi_floor(phi: &ScalarField) -> f64 {
    1.0 - phi.max_abs()
}

/// Mollified transport and forcing fields with their gradient bounds.
#[derive(Clone, Debug)]
pub struct ForcingData {
    pub u_eps: VectorField,
    pub g_eps: ScalarField,
    pub sup_grad_u: f64,
    pub sup_grad_g: f64,
    /// Coefficient of the `L r` term used by the dynamics.
    pub l_eps: f64,
    pub gamma: Option<f64>,
    pub delta_mollify: f64,
    /// Set by [`select_epsilon`] once `L <= eps^-gamma` has been verified.
    pub compliant: bool,
    /// `l_eps` was overridden and no longer equals `2 sup|grad u| + sup|grad g|`.
    pub l_pinned: bool,
    /// `u == 0` everywhere; lets the solver skip the transport term.
    pub u_is_zero: bool,
}

impl ForcingData {
    /// No transport, no forcing.
    pub fn none(grid: TorusGrid) -> Self {
        ForcingData {
            u_eps: VectorField::zeros(grid),
            g_eps: ScalarField::zeros(grid),
            sup_grad_u: 0.0,
            sup_grad_g: 0.0,
            l_eps: 0.0,
            gamma: None,
            delta_mollify: 0.0,
            compliant: false,
            l_pinned: false,
            u_is_zero: true,
        }
    }

    /// `2 sup|grad u| + sup|grad g|`.
    pub fn natural_l(&self) -> f64 {
        2.0 * self.sup_grad_u + self.sup_grad_g
    }

    /// Replaces the clamping coefficient by a fixed value.
    pub fn pin_l(&mut self, value: f64) {
        self.l_eps = value;
        self.l_pinned = true;
    }

    pub fn l_consistent(&self) -> bool {
        let natural = self.natural_l();
        (self.l_eps - natural).abs() <= 1e-12 * natural.max(1e-300) || self.l_eps == natural
    }
}

/// Smooth compactly supported bump `exp(-1 / (1 - |x/delta|^2))` sampled
/// around cell 0, unnormalised.
pub fn bump_kernel(grid: TorusGrid, delta: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r = periodic_distance(x, &[0.0; 3], grid.dim()) / delta;
        if r < 1.0 {
            (-1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    })
}

/// Largest pointwise Frobenius norm of the centered-difference Jacobian.
pub fn sup_gradient(fields: &[&ScalarField]) -> f64 {
    let grads: Vec<VectorField> = fields.iter().map(|f| gradient(f)).collect();
    let Some(first) = fields.first() else { return 0.0 };
    let len = first.grid().len();
    (0..len)
        .into_par_iter()
        .map(|i| grads.iter().flat_map(|g| g.comps.iter()).map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .reduce(|| 0.0, f64::max)
}

pub fn mollify_forcing(u_raw: &VectorField, g_raw: &ScalarField, delta: f64) -> Result<ForcingData> {
    let grid = *g_raw.grid();
    if u_raw.grid() != &grid {
        return Err(invalid("u and g must share one grid"));
    }
    if !(delta >= grid.h() && delta <= 0.5) {
        return Err(invalid(format!("mollifier radius must lie in [h, 1/2] = [{}, 0.5], got {delta}", grid.h())));
    }
    let kernel = bump_kernel(grid, delta);
    let u_eps = periodic_convolve_vector(u_raw, &kernel)?;
    let g_eps = periodic_convolve(g_raw, &kernel)?;
    let comps: Vec<ScalarField> = (0..grid.dim()).map(|k| u_eps.component(k)).collect();
    let sup_grad_u = sup_gradient(&comps.iter().collect::<Vec<_>>());
    let sup_grad_g = sup_gradient(&[&g_eps]);
    let u_is_zero = u_raw.comps.iter().flatten().all(|&v| v == 0.0);
    Ok(ForcingData {
        u_eps,
        g_eps,
        sup_grad_u,
        sup_grad_g,
        l_eps: 2.0 * sup_grad_u + sup_grad_g,
        gamma: None,
        delta_mollify: delta,
        compliant: false,
        l_pinned: false,
        u_is_zero,
    })
}

/// Picks the largest candidate `eps` with `sup|grad u|`, `sup|grad g|` and
/// `L` all at most `eps^-gamma`.
pub fn select_epsilon(fd: &mut ForcingData, gamma: f64, eps_candidates: &[f64]) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(invalid(format!("gamma must lie in (0, 1/2), got {gamma}")));
    }
    if eps_candidates.is_empty() {
        return Err(invalid("no epsilon candidates"));
    }
    if eps_candidates.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("epsilon candidates must be positive"));
    }
    if eps_candidates.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("epsilon candidates must be strictly descending"));
    }
    let l = fd.l_eps;
    let mut last_violation = String::new();
    for &eps in eps_candidates {
        let bound = eps.powf(-gamma);
        let checks = [("sup|grad u|", fd.sup_grad_u), ("sup|grad g|", fd.sup_grad_g), ("L", l)];
        let failed: Vec<String> =
            checks.iter().filter(|(_, v)| *v > bound).map(|(name, v)| format!("{name} = {v}")).collect();
        if failed.is_empty() {
            fd.gamma = Some(gamma);
            fd.compliant = true;
            return Ok(eps);
        }
        last_violation = format!("{} > eps^-gamma = {bound} at eps = {eps}", failed.join(", "));
    }
    Err(Error::NoCompliantEpsilon(last_violation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::laplacian;
    use crate::potential::{make_standard_potential, profile};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn std_profile(eps: f64) -> ProfileSpec {
        profile(&make_standard_potential(), eps).unwrap()
    }

    #[test]
    fn clamped_r_examples() {
        let p = std_profile(0.1);
        assert_eq!(clamped_r(&p, 0.0, 0.01), 0.0);
        assert_abs_diff_eq!(clamped_r(&p, 0.5, 0.01), 0.1 * 0.5f64.atanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(clamped_r(&p, 0.5, 0.01), 0.054_930_614, epsilon = 1e-9);
        let expect = 0.1 * 0.99f64.atanh() + 1.0;
        assert_abs_diff_eq!(clamped_r(&p, 1.5, 0.01), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 1.264_665, epsilon = 1e-6);
        assert_abs_diff_eq!(clamped_r(&p, -1.5, 0.01), -expect, epsilon = 1e-12);
    }

    #[test]
    fn clamped_r_is_c1_at_branch_joins() {
        let p = std_profile(0.1);
        let delta = 0.01;
        let c = ClampedInverse::new(&p, delta).unwrap();
        let h = 1e-9;
        for s in [1.0 - delta, -1.0 + delta, 1.0, -1.0] {
            let left = (c.eval(s) - c.eval(s - h)) / h;
            let right = (c.eval(s + h) - c.eval(s)) / h;
            assert!((left - right).abs() <= 1e-3 * left.abs().max(1.0), "s={s}: {left} vs {right}");
        }
    }

    #[test]
    fn initial_circle() {
        let g = TorusGrid::new(2, 256).unwrap();
        let p = std_profile(0.04);
        let shape = InitialShape::Sphere { center: vec![0.5, 0.5], radius: 0.25 };
        let phi = initial_phi(g, &shape, &p).unwrap();
        let center = phi.data[g.index(&[128, 128])];
        assert_abs_diff_eq!(center, (0.25f64 / 0.04).tanh(), epsilon = 1e-15);
        assert!(center > 0.99999);
        // the circle passes through grid point (0.75, 0.5)
        assert_abs_diff_eq!(phi.data[g.index(&[192, 128])], 0.0, epsilon = 1e-15);
        assert!(phi_floor(&phi) > 0.0);
    }

    #[test]
    fn initial_gradient_of_r_is_bounded() {
        let g = TorusGrid::new(2, 256).unwrap();
        let p = std_profile(0.04);
        let shape = InitialShape::Sphere { center: vec![0.5, 0.5], radius: 0.25 };
        let phi = initial_phi(g, &shape, &p).unwrap();
        let clamp = ClampedInverse::new(&p, DEFAULT_CLAMP_DELTA).unwrap();
        let r = clamp.apply(&phi);
        let gr = gradient(&r).norm();
        let h = g.h();
        assert!(gr.max() * gr.max() <= 1.0 + 10.0 * h * h, "max |grad r| = {}", gr.max());
    }

    #[test]
    fn clearance_enforced() {
        let g = TorusGrid::new(2, 64).unwrap();
        let p = std_profile(0.08);
        let shape = InitialShape::Sphere { center: vec![0.5, 0.5], radius: 0.25 };
        assert!(matches!(initial_phi(g, &shape, &p), Err(Error::Clearance { .. })));
        let loose = InitialOptions { clearance_factor: 1.0, ..Default::default() };
        assert!(initial_phi_with(g, &shape, &p, &loose).is_ok());
    }

    #[test]
    fn shape_distances() {
        let strip = InitialShape::Strip { axis: 0, lo: 0.25, hi: 0.75 };
        assert_abs_diff_eq!(strip.signed_distance(&[0.5, 0.1, 0.0], 2), 0.25);
        assert_abs_diff_eq!(strip.signed_distance(&[0.3, 0.1, 0.0], 2), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(strip.signed_distance(&[0.05, 0.1, 0.0], 2), -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(strip.signed_distance(&[0.9, 0.1, 0.0], 2), -0.15, epsilon = 1e-15);
        let ann = InitialShape::Annulus { center: vec![0.5, 0.5], inner: 0.1, outer: 0.3 };
        assert_abs_diff_eq!(ann.signed_distance(&[0.7, 0.5, 0.0], 2), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(ann.signed_distance(&[0.5, 0.5, 0.0], 2), -0.1, epsilon = 1e-15);
        let two = InitialShape::TwoSpheres {
            center_a: vec![0.25, 0.5],
            radius_a: 0.1,
            center_b: vec![0.75, 0.5],
            radius_b: 0.1,
        };
        two.validate(2).unwrap();
        assert_abs_diff_eq!(two.signed_distance(&[0.25, 0.5, 0.0], 2), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(two.clearance(2), 0.1, epsilon = 1e-15);
        assert!(InitialShape::Sphere { center: vec![0.5], radius: 0.2 }.validate(2).is_err());
    }

    #[test]
    fn mollify_constant_and_shear() {
        let g = TorusGrid::new(2, 64).unwrap();
        let u = VectorField::constant(g, &[0.3, -0.2]).unwrap();
        let gr = ScalarField::constant(g, 0.1);
        let fd = mollify_forcing(&u, &gr, 4.0 * g.h()).unwrap();
        assert!(fd.sup_grad_u <= 1e-10 && fd.sup_grad_g <= 1e-10);
        assert!(fd.u_eps.comps[0].iter().all(|v| (v - 0.3).abs() < 1e-13));
        assert!(fd.l_consistent());

        let shear = VectorField::from_fn(g, |x| [(TAU * x[1]).sin(), 0.0, 0.0]);
        let zero = ScalarField::zeros(g);
        let fd = mollify_forcing(&shear, &zero, 0.05).unwrap();
        assert!(fd.l_eps <= 2.0 * TAU);
        assert!(fd.l_eps > 0.0);
        assert_abs_diff_eq!(fd.u_eps.component(0).mean(), shear.component(0).mean(), epsilon = 1e-12);
        assert!(fd.u_eps.component(0).max_abs() <= shear.component(0).max_abs() + 1e-12);
        assert!(mollify_forcing(&shear, &zero, 0.5 * g.h()).is_err());
    }

    #[test]
    fn mollify_keeps_g_mean() {
        let g = TorusGrid::new(2, 32).unwrap();
        let raw = ScalarField::from_fn(g, |x| if x[0] < 0.3 { 1.0 } else { -0.5 } + x[1]);
        let fd = mollify_forcing(&VectorField::zeros(g), &raw, 0.1).unwrap();
        assert_abs_diff_eq!(fd.g_eps.mean(), raw.mean(), epsilon = 1e-12);
        assert!(fd.g_eps.max_abs() <= raw.max_abs() + 1e-12);
        // mollified field is smooth enough that its laplacian stays finite
        assert!(laplacian(&fd.g_eps).all_finite());
    }

    fn forcing_with(sup_u: f64, sup_g: f64) -> ForcingData {
        let g = TorusGrid::new(2, 8).unwrap();
        let mut fd = ForcingData::none(g);
        fd.sup_grad_u = sup_u;
        fd.sup_grad_g = sup_g;
        fd.l_eps = fd.natural_l();
        fd
    }

    #[test]
    fn select_epsilon_examples() {
        let mut fd = forcing_with(0.0, 0.0);
        assert_eq!(select_epsilon(&mut fd, 0.25, &[0.2, 0.1]).unwrap(), 0.2);
        assert!(fd.compliant);

        let mut fd = forcing_with(10.0, 0.0);
        let err = select_epsilon(&mut fd, 0.4, &[0.1, 0.01]).unwrap_err();
        assert!(matches!(err, Error::NoCompliantEpsilon(_)));
        assert!(err.to_string().contains("L = 20"), "{err}");
        assert!(!fd.compliant);

        let mut fd = forcing_with(0.0, 1.0);
        assert_eq!(select_epsilon(&mut fd, 0.25, &[0.5]).unwrap(), 0.5);
        assert_eq!(fd.gamma, Some(0.25));

        let mut fd = forcing_with(0.0, 0.0);
        assert!(select_epsilon(&mut fd, 0.5, &[0.1]).is_err());
        assert!(select_epsilon(&mut fd, 0.2, &[0.01, 0.1]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn clamped_r_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0, delta in 1e-6f64..0.1) {
            let c = ClampedInverse::new(&std_profile(0.05), delta).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(c.eval(lo) <= c.eval(hi));
            proptest::prop_assert!(c.eval(hi).abs() <= c.eval(2.0).abs() + 1e-12);
        }

        #[test]
        fn clamped_r_inverts_profile(z in -1.0f64..1.0, delta in 1e-6f64..0.1) {
            let p = std_profile(0.05);
            let c = ClampedInverse::new(&p, delta).unwrap();
            let r = z * p.q_inv(1.0 - delta);
            proptest::prop_assert!((c.eval(p.q(r)) - r).abs() < 1e-8);
        }
    }
}
