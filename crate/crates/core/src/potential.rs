//! Double-well potentials and the one-dimensional standing-wave profile.
//!
//! The standard quartic `W(s) = (1 - s^2)^2 / 2` (and its positive multiples)
//! use closed forms: `q(r) = tanh(sqrt(c) r / eps)`. Any other well goes
//! through a tabulated profile built by integrating `dq/dz = sqrt(2 W(q))`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Inverse profile arguments are clamped to `|s| <= 1 - Q_INV_CLAMP`.
pub const Q_INV_CLAMP: f64 = 1e-12;

/// A user-supplied double well with its first two derivatives.
pub trait DoubleWell: Send + Sync + fmt::Debug {
    fn w(&self, s: f64) -> f64;
    fn dw(&self, s: f64) -> f64;
    fn ddw(&self, s: f64) -> f64;
}

#[derive(Clone, Debug)]
enum Well {
    /// `scale * (1 - s^2)^2 / 2`
    Quartic { scale: f64 },
    Custom(Arc<dyn DoubleWell>),
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    well: Well,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Constant bounding `(q^{-1}(s))^2 W(s)` on `|s| < 1`.
    pub c_w: f64,
    /// Surface tension `int_{-1}^{1} sqrt(2 W)`.
    pub sigma: f64,
    max_abs_ddw: f64,
    table: Option<Arc<ProfileTable>>,
}

/// The standard quartic well `(1 - s^2)^2 / 2`.
pub fn make_standard_potential() -> PotentialSpec {
    PotentialSpec::scaled_quartic(1.0).expect("standard quartic is valid")
}

impl PotentialSpec {
    /// `scale * (1 - s^2)^2 / 2` for `scale > 0`.
    pub fn scaled_quartic(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("quartic scale must be positive, got {scale}")));
        }
        let mut spec = PotentialSpec {
            well: Well::Quartic { scale },
            alpha1: 0.0,
            alpha2: 0.7,
            c_w: 0.0,
            sigma: 0.0,
            max_abs_ddw: 4.0 * scale,
            table: None,
        };
        spec.sigma = compute_sigma(&spec)?;
        spec.c_w = spec.measure_c_w();
        Ok(spec)
    }

    /// Wraps a general well. The profile is tabulated and the assumptions on
    /// the well are checked on a sample grid.
    pub fn custom(well: Arc<dyn DoubleWell>, alpha1: f64, alpha2: f64) -> Result<Self> {
        if !(alpha1 > -1.0 && alpha1 < 1.0) {
            return Err(invalid(format!("alpha1 must lie in (-1, 1), got {alpha1}")));
        }
        if !(alpha2 > 0.0 && alpha2 < 1.0) {
            return Err(invalid(format!("alpha2 must lie in (0, 1), got {alpha2}")));
        }
        let max_abs_ddw = sample_grid(-1.0, 1.0, 4001)
            .map(|s| well.ddw(s).abs())
            .fold(0.0, f64::max);
        let mut spec = PotentialSpec {
            well: Well::Custom(well),
            alpha1,
            alpha2,
            c_w: 0.0,
            sigma: 0.0,
            max_abs_ddw,
            table: None,
        };
        spec.check_well_shape()?;
        spec.sigma = compute_sigma(&spec)?;
        spec.table = Some(Arc::new(ProfileTable::build(&spec)?));
        spec.c_w = spec.measure_c_w();
        Ok(spec)
    }

    pub fn is_quartic(&self) -> bool {
        matches!(self.well, Well::Quartic { .. })
    }

    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        match &self.well {
            Well::Quartic { scale } => {
                let a = 1.0 - s * s;
                0.5 * scale * a * a
            }
            Well::Custom(w) => w.w(s),
        }
    }

    #[inline]
    pub fn dw(&self, s: f64) -> f64 {
        match &self.well {
            Well::Quartic { scale } => -2.0 * scale * s * (1.0 - s * s),
            Well::Custom(w) => w.dw(s),
        }
    }

    #[inline]
    pub fn ddw(&self, s: f64) -> f64 {
        match &self.well {
            Well::Quartic { scale } => scale * (6.0 * s * s - 2.0),
            Well::Custom(w) => w.ddw(s),
        }
    }

    /// `sqrt(2 W(s))`.
    #[inline]
    pub fn sqrt_2w(&self, s: f64) -> f64 {
        match &self.well {
            Well::Quartic { scale } => scale.sqrt() * (1.0 - s * s).abs(),
            Well::Custom(w) => (2.0 * w.w(s)).max(0.0).sqrt(),
        }
    }

    /// `max |W''|` over `[-1, 1]`.
    pub fn max_abs_ddw(&self) -> f64 {
        self.max_abs_ddw
    }

    /// Checks (w1)-(w3) on a sample grid. (w4) holds by construction of `c_w`
    /// as long as the sampled maximum is finite.
    pub fn check_assumptions(&self) -> Result<()> {
        self.check_well_shape()?;
        if !self.c_w.is_finite() {
            return Err(Error::Assumption {
                assumption: "w4",
                detail: format!("(q^-1)^2 W unbounded: sampled maximum {}", self.c_w),
            });
        }
        let unit = profile(self, 1.0)?;
        for s in sample_grid(-1.0 + 1e-6, 1.0 - 1e-6, 20001) {
            let z = unit.q_inv(s);
            let v = z * z * self.w(s);
            if v > self.c_w * (1.0 + 1e-9) {
                return Err(Error::Assumption {
                    assumption: "w4",
                    detail: format!("(q^-1({s}))^2 W = {v} exceeds c_w = {}", self.c_w),
                });
            }
        }
        Ok(())
    }

    fn check_well_shape(&self) -> Result<()> {
        let fail = |assumption, detail: String| Err(Error::Assumption { assumption, detail });
        for s in [-1.0, 1.0] {
            if self.w(s).abs() > 1e-12 || self.dw(s).abs() > 1e-12 {
                return fail("w1", format!("W({s}) = {}, W'({s}) = {}", self.w(s), self.dw(s)));
            }
        }
        for s in sample_grid(-1.5, 1.5, 6001) {
            let w = self.w(s);
            if !w.is_finite() || w < 0.0 {
                return fail("w1", format!("W({s}) = {w} is not a finite non-negative value"));
            }
        }
        for s in sample_grid(-1.0, 1.0, 4001) {
            if s <= -1.0 + 1e-6 || s >= 1.0 - 1e-6 || (s - self.alpha1).abs() < 1e-6 {
                continue;
            }
            let d = self.dw(s);
            let ok = if s > self.alpha1 { d < 0.0 } else { d > 0.0 };
            if !ok {
                return fail("w2", format!("W'({s}) = {d} has the wrong sign (alpha1 = {})", self.alpha1));
            }
        }
        for s in sample_grid(self.alpha2, 1.0, 1001) {
            for v in [s, -s] {
                if self.ddw(v) <= 0.0 {
                    return fail("w3", format!("W''({v}) = {} <= 0 (alpha2 = {})", self.ddw(v), self.alpha2));
                }
            }
        }
        Ok(())
    }

    /// Sampled maximum of `(q^{-1}(s))^2 W(s)` with a golden-section polish.
    fn measure_c_w(&self) -> f64 {
        let unit = profile(self, 1.0).expect("unit profile");
        let g = |s: f64| {
            let z = unit.q_inv(s);
            z * z * self.w(s)
        };
        let lim = 1.0 - 1e-6;
        let samples: Vec<f64> = sample_grid(-lim, lim, 20001).collect();
        let step = samples[1] - samples[0];
        let mut best = 0.0f64;
        let mut best_s = 0.0;
        for &s in &samples {
            let v = g(s);
            if v > best {
                best = v;
                best_s = s;
            }
        }
        let (mut a, mut b) = ((best_s - step).max(-lim), (best_s + step).min(lim));
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - ratio * (b - a);
            let d = a + ratio * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(g(0.5 * (a + b)))
    }
}

/// `int_{-1}^{1} sqrt(2 W(s)) ds` by double-exponential quadrature.
pub fn compute_sigma(p: &PotentialSpec) -> Result<f64> {
    compute_sigma_of(|s| p.w(s))
}

/// Surface tension for a bare well function.
pub fn compute_sigma_of(w: impl Fn(f64) -> f64) -> Result<f64> {
    for s in sample_grid(-1.0, 1.0, 257) {
        let v = w(s);
        if !v.is_finite() {
            return Err(invalid(format!("W({s}) is not finite")));
        }
        if v < 0.0 {
            return Err(invalid(format!("W({s}) = {v} is negative")));
        }
    }
    let out = quadrature::double_exponential::integrate(|s| (2.0 * w(s)).max(0.0).sqrt(), -1.0, 1.0, 1e-13);
    if !out.integral.is_finite() {
        return Err(invalid("surface tension quadrature did not converge"));
    }
    Ok(out.integral)
}

/// One-dimensional standing wave `q^eps` and its inverse.
#[derive(Clone, Debug)]
pub struct ProfileSpec {
    pub eps: f64,
    shape: ProfileShape,
}

#[derive(Clone, Debug)]
enum ProfileShape {
    Tanh { rate: f64 },
    Table(Arc<ProfileTable>),
}

pub fn profile(p: &PotentialSpec, eps: f64) -> Result<ProfileSpec> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let shape = match (&p.well, &p.table) {
        (Well::Quartic { scale }, _) => ProfileShape::Tanh { rate: scale.sqrt() },
        (Well::Custom(_), Some(t)) => ProfileShape::Table(Arc::clone(t)),
        (Well::Custom(_), None) => ProfileShape::Table(Arc::new(ProfileTable::build(p)?)),
    };
    Ok(ProfileSpec { eps, shape })
}

impl ProfileSpec {
    #[inline]
    pub fn q(&self, r: f64) -> f64 {
        let z = r / self.eps;
        match &self.shape {
            ProfileShape::Tanh { rate } => (rate * z).tanh(),
            ProfileShape::Table(t) => t.q(z),
        }
    }

    /// `d q^eps / dr`.
    #[inline]
    pub fn q_r(&self, r: f64) -> f64 {
        let z = r / self.eps;
        let dz = match &self.shape {
            ProfileShape::Tanh { rate } => {
                let th = (rate * z).tanh();
                rate * (1.0 - th * th)
            }
            ProfileShape::Table(t) => t.dq(z),
        };
        dz / self.eps
    }

    /// `(q^eps)^{-1}(s)`, with `s` clamped to `|s| <= 1 - 1e-12`.
    #[inline]
    pub fn q_inv(&self, s: f64) -> f64 {
        let s = s.clamp(-1.0 + Q_INV_CLAMP, 1.0 - Q_INV_CLAMP);
        let z = match &self.shape {
            ProfileShape::Tanh { rate } => s.atanh() / rate,
            ProfileShape::Table(t) => t.q_inv(s),
        };
        self.eps * z
    }

    /// Derivative of the inverse profile, `eps / sqrt(2 W(s))` in closed form.
    #[inline]
    pub fn q_inv_prime(&self, s: f64) -> f64 {
        let s = s.clamp(-1.0 + Q_INV_CLAMP, 1.0 - Q_INV_CLAMP);
        match &self.shape {
            ProfileShape::Tanh { rate } => self.eps / (rate * (1.0 - s * s)),
            ProfileShape::Table(t) => self.eps / t.sqrt_2w_at(s),
        }
    }
}

/// Unit-width profile sampled on a uniform `z` grid, interpolated with cubic
/// Hermite segments (the ODE supplies exact slopes).
#[derive(Debug)]
struct ProfileTable {
    z0: f64,
    dz: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
    potential: Box<PotentialSpec>,
}

impl ProfileTable {
    const STEP: f64 = 2e-3;
    const Z_MAX: f64 = 40.0;

    fn build(p: &PotentialSpec) -> Result<Self> {
        let mut bare = p.clone();
        bare.table = None;
        let rhs = |q: f64| bare.sqrt_2w(q);
        let h = Self::STEP;
        let integrate = |dir: f64| -> Vec<f64> {
            let mut out = vec![0.0];
            let mut q: f64 = 0.0;
            let mut z = 0.0;
            while z < Self::Z_MAX && (1.0 - q.abs()) > 1e-15 {
                let k1 = dir * rhs(q);
                let k2 = dir * rhs(q + 0.5 * h * k1);
                let k3 = dir * rhs(q + 0.5 * h * k2);
                let k4 = dir * rhs(q + h * k3);
                q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                q = q.clamp(-1.0, 1.0);
                z += h;
                out.push(q);
            }
            out
        };
        let fwd = integrate(1.0);
        let bwd = integrate(-1.0);
        if fwd.len() < 2 || bwd.len() < 2 {
            return Err(invalid("profile ODE did not leave the origin"));
        }
        let mut q: Vec<f64> = bwd.iter().rev().copied().collect();
        q.extend_from_slice(&fwd[1..]);
        for win in q.windows(2) {
            if win[1] < win[0] {
                return Err(invalid("tabulated profile is not monotone"));
            }
        }
        let dq = q.iter().map(|&v| bare.sqrt_2w(v)).collect();
        Ok(ProfileTable {
            z0: -((bwd.len() - 1) as f64) * h,
            dz: h,
            q,
            dq,
            potential: Box::new(bare),
        })
    }

    fn segment(&self, z: f64) -> Option<(usize, f64)> {
        let x = (z - self.z0) / self.dz;
        if x < 0.0 || x >= (self.q.len() - 1) as f64 {
            return None;
        }
        let i = x.floor() as usize;
        Some((i, x - i as f64))
    }

    fn q(&self, z: f64) -> f64 {
        match self.segment(z) {
            Some((i, t)) => self.hermite(i, t).0,
            None if z < self.z0 => self.q[0],
            None => *self.q.last().unwrap(),
        }
    }

    fn dq(&self, z: f64) -> f64 {
        match self.segment(z) {
            Some((i, t)) => self.hermite(i, t).1,
            None => 0.0,
        }
    }

    fn sqrt_2w_at(&self, s: f64) -> f64 {
        self.potential.sqrt_2w(s)
    }

    /// Value and z-derivative of the Hermite interpolant on segment `i`.
    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let (p0, p1) = (self.q[i], self.q[i + 1]);
        let (m0, m1) = (self.dq[i] * self.dz, self.dq[i + 1] * self.dz);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        let d = (6.0 * t2 - 6.0 * t) * p0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * p1
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, d / self.dz)
    }

    fn q_inv(&self, s: f64) -> f64 {
        let n = self.q.len();
        if s <= self.q[0] {
            return self.z0;
        }
        if s >= self.q[n - 1] {
            return self.z0 + (n - 1) as f64 * self.dz;
        }
        let i = self.q.partition_point(|&v| v <= s).saturating_sub(1).min(n - 2);
        let span = self.q[i + 1] - self.q[i];
        let mut t = if span > 0.0 { (s - self.q[i]) / span } else { 0.5 };
        for _ in 0..30 {
            let (v, d) = self.hermite(i, t);
            let d = d * self.dz;
            if d <= 0.0 {
                break;
            }
            let next = (t - (v - s) / d).clamp(0.0, 1.0);
            if (next - t).abs() < 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        self.z0 + (i as f64 + t) * self.dz
    }
}

/// `count` evenly spaced points covering `[a, b]` inclusive.
pub(crate) fn sample_grid(a: f64, b: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (count - 1) as f64;
    (0..count).map(move |i| if i + 1 == count { b } else { a + step * i as f64 })
}
