//! Reference values that do not depend on the solver: planar wave speed,
//! the sphere radius ODE, and 1-D integrals across one standing wave.

use crate::error::{invalid, Error, Result};
use crate::potential::{profile, PotentialSpec};

/// Sign of the forcing in the sphere ODE with `phi -> +1` inside. A strip
/// run with `g > 0` shrinks the positive phase, so `g` adds to the inward
/// curvature speed.
pub const FORCING_SIGN: f64 = 1.0;

/// Normal speed `u . nu + g` of a planar front.
pub fn traveling_wave_speed(u: &[f64], g: f64, nu: &[f64]) -> Result<f64> {
    if u.len() != nu.len() {
        return Err(invalid("u and nu need the same dimension"));
    }
    let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("nu must be a unit vector, |nu| = {norm}")));
    }
    Ok(u.iter().zip(nu).map(|(a, b)| a * b).sum::<f64>() + g)
}

/// `dR/dt = -((d - 1) / R + s_g g)`.
pub fn sphere_velocity(r: f64, g: f64, d: usize) -> f64 {
    -((d as f64 - 1.0) / r + FORCING_SIGN * g)
}

/// `sqrt(R0^2 - 2 (d - 1) t)`, valid for `g = 0`.
pub fn sphere_radius_closed_form(r0: f64, d: usize, t: f64) -> Result<f64> {
    let k = 2.0 * (d as f64 - 1.0);
    let sq = r0 * r0 - k * t;
    if sq <= 0.0 {
        return Err(Error::ExtinctAt(r0 * r0 / k));
    }
    Ok(sq.sqrt())
}

/// Time at which the radius reaches `r` (`< r0`) under
/// [`sphere_velocity`]; closed form of the separable ODE.
pub fn sphere_time_to_radius(r0: f64, g: f64, d: usize, r: f64) -> f64 {
    let a = d as f64 - 1.0;
    let b = FORCING_SIGN * g;
    if b == 0.0 {
        return (r0 * r0 - r * r) / (2.0 * a);
    }
    // dt = -R dR / (a + b R)
    let prim = |x: f64| x / b - a / (b * b) * (a + b * x).abs().ln();
    prim(r0) - prim(r)
}

const RK_TOL: f64 = 1e-10;

/// Radius of a sphere moving by curvature plus forcing, integrated with an
/// adaptive embedded Runge-Kutta 4(5) rule (Cash-Karp) at `1e-10`.
pub fn sphere_radius(r0: f64, g: f64, d: usize, t: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(invalid(format!("R0 must be positive, got {r0}")));
    }
    if !(d == 2 || d == 3) {
        return Err(invalid(format!("unsupported dimension {d}")));
    }
    if t < 0.0 {
        return Err(invalid("t must be non-negative"));
    }
    let f = |r: f64| sphere_velocity(r, g, d);
    let mut r = r0;
    let mut time = 0.0;
    let mut h = (t / 100.0).max(1e-12);
    // extinction guard: radius below this is treated as gone
    let floor = 1e-9 * r0;
    while time < t {
        h = h.min(t - time);
        let (next, err) = cash_karp(&f, r, h);
        let scale = RK_TOL * (1.0 + r.abs());
        if next <= floor || !next.is_finite() {
            if h < 1e-15 {
                return Err(Error::ExtinctAt(time));
            }
            h *= 0.25;
            continue;
        }
        if err <= scale {
            time += h;
            r = next;
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (scale / err).powf(0.2)).min(4.0) };
            h *= grow;
        } else {
            h *= (0.9 * (scale / err).powf(0.25)).max(0.1);
        }
    }
    Ok(r)
}

fn cash_karp(f: &impl Fn(f64) -> f64, y: f64, h: f64) -> (f64, f64) {
    const A2: f64 = 1.0 / 5.0;
    const B3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const B4: [f64; 3] = [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0];
    const B5: [f64; 4] = [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0];
    const B6: [f64; 5] = [1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0];
    const C5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    const C4: [f64; 6] = [2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0];
    let k1 = f(y);
    let k2 = f(y + h * A2 * k1);
    let k3 = f(y + h * (B3[0] * k1 + B3[1] * k2));
    let k4 = f(y + h * (B4[0] * k1 + B4[1] * k2 + B4[2] * k3));
    let k5 = f(y + h * (B5[0] * k1 + B5[1] * k2 + B5[2] * k3 + B5[3] * k4));
    let k6 = f(y + h * (B6[0] * k1 + B6[1] * k2 + B6[2] * k3 + B6[3] * k4 + B6[4] * k5));
    let k = [k1, k2, k3, k4, k5, k6];
    let y5 = y + h * k.iter().zip(C5).map(|(a, b)| a * b).sum::<f64>();
    let y4 = y + h * k.iter().zip(C4).map(|(a, b)| a * b).sum::<f64>();
    (y5, (y5 - y4).abs())
}

fn integrate_front(p: &PotentialSpec, eps: f64, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let prof = profile(p, eps)?;
    let half = 30.0 * eps;
    let integrand = |r: f64| g(prof.q(r), prof.q_r(r));
    let left = quadrature::double_exponential::integrate(integrand, -half, 0.0, 1e-13).integral;
    let right = quadrature::double_exponential::integrate(integrand, 0.0, half, 1e-13).integral;
    let total = left + right;
    if !total.is_finite() {
        return Err(invalid("front quadrature did not converge"));
    }
    Ok(total)
}

/// `(1/sigma) int (eps q_r^2 / 2 + W(q) / eps) dr` across one front.
pub fn front_energy_1d(p: &PotentialSpec, eps: f64) -> Result<f64> {
    Ok(integrate_front(p, eps, |q, qr| 0.5 * eps * qr * qr + p.w(q) / eps)? / p.sigma)
}

/// `(1/sigma) int (eps q_r^2 / 2 - W(q) / eps) dr` across one front.
pub fn front_discrepancy_1d(p: &PotentialSpec, eps: f64) -> Result<f64> {
    Ok(integrate_front(p, eps, |q, qr| 0.5 * eps * qr * qr - p.w(q) / eps)? / p.sigma)
}

/// `int 2 W(q) / eps dr` across one front.
pub fn front_well_1d(p: &PotentialSpec, eps: f64) -> Result<f64> {
    integrate_front(p, eps, |q, _| 2.0 * p.w(q) / eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_standard_potential;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wave_speeds() {
        assert_eq!(traveling_wave_speed(&[0.0, 0.0], 0.0, &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(traveling_wave_speed(&[0.0, 0.0], 0.2, &[1.0, 0.0]).unwrap(), 0.2);
        assert_abs_diff_eq!(traveling_wave_speed(&[0.3, 0.0], 0.1, &[1.0, 0.0]).unwrap(), 0.4, epsilon = 1e-15);
        assert!(traveling_wave_speed(&[0.3, 0.0], 0.1, &[1.0, 1.0]).is_err());
        // superposition
        let nu = [0.6, 0.8];
        let a = traveling_wave_speed(&[0.3, -0.2], 0.1, &nu).unwrap();
        let b = traveling_wave_speed(&[0.1, 0.5], -0.4, &nu).unwrap();
        let c = traveling_wave_speed(&[0.4, 0.3], -0.3, &nu).unwrap();
        assert_abs_diff_eq!(a + b, c, epsilon = 1e-15);
    }

    #[test]
    fn sphere_closed_forms() {
        assert_abs_diff_eq!(sphere_radius_closed_form(0.25, 2, 0.01).unwrap(), 0.206_155_281, epsilon = 1e-9);
        match sphere_radius_closed_form(0.25, 2, 0.04) {
            Err(Error::ExtinctAt(t)) => assert_abs_diff_eq!(t, 0.03125, epsilon = 1e-15),
            other => panic!("{other:?}"),
        }
        for (d, t) in [(2, 0.01), (2, 0.03), (3, 0.01)] {
            let a = sphere_radius(0.25, 0.0, d, t).unwrap();
            let b = sphere_radius_closed_form(0.25, d, t).unwrap();
            assert!((a - b).abs() < 1e-9, "d={d} t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn sphere_with_forcing() {
        // balancing forcing keeps the radius fixed
        let r = sphere_radius(0.25, -4.0, 2, 0.05).unwrap();
        assert_abs_diff_eq!(r, 0.25, epsilon = 1e-12);
        assert_eq!(sphere_velocity(0.25, -4.0, 2), 0.0);
        // ODE solution agrees with the closed-form time
        let r = sphere_radius(0.25, 0.1, 2, 0.02).unwrap();
        assert_abs_diff_eq!(sphere_time_to_radius(0.25, 0.1, 2, r), 0.02, epsilon = 1e-9);
        assert!(r < sphere_radius_closed_form(0.25, 2, 0.02).unwrap());
        assert!(matches!(sphere_radius(0.25, 0.1, 2, 0.05), Err(Error::ExtinctAt(_))));
        assert!(sphere_radius(-1.0, 0.0, 2, 0.1).is_err());
    }

    #[test]
    fn front_integrals() {
        let p = make_standard_potential();
        for eps in [0.01, 0.04, 0.3] {
            assert_abs_diff_eq!(front_energy_1d(&p, eps).unwrap(), 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(front_discrepancy_1d(&p, eps).unwrap(), 0.0, epsilon = 1e-8);
            assert_abs_diff_eq!(front_well_1d(&p, eps).unwrap(), p.sigma, epsilon = 1e-8);
        }
    }
}
