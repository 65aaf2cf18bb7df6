//! Time stepping.
//!
//! Both schemes share the non-diffusive part
//! `N(phi) = -W'(phi)/eps^2 - u . grad(phi) - (g + L r_delta(phi)) sqrt(2 W(phi)) / eps`.
//! The explicit scheme advances `phi + dt (lap(phi) + N(phi))`; the
//! semi-implicit one solves `(I - dt lap) phi' = phi + dt N(phi)` spectrally.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::{ClampedInverse, ForcingData, DEFAULT_CLAMP_DELTA};
use crate::grid::{fill_cells, laplacian, HelmholtzSolver, ScalarField};
use crate::potential::{profile, PotentialSpec, ProfileSpec};

/// Values of `|phi|` past `1 + PHI_SLACK` abort the run; smaller overshoot
/// is rounding and is projected back onto `[-1, 1]`.
pub const PHI_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    #[default]
    SemiImplicit,
}

#[derive(Clone)]
pub struct SimState {
    pub phi: ScalarField,
    pub t: f64,
    pub eps: f64,
    pub dt: f64,
    pub step_count: u64,
    pub scheme: Scheme,
    pub potential: PotentialSpec,
    pub profile: ProfileSpec,
    pub forcing: ForcingData,
    pub clamp: ClampedInverse,
    t_origin: f64,
    steps_since_origin: u64,
    helmholtz: Option<HelmholtzSolver>,
}

impl std::fmt::Debug for SimState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimState")
            .field("grid", self.phi.grid())
            .field("t", &self.t)
            .field("eps", &self.eps)
            .field("dt", &self.dt)
            .field("step_count", &self.step_count)
            .field("scheme", &self.scheme)
            .finish_non_exhaustive()
    }
}

/// Default time step `eps^2 / 10`.
pub fn default_dt(eps: f64) -> f64 {
    eps * eps / 10.0
}

impl SimState {
    /// `dt = None` selects [`default_dt`], capped by [`SimState::stable_dt`].
    pub fn new(
        phi: ScalarField,
        eps: f64,
        potential: PotentialSpec,
        forcing: ForcingData,
        scheme: Scheme,
        dt: Option<f64>,
    ) -> Result<Self> {
        Self::with_clamp_delta(phi, eps, potential, forcing, scheme, dt, DEFAULT_CLAMP_DELTA)
    }

    pub fn with_clamp_delta(
        phi: ScalarField,
        eps: f64,
        potential: PotentialSpec,
        forcing: ForcingData,
        scheme: Scheme,
        dt: Option<f64>,
        clamp_delta: f64,
    ) -> Result<Self> {
        if forcing.g_eps.grid() != phi.grid() || forcing.u_eps.grid() != phi.grid() {
            return Err(invalid("forcing fields live on a different grid than phi"));
        }
        if !phi.all_finite() {
            return Err(invalid("initial phi has non-finite values"));
        }
        let max_abs = phi.max_abs();
        if max_abs > 1.0 {
            return Err(invalid(format!("initial phi must satisfy |phi| <= 1, max is {max_abs}")));
        }
        let profile = profile(&potential, eps)?;
        let clamp = ClampedInverse::new(&profile, clamp_delta)?;
        let mut state = SimState {
            phi,
            t: 0.0,
            eps,
            dt: 0.0,
            step_count: 0,
            scheme,
            potential,
            profile,
            forcing,
            clamp,
            t_origin: 0.0,
            steps_since_origin: 0,
            helmholtz: None,
        };
        let dt = dt.unwrap_or_else(|| default_dt(eps).min(state.stable_dt()));
        state.check_dt(dt)?;
        state.dt = dt;
        if scheme == Scheme::SemiImplicit {
            state.helmholtz = Some(HelmholtzSolver::new(*state.phi.grid()));
        }
        Ok(state)
    }

    /// Largest step the chosen scheme accepts.
    pub fn stable_dt(&self) -> f64 {
        let grid = self.phi.grid();
        let h = grid.h();
        let reaction = self.eps * self.eps / (2.0 * self.potential.max_abs_ddw());
        let sup_u = self.forcing.u_eps.norm().max();
        let transport = if sup_u > 0.0 { h / (grid.dim() as f64 * sup_u) } else { f64::INFINITY };
        let diffusion = match self.scheme {
            Scheme::Explicit => h * h / (4.0 * grid.dim() as f64),
            Scheme::SemiImplicit => f64::INFINITY,
        };
        reaction.min(transport).min(diffusion)
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        let limit = self.stable_dt();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if dt > limit {
            return Err(invalid(format!("dt = {dt} exceeds the stability bound {limit} for {:?}", self.scheme)));
        }
        Ok(())
    }

    /// Overrides the step size; rejects values above [`SimState::stable_dt`].
    pub fn set_dt(&mut self, dt: f64) -> Result<()> {
        self.check_dt(dt)?;
        self.dt = dt;
        self.t_origin = self.t;
        self.steps_since_origin = 0;
        Ok(())
    }

    /// `L` as used by the dynamics.
    pub fn l_coeff(&self) -> f64 {
        self.forcing.l_eps
    }

    /// `r_delta(phi)`.
    pub fn r_field(&self) -> ScalarField {
        self.clamp.apply(&self.phi)
    }

    /// `N(phi)`, everything except the Laplacian.
    pub fn nondiffusive(&self) -> ScalarField {
        nondiffusive_of(self, &self.phi)
    }

    /// Full right-hand side `lap(phi) + N(phi)`.
    pub fn rhs(&self) -> ScalarField {
        let mut out = self.nondiffusive();
        let lap = laplacian(&self.phi);
        for (o, l) in out.data.iter_mut().zip(&lap.data) {
            *o += l;
        }
        out
    }

    pub fn step(&mut self) -> Result<()> {
        let n = self.nondiffusive();
        let dt = self.dt;
        let next = match self.scheme {
            Scheme::Explicit => {
                let lap = laplacian(&self.phi);
                let data = fill_cells(self.phi.grid(), |i| self.phi.data[i] + dt * (lap.data[i] + n.data[i]));
                ScalarField::from_vec(*self.phi.grid(), data)?
            }
            Scheme::SemiImplicit => {
                let data = fill_cells(self.phi.grid(), |i| self.phi.data[i] + dt * n.data[i]);
                let f = ScalarField::from_vec(*self.phi.grid(), data)?;
                self.helmholtz.as_ref().expect("semi-implicit state owns a solver").solve(&f, dt)?
            }
        };
        self.step_count += 1;
        self.steps_since_origin += 1;
        let t = self.t_origin + self.steps_since_origin as f64 * dt;
        self.phi = enforce_bound(next, self.step_count, t)?;
        self.t = t;
        Ok(())
    }
}

fn nondiffusive_of(state: &SimState, phi: &ScalarField) -> ScalarField {
    let grid = *phi.grid();
    let d = grid.dim();
    let inv_eps = 1.0 / state.eps;
    let inv_eps2 = inv_eps * inv_eps;
    let half_inv_h = 0.5 / grid.h();
    let l = state.forcing.l_eps;
    let fd = &state.forcing;
    let v = &phi.data;
    let data = fill_cells(&grid, |i| {
        let s = v[i];
        let mut out = -state.potential.dw(s) * inv_eps2;
        if !fd.u_is_zero {
            let mut adv = 0.0;
            for axis in 0..d {
                let gk = (v[grid.neighbor(i, axis, 1)] - v[grid.neighbor(i, axis, -1)]) * half_inv_h;
                adv += fd.u_eps.comps[axis][i] * gk;
            }
            out -= adv;
        }
        let drive = fd.g_eps.data[i] + if l != 0.0 { l * state.clamp.eval(s) } else { 0.0 };
        if drive != 0.0 {
            out -= drive * state.potential.sqrt_2w(s) * inv_eps;
        }
        out
    });
    ScalarField::from_vec(grid, data).expect("same grid")
}

fn enforce_bound(mut phi: ScalarField, step: u64, t: f64) -> Result<ScalarField> {
    if let Some(index) = phi.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "phi", index, t });
    }
    let (max_abs, index) = phi
        .data
        .iter()
        .enumerate()
        .fold((0.0f64, 0usize), |(m, k), (i, v)| if v.abs() > m { (v.abs(), i) } else { (m, k) });
    if max_abs > 1.0 + PHI_SLACK {
        return Err(Error::PhiBound { step, t, max_abs, index });
    }
    if max_abs > 1.0 {
        for v in phi.data.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
    }
    Ok(phi)
}

/// Step count and step size that land exactly on `t_end` with
/// `dt <= dt_max`.
pub fn plan_steps(t_span: f64, dt_max: f64) -> (u64, f64) {
    if t_span <= 0.0 {
        return (0, dt_max);
    }
    let steps = (t_span / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    (steps, t_span / steps as f64)
}

/// Advances `state` to `t_end`, shrinking `dt` if needed so the final step
/// lands on `t_end`. `on_step` sees the state after every step; `on_hook`
/// runs every `hook_every` steps and once more at the end.
pub fn run_with<S, H>(state: &mut SimState, t_end: f64, hook_every: u64, mut on_step: S, mut on_hook: H) -> Result<()>
where
    S: FnMut(&SimState) -> Result<()>,
    H: FnMut(&SimState) -> Result<()>,
{
    if hook_every == 0 {
        return Err(invalid("hook cadence must be at least one step"));
    }
    if t_end < state.t {
        return Err(invalid(format!("t_end = {t_end} is before the current time {}", state.t)));
    }
    let (steps, dt) = plan_steps(t_end - state.t, state.dt);
    if steps == 0 {
        return Ok(());
    }
    state.set_dt(dt)?;
    for k in 1..=steps {
        state.step()?;
        on_step(state)?;
        if k % hook_every == 0 || k == steps {
            on_hook(state)?;
        }
    }
    state.t = t_end;
    Ok(())
}

/// [`run_with`] without a per-step observer.
pub fn run<H>(state: &mut SimState, t_end: f64, hook_every: u64, on_hook: H) -> Result<()>
where
    H: FnMut(&SimState) -> Result<()>,
{
    run_with(state, t_end, hook_every, |_| Ok(()), on_hook)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{initial_phi, InitialShape};
    use crate::grid::{TorusGrid, VectorField};
    use crate::potential::make_standard_potential;

    fn circle_state(n: usize, eps: f64, scheme: Scheme) -> SimState {
        let g = TorusGrid::new(2, n).unwrap();
        let pot = make_standard_potential();
        let prof = profile(&pot, eps).unwrap();
        let shape = InitialShape::Sphere { center: vec![0.5, 0.5], radius: 0.25 };
        let phi = initial_phi(g, &shape, &prof).unwrap();
        SimState::new(phi, eps, pot, ForcingData::none(g), scheme, None).unwrap()
    }

    #[test]
    fn profile_is_a_near_steady_state() {
        // tanh profile across a planar strip: lap + N vanishes up to O(h^2/eps^4)
        let g = TorusGrid::new(2, 256).unwrap();
        let eps = 0.04;
        let pot = make_standard_potential();
        let prof = profile(&pot, eps).unwrap();
        let phi = initial_phi(g, &InitialShape::Strip { axis: 0, lo: 0.25, hi: 0.75 }, &prof).unwrap();
        let s = SimState::new(phi, eps, pot, ForcingData::none(g), Scheme::SemiImplicit, None).unwrap();
        let rhs = s.rhs();
        let h = g.h();
        let scale = h * h / eps.powi(4);
        // ignore the cells next to the cutoff at 10 eps, where the data is only Lipschitz
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let x = g.point(i)[0];
            let dist = (x - 0.25).abs().min((x - 0.75).abs());
            if dist < 8.0 * eps {
                worst = worst.max(rhs.data[i].abs());
            }
        }
        assert!(worst < scale, "worst {worst} vs {scale}");
    }

    #[test]
    fn dt_bounds() {
        let s = circle_state(64, 0.05, Scheme::Explicit);
        let h: f64 = 1.0 / 64.0;
        assert!((s.stable_dt() - (h * h / 8.0).min(0.05 * 0.05 / 8.0)).abs() < 1e-18);
        let mut s = circle_state(64, 0.05, Scheme::SemiImplicit);
        assert!((s.stable_dt() - 0.05 * 0.05 / 8.0).abs() < 1e-18);
        assert!(s.set_dt(0.05 * 0.05 / 7.0).is_err());
        assert!(s.set_dt(0.0).is_err());
    }

    #[test]
    fn plan_hits_end() {
        let (k, dt) = plan_steps(0.1, 1.6e-4);
        assert_eq!(k, 625);
        assert!((dt * k as f64 - 0.1).abs() < 1e-15);
        let (k, dt) = plan_steps(0.1, 0.03);
        assert_eq!(k, 4);
        assert_eq!(dt, 0.025);
        assert_eq!(plan_steps(0.0, 0.1).0, 0);
    }

    #[test]
    fn run_records_and_bounds() {
        let mut s = circle_state(64, 0.05, Scheme::SemiImplicit);
        let mut times = Vec::new();
        run(&mut s, 0.01, 5, |st| {
            times.push(st.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(s.t, 0.01);
        // 40 steps of 2.5e-4: a hook every 5 steps
        assert_eq!(s.step_count, 40);
        assert_eq!(times.len(), 8);
        assert!(s.phi.max_abs() <= 1.0);
        let mut calls = 0;
        run(&mut s, 0.01, 5, |_| {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 0);
        assert!(run(&mut s, 0.0, 5, |_| Ok(())).is_err());
    }

    #[test]
    fn schemes_agree_for_small_steps() {
        let mut a = circle_state(64, 0.05, Scheme::Explicit);
        let mut b = circle_state(64, 0.05, Scheme::SemiImplicit);
        let dt = a.stable_dt();
        b.set_dt(dt).unwrap();
        run(&mut a, 0.005, 1000, |_| Ok(())).unwrap();
        run(&mut b, 0.005, 1000, |_| Ok(())).unwrap();
        let diff = a.phi.data.iter().zip(&b.phi.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 5e-3, "diff {diff}");
    }

    #[test]
    fn rejects_bad_initial_data() {
        let g = TorusGrid::new(2, 16).unwrap();
        let pot = make_standard_potential();
        let phi = ScalarField::constant(g, 1.5);
        assert!(SimState::new(phi, 0.1, pot.clone(), ForcingData::none(g), Scheme::Explicit, None).is_err());
        let mut phi = ScalarField::zeros(g);
        phi.data[3] = f64::NAN;
        assert!(SimState::new(phi, 0.1, pot.clone(), ForcingData::none(g), Scheme::Explicit, None).is_err());
        let other = TorusGrid::new(2, 32).unwrap();
        assert!(SimState::new(ScalarField::zeros(g), 0.1, pot, ForcingData::none(other), Scheme::Explicit, None)
            .is_err());
    }

    #[test]
    fn bound_projection() {
        let g = TorusGrid::new(2, 4).unwrap();
        let mut f = ScalarField::zeros(g);
        f.data[1] = 1.0 + 1e-14;
        let p = enforce_bound(f.clone(), 1, 0.0).unwrap();
        assert_eq!(p.data[1], 1.0);
        f.data[2] = -1.0 - 1e-9;
        assert!(matches!(enforce_bound(f.clone(), 7, 0.5), Err(Error::PhiBound { step: 7, index: 2, .. })));
        f.data[2] = f64::INFINITY;
        assert!(matches!(enforce_bound(f, 7, 0.5), Err(Error::NonFinite { index: 2, .. })));
    }

    #[test]
    fn plateau_relaxes_to_well() {
        let g = TorusGrid::new(2, 16).unwrap();
        for sign in [1.0, -1.0] {
            let phi = ScalarField::constant(g, sign * (1.0 - 1e-3));
            let pot = make_standard_potential();
            let mut s = SimState::new(phi, 0.1, pot, ForcingData::none(g), Scheme::SemiImplicit, None).unwrap();
            let mut prev = s.phi.data[0].abs();
            for _ in 0..20 {
                s.step().unwrap();
                let now = s.phi.data[0].abs();
                assert!(now > prev && now <= 1.0);
                prev = now;
            }
        }
    }

    #[test]
    fn zero_rhs_only_advances_time() {
        let g = TorusGrid::new(2, 16).unwrap();
        let pot = make_standard_potential();
        let mut s = SimState::new(ScalarField::zeros(g), 0.1, pot, ForcingData::none(g), Scheme::Explicit, None).unwrap();
        assert!(s.rhs().data.iter().all(|&v| v == 0.0));
        s.step().unwrap();
        assert!(s.phi.data.iter().all(|&v| v == 0.0));
        assert_eq!(s.t, s.dt);
    }

    #[test]
    fn half_steps_agree_to_second_order() {
        let err = |dt: f64| {
            let mut a = circle_state(64, 0.05, Scheme::Explicit);
            let mut b = a.clone();
            a.set_dt(dt).unwrap();
            a.step().unwrap();
            b.set_dt(dt / 2.0).unwrap();
            b.step().unwrap();
            b.step().unwrap();
            a.phi.data.iter().zip(&b.phi.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let dt = circle_state(64, 0.05, Scheme::Explicit).stable_dt();
        let ratio = err(dt) / err(dt / 2.0);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn lattice_shift_commutes_with_stepping() {
        let shift = [5isize, -3];
        let mut a = circle_state(64, 0.05, Scheme::SemiImplicit);
        let mut b = a.clone();
        b.phi = crate::grid::translate(&b.phi, &shift);
        run(&mut a, 0.005, 1000, |_| Ok(())).unwrap();
        run(&mut b, 0.005, 1000, |_| Ok(())).unwrap();
        let moved = crate::grid::translate(&a.phi, &shift);
        let diff = moved.data.iter().zip(&b.phi.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "diff {diff}");
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let go = || {
            let g = TorusGrid::new(2, 64).unwrap();
            let pot = make_standard_potential();
            let prof = profile(&pot, 0.05).unwrap();
            let phi = initial_phi(g, &InitialShape::Sphere { center: vec![0.5, 0.5], radius: 0.25 }, &prof).unwrap();
            let u = VectorField::constant(g, &[0.3, 0.1]).unwrap();
            let gg = ScalarField::constant(g, 0.2);
            let fd = crate::fields::mollify_forcing(&u, &gg, 0.05).unwrap();
            let mut s = SimState::new(phi, 0.05, pot, fd, Scheme::SemiImplicit, None).unwrap();
            run(&mut s, 0.01, 100, |_| Ok(())).unwrap();
            s.phi
        };
        assert_eq!(one.install(go), four.install(go));
    }
}
