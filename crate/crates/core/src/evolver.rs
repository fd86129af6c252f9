//! Kick-drift-kick time stepping of `u_tt = Δu + f(u)` (or the free wave equation)
//! with a Dirichlet outer boundary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::f;
use crate::radial::{critical_exponent, energy_norm_total, FieldPair, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    DirichletOuter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSettings {
    pub cfl: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    pub record_stride: usize,
    pub nonlinear: bool,
    /// Keep every k-th record as a full snapshot (`None`: no snapshots).
    pub snapshot_stride: Option<usize>,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            t_end: 1.0,
            boundary: Boundary::DirichletOuter,
            record_stride: 1,
            nonlinear: true,
            snapshot_stride: None,
        }
    }
}

impl EvolutionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::contract(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::contract(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::contract("record_stride must be at least 1"));
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::contract("snapshot_stride must be at least 1"));
        }
        Ok(())
    }

    pub fn dt(&self, grid: &RadialGrid) -> f64 {
        self.cfl * grid.h()
    }

    pub fn steps(&self, grid: &RadialGrid) -> usize {
        (self.t_end / self.dt(grid) - 1e-9).ceil().max(0.0) as usize
    }

    /// Causality guard: data supported in `r ≤ support` must not feel the outer boundary.
    pub fn check_causality(&self, grid: &RadialGrid, support: f64) -> Result<()> {
        if self.t_end + support > grid.r_max() {
            return Err(Error::contract(format!(
                "t_end + support = {} exceeds r_max = {}",
                self.t_end + support,
                grid.r_max()
            )));
        }
        Ok(())
    }
}

/// Largest radius not yet reached by waves emitted at the outer boundary, minus `margin`.
pub fn observation_radius(grid: &RadialGrid, t: f64, margin: f64) -> f64 {
    (grid.r_max() - t - margin).max(0.0)
}

/// Scheme energy `½Σ w u̇² + ½Σ γ (Δ_+ u)²/h − (D−2)/(2D) Σ w |u|^{2D/(D−2)}`.
pub fn discrete_energy(state: &FieldPair, nonlinear: bool) -> f64 {
    let grid = state.grid();
    let kinetic: f64 = state
        .udot
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| 0.5 * w * v * v)
        .sum();
    let mut e = kinetic + grid.dirichlet_energy(&state.u);
    if nonlinear {
        let p = critical_exponent(grid.dim());
        let c = (grid.d() - 2.0) / (2.0 * grid.d());
        e -= c * state
            .u
            .iter()
            .zip(grid.weights())
            .map(|(u, w)| w * u.abs().powf(p))
            .sum::<f64>();
    }
    e
}

/// Backward-error modified energy `H + Δt²(⟨u̇, (−Δ − f'(u))u̇⟩/12 − |Δu + f(u)|²/24)`,
/// conserved by the kick-drift-kick scheme up to `O(Δt⁴)`.
pub fn modified_energy(state: &FieldPair, nonlinear: bool, dt: f64) -> f64 {
    let grid = state.grid();
    let dim = grid.dim();
    let mut a = grid.laplacian(&state.u);
    let mut hess = 2.0 * grid.dirichlet_energy(&state.udot);
    if nonlinear {
        for ((a, u), (v, w)) in a.iter_mut().zip(&state.u).zip(state.udot.iter().zip(grid.weights())) {
            *a += f(*u, dim);
            hess -= crate::ground_state::f_prime(*u, dim) * v * v * w;
        }
    }
    let aa: f64 = a.iter().zip(grid.weights()).map(|(a, w)| a * a * w).sum();
    discrete_energy(state, nonlinear) + dt * dt * (hess / 12.0 - aa / 24.0)
}

/// Reusable stepper; keeps the acceleration of the current state between steps.
pub struct Stepper {
    grid: Arc<RadialGrid>,
    dt: f64,
    nonlinear: bool,
    accel: Vec<f64>,
    fresh: bool,
}

impl Stepper {
    pub fn new(grid: Arc<RadialGrid>, settings: &EvolutionSettings) -> Result<Self> {
        settings.validate()?;
        let n = grid.n();
        Ok(Self {
            dt: settings.dt(&grid),
            nonlinear: settings.nonlinear,
            grid,
            accel: vec![0.0; n],
            fresh: false,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn acceleration(&mut self, u: &[f64]) {
        self.grid.laplacian_with_outer(u, 0.0, &mut self.accel);
        if self.nonlinear {
            let dim = self.grid.dim();
            for (a, x) in self.accel.iter_mut().zip(u) {
                *a += f(*x, dim);
            }
        }
    }

    /// Advance `state` in place by one step; `t` is only used for error reporting.
    pub fn advance(&mut self, state: &mut FieldPair, t: f64) -> Result<()> {
        if !self.fresh {
            self.acceleration(&state.u);
        }
        let half = 0.5 * self.dt;
        for (v, a) in state.udot.iter_mut().zip(&self.accel) {
            *v += half * a;
        }
        for (u, v) in state.u.iter_mut().zip(&state.udot) {
            *u += self.dt * v;
        }
        self.acceleration(&state.u);
        for (v, a) in state.udot.iter_mut().zip(&self.accel) {
            *v += half * a;
        }
        self.fresh = true;
        if !state.udot.iter().all(|x| x.is_finite()) || !state.u.iter().all(|x| x.is_finite()) {
            return Err(Error::Instability { t: t + self.dt });
        }
        Ok(())
    }

    /// Forget the cached acceleration (after the state was modified externally).
    pub fn invalidate(&mut self) {
        self.fresh = false;
    }
}

/// One kick-drift-kick step.
pub fn step(state: &FieldPair, settings: &EvolutionSettings) -> Result<FieldPair> {
    let mut s = state.clone();
    Stepper::new(state.grid().clone(), settings)?.advance(&mut s, 0.0)?;
    Ok(s)
}

/// A per-record callback adding columns to the trajectory.
pub trait Observer {
    fn columns(&self) -> Vec<String>;
    fn observe(&mut self, t: f64, state: &FieldPair) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    #[serde(skip)]
    pub snapshots: Vec<(f64, FieldPair)>,
    pub dt: f64,
    /// Present when the run stopped early.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.column("t").unwrap_or_default()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.column("E").unwrap_or_default()
    }
}

/// Iterate [`Stepper::advance`] to `t_end`, recording every `record_stride` steps.
/// A numerical blow-up ends the run: the partial trajectory is returned together with the error.
pub fn evolve(
    u0: &FieldPair,
    settings: &EvolutionSettings,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<Trajectory, (Trajectory, Error)> {
    let mut traj = Trajectory {
        columns: ["t", "E", "E_drift", "energy_norm_total", "E_mod"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ..Default::default()
    };
    for o in observers.iter() {
        traj.columns.extend(o.columns());
    }
    let mut stepper = match Stepper::new(u0.grid().clone(), settings) {
        Ok(s) => s,
        Err(e) => return Err((traj, e)),
    };
    traj.dt = stepper.dt();
    let steps = settings.steps(u0.grid());
    let mut state = u0.clone();
    let e0 = discrete_energy(&state, settings.nonlinear);
    let dt = stepper.dt();
    let mut record = |traj: &mut Trajectory, k: usize, t: f64, state: &FieldPair| -> Result<()> {
        let e = discrete_energy(state, settings.nonlinear);
        let mut row = vec![
            t,
            e,
            drift(e, e0),
            energy_norm_total(state),
            modified_energy(state, settings.nonlinear, dt),
        ];
        for o in observers.iter_mut() {
            row.extend(o.observe(t, state)?);
        }
        traj.rows.push(row);
        if let Some(s) = settings.snapshot_stride {
            if (k / settings.record_stride) % s == 0 {
                traj.snapshots.push((t, state.clone()));
            }
        }
        Ok(())
    };
    if let Err(e) = record(&mut traj, 0, 0.0, &state) {
        return Err((traj, e));
    }
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * stepper.dt();
        if let Err(e) = stepper.advance(&mut state, t_prev) {
            traj.failure = Some(e.to_string());
            return Err((traj, e));
        }
        if k % settings.record_stride == 0 || k == steps {
            let t = k as f64 * stepper.dt();
            if let Err(e) = record(&mut traj, k, t, &state) {
                traj.failure = Some(e.to_string());
                return Err((traj, e));
            }
        }
    }
    Ok(traj)
}

const ENERGY_FLOOR: f64 = 1e-12;

fn drift(e: f64, e0: f64) -> f64 {
    (e - e0).abs() / e0.abs().max(ENERGY_FLOOR)
}

/// `max_t |E(t) − E(0)| / max(|E(0)|, ε)` over the recorded energies.
pub fn energy_drift(traj: &Trajectory) -> f64 {
    let e = traj.energies();
    match e.first() {
        None => 0.0,
        Some(&e0) => e.iter().map(|x| drift(*x, e0)).fold(0.0, f64::max),
    }
}

/// Drift of the modified energy column.
pub fn modified_energy_drift(traj: &Trajectory) -> f64 {
    let e = traj.column("E_mod").unwrap_or_default();
    match e.first() {
        None => 0.0,
        Some(&e0) => e.iter().map(|x| drift(*x, e0)).fold(0.0, f64::max),
    }
}

/// Evolve to `settings.t_end` and return the final state only.
pub fn evolve_to_end(u0: &FieldPair, settings: &EvolutionSettings) -> Result<FieldPair> {
    let mut stepper = Stepper::new(u0.grid().clone(), settings)?;
    let mut state = u0.clone();
    for k in 0..settings.steps(u0.grid()) {
        stepper.advance(&mut state, k as f64 * stepper.dt())?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::mollifier;
    use crate::ground_state::w;

    fn bump(grid: &Arc<RadialGrid>, center: f64, width: f64, amp: f64) -> FieldPair {
        FieldPair::from_fn(grid.clone(), |r| amp * mollifier((r - center) / width), |_| 0.0)
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = RadialGrid::new(6, 128, 10.0).unwrap();
        let z = FieldPair::zeros(g);
        let s = step(&z, &EvolutionSettings::default()).unwrap();
        assert!(s.u.iter().chain(&s.udot).all(|x| *x == 0.0));
    }

    #[test]
    fn settings_validation() {
        let bad = EvolutionSettings {
            cfl: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let g = RadialGrid::new(6, 128, 10.0).unwrap();
        let ok = EvolutionSettings {
            t_end: 5.0,
            ..Default::default()
        };
        assert!(ok.check_causality(&g, 4.0).is_ok());
        assert!(ok.check_causality(&g, 6.0).is_err());
    }

    #[test]
    fn free_wave_finite_speed() {
        let g = RadialGrid::new(5, 1000, 20.0).unwrap();
        let u0 = bump(&g, 5.0, 1.0, 1.0);
        let s = EvolutionSettings {
            t_end: 3.0,
            nonlinear: false,
            ..Default::default()
        };
        let u = evolve_to_end(&u0, &s).unwrap();
        let peak = u.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (r, x) in g.nodes().iter().zip(&u.u) {
            if *r > 6.0 + 3.0 + 0.5 || *r < 4.0 - 3.0 - 0.5 {
                assert!(x.abs() < 1e-6 * peak, "r={r} u={x}");
            }
        }
    }

    #[test]
    fn bubble_is_nearly_stationary_after_one_step() {
        let g = RadialGrid::new(6, 4096, 50.0).unwrap();
        let u0 = FieldPair::from_fn(g.clone(), |r| w(6, r), |_| 0.0);
        let s = EvolutionSettings::default();
        let u1 = step(&u0, &s).unwrap();
        let diff = u1.axpy(-1.0, &u0).unwrap();
        let dev = crate::radial::energy_norm(&diff, 0.0, 40.0).unwrap();
        let dt = s.dt(&g);
        assert!(dev < g.h() * g.h() * dt, "{dev}");
    }

    #[test]
    fn time_reversal() {
        let g = RadialGrid::new(6, 400, 20.0).unwrap();
        let u0 = bump(&g, 4.0, 2.0, 0.3);
        let s = EvolutionSettings {
            t_end: 2.0,
            ..Default::default()
        };
        let mut u = evolve_to_end(&u0, &s).unwrap();
        u.udot.iter_mut().for_each(|v| *v = -*v);
        let mut back = evolve_to_end(&u, &s).unwrap();
        back.udot.iter_mut().for_each(|v| *v = -*v);
        let err = back
            .u
            .iter()
            .zip(&u0.u)
            .chain(back.udot.iter().zip(&u0.udot))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn energy_drift_of_single_sample_is_zero() {
        let t = Trajectory {
            columns: vec!["t".into(), "E".into()],
            rows: vec![vec![0.0, 3.0]],
            ..Default::default()
        };
        assert_eq!(energy_drift(&t), 0.0);
    }

    #[test]
    fn free_wave_energy_drift_small() {
        let g = RadialGrid::new(6, 1024, 20.0).unwrap();
        let u0 = bump(&g, 5.0, 2.0, 1.0);
        let s = EvolutionSettings {
            t_end: 5.0,
            nonlinear: false,
            record_stride: 4,
            ..Default::default()
        };
        let traj = evolve(&u0, &s, &mut []).unwrap();
        let plain = energy_drift(&traj);
        let shadow = modified_energy_drift(&traj);
        assert!(plain < 1e-3, "{plain}");
        assert!(shadow < 1e-2 * plain, "{shadow} vs {plain}");
    }
}
