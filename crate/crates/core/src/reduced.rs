//! Leading-order bubble dynamics: `λ_j' = β_j`, `β_j' = ±ω² λ_j^{-1}(ratio)^{(D−2)/2}`,
//! `(a_j^±)' = ±(κ/λ_j) a_j^±`, with the Lyapunov function `φ` and collision metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::{interaction_constant, lambda_w_l2_sq};
use crate::ode::{integrate, EventSpec, OdeOptions};

/// Ratio at which the two-scale model is abandoned.
pub const RATIO_LIMIT: f64 = 0.2;
pub const DEFAULT_ETA0: f64 = 0.2;
pub const DEFAULT_A_THRESHOLD: f64 = 0.1;
/// A scale falling below this fraction of its initial value stops the integration.
pub const SCALE_COLLAPSE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub dim: usize,
    pub signs: Vec<i8>,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub omega_sq: f64,
    pub kappa: f64,
}

/// `ω² = k / ‖ΛW‖²_{L²}` with `k = (D−2)/(2D)(D(D−2))^{D/2}`.
pub fn omega_sq(dim: usize) -> Result<f64> {
    let n2 = lambda_w_l2_sq(dim).ok_or(Error::UnsupportedDimension(dim))?;
    Ok(interaction_constant(dim) / n2)
}

impl ReducedState {
    /// State at rest (`β = 0`, `a^± = 0`) with `ω²` from the constants and `κ` from the reference eigenpair.
    pub fn at_rest(dim: usize, signs: Vec<i8>, lambda: Vec<f64>) -> Result<Self> {
        let k = lambda.len();
        let kappa = crate::spectral::reference_eigenpair(dim)?.kappa;
        let s = Self {
            dim,
            signs,
            lambda,
            beta: vec![0.0; k],
            a_minus: vec![0.0; k],
            a_plus: vec![0.0; k],
            omega_sq: omega_sq(dim)?,
            kappa,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 5 || self.dim > crate::radial::MAX_DIM {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let k = self.k();
        if k == 0 || [self.signs.len(), self.beta.len(), self.a_minus.len(), self.a_plus.len()].iter().any(|&l| l != k) {
            return Err(Error::contract("reduced state components must all have length K ≥ 1"));
        }
        if self.signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::contract("signs must be ±1"));
        }
        if self.lambda.iter().any(|l| !(*l > 0.0)) || self.lambda.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract(format!("scales must be positive increasing: {:?}", self.lambda)));
        }
        Ok(())
    }

    fn pack(&self) -> Vec<f64> {
        [&self.lambda[..], &self.beta, &self.a_minus, &self.a_plus].concat()
    }

    fn unpack(&self, y: &[f64]) -> Self {
        let k = self.k();
        Self {
            lambda: y[..k].to_vec(),
            beta: y[k..2 * k].to_vec(),
            a_minus: y[2 * k..3 * k].to_vec(),
            a_plus: y[3 * k..4 * k].to_vec(),
            ..self.clone()
        }
    }

    /// Indices `j` (0-based) with `ι_j = ι_{j+1}`.
    pub fn same_sign_pairs(&self) -> Vec<usize> {
        (0..self.k().saturating_sub(1)).filter(|&j| self.signs[j] == self.signs[j + 1]).collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.lambda.windows(2).map(|w| w[0] / w[1]).fold(0.0, f64::max)
    }

    /// `d_par² = Σ_{𝒮}(λ_j/λ_{j+1})^{(D−2)/2} + Σ(a_j^±)²`.
    pub fn d_par(&self) -> f64 {
        let e = (self.dim as f64 - 2.0) / 2.0;
        let s: f64 = self
            .same_sign_pairs()
            .iter()
            .map(|&j| (self.lambda[j] / self.lambda[j + 1]).powf(e))
            .sum();
        let a: f64 = self.a_minus.iter().chain(&self.a_plus).map(|x| x * x).sum();
        (s + a).sqrt()
    }
}

fn rhs_unguarded(s: &ReducedState) -> ReducedState {
    let k = s.k();
    let e = (s.dim as f64 - 2.0) / 2.0;
    let w2 = s.omega_sq;
    let l = &s.lambda;
    let mut d = s.clone();
    for j in 0..k {
        d.lambda[j] = s.beta[j];
        let mut b = 0.0;
        let sj = s.signs[j] as f64;
        if j + 1 < k {
            b += sj * s.signs[j + 1] as f64 * w2 / l[j] * (l[j] / l[j + 1]).powf(e);
        }
        if j > 0 {
            b -= sj * s.signs[j - 1] as f64 * w2 / l[j] * (l[j - 1] / l[j]).powf(e);
        }
        d.beta[j] = b;
        d.a_minus[j] = -s.kappa / l[j] * s.a_minus[j];
        d.a_plus[j] = s.kappa / l[j] * s.a_plus[j];
    }
    d
}

/// Time derivative of the state (returned in the same layout).
pub fn reduced_rhs(s: &ReducedState) -> Result<ReducedState> {
    s.validate()?;
    if s.max_ratio() > RATIO_LIMIT {
        return Err(Error::OutOfRegime(format!(
            "scale ratio {:.4} exceeds {RATIO_LIMIT}",
            s.max_ratio()
        )));
    }
    Ok(rhs_unguarded(s))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedEvent {
    pub name: String,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedTrajectory {
    pub t: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<ReducedState>,
    /// `∫_0^t d_par` at each record.
    pub d_par_integral: Vec<f64>,
    pub events: Vec<ReducedEvent>,
    /// Time of the first "collision regime exit" event, if any.
    pub regime_exit: Option<f64>,
}

/// Integrate the reduced system to `t_end` (or to regime exit). Events: adjacent
/// ratios reaching [`RATIO_LIMIT`] (terminal), scale collapse (terminal) and `|a^±|` crossing `a_threshold`.
pub fn integrate_reduced(s0: &ReducedState, t_end: f64, a_threshold: f64) -> Result<ReducedTrajectory> {
    s0.validate()?;
    if s0.max_ratio() > RATIO_LIMIT {
        return Err(Error::OutOfRegime(format!("initial ratio {:.4} exceeds {RATIO_LIMIT}", s0.max_ratio())));
    }
    let k = s0.k();
    let proto = s0.clone();
    let f = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let s = proto.unpack(&y[..4 * k]);
        if s.lambda.iter().any(|l| !(*l > 0.0)) || s.lambda.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::OutOfRegime("scales lost their ordering".into()));
        }
        let mut d = rhs_unguarded(&s).pack();
        d.push(s.d_par());
        Ok(d)
    };
    let mut events: Vec<EventSpec> = vec![];
    for j in 0..k.saturating_sub(1) {
        events.push(EventSpec {
            name: format!("collision regime exit (pair {})", j + 1),
            g: Box::new(move |_t, y: &[f64]| y[j] / y[j + 1] - RATIO_LIMIT),
            terminal: true,
        });
    }
    for j in 0..k {
        let floor = SCALE_COLLAPSE * s0.lambda[j];
        events.push(EventSpec {
            name: format!("scale collapse (bubble {})", j + 1),
            g: Box::new(move |_t, y: &[f64]| y[j] - floor),
            terminal: true,
        });
        for (label, off) in [("a_minus", 2 * k), ("a_plus", 3 * k)] {
            events.push(EventSpec {
                name: format!("|{label}_{}| = {a_threshold}", j + 1),
                g: Box::new(move |_t, y: &[f64]| y[off + j].abs() - a_threshold),
                terminal: false,
            });
        }
    }
    let mut y0 = s0.pack();
    y0.push(0.0);
    let sol = integrate(&f, 0.0, &y0, t_end, &OdeOptions::default(), &events)?;
    let events: Vec<ReducedEvent> = sol
        .events
        .iter()
        .map(|e| ReducedEvent {
            name: e.name.clone(),
            t: e.t,
        })
        .collect();
    let regime_exit = events.iter().find(|e| e.name.starts_with("collision")).map(|e| e.t);
    Ok(ReducedTrajectory {
        t: sol.t,
        states: sol.y.iter().map(|y| s0.unpack(&y[..4 * k])).collect(),
        d_par_integral: sol.y.iter().map(|y| y[4 * k]).collect(),
        events,
        regime_exit,
    })
}

/// `φ = Σ_{j∈𝒮} 2^{−j} λ_j β_j − C₁ Σ λ_j (a_j^−)² + C₁ Σ λ_j (a_j^+)²` (1-based `j` in the weight).
pub fn lyapunov_phi(s: &ReducedState, c1: f64) -> f64 {
    let sum: f64 = s
        .same_sign_pairs()
        .iter()
        .map(|&j| 0.5f64.powi(j as i32 + 1) * s.lambda[j] * s.beta[j])
        .sum();
    let a: f64 = (0..s.k())
        .map(|j| s.lambda[j] * (s.a_plus[j].powi(2) - s.a_minus[j].powi(2)))
        .sum();
    sum + c1 * a
}

/// `φ'` along the reduced flow.
pub fn lyapunov_phi_dot(s: &ReducedState, c1: f64) -> f64 {
    let d = rhs_unguarded(s);
    let sum: f64 = s
        .same_sign_pairs()
        .iter()
        .map(|&j| 0.5f64.powi(j as i32 + 1) * (s.beta[j] * s.beta[j] + s.lambda[j] * d.beta[j]))
        .sum();
    let a: f64 = (0..s.k())
        .map(|j| {
            (s.beta[j] + 2.0 * s.kappa) * s.a_plus[j].powi(2) + (2.0 * s.kappa - s.beta[j]) * s.a_minus[j].powi(2)
        })
        .sum();
    sum + c1 * a
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoBubbleScenario {
    pub dim: usize,
    pub signs: [i8; 2],
    pub lambda: [f64; 2],
    pub beta: [f64; 2],
    pub a_minus: [f64; 2],
    pub a_plus: [f64; 2],
    pub t_end: f64,
    pub eta0: f64,
    pub c1: f64,
}

impl TwoBubbleScenario {
    pub fn at_rest(dim: usize, signs: [i8; 2], lambda: [f64; 2], t_end: f64) -> Self {
        Self {
            dim,
            signs,
            lambda,
            beta: [0.0; 2],
            a_minus: [0.0; 2],
            a_plus: [0.0; 2],
            t_end,
            eta0: DEFAULT_ETA0,
            c1: 1.0,
        }
    }

    pub fn state(&self) -> Result<ReducedState> {
        let mut s = ReducedState::at_rest(self.dim, self.signs.to_vec(), self.lambda.to_vec())?;
        s.beta = self.beta.to_vec();
        s.a_minus = self.a_minus.to_vec();
        s.a_plus = self.a_plus.to_vec();
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionMetrics {
    pub regime_exit: Option<f64>,
    pub t_final: f64,
    pub d_par_integral: f64,
    /// `d(0)^{4/(D−2)} λ_K(0) + d(end)^{4/(D−2)} λ_K(end)`.
    pub ejection_scale: f64,
    /// `∫ d_par dt / ejection_scale`: the smallest admissible `C₀` for this run.
    pub ejection_ratio: f64,
    pub exceeded_eta0: bool,
    /// After `d_par` first exceeds `η₀`, it never returns below `d_par(0)/2`.
    pub no_return: bool,
    pub ratio_monotone: bool,
    pub min_phi_dot: f64,
    /// `min φ'/d_par²` along the run.
    pub c2: f64,
    pub d_par_min: f64,
}

pub fn collision_report(sc: &TwoBubbleScenario) -> Result<(CollisionMetrics, ReducedTrajectory)> {
    let s0 = sc.state()?;
    let traj = integrate_reduced(&s0, sc.t_end, DEFAULT_A_THRESHOLD)?;
    let last = traj.states.last().expect("non-empty trajectory");
    let e = 4.0 / (sc.dim as f64 - 2.0);
    let kk = s0.k() - 1;
    let d0 = s0.d_par();
    let d1 = last.d_par();
    let ejection_scale = d0.powf(e) * s0.lambda[kk] + d1.powf(e) * last.lambda[kk];
    let integral = *traj.d_par_integral.last().expect("non-empty");
    let mut exceeded = false;
    let mut no_return = true;
    for s in &traj.states {
        let d = s.d_par();
        if d > sc.eta0 {
            exceeded = true;
        }
        if exceeded && d < d0 / 2.0 {
            no_return = false;
        }
    }
    let ratios: Vec<f64> = traj.states.iter().map(|s| s.lambda[0] / s.lambda[1]).collect();
    let ratio_monotone = ratios.windows(2).all(|w| w[1] >= w[0]) || ratios.windows(2).all(|w| w[1] <= w[0]);
    let mut min_phi_dot = f64::INFINITY;
    let mut c2 = f64::INFINITY;
    let mut d_par_min = f64::INFINITY;
    for s in &traj.states {
        let pd = lyapunov_phi_dot(s, sc.c1);
        let d = s.d_par();
        min_phi_dot = min_phi_dot.min(pd);
        d_par_min = d_par_min.min(d);
        if d > 0.0 {
            c2 = c2.min(pd / (d * d));
        }
    }
    Ok((
        CollisionMetrics {
            regime_exit: traj.regime_exit,
            t_final: *traj.t.last().expect("non-empty"),
            d_par_integral: integral,
            ejection_scale,
            ejection_ratio: integral / ejection_scale,
            exceeded_eta0: exceeded,
            no_return,
            ratio_monotone,
            min_phi_dot,
            c2,
            d_par_min,
        },
        traj,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_single_bubble() {
        let s = ReducedState::at_rest(6, vec![1], vec![1.0]).unwrap();
        let d = reduced_rhs(&s).unwrap();
        assert!(d.lambda.iter().chain(&d.beta).chain(&d.a_minus).chain(&d.a_plus).all(|x| *x == 0.0));
        let tr = integrate_reduced(&s, 10.0, 0.1).unwrap();
        assert!(tr.states.iter().all(|x| x.lambda == vec![1.0]));
        assert_eq!(lyapunov_phi(&s, 3.0), 0.0);
    }

    #[test]
    fn two_bubble_force_d6() {
        let s = ReducedState::at_rest(6, vec![1, 1], vec![0.1, 1.0]).unwrap();
        let w2 = omega_sq(6).unwrap();
        assert!((w2 - 1.25).abs() < 1e-12);
        let d = reduced_rhs(&s).unwrap();
        assert!((d.beta[0] - w2 * 10.0 * 0.01).abs() < 1e-12);
        let o = ReducedState::at_rest(6, vec![1, -1], vec![0.1, 1.0]).unwrap();
        assert!((reduced_rhs(&o).unwrap().beta[0] + w2 * 10.0 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        assert!(ReducedState::at_rest(4, vec![1], vec![1.0]).is_err());
        let s = ReducedState::at_rest(6, vec![1, 1], vec![0.5, 1.0]).unwrap();
        assert!(matches!(reduced_rhs(&s), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn frozen_unstable_growth() {
        let mut s = ReducedState::at_rest(6, vec![1], vec![1.0]).unwrap();
        s.a_plus[0] = 1e-6;
        let t_end = 5.0 / s.kappa;
        let tr = integrate_reduced(&s, t_end, 1.0).unwrap();
        for (t, st) in tr.t.iter().zip(&tr.states) {
            let exact = 1e-6 * (s.kappa * t).exp();
            assert!((st.a_plus[0] / exact - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn same_sign_attraction_exits() {
        let sc = TwoBubbleScenario::at_rest(6, [1, 1], [0.05, 1.0], 100.0);
        let (m, tr) = collision_report(&sc).unwrap();
        assert!(m.regime_exit.is_some());
        assert!(m.ratio_monotone && m.no_return);
        let r: Vec<f64> = tr.states.iter().map(|s| s.lambda[0] / s.lambda[1]).collect();
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
        assert!(m.min_phi_dot >= 0.0 && m.c2 > 0.0);
    }

    #[test]
    fn opposite_sign_repulsion() {
        let sc = TwoBubbleScenario::at_rest(6, [1, -1], [0.05, 1.0], 20.0);
        let (m, tr) = collision_report(&sc).unwrap();
        assert!(m.regime_exit.is_none());
        assert!(tr.events.iter().any(|e| e.name.starts_with("scale collapse")));
        assert!((m.t_final - std::f64::consts::FRAC_PI_2 / 1.25f64.sqrt()).abs() < 1e-2);
        let r: Vec<f64> = tr.states.iter().map(|s| s.lambda[0] / s.lambda[1]).collect();
        assert!(r.last().unwrap() < &r[0]);
    }
}
