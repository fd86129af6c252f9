//! Virial functionals and their time-derivative identities, the cut-off error
//! terms `Ω₁`, `Ω₂`, the scale functions `μ`, `μ*`, and collision-interval detection.

use serde::Serialize;

use crate::cutoff::{chi, r_dchi};
use crate::error::{Error, Result};
use crate::evolver::Observer;
use crate::radial::{critical_exponent, energy_norm, FieldPair};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VirialRecord {
    pub t: f64,
    pub v: f64,
    pub v_jk: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub kinetic_inside: f64,
    pub rho: f64,
    pub rho_dot: f64,
}

fn check_rho(state: &FieldPair, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= state.grid().r_max() / 2.0) {
        return Err(Error::contract(format!(
            "ρ = {rho} must lie in (0, r_max/2 = {}]",
            state.grid().r_max() / 2.0
        )));
    }
    Ok(())
}

/// `∫ density(i) r^{D−1} dr` over the grid with the midpoint weights.
fn integral(state: &FieldPair, density: impl Fn(usize) -> f64) -> f64 {
    state
        .grid()
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * density(i))
        .sum()
}

/// `⟨∂_t u | χ_ρ(r ∂_r u + c u)⟩`.
pub fn multiplier_value(state: &FieldPair, rho: f64, c: f64) -> Result<f64> {
    check_rho(state, rho)?;
    let grid = state.grid();
    let du = grid.gradient(&state.u);
    let r = grid.nodes();
    Ok(integral(state, |i| {
        state.udot[i] * chi(r[i] / rho) * (r[i] * du[i] + c * state.u[i])
    }))
}

/// `⟨∂_t u | χ_ρ(r ∂_r u + (D−2)/2 u)⟩`.
pub fn virial_value(state: &FieldPair, rho: f64) -> Result<f64> {
    multiplier_value(state, rho, (state.grid().d() - 2.0) / 2.0)
}

/// `⟨∂_t u | χ_ρ(r ∂_r u + D/2 u)⟩`.
pub fn jk_multiplier_value(state: &FieldPair, rho: f64) -> Result<f64> {
    multiplier_value(state, rho, state.grid().d() / 2.0)
}

/// `∫ [(∂_r u)² − |u|^{2D/(D−2)}] χ_ρ r^{D−1} dr`.
pub fn jia_kenig_value(state: &FieldPair, rho: f64) -> Result<f64> {
    check_rho(state, rho)?;
    let grid = state.grid();
    let du = grid.gradient(&state.u);
    let p = critical_exponent(grid.dim());
    let r = grid.nodes();
    Ok(integral(state, |i| (du[i] * du[i] - state.u[i].abs().powf(p)) * chi(r[i] / rho)))
}

/// `∫ (∂_t u)² χ_ρ r^{D−1} dr`.
pub fn kinetic_inside(state: &FieldPair, rho: f64) -> Result<f64> {
    check_rho(state, rho)?;
    let r = state.grid().nodes();
    Ok(integral(state, |i| state.udot[i] * state.udot[i] * chi(r[i] / rho)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaSign {
    /// Potential term `+(D−2)/D |u|^p` inside `−½∫(…)(r∂_rχ)`: the sign for which the
    /// identities hold (it vanishes identically for stationary solutions).
    #[default]
    Derived,
    /// The opposite sign of the potential term.
    Displayed,
}

/// `(Ω₁, Ω₂)` for the cut-off radius `ρ(t)` with derivative `ρ'`.
pub fn omega_errors(state: &FieldPair, rho: f64, rho_dot: f64) -> Result<(f64, f64)> {
    omega_errors_with(state, rho, rho_dot, OmegaSign::Derived)
}

pub fn omega_errors_with(state: &FieldPair, rho: f64, rho_dot: f64, sign: OmegaSign) -> Result<(f64, f64)> {
    check_rho(state, rho)?;
    let grid = state.grid();
    let d = grid.d();
    let p = critical_exponent(grid.dim());
    let du = grid.gradient(&state.u);
    let r = grid.nodes();
    let (u, v) = (&state.u, &state.udot);
    let s = rho_dot / rho;
    let pot = match sign {
        OmegaSign::Derived => (d - 2.0) / d,
        OmegaSign::Displayed => -(d - 2.0) / d,
    };
    let o1 = integral(state, |i| {
        let m = r_dchi(r[i] / rho);
        if m == 0.0 {
            return 0.0;
        }
        -s * v[i] * r[i] * du[i] * m - 0.5 * (v[i] * v[i] + du[i] * du[i] + pot * u[i].abs().powf(p)) * m
    });
    let o2 = integral(state, |i| {
        let m = r_dchi(r[i] / rho);
        if m == 0.0 {
            return 0.0;
        }
        -s * v[i] * u[i] * m - du[i] * u[i] / r[i] * m
    });
    Ok((o1, o2))
}

pub fn virial_record(t: f64, state: &FieldPair, rho: f64, rho_dot: f64) -> Result<VirialRecord> {
    let (omega1, omega2) = omega_errors(state, rho, rho_dot)?;
    Ok(VirialRecord {
        t,
        v: virial_value(state, rho)?,
        v_jk: jk_multiplier_value(state, rho)?,
        omega1,
        omega2,
        kinetic_inside: kinetic_inside(state, rho)?,
        rho,
        rho_dot,
    })
}

/// A localized virial identity `d/dt ⟨u_t | χ_ρ(r u_r + c u)⟩ = rhs`.
pub trait VirialIdentity: Send + Sync {
    fn name(&self) -> &'static str;
    fn multiplier(&self, state: &FieldPair, rho: f64) -> Result<f64>;
    fn rhs(&self, state: &FieldPair, rho: f64, rho_dot: f64) -> Result<f64>;
}

/// Multiplier `(D−2)/2`: `−∫u_t²χ_ρ + Ω₁ + (D−2)/2·Ω₂`.
#[derive(Default)]
pub struct Kinetic(pub OmegaSign);

impl VirialIdentity for Kinetic {
    fn name(&self) -> &'static str {
        "kinetic"
    }
    fn multiplier(&self, state: &FieldPair, rho: f64) -> Result<f64> {
        virial_value(state, rho)
    }
    fn rhs(&self, state: &FieldPair, rho: f64, rho_dot: f64) -> Result<f64> {
        let (o1, o2) = omega_errors_with(state, rho, rho_dot, self.0)?;
        Ok(-kinetic_inside(state, rho)? + o1 + (state.grid().d() - 2.0) / 2.0 * o2)
    }
}

/// Multiplier `D/2`: `−∫(u_r² − |u|^p)χ_ρ + Ω₁ + D/2·Ω₂`.
#[derive(Default)]
pub struct JiaKenig(pub OmegaSign);

impl VirialIdentity for JiaKenig {
    fn name(&self) -> &'static str {
        "jia-kenig"
    }
    fn multiplier(&self, state: &FieldPair, rho: f64) -> Result<f64> {
        jk_multiplier_value(state, rho)
    }
    fn rhs(&self, state: &FieldPair, rho: f64, rho_dot: f64) -> Result<f64> {
        let (o1, o2) = omega_errors_with(state, rho, rho_dot, self.0)?;
        Ok(-jia_kenig_value(state, rho)? + o1 + state.grid().d() / 2.0 * o2)
    }
}

pub fn identity_names() -> &'static [&'static str] {
    &["kinetic", "jia-kenig"]
}

pub fn identity_by_name(name: &str, sign: OmegaSign) -> Result<Box<dyn VirialIdentity>> {
    match name {
        "kinetic" => Ok(Box::new(Kinetic(sign))),
        "jia-kenig" => Ok(Box::new(JiaKenig(sign))),
        other => Err(Error::ConfigValidation(vec![format!(
            "unknown virial identity {other:?}; known: {:?}",
            identity_names()
        )])),
    }
}

/// Records `<name>_v`, `<name>_rhs` for each identity, plus `omega_combo`
/// (`Ω₁ + (D−2)/2·Ω₂`), along a run with `ρ(t)` given by `rho`.
pub struct VirialObserver {
    pub identities: Vec<Box<dyn VirialIdentity>>,
    /// `t ↦ (ρ, ρ')`.
    pub rho: Box<dyn Fn(f64) -> (f64, f64)>,
}

impl VirialObserver {
    pub fn fixed(identities: Vec<Box<dyn VirialIdentity>>, rho: f64) -> Self {
        Self {
            identities,
            rho: Box::new(move |_| (rho, 0.0)),
        }
    }
}

impl Observer for VirialObserver {
    fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = self
            .identities
            .iter()
            .flat_map(|i| [format!("{}_v", i.name()), format!("{}_rhs", i.name())])
            .collect();
        c.push("omega_combo".into());
        c
    }

    fn observe(&mut self, t: f64, state: &FieldPair) -> Result<Vec<f64>> {
        let (rho, rho_dot) = (self.rho)(t);
        let mut row = Vec::with_capacity(2 * self.identities.len() + 1);
        for id in &self.identities {
            row.push(id.multiplier(state, rho)?);
            row.push(id.rhs(state, rho, rho_dot)?);
        }
        let (o1, o2) = omega_errors(state, rho, rho_dot)?;
        row.push(o1 + (state.grid().d() - 2.0) / 2.0 * o2);
        Ok(row)
    }
}

/// Centred difference of the multiplier minus the right-hand side at interior records.
/// Returns `(t_k, residual_k)` for `k = 1..n−2`.
pub fn virial_identity_residual(times: &[f64], values: &[f64], rhs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if times.len() != values.len() || times.len() != rhs.len() {
        return Err(Error::contract("series lengths differ"));
    }
    if times.len() < 3 {
        return Ok(vec![]);
    }
    Ok((1..times.len() - 1)
        .map(|k| {
            let dv = (values[k + 1] - values[k - 1]) / (times[k + 1] - times[k - 1]);
            (times[k], dv - rhs[k])
        })
        .collect())
}

/// `‖𝒖‖²_{E(r, r_max)}`: energy in the exterior region.
pub fn exterior_energy(state: &FieldPair, r: f64) -> Result<f64> {
    Ok(energy_norm(state, r, state.grid().r_max())?.powi(2))
}

pub const MU_TOLERANCE: f64 = 1e-6;

/// `sup{r ≤ ν : ‖𝒖‖_{E(r,ν)} = κ₁}` by bisection.
pub fn mu_scale(state: &FieldPair, nu: f64, kappa1: f64) -> Result<f64> {
    let grid = state.grid();
    if !(nu > 0.0 && nu <= grid.r_max() * (1.0 + 1e-12)) || !(kappa1 > 0.0) {
        return Err(Error::contract(format!("need 0 < ν ≤ r_max and κ₁ > 0 (ν={nu}, κ₁={kappa1})")));
    }
    let nu = nu.min(grid.r_max());
    let norm = |r: f64| -> f64 {
        if r >= nu {
            0.0
        } else {
            energy_norm(state, r, nu).expect("valid interval")
        }
    };
    let total = norm(0.0);
    if total < 2.0 * kappa1 {
        return Err(Error::UndefinedScale(format!(
            "‖u‖_E(0,ν) = {total:.4e} is below 2κ₁ = {:.4e}",
            2.0 * kappa1
        )));
    }
    let (mut lo, mut hi) = (0.0, nu);
    while hi - lo > MU_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if norm(mid) >= kappa1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `μ*(t_k) = min_s (4μ(s) + |s − t_k|)` on a uniform mesh of spacing `dt`.
pub fn mu_star(mu: &[f64], dt: f64) -> Vec<f64> {
    let n = mu.len();
    let mut out: Vec<f64> = mu.iter().map(|m| 4.0 * m).collect();
    for k in 1..n {
        out[k] = out[k].min(out[k - 1] + dt);
    }
    for k in (0..n.saturating_sub(1)).rev() {
        out[k] = out[k].min(out[k + 1] + dt);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionInterval {
    pub a: f64,
    pub b: f64,
    pub peak_d: f64,
    pub dk_max: f64,
}

fn crossing(t0: f64, d0: f64, t1: f64, d1: f64, eps: f64) -> f64 {
    if d1 == d0 {
        return t0;
    }
    t0 + (eps - d0) / (d1 - d0) * (t1 - t0)
}

/// Excursions of `d` above `ε` bounded by samples with `d ≤ ε`, reaching `η`, with `d_K ≤ ε`
/// throughout; endpoints are the interpolated `d = ε` crossings.
pub fn detect_collision_intervals(
    times: &[f64],
    d: &[f64],
    dk: &[f64],
    eps: f64,
    eta: f64,
) -> Result<Vec<CollisionInterval>> {
    if times.len() != d.len() || times.len() != dk.len() {
        return Err(Error::contract("series lengths differ"));
    }
    if !(eps > 0.0 && eps < eta) {
        return Err(Error::contract(format!("need 0 < ε < η (ε={eps}, η={eta})")));
    }
    let n = d.len();
    let mut out = vec![];
    let mut k = 0;
    while k < n {
        if d[k] <= eps {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && d[k] > eps {
            k += 1;
        }
        if start == 0 || k == n {
            continue;
        }
        let (i0, i1) = (start - 1, k);
        let peak = d[start..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dk_max = dk[i0..=i1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if peak >= eta && dk_max <= eps {
            out.push(CollisionInterval {
                a: crossing(times[i0], d[i0], times[start], d[start], eps),
                b: crossing(times[k - 1], d[k - 1], times[i1], d[i1], eps),
                peak_d: peak,
                dk_max,
            });
        }
    }
    Ok(out)
}
