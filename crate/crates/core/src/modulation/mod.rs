//! Bubble-parameter extraction: orthogonality-constrained fit, proximity
//! functions, the cutoff `q` with the truncated virial operators, and the
//! refined parameters `ξ`, `β`.

pub mod cutoff_q;
pub mod proximity;
pub mod refined;

use std::sync::Arc;

use serde::Serialize;

use crate::cutoff::chi;
use crate::error::{Error, Result};
use crate::ground_state;
use crate::multibubble::BubbleConfig;
use crate::radial::{dot, energy_norm_total, FieldPair, RadialGrid};
use crate::spectral::{self, alpha_pairing, interpolate, AlphaForm, EigenPair, Sign, ZProfile};

pub use cutoff_q::{build_cutoff, virial_apply, CutoffQ, VirialKind};
pub use proximity::{distance_d, distance_dk, local_delta, Proximity, ProximityResult};
pub use refined::{scheme_by_name, scheme_for_dim, scheme_names, ModulationScheme, RefinedContext, RefinedParameters};

pub const MAX_NEWTON_ITERATIONS: usize = 50;
pub const FIT_TOLERANCE: f64 = 1e-10;
pub const STEP_TOLERANCE: f64 = 1e-12;

/// Decomposition `χ_ν 𝒖 = 𝒲(ι, λ) + 𝒈` with `⟨𝒵_{underline λ_j} | g⟩ = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct ModulationState {
    pub dim: usize,
    pub signs: Vec<i8>,
    pub scales: Vec<f64>,
    #[serde(skip)]
    pub g: FieldPair,
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub nu: Option<f64>,
    /// `|⟨𝒵_{underline λ_j} | g⟩| / (λ_j ‖𝒵‖_{L²})`.
    pub ortho_residuals: Vec<f64>,
    pub iterations: usize,
}

impl ModulationState {
    pub fn k(&self) -> usize {
        self.scales.len()
    }

    pub fn config(&self) -> BubbleConfig {
        BubbleConfig::new(self.signs.clone(), self.scales.clone()).expect("fitted configuration is valid")
    }

    pub fn sign(&self, j: usize) -> f64 {
        self.signs[j] as f64
    }

    /// Copy with `g` multiplied by `χ(2r/r_obs)`: unchanged on `[0, r_obs/2]`, zero from `r_obs` on.
    pub fn localized(&self, r_obs: f64) -> Result<Self> {
        if !(r_obs > 0.0) {
            return Err(Error::contract("observation radius must be positive"));
        }
        let mut out = self.clone();
        for (i, &r) in self.g.grid().nodes().iter().enumerate() {
            let w = chi(2.0 * r / r_obs);
            out.g.u[i] *= w;
            out.g.udot[i] *= w;
        }
        Ok(out)
    }
}

/// Fitting context for one grid: the `𝒵` profile and the reference eigenpair.
#[derive(Debug, Clone)]
pub struct Fitter {
    grid: Arc<RadialGrid>,
    z: ZProfile,
    z_norm: f64,
    eigen: Arc<EigenPair>,
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

impl Fitter {
    pub fn new(grid: &Arc<RadialGrid>) -> Result<Self> {
        let eigen = spectral::reference_eigenpair(grid.dim())?;
        Self::with_eigen(grid, eigen)
    }

    pub fn with_eigen(grid: &Arc<RadialGrid>, eigen: Arc<EigenPair>) -> Result<Self> {
        let z = spectral::make_z_profile(grid.dim(), grid, &eigen)?;
        let zs = grid.sample(|r| z.eval(r));
        let z_norm = dot(&zs, &zs, grid).sqrt();
        Ok(Self {
            grid: grid.clone(),
            z,
            z_norm,
            eigen,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn eigen(&self) -> &Arc<EigenPair> {
        &self.eigen
    }

    pub fn z_profile(&self) -> &ZProfile {
        &self.z
    }

    fn residual_and_jacobian(&self, target: &[f64], signs: &[i8], scales: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let grid = &self.grid;
        let dim = grid.dim();
        let k = scales.len();
        let config = BubbleConfig::new(signs.to_vec(), scales.to_vec()).expect("ordered scales");
        let rem: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(target)
            .map(|(&r, t)| t - config.eval(dim, r))
            .collect();
        let lws: Vec<Vec<f64>> = scales
            .iter()
            .map(|&l| {
                ground_state::BubbleProfile::new(
                    dim,
                    ground_state::ProfileKind::LambdaW,
                    l,
                    ground_state::Normalization::Energy,
                )
                .expect("positive scale")
                .sample(grid)
            })
            .collect();
        let mut f = vec![0.0; k];
        let mut jac = vec![vec![0.0; k]; k];
        for j in 0..k {
            let (z, uz) = self.z.sample_l2_scaled(grid, scales[j]);
            f[j] = dot(&z, &rem, grid);
            for i in 0..k {
                jac[j][i] = signs[i] as f64 * dot(&z, &lws[i], grid);
            }
            jac[j][j] -= dot(&uz, &rem, grid);
        }
        (f, jac)
    }

    fn normalized(&self, f: &[f64], scales: &[f64]) -> Vec<f64> {
        f.iter().zip(scales).map(|(v, l)| v.abs() / (l * self.z_norm)).collect()
    }

    fn newton(&self, target: &[f64], signs: &[i8], seed: &[f64], tol: f64, damped: bool) -> Result<(Vec<f64>, usize)> {
        let k = seed.len();
        let mut theta: Vec<f64> = seed.iter().map(|l| l.ln()).collect();
        let mut settled = 0;
        for it in 1..=MAX_NEWTON_ITERATIONS {
            let scales: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
            let (f, jac) = self.residual_and_jacobian(target, signs, &scales);
            let res = self.normalized(&f, &scales).into_iter().fold(0.0, f64::max);
            if !res.is_finite() {
                return Err(Error::FitFailure(format!("non-finite residual at iteration {it}")));
            }
            let step = solve_dense(jac, f.iter().map(|v| -v).collect())
                .ok_or_else(|| Error::FitFailure("singular Jacobian".into()))?;
            let size = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            if res <= tol {
                settled += 1;
                if size < STEP_TOLERANCE || settled >= 3 {
                    return Ok((scales, it));
                }
            }
            let mut factor = if damped { 0.5 } else { 1.0 };
            let mut halvings = 0;
            loop {
                let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + factor * s).collect();
                if trial.windows(2).all(|w| w[0] < w[1]) && trial.iter().all(|t| t.is_finite()) {
                    theta = trial;
                    break;
                }
                halvings += 1;
                factor *= 0.5;
                if halvings > 30 {
                    return Err(Error::FitFailure(format!(
                        "scale collision at iteration {it} (scales {scales:?})"
                    )));
                }
            }
            if k == 0 {
                return Ok((vec![], it));
            }
        }
        Err(Error::FitFailure(format!(
            "Newton did not converge in {MAX_NEWTON_ITERATIONS} iterations"
        )))
    }

    /// Fit `K` bubbles to `χ(·/ν) 𝒖`; `nu = None` means no window.
    pub fn fit(&self, u: &FieldPair, k: usize, nu: Option<f64>, seed: &BubbleConfig) -> Result<ModulationState> {
        let grid = &self.grid;
        if !Arc::ptr_eq(u.grid(), grid) && **u.grid() != **grid {
            return Err(Error::contract("state lives on a different grid than the fitter"));
        }
        if seed.len() != k || k == 0 {
            return Err(Error::contract(format!("seed has {} bubbles, K = {k}", seed.len())));
        }
        if let Some(nu) = nu {
            if !(nu > 0.0) {
                return Err(Error::contract(format!("window ν must be positive, got {nu}")));
            }
            if seed.scales()[k - 1] >= nu {
                return Err(Error::contract(format!("λ_K = {} must lie below ν = {nu}", seed.scales()[k - 1])));
            }
        }
        let window: Vec<f64> = match nu {
            Some(nu) => grid.nodes().iter().map(|r| chi(r / nu)).collect(),
            None => vec![1.0; grid.n()],
        };
        let target: Vec<f64> = u.u.iter().zip(&window).map(|(a, b)| a * b).collect();
        let target_dot: Vec<f64> = u.udot.iter().zip(&window).map(|(a, b)| a * b).collect();
        let tol = FIT_TOLERANCE * energy_norm_total(u).max(f64::MIN_POSITIVE);
        let signs = seed.signs().to_vec();
        let (scales, iterations) = match self.newton(&target, &signs, seed.scales(), tol, false) {
            Ok(v) => v,
            Err(e) => {
                log::debug!("undamped fit failed ({e}); retrying damped");
                self.newton(&target, &signs, seed.scales(), tol, true)?
            }
        };
        if let Some(nu) = nu {
            if scales[k - 1] >= nu {
                return Err(Error::FitFailure(format!("fitted λ_K = {} reached ν = {nu}", scales[k - 1])));
            }
        }
        let config = BubbleConfig::new(signs.clone(), scales.clone())?;
        let dim = grid.dim();
        // sign check: the remainder after removing the other bubbles has sign ι_j at r = λ_j
        for j in 0..k {
            let (t, _) = interpolate(grid, &target, scales[j]);
            let others: f64 = (0..k)
                .filter(|&i| i != j)
                .map(|i| {
                    signs[i] as f64 * scales[i].powf(-(grid.d() - 2.0) / 2.0) * ground_state::w(dim, scales[j] / scales[i])
                })
                .sum();
            if (t - others) * signs[j] as f64 <= 0.0 {
                return Err(Error::FitFailure(format!(
                    "amplitude at λ_{} = {} has sign opposite to ι = {}",
                    j + 1,
                    scales[j],
                    signs[j]
                )));
            }
        }
        let gu: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(&target)
            .map(|(&r, t)| t - config.eval(dim, r))
            .collect();
        let g = FieldPair::new(grid.clone(), gu, target_dot)?;
        let (f, _) = self.residual_and_jacobian(&target, &signs, &scales);
        let ortho_residuals = self.normalized(&f, &scales);
        let mut a_minus = Vec::with_capacity(k);
        let mut a_plus = Vec::with_capacity(k);
        for &l in &scales {
            a_minus.push(alpha_pairing(&AlphaForm::new(self.eigen.clone(), Sign::Minus, l)?, &g)?);
            a_plus.push(alpha_pairing(&AlphaForm::new(self.eigen.clone(), Sign::Plus, l)?, &g)?);
        }
        Ok(ModulationState {
            dim,
            signs,
            scales,
            g,
            a_minus,
            a_plus,
            nu,
            ortho_residuals,
            iterations,
        })
    }
}

/// One-shot fit with a freshly built [`Fitter`].
pub fn fit(u: &FieldPair, k: usize, nu: Option<f64>, seed: &BubbleConfig) -> Result<ModulationState> {
    Fitter::new(u.grid())?.fit(u, k, nu, seed)
}

/// Proximity of the fitted configuration: `(‖𝒈‖²_E(0, r_obs) + Σ_{j<K}(λ_j/λ_{j+1})^{(D−2)/2})^{1/2}`.
pub fn modulation_distance(state: &ModulationState, r_obs: f64) -> Result<f64> {
    let e = (state.dim as f64 - 2.0) / 2.0;
    let ratios: f64 = state.scales.windows(2).map(|w| (w[0] / w[1]).powf(e)).sum();
    Ok((crate::radial::energy_norm(&state.g, 0.0, r_obs)?.powi(2) + ratios).sqrt())
}
