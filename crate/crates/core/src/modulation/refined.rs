//! Refined modulation parameters `ξ_j`, `β_j` and the shifted stable/unstable
//! coefficients `ã_j^±`. Each dimension regime is a [`ModulationScheme`]
//! registered by name.

use std::sync::Arc;

use serde::Serialize;

use super::cutoff_q::{build_cutoff, virial_apply, CutoffQ, VirialKind};
use super::ModulationState;
use crate::cutoff::chi;
use crate::error::{Error, Result};
use crate::ground_state::{self, BubbleProfile, Normalization, ProfileKind};
use crate::radial::{dot, FieldPair};
use crate::spectral::{alpha_pairing, AlphaForm, EigenPair, Sign};

/// Shared inputs of the refined parameters.
#[derive(Debug, Clone)]
pub struct RefinedContext {
    pub q: CutoffQ,
    /// Log-window constant `L`.
    pub l: f64,
    pub eigen: Arc<EigenPair>,
}

impl RefinedContext {
    pub fn new(dim: usize, c: f64, r: f64, l: f64) -> Result<Self> {
        if !(l >= 1.0 && l.is_finite()) {
            return Err(Error::contract(format!("L must be ≥ 1, got {l}")));
        }
        Ok(Self {
            q: build_cutoff(dim, c, r)?,
            l,
            eigen: crate::spectral::reference_eigenpair(dim)?,
        })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RefinedParameters {
    pub xi: Vec<f64>,
    pub beta: Vec<f64>,
    pub tilde_a_minus: Vec<f64>,
    pub tilde_a_plus: Vec<f64>,
}

fn lam_w_l2_scaled(st: &ModulationState, j: usize) -> Result<Vec<f64>> {
    Ok(BubbleProfile::new(st.dim, ProfileKind::LambdaW, st.scales[j], Normalization::L2)?.sample(st.g.grid()))
}

fn lam_w_sq(dim: usize) -> Result<f64> {
    ground_state::lambda_w_l2_sq(dim).ok_or(Error::UnsupportedDimension(dim))
}

/// `g + Σ_{i<j} ι_i W_{λ_i}` (position component).
fn shifted_g(st: &ModulationState, j: usize) -> Vec<f64> {
    let grid = st.g.grid();
    let d = grid.d();
    grid.nodes()
        .iter()
        .zip(&st.g.u)
        .map(|(&r, g)| {
            g + (0..j)
                .map(|i| st.sign(i) * st.scales[i].powf(-(d - 2.0) / 2.0) * ground_state::w(st.dim, r / st.scales[i]))
                .sum::<f64>()
        })
        .collect()
}

fn windowed(v: &[f64], st: &ModulationState, radius: f64) -> Vec<f64> {
    st.g.grid().nodes().iter().zip(v).map(|(&r, x)| chi(r / radius) * x).collect()
}

fn check_index(st: &ModulationState, j: usize, needs_next: bool) -> Result<()> {
    let lim = if needs_next { st.k().saturating_sub(1) } else { st.k() };
    if j >= lim {
        return Err(Error::contract(format!("index {j} out of range for K = {}", st.k())));
    }
    Ok(())
}

/// `⟨Ā(λ_j) g | ġ⟩`.
fn underline_a_pairing(st: &ModulationState, j: usize, ctx: &RefinedContext) -> f64 {
    let grid = st.g.grid();
    let ag = virial_apply(VirialKind::AUnderline, st.scales[j], grid, &st.g.u, &ctx.q);
    dot(&ag, &st.g.udot, grid)
}

pub trait ModulationScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn supports(&self, dim: usize) -> bool;
    /// Whether `ξ_j`, `β_j` involve `λ_{j+1}`.
    fn needs_next(&self) -> bool {
        false
    }
    fn xi(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64>;
    fn beta(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64>;
    fn tilde_a(&self, j: usize, st: &ModulationState, _ctx: &RefinedContext) -> Result<(f64, f64)> {
        Ok((st.a_minus[j], st.a_plus[j]))
    }

    fn refine(&self, st: &ModulationState, ctx: &RefinedContext) -> Result<RefinedParameters> {
        if !self.supports(st.dim) {
            return Err(Error::contract(format!("scheme {} does not apply to D = {}", self.name(), st.dim)));
        }
        let count = if self.needs_next() { st.k() - 1 } else { st.k() };
        let mut out = RefinedParameters::default();
        for j in 0..count {
            out.xi.push(self.xi(j, st, ctx)?);
            out.beta.push(self.beta(j, st, ctx)?);
        }
        for j in 0..st.k() {
            let (m, p) = self.tilde_a(j, st, ctx)?;
            out.tilde_a_minus.push(m);
            out.tilde_a_plus.push(p);
        }
        Ok(out)
    }
}

fn beta_high(j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
    check_index(st, j, false)?;
    let n2 = lam_w_sq(st.dim)?;
    let grid = st.g.grid();
    let lw = lam_w_l2_scaled(st, j)?;
    Ok(-st.sign(j) / n2 * dot(&lw, &st.g.udot, grid) - underline_a_pairing(st, j, ctx) / n2)
}

fn xi_windowed(j: usize, st: &ModulationState, ctx: &RefinedContext, g: &[f64]) -> Result<f64> {
    check_index(st, j, false)?;
    let n2 = lam_w_sq(st.dim)?;
    let lw = windowed(&lam_w_l2_scaled(st, j)?, st, ctx.l * st.scales[j]);
    Ok(st.scales[j] - st.sign(j) / n2 * dot(&lw, g, st.g.grid()))
}

fn tilde_a_shifted(j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<(f64, f64)> {
    let grid = st.g.grid();
    let shifted = FieldPair::new(grid.clone(), shifted_g(st, j), st.g.udot.clone())?;
    let m = alpha_pairing(&AlphaForm::new(ctx.eigen.clone(), Sign::Minus, st.scales[j])?, &shifted)?;
    let p = alpha_pairing(&AlphaForm::new(ctx.eigen.clone(), Sign::Plus, st.scales[j])?, &shifted)?;
    Ok((m, p))
}

/// `D ≥ 7`: `ξ_j = λ_j`.
pub struct HighDim;

impl ModulationScheme for HighDim {
    fn name(&self) -> &'static str {
        "d7plus"
    }
    fn supports(&self, dim: usize) -> bool {
        dim >= 7
    }
    fn xi(&self, j: usize, st: &ModulationState, _ctx: &RefinedContext) -> Result<f64> {
        check_index(st, j, false)?;
        Ok(st.scales[j])
    }
    fn beta(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        beta_high(j, st, ctx)
    }
}

/// `D = 6`: `ξ_j = λ_j − ι_j ⟨χ(·/Lλ_j)ΛW_{underline λ_j} | g⟩ / ‖ΛW‖²`.
pub struct Dim6;

impl ModulationScheme for Dim6 {
    fn name(&self) -> &'static str {
        "d6"
    }
    fn supports(&self, dim: usize) -> bool {
        dim == 6
    }
    fn xi(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        xi_windowed(j, st, ctx, &st.g.u)
    }
    fn beta(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        beta_high(j, st, ctx)
    }
}

/// `D = 5`: as `D = 6` with the interior bubbles added back to `g`.
pub struct Dim5;

impl ModulationScheme for Dim5 {
    fn name(&self) -> &'static str {
        "d5"
    }
    fn supports(&self, dim: usize) -> bool {
        dim == 5
    }
    fn xi(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        xi_windowed(j, st, ctx, &shifted_g(st, j))
    }
    fn beta(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        beta_high(j, st, ctx)
    }
    fn tilde_a(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<(f64, f64)> {
        tilde_a_shifted(j, st, ctx)
    }
}

/// `D = 4`: logarithmic windows `χ_{L√(λ_jλ_{j+1})}`.
pub struct Dim4;

fn log_ratio(st: &ModulationState, j: usize) -> Result<f64> {
    let ratio = st.scales[j + 1] / st.scales[j];
    if ratio <= std::f64::consts::E {
        return Err(Error::LogWindowDegenerate(ratio));
    }
    Ok(ratio.ln())
}

impl ModulationScheme for Dim4 {
    fn name(&self) -> &'static str {
        "d4"
    }
    fn supports(&self, dim: usize) -> bool {
        dim == 4
    }
    fn needs_next(&self) -> bool {
        true
    }
    fn xi(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        check_index(st, j, true)?;
        let lg = log_ratio(st, j)?;
        let radius = ctx.l * (st.scales[j] * st.scales[j + 1]).sqrt();
        let lw = windowed(&lam_w_l2_scaled(st, j)?, st, radius);
        Ok(st.scales[j] - st.sign(j) / (8.0 * lg) * dot(&lw, &shifted_g(st, j), st.g.grid()))
    }
    fn beta(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<f64> {
        check_index(st, j, true)?;
        log_ratio(st, j)?;
        let xi = self.xi(j, st, ctx)?;
        let radius = ctx.l * (xi.max(0.0) * st.scales[j + 1]).sqrt();
        let lw = windowed(&lam_w_l2_scaled(st, j)?, st, radius);
        Ok(-st.sign(j) * dot(&lw, &st.g.udot, st.g.grid()) - underline_a_pairing(st, j, ctx))
    }
    fn tilde_a(&self, j: usize, st: &ModulationState, ctx: &RefinedContext) -> Result<(f64, f64)> {
        tilde_a_shifted(j, st, ctx)
    }
}

pub fn scheme_names() -> &'static [&'static str] {
    &["d7plus", "d6", "d5", "d4"]
}

pub fn scheme_by_name(name: &str) -> Result<Box<dyn ModulationScheme>> {
    match name {
        "d7plus" => Ok(Box::new(HighDim)),
        "d6" => Ok(Box::new(Dim6)),
        "d5" => Ok(Box::new(Dim5)),
        "d4" => Ok(Box::new(Dim4)),
        other => Err(Error::ConfigValidation(vec![format!(
            "unknown modulation scheme {other:?}; known: {:?}",
            scheme_names()
        )])),
    }
}

pub fn scheme_for_dim(dim: usize) -> Result<Box<dyn ModulationScheme>> {
    crate::radial::check_dim(dim)?;
    scheme_by_name(match dim {
        4 => "d4",
        5 => "d5",
        6 => "d6",
        _ => "d7plus",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::Fitter;
    use crate::multibubble::{synthesize, BubbleConfig};
    use crate::radial::RadialGrid;

    #[test]
    fn registry() {
        for n in scheme_names() {
            assert_eq!(scheme_by_name(n).unwrap().name(), *n);
        }
        assert!(scheme_by_name("d3").is_err());
        assert_eq!(scheme_for_dim(8).unwrap().name(), "d7plus");
        assert_eq!(scheme_for_dim(4).unwrap().name(), "d4");
    }

    #[test]
    fn static_bubbles_d6() {
        let grid = RadialGrid::new(6, 4000, 20.0).unwrap();
        let truth = BubbleConfig::new(vec![1, 1], vec![0.05, 1.0]).unwrap();
        let st = Fitter::new(&grid).unwrap().fit(&synthesize(&truth, &grid), 2, None, &truth).unwrap();
        let ctx = RefinedContext::new(6, 0.1, 10.0, 10.0).unwrap();
        let p = scheme_for_dim(6).unwrap().refine(&st, &ctx).unwrap();
        assert_eq!(p.beta, vec![0.0, 0.0]);
        for (x, l) in p.xi.iter().zip(st.scales.iter()) {
            assert!((x - l).abs() < 1e-9 * l);
        }
    }

    #[test]
    fn log_window_guard() {
        let grid = RadialGrid::new(4, 4000, 20.0).unwrap();
        let truth = BubbleConfig::new(vec![1, 1], vec![0.5, 1.0]).unwrap();
        let st = Fitter::new(&grid).unwrap().fit(&synthesize(&truth, &grid), 2, None, &truth).unwrap();
        let ctx = RefinedContext::new(4, 0.1, 10.0, 10.0).unwrap();
        assert!(matches!(Dim4.xi(0, &st, &ctx), Err(Error::LogWindowDegenerate(_))));
        assert!(Dim6.refine(&st, &ctx).is_err());
    }

    #[test]
    fn high_dim_xi_is_lambda() {
        let grid = RadialGrid::new(7, 3000, 20.0).unwrap();
        let truth = BubbleConfig::single(1, 1.0).unwrap();
        let mut u = synthesize(&truth, &grid);
        for (v, r) in u.u.iter_mut().zip(grid.nodes()) {
            *v += 1e-3 * (-r * r).exp();
        }
        let st = Fitter::new(&grid).unwrap().fit(&u, 1, None, &truth).unwrap();
        let ctx = RefinedContext::new(7, 0.1, 10.0, 10.0).unwrap();
        assert_eq!(HighDim.xi(0, &st, &ctx).unwrap(), st.scales[0]);
    }

    #[test]
    fn beta_tracks_scaling_velocity() {
        let (lam, eps) = (0.5, 1e-3);
        let grid = RadialGrid::new(6, 4000, 20.0).unwrap();
        let truth = BubbleConfig::single(1, lam).unwrap();
        let mut u = synthesize(&truth, &grid);
        for (v, r) in u.udot.iter_mut().zip(grid.nodes()) {
            *v = -eps / lam * crate::ground_state::lambda_w(6, r / lam) / (lam * lam);
        }
        let st = Fitter::new(&grid).unwrap().fit(&u, 1, None, &truth).unwrap();
        let ctx = RefinedContext::new(6, 0.01, 10.0, 10.0).unwrap();
        let p = Dim6.refine(&st.localized(19.0).unwrap(), &ctx).unwrap();
        let lw = grid.sample(|r| crate::ground_state::lambda_w(6, r / lam) / lam.powi(3));
        let cut: Vec<f64> = lw
            .iter()
            .zip(grid.nodes())
            .map(|(v, r)| v * crate::cutoff::chi(2.0 * r / 19.0))
            .collect();
        let fraction = crate::radial::dot(&cut, &lw, &grid) / crate::ground_state::lambda_w_l2_sq(6).unwrap();
        assert!((p.beta[0] / (eps * fraction) - 1.0).abs() < 1e-2, "beta = {}, fraction = {fraction}", p.beta[0]);
    }
}
