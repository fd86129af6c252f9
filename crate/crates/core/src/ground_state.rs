//! The ground state `W`, its scaling derivatives, the nonlinearity and the
//! table of closed-form constants.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial::{check_dim, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    W,
    LambdaW,
    UnderLambdaLambdaW,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// `λ^{-(D-2)/2} φ(r/λ)`
    Energy,
    /// `λ^{-D/2} φ(r/λ)`
    L2,
}

/// A rescaled member of the bubble family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleProfile {
    pub dim: usize,
    pub kind: ProfileKind,
    pub lambda: f64,
    pub normalization: Normalization,
}

impl BubbleProfile {
    pub fn new(dim: usize, kind: ProfileKind, lambda: f64, normalization: Normalization) -> Result<Self> {
        check_dim(dim)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::contract(format!("scale must be positive, got {lambda}")));
        }
        Ok(Self {
            dim,
            kind,
            lambda,
            normalization,
        })
    }

    pub fn w(dim: usize, lambda: f64) -> Result<Self> {
        Self::new(dim, ProfileKind::W, lambda, Normalization::Energy)
    }

    fn amplitude(&self) -> f64 {
        let d = self.dim as f64;
        match self.normalization {
            Normalization::Energy => self.lambda.powf(-(d - 2.0) / 2.0),
            Normalization::L2 => self.lambda.powf(-d / 2.0),
        }
    }

    fn unit(&self, x: f64) -> (f64, f64) {
        match self.kind {
            ProfileKind::W => (w(self.dim, x), w_deriv(self.dim, x)),
            ProfileKind::LambdaW => (lambda_w(self.dim, x), lambda_w_deriv(self.dim, x)),
            ProfileKind::UnderLambdaLambdaW => (
                under_lambda_lambda_w(self.dim, x),
                under_lambda_lambda_w_deriv(self.dim, x),
            ),
        }
    }

    /// Value and radial derivative at `r`.
    pub fn eval_with_deriv(&self, r: f64) -> (f64, f64) {
        let a = self.amplitude();
        let (v, dv) = self.unit(r / self.lambda);
        (a * v, a * dv / self.lambda)
    }

    pub fn eval_unchecked(&self, r: f64) -> f64 {
        self.amplitude() * self.unit(r / self.lambda).0
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.sample(|r| self.eval_unchecked(r))
    }
}

/// Evaluate a bubble profile at `r ≥ 0`.
pub fn eval_profile(p: &BubbleProfile, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::contract(format!("radius must be non-negative, got {r}")));
    }
    Ok(p.eval_unchecked(r))
}

fn s_of(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    r * r / (d * (d - 2.0))
}

pub fn w(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    (1.0 + s_of(dim, r)).powf(-(d - 2.0) / 2.0)
}

pub fn w_deriv(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    -r / d * (1.0 + s_of(dim, r)).powf(-d / 2.0)
}

pub fn w_second(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    let s = s_of(dim, r);
    -(1.0 + s).powf(-d / 2.0) / d + s * (1.0 + s).powf(-d / 2.0 - 1.0)
}

/// `ΔW = W'' + (D−1)/r W'` from the derivative formulas (`r > 0`).
pub fn w_laplacian(dim: usize, r: f64) -> f64 {
    w_second(dim, r) + (dim as f64 - 1.0) / r * w_deriv(dim, r)
}

/// `ΛW = r W' + (D-2)/2 W`.
pub fn lambda_w(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    ((d - 2.0) / 2.0 - r * r / (2.0 * d)) * (1.0 + s_of(dim, r)).powf(-d / 2.0)
}

pub fn lambda_w_deriv(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    let t = 1.0 + s_of(dim, r);
    let p = (d - 2.0) / 2.0 - r * r / (2.0 * d);
    t.powf(-d / 2.0) * (-r / d - r * p / ((d - 2.0) * t))
}

/// `ŪΛ ΛW = r (ΛW)' + D/2 ΛW`.
pub fn under_lambda_lambda_w(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    r * lambda_w_deriv(dim, r) + 0.5 * d * lambda_w(dim, r)
}

pub fn under_lambda_lambda_w_deriv(dim: usize, r: f64) -> f64 {
    // d/dr [r φ' + D/2 φ] = (D/2 + 1) φ' + r φ''
    let d = dim as f64;
    let t = 1.0 + s_of(dim, r);
    let dd = d * (d - 2.0);
    let p = (d - 2.0) / 2.0 - r * r / (2.0 * d);
    let dp = -r / d;
    // φ' = t^{-D/2} g(r), g = -r/D - r p /((D-2) t)
    let g = -r / d - r * p / ((d - 2.0) * t);
    let dt = 2.0 * r / dd;
    let dg = -1.0 / d - (p + r * dp) / ((d - 2.0) * t) + r * p * dt / ((d - 2.0) * t * t);
    let phi1 = t.powf(-d / 2.0) * g;
    let phi2 = t.powf(-d / 2.0) * dg - 0.5 * d * t.powf(-d / 2.0 - 1.0) * dt * g;
    (0.5 * d + 1.0) * phi1 + r * phi2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearityOrder {
    F,
    FPrime,
}

/// `f(u) = |u|^{4/(D-2)} u` or its derivative `(D+2)/(D-2) |u|^{4/(D-2)}`.
pub fn nonlinearity(u: f64, dim: usize, order: NonlinearityOrder) -> f64 {
    let d = dim as f64;
    let p = 4.0 / (d - 2.0);
    match order {
        NonlinearityOrder::F => u.abs().powf(p) * u,
        NonlinearityOrder::FPrime => (d + 2.0) / (d - 2.0) * u.abs().powf(p),
    }
}

#[inline]
pub fn f(u: f64, dim: usize) -> f64 {
    nonlinearity(u, dim, NonlinearityOrder::F)
}

#[inline]
pub fn f_prime(u: f64, dim: usize) -> f64 {
    nonlinearity(u, dim, NonlinearityOrder::FPrime)
}

/// Γ(x) for `x` a positive integer or half-integer.
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!((2.0 * x - twice).abs() < 1e-12 && twice >= 1.0, "Γ({x}) not supported");
    let mut acc;
    let mut y;
    if twice as i64 % 2 == 0 {
        acc = 1.0;
        y = 1.0;
    } else {
        acc = PI.sqrt();
        y = 0.5;
    }
    while y < x - 1e-12 {
        acc *= y;
        y += 1.0;
    }
    acc
}

/// `(D(D-2))^{D/2}`.
pub fn tail_constant_pow(dim: usize) -> f64 {
    let d = dim as f64;
    (d * (d - 2.0)).powf(d / 2.0)
}

/// `(D-2)/(2D) (D(D-2))^{D/2}`.
pub fn interaction_constant(dim: usize) -> f64 {
    let d = dim as f64;
    (d - 2.0) / (2.0 * d) * tail_constant_pow(dim)
}

/// `‖ΛW‖²_{L²}` from exact Beta-function evaluation of the integral (D ≥ 5).
pub fn lambda_w_l2_sq(dim: usize) -> Option<f64> {
    if dim < 5 {
        return None;
    }
    let d = dim as f64;
    let g = gamma_half_integer(1.0 + d / 2.0);
    Some(2.0 * (d * d - 4.0) * tail_constant_pow(dim) / (d * d * (d - 4.0)) * g * g / gamma_half_integer(d))
}

/// The same expression with a single power of `Γ(1 + D/2)`, as it is sometimes quoted.
pub fn lambda_w_l2_sq_single_gamma(dim: usize) -> Option<f64> {
    if dim < 5 {
        return None;
    }
    let d = dim as f64;
    Some(
        2.0 * (d * d - 4.0) * tail_constant_pow(dim) / (d * d * (d - 4.0))
            * gamma_half_integer(1.0 + d / 2.0)
            / gamma_half_integer(d),
    )
}

/// `‖∂_r W‖²_{L²} = ½ (D(D-2))^{D/2} B(D/2, D/2)`.
pub fn grad_w_sq(dim: usize) -> f64 {
    let d = dim as f64;
    let g = gamma_half_integer(d / 2.0);
    0.5 * tail_constant_pow(dim) * g * g / gamma_half_integer(d)
}

/// Leading coefficient of `∫_0^R (ΛW)² r³ dr` in `log R` for `D = 4`.
pub const D4_LOG_COEFFICIENT: f64 = 64.0;
/// `∫_0^R (ΛW)² r^{D−1} dr`.
pub fn lambda_w_l2_truncated(dim: usize, r: f64) -> Result<f64> {
    check_dim(dim)?;
    crate::quadrature::radial_integral(|x| lambda_w(dim, x).powi(2), dim, 0.0, r, 1e-12)
}

/// `[I(2R) − I(R)] / log 2` for the truncated `‖ΛW‖²`; tends to the `log R` coefficient at `D = 4`.
pub fn lambda_w_log_slope(dim: usize, r: f64) -> Result<f64> {
    check_dim(dim)?;
    let b = crate::quadrature::radial_integral(|x| lambda_w(dim, x).powi(2), dim, r, 2.0 * r, 1e-12)?;
    Ok(b / std::f64::consts::LN_2)
}

/// The coefficient as commonly quoted.
pub const D4_LOG_COEFFICIENT_QUOTED: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub dim: usize,
    /// `None` when the integral diverges (D = 4).
    pub lam_w_l2_sq: Option<f64>,
    /// Value of the single-Γ expression, for comparison.
    pub lam_w_l2_sq_single_gamma: Option<f64>,
    pub interaction_constant: f64,
    /// `None` for D = 4 (log-normalized variant).
    pub omega_sq: Option<f64>,
    pub pairing_ul: f64,
    pub kappa: Option<f64>,
    pub energy_w: f64,
    /// D = 4 only: coefficient of `log R` in the truncated `‖ΛW‖²`.
    pub d4_log_coefficient: Option<f64>,
}

impl ConstantsTable {
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }
}

pub fn closed_form_constants(dim: usize) -> Result<ConstantsTable> {
    check_dim(dim)?;
    let lam = lambda_w_l2_sq(dim);
    let ic = interaction_constant(dim);
    Ok(ConstantsTable {
        dim,
        lam_w_l2_sq: lam,
        lam_w_l2_sq_single_gamma: lambda_w_l2_sq_single_gamma(dim),
        interaction_constant: ic,
        omega_sq: lam.map(|l| ic / l),
        pairing_ul: if dim == 4 { 32.0 } else { 0.0 },
        kappa: None,
        energy_w: grad_w_sq(dim) / dim as f64,
        d4_log_coefficient: (dim == 4).then_some(D4_LOG_COEFFICIENT),
    })
}

/// Weighted L² norm of `ΔW + f(W)` on the grid, using the exact exterior value
/// of `W` as the outer ghost.
pub fn static_residual(grid: &RadialGrid) -> f64 {
    let dim = grid.dim();
    let wv = grid.sample(|r| w(dim, r));
    let mut lap = vec![0.0; grid.n()];
    grid.laplacian_with_outer(&wv, w(dim, grid.r_max() + 0.5 * grid.h()), &mut lap);
    let res: Vec<f64> = lap.iter().zip(&wv).map(|(l, u)| l + f(*u, dim)).collect();
    crate::radial::dot(&res, &res, grid).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        for d in 4..=8 {
            assert_eq!(w(d, 0.0), 1.0);
            assert_eq!(lambda_w(d, 0.0), (d as f64 - 2.0) / 2.0);
        }
        assert!((w(4, 8f64.sqrt()) - 0.5).abs() < 1e-15);
        assert_eq!(lambda_w(6, 0.0), 2.0);
    }

    #[test]
    fn negative_radius_rejected() {
        let p = BubbleProfile::w(6, 1.0).unwrap();
        assert!(eval_profile(&p, -0.1).is_err());
        assert!(BubbleProfile::w(6, 0.0).is_err());
    }

    #[test]
    fn nonlinearity_examples() {
        assert_eq!(f(0.0, 6), 0.0);
        assert_eq!(f(-1.0, 6), -1.0);
        assert_eq!(f_prime(2.0, 6), 4.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = 1e-5;
        for d in 4..=8 {
            for &r in &[0.3, 1.0, 2.7, 9.0] {
                let checks: [(fn(usize, f64) -> f64, fn(usize, f64) -> f64); 3] = [
                    (w, w_deriv),
                    (lambda_w, lambda_w_deriv),
                    (under_lambda_lambda_w, under_lambda_lambda_w_deriv),
                ];
                for (g, dg) in checks {
                    let fd = (g(d, r + e) - g(d, r - e)) / (2.0 * e);
                    assert!((fd - dg(d, r)).abs() < 1e-8, "D={d} r={r}");
                }
                let lw = r * w_deriv(d, r) + 0.5 * (d as f64 - 2.0) * w(d, r);
                assert!((lw - lambda_w(d, r)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn d4_under_lambda_closed_form() {
        for &r in &[0.0, 0.5, 1.7, 4.0] {
            let r2: f64 = r * r;
            let exact = -128.0 * (3.0 * r2 - 8.0) / (r2 + 8.0).powi(3);
            assert!((under_lambda_lambda_w(4, r) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn rescaled_profiles() {
        let p = BubbleProfile::new(6, ProfileKind::W, 2.0, Normalization::Energy).unwrap();
        assert!((p.eval_unchecked(2.0) - 0.25 * w(6, 1.0)).abs() < 1e-15);
        let q = BubbleProfile::new(6, ProfileKind::LambdaW, 2.0, Normalization::L2).unwrap();
        assert!((q.eval_unchecked(2.0) - 0.125 * lambda_w(6, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half_integer(1.0), 1.0);
        assert_eq!(gamma_half_integer(5.0), 24.0);
        assert!((gamma_half_integer(2.5) - 0.75 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constants_d6() {
        let c = closed_form_constants(6).unwrap();
        assert!((c.interaction_constant - 4608.0).abs() < 1e-9);
        assert!((c.lam_w_l2_sq.unwrap() - 3686.4).abs() < 1e-9);
        assert!((c.lam_w_l2_sq_single_gamma.unwrap() - 614.4).abs() < 1e-9);
        assert!((c.omega_sq.unwrap() - 1.25).abs() < 1e-12);
        assert!((c.energy_w - 38.4).abs() < 1e-10);
        let c4 = closed_form_constants(4).unwrap();
        assert!(c4.lam_w_l2_sq.is_none() && c4.omega_sq.is_none());
        assert_eq!(c4.pairing_ul, 32.0);
        assert!(closed_form_constants(9).is_err());
    }

    #[test]
    fn static_residual_second_order() {
        for d in [4usize, 6, 8] {
            let r1 = static_residual(&RadialGrid::new(d, 512, 20.0).unwrap());
            let r2 = static_residual(&RadialGrid::new(d, 1024, 20.0).unwrap());
            let ratio = r1 / r2;
            assert!((3.5..4.5).contains(&ratio), "D={d} ratio={ratio}");
        }
    }
}
