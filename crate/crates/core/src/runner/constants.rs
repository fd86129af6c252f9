//! Quadrature checks of the closed-form constants for one dimension.

use serde::Serialize;

use crate::error::Result;
use crate::ground_state::{
    self, f, grad_w_sq, interaction_constant, lambda_w, lambda_w_l2_sq, lambda_w_log_slope, static_residual,
    under_lambda_lambda_w, w, D4_LOG_COEFFICIENT, D4_LOG_COEFFICIENT_QUOTED,
};
use crate::quadrature::{improper_quadrature, improper_quadrature_abs};
use crate::radial::{check_dim, critical_exponent, RadialGrid};

/// Reference `κ` of the fourth-order eigenpair (`D = 4..8`), frozen for regression.
pub const KAPPA_REFERENCE: [f64; 5] = [0.765559202309, 0.618076878425, 0.530799842693, 0.471681925738, 0.428348356956];

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCheck {
    pub name: String,
    pub value: f64,
    pub reference: Option<f64>,
    /// Relative error against `reference`, or the absolute quantity being bounded.
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational rows are reported but do not enter the overall verdict.
    pub informational: bool,
    pub note: Option<String>,
}

impl ConstantCheck {
    fn relative(name: &str, value: f64, reference: f64, tol: f64) -> Self {
        let error = ((value - reference) / reference).abs();
        Self {
            name: name.into(),
            value,
            reference: Some(reference),
            error,
            tolerance: tol,
            pass: error <= tol,
            informational: false,
            note: None,
        }
    }

    fn bound(name: &str, value: f64, error: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: None,
            error,
            tolerance: tol,
            pass: error <= tol,
            informational: false,
            note: None,
        }
    }

    fn info(mut self) -> Self {
        self.informational = true;
        self
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

const QUAD_TOL: f64 = 1e-12;

/// All non-informational rows pass.
pub fn all_pass(checks: &[ConstantCheck]) -> bool {
    checks.iter().all(|c| c.pass || c.informational)
}

pub fn verify_constants(dim: usize) -> Result<Vec<ConstantCheck>> {
    check_dim(dim)?;
    let d = dim as f64;
    let mut out = vec![];

    let q = improper_quadrature(|r| lambda_w(dim, r) * w(dim, r).powf(4.0 / (d - 2.0)), dim, QUAD_TOL)?;
    out.push(ConstantCheck::relative(
        "interaction constant (D+2)/(D-2)∫ΛW W^{4/(D-2)}",
        (d + 2.0) / (d - 2.0) * q,
        -interaction_constant(dim),
        1e-8,
    ));

    if let Some(closed) = lambda_w_l2_sq(dim) {
        let q = improper_quadrature(|r| lambda_w(dim, r).powi(2), dim, QUAD_TOL)?;
        out.push(ConstantCheck::relative("‖ΛW‖² (Γ(1+D/2)² closed form)", q, closed, 1e-8));
        let single = ground_state::lambda_w_l2_sq_single_gamma(dim).expect("D ≥ 5");
        out.push(
            ConstantCheck::relative("‖ΛW‖² against the single-Γ expression", q, single, 1e-8)
                .note("the single-Γ form differs by the factor Γ(1+D/2)")
                .info(),
        );
    } else {
        let s1 = lambda_w_log_slope(dim, 1e3)?;
        let s2 = lambda_w_log_slope(dim, 1e4)?;
        out.push(
            ConstantCheck::relative("‖ΛW‖²_{B_R} log-slope R-independence (10³ vs 10⁴)", s2, s1, 1e-2)
                .note("[I(2R) − I(R)]/log 2"),
        );
        out.push(ConstantCheck::relative("‖ΛW‖²_{B_R} log coefficient (antiderivative)", s2, D4_LOG_COEFFICIENT, 1e-2));
        out.push(
            ConstantCheck::relative("‖ΛW‖²_{B_R} log coefficient (quoted)", s2, D4_LOG_COEFFICIENT_QUOTED, 1e-2)
                .note("quoted value differs from the measured slope")
                .info(),
        );
    }

    if dim == 4 {
        let pairing = improper_quadrature(|r| under_lambda_lambda_w(dim, r) * lambda_w(dim, r), dim, QUAD_TOL)?;
        out.push(ConstantCheck::relative("|⟨ŪΛΛW|ΛW⟩|", pairing.abs(), 32.0, 1e-8));
    } else {
        let a = improper_quadrature(|r| under_lambda_lambda_w(dim, r).powi(2), dim, QUAD_TOL)?.sqrt();
        let b = improper_quadrature(|r| lambda_w(dim, r).powi(2), dim, QUAD_TOL)?.sqrt();
        let pairing = improper_quadrature_abs(
            |r| under_lambda_lambda_w(dim, r) * lambda_w(dim, r),
            dim,
            QUAD_TOL,
            1e-13 * a * b,
        )?;
        out.push(ConstantCheck::bound("⟨ŪΛΛW|ΛW⟩ / (‖ŪΛΛW‖‖ΛW‖)", pairing, pairing.abs() / (a * b), 1e-8));
    }

    let p = critical_exponent(dim);
    let pot = improper_quadrature(|r| w(dim, r).powf(p), dim, QUAD_TOL)?;
    out.push(ConstantCheck::relative("‖∇W‖² = ∫W^p", pot, grad_w_sq(dim), 1e-8));

    let coarse = static_residual(RadialGrid::new(dim, 1000, 20.0)?.as_ref());
    let fine = static_residual(RadialGrid::new(dim, 2000, 20.0)?.as_ref());
    let ratio = coarse / fine;
    out.push(
        ConstantCheck::bound("static residual ‖ΔW + f(W)‖ refinement ratio", ratio, (4.0 - ratio).max(0.0), 0.5)
            .note(format!("h = 0.02: {coarse:.3e}, h = 0.01: {fine:.3e}")),
    );
    if dim == 4 {
        let worst = (1..=100)
            .map(|k| {
                let r = 0.1 * k as f64;
                let lap = ground_state::w_laplacian(dim, r);
                (lap + f(w(dim, r), dim)).abs() / f(w(dim, r), dim).abs()
            })
            .fold(0.0, f64::max);
        out.push(ConstantCheck::bound("ΔW = −W³ at 100 radii", worst, worst, 1e-13));
    }

    let kappa = crate::spectral::reference_eigenpair(dim)?.kappa;
    out.push(
        ConstantCheck::relative("κ (fourth-order eigenpair)", kappa, KAPPA_REFERENCE[dim - 4], 1e-6)
            .note("regression against the frozen reference"),
    );
    Ok(out)
}
