//! Smooth cutoff and bump profiles shared by the modulation and diagnostics code.

fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn dpsi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        psi(x) / (x * x)
    }
}

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1.
pub fn smooth_step(x: f64) -> f64 {
    let a = psi(x);
    let b = psi(1.0 - x);
    a / (a + b)
}

pub fn smooth_step_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let a = psi(x);
    let b = psi(1.0 - x);
    (dpsi(x) * b + a * dpsi(1.0 - x)) / ((a + b) * (a + b))
}

/// The fixed cutoff χ: equal to 1 on [0, 1], 0 on [2, ∞), smooth and non-increasing.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

pub fn chi_deriv(r: f64) -> f64 {
    -smooth_step_deriv(r - 1.0)
}

/// `(r ∂_r χ)(r)`, supported in [1, 2].
pub fn r_dchi(r: f64) -> f64 {
    r * chi_deriv(r)
}

/// Standard mollifier `exp(-1/(1-x²))` on (-1, 1) and its derivative.
pub fn mollifier(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

pub fn mollifier_deriv(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - x * x;
        -2.0 * x / (s * s) * mollifier(x)
    }
}

/// Septic smoothstep, C³, with derivatives up to order three.
pub(crate) fn poly_step(x: f64) -> [f64; 4] {
    if x <= 0.0 {
        return [0.0; 4];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    [
        x4 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x3),
        140.0 * x3 * (1.0 - x).powi(3),
        420.0 * x2 * (1.0 - x).powi(2) * (1.0 - 2.0 * x),
        840.0 * x * (1.0 - x) * (1.0 - 5.0 * x + 5.0 * x2),
    ]
}
