//! Closed-form constants checked against independent oracles: statrs Γ and B,
//! an explicit antiderivative at D = 4, and direct pairings on perturbed states.

use nlwlab::ground_state::{
    gamma_half_integer, grad_w_sq, interaction_constant, lambda_w, lambda_w_l2_sq, lambda_w_l2_truncated, w,
};
use nlwlab::modulation::Fitter;
use nlwlab::multibubble::{energy_gap_leading_term, energy_gap_measured, force_leading_term, interaction_force, synthesize, BubbleConfig};
use nlwlab::quadrature::improper_quadrature;
use nlwlab::radial::{FieldPair, RadialGrid};
use nlwlab::reduced::{omega_sq, reduced_rhs, ReducedState};
use nlwlab::runner::constants::KAPPA_REFERENCE;
use nlwlab::spectral::{self, alpha_pairing, AlphaForm, Sign};
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn half_integer_gamma_matches_statrs() {
    for k in 1..=20 {
        let x = 0.5 * k as f64;
        assert!(rel(gamma_half_integer(x), gamma(x)) < 1e-13, "Γ({x})");
    }
}

#[test]
fn lambda_w_norm_beta_oracle() {
    // ΛW = (D−2)/2·(1−s)(1+s)^{−D/2} with s = r²/(D(D−2)), and ∫s^{a−1}(1+s)^{−a−b} ds = B(a, b).
    for dim in 5..=8 {
        let d = dim as f64;
        let h = d / 2.0;
        let inner = beta(h, h) - 2.0 * beta(h + 1.0, h - 1.0) + beta(h + 2.0, h - 2.0);
        let oracle = (d - 2.0).powi(2) / 8.0 * (d * (d - 2.0)).powf(h) * inner;
        let q = improper_quadrature(|r| lambda_w(dim, r).powi(2), dim, 1e-12).unwrap();
        assert!(rel(oracle, q) < 1e-10, "D={dim}: {oracle} vs {q}");
        assert!(rel(lambda_w_l2_sq(dim).unwrap(), oracle) < 1e-12, "D={dim}");
    }
    assert!((lambda_w_l2_sq(6).unwrap() - 3686.4).abs() < 1e-9);
}

#[test]
fn grad_w_beta_oracle() {
    for dim in 4..=8 {
        let d = dim as f64;
        let oracle = 0.5 * (d * (d - 2.0)).powf(d / 2.0) * beta(d / 2.0, d / 2.0);
        assert!(rel(grad_w_sq(dim), oracle) < 1e-12, "D={dim}");
        // Pohozaev: ‖∇W‖² = ∫ W^{2D/(D−2)}.
        let p = 2.0 * d / (d - 2.0);
        let q = improper_quadrature(|r| w(dim, r).powf(p), dim, 1e-12).unwrap();
        assert!(rel(q, oracle) < 1e-10, "D={dim}");
    }
}

#[test]
fn d4_truncated_norm_antiderivative() {
    let exact = |r: f64| {
        let x = 1.0 + r * r / 8.0;
        let f = |x: f64| x.ln() + 5.0 / x - 4.0 / (x * x) + 4.0 / (3.0 * x * x * x);
        32.0 * (f(x) - f(1.0))
    };
    for r in [1.0, 10.0, 100.0, 1e3, 1e4] {
        let q = lambda_w_l2_truncated(4, r).unwrap();
        assert!(rel(q, exact(r)) < 1e-9, "R={r}: {q} vs {}", exact(r));
    }
}

#[test]
fn omega_sq_values() {
    assert!(rel(interaction_constant(4), 16.0) < 1e-15);
    assert!(rel(interaction_constant(6), 4608.0) < 1e-15);
    for dim in 5..=8 {
        let w2 = omega_sq(dim).unwrap();
        assert!(rel(w2 * lambda_w_l2_sq(dim).unwrap(), interaction_constant(dim)) < 1e-14);
    }
    assert!(rel(omega_sq(6).unwrap(), 1.25) < 1e-14);
    let s = ReducedState::at_rest(6, vec![1, 1], vec![0.1, 1.0]).unwrap();
    assert!(rel(reduced_rhs(&s).unwrap().beta[0], 0.125) < 1e-12);
}

#[test]
fn kappa_reference_values() {
    for dim in 4..=8 {
        let k = spectral::reference_eigenpair(dim).unwrap().kappa;
        assert!((k - KAPPA_REFERENCE[dim - 4]).abs() < 1e-6, "D={dim}: {k}");
    }
}

#[test]
fn interaction_force_and_energy_leading_terms() {
    let grid = RadialGrid::new(6, 8000, 40.0).unwrap();
    let mut last = f64::INFINITY;
    for l1 in [0.1, 0.05, 0.025] {
        let cfg = BubbleConfig::new(vec![1, 1], vec![l1, 1.0]).unwrap();
        let lead = force_leading_term(0, &cfg, 6);
        let defect = rel(interaction_force(0, &cfg, &grid).unwrap(), lead);
        assert!(defect < last, "force defect grows: {defect} at λ₁ = {l1}");
        last = defect;
        let e = energy_gap_measured(&cfg, &grid).unwrap();
        assert!(rel(e, energy_gap_leading_term(&cfg, 6)) < 0.5, "λ₁ = {l1}");
    }
    assert!(last < 0.1);
}

#[test]
fn fit_of_perturbed_bubble() {
    let grid = RadialGrid::new(6, 4000, 30.0).unwrap();
    let eigen = spectral::reference_eigenpair(6).unwrap();
    let y = grid.sample(|r| eigen.eval(r));
    let pert = FieldPair::new(grid.clone(), y.iter().map(|v| 1e-3 * v).collect(), vec![0.0; grid.n()]).unwrap();
    let u = synthesize(&BubbleConfig::single(1, 1.0).unwrap(), &grid).axpy(1.0, &pert).unwrap();
    let st = Fitter::with_eigen(&grid, eigen.clone())
        .unwrap()
        .fit(&u, 1, None, &BubbleConfig::single(1, 1.1).unwrap())
        .unwrap();
    assert!((st.scales[0] - 1.0).abs() <= 1e-3);
    assert!(st.ortho_residuals[0] <= 1e-10);
    let direct: f64 = [Sign::Plus, Sign::Minus]
        .into_iter()
        .map(|s| alpha_pairing(&AlphaForm::new(eigen.clone(), s, 1.0).unwrap(), &pert).unwrap())
        .sum();
    let fitted = st.a_plus[0] + st.a_minus[0];
    assert!((fitted - direct).abs() < 1e-9, "{fitted} vs {direct}");
}
