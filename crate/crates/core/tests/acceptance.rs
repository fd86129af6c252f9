//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even when
//! an earlier criterion fails; the process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nlwlab::diagnostics::{omega_errors_with, OmegaSign};
use nlwlab::evolver::{evolve_to_end, EvolutionSettings};
use nlwlab::ground_state::{self, lambda_w, lambda_w_log_slope, static_residual, under_lambda_lambda_w, w};
use nlwlab::modulation::{proximity::Proximity, Fitter};
use nlwlab::multibubble::{synthesize, BubbleConfig};
use nlwlab::quadrature::{improper_quadrature, improper_quadrature_abs};
use nlwlab::radial::{energy_norm, inner_product, FieldPair, RadialGrid};
use nlwlab::reduced::{collision_report, lyapunov_phi, lyapunov_phi_dot, omega_sq, TwoBubbleScenario};
use nlwlab::runner::analysis::finite_difference;
use nlwlab::runner::output::SERIES_FILE;
use nlwlab::runner::scenarios::{run_pde, PdeSummary};
use nlwlab::runner::{self, parse_config, RunContext, ScenarioConfig, Series};
use nlwlab::spectral::{self, alpha_pairing, assemble_linearized, negative_eigenpair, AlphaForm, Sign};
use statrs::function::gamma::gamma;

/// Frozen bound for `|Ω₁ + (D−2)/2·Ω₂| ≤ C₀·d` on the unstable-mode run (measured 0.0775).
const VIRIAL_C0: f64 = 0.1;
/// Frozen bound for `∫d_par dt ≤ C₀(d^{4/(D−2)}λ_K at both ends)` on the reduced sweep (measured 0.442).
const EJECTION_C0: f64 = 0.5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Criterion = fn() -> Result<Verdict, nlwlab::Error>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn config(text: &str) -> ScenarioConfig {
    let cfg = parse_config(text).expect("acceptance config parses");
    cfg.validate().expect("acceptance config validates");
    cfg
}

fn pde(text: &str) -> Result<(Series, PdeSummary), nlwlab::Error> {
    let (record, summary, error) = run_pde("acceptance", &config(text))?;
    if let Some(e) = error {
        return Err(e);
    }
    Ok((record.series.expect("pde runs record a series"), summary))
}

fn c1_interaction() -> Result<Verdict, nlwlab::Error> {
    let mut worst: f64 = 0.0;
    let mut notes = vec![];
    for dim in 4..=8 {
        let d = dim as f64;
        let e = 4.0 / (d - 2.0);
        let q = (d + 2.0) / (d - 2.0) * improper_quadrature(|r| lambda_w(dim, r) * w(dim, r).powf(e), dim, 1e-12)?;
        let closed = -(d - 2.0) / (2.0 * d) * (d * (d - 2.0)).powf(d / 2.0);
        worst = worst.max(rel(q, closed));
        if dim == 4 || dim == 6 {
            notes.push(format!("D={dim}: {q:.10}"));
        }
    }
    Ok(verdict(worst <= 1e-8, format!("max rel err {worst:.2e} (tol 1e-8); {}", notes.join(", "))))
}

/// `∫₀^R (ΛW)² r³ dr` at `D = 4` in closed form.
fn d4_antiderivative(r: f64) -> f64 {
    let x = 1.0 + r * r / 8.0;
    let f = |x: f64| x.ln() + 5.0 / x - 4.0 / (x * x) + 4.0 / (3.0 * x * x * x);
    32.0 * (f(x) - f(1.0))
}

fn c2_lambda_w_norm() -> Result<Verdict, nlwlab::Error> {
    let mut stated_err: f64 = 0.0;
    let mut squared_err: f64 = 0.0;
    let mut at6 = (0.0, 0.0);
    for dim in 5..=8 {
        let d = dim as f64;
        let q = improper_quadrature(|r| lambda_w(dim, r).powi(2), dim, 1e-12)?;
        let base = 2.0 * (d * d - 4.0) * (d * (d - 2.0)).powf(d / 2.0) / (d * d * (d - 4.0)) / gamma(d);
        let stated = base * gamma(1.0 + d / 2.0);
        let squared = base * gamma(1.0 + d / 2.0).powi(2);
        stated_err = stated_err.max(rel(q, stated));
        squared_err = squared_err.max(rel(q, squared));
        if dim == 6 {
            at6 = (q, stated);
        }
    }
    let slopes: Vec<f64> = [1e3, 3e3, 1e4]
        .iter()
        .map(|&r| lambda_w_log_slope(4, r))
        .collect::<Result<_, _>>()?;
    let spread = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / slopes.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let oracle = (d4_antiderivative(2e4) - d4_antiderivative(1e4)) / 2f64.ln();
    let quoted = ground_state::D4_LOG_COEFFICIENT_QUOTED;
    let pass = stated_err <= 1e-8 && squared_err <= 1e-8 && spread <= 0.01 && rel(slopes[2], quoted) <= 0.01;
    Ok(verdict(
        pass,
        format!(
            "D=5..8 vs stated closed form: max rel err {stated_err:.2e} (quadrature {:.4} vs {:.4} at D=6); \
             with Γ(1+D/2)²: {squared_err:.2e}; D=4 log slope {:.5} (R-spread {spread:.1e}), antiderivative {oracle:.5}, quoted {quoted}",
            at6.0, at6.1, slopes[2]
        ),
    ))
}

fn c3_pairing() -> Result<Verdict, nlwlab::Error> {
    let mut worst: f64 = 0.0;
    for dim in 5..=8 {
        let na = improper_quadrature(|r| under_lambda_lambda_w(dim, r).powi(2), dim, 1e-12)?.sqrt();
        let nb = improper_quadrature(|r| lambda_w(dim, r).powi(2), dim, 1e-12)?.sqrt();
        let v = improper_quadrature_abs(|r| under_lambda_lambda_w(dim, r) * lambda_w(dim, r), dim, 1e-12, 1e-13 * na * nb)?;
        worst = worst.max(v.abs() / (na * nb));
    }
    let v4 = improper_quadrature(|r| under_lambda_lambda_w(4, r) * lambda_w(4, r), 4, 1e-12)?;
    let err4 = rel(v4.abs(), 32.0);
    Ok(verdict(
        worst <= 1e-8 && err4 <= 1e-8,
        format!("D=5..8 normalized |⟨ŪΛΛW|ΛW⟩| ≤ {worst:.2e}; D=4 value {v4:.12} (rel err {err4:.1e})"),
    ))
}

fn lw_residual(dim: usize, n: usize, r_max: f64) -> Result<f64, nlwlab::Error> {
    let grid = RadialGrid::new(dim, n, r_max)?;
    let op = assemble_linearized(&grid, 1.0)?;
    let lw = grid.sample(|r| lambda_w(dim, r));
    let res = op.apply(&lw);
    let cut: Vec<f64> = res.iter().zip(grid.nodes()).map(|(x, r)| if *r <= 0.5 * r_max { *x } else { 0.0 }).collect();
    Ok(inner_product(&cut, &cut, &grid)?.sqrt())
}

fn c4_eigenpair() -> Result<Verdict, nlwlab::Error> {
    let mut ok = true;
    let mut parts = vec![];
    for dim in 4..=8 {
        let r_max = 30.0;
        let zero_ratio = lw_residual(dim, 4096, r_max)? / lw_residual(dim, 8192, r_max)?;
        let grid = RadialGrid::new(dim, 8192, r_max)?;
        let negatives = assemble_linearized(&grid, 1.0)?.count_below(0.0);
        let k: Vec<f64> = [2048, 4096, 8192]
            .iter()
            .map(|&n| Ok(negative_eigenpair(&RadialGrid::new(dim, n, r_max)?)?.kappa))
            .collect::<Result<_, nlwlab::Error>>()?;
        let richardson = (k[0] - k[1]) / (k[1] - k[2]);
        let reference = spectral::reference_eigenpair(dim)?;
        let rg = reference.grid().clone();
        let lw = rg.sample(|r| lambda_w(dim, r));
        let overlap = inner_product(reference.y(), &lw, &rg)?.abs();
        let mut bio: f64 = 0.0;
        for (s, ss) in [(Sign::Minus, 0), (Sign::Plus, 1)] {
            let form = AlphaForm::new(reference.clone(), s, 1.0)?;
            for (t, ts) in [(Sign::Minus, 0), (Sign::Plus, 1)] {
                let v = alpha_pairing(&form, &reference.mode_pair(&rg, 1.0, t))?;
                bio = bio.max((v - if ss == ts { 1.0 } else { 0.0 }).abs());
            }
        }
        let good = zero_ratio >= 3.5 && negatives == 1 && (3.5..=4.5).contains(&richardson) && overlap <= 1e-6 && bio <= 1e-8;
        ok &= good;
        parts.push(format!(
            "D={dim}: ℒΛW ratio {zero_ratio:.2}, neg {negatives}, κ Richardson {richardson:.2}, ⟨𝒴|ΛW⟩ {overlap:.1e}, biorth {bio:.1e}"
        ));
    }
    Ok(verdict(ok, parts.join("; ")))
}

fn c5_static() -> Result<Verdict, nlwlab::Error> {
    let mut min_ratio = f64::INFINITY;
    for dim in 4..=8 {
        let a = static_residual(RadialGrid::new(dim, 2048, 20.0)?.as_ref());
        let b = static_residual(RadialGrid::new(dim, 4096, 20.0)?.as_ref());
        min_ratio = min_ratio.min(a / b);
    }
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let r = 0.05 + 0.2 * k as f64;
        let s = 1.0 + r * r / 8.0;
        let w1 = -(r / 4.0) / (s * s);
        let w2 = -1.0 / (4.0 * s * s) + r * r / (8.0 * s * s * s);
        let lap = w2 + 3.0 / r * w1;
        let w3 = s.powi(-3);
        worst = worst.max((lap + w3).abs() / w3).max((ground_state::w_laplacian(4, r) + w(4, r).powi(3)).abs() / w3);
    }
    Ok(verdict(
        min_ratio >= 3.5 && worst <= 1e-13,
        format!("min residual ratio under h→h/2 {min_ratio:.3}; D=4 max |ΔW + W³|/W³ {worst:.1e} at 100 radii"),
    ))
}

const ENERGY_RUN: &str = "dim = 6\n[grid]\nn = 4096\nr_max = 50.0\n[evolution]\nt_end = 1.0\ncfl = CFL\n\
    [initial]\nbubbles = []\n[initial.packet]\namplitude = 0.5\ncenter = 24.0\nwidth = 20.0\noutgoing = false\n";

fn c6_energy() -> Result<Verdict, nlwlab::Error> {
    let (_, a) = pde(&ENERGY_RUN.replace("CFL", "0.5"))?;
    let (_, b) = pde(&ENERGY_RUN.replace("CFL", "0.25"))?;
    let ratio = a.energy_drift / b.energy_drift;
    Ok(verdict(
        a.energy_drift <= 1e-6 && (3.0..=5.0).contains(&ratio),
        format!("relative drift {:.3e} (tol 1e-6), improvement under Δt/2 {ratio:.2}", a.energy_drift),
    ))
}

fn bubble_deviation(n: usize) -> Result<f64, nlwlab::Error> {
    let grid = RadialGrid::new(6, n, 50.0)?;
    let w0 = synthesize(&BubbleConfig::single(1, 1.0)?, &grid);
    let settings = EvolutionSettings::default();
    let end = evolve_to_end(&w0, &settings)?;
    let t = settings.steps(&grid) as f64 * settings.dt(&grid);
    energy_norm(&end.axpy(-1.0, &w0)?, 0.0, 50.0 - t - 1.0)
}

fn c7_persistence() -> Result<Verdict, nlwlab::Error> {
    let e: Vec<f64> = [2048, 4096, 8192].iter().map(|&n| bubble_deviation(n)).collect::<Result<_, _>>()?;
    let (r1, r2) = (e[0] / e[1], e[1] / e[2]);
    Ok(verdict(
        e[1] <= 1e-3 && r1 >= 3.0 && r2 >= 3.0,
        format!(
            "‖u(1) − W‖_E on r ≤ r_max − t − 1: {:.3e} / {:.3e} / {:.3e} at n = 2048/4096/8192, ratios {r1:.2}, {r2:.2}",
            e[0], e[1], e[2]
        ),
    ))
}

const UNSTABLE_RUN: &str = "dim = 6\n[grid]\nn = NGRID\nr_max = 50.0\n[evolution]\nt_end = 10.0\ncfl = CFL\nrecord_stride = 16\n\
    [initial]\ny_amplitude = 1e-3\n";

fn unstable_run(n: usize, cfl: f64) -> Result<(Series, PdeSummary), nlwlab::Error> {
    pde(&UNSTABLE_RUN.replace("NGRID", &n.to_string()).replace("CFL", &cfl.to_string()))
}

fn c8_unstable_rate() -> Result<Verdict, nlwlab::Error> {
    let (_, s) = unstable_run(4096, 0.5)?;
    let kappa = spectral::reference_eigenpair(6)?.kappa;
    let Some(g) = s.unstable_growth else {
        return Ok(verdict(false, "no samples with d ≤ 0.1"));
    };
    let err = rel(g.rate_times_lambda, kappa);
    Ok(verdict(
        err <= 0.1,
        format!(
            "fitted rate·λ {:.5} vs κ {kappa:.5} (rel err {err:.3}) over t ∈ [{:.2}, {:.2}], {} samples",
            g.rate_times_lambda, g.window.0, g.window.1, g.samples
        ),
    ))
}

fn residual_of(s: &PdeSummary, name: &str) -> f64 {
    s.virial_residual_max.iter().find(|(n, _)| n == name).map_or(f64::NAN, |p| p.1)
}

fn c9_virial() -> Result<Verdict, nlwlab::Error> {
    let (_, base) = unstable_run(4096, 0.5)?;
    let (_, half_dt) = unstable_run(4096, 0.25)?;
    let (_, refined) = unstable_run(8192, 0.5)?;
    let mut ok = true;
    let mut parts = vec![];
    for name in ["kinetic", "jia-kenig"] {
        let (a, b, c) = (residual_of(&base, name), residual_of(&half_dt, name), residual_of(&refined, name));
        ok &= a / b >= 3.0;
        parts.push(format!("{name}: Δt/2 ratio {:.2} (h/2 and Δt/2 ratio {:.2})", a / b, a / c));
    }
    let c0 = base.omega_over_d_max.unwrap_or(f64::INFINITY);
    ok &= c0 <= VIRIAL_C0;
    let grid = RadialGrid::new(6, 4096, 50.0)?;
    let w0 = synthesize(&BubbleConfig::single(1, 1.0)?, &grid);
    let combo = |sign| -> Result<f64, nlwlab::Error> {
        let (o1, o2) = omega_errors_with(&w0, 5.0, 0.0, sign)?;
        Ok(o1 + 2.0 * o2)
    };
    parts.push(format!(
        "max |Ω₁+2Ω₂|/d {c0:.4} (frozen C₀ {VIRIAL_C0}); at W, ρ=5: derived sign {:.2e}, displayed sign {:.3}",
        combo(OmegaSign::Derived)?,
        combo(OmegaSign::Displayed)?
    ));
    Ok(verdict(ok, parts.join("; ")))
}

fn c10_round_trip() -> Result<Verdict, nlwlab::Error> {
    let truth = BubbleConfig::new(vec![1, -1], vec![0.05, 1.0])?;
    let eigen = spectral::reference_eigenpair(6)?;
    let state = |mu: f64| -> Result<(FieldPair, BubbleConfig), nlwlab::Error> {
        let grid = RadialGrid::new(6, 4000, 20.0 * mu)?;
        let cfg = truth.rescaled(mu)?;
        let mut u = synthesize(&cfg, &grid);
        for &l in cfg.scales() {
            u = u.axpy(1e-3, &eigen.mode_pair(&grid, l, Sign::Plus))?;
        }
        Ok((u, cfg))
    };
    let mut scale_err: f64 = 0.0;
    let mut ortho: f64 = 0.0;
    let mut fitted = vec![];
    for mu in [1.0, 0.5, 2.0] {
        let (u, cfg) = state(mu)?;
        let seed = BubbleConfig::new(cfg.signs().to_vec(), cfg.scales().iter().map(|l| l * 1.05).collect())?;
        let st = Fitter::with_eigen(u.grid(), eigen.clone())?.fit(&u, 2, None, &seed)?;
        for (a, b) in st.scales.iter().zip(cfg.scales()) {
            scale_err = scale_err.max(rel(*a, *b));
        }
        ortho = ortho.max(st.ortho_residuals.iter().cloned().fold(0.0, f64::max));
        fitted.push(st.scales);
    }
    let mut cov: f64 = 0.0;
    for (k, mu) in [(1, 0.5), (2, 2.0)] {
        for (a, b) in fitted[k].iter().zip(&fitted[0]) {
            cov = cov.max(rel(*a, mu * b));
        }
    }
    let mut single: f64 = 0.0;
    for dim in 5..=8 {
        let grid = RadialGrid::new(dim, 4000, 20.0)?;
        let e = spectral::reference_eigenpair(dim)?;
        let truth = BubbleConfig::single(-1, 1.0)?;
        let u = synthesize(&truth, &grid).axpy(1e-3, &e.mode_pair(&grid, 1.0, Sign::Plus))?;
        let st = Fitter::with_eigen(&grid, e)?.fit(&u, 1, None, &BubbleConfig::single(-1, 1.05)?)?;
        single = single.max(rel(st.scales[0], 1.0));
    }
    Ok(verdict(
        scale_err <= 1e-8 && ortho <= 1e-10 && cov <= 1e-8,
        format!(
            "signs (+, −), scales (0.05, 1) plus 1e−3 Σ𝒴⁺_λj: scale rel err {scale_err:.1e}, orthogonality {ortho:.1e}, \
             covariance μ ∈ {{0.5, 2}} {cov:.1e}; single bubble D=5..8: scale rel err {single:.1e}"
        ),
    ))
}

fn c11_proximity() -> Result<Verdict, nlwlab::Error> {
    let grid = RadialGrid::new(6, 2000, 20.0)?;
    let prox = Proximity::default();
    let t_conv = 200.0;
    let mut ok = true;
    let mut parts = vec![];
    for truth in [BubbleConfig::single(1, 1.0)?, BubbleConfig::new(vec![1, 1], vec![0.1, 1.5])?] {
        let u = synthesize(&truth, &grid);
        let n = truth.len();
        let d = prox.distance_d(&u, None, n, t_conv)?;
        let at_truth = prox.objective_at(&u, &truth, None, t_conv, 0.0)?;
        let d0 = prox.distance_dk(&u, None, 0, 1e-9, t_conv, n)?;
        let bracket = d.value >= 0.5 * at_truth && d.value <= 2.0 * at_truth;
        let agree = (d0.value - d.value).abs() <= 1e-4 * d.value.max(1e-12) + 1e-8;
        ok &= bracket && agree;
        parts.push(format!(
            "N={n}: d {:.6e}, objective at truth {at_truth:.6e}, d₀(·;0) {:.6e}",
            d.value, d0.value
        ));
    }
    Ok(verdict(ok, parts.join("; ")))
}

const COLLISION_RUN: &str = "dim = 6\n[grid]\nn = 8192\nr_max = 20.0\n[evolution]\nt_end = 0.05\nrecord_stride = 1\n\
    [[initial.bubbles]]\nsign = 1\nscale = 0.05\n[[initial.bubbles]]\nsign = 1\nscale = 1.0\n";

fn c12_reduced_vs_pde() -> Result<Verdict, nlwlab::Error> {
    let (series, _) = pde(COLLISION_RUN)?;
    let t = series.column("t").expect("t");
    let d = series.column("d").expect("d");
    let beta = series.column("beta_1").expect("beta_1");
    let l1 = series.column("lambda_1").expect("lambda_1");
    let l2 = series.column("lambda_2").expect("lambda_2");
    let fd = finite_difference(&t, &beta);
    let w2 = omega_sq(6)?;
    let band = |d_max: f64| {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for i in 0..t.len() {
            if d[i].is_finite() && d[i] <= d_max {
                let predicted = w2 / l1[i] * (l1[i] / l2[i]).powi(2);
                worst = worst.max(rel(fd[i], predicted));
                count += 1;
            }
        }
        (count, worst)
    };
    let (n05, e05) = band(0.05);
    let (n10, e10) = band(0.1);
    Ok(verdict(
        n05 >= 2 && e05 <= 0.3,
        format!(
            "d(0) = {:.6}; samples with d ≤ 0.05: {n05} (max rel err {e05:.3}); with d ≤ 0.1: {n10} (max rel err {e10:.3}); predicted β₁' {:.4}",
            d[0],
            w2 / 0.05 * 0.0025
        ),
    ))
}

fn sweep() -> Vec<TwoBubbleScenario> {
    (0..10)
        .map(|i| {
            let mut sc = TwoBubbleScenario::at_rest(6, [1, 1], [0.02 + 0.008 * i as f64, 1.0], 100.0);
            sc.beta = [0.002 * (i as f64 - 4.5) / 4.5, 0.0];
            sc.a_minus = [1e-3, 1e-3];
            sc.a_plus = [if i % 2 == 0 { 1e-3 } else { -1e-3 }, 0.0];
            sc
        })
        .collect()
}

fn c13_lyapunov() -> Result<Verdict, nlwlab::Error> {
    let runs: Vec<_> = sweep().iter().map(collision_report).collect::<Result<_, _>>()?;
    let threshold = [0.0, 1e-3, 1e-2, 1e-1, 1.0]
        .into_iter()
        .find(|&c1| runs.iter().all(|(_, tr)| tr.states.iter().all(|s| lyapunov_phi_dot(s, c1) >= 0.0)));
    let c1 = 1.0;
    let mut ok = threshold.is_some_and(|t| t <= c1);
    let mut c2 = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    for (m, tr) in &runs {
        let phi: Vec<f64> = tr.states.iter().map(|s| lyapunov_phi(s, c1)).collect();
        ok &= phi.windows(2).all(|p| p[1] >= p[0] - 1e-12 * p[0].abs().max(1e-12));
        ok &= m.no_return && m.min_phi_dot >= 0.0;
        c2 = c2.min(m.c2);
        worst_ratio = worst_ratio.max(m.ejection_ratio);
    }
    ok &= c2 > 0.0 && worst_ratio <= EJECTION_C0;
    Ok(verdict(
        ok,
        format!(
            "10 runs: C₁ threshold {:?}, C₁ = {c1}, c₂ = {c2:.4}, max ∫d_par/(ends) {worst_ratio:.4} (frozen C₀ {EJECTION_C0}), no-return on all",
            threshold
        ),
    ))
}

fn c14_determinism() -> Result<Verdict, nlwlab::Error> {
    let dir = tempfile::tempdir().map_err(|e| nlwlab::Error::Io {
        path: std::env::temp_dir(),
        source: e,
    })?;
    let mut ok = true;
    let mut parts = vec![];
    for (name, text) in [
        ("evolve", "dim = 6\nseed = 7\n[grid]\nn = 1024\nr_max = 20.0\n[evolution]\nt_end = 0.5\n[initial]\ny_amplitude = 1e-3\n"),
        ("reduced", "dim = 6\nseed = 7\n[reduced]\nsigns = [1, 1]\nlambda = [0.05, 1.0]\nt_end = 10.0\n"),
    ] {
        let scenario = runner::scenario_by_name(name)?;
        let ctx = RunContext {
            config: config(text),
            input: None,
        };
        let a = runner::run_and_emit(scenario.as_ref(), &ctx, &dir.path().join(format!("{name}-a")))?.1;
        let b = runner::run_and_emit(scenario.as_ref(), &ctx, &dir.path().join(format!("{name}-b")))?.1;
        let (ha, hb) = (a.hash_of(SERIES_FILE), b.hash_of(SERIES_FILE));
        ok &= ha.is_some() && ha == hb;
        let shown = ha.map_or("missing".to_string(), |h| h.chars().take(16).collect());
        parts.push(format!("{name}: {shown}"));
    }
    Ok(verdict(ok, format!("series.csv hashes identical across reruns ({})", parts.join(", "))))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 14] = [
        ("interaction constant", c1_interaction),
        ("‖ΛW‖² closed form and D=4 log growth", c2_lambda_w_norm),
        ("⟨ŪΛΛW|ΛW⟩ pairing", c3_pairing),
        ("zero mode and negative eigenpair", c4_eigenpair),
        ("static residual", c5_static),
        ("PDE energy conservation", c6_energy),
        ("bubble persistence", c7_persistence),
        ("unstable-mode rate", c8_unstable_rate),
        ("virial identities", c9_virial),
        ("modulation round-trip", c10_round_trip),
        ("proximity functions", c11_proximity),
        ("reduced vs PDE β₁'", c12_reduced_vs_pde),
        ("Lyapunov monotonicity and no-return", c13_lyapunov),
        ("determinism", c14_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} [{name}] ({:.1} s): {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
