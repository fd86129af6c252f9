//! Scenarios behind a common trait, registered by name: each turns a
//! configuration into a [`RunRecord`].

use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::diagnostics::{mu_scale, mu_star, OmegaSign, VirialObserver, identity_by_name, identity_names};
use crate::error::{Error, Result};
use crate::evolver::{energy_drift, evolve, modified_energy_drift, observation_radius, Observer};
use crate::ground_state::{self, closed_form_constants};
use crate::modulation::{modulation_distance, scheme_for_dim, Fitter, ModulationScheme, RefinedContext};
use crate::multibubble::{synthesize, BubbleConfig};
use crate::radial::{energy_norm, FieldPair, RadialGrid};
use crate::reduced::{collision_report, integrate_reduced, lyapunov_phi, lyapunov_phi_dot, ReducedState, TwoBubbleScenario};
use crate::spectral::{self, Sign};

use super::analysis::{self, a_minus_column, a_plus_column, lambda_column};
use super::config::{ModeDirection, ScenarioConfig};
use super::constants::verify_constants;
use super::output::{plot_script, RunRecord, Series, METADATA_FILE, SERIES_FILE};

/// Cut-off construction constant `c` and radius `R` of the refined parameters.
pub const REFINED_C: f64 = 0.01;
pub const REFINED_R: f64 = 10.0;
/// Window for the unstable-mode growth fit.
pub const GROWTH_WINDOW_D: f64 = 0.1;

#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub config: ScenarioConfig,
    /// Directory of a previous run (for `analyze`).
    pub input: Option<PathBuf>,
}

/// A record plus the downstream error that ended the run early, if any.
#[derive(Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub error: Option<Error>,
}

impl RunOutcome {
    fn complete(record: RunRecord) -> Self {
        Self { record, error: None }
    }

    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, Error::exit_code)
    }
}

pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome>;
}

pub fn scenario_names() -> &'static [&'static str] {
    &["verify-constants", "eigen", "evolve", "collide", "reduced", "analyze"]
}

pub fn scenario_by_name(name: &str) -> Result<Box<dyn Scenario>> {
    match name {
        "verify-constants" => Ok(Box::new(VerifyConstants)),
        "eigen" => Ok(Box::new(Eigen)),
        "evolve" => Ok(Box::new(Evolve)),
        "collide" => Ok(Box::new(Collide)),
        "reduced" => Ok(Box::new(Reduced)),
        "analyze" => Ok(Box::new(Analyze)),
        other => Err(Error::ConfigValidation(vec![format!(
            "unknown scenario {other:?}; known: {:?}",
            scenario_names()
        )])),
    }
}

fn base_metadata(name: &str, cfg: &ScenarioConfig) -> serde_json::Value {
    json!({
        "program": "nlwlab",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": name,
        "config": cfg,
    })
}

fn error_json(e: &Error) -> serde_json::Value {
    json!({ "message": e.to_string(), "exit_code": e.exit_code() })
}

/// Kept every `⌈len/max⌉`-th row (and always the last).
fn thin<T: Clone>(v: &[T], max: usize) -> Vec<T> {
    if v.len() <= max {
        return v.to_vec();
    }
    let stride = v.len().div_ceil(max - 1);
    let mut out: Vec<T> = v.iter().step_by(stride).cloned().collect();
    if (v.len() - 1) % stride != 0 {
        out.push(v[v.len() - 1].clone());
    }
    out
}

pub struct VerifyConstants;

impl Scenario for VerifyConstants {
    fn name(&self) -> &'static str {
        "verify-constants"
    }
    fn describe(&self) -> &'static str {
        "quadrature checks of the closed-form constants"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let checks = verify_constants(ctx.config.dim)?;
        let all = super::constants::all_pass(&checks);
        let mut meta = base_metadata(self.name(), &ctx.config);
        meta["checks"] = serde_json::to_value(&checks).expect("serializable");
        meta["all_pass"] = json!(all);
        meta["constants"] = serde_json::to_value(closed_form_constants(ctx.config.dim)?).expect("serializable");
        let record = RunRecord {
            metadata: meta,
            ..Default::default()
        };
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !(c.pass || c.informational))
            .map(|c| c.name.clone())
            .collect();
        Ok(RunOutcome {
            record,
            error: (!failed.is_empty()).then(|| Error::DiscretizationAnomaly(format!("failed checks: {}", failed.join(", ")))),
        })
    }
}

pub struct Eigen;

impl Scenario for Eigen {
    fn name(&self) -> &'static str {
        "eigen"
    }
    fn describe(&self) -> &'static str {
        "negative eigenpair of the linearized operator on the configured grid"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let cfg = &ctx.config;
        let grid = RadialGrid::new(cfg.dim, cfg.grid.n, cfg.grid.r_max)?;
        let pair = spectral::negative_eigenpair(&grid)?;
        let op = spectral::assemble_linearized(&grid, 1.0)?;
        let negative = op.count_below(0.0);
        let lw = grid.sample(|r| ground_state::lambda_w(cfg.dim, r));
        let lw_norm = crate::radial::dot(&lw, &lw, &grid).sqrt();
        let overlap = crate::radial::dot(pair.y(), &lw, &grid) / lw_norm;
        let richardson = if grid.n() % 2 == 0 {
            Some(spectral::richardson_eigenpair(&grid)?.kappa)
        } else {
            None
        };
        let mut series = Series::new(vec!["r".into(), "Y".into(), "LambdaW".into()]);
        for (i, r) in grid.nodes().iter().enumerate() {
            series.rows.push(vec![*r, pair.y()[i], lw[i]]);
        }
        let mut meta = base_metadata(self.name(), cfg);
        meta["measured"] = json!({
            "kappa": pair.kappa,
            "kappa_richardson": richardson,
            "eigen_residual": pair.residual,
            "negative_eigenvalues": negative,
            "y_lambda_w_overlap": overlap,
        });
        let plot = plot_script(&series, &[("negative eigenfunction", vec!["Y".into()])]);
        Ok(RunOutcome::complete(RunRecord {
            metadata: meta,
            series: Some(series),
            intervals: None,
            plot: Some(plot),
        }))
    }
}

/// Initial data: bubbles, plus the optional `δ·𝒴^±_λ` perturbation and free packet.
pub fn initial_data(cfg: &ScenarioConfig) -> Result<FieldPair> {
    let grid = RadialGrid::new(cfg.dim, cfg.grid.n, cfg.grid.r_max)?;
    let bubbles = cfg.bubble_config()?;
    let mut u = synthesize(&bubbles, &grid);
    if let Some(delta) = cfg.initial.y_amplitude {
        let j = cfg.initial.y_bubble.unwrap_or(bubbles.len() - 1);
        let eigen = spectral::reference_eigenpair(cfg.dim)?;
        let sign = match cfg.initial.y_direction {
            ModeDirection::Plus => Sign::Plus,
            ModeDirection::Minus => Sign::Minus,
        };
        u = u.axpy(delta, &eigen.mode_pair(&grid, bubbles.scales()[j], sign))?;
    }
    if let Some(p) = &cfg.initial.packet {
        let (a, c, w, out) = (p.amplitude, p.center, p.width, p.outgoing);
        let packet = FieldPair::from_fn(
            grid.clone(),
            |r| a * crate::cutoff::mollifier((r - c) / w),
            |r| {
                if out {
                    -a / w * crate::cutoff::mollifier_deriv((r - c) / w)
                } else {
                    0.0
                }
            },
        );
        u = u.axpy(1.0, &packet)?;
    }
    Ok(u)
}

/// Per-record modulation fit. Columns: `lambda_j`, `a_minus_j`, `a_plus_j`,
/// refined `xi_j`, `beta_j`, then `d`, `d_ext`, `mu`, `ortho_max`.
struct FitObserver {
    fitter: Fitter,
    seed: BubbleConfig,
    nu: Option<f64>,
    margin: f64,
    rho: f64,
    kappa1: f64,
    scheme: Option<(Box<dyn ModulationScheme>, RefinedContext)>,
    failures: usize,
    first_failure: Option<String>,
}

impl FitObserver {
    fn new(grid: &Arc<RadialGrid>, cfg: &ScenarioConfig) -> Result<Self> {
        let scheme = match (scheme_for_dim(cfg.dim), RefinedContext::new(cfg.dim, REFINED_C, REFINED_R, cfg.analysis.l)) {
            (Ok(s), Ok(c)) => Some((s, c)),
            (Err(e), _) | (_, Err(e)) => {
                log::warn!("refined parameters unavailable: {e}");
                None
            }
        };
        Ok(Self {
            fitter: Fitter::new(grid)?,
            seed: cfg.bubble_config()?,
            nu: cfg.analysis.nu,
            margin: cfg.analysis.margin,
            rho: cfg.analysis.rho,
            kappa1: cfg.analysis.kappa1_fraction * ground_state::grad_w_sq(cfg.dim).sqrt(),
            scheme,
            failures: 0,
            first_failure: None,
        })
    }

    fn k(&self) -> usize {
        self.seed.len()
    }

    fn fail(&mut self, t: f64, e: Error) {
        log::warn!("fit at t = {t}: {e}");
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(format!("t = {t}: {e}"));
        }
    }
}

impl Observer for FitObserver {
    fn columns(&self) -> Vec<String> {
        let k = self.k();
        let mut c = vec![];
        for j in 0..k {
            c.extend([lambda_column(j), a_minus_column(j), a_plus_column(j)]);
        }
        for j in 0..k {
            c.extend([format!("xi_{}", j + 1), format!("beta_{}", j + 1)]);
        }
        c.extend(["d", "d_ext", "mu", "ortho_max"].map(String::from));
        c
    }

    fn observe(&mut self, t: f64, state: &FieldPair) -> Result<Vec<f64>> {
        let k = self.k();
        let width = 5 * k + 4;
        let grid = state.grid().clone();
        let r_obs = observation_radius(&grid, t, self.margin);
        let mu_window = self.nu.unwrap_or(r_obs).min(r_obs);
        let mu = if mu_window > 0.0 {
            mu_scale(state, mu_window, self.kappa1).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let st = match self.fitter.fit(state, k, self.nu, &self.seed) {
            Ok(st) => st,
            Err(e) => {
                self.fail(t, e);
                let mut row = vec![f64::NAN; width];
                row[width - 2] = mu;
                return Ok(row);
            }
        };
        self.seed = st.config();
        let mut row = Vec::with_capacity(width);
        for j in 0..k {
            row.extend([st.scales[j], st.a_minus[j], st.a_plus[j]]);
        }
        let refined = self.scheme.as_ref().and_then(|(s, c)| match st.localized(r_obs).and_then(|l| s.refine(&l, c)) {
            Ok(p) => Some(p),
            Err(e) => {
                log::debug!("refined parameters at t = {t}: {e}");
                None
            }
        });
        for j in 0..k {
            let xi = refined.as_ref().and_then(|p| p.xi.get(j).copied()).unwrap_or(f64::NAN);
            let beta = refined.as_ref().and_then(|p| p.beta.get(j).copied()).unwrap_or(f64::NAN);
            row.extend([xi, beta]);
        }
        let d = if r_obs > 0.0 {
            modulation_distance(&st, r_obs).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let d_ext = if r_obs > self.rho {
            energy_norm(&st.g, self.rho, r_obs).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let ortho = st.ortho_residuals.iter().cloned().fold(0.0, f64::max);
        row.extend([d, d_ext, mu, ortho]);
        Ok(row)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeSummary {
    pub dt: f64,
    pub records: usize,
    pub t_final: f64,
    pub energy_drift: f64,
    pub modified_energy_drift: f64,
    pub fit_failures: usize,
    pub first_fit_failure: Option<String>,
    pub ortho_residual_max: Option<f64>,
    pub final_scales: Option<Vec<f64>>,
    pub virial_residual_max: Vec<(String, f64)>,
    /// `max |Ω₁ + (D−2)/2·Ω₂| / d` over records with `d ≤ 0.1`.
    pub omega_over_d_max: Option<f64>,
    pub unstable_growth: Option<analysis::GrowthSummary>,
    pub kappa_reference: Option<f64>,
    pub omega_sq: Option<f64>,
    pub intervals: usize,
}

fn column_max(series: &Series, name: &str) -> Option<f64> {
    series
        .column(name)
        .map(|v| v.into_iter().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max))
        .filter(|m| m.is_finite())
}

/// Evolve, fit and post-process one PDE scenario.
pub fn run_pde(name: &str, cfg: &ScenarioConfig) -> Result<(RunRecord, PdeSummary, Option<Error>)> {
    let u0 = initial_data(cfg)?;
    let grid = u0.grid().clone();
    let settings = cfg.evolution_settings();
    settings.validate()?;
    let identities = identity_names()
        .iter()
        .map(|n| identity_by_name(n, OmegaSign::Derived))
        .collect::<Result<Vec<_>>>()?;
    let mut virial = VirialObserver::fixed(identities, cfg.analysis.rho);
    let mut fit = if cfg.analysis.fit && !cfg.initial.bubbles.is_empty() {
        Some(FitObserver::new(&grid, cfg)?)
    } else {
        None
    };
    let (traj, error) = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut virial];
        if let Some(f) = fit.as_mut() {
            observers.push(f);
        }
        match evolve(&u0, &settings, &mut observers) {
            Ok(t) => (t, None),
            Err((t, e)) => (t, Some(e)),
        }
    };
    let mut series = Series {
        columns: traj.columns.clone(),
        rows: traj.rows.clone(),
    };
    let signs: Vec<i8> = cfg.initial.bubbles.iter().map(|b| b.sign).collect();
    if fit.is_some() {
        analysis::append_beta_and_phi(&mut series, cfg.dim, &signs, cfg.analysis.c1)?;
        let mu = series.column("mu").unwrap_or_default();
        if mu.iter().all(|m| m.is_finite()) && !mu.is_empty() {
            let dt_rec = traj.dt * cfg.evolution.record_stride as f64;
            series.push_column("mu_star", &mu_star(&mu, dt_rec))?;
        }
    }
    let virial_residual_max = analysis::append_virial_residuals(&mut series)?;
    let intervals = analysis::intervals_from_series(&series, cfg.analysis.epsilon, cfg.analysis.eta)?;
    let omega_over_d_max = match (series.column("omega_combo"), series.column("d")) {
        (Some(o), Some(d)) => o
            .iter()
            .zip(&d)
            .filter(|(o, d)| d.is_finite() && **d <= GROWTH_WINDOW_D && **d > 0.0 && o.is_finite())
            .map(|(o, d)| o.abs() / d)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x)))),
        _ => None,
    };
    let k = cfg.initial.bubbles.len();
    let final_scales = fit.as_ref().and_then(|_| {
        let last = series.rows.last()?;
        let v: Vec<f64> = (0..k)
            .map(|j| {
                let c = series.columns.iter().position(|c| *c == lambda_column(j)).expect("present");
                last[c]
            })
            .collect();
        v.iter().all(|x| x.is_finite()).then_some(v)
    });
    let summary = PdeSummary {
        dt: traj.dt,
        records: series.rows.len(),
        t_final: series.column("t").and_then(|t| t.last().copied()).unwrap_or(0.0),
        energy_drift: energy_drift(&traj),
        modified_energy_drift: modified_energy_drift(&traj),
        fit_failures: fit.as_ref().map_or(0, |f| f.failures),
        first_fit_failure: fit.as_ref().and_then(|f| f.first_failure.clone()),
        ortho_residual_max: column_max(&series, "ortho_max"),
        final_scales,
        virial_residual_max,
        omega_over_d_max,
        unstable_growth: analysis::unstable_growth(&series, GROWTH_WINDOW_D),
        kappa_reference: spectral::reference_eigenpair(cfg.dim).ok().map(|e| e.kappa),
        omega_sq: closed_form_constants(cfg.dim)?.omega_sq,
        intervals: intervals.len(),
    };
    let mut meta = base_metadata(name, cfg);
    meta["constants"] = serde_json::to_value(closed_form_constants(cfg.dim)?).expect("serializable");
    meta["measured"] = serde_json::to_value(&summary).expect("serializable");
    meta["error"] = error.as_ref().map_or(serde_json::Value::Null, error_json);
    let lam: Vec<String> = (0..k).map(lambda_column).collect();
    let amp: Vec<String> = (0..k).flat_map(|j| [a_minus_column(j), a_plus_column(j)]).collect();
    let res: Vec<String> = identity_names().iter().map(|n| format!("{n}_residual")).collect();
    let plot = plot_script(
        &series,
        &[
            ("d", vec!["d".into(), "d_ext".into()]),
            ("scales", lam),
            ("unstable and stable components", amp),
            ("phi", vec!["phi".into()]),
            ("virial residual", res),
            ("energy drift", vec!["E_drift".into()]),
        ],
    );
    Ok((
        RunRecord {
            metadata: meta,
            series: Some(series),
            intervals: Some(intervals),
            plot: Some(plot),
        },
        summary,
        error,
    ))
}

pub struct Evolve;

impl Scenario for Evolve {
    fn name(&self) -> &'static str {
        "evolve"
    }
    fn describe(&self) -> &'static str {
        "evolve the configured data with per-record modulation fit and virial diagnostics"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let (record, _, error) = run_pde(self.name(), &ctx.config)?;
        Ok(RunOutcome { record, error })
    }
}

pub struct Collide;

impl Scenario for Collide {
    fn name(&self) -> &'static str {
        "collide"
    }
    fn describe(&self) -> &'static str {
        "two-bubble PDE run with the reduced-model prediction alongside"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let cfg = &ctx.config;
        if cfg.initial.bubbles.len() != 2 {
            return Err(Error::ConfigValidation(vec![format!(
                "collide needs exactly two bubbles, got {}",
                cfg.initial.bubbles.len()
            )]));
        }
        let (mut record, _, error) = run_pde(self.name(), cfg)?;
        let b = &cfg.initial.bubbles;
        let signs = [b[0].sign, b[1].sign];
        let lambda = [b[0].scale, b[1].scale];
        let reduced = if cfg.dim >= 5 {
            let e = (cfg.dim as f64 - 2.0) / 2.0;
            let w2 = crate::reduced::omega_sq(cfg.dim)?;
            let predicted = (signs[0] * signs[1]) as f64 * w2 / lambda[0] * (lambda[0] / lambda[1]).powf(e);
            let mut sc = TwoBubbleScenario::at_rest(cfg.dim, signs, lambda, cfg.reduced.t_end);
            sc.eta0 = cfg.reduced.eta0;
            sc.c1 = cfg.reduced.c1;
            match collision_report(&sc) {
                Ok((m, _)) => json!({ "beta1_prime_t0": predicted, "metrics": m }),
                Err(e) => json!({ "beta1_prime_t0": predicted, "error": error_json(&e) }),
            }
        } else {
            json!({ "note": "reduced model not defined for D = 4" })
        };
        record.metadata["reduced_prediction"] = reduced;
        Ok(RunOutcome { record, error })
    }
}

pub struct Reduced;

fn reduced_state(cfg: &ScenarioConfig) -> Result<ReducedState> {
    cfg.validate_reduced()?;
    let r = &cfg.reduced;
    let mut s = ReducedState::at_rest(cfg.dim, r.signs.clone(), r.lambda.clone())?;
    if let Some(b) = &r.beta {
        s.beta = b.clone();
    }
    if let Some(a) = &r.a_minus {
        s.a_minus = a.clone();
    }
    if let Some(a) = &r.a_plus {
        s.a_plus = a.clone();
    }
    Ok(s)
}

impl Scenario for Reduced {
    fn name(&self) -> &'static str {
        "reduced"
    }
    fn describe(&self) -> &'static str {
        "integrate the reduced bubble dynamics and report the collision metrics"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let cfg = &ctx.config;
        let s0 = reduced_state(cfg)?;
        let r = &cfg.reduced;
        let traj = integrate_reduced(&s0, r.t_end, r.a_threshold)?;
        let k = s0.k();
        let mut columns = vec!["t".to_string()];
        for prefix in ["lambda", "beta", "a_minus", "a_plus"] {
            columns.extend((0..k).map(|j| format!("{prefix}_{}", j + 1)));
        }
        columns.extend(["d_par", "phi", "phi_dot", "d_par_integral"].map(String::from));
        let mut series = Series::new(columns);
        let idx: Vec<usize> = (0..traj.t.len()).collect();
        for i in thin(&idx, r.max_rows) {
            let s = &traj.states[i];
            let mut row = vec![traj.t[i]];
            row.extend(&s.lambda);
            row.extend(&s.beta);
            row.extend(&s.a_minus);
            row.extend(&s.a_plus);
            row.extend([s.d_par(), lyapunov_phi(s, r.c1), lyapunov_phi_dot(s, r.c1), traj.d_par_integral[i]]);
            series.rows.push(row);
        }
        let mut meta = base_metadata(self.name(), cfg);
        meta["omega_sq"] = json!(s0.omega_sq);
        meta["kappa"] = json!(s0.kappa);
        meta["events"] = serde_json::to_value(&traj.events).expect("serializable");
        meta["steps"] = json!(traj.t.len());
        if k == 2 {
            let sc = TwoBubbleScenario {
                dim: cfg.dim,
                signs: [s0.signs[0], s0.signs[1]],
                lambda: [s0.lambda[0], s0.lambda[1]],
                beta: [s0.beta[0], s0.beta[1]],
                a_minus: [s0.a_minus[0], s0.a_minus[1]],
                a_plus: [s0.a_plus[0], s0.a_plus[1]],
                t_end: r.t_end,
                eta0: r.eta0,
                c1: r.c1,
            };
            meta["collision"] = serde_json::to_value(collision_report(&sc)?.0).expect("serializable");
        }
        let lam: Vec<String> = (0..k).map(|j| format!("lambda_{}", j + 1)).collect();
        let amp: Vec<String> = (0..k)
            .flat_map(|j| [format!("a_minus_{}", j + 1), format!("a_plus_{}", j + 1)])
            .collect();
        let plot = plot_script(
            &series,
            &[
                ("d_par", vec!["d_par".into()]),
                ("scales", lam),
                ("unstable and stable components", amp),
                ("phi", vec!["phi".into(), "phi_dot".into()]),
            ],
        );
        Ok(RunOutcome::complete(RunRecord {
            metadata: meta,
            series: Some(series),
            intervals: None,
            plot: Some(plot),
        }))
    }
}

pub struct Analyze;

impl Scenario for Analyze {
    fn name(&self) -> &'static str {
        "analyze"
    }
    fn describe(&self) -> &'static str {
        "recompute collision intervals, virial residuals and growth rates from a previous run"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let dir = ctx
            .input
            .as_ref()
            .ok_or_else(|| Error::ConfigValidation(vec!["analyze needs an input directory".into()]))?;
        let path = dir.join(SERIES_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut series = Series::from_csv(&text)?;
        let source_meta: Option<serde_json::Value> = std::fs::read(dir.join(METADATA_FILE))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok());
        let an = &ctx.config.analysis;
        let intervals = analysis::intervals_from_series(&series, an.epsilon, an.eta)?;
        let residuals = if series.columns.iter().any(|c| c.ends_with("_residual")) {
            vec![]
        } else {
            analysis::append_virial_residuals(&mut series)?
        };
        let mut meta = base_metadata(self.name(), &ctx.config);
        meta["input"] = json!(dir);
        meta["source_scenario"] = source_meta.as_ref().map_or(serde_json::Value::Null, |m| m["scenario"].clone());
        meta["measured"] = json!({
            "records": series.rows.len(),
            "bubbles": analysis::bubble_count(&series),
            "intervals": intervals.len(),
            "virial_residual_max": residuals,
            "unstable_growth": analysis::unstable_growth(&series, GROWTH_WINDOW_D),
        });
        Ok(RunOutcome::complete(RunRecord {
            metadata: meta,
            series: None,
            intervals: Some(intervals),
            plot: None,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        for n in scenario_names() {
            assert_eq!(scenario_by_name(n).unwrap().name(), *n);
        }
        assert!(scenario_by_name("nope").is_err());
    }

    #[test]
    fn thinning_keeps_ends() {
        let v: Vec<usize> = (0..101).collect();
        let t = thin(&v, 11);
        assert_eq!(t.first(), Some(&0));
        assert_eq!(t.last(), Some(&100));
        assert!(t.len() <= 12);
        assert_eq!(thin(&v[..5], 10), v[..5].to_vec());
    }

    #[test]
    fn two_bubble_document_synthesizes_exactly() {
        let cfg = super::super::config::parse_config(
            "dim = 6\n[grid]\nn = 1000\nr_max = 20\n[[initial.bubbles]]\nsign = 1\nscale = 0.05\n[[initial.bubbles]]\nsign = 1\nscale = 1.0\n",
        )
        .unwrap();
        let u = initial_data(&cfg).unwrap();
        let grid = RadialGrid::new(6, 1000, 20.0).unwrap();
        let direct = synthesize(&BubbleConfig::new(vec![1, 1], vec![0.05, 1.0]).unwrap(), &grid);
        assert_eq!(u.u, direct.u);
        assert_eq!(u.udot, direct.udot);
    }

    #[test]
    fn small_evolve_run() {
        let mut cfg = ScenarioConfig::default();
        cfg.grid.n = 800;
        cfg.grid.r_max = 30.0;
        cfg.evolution.t_end = 0.3;
        cfg.evolution.record_stride = 4;
        let out = Evolve.run(&RunContext { config: cfg, input: None }).unwrap();
        assert!(out.error.is_none());
        let s = out.record.series.as_ref().unwrap();
        let lam = s.column("lambda_1").unwrap();
        assert!(lam.iter().all(|l| (l - 1.0).abs() < 1e-2), "{lam:?}");
        assert_eq!(out.record.metadata["measured"]["fit_failures"], 0);
    }
}
