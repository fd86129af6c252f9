//! Scenario configuration: sectioned TOML with defaults and validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::EvolutionSettings;
use crate::multibubble::BubbleConfig;
use crate::radial::{MAX_DIM, MIN_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub dim: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub evolution: EvolutionSpec,
    pub initial: InitialSpec,
    pub analysis: AnalysisSpec,
    pub reduced: ReducedSpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n: usize,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSpec {
    pub cfl: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub nonlinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleSpec {
    pub sign: i8,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeDirection {
    Plus,
    Minus,
}

/// `A·φ((r − center)/width)` with the standard mollifier `φ`; `outgoing` sets `u_t = −∂_r u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub outgoing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub bubbles: Vec<BubbleSpec>,
    /// Amplitude `δ` of the added `δ·𝒴^±_{λ}` perturbation.
    pub y_amplitude: Option<f64>,
    /// Bubble (0-based) whose scale is used for the perturbation; default the outermost.
    pub y_bubble: Option<usize>,
    pub y_direction: ModeDirection,
    pub packet: Option<PacketSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Run the per-record modulation fit.
    pub fit: bool,
    /// Number of bubbles `N` for the fit and for `d`; default the number of initial bubbles.
    pub n_bubbles: Option<usize>,
    /// Cut-off radius `ν` for `χ_ν 𝒖`; `None` fits the whole state.
    pub nu: Option<f64>,
    /// `κ₁` as a fraction of `‖W‖_E`.
    pub kappa1_fraction: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// Window parameter `L` of the refined parameters.
    pub l: f64,
    /// Virial cut-off radius `ρ`.
    pub rho: f64,
    /// Weight `C₁` of the unstable components in `φ`.
    pub c1: f64,
    /// Distance kept from the outer-boundary light cone when measuring `d`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReducedSpec {
    pub signs: Vec<i8>,
    pub lambda: Vec<f64>,
    pub beta: Option<Vec<f64>>,
    pub a_minus: Option<Vec<f64>>,
    pub a_plus: Option<Vec<f64>>,
    pub t_end: f64,
    pub eta0: f64,
    pub c1: f64,
    pub a_threshold: f64,
    /// Largest number of CSV rows; longer trajectories are thinned uniformly in step index.
    pub max_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dim: 6,
            seed: 0,
            grid: GridSpec::default(),
            evolution: EvolutionSpec::default(),
            initial: InitialSpec::default(),
            analysis: AnalysisSpec::default(),
            reduced: ReducedSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 4096, r_max: 50.0 }
    }
}

impl Default for EvolutionSpec {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            t_end: 1.0,
            record_stride: 16,
            nonlinear: true,
        }
    }
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            bubbles: vec![BubbleSpec { sign: 1, scale: 1.0 }],
            y_amplitude: None,
            y_bubble: None,
            y_direction: ModeDirection::Plus,
            packet: None,
        }
    }
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            fit: true,
            n_bubbles: None,
            nu: None,
            kappa1_fraction: 0.1,
            epsilon: 0.05,
            eta: 0.2,
            l: 10.0,
            rho: 10.0,
            c1: 1.0,
            margin: 1.0,
        }
    }
}

impl Default for ReducedSpec {
    fn default() -> Self {
        Self {
            signs: vec![1, 1],
            lambda: vec![0.05, 1.0],
            beta: None,
            a_minus: None,
            a_plus: None,
            t_end: 100.0,
            eta0: crate::reduced::DEFAULT_ETA0,
            c1: 1.0,
            a_threshold: crate::reduced::DEFAULT_A_THRESHOLD,
            max_rows: 100_000,
        }
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn finite_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ScenarioConfig {
    /// Collect every violated guard.
    pub fn validate(&self) -> Result<()> {
        let mut e: Vec<String> = vec![];
        if !(MIN_DIM..=MAX_DIM).contains(&self.dim) {
            e.push(format!("dim = {} must lie in {MIN_DIM}..={MAX_DIM}", self.dim));
        }
        if self.grid.n < 16 {
            e.push(format!("grid.n = {} must be at least 16", self.grid.n));
        }
        if !finite_positive(self.grid.r_max) {
            e.push(format!("grid.r_max = {} must be positive", self.grid.r_max));
        }
        let ev = &self.evolution;
        if !(ev.cfl > 0.0 && ev.cfl <= 1.0) {
            e.push(format!("evolution.cfl = {} must lie in (0, 1]", ev.cfl));
        }
        if !(ev.t_end.is_finite() && ev.t_end >= 0.0) {
            e.push(format!("evolution.t_end = {} must be non-negative", ev.t_end));
        }
        if ev.record_stride == 0 {
            e.push("evolution.record_stride must be at least 1".into());
        }
        let init = &self.initial;
        let signs: Vec<i8> = init.bubbles.iter().map(|b| b.sign).collect();
        let scales: Vec<f64> = init.bubbles.iter().map(|b| b.scale).collect();
        if let Err(err) = BubbleConfig::new(signs, scales.clone()) {
            e.push(format!("initial.bubbles: {err}"));
        }
        if let Some(last) = scales.last() {
            if *last >= self.grid.r_max {
                e.push(format!("initial.bubbles: scale {last} is not inside r_max = {}", self.grid.r_max));
            }
        }
        if let Some(a) = init.y_amplitude {
            if !a.is_finite() {
                e.push("initial.y_amplitude must be finite".into());
            }
            if init.bubbles.is_empty() {
                e.push("initial.y_amplitude needs at least one bubble".into());
            }
        }
        if let Some(j) = init.y_bubble {
            if j >= init.bubbles.len() {
                e.push(format!("initial.y_bubble = {j} is out of range"));
            }
        }
        if let Some(p) = &init.packet {
            if !p.amplitude.is_finite() || !finite_positive(p.width) || !(p.center.is_finite() && p.center >= 0.0) {
                e.push("initial.packet needs finite amplitude, width > 0 and center ≥ 0".into());
            } else if p.center + p.width + ev.t_end > self.grid.r_max {
                e.push(format!(
                    "initial.packet: support plus t_end reaches r_max = {}",
                    self.grid.r_max
                ));
            }
        }
        let an = &self.analysis;
        let n_fit = an.n_bubbles.unwrap_or(init.bubbles.len());
        if n_fit > crate::modulation::proximity::MAX_BUBBLES {
            e.push(format!("analysis.n_bubbles = {n_fit} exceeds {}", crate::modulation::proximity::MAX_BUBBLES));
        }
        if an.fit && n_fit != init.bubbles.len() {
            e.push("analysis.n_bubbles must equal the number of initial bubbles when fitting".into());
        }
        if let Some(nu) = an.nu {
            if !(finite_positive(nu) && nu <= self.grid.r_max) {
                e.push(format!("analysis.nu = {nu} must lie in (0, r_max]"));
            }
        }
        if !(an.kappa1_fraction > 0.0 && an.kappa1_fraction < 0.5) {
            e.push(format!("analysis.kappa1_fraction = {} must lie in (0, 0.5)", an.kappa1_fraction));
        }
        if !(an.epsilon > 0.0 && an.epsilon < an.eta) {
            e.push(format!("analysis: need 0 < epsilon < eta (got {}, {})", an.epsilon, an.eta));
        }
        if !finite_positive(an.l) {
            e.push(format!("analysis.l = {} must be positive", an.l));
        }
        if !(finite_positive(an.rho) && an.rho <= self.grid.r_max / 2.0) {
            e.push(format!("analysis.rho = {} must lie in (0, r_max/2]", an.rho));
        }
        if !(an.c1.is_finite() && an.c1 >= 0.0) {
            e.push(format!("analysis.c1 = {} must be non-negative", an.c1));
        }
        if !(an.margin.is_finite() && an.margin >= 0.0) {
            e.push(format!("analysis.margin = {} must be non-negative", an.margin));
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(e))
        }
    }

    /// Guards of the reduced-model section (checked only by the reduced scenario).
    pub fn validate_reduced(&self) -> Result<()> {
        let r = &self.reduced;
        let mut e: Vec<String> = vec![];
        if self.dim < 5 {
            e.push(format!("reduced model needs dim ≥ 5 (dim = {})", self.dim));
        }
        let k = r.lambda.len();
        if k == 0 || r.signs.len() != k {
            e.push("reduced.signs and reduced.lambda must be non-empty and of equal length".into());
        }
        for (name, v) in [("beta", &r.beta), ("a_minus", &r.a_minus), ("a_plus", &r.a_plus)] {
            if let Some(v) = v {
                if v.len() != k {
                    e.push(format!("reduced.{name} must have length {k}"));
                }
            }
        }
        if !(r.t_end.is_finite() && r.t_end > 0.0) {
            e.push(format!("reduced.t_end = {} must be positive", r.t_end));
        }
        if !finite_positive(r.eta0) || !finite_positive(r.a_threshold) {
            e.push("reduced.eta0 and reduced.a_threshold must be positive".into());
        }
        if r.max_rows < 2 {
            e.push("reduced.max_rows must be at least 2".into());
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(e))
        }
    }

    pub fn bubble_config(&self) -> Result<BubbleConfig> {
        BubbleConfig::new(
            self.initial.bubbles.iter().map(|b| b.sign).collect(),
            self.initial.bubbles.iter().map(|b| b.scale).collect(),
        )
    }

    pub fn evolution_settings(&self) -> EvolutionSettings {
        EvolutionSettings {
            cfl: self.evolution.cfl,
            t_end: self.evolution.t_end,
            record_stride: self.evolution.record_stride,
            nonlinear: self.evolution.nonlinear,
            ..Default::default()
        }
    }

    /// Replace the bubble list from parallel sign/scale lists.
    pub fn set_bubbles(&mut self, signs: &[i8], scales: &[f64]) -> Result<()> {
        if signs.len() != scales.len() {
            return Err(Error::ConfigValidation(vec![format!(
                "{} signs for {} scales",
                signs.len(),
                scales.len()
            )]));
        }
        self.initial.bubbles = signs
            .iter()
            .zip(scales)
            .map(|(s, l)| BubbleSpec { sign: *s, scale: *l })
            .collect();
        Ok(())
    }
}

/// Parse a sign string such as `"++"`, `"+-"` or `"1,-1"`.
pub fn parse_signs(text: &str) -> Result<Vec<i8>> {
    let t = text.trim();
    let bad = || Error::ConfigValidation(vec![format!("cannot read signs from {text:?}")]);
    if t.contains(',') || t.contains('1') {
        return t
            .split(',')
            .map(|s| match s.trim() {
                "1" | "+1" | "+" => Ok(1),
                "-1" | "-" => Ok(-1),
                _ => Err(bad()),
            })
            .collect();
    }
    t.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            _ => Err(bad()),
        })
        .collect()
}

/// Parse a comma-separated list of reals.
pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::ConfigValidation(vec![format!("cannot read a number from {s:?}")]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.dim, 6);
        assert_eq!(c.grid.n, 4096);
        assert_eq!(c.grid.r_max, 50.0);
        assert_eq!(c.evolution.cfl, 0.5);
        assert_eq!(c, ScenarioConfig::default());
    }

    #[test]
    fn cfl_guard() {
        let e = parse_config("[evolution]\ncfl = 1.5\n").unwrap_err();
        assert!(matches!(e, Error::ConfigValidation(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected_with_context() {
        let e = parse_config("[grid]\nn = 100\nrmax = 3\n").unwrap_err();
        match e {
            Error::ConfigParse(m) => assert!(m.contains("rmax") && m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_lists_every_guard() {
        let e = parse_config("dim = 9\n[evolution]\ncfl = 0\n[analysis]\nepsilon = 0.5\neta = 0.1\n").unwrap_err();
        match e {
            Error::ConfigValidation(v) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sign_and_list_parsing() {
        assert_eq!(parse_signs("++").unwrap(), vec![1, 1]);
        assert_eq!(parse_signs("+-").unwrap(), vec![1, -1]);
        assert_eq!(parse_signs("1,-1").unwrap(), vec![1, -1]);
        assert!(parse_signs("+x").is_err());
        assert_eq!(parse_reals("0.05, 1").unwrap(), vec![0.05, 1.0]);
    }
}
