//! Multi-bubble configurations `𝒲(ι, λ) = Σ ι_j W_{λ_j}` and their interaction energy and forces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::{self, f, interaction_constant, tail_constant_pow, BubbleProfile};
use crate::radial::{dot, nonlinear_energy_total, FieldPair, RadialGrid};

/// Signs and strictly increasing scales. `M = 0` is the zero configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleConfig {
    signs: Vec<i8>,
    scales: Vec<f64>,
}

impl BubbleConfig {
    pub fn new(signs: Vec<i8>, scales: Vec<f64>) -> Result<Self> {
        if signs.len() != scales.len() {
            return Err(Error::contract(format!(
                "{} signs for {} scales",
                signs.len(),
                scales.len()
            )));
        }
        if let Some(s) = signs.iter().find(|s| s.abs() != 1) {
            return Err(Error::contract(format!("sign {s} is not ±1")));
        }
        if let Some(l) = scales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::contract(format!("scale {l} is not positive")));
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::contract(format!("scales must be strictly increasing: {scales:?}")));
        }
        Ok(Self { signs, scales })
    }

    pub fn empty() -> Self {
        Self {
            signs: vec![],
            scales: vec![],
        }
    }

    pub fn single(sign: i8, scale: f64) -> Result<Self> {
        Self::new(vec![sign], vec![scale])
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn sign(&self, j: usize) -> f64 {
        self.signs[j] as f64
    }

    /// Same signs, all scales multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        Self::new(self.signs.clone(), self.scales.iter().map(|l| l * c).collect())
    }

    /// `Σ_j (λ_j/λ_{j+1})^{(D-2)/2}` over adjacent pairs.
    pub fn ratio_sum(&self, dim: usize) -> f64 {
        let e = (dim as f64 - 2.0) / 2.0;
        self.scales.windows(2).map(|w| (w[0] / w[1]).powf(e)).sum()
    }

    /// `Σ_j ι_j ι_{j+1} (λ_j/λ_{j+1})^{(D-2)/2}`.
    pub fn signed_ratio_sum(&self, dim: usize) -> f64 {
        let e = (dim as f64 - 2.0) / 2.0;
        (0..self.len().saturating_sub(1))
            .map(|j| self.sign(j) * self.sign(j + 1) * (self.scales[j] / self.scales[j + 1]).powf(e))
            .sum()
    }

    /// `Σ ι_j W_{λ_j}(r)`.
    pub fn eval(&self, dim: usize, r: f64) -> f64 {
        self.signs
            .iter()
            .zip(&self.scales)
            .map(|(s, l)| {
                let d = dim as f64;
                *s as f64 * l.powf(-(d - 2.0) / 2.0) * ground_state::w(dim, r / l)
            })
            .sum()
    }
}

const RATIO_GUARD: f64 = 0.1;

/// Sample `𝒲(ι, λ)` with zero velocity. Scales outside `[20h, r_max/10]` by more
/// than a factor of two trigger a resolution warning.
pub fn synthesize(config: &BubbleConfig, grid: &std::sync::Arc<RadialGrid>) -> FieldPair {
    if let (Some(first), Some(last)) = (config.scales.first(), config.scales.last()) {
        if *first < 10.0 * grid.h() {
            log::warn!("smallest scale {first} is below 10h = {}", 10.0 * grid.h());
        }
        if *last > grid.r_max() / 5.0 {
            log::warn!("largest scale {last} exceeds r_max/5 = {}", grid.r_max() / 5.0);
        }
    }
    let dim = grid.dim();
    let u = grid.sample(|r| config.eval(dim, r));
    FieldPair::new(grid.clone(), u, vec![0.0; grid.n()]).expect("bubble samples are finite")
}

fn check_regime(config: &BubbleConfig, dim: usize) -> Result<()> {
    let s = config.ratio_sum(dim);
    if s > RATIO_GUARD {
        return Err(Error::OutOfRegime(format!(
            "Σ(λ_j/λ_{{j+1}})^{{(D-2)/2}} = {s:.4} exceeds {RATIO_GUARD}"
        )));
    }
    Ok(())
}

/// Predicted leading term of `E(𝒲) − M E(W)`: `−(D(D−2))^{D/2}/D · Σ ι_j ι_{j+1} (λ_j/λ_{j+1})^{(D−2)/2}`.
pub fn energy_gap_leading_term(config: &BubbleConfig, dim: usize) -> f64 {
    -tail_constant_pow(dim) / dim as f64 * config.signed_ratio_sum(dim)
}

/// Defect `E(𝒲) − Σ_j E(ι_j W_{λ_j}) − (leading term)`; the single-bubble energies
/// are computed on the same grid so that truncation and discretization cancel.
pub fn interaction_energy_gap(config: &BubbleConfig, grid: &std::sync::Arc<RadialGrid>) -> Result<f64> {
    let dim = grid.dim();
    check_regime(config, dim)?;
    Ok(energy_gap_measured(config, grid)? - energy_gap_leading_term(config, dim))
}

/// `E(𝒲) − Σ_j E(ι_j W_{λ_j})` on the grid.
pub fn energy_gap_measured(config: &BubbleConfig, grid: &std::sync::Arc<RadialGrid>) -> Result<f64> {
    if config.len() <= 1 {
        return Ok(0.0);
    }
    let total = nonlinear_energy_total(&synthesize(config, grid));
    let singles: f64 = (0..config.len())
        .map(|j| {
            let one = BubbleConfig::single(config.signs[j], config.scales[j]).expect("valid");
            nonlinear_energy_total(&synthesize(&one, grid))
        })
        .sum();
    Ok(total - singles)
}

/// `f_i = f(𝒲) − Σ_k ι_k f(W_{λ_k})` sampled on the grid.
pub fn interaction_nonlinearity(config: &BubbleConfig, grid: &RadialGrid) -> Vec<f64> {
    let dim = grid.dim();
    let d = dim as f64;
    grid.nodes()
        .iter()
        .map(|&r| {
            let mut sum = 0.0;
            let mut sep = 0.0;
            for (s, l) in config.signs.iter().zip(&config.scales) {
                let v = *s as f64 * l.powf(-(d - 2.0) / 2.0) * ground_state::w(dim, r / l);
                sum += v;
                sep += f(v, dim);
            }
            f(sum, dim) - sep
        })
        .collect()
}

/// Predicted `ι_{j-1} k (λ_{j-1}/λ_j)^{(D-2)/2} − ι_{j+1} k (λ_j/λ_{j+1})^{(D-2)/2}` with
/// `k = (D−2)/(2D)(D(D−2))^{D/2}` (0-based `j`).
pub fn force_leading_term(j: usize, config: &BubbleConfig, dim: usize) -> f64 {
    let e = (dim as f64 - 2.0) / 2.0;
    let k = interaction_constant(dim);
    let l = config.scales();
    let mut v = 0.0;
    if j > 0 {
        v += config.sign(j - 1) * k * (l[j - 1] / l[j]).powf(e);
    }
    if j + 1 < config.len() {
        v -= config.sign(j + 1) * k * (l[j] / l[j + 1]).powf(e);
    }
    v
}

/// `⟨ΛW_{λ_j} | f_i(ι, λ)⟩` for the 0-based bubble index `j`.
pub fn interaction_force(j: usize, config: &BubbleConfig, grid: &RadialGrid) -> Result<f64> {
    if j >= config.len() {
        return Err(Error::contract(format!(
            "bubble index {j} out of range for M = {}",
            config.len()
        )));
    }
    let dim = grid.dim();
    check_regime(config, dim)?;
    if config.len() == 1 {
        return Ok(0.0);
    }
    let lw = BubbleProfile::new(
        dim,
        ground_state::ProfileKind::LambdaW,
        config.scales[j],
        ground_state::Normalization::Energy,
    )?
    .sample(grid);
    Ok(dot(&lw, &interaction_nonlinearity(config, grid), grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BubbleConfig::new(vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(BubbleConfig::new(vec![1, 2], vec![1.0, 2.0]).is_err());
        assert!(BubbleConfig::new(vec![1], vec![1.0, 2.0]).is_err());
        assert!(BubbleConfig::new(vec![], vec![]).unwrap().is_empty());
    }

    #[test]
    fn synthesize_examples() {
        let g = RadialGrid::new(6, 2000, 20.0).unwrap();
        let z = synthesize(&BubbleConfig::empty(), &g);
        assert!(z.u.iter().all(|x| *x == 0.0));
        let one = synthesize(&BubbleConfig::single(1, 1.0).unwrap(), &g);
        assert_eq!(one.u, g.sample(|r| ground_state::w(6, r)));
        let c = BubbleConfig::new(vec![1, -1], vec![0.01, 1.0]).unwrap();
        let direct = 1e4 * ground_state::w(6, 10.0) - ground_state::w(6, 0.1);
        assert!((c.eval(6, 0.1) - direct).abs() < 1e-15 * direct.abs());
    }

    #[test]
    fn single_bubble_gap_and_force_vanish() {
        let g = RadialGrid::new(6, 1000, 20.0).unwrap();
        let c = BubbleConfig::single(1, 1.0).unwrap();
        assert_eq!(interaction_energy_gap(&c, &g).unwrap(), 0.0);
        assert_eq!(interaction_force(0, &c, &g).unwrap(), 0.0);
        assert!(interaction_nonlinearity(&c, &g).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn regime_guard() {
        let g = RadialGrid::new(6, 1000, 20.0).unwrap();
        let c = BubbleConfig::new(vec![1, 1], vec![0.5, 1.0]).unwrap();
        assert!(matches!(interaction_energy_gap(&c, &g), Err(Error::OutOfRegime(_))));
        assert!(matches!(interaction_force(1, &c, &g), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn predictions_d6() {
        let c = BubbleConfig::new(vec![1, 1], vec![0.01, 1.0]).unwrap();
        assert!((energy_gap_leading_term(&c, 6) + 2304.0 * 1e-4).abs() < 1e-9);
        assert!((force_leading_term(1, &c, 6) - 0.4608).abs() < 1e-12);
        assert!((force_leading_term(0, &c, 6) + 0.4608).abs() < 1e-12);
    }
}
