//! The linearized operator `ℒ_λ = −Δ − f'(W_λ)`, its negative eigenpair `(−κ², 𝒴)`,
//! the stable/unstable linear forms `α_λ^±` and the orthogonality profile `𝒵`.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::cutoff::{mollifier, mollifier_deriv};
use crate::error::{Error, Result};
use crate::ground_state::{self, f_prime};
use crate::radial::{check_dim, dot, FieldPair, RadialGrid};

/// `ℒ_λ` on a grid, stored together with its symmetric tridiagonal form
/// `S = W^{1/2} ℒ W^{-1/2}` (W = diag of quadrature weights).
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    grid: Arc<RadialGrid>,
    lambda: f64,
    potential: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl LinearizedOperator {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.grid.laplacian(u);
        for ((o, v), x) in out.iter_mut().zip(&self.potential).zip(u) {
            *o = -*o - v * x;
        }
        out
    }

    /// `⟨ℒg | g⟩`, evaluated in the summation-by-parts form.
    pub fn quadratic_form(&self, g: &[f64]) -> f64 {
        let pot: f64 = g
            .iter()
            .zip(&self.potential)
            .zip(self.grid.weights())
            .map(|((x, v), w)| v * x * x * w)
            .sum();
        2.0 * self.grid.dirichlet_energy(g) - pot
    }

    pub fn tridiagonal(&self) -> (&[f64], &[f64]) {
        (&self.diag, &self.off)
    }

    /// Number of eigenvalues strictly below `sigma` (Sturm count on the LDLᵀ pivots).
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - sigma - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Solve `(S - σ) x = b` by the Thomas algorithm.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut denom = self.diag[0] - sigma;
        if denom == 0.0 {
            denom = f64::EPSILON;
        }
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        x[0] = b[0] / denom;
        for i in 1..n {
            let mut m = self.diag[i] - sigma - self.off[i - 1] * c[i - 1];
            if m == 0.0 {
                m = f64::EPSILON * (self.diag[i].abs() + 1.0);
            }
            if i + 1 < n {
                c[i] = self.off[i] / m;
            }
            x[i] = (b[i] - self.off[i - 1] * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }

    fn sym_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Assemble `ℒ_λ` on `grid`. The potential must be resolved: `10h ≤ λ ≤ r_max/10`.
pub fn assemble_linearized(grid: &Arc<RadialGrid>, lambda: f64) -> Result<LinearizedOperator> {
    if !(lambda >= 10.0 * grid.h() && lambda <= grid.r_max() / 10.0) {
        return Err(Error::Resolution(format!(
            "λ = {lambda} outside the resolved range [{}, {}]",
            10.0 * grid.h(),
            grid.r_max() / 10.0
        )));
    }
    let dim = grid.dim();
    let bubble = ground_state::BubbleProfile::w(dim, lambda)?;
    let potential: Vec<f64> = grid.sample(|r| f_prime(bubble.eval_unchecked(r), dim));
    let n = grid.n();
    let h = grid.h();
    let w = grid.weights();
    let g = grid.edge_weights();
    let diag = (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { g[i - 1] };
            (g[i] + left) / (h * w[i]) - potential[i]
        })
        .collect();
    let off = (0..n - 1).map(|i| -g[i] / (h * (w[i] * w[i + 1]).sqrt())).collect();
    Ok(LinearizedOperator {
        grid: grid.clone(),
        lambda,
        potential,
        diag,
        off,
    })
}

/// Cubic Lagrange weights (and their t-derivatives) for offsets -1, 0, 1, 2.
fn lagrange4(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    (
        [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ],
        [
            -(3.0 * t2 - 6.0 * t + 2.0) / 6.0,
            (3.0 * t2 - 4.0 * t - 1.0) / 2.0,
            -(3.0 * t2 - 2.0 * t - 2.0) / 2.0,
            (3.0 * t2 - 1.0) / 6.0,
        ],
    )
}

/// Even extension inside the origin, zero beyond the last node.
fn padded(v: &[f64], k: i64) -> f64 {
    if k < 0 {
        let j = (-k - 1) as usize;
        v.get(j).copied().unwrap_or(0.0)
    } else {
        v.get(k as usize).copied().unwrap_or(0.0)
    }
}

/// Interpolated value and derivative of grid samples at radius `r`.
pub(crate) fn interpolate(grid: &RadialGrid, v: &[f64], r: f64) -> (f64, f64) {
    let x = r / grid.h() - 0.5;
    if x >= grid.n() as f64 + 1.0 {
        return (0.0, 0.0);
    }
    let k = x.floor();
    let t = x - k;
    let k = k as i64;
    let (l, dl) = lagrange4(t);
    let mut val = 0.0;
    let mut der = 0.0;
    for (m, off) in (-1..=2).enumerate() {
        let y = padded(v, k + off);
        val += l[m] * y;
        der += dl[m] * y;
    }
    (val, der / grid.h())
}

/// The negative eigenpair `ℒ𝒴 = −κ²𝒴` of the unit-scale operator.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub dim: usize,
    pub kappa: f64,
    #[serde(skip)]
    grid: Arc<RadialGrid>,
    #[serde(skip)]
    y: Vec<f64>,
    /// Eigen-residual `‖ℒ𝒴 + κ²𝒴‖` in the weighted L² norm.
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Samples of 𝒴 on its own grid (L²-normalized, positive at the first node).
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// 𝒴 and 𝒴' at an arbitrary radius, by cubic interpolation.
    pub fn eval_with_deriv(&self, r: f64) -> (f64, f64) {
        interpolate(&self.grid, &self.y, r)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_deriv(r).0
    }

    /// `𝒴_{λ}` (energy scaling) sampled on `grid`.
    pub fn sample_energy_scaled(&self, grid: &RadialGrid, lambda: f64) -> Vec<f64> {
        let a = lambda.powf(-(grid.d() - 2.0) / 2.0);
        grid.sample(|r| a * self.eval(r / lambda))
    }

    /// `𝒴_{underline λ}` (L² scaling) sampled on `grid`.
    pub fn sample_l2_scaled(&self, grid: &RadialGrid, lambda: f64) -> Vec<f64> {
        let a = lambda.powf(-grid.d() / 2.0);
        grid.sample(|r| a * self.eval(r / lambda))
    }

    /// The pairs `𝒴_λ^± = (𝒴_λ/κ, ±𝒴_{underline λ})`.
    pub fn mode_pair(&self, grid: &Arc<RadialGrid>, lambda: f64, sign: Sign) -> FieldPair {
        let ye = self.sample_energy_scaled(grid, lambda);
        let yl = self.sample_l2_scaled(grid, lambda);
        let s = sign.value();
        FieldPair::new(
            grid.clone(),
            ye.iter().map(|y| y / self.kappa).collect(),
            yl.iter().map(|y| s * y).collect(),
        )
        .expect("sampled mode is finite")
    }
}

/// Negative eigenpair of `ℒ` on `grid` (unit bubble).
pub fn negative_eigenpair(grid: &Arc<RadialGrid>) -> Result<EigenPair> {
    if grid.h() > 0.02 + 1e-15 || grid.r_max() < 30.0 - 1e-12 {
        return Err(Error::Resolution(format!(
            "eigenpair needs h ≤ 0.02 and r_max ≥ 30 (h = {}, r_max = {})",
            grid.h(),
            grid.r_max()
        )));
    }
    let op = assemble_linearized(grid, 1.0)?;
    let negatives = op.count_below(0.0);
    match negatives {
        0 => return Err(Error::Resolution("no negative eigenvalue found".into())),
        1 => {}
        k => {
            return Err(Error::DiscretizationAnomaly(format!(
                "{k} negative eigenvalues (expected exactly one)"
            )))
        }
    }
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let mut v: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&sw)
        .map(|(r, s)| (-(r - 1.0) * (r - 1.0)).exp() * s)
        .collect();
    normalize(&mut v);
    let mut sigma = -1.0;
    let mut mu_prev = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..200 {
        iterations = it + 1;
        let mut x = op.shifted_solve(sigma, &v);
        normalize(&mut x);
        v = x;
        let sv = op.sym_apply(&v);
        let mu: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
        if (mu - mu_prev).abs() < 1e-12 * mu.abs().max(1.0) {
            converged = true;
            break;
        }
        mu_prev = mu;
        // a few plain inverse-iteration steps before switching to Rayleigh shifts
        if it >= 3 {
            sigma = mu;
        }
    }
    if !converged {
        return Err(Error::Resolution("inverse iteration did not converge".into()));
    }
    let sv = op.sym_apply(&v);
    let mu: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
    if mu >= 0.0 || op.count_below(mu + 1e-9 * mu.abs()) != 1 {
        return Err(Error::DiscretizationAnomaly(format!(
            "inverse iteration converged to λ = {mu}, not the negative eigenvalue"
        )));
    }
    let residual = sv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - mu * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut y: Vec<f64> = v.iter().zip(&sw).map(|(x, s)| x / s).collect();
    if y[0] < 0.0 {
        y.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(EigenPair {
        dim: grid.dim(),
        kappa: (-mu).sqrt(),
        grid: grid.clone(),
        y,
        residual,
        iterations,
    })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Fourth-order eigenpair: the second-order pairs on `grid` and on the grid with
/// half as many cells are combined by Richardson extrapolation (`κ²` and `𝒴`).
pub fn richardson_eigenpair(grid: &Arc<RadialGrid>) -> Result<EigenPair> {
    if grid.n() % 2 != 0 {
        return Err(Error::contract("Richardson eigenpair needs an even number of cells"));
    }
    let coarse = RadialGrid::new(grid.dim(), grid.n() / 2, grid.r_max())?;
    let ec = negative_eigenpair(&coarse)?;
    let ef = negative_eigenpair(grid)?;
    let mut y: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(ef.y())
        .map(|(r, yf)| (4.0 * yf - ec.eval(*r)) / 3.0)
        .collect();
    let norm = dot(&y, &y, grid).sqrt();
    y.iter_mut().for_each(|x| *x /= norm);
    let k2 = (4.0 * ef.kappa * ef.kappa - ec.kappa * ec.kappa) / 3.0;
    Ok(EigenPair {
        dim: grid.dim(),
        kappa: k2.sqrt(),
        grid: grid.clone(),
        y,
        residual: ef.residual,
        iterations: ef.iterations,
    })
}

/// Reference resolution for the cached eigenpair: `h = 0.00375`, `r_max = 60`.
pub const REFERENCE_N: usize = 16000;
pub const REFERENCE_R_MAX: f64 = 60.0;

/// Cached Richardson eigenpair at the reference resolution, one per dimension.
pub fn reference_eigenpair(dim: usize) -> Result<Arc<EigenPair>> {
    check_dim(dim)?;
    static CACHE: [OnceLock<Arc<EigenPair>>; 5] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let slot = &CACHE[dim - 4];
    if let Some(p) = slot.get() {
        return Ok(p.clone());
    }
    let grid = RadialGrid::new(dim, REFERENCE_N, REFERENCE_R_MAX)?;
    let pair = Arc::new(richardson_eigenpair(&grid)?);
    Ok(slot.get_or_init(|| pair).clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

/// The linear form `α_λ^± = ½((κ/λ) 𝒴_{underline λ}, ±𝒴_{underline λ})`.
#[derive(Debug, Clone)]
pub struct AlphaForm {
    pub sign: Sign,
    pub lambda: f64,
    pub kappa: f64,
    eigen: Arc<EigenPair>,
}

impl AlphaForm {
    pub fn new(eigen: Arc<EigenPair>, sign: Sign, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::contract(format!("scale must be positive, got {lambda}")));
        }
        Ok(Self {
            sign,
            lambda,
            kappa: eigen.kappa,
            eigen,
        })
    }

    /// Components `(α_u, α_udot)` sampled on `grid`.
    pub fn components(&self, grid: &RadialGrid) -> (Vec<f64>, Vec<f64>) {
        let yl = self.eigen.sample_l2_scaled(grid, self.lambda);
        let cu = 0.5 * self.kappa / self.lambda;
        let cv = 0.5 * self.sign.value();
        (yl.iter().map(|y| cu * y).collect(), yl.iter().map(|y| cv * y).collect())
    }
}

/// `⟨α_λ^± | 𝒈⟩`.
pub fn alpha_pairing(form: &AlphaForm, g: &FieldPair) -> Result<f64> {
    let grid = g.grid();
    let (au, av) = form.components(grid);
    Ok(dot(&au, &g.u, grid) + dot(&av, &g.udot, grid))
}

/// Defect of the identities `⟨α_λ^∓ | J D²E(W_λ) 𝒉⟩ = ∓(κ/λ)⟨α_λ^∓ | 𝒉⟩`;
/// the larger of the two residuals is returned.
pub fn pairing_identity_residual(eigen: &Arc<EigenPair>, lambda: f64, h: &FieldPair) -> Result<f64> {
    let grid = h.grid();
    let op = assemble_linearized(grid, lambda)?;
    // J D²E(W_λ) (h, ḣ) = (ḣ, −ℒ_λ h)
    let lh = op.apply(&h.u);
    let jh = FieldPair::new(grid.clone(), h.udot.clone(), lh.iter().map(|x| -x).collect())?;
    let rate = eigen.kappa / lambda;
    let mut worst: f64 = 0.0;
    for (sign, s) in [(Sign::Minus, -1.0), (Sign::Plus, 1.0)] {
        let form = AlphaForm::new(eigen.clone(), sign, lambda)?;
        let lhs = alpha_pairing(&form, &jh)?;
        let rhs = s * rate * alpha_pairing(&form, h)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// The orthogonality profile `𝒵` as a continuous function of `r`.
#[derive(Debug, Clone)]
pub enum ZProfile {
    /// `𝒵 = ΛW` (D ≥ 7).
    LambdaW { dim: usize },
    /// `𝒵 = s (b(· − c₁) − c b(· − c₂))`: two mollifier bumps of half-width 1/2, with `c`
    /// chosen so that `⟨𝒵|𝒴⟩ = 0`. Compactly supported.
    Bumps {
        dim: usize,
        centers: (f64, f64),
        c: f64,
        sign: f64,
    },
}

pub const Z_BUMP_CENTERS: [(f64, f64); 4] = [(1.0, 3.0), (1.0, 2.0), (0.75, 2.5), (1.5, 3.5)];
pub const Z_BUMP_HALF_WIDTH: f64 = 0.5;

impl ZProfile {
    pub fn dim(&self) -> usize {
        match self {
            ZProfile::LambdaW { dim } | ZProfile::Bumps { dim, .. } => *dim,
        }
    }

    pub fn eval_with_deriv(&self, r: f64) -> (f64, f64) {
        match self {
            ZProfile::LambdaW { dim } => (ground_state::lambda_w(*dim, r), ground_state::lambda_w_deriv(*dim, r)),
            ZProfile::Bumps { centers, c, sign, .. } => {
                let x1 = (r - centers.0) / Z_BUMP_HALF_WIDTH;
                let x2 = (r - centers.1) / Z_BUMP_HALF_WIDTH;
                (
                    sign * (mollifier(x1) - c * mollifier(x2)),
                    sign * (mollifier_deriv(x1) - c * mollifier_deriv(x2)) / Z_BUMP_HALF_WIDTH,
                )
            }
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_deriv(r).0
    }

    /// `𝒵_{underline λ}` and `(ŪΛ𝒵)_{underline λ}` sampled on `grid`.
    pub fn sample_l2_scaled(&self, grid: &RadialGrid, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let d = grid.d();
        let a = lambda.powf(-d / 2.0);
        let mut z = Vec::with_capacity(grid.n());
        let mut uz = Vec::with_capacity(grid.n());
        for &r in grid.nodes() {
            let x = r / lambda;
            let (v, dv) = self.eval_with_deriv(x);
            z.push(a * v);
            uz.push(a * (x * dv + 0.5 * d * v));
        }
        (z, uz)
    }
}

/// Build `𝒵` for dimension `D`; for `D ≤ 6` the orthogonality to `𝒴` is imposed on `grid`.
pub fn make_z_profile(dim: usize, grid: &RadialGrid, eigen: &Arc<EigenPair>) -> Result<ZProfile> {
    check_dim(dim)?;
    if dim >= 7 {
        return Ok(ZProfile::LambdaW { dim });
    }
    let yv = grid.sample(|r| eigen.eval(r));
    let lw = grid.sample(|r| ground_state::lambda_w(dim, r));
    for centers in Z_BUMP_CENTERS {
        let b1 = grid.sample(|r| mollifier((r - centers.0) / Z_BUMP_HALF_WIDTH));
        let b2 = grid.sample(|r| mollifier((r - centers.1) / Z_BUMP_HALF_WIDTH));
        let c = dot(&b1, &yv, grid) / dot(&b2, &yv, grid);
        let z: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| a - c * b).collect();
        let p = dot(&z, &lw, grid);
        let scale = dot(&z, &z, grid).sqrt() * dot(&lw, &lw, grid).sqrt();
        if c.is_finite() && p.abs() > 1e-3 * scale {
            return Ok(ZProfile::Bumps {
                dim,
                centers,
                c,
                sign: p.signum(),
            });
        }
    }
    Err(Error::Construction {
        property: 0,
        detail: "⟨𝒵|ΛW⟩ nearly vanished for every bump pair".into(),
    })
}

/// `𝒵` sampled on `grid` (D ≥ 7: ΛW; otherwise the 𝒴-orthogonalized bump).
pub fn make_z(dim: usize, grid: &RadialGrid) -> Result<Vec<f64>> {
    let eigen = reference_eigenpair(dim)?;
    let z = make_z_profile(dim, grid, &eigen)?;
    Ok(grid.sample(|r| z.eval(r)))
}
