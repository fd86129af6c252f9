//! Radial grids, quadrature, inner products and energy functionals.
//!
//! The grid is cell centred: node `i` sits at `r_i = (i + 1/2) h` and owns the
//! cell `[i h, (i + 1) h]` with midpoint weight `h r_i^{D-1}`. The radial
//! Laplacian is written in flux form
//!
//! ```text
//! (Δu)_i = (F_{i+1/2} - F_{i-1/2}) / w_i,   F_{i+1/2} = γ_{i+1/2} (u_{i+1} - u_i) / h
//! ```
//!
//! with `F_{-1/2} = 0` (regularity at the origin) and a Dirichlet ghost
//! `u_n = 0` beyond `r_max`. The edge weights `γ_{i+1/2} = D (w_0 + ... + w_i) / r_{i+1/2}`
//! make the stencil exact on constants and on `r^2`, symmetric with respect to the
//! midpoint weights, and second order up to and including the first cell.

use std::sync::Arc;

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 4;
pub const MAX_DIM: usize = 8;

pub fn check_dim(dim: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Energy-critical exponent `2D/(D-2)`.
pub fn critical_exponent(dim: usize) -> f64 {
    2.0 * dim as f64 / (dim as f64 - 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    edges: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, n: usize, r_max: f64) -> Result<Arc<Self>> {
        check_dim(dim)?;
        if n < 8 {
            return Err(Error::contract(format!("grid needs at least 8 cells, got {n}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::contract(format!("r_max must be positive, got {r_max}")));
        }
        let h = r_max / n as f64;
        let p = (dim - 1) as i32;
        let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let weights: Vec<f64> = nodes.iter().map(|r| h * r.powi(p)).collect();
        let mut edges = Vec::with_capacity(n);
        let mut mass = 0.0;
        for (i, w) in weights.iter().enumerate() {
            mass += w;
            edges.push(dim as f64 * mass / ((i + 1) as f64 * h));
        }
        Ok(Arc::new(Self {
            dim,
            h,
            nodes,
            weights,
            edges,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn d(&self) -> f64 {
        self.dim as f64
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.h * self.n() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flux weights `γ_{i+1/2}`, one per cell (the last one faces the outer ghost).
    pub fn edge_weights(&self) -> &[f64] {
        &self.edges
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    pub(crate) fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::contract(format!(
                "{what} has length {} but the grid has {} nodes",
                v.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Flux-form radial Laplacian with Dirichlet ghost value `outer` at `r_max + h/2`.
    pub fn laplacian_with_outer(&self, u: &[f64], outer: f64, out: &mut [f64]) {
        let n = self.n();
        let inv_h = 1.0 / self.h;
        let mut flux_left = 0.0;
        for i in 0..n {
            let right = if i + 1 < n { u[i + 1] } else { outer };
            let flux = self.edges[i] * (right - u[i]) * inv_h;
            out[i] = (flux - flux_left) / self.weights[i];
            flux_left = flux;
        }
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.laplacian_with_outer(u, 0.0, &mut out);
        out
    }

    /// Discrete Dirichlet energy `½ Σ γ (u_{i+1} - u_i)^2 / h` consistent with [`laplacian`](Self::laplacian).
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            let du = right - u[i];
            acc += self.edges[i] * du * du;
        }
        0.5 * acc / self.h
    }

    /// Radial derivative: centred differences, even reflection at the origin,
    /// second-order one-sided stencil at the outer node.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let h2 = 2.0 * self.h;
        let mut du = vec![0.0; n];
        du[0] = (u[1] - u[0]) / h2;
        for i in 1..n - 1 {
            du[i] = (u[i + 1] - u[i - 1]) / h2;
        }
        du[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / h2;
        du
    }

    /// `∫_{r1}^{r2} density(r) r^{D-1} dr` where `density` is piecewise constant on
    /// cells. Partial cells contribute proportionally, so the result is continuous
    /// and additive in the endpoints.
    pub fn integrate_cells(&self, density: impl Fn(usize) -> f64, r1: f64, r2: f64) -> f64 {
        let n = self.n();
        let h = self.h;
        let lo = (r1 / h).max(0.0);
        let hi = (r2 / h).min(n as f64);
        if hi <= lo {
            return 0.0;
        }
        let first = lo.floor() as usize;
        let last = (hi.ceil() as usize).min(n);
        let mut acc = 0.0;
        for i in first..last {
            let a = lo.max(i as f64);
            let b = hi.min(i as f64 + 1.0);
            if b > a {
                acc += (b - a) * self.weights[i] * density(i);
            }
        }
        acc
    }

    pub fn check_interval(&self, r1: f64, r2: f64) -> Result<()> {
        if !(r1 >= 0.0 && r1 < r2 && r2 <= self.r_max() * (1.0 + 1e-12)) {
            return Err(Error::contract(format!(
                "interval [{r1}, {r2}] must satisfy 0 <= r1 < r2 <= r_max = {}",
                self.r_max()
            )));
        }
        Ok(())
    }
}

/// Midpoint-rule approximation of `∫ φ ψ r^{D-1} dr` over `[0, r_max]`.
pub fn inner_product(phi: &[f64], psi: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.check_len(phi, "phi")?;
    grid.check_len(psi, "psi")?;
    Ok(dot(phi, psi, grid))
}

pub(crate) fn dot(phi: &[f64], psi: &[f64], grid: &RadialGrid) -> f64 {
    phi.iter()
        .zip(psi)
        .zip(grid.weights())
        .map(|((a, b), w)| a * b * w)
        .sum()
}

/// Sampled state `(u, ∂_t u)` on a radial grid.
#[derive(Debug, Clone)]
pub struct FieldPair {
    grid: Arc<RadialGrid>,
    pub u: Vec<f64>,
    pub udot: Vec<f64>,
}

impl FieldPair {
    pub fn new(grid: Arc<RadialGrid>, u: Vec<f64>, udot: Vec<f64>) -> Result<Self> {
        grid.check_len(&u, "u")?;
        grid.check_len(&udot, "udot")?;
        if u.iter().chain(udot.iter()).any(|x| !x.is_finite()) {
            return Err(Error::contract("field pair contains non-finite samples"));
        }
        Ok(Self { grid, u, udot })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n();
        Self {
            grid,
            u: vec![0.0; n],
            udot: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, u: impl Fn(f64) -> f64, udot: impl Fn(f64) -> f64) -> Self {
        let us = grid.sample(u);
        let vs = grid.sample(udot);
        Self {
            grid,
            u: us,
            udot: vs,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.udot.iter()).all(|x| x.is_finite())
    }

    /// Pointwise `self + c * other`.
    pub fn axpy(&self, c: f64, other: &FieldPair) -> Result<FieldPair> {
        self.check_same_grid(other)?;
        Ok(FieldPair {
            grid: self.grid.clone(),
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + c * b).collect(),
            udot: self
                .udot
                .iter()
                .zip(&other.udot)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> FieldPair {
        FieldPair {
            grid: self.grid.clone(),
            u: self.u.iter().map(|x| c * x).collect(),
            udot: self.udot.iter().map(|x| c * x).collect(),
        }
    }

    pub(crate) fn check_same_grid(&self, other: &FieldPair) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::contract("field pairs live on different grids"))
        }
    }
}

/// Localized energy norm `‖(u, u̇)‖_{E(r1, r2)}` including the Hardy term `u²/r²`.
pub fn energy_norm(pair: &FieldPair, r1: f64, r2: f64) -> Result<f64> {
    let grid = pair.grid();
    grid.check_interval(r1, r2)?;
    Ok(energy_norm_sq_unchecked(pair, r1, r2).sqrt())
}

pub(crate) fn energy_norm_sq_unchecked(pair: &FieldPair, r1: f64, r2: f64) -> f64 {
    let grid = pair.grid();
    let du = grid.gradient(&pair.u);
    let r = grid.nodes();
    grid.integrate_cells(
        |i| pair.udot[i] * pair.udot[i] + du[i] * du[i] + (pair.u[i] / r[i]).powi(2),
        r1,
        r2,
    )
}

/// Full-grid energy norm.
pub fn energy_norm_total(pair: &FieldPair) -> f64 {
    energy_norm_sq_unchecked(pair, 0.0, pair.grid().r_max()).sqrt()
}

/// Localized nonlinear energy
/// `∫ ½(u̇² + (∂_r u)²) - (D-2)/(2D) |u|^{2D/(D-2)}` over `[r1, r2]`.
pub fn nonlinear_energy(pair: &FieldPair, r1: f64, r2: f64) -> Result<f64> {
    let grid = pair.grid();
    grid.check_interval(r1, r2)?;
    let du = grid.gradient(&pair.u);
    let d = grid.d();
    let p = critical_exponent(grid.dim());
    let c = (d - 2.0) / (2.0 * d);
    Ok(grid.integrate_cells(
        |i| 0.5 * (pair.udot[i] * pair.udot[i] + du[i] * du[i]) - c * pair.u[i].abs().powf(p),
        r1,
        r2,
    ))
}

pub fn nonlinear_energy_total(pair: &FieldPair) -> f64 {
    nonlinear_energy(pair, 0.0, pair.grid().r_max()).expect("full interval is valid")
}
