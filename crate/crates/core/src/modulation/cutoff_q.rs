//! The cutoff `q`: equal to `r²/2` on `[1/R, R]`, constant outside `[1/R̃, R̃]`.
//!
//! Built as `q'(r) = r Θ(log r)` with `Θ ≡ 1` on `|s| ≤ log R` and a septic
//! smoothstep of log-width `L` on each side, so every property reduces to a
//! scale-free bound on `Θ` and its first three derivatives.

use serde::Serialize;

use crate::cutoff::poly_step;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, DEFAULT_REL_TOL};
use crate::radial::{check_dim, RadialGrid};

pub const VERIFICATION_POINTS: usize = 10_000;

/// Scale-free samples on the verification mesh.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QSample {
    pub log_r: f64,
    /// `q'(r)/r`
    pub dq_over_r: f64,
    pub q_second: f64,
    pub lap_q: f64,
    /// `r² Δ²q`
    pub r2_lap2_q: f64,
    /// `r (q'/r)'`
    pub r_d_dq_over_r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffQ {
    pub dim: usize,
    pub c: f64,
    pub r_inner: f64,
    /// Log-width of each transition layer.
    pub width: f64,
    pub log_r_tilde: f64,
    /// Largest `|q'|/r` and `|q''|` seen on the mesh (the constant of P3).
    pub p3_constant: f64,
    #[serde(skip)]
    pub table: Vec<QSample>,
}

fn step_bounds() -> [f64; 3] {
    let mut m = [0.0f64; 3];
    for k in 0..=20_000 {
        let p = poly_step(k as f64 / 20_000.0);
        for i in 0..3 {
            m[i] = m[i].max(p[i + 1].abs());
        }
    }
    m
}

impl CutoffQ {
    /// `[Θ, Θ', Θ'', Θ''']` at `s = log r`.
    pub fn theta(&self, s: f64) -> [f64; 4] {
        let lr = self.r_inner.ln();
        let l = self.width;
        if s.abs() <= lr {
            return [1.0, 0.0, 0.0, 0.0];
        }
        let (x, dir) = if s > lr { ((s - lr) / l, -1.0) } else { ((-lr - s) / l, 1.0) };
        let p = poly_step(x);
        [
            1.0 - p[0],
            dir * p[1] / l,
            -p[2] / (l * l),
            dir * p[3] / (l * l * l),
        ]
    }

    pub fn q_prime(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        x * self.theta(x.ln())[0]
    }

    pub fn q_second(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = self.theta(x.ln());
        t[0] + t[1]
    }

    pub fn lap_q(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = self.theta(x.ln());
        self.dim as f64 * t[0] + t[1]
    }

    pub fn lap2_q(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        scale_free_lap2(self.dim, &self.theta(x.ln())) / (x * x)
    }

    /// `q(x)`; may overflow to `+∞` far beyond the plateau when `R̃` is astronomically large.
    pub fn q(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = x.ln();
        let lr = self.r_inner.ln();
        let lt = self.log_r_tilde;
        let body = |a: f64, b: f64| {
            integrate(|s| (2.0 * s).exp() * self.theta(s)[0], a, b, DEFAULT_REL_TOL).unwrap_or(f64::NAN)
        };
        if s.abs() <= lr {
            0.5 * x * x
        } else if s > lr {
            0.5 * self.r_inner * self.r_inner + body(lr, s.min(lt))
        } else {
            0.5 / (self.r_inner * self.r_inner) - body(s.max(-lt), -lr)
        }
    }

    fn sample(&self, s: f64) -> QSample {
        let t = self.theta(s);
        QSample {
            log_r: s,
            dq_over_r: t[0],
            q_second: t[0] + t[1],
            lap_q: self.dim as f64 * t[0] + t[1],
            r2_lap2_q: scale_free_lap2(self.dim, &t),
            r_d_dq_over_r: t[1],
        }
    }

    fn verify(&mut self) -> Result<()> {
        let lr = self.r_inner.ln();
        let lo = -self.log_r_tilde - 1.0;
        let hi = self.log_r_tilde + 1.0;
        let n = VERIFICATION_POINTS;
        self.table = (0..n)
            .map(|k| self.sample(lo + (hi - lo) * k as f64 / (n - 1) as f64))
            .collect();
        // plateau endpoints are checked explicitly; the mesh may straddle them
        let mut pts = self.table.clone();
        pts.push(self.sample(lr));
        pts.push(self.sample(-lr));
        let fail = |property: usize, detail: String| Err(Error::Construction { property, detail });
        let c = self.c;
        let mut p3: f64 = 0.0;
        for p in &pts {
            if p.log_r.abs() <= lr && (p.dq_over_r != 1.0 || p.r_d_dq_over_r != 0.0) {
                return fail(1, format!("q'/r = {} at log r = {}", p.dq_over_r, p.log_r));
            }
            if p.log_r.abs() >= self.log_r_tilde
                && (p.dq_over_r != 0.0 || p.q_second != 0.0 || p.r2_lap2_q != 0.0)
            {
                return fail(2, format!("q not constant at log r = {}", p.log_r));
            }
            p3 = p3.max(p.dq_over_r.abs()).max(p.q_second.abs());
            if p.lap_q < -c {
                return fail(4, format!("Δq = {} < -c at log r = {}", p.lap_q, p.log_r));
            }
            if p.r2_lap2_q.abs() > c {
                return fail(5, format!("r²|Δ²q| = {} > c at log r = {}", p.r2_lap2_q.abs(), p.log_r));
            }
            if p.r_d_dq_over_r.abs() > c {
                return fail(6, format!("r|(q'/r)'| = {} > c at log r = {}", p.r_d_dq_over_r.abs(), p.log_r));
            }
        }
        if !(p3.is_finite() && p3 <= 2.0) {
            return fail(3, format!("|q'|/r, |q''| reach {p3}"));
        }
        self.p3_constant = p3;
        Ok(())
    }
}

/// `r² Δ²q` in terms of `Θ(s)`, `s = log r`.
fn scale_free_lap2(dim: usize, t: &[f64; 4]) -> f64 {
    let d = dim as f64;
    d * (d - 2.0) * t[1] + (2.0 * d - 2.0) * t[2] + t[3]
}

/// Construct and verify `q` for dimension `dim`.
pub fn build_cutoff(dim: usize, c: f64, r: f64) -> Result<CutoffQ> {
    check_dim(dim)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::contract(format!("c must lie in (0, 1], got {c}")));
    }
    if !(r > 2.0 && r.is_finite()) {
        return Err(Error::contract(format!("R must exceed 2, got {r}")));
    }
    let d = dim as f64;
    let [m1, m2, m3] = step_bounds();
    // smallest width with the P5/P6 bounds met with a 2% margin
    let bound = |l: f64| (d * (d - 2.0) * m1 / l + (2.0 * d - 2.0) * m2 / (l * l) + m3 / (l * l * l)).max(m1 / l);
    let target = c / 1.02;
    let mut width = d * (d - 2.0).max(1.0) * m1 / target;
    while bound(width) > target {
        width *= 1.01;
    }
    let mut q = CutoffQ {
        dim,
        c,
        r_inner: r,
        width,
        log_r_tilde: r.ln() + width,
        p3_constant: 0.0,
        table: vec![],
    };
    q.verify()?;
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum VirialKind {
    /// Coefficient `(D−2)/(2D)`.
    A,
    /// Coefficient `1/2`; skew-adjoint.
    AUnderline,
}

/// `A(λ)g = q'(r/λ)∂_r g + c(1/λ)Δq(r/λ) g`. The part with coefficient ½ is the
/// edge-weighted skew form `(c_{i+½} g_{i+1} − c_{i−½} g_{i−1}) / (2 w_i)` with
/// `c = q'(r/λ)·γ`, so `⟨Ā(λ)g|g⟩` vanishes to round-off.
pub fn virial_apply(kind: VirialKind, lambda: f64, grid: &RadialGrid, g: &[f64], q: &CutoffQ) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    let r = grid.nodes();
    let w = grid.weights();
    let c: Vec<f64> = grid
        .edge_weights()
        .iter()
        .enumerate()
        .map(|(i, gam)| q.q_prime((i as f64 + 1.0) * h / lambda) * gam)
        .collect();
    let coef = match kind {
        VirialKind::A => (grid.d() - 2.0) / (2.0 * grid.d()),
        VirialKind::AUnderline => 0.5,
    };
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { c[i] * g[i + 1] } else { 0.0 };
            let left = if i > 0 { c[i - 1] * g[i - 1] } else { 0.0 };
            let skew = (right - left) / (2.0 * w[i]);
            if coef == 0.5 {
                skew
            } else {
                skew + (coef - 0.5) / lambda * q.lap_q(r[i] / lambda) * g[i]
            }
        })
        .collect()
}
