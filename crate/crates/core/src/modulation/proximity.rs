//! Multi-bubble proximity functions `d`, `δ_R` and `d_K` as certified upper
//! bounds: dyadic multistart over scales and all sign vectors, then Nelder–Mead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multibubble::BubbleConfig;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::radial::FieldPair;

pub const MAX_BUBBLES: usize = 4;

#[derive(Debug, Clone)]
pub struct Proximity {
    /// Seed for the jitter of the polishing simplices.
    pub seed: u64,
    /// Outer end of the region; `None` is the whole grid.
    pub r_outer: Option<f64>,
    /// Number of screened candidates that get polished.
    pub polish: usize,
    pub nm: NelderMeadOptions,
}

impl Default for Proximity {
    fn default() -> Self {
        Self {
            seed: 0,
            r_outer: None,
            polish: 4,
            nm: NelderMeadOptions {
                f_tol: 1e-8,
                x_tol: 1e-10,
                max_evals: 3000,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProximityResult {
    /// Square root of the minimized objective.
    pub value: f64,
    /// The minimizing free bubbles (interior bubbles for `d` and `δ_R`, exterior ones for `d_K`).
    pub config: BubbleConfig,
    pub evaluations: usize,
}

struct Problem<'a> {
    target: &'a FieldPair,
    r1: f64,
    r2: f64,
    n_free: usize,
    lower: Option<f64>,
    upper: f64,
}

impl Problem<'_> {
    fn objective(&self, signs: &[i8], scales: &[f64]) -> f64 {
        let grid = self.target.grid();
        let dim = grid.dim();
        let d = grid.d();
        let e = (d - 2.0) / 2.0;
        let mut chain = 0.0;
        let mut prev = self.lower;
        for &l in scales {
            if let Some(p) = prev {
                chain += (p / l).powf(e);
            }
            prev = Some(l);
        }
        if let Some(p) = prev {
            chain += (p / self.upper).powf(e);
        }
        let h = grid.h();
        let n = grid.n();
        let lo = ((self.r1 / h).floor() as usize).min(n);
        let hi = ((self.r2 / h).ceil() as usize).min(n);
        if hi <= lo {
            return chain;
        }
        let a = lo.saturating_sub(3);
        let b = (hi + 2).min(n);
        let r = grid.nodes();
        let amp: Vec<f64> = scales.iter().map(|l| l.powf(-e)).collect();
        let diff: Vec<f64> = (a..b)
            .map(|i| {
                let bubbles: f64 = signs
                    .iter()
                    .zip(scales)
                    .zip(&amp)
                    .map(|((s, l), c)| *s as f64 * c * crate::ground_state::w(dim, r[i] / l))
                    .sum();
                self.target.u[i] - bubbles
            })
            .collect();
        let at = |i: usize| diff[i - a];
        let grad = |i: usize| -> f64 {
            if i == 0 {
                (at(1) - at(0)) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            }
        };
        let lo_f = self.r1 / h;
        let hi_f = (self.r2 / h).min(n as f64);
        let w = grid.weights();
        let mut acc = 0.0;
        for i in lo..hi {
            let x0 = lo_f.max(i as f64);
            let x1 = hi_f.min(i as f64 + 1.0);
            if x1 > x0 {
                let v = self.target.udot[i];
                let du = grad(i);
                let q = at(i) / r[i];
                acc += (x1 - x0) * w[i] * (v * v + du * du + q * q);
            }
        }
        acc + chain
    }

    fn ladder(&self) -> Vec<f64> {
        let h = self.target.grid().h();
        let floor = self.lower.unwrap_or(0.0).max(2.0 * h);
        (1..200)
            .map(|m| self.upper * 0.5f64.powi(m))
            .take_while(|l| *l > floor)
            .collect()
    }
}

fn sign_vectors(n: usize) -> Vec<Vec<i8>> {
    // lexicographic with −1 < +1
    (0..1usize << n)
        .map(|mask| (0..n).map(|j| if mask >> (n - 1 - j) & 1 == 1 { 1 } else { -1 }).collect())
        .collect()
}

fn increasing_tuples(ladder_desc: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut asc: Vec<f64> = ladder_desc.to_vec();
    asc.reverse();
    let mut out = vec![];
    let mut idx: Vec<usize> = (0..n).collect();
    if n == 0 {
        return vec![vec![]];
    }
    if asc.len() < n {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| asc[i]).collect());
        let mut k = n;
        while k > 0 {
            k -= 1;
            if idx[k] < asc.len() - n + k {
                idx[k] += 1;
                for m in k + 1..n {
                    idx[m] = idx[m - 1] + 1;
                }
                break;
            }
            if k == 0 {
                return out;
            }
        }
    }
}

impl Proximity {
    fn check_n(n: usize) -> Result<()> {
        if n > MAX_BUBBLES {
            return Err(Error::CombinatorialGuard(n));
        }
        Ok(())
    }

    fn r_outer(&self, target: &FieldPair) -> Result<f64> {
        let r_max = target.grid().r_max();
        let r = self.r_outer.unwrap_or(r_max).min(r_max);
        if !(r > 0.0) {
            return Err(Error::contract(format!("outer radius must be positive, got {r}")));
        }
        Ok(r)
    }

    fn minimize(&self, p: &Problem) -> Result<ProximityResult> {
        let signs_all = sign_vectors(p.n_free);
        let tuples = increasing_tuples(&p.ladder(), p.n_free);
        if tuples.is_empty() {
            return Err(Error::Resolution(format!(
                "no {} resolved dyadic scales below {}",
                p.n_free, p.upper
            )));
        }
        let branches: Vec<(Vec<i8>, Vec<f64>)> = tuples
            .iter()
            .flat_map(|t| signs_all.iter().map(move |s| (s.clone(), t.clone())))
            .collect();
        let mut screened: Vec<(f64, usize)> = branches
            .par_iter()
            .enumerate()
            .map(|(i, (s, l))| (p.objective(s, l), i))
            .collect();
        screened.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut evaluations = branches.len();
        if p.n_free == 0 {
            return Ok(ProximityResult {
                value: screened[0].0.max(0.0).sqrt(),
                config: BubbleConfig::empty(),
                evaluations,
            });
        }
        let chosen: Vec<usize> = screened.iter().take(self.polish.max(1)).map(|x| x.1).collect();
        let polished: Vec<(f64, usize, Vec<f64>, usize)> = chosen
            .par_iter()
            .map(|&bi| {
                let (signs, start) = &branches[bi];
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (bi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let x0: Vec<f64> = start.iter().map(|l| l.ln()).collect();
                let steps: Vec<f64> = (0..x0.len()).map(|_| 0.35 * (1.0 + 0.2 * (rng.gen::<f64>() - 0.5))).collect();
                let f = |x: &[f64]| {
                    if x.windows(2).any(|w| w[0] >= w[1]) {
                        return f64::INFINITY;
                    }
                    let l: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                    p.objective(signs, &l)
                };
                let m = nelder_mead(f, &x0, &steps, &self.nm);
                (m.value, bi, m.x, m.evaluations)
            })
            .collect();
        evaluations += polished.iter().map(|p| p.3).sum::<usize>();
        let best = polished
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(branches[a.1].0.cmp(&branches[b.1].0)).then(a.1.cmp(&b.1)))
            .expect("at least one branch");
        let scales: Vec<f64> = best.2.iter().map(|v| v.exp()).collect();
        Ok(ProximityResult {
            value: best.0.max(0.0).sqrt(),
            config: BubbleConfig::new(branches[best.1].0.clone(), scales)?,
            evaluations,
        })
    }

    fn difference(u: &FieldPair, ustar: Option<&FieldPair>) -> Result<FieldPair> {
        match ustar {
            Some(s) => u.axpy(-1.0, s),
            None => Ok(u.clone()),
        }
    }

    /// `d` with `λ_{N+1} = t_conv`.
    pub fn distance_d(&self, u: &FieldPair, ustar: Option<&FieldPair>, n: usize, t_conv: f64) -> Result<ProximityResult> {
        Self::check_n(n)?;
        if !(t_conv > 0.0) {
            return Err(Error::contract(format!("t_conv must be positive, got {t_conv}")));
        }
        let target = Self::difference(u, ustar)?;
        let r2 = self.r_outer(&target)?;
        self.minimize(&Problem {
            target: &target,
            r1: 0.0,
            r2,
            n_free: n,
            lower: None,
            upper: t_conv,
        })
    }

    /// `δ_R`: restricted to `r ≤ R` with `λ_{M+1} = R`, minimized over `M ∈ {0,…,4}`.
    pub fn local_delta(&self, u: &FieldPair, r: f64) -> Result<ProximityResult> {
        let grid = u.grid();
        if !(r > 0.0 && r <= grid.r_max() * (1.0 + 1e-12)) {
            return Err(Error::contract(format!("R = {r} must lie in (0, r_max]")));
        }
        let mut best: Option<ProximityResult> = None;
        for m in 0..=MAX_BUBBLES {
            let res = self.minimize(&Problem {
                target: u,
                r1: 0.0,
                r2: r,
                n_free: m,
                lower: None,
                upper: r,
            });
            match res {
                Ok(res) => {
                    if best.as_ref().map_or(true, |b| res.value < b.value) {
                        best = Some(res);
                    }
                }
                Err(Error::Resolution(_)) => break,
                Err(e) => return Err(e),
            }
        }
        best.ok_or_else(|| Error::Resolution("no admissible configuration".into()))
    }

    /// `d_K` with `λ_K = ρ`, `λ_{N+1} = t_conv`, over the `N − K` exterior bubbles on `(ρ, r_outer)`.
    pub fn distance_dk(
        &self,
        u: &FieldPair,
        ustar: Option<&FieldPair>,
        k: usize,
        rho: f64,
        t_conv: f64,
        n: usize,
    ) -> Result<ProximityResult> {
        Self::check_n(n)?;
        if k > n || !(rho > 0.0) || !(t_conv > 0.0) {
            return Err(Error::contract(format!(
                "need 0 ≤ K ≤ N, ρ > 0, t_conv > 0 (K={k}, N={n}, ρ={rho}, t={t_conv})"
            )));
        }
        let target = Self::difference(u, ustar)?;
        let r2 = self.r_outer(&target)?;
        if rho >= r2 {
            return Err(Error::contract(format!("ρ = {rho} lies beyond the region end {r2}")));
        }
        self.minimize(&Problem {
            target: &target,
            r1: rho,
            r2,
            n_free: n - k,
            lower: Some(rho),
            upper: t_conv,
        })
    }

    /// Objective square root at a given configuration (the upper bound at a known truth).
    pub fn objective_at(&self, u: &FieldPair, config: &BubbleConfig, lower: Option<f64>, upper: f64, r1: f64) -> Result<f64> {
        let r2 = self.r_outer(u)?;
        let p = Problem {
            target: u,
            r1,
            r2,
            n_free: config.len(),
            lower,
            upper,
        };
        Ok(p.objective(config.signs(), config.scales()).max(0.0).sqrt())
    }
}

pub fn distance_d(u: &FieldPair, ustar: Option<&FieldPair>, n: usize, t_conv: f64) -> Result<ProximityResult> {
    Proximity::default().distance_d(u, ustar, n, t_conv)
}

pub fn local_delta(u: &FieldPair, r: f64) -> Result<ProximityResult> {
    Proximity::default().local_delta(u, r)
}

pub fn distance_dk(
    u: &FieldPair,
    ustar: Option<&FieldPair>,
    k: usize,
    rho: f64,
    t_conv: f64,
    n: usize,
) -> Result<ProximityResult> {
    Proximity::default().distance_dk(u, ustar, k, rho, t_conv, n)
}
