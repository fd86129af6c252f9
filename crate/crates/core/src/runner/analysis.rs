//! Post-processing of recorded series: finite-difference `β`, `φ`, virial
//! residuals, exponential rates and collision intervals.

use serde::Serialize;

use crate::diagnostics::{detect_collision_intervals, virial_identity_residual, CollisionInterval};
use crate::error::{Error, Result};
use crate::reduced::{lyapunov_phi, ReducedState};

use super::output::Series;

/// Derivative of `v(t)` by centred differences, one-sided at the ends.
pub fn finite_difference(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (v[b] - v[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Least-squares slope of `log|v|` against `t` over the samples with `mask` set.
pub fn exponential_rate(t: &[f64], v: &[f64], mask: &[bool]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .zip(mask)
        .filter(|((_, v), m)| **m && v.is_finite() && **v != 0.0)
        .map(|((t, v), _)| (*t, v.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn indexed(prefix: &str, j: usize) -> String {
    format!("{prefix}_{}", j + 1)
}

pub fn lambda_column(j: usize) -> String {
    indexed("lambda", j)
}
pub fn a_minus_column(j: usize) -> String {
    indexed("a_minus", j)
}
pub fn a_plus_column(j: usize) -> String {
    indexed("a_plus", j)
}
pub fn beta_fd_column(j: usize) -> String {
    indexed("beta_fd", j)
}

/// Number of fitted bubbles recorded in the series.
pub fn bubble_count(series: &Series) -> usize {
    (0..).take_while(|&j| series.columns.contains(&lambda_column(j))).count()
}

/// Append `beta_fd_j` and `phi` (with the finite-difference `β`) to a fitted series.
pub fn append_beta_and_phi(series: &mut Series, dim: usize, signs: &[i8], c1: f64) -> Result<()> {
    let k = bubble_count(series);
    if k == 0 {
        return Ok(());
    }
    let t = series.column("t").ok_or_else(|| Error::contract("series has no t column"))?;
    let lam: Vec<Vec<f64>> = (0..k).map(|j| series.column(&lambda_column(j)).expect("present")).collect();
    let am: Vec<Vec<f64>> = (0..k).map(|j| series.column(&a_minus_column(j)).expect("present")).collect();
    let ap: Vec<Vec<f64>> = (0..k).map(|j| series.column(&a_plus_column(j)).expect("present")).collect();
    let beta: Vec<Vec<f64>> = lam.iter().map(|l| finite_difference(&t, l)).collect();
    for (j, b) in beta.iter().enumerate() {
        series.push_column(beta_fd_column(j), b)?;
    }
    let phi: Vec<f64> = (0..t.len())
        .map(|i| {
            let s = ReducedState {
                dim,
                signs: signs.to_vec(),
                lambda: lam.iter().map(|c| c[i]).collect(),
                beta: beta.iter().map(|c| c[i]).collect(),
                a_minus: am.iter().map(|c| c[i]).collect(),
                a_plus: ap.iter().map(|c| c[i]).collect(),
                omega_sq: f64::NAN,
                kappa: f64::NAN,
            };
            lyapunov_phi(&s, c1)
        })
        .collect();
    series.push_column("phi", &phi)
}

/// Append `<name>_residual` for every identity recorded as `<name>_v`, `<name>_rhs`.
/// Returns `(name, max |residual|)`.
pub fn append_virial_residuals(series: &mut Series) -> Result<Vec<(String, f64)>> {
    let t = series.column("t").ok_or_else(|| Error::contract("series has no t column"))?;
    let names: Vec<String> = series
        .columns
        .iter()
        .filter_map(|c| c.strip_suffix("_v").map(str::to_string))
        .filter(|n| series.columns.contains(&format!("{n}_rhs")))
        .collect();
    let mut out = vec![];
    for n in names {
        let v = series.column(&format!("{n}_v")).expect("present");
        let r = series.column(&format!("{n}_rhs")).expect("present");
        let res = virial_identity_residual(&t, &v, &r)?;
        let mut col = vec![f64::NAN; t.len()];
        for (k, (_, x)) in res.iter().enumerate() {
            col[k + 1] = *x;
        }
        let max = res.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        series.push_column(format!("{n}_residual"), &col)?;
        out.push((n, max));
    }
    Ok(out)
}

/// Collision intervals from the `d`, `d_ext` columns (rows with non-finite values dropped).
pub fn intervals_from_series(series: &Series, eps: f64, eta: f64) -> Result<Vec<CollisionInterval>> {
    let (Some(t), Some(d), Some(dk)) = (series.column("t"), series.column("d"), series.column("d_ext")) else {
        return Ok(vec![]);
    };
    let keep: Vec<usize> = (0..t.len()).filter(|&i| d[i].is_finite() && dk[i].is_finite()).collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    detect_collision_intervals(&pick(&t), &pick(&d), &pick(&dk), eps, eta)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthSummary {
    /// Fitted rate of `a⁺_K` in `t`.
    pub rate: f64,
    /// `rate · λ_K` averaged over the window: comparable to `κ`.
    pub rate_times_lambda: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Exponential rate of `a⁺` of the outermost bubble over the samples with `d ≤ d_max`.
pub fn unstable_growth(series: &Series, d_max: f64) -> Option<GrowthSummary> {
    let k = bubble_count(series);
    if k == 0 {
        return None;
    }
    let t = series.column("t")?;
    let d = series.column("d")?;
    let ap = series.column(&a_plus_column(k - 1))?;
    let lam = series.column(&lambda_column(k - 1))?;
    let mask: Vec<bool> = d.iter().map(|x| x.is_finite() && *x <= d_max).collect();
    let rate = exponential_rate(&t, &ap, &mask)?;
    let sel: Vec<usize> = (0..t.len()).filter(|&i| mask[i] && lam[i].is_finite()).collect();
    let mean_lambda = sel.iter().map(|&i| lam[i]).sum::<f64>() / sel.len() as f64;
    Some(GrowthSummary {
        rate,
        rate_times_lambda: rate * mean_lambda,
        window: (t[sel[0]], t[*sel.last().expect("non-empty")]),
        samples: sel.len(),
    })
}
