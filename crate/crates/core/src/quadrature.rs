//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals and on the half line.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_REL_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 4000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).abs(),
    }
}

/// Globally adaptive integral of `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    integrate_dyn(&f, a, b, rel_tol, 0.0)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::contract(format!("invalid integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut segs = vec![kronrod(f, a, b)];
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Divergence("integrand produced non-finite values".into()));
        }
        if err <= (rel_tol * total.abs()).max(abs_tol) || err <= 1e3 * f64::EPSILON * total.abs() {
            return Ok(total);
        }
        if segs.len() >= MAX_INTERVALS {
            return Err(Error::Divergence(format!(
                "no convergence after {MAX_INTERVALS} subintervals (value {total:.6e}, error {err:.3e})"
            )));
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segs.swap_remove(worst);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            return Err(Error::Divergence(format!("subinterval collapsed near {m}")));
        }
        segs.push(kronrod(f, s.a, m));
        segs.push(kronrod(f, m, s.b));
    }
}

/// `∫₀^∞ f(r) r^{D-1} dr` via the compactifying substitution `r = t/(1-t)`.
///
/// A divergent integrand (for instance `(ΛW)²` when `D = 4`) exhausts the
/// refinement budget and yields [`Error::Divergence`].
pub fn improper_quadrature(f: impl Fn(f64) -> f64, dim: usize, rel_tol: f64) -> Result<f64> {
    improper_quadrature_abs(f, dim, rel_tol, 0.0)
}

/// [`improper_quadrature`] that also accepts an absolute error `abs_tol` (for integrals near zero).
pub fn improper_quadrature_abs(f: impl Fn(f64) -> f64, dim: usize, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    crate::radial::check_dim(dim)?;
    let p = (dim - 1) as i32;
    let g = move |t: f64| {
        let s = 1.0 - t;
        if s <= 0.0 {
            return 0.0;
        }
        let r = t / s;
        f(r) * r.powi(p) / (s * s)
    };
    integrate_dyn(&g, 0.0, 1.0, rel_tol, abs_tol)
}

/// `∫_a^b f(r) r^{D-1} dr` on a finite radial interval.
pub fn radial_integral(f: impl Fn(f64) -> f64, dim: usize, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let p = (dim - 1) as i32;
    integrate(move |r| f(r) * r.powi(p), a, b, rel_tol)
}
