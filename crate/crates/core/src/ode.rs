//! Adaptive Dormand–Prince 5(4) integration with event location.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    /// Smallest step relative to `max(|t|, 1)` before the run is declared stiff.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-15,
            h_init: None,
            h_min_rel: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

pub struct EventSpec<'a> {
    pub name: String,
    pub g: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    /// Stop the integration at the first root.
    pub terminal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventHit {
    pub name: String,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub events: Vec<EventHit>,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Cubic Hermite interpolation on `[t0, t0 + h]`.
fn hermite(y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], h: f64, s: f64) -> Vec<f64> {
    let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
    let h10 = s * s * s - 2.0 * s * s + s;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, recording every accepted step.
pub fn integrate(
    f: &dyn Fn(f64, &[f64]) -> Result<Vec<f64>>,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    events: &[EventSpec],
) -> Result<OdeSolution> {
    let n = y0.len();
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0.to_vec()],
        events: vec![],
        rejected: 0,
    };
    if t_end <= t0 {
        return Ok(sol);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k0 = f(t, &y)?;
    let mut h = opts.h_init.unwrap_or_else(|| {
        let rms = |v: &[f64]| {
            (v.iter().zip(&y).map(|(a, b)| (a / (opts.atol + opts.rtol * b.abs())).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
        };
        let (d0, d1) = (rms(&y), rms(&k0));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(t_end - t0)
    });
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(sol);
        }
        h = h.min(t_end - t);
        if h < opts.h_min_rel * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                detail: format!("step size underflow (h = {h:e})"),
            });
        }
        let mut k: Vec<Vec<f64>> = vec![k0.clone()];
        let mut stage_err = None;
        for s in 1..7 {
            let ys: Vec<f64> = (0..n)
                .map(|i| y[i] + h * (0..s).map(|m| A[s][m] * k[m][i]).sum::<f64>())
                .collect();
            match f(t + C[s] * h, &ys) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => k.push(v),
                Ok(_) => {
                    stage_err = Some(Error::Integration {
                        t,
                        detail: "non-finite derivative".into(),
                    });
                    break;
                }
                Err(e) => {
                    stage_err = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = stage_err {
            // shrink and retry; a persistent failure surfaces as underflow
            log::trace!("stage failure at t = {t}: {e}");
            sol.rejected += 1;
            h *= 0.25;
            continue;
        }
        let y5: Vec<f64> = (0..n).map(|i| y[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>()).collect();
        let err = (0..n)
            .map(|i| {
                let e = h * (0..7).map(|s| (B5[s] - B4[s]) * k[s][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / n.max(1) as f64;
        let err = err.sqrt();
        if err <= 1.0 {
            let k_new = k[6].clone();
            let t_new = t + h;
            let mut stop: Option<(f64, Vec<f64>)> = None;
            for (ei, ev) in events.iter().enumerate() {
                let g_new = (ev.g)(t_new, &y5);
                let g_old = g_prev[ei];
                if g_old != 0.0 && g_old.signum() != g_new.signum() && g_new.is_finite() {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        let ym = hermite(&y, &k0, &y5, &k_new, h, mid);
                        let gm = (ev.g)(t + mid * h, &ym);
                        if gm.signum() == g_old.signum() && gm != 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if (hi - lo) * h < 1e-14 * t_new.abs().max(1.0) {
                            break;
                        }
                    }
                    let te = t + hi * h;
                    let ye = hermite(&y, &k0, &y5, &k_new, h, hi);
                    sol.events.push(EventHit {
                        name: ev.name.clone(),
                        t: te,
                        y: ye.clone(),
                    });
                    if ev.terminal && stop.as_ref().map_or(true, |s| te < s.0) {
                        stop = Some((te, ye));
                    }
                }
                g_prev[ei] = g_new;
            }
            if let Some((te, ye)) = stop {
                sol.events.retain(|e| e.t <= te);
                sol.t.push(te);
                sol.y.push(ye);
                return Ok(sol);
            }
            t = t_new;
            y = y5;
            k0 = k_new;
            sol.t.push(t);
            sol.y.push(y.clone());
        } else {
            sol.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Err(Error::Integration {
        t,
        detail: format!("exceeded {} steps", opts.max_steps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let f = |_t: f64, y: &[f64]| Ok(vec![0.7 * y[0]]);
        let s = integrate(&f, 0.0, &[1e-6], 5.0, &OdeOptions::default(), &[]).unwrap();
        let last = s.y.last().unwrap()[0];
        assert!((last / (1e-6 * 3.5f64.exp()) - 1.0).abs() < 1e-8);
        assert_eq!(*s.t.last().unwrap(), 5.0);
    }

    #[test]
    fn harmonic_oscillator_event() {
        let f = |_t: f64, y: &[f64]| Ok(vec![y[1], -y[0]]);
        let ev = EventSpec {
            name: "zero".into(),
            g: Box::new(|_t, y| y[0]),
            terminal: true,
        };
        let s = integrate(&f, 0.0, &[1.0, 0.0], 10.0, &OdeOptions::default(), &[ev]).unwrap();
        assert_eq!(s.events.len(), 1);
        assert!((s.events[0].t - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
        assert_eq!(*s.t.last().unwrap(), s.events[0].t);
    }

    #[test]
    fn blow_up_reports_time() {
        let f = |_t: f64, y: &[f64]| Ok(vec![y[0] * y[0]]);
        let e = integrate(&f, 0.0, &[1.0], 2.0, &OdeOptions::default(), &[]).unwrap_err();
        match e {
            Error::Integration { t, .. } => assert!((t - 1.0).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
    }
}
