//! Closed-form envelope for y' + γ y^ν ≤ δ and its numerical check against
//! the extremal solution y' = δ - γ y^ν.

use serde::Serialize;

use crate::error::{Error, Result};

use super::report::{Evidence, ProbeKind, ProbeReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhidagliaParams {
    pub gamma: f64,
    pub nu: f64,
    pub delta: f64,
}

impl GhidagliaParams {
    pub fn new(gamma: f64, nu: f64, delta: f64) -> Result<Self> {
        let p = Self { gamma, nu, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if !(self.nu.is_finite() && self.nu > 1.0) {
            return Err(Error::invalid("nu", "must be > 1"));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::invalid("delta", "must be ≥ 0"));
        }
        Ok(())
    }

    /// Fixed point (δ/γ)^(1/ν) of the extremal equation.
    pub fn equilibrium(&self) -> f64 {
        (self.delta / self.gamma).powf(1.0 / self.nu)
    }
}

/// (δ/γ)^(1/ν) + (γ(ν-1)t)^(-1/(ν-1)); +∞ at t = 0.
pub fn ghidaglia_bound(t: f64, params: &GhidagliaParams) -> f64 {
    let tail = if t <= 0.0 {
        f64::INFINITY
    } else {
        (params.gamma * (params.nu - 1.0) * t).powf(-1.0 / (params.nu - 1.0))
    };
    params.equilibrium() + tail
}

/// Relative slack allowed between the integrated solution and the envelope.
pub const GHIDAGLIA_RTOL: f64 = 1e-6;

/// Integrates y' = δ - γ y^ν from y(0) = y0 with an adaptive Dormand–Prince
/// pair and checks y(t) ≤ bound(t) (1 + 1e-6) at `samples` equally spaced
/// times in (0, t_end]. The report's `worst_margin` is
/// min_t (bound - y)/bound.
pub fn verify_ghidaglia(
    params: &GhidagliaParams,
    y0: f64,
    t_end: f64,
    samples: usize,
) -> Result<ProbeReport> {
    params.validate()?;
    if !(y0.is_finite() && y0 > 0.0) {
        return Err(Error::invalid("y0", "must be > 0"));
    }
    if !(t_end.is_finite() && t_end > 0.0) || samples == 0 {
        return Err(Error::invalid(
            "t_end",
            "need t_end > 0 and at least one sample",
        ));
    }
    let (g, nu, d) = (params.gamma, params.nu, params.delta);
    let rhs = move |y: f64| d - g * y.max(0.0).powf(nu);

    let mut report = ProbeReport::new(ProbeKind::Ghidaglia);
    let mut y = y0;
    let mut t = 0.0;
    let mut h = initial_step(&rhs, y0, t_end);
    let mut worst_margin = f64::INFINITY;
    let mut worst: Option<Evidence> = None;
    for i in 1..=samples {
        let target = t_end * i as f64 / samples as f64;
        (y, h) = dopri5(&rhs, t, y, target, h, 1e-12, 1e-14)?;
        t = target;
        let bound = ghidaglia_bound(t, params);
        let margin = if bound.is_infinite() {
            1.0
        } else {
            (bound - y) / bound
        };
        let row = Evidence::new("y(t)", t, y, Some(bound));
        if margin < worst_margin {
            worst_margin = margin;
            worst = Some(row.clone());
        }
        report.evidence.push(row);
    }
    report.measure("worst_margin", worst_margin);
    report.measure("y_final", y);
    let pass = worst_margin >= -GHIDAGLIA_RTOL;
    Ok(if pass {
        report.passed()
    } else {
        let w = worst.expect("samples > 0");
        report.failed(w.t, w.value, "extremal solution exceeds the envelope")
    })
}

fn initial_step(f: &impl Fn(f64) -> f64, y0: f64, t_end: f64) -> f64 {
    let slope = f(y0).abs();
    let scale = y0.abs().max(1e-12);
    let h = if slope > 0.0 {
        1e-3 * scale / slope
    } else {
        1e-3 * t_end
    };
    h.min(t_end).max(1e-14 * t_end)
}

/// Adaptive Dormand–Prince 5(4) for a scalar autonomous ODE; integrates
/// from t0 to t1 exactly and returns (y(t1), last accepted step size).
fn dopri5(
    f: &impl Fn(f64) -> f64,
    t0: f64,
    y0: f64,
    t1: f64,
    h0: f64,
    rtol: f64,
    atol: f64,
) -> Result<(f64, f64)> {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // 5th-order minus 4th-order weights
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.min(t1 - t0).max(f64::MIN_POSITIVE);
    let mut last_h = h;
    let mut rejects = 0usize;
    while t < t1 {
        let step_to_end = h >= t1 - t;
        if step_to_end {
            h = t1 - t;
        }
        let mut k = [0.0; 7];
        k[0] = f(y);
        for s in 0..6 {
            let incr: f64 = (0..=s).map(|j| C[s][j] * k[j]).sum();
            k[s + 1] = f(y + h * incr);
        }
        let y_new = y + h * (0..6).map(|j| C[5][j] * k[j]).sum::<f64>();
        let err = h * (0..7).map(|j| E[j] * k[j]).sum::<f64>();
        let scale = atol + rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if !y_new.is_finite() {
            h *= 0.1;
            rejects += 1;
        } else if ratio <= 1.0 {
            t = if step_to_end { t1 } else { t + h };
            y = y_new;
            last_h = h;
            let grow = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
            rejects = 0;
        } else {
            h *= (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
            rejects += 1;
        }
        if rejects > 200 || h < 1e-300 {
            return Err(Error::NonFinite(
                "adaptive ODE integration (step size underflow)",
            ));
        }
    }
    Ok((y, last_h))
}
