//! Trajectory-level checks: a priori boundedness, the smallness threshold,
//! L² contraction between two solutions, and the W^{1,p} absorbing ball.

use rayon::prelude::*;

use crate::discretization::{lp_norm_values, Grid, GridField};
use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, Thresholds};
use crate::record::{TerminalStatus, TrajectoryRecord};
use crate::time_integration::{
    evolve, run_to_time, uniform_sample_times, RecordOptions, StepperConfig,
};

use super::report::{Evidence, ProbeKind, ProbeReport};

/// Allowed relative growth of a measured sup when the horizon is extended.
pub const HORIZON_GROWTH_TOLERANCE: f64 = 0.01;

/// Allowed relative change of the absorbing radius when the horizon doubles.
pub const ABSORBING_RADIUS_TOLERANCE: f64 = 0.05;

/// Allowed relative change of the fitted contraction rate under dt halving.
pub const CONTRACTION_RATE_TOLERANCE: f64 = 0.1;

/// Whether two fitted contraction rates agree within
/// [`CONTRACTION_RATE_TOLERANCE`] relative to the larger magnitude.
pub fn contraction_rate_stable(rate: f64, rate_refined: f64) -> bool {
    if !(rate.is_finite() && rate_refined.is_finite()) {
        return false;
    }
    let scale = rate.abs().max(rate_refined.abs());
    (rate - rate_refined).abs() <= CONTRACTION_RATE_TOLERANCE * scale
}

/// Default τ as a fraction of the horizon.
pub const DEFAULT_TAU_FRACTION: f64 = 0.05;

fn status_label(status: &TerminalStatus) -> &'static str {
    match status {
        TerminalStatus::Completed => "completed",
        TerminalStatus::BlewUp { .. } => "blew-up",
        TerminalStatus::Failed { .. } => "failed",
    }
}

fn failure_report(mut report: ProbeReport, record: &TrajectoryRecord, what: &str) -> ProbeReport {
    let t = record.failure_time().unwrap_or(f64::NAN);
    let last = record.last().map_or(f64::NAN, |s| s.norm_inf);
    report.measure("failure_time", t);
    report.failed(t, last, format!("{what}: {}", status_label(&record.status)))
}

/// Measures c3(τ) = sup_{t≥τ} ‖u‖_{k0+2} and c4(τ) = sup_{t≥τ} ‖u‖_∞ and,
/// when a run over a longer horizon is supplied, checks that neither sup
/// grows by more than [`HORIZON_GROWTH_TOLERANCE`].
pub fn boundedness_probe(
    record: &TrajectoryRecord,
    tau: f64,
    extended: Option<&TrajectoryRecord>,
) -> Result<ProbeReport> {
    let mut report = ProbeReport::new(ProbeKind::Boundedness);
    report.measure("tau", tau);
    if !record.is_completed() {
        return Ok(failure_report(
            report,
            record,
            "trajectory did not complete",
        ));
    }
    let (c3, c4) = sups(record, tau)?;
    report.measure("c3", c3.1);
    report.measure("c4", c4.1);
    report
        .evidence
        .push(Evidence::new("sup_norm_k0p2", c3.0, c3.1, None));
    report
        .evidence
        .push(Evidence::new("sup_norm_inf", c4.0, c4.1, None));
    if !(c3.1.is_finite() && c4.1.is_finite()) {
        return Ok(report.failed(c4.0, c4.1, "non-finite norm after tau"));
    }
    if let Some(ext) = extended {
        if !ext.is_completed() {
            return Ok(failure_report(
                report,
                ext,
                "extended trajectory did not complete",
            ));
        }
        let (e3, e4) = sups(ext, tau)?;
        report.measure("c3_extended", e3.1);
        report.measure("c4_extended", e4.1);
        report.evidence.push(Evidence::new(
            "sup_norm_k0p2_extended",
            e3.0,
            e3.1,
            Some(c3.1),
        ));
        report.evidence.push(Evidence::new(
            "sup_norm_inf_extended",
            e4.0,
            e4.1,
            Some(c4.1),
        ));
        let limit = 1.0 + HORIZON_GROWTH_TOLERANCE;
        if e3.1 > c3.1 * limit {
            return Ok(report.failed(e3.0, e3.1, "sup of the k0+2 norm grows with the horizon"));
        }
        if e4.1 > c4.1 * limit {
            return Ok(report.failed(e4.0, e4.1, "sup of the max norm grows with the horizon"));
        }
    }
    Ok(report.passed())
}

fn sups(record: &TrajectoryRecord, tau: f64) -> Result<((f64, f64), (f64, f64))> {
    let c3 = record.sup_from(tau, |s| s.norm_k0p2);
    let c4 = record.sup_from(tau, |s| s.norm_inf);
    match (c3, c4) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Config(format!("no samples at or after tau = {tau}"))),
    }
}

/// Shared run parameters for the multi-trajectory probes.
#[derive(Debug, Clone)]
pub struct ProbeSetup {
    pub grid: Grid,
    pub cfg: StepperConfig,
    pub opts: RecordOptions,
    /// Number of sample intervals over the probe horizon.
    pub samples: usize,
}

impl ProbeSetup {
    pub fn new(grid: Grid, cfg: StepperConfig) -> Self {
        Self {
            grid,
            cfg,
            opts: RecordOptions::default(),
            samples: 50,
        }
    }
}

/// Scales `template.initial` so that the discrete ‖u0‖_{k0+2} equals each
/// requested amplitude, runs every amplitude, and checks that everything
/// strictly below d0 completes with finite norms. Behaviour at or above d0
/// is reported, never asserted. Where a completed amplitude is followed by
/// a blown-up one, the boundary between them is refined by
/// `bisection_steps` halvings.
pub fn threshold_probe(
    template: &ProblemSpec,
    setup: &ProbeSetup,
    c7: f64,
    amplitudes: &[f64],
    bisection_steps: usize,
) -> Result<ProbeReport> {
    template.validate()?;
    let thresholds = Thresholds::for_problem(template, c7)?;
    let k = thresholds.k0 + 2.0;
    let unit = setup.grid.sample(&crate::problem::InitialCondition {
        amplitude: 1.0,
        ..template.initial.clone()
    });
    let unit_norm = lp_norm_values(&unit.values, &setup.grid, k);
    if !(unit_norm > 0.0) {
        return Err(Error::Config(
            "initial profile has zero norm and cannot be scaled".into(),
        ));
    }
    if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::Config("amplitudes must be finite and ≥ 0".into()));
    }
    let mut sorted = amplitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let times = uniform_sample_times(template.horizon, setup.samples);
    let run_one = |a: f64| -> Result<TrajectoryRecord> {
        let mut spec = template.clone();
        spec.initial.amplitude = a / unit_norm;
        run_to_time(&spec, &setup.grid, &setup.cfg, &times, &setup.opts)
    };
    let records: Vec<TrajectoryRecord> = sorted
        .par_iter()
        .map(|&a| run_one(a))
        .collect::<Result<_>>()?;

    let mut report = ProbeReport::new(ProbeKind::Threshold);
    report.measure("k0", thresholds.k0);
    report.measure("d0", thresholds.d0);
    report.measure("c7", c7);
    let mut below_failure: Option<(f64, f64)> = None;
    let mut completed_below = 0usize;
    for (&a, rec) in sorted.iter().zip(&records) {
        let done = rec.is_completed()
            && rec
                .samples
                .iter()
                .all(|s| s.norm_k0p2.is_finite() && s.norm_inf.is_finite());
        let t = rec.failure_time().unwrap_or(template.horizon);
        let sup = rec.samples.iter().map(|s| s.norm_inf).fold(0.0, f64::max);
        report
            .evidence
            .push(Evidence::new(status_label(&rec.status), t, a, Some(sup)));
        if a < thresholds.d0 {
            if done {
                completed_below += 1;
            } else if below_failure.is_none() {
                below_failure = Some((t, a));
            }
        }
    }
    report.measure("completed_below_d0", completed_below as f64);

    // first completed → not-completed transition in amplitude order
    let transition = sorted
        .iter()
        .zip(&records)
        .collect::<Vec<_>>()
        .windows(2)
        .find(|w| w[0].1.is_completed() && !w[1].1.is_completed())
        .map(|w| (*w[0].0, *w[1].0));
    match transition {
        Some((mut lo, mut hi)) => {
            for _ in 0..bisection_steps {
                let mid = 0.5 * (lo + hi);
                if run_one(mid)?.is_completed() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            report.measure("empirical_boundary", 0.5 * (lo + hi));
            report.measure("boundary_bracket_lo", lo);
            report.measure("boundary_bracket_hi", hi);
        }
        None => {
            let first_bad = sorted.iter().zip(&records).find(|(_, r)| !r.is_completed());
            if let Some((&a, _)) = first_bad {
                report.measure("empirical_boundary", a);
            }
        }
    }

    Ok(match below_failure {
        Some((t, a)) => report.failed(t, a, "amplitude below d0 did not complete"),
        None => report.passed(),
    })
}

/// Evolves two initial fields under the same problem and fits the smallest
/// C with ‖w(t)‖₂ ≤ ‖w(0)‖₂ e^{Ct} at every sample, w = u_a - u_b. Equal
/// inputs must give bitwise-identical trajectories.
pub fn contraction_probe(
    spec: &ProblemSpec,
    setup: &ProbeSetup,
    u0_a: &GridField,
    u0_b: &GridField,
    t_end: f64,
) -> Result<ProbeReport> {
    if u0_a.grid != u0_b.grid || u0_a.grid != setup.grid {
        return Err(Error::Config(
            "both initial fields must live on the probe grid".into(),
        ));
    }
    let mut spec = spec.clone();
    spec.horizon = t_end;
    let times = uniform_sample_times(t_end, setup.samples);
    let opts = RecordOptions {
        snapshot_every: 1,
        ..setup.opts.clone()
    };
    let (ra, rb) = rayon::join(
        || evolve(u0_a.clone(), &spec, &setup.cfg, &times, &opts),
        || evolve(u0_b.clone(), &spec, &setup.cfg, &times, &opts),
    );
    let (ra, rb) = (ra?, rb?);

    let mut report = ProbeReport::new(ProbeKind::Contraction);
    for rec in [&ra, &rb] {
        if !rec.is_completed() {
            return Ok(failure_report(report, rec, "trajectory did not complete"));
        }
    }

    let identical_inputs = u0_a
        .values
        .iter()
        .zip(&u0_b.values)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let diffs: Vec<(f64, f64)> = ra
        .snapshots
        .iter()
        .zip(&rb.snapshots)
        .map(|(a, b)| {
            let w: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            (a.t, lp_norm_values(&w, &setup.grid, 2.0))
        })
        .collect();

    if identical_inputs {
        let same = ra.bitwise_eq(&rb);
        report.measure("rate", 0.0);
        report.measure(
            "max_difference",
            diffs.iter().map(|d| d.1).fold(0.0, f64::max),
        );
        for &(t, w) in &diffs {
            report
                .evidence
                .push(Evidence::new("l2_difference", t, w, Some(0.0)));
        }
        return Ok(if same && diffs.iter().all(|d| d.1 == 0.0) {
            report.passed()
        } else {
            let (t, w) = diffs
                .iter()
                .copied()
                .find(|d| d.1 != 0.0)
                .unwrap_or((0.0, f64::NAN));
            report.failed(t, w, "identical inputs produced different trajectories")
        });
    }

    let w0 = diffs[0].1;
    if !(w0 > 0.0) {
        return Err(Error::Config("initial difference must be nonzero".into()));
    }
    let rate = diffs
        .iter()
        .skip(1)
        .filter(|d| d.0 > 0.0)
        .map(|&(t, w)| (w / w0).ln() / t)
        .fold(f64::NEG_INFINITY, f64::max);
    report.measure("rate", rate);
    report.measure("initial_difference", w0);
    for &(t, w) in &diffs {
        report.evidence.push(Evidence::new(
            "l2_difference",
            t,
            w,
            Some(w0 * (rate * t).exp()),
        ));
    }
    Ok(if rate.is_finite() {
        report.passed()
    } else {
        let (t, w) = *diffs.last().expect("at least one sample");
        report.failed(
            t,
            w,
            "difference is not controlled by any finite exponential rate",
        )
    })
}

/// Evolves a family of initial fields to 2·t_end and measures
/// R = sup_{τ ≤ t ≤ t_end} ‖u(t)‖_{W^{1,p}} over the family, and the same
/// sup over [τ, 2 t_end]. Passes when every run completes and the radius
/// changes by less than [`ABSORBING_RADIUS_TOLERANCE`].
pub fn absorbing_probe(
    template: &ProblemSpec,
    setup: &ProbeSetup,
    family: &[GridField],
    tau: f64,
    t_end: f64,
) -> Result<ProbeReport> {
    if family.len() < 5 {
        return Err(Error::Config(
            "absorbing probe needs a family of at least 5 initial fields".into(),
        ));
    }
    if family.iter().any(|f| f.grid != setup.grid) {
        return Err(Error::Config(
            "family members must live on the probe grid".into(),
        ));
    }
    if !(tau >= 0.0 && tau < t_end) {
        return Err(Error::Config("need 0 ≤ tau < t_end".into()));
    }
    let mut spec = template.clone();
    spec.horizon = 2.0 * t_end;
    let times = uniform_sample_times(2.0 * t_end, 2 * setup.samples);
    let records: Vec<TrajectoryRecord> = family
        .par_iter()
        .map(|u0| evolve(u0.clone(), &spec, &setup.cfg, &times, &setup.opts))
        .collect::<Result<_>>()?;

    let mut report = ProbeReport::new(ProbeKind::Absorbing);
    report.measure("tau", tau);
    for rec in &records {
        if !rec.is_completed() {
            return Ok(failure_report(
                report,
                rec,
                "family member did not complete",
            ));
        }
    }
    let mut radius = 0.0f64;
    let mut radius_doubled = 0.0f64;
    for (i, rec) in records.iter().enumerate() {
        let window = rec
            .samples
            .iter()
            .filter(|s| s.t >= tau && s.t <= t_end)
            .map(|s| s.w1p)
            .fold(0.0, f64::max);
        let full = rec.sup_from(tau, |s| s.w1p).map_or(0.0, |x| x.1);
        report.evidence.push(Evidence::new(
            format!("member_{i}"),
            t_end,
            window,
            Some(full),
        ));
        radius = radius.max(window);
        radius_doubled = radius_doubled.max(full);
    }
    let change = if radius > 0.0 {
        (radius_doubled - radius).abs() / radius
    } else if radius_doubled == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    report.measure("radius", radius);
    report.measure("radius_doubled_horizon", radius_doubled);
    report.measure("relative_change", change);
    Ok(
        if radius.is_finite() && change < ABSORBING_RADIUS_TOLERANCE {
            report.passed()
        } else {
            report.failed(
                2.0 * t_end,
                radius_doubled,
                "absorbing radius grows with the horizon",
            )
        },
    )
}
