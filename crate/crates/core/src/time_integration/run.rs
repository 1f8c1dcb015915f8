use crate::discretization::{integrate, lp_norm, w1p_seminorm, Grid, GridField};
use crate::error::{Error, Result};
use crate::problem::{nonlocal_source, ProblemSpec};
use crate::record::{Sample, Snapshot, TerminalStatus, TrajectoryRecord};

use super::stepper::{explicit_dt_limit, step_explicit_eps, step_imex_with_stats};
use super::{Scheme, StepperConfig};

/// What to record besides the always-present norms.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordOptions {
    /// Additional L^k exponents (f64::INFINITY allowed).
    pub extra_exponents: Vec<f64>,
    /// Keep a field snapshot every this many samples (0 = never).
    pub snapshot_every: usize,
    /// ‖u‖_∞ above this value counts as blow-up.
    pub blowup_threshold: f64,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self {
            extra_exponents: Vec::new(),
            snapshot_every: 0,
            blowup_threshold: 1e8,
        }
    }
}

impl RecordOptions {
    pub fn with_snapshots(every: usize) -> Self {
        Self {
            snapshot_every: every,
            ..Self::default()
        }
    }

    pub(crate) fn wants_snapshot(&self, sample_index: usize) -> bool {
        self.snapshot_every > 0 && sample_index.is_multiple_of(self.snapshot_every)
    }
}

/// `count + 1` equally spaced times 0, T/count, ..., T.
pub fn uniform_sample_times(horizon: f64, count: usize) -> Vec<f64> {
    if count == 0 || horizon == 0.0 {
        return vec![0.0];
    }
    (0..=count)
        .map(|i| {
            if i == count {
                horizon
            } else {
                horizon * i as f64 / count as f64
            }
        })
        .collect()
}

pub(crate) fn check_sample_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Config("no sample times requested".into()));
    }
    if times
        .iter()
        .any(|t| !(t.is_finite() && *t >= 0.0 && *t <= horizon))
    {
        return Err(Error::Config(format!(
            "sample times must lie in [0, {horizon}]"
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(
            "sample times must be strictly ascending".into(),
        ));
    }
    Ok(())
}

fn sample(field: &GridField, spec: &ProblemSpec, t: f64, k0: f64, extra: &[f64]) -> Result<Sample> {
    let grid = &field.grid;
    let fu: Vec<f64> = field.values.iter().map(|&u| spec.source.eval(u)).collect();
    let src = nonlocal_source(&field.values, &grid.weights(), &spec.source, spec.lambda)?;
    Ok(Sample {
        t,
        norm_k0p2: lp_norm(field, k0 + 2.0),
        norm_2: lp_norm(field, 2.0),
        norm_inf: lp_norm(field, f64::INFINITY),
        extra_norms: extra.iter().map(|&k| lp_norm(field, k)).collect(),
        w1p: w1p_seminorm(field, spec.p),
        int_f: integrate(&fu, grid),
        source_max: src.iter().fold(0.0, |m, v| m.max(v.abs())),
    })
}

/// Samples `spec.initial` on `grid` and evolves it; see [`evolve`].
pub fn run_to_time(
    spec: &ProblemSpec,
    grid: &Grid,
    cfg: &StepperConfig,
    sample_times: &[f64],
    opts: &RecordOptions,
) -> Result<TrajectoryRecord> {
    if grid.dim() != spec.domain.dim() || grid.extents() != spec.domain.extents() {
        return Err(Error::Config(
            "grid does not cover the problem domain".into(),
        ));
    }
    evolve(grid.sample(&spec.initial), spec, cfg, sample_times, opts)
}

/// Advances `initial` with the grid scheme in `cfg`, recording at each
/// sample time. Precondition violations are errors; anything that goes
/// wrong during stepping ends the record early with a non-completed status.
pub fn evolve(
    initial: GridField,
    spec: &ProblemSpec,
    cfg: &StepperConfig,
    sample_times: &[f64],
    opts: &RecordOptions,
) -> Result<TrajectoryRecord> {
    spec.validate()?;
    cfg.validate()?;
    check_sample_times(sample_times, spec.horizon)?;
    if cfg.scheme == Scheme::Rk4Spectral {
        return Err(Error::Config(
            "rk4-spectral runs through galerkin_run, not on a grid".into(),
        ));
    }
    if !initial.is_finite() {
        return Err(Error::invalid("u0", "initial field must be finite"));
    }
    let k0 = spec.k0()?;
    let mut record = TrajectoryRecord::new(spec.p, k0, opts.extra_exponents.clone());
    record.grid = Some(initial.grid);

    let mut u = initial;
    let mut t = 0.0;
    let mut step = 0usize;

    for (idx, &target) in sample_times.iter().enumerate() {
        while t < target {
            let remaining = target - t;
            let mut dt = cfg.dt_initial.min(remaining);
            if cfg.scheme == Scheme::ExplicitEuler {
                dt = dt.min(explicit_dt_limit(&u, spec.p, cfg.dt_safety));
            }
            if step >= cfg.max_steps {
                record.status = TerminalStatus::Failed {
                    time: t,
                    step,
                    message: format!("max_steps = {} exhausted", cfg.max_steps),
                };
                return Ok(record);
            }
            let next = match cfg.scheme {
                Scheme::Imex => step_imex_with_stats(&u, spec, dt, cfg).map(|(f, _)| f),
                _ => step_explicit_eps(&u, spec, dt, cfg.epsilon),
            };
            step += 1;
            t = if dt == remaining { target } else { t + dt };
            record.steps = step;
            match next {
                Ok(v) => u = v,
                Err(Error::NonFinite(_)) => {
                    record.status = TerminalStatus::BlewUp { time: t, step };
                    return Ok(record);
                }
                Err(e) => {
                    record.status = TerminalStatus::Failed {
                        time: t,
                        step,
                        message: e.to_string(),
                    };
                    return Ok(record);
                }
            }
            if u.max_abs() > opts.blowup_threshold {
                record.status = TerminalStatus::BlewUp { time: t, step };
                return Ok(record);
            }
        }
        match sample(&u, spec, target, k0, &opts.extra_exponents) {
            Ok(s) => record.samples.push(s),
            Err(e) => {
                record.status = TerminalStatus::Failed {
                    time: t,
                    step,
                    message: e.to_string(),
                };
                return Ok(record);
            }
        }
        if opts.wants_snapshot(idx) {
            record.snapshots.push(Snapshot {
                t: target,
                values: u.values.clone(),
            });
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{DomainSpec, InitialCondition, Profile, SourceFunction};

    fn spec(
        horizon: f64,
        lambda: f64,
        source: SourceFunction,
        ic: InitialCondition,
    ) -> ProblemSpec {
        ProblemSpec {
            p: 2.0,
            lambda,
            domain: DomainSpec::interval(1.0).unwrap(),
            source,
            initial: ic,
            horizon,
        }
    }

    #[test]
    fn zero_horizon_records_initial_state() {
        let s = spec(
            0.0,
            1.0,
            SourceFunction::constant(1.0),
            InitialCondition::new(Profile::Sine, 0.2),
        );
        let g = Grid::new_1d(16, 1.0).unwrap();
        let rec = run_to_time(
            &s,
            &g,
            &StepperConfig::default(),
            &[0.0],
            &RecordOptions::default(),
        )
        .unwrap();
        assert_eq!(rec.samples.len(), 1);
        assert_eq!(rec.steps, 0);
        let u0 = g.sample(&s.initial);
        assert_eq!(rec.samples[0].norm_2, lp_norm(&u0, 2.0));
        assert!(rec.is_completed());
    }

    #[test]
    fn steady_state_constant_source() {
        let lambda = 1.0;
        let s = spec(
            3.0,
            lambda,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        let g = Grid::new_1d(64, 1.0).unwrap();
        let rec = run_to_time(
            &s,
            &g,
            &StepperConfig::imex(0.01),
            &[0.0, 3.0],
            &RecordOptions::with_snapshots(1),
        )
        .unwrap();
        let u = &rec.snapshots[1].values;
        let mh = g.discrete_measure();
        let err = (0..g.len())
            .map(|i| {
                let x = g.coords(i)[0];
                (u[i] - lambda * x * (1.0 - x) / (2.0 * mh * mh)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "err {err}");
    }

    #[test]
    fn runs_are_deterministic() {
        let s = spec(
            0.2,
            2.0,
            SourceFunction::quadratic(1.0),
            InitialCondition::new(Profile::Modes(vec![0.3, 0.1]), 1.0),
        );
        let g = Grid::new_1d(32, 1.0).unwrap();
        let opts = RecordOptions {
            extra_exponents: vec![4.0],
            snapshot_every: 2,
            ..RecordOptions::default()
        };
        let times = uniform_sample_times(0.2, 8);
        let a = run_to_time(&s, &g, &StepperConfig::explicit(1e-3), &times, &opts).unwrap();
        let b = run_to_time(&s, &g, &StepperConfig::explicit(1e-3), &times, &opts).unwrap();
        assert!(a.bitwise_eq(&b));
        assert_eq!(a.samples.len(), 9);
        assert_eq!(a.snapshots.len(), 5);
        assert_eq!(a.samples[0].extra_norms.len(), 1);
    }

    #[test]
    fn sample_time_validation() {
        let s = spec(
            1.0,
            1.0,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        let g = Grid::new_1d(8, 1.0).unwrap();
        let cfg = StepperConfig::default();
        let opts = RecordOptions::default();
        assert!(run_to_time(&s, &g, &cfg, &[0.5, 0.2], &opts).is_err());
        assert!(run_to_time(&s, &g, &cfg, &[0.0, 2.0], &opts).is_err());
        assert!(run_to_time(&s, &g, &cfg, &[], &opts).is_err());
    }

    #[test]
    fn blow_up_threshold_ends_record() {
        let s = spec(
            1.0,
            1e12,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        let g = Grid::new_1d(16, 1.0).unwrap();
        let rec = run_to_time(
            &s,
            &g,
            &StepperConfig::imex(1e-3),
            &[0.0, 1.0],
            &RecordOptions::default(),
        )
        .unwrap();
        assert!(matches!(rec.status, TerminalStatus::BlewUp { step: 1, .. }));
        assert_eq!(rec.samples.len(), 1);
    }

    #[test]
    fn max_steps_exhaustion_is_reported() {
        let s = spec(
            1.0,
            1.0,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        let g = Grid::new_1d(8, 1.0).unwrap();
        let cfg = StepperConfig {
            max_steps: 3,
            ..StepperConfig::imex(0.1)
        };
        let rec = run_to_time(&s, &g, &cfg, &[0.0, 1.0], &RecordOptions::default()).unwrap();
        assert!(matches!(rec.status, TerminalStatus::Failed { step: 3, .. }));
    }

    #[test]
    fn uniform_times() {
        assert_eq!(uniform_sample_times(0.0, 10), vec![0.0]);
        let t = uniform_sample_times(1.0, 4);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
