//! Experiment orchestration and the exit-status contract.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    absorbing_probe, boundedness_probe, contraction_probe, contraction_rate_stable,
    default_test_functions, threshold_probe, verify_ghidaglia, weak_residual, GhidagliaParams,
    ProbeReport, ProbeSetup, DEFAULT_TAU_FRACTION,
};
use crate::discretization::GridField;
use crate::error::{Error, Result};
use crate::problem::{InitialCondition, ProblemSpec, Profile};
use crate::record::{TerminalStatus, TrajectoryRecord};
use crate::time_integration::{galerkin_run, run_to_time, uniform_sample_times, Scheme};

use super::config::{ExperimentConfig, RunConfig};
use super::output::{dat, fmt_num, write, write_record};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PLAP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "plap-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    Pass,
    ProbeFail,
    BlewUp,
    Failed,
    ConfigError,
}

impl Outcome {
    /// 0 completed/pass, 1 configuration error, 2 probe failure,
    /// 3 unexpected blow-up or stepper failure.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Completed | Outcome::Pass => 0,
            Outcome::ConfigError => 1,
            Outcome::ProbeFail => 2,
            Outcome::BlewUp | Outcome::Failed => 3,
        }
    }

    fn from_status(status: &TerminalStatus) -> Self {
        match status {
            TerminalStatus::Completed => Outcome::Completed,
            TerminalStatus::BlewUp { .. } => Outcome::BlewUp,
            TerminalStatus::Failed { .. } => Outcome::Failed,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::ProbeFail
        }
    }
}

/// Contents of summary.json.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub outcome: Outcome,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal: Option<TerminalStatus>,
    pub measured: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

impl Summary {
    fn new(experiment: &str, outcome: Outcome) -> Self {
        Self {
            experiment: experiment.to_string(),
            outcome,
            exit_code: outcome.exit_code(),
            pass: None,
            terminal: None,
            measured: BTreeMap::new(),
            probes: Vec::new(),
            error: None,
            config: None,
        }
    }

    /// Summary for a document that never made it to a valid configuration.
    pub fn config_error(err: &Error) -> Self {
        let mut s = Self::new("none", Outcome::ConfigError);
        s.error = Some(err.to_string());
        s
    }

    fn set_outcome(&mut self, outcome: Outcome) {
        self.outcome = outcome;
        self.exit_code = outcome.exit_code();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary always serializes")
    }
}

/// Execution settings that are not part of the configuration document.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Overrides the configured seed.
    pub seed: Option<u64>,
}

/// `--out`, then the configured directory, then `PLAP_OUT_DIR`, then
/// `plap-out`.
pub fn resolve_out_dir(config: &RunConfig, cli: Option<&Path>) -> PathBuf {
    if let Some(dir) = cli {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.output.dir {
        return PathBuf::from(dir);
    }
    match std::env::var(OUT_DIR_ENV) {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// Runs the configured experiment, writes every artifact plus summary.json
/// under the resolved output directory and returns the summary. Only I/O
/// failures surface as `Err`; everything else is encoded in the summary.
pub fn run(config: &RunConfig, options: &RunOptions) -> Result<Summary> {
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    let dir = resolve_out_dir(&config, options.out_dir.as_deref());
    config.output.dir = Some(dir.to_string_lossy().into_owned());
    std::fs::create_dir_all(&dir)?;

    let exec = || execute(&config, &dir);
    let result = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(exec),
        None => exec(),
    };
    let mut summary = match result {
        Ok(summary) => summary,
        Err(Error::Io(msg)) => return Err(Error::Io(msg)),
        Err(err) => {
            let mut s = Summary::config_error(&err);
            s.experiment = config.experiment.name().to_string();
            s
        }
    };
    summary.config = Some(config);
    write(&dir.join("summary.json"), &summary.to_json())?;
    Ok(summary)
}

fn execute(config: &RunConfig, dir: &Path) -> Result<Summary> {
    match &config.experiment {
        ExperimentConfig::Evolve {} => evolve_experiment(config, dir),
        ExperimentConfig::Ghidaglia {
            draws,
            samples,
            t_end,
        } => ghidaglia_experiment(config, dir, *draws, *samples, *t_end),
        ExperimentConfig::Threshold {
            c7,
            amplitudes,
            bisection_steps,
        } => threshold_experiment(config, dir, *c7, amplitudes, *bisection_steps),
        ExperimentConfig::Contraction { perturbation, node } => {
            contraction_experiment(config, dir, *perturbation, node.unwrap_or(0))
        }
        ExperimentConfig::Absorbing { family, tau } => {
            absorbing_experiment(config, dir, *family, tau.unwrap_or(0.0))
        }
        ExperimentConfig::WeakResidual { tests, tolerance } => {
            weak_experiment(config, dir, *tests, *tolerance)
        }
        ExperimentConfig::Sweep { axes } if axes.is_empty() => evolve_experiment(config, dir),
        ExperimentConfig::Sweep { .. } => sweep_experiment(config, dir),
    }
}

fn setup(config: &RunConfig) -> Result<ProbeSetup> {
    let mut setup = ProbeSetup::new(config.grid()?, config.stepper.build());
    setup.opts = config.output.record_options();
    setup.samples = config.output.samples.max(1);
    Ok(setup)
}

fn simulate(config: &RunConfig, spec: &ProblemSpec) -> Result<TrajectoryRecord> {
    let cfg = config.stepper.build();
    let times = uniform_sample_times(spec.horizon, config.output.samples);
    let opts = config.output.record_options();
    if cfg.scheme == Scheme::Rk4Spectral {
        galerkin_run(spec, config.discretization.modes, &cfg, &times, &opts)
    } else {
        run_to_time(spec, &config.grid()?, &cfg, &times, &opts)
    }
}

fn record_measurements(summary: &mut Summary, record: &TrajectoryRecord) {
    let m = &mut summary.measured;
    m.insert("steps".into(), record.steps as f64);
    m.insert("k0".into(), record.k0);
    if let Some(last) = record.last() {
        m.insert("final_t".into(), last.t);
        m.insert("final_norm_k0p2".into(), last.norm_k0p2);
        m.insert("final_norm_inf".into(), last.norm_inf);
        m.insert("final_w1p".into(), last.w1p);
    }
    let sup = record
        .samples
        .iter()
        .map(|s| s.norm_inf)
        .fold(0.0, f64::max);
    m.insert("sup_norm_inf".into(), sup);
}

fn evolve_experiment(config: &RunConfig, dir: &Path) -> Result<Summary> {
    let spec = config.problem_spec()?;
    let record = simulate(config, &spec)?;
    write_record(dir, &record, config.output.plot)?;
    let mut summary = Summary::new("evolve", Outcome::from_status(&record.status));
    record_measurements(&mut summary, &record);
    if record.is_completed() && spec.horizon > 0.0 {
        let report = boundedness_probe(&record, DEFAULT_TAU_FRACTION * spec.horizon, None)?;
        summary.probes.push(report);
    }
    summary.terminal = Some(record.status);
    Ok(summary)
}

/// Parameter ranges for the randomized envelope check: γ ∈ [0.1, 10],
/// ν ∈ (1, 3], δ ∈ [0, 10], y0 ∈ (0, 100].
pub fn draw_ghidaglia(rng: &mut ChaCha8Rng) -> (GhidagliaParams, f64) {
    let gamma = 0.1 + 9.9 * rng.gen::<f64>();
    let nu = 3.0 - 2.0 * rng.gen::<f64>();
    let delta = 10.0 * rng.gen::<f64>();
    let y0 = 100.0 * (1.0 - rng.gen::<f64>());
    (GhidagliaParams { gamma, nu, delta }, y0)
}

fn ghidaglia_experiment(
    config: &RunConfig,
    dir: &Path,
    draws: usize,
    samples: usize,
    t_end: f64,
) -> Result<Summary> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params: Vec<(GhidagliaParams, f64)> =
        (0..draws).map(|_| draw_ghidaglia(&mut rng)).collect();
    let reports: Vec<ProbeReport> = params
        .par_iter()
        .map(|(p, y0)| verify_ghidaglia(p, *y0, t_end, samples))
        .collect::<Result<_>>()?;

    let mut csv = String::from("draw,gamma,nu,delta,y0,worst_margin,pass\n");
    for (i, ((p, y0), r)) in params.iter().zip(&reports).enumerate() {
        let cols = [p.gamma, p.nu, p.delta, *y0, r.measured["worst_margin"]].map(fmt_num);
        csv.push_str(&format!("{i},{},{}\n", cols.join(","), r.pass));
        if config.output.plot {
            let y: Vec<(f64, f64)> = r.evidence.iter().map(|e| (e.t, e.value)).collect();
            let b: Vec<(f64, f64)> = r
                .evidence
                .iter()
                .map(|e| (e.t, e.bound.unwrap_or(f64::NAN)))
                .collect();
            write(
                &dir.join("plot").join(format!("draw_{i:03}_y.dat")),
                &dat(&y),
            )?;
            write(
                &dir.join("plot").join(format!("draw_{i:03}_bound.dat")),
                &dat(&b),
            )?;
        }
    }
    write(&dir.join("ghidaglia.csv"), &csv)?;

    let pass = reports.iter().all(|r| r.pass);
    let worst = reports
        .iter()
        .map(|r| r.measured["worst_margin"])
        .fold(f64::INFINITY, f64::min);
    let mut summary = Summary::new("ghidaglia", Outcome::from_pass(pass));
    summary.pass = Some(pass);
    summary.measured.insert("draws".into(), draws as f64);
    summary.measured.insert("worst_margin".into(), worst);
    summary.measured.insert(
        "failures".into(),
        reports.iter().filter(|r| !r.pass).count() as f64,
    );
    summary.probes = reports;
    Ok(summary)
}

fn threshold_experiment(
    config: &RunConfig,
    dir: &Path,
    c7: f64,
    amplitudes: &[f64],
    bisection_steps: usize,
) -> Result<Summary> {
    let spec = config.problem_spec()?;
    let report = threshold_probe(&spec, &setup(config)?, c7, amplitudes, bisection_steps)?;
    let mut csv = String::from("amplitude,status,end_time,sup_norm_inf\n");
    let mut rows = Vec::new();
    for e in &report.evidence {
        let sup = e.bound.unwrap_or(f64::NAN);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(e.value),
            e.label,
            fmt_num(e.t),
            fmt_num(sup)
        ));
        rows.push((e.value, sup));
    }
    write(&dir.join("threshold.csv"), &csv)?;
    if config.output.plot {
        write(&dir.join("plot").join("threshold.dat"), &dat(&rows))?;
    }
    Ok(probe_summary("threshold", report))
}

fn probe_summary(name: &str, report: ProbeReport) -> Summary {
    let mut summary = Summary::new(name, Outcome::from_pass(report.pass));
    summary.pass = Some(report.pass);
    summary.measured = report.measured.clone();
    summary.probes.push(report);
    summary
}

fn contraction_experiment(
    config: &RunConfig,
    dir: &Path,
    perturbation: f64,
    node: usize,
) -> Result<Summary> {
    let spec = config.problem_spec()?;
    let base = setup(config)?;
    let u0 = base.grid.sample(&spec.initial);
    let mut bumped = u0.clone();
    bumped.values[node] += perturbation;
    let mut refined = base.clone();
    refined.cfg.dt_initial *= 0.5;

    let t_end = spec.horizon;
    let same = contraction_probe(&spec, &base, &u0, &u0, t_end)?;
    let coarse = contraction_probe(&spec, &base, &u0, &bumped, t_end)?;
    let fine = contraction_probe(&spec, &refined, &u0, &bumped, t_end)?;

    if config.output.plot {
        let rows: Vec<(f64, f64)> = coarse.evidence.iter().map(|e| (e.t, e.value)).collect();
        write(&dir.join("plot").join("difference.dat"), &dat(&rows))?;
    }
    let rate = coarse.measured.get("rate").copied().unwrap_or(f64::NAN);
    let rate_fine = fine.measured.get("rate").copied().unwrap_or(f64::NAN);
    let stable = contraction_rate_stable(rate, rate_fine);
    let pass = same.pass && coarse.pass && fine.pass && stable;
    let mut summary = Summary::new("contraction", Outcome::from_pass(pass));
    summary.pass = Some(pass);
    let m = &mut summary.measured;
    m.insert("rate".into(), rate);
    m.insert("rate_half_dt".into(), rate_fine);
    m.insert(
        "identical_inputs_pass".into(),
        f64::from(u8::from(same.pass)),
    );
    m.insert("perturbation".into(), perturbation);
    summary.probes = vec![same, coarse, fine];
    Ok(summary)
}

/// Random sine-mode initial fields with coefficients bounded by the
/// configured amplitude.
pub fn random_family(
    spec: &ProblemSpec,
    grid: &crate::discretization::Grid,
    count: usize,
    seed: u64,
) -> Vec<GridField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = spec.initial.amplitude;
    (0..count)
        .map(|_| {
            let coeffs: Vec<f64> = (0..4)
                .map(|k| a * rng.gen_range(-1.0..=1.0) / (k + 1) as f64)
                .collect();
            grid.sample(&InitialCondition::new(Profile::Modes(coeffs), 1.0))
        })
        .collect()
}

fn absorbing_experiment(
    config: &RunConfig,
    dir: &Path,
    family: usize,
    tau: f64,
) -> Result<Summary> {
    let spec = config.problem_spec()?;
    let setup = setup(config)?;
    let members = random_family(&spec, &setup.grid, family, config.seed);
    let report = absorbing_probe(&spec, &setup, &members, tau, spec.horizon)?;
    if config.output.plot {
        let rows: Vec<(f64, f64)> = report
            .evidence
            .iter()
            .enumerate()
            .map(|(i, e)| (i as f64, e.value))
            .collect();
        write(&dir.join("plot").join("member_radius.dat"), &dat(&rows))?;
    }
    Ok(probe_summary("absorbing", report))
}

fn weak_experiment(
    config: &RunConfig,
    dir: &Path,
    tests: usize,
    tolerance: Option<f64>,
) -> Result<Summary> {
    let spec = config.problem_spec()?;
    let mut cfg = config.clone();
    cfg.output.snapshot_every = 1;
    let record = simulate(&cfg, &spec)?;
    write_record(dir, &record, config.output.plot)?;
    if !record.is_completed() {
        let mut summary = Summary::new("weak-residual", Outcome::from_status(&record.status));
        record_measurements(&mut summary, &record);
        summary.terminal = Some(record.status);
        return Ok(summary);
    }
    let residual = weak_residual(
        &record,
        &spec,
        &default_test_functions(tests, spec.domain.dim()),
    )?;
    let pass = tolerance.is_none_or(|tol| residual <= tol);
    let mut summary = Summary::new("weak-residual", Outcome::from_pass(pass));
    summary.pass = Some(pass);
    record_measurements(&mut summary, &record);
    summary.measured.insert("residual".into(), residual);
    summary.terminal = Some(record.status);
    Ok(summary)
}

/// Cross product of the sweep axes, first axis outermost.
fn sweep_points(config: &RunConfig) -> Vec<Vec<f64>> {
    let ExperimentConfig::Sweep { axes } = &config.experiment else {
        return Vec::new();
    };
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

fn sweep_experiment(config: &RunConfig, dir: &Path) -> Result<Summary> {
    let ExperimentConfig::Sweep { axes } = &config.experiment else {
        unreachable!("dispatched on the sweep experiment");
    };
    let points = sweep_points(config);
    // validate every point before launching any of them
    let configs: Vec<RunConfig> = points
        .iter()
        .map(|values| {
            let mut c = config.clone();
            for (axis, &v) in axes.iter().zip(values) {
                axis.name.apply(&mut c.problem, v);
            }
            c.experiment = ExperimentConfig::Evolve {};
            c.normalize()
        })
        .collect::<Result<_>>()?;

    let results: Vec<Summary> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let point_dir = dir.join(format!("point_{i:04}"));
            let mut s = evolve_experiment(c, &point_dir)?;
            s.config = Some(c.clone());
            write(&point_dir.join("summary.json"), &s.to_json())?;
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let mut header: Vec<&str> = axes.iter().map(|a| a.name.label()).collect();
    header.extend([
        "status",
        "final_t",
        "sup_norm_inf",
        "final_norm_k0p2",
        "final_w1p",
        "steps",
    ]);
    let mut csv = header.join(",") + "\n";
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for (values, s) in points.iter().zip(&results) {
        let status = match &s.terminal {
            Some(TerminalStatus::Completed) => "completed",
            Some(TerminalStatus::BlewUp { .. }) => "blew-up",
            _ => "failed",
        };
        *counts.entry(format!("points_{status}")).or_default() += 1.0;
        let mut row: Vec<String> = values.iter().map(|&v| fmt_num(v)).collect();
        row.push(status.to_string());
        for key in ["final_t", "sup_norm_inf", "final_norm_k0p2", "final_w1p"] {
            row.push(fmt_num(s.measured.get(key).copied().unwrap_or(f64::NAN)));
        }
        row.push(format!(
            "{}",
            s.measured.get("steps").copied().unwrap_or(0.0)
        ));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    write(&dir.join("sweep.csv"), &csv)?;

    let mut summary = Summary::new("sweep", Outcome::Completed);
    summary.measured = counts;
    summary
        .measured
        .insert("points".into(), points.len() as f64);
    if results.iter().any(|s| s.outcome == Outcome::ConfigError) {
        summary.set_outcome(Outcome::ConfigError);
    }
    Ok(summary)
}
