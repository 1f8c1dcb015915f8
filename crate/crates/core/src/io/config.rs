//! JSON run configuration: strict schema, defaults, and conversion to the
//! solver types.

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::problem::{
    DomainSpec, InitialCondition, ProblemSpec, Profile, SourceFunction, Thresholds,
};
use crate::time_integration::{RecordOptions, Scheme, StepperConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub stepper: StepperBlock,
    #[serde(deserialize_with = "string_or_struct")]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(deserialize_with = "string_or_struct")]
    pub source: SourceConfig,
    pub domain: DomainConfig,
    pub u0: InitialConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

/// Source nonlinearity. A bare string selects a built-in with its default
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    Constant {
        #[serde(default = "one")]
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Bounds>,
    },
    /// ξ² + shift
    Quadratic {
        #[serde(default = "one")]
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Bounds>,
    },
    /// coefficient |ξ|^exponent + shift
    Power {
        #[serde(default = "one")]
        coefficient: f64,
        #[serde(default = "two")]
        exponent: f64,
        #[serde(default = "one")]
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Bounds>,
    },
    /// exp(rate · min(|ξ|, cap))
    ExponentialTruncated {
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Bounds>,
    },
    Table {
        xi: Vec<f64>,
        values: Vec<f64>,
        bounds: Bounds,
    },
}

const SOURCE_NAMES: [&str; 4] = ["constant", "quadratic", "power", "exponential-truncated"];

impl FromStr for SourceConfig {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "constant" => SourceConfig::Constant {
                value: 1.0,
                bounds: None,
            },
            "quadratic" => SourceConfig::Quadratic {
                shift: 1.0,
                bounds: None,
            },
            "power" => SourceConfig::Power {
                coefficient: 1.0,
                exponent: 2.0,
                shift: 1.0,
                bounds: None,
            },
            "exponential-truncated" => SourceConfig::ExponentialTruncated {
                rate: 1.0,
                cap: default_cap(),
                bounds: None,
            },
            other => return Err(unknown_name("source", other, &SOURCE_NAMES)),
        })
    }
}

impl SourceConfig {
    pub fn build(&self) -> SourceFunction {
        let (f, bounds) = match self {
            SourceConfig::Constant { value, bounds } => (SourceFunction::constant(*value), *bounds),
            SourceConfig::Quadratic { shift, bounds } => {
                (SourceFunction::quadratic(*shift), *bounds)
            }
            SourceConfig::Power {
                coefficient,
                exponent,
                shift,
                bounds,
            } => (
                SourceFunction::power_growth(*coefficient, *exponent, *shift),
                *bounds,
            ),
            SourceConfig::ExponentialTruncated { rate, cap, bounds } => {
                (SourceFunction::exponential_truncated(*rate, *cap), *bounds)
            }
            SourceConfig::Table { xi, values, bounds } => (
                SourceFunction::table(
                    xi.clone(),
                    values.clone(),
                    bounds.sigma,
                    bounds.c1,
                    bounds.c2,
                    bounds.alpha,
                ),
                Some(*bounds),
            ),
        };
        match bounds {
            Some(b) => f.with_bounds(b.sigma, b.c1, b.c2, b.alpha),
            None => f,
        }
    }

    fn bounds_mut(&mut self) -> Option<&mut Option<Bounds>> {
        match self {
            SourceConfig::Constant { bounds, .. }
            | SourceConfig::Quadratic { bounds, .. }
            | SourceConfig::Power { bounds, .. }
            | SourceConfig::ExponentialTruncated { bounds, .. } => Some(bounds),
            SourceConfig::Table { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    /// One length per axis; a single number is used for every axis.
    #[serde(deserialize_with = "one_or_many")]
    pub extent: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileName {
    Zero,
    Sine,
    Parabola,
    Bump,
    Modes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub profile: ProfileName,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Coefficients for the `modes` profile.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<f64>,
}

impl InitialConfig {
    pub fn build(&self) -> InitialCondition {
        let profile = match self.profile {
            ProfileName::Zero => Profile::Zero,
            ProfileName::Sine => Profile::Sine,
            ProfileName::Parabola => Profile::Parabola,
            ProfileName::Bump => Profile::Bump,
            ProfileName::Modes => Profile::Modes(self.modes.clone()),
        };
        InitialCondition::new(profile, self.amplitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// Interior grid points per axis; a single number is used for every axis.
    #[serde(default = "default_n", deserialize_with = "one_or_many_usize")]
    pub n: Vec<usize>,
    /// Sine modes for the spectral scheme.
    #[serde(default = "default_modes")]
    pub modes: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            modes: default_modes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperBlock {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for StepperBlock {
    fn default() -> Self {
        let d = StepperConfig::default();
        Self {
            scheme: d.scheme,
            dt: d.dt_initial,
            safety: d.dt_safety,
            max_steps: d.max_steps,
            newton_tol: d.newton_tol,
            newton_max_iter: d.newton_max_iter,
            epsilon: d.epsilon,
        }
    }
}

impl StepperBlock {
    pub fn build(&self) -> StepperConfig {
        StepperConfig {
            scheme: self.scheme,
            dt_initial: self.dt,
            dt_safety: self.safety,
            max_steps: self.max_steps,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "amplitude")]
    Amplitude,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "T")]
    Horizon,
}

impl AxisName {
    pub fn label(self) -> &'static str {
        match self {
            AxisName::Lambda => "lambda",
            AxisName::Amplitude => "amplitude",
            AxisName::P => "p",
            AxisName::Horizon => "T",
        }
    }

    pub fn apply(self, problem: &mut ProblemConfig, value: f64) {
        match self {
            AxisName::Lambda => problem.lambda = value,
            AxisName::Amplitude => problem.u0.amplitude = value,
            AxisName::P => problem.p = value,
            AxisName::Horizon => problem.horizon = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Evolve {},
    /// Randomized check of the scalar differential-inequality envelope.
    Ghidaglia {
        #[serde(default = "default_draws")]
        draws: usize,
        #[serde(default = "default_ghidaglia_samples")]
        samples: usize,
        #[serde(default = "default_ghidaglia_t_end")]
        t_end: f64,
    },
    Threshold {
        #[serde(default = "one")]
        c7: f64,
        /// Target ‖u0‖_{k0+2} values; empty selects multiples of d0.
        #[serde(default)]
        amplitudes: Vec<f64>,
        #[serde(default = "default_bisection")]
        bisection_steps: usize,
    },
    Contraction {
        #[serde(default = "default_perturbation")]
        perturbation: f64,
        /// Perturbed grid node (flat index); defaults to the middle node.
        #[serde(default)]
        node: Option<usize>,
    },
    Absorbing {
        #[serde(default = "default_family")]
        family: usize,
        /// Start of the measurement window; defaults to a fixed fraction of T.
        #[serde(default)]
        tau: Option<f64>,
    },
    WeakResidual {
        #[serde(default = "default_tests")]
        tests: usize,
        /// Pass/fail threshold; absent means report only.
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Sweep {
        #[serde(default)]
        axes: Vec<SweepAxis>,
    },
}

const EXPERIMENT_NAMES: [&str; 7] = [
    "evolve",
    "ghidaglia",
    "threshold",
    "contraction",
    "absorbing",
    "weak-residual",
    "sweep",
];

impl FromStr for ExperimentConfig {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "evolve" => ExperimentConfig::Evolve {},
            "ghidaglia" => ExperimentConfig::Ghidaglia {
                draws: default_draws(),
                samples: default_ghidaglia_samples(),
                t_end: default_ghidaglia_t_end(),
            },
            "threshold" => ExperimentConfig::Threshold {
                c7: 1.0,
                amplitudes: Vec::new(),
                bisection_steps: default_bisection(),
            },
            "contraction" => ExperimentConfig::Contraction {
                perturbation: default_perturbation(),
                node: None,
            },
            "absorbing" => ExperimentConfig::Absorbing {
                family: default_family(),
                tau: None,
            },
            "weak-residual" => ExperimentConfig::WeakResidual {
                tests: default_tests(),
                tolerance: None,
            },
            "sweep" => ExperimentConfig::Sweep { axes: Vec::new() },
            other => return Err(unknown_name("experiment", other, &EXPERIMENT_NAMES)),
        })
    }
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::Evolve {} => "evolve",
            ExperimentConfig::Ghidaglia { .. } => "ghidaglia",
            ExperimentConfig::Threshold { .. } => "threshold",
            ExperimentConfig::Contraction { .. } => "contraction",
            ExperimentConfig::Absorbing { .. } => "absorbing",
            ExperimentConfig::WeakResidual { .. } => "weak-residual",
            ExperimentConfig::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; falls back to `PLAP_OUT_DIR`, then `plap-out`.
    #[serde(default)]
    pub dir: Option<String>,
    /// Number of sample intervals over [0, T].
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Write a snapshot every this many samples (0 = never).
    #[serde(default)]
    pub snapshot_every: usize,
    /// Extra L^k norms recorded per sample.
    #[serde(default)]
    pub extra_norms: Vec<f64>,
    #[serde(default = "yes")]
    pub plot: bool,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            samples: default_samples(),
            snapshot_every: 0,
            extra_norms: Vec::new(),
            plot: true,
            blowup_threshold: default_blowup(),
        }
    }
}

impl OutputConfig {
    pub fn record_options(&self) -> RecordOptions {
        RecordOptions {
            extra_exponents: self.extra_norms.clone(),
            snapshot_every: self.snapshot_every,
            blowup_threshold: self.blowup_threshold,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn default_cap() -> f64 {
    5.0
}
fn default_n() -> Vec<usize> {
    vec![64]
}
fn default_modes() -> usize {
    32
}
fn default_scheme() -> Scheme {
    StepperConfig::default().scheme
}
fn default_dt() -> f64 {
    StepperConfig::default().dt_initial
}
fn default_safety() -> f64 {
    StepperConfig::default().dt_safety
}
fn default_max_steps() -> usize {
    StepperConfig::default().max_steps
}
fn default_newton_tol() -> f64 {
    StepperConfig::default().newton_tol
}
fn default_newton_max_iter() -> usize {
    StepperConfig::default().newton_max_iter
}
fn default_draws() -> usize {
    20
}
fn default_ghidaglia_samples() -> usize {
    100
}
fn default_ghidaglia_t_end() -> f64 {
    10.0
}
fn default_bisection() -> usize {
    6
}
fn default_perturbation() -> f64 {
    1e-6
}
fn default_family() -> usize {
    5
}
fn default_tests() -> usize {
    10
}
fn default_samples() -> usize {
    100
}
fn default_blowup() -> f64 {
    RecordOptions::default().blowup_threshold
}

/// Multiples of d0 probed when a threshold experiment lists no amplitudes.
const THRESHOLD_MULTIPLES: [f64; 10] = [0.1, 0.25, 0.5, 0.75, 0.9, 2.0, 10.0, 1e2, 1e3, 1e4];

fn unknown_name(what: &str, got: &str, known: &[&str]) -> String {
    let mut msg = format!("unknown {what} `{got}`, expected one of {}", quoted(known));
    if let Some(best) = nearest(got, known) {
        msg.push_str(&format!("; did you mean `{best}`?"));
    }
    msg
}

fn quoted(names: &[&str]) -> String {
    names
        .iter()
        .map(|n| format!("`{n}`"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Closest candidate by normalized Damerau–Levenshtein similarity, if any
/// is reasonably close.
pub fn nearest<'a>(got: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::normalized_damerau_levenshtein(got, c), *c))
        .filter(|(score, _)| *score >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

/// Appends a nearest-name hint to serde's "unknown field/variant" messages,
/// which list the candidates in backticks.
fn with_suggestion(message: &str) -> String {
    if !(message.starts_with("unknown field") || message.starts_with("unknown variant"))
        || message.contains("did you mean")
    {
        return message.to_string();
    }
    let ticked: Vec<&str> = message.split('`').skip(1).step_by(2).collect();
    match ticked.split_first() {
        Some((got, rest)) => match nearest(got, rest) {
            Some(best) => format!("{message}; did you mean `{best}`?"),
            None => message.to_string(),
        },
        None => message.to_string(),
    }
}

fn string_or_struct<'de, T, D>(deserializer: D) -> std::result::Result<T, D::Error>
where
    T: Deserialize<'de> + FromStr<Err = String>,
    D: Deserializer<'de>,
{
    struct StringOrStruct<T>(PhantomData<fn() -> T>);

    impl<'de, T> Visitor<'de> for StringOrStruct<T>
    where
        T: Deserialize<'de> + FromStr<Err = String>,
    {
        type Value = T;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a name or an object")
        }

        fn visit_str<E: de::Error>(self, value: &str) -> std::result::Result<T, E> {
            T::from_str(value).map_err(E::custom)
        }

        fn visit_map<M: MapAccess<'de>>(self, map: M) -> std::result::Result<T, M::Error> {
            T::deserialize(de::value::MapAccessDeserializer::new(map))
        }
    }

    deserializer.deserialize_any(StringOrStruct(PhantomData))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Ok(match OneOrMany::<f64>::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn one_or_many_usize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    Ok(match OneOrMany::<usize>::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn broadcast<T: Copy>(values: &mut Vec<T>, dim: usize, name: &'static str) -> Result<()> {
    if values.len() == 1 && dim == 2 {
        values.push(values[0]);
    }
    if values.len() != dim {
        return Err(Error::invalid(name, format!("expected 1 or {dim} entries")));
    }
    Ok(())
}

/// Parses and validates a configuration document. The result has every
/// default filled in; serializing it and parsing again gives the same value.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    let raw: RunConfig = serde_json::from_str(document).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: with_suggestion(&strip_position(&e)),
    })?;
    raw.normalize()
}

fn strip_position(e: &serde_json::Error) -> String {
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    full.strip_suffix(&suffix).unwrap_or(&full).to_string()
}

impl RunConfig {
    /// Fills in derived defaults and validates every block.
    pub fn normalize(mut self) -> Result<Self> {
        let dim = self.problem.domain.dim;
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("dim", "domain dimension must be 1 or 2"));
        }
        broadcast(&mut self.problem.domain.extent, dim, "extent")?;
        broadcast(&mut self.discretization.n, dim, "n")?;
        if self.discretization.n.contains(&0) {
            return Err(Error::invalid("n", "grid sizes must be ≥ 1"));
        }
        if self.discretization.modes == 0 {
            return Err(Error::invalid("modes", "mode count must be ≥ 1"));
        }
        if self.problem.u0.profile == ProfileName::Modes && self.problem.u0.modes.is_empty() {
            return Err(Error::invalid(
                "modes",
                "the modes profile needs at least one coefficient",
            ));
        }
        let f = self.problem.source.build();
        if let Some(slot) = self.problem.source.bounds_mut() {
            if slot.is_none() {
                *slot = Some(Bounds {
                    sigma: f.sigma,
                    c1: f.c1,
                    c2: f.c2,
                    alpha: f.alpha,
                });
            }
        }
        let spec = self.problem_spec()?;
        let stepper = self.stepper.build();
        stepper.validate()?;
        if stepper.scheme == Scheme::Rk4Spectral && dim != 1 {
            return Err(Error::invalid(
                "scheme",
                "rk4-spectral is available in 1D only",
            ));
        }
        self.grid()?;
        let out = &self.output;
        if out
            .extra_norms
            .iter()
            .any(|k| !(k.is_finite() && *k >= 1.0))
        {
            return Err(Error::invalid(
                "extra_norms",
                "exponents must be finite and ≥ 1",
            ));
        }
        if !(out.blowup_threshold > 0.0) {
            return Err(Error::invalid("blowup_threshold", "must be > 0"));
        }
        self.validate_experiment(&spec, stepper.scheme)?;
        Ok(self)
    }

    fn validate_experiment(&mut self, spec: &ProblemSpec, scheme: Scheme) -> Result<()> {
        let grid_only = |name: &str| -> Result<()> {
            if scheme == Scheme::Rk4Spectral {
                Err(Error::Config(format!(
                    "the {name} experiment needs a grid scheme"
                )))
            } else {
                Ok(())
            }
        };
        let horizon = spec.horizon;
        let grid_len = self.grid()?.len();
        let samples = self.output.samples;
        match &mut self.experiment {
            ExperimentConfig::Evolve {} => {}
            ExperimentConfig::Ghidaglia {
                draws,
                samples,
                t_end,
            } => {
                if *draws == 0 || *samples == 0 || !(t_end.is_finite() && *t_end > 0.0) {
                    return Err(Error::invalid(
                        "draws",
                        "need draws ≥ 1, samples ≥ 1 and t_end > 0",
                    ));
                }
            }
            ExperimentConfig::Threshold { c7, amplitudes, .. } => {
                grid_only("threshold")?;
                let th = Thresholds::for_problem(spec, *c7)?;
                if amplitudes.is_empty() {
                    *amplitudes = THRESHOLD_MULTIPLES.iter().map(|m| m * th.d0).collect();
                }
                if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                    return Err(Error::invalid("amplitudes", "must be finite and ≥ 0"));
                }
            }
            ExperimentConfig::Contraction { perturbation, node } => {
                grid_only("contraction")?;
                if !(perturbation.is_finite() && *perturbation != 0.0) {
                    return Err(Error::invalid("perturbation", "must be finite and nonzero"));
                }
                let idx = node.unwrap_or(grid_len / 2);
                if idx >= grid_len {
                    return Err(Error::invalid("node", format!("must be < {grid_len}")));
                }
                *node = Some(idx);
                if !(horizon > 0.0) {
                    return Err(Error::invalid("T", "contraction needs T > 0"));
                }
            }
            ExperimentConfig::Absorbing { family, tau } => {
                grid_only("absorbing")?;
                if *family < 5 {
                    return Err(Error::invalid(
                        "family",
                        "need at least 5 initial conditions",
                    ));
                }
                let t = tau.unwrap_or(crate::analysis::DEFAULT_TAU_FRACTION * horizon);
                if !(t >= 0.0 && t < horizon) {
                    return Err(Error::invalid("tau", "need 0 ≤ tau < T"));
                }
                *tau = Some(t);
            }
            ExperimentConfig::WeakResidual { tests, tolerance } => {
                grid_only("weak-residual")?;
                if *tests == 0 {
                    return Err(Error::invalid("tests", "need at least one test function"));
                }
                if tolerance.is_some_and(|t| !(t > 0.0)) {
                    return Err(Error::invalid("tolerance", "must be > 0"));
                }
                if !(horizon > 0.0) || samples == 0 {
                    return Err(Error::invalid(
                        "T",
                        "weak residual needs T > 0 and samples ≥ 1",
                    ));
                }
            }
            ExperimentConfig::Sweep { axes } => {
                if axes.len() > 2 {
                    return Err(Error::invalid("axes", "at most 2 sweep axes"));
                }
                if axes.len() == 2 && axes[0].name == axes[1].name {
                    return Err(Error::invalid("axes", "sweep axes must be distinct"));
                }
                if axes.iter().any(|a| a.values.is_empty()) {
                    return Err(Error::invalid(
                        "values",
                        "every sweep axis needs at least one value",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let pc = &self.problem;
        let spec = ProblemSpec {
            p: pc.p,
            lambda: pc.lambda,
            domain: DomainSpec::new(pc.domain.extent.clone())?,
            source: pc.source.build(),
            initial: pc.u0.build(),
            horizon: pc.horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::for_domain(
            &DomainSpec::new(self.problem.domain.extent.clone())?,
            &self.discretization.n,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration always serializes")
    }
}
