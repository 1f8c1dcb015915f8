//! The continuous problem
//!
//! ```text
//!   u_t - div(|∇u|^{p-2} ∇u) = λ f(u) / (∫_Ω f(u) dx)^2   in Ω × (0, T)
//!   u = 0 on ∂Ω,   u(0) = u0
//! ```
//!
//! with the dissipative sign convention, the smallness thresholds k0 and d0
//! for the initial data, and the nonlocal source term itself.

mod source;

pub use source::{validate_hypotheses, BoundCheck, HypothesisReport, SourceFunction, SourceKind};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Rectangular domain (0, L_1) × ... × (0, L_N), N ∈ {1, 2}.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    extents: Vec<f64>,
}

impl DomainSpec {
    pub fn new(extents: Vec<f64>) -> Result<Self> {
        if extents.is_empty() || extents.len() > 2 {
            return Err(Error::invalid("dim", "domain dimension must be 1 or 2"));
        }
        if extents.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::invalid("extent", "extents must be finite and > 0"));
        }
        Ok(Self { extents })
    }

    pub fn interval(length: f64) -> Result<Self> {
        Self::new(vec![length])
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        Self::new(vec![lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn measure(&self) -> f64 {
        self.extents.iter().product()
    }
}

/// Shapes for u0. Every profile vanishes on ∂Ω.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// Π_a sin(π x_a / L_a)
    Sine,
    /// Π_a 4 x_a (L_a - x_a) / L_a^2
    Parabola,
    /// Π_a sin^2(π x_a / L_a)
    Bump,
    /// Σ_k c_k Π_a sin((k+1) π x_a / L_a)
    Modes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub profile: Profile,
    pub amplitude: f64,
}

impl InitialCondition {
    pub fn new(profile: Profile, amplitude: f64) -> Self {
        Self { profile, amplitude }
    }

    pub fn zero() -> Self {
        Self::new(Profile::Zero, 0.0)
    }

    /// Value at a point of the domain with the given extents.
    pub fn eval(&self, x: &[f64], extents: &[f64]) -> f64 {
        let shape = match &self.profile {
            Profile::Zero => 0.0,
            Profile::Sine => x
                .iter()
                .zip(extents)
                .map(|(&xa, &l)| (PI * xa / l).sin())
                .product(),
            Profile::Parabola => x
                .iter()
                .zip(extents)
                .map(|(&xa, &l)| 4.0 * xa * (l - xa) / (l * l))
                .product(),
            Profile::Bump => x
                .iter()
                .zip(extents)
                .map(|(&xa, &l)| (PI * xa / l).sin().powi(2))
                .product(),
            Profile::Modes(coeffs) => coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let freq = (k + 1) as f64 * PI;
                    c * x
                        .iter()
                        .zip(extents)
                        .map(|(&xa, &l)| (freq * xa / l).sin())
                        .product::<f64>()
                })
                .sum(),
        };
        self.amplitude * shape
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        if let Profile::Modes(c) = &self.profile {
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("modes", "mode coefficients must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub p: f64,
    pub lambda: f64,
    pub domain: DomainSpec,
    pub source: SourceFunction,
    pub initial: InitialCondition,
    pub horizon: f64,
}

impl ProblemSpec {
    /// Checks the parameter ranges. `lambda = 0` is accepted (source switched
    /// off) and so is `horizon = 0` (evaluate the initial state only).
    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 2.0) {
            return Err(Error::invalid("p", "p must be ≥ 2"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", "lambda must be finite and ≥ 0"));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::invalid("T", "horizon must be finite and ≥ 0"));
        }
        self.source.validate()?;
        self.initial.validate()
    }

    pub fn k0(&self) -> Result<f64> {
        compute_k0(self.p, self.source.alpha, self.domain.dim())
    }
}

/// Admissible exponent k0 and smallness radius d0 for the initial data.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Thresholds {
    pub k0: f64,
    pub d0: f64,
    /// Embedding-constant surrogate. Not a certified constant; d0 is only as
    /// meaningful as this value.
    pub c7_estimate: f64,
}

impl Thresholds {
    pub const DEFAULT_C7: f64 = 1.0;

    pub fn for_problem(spec: &ProblemSpec, c7: f64) -> Result<Self> {
        let k0 = spec.k0()?;
        let d0 = compute_d0(k0, spec.p, spec.source.alpha, c7)?;
        Ok(Self {
            k0,
            d0,
            c7_estimate: c7,
        })
    }
}

/// Minimal admissible k0 = max(0, N(α + 2 - p)/p - 2).
pub fn compute_k0(p: f64, alpha: f64, n: usize) -> Result<f64> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::invalid("p", "p must be ≥ 2"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", "alpha must be > 0"));
    }
    if n < 1 {
        return Err(Error::invalid("N", "dimension must be ≥ 1"));
    }
    Ok((n as f64 * (alpha + 2.0 - p) / p - 2.0).max(0.0))
}

/// d0 = (4 / (c7 (k0 + p)^p))^(1/α), evaluated in log space.
pub fn compute_d0(k0: f64, p: f64, alpha: f64, c7: f64) -> Result<f64> {
    if !(c7.is_finite() && c7 > 0.0) {
        return Err(Error::invalid("c7", "c7 must be > 0"));
    }
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::invalid("p", "p must be ≥ 2"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", "alpha must be > 0"));
    }
    if !(k0.is_finite() && k0 >= 0.0) {
        return Err(Error::invalid("k0", "k0 must be ≥ 0"));
    }
    let log_d0 = (4f64.ln() - c7.ln() - p * (k0 + p).ln()) / alpha;
    let d0 = log_d0.exp();
    if !(d0.is_finite() && d0 > 0.0) {
        return Err(Error::Range(format!(
            "d0 = exp({log_d0:e}) is not representable"
        )));
    }
    Ok(d0)
}

/// Integral floor below which the nonlocal denominator is treated as
/// degenerate: half of sigma times the quadrature measure.
pub fn integral_floor(source: &SourceFunction, weights: &[f64]) -> f64 {
    0.5 * source.sigma * weights.iter().sum::<f64>()
}

/// Pointwise λ f(u_i) / (Σ_j w_j f(u_j))^2.
pub fn nonlocal_source(
    values: &[f64],
    weights: &[f64],
    source: &SourceFunction,
    lambda: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; values.len()];
    nonlocal_source_into(values, weights, source, lambda, &mut out)?;
    Ok(out)
}

/// Buffer-reusing form of [`nonlocal_source`]; returns ∫ f(u).
pub fn nonlocal_source_into(
    values: &[f64],
    weights: &[f64],
    source: &SourceFunction,
    lambda: f64,
    out: &mut [f64],
) -> Result<f64> {
    if values.len() != weights.len() || out.len() != values.len() {
        return Err(Error::invalid(
            "weights",
            "values, weights and output must have equal length",
        ));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid(
            "weights",
            "quadrature weights must be positive",
        ));
    }
    for (o, &u) in out.iter_mut().zip(values) {
        *o = source.eval(u);
    }
    let integral: f64 = out.iter().zip(weights).map(|(f, w)| f * w).sum();
    let floor = integral_floor(source, weights);
    if !(integral >= floor) {
        return Err(Error::Degenerate { integral, floor });
    }
    let scale = lambda / (integral * integral);
    for o in out.iter_mut() {
        *o *= scale;
    }
    Ok(integral)
}
