//! Source nonlinearities f together with the growth data they are
//! advertised to satisfy: sigma <= f(xi) <= c1 |xi|^(alpha+1) + c2, plus a
//! local Lipschitz bound L(R) on [-R, R].

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    /// f(xi) = value
    Constant { value: f64 },
    /// f(xi) = coefficient * |xi|^exponent + shift
    PowerGrowth {
        coefficient: f64,
        exponent: f64,
        shift: f64,
    },
    /// f(xi) = exp(rate * min(|xi|, cap))
    ExponentialTruncated { rate: f64, cap: f64 },
    /// Piecewise-linear interpolation through (xi, values), held constant
    /// outside the tabulated range.
    UserTable { xi: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceFunction {
    pub kind: SourceKind,
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

impl SourceFunction {
    /// f ≡ value, with sigma = c2 = value and c1 = alpha = 1.
    pub fn constant(value: f64) -> Self {
        Self {
            kind: SourceKind::Constant { value },
            sigma: value,
            c1: 1.0,
            c2: value,
            alpha: 1.0,
        }
    }

    /// f(xi) = xi^2 + shift.
    pub fn quadratic(shift: f64) -> Self {
        Self::power_growth(1.0, 2.0, shift)
    }

    pub fn power_growth(coefficient: f64, exponent: f64, shift: f64) -> Self {
        Self {
            kind: SourceKind::PowerGrowth {
                coefficient,
                exponent,
                shift,
            },
            sigma: shift,
            c1: coefficient,
            c2: shift,
            alpha: exponent - 1.0,
        }
    }

    /// Bounded conductivity-like source; sigma = 1, c2 = e^(rate*cap).
    pub fn exponential_truncated(rate: f64, cap: f64) -> Self {
        Self {
            kind: SourceKind::ExponentialTruncated { rate, cap },
            sigma: 1.0,
            c1: 1.0,
            c2: (rate * cap).exp(),
            alpha: 1.0,
        }
    }

    /// Tabulated source. The growth constants cannot be inferred and must be
    /// declared by the caller.
    pub fn table(xi: Vec<f64>, values: Vec<f64>, sigma: f64, c1: f64, c2: f64, alpha: f64) -> Self {
        Self {
            kind: SourceKind::UserTable { xi, values },
            sigma,
            c1,
            c2,
            alpha,
        }
    }

    /// Replaces the declared (H2) constants.
    pub fn with_bounds(mut self, sigma: f64, c1: f64, c2: f64, alpha: f64) -> Self {
        self.sigma = sigma;
        self.c1 = c1;
        self.c2 = c2;
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("sigma", self.sigma)?;
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        positive("alpha", self.alpha)?;
        match &self.kind {
            SourceKind::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::invalid("value", "must be finite"));
                }
            }
            SourceKind::PowerGrowth {
                coefficient,
                exponent,
                shift,
            } => {
                if !(coefficient.is_finite() && *coefficient >= 0.0) {
                    return Err(Error::invalid("coefficient", "must be finite and >= 0"));
                }
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::invalid(
                        "exponent",
                        "must be >= 1 for a locally Lipschitz source",
                    ));
                }
                if !shift.is_finite() {
                    return Err(Error::invalid("shift", "must be finite"));
                }
            }
            SourceKind::ExponentialTruncated { rate, cap } => {
                positive("rate", *rate)?;
                positive("cap", *cap)?;
            }
            SourceKind::UserTable { xi, values } => {
                if xi.len() < 2 || xi.len() != values.len() {
                    return Err(Error::invalid(
                        "xi",
                        "table needs at least two points and matching value count",
                    ));
                }
                if xi.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("xi", "must be strictly increasing"));
                }
                if xi.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("values", "table entries must be finite"));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        match &self.kind {
            SourceKind::Constant { value } => *value,
            SourceKind::PowerGrowth {
                coefficient,
                exponent,
                shift,
            } => coefficient * xi.abs().powf(*exponent) + shift,
            SourceKind::ExponentialTruncated { rate, cap } => (rate * xi.abs().min(*cap)).exp(),
            SourceKind::UserTable { xi: xs, values } => interpolate(xs, values, xi),
        }
    }

    /// Declared Lipschitz constant of f on [-radius, radius].
    pub fn lipschitz(&self, radius: f64) -> f64 {
        let radius = radius.abs();
        match &self.kind {
            SourceKind::Constant { .. } => 0.0,
            SourceKind::PowerGrowth {
                coefficient,
                exponent,
                ..
            } => {
                if *exponent == 1.0 {
                    *coefficient
                } else {
                    coefficient * exponent * radius.powf(exponent - 1.0)
                }
            }
            SourceKind::ExponentialTruncated { rate, cap } => {
                rate * (rate * radius.min(*cap)).exp()
            }
            SourceKind::UserTable { xi, values } => xi
                .windows(2)
                .zip(values.windows(2))
                .filter(|(x, _)| x[1] >= -radius && x[0] <= radius)
                .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Growth envelope c1 |xi|^(alpha+1) + c2.
    #[inline]
    pub fn envelope(&self, xi: f64) -> f64 {
        self.c1 * xi.abs().powf(self.alpha + 1.0) + self.c2
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    // first index with xs[i] > x; x is strictly inside the table here
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Outcome of one sampled inequality check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundCheck {
    pub pass: bool,
    /// Sample point where the inequality is tightest (or most violated).
    pub worst_xi: f64,
    /// Left-hand side at the worst point (f(xi) or the secant ratio).
    pub worst_value: f64,
    /// Right-hand side at the worst point (sigma, envelope, or L(R)).
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HypothesisReport {
    pub lower_bound: BoundCheck,
    pub growth_bound: BoundCheck,
    pub lipschitz: BoundCheck,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.lower_bound.pass && self.growth_bound.pass && self.lipschitz.pass
    }
}

/// Samples f on a uniform grid of `samples` points over `range` and checks
/// the lower bound, the growth envelope and the declared Lipschitz bound.
///
/// The Lipschitz test uses secants between neighbouring samples: any secant
/// over a wider pair is a convex combination of these, and L(R) is
/// non-decreasing in R.
pub fn validate_hypotheses(
    source: &SourceFunction,
    range: (f64, f64),
    samples: usize,
) -> Result<HypothesisReport> {
    let (lo, hi) = range;
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 sample points"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::invalid(
            "range",
            "must be a finite interval lo <= hi",
        ));
    }

    let step = (hi - lo) / (samples - 1) as f64;
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples {
        let xi = if i + 1 == samples {
            hi
        } else {
            lo + step * i as f64
        };
        let value = source.eval(xi);
        if !value.is_finite() {
            return Err(Error::Evaluation { xi });
        }
        points.push((xi, value));
    }

    let lower_bound = worst_of(
        points
            .iter()
            .map(|&(xi, f)| (xi, f, source.sigma, f - source.sigma)),
        |slack| slack >= 0.0,
    );
    let growth_bound = worst_of(
        points.iter().map(|&(xi, f)| {
            let env = source.envelope(xi);
            (xi, f, env, env - f)
        }),
        |slack| slack >= 0.0,
    );

    // Utilisation ratio / L(R); the largest utilisation is the tightest pair.
    let mut lipschitz = BoundCheck {
        pass: true,
        worst_xi: points[0].0,
        worst_value: 0.0,
        bound: source.lipschitz(points[0].0),
    };
    let mut worst_use = f64::NEG_INFINITY;
    for pair in points.windows(2) {
        let ((x0, f0), (x1, f1)) = (pair[0], pair[1]);
        let dx = x1 - x0;
        if dx <= 0.0 {
            continue;
        }
        let ratio = (f1 - f0).abs() / dx;
        let radius = x0.abs().max(x1.abs());
        let bound = source.lipschitz(radius);
        let utilisation = if bound > 0.0 {
            ratio / bound
        } else if ratio > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if utilisation > worst_use {
            worst_use = utilisation;
            lipschitz = BoundCheck {
                pass: true,
                worst_xi: if x1.abs() >= x0.abs() { x1 } else { x0 },
                worst_value: ratio,
                bound,
            };
        }
    }
    lipschitz.pass = worst_use <= 1.0 + 1e-12;

    Ok(HypothesisReport {
        lower_bound,
        growth_bound,
        lipschitz,
    })
}

/// Picks the sample with minimal slack (rhs - lhs) and decides pass/fail.
fn worst_of(
    rows: impl Iterator<Item = (f64, f64, f64, f64)>,
    ok: impl Fn(f64) -> bool,
) -> BoundCheck {
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for row in rows {
        if best.is_none_or(|b| row.3 < b.3) {
            best = Some(row);
        }
    }
    let (xi, value, bound, slack) = best.expect("at least two samples");
    BoundCheck {
        pass: ok(slack),
        worst_xi: xi,
        worst_value: value,
        bound,
    }
}
