//! Time series of norms and diagnostics produced by every solver run.

use serde::Serialize;

use crate::discretization::Grid;

/// Norms and diagnostics at one sample time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// ‖u‖_{k0+2}
    pub norm_k0p2: f64,
    pub norm_2: f64,
    pub norm_inf: f64,
    /// Norms for the extra exponents listed in the record, same order.
    pub extra_norms: Vec<f64>,
    /// W^{1,p}_0 seminorm.
    pub w1p: f64,
    /// ∫_Ω f(u)
    pub int_f: f64,
    /// max_x of the nonlocal source term.
    pub source_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TerminalStatus {
    Completed,
    /// Non-finite state, or ‖u‖_∞ above the configured blow-up threshold.
    BlewUp {
        time: f64,
        step: usize,
    },
    /// The stepper itself failed (Newton divergence, degenerate integral).
    Failed {
        time: f64,
        step: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub p: f64,
    pub k0: f64,
    /// γ = k0 / p, the exponent in |u|^γ u.
    pub gamma_exponent: f64,
    pub extra_exponents: Vec<f64>,
    pub samples: Vec<Sample>,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
    /// Grid on which snapshot values live.
    #[serde(skip)]
    pub grid: Option<Grid>,
    /// Galerkin coefficient vectors, one per sample (empty for grid runs).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<Vec<f64>>,
    pub status: TerminalStatus,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn new(p: f64, k0: f64, extra_exponents: Vec<f64>) -> Self {
        Self {
            p,
            k0,
            gamma_exponent: k0 / p,
            extra_exponents,
            samples: Vec::new(),
            snapshots: Vec::new(),
            grid: None,
            coefficients: Vec::new(),
            status: TerminalStatus::Completed,
            steps: 0,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.status, TerminalStatus::Completed)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Time at which the run stopped early, if it did.
    pub fn failure_time(&self) -> Option<f64> {
        match self.status {
            TerminalStatus::Completed => None,
            TerminalStatus::BlewUp { time, .. } | TerminalStatus::Failed { time, .. } => Some(time),
        }
    }

    /// sup over samples with t >= tau of `select(sample)`, or None if no
    /// sample qualifies.
    pub fn sup_from(&self, tau: f64, select: impl Fn(&Sample) -> f64) -> Option<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.t >= tau)
            .map(|s| (s.t, select(s)))
            .fold(None, |best: Option<(f64, f64)>, (t, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((t, v)),
            })
    }

    /// Exact equality of every recorded number, compared bit by bit.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        fn bits(v: &[f64]) -> Vec<u64> {
            v.iter().map(|x| x.to_bits()).collect()
        }
        fn sample_bits(s: &Sample) -> Vec<u64> {
            let mut v = bits(&[
                s.t,
                s.norm_k0p2,
                s.norm_2,
                s.norm_inf,
                s.w1p,
                s.int_f,
                s.source_max,
            ]);
            v.extend(bits(&s.extra_norms));
            v
        }
        self.samples.len() == other.samples.len()
            && self
                .samples
                .iter()
                .zip(&other.samples)
                .all(|(a, b)| sample_bits(a) == sample_bits(b))
            && self.snapshots.len() == other.snapshots.len()
            && self
                .snapshots
                .iter()
                .zip(&other.snapshots)
                .all(|(a, b)| a.t.to_bits() == b.t.to_bits() && bits(&a.values) == bits(&b.values))
            && self.coefficients.len() == other.coefficients.len()
            && self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .all(|(a, b)| bits(a) == bits(b))
            && self.status == other.status
            && self.steps == other.steps
    }
}
