//! Faedo–Galerkin semidiscretization on the sine basis
//! w_j(x) = √(2/L) sin(jπx/L), j = 1..m, which is orthonormal in L²(0, L).
//!
//! The coefficient ODE is
//!
//! ```text
//!   g_j' = -∫ |u_m'|^{p-2} u_m' w_j' dx + λ / (∫ f(u_m))² ∫ f(u_m) w_j dx
//! ```
//!
//! with all integrals evaluated by composite 5-point Gauss–Legendre.

use std::f64::consts::PI;

use crate::discretization::{flux, Grid};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::record::{Sample, Snapshot, TerminalStatus, TrajectoryRecord};

use super::run::{check_sample_times, RecordOptions};
use super::StepperConfig;

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub length: f64,
    pub coefficients: Vec<f64>,
}

impl SpectralState {
    pub fn new(length: f64, coefficients: Vec<f64>) -> Self {
        Self {
            length,
            coefficients,
        }
    }

    pub fn zeros(length: f64, modes: usize) -> Self {
        Self::new(length, vec![0.0; modes])
    }

    pub fn modes(&self) -> usize {
        self.coefficients.len()
    }

    pub fn basis(j: usize, x: f64, length: f64) -> f64 {
        (2.0 / length).sqrt() * (j as f64 * PI * x / length).sin()
    }

    pub fn basis_derivative(j: usize, x: f64, length: f64) -> f64 {
        let k = j as f64 * PI / length;
        (2.0 / length).sqrt() * k * (k * x).cos()
    }

    /// u_m(x) = Σ g_j w_j(x).
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, g)| g * Self::basis(j + 1, x, self.length))
            .sum()
    }
}

/// Precomputed basis tables on the quadrature nodes.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    modes: usize,
    length: f64,
    p: f64,
    lambda: f64,
    source: crate::problem::SourceFunction,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // row j holds w_{j+1} at every node
    basis: Vec<f64>,
    dbasis: Vec<f64>,
}

impl GalerkinSystem {
    /// Default quadrature: max(8m, 64) panels.
    pub fn new(spec: &ProblemSpec, modes: usize) -> Result<Self> {
        Self::with_panels(spec, modes, (8 * modes).max(64))
    }

    pub fn with_panels(spec: &ProblemSpec, modes: usize, panels: usize) -> Result<Self> {
        if spec.domain.dim() != 1 {
            return Err(Error::Config(
                "the spectral Galerkin solver is one-dimensional".into(),
            ));
        }
        if !(spec.p.is_finite() && spec.p >= 2.0) {
            return Err(Error::invalid("p", "p must be ≥ 2"));
        }
        if modes == 0 {
            return Err(Error::invalid("modes", "need at least one mode"));
        }
        if panels < 2 * modes {
            return Err(Error::Config(format!(
                "quadrature mesh too coarse: {panels} panels for {modes} modes (need ≥ {})",
                2 * modes
            )));
        }
        let length = spec.domain.extents()[0];
        let width = length / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 5);
        let mut weights = Vec::with_capacity(panels * 5);
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        let q = nodes.len();
        let mut basis = vec![0.0; modes * q];
        let mut dbasis = vec![0.0; modes * q];
        for j in 0..modes {
            for (i, &x) in nodes.iter().enumerate() {
                basis[j * q + i] = SpectralState::basis(j + 1, x, length);
                dbasis[j * q + i] = SpectralState::basis_derivative(j + 1, x, length);
            }
        }
        Ok(Self {
            modes,
            length,
            p: spec.p,
            lambda: spec.lambda,
            source: spec.source.clone(),
            nodes,
            weights,
            basis,
            dbasis,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    fn synthesize(&self, g: &[f64], u: &mut [f64], du: &mut [f64]) {
        let q = self.nodes.len();
        u.iter_mut().for_each(|v| *v = 0.0);
        du.iter_mut().for_each(|v| *v = 0.0);
        for (j, &gj) in g.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            let row = &self.basis[j * q..(j + 1) * q];
            let drow = &self.dbasis[j * q..(j + 1) * q];
            for i in 0..q {
                u[i] += gj * row[i];
                du[i] += gj * drow[i];
            }
        }
    }

    /// Writes dg/dt into `out`; returns ∫ f(u_m).
    pub fn rhs(&self, g: &[f64], out: &mut [f64]) -> Result<f64> {
        let q = self.nodes.len();
        let mut u = vec![0.0; q];
        let mut du = vec![0.0; q];
        self.synthesize(g, &mut u, &mut du);
        let mut fu: Vec<f64> = u.iter().map(|&v| self.source.eval(v)).collect();
        let integral: f64 = fu.iter().zip(&self.weights).map(|(f, w)| f * w).sum();
        let floor = 0.5 * self.source.sigma * self.length;
        if !(integral >= floor) {
            return Err(Error::Degenerate { integral, floor });
        }
        let scale = self.lambda / (integral * integral);
        // fold the quadrature weights in once
        let mut flux_w = vec![0.0; q];
        for i in 0..q {
            flux_w[i] = flux(du[i], self.p, 0.0) * self.weights[i];
            fu[i] *= scale * self.weights[i];
        }
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.basis[j * q..(j + 1) * q];
            let drow = &self.dbasis[j * q..(j + 1) * q];
            let mut acc = 0.0;
            for i in 0..q {
                acc += fu[i] * row[i] - flux_w[i] * drow[i];
            }
            *o = acc;
        }
        Ok(integral)
    }

    /// L² projection of the initial condition (coincides with the H¹_0
    /// projection for this basis).
    pub fn project_initial(&self, spec: &ProblemSpec) -> Vec<f64> {
        let q = self.nodes.len();
        let ext = spec.domain.extents();
        let u0: Vec<f64> = self
            .nodes
            .iter()
            .map(|&x| spec.initial.eval(&[x], ext))
            .collect();
        (0..self.modes)
            .map(|j| {
                let row = &self.basis[j * q..(j + 1) * q];
                (0..q).map(|i| self.weights[i] * u0[i] * row[i]).sum()
            })
            .collect()
    }

    fn sample(&self, t: f64, g: &[f64], k0: f64, extra: &[f64]) -> Result<Sample> {
        let q = self.nodes.len();
        let mut u = vec![0.0; q];
        let mut du = vec![0.0; q];
        self.synthesize(g, &mut u, &mut du);
        let lp = |k: f64| -> f64 {
            let s: f64 = u
                .iter()
                .zip(&self.weights)
                .map(|(v, w)| w * v.abs().powf(k))
                .sum();
            s.powf(1.0 / k)
        };
        let norm_inf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let w1p = du
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v.abs().powf(self.p))
            .sum::<f64>()
            .powf(1.0 / self.p);
        let fu: Vec<f64> = u.iter().map(|&v| self.source.eval(v)).collect();
        let int_f: f64 = fu.iter().zip(&self.weights).map(|(f, w)| f * w).sum();
        let fmax = fu.iter().fold(0.0f64, |m, v| m.max(*v));
        if !(int_f >= 0.5 * self.source.sigma * self.length) {
            return Err(Error::Degenerate {
                integral: int_f,
                floor: 0.5 * self.source.sigma * self.length,
            });
        }
        Ok(Sample {
            t,
            norm_k0p2: lp(k0 + 2.0),
            norm_2: lp(2.0),
            norm_inf,
            extra_norms: extra
                .iter()
                .map(|&k| if k.is_infinite() { norm_inf } else { lp(k) })
                .collect(),
            w1p,
            int_f,
            source_max: self.lambda * fmax / (int_f * int_f),
        })
    }

    fn rk4_step(&self, g: &mut [f64], dt: f64, stages: &mut [Vec<f64>; 5]) -> Result<()> {
        let m = g.len();
        let [k1, k2, k3, k4, tmp] = stages;
        self.rhs(g, k1)?;
        for i in 0..m {
            tmp[i] = g[i] + 0.5 * dt * k1[i];
        }
        self.rhs(tmp, k2)?;
        for i in 0..m {
            tmp[i] = g[i] + 0.5 * dt * k2[i];
        }
        self.rhs(tmp, k3)?;
        for i in 0..m {
            tmp[i] = g[i] + dt * k3[i];
        }
        self.rhs(tmp, k4)?;
        for i in 0..m {
            g[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rk4 step"));
        }
        Ok(())
    }
}

/// Right-hand side of the coefficient ODE with the default quadrature.
pub fn galerkin_rhs(state: &SpectralState, spec: &ProblemSpec) -> Result<Vec<f64>> {
    if spec.domain.dim() == 1
        && (spec.domain.extents()[0] - state.length).abs() > 1e-12 * state.length
    {
        return Err(Error::Config(
            "spectral state length does not match the domain".into(),
        ));
    }
    let system = GalerkinSystem::new(spec, state.modes())?;
    let mut out = vec![0.0; state.modes()];
    system.rhs(&state.coefficients, &mut out)?;
    Ok(out)
}

/// Projects u0 onto `modes` sine modes and integrates the coefficient ODE
/// with classical RK4 at the fixed step `cfg.dt_initial`.
pub fn galerkin_run(
    spec: &ProblemSpec,
    modes: usize,
    cfg: &StepperConfig,
    sample_times: &[f64],
    opts: &RecordOptions,
) -> Result<TrajectoryRecord> {
    spec.validate()?;
    cfg.validate()?;
    check_sample_times(sample_times, spec.horizon)?;
    let system = GalerkinSystem::new(spec, modes)?;
    let k0 = spec.k0()?;
    let length = system.length;

    let mut record = TrajectoryRecord::new(spec.p, k0, opts.extra_exponents.clone());
    let snapshot_grid = Grid::new_1d((4 * modes).max(64), length)?;
    if opts.snapshot_every > 0 {
        record.grid = Some(snapshot_grid);
    }

    let mut g = system.project_initial(spec);
    let mut stages: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; modes]);
    let mut t = 0.0;
    let mut step = 0usize;

    for (idx, &target) in sample_times.iter().enumerate() {
        while t < target {
            let remaining = target - t;
            let dt = cfg.dt_initial.min(remaining);
            if step >= cfg.max_steps {
                record.status = TerminalStatus::Failed {
                    time: t,
                    step,
                    message: format!("max_steps = {} exhausted", cfg.max_steps),
                };
                return Ok(record);
            }
            let outcome = system.rk4_step(&mut g, dt, &mut stages);
            step += 1;
            t = if dt == remaining { target } else { t + dt };
            record.steps = step;
            match outcome {
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
                Ok(()) => {}
            }
            // cheap amplitude bound: Σ|g_j| √(2/L) ≥ ‖u_m‖_∞
            let bound = g.iter().map(|v| v.abs()).sum::<f64>() * (2.0 / length).sqrt();
            if bound > opts.blowup_threshold {
                let state = SpectralState::new(length, g.clone());
                let peak = (0..=512)
                    .map(|i| state.eval(length * i as f64 / 512.0).abs())
                    .fold(0.0, f64::max);
                if peak > opts.blowup_threshold {
                    record.status = TerminalStatus::BlewUp { time: t, step };
                    return Ok(record);
                }
            }
        }
        match system.sample(target, &g, k0, &opts.extra_exponents) {
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
        record.coefficients.push(g.clone());
        if opts.wants_snapshot(idx) {
            let state = SpectralState::new(length, g.clone());
            let values = (0..snapshot_grid.len())
                .map(|i| state.eval(snapshot_grid.coords(i)[0]))
                .collect();
            record.snapshots.push(Snapshot { t: target, values });
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{DomainSpec, InitialCondition, Profile, SourceFunction};

    fn spec(
        p: f64,
        lambda: f64,
        length: f64,
        source: SourceFunction,
        ic: InitialCondition,
    ) -> ProblemSpec {
        ProblemSpec {
            p,
            lambda,
            domain: DomainSpec::interval(length).unwrap(),
            source,
            initial: ic,
            horizon: 1.0,
        }
    }

    #[test]
    fn single_mode_source_projection() {
        let s = spec(
            2.0,
            1.7,
            1.0,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        let rhs = galerkin_rhs(&SpectralState::zeros(1.0, 1), &s).unwrap();
        // ∫_0^1 √2 sin(πx) dx = 2√2/π
        assert!((rhs[0] - 1.7 * 2.0 * 2f64.sqrt() / PI).abs() < 1e-12);
    }

    #[test]
    fn zero_state_no_source() {
        let s = spec(
            3.0,
            0.0,
            1.0,
            SourceFunction::quadratic(1.0),
            InitialCondition::zero(),
        );
        let rhs = galerkin_rhs(&SpectralState::zeros(1.0, 6), &s).unwrap();
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn p2_eigenvalue_action() {
        for &length in &[1.0, 2.5] {
            let s = spec(
                2.0,
                0.0,
                length,
                SourceFunction::constant(1.0),
                InitialCondition::zero(),
            );
            let g: Vec<f64> = (0..32)
                .map(|j| ((j * 7 % 5) as f64 - 2.0) * 0.3 / (1.0 + j as f64))
                .collect();
            let rhs = galerkin_rhs(&SpectralState::new(length, g.clone()), &s).unwrap();
            for (j, (r, gj)) in rhs.iter().zip(&g).enumerate() {
                let k = (j + 1) as f64 * PI / length;
                assert!(
                    (r + k * k * gj).abs() < 1e-10,
                    "L={length} j={j}: {r} vs {}",
                    -k * k * gj
                );
            }
        }
    }

    #[test]
    fn coarse_quadrature_rejected() {
        let s = spec(
            2.0,
            1.0,
            1.0,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        assert!(matches!(
            GalerkinSystem::with_panels(&s, 16, 20),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn heat_mode_decay() {
        for &length in &[1.0, 2.0] {
            let a = 0.3;
            let ic = InitialCondition::new(Profile::Sine, a);
            let s = spec(2.0, 0.0, length, SourceFunction::constant(1.0), ic);
            let rec = galerkin_run(
                &s,
                1,
                &StepperConfig::rk4(1e-4),
                &[0.0, 0.1],
                &RecordOptions::default(),
            )
            .unwrap();
            // u0 = a sin(πx/L) = a √(L/2) w_1
            let g0 = a * (length / 2.0).sqrt();
            let exact = g0 * (-PI * PI * 0.1 / (length * length)).exp();
            assert!((rec.coefficients[1][0] - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_source_even_modes_vanish() {
        let s = spec(
            2.0,
            1.0,
            1.0,
            SourceFunction::constant(1.0),
            InitialCondition::zero(),
        );
        let rec = galerkin_run(
            &s,
            8,
            &StepperConfig::rk4(1e-4),
            &[0.0, 0.05, 0.1],
            &RecordOptions::default(),
        )
        .unwrap();
        for g in &rec.coefficients {
            for j in (1..8).step_by(2) {
                assert!(g[j].abs() < 1e-14, "mode {} = {}", j + 1, g[j]);
            }
        }
        assert!(rec.coefficients[2][0] > 0.0);
    }

    #[test]
    fn fourth_order_in_time() {
        let ic = InitialCondition::new(Profile::Modes(vec![0.5, 0.2, -0.3]), 1.0);
        let s = spec(2.0, 1.0, 1.0, SourceFunction::quadratic(1.0), ic);
        let run = |dt: f64| {
            galerkin_run(
                &s,
                6,
                &StepperConfig::rk4(dt),
                &[0.0, 0.05],
                &RecordOptions::default(),
            )
            .unwrap()
            .coefficients[1]
                .clone()
        };
        let a = run(2e-4);
        let b = run(1e-4);
        let c = run(5e-5);
        let diff = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
        };
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn projection_recovers_modes() {
        let ic = InitialCondition::new(Profile::Modes(vec![0.4, 0.0, -1.1]), 2.0);
        let s = spec(2.0, 1.0, 1.0, SourceFunction::constant(1.0), ic);
        let sys = GalerkinSystem::new(&s, 5).unwrap();
        let g = sys.project_initial(&s);
        // sin(kπx) = w_k / √2 on (0, 1)
        let expect = [0.8, 0.0, -2.2, 0.0, 0.0].map(|c: f64| c / 2f64.sqrt());
        for (a, b) in g.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
