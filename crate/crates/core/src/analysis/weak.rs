//! Space-time weak-form residual of a recorded trajectory.
//!
//! Test functions are φ(x, t) = θ(t) ψ(x) with θ(t) = sin(π (t - t0)/(t1 - t0))
//! over the snapshot window and ψ a product of Dirichlet sine modes. In
//! space ψ is used through its grid interpolant, so its gradient on a face
//! is the difference quotient of nodal values (hat-function surrogate), and
//! the time integral uses the trapezoidal rule over the snapshots:
//!
//! ```text
//!   R(φ) = ∫ [ Σ_i h^N u_i ψ_i θ' - Σ_faces h^N φ_p(Du) Dψ θ
//!            + λ/(∫f)² Σ_i h^N f(u_i) ψ_i θ ] dt
//! ```

use std::f64::consts::PI;

use crate::discretization::{flux, integrate, Grid};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::record::TrajectoryRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestFunction {
    /// Sine mode numbers along x and y (y ignored in 1D).
    pub modes: [usize; 2],
}

impl TestFunction {
    fn spatial(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|idx| {
                let x = grid.coords(idx);
                (0..grid.dim())
                    .map(|a| (self.modes[a] as f64 * PI * x[a] / grid.extent(a)).sin())
                    .product()
            })
            .collect()
    }
}

/// The first `count` test functions: modes 1..=count in 1D; in 2D the
/// pairs (k, 1), (1, k), ... in order of increasing k.
pub fn default_test_functions(count: usize, dim: usize) -> Vec<TestFunction> {
    if dim == 1 {
        return (1..=count)
            .map(|k| TestFunction { modes: [k, 1] })
            .collect();
    }
    let mut out = Vec::with_capacity(count);
    let mut k = 1;
    while out.len() < count {
        out.push(TestFunction { modes: [k, 1] });
        if k > 1 && out.len() < count {
            out.push(TestFunction { modes: [1, k] });
        }
        k += 1;
    }
    out
}

/// Largest |R(φ)| over the given test functions.
pub fn weak_residual(
    record: &TrajectoryRecord,
    spec: &ProblemSpec,
    tests: &[TestFunction],
) -> Result<f64> {
    let grid = record
        .grid
        .ok_or_else(|| Error::Config("record carries no grid for its snapshots".into()))?;
    let snaps = &record.snapshots;
    if snaps.len() < 2 {
        return Err(Error::Config(
            "weak residual needs at least two snapshots".into(),
        ));
    }
    if tests.is_empty() {
        return Err(Error::Config("no test functions given".into()));
    }
    if snaps.iter().any(|s| s.values.len() != grid.len()) {
        return Err(Error::Config(
            "snapshot size does not match the grid".into(),
        ));
    }
    let (t0, t1) = (snaps[0].t, snaps[snaps.len() - 1].t);
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(Error::Config(
            "snapshots must span a positive time window".into(),
        ));
    }
    let theta = |t: f64| (PI * (t - t0) / span).sin();
    let theta_dot = |t: f64| PI / span * (PI * (t - t0) / span).cos();
    let weights = grid.weights();
    let cell = grid.cell_volume();

    // per-snapshot pieces independent of the test function
    struct Frame {
        t: f64,
        values: Vec<f64>,
        fluxes: Vec<f64>,
        source: Vec<f64>,
    }
    let frames: Vec<Frame> = snaps
        .iter()
        .map(|s| {
            let mut fluxes = Vec::new();
            grid.for_each_face(&s.values, |_, _, _, slope| {
                fluxes.push(flux(slope, spec.p, 0.0))
            });
            let fu: Vec<f64> = s.values.iter().map(|&u| spec.source.eval(u)).collect();
            let integral = integrate(&fu, &grid);
            let floor = crate::problem::integral_floor(&spec.source, &weights);
            if !(integral >= floor) {
                return Err(Error::Degenerate { integral, floor });
            }
            let scale = spec.lambda / (integral * integral);
            Ok(Frame {
                t: s.t,
                values: s.values.clone(),
                fluxes,
                source: fu.into_iter().map(|f| scale * f).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let mut worst = 0.0f64;
    for test in tests {
        let psi = test.spatial(&grid);
        let mut dpsi = Vec::new();
        grid.for_each_face(&psi, |_, _, _, slope| dpsi.push(slope));
        let integrand: Vec<(f64, f64)> = frames
            .iter()
            .map(|fr| {
                let mass: f64 = fr.values.iter().zip(&psi).map(|(u, w)| u * w).sum::<f64>() * cell;
                let stiff: f64 =
                    fr.fluxes.iter().zip(&dpsi).map(|(q, d)| q * d).sum::<f64>() * cell;
                let src: f64 = fr.source.iter().zip(&psi).map(|(s, w)| s * w).sum::<f64>() * cell;
                (fr.t, mass * theta_dot(fr.t) + (src - stiff) * theta(fr.t))
            })
            .collect();
        let r: f64 = integrand
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum();
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{DomainSpec, InitialCondition, Profile, SourceFunction};
    use crate::record::Snapshot;
    use crate::time_integration::{
        run_to_time, uniform_sample_times, RecordOptions, StepperConfig,
    };

    fn spec(lambda: f64, ic: InitialCondition, horizon: f64) -> ProblemSpec {
        ProblemSpec {
            p: 2.0,
            lambda,
            domain: DomainSpec::interval(1.0).unwrap(),
            source: SourceFunction::constant(1.0),
            initial: ic,
            horizon,
        }
    }

    fn constant_record(grid: Grid, values: Vec<f64>, times: &[f64]) -> TrajectoryRecord {
        let mut rec = TrajectoryRecord::new(2.0, 0.0, vec![]);
        rec.grid = Some(grid);
        rec.snapshots = times
            .iter()
            .map(|&t| Snapshot {
                t,
                values: values.clone(),
            })
            .collect();
        rec
    }

    #[test]
    fn zero_field_without_source_is_exact() {
        let g = Grid::new_1d(40, 1.0).unwrap();
        let rec = constant_record(g, vec![0.0; 40], &uniform_sample_times(1.0, 10));
        let r = weak_residual(
            &rec,
            &spec(0.0, InitialCondition::zero(), 1.0),
            &default_test_functions(10, 1),
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn steady_state_residual_small() {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let mh = g.discrete_measure();
        let u: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coords(i)[0];
                x * (1.0 - x) / (2.0 * mh * mh)
            })
            .collect();
        let rec = constant_record(g, u, &uniform_sample_times(1.0, 20));
        let r = weak_residual(
            &rec,
            &spec(1.0, InitialCondition::zero(), 1.0),
            &default_test_functions(10, 1),
        )
        .unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn needs_snapshots() {
        let g = Grid::new_1d(8, 1.0).unwrap();
        let rec = constant_record(g, vec![0.0; 8], &[0.0]);
        assert!(weak_residual(
            &rec,
            &spec(1.0, InitialCondition::zero(), 1.0),
            &default_test_functions(2, 1)
        )
        .is_err());
    }

    #[test]
    fn residual_first_order_in_dt() {
        let g = Grid::new_1d(31, 1.0).unwrap();
        let s = spec(1.0, InitialCondition::new(Profile::Sine, 1.0), 0.2);
        let times = uniform_sample_times(0.2, 400);
        let residual = |dt: f64| {
            let rec = run_to_time(
                &s,
                &g,
                &StepperConfig::imex(dt),
                &times,
                &RecordOptions::with_snapshots(1),
            )
            .unwrap();
            weak_residual(&rec, &s, &default_test_functions(10, 1)).unwrap()
        };
        let r1 = residual(5e-4);
        let r2 = residual(2.5e-4);
        assert!(r2 <= 0.55 * r1, "{r1} -> {r2}");
    }

    #[test]
    fn default_tests_2d() {
        let t = default_test_functions(5, 2);
        assert_eq!(t.len(), 5);
        assert_eq!(t[0].modes, [1, 1]);
        assert_eq!(t[1].modes, [2, 1]);
        assert_eq!(t[2].modes, [1, 2]);
    }
}
