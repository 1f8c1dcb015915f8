use crate::discretization::{flux_derivative, max_abs_slope, p_laplacian_into, Grid, GridField};
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use crate::problem::{nonlocal_source_into, ProblemSpec};

use super::StepperConfig;

/// Largest explicit step for which a source-free step cannot increase the
/// discrete L² norm:
/// `safety / (2 max(1, (p-1) max|slope|^(p-2)) Σ_a 1/h_a²)`.
pub fn explicit_dt_limit(field: &GridField, p: f64, safety: f64) -> f64 {
    let grid = &field.grid;
    let diffusivity = if p == 2.0 {
        1.0
    } else {
        ((p - 1.0) * max_abs_slope(field).powf(p - 2.0)).max(1.0)
    };
    let inv_h2: f64 = (0..grid.dim()).map(|a| grid.spacing(a).powi(-2)).sum();
    safety / (2.0 * diffusivity * inv_h2)
}

/// u + dt (A_p u + S(u)).
pub fn step_explicit(field: &GridField, spec: &ProblemSpec, dt: f64) -> Result<GridField> {
    step_explicit_eps(field, spec, dt, 0.0)
}

pub(crate) fn step_explicit_eps(
    field: &GridField,
    spec: &ProblemSpec,
    dt: f64,
    epsilon: f64,
) -> Result<GridField> {
    let grid = field.grid;
    let n = grid.len();
    let mut diffusion = vec![0.0; n];
    p_laplacian_into(&grid, &field.values, spec.p, epsilon, &mut diffusion);
    let mut source = vec![0.0; n];
    nonlocal_source_into(
        &field.values,
        &grid.weights(),
        &spec.source,
        spec.lambda,
        &mut source,
    )?;
    let values: Vec<f64> = field
        .values
        .iter()
        .zip(diffusion.iter().zip(&source))
        .map(|(u, (d, s))| u + dt * (d + s))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("explicit step"));
    }
    Ok(GridField { grid, values })
}

/// Diagnostics of one implicit solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImexSolve {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `v - dt A_p v = u + dt S(u)` by damped Newton, stopping once
/// `‖residual‖_∞ ≤ newton_tol · max(1, ‖u + dt S(u)‖_∞)`.
pub fn step_imex(
    field: &GridField,
    spec: &ProblemSpec,
    dt: f64,
    cfg: &StepperConfig,
) -> Result<GridField> {
    step_imex_with_stats(field, spec, dt, cfg).map(|(f, _)| f)
}

pub(crate) fn step_imex_with_stats(
    field: &GridField,
    spec: &ProblemSpec,
    dt: f64,
    cfg: &StepperConfig,
) -> Result<(GridField, ImexSolve)> {
    let grid = field.grid;
    let n = grid.len();
    let mut rhs = vec![0.0; n];
    nonlocal_source_into(
        &field.values,
        &grid.weights(),
        &spec.source,
        spec.lambda,
        &mut rhs,
    )?;
    for (r, u) in rhs.iter_mut().zip(&field.values) {
        *r = u + dt * *r;
    }

    let mut v = field.values.clone();
    let mut work = vec![0.0; n];
    let mut res = residual(&grid, &v, &rhs, spec.p, dt, cfg.epsilon, &mut work);
    let mut res_norm = max_norm(&res);
    // relative to the data so large states are not held to an absolute floor
    let tol = cfg.newton_tol * max_norm(&rhs).max(1.0);
    let mut iterations = 0;
    while res_norm > tol {
        if iterations == cfg.newton_max_iter {
            return Err(Error::Solver {
                iterations,
                residual: res_norm,
            });
        }
        iterations += 1;
        let jac = assemble_jacobian(&grid, &v, spec.p, dt, cfg.epsilon);
        let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
        jac.solve_in_place(&mut delta)?;

        // backtracking on the residual max-norm
        let mut theta = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + theta * d).collect();
            let trial_res = residual(&grid, &trial, &rhs, spec.p, dt, cfg.epsilon, &mut work);
            let trial_norm = max_norm(&trial_res);
            if trial_norm < res_norm || theta < 1.0 / 64.0 {
                v = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            theta *= 0.5;
        }
        if !res_norm.is_finite() {
            return Err(Error::NonFinite("implicit step"));
        }
    }
    Ok((
        GridField { grid, values: v },
        ImexSolve {
            iterations,
            residual: res_norm,
        },
    ))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(
        0.0f64,
        |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

fn residual(
    grid: &Grid,
    v: &[f64],
    rhs: &[f64],
    p: f64,
    dt: f64,
    eps: f64,
    work: &mut [f64],
) -> Vec<f64> {
    p_laplacian_into(grid, v, p, eps, work);
    v.iter()
        .zip(work.iter())
        .zip(rhs)
        .map(|((x, a), r)| x - dt * a - r)
        .collect()
}

/// I - dt J_A(v) in banded form; J_A is the face-assembled Jacobian of the
/// p-Laplacian and the result is symmetric positive definite.
fn assemble_jacobian(grid: &Grid, v: &[f64], p: f64, dt: f64, eps: f64) -> BandedMatrix {
    let bw = if grid.dim() == 2 { grid.points(0) } else { 1 };
    let mut m = BandedMatrix::identity(grid.len(), bw);
    let inv_h2 = [grid.spacing(0).powi(-2), grid.spacing(1).powi(-2)];
    grid.for_each_face(v, |axis, left, right, slope| {
        let c = dt * flux_derivative(slope, p, eps) * inv_h2[axis];
        if c == 0.0 {
            return;
        }
        if let Some(l) = left {
            m.add(l, l, c);
        }
        if let Some(r) = right {
            m.add(r, r, c);
        }
        if let (Some(l), Some(r)) = (left, right) {
            m.add(l, r, -c);
            m.add(r, l, -c);
        }
    });
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{lp_norm, p_laplacian_apply};
    use crate::problem::{DomainSpec, InitialCondition, Profile, SourceFunction};

    fn spec(p: f64, lambda: f64, source: SourceFunction) -> ProblemSpec {
        ProblemSpec {
            p,
            lambda,
            domain: DomainSpec::interval(1.0).unwrap(),
            source,
            initial: InitialCondition::new(Profile::Sine, 0.5),
            horizon: 1.0,
        }
    }

    /// Dense Gaussian elimination with partial pivoting, test-only oracle.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    /// Dense I - dt A_2 assembled column by column from the operator.
    fn dense_backward_euler(grid: Grid, dt: f64) -> Vec<Vec<f64>> {
        let n = grid.len();
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = GridField::zeros(grid);
            e.values[j] = 1.0;
            let col = p_laplacian_apply(&e, 2.0).values;
            for i in 0..n {
                m[i][j] = if i == j { 1.0 } else { 0.0 } - dt * col[i];
            }
        }
        m
    }

    #[test]
    fn explicit_zero_state_constant_source() {
        let s = spec(2.0, 1.3, SourceFunction::constant(1.0));
        let g = Grid::new_1d(50, 1.0).unwrap();
        let dt = 1e-5;
        let u1 = step_explicit(&GridField::zeros(g), &s, dt).unwrap();
        let expect = dt * 1.3 / g.discrete_measure().powi(2);
        assert!(u1.values.iter().all(|&v| (v - expect).abs() < 1e-18));
    }

    #[test]
    fn explicit_dt_zero_is_identity() {
        let s = spec(3.0, 2.0, SourceFunction::quadratic(1.0));
        let g = Grid::new_1d(20, 1.0).unwrap();
        let u = g.sample(&s.initial);
        assert_eq!(step_explicit(&u, &s, 0.0).unwrap(), u);
    }

    #[test]
    fn explicit_l2_decay_without_source() {
        for &p in &[2.0, 3.0, 4.0] {
            let s = spec(p, 0.0, SourceFunction::constant(1.0));
            let g = Grid::new_1d(40, 1.0).unwrap();
            let mut u = g.sample(&InitialCondition::new(
                Profile::Modes(vec![1.0, -0.5, 0.8]),
                1.0,
            ));
            let mut prev = lp_norm(&u, 2.0);
            for _ in 0..200 {
                let dt = explicit_dt_limit(&u, p, 0.9);
                u = step_explicit(&u, &s, dt).unwrap();
                let now = lp_norm(&u, 2.0);
                assert!(now <= prev, "p={p}: {now} > {prev}");
                prev = now;
            }
        }
    }

    #[test]
    fn imex_p2_matches_dense_backward_euler() {
        for n in [1usize, 7, 32, 64] {
            let s = spec(2.0, 0.7, SourceFunction::quadratic(1.0));
            let g = Grid::new_1d(n, 1.0).unwrap();
            let u = g.sample(&s.initial);
            let dt = 3e-3;
            let got = step_imex(&u, &s, dt, &StepperConfig::imex(dt)).unwrap();
            let src = crate::problem::nonlocal_source(&u.values, &g.weights(), &s.source, s.lambda)
                .unwrap();
            let rhs: Vec<f64> = u.values.iter().zip(&src).map(|(a, b)| a + dt * b).collect();
            let want = dense_solve(dense_backward_euler(g, dt), rhs);
            for (a, b) in got.values.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn imex_p2_single_linear_solve() {
        let s = spec(2.0, 1.0, SourceFunction::constant(1.0));
        let g = Grid::new_1d(30, 1.0).unwrap();
        let u = g.sample(&s.initial);
        let (_, stats) = step_imex_with_stats(&u, &s, 1e-2, &StepperConfig::imex(1e-2)).unwrap();
        assert_eq!(stats.iterations, 1);
    }

    #[test]
    fn imex_zero_state_positive_m_matrix_update() {
        let s = spec(2.0, 2.0, SourceFunction::constant(1.0));
        let g = Grid::new_1d(24, 1.0).unwrap();
        let dt = 0.05;
        let u1 = step_imex(&GridField::zeros(g), &s, dt, &StepperConfig::imex(dt)).unwrap();
        let scale = dt * 2.0 / g.discrete_measure().powi(2);
        let want = dense_solve(dense_backward_euler(g, dt), vec![scale; g.len()]);
        for (a, b) in u1.values.iter().zip(&want) {
            assert!(*a > 0.0);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn imex_consistency_as_dt_shrinks() {
        let s = spec(3.0, 1.0, SourceFunction::quadratic(1.0));
        let g = Grid::new_1d(32, 1.0).unwrap();
        let u = g.sample(&s.initial);
        let mut ratios = Vec::new();
        let mut dt = 1e-3;
        for _ in 0..6 {
            let v = step_imex(&u, &s, dt, &StepperConfig::imex(dt)).unwrap();
            let change = v
                .values
                .iter()
                .zip(&u.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            ratios.push(change / dt);
            dt *= 0.5;
        }
        // ‖u¹ - u⁰‖∞ / dt stays bounded and settles as dt halves
        let last = *ratios.last().unwrap();
        assert!(ratios
            .iter()
            .all(|r| r.is_finite() && *r <= 1.5 * last.max(ratios[0])));
        assert!((ratios[5] - ratios[4]).abs() <= 0.05 * ratios[5]);
    }

    #[test]
    fn imex_nonlinear_residual_below_tolerance() {
        let s = ProblemSpec {
            domain: DomainSpec::rectangle(1.0, 1.5).unwrap(),
            ..spec(4.0, 1.0, SourceFunction::quadratic(1.0))
        };
        let g = Grid::new_2d(9, 11, 1.0, 1.5).unwrap();
        let u = g.sample(&InitialCondition::new(Profile::Bump, 2.0));
        let cfg = StepperConfig::imex(1e-2);
        let (v, stats) = step_imex_with_stats(&u, &s, 1e-2, &cfg).unwrap();
        assert!(stats.residual <= cfg.newton_tol);
        assert!(stats.iterations > 1);
        // check the implicit equation directly
        let av = p_laplacian_apply(&v, 4.0).values;
        let src =
            crate::problem::nonlocal_source(&u.values, &g.weights(), &s.source, s.lambda).unwrap();
        for i in 0..g.len() {
            let r = v.values[i] - 1e-2 * av[i] - u.values[i] - 1e-2 * src[i];
            assert!(r.abs() <= 1e-10);
        }
    }

    #[test]
    fn newton_failure_reports_residual() {
        let s = spec(4.0, 1.0, SourceFunction::quadratic(1.0));
        let g = Grid::new_1d(16, 1.0).unwrap();
        let u = g.sample(&InitialCondition::new(Profile::Sine, 5.0));
        let cfg = StepperConfig {
            newton_max_iter: 1,
            newton_tol: 1e-14,
            ..StepperConfig::imex(1.0)
        };
        assert!(matches!(
            step_imex(&u, &s, 1.0, &cfg),
            Err(Error::Solver { iterations: 1, .. })
        ));
    }
}
