//! Uniform interior-point grids with homogeneous Dirichlet data, the
//! conservative p-Laplacian, midpoint quadrature and the discrete norms.
//!
//! Nodes sit at `x_i = i h`, `i = 1..=n`, with `h = L/(n+1)`; the boundary
//! values are implicitly zero. Faces sit between consecutive nodes
//! (including the two boundary faces per grid line), and a face carries the
//! slope `(u_right - u_left)/h`. Every reduction sums in node order so the
//! results are bitwise reproducible.

use crate::error::{Error, Result};
use crate::problem::{DomainSpec, InitialCondition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    extent: [f64; 2],
    h: [f64; 2],
}

impl Grid {
    pub fn new_1d(n: usize, extent: f64) -> Result<Self> {
        Self::build(1, [n, 1], [extent, 1.0])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::build(2, [nx, ny], [lx, ly])
    }

    /// Grid over `domain` with `points[a]` interior nodes along axis `a`.
    /// A single entry is reused for every axis.
    pub fn for_domain(domain: &DomainSpec, points: &[usize]) -> Result<Self> {
        let ext = domain.extents();
        let pick = |a: usize| points.get(a).or(points.first()).copied().unwrap_or(0);
        match ext.len() {
            1 => Self::new_1d(pick(0), ext[0]),
            _ => Self::new_2d(pick(0), pick(1), ext[0], ext[1]),
        }
    }

    fn build(dim: usize, n: [usize; 2], extent: [f64; 2]) -> Result<Self> {
        if n[..dim].contains(&0) {
            return Err(Error::invalid(
                "n",
                "need at least one interior node per axis",
            ));
        }
        if extent[..dim].iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::invalid("extent", "extents must be finite and > 0"));
        }
        let mut h = [1.0; 2];
        for a in 0..dim {
            h[a] = extent[a] / (n[a] + 1) as f64;
        }
        Ok(Self { dim, n, extent, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn extents(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// h^N, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    /// Measure seen by the midpoint rule: (number of nodes) * h^N.
    pub fn discrete_measure(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.cell_volume(); self.len()]
    }

    /// Coordinates of the node with flat index `idx` (x fastest).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let i = idx % self.n[0];
        let j = idx / self.n[0];
        [
            (i + 1) as f64 * self.h[0],
            if self.dim == 2 {
                (j + 1) as f64 * self.h[1]
            } else {
                0.0
            },
        ]
    }

    fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.n[0]
        }
    }

    /// Start offsets of every grid line running along `axis`.
    fn line_starts(&self, axis: usize) -> impl Iterator<Item = usize> + '_ {
        let (count, step) = if axis == 0 {
            (self.n[1], self.n[0])
        } else {
            (self.n[0], 1)
        };
        (0..count).map(move |k| k * step)
    }

    /// Visits every face along every axis in a fixed order, passing
    /// `(axis, left index, right index, slope)`; missing neighbours are the
    /// zero boundary.
    pub(crate) fn for_each_face(
        &self,
        u: &[f64],
        mut visit: impl FnMut(usize, Option<usize>, Option<usize>, f64),
    ) {
        for axis in 0..self.dim {
            let stride = self.stride(axis);
            let len = self.n[axis];
            let h = self.h[axis];
            for start in self.line_starts(axis) {
                let mut left: Option<usize> = None;
                for k in 0..=len {
                    let right = (k < len).then(|| start + k * stride);
                    let ul = left.map_or(0.0, |i| u[i]);
                    let ur = right.map_or(0.0, |i| u[i]);
                    visit(axis, left, right, (ur - ul) / h);
                    left = right;
                }
            }
        }
    }

    /// Samples an initial condition onto the interior nodes.
    pub fn sample(&self, ic: &InitialCondition) -> GridField {
        let values = (0..self.len())
            .map(|idx| ic.eval(&self.coords(idx)[..self.dim], self.extents()))
            .collect();
        GridField {
            grid: *self,
            values,
        }
    }
}

/// Values at the interior nodes of a grid; the boundary is implicitly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Flux φ(s) = (ε² + s²)^((p-2)/2) s; with ε = 0 this is |s|^(p-2) s.
#[inline]
pub fn flux(slope: f64, p: f64, epsilon: f64) -> f64 {
    if p == 2.0 {
        slope
    } else if epsilon == 0.0 {
        slope.abs().powf(p - 2.0) * slope
    } else {
        (epsilon * epsilon + slope * slope).powf(0.5 * (p - 2.0)) * slope
    }
}

/// dφ/ds.
#[inline]
pub fn flux_derivative(slope: f64, p: f64, epsilon: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if epsilon == 0.0 {
        (p - 1.0) * slope.abs().powf(p - 2.0)
    } else {
        let r = epsilon * epsilon + slope * slope;
        let q = 0.5 * (p - 2.0);
        r.powf(q) + 2.0 * q * slope * slope * r.powf(q - 1.0)
    }
}

/// Conservative p-Laplacian: per axis `(φ(s_right) - φ(s_left)) / h`.
pub fn p_laplacian_apply(field: &GridField, p: f64) -> GridField {
    p_laplacian_regularized(field, p, 0.0)
}

pub fn p_laplacian_regularized(field: &GridField, p: f64, epsilon: f64) -> GridField {
    let mut out = vec![0.0; field.values.len()];
    p_laplacian_into(&field.grid, &field.values, p, epsilon, &mut out);
    GridField {
        grid: field.grid,
        values: out,
    }
}

pub fn p_laplacian_into(grid: &Grid, u: &[f64], p: f64, epsilon: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let inv_h = [1.0 / grid.h[0], 1.0 / grid.h[1]];
    grid.for_each_face(u, |axis, left, right, slope| {
        let q = flux(slope, p, epsilon) * inv_h[axis];
        if let Some(l) = left {
            out[l] += q;
        }
        if let Some(r) = right {
            out[r] -= q;
        }
    });
}

/// Largest |slope| over all faces, boundary faces included.
pub fn max_abs_slope(field: &GridField) -> f64 {
    let mut m = 0.0f64;
    field
        .grid
        .for_each_face(&field.values, |_, _, _, s| m = m.max(s.abs()));
    m
}

/// Midpoint rule h^N Σ v_i (boundary contributes 0).
pub fn integrate(values: &[f64], grid: &Grid) -> f64 {
    grid.cell_volume() * values.iter().sum::<f64>()
}

/// Discrete pairing h^N Σ a_i b_i.
pub fn pairing(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Discrete L^k norm; `k = f64::INFINITY` gives the max norm.
pub fn lp_norm(field: &GridField, k: f64) -> f64 {
    lp_norm_values(&field.values, &field.grid, k)
}

pub fn lp_norm_values(values: &[f64], grid: &Grid, k: f64) -> f64 {
    if k.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = values.iter().map(|v| v.abs().powf(k)).sum();
    (grid.cell_volume() * sum).powf(1.0 / k)
}

/// Discrete W^{1,p}_0 seminorm (h^N Σ_faces |slope|^p)^(1/p).
pub fn w1p_seminorm(field: &GridField, p: f64) -> f64 {
    let mut sum = 0.0;
    field
        .grid
        .for_each_face(&field.values, |_, _, _, s| sum += s.abs().powf(p));
    (field.grid.cell_volume() * sum).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field_1d(n: usize, extent: f64, f: impl Fn(f64) -> f64) -> GridField {
        let g = Grid::new_1d(n, extent).unwrap();
        let values = (0..n).map(|i| f(g.coords(i)[0])).collect();
        GridField::new(g, values).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new_1d(9, 2.0).unwrap();
        assert_eq!(g.spacing(0) * 10.0, 2.0);
        assert!((0..9).all(|i| {
            let x = g.coords(i)[0];
            x > 0.0 && x < 2.0
        }));
        let g2 = Grid::new_2d(3, 4, 1.0, 2.0).unwrap();
        assert_eq!(g2.len(), 12);
        assert_eq!(g2.coords(5), [0.75, 0.8]);
        assert!(Grid::new_1d(0, 1.0).is_err());
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        for n in [1, 5, 32, 101] {
            let u = field_1d(n, 1.0, |x| x * (1.0 - x));
            let out = p_laplacian_apply(&u, 2.0);
            for v in out.values {
                assert!((v + 2.0).abs() < 1e-9, "n={n}: {v}");
            }
        }
    }

    #[test]
    fn single_node_flux_difference() {
        for &p in &[2.0, 2.5, 3.0, 4.0] {
            for &a in &[0.7, -1.3] {
                let g = Grid::new_1d(1, 1.0).unwrap();
                let h = g.spacing(0);
                let u = GridField::new(g, vec![a]).unwrap();
                let out = p_laplacian_apply(&u, p).values[0];
                let expect = -2.0 * (a / h).abs().powf(p - 2.0) * a / (h * h);
                assert!((out - expect).abs() <= 1e-12 * expect.abs());
                assert!(out.signum() == -a.signum());
            }
        }
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = Grid::new_2d(4, 5, 1.0, 1.5).unwrap();
        let out = p_laplacian_apply(&GridField::zeros(g), 3.0);
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_examples() {
        for n in [1, 7, 100] {
            let g = Grid::new_1d(n, 1.0).unwrap();
            let ones = vec![1.0; n];
            let expect = n as f64 / (n + 1) as f64;
            assert!((integrate(&ones, &g) - expect).abs() < 1e-14);
            assert_eq!(integrate(&vec![0.0; n], &g), 0.0);
        }
        let g = Grid::new_2d(3, 3, 1.0, 1.0).unwrap();
        assert!((integrate(&[2.0; 9], &g) - 2.0 * 9.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let g = Grid::new_1d(1, 1.0).unwrap();
        let u = GridField::new(g, vec![3.0]).unwrap();
        assert!((lp_norm(&u, 2.0) - 4.5f64.sqrt()).abs() < 1e-15);

        let g = Grid::new_1d(3, 1.0).unwrap();
        let u = GridField::new(g, vec![1.0, -5.0, 2.0]).unwrap();
        assert_eq!(lp_norm(&u, f64::INFINITY), 5.0);

        let g = Grid::new_1d(9, 1.0).unwrap();
        let c = GridField::new(g, vec![-0.5; 9]).unwrap();
        let covered = 9.0 * g.spacing(0);
        for k in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&c, k) - 0.5 * covered.powf(1.0 / k)).abs() < 1e-15);
        }
        assert_eq!(lp_norm(&c, f64::INFINITY), 0.5);
    }

    #[test]
    fn seminorm_examples() {
        let g = Grid::new_1d(1, 1.0).unwrap();
        assert_eq!(w1p_seminorm(&GridField::zeros(g), 3.0), 0.0);
        let a = 0.8;
        let u = GridField::new(g, vec![a]).unwrap();
        // two faces, slopes ±2a, weight h = 1/2
        assert!((w1p_seminorm(&u, 2.0) - 2.0 * a).abs() < 1e-15);
        let doubled = GridField::new(g, vec![2.0 * a]).unwrap();
        for p in [2.0, 3.0, 4.5] {
            let r = w1p_seminorm(&doubled, p) / w1p_seminorm(&u, p);
            assert!((r - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn regularized_flux_matches_at_zero_epsilon() {
        for s in [-3.0, -0.1, 0.0, 0.4, 2.0] {
            assert_eq!(flux(s, 3.0, 0.0), s.abs() * s);
            let fd = (flux(s + 1e-6, 3.5, 0.1) - flux(s - 1e-6, 3.5, 0.1)) / 2e-6;
            assert!((fd - flux_derivative(s, 3.5, 0.1)).abs() < 1e-6);
        }
    }

    fn random_field(grid: Grid) -> impl Strategy<Value = GridField> {
        proptest::collection::vec(-1.0f64..1.0, grid.len())
            .prop_map(move |v| GridField::new(grid, v).unwrap())
    }

    fn grids() -> impl Strategy<Value = Grid> {
        prop_oneof![
            (1usize..40, 0.5f64..3.0).prop_map(|(n, l)| Grid::new_1d(n, l).unwrap()),
            (1usize..9, 1usize..9, 0.5f64..2.0, 0.5f64..2.0)
                .prop_map(|(a, b, lx, ly)| Grid::new_2d(a, b, lx, ly).unwrap()),
        ]
    }

    fn classical_stencil(u: &GridField) -> Vec<f64> {
        let g = u.grid;
        let n0 = g.points(0);
        let get = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= n0 as isize || j >= g.points(1) as isize {
                0.0
            } else {
                u.values[i as usize + n0 * j as usize]
            }
        };
        (0..g.len())
            .map(|idx| {
                let (i, j) = ((idx % n0) as isize, (idx / n0) as isize);
                let hx = g.spacing(0);
                let mut v = (get(i + 1, j) - 2.0 * get(i, j) + get(i - 1, j)) / (hx * hx);
                if g.dim() == 2 {
                    let hy = g.spacing(1);
                    v += (get(i, j + 1) - 2.0 * get(i, j) + get(i, j - 1)) / (hy * hy);
                }
                v
            })
            .collect()
    }

    proptest! {
        #[test]
        fn p2_matches_classical_stencil(u in grids().prop_flat_map(random_field)) {
            let a = p_laplacian_apply(&u, 2.0).values;
            let b = classical_stencil(&u);
            let scale = b.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn energy_identity(u in grids().prop_flat_map(random_field), p in 2.0f64..5.0) {
            let au = p_laplacian_apply(&u, p);
            let lhs = -pairing(&au.values, &u.values, &u.grid);
            let rhs = w1p_seminorm(&u, p).powf(p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn odd_symmetry(u in grids().prop_flat_map(random_field), p in 2.0f64..5.0) {
            let neg = GridField::new(u.grid, u.values.iter().map(|v| -v).collect()).unwrap();
            let a = p_laplacian_apply(&u, p).values;
            let b = p_laplacian_apply(&neg, p).values;
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn monotone_pairing(
            (u, v) in grids().prop_flat_map(|g| (random_field(g), random_field(g))),
            p in 2.0f64..5.0,
        ) {
            let au = p_laplacian_apply(&u, p).values;
            let av = p_laplacian_apply(&v, p).values;
            let diff_a: Vec<f64> = au.iter().zip(&av).map(|(a, b)| a - b).collect();
            let diff_u: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a - b).collect();
            let scale = w1p_seminorm(&u, p).powf(p) + w1p_seminorm(&v, p).powf(p);
            prop_assert!(pairing(&diff_a, &diff_u, &u.grid) <= 1e-12 * scale);
        }

        #[test]
        fn lp_bounded_by_max_norm(u in grids().prop_flat_map(random_field), k in 1.0f64..12.0) {
            let bound = u.grid.discrete_measure().powf(1.0 / k) * lp_norm(&u, f64::INFINITY);
            prop_assert!(lp_norm(&u, k) <= bound * (1.0 + 1e-12));
        }
    }
}
