//! Explicit monotone time stepping for `u_t - F(x, t, D^2 u) = f`.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::diagnostics::{class_residual, ClassResidualReport};
use super::hessian::{slice_gradient, slice_hessian};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{GridFunction, ParabolicCylinder, SpaceTimeGrid, MAX_DIM};
use crate::operators::{OperatorSpec, DIRECTION_FLOOR};

/// Spatial nodes per slice above which a step is split across threads.
const PARALLEL_THRESHOLD: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `prod [lower_a, upper_a] x [t_start, 0]`.
    Box { lower: Vec<f64>, upper: Vec<f64>, t_start: f64 },
    /// A cylinder whose top lies at `t = 0`; solved on its bounding box with
    /// boundary data imposed outside the open ball.
    Cylinder(ParabolicCylinder),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Cylinder(c) => c.center.dim(),
        }
    }

    fn extents(&self) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        match self {
            Domain::Box { lower, upper, t_start } => Ok((lower.clone(), upper.clone(), *t_start)),
            Domain::Cylinder(c) => {
                if c.center.t != 0.0 {
                    return Err(Error::Geometry("cylinder domains must end at t = 0".into()));
                }
                let r = c.radius;
                Ok((
                    c.center.x.iter().map(|v| v - r).collect(),
                    c.center.x.iter().map(|v| v + r).collect(),
                    -r * r,
                ))
            }
        }
    }
}

/// `u_t - F(x, t, D^2 u) = f` with Dirichlet data `g` on the parabolic boundary.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub operator: OperatorSpec,
    pub source: ScalarField,
    pub boundary: ScalarField,
    pub domain: Domain,
    /// Replace `f` by `f - f(0, 0)` before solving.
    pub normalize_source: bool,
}

impl ProblemSpec {
    pub fn new(operator: OperatorSpec, source: ScalarField, boundary: ScalarField, domain: Domain) -> Result<Self> {
        if domain.dim() != operator.dim() {
            return Err(Error::DimensionMismatch { expected: operator.dim(), got: domain.dim() });
        }
        Ok(Self { operator, source, boundary, domain, normalize_source: false })
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Value subtracted from the source (zero unless normalization is on).
    pub fn source_shift(&self) -> f64 {
        if self.normalize_source {
            self.source.eval(&[0.0; MAX_DIM][..self.dim()], 0.0)
        } else {
            0.0
        }
    }

    #[inline]
    fn source_at(&self, x: &[f64], t: f64, shift: f64) -> f64 {
        self.source.eval(x, t) - shift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub h: f64,
    pub dt: f64,
    /// Fraction of the stability limit `h^2 / (2 d Lambda)` that `dt` may use.
    pub cfl_safety: f64,
    /// Keep every `output_stride`-th time level (counted back from `t = 0`).
    pub output_stride: usize,
}

impl SchemeConfig {
    pub fn new(h: f64, dt: f64) -> Self {
        Self { h, dt, cfl_safety: 1.0, output_stride: 1 }
    }

    /// Largest admissible step: `cfl_safety * h^2 / (2 d Lambda)`.
    pub fn cfl_limit(h: f64, cfl_safety: f64, dim: usize, upper: f64) -> f64 {
        cfl_safety * h * h / (2.0 * dim as f64 * upper)
    }

    /// Picks the largest `dt` under the CFL limit that divides `duration`.
    pub fn from_cfl(h: f64, cfl_safety: f64, dim: usize, upper: f64, duration: f64) -> Self {
        let limit = Self::cfl_limit(h, cfl_safety, dim, upper);
        let steps = (duration / limit * (1.0 - 1e-12)).ceil().max(1.0);
        Self { h, dt: duration / steps, cfl_safety, output_stride: 1 }
    }

    fn check(&self, dim: usize, upper: f64) -> Result<()> {
        if !(self.h > 0.0 && self.dt > 0.0 && self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "scheme needs h > 0, dt > 0 and cfl_safety in (0, 1] (h = {}, dt = {}, cfl_safety = {})",
                self.h, self.dt, self.cfl_safety
            )));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidArgument("output_stride must be positive".into()));
        }
        let limit = Self::cfl_limit(self.h, self.cfl_safety, dim, upper);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt: self.dt, limit });
        }
        Ok(())
    }
}

/// One explicit Euler step on a fixed grid.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    spec: &'a ProblemSpec,
    grid: SpaceTimeGrid,
    interior: Vec<bool>,
    shift: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ProblemSpec, cfg: &SchemeConfig) -> Result<Self> {
        cfg.check(spec.dim(), spec.operator.pair().upper())?;
        let (lower, upper, t_start) = spec.domain.extents()?;
        let grid = SpaceTimeGrid::covering(spec.dim(), &lower, &upper, cfg.h, t_start, cfg.dt)?;
        let interior = interior_mask(&grid, &spec.domain);
        Ok(Self { spec, grid, interior, shift: spec.source_shift() })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    /// Whether the spatial node is updated by the scheme (otherwise it carries
    /// boundary data).
    pub fn interior(&self) -> &[bool] {
        &self.interior
    }

    /// Initial slice: the boundary data at `t_start`.
    pub fn initial_slice(&self) -> Vec<f64> {
        let t = self.grid.time(0);
        (0..self.grid.n_space())
            .map(|s| {
                let x = self.grid.spatial_coords(s);
                self.spec.boundary.eval(&x[..self.grid.dim()], t)
            })
            .collect()
    }

    /// `u^{n+1} = u^n + dt (F(x, t_n, D^2_h u^n) + f(x, t_n))` at interior
    /// nodes; boundary nodes take `g(x, t_{n+1})`.
    pub fn step(&self, current: &[f64], level: usize, next: &mut [f64]) -> Result<()> {
        let grid = &self.grid;
        let d = grid.dim();
        let t = grid.time(level);
        let t_next = grid.time(level + 1);
        let dt = grid.dt();
        let op = &self.spec.operator;
        let needs_dir = op.needs_direction();
        let update = |s: usize, out: &mut f64| {
            let x = grid.spatial_coords(s);
            let x = &x[..d];
            if !self.interior[s] {
                *out = self.spec.boundary.eval(x, t_next);
                return;
            }
            let m = slice_hessian(grid, current, s);
            let value = if needs_dir {
                let g = slice_gradient(grid, current, s);
                let norm = g[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm >= DIRECTION_FLOOR {
                    let mut nu = [0.0; MAX_DIM];
                    for i in 0..d {
                        nu[i] = g[i] / norm;
                    }
                    op.value(x, t, &m, Some(&nu[..d]))
                } else {
                    op.value(x, t, &m, None)
                }
            } else {
                op.value(x, t, &m, None)
            };
            *out = current[s] + dt * (value + self.spec.source_at(x, t, self.shift));
        };
        if next.len() >= PARALLEL_THRESHOLD {
            next.par_iter_mut().enumerate().with_min_len(1024).for_each(|(s, out)| update(s, out));
        } else {
            next.iter_mut().enumerate().for_each(|(s, out)| update(s, out));
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solution update"));
        }
        Ok(())
    }
}

fn interior_mask(grid: &SpaceTimeGrid, domain: &Domain) -> Vec<bool> {
    (0..grid.n_space())
        .map(|s| {
            if grid.is_spatial_boundary(s) {
                return false;
            }
            match domain {
                Domain::Box { .. } => true,
                Domain::Cylinder(c) => {
                    let x = grid.spatial_coords(s);
                    let r2: f64 = x[..grid.dim()].iter().zip(&c.center.x).map(|(a, b)| (a - b) * (a - b)).sum();
                    r2.sqrt() < c.radius - crate::grid::GEOM_EPS
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Stored time levels (every `output_stride`-th, always including `t = 0`).
    pub u: GridFunction,
    /// Spatial nodes updated by the scheme; the rest carry boundary data.
    pub interior: Vec<bool>,
    pub class_residual: ClassResidualReport,
    pub steps: usize,
    pub wall_seconds: f64,
}

/// Marches from the initial slice to `t = 0`.
pub fn solve(spec: &ProblemSpec, cfg: &SchemeConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let stepper = Stepper::new(spec, cfg)?;
    let grid = stepper.grid().clone();
    let stride = cfg.output_stride;
    let stored = grid.coarsened(1, stride)?;
    let offset = (grid.n_time() - 1) % stride;
    let ns = grid.n_space();
    let mut values = Vec::with_capacity(stored.len());
    let mut current = stepper.initial_slice();
    if offset == 0 {
        values.extend_from_slice(&current);
    }
    let mut next = vec![0.0; ns];
    // f's sup is taken over the visited nodes for the class residual.
    let shift = spec.source_shift();
    let mut f_sup: f64 = 0.0;
    let mut residual = ClassResidualReport::default();
    for level in 0..grid.n_time() - 1 {
        stepper.step(&current, level, &mut next)?;
        let t = grid.time(level);
        for s in 0..ns {
            if stepper.interior[s] {
                let x = grid.spatial_coords(s);
                f_sup = f_sup.max(spec.source_at(&x[..grid.dim()], t, shift).abs());
            }
        }
        residual.accumulate_slice(&grid, &stepper.interior, &current, &next, spec.operator.pair());
        std::mem::swap(&mut current, &mut next);
        if (level + 1) >= offset && (level + 1 - offset) % stride == 0 {
            values.extend_from_slice(&current);
        }
    }
    residual.finish(f_sup);
    let u = GridFunction::new(stored, values)?;
    Ok(SolveResult {
        u,
        interior: stepper.interior,
        class_residual: residual,
        steps: grid.n_time() - 1,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Convenience wrapper around [`class_residual`] for a stored solution.
pub fn stored_class_residual(result: &SolveResult, spec: &ProblemSpec) -> Result<ClassResidualReport> {
    let grid = result.u.grid();
    let shift = spec.source_shift();
    let mut f_sup: f64 = 0.0;
    for node in 0..grid.len() {
        let p = grid.point(node);
        f_sup = f_sup.max(spec.source_at(&p.x, p.t, shift).abs());
    }
    class_residual(&result.u, spec.operator.pair(), f_sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::EllipticityPair;
    use std::f64::consts::PI;

    fn heat_problem(h: f64) -> (ProblemSpec, SchemeConfig) {
        let exact = ScalarField::parse("exp(-pi^2*t)*sin(pi*x)", 1).unwrap();
        let spec = ProblemSpec::new(
            OperatorSpec::scaled_trace(1, 1.0).unwrap(),
            ScalarField::Constant(0.0),
            exact,
            Domain::Box { lower: vec![0.0], upper: vec![1.0], t_start: -1.0 },
        )
        .unwrap();
        (spec, SchemeConfig::new(h, h * h / 4.0))
    }

    fn heat_error(h: f64) -> f64 {
        let (spec, cfg) = heat_problem(h);
        let r = solve(&spec, &cfg).unwrap();
        let g = r.u.grid();
        (0..g.len())
            .map(|n| {
                let p = g.point(n);
                (r.u.value(n) - (-PI * PI * p.t).exp() * (PI * p.x[0]).sin()).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn heat_two_grid_convergence() {
        let e1 = heat_error(1.0 / 16.0);
        let e2 = heat_error(1.0 / 32.0);
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stationary_example() {
        let spec = ProblemSpec::new(
            OperatorSpec::scaled_trace(1, 1.0).unwrap(),
            ScalarField::Constant(-2.0),
            ScalarField::parse("x^2", 1).unwrap(),
            Domain::Box { lower: vec![-1.0], upper: vec![1.0], t_start: -0.1 },
        )
        .unwrap();
        let r = solve(&spec, &SchemeConfig::new(0.1, 0.004)).unwrap();
        let g = r.u.grid();
        for n in 0..g.len() {
            let p = g.point(n);
            assert!((r.u.value(n) - p.x[0] * p.x[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let pair = EllipticityPair::new(1.0, 3.0).unwrap();
        for op in [OperatorSpec::pucci_plus(2, pair).unwrap(), OperatorSpec::normalized_p_laplace(2, 3.5).unwrap()] {
            let spec = ProblemSpec::new(
                op,
                ScalarField::Constant(0.0),
                ScalarField::Constant(0.0),
                Domain::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0], t_start: -0.05 },
            )
            .unwrap();
            let cfg = SchemeConfig::from_cfl(0.125, 0.9, 2, 3.0, 0.05);
            let r = solve(&spec, &cfg).unwrap();
            assert!(r.u.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn pucci_plus_on_concave_data_matches_lambda_heat() {
        let pair = EllipticityPair::new(0.5, 2.0).unwrap();
        let exact = ScalarField::parse("exp(-0.5*pi^2*t)*sin(pi*x)", 1).unwrap();
        let mk = |op| {
            ProblemSpec::new(
                op,
                ScalarField::Constant(0.0),
                exact.clone(),
                Domain::Box { lower: vec![0.0], upper: vec![1.0], t_start: -0.25 },
            )
            .unwrap()
        };
        let cfg = SchemeConfig::from_cfl(1.0 / 32.0, 1.0, 1, 2.0, 0.25);
        let a = solve(&mk(OperatorSpec::pucci_plus(1, pair).unwrap()), &cfg).unwrap();
        let b = solve(&mk(OperatorSpec::scaled_trace(1, 0.5).unwrap()), &cfg).unwrap();
        for (x, y) in a.u.values().iter().zip(b.u.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let err = a
            .u
            .values()
            .iter()
            .enumerate()
            .map(|(n, v)| {
                let p = a.u.grid().point(n);
                (v - (-0.5 * PI * PI * p.t).exp() * (PI * p.x[0]).sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "error {err}");
    }

    #[test]
    fn refuses_cfl_violation() {
        let (spec, mut cfg) = heat_problem(0.1);
        cfg.dt = 0.01;
        assert!(matches!(solve(&spec, &cfg), Err(Error::Cfl { .. })));
    }

    #[test]
    fn output_stride_keeps_final_level() {
        let (spec, mut cfg) = heat_problem(1.0 / 8.0);
        let full = solve(&spec, &cfg).unwrap();
        cfg.output_stride = 7;
        let thin = solve(&spec, &cfg).unwrap();
        let last_full = full.u.slice(full.u.grid().n_time() - 1);
        let last_thin = thin.u.slice(thin.u.grid().n_time() - 1);
        assert_eq!(last_full, last_thin);
        assert_eq!(thin.u.grid().time(thin.u.grid().n_time() - 1), 0.0);
    }

    #[test]
    fn cylinder_domain_uses_boundary_outside_ball() {
        let spec = ProblemSpec::new(
            OperatorSpec::scaled_trace(2, 1.0).unwrap(),
            ScalarField::Constant(0.0),
            ScalarField::parse("x1*x2 + 3", 2).unwrap(),
            Domain::Cylinder(ParabolicCylinder::centered(2, 1.0).unwrap()),
        )
        .unwrap();
        let cfg = SchemeConfig::from_cfl(0.125, 1.0, 2, 1.0, 1.0);
        let r = solve(&spec, &cfg).unwrap();
        // x1 x2 + 3 is caloric and reproduced exactly by the scheme
        for n in 0..r.u.grid().len() {
            let p = r.u.grid().point(n);
            assert!((r.u.value(n) - (p.x[0] * p.x[1] + 3.0)).abs() < 1e-12);
        }
        assert!(r.interior.iter().filter(|b| **b).count() > 0);
    }
}
