//! Least-squares fits from the class subject to the equation constraint
//! `C = F(x0, t0, D)` at the cylinder center.

use nalgebra::{DMatrix, DVector};

use super::poly::{class_dimension, design, from_scaled, least_squares, QuadraticPolynomial};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, ParabolicCylinder, SpaceTimeGrid, GEOM_EPS};
use crate::operators::{OperatorSpec, SymMatrix, DIRECTION_FLOOR};

/// Relative step and objective change at which the nonlinear fit stops.
pub const PROJECTION_TOL: f64 = 1e-10;
pub const PROJECTION_MAX_ITER: usize = 100;

/// Fails with `NearBoundary` unless the closed cylinder lies in the grid.
pub(crate) fn cylinder_within(grid: &SpaceTimeGrid, cyl: &ParabolicCylinder) -> Result<()> {
    let r = cyl.radius;
    let c = &cyl.center;
    let t_end = grid.time(grid.n_time() - 1);
    for a in 0..grid.dim() {
        if c.x[a] - r < grid.lower()[a] - GEOM_EPS || c.x[a] + r > grid.upper(a) + GEOM_EPS {
            return Err(Error::NearBoundary);
        }
    }
    if c.t - r * r < grid.t_start() - GEOM_EPS || c.t > t_end + GEOM_EPS {
        return Err(Error::NearBoundary);
    }
    Ok(())
}

/// Least-squares member of the class on the nodes of `cyl` with
/// `C = F(x0, t0, D)`.
///
/// When `F` is linear at the center the constraint is eliminated; otherwise
/// the constrained objective is minimized by Gauss-Newton from several starts.
pub fn constrained_polyfit(u: &GridFunction, cyl: &ParabolicCylinder, op: &OperatorSpec) -> Result<QuadraticPolynomial> {
    let grid = u.grid();
    if op.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: op.dim() });
    }
    cylinder_within(grid, cyl)?;
    let nodes = grid.nodes_in(cyl)?;
    constrained_fit_on(u, &nodes, cyl, op)
}

pub(crate) fn constrained_fit_on(u: &GridFunction, nodes: &[usize], cyl: &ParabolicCylinder, op: &OperatorSpec) -> Result<QuadraticPolynomial> {
    let dim = u.grid().dim();
    let k = class_dimension(dim);
    // one coefficient is pinned by the constraint
    if nodes.len() < k - 1 {
        return Err(Error::InsufficientNodes { needed: k - 1, found: nodes.len() });
    }
    let r = cyl.radius;
    let des = design(u, nodes, &cyl.center, r);
    let problem = Problem { dim, k, tcol: dim + 1, r, x0: &cyl.center.x[..dim], t0: cyl.center.t, op, rows: &des.rows, values: &des.values };

    if let Some(a) = op.linear_part_at(problem.x0, problem.t0) {
        // C = Tr(A D) = sum_i A_ii D_ii + 2 sum_{i<j} A_ij D_ij
        let mut weights = vec![0.0; k];
        let mut j = dim + 2;
        for i in 0..dim {
            for l in i..dim {
                weights[j] = if i == l { a.get(i, i) } else { 2.0 * a.get(i, l) };
                j += 1;
            }
        }
        let theta = problem.eliminated(&weights)?;
        let mut coef = problem.expand(&theta, 0.0);
        coef[problem.tcol] = (dim + 2..k).map(|j| weights[j] * coef[j]).sum();
        return Ok(from_scaled(dim, &coef, &cyl.center, r));
    }

    // Multi-start Gauss-Newton on the exact constrained objective. Starts:
    // the unconstrained fit, the eliminated fits for the linearizations of F
    // at +-eps I, and zero.
    let full = least_squares(problem.rows, problem.values)?;
    let mut starts = vec![problem.free_part(full.as_slice()), vec![0.0; k - 1]];
    for sign in [1.0, -1.0] {
        let mut at = vec![0.0; k - 1];
        let mut j = dim + 1;
        for i in 0..dim {
            for l in i..dim {
                if i == l {
                    at[j] = sign * 1e-3;
                }
                j += 1;
            }
        }
        let grad = problem.constraint_gradient(&at);
        let mut weights = vec![0.0; k];
        for (c, g) in grad.iter().enumerate() {
            let col = if c >= problem.tcol { c + 1 } else { c };
            if col > problem.tcol {
                weights[col] = *g;
            }
        }
        starts.push(problem.eliminated(&weights)?);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let theta = problem.gauss_newton(start)?;
        let obj = problem.objective(&theta);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, theta));
        }
    }
    let (_, theta) = best.expect("at least one start");
    let c = problem.constraint(&theta);
    let coef = problem.expand(&theta, c);
    Ok(from_scaled(dim, &coef, &cyl.center, r))
}

/// Scaled least-squares data with the time coefficient pinned to
/// `r^2 F(x0, t0, D / r^2)`; `theta` holds every other coefficient.
struct Problem<'a> {
    dim: usize,
    k: usize,
    tcol: usize,
    r: f64,
    x0: &'a [f64],
    t0: f64,
    op: &'a OperatorSpec,
    rows: &'a DMatrix<f64>,
    values: &'a DVector<f64>,
}

impl Problem<'_> {
    fn expand(&self, theta: &[f64], c_scaled: f64) -> Vec<f64> {
        let mut coef = Vec::with_capacity(self.k);
        coef.extend_from_slice(&theta[..self.tcol]);
        coef.push(c_scaled);
        coef.extend_from_slice(&theta[self.tcol..]);
        coef
    }

    fn free_part(&self, coef: &[f64]) -> Vec<f64> {
        coef.iter().enumerate().filter(|(j, _)| *j != self.tcol).map(|(_, v)| *v).collect()
    }

    fn free_matrix(&self) -> DMatrix<f64> {
        self.rows.clone().remove_column(self.tcol)
    }

    /// Least squares with `C` replaced by `sum_j weights_j coef_j`.
    fn eliminated(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let mut m = self.free_matrix();
        let tc = self.rows.column(self.tcol).clone_owned();
        for j in self.tcol + 1..self.k {
            if weights[j] != 0.0 {
                let mut dst = m.column_mut(j - 1);
                dst.axpy(weights[j], &tc, 1.0);
            }
        }
        Ok(least_squares(&m, self.values)?.as_slice().to_vec())
    }

    fn constraint(&self, theta: &[f64]) -> f64 {
        let dim = self.dim;
        let mut d = SymMatrix::zeros(dim);
        let mut j = dim + 1;
        for i in 0..dim {
            for l in i..dim {
                d.set(i, l, theta[j] / (self.r * self.r));
                j += 1;
            }
        }
        let b = &theta[1..=dim];
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nu: Option<Vec<f64>> = (self.op.needs_direction() && bn > DIRECTION_FLOOR).then(|| b.iter().map(|v| v / bn).collect());
        self.r * self.r * self.op.value(self.x0, self.t0, &d, nu.as_deref())
    }

    fn constraint_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        let mut probe = theta.to_vec();
        // A never enters the constraint; B only through the direction
        let first = if self.op.needs_direction() { 1 } else { self.dim + 1 };
        for j in first..theta.len() {
            let step = 1e-7 * theta[j].abs().max(1.0);
            probe[j] = theta[j] + step;
            let up = self.constraint(&probe);
            probe[j] = theta[j] - step;
            let down = self.constraint(&probe);
            probe[j] = theta[j];
            g[j] = (up - down) / (2.0 * step);
        }
        g
    }

    fn residual(&self, theta: &[f64]) -> DVector<f64> {
        let coef = self.expand(theta, self.constraint(theta));
        self.values - self.rows * DVector::from_column_slice(&coef)
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        self.residual(theta).norm_squared()
    }

    fn gauss_newton(&self, mut theta: Vec<f64>) -> Result<Vec<f64>> {
        let tc = self.rows.column(self.tcol).clone_owned();
        let mut obj = self.objective(&theta);
        for _ in 0..PROJECTION_MAX_ITER {
            let grad = self.constraint_gradient(&theta);
            let mut jac = self.free_matrix();
            for (j, g) in grad.iter().enumerate() {
                if *g != 0.0 {
                    let mut dst = jac.column_mut(j);
                    dst.axpy(*g, &tc, 1.0);
                }
            }
            let step = least_squares(&jac, &self.residual(&theta))?;
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
                let trial_obj = self.objective(&trial);
                if trial_obj < obj {
                    accepted = Some((trial, trial_obj));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, next_obj)) = accepted else {
                return Ok(theta);
            };
            let moved = step.amax() * t;
            let scale = theta.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let gain = obj - next_obj;
            theta = next;
            obj = next_obj;
            if moved <= PROJECTION_TOL * scale || gain <= PROJECTION_TOL * obj.max(f64::MIN_POSITIVE) {
                return Ok(theta);
            }
        }
        Err(Error::NonConvergence(PROJECTION_MAX_ITER))
    }
}

/// Sum of squared residuals of `p` on the nodes.
pub fn squared_residual(u: &GridFunction, nodes: &[usize], p: &QuadraticPolynomial) -> f64 {
    let grid = u.grid();
    nodes
        .iter()
        .map(|&node| {
            let (n, s) = grid.split(node);
            let x = grid.spatial_coords(s);
            (u.value(node) - p.eval(&x[..grid.dim()], grid.time(n))).powi(2)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Point;
    use crate::operators::EllipticityPair;

    fn grid1() -> SpaceTimeGrid {
        SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 1.0 / 16.0, -1.0, 1.0 / 64.0).unwrap()
    }

    #[test]
    fn caloric_quadratic_is_reproduced() {
        let g = SpaceTimeGrid::covering(2, &[-1.0, -1.0], &[1.0, 1.0], 0.125, -1.0, 1.0 / 32.0).unwrap();
        let u = GridFunction::from_fn(g.clone(), |x, t| 0.5 * (3.0 * x[0] * x[0] - x[1] * x[1]) + 2.0 * t + x[0] * x[1] + x[1] - 1.0).unwrap();
        let op = OperatorSpec::scaled_trace(2, 1.0).unwrap();
        let cyl = ParabolicCylinder::centered(2, 0.75).unwrap();
        let p = constrained_polyfit(&u, &cyl, &op).unwrap();
        assert!((p.c - 2.0).abs() < 1e-10 && (p.d.get(0, 0) - 3.0).abs() < 1e-10 && (p.d.get(0, 1) - 1.0).abs() < 1e-10);
        assert!((p.a + 1.0).abs() < 1e-10 && (p.b[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constraint_holds_for_arbitrary_data() {
        let g = grid1();
        let u = GridFunction::from_fn(g, |x, t| (2.0 * x[0]).sin() + t * t).unwrap();
        let cyl = ParabolicCylinder::centered(1, 0.5).unwrap();
        let tr = OperatorSpec::scaled_trace(1, 1.0).unwrap();
        let p = constrained_polyfit(&u, &cyl, &tr).unwrap();
        assert_eq!(p.c, p.d.trace());
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let pp = OperatorSpec::pucci_plus(1, pair).unwrap();
        let p = constrained_polyfit(&u, &cyl, &pp).unwrap();
        assert!((p.c - crate::operators::pucci_plus(&p.d, pair)).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_coefficient_grid_search() {
        // u = x^3 + t on Q_{1/2}: the constrained problem has free (A, B, D), C = D
        let g = grid1();
        let u = GridFunction::from_fn(g.clone(), |x, t| x[0].powi(3) + t + 0.3 * x[0] * x[0]).unwrap();
        let cyl = ParabolicCylinder::centered(1, 0.5).unwrap();
        let nodes = g.nodes_in(&cyl).unwrap();
        let pair = EllipticityPair::new(0.5, 1.5).unwrap();
        let op = OperatorSpec::pucci_minus(1, pair).unwrap();
        let best = constrained_polyfit(&u, &cyl, &op).unwrap();
        let got = squared_residual(&u, &nodes, &best);
        let mut brute = f64::INFINITY;
        let steps = 40;
        for ia in 0..=steps {
            for ib in 0..=steps {
                for id in 0..=steps {
                    let a = -0.5 + ia as f64 / steps as f64;
                    let b = -0.5 + 1.5 * ib as f64 / steps as f64;
                    let d = -1.0 + 3.0 * id as f64 / steps as f64;
                    let dm = SymMatrix::diag(&[d]).unwrap();
                    let c = crate::operators::pucci_minus(&dm, pair);
                    let p = QuadraticPolynomial { a, b: vec![b], c, d: dm, origin: Point::origin(1) };
                    brute = brute.min(squared_residual(&u, &nodes, &p));
                }
            }
        }
        assert!(got <= brute + 1e-12, "{got} vs {brute}");
        assert!(got >= 0.9 * brute - 1e-3, "{got} vs {brute}");
    }

    #[test]
    fn cylinder_outside_grid() {
        let u = GridFunction::zeros(grid1());
        let cyl = ParabolicCylinder::new(Point::new(&[0.8], 0.0).unwrap(), 0.5).unwrap();
        let op = OperatorSpec::scaled_trace(1, 1.0).unwrap();
        assert!(matches!(constrained_polyfit(&u, &cyl, &op), Err(Error::NearBoundary)));
    }
}
