//! Parabolic quadratic polynomials `1/2 x^T D x + C t + B.x + A` and their
//! least-squares / Chebyshev fits on node sets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Point, SpaceTimeGrid};
use crate::lp::LinearProgram;
use crate::operators::SymMatrix;

/// `1/2 (x - x0)^T D (x - x0) + C (t - t0) + B.(x - x0) + A` about `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPolynomial {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
    pub d: SymMatrix,
    pub origin: Point,
}

impl QuadraticPolynomial {
    pub fn zero(dim: usize) -> Self {
        Self { a: 0.0, b: vec![0.0; dim], c: 0.0, d: SymMatrix::zeros(dim), origin: Point::origin(dim) }
    }

    pub fn new(a: f64, b: Vec<f64>, c: f64, d: SymMatrix) -> Result<Self> {
        if b.len() != d.dim() {
            return Err(Error::DimensionMismatch { expected: d.dim(), got: b.len() });
        }
        let origin = Point::origin(d.dim());
        Ok(Self { a, b, c, d, origin })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let d = self.dim();
        let mut y = [0.0; 3];
        for i in 0..d {
            y[i] = x[i] - self.origin.x[i];
        }
        let y = &y[..d];
        0.5 * self.d.quad_form(y) + self.c * (t - self.origin.t) + self.b.iter().zip(y).map(|(b, v)| b * v).sum::<f64>() + self.a
    }

    /// Same polynomial expressed about another origin.
    pub fn recentered(&self, origin: &Point) -> QuadraticPolynomial {
        let d = self.dim();
        let shift: Vec<f64> = (0..d).map(|i| origin.x[i] - self.origin.x[i]).collect();
        let a = self.eval(&origin.x, origin.t);
        let b: Vec<f64> = (0..d)
            .map(|i| self.b[i] + (0..d).map(|j| self.d.get(i, j) * shift[j]).sum::<f64>())
            .collect();
        QuadraticPolynomial { a, b, c: self.c, d: self.d, origin: origin.clone() }
    }

    /// Euclidean norm of `B`.
    pub fn b_norm(&self) -> f64 {
        self.b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Dimension of the polynomial class: `1 + d + 1 + d (d + 1) / 2`.
pub fn class_dimension(dim: usize) -> usize {
    2 + dim + dim * (dim + 1) / 2
}

/// Scaled monomials at a point: `[1, y_i, tau, 1/2 y_i^2, y_i y_j]` with
/// `y = (x - x0) / r`, `tau = (t - t0) / r^2`.
pub(crate) fn basis_row(dim: usize, y: &[f64], tau: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    out.extend_from_slice(&y[..dim]);
    out.push(tau);
    for i in 0..dim {
        for j in i..dim {
            out.push(if i == j { 0.5 * y[i] * y[i] } else { y[i] * y[j] });
        }
    }
}

/// Converts scaled coefficients back to a polynomial about `origin`.
pub(crate) fn from_scaled(dim: usize, coef: &[f64], origin: &Point, r: f64) -> QuadraticPolynomial {
    let a = coef[0];
    let b: Vec<f64> = coef[1..=dim].iter().map(|v| v / r).collect();
    let c = coef[dim + 1] / (r * r);
    let mut d = SymMatrix::zeros(dim);
    let mut k = dim + 2;
    for i in 0..dim {
        for j in i..dim {
            d.set(i, j, coef[k] / (r * r));
            k += 1;
        }
    }
    QuadraticPolynomial { a, b, c, d, origin: origin.clone() }
}

/// Design matrix and data for a node set, in coordinates scaled by `r`.
pub(crate) struct Design {
    pub rows: DMatrix<f64>,
    pub values: DVector<f64>,
}

pub(crate) fn design(u: &GridFunction, nodes: &[usize], origin: &Point, r: f64) -> Design {
    let grid: &SpaceTimeGrid = u.grid();
    let dim = grid.dim();
    let k = class_dimension(dim);
    let mut rows = DMatrix::zeros(nodes.len(), k);
    let mut values = DVector::zeros(nodes.len());
    let mut row = Vec::with_capacity(k);
    let mut y = [0.0; 3];
    for (i, &node) in nodes.iter().enumerate() {
        let (n, s) = grid.split(node);
        let x = grid.spatial_coords(s);
        for a in 0..dim {
            y[a] = (x[a] - origin.x[a]) / r;
        }
        let tau = (grid.time(n) - origin.t) / (r * r);
        basis_row(dim, &y, tau, &mut row);
        for (j, v) in row.iter().enumerate() {
            rows[(i, j)] = *v;
        }
        values[i] = u.value(node);
    }
    Design { rows, values }
}

/// Least-squares solution via SVD.
pub(crate) fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max().max(1e-300);
    svd.solve(b, tol).map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))
}

/// Unconstrained least-squares fit followed by a midrange shift of `A`, so
/// that the sup residual is balanced. Returns the polynomial and the sup
/// residual.
pub fn fit_least_squares(u: &GridFunction, nodes: &[usize], origin: &Point, r: f64) -> Result<(QuadraticPolynomial, f64)> {
    let dim = u.grid().dim();
    let k = class_dimension(dim);
    if nodes.len() < k {
        return Err(Error::InsufficientNodes { needed: k, found: nodes.len() });
    }
    let des = design(u, nodes, origin, r);
    let mut coef = least_squares(&des.rows, &des.values)?;
    let resid = &des.values - &des.rows * &coef;
    let (lo, hi) = (resid.min(), resid.max());
    coef[0] += 0.5 * (lo + hi);
    let poly = from_scaled(dim, coef.as_slice(), origin, r);
    Ok((poly, 0.5 * (hi - lo)))
}

/// Exact best uniform approximation from the class, by linear programming:
/// minimize `s` subject to `|u_i - P(x_i)| <= s`.
pub fn fit_chebyshev(u: &GridFunction, nodes: &[usize], origin: &Point, r: f64) -> Result<(QuadraticPolynomial, f64)> {
    let dim = u.grid().dim();
    let k = class_dimension(dim);
    if nodes.len() < k {
        return Err(Error::InsufficientNodes { needed: k, found: nodes.len() });
    }
    let des = design(u, nodes, origin, r);
    // start from the least-squares fit so that the box around it is tight
    let ls = least_squares(&des.rows, &des.values)?;
    let resid = &des.values - &des.rows * &ls;
    let scale = resid.amax().max(1e-300);
    let vmax = des.values.amax().max(1.0);
    // variables: delta coefficients (relative to ls) and s
    let nv = k + 1;
    let mut lp = LinearProgram::new(nv);
    for i in 0..nodes.len() {
        let row: Vec<f64> = (0..k).map(|j| des.rows[(i, j)]).collect();
        // |resid_i - row.delta| <= s
        let mut c1: Vec<f64> = row.iter().map(|v| -v).collect();
        c1.push(-1.0);
        lp.add_constraint(c1, -resid[i]);
        let mut c2 = row;
        c2.push(-1.0);
        lp.add_constraint(c2, resid[i]);
    }
    let bound = 1e4 * (scale + 1e-6 * vmax);
    for j in 0..k {
        lp.set_bounds(j, -bound, bound);
    }
    lp.set_bounds(k, 0.0, 2.0 * scale + 1e-6 * vmax);
    let mut obj = vec![0.0; nv];
    obj[k] = 1.0;
    lp.set_objective(obj);
    let sol = lp.solve().solution().ok_or_else(|| Error::InvalidArgument("Chebyshev LP infeasible".into()))?;
    let coef: Vec<f64> = (0..k).map(|j| ls[j] + sol[j]).collect();
    let fitted = &des.rows * DVector::from_column_slice(&coef);
    let sup = (&des.values - fitted).amax();
    Ok((from_scaled(dim, &coef, origin, r), sup))
}

/// Sup residual of a polynomial on nodes.
pub fn sup_residual(u: &GridFunction, nodes: &[usize], p: &QuadraticPolynomial) -> f64 {
    let grid = u.grid();
    nodes
        .iter()
        .map(|&node| {
            let (n, s) = grid.split(node);
            let x = grid.spatial_coords(s);
            (u.value(node) - p.eval(&x[..grid.dim()], grid.time(n))).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ParabolicCylinder, SpaceTimeGrid};

    fn sample_poly() -> QuadraticPolynomial {
        let d = SymMatrix::from_rows(&[vec![2.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        QuadraticPolynomial::new(0.3, vec![1.0, -2.0], 0.7, d).unwrap()
    }

    #[test]
    fn recentering_preserves_values() {
        let p = sample_poly();
        let q = p.recentered(&Point::new(&[0.4, -0.3], -0.2).unwrap());
        for (x, t) in [([0.1, 0.2], -0.1), ([-0.7, 0.5], -0.9)] {
            assert!((p.eval(&x, t) - q.eval(&x, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn fits_recover_members() {
        let g = SpaceTimeGrid::covering(2, &[-1.0, -1.0], &[1.0, 1.0], 0.125, -1.0, 0.0625).unwrap();
        let p = sample_poly();
        let u = GridFunction::from_fn(g.clone(), |x, t| p.eval(x, t)).unwrap();
        let center = Point::new(&[0.25, 0.0], -0.25).unwrap();
        let cyl = ParabolicCylinder::new(center.clone(), 0.5).unwrap();
        let nodes = g.nodes_in(&cyl).unwrap();
        let (fit, sup) = fit_least_squares(&u, &nodes, &center, 0.5).unwrap();
        assert!(sup < 1e-12);
        let back = fit.recentered(&Point::origin(2));
        assert!((back.a - 0.3).abs() < 1e-12 && (back.c - 0.7).abs() < 1e-12);
        assert!((back.d.get(0, 1) + 0.5).abs() < 1e-10);
        let (_, sup) = fit_chebyshev(&u, &nodes, &center, 0.5).unwrap();
        assert!(sup < 1e-10);
    }

    #[test]
    fn chebyshev_beats_least_squares_on_a_cubic() {
        let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 1.0 / 32.0, -1.0, 1.0 / 64.0).unwrap();
        let u = GridFunction::from_fn(g.clone(), |x, t| x[0].powi(3) + x[0] * t).unwrap();
        let o = Point::origin(1);
        let nodes = g.nodes_in(&ParabolicCylinder::new(o.clone(), 0.5).unwrap()).unwrap();
        let (_, ls) = fit_least_squares(&u, &nodes, &o, 0.5).unwrap();
        let (_, ch) = fit_chebyshev(&u, &nodes, &o, 0.5).unwrap();
        assert!(ch <= ls + 1e-12);
        assert!(ch > 0.0);
    }
}
