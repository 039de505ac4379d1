use serde::{Deserialize, Serialize};

use super::constrained::{constrained_fit_on, cylinder_within};
use super::fit::{decay_exponent_fit, DecayFit};
use super::holder::check_alpha;
use super::poly::{class_dimension, fit_chebyshev, fit_least_squares, sup_residual, QuadraticPolynomial};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, ParabolicCylinder, Point};
use crate::operators::OperatorSpec;

/// How the best polynomial on each cylinder is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Least squares followed by a midrange shift of the constant term.
    #[default]
    LeastSquares,
    /// Exact best uniform approximation (linear program).
    Chebyshev,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusFit {
    pub radius: f64,
    pub nodes: usize,
    pub sup_residual: f64,
    /// `sup_residual / radius^(2 + alpha)`.
    pub normalized: f64,
    pub poly: QuadraticPolynomial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampanatoReport {
    pub alpha: f64,
    pub value: f64,
    pub fits: Vec<RadiusFit>,
}

/// `max_rho inf_P ||u - P||_{L^inf(Q_rho(center))} / rho^(2 + alpha)` over the
/// listed radii.
pub fn campanato_seminorm(u: &GridFunction, alpha: f64, center: &Point, radii: &[f64], mode: FitMode) -> Result<CampanatoReport> {
    check_alpha(alpha)?;
    let grid = u.grid();
    if center.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: center.dim() });
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii".into()));
    }
    let mut fits = Vec::with_capacity(radii.len());
    for &r in radii {
        let cyl = ParabolicCylinder::new(center.clone(), r)?;
        cylinder_within(grid, &cyl)?;
        let nodes = grid.nodes_in(&cyl)?;
        let needed = class_dimension(grid.dim());
        if nodes.len() < needed {
            return Err(Error::InsufficientNodes { needed, found: nodes.len() });
        }
        let (poly, sup) = match mode {
            FitMode::LeastSquares => fit_least_squares(u, &nodes, center, r)?,
            FitMode::Chebyshev => fit_chebyshev(u, &nodes, center, r)?,
        };
        fits.push(RadiusFit { radius: r, nodes: nodes.len(), sup_residual: sup, normalized: sup / r.powf(2.0 + alpha), poly });
    }
    let value = fits.iter().map(|f| f.normalized).fold(0.0, f64::max);
    Ok(CampanatoReport { alpha, value, fits })
}

/// `radius * ratio^k` for `k = 0..count`.
pub fn geometric_radii(radius: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| radius * ratio.powi(k as i32)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyStep {
    pub k: usize,
    pub radius: f64,
    pub poly: QuadraticPolynomial,
    pub sup_error: f64,
}

/// Differences between consecutive polynomials of the sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientIncrement {
    pub k: usize,
    pub da: f64,
    pub db: f64,
    pub dc: f64,
    /// Operator norm of `D_k - D_{k-1}`.
    pub dd: f64,
    /// `|dA| + rho^(k-1) (|dB| + |dC| + |dD|)`.
    pub weighted: f64,
    /// `|dA| + rho^(k-1) |dB| + rho^(2(k-1)) (|dC| + |dD|)`.
    pub weighted_quadratic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolySequenceReport {
    pub rho: f64,
    pub alpha: f64,
    pub steps: Vec<PolyStep>,
    pub increments: Vec<CoefficientIncrement>,
    /// Regression of `e_k` against `rho^k`; absent when fewer than three
    /// errors are above the floor.
    pub fit: Option<DecayFit>,
}

/// Constrained fits on `Q_{rho^k}(center)` for `k = 1..=k_max`.
pub fn dyadic_polynomial_sequence(
    u: &GridFunction,
    op: &OperatorSpec,
    rho: f64,
    alpha: f64,
    k_max: usize,
    center: &Point,
) -> Result<PolySequenceReport> {
    check_alpha(alpha)?;
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1/2], got {rho}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be positive".into()));
    }
    let grid = u.grid();
    let deepest = ParabolicCylinder::new(center.clone(), rho.powi(k_max as i32))?;
    let needed = class_dimension(grid.dim());
    let found = grid.nodes_in(&deepest)?.len();
    if found < needed {
        return Err(Error::InsufficientNodes { needed, found });
    }
    let mut steps: Vec<PolyStep> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let radius = rho.powi(k as i32);
        let cyl = ParabolicCylinder::new(center.clone(), radius)?;
        cylinder_within(grid, &cyl)?;
        let nodes = grid.nodes_in(&cyl)?;
        let poly = constrained_fit_on(u, &nodes, &cyl, op)?;
        let sup_error = sup_residual(u, &nodes, &poly);
        steps.push(PolyStep { k, radius, poly, sup_error });
    }
    let increments = steps
        .windows(2)
        .map(|w| {
            let (p, q) = (&w[0].poly, &w[1].poly);
            let k = w[1].k;
            let da = (q.a - p.a).abs();
            let db = q.b.iter().zip(&p.b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let dc = (q.c - p.c).abs();
            let dd = (q.d - p.d).operator_norm();
            let w1 = rho.powi(k as i32 - 1);
            CoefficientIncrement {
                k,
                da,
                db,
                dc,
                dd,
                weighted: da + w1 * (db + dc + dd),
                weighted_quadratic: da + w1 * db + w1 * w1 * (dc + dd),
            }
        })
        .collect();
    let scales: Vec<f64> = steps.iter().map(|s| s.radius).collect();
    let errors: Vec<f64> = steps.iter().map(|s| s.sup_error).collect();
    let fit = match decay_exponent_fit(&scales, &errors) {
        Ok(f) => Some(f),
        Err(Error::TooFewScales(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(PolySequenceReport { rho, alpha, steps, increments, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceTimeGrid;
    use crate::operators::SymMatrix;

    fn grid1(h: f64, dt: f64) -> SpaceTimeGrid {
        SpaceTimeGrid::covering(1, &[-1.0], &[1.0], h, -1.0, dt).unwrap()
    }

    #[test]
    fn vanishes_on_the_class() {
        let g = SpaceTimeGrid::covering(2, &[-1.0, -1.0], &[1.0, 1.0], 1.0 / 16.0, -1.0, 1.0 / 32.0).unwrap();
        let d = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, -3.0]]).unwrap();
        let p = QuadraticPolynomial::new(0.5, vec![-1.0, 4.0], 7.0, d).unwrap();
        let u = GridFunction::from_fn(g, |x, t| p.eval(x, t)).unwrap();
        let radii = geometric_radii(1.0, 0.5, 4);
        for mode in [FitMode::LeastSquares, FitMode::Chebyshev] {
            let rep = campanato_seminorm(&u, 0.5, &Point::origin(2), &radii, mode).unwrap();
            assert!(rep.value <= 1e-10, "{mode:?}: {}", rep.value);
        }
    }

    #[test]
    fn cubic_matches_coefficient_grid_search() {
        let g = grid1(1.0 / 32.0, 1.0 / 64.0);
        let u = GridFunction::from_fn(g.clone(), |x, _| x[0].powi(3)).unwrap();
        let o = Point::origin(1);
        let rep = campanato_seminorm(&u, 0.5, &o, &[0.5], FitMode::Chebyshev).unwrap();
        // time-independent data: search over (A, B, D) only
        let xs: Vec<f64> = (0..=32).map(|i| -0.5 + i as f64 / 32.0).filter(|x: &f64| x.abs() < 0.5).collect();
        let mut brute = f64::INFINITY;
        let n = 60;
        for ia in 0..=n {
            for ib in 0..=n {
                for id in 0..=n {
                    let a = -0.05 + 0.1 * ia as f64 / n as f64;
                    let b = 0.1 + 0.3 * ib as f64 / n as f64;
                    let d = -0.2 + 0.4 * id as f64 / n as f64;
                    let e = xs.iter().map(|x| (x.powi(3) - a - b * x - 0.5 * d * x * x).abs()).fold(0.0, f64::max);
                    brute = brute.min(e);
                }
            }
        }
        let got = rep.fits[0].sup_residual;
        assert!(got <= brute + 1e-12, "{got} vs {brute}");
        assert!(got >= brute - 2e-3, "{got} vs {brute}");
    }

    #[test]
    fn homogeneous_of_degree_one() {
        let g = grid1(1.0 / 32.0, 1.0 / 128.0);
        let u = GridFunction::from_fn(g, |x, t| (2.0 * x[0]).sin() * (1.0 + t)).unwrap();
        let v = u.map(|x| 2.0 * x).unwrap();
        let radii = geometric_radii(0.5, 0.5, 3);
        let a = campanato_seminorm(&u, 0.5, &Point::origin(1), &radii, FitMode::LeastSquares).unwrap().value;
        let b = campanato_seminorm(&v, 0.5, &Point::origin(1), &radii, FitMode::LeastSquares).unwrap().value;
        assert!((b - 2.0 * a).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn caloric_member_sequence() {
        let g = grid1(1.0 / 64.0, 1.0 / 256.0);
        let u = GridFunction::from_fn(g, |x, t| 0.5 * 3.0 * x[0] * x[0] + 3.0 * t - x[0] + 2.0).unwrap();
        let op = OperatorSpec::scaled_trace(1, 1.0).unwrap();
        let rep = dyadic_polynomial_sequence(&u, &op, 0.5, 0.5, 4, &Point::origin(1)).unwrap();
        assert!(rep.steps.iter().all(|s| s.sup_error < 1e-10));
        assert!(rep.increments.iter().all(|i| i.weighted < 1e-9));
        assert!(rep.fit.is_none());
    }

    #[test]
    fn heat_solution_decays_at_least_cubically() {
        let g = grid1(1.0 / 128.0, 1.0 / 4096.0);
        let pi = std::f64::consts::PI;
        let u = GridFunction::from_fn(g, |x, t| (-pi * pi * t).exp() * (pi * x[0]).sin()).unwrap();
        let op = OperatorSpec::scaled_trace(1, 1.0).unwrap();
        let rep = dyadic_polynomial_sequence(&u, &op, 0.5, 0.5, 4, &Point::origin(1)).unwrap();
        let fit = rep.fit.unwrap();
        assert!(fit.exponent >= 3.0 - 0.1, "{fit:?}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let u = GridFunction::zeros(grid1(0.25, 0.25));
        let op = OperatorSpec::scaled_trace(1, 1.0).unwrap();
        assert!(dyadic_polynomial_sequence(&u, &op, 0.75, 0.5, 2, &Point::origin(1)).is_err());
        assert!(matches!(
            dyadic_polynomial_sequence(&u, &op, 0.5, 0.5, 6, &Point::origin(1)),
            Err(Error::InsufficientNodes { .. })
        ));
    }
}
