//! Residual and comparison diagnostics for discrete solutions.

use serde::Serialize;

use super::hessian::slice_hessian;
use super::scheme::{ProblemSpec, SolveResult};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{GridFunction, ParabolicCylinder, Point, Region, SpaceTimeGrid};
use crate::operators::{pucci_minus, pucci_plus, EllipticityPair};

/// Positive parts of the two discrete inequalities
/// `u_t - M+(D^2 u) - |f|_inf <= 0 <= u_t - M-(D^2 u) + |f|_inf`.
#[derive(Debug, Clone, Serialize)]
pub struct ClassResidualReport {
    pub lower_violation: f64,
    pub upper_violation: f64,
    pub f_sup: f64,
    pub nodes: usize,
    #[serde(skip)]
    max_plus_excess: f64,
    #[serde(skip)]
    min_minus_excess: f64,
}

impl Default for ClassResidualReport {
    fn default() -> Self {
        Self {
            lower_violation: 0.0,
            upper_violation: 0.0,
            f_sup: 0.0,
            nodes: 0,
            max_plus_excess: f64::NEG_INFINITY,
            min_minus_excess: f64::INFINITY,
        }
    }
}

impl ClassResidualReport {
    /// Both violations vanish.
    pub fn is_member(&self) -> bool {
        self.lower_violation == 0.0 && self.upper_violation == 0.0
    }

    pub(crate) fn accumulate_slice(
        &mut self,
        grid: &SpaceTimeGrid,
        interior: &[bool],
        current: &[f64],
        next: &[f64],
        pair: EllipticityPair,
    ) {
        for s in 0..grid.n_space() {
            if !interior[s] || !grid.has_stencil(s, 1) {
                continue;
            }
            let ut = (next[s] - current[s]) / grid.dt();
            let m = slice_hessian(grid, current, s);
            self.max_plus_excess = self.max_plus_excess.max(ut - pucci_plus(&m, pair));
            self.min_minus_excess = self.min_minus_excess.min(ut - pucci_minus(&m, pair));
            self.nodes += 1;
        }
    }

    pub(crate) fn finish(&mut self, f_sup: f64) {
        self.f_sup = f_sup;
        if self.nodes == 0 {
            return;
        }
        self.lower_violation = (self.max_plus_excess - f_sup).max(0.0);
        self.upper_violation = (-(self.min_minus_excess + f_sup)).max(0.0);
    }
}

/// Discrete class-membership residual with forward time differences and
/// central Hessians, over every node with a spatial stencil and a successor
/// level. `f_sup` is `|f|_{L^inf}`.
pub fn class_residual(u: &GridFunction, pair: EllipticityPair, f_sup: f64) -> Result<ClassResidualReport> {
    let grid = u.grid();
    let interior: Vec<bool> = (0..grid.n_space()).map(|s| grid.has_stencil(s, 1)).collect();
    let mut report = ClassResidualReport::default();
    for n in 0..grid.n_time().saturating_sub(1) {
        report.accumulate_slice(grid, &interior, u.slice(n), u.slice(n + 1), pair);
    }
    report.finish(f_sup.abs());
    Ok(report)
}

/// Sup of `|f|` over the nodes of a grid.
pub fn sup_on_grid(f: &ScalarField, grid: &SpaceTimeGrid) -> f64 {
    (0..grid.len())
        .map(|n| {
            let p = grid.point(n);
            f.eval(&p.x, p.t).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleReport {
    pub passed: bool,
    /// True when the source vanishes and the comparison was asserted.
    pub asserted: bool,
    pub interior_sup: f64,
    pub boundary_sup: f64,
    /// `max(0, interior_sup - boundary_sup)`.
    pub excess: f64,
    /// `|f|_{L^{d+1}}` on the stored grid (counting rule).
    pub source_norm: f64,
}

/// Tolerance of the discrete maximum principle.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-12;

/// Compares the sup over all stored nodes with the sup over the parabolic
/// boundary (first stored level plus nodes carrying boundary data). Asserted
/// only for a vanishing source; otherwise the excess is reported next to
/// `|f|_{L^{d+1}}`.
pub fn maximum_principle_check(result: &SolveResult, spec: &ProblemSpec) -> MaxPrincipleReport {
    let u = &result.u;
    let grid = u.grid();
    let mut interior_sup = f64::NEG_INFINITY;
    let mut boundary_sup = f64::NEG_INFINITY;
    for node in 0..grid.len() {
        let (n, s) = grid.split(node);
        let v = u.value(node);
        if n == 0 || !result.interior[s] {
            boundary_sup = boundary_sup.max(v);
        } else {
            interior_sup = interior_sup.max(v);
        }
    }
    let shift = spec.source_shift();
    let q = (grid.dim() + 1) as f64;
    let mut acc = 0.0;
    let mut vanishing = true;
    for node in 0..grid.len() {
        let p = grid.point(node);
        let v = (spec.source.eval(&p.x, p.t) - shift).abs();
        if v != 0.0 {
            vanishing = false;
        }
        acc += v.powf(q);
    }
    let source_norm = (acc * grid.cell_volume()).powf(1.0 / q);
    let excess = (interior_sup - boundary_sup).max(0.0);
    MaxPrincipleReport {
        passed: !vanishing || excess <= MAX_PRINCIPLE_TOL,
        asserted: vanishing,
        interior_sup,
        boundary_sup,
        excess,
        source_norm,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaloricReport {
    pub k: usize,
    pub beta: Vec<usize>,
    /// `(R, |d_t^k D^beta h(0,0)| R^{2k+|beta|} / |h|_{L^inf(Q_R)})`.
    pub ratios: Vec<(f64, f64)>,
    /// Largest over smallest ratio.
    pub spread: f64,
    pub passed: bool,
    /// Max heat residual `|h_t - Laplacian h|` on the largest cylinder.
    pub residual: f64,
}

/// Largest admissible ratio spread across the radius family.
pub const CALORIC_SPREAD_LIMIT: f64 = 100.0;

fn spatial_derivative(grid: &SpaceTimeGrid, slice: &[f64], s: usize, beta: &[usize]) -> f64 {
    let h = grid.h();
    let axes: Vec<usize> = beta.iter().enumerate().flat_map(|(a, &k)| std::iter::repeat_n(a, k)).collect();
    match axes.as_slice() {
        [] => slice[s],
        [a] => {
            let st = grid.stride(*a);
            (slice[s + st] - slice[s - st]) / (2.0 * h)
        }
        [a, b] if a == b => {
            let st = grid.stride(*a);
            (slice[s + st] - 2.0 * slice[s] + slice[s - st]) / (h * h)
        }
        [a, b] => {
            let (sa, sb) = (grid.stride(*a), grid.stride(*b));
            (slice[s + sa + sb] - slice[s + sa - sb] - slice[s - sa + sb] + slice[s - sa - sb]) / (4.0 * h * h)
        }
        _ => unreachable!("order checked by caller"),
    }
}

/// Interior derivative estimate for a caloric function: reports the
/// scale-invariant ratio for each radius and checks that the ratios stay
/// within a factor of 100 of each other. Supports `k <= 1`, `|beta| <= 2`.
pub fn caloric_derivative_check(
    h_fun: &GridFunction,
    radii: &[f64],
    k: usize,
    beta: &[usize],
    tolerance: f64,
) -> Result<CaloricReport> {
    let grid = h_fun.grid();
    let d = grid.dim();
    if beta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: beta.len() });
    }
    let order: usize = beta.iter().sum();
    if k > 1 || order > 2 {
        return Err(Error::InvalidArgument("caloric check supports k <= 1 and |beta| <= 2".into()));
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no radii given".into()));
    }
    let origin = grid.locate(&Point::origin(d)).ok_or(Error::NearBoundary)?;
    let (last, s0) = grid.split(origin);
    if !grid.has_stencil(s0, 1) || (k == 1 && last == 0) {
        return Err(Error::NearBoundary);
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let big = ParabolicCylinder::centered(d, r_max)?;
    let bb = big.bounding_box();
    for a in 0..d {
        if bb.lower[a] < grid.lower()[a] - 1e-12 || bb.upper[a] > grid.upper(a) + 1e-12 {
            return Err(Error::NearBoundary);
        }
    }
    if bb.t_lower < grid.t_start() - 1e-12 {
        return Err(Error::NearBoundary);
    }

    let mut residual: f64 = 0.0;
    for node in grid.nodes_in(&big)? {
        let (n, s) = grid.split(node);
        if n + 1 >= grid.n_time() || !grid.has_stencil(s, 1) {
            continue;
        }
        let ut = (h_fun.at(n + 1, s) - h_fun.at(n, s)) / grid.dt();
        let lap = slice_hessian(grid, h_fun.slice(n), s).trace();
        residual = residual.max((ut - lap).abs());
    }
    if residual > tolerance {
        return Err(Error::NonCaloric { residual, tolerance });
    }

    let mut deriv = spatial_derivative(grid, h_fun.slice(last), s0, beta);
    if k == 1 {
        deriv = (deriv - spatial_derivative(grid, h_fun.slice(last - 1), s0, beta)) / grid.dt();
    }
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let cyl = ParabolicCylinder::centered(d, r)?;
        let nodes = grid.nodes_in(&cyl)?;
        if nodes.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let sup = nodes.iter().map(|&n| h_fun.value(n).abs()).fold(0.0, f64::max);
        if sup == 0.0 {
            return Err(Error::InvalidArgument(format!("h vanishes on Q_{r}")));
        }
        ratios.push((r, deriv.abs() * r.powi((2 * k + order) as i32) / sup));
    }
    let hi = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let lo = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else if hi == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(CaloricReport { k, beta: beta.to_vec(), ratios, spread, passed: spread <= CALORIC_SPREAD_LIMIT, residual })
}
