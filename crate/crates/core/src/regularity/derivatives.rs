//! Discrete derivative fields evaluated on node lists.

use crate::grid::{GridFunction, SpaceTimeGrid};
use crate::solver::{slice_gradient, slice_hessian};

pub type DerivedField = Vec<f64>;

/// Forward `u_t`, backward at the final level.
pub fn time_derivative_field(u: &GridFunction, nodes: &[usize]) -> DerivedField {
    let grid = u.grid();
    nodes
        .iter()
        .map(|&node| {
            let (n, s) = grid.split(node);
            if grid.n_time() < 2 {
                0.0
            } else if n + 1 < grid.n_time() {
                (u.at(n + 1, s) - u.at(n, s)) / grid.dt()
            } else {
                (u.at(n, s) - u.at(n - 1, s)) / grid.dt()
            }
        })
        .collect()
}

/// One field per upper-triangular Hessian entry `(i, j), i <= j`; nodes must
/// carry the central stencil.
pub fn hessian_component_fields(u: &GridFunction, nodes: &[usize]) -> Vec<DerivedField> {
    let grid = u.grid();
    let d = grid.dim();
    let hs: Vec<_> = nodes
        .iter()
        .map(|&node| {
            let (n, s) = grid.split(node);
            slice_hessian(grid, u.slice(n), s)
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            out.push(hs.iter().map(|m| m.get(i, j)).collect());
        }
    }
    out
}

/// Second-order accurate first derivative along `axis`: central inside,
/// one-sided three-point at the edges of the grid.
pub(crate) fn first_derivative(grid: &SpaceTimeGrid, slice: &[f64], s: usize, axis: usize) -> f64 {
    let h = grid.h();
    match (grid.shift(s, axis, -1), grid.shift(s, axis, 1)) {
        (Some(a), Some(b)) => (slice[b] - slice[a]) / (2.0 * h),
        (None, Some(b)) => {
            let c = grid.shift(s, axis, 2).unwrap_or(b);
            (-3.0 * slice[s] + 4.0 * slice[b] - slice[c]) / (2.0 * h)
        }
        (Some(a), None) => {
            let c = grid.shift(s, axis, -2).unwrap_or(a);
            (3.0 * slice[s] - 4.0 * slice[a] + slice[c]) / (2.0 * h)
        }
        (None, None) => 0.0,
    }
}

/// Second-order accurate `u_{aa}`: central inside, four-point one-sided at
/// the edges (needs four nodes along the axis).
pub(crate) fn second_derivative(grid: &SpaceTimeGrid, slice: &[f64], s: usize, axis: usize) -> f64 {
    let h2 = grid.h() * grid.h();
    match (grid.shift(s, axis, -1), grid.shift(s, axis, 1)) {
        (Some(a), Some(b)) => (slice[b] - 2.0 * slice[s] + slice[a]) / h2,
        (None, Some(_)) | (Some(_), None) => {
            let dir = if grid.shift(s, axis, 1).is_some() { 1 } else { -1 };
            let at = |k: isize| grid.shift(s, axis, k * dir).map(|i| slice[i]);
            match (at(1), at(2), at(3)) {
                (Some(u1), Some(u2), Some(u3)) => (2.0 * slice[s] - 5.0 * u1 + 4.0 * u2 - u3) / h2,
                (Some(u1), Some(u2), None) => (slice[s] - 2.0 * u1 + u2) / h2,
                _ => 0.0,
            }
        }
        (None, None) => 0.0,
    }
}

/// Mixed derivative `u_{ab}` built from first derivatives of first
/// derivatives, so that it stays second-order accurate at the edges.
pub(crate) fn mixed_derivative(grid: &SpaceTimeGrid, slice: &[f64], s: usize, a: usize, b: usize) -> f64 {
    if grid.has_stencil(s, 1) {
        return slice_hessian(grid, slice, s).get(a, b);
    }
    let h = grid.h();
    let da = |node: usize| first_derivative(grid, slice, node, a);
    match (grid.shift(s, b, -1), grid.shift(s, b, 1)) {
        (Some(m), Some(p)) => (da(p) - da(m)) / (2.0 * h),
        (None, Some(p)) => {
            let q = grid.shift(s, b, 2).unwrap_or(p);
            (-3.0 * da(s) + 4.0 * da(p) - da(q)) / (2.0 * h)
        }
        (Some(m), None) => {
            let q = grid.shift(s, b, -2).unwrap_or(m);
            (3.0 * da(s) - 4.0 * da(m) + da(q)) / (2.0 * h)
        }
        (None, None) => 0.0,
    }
}

/// Central gradient where available.
pub(crate) fn gradient(grid: &SpaceTimeGrid, slice: &[f64], s: usize) -> Vec<f64> {
    if grid.has_stencil(s, 1) {
        return slice_gradient(grid, slice, s)[..grid.dim()].to_vec();
    }
    (0..grid.dim()).map(|a| first_derivative(grid, slice, s, a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_stencils_are_exact_on_cubics() {
        let g = SpaceTimeGrid::covering(2, &[-1.0, -1.0], &[1.0, 1.0], 0.25, 0.0, 1.0).unwrap();
        let f = |x: &[f64]| x[0].powi(2) * x[1] + 0.5 * x[1].powi(2) - x[0];
        let u = GridFunction::from_fn(g.clone(), |x, _| f(x)).unwrap();
        for s in 0..g.n_space() {
            let x = g.spatial_coords(s);
            let (x0, x1) = (x[0], x[1]);
            let gr = gradient(&g, u.slice(0), s);
            assert!((gr[0] - (2.0 * x0 * x1 - 1.0)).abs() < 1e-12);
            assert!((gr[1] - (x0 * x0 + x1)).abs() < 1e-12);
            assert!((second_derivative(&g, u.slice(0), s, 0) - 2.0 * x1).abs() < 1e-11);
            assert!((second_derivative(&g, u.slice(0), s, 1) - 1.0).abs() < 1e-11);
            assert!((mixed_derivative(&g, u.slice(0), s, 0, 1) - 2.0 * x0).abs() < 1e-11);
        }
    }
}
