//! Finite-difference derivatives on a single time slice.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeGrid, MAX_DIM};
use crate::operators::SymMatrix;

/// Central second differences of one time slice at spatial node `s`, which
/// must have a full stencil. Off-diagonal entries use the four-point cross
/// formula.
#[inline]
pub fn slice_hessian(grid: &SpaceTimeGrid, slice: &[f64], s: usize) -> SymMatrix {
    let d = grid.dim();
    let h2 = grid.h() * grid.h();
    let u0 = slice[s];
    let mut m = SymMatrix::zeros(d);
    for i in 0..d {
        let si = grid.stride(i);
        m.set(i, i, (slice[s + si] - 2.0 * u0 + slice[s - si]) / h2);
        for j in i + 1..d {
            let sj = grid.stride(j);
            let v = (slice[s + si + sj] - slice[s + si - sj] - slice[s - si + sj] + slice[s - si - sj]) / (4.0 * h2);
            m.set(i, j, v);
        }
    }
    m
}

/// Central first differences of one time slice at spatial node `s`.
#[inline]
pub fn slice_gradient(grid: &SpaceTimeGrid, slice: &[f64], s: usize) -> [f64; MAX_DIM] {
    let mut g = [0.0; MAX_DIM];
    for (i, gi) in g.iter_mut().enumerate().take(grid.dim()) {
        let si = grid.stride(i);
        *gi = (slice[s + si] - slice[s - si]) / (2.0 * grid.h());
    }
    g
}

/// `D^2_h u` at a grid node.
pub fn discrete_hessian(u: &GridFunction, node: usize) -> Result<SymMatrix> {
    let grid = u.grid();
    let (n, s) = grid.split(node);
    if node >= grid.len() || !grid.has_stencil(s, 1) {
        return Err(Error::MissingStencil(node));
    }
    Ok(slice_hessian(grid, u.slice(n), s))
}

/// Central `D_h u` at a grid node.
pub fn discrete_gradient(u: &GridFunction, node: usize) -> Result<Vec<f64>> {
    let grid = u.grid();
    let (n, s) = grid.split(node);
    if node >= grid.len() || !grid.has_stencil(s, 1) {
        return Err(Error::MissingStencil(node));
    }
    Ok(slice_gradient(grid, u.slice(n), s)[..grid.dim()].to_vec())
}

/// Forward difference `(u^{n+1} - u^n) / dt`, backward at the final level.
pub fn time_derivative(u: &GridFunction, node: usize) -> Result<f64> {
    let grid = u.grid();
    let (n, s) = grid.split(node);
    if grid.n_time() < 2 {
        return Err(Error::MissingStencil(node));
    }
    let (a, b) = if n + 1 < grid.n_time() { (n, n + 1) } else { (n - 1, n) };
    Ok((u.at(b, s) - u.at(a, s)) / grid.dt())
}
