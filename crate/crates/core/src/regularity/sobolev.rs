use super::derivatives::{gradient, mixed_derivative, second_derivative};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Region, SpaceTimeGrid, MAX_DIM};

/// Quadrature weights of the region nodes: cell volume, halved along every
/// axis (time included) in which the node has no region neighbour on one side.
pub(crate) fn trapezoid_weights(grid: &SpaceTimeGrid, nodes: &[usize]) -> Vec<f64> {
    let mut member = vec![false; grid.len()];
    for &n in nodes {
        member[n] = true;
    }
    let cell = grid.cell_volume();
    nodes
        .iter()
        .map(|&node| {
            let (lvl, s) = grid.split(node);
            let mut w = cell;
            for a in 0..grid.dim() {
                let lo = grid.shift(s, a, -1).is_some_and(|sn| member[grid.node(lvl, sn)]);
                let hi = grid.shift(s, a, 1).is_some_and(|sn| member[grid.node(lvl, sn)]);
                if !(lo && hi) {
                    w *= 0.5;
                }
            }
            let lo = lvl > 0 && member[grid.node(lvl - 1, s)];
            let hi = lvl + 1 < grid.n_time() && member[grid.node(lvl + 1, s)];
            if !(lo && hi) {
                w *= 0.5;
            }
            w
        })
        .collect()
}

/// Fails unless the region spans at least three nodes along every spatial
/// axis and two time levels.
fn check_thickness(grid: &SpaceTimeGrid, nodes: &[usize]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut lo = [usize::MAX; MAX_DIM + 1];
    let mut hi = [0usize; MAX_DIM + 1];
    let d = grid.dim();
    for &node in nodes {
        let (lvl, s) = grid.split(node);
        let m = grid.multi_index(s);
        for a in 0..d {
            lo[a] = lo[a].min(m[a]);
            hi[a] = hi[a].max(m[a]);
        }
        lo[d] = lo[d].min(lvl);
        hi[d] = hi[d].max(lvl);
    }
    for a in 0..d {
        if hi[a] - lo[a] < 2 {
            return Err(Error::InsufficientNodes { needed: 3, found: hi[a] - lo[a] + 1 });
        }
    }
    if hi[d] == lo[d] {
        return Err(Error::InsufficientNodes { needed: 2, found: 1 });
    }
    Ok(())
}

/// `(||u||^p + ||u_t||^p + ||Du||^p + ||D^2 u||^p)^(1/p)` with trapezoid
/// quadrature over the region nodes; `|Du|` is Euclidean and `|D^2 u|`
/// Frobenius per node.
pub fn sobolev_norm(u: &GridFunction, p: f64, region: &dyn Region) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf), got {p}")));
    }
    let grid = u.grid();
    let nodes = grid.nodes_in(region)?;
    check_thickness(grid, &nodes)?;
    let weights = trapezoid_weights(grid, &nodes);
    let d = grid.dim();
    let mut sums = [0.0f64; 4];
    for (&node, &w) in nodes.iter().zip(&weights) {
        let (lvl, s) = grid.split(node);
        let slice = u.slice(lvl);
        let ut = if lvl + 1 < grid.n_time() {
            (u.at(lvl + 1, s) - slice[s]) / grid.dt()
        } else {
            (slice[s] - u.at(lvl - 1, s)) / grid.dt()
        };
        let du = gradient(grid, slice, s).iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut frob = 0.0;
        for a in 0..d {
            frob += second_derivative(grid, slice, s, a).powi(2);
            for b in a + 1..d {
                frob += 2.0 * mixed_derivative(grid, slice, s, a, b).powi(2);
            }
        }
        let vals = [slice[s].abs(), ut.abs(), du, frob.sqrt()];
        for (acc, v) in sums.iter_mut().zip(vals) {
            *acc += w * v.powf(p);
        }
    }
    Ok(sums.iter().sum::<f64>().powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ParabolicCube;

    fn grid(h: f64) -> SpaceTimeGrid {
        SpaceTimeGrid::covering(1, &[-1.0], &[1.0], h, -1.0, h).unwrap()
    }

    #[test]
    fn zero_and_scaling() {
        let k1 = ParabolicCube::unit(1).unwrap();
        assert_eq!(sobolev_norm(&GridFunction::zeros(grid(0.125)), 2.0, &k1).unwrap(), 0.0);
        let u = GridFunction::from_fn(grid(0.125), |x, t| (x[0] + t).sin() + x[0] * x[0]).unwrap();
        let v = u.map(|x| -3.0 * x).unwrap();
        let (a, b) = (sobolev_norm(&u, 1.5, &k1).unwrap(), sobolev_norm(&v, 1.5, &k1).unwrap());
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn linear_function_integral() {
        let k1 = ParabolicCube::unit(1).unwrap();
        let exact = (2.0f64 / 3.0 + 2.0).sqrt();
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let u = GridFunction::from_fn(grid(h), |x, _| x[0]).unwrap();
            errs.push((sobolev_norm(&u, 2.0, &k1).unwrap() - exact).abs());
        }
        assert!(errs[1] < 1e-3, "{errs:?}");
        // trapezoid error is O(h^2)
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn thin_region() {
        let g = grid(0.125);
        let u = GridFunction::zeros(g);
        let thin = ParabolicCube::new(1, 0.1).unwrap();
        assert!(matches!(sobolev_norm(&u, 2.0, &thin), Err(Error::InsufficientNodes { .. })));
    }
}
