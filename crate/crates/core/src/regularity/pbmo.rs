use crate::error::{Error, Result};
use crate::grid::{GridFunction, ParabolicCylinder, Point, Region};

/// Centers examined by [`pbmo_norm`] are a strided subset of at most this size.
pub const PBMO_MAX_CENTERS: usize = 256;

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, inf), got {p}")));
    }
    Ok(())
}

/// Node indices of `Q_r(center)` intersected with `region` (or the whole
/// grid when `region` is `None`).
fn cylinder_nodes(g: &GridFunction, center: &Point, radius: f64, region: Option<&dyn Region>) -> Result<Vec<usize>> {
    let grid = g.grid();
    let cyl = ParabolicCylinder::new(center.clone(), radius)?;
    let nodes = grid.nodes_in(&cyl)?;
    Ok(match region {
        None => nodes,
        Some(r) => nodes
            .into_iter()
            .filter(|&n| {
                let (lvl, s) = grid.split(n);
                r.contains_raw(&grid.spatial_coords(s)[..grid.dim()], grid.time(lvl))
            })
            .collect(),
    })
}

/// `(avg_{Q} |g - avg_Q g|^p)^(1/p)` over `Q = Q_r(center) ∩ region`; zero
/// when the intersection holds no node.
pub fn mean_oscillation(g: &GridFunction, p: f64, center: &Point, radius: f64, region: Option<&dyn Region>) -> Result<f64> {
    check_p(p)?;
    let nodes = cylinder_nodes(g, center, radius, region)?;
    if nodes.is_empty() {
        return Ok(0.0);
    }
    let n = nodes.len() as f64;
    let mean = nodes.iter().map(|&i| g.value(i)).sum::<f64>() / n;
    let avg = nodes.iter().map(|&i| (g.value(i) - mean).abs().powf(p)).sum::<f64>() / n;
    Ok(avg.powf(1.0 / p))
}

/// Sup of [`mean_oscillation`] over region nodes as centers and the listed radii.
pub fn pbmo_norm(g: &GridFunction, p: f64, region: &dyn Region, radii: &[f64]) -> Result<f64> {
    check_p(p)?;
    let grid = g.grid();
    let centers = grid.nodes_in(region)?;
    if centers.is_empty() {
        return Ok(0.0);
    }
    let stride = centers.len().div_ceil(PBMO_MAX_CENTERS);
    let mut best: f64 = 0.0;
    for &c in centers.iter().step_by(stride) {
        let center = grid.point(c);
        for &r in radii {
            best = best.max(mean_oscillation(g, p, &center, r, Some(region))?);
        }
    }
    Ok(best)
}

/// Largest average of `g` over `Q_r(point)` within the grid, over the radii.
pub fn parabolic_maximal(g: &GridFunction, point: &Point, radii: &[f64]) -> Result<f64> {
    if point.dim() != g.grid().dim() {
        return Err(Error::DimensionMismatch { expected: g.grid().dim(), got: point.dim() });
    }
    let mut best = f64::NEG_INFINITY;
    for &r in radii {
        let nodes = cylinder_nodes(g, point, r, None)?;
        if !nodes.is_empty() {
            best = best.max(nodes.iter().map(|&i| g.value(i)).sum::<f64>() / nodes.len() as f64);
        }
    }
    Ok(if best.is_finite() { best } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ParabolicCube, SpaceTimeGrid};

    /// Nodes at odd multiples of h/2, so that x = 0 is never a node.
    fn offset_grid(n: usize) -> SpaceTimeGrid {
        let h = 2.0 / n as f64;
        SpaceTimeGrid::new(1, &[-1.0 + h / 2.0], &[n], h, h, (1.0 / h) as usize + 1).unwrap()
    }

    #[test]
    fn constants_and_shifts() {
        let g = offset_grid(32);
        let k1 = ParabolicCube::unit(1).unwrap();
        let c = GridFunction::from_fn(g.clone(), |_, _| 5.0).unwrap();
        assert_eq!(pbmo_norm(&c, 2.0, &k1, &[0.25, 0.5]).unwrap(), 0.0);
        let f = GridFunction::from_fn(g, |x, t| (4.0 * x[0]).sin() * t).unwrap();
        let shifted = f.map(|v| v + 7.0).unwrap();
        let a = pbmo_norm(&f, 1.5, &k1, &[0.25, 0.5]).unwrap();
        let b = pbmo_norm(&shifted, 1.5, &k1, &[0.25, 0.5]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn step_function() {
        let g = offset_grid(64);
        let step = GridFunction::from_fn(g, |x, _| if x[0] > 0.0 { 1.0 } else { -1.0 }).unwrap();
        let at_origin = mean_oscillation(&step, 1.0, &Point::origin(1), 0.5, None).unwrap();
        assert!((at_origin - 1.0).abs() < 1e-12);
        let k1 = ParabolicCube::unit(1).unwrap();
        let sup = pbmo_norm(&step, 1.0, &k1, &[0.5]).unwrap();
        assert!(sup <= 1.0 + 1e-12 && sup > 0.99, "{sup}");
    }

    #[test]
    fn maximal_function_examples() {
        let g = offset_grid(256);
        let c = GridFunction::from_fn(g.clone(), |_, _| 3.0).unwrap();
        assert!((parabolic_maximal(&c, &Point::origin(1), &[0.25, 0.5]).unwrap() - 3.0).abs() < 1e-12);

        let small = ParabolicCylinder::new(Point::new(&[0.0], -0.5).unwrap(), 0.1).unwrap();
        let ind = GridFunction::from_fn(g.clone(), |x, t| if small.contains_raw(x, t) { 1.0 } else { 0.0 }).unwrap();
        let inside = Point::new(&[0.0], -0.5).unwrap();
        assert!((parabolic_maximal(&ind, &inside, &[0.05, 0.5]).unwrap() - 1.0).abs() < 1e-12);

        // average of |x| over Q_r(0) is r / 2 (in every time slice)
        let abs = GridFunction::from_fn(g, |x, _| x[0].abs()).unwrap();
        for r in [0.25, 0.5] {
            let got = parabolic_maximal(&abs, &Point::origin(1), &[r]).unwrap();
            assert!((got - r / 2.0).abs() < 0.01, "{r}: {got}");
        }
        let got = parabolic_maximal(&abs, &Point::origin(1), &[0.25, 0.5, 1.0]).unwrap();
        assert!((got - 0.5).abs() < 0.01, "{got}");
    }
}
