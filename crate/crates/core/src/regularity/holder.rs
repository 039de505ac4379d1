use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::derivatives::{hessian_component_fields, time_derivative_field, DerivedField};
use crate::error::{Error, Result};
use crate::grid::{raw_parabolic_distance, GridFunction, Region, SpaceTimeGrid, MAX_DIM};

/// Seed of the stratified pair sampler; fixed so that estimates are reproducible.
pub const PAIR_SAMPLER_SEED: u64 = 0x401d_e75e;

/// Pair budget used by estimators that do not take one explicitly.
pub const DEFAULT_PAIR_BUDGET: usize = 2_000_000;

/// Sup of `|u(p) - u(q)| / dist(p, q)^alpha` over node pairs of `region`.
///
/// All pairs are enumerated when there are at most `pair_budget` of them;
/// otherwise a deterministic sample stratified by dyadic distance scale is
/// used, giving a lower bound.
pub fn holder_seminorm(u: &GridFunction, alpha: f64, region: &dyn Region, pair_budget: usize) -> Result<f64> {
    holder_seminorm_seeded(u, alpha, region, pair_budget, PAIR_SAMPLER_SEED)
}

/// [`holder_seminorm`] with an explicit sampler seed.
pub fn holder_seminorm_seeded(u: &GridFunction, alpha: f64, region: &dyn Region, pair_budget: usize, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    let nodes = u.grid().nodes_in(region)?;
    if nodes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let values: Vec<f64> = nodes.iter().map(|&n| u.value(n)).collect();
    Ok(holder_on_nodes(u.grid(), &nodes, &values, alpha, pair_budget, seed))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Hölder quotient sup over a node list with attached values.
pub(crate) fn holder_on_nodes(grid: &SpaceTimeGrid, nodes: &[usize], values: &[f64], alpha: f64, budget: usize, seed: u64) -> f64 {
    let n = nodes.len();
    if n < 2 {
        return 0.0;
    }
    let d = grid.dim();
    let points: Vec<([f64; MAX_DIM], f64)> = nodes
        .iter()
        .map(|&node| {
            let (lvl, s) = grid.split(node);
            (grid.spatial_coords(s), grid.time(lvl))
        })
        .collect();
    let quotient = |i: usize, j: usize| {
        let (xi, ti) = &points[i];
        let (xj, tj) = &points[j];
        let dist = raw_parabolic_distance(&xi[..d], *ti, &xj[..d], *tj);
        if dist > 0.0 {
            (values[i] - values[j]).abs() / dist.powf(alpha)
        } else {
            0.0
        }
    };
    let total_pairs = n * (n - 1) / 2;
    let mut best: f64 = 0.0;
    if total_pairs <= budget {
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(quotient(i, j));
            }
        }
        return best;
    }

    // Position of each grid node in `nodes`, for partner lookup.
    let mut position = vec![u32::MAX; grid.len()];
    for (k, &node) in nodes.iter().enumerate() {
        position[node] = k as u32;
    }
    let max_extent = grid.counts().iter().copied().max().unwrap_or(2);
    let scales = (usize::BITS - max_extent.leading_zeros()) as usize + 1;
    let per_scale = (budget / scales).max(1);
    let ratio = grid.h() * grid.h() / grid.dt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..scales {
        let reach = 1i64 << j;
        let t_reach = ((reach * reach) as f64 * ratio).round().max(0.0) as i64;
        for _ in 0..per_scale {
            let i = rng.random_range(0..n);
            let (lvl, s) = grid.split(nodes[i]);
            let m = grid.multi_index(s);
            let mut partner = [0usize; MAX_DIM];
            let mut ok = true;
            // a third of the samples are purely spatial, a third purely temporal
            let kind = rng.random_range(0..3u8);
            for a in 0..d {
                let off = if kind == 1 { 0 } else { rng.random_range(-reach..=reach) };
                let v = m[a] as i64 + off;
                if v < 0 || v >= grid.counts()[a] as i64 {
                    ok = false;
                    break;
                }
                partner[a] = v as usize;
            }
            let toff = if kind == 0 || t_reach == 0 { 0 } else { rng.random_range(-t_reach..=t_reach) };
            let pl = lvl as i64 + toff;
            if !ok || pl < 0 || pl >= grid.n_time() as i64 {
                continue;
            }
            let pnode = grid.node(pl as usize, grid.flat_index(&partner[..d]));
            let k = position[pnode];
            if k != u32::MAX {
                best = best.max(quotient(i, k as usize));
            }
        }
    }
    // nearest neighbours along every axis, which carry the small-scale sup
    for i in 0..n {
        let (lvl, s) = grid.split(nodes[i]);
        for a in 0..d {
            if let Some(sn) = grid.shift(s, a, 1) {
                let k = position[grid.node(lvl, sn)];
                if k != u32::MAX {
                    best = best.max(quotient(i, k as usize));
                }
            }
        }
        if lvl + 1 < grid.n_time() {
            let k = position[grid.node(lvl + 1, s)];
            if k != u32::MAX {
                best = best.max(quotient(i, k as usize));
            }
        }
    }
    best
}

/// `[u_t]_alpha + max_ij [D_ij u]_alpha` over the nodes of `region` that
/// carry the difference stencils.
pub fn c2alpha_seminorm(u: &GridFunction, alpha: f64, region: &dyn Region) -> Result<f64> {
    c2alpha_seminorm_with_budget(u, alpha, region, DEFAULT_PAIR_BUDGET)
}

pub fn c2alpha_seminorm_with_budget(u: &GridFunction, alpha: f64, region: &dyn Region, budget: usize) -> Result<f64> {
    c2alpha_seminorm_seeded(u, alpha, region, budget, PAIR_SAMPLER_SEED)
}

pub fn c2alpha_seminorm_seeded(u: &GridFunction, alpha: f64, region: &dyn Region, budget: usize, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    let grid = u.grid();
    let nodes: Vec<usize> = grid
        .nodes_in(region)?
        .into_iter()
        .filter(|&n| {
            let (l, s) = grid.split(n);
            grid.has_stencil(s, 1) && l + 1 < grid.n_time()
        })
        .collect();
    if nodes.len() < 2 {
        return Err(Error::InsufficientNodes { needed: 2, found: nodes.len() });
    }
    let ut: DerivedField = time_derivative_field(u, &nodes);
    let mut total = holder_on_nodes(grid, &nodes, &ut, alpha, budget, seed);
    let mut hess_best: f64 = 0.0;
    for comp in hessian_component_fields(u, &nodes) {
        hess_best = hess_best.max(holder_on_nodes(grid, &nodes, &comp, alpha, budget, seed));
    }
    total += hess_best;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ParabolicCube, SpaceTimeBox};

    fn line_grid(n: usize) -> SpaceTimeGrid {
        SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 2.0 / (n - 1) as f64, 0.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_and_linear_examples() {
        let g = SpaceTimeGrid::covering(1, &[0.0], &[1.0], 1.0 / 32.0, -1.0, 1.0 / 32.0).unwrap();
        let region = SpaceTimeBox { lower: vec![0.0], upper: vec![1.0], t_lower: -1.0, t_upper: 0.0 };
        let c = GridFunction::from_fn(g.clone(), |_, _| 4.0).unwrap();
        assert_eq!(holder_seminorm(&c, 0.5, &region, 1_000_000).unwrap(), 0.0);
        let x = GridFunction::from_fn(g, |x, _| x[0]).unwrap();
        assert!((holder_seminorm(&x, 1.0, &region, 1_000_000).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_abs_full_enumeration() {
        let g = line_grid(65);
        let u = GridFunction::from_fn(g.clone(), |x, _| x[0].abs().sqrt()).unwrap();
        let region = ParabolicCube::new(1, 1.0).unwrap();
        let got = holder_seminorm(&u, 0.5, &region, 10_000).unwrap();
        let xs: Vec<f64> = (0..65).map(|i| -1.0 + i as f64 / 32.0).collect();
        let mut want: f64 = 0.0;
        for a in &xs {
            for b in &xs {
                if a != b {
                    want = want.max((a.abs().sqrt() - b.abs().sqrt()).abs() / (a - b).abs().sqrt());
                }
            }
        }
        assert!((got - want).abs() < 1e-12);
        // sup attained by pairs with one endpoint at 0
        assert!((want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_a_lower_bound_close_to_the_truth() {
        let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 1.0 / 64.0, -1.0, 1.0 / 256.0).unwrap();
        let u = GridFunction::from_fn(g, |x, t| (3.0 * x[0]).sin() + t.abs().sqrt()).unwrap();
        let region = ParabolicCube::unit(1).unwrap();
        let exact = holder_seminorm(&u, 0.5, &region, usize::MAX).unwrap();
        let sampled = holder_seminorm(&u, 0.5, &region, 200_000).unwrap();
        assert!(sampled <= exact + 1e-12);
        assert!(sampled >= 0.9 * exact, "{sampled} vs {exact}");
    }

    #[test]
    fn c2alpha_examples() {
        let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 1.0 / 32.0, -0.25, 1.0 / 64.0).unwrap();
        let region = SpaceTimeBox { lower: vec![-1.0], upper: vec![1.0], t_lower: -0.25, t_upper: 0.0 };
        let q = GridFunction::from_fn(g.clone(), |x, t| 0.5 * x[0] * x[0] - 3.0 * t + x[0] + 2.0).unwrap();
        assert!(c2alpha_seminorm(&q, 0.5, &region).unwrap() < 1e-9);

        // D^2 (x^3) = 6x; the extreme interior nodes are +-(1 - h)
        let alpha = 0.5;
        let cubic = GridFunction::from_fn(g.clone(), |x, _| x[0].powi(3)).unwrap();
        let got = c2alpha_seminorm(&cubic, alpha, &region).unwrap();
        let span: f64 = 2.0 - 2.0 / 32.0;
        assert!((got - 6.0 * span.powf(1.0 - alpha)).abs() < 1e-9, "{got}");

        // u = t^2: u_t (forward) = 2t + dt is affine in t with slope 2; the
        // quotient 2 |t - s| / |t - s|^(alpha/2) peaks at the widest pair
        let tsq = GridFunction::from_fn(g, |_, t| t * t).unwrap();
        let got = c2alpha_seminorm(&tsq, alpha, &region).unwrap();
        let width: f64 = 0.25 - 1.0 / 64.0;
        assert!((got - 2.0 * width.powf(1.0 - alpha / 2.0)).abs() < 1e-9, "{got}");
    }
}
