//! Paraboloid touching tests.
//!
//! A paraboloid of opening `M` touches `u` from below at `p0` when some
//! affine `L` with `L(p0) = u(p0)` satisfies
//! `L(x, t) - M (|x - x0|^2 + |t - t0|) <= u(x, t)` on every domain node.
//! For fixed `p0` the set of admissible openings is an up-set, so each node
//! carries a single minimal opening `M*`, computed by a linear program in
//! `(B, C, M)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Point, Region, SpaceTimeGrid, MAX_DIM};
use crate::lp::{LinearProgram, LpOutcome};

/// Relative slack of the opening comparison `M >= M* (1 - tol) - tol`.
pub const OPENING_TOL: f64 = 1e-9;
/// Constraint violation tolerated when checking a candidate against every node.
const VIOLATION_TOL: f64 = 1e-11;
/// Violated constraints added per cutting-plane round.
const CUTS_PER_ROUND: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchSide {
    Below,
    Above,
}

/// Whether the affine part may carry a time slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffineReading {
    /// `L = A + B.x + C t`
    #[default]
    SpaceTime,
    /// `L = A + B.x`
    SpaceOnly,
}

/// `L(x, t) -+ M (|x - x0|^2 + |t - t0|)` about the vertex `(x0, t0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paraboloid {
    pub a: f64,
    pub b: Vec<f64>,
    pub c: f64,
    pub opening: f64,
    pub side: TouchSide,
    pub vertex: Point,
}

impl Paraboloid {
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let mut lin = self.a + self.c * (t - self.vertex.t);
        let mut w = (t - self.vertex.t).abs();
        for (i, b) in self.b.iter().enumerate() {
            let dx = x[i] - self.vertex.x[i];
            lin += b * dx;
            w += dx * dx;
        }
        match self.side {
            TouchSide::Below => lin - self.opening * w,
            TouchSide::Above => lin + self.opening * w,
        }
    }
}

/// Node coordinates and values of the touching domain, laid out for the
/// per-node programs.
#[derive(Debug, Clone)]
pub struct TouchDomain {
    dim: usize,
    nodes: Vec<usize>,
    coords: Vec<[f64; MAX_DIM + 1]>,
    values: Vec<f64>,
    /// Position of each grid node in `nodes`.
    position: Vec<u32>,
    h: f64,
    dt: f64,
    oscillation: f64,
}

impl TouchDomain {
    /// Domain made of the nodes of `region`, or the whole grid.
    pub fn new(u: &GridFunction, region: Option<&dyn Region>) -> Result<Self> {
        let grid: &SpaceTimeGrid = u.grid();
        let nodes: Vec<usize> = match region {
            Some(r) => grid.nodes_in(r)?,
            None => (0..grid.len()).collect(),
        };
        if nodes.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let dim = grid.dim();
        let mut position = vec![u32::MAX; grid.len()];
        let coords = nodes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                position[n] = k as u32;
                let (lvl, s) = grid.split(n);
                let x = grid.spatial_coords(s);
                let mut c = [0.0; MAX_DIM + 1];
                c[..dim].copy_from_slice(&x[..dim]);
                c[dim] = grid.time(lvl);
                c
            })
            .collect();
        let values: Vec<f64> = nodes.iter().map(|&n| u.value(n)).collect();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        Ok(Self { dim, nodes, coords, values, position, h: grid.h(), dt: grid.dt(), oscillation: hi - lo })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.position.get(node).is_some_and(|p| *p != u32::MAX)
    }

    /// Minimal opening `M*` at grid node `node` (which must lie in the
    /// domain) together with the optimal affine part `(B, C)`.
    pub fn minimal_opening(&self, node: usize, side: TouchSide, reading: AffineReading) -> Result<(f64, Vec<f64>, f64)> {
        let Some(&k) = self.position.get(node).filter(|p| **p != u32::MAX) else {
            return Err(Error::InvalidArgument(format!("node {node} is not in the touching domain")));
        };
        let k = k as usize;
        let d = self.dim;
        let sgn = match side {
            TouchSide::Below => 1.0,
            TouchSide::Above => -1.0,
        };
        let p0 = self.coords[k];
        let u0 = sgn * self.values[k];
        // constraint q: B.dx + C dt - M w <= du
        let row = |q: usize| -> ([f64; MAX_DIM + 2], f64) {
            let mut r = [0.0; MAX_DIM + 2];
            let mut w = 0.0;
            for a in 0..d {
                let dx = self.coords[q][a] - p0[a];
                r[a] = dx;
                w += dx * dx;
            }
            let dt = self.coords[q][d] - p0[d];
            r[d] = dt;
            w += dt.abs();
            r[d + 1] = -w;
            (r, sgn * self.values[q] - u0)
        };
        let n = self.len();
        let nv = d + 2;
        let scale = self.oscillation + 1.0;
        let min_w = (self.h * self.h).min(self.dt);
        let m_max = 4.0 * scale / min_w;
        let b_max = 4.0 * (scale / self.h + m_max * self.h) + 1.0;
        let c_max = 4.0 * (scale / self.dt + m_max) + 1.0;
        let tol = VIOLATION_TOL * scale;

        // start with the nearest nodes in index space
        let mut active: Vec<usize> = Vec::new();
        let mut in_active = vec![false; n];
        let mut seed: Vec<(f64, usize)> = (0..n)
            .filter(|&q| q != k)
            .map(|q| {
                let (r, _) = row(q);
                (-r[d + 1], q)
            })
            .collect();
        let take = (4 * nv).min(seed.len());
        if take > 0 {
            seed.select_nth_unstable_by(take - 1, |a, b| a.0.total_cmp(&b.0));
        }
        for &(_, q) in seed.iter().take(take) {
            active.push(q);
            in_active[q] = true;
        }
        loop {
            let mut lp = LinearProgram::new(nv);
            for &q in &active {
                let (r, rhs) = row(q);
                lp.add_constraint(r[..nv].to_vec(), rhs);
            }
            for a in 0..d {
                lp.set_bounds(a, -b_max, b_max);
            }
            match reading {
                AffineReading::SpaceTime => lp.set_bounds(d, -c_max, c_max),
                AffineReading::SpaceOnly => lp.set_bounds(d, 0.0, 0.0),
            }
            lp.set_bounds(d + 1, 0.0, m_max);
            let mut obj = vec![0.0; nv];
            obj[d + 1] = 1.0;
            lp.set_objective(obj);
            let x = match lp.solve() {
                LpOutcome::Optimal { x, .. } => x,
                // M = m_max with B = C = 0 is always feasible
                other => return Err(Error::InvalidArgument(format!("touching program failed: {other:?}"))),
            };
            let mut violated: Vec<(f64, usize)> = (0..n)
                .filter(|&q| q != k && !in_active[q])
                .filter_map(|q| {
                    let (r, rhs) = row(q);
                    let v = r[..nv].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - rhs;
                    (v > tol).then_some((v, q))
                })
                .collect();
            if violated.is_empty() {
                let b = x[..d].to_vec();
                return Ok((x[d + 1].max(0.0), b, x[d]));
            }
            if violated.len() > CUTS_PER_ROUND {
                violated.select_nth_unstable_by(CUTS_PER_ROUND - 1, |a, b| b.0.total_cmp(&a.0));
                violated.truncate(CUTS_PER_ROUND);
            }
            for (_, q) in violated {
                active.push(q);
                in_active[q] = true;
            }
        }
    }

    /// Touching paraboloid of opening `m` at `node`, if one exists.
    pub fn touching_paraboloid(&self, node: usize, m: f64, side: TouchSide, reading: AffineReading) -> Result<Option<Paraboloid>> {
        let (m_star, b, c) = self.minimal_opening(node, side, reading)?;
        if !opening_admits(m, m_star) {
            return Ok(None);
        }
        let k = self.position[node] as usize;
        let p = self.coords[k];
        let vertex = Point::new(&p[..self.dim], p[self.dim])?;
        let (b, c) = match side {
            TouchSide::Below => (b, c),
            TouchSide::Above => (b.iter().map(|v| -v).collect(), -c),
        };
        Ok(Some(Paraboloid { a: self.values[k], b, c, opening: m, side, vertex }))
    }

    /// `M*` for every node in `nodes`, in parallel.
    pub fn minimal_openings(&self, nodes: &[usize], side: TouchSide, reading: AffineReading) -> Result<Vec<f64>> {
        nodes.par_iter().map(|&n| self.minimal_opening(n, side, reading).map(|r| r.0)).collect()
    }
}

/// `m >= m_star` up to the relative slack [`OPENING_TOL`].
#[inline]
pub fn opening_admits(m: f64, m_star: f64) -> bool {
    m >= m_star * (1.0 - OPENING_TOL) - OPENING_TOL
}

pub fn touches_from_below(u: &GridFunction, node: usize, m: f64, domain: &TouchDomain, reading: AffineReading) -> Result<bool> {
    touches(u, node, m, domain, TouchSide::Below, reading)
}

pub fn touches_from_above(u: &GridFunction, node: usize, m: f64, domain: &TouchDomain, reading: AffineReading) -> Result<bool> {
    touches(u, node, m, domain, TouchSide::Above, reading)
}

fn touches(u: &GridFunction, node: usize, m: f64, domain: &TouchDomain, side: TouchSide, reading: AffineReading) -> Result<bool> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("opening must be positive, got {m}")));
    }
    if domain.values.len() != domain.nodes.len() || domain.nodes.iter().zip(&domain.values).any(|(&n, v)| u.values().get(n) != Some(v)) {
        return Err(Error::InvalidArgument("touching domain was built from different data".into()));
    }
    let (m_star, _, _) = domain.minimal_opening(node, side, reading)?;
    Ok(opening_admits(m, m_star))
}
