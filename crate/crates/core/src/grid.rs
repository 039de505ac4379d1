//! Space-time geometry: points, parabolic cylinders and cubes, the parabolic
//! dyadic tree over `K_1`, uniform space-time grids and the functions that
//! live on them.
//!
//! Time runs over non-positive values; every grid ends at `t = 0`.
//! Cylinders `Q_r(x0, t0) = B_r(x0) x (t0 - r^2, t0]` use an open ball and a
//! time interval open at the bottom. Cubes are closed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Slack applied to set-membership tests so that nodes placed on a boundary
/// by floating-point arithmetic land on the intended side.
pub const GEOM_EPS: f64 = 1e-12;

pub fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(x: &[f64], t: f64) -> Result<Self> {
        check_dim(x.len())?;
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self { x: x.to_vec(), t })
    }

    pub fn origin(dim: usize) -> Self {
        Self { x: vec![0.0; dim], t: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// `|x_p - x_q| + sqrt(|t_p - t_q|)`.
pub fn parabolic_distance(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    Ok(raw_parabolic_distance(&p.x, p.t, &q.x, q.t))
}

#[inline]
pub(crate) fn raw_parabolic_distance(x: &[f64], t: f64, y: &[f64], s: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    sq.sqrt() + (t - s).abs().sqrt()
}

/// Closed axis-aligned superset of a region, used to restrict node scans.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_lower: f64,
    pub t_upper: f64,
}

/// A measurable subset of space-time.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    fn contains_raw(&self, x: &[f64], t: f64) -> bool;
    fn bounding_box(&self) -> BoundingBox;

    fn contains(&self, p: &Point) -> Result<bool> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.dim() });
        }
        Ok(self.contains_raw(&p.x, p.t))
    }
}

/// `B_r(x0) x (t0 - r^2, t0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub center: Point,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!("cylinder radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// `Q_r` centered at the space-time origin.
    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        Self::new(Point::origin(dim), radius)
    }
}

impl Region for ParabolicCylinder {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn contains_raw(&self, x: &[f64], t: f64) -> bool {
        let r = self.radius;
        let sq: f64 = x.iter().zip(&self.center.x).map(|(a, b)| (a - b) * (a - b)).sum();
        let scale = 1.0 + r;
        sq.sqrt() < r - GEOM_EPS * scale
            && t > self.center.t - r * r + GEOM_EPS * scale
            && t <= self.center.t + GEOM_EPS * scale
    }

    fn bounding_box(&self) -> BoundingBox {
        let r = self.radius;
        BoundingBox {
            lower: self.center.x.iter().map(|c| c - r).collect(),
            upper: self.center.x.iter().map(|c| c + r).collect(),
            t_lower: self.center.t - r * r,
            t_upper: self.center.t,
        }
    }
}

/// `K_r = [-r, r]^d x [-r^2, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCube {
    pub dim: usize,
    pub r: f64,
}

impl ParabolicCube {
    pub fn new(dim: usize, r: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Geometry(format!("cube half-side must be positive, got {r}")));
        }
        Ok(Self { dim, r })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.r).powi(self.dim as i32) * self.r * self.r
    }
}

impl Region for ParabolicCube {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains_raw(&self, x: &[f64], t: f64) -> bool {
        let eps = GEOM_EPS * (1.0 + self.r);
        x.iter().all(|v| v.abs() <= self.r + eps) && t >= -self.r * self.r - eps && t <= eps
    }

    fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            lower: vec![-self.r; self.dim],
            upper: vec![self.r; self.dim],
            t_lower: -self.r * self.r,
            t_upper: 0.0,
        }
    }
}

/// Closed space-time box with explicit per-axis extents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_lower: f64,
    pub t_upper: f64,
}

impl Region for SpaceTimeBox {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn contains_raw(&self, x: &[f64], t: f64) -> bool {
        let eps = GEOM_EPS;
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= lo - eps && *v <= hi + eps)
            && t >= self.t_lower - eps
            && t <= self.t_upper + eps
    }

    fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            t_lower: self.t_lower,
            t_upper: self.t_upper,
        }
    }
}

/// Node of the parabolic dyadic tree over `K_1`.
///
/// At level `k` the spatial side is `2^(1-k)` and the temporal side `4^(-k)`;
/// `index` holds the spatial cell indices (each in `0..2^k`) and `time_index`
/// the temporal one (in `0..4^k`), counted from the lower corner `(-1, ..., -1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<u64>,
    pub time_index: u64,
}

impl DyadicCube {
    /// `K_1` itself.
    pub fn root(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { level: 0, index: vec![0; dim], time_index: 0 })
    }

    pub fn new(level: u32, index: Vec<u64>, time_index: u64) -> Result<Self> {
        check_dim(index.len())?;
        let n = 1u64 << level;
        if index.iter().any(|&i| i >= n) || time_index >= n * n {
            return Err(Error::Geometry(format!("dyadic index out of range at level {level}")));
        }
        Ok(Self { level, index, time_index })
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn spatial_side(&self) -> f64 {
        2.0 / (1u64 << self.level) as f64
    }

    pub fn temporal_side(&self) -> f64 {
        1.0 / (1u64 << (2 * self.level)) as f64
    }

    pub fn spatial_interval(&self, axis: usize) -> (f64, f64) {
        let s = self.spatial_side();
        let lo = -1.0 + self.index[axis] as f64 * s;
        (lo, lo + s)
    }

    pub fn time_interval(&self) -> (f64, f64) {
        let s = self.temporal_side();
        let lo = -1.0 + self.time_index as f64 * s;
        (lo, lo + s)
    }

    pub fn volume(&self) -> f64 {
        self.spatial_side().powi(self.dim() as i32) * self.temporal_side()
    }

    /// The `2^(d+2)` children: two halves per spatial axis, four quarters in time.
    pub fn subdivide(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << (d + 2));
        for tq in 0..4u64 {
            for corner in 0..(1u64 << d) {
                let index = (0..d).map(|a| 2 * self.index[a] + ((corner >> a) & 1)).collect();
                out.push(DyadicCube {
                    level: self.level + 1,
                    index,
                    time_index: 4 * self.time_index + tq,
                });
            }
        }
        out
    }

    pub fn predecessor(&self) -> Result<DyadicCube> {
        if self.level == 0 {
            return Err(Error::RootCube);
        }
        Ok(DyadicCube {
            level: self.level - 1,
            index: self.index.iter().map(|i| i / 2).collect(),
            time_index: self.time_index / 4,
        })
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn is_ancestor_of(&self, other: &DyadicCube) -> bool {
        if other.level < self.level || other.dim() != self.dim() {
            return false;
        }
        let shift = other.level - self.level;
        other.index.iter().zip(&self.index).all(|(o, s)| (o >> shift) == *s)
            && (other.time_index >> (2 * shift)) == self.time_index
    }

    /// `m` copies of the predecessor stacked on top of it: if the predecessor
    /// is `(a, b) x L`, the result is `(b, b + m (b - a)) x L`.
    pub fn stack(&self, m: u32) -> Result<StackedRegion> {
        if m == 0 {
            return Err(Error::InvalidArgument("stack height m must be positive".into()));
        }
        let pred = self.predecessor()?;
        let (a, b) = pred.time_interval();
        Ok(StackedRegion {
            spatial: (0..self.dim()).map(|ax| pred.spatial_interval(ax)).collect(),
            time: (b, b + m as f64 * (b - a)),
        })
    }

    /// All `2^((d+2) k)` cubes of level `k`.
    pub fn level_cubes(dim: usize, level: u32) -> Result<Vec<DyadicCube>> {
        let mut cubes = vec![DyadicCube::root(dim)?];
        for _ in 0..level {
            cubes = cubes.iter().flat_map(|c| c.subdivide()).collect();
        }
        Ok(cubes)
    }
}

impl Region for DyadicCube {
    fn dim(&self) -> usize {
        self.index.len()
    }

    fn contains_raw(&self, x: &[f64], t: f64) -> bool {
        let (t0, t1) = self.time_interval();
        (0..self.dim()).all(|a| {
            let (lo, hi) = self.spatial_interval(a);
            x[a] >= lo - GEOM_EPS && x[a] <= hi + GEOM_EPS
        }) && t >= t0 - GEOM_EPS
            && t <= t1 + GEOM_EPS
    }

    fn bounding_box(&self) -> BoundingBox {
        let (t_lower, t_upper) = self.time_interval();
        BoundingBox {
            lower: (0..self.dim()).map(|a| self.spatial_interval(a).0).collect(),
            upper: (0..self.dim()).map(|a| self.spatial_interval(a).1).collect(),
            t_lower,
            t_upper,
        }
    }
}

/// `(b, b + m (b - a)) x L`, the stacked predecessor region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedRegion {
    pub spatial: Vec<(f64, f64)>,
    pub time: (f64, f64),
}

impl StackedRegion {
    pub fn temporal_length(&self) -> f64 {
        self.time.1 - self.time.0
    }

    pub fn volume(&self) -> f64 {
        self.spatial.iter().map(|(a, b)| b - a).product::<f64>() * self.temporal_length()
    }
}

impl Region for StackedRegion {
    fn dim(&self) -> usize {
        self.spatial.len()
    }

    fn contains_raw(&self, x: &[f64], t: f64) -> bool {
        self.spatial
            .iter()
            .zip(x)
            .all(|((lo, hi), v)| *v >= lo - GEOM_EPS && *v <= hi + GEOM_EPS)
            && t > self.time.0 + GEOM_EPS
            && t < self.time.1 - GEOM_EPS
    }

    fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            lower: self.spatial.iter().map(|s| s.0).collect(),
            upper: self.spatial.iter().map(|s| s.1).collect(),
            t_lower: self.time.0,
            t_upper: self.time.1,
        }
    }
}

/// Lebesgue measure of a union of dyadic cubes (cubes may repeat or nest).
pub fn measure_cubes(cubes: &[DyadicCube]) -> f64 {
    let mut sorted: Vec<&DyadicCube> = cubes.iter().collect();
    sorted.sort();
    sorted.dedup();
    sorted.sort_by_key(|c| c.level);
    let mut kept: Vec<&DyadicCube> = Vec::new();
    for c in sorted {
        if !kept.iter().any(|k| k.is_ancestor_of(c)) {
            kept.push(c);
        }
    }
    kept.iter().map(|c| c.volume()).sum()
}

/// Uniform tensor-product space-time lattice.
///
/// Spatial node `i` on axis `a` sits at `lower[a] + i h`; time level `n` sits
/// at `-(n_time - 1 - n) dt`, so the last level is `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    dim: usize,
    lower: [f64; MAX_DIM],
    counts: [usize; MAX_DIM],
    strides: [usize; MAX_DIM],
    h: f64,
    dt: f64,
    n_time: usize,
}

impl SpaceTimeGrid {
    pub fn new(dim: usize, lower: &[f64], counts: &[usize], h: f64, dt: f64, n_time: usize) -> Result<Self> {
        check_dim(dim)?;
        if lower.len() != dim || counts.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: lower.len().min(counts.len()) });
        }
        if !(h > 0.0 && h.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(Error::Geometry(format!("grid steps must be positive (h = {h}, dt = {dt})")));
        }
        if counts.iter().any(|&c| c < 2) || n_time < 1 {
            return Err(Error::Geometry("grid needs at least two nodes per axis and one time level".into()));
        }
        let mut lo = [0.0; MAX_DIM];
        let mut cn = [1; MAX_DIM];
        let mut st = [0; MAX_DIM];
        let mut stride = 1;
        for a in 0..dim {
            lo[a] = lower[a];
            cn[a] = counts[a];
            st[a] = stride;
            stride *= counts[a];
        }
        Ok(Self { dim, lower: lo, counts: cn, strides: st, h, dt, n_time })
    }

    /// Grid on `prod [lower_a, upper_a] x [t_start, 0]`; the extents must be
    /// integer multiples of `h` and `dt`.
    pub fn covering(dim: usize, lower: &[f64], upper: &[f64], h: f64, t_start: f64, dt: f64) -> Result<Self> {
        check_dim(dim)?;
        if upper.len() != dim || lower.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: upper.len() });
        }
        let mut counts = Vec::with_capacity(dim);
        for a in 0..dim {
            let cells = (upper[a] - lower[a]) / h;
            let n = cells.round();
            if n < 1.0 || (cells - n).abs() > 1e-9 * n.max(1.0) {
                return Err(Error::Geometry(format!("axis {a} extent is not a multiple of h = {h}")));
            }
            counts.push(n as usize + 1);
        }
        if t_start > 0.0 {
            return Err(Error::Geometry("time interval must end at t = 0".into()));
        }
        let steps = -t_start / dt;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Geometry(format!("time extent is not a multiple of dt = {dt}")));
        }
        Self::new(dim, lower, &counts, h, dt, n as usize + 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_time(&self) -> usize {
        self.n_time
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }
    pub fn upper(&self, axis: usize) -> f64 {
        self.lower[axis] + (self.counts[axis] - 1) as f64 * self.h
    }
    pub fn t_start(&self) -> f64 {
        self.time(0)
    }
    pub fn n_space(&self) -> usize {
        self.counts[..self.dim].iter().product()
    }
    pub fn len(&self) -> usize {
        self.n_space() * self.n_time
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Volume attributed to a single node: `h^d dt`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32) * self.dt
    }

    #[inline]
    pub fn time(&self, level: usize) -> f64 {
        -((self.n_time - 1 - level) as f64) * self.dt
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.h
    }

    #[inline]
    pub fn multi_index(&self, s: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for a in 0..self.dim {
            out[a] = (s / self.strides[a]) % self.counts[a];
        }
        out
    }

    #[inline]
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn node(&self, level: usize, s: usize) -> usize {
        level * self.n_space() + s
    }

    /// `(time level, spatial index)` of a node.
    #[inline]
    pub fn split(&self, node: usize) -> (usize, usize) {
        let ns = self.n_space();
        (node / ns, node % ns)
    }

    #[inline]
    pub fn spatial_coords(&self, s: usize) -> [f64; MAX_DIM] {
        let m = self.multi_index(s);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.coord(a, m[a]);
        }
        x
    }

    pub fn point(&self, node: usize) -> Point {
        let (n, s) = self.split(node);
        Point { x: self.spatial_coords(s)[..self.dim].to_vec(), t: self.time(n) }
    }

    /// Spatial neighbour of `s` shifted by `offset` along `axis`.
    #[inline]
    pub fn shift(&self, s: usize, axis: usize, offset: isize) -> Option<usize> {
        let i = (s / self.strides[axis]) % self.counts[axis];
        let j = i as isize + offset;
        if j < 0 || j >= self.counts[axis] as isize {
            None
        } else {
            Some((s as isize + offset * self.strides[axis] as isize) as usize)
        }
    }

    /// Whether `s` has neighbours at distance `reach` on every axis.
    #[inline]
    pub fn has_stencil(&self, s: usize, reach: usize) -> bool {
        let m = self.multi_index(s);
        (0..self.dim).all(|a| m[a] >= reach && m[a] + reach < self.counts[a])
    }

    #[inline]
    pub fn is_spatial_boundary(&self, s: usize) -> bool {
        !self.has_stencil(s, 1)
    }

    /// Initial slice plus lateral boundary.
    pub fn is_parabolic_boundary(&self, node: usize) -> bool {
        let (n, s) = self.split(node);
        n == 0 || self.is_spatial_boundary(s)
    }

    /// Nearest node index range on `axis` inside `[lo, hi]`.
    fn axis_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let a = ((lo - self.lower[axis]) / self.h - 1e-9).ceil().max(0.0);
        let b = ((hi - self.lower[axis]) / self.h + 1e-9).floor();
        let last = (self.counts[axis] - 1) as f64;
        let b = b.min(last);
        if b < a {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }

    fn level_range(&self, t_lo: f64, t_hi: f64) -> Option<(usize, usize)> {
        let last = (self.n_time - 1) as f64;
        let a = (last + t_lo / self.dt - 1e-9).ceil().max(0.0);
        let b = (last + t_hi / self.dt + 1e-9).floor().min(last);
        if b < a {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }

    /// Spatial indices whose coordinates lie in the region's bounding box.
    pub fn spatial_in_box(&self, bb: &BoundingBox) -> Vec<usize> {
        let mut ranges = [(0usize, 0usize); MAX_DIM];
        for a in 0..self.dim {
            match self.axis_range(a, bb.lower[a], bb.upper[a]) {
                Some(r) => ranges[a] = r,
                None => return Vec::new(),
            }
        }
        let mut out = Vec::new();
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            m[a] = ranges[a].0;
        }
        loop {
            out.push(self.flat_index(&m[..self.dim]));
            let mut a = 0;
            loop {
                if a == self.dim {
                    return out;
                }
                if m[a] < ranges[a].1 {
                    m[a] += 1;
                    break;
                }
                m[a] = ranges[a].0;
                a += 1;
            }
        }
    }

    /// All nodes inside `region`, ordered by time level then spatial index.
    pub fn nodes_in(&self, region: &dyn Region) -> Result<Vec<usize>> {
        if region.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: region.dim() });
        }
        let bb = region.bounding_box();
        let Some((l0, l1)) = self.level_range(bb.t_lower, bb.t_upper) else {
            return Ok(Vec::new());
        };
        let spatial = self.spatial_in_box(&bb);
        let mut out = Vec::new();
        for n in l0..=l1 {
            let t = self.time(n);
            for &s in &spatial {
                let x = self.spatial_coords(s);
                if region.contains_raw(&x[..self.dim], t) {
                    out.push(self.node(n, s));
                }
            }
        }
        Ok(out)
    }

    /// Index of the node at `p`, if `p` is (up to rounding) a grid node.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        if p.dim() != self.dim {
            return None;
        }
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            let f = (p.x[a] - self.lower[a]) / self.h;
            let r = f.round();
            if (f - r).abs() > 1e-6 || r < 0.0 || r as usize >= self.counts[a] {
                return None;
            }
            m[a] = r as usize;
        }
        let f = (self.n_time - 1) as f64 + p.t / self.dt;
        let r = f.round();
        if (f - r).abs() > 1e-6 || r < 0.0 || r as usize >= self.n_time {
            return None;
        }
        Some(self.node(r as usize, self.flat_index(&m[..self.dim])))
    }

    /// Measure of a node set by the cell-counting rule: `count h^d dt`.
    pub fn measure_nodes(&self, count: usize) -> f64 {
        count as f64 * self.cell_volume()
    }

    /// Subsampled grid keeping every `space`-th spatial node (from the lower
    /// corner) and every `time`-th level (counted back from `t = 0`).
    pub fn coarsened(&self, space: usize, time: usize) -> Result<SpaceTimeGrid> {
        if space == 0 || time == 0 {
            return Err(Error::InvalidArgument("coarsening strides must be positive".into()));
        }
        let mut counts = Vec::with_capacity(self.dim);
        for a in 0..self.dim {
            if (self.counts[a] - 1) % space != 0 {
                return Err(Error::Geometry(format!("axis {a} node count incompatible with stride {space}")));
            }
            counts.push((self.counts[a] - 1) / space + 1);
        }
        let n_time = (self.n_time - 1) / time + 1;
        SpaceTimeGrid::new(self.dim, self.lower(), &counts, self.h * space as f64, self.dt * time as f64, n_time)
    }
}

/// Real values, one per node of a [`SpaceTimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: SpaceTimeGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} nodes but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    /// Samples `f(x, t)` at every node.
    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let ns = grid.n_space();
        let mut values = Vec::with_capacity(grid.len());
        for n in 0..grid.n_time() {
            let t = grid.time(n);
            for s in 0..ns {
                let x = grid.spatial_coords(s);
                values.push(f(&x[..grid.dim()], t));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    #[inline]
    pub fn at(&self, level: usize, s: usize) -> f64 {
        self.values[self.grid.node(level, s)]
    }

    pub fn slice(&self, level: usize) -> &[f64] {
        let ns = self.grid.n_space();
        &self.values[level * ns..(level + 1) * ns]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Adds `g(x, t)` nodewise.
    pub fn add_fn(&self, g: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let other = Self::from_fn(self.grid.clone(), g)?;
        Self::new(self.grid.clone(), self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to a coarsened grid (see [`SpaceTimeGrid::coarsened`]).
    pub fn coarsened(&self, space: usize, time: usize) -> Result<Self> {
        let coarse = self.grid.coarsened(space, time)?;
        let offset = (self.grid.n_time() - 1) % time;
        let mut values = Vec::with_capacity(coarse.len());
        for n in 0..coarse.n_time() {
            let fine_level = offset + n * time;
            for s in 0..coarse.n_space() {
                let m = coarse.multi_index(s);
                let mut fm = [0usize; MAX_DIM];
                for a in 0..coarse.dim() {
                    fm[a] = m[a] * space;
                }
                let fs = self.grid.flat_index(&fm[..coarse.dim()]);
                values.push(self.at(fine_level, fs));
            }
        }
        Self::new(coarse, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64], t: f64) -> Point {
        Point::new(x, t).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(parabolic_distance(&pt(&[0.0, 0.0], 0.0), &pt(&[0.0, 0.0], 0.0)).unwrap(), 0.0);
        assert_eq!(parabolic_distance(&pt(&[0.0], 0.0), &pt(&[1.0], -1.0)).unwrap(), 2.0);
        assert_eq!(parabolic_distance(&pt(&[3.0, 0.0], 0.0), &pt(&[0.0, 4.0], -0.25)).unwrap(), 5.5);
        assert!(matches!(
            parabolic_distance(&pt(&[0.0], 0.0), &pt(&[0.0, 0.0], 0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn point_rejects_bad_dimension() {
        assert!(Point::new(&[0.0; 4], 0.0).is_err());
        assert!(Point::new(&[], 0.0).is_err());
        assert!(Point::new(&[f64::NAN], 0.0).is_err());
    }

    #[test]
    fn membership_examples() {
        let q1 = ParabolicCylinder::centered(1, 1.0).unwrap();
        assert!(q1.contains(&pt(&[0.0], 0.0)).unwrap());
        assert!(!q1.contains(&pt(&[0.0], -1.0)).unwrap());
        assert!(!q1.contains(&pt(&[1.0], -0.5)).unwrap());
        let k1 = ParabolicCube::unit(1).unwrap();
        assert!(k1.contains(&pt(&[1.0], -1.0)).unwrap());
        assert!(!k1.contains(&pt(&[1.0], 0.1)).unwrap());
    }

    #[test]
    fn subdivision_counts_and_volumes() {
        for d in 1..=3 {
            let root = DyadicCube::root(d).unwrap();
            let kids = root.subdivide();
            assert_eq!(kids.len(), 1 << (d + 2));
            let total: f64 = kids.iter().map(|c| c.volume()).sum();
            assert_eq!(total, root.volume());
            for k in &kids {
                assert_eq!(k.predecessor().unwrap(), root);
                assert_eq!(k.spatial_side(), 1.0);
                assert_eq!(k.temporal_side(), 0.25);
            }
        }
        assert_eq!(DyadicCube::root(1).unwrap().volume(), 2.0);
        assert!(matches!(DyadicCube::root(2).unwrap().predecessor(), Err(Error::RootCube)));
    }

    #[test]
    fn stack_of_bottom_child() {
        let c = DyadicCube::new(2, vec![0], 0).unwrap();
        let pred = c.predecessor().unwrap();
        assert_eq!(pred.time_interval(), (-1.0, -0.75));
        let s = c.stack(1).unwrap();
        assert_eq!(s.time, (-0.75, -0.5));
        assert_eq!(s.spatial, vec![pred.spatial_interval(0)]);
        let s3 = c.stack(3).unwrap();
        assert_eq!(s3.temporal_length(), 3.0 * pred.temporal_side());
        assert!(DyadicCube::root(1).unwrap().stack(1).is_err());
    }

    #[test]
    fn stack_matches_interval_arithmetic() {
        // level-3 cube, d = 1, spatial index 5, time index 37
        let c = DyadicCube::new(3, vec![5], 37).unwrap();
        let s = c.stack(3).unwrap();
        // predecessor: level 2, spatial side 0.5, temporal side 1/16
        let pred_x0 = -1.0 + (5 / 2) as f64 * 0.5;
        let pred_t0 = -1.0 + (37 / 4) as f64 / 16.0;
        let pred_t1 = pred_t0 + 1.0 / 16.0;
        assert_eq!(s.spatial, vec![(pred_x0, pred_x0 + 0.5)]);
        assert_eq!(s.time, (pred_t1, pred_t1 + 3.0 * (pred_t1 - pred_t0)));
    }

    #[test]
    fn cube_union_measure() {
        let root = DyadicCube::root(1).unwrap();
        assert_eq!(measure_cubes(&[]), 0.0);
        assert_eq!(measure_cubes(&[root.clone()]), 2.0);
        let kids = root.subdivide();
        assert_eq!(measure_cubes(&kids), 2.0);
        let mut with_parent = kids.clone();
        with_parent.push(root);
        with_parent.push(kids[0].clone());
        assert_eq!(measure_cubes(&with_parent), 2.0);
        assert_eq!(measure_cubes(&kids[..3]), 0.75);
    }

    #[test]
    fn dyadic_tree_partitions_k1() {
        for d in 1..=2usize {
            for k in 0..=4u32 {
                if d == 2 && k == 4 {
                    continue;
                }
                let cubes = DyadicCube::level_cubes(d, k).unwrap();
                assert_eq!(cubes.len(), 1usize << ((d + 2) * k as usize));
                let total: f64 = cubes.iter().map(|c| c.volume()).sum();
                assert!((total - 2f64.powi(d as i32)).abs() < 1e-12);
            }
        }
        // d = 2, level 4 is 2^16 cubes; count only
        assert_eq!(DyadicCube::level_cubes(2, 4).unwrap().len(), 1 << 16);
    }

    #[test]
    fn grid_nodes_and_measure() {
        let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 0.25, -1.0, 0.125).unwrap();
        assert_eq!(g.counts(), &[9]);
        assert_eq!(g.n_time(), 9);
        assert_eq!(g.time(g.n_time() - 1), 0.0);
        assert_eq!(g.t_start(), -1.0);
        let k1 = ParabolicCube::unit(1).unwrap();
        let all = g.nodes_in(&k1).unwrap();
        assert_eq!(all.len(), g.len());
        assert_eq!(g.measure_nodes(0), 0.0);
        let q = ParabolicCylinder::centered(1, 0.5).unwrap();
        let inside = g.nodes_in(&q).unwrap();
        // |x| < 0.5 -> x in {-0.25, 0, 0.25}; t in (-0.25, 0] -> {-0.125, 0}
        assert_eq!(inside.len(), 6);
        for n in inside {
            assert!(q.contains(&g.point(n)).unwrap());
        }
    }

    #[test]
    fn locate_roundtrip_and_coarsen() {
        let g = SpaceTimeGrid::covering(2, &[-1.0, -1.0], &[1.0, 1.0], 0.25, -0.5, 0.0625).unwrap();
        for node in [0, 17, g.len() - 1] {
            assert_eq!(g.locate(&g.point(node)), Some(node));
        }
        let f = GridFunction::from_fn(g.clone(), |x, t| x[0] + 10.0 * x[1] + 100.0 * t).unwrap();
        let c = f.coarsened(2, 2).unwrap();
        assert_eq!(c.grid().counts(), &[5, 5]);
        for node in 0..c.grid().len() {
            let p = c.grid().point(node);
            assert!((c.value(node) - (p.x[0] + 10.0 * p.x[1] + 100.0 * p.t)).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point2() -> impl Strategy<Value = Point> {
            (-5.0..5.0f64, -5.0..5.0f64, -5.0..0.0f64).prop_map(|(a, b, t)| Point { x: vec![a, b], t })
        }

        proptest! {
            #[test]
            fn triangle_inequality(p in point2(), q in point2(), r in point2()) {
                let pq = parabolic_distance(&p, &q).unwrap();
                let pr = parabolic_distance(&p, &r).unwrap();
                let rq = parabolic_distance(&r, &q).unwrap();
                prop_assert!(pq <= pr + rq + 1e-12);
                prop_assert!((pq - parabolic_distance(&q, &p).unwrap()).abs() < 1e-15);
            }

            #[test]
            fn predecessor_inverts_subdivide(level in 0u32..5, seed in 0u64..10_000) {
                let n = 1u64 << level;
                let c = DyadicCube::new(level, vec![seed % n, (seed / 7) % n], (seed / 3) % (n * n)).unwrap();
                for child in c.subdivide() {
                    prop_assert_eq!(child.level, level + 1);
                    prop_assert_eq!(child.predecessor().unwrap(), c.clone());
                    prop_assert!(c.is_ancestor_of(&child));
                }
            }
        }
    }
}
