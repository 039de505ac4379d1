//! Exhaustive checker for the stacked covering inequality
//! `|A| <= rho (m + 1) / m |B|` on sets made of finest-level dyadic cells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_dim, DyadicCube, SpaceTimeGrid};

/// The level-`L` cells of `K_1`, flattened time-major:
/// `time * side^d + spatial`, with `side = 2^L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicLattice {
    pub dim: usize,
    pub level: u32,
}

impl DyadicLattice {
    pub fn new(dim: usize, level: u32) -> Result<Self> {
        check_dim(dim)?;
        if level == 0 || level > 8 {
            return Err(Error::InvalidArgument(format!("lattice level must lie in 1..=8, got {level}")));
        }
        Ok(Self { dim, level })
    }

    pub fn side(&self) -> usize {
        1 << self.level
    }

    pub fn time_cells(&self) -> usize {
        1 << (2 * self.level)
    }

    pub fn spatial_cells(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn len(&self) -> usize {
        self.spatial_cells() * self.time_cells()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        DyadicCube::root(self.dim).map(|r| r.volume()).unwrap_or(0.0) / self.len() as f64
    }

    fn flat(&self, spatial: &[usize], time: usize) -> usize {
        let side = self.side();
        let mut s = 0;
        for a in (0..self.dim).rev() {
            s = s * side + spatial[a];
        }
        time * self.spatial_cells() + s
    }

    fn spatial_of(&self, cell: usize) -> (Vec<usize>, usize) {
        let side = self.side();
        let mut s = cell % self.spatial_cells();
        let t = cell / self.spatial_cells();
        let mut idx = vec![0; self.dim];
        for v in idx.iter_mut() {
            *v = s % side;
            s /= side;
        }
        (idx, t)
    }

    /// Cells of the box `prod [lo_a, hi_a) x [t0, t1)` given in cell units.
    fn box_cells(&self, lo: &[usize], hi: &[usize], t0: usize, t1: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = lo.to_vec();
        for t in t0..t1 {
            cur.copy_from_slice(lo);
            'spatial: loop {
                out.push(self.flat(&cur, t));
                for a in 0..self.dim {
                    cur[a] += 1;
                    if cur[a] < hi[a] {
                        continue 'spatial;
                    }
                    cur[a] = lo[a];
                }
                break;
            }
        }
        out
    }

    /// Cells of a dyadic cube of level `<= L`.
    pub fn cube_cells(&self, cube: &DyadicCube) -> Vec<usize> {
        let s = 1usize << (self.level - cube.level);
        let ts = s * s;
        let lo: Vec<usize> = cube.index.iter().map(|&i| i as usize * s).collect();
        let hi: Vec<usize> = lo.iter().map(|l| l + s).collect();
        let t0 = cube.time_index as usize * ts;
        self.box_cells(&lo, &hi, t0, t0 + ts)
    }

    /// Cells of the stack of `m` predecessor copies, or `None` when it leaves
    /// `K_1` through `t = 0`.
    pub fn stack_cells(&self, cube: &DyadicCube, m: u32) -> Result<Option<Vec<usize>>> {
        let pred = cube.predecessor()?;
        let s = 1usize << (self.level - pred.level);
        let ts = s * s;
        let lo: Vec<usize> = pred.index.iter().map(|&i| i as usize * s).collect();
        let hi: Vec<usize> = lo.iter().map(|l| l + s).collect();
        let b = (pred.time_index as usize + 1) * ts;
        let top = b + m as usize * ts;
        if top > self.time_cells() {
            return Ok(None);
        }
        Ok(Some(self.box_cells(&lo, &hi, b, top)))
    }

    /// Cells of the stack above a finest cell (the stack shared by all of its
    /// sub-cubes), or `None` when it leaves `K_1`.
    fn cell_stack(&self, cell: usize, m: u32) -> Option<Vec<usize>> {
        let (idx, t) = self.spatial_of(cell);
        let top = t + 1 + m as usize;
        if top > self.time_cells() {
            return None;
        }
        Some((t + 1..top).map(|tt| self.flat(&idx, tt)).collect())
    }
}

/// Reads a node set on a cell-centred grid as a lattice cell set. The grid
/// must have spacing `2^(1-L)` with nodes at spatial cell centres, time step
/// `4^(-L)` with one level per cell at the cell's upper time, and cover
/// exactly `K_1`.
pub fn cells_from_nodes(grid: &SpaceTimeGrid, nodes: &[usize]) -> Result<(DyadicLattice, Vec<bool>)> {
    let side = grid.counts()[0];
    if !side.is_power_of_two() || side < 2 {
        return Err(Error::NotDyadicAligned);
    }
    let level = side.trailing_zeros();
    let lattice = DyadicLattice::new(grid.dim(), level).map_err(|_| Error::NotDyadicAligned)?;
    let h = 2.0 / side as f64;
    let dt = 1.0 / lattice.time_cells() as f64;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let aligned = grid.counts().iter().all(|&c| c == side)
        && close(grid.h(), h)
        && close(grid.dt(), dt)
        && grid.n_time() == lattice.time_cells()
        && grid.lower().iter().all(|&l| close(l, -1.0 + h / 2.0));
    if !aligned {
        return Err(Error::NotDyadicAligned);
    }
    let mut set = vec![false; lattice.len()];
    for &n in nodes {
        if n >= grid.len() {
            return Err(Error::NotDyadicAligned);
        }
        let (lvl, s) = grid.split(n);
        let m = grid.multi_index(s);
        set[lattice.flat(&m[..grid.dim()], lvl)] = true;
    }
    Ok((lattice, set))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringReport {
    pub rho: f64,
    pub m: u32,
    pub a_measure: f64,
    pub b_measure: f64,
    pub hypothesis_measure: bool,
    pub hypothesis_stacks: bool,
    /// First dense cube whose stack is not inside `B`.
    pub offending_cube: Option<DyadicCube>,
    /// `|A| <= rho (m + 1) / m |B|`
    pub conclusion: bool,
    pub bound: f64,
    pub cubes_checked: usize,
}

impl CoveringReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypothesis_measure && self.hypothesis_stacks
    }

    /// Hypotheses imply the conclusion (vacuously true when they fail).
    pub fn consistent(&self) -> bool {
        !self.hypotheses_hold() || self.conclusion
    }
}

/// Dense cubes of every level `1..=L+1` (level `L + 1` stands in for all
/// finer cubes: their stacks lie within the cell or the `m` cells above it).
fn dense_cubes(lattice: &DyadicLattice, a: &[bool], rho: f64) -> Result<(Vec<DyadicCube>, Vec<usize>, usize)> {
    let mut dense = Vec::new();
    let mut checked = 0;
    for level in 1..=lattice.level {
        for cube in DyadicCube::level_cubes(lattice.dim, level)? {
            checked += 1;
            let cells = lattice.cube_cells(&cube);
            let count = cells.iter().filter(|&&c| a[c]).count();
            if count as f64 > rho * cells.len() as f64 {
                dense.push(cube);
            }
        }
    }
    let dense_cells: Vec<usize> = (0..lattice.len()).filter(|&c| a[c]).collect();
    checked += dense_cells.len();
    Ok((dense, dense_cells, checked))
}

pub fn covering_lemma_verify(lattice: &DyadicLattice, a: &[bool], b: &[bool], rho: f64, m: u32) -> Result<CoveringReport> {
    if a.len() != lattice.len() || b.len() != lattice.len() {
        return Err(Error::NotDyadicAligned);
    }
    if !(rho > 0.0 && rho < 1.0) || m == 0 {
        return Err(Error::InvalidArgument(format!("need rho in (0, 1) and m >= 1, got {rho}, {m}")));
    }
    if a.iter().zip(b).any(|(x, y)| *x && !*y) {
        return Err(Error::InvalidArgument("A must be a subset of B".into()));
    }
    let cell = lattice.cell_volume();
    let na = a.iter().filter(|v| **v).count();
    let nb = b.iter().filter(|v| **v).count();
    let hypothesis_measure = na as f64 <= rho * lattice.len() as f64;
    let (dense, dense_cells, cubes_checked) = dense_cubes(lattice, a, rho)?;
    let mut offending = None;
    for cube in &dense {
        let inside = lattice.stack_cells(cube, m)?.is_some_and(|cells| cells.iter().all(|&c| b[c]));
        if !inside {
            offending = Some(cube.clone());
            break;
        }
    }
    if offending.is_none() {
        for &c in &dense_cells {
            let inside = lattice.cell_stack(c, m).is_some_and(|cells| cells.iter().all(|&x| b[x]));
            if !inside {
                let (idx, t) = lattice.spatial_of(c);
                // report the finest-level cell; the offending sub-cubes lie in it
                offending = Some(DyadicCube::new(lattice.level, idx.iter().map(|&i| i as u64).collect(), t as u64)?);
                break;
            }
        }
    }
    let bound = rho * (m as f64 + 1.0) / m as f64 * nb as f64 * cell;
    Ok(CoveringReport {
        rho,
        m,
        a_measure: na as f64 * cell,
        b_measure: nb as f64 * cell,
        hypothesis_measure,
        hypothesis_stacks: offending.is_none(),
        offending_cube: offending,
        conclusion: na as f64 * cell <= bound * (1.0 + 1e-12),
        bound,
        cubes_checked,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringInstance {
    pub rho: f64,
    pub m: u32,
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

/// Random instance satisfying both hypotheses: `A` is a sparse background
/// plus a few dense clusters, all in the lower `1 / (m + 1)` of `K_1` in time
/// so that their stacks fit, and `B` is `A`, every required stack, and a
/// sprinkle of extra cells.
pub fn random_covering_instance(lattice: &DyadicLattice, rng: &mut ChaCha8Rng) -> Result<CoveringInstance> {
    let spatial = lattice.spatial_cells();
    for _ in 0..10_000 {
        let rho = rng.random_range(0.05..0.95);
        let m = rng.random_range(1..=4u32);
        let rows = lattice.time_cells() / (m as usize + 1);
        let mut a = vec![false; lattice.len()];
        let background = rng.random_range(0.0..rho * 0.5);
        for v in a[..rows * spatial].iter_mut() {
            *v = rng.random_bool(background);
        }
        for _ in 0..rng.random_range(0..4) {
            let level = rng.random_range(2..=lattice.level);
            let span = 1usize << (2 * (lattice.level - level));
            if rows < span {
                continue;
            }
            let n = 1u64 << level;
            let index = (0..lattice.dim).map(|_| rng.random_range(0..n)).collect();
            let time_index = rng.random_range(0..(rows / span) as u64);
            let cube = DyadicCube::new(level, index, time_index)?;
            let fill = rng.random_range(0.5..1.0);
            for c in lattice.cube_cells(&cube) {
                if rng.random_bool(fill) {
                    a[c] = true;
                }
            }
        }
        let na = a.iter().filter(|v| **v).count();
        if na as f64 > rho * lattice.len() as f64 {
            continue;
        }
        let mut b = a.clone();
        let (dense, dense_cells, _) = dense_cubes(lattice, &a, rho)?;
        let mut ok = true;
        for cube in &dense {
            match lattice.stack_cells(cube, m)? {
                Some(cells) => cells.into_iter().for_each(|c| b[c] = true),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        for &c in &dense_cells {
            if !ok {
                break;
            }
            match lattice.cell_stack(c, m) {
                Some(cells) => cells.into_iter().for_each(|x| b[x] = true),
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let extra = rng.random_range(0.0..0.1);
        for v in b.iter_mut() {
            if !*v && rng.random_bool(extra) {
                *v = true;
            }
        }
        return Ok(CoveringInstance { rho, m, a, b });
    }
    Err(Error::InvalidArgument("no hypothesis-satisfying instance found".into()))
}

/// Generates `trials` instances from `seed` and verifies each.
pub fn covering_lemma_trials(lattice: &DyadicLattice, trials: usize, seed: u64) -> Result<Vec<CoveringReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let inst = random_covering_instance(lattice, &mut rng)?;
            covering_lemma_verify(lattice, &inst.a, &inst.b, inst.rho, inst.m)
        })
        .collect()
}
