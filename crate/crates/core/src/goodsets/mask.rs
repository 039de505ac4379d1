use serde::{Deserialize, Serialize};

use super::touch::{opening_admits, AffineReading, TouchDomain, TouchSide};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, ParabolicCube, Region};

/// Minimal touching openings of every node of a cube, from below and above.
/// Masks at any opening are read off this profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TouchingProfile {
    pub reading: AffineReading,
    /// Grid nodes of the cube.
    pub nodes: Vec<usize>,
    pub below: Vec<f64>,
    pub above: Vec<f64>,
    /// Measure of one node cell.
    pub cell_measure: f64,
    /// Number of nodes in the touching domain.
    pub domain_nodes: usize,
}

impl TouchingProfile {
    /// Computes both openings for the nodes of `cube`; the touching domain is
    /// `region` (the whole grid when `None`) and must contain the cube nodes.
    pub fn compute(u: &GridFunction, cube: &ParabolicCube, region: Option<&dyn Region>, reading: AffineReading) -> Result<Self> {
        let grid = u.grid();
        let domain = TouchDomain::new(u, region)?;
        let nodes = grid.nodes_in(cube)?;
        if nodes.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if let Some(n) = nodes.iter().find(|&&n| !domain.contains(n)) {
            return Err(Error::Geometry(format!("cube node {n} lies outside the touching domain")));
        }
        let below = domain.minimal_openings(&nodes, TouchSide::Below, reading)?;
        let above = domain.minimal_openings(&nodes, TouchSide::Above, reading)?;
        Ok(Self { reading, nodes, below, above, cell_measure: grid.cell_volume(), domain_nodes: domain.len() })
    }

    pub fn mask(&self, opening: f64) -> GoodSetMask {
        let below: Vec<bool> = self.below.iter().map(|m| opening_admits(opening, *m)).collect();
        let above: Vec<bool> = self.above.iter().map(|m| opening_admits(opening, *m)).collect();
        let good = below.iter().zip(&above).filter(|(a, b)| **a && **b).count();
        let total = self.nodes.len();
        GoodSetMask {
            opening,
            nodes: self.nodes.clone(),
            below,
            above,
            good_measure: good as f64 * self.cell_measure,
            bad_measure: (total - good) as f64 * self.cell_measure,
            cube_measure: total as f64 * self.cell_measure,
        }
    }

    /// Smallest opening at which every cube node is good.
    pub fn saturation_opening(&self) -> f64 {
        self.below.iter().chain(&self.above).copied().fold(0.0, f64::max)
    }
}

/// Touching classification of the cube nodes at one opening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetMask {
    pub opening: f64,
    pub nodes: Vec<usize>,
    pub below: Vec<bool>,
    pub above: Vec<bool>,
    /// `|G_M ∩ K|` by node counting.
    pub good_measure: f64,
    /// `|A_M ∩ K|`
    pub bad_measure: f64,
    pub cube_measure: f64,
}

impl GoodSetMask {
    pub fn good(&self) -> Vec<bool> {
        self.below.iter().zip(&self.above).map(|(a, b)| *a && *b).collect()
    }

    pub fn bad(&self) -> Vec<bool> {
        self.good().into_iter().map(|g| !g).collect()
    }

    pub fn is_full(&self) -> bool {
        self.bad_measure == 0.0
    }

    /// Run-length encoded JSON: runs are `[value, length]` pairs in node order.
    pub fn to_rle_json(&self) -> serde_json::Value {
        serde_json::json!({
            "opening": self.opening,
            "first_node": self.nodes.first(),
            "nodes": self.nodes.len(),
            "good_measure": self.good_measure,
            "bad_measure": self.bad_measure,
            "below": run_lengths(&self.below),
            "above": run_lengths(&self.above),
        })
    }
}

pub fn run_lengths(bits: &[bool]) -> Vec<(bool, usize)> {
    let mut out: Vec<(bool, usize)> = Vec::new();
    for &b in bits {
        match out.last_mut() {
            Some((v, n)) if *v == b => *n += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

/// Masks of `u` at opening `m` on the nodes of `cube`.
pub fn good_set_mask(u: &GridFunction, m: f64, region: Option<&dyn Region>, cube: &ParabolicCube, reading: AffineReading) -> Result<GoodSetMask> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("opening must be positive, got {m}")));
    }
    Ok(TouchingProfile::compute(u, cube, region, reading)?.mask(m))
}
