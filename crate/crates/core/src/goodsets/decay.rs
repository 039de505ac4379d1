use serde::{Deserialize, Serialize};

use super::mask::TouchingProfile;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::regularity::{decay_exponent_fit, parabolic_maximal, DecayFit};

/// Outcome of fitting `|A_M ∩ K| ~ C M^(-delta)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ADecay {
    Fit { delta: f64, fit: DecayFit, openings: Vec<f64>, measures: Vec<f64> },
    /// Every bad set is empty over the openings examined.
    Empty { openings: Vec<f64> },
}

impl ADecay {
    pub fn delta(&self) -> Option<f64> {
        match self {
            ADecay::Fit { delta, .. } => Some(*delta),
            ADecay::Empty { .. } => None,
        }
    }
}

/// Fits the bad-set measures of a profile against the openings.
pub fn a_decay(profile: &TouchingProfile, openings: &[f64]) -> Result<ADecay> {
    let measures: Vec<f64> = openings.iter().map(|&m| profile.mask(m).bad_measure).collect();
    a_decay_from_measures(openings, &measures)
}

pub fn a_decay_from_measures(openings: &[f64], measures: &[f64]) -> Result<ADecay> {
    if openings.len() != measures.len() {
        return Err(Error::DimensionMismatch { expected: openings.len(), got: measures.len() });
    }
    if let Some(m) = openings.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidArgument(format!("openings must be positive, got {m}")));
    }
    if measures.iter().all(|v| *v == 0.0) {
        return Ok(ADecay::Empty { openings: openings.to_vec() });
    }
    let fit = decay_exponent_fit(openings, measures)?;
    Ok(ADecay::Fit { delta: -fit.exponent, fit, openings: openings.to_vec(), measures: measures.to_vec() })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlphaBetaParams {
    /// Opening base `M > 1`; level `k` uses opening `M^k`.
    pub m: f64,
    pub c1: f64,
    pub rho: f64,
    pub k_max: usize,
    /// Exponent of the summability diagnostic `sum M^(p k) alpha_k`.
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaBetaRow {
    pub k: usize,
    pub opening: f64,
    /// `|A_{M^k} ∩ K| / |K|`
    pub alpha: f64,
    /// Fraction of cube nodes where the maximal average of `f^(d+1)` reaches
    /// `(C1 M^k)^(d+1)`.
    pub beta: f64,
    /// `alpha_{k+1} <= rho (alpha_k + beta_k)`; `None` on the last row.
    pub recursion_holds: Option<bool>,
    /// `rho^k + sum_{i<k} rho^(k-i) beta_i`
    pub envelope: f64,
    pub envelope_holds: bool,
    pub alpha_partial_sum: f64,
    pub beta_partial_sum: f64,
}

/// Least number of cube nodes for the fractions to be meaningful.
pub const MIN_CUBE_NODES: usize = 100;

/// Measures are fractions of the cube; radii for the maximal function are
/// dyadic, from 1 down to twice the grid spacing.
pub fn alpha_beta_sequences(profile: &TouchingProfile, f: &GridFunction, params: &AlphaBetaParams) -> Result<Vec<AlphaBetaRow>> {
    let AlphaBetaParams { m, c1, rho, k_max, p } = *params;
    if !(m > 1.0 && m.is_finite()) || !(c1 > 0.0) || !(rho > 0.0 && rho < 1.0) || !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("need M > 1, C1 > 0, rho in (0, 1), p > 0; got {params:?}")));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be positive".into()));
    }
    let n = profile.nodes.len();
    if n < MIN_CUBE_NODES {
        return Err(Error::TooDeep(format!("cube holds {n} nodes, fewer than {MIN_CUBE_NODES}")));
    }
    let grid = f.grid();
    let d = grid.dim();
    let powered = f.map(|v| v.abs().powi(d as i32 + 1))?;
    let mut radii = Vec::new();
    let mut r = 1.0;
    while r >= 2.0 * grid.h() {
        radii.push(r);
        r *= 0.5;
    }
    let maximal: Vec<f64> = profile
        .nodes
        .iter()
        .map(|&node| parabolic_maximal(&powered, &grid.point(node), &radii))
        .collect::<Result<_>>()?;
    let mut rows: Vec<AlphaBetaRow> = Vec::with_capacity(k_max);
    let (mut sa, mut sb) = (0.0, 0.0);
    for k in 1..=k_max {
        let opening = m.powi(k as i32);
        let mask = profile.mask(opening);
        let alpha = mask.bad_measure / mask.cube_measure;
        let threshold = (c1 * opening).powi(d as i32 + 1);
        let beta = maximal.iter().filter(|v| **v >= threshold).count() as f64 / n as f64;
        let envelope = rho.powi(k as i32) + rows.iter().map(|row| rho.powi((k - row.k) as i32) * row.beta).sum::<f64>();
        sa += m.powf(p * k as f64) * alpha;
        sb += m.powf(p * k as f64) * beta;
        if let Some(prev) = rows.last_mut() {
            prev.recursion_holds = Some(alpha <= rho * (prev.alpha + prev.beta) + 1e-15);
        }
        rows.push(AlphaBetaRow {
            k,
            opening,
            alpha,
            beta,
            recursion_holds: None,
            envelope,
            envelope_holds: alpha <= envelope + 1e-15,
            alpha_partial_sum: sa,
            beta_partial_sum: sb,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goodsets::AffineReading;
    use crate::grid::{ParabolicCube, SpaceTimeGrid};

    #[test]
    fn synthetic_inverse_law() {
        let ms = [1.0, 2.0, 4.0, 8.0, 16.0];
        let meas: Vec<f64> = ms.iter().map(|m| 3.0 / m).collect();
        let fit = a_decay_from_measures(&ms, &meas).unwrap();
        assert!((fit.delta().unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(a_decay_from_measures(&ms, &[0.0; 5]).unwrap(), ADecay::Empty { .. }));
        assert!(matches!(a_decay_from_measures(&ms, &[1.0, 0.5, 0.0, 0.0, 0.0]), Err(Error::TooFewScales(2))));
    }

    fn setup() -> (SpaceTimeGrid, ParabolicCube) {
        (SpaceTimeGrid::covering(1, &[-1.5], &[1.5], 0.125, -1.5, 1.0 / 32.0).unwrap(), ParabolicCube::unit(1).unwrap())
    }

    #[test]
    fn smooth_problem_without_source() {
        let (g, k1) = setup();
        let u = GridFunction::from_fn(g.clone(), |x, t| 0.5 * x[0] * x[0] + t).unwrap();
        let prof = TouchingProfile::compute(&u, &k1, None, AffineReading::SpaceTime).unwrap();
        let f = GridFunction::zeros(g);
        let params = AlphaBetaParams { m: 2.0, c1: 1.0, rho: 0.5, k_max: 4, p: 1.0 };
        let rows = alpha_beta_sequences(&prof, &f, &params).unwrap();
        assert!(rows.iter().all(|r| r.beta == 0.0 && r.alpha == 0.0));
        assert!(rows.iter().all(|r| r.envelope_holds));
    }

    #[test]
    fn spike_crossover() {
        // single-node spike of height H: the largest maximal average of
        // f^2 is H^2 / n_min with n_min the node count of the smallest
        // radius cylinder around the spike; beta vanishes once
        // (C1 M^k)^2 exceeds it
        let (g, k1) = setup();
        let spike = g.locate(&crate::grid::Point::new(&[0.0], -0.5).unwrap()).unwrap();
        let height = 64.0;
        let mut vals = vec![0.0; g.len()];
        vals[spike] = height;
        let f = GridFunction::new(g.clone(), vals).unwrap();
        let u = GridFunction::zeros(g.clone());
        let prof = TouchingProfile::compute(&u, &k1, None, AffineReading::SpaceTime).unwrap();
        let params = AlphaBetaParams { m: 2.0, c1: 1.0, rho: 0.5, k_max: 8, p: 1.0 };
        let rows = alpha_beta_sequences(&prof, &f, &params).unwrap();
        // smallest radius 1/4 (>= 2h): Q_{1/4} holds 3 spatial x 2 time nodes
        let peak = height * height / 6.0;
        for r in &rows {
            let threshold = (r.opening).powi(2);
            assert_eq!(r.beta > 0.0, threshold <= peak, "level {}", r.k);
        }
        assert!(rows.iter().any(|r| r.beta > 0.0) && rows.last().unwrap().beta == 0.0);
    }

    #[test]
    fn too_few_nodes() {
        let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 0.5, -1.0, 0.25).unwrap();
        let u = GridFunction::zeros(g.clone());
        let prof = TouchingProfile::compute(&u, &ParabolicCube::unit(1).unwrap(), None, AffineReading::SpaceTime).unwrap();
        let params = AlphaBetaParams { m: 2.0, c1: 1.0, rho: 0.5, k_max: 2, p: 1.0 };
        assert!(matches!(alpha_beta_sequences(&prof, &u, &params), Err(Error::TooDeep(_))));
    }
}
