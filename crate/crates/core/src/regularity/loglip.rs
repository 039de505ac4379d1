use serde::{Deserialize, Serialize};

use super::constrained::cylinder_within;
use super::derivatives::gradient;
use super::fit::VALUE_FLOOR;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, ParabolicCylinder, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `m(r) ~ C r^2`
    Quadratic,
    /// `m(r) ~ C r^2 log(1/r)`
    QuadraticLog,
    /// All moduli vanish.
    Degenerate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogLipReport {
    pub radii: Vec<f64>,
    /// `m(r) = sup_{Q_r} |u - u(c) - Du(c).(x - x_c)|`
    pub moduli: Vec<f64>,
    pub c_plain: f64,
    pub c_log: f64,
    /// Sums of squared log-residuals of the two models.
    pub ssr_plain: f64,
    pub ssr_log: f64,
    pub preferred: GrowthModel,
}

pub const LOGLIP_MIN_SCALES: usize = 4;

/// Deviation of `u` from its first-order spatial Taylor polynomial at
/// `center`, fitted against `r^2` and `r^2 log(1/r)`.
pub fn loglip_fit(u: &GridFunction, center: &Point, radii: &[f64]) -> Result<LogLipReport> {
    let grid = u.grid();
    let d = grid.dim();
    if center.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: center.dim() });
    }
    if radii.len() < LOGLIP_MIN_SCALES {
        return Err(Error::TooFewScales(radii.len()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::InvalidArgument(format!("radii must lie in (0, 1), got {r}")));
    }
    let node = grid.locate(center).ok_or(Error::NearBoundary)?;
    let (level, s) = grid.split(node);
    if !grid.has_stencil(s, 1) {
        return Err(Error::NearBoundary);
    }
    let xc = grid.spatial_coords(s);
    let u0 = u.value(node);
    let du = gradient(grid, u.slice(level), s);
    let mut moduli = Vec::with_capacity(radii.len());
    for &r in radii {
        let cyl = ParabolicCylinder::new(center.clone(), r)?;
        cylinder_within(grid, &cyl)?;
        let m = grid
            .nodes_in(&cyl)?
            .into_iter()
            .map(|nd| {
                let (_, sn) = grid.split(nd);
                let x = grid.spatial_coords(sn);
                let lin: f64 = (0..d).map(|a| du[a] * (x[a] - xc[a])).sum();
                (u.value(nd) - u0 - lin).abs()
            })
            .fold(0.0, f64::max);
        moduli.push(m);
    }
    let used: Vec<(f64, f64)> = radii.iter().copied().zip(moduli.iter().copied()).filter(|(_, m)| *m > VALUE_FLOOR).collect();
    if used.len() < 2 {
        return Ok(LogLipReport {
            radii: radii.to_vec(),
            moduli,
            c_plain: 0.0,
            c_log: 0.0,
            ssr_plain: 0.0,
            ssr_log: 0.0,
            preferred: GrowthModel::Degenerate,
        });
    }
    // log m = log C + log g(r); the least-squares log C is the mean offset
    let fit = |g: &dyn Fn(f64) -> f64| {
        let offsets: Vec<f64> = used.iter().map(|(r, m)| m.ln() - g(*r).ln()).collect();
        let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let ssr = offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>();
        (mean.exp(), ssr)
    };
    let (c_plain, ssr_plain) = fit(&|r| r * r);
    let (c_log, ssr_log) = fit(&|r| r * r * (1.0 / r).ln());
    let preferred = if ssr_log < ssr_plain { GrowthModel::QuadraticLog } else { GrowthModel::Quadratic };
    Ok(LogLipReport { radii: radii.to_vec(), moduli, c_plain, c_log, ssr_plain, ssr_log, preferred })
}
