use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values at or below this are treated as zero and dropped from fits.
pub const VALUE_FLOOR: f64 = 1e-15;

/// `value ~ constant * scale^exponent` from log-log least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub constant: f64,
    pub exponent: f64,
    pub r_squared: f64,
    /// Scales actually used (after dropping vanishing values).
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
}

/// Least-squares line `y = a + b x`; returns `(a, b, r^2)`.
pub(crate) fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    (a, b, r2)
}

/// Fits `value = C * scale^exponent` on the pairs with `value > 1e-15`.
pub fn decay_exponent_fit(scales: &[f64], values: &[f64]) -> Result<DecayFit> {
    if scales.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: scales.len(), got: values.len() });
    }
    let mut used_s = Vec::new();
    let mut used_v = Vec::new();
    for (&s, &v) in scales.iter().zip(values) {
        if !s.is_finite() || !v.is_finite() {
            return Err(Error::NonFinite("decay fit input"));
        }
        if s <= 0.0 {
            return Err(Error::InvalidArgument(format!("scales must be positive, got {s}")));
        }
        if v > VALUE_FLOOR {
            used_s.push(s);
            used_v.push(v);
        }
    }
    if used_s.len() < 3 {
        return Err(Error::TooFewScales(used_s.len()));
    }
    let xs: Vec<f64> = used_s.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = used_v.iter().map(|v| v.ln()).collect();
    let (a, b, r2) = linear_regression(&xs, &ys);
    Ok(DecayFit { constant: a.exp(), exponent: b, r_squared: r2, scales: used_s, values: used_v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_laws() {
        let s = [0.5, 0.25, 0.125, 0.0625];
        let v: Vec<f64> = s.iter().map(|x| x * x).collect();
        let f = decay_exponent_fit(&s, &v).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.constant - 1.0).abs() < 1e-12);
        let f = decay_exponent_fit(&s, &[3.0; 4]).unwrap();
        assert!(f.exponent.abs() < 1e-12 && f.r_squared == 1.0 && (f.constant - 3.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let s: Vec<f64> = (1..=8).map(|k| 0.5f64.powi(k)).collect();
        let v: Vec<f64> = s.iter().map(|x| 1.7 * x.powf(2.5) * (1.0 + rng.random_range(-0.01..0.01))).collect();
        let f = decay_exponent_fit(&s, &v).unwrap();
        assert!((f.exponent - 2.5).abs() < 0.05);
    }

    #[test]
    fn drops_zeros_and_needs_three() {
        let f = decay_exponent_fit(&[1.0, 0.5, 0.25, 0.125], &[1.0, 0.0, 0.0625, 0.015625]).unwrap();
        assert_eq!(f.scales.len(), 3);
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!(matches!(decay_exponent_fit(&[1.0, 0.5, 0.25], &[1.0, 0.0, 1.0]), Err(Error::TooFewScales(2))));
    }
}
