//! Sampled verification of the structural assumptions on an operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::pucci::EllipticityPair;
use super::{sampling, OperatorSpec, SymMatrix};
use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::grid::Point;

/// Tolerance of the sampled ellipticity inequalities.
pub const ELLIPTICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EllipticitySample {
    pub x: Vec<f64>,
    pub t: f64,
    pub m: SymMatrix,
    /// Positive semidefinite increment.
    pub n: SymMatrix,
    /// Direction for operators that need one; defaults to `e_1`.
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub passed: bool,
    /// Largest amount by which either inequality is missed (0 when passing).
    pub worst_violation: f64,
    /// Extremes of `(F(M + N) - F(M)) / |N|` over the samples.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
}

/// Checks `lambda |N| <= F(x, t, M + N) - F(x, t, M) <= Lambda |N|` on each
/// sample, with `|N| = Tr(N)` (the trace norm of a PSD increment).
pub fn check_uniform_ellipticity(
    op: &OperatorSpec,
    pair: EllipticityPair,
    samples: &[EllipticitySample],
) -> Result<EllipticityReport> {
    let mut report = EllipticityReport {
        passed: true,
        worst_violation: 0.0,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        samples: samples.len(),
    };
    let mut e1 = vec![0.0; op.dim()];
    e1[0] = 1.0;
    for s in samples {
        if s.n.dim() != op.dim() || s.m.dim() != op.dim() {
            return Err(Error::DimensionMismatch { expected: op.dim(), got: s.n.dim() });
        }
        let eig = s.n.eigenvalues();
        let norm = s.n.trace();
        if eig[0] < -1e-12 * (1.0 + norm.abs()) {
            return Err(Error::NotPositiveSemidefinite(eig[0]));
        }
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("ellipticity sample increment N must be nonzero".into()));
        }
        let dir = s.direction.as_deref().unwrap_or(&e1);
        let f1 = op.evaluate(&s.x, s.t, &(s.m + s.n), Some(dir))?;
        let f0 = op.evaluate(&s.x, s.t, &s.m, Some(dir))?;
        let diff = f1 - f0;
        let tol = ELLIPTICITY_TOL * (1.0 + f1.abs().max(f0.abs()));
        let violation = (pair.lower() * norm - diff).max(diff - pair.upper() * norm).max(0.0);
        if violation > tol {
            report.passed = false;
        }
        report.worst_violation = report.worst_violation.max(violation);
        let ratio = diff / norm;
        report.min_ratio = report.min_ratio.min(ratio);
        report.max_ratio = report.max_ratio.max(ratio);
    }
    Ok(report)
}

/// Seeded samples with `(x, t)` in `[-1, 1]^d x [-1, 0]`, `M` with entries in
/// `[-scale, scale]` and random nonzero PSD increments.
pub fn ellipticity_samples(dim: usize, count: usize, scale: f64, seed: u64) -> Vec<EllipticitySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (x, t) = sampling::random_point(&mut rng, dim);
            let m = sampling::random_symmetric(&mut rng, dim, scale);
            let n = sampling::random_psd(&mut rng, dim, scale);
            let direction = Some(sampling::random_orthonormal(&mut rng, dim).swap_remove(0));
            EllipticitySample { x, t, m, n, direction }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationReport {
    pub base: Point,
    pub point: Point,
    /// `max |F(x, t, M) - F(x0, t0, M)| / (|M| + 1)` over the samples.
    pub sup: f64,
    pub samples: usize,
    pub r_max: f64,
}

const OSCILLATION_SEED: u64 = 0x05c1_11a7;

/// Deterministic sequence of matrices with operator norm at most `r_max`:
/// zero, `+-r_max I`, `+-r_max e_i e_i^T`, `+-r_max/2 (e_i + e_j)(e_i + e_j)^T`,
/// then seeded random matrices rescaled into the ball.
pub fn oscillation_matrices(dim: usize, r_max: f64, count: usize) -> Vec<SymMatrix> {
    let mut out = vec![SymMatrix::zeros(dim)];
    for s in [1.0, -1.0] {
        out.push(SymMatrix::scaled_identity(dim, s * r_max));
    }
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        for s in [1.0, -1.0] {
            out.push(SymMatrix::rank_one(&e).scale(s * r_max));
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e[j] = 1.0;
            for s in [1.0, -1.0] {
                out.push(SymMatrix::rank_one(&e).scale(0.5 * s * r_max));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(OSCILLATION_SEED);
    while out.len() < count {
        let m = sampling::random_symmetric(&mut rng, dim, 1.0);
        let n = m.operator_norm();
        if n < 1e-12 {
            continue;
        }
        let radius = if rng.random_bool(0.5) { r_max } else { r_max * rng.random_range(0.0..1.0) };
        out.push(m.scale(radius / n));
    }
    out.truncate(count.max(1));
    out
}

/// Sampled `Theta_F((x, t), (x0, t0))` with matrices of operator norm at most
/// `r_max`. Samples form a fixed prefix sequence, so the result is
/// nondecreasing in `n_samples`.
pub fn oscillation(
    op: &OperatorSpec,
    base: &Point,
    point: &Point,
    r_max: f64,
    n_samples: usize,
) -> Result<OscillationReport> {
    if base.dim() != op.dim() || point.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: point.dim() });
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("R_max must be positive, got {r_max}")));
    }
    let mut e1 = vec![0.0; op.dim()];
    e1[0] = 1.0;
    let mats = oscillation_matrices(op.dim(), r_max, n_samples);
    let mut sup: f64 = 0.0;
    for m in &mats {
        let a = op.evaluate(&point.x, point.t, m, Some(&e1))?;
        let b = op.evaluate(&base.x, base.t, m, Some(&e1))?;
        sup = sup.max((a - b).abs() / (m.operator_norm() + 1.0));
    }
    Ok(OscillationReport { base: base.clone(), point: point.clone(), sup, samples: mats.len(), r_max })
}

#[derive(Debug, Clone, Serialize)]
pub struct CordesReport {
    pub passed: bool,
    /// Largest `max_ij |a_ij / lambda - delta_ij|` among samples whose
    /// aperture is below `eps0`.
    pub worst_deviation: f64,
    /// Largest sampled aperture `e_max(a) / lambda - 1`.
    pub max_aperture: f64,
    /// Samples with aperture below `eps0` (where the implication applies).
    pub applicable: usize,
    pub samples: usize,
}

/// Checks that `|a / lambda - I|_inf < 2 eps0` wherever `a` has aperture
/// below `eps0` relative to `lambda`.
pub fn cordes_check(a: &MatrixField, lambda: f64, eps0: f64, points: &[(Vec<f64>, f64)]) -> Result<CordesReport> {
    if !(lambda > 0.0) || !(eps0 > 0.0) {
        return Err(Error::InvalidArgument("lambda and eps0 must be positive".into()));
    }
    let mut report = CordesReport {
        passed: true,
        worst_deviation: 0.0,
        max_aperture: 0.0,
        applicable: 0,
        samples: points.len(),
    };
    for (x, t) in points {
        if x.len() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: x.len() });
        }
        let m = a.eval(x, *t);
        let eig = m.eigenvalues();
        if eig[0] < lambda * (1.0 - 1e-12) {
            return Err(Error::NonElliptic(format!(
                "smallest eigenvalue {} below lambda = {lambda} at x = {x:?}, t = {t}",
                eig[0]
            )));
        }
        let aperture = eig[eig.len() - 1] / lambda - 1.0;
        report.max_aperture = report.max_aperture.max(aperture);
        if aperture < eps0 {
            report.applicable += 1;
            let dev = (m - SymMatrix::scaled_identity(a.dim(), lambda)).scale(1.0 / lambda).max_abs_entry();
            report.worst_deviation = report.worst_deviation.max(dev);
            if dev >= 2.0 * eps0 {
                report.passed = false;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    fn pair(l: f64, u: f64) -> EllipticityPair {
        EllipticityPair::new(l, u).unwrap()
    }

    #[test]
    fn ellipticity_examples() {
        for d in 1..=3 {
            let samples = ellipticity_samples(d, 200, 3.0, 5);
            let p = pair(0.5, 2.0);
            let plus = OperatorSpec::pucci_plus(d, p).unwrap();
            assert!(check_uniform_ellipticity(&plus, p, &samples).unwrap().passed);
            let tr = OperatorSpec::scaled_trace(d, 0.7).unwrap();
            let r = check_uniform_ellipticity(&tr, pair(0.7, 0.7), &samples).unwrap();
            assert!(r.passed);
            assert!((r.min_ratio - 0.7).abs() < 1e-9 && (r.max_ratio - 0.7).abs() < 1e-9);
            let three = OperatorSpec::linear(d, MatrixField::constant(SymMatrix::scaled_identity(d, 3.0)), None, pair(1.0, 2.0))
                .unwrap();
            let r = check_uniform_ellipticity(&three, pair(1.0, 2.0), &samples).unwrap();
            assert!(!r.passed);
            assert!(r.worst_violation > 0.0);
        }
    }

    #[test]
    fn rejects_indefinite_increment() {
        let op = OperatorSpec::scaled_trace(2, 1.0).unwrap();
        let s = EllipticitySample {
            x: vec![0.0, 0.0],
            t: 0.0,
            m: SymMatrix::zeros(2),
            n: SymMatrix::diag(&[1.0, -1.0]).unwrap(),
            direction: None,
        };
        assert!(matches!(check_uniform_ellipticity(&op, pair(1.0, 1.0), &[s]), Err(Error::NotPositiveSemidefinite(_))));
    }

    #[test]
    fn oscillation_examples() {
        let origin = Point::origin(2);
        let p = Point::new(&[0.3, -0.1], -0.2).unwrap();
        let plus = OperatorSpec::pucci_plus(2, pair(1.0, 2.0)).unwrap();
        assert_eq!(oscillation(&plus, &origin, &p, 10.0, 50).unwrap().sup, 0.0);

        // a = (1 + |x|) I: at M = R I the quotient is eps d R / (R + 1)
        let a = MatrixField::scalar_identity(2, ScalarField::parse("1 + sqrt(x1^2 + x2^2)", 2).unwrap());
        let op = OperatorSpec::linear(2, a, None, pair(1.0, 2.0)).unwrap();
        let eps = 0.25;
        let q = Point::new(&[eps, 0.0], 0.0).unwrap();
        let r_max = 4.0;
        let rep = oscillation(&op, &origin, &q, r_max, 40).unwrap();
        assert!(rep.sup >= eps * 2.0 * r_max / (r_max + 1.0) - 1e-12);
        assert_eq!(oscillation(&op, &q, &q, r_max, 40).unwrap().sup, 0.0);

        let mut last = 0.0;
        for n in [1, 5, 10, 40, 100] {
            let s = oscillation(&op, &origin, &q, r_max, n).unwrap().sup;
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn cordes_examples() {
        let pts: Vec<(Vec<f64>, f64)> = vec![(vec![0.0, 0.0], 0.0), (vec![0.5, -0.5], -0.5)];
        let r = cordes_check(&MatrixField::constant(SymMatrix::identity(2)), 1.0, 0.1, &pts).unwrap();
        assert!(r.passed && r.worst_deviation == 0.0);
        let eps0 = 0.1;
        let a = MatrixField::constant(SymMatrix::diag(&[1.0, 1.0 + eps0 / 2.0]).unwrap());
        let r = cordes_check(&a, 1.0, eps0, &pts).unwrap();
        assert!(r.passed);
        assert!((r.worst_deviation - eps0 / 2.0).abs() < 1e-15);
        let low = MatrixField::constant(SymMatrix::scaled_identity(2, 0.5));
        assert!(matches!(cordes_check(&low, 1.0, eps0, &pts), Err(Error::NonElliptic(_))));
    }

    #[test]
    fn cordes_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let eps0 = 0.1;
        for d in 1..=3 {
            for _ in 0..100 {
                let a = sampling::random_spd_in(&mut rng, d, 1.0, 1.0 + eps0 * 0.999);
                let pts = vec![(vec![0.0; d], 0.0)];
                let r = cordes_check(&MatrixField::constant(a), 1.0, eps0, &pts).unwrap();
                assert!(r.passed && r.applicable == 1);
            }
        }
    }
}
