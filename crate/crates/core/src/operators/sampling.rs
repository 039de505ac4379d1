//! Seeded random matrices used by the property checks and the verifiers.

use rand::Rng;

use super::SymMatrix;

/// Entries of the upper triangle uniform in `[-scale, scale]`.
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            m.set(i, j, rng.random_range(-scale..=scale));
        }
    }
    m
}

/// Random orthonormal basis (columns) by Gram-Schmidt.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= dot * ci;
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 {
            cols.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    cols
}

/// Positive semidefinite, nonzero, with a random number of zero eigenvalues
/// and the others uniform in `(0, scale]`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> SymMatrix {
    let q = random_orthonormal(rng, dim);
    let rank = rng.random_range(1..=dim);
    let values: Vec<f64> = (0..dim)
        .map(|i| if i < rank { scale * rng.random_range(0.05..=1.0) } else { 0.0 })
        .collect();
    SymMatrix::from_spectrum(&values, &q)
}

/// Symmetric with spectrum drawn uniformly from `[lo, hi]` (clipped into it).
pub fn random_spd_in<R: Rng + ?Sized>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> SymMatrix {
    let q = random_orthonormal(rng, dim);
    let values: Vec<f64> = (0..dim)
        .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect();
    SymMatrix::from_spectrum(&values, &q)
}

/// Random point of `[-1, 1]^d x [-1, 0]`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (Vec<f64>, f64) {
    let x = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    (x, rng.random_range(-1.0..=0.0))
}
