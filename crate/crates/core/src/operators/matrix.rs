use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_dim, MAX_DIM};

/// Symmetry tolerance accepted by the checked constructors.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric `d x d` matrix with `d <= 3`, stored densely.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.dim).map(|i| &self.a[i][..self.dim]).collect();
        write!(f, "SymMatrix{rows:?}")
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        Self { dim, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i][i] = c;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.a[i][i] = *v;
        }
        m.check_finite()?;
        Ok(m)
    }

    /// Checked constructor from row slices; symmetrizes after the check.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        check_dim(d)?;
        let mut m = Self::zeros(d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            m.a[i][..d].copy_from_slice(row);
        }
        m.check_finite()?;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..i {
                worst = worst.max((m.a[i][j] - m.a[j][i]).abs());
            }
        }
        if worst > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(worst));
        }
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (m.a[i][j] + m.a[j][i]);
                m.a[i][j] = v;
                m.a[j][i] = v;
            }
        }
        Ok(m)
    }

    /// Builds from the upper triangle `(i, j), i <= j`, mirroring it.
    pub fn from_upper(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.a[i][j] = v;
                m.a[j][i] = v;
            }
        }
        m
    }

    /// `v v^T`.
    pub fn rank_one(v: &[f64]) -> Self {
        Self::from_upper(v.len(), |i, j| v[i] * v[j])
    }

    fn check_finite(&self) -> Result<()> {
        if self.entries().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(())
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).flat_map(move |i| (0..self.dim).map(move |j| self.a[i][j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.a[i][..self.dim].to_vec()).collect()
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i][i]).sum()
    }

    /// `Tr(self * other)`.
    #[inline]
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.a[i][j] * other.a[i][j];
            }
        }
        s
    }

    /// `v^T M v`.
    #[inline]
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += v[i] * self.a[i][j] * v[j];
            }
        }
        s
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] *= c;
            }
        }
        m
    }

    /// `Q diag(values) Q^T` for `Q` given by columns.
    pub fn from_spectrum(values: &[f64], columns: &[Vec<f64>]) -> Self {
        let d = values.len();
        Self::from_upper(d, |i, j| (0..d).map(|k| columns[k][i] * values[k] * columns[k][j]).sum())
    }

    /// Largest absolute entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Operator norm: largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        let e = self.eigenvalues();
        e[0].abs().max(e[self.dim - 1].abs())
    }

    /// Ascending eigenvalues; the first `dim` entries of the returned array
    /// are meaningful.
    pub fn eigenvalues_array(&self) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        match self.dim {
            1 => out[0] = self.a[0][0],
            2 => {
                let (p, q, r) = (self.a[0][0], self.a[0][1], self.a[1][1]);
                let mean = 0.5 * (p + r);
                let rad = (0.5 * (p - r)).hypot(q);
                out[0] = mean - rad;
                out[1] = mean + rad;
            }
            _ => {
                let e = jacobi_eigenvalues(self.a);
                out = e;
                out.sort_by(|x, y| x.total_cmp(y));
            }
        }
        out
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues_array()[..self.dim].to_vec()
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues_array()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues_array()[self.dim - 1]
    }
}

/// Cyclic Jacobi rotations on a 3x3 symmetric matrix until the off-diagonal
/// mass drops below `1e-12` relative to the Frobenius norm.
fn jacobi_eigenvalues(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    let norm: f64 = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-12 * norm.max(f64::MIN_POSITIVE);
    for _ in 0..64 {
        let off = (2.0 * (a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2))).sqrt();
        if off <= tol {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let app = a[p][p];
            let aqq = a[q][q];
            let apq = a[p][q];
            a[p][p] = app - t * apq;
            a[q][q] = aqq + t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(mut self, rhs: SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i][j] += rhs.a[i][j];
            }
        }
        self
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(mut self, rhs: SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[i][j] -= rhs.a[i][j];
            }
        }
        self
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

impl Mul<SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, rhs: SymMatrix) -> SymMatrix {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(SymMatrix::diag(&[1.0, -1.0]).unwrap().eigenvalues(), vec![-1.0, 1.0]);
        assert_eq!(SymMatrix::identity(2).eigenvalues(), vec![1.0, 1.0]);
        // characteristic polynomial (2 - e)^2 - 1 = 0 -> e = 1, 3
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = m.eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        // [[2,1,0],[1,2,1],[0,1,2]] has eigenvalues 2 - sqrt2, 2, 2 + sqrt2
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let e = m.eigenvalues();
        let s = 2f64.sqrt();
        for (got, want) in e.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]);
        assert!(matches!(r, Err(Error::NotSymmetric(_))));
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-14, 1.0]]).is_ok());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
    }

    fn sym3() -> impl Strategy<Value = SymMatrix> {
        proptest::collection::vec(-10.0..10.0f64, 6).prop_map(|v| {
            let idx = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
            SymMatrix::from_upper(3, |i, j| v[idx[i][j]])
        })
    }

    proptest! {
        #[test]
        fn spectrum_matches_trace_and_determinant(m in sym3()) {
            let e = m.eigenvalues();
            prop_assert!(e[0] <= e[1] && e[1] <= e[2]);
            let scale = 1.0 + m.frobenius_norm();
            prop_assert!((e.iter().sum::<f64>() - m.trace()).abs() < 1e-10 * scale);
            let a = |i: usize, j: usize| m.get(i, j);
            let det = a(0,0)*(a(1,1)*a(2,2)-a(1,2)*a(2,1)) - a(0,1)*(a(1,0)*a(2,2)-a(1,2)*a(2,0))
                + a(0,2)*(a(1,0)*a(2,1)-a(1,1)*a(2,0));
            prop_assert!((e[0]*e[1]*e[2] - det).abs() < 1e-9 * scale.powi(3));
            let sumsq: f64 = e.iter().map(|v| v*v).sum();
            prop_assert!((sumsq - m.frobenius_norm().powi(2)).abs() < 1e-9 * scale * scale);
        }
    }
}
