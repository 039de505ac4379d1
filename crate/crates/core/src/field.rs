//! Scalar and matrix-valued coefficient fields over space-time.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{GridFunction, MAX_DIM};
use crate::operators::SymMatrix;

pub type FieldFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
pub type MatrixFn = dyn Fn(&[f64], f64) -> SymMatrix + Send + Sync;

#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Expr(Expr),
    /// Multilinear interpolation of gridded values, clamped to the grid.
    Table(Arc<GridFunction>),
    Func(Arc<FieldFn>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Expr(e) => write!(f, "Expr({})", e.source()),
            ScalarField::Table(g) => write!(f, "Table({} nodes)", g.grid().len()),
            ScalarField::Func(_) => write!(f, "Func"),
        }
    }
}

impl ScalarField {
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let e = Expr::parse(src, dim)?;
        if e.is_constant() {
            Ok(ScalarField::Constant(e.eval(&[0.0; MAX_DIM], 0.0)))
        } else {
            Ok(ScalarField::Expr(e))
        }
    }

    pub fn func(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Func(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Expr(e) => e.eval(x, t),
            ScalarField::Table(g) => interpolate(g, x, t),
            ScalarField::Func(f) => f(x, t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }

    /// Human-readable description used in manifests.
    pub fn describe(&self) -> String {
        match self {
            ScalarField::Constant(c) => format!("{c}"),
            ScalarField::Expr(e) => e.source().to_string(),
            ScalarField::Table(_) => "<table>".into(),
            ScalarField::Func(_) => "<closure>".into(),
        }
    }
}

fn interpolate(g: &GridFunction, x: &[f64], t: f64) -> f64 {
    let grid = g.grid();
    let d = grid.dim();
    let mut base = [0usize; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for a in 0..d {
        let n = grid.counts()[a];
        let f = ((x[a] - grid.lower()[a]) / grid.h()).clamp(0.0, (n - 1) as f64);
        let i = (f.floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = f - i as f64;
    }
    let nt = grid.n_time();
    let ft = ((nt - 1) as f64 + t / grid.dt()).clamp(0.0, (nt - 1) as f64);
    let (l0, wt) = if nt == 1 {
        (0, 0.0)
    } else {
        let l = (ft.floor() as usize).min(nt - 2);
        (l, ft - l as f64)
    };
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut m = [0usize; MAX_DIM];
        for a in 0..d {
            let bit = (corner >> a) & 1;
            m[a] = base[a] + bit;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if w == 0.0 {
            continue;
        }
        let s = grid.flat_index(&m[..d]);
        let v0 = g.at(l0, s);
        let v = if wt > 0.0 { (1.0 - wt) * v0 + wt * g.at(l0 + 1, s) } else { v0 };
        acc += w * v;
    }
    acc
}

/// Symmetric-matrix-valued field `a(x, t)`.
#[derive(Clone)]
pub enum MatrixField {
    Constant(SymMatrix),
    /// Upper-triangular entries in row-major order `(0,0), (0,1), .., (d-1,d-1)`.
    Entries { dim: usize, entries: Vec<ScalarField> },
    Func { dim: usize, f: Arc<MatrixFn> },
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Constant(m) => write!(f, "Constant({m:?})"),
            MatrixField::Entries { entries, .. } => f.debug_list().entries(entries).finish(),
            MatrixField::Func { dim, .. } => write!(f, "Func(dim = {dim})"),
        }
    }
}

impl MatrixField {
    pub fn constant(m: SymMatrix) -> Self {
        MatrixField::Constant(m)
    }

    pub fn func(dim: usize, f: impl Fn(&[f64], f64) -> SymMatrix + Send + Sync + 'static) -> Self {
        MatrixField::Func { dim, f: Arc::new(f) }
    }

    /// `c(x, t) I`.
    pub fn scalar_identity(dim: usize, c: ScalarField) -> Self {
        let entries = (0..dim)
            .flat_map(|i| (i..dim).map(move |j| (i, j)))
            .map(|(i, j)| if i == j { c.clone() } else { ScalarField::Constant(0.0) })
            .collect();
        MatrixField::Entries { dim, entries }
    }

    /// Upper-triangular entry list; expects `d (d + 1) / 2` fields.
    pub fn from_entries(dim: usize, entries: Vec<ScalarField>) -> Result<Self> {
        crate::grid::check_dim(dim)?;
        let want = dim * (dim + 1) / 2;
        if entries.len() != want {
            return Err(Error::Operator(format!(
                "coefficient field needs {want} upper-triangular entries, got {}",
                entries.len()
            )));
        }
        if entries.iter().all(|e| e.is_constant()) {
            let vals: Vec<f64> = entries.iter().map(|e| e.eval(&[0.0; MAX_DIM], 0.0)).collect();
            let mut k = 0;
            let mut m = SymMatrix::zeros(dim);
            for i in 0..dim {
                for j in i..dim {
                    m.set(i, j, vals[k]);
                    k += 1;
                }
            }
            return Ok(MatrixField::Constant(m));
        }
        Ok(MatrixField::Entries { dim, entries })
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixField::Constant(m) => m.dim(),
            MatrixField::Entries { dim, .. } | MatrixField::Func { dim, .. } => *dim,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> SymMatrix {
        match self {
            MatrixField::Constant(m) => *m,
            MatrixField::Entries { dim, entries } => {
                let mut m = SymMatrix::zeros(*dim);
                let mut k = 0;
                for i in 0..*dim {
                    for j in i..*dim {
                        m.set(i, j, entries[k].eval(x, t));
                        k += 1;
                    }
                }
                m
            }
            MatrixField::Func { f, .. } => f(x, t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixField::Constant(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceTimeGrid;

    #[test]
    fn parse_folds_constants() {
        assert!(matches!(ScalarField::parse("2*pi", 1).unwrap(), ScalarField::Constant(_)));
        let f = ScalarField::parse("x1 + t", 2).unwrap();
        assert_eq!(f.eval(&[1.0, 5.0], -0.5), 0.5);
    }

    #[test]
    fn table_interpolation_is_exact_on_multilinear_data() {
        let g = SpaceTimeGrid::covering(2, &[-1.0, -1.0], &[1.0, 1.0], 0.25, -1.0, 0.125).unwrap();
        let f = |x: &[f64], t: f64| 1.0 + 2.0 * x[0] - x[1] + 3.0 * t + x[0] * x[1] * t;
        let table = ScalarField::Table(Arc::new(GridFunction::from_fn(g, f).unwrap()));
        for (x, t) in [([0.1, -0.33], -0.07), ([-1.0, 1.0], -1.0), ([0.9, 0.61], 0.0)] {
            assert!((table.eval(&x, t) - f(&x, t)).abs() < 1e-12);
        }
        // clamped outside the grid
        assert!((table.eval(&[5.0, 0.0], 0.0) - f(&[1.0, 0.0], 0.0)).abs() < 1e-12);
    }

    #[test]
    fn matrix_entries() {
        let a = MatrixField::from_entries(
            2,
            vec![ScalarField::parse("1 + x1^2", 2).unwrap(), ScalarField::Constant(0.5), ScalarField::Constant(2.0)],
        )
        .unwrap();
        let m = a.eval(&[2.0, 0.0], 0.0);
        assert_eq!(m.rows(), vec![vec![5.0, 0.5], vec![0.5, 2.0]]);
        assert!(MatrixField::from_entries(2, vec![ScalarField::Constant(1.0)]).is_err());
        assert!(MatrixField::from_entries(1, vec![ScalarField::Constant(3.0)]).unwrap().is_constant());
    }
}
