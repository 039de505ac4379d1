//! Small dense linear programs `min c.x  s.t.  A x <= b,  lo <= x <= hi`
//! with few variables and many constraints.
//!
//! The problem is solved through its dual in standard form
//! `min b.y  s.t.  A^T y = -c,  y >= 0`, whose basis has one row per primal
//! variable; the primal optimum is read off the simplex multipliers. This
//! keeps every basis factorization at most `n x n` however many constraints
//! there are.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 50_000;
/// Degenerate pivots in a row before switching to Bland's rule.
const STALL_LIMIT: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    /// The objective is unbounded below, or the problem is infeasible.
    Unbounded,
    IterationLimit,
}

impl LpOutcome {
    pub fn solution(self) -> Option<Vec<f64>> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            rows: Vec::new(),
            rhs: Vec::new(),
            objective: vec![0.0; n],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> usize {
        self.rows.len()
    }

    /// Adds `coeffs . x <= rhs`.
    pub fn add_constraint(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.n, "constraint length");
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.n, "objective length");
        self.objective = c;
    }

    pub fn solve(&self) -> LpOutcome {
        let n = self.n;
        let mut cols: Vec<Vec<f64>> = self.rows.clone();
        let mut cost: Vec<f64> = self.rhs.clone();
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if hi.is_finite() {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                cols.push(e);
                cost.push(hi);
            }
            if lo.is_finite() {
                let mut e = vec![0.0; n];
                e[j] = -1.0;
                cols.push(e);
                cost.push(-lo);
            }
        }
        if n == 0 {
            return if cost.iter().all(|&b| b >= -PIVOT_TOL) {
                LpOutcome::Optimal { x: Vec::new(), objective: 0.0 }
            } else {
                LpOutcome::Infeasible
            };
        }
        let mut sign = vec![1.0; n];
        let mut r: Vec<f64> = self.objective.iter().map(|c| -c).collect();
        for i in 0..n {
            if r[i] < 0.0 {
                sign[i] = -1.0;
                r[i] = -r[i];
                for col in cols.iter_mut() {
                    col[i] = -col[i];
                }
            }
        }
        let scale = cost.iter().chain(r.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
        let mut simplex = DualSimplex { n, m: cols.len(), cols, cost, r, basis: (0..n).map(|i| usize::MAX - i).collect(), scale };
        // phase 1: minimize the artificial total
        match simplex.run(true) {
            Phase::Optimal => {}
            Phase::Unbounded => return LpOutcome::Unbounded,
            Phase::Limit => return LpOutcome::IterationLimit,
        }
        let (xb, _) = match simplex.factor() {
            Some(v) => v,
            None => return LpOutcome::IterationLimit,
        };
        let artificial: f64 = simplex.basis.iter().zip(xb.iter()).filter(|(b, _)| simplex.is_artificial(**b)).map(|(_, v)| v.max(0.0)).sum();
        if artificial > 1e-9 * scale {
            // dual infeasible: the primal is unbounded or infeasible
            return LpOutcome::Unbounded;
        }
        simplex.drive_out_artificials();
        match simplex.run(false) {
            Phase::Optimal => {}
            Phase::Unbounded => return LpOutcome::Infeasible,
            Phase::Limit => return LpOutcome::IterationLimit,
        }
        let pi = match simplex.multipliers(false) {
            Some(p) => p,
            None => return LpOutcome::IterationLimit,
        };
        let x: Vec<f64> = (0..n).map(|i| sign[i] * pi[i]).collect();
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, objective }
    }
}

enum Phase {
    Optimal,
    Unbounded,
    Limit,
}

struct DualSimplex {
    n: usize,
    m: usize,
    cols: Vec<Vec<f64>>,
    cost: Vec<f64>,
    r: Vec<f64>,
    /// Basic columns; artificial `i` is encoded as `usize::MAX - i`.
    basis: Vec<usize>,
    scale: f64,
}

impl DualSimplex {
    fn is_artificial(&self, j: usize) -> bool {
        j > self.m && j >= usize::MAX - self.n
    }

    fn column(&self, j: usize) -> DVector<f64> {
        if self.is_artificial(j) {
            let mut e = DVector::zeros(self.n);
            e[usize::MAX - j] = 1.0;
            e
        } else {
            DVector::from_column_slice(&self.cols[j])
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.n);
        for (k, &j) in self.basis.iter().enumerate() {
            b.set_column(k, &self.column(j));
        }
        b
    }

    fn factor(&self) -> Option<(DVector<f64>, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> {
        let lu = self.basis_matrix().lu();
        let xb = lu.solve(&DVector::from_column_slice(&self.r))?;
        Some((xb, lu))
    }

    fn basic_cost(&self, j: usize, phase_one: bool) -> f64 {
        match (self.is_artificial(j), phase_one) {
            (true, true) => 1.0,
            (true, false) => 0.0,
            (false, true) => 0.0,
            (false, false) => self.cost[j],
        }
    }

    fn multipliers(&self, phase_one: bool) -> Option<DVector<f64>> {
        let bt = self.basis_matrix().transpose();
        let cb = DVector::from_iterator(self.n, self.basis.iter().map(|&j| self.basic_cost(j, phase_one)));
        bt.lu().solve(&cb)
    }

    fn run(&mut self, phase_one: bool) -> Phase {
        let mut stall = 0usize;
        let mut in_basis = vec![false; self.m];
        for &j in &self.basis {
            if !self.is_artificial(j) {
                in_basis[j] = true;
            }
        }
        let dtol = 1e-10 * self.scale;
        for _ in 0..MAX_ITERATIONS {
            let (xb, lu) = match self.factor() {
                Some(v) => v,
                None => return Phase::Limit,
            };
            let pi = match self.multipliers(phase_one) {
                Some(p) => p,
                None => return Phase::Limit,
            };
            let bland = stall >= STALL_LIMIT;
            let mut entering = None;
            let mut best = -dtol;
            for j in 0..self.m {
                if in_basis[j] {
                    continue;
                }
                let c = if phase_one { 0.0 } else { self.cost[j] };
                let d = c - self.cols[j].iter().zip(pi.iter()).map(|(a, p)| a * p).sum::<f64>();
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = entering else {
                return Phase::Optimal;
            };
            let w = match lu.solve(&self.column(e)) {
                Some(w) => w,
                None => return Phase::Limit,
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.n {
                if w[i] > PIVOT_TOL {
                    let ratio = xb[i].max(0.0) / w[i];
                    let better = match leave {
                        None => true,
                        Some((k, best_ratio)) => {
                            ratio < best_ratio - 1e-14
                                || (ratio <= best_ratio + 1e-14 && (self.is_artificial(self.basis[i]) && !self.is_artificial(self.basis[k]) || (bland && self.basis[i] < self.basis[k])))
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((p, ratio)) = leave else {
                return Phase::Unbounded;
            };
            stall = if ratio <= 1e-14 { stall + 1 } else { 0 };
            let old = self.basis[p];
            if !self.is_artificial(old) {
                in_basis[old] = false;
            }
            self.basis[p] = e;
            in_basis[e] = true;
        }
        Phase::Limit
    }

    /// Replaces zero-level artificials by original columns where possible;
    /// the ones that remain sit on redundant rows.
    fn drive_out_artificials(&mut self) {
        for p in 0..self.n {
            if !self.is_artificial(self.basis[p]) {
                continue;
            }
            let Some(inv) = self.basis_matrix().try_inverse() else { return };
            let row = inv.row(p).clone_owned();
            let mut pick = None;
            let mut best = 1e-9;
            for j in 0..self.m {
                if self.basis.contains(&j) {
                    continue;
                }
                let v: f64 = self.cols[j].iter().zip(row.iter()).map(|(a, b)| a * b).sum::<f64>().abs();
                if v > best {
                    best = v;
                    pick = Some(j);
                }
            }
            if let Some(j) = pick {
                self.basis[p] = j;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> (Vec<f64>, f64) {
        match lp.solve() {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn textbook_two_variable() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.add_constraint(vec![1.0, 0.0], 4.0);
        lp.add_constraint(vec![0.0, 2.0], 12.0);
        lp.add_constraint(vec![3.0, 2.0], 18.0);
        lp.set_bounds(0, 0.0, f64::INFINITY);
        lp.set_bounds(1, 0.0, f64::INFINITY);
        lp.set_objective(vec![-3.0, -5.0]);
        let (x, obj) = optimal(&lp);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
        assert!((obj + 36.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![1.0], -1.0);
        lp.add_constraint(vec![-1.0], -1.0);
        lp.set_bounds(0, -10.0, 10.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![1.0], 1.0);
        lp.set_objective(vec![1.0]);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn chebyshev_line_fit() {
        // best uniform line through (0,0), (1,1), (2,0): y = 1/2, error 1/2
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
        let mut lp = LinearProgram::new(3);
        for (x, y) in pts {
            lp.add_constraint(vec![x, 1.0, -1.0], y);
            lp.add_constraint(vec![-x, -1.0, -1.0], -y);
        }
        for j in 0..3 {
            lp.set_bounds(j, -100.0, 100.0);
        }
        lp.set_objective(vec![0.0, 0.0, 1.0]);
        let (x, obj) = optimal(&lp);
        assert!((obj - 0.5).abs() < 1e-9);
        assert!(x[0].abs() < 1e-9 && (x[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_many_constraints() {
        // min -x - y over the unit disk polygon with 400 tangent lines
        let mut lp = LinearProgram::new(2);
        for k in 0..400 {
            let a = k as f64 * std::f64::consts::TAU / 400.0;
            lp.add_constraint(vec![a.cos(), a.sin()], 1.0);
            lp.add_constraint(vec![a.cos(), a.sin()], 1.0);
        }
        lp.set_objective(vec![-1.0, -1.0]);
        let (_, obj) = optimal(&lp);
        assert!((obj + std::f64::consts::SQRT_2).abs() < 1e-9);
    }
}
