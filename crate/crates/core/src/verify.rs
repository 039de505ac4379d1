//! Property suites behind the `verify` command. Each check is a plain
//! function so that tests can call it directly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField};
use crate::goodsets::{covering_lemma_trials, AffineReading, DyadicLattice, TouchingProfile};
use crate::grid::{GridFunction, ParabolicCube, Point, SpaceTimeGrid};
use crate::operators::{
    check_uniform_ellipticity, cordes_check, ellipticity_aperture, ellipticity_samples, p_laplace_pair, pucci_minus, pucci_plus, sampling,
    EllipticityPair, IsaacsEntry, OperatorSpec, SymMatrix,
};
use crate::regularity::{campanato_seminorm, decay_exponent_fit, holder_seminorm, loglip_fit, FitMode, GrowthModel, QuadraticPolynomial};
use crate::solver::{maximum_principle_check, solve, Domain, ProblemSpec, SchemeConfig};

pub const SUITES: &[&str] = &["operators", "solver", "regularity", "goodsets", "all"];

/// Tolerance of the operator identities.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(suite: &'static str, name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check { suite, name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn random_pair(rng: &mut ChaCha8Rng) -> EllipticityPair {
    let lower = rng.random_range(0.2..2.0);
    EllipticityPair::with_aperture(lower, rng.random_range(0.0..3.0)).expect("positive constants")
}

/// One operator of every variant with ellipticity constants drawn from `rng`.
pub fn operator_variants(rng: &mut ChaCha8Rng, dim: usize) -> Result<Vec<OperatorSpec>> {
    let pair = random_pair(rng);
    let (lo, hi) = (pair.lower(), pair.upper());
    let coefficient = MatrixField::constant(sampling::random_spd_in(rng, dim, lo, hi));
    let mut families = Vec::new();
    for _ in 0..2 {
        let family = (0..2)
            .map(|_| IsaacsEntry { a: MatrixField::constant(sampling::random_spd_in(rng, dim, lo, hi)), f: ScalarField::Constant(0.0) })
            .collect();
        families.push(family);
    }
    Ok(vec![
        OperatorSpec::pucci_plus(dim, pair)?,
        OperatorSpec::pucci_minus(dim, pair)?,
        OperatorSpec::scaled_trace(dim, lo)?,
        OperatorSpec::linear(dim, coefficient, None, pair)?,
        OperatorSpec::isaacs(dim, families, pair)?,
        OperatorSpec::normalized_p_laplace(dim, rng.random_range(1.05..4.0))?,
    ])
}

/// `M+(-M) = -M-(M)`, positive homogeneity of both extremal operators, and
/// `M-(M - N) <= F(M) - F(N) <= M+(M - N)` for every operator variant.
pub fn pucci_algebra(count: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first = String::new();
    for i in 0..count {
        let d = 1 + i % 3;
        let pair = random_pair(&mut rng);
        let m = sampling::random_symmetric(&mut rng, d, 5.0);
        let n = sampling::random_symmetric(&mut rng, d, 5.0);
        let s = rng.random_range(0.0..10.0);
        let mut ok = close(pucci_plus(&m.scale(-1.0), pair), -pucci_minus(&m, pair))
            && close(pucci_plus(&m.scale(s), pair), s * pucci_plus(&m, pair))
            && close(pucci_minus(&m.scale(s), pair), s * pucci_minus(&m, pair));
        let dir = sampling::random_orthonormal(&mut rng, d).swap_remove(0);
        let (x, t) = sampling::random_point(&mut rng, d);
        for op in operator_variants(&mut rng, d)? {
            let diff = op.evaluate(&x, t, &m, Some(&dir))? - op.evaluate(&x, t, &n, Some(&dir))?;
            let lo = pucci_minus(&(m - n), op.pair());
            let hi = pucci_plus(&(m - n), op.pair());
            let tol = IDENTITY_TOL * (1.0 + diff.abs());
            if diff < lo - tol || diff > hi + tol {
                ok = false;
                if first.is_empty() {
                    first = format!("{} sandwich broken at sample {i}: {lo} <= {diff} <= {hi}", op.kind().name());
                }
            }
        }
        if !ok {
            failures += 1;
            if first.is_empty() {
                first = format!("extremal identity broken at sample {i}");
            }
        }
    }
    Ok((failures == 0, if failures == 0 { format!("{count}/{count} samples") } else { format!("{failures} failures; {first}") }))
}

/// Every variant passes the uniform ellipticity check with its own constants.
pub fn ellipticity_sandwich(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for d in 1..=3 {
        for op in operator_variants(&mut rng, d)? {
            let r = check_uniform_ellipticity(&op, op.pair(), &ellipticity_samples(d, 200, 3.0, seed + d as u64))?;
            ok &= r.passed;
            worst = worst.max(r.worst_violation);
        }
    }
    Ok((ok, format!("worst violation {worst:e}")))
}

/// Seeded smooth coefficient fields with aperture below `eps0` all satisfy
/// `|a / lambda - I|_inf < 2 eps0`.
pub fn cordes_implication(count: usize, eps0: f64, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut applicable = 0;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for i in 0..count {
        let d = 1 + i % 3;
        let lambda = rng.random_range(0.5..2.0);
        let q = sampling::random_orthonormal(&mut rng, d);
        let phases: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let freq: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..4.0)).collect();
        let field = MatrixField::func(d, move |x, t| {
            let spectrum: Vec<f64> = (0..d)
                .map(|k| lambda * (1.0 + 0.999 * eps0 * 0.5 * (1.0 + (freq[k] * (x[k] + t) + phases[k]).sin())))
                .collect();
            SymMatrix::from_spectrum(&spectrum, &q)
        });
        let points: Vec<(Vec<f64>, f64)> = (0..20).map(|_| sampling::random_point(&mut rng, d)).collect();
        let r = cordes_check(&field, lambda, eps0, &points)?;
        ok &= r.passed;
        applicable += r.applicable;
        worst = worst.max(r.worst_deviation);
    }
    Ok((ok, format!("{applicable} applicable samples, worst deviation {worst:.4} < {}", 2.0 * eps0)))
}

/// The normalized p-Laplacian carries `(min(1, p - 1), max(1, p - 1))`.
pub fn p_laplace_constants() -> Result<(bool, String)> {
    let mut ok = true;
    for i in 1..40 {
        let p = 1.0 + i as f64 * 0.1;
        let pair = p_laplace_pair(p)?;
        ok &= pair.lower() == (p - 1.0).min(1.0) && pair.upper() == (p - 1.0).max(1.0);
        let a = ellipticity_aperture(pair);
        let expected = (p - 1.0).max(1.0) / (p - 1.0).min(1.0) - 1.0;
        ok &= close(a, expected);
    }
    Ok((ok, "p in 1.1..4.9".into()))
}

fn heat_error(h: f64) -> Result<f64> {
    let spec = ProblemSpec::new(
        OperatorSpec::scaled_trace(1, 1.0)?,
        ScalarField::Constant(0.0),
        ScalarField::parse("exp(-pi^2*t)*sin(pi*x1)", 1)?,
        Domain::Box { lower: vec![0.0], upper: vec![1.0], t_start: -1.0 },
    )?;
    let r = solve(&spec, &SchemeConfig::new(h, h * h / 4.0))?;
    let g = r.u.grid();
    Ok((0..g.len())
        .map(|n| {
            let p = g.point(n);
            (r.u.value(n) - (-PI * PI * p.t).exp() * (PI * p.x[0]).sin()).abs()
        })
        .fold(0.0, f64::max))
}

/// L-inf errors of the heat solve on `h = 1/16, 1/32, 1/64` and their ratios.
pub fn heat_refinement() -> Result<(Vec<f64>, Vec<f64>)> {
    let errors = [16.0, 32.0, 64.0].iter().map(|n| heat_error(1.0 / n)).collect::<Result<Vec<f64>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok((errors, ratios))
}

fn heat_convergence() -> Result<(bool, String)> {
    let (_, ratios) = heat_refinement()?;
    Ok((ratios.iter().all(|r| (3.0..=5.0).contains(r)), format!("refinement ratios {ratios:.3?}")))
}

/// Zero-source solves with seeded boundary data and operators; returns the
/// largest excess of the interior sup over the parabolic-boundary sup.
pub fn maximum_principle_cases(count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excesses = Vec::with_capacity(count);
    for i in 0..count {
        let d = 1 + i % 2;
        let variants = operator_variants(&mut rng, d)?;
        let op = variants[i % variants.len()].clone();
        let amp: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let k: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..5.0)).collect();
        let phase = rng.random_range(0.0..2.0 * PI);
        let boundary = ScalarField::func(move |x, t| {
            let s: f64 = x.iter().zip(&k).map(|(xa, ka)| (ka * xa + phase).sin()).sum();
            amp[0] + amp[1] * s + amp[2] * (3.0 * t).cos() * x[0]
        });
        let spec = ProblemSpec::new(
            op.clone(),
            ScalarField::Constant(0.0),
            boundary,
            Domain::Box { lower: vec![-1.0; d], upper: vec![1.0; d], t_start: -0.5 },
        )?;
        let h = if d == 1 { 1.0 / 32.0 } else { 1.0 / 16.0 };
        let cfg = SchemeConfig::from_cfl(h, 0.9, d, op.pair().upper(), 0.5);
        let r = maximum_principle_check(&solve(&spec, &cfg)?, &spec);
        excesses.push(r.excess);
    }
    Ok(excesses)
}

fn maximum_principle(count: usize, seed: u64) -> Result<(bool, String)> {
    let ex = maximum_principle_cases(count, seed)?;
    let worst = ex.iter().copied().fold(0.0, f64::max);
    Ok((ex.iter().all(|e| *e <= 1e-12), format!("{count} cases, worst excess {worst:e}")))
}

fn stationary_quadratic() -> Result<(bool, String)> {
    let spec = ProblemSpec::new(
        OperatorSpec::scaled_trace(1, 1.0)?,
        ScalarField::Constant(-2.0),
        ScalarField::parse("x1^2", 1)?,
        Domain::Box { lower: vec![-1.0], upper: vec![1.0], t_start: -0.25 },
    )?;
    let r = solve(&spec, &SchemeConfig::new(0.0625, 0.0625 * 0.0625 / 2.0))?;
    let g = r.u.grid();
    let err = (0..g.len()).map(|n| (r.u.value(n) - g.point(n).x[0].powi(2)).abs()).fold(0.0, f64::max);
    Ok((err < 1e-12, format!("max deviation {err:e}")))
}

/// A seeded member of the polynomial class `a + b.x + c t + x'Dx / 2`.
pub fn random_class_member(rng: &mut ChaCha8Rng, dim: usize) -> Result<QuadraticPolynomial> {
    let b = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
    QuadraticPolynomial::new(rng.random_range(-3.0..3.0), b, rng.random_range(-3.0..3.0), sampling::random_symmetric(rng, dim, 3.0))
}

/// Largest Campanato seminorm over `count` class members (should vanish).
pub fn campanato_kernel(count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let d = 1 + i % 2;
        let h = if d == 1 { 1.0 / 32.0 } else { 1.0 / 16.0 };
        let g = SpaceTimeGrid::covering(d, &vec![-1.0; d], &vec![1.0; d], h, -1.0, h * h)?;
        let p = random_class_member(&mut rng, d)?;
        let u = GridFunction::from_fn(g, |x, t| p.eval(x, t))?;
        let r = campanato_seminorm(&u, 0.5, &Point::origin(d), &[0.75, 0.5, 0.25], FitMode::LeastSquares)?;
        worst = worst.max(r.value);
    }
    Ok(worst)
}

fn campanato_vanishes() -> Result<(bool, String)> {
    let worst = campanato_kernel(10, 11)?;
    Ok((worst <= 1e-10, format!("largest seminorm {worst:e}")))
}

fn power_law_recovery() -> Result<(bool, String)> {
    let scales: Vec<f64> = (0..6).map(|k| 0.5f64.powi(k)).collect();
    let values: Vec<f64> = scales.iter().map(|s| 3.0 * s.powf(2.5)).collect();
    let fit = decay_exponent_fit(&scales, &values)?;
    Ok(((fit.exponent - 2.5).abs() < 1e-12 && (fit.constant - 3.0).abs() < 1e-12, format!("exponent {}", fit.exponent)))
}

fn holder_of_linear() -> Result<(bool, String)> {
    let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 1.0 / 16.0, -1.0, 1.0 / 64.0)?;
    let u = GridFunction::from_fn(g, |x, _| 2.0 * x[0])?;
    let v = holder_seminorm(&u, 1.0, &ParabolicCube::unit(1)?, 1 << 20)?;
    Ok(((v - 2.0).abs() < 1e-12, format!("[2x]_1 = {v}")))
}

fn loglip_quadratic() -> Result<(bool, String)> {
    let g = SpaceTimeGrid::covering(1, &[-1.0], &[1.0], 1.0 / 64.0, -1.0, 1.0 / 4096.0)?;
    let u = GridFunction::from_fn(g, |x, _| x[0] * x[0])?;
    let r = loglip_fit(&u, &Point::origin(1), &[0.5, 0.25, 0.125, 0.0625])?;
    // the open balls hold nodes up to |x| < r, so C lies between (1 - h / r)^2 and 1
    Ok((r.preferred == GrowthModel::Quadratic && r.c_plain > 0.5 && r.c_plain <= 1.0, format!("C = {}", r.c_plain)))
}

/// The grid used by the good-set property checks: `K_1` inside a margin.
pub fn goodset_grid() -> Result<SpaceTimeGrid> {
    SpaceTimeGrid::covering(1, &[-1.5], &[1.5], 0.125, -1.5, 1.0 / 16.0)
}

/// A seeded smooth field: a few sine modes in `x` times slow time factors.
pub fn random_smooth_field(rng: &mut ChaCha8Rng, grid: &SpaceTimeGrid) -> Result<GridFunction> {
    let modes: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.5..4.0), rng.random_range(0.0..2.0 * PI), rng.random_range(-1.0..1.0)))
        .collect();
    let slope = rng.random_range(-2.0..2.0);
    GridFunction::from_fn(grid.clone(), |x, t| {
        slope * t + modes.iter().map(|(a, k, ph, c)| a * (k * x[0] + ph).sin() * (1.0 + c * t)).sum::<f64>()
    })
}

/// Openings probed by the mask checks.
pub const MASK_OPENINGS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Affine invariance, sign symmetry and monotonicity of the masks on
/// `count` seeded fields; returns the number of fields violating each.
pub fn mask_properties(count: usize, seed: u64) -> Result<[usize; 3]> {
    let grid = goodset_grid()?;
    let k1 = ParabolicCube::unit(1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = [0; 3];
    for _ in 0..count {
        let u = random_smooth_field(&mut rng, &grid)?;
        let (a, b, c) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let shifted = u.add_fn(|x, t| a + b * x[0] + c * t)?;
        let negated = u.map(|v| -v)?;
        let p = TouchingProfile::compute(&u, &k1, None, AffineReading::SpaceTime)?;
        let ps = TouchingProfile::compute(&shifted, &k1, None, AffineReading::SpaceTime)?;
        let pn = TouchingProfile::compute(&negated, &k1, None, AffineReading::SpaceTime)?;
        let masks: Vec<_> = MASK_OPENINGS.iter().map(|&m| p.mask(m)).collect();
        if MASK_OPENINGS.iter().zip(&masks).any(|(&m, mask)| {
            let s = ps.mask(m);
            s.below != mask.below || s.above != mask.above
        }) {
            bad[0] += 1;
        }
        if MASK_OPENINGS.iter().zip(&masks).any(|(&m, mask)| {
            let n = pn.mask(m);
            n.below != mask.above || n.above != mask.below
        }) {
            bad[1] += 1;
        }
        if masks.windows(2).any(|w| w[0].good().iter().zip(w[1].good()).any(|(g0, g1)| *g0 && !g1)) {
            bad[2] += 1;
        }
    }
    Ok(bad)
}

/// `max(K / 2, T)` from the largest discrete second difference `K` and time
/// slope `T` of a 1-d grid function: every opening above it touches
/// everywhere from both sides.
pub fn discrete_c11_bound(u: &GridFunction) -> f64 {
    let g = u.grid();
    let (h, dt) = (g.h(), g.dt());
    let nx = g.counts()[0];
    let mut k: f64 = 0.0;
    let mut slope: f64 = 0.0;
    for lvl in 0..g.n_time() {
        let row = u.slice(lvl);
        for i in 1..nx - 1 {
            k = k.max(((row[i + 1] - 2.0 * row[i] + row[i - 1]) / (h * h)).abs());
        }
        if lvl + 1 < g.n_time() {
            let next = u.slice(lvl + 1);
            for i in 0..nx {
                slope = slope.max(((next[i] - row[i]) / dt).abs());
            }
        }
    }
    (k / 2.0).max(slope)
}

/// Number of the `count` seeded smooth fields whose bad set is nonempty at
/// some opening at or above their discrete bound.
pub fn smooth_fields_saturate(count: usize, seed: u64) -> Result<usize> {
    let grid = goodset_grid()?;
    let k1 = ParabolicCube::unit(1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..count {
        let u = random_smooth_field(&mut rng, &grid)?;
        let m0 = discrete_c11_bound(&u);
        let p = TouchingProfile::compute(&u, &k1, None, AffineReading::SpaceTime)?;
        if [m0, 2.0 * m0, 8.0 * m0].iter().any(|&m| !p.mask(m).is_full()) {
            bad += 1;
        }
    }
    Ok(bad)
}

fn covering_lemma() -> Result<(bool, String)> {
    let lattice = DyadicLattice::new(2, 3)?;
    let reports = covering_lemma_trials(&lattice, 200, 2024)?;
    let passed = reports.iter().filter(|r| r.hypotheses_hold() && r.conclusion).count();
    Ok((passed == reports.len(), format!("{passed}/{} instances", reports.len())))
}

fn suite_checks(suite: &'static str) -> Vec<Check> {
    match suite {
        "operators" => vec![
            timed(suite, "extremal identities and sandwich", || pucci_algebra(1000, 1)),
            timed(suite, "ellipticity check on own constants", || ellipticity_sandwich(2)),
            timed(suite, "small aperture implies near identity", || cordes_implication(500, 0.1, 3)),
            timed(suite, "p-Laplacian ellipticity constants", p_laplace_constants),
        ],
        "solver" => vec![
            timed(suite, "heat refinement ratios in [3, 5]", heat_convergence),
            timed(suite, "discrete maximum principle", || maximum_principle(20, 4)),
            timed(suite, "stationary quadratic", stationary_quadratic),
        ],
        "regularity" => vec![
            timed(suite, "Campanato vanishes on the class", campanato_vanishes),
            timed(suite, "power law recovery", power_law_recovery),
            timed(suite, "Lipschitz constant of a linear field", holder_of_linear),
            timed(suite, "quadratic growth model", loglip_quadratic),
        ],
        "goodsets" => vec![
            timed(suite, "mask invariances", || {
                let bad = mask_properties(10, 5)?;
                Ok((bad == [0, 0, 0], format!("violations affine/sign/monotone {bad:?}")))
            }),
            timed(suite, "smooth fields saturate", || {
                let bad = smooth_fields_saturate(10, 6)?;
                Ok((bad == 0, format!("{bad} fields with bad points")))
            }),
            timed(suite, "stacked covering inequality", covering_lemma),
        ],
        _ => Vec::new(),
    }
}

/// Runs one suite or all of them.
pub fn run_suite(name: &str) -> Result<Vec<Check>> {
    let names: Vec<&'static str> = match name {
        "all" => SUITES[..4].to_vec(),
        other => vec![*SUITES[..4].iter().find(|s| **s == other).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown suite `{other}`; choose one of {}", SUITES.join(", ")))
        })?],
    };
    Ok(names.into_iter().flat_map(suite_checks).collect())
}

pub fn format_table(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{:<4} {:<10} {:<40} {:>7.2}s  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.seconds,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(s, "{} checks, {} failed", checks.len(), failed);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_suite_passes() {
        let checks = run_suite("operators").unwrap();
        assert!(checks.iter().all(|c| c.passed), "{}", format_table(&checks));
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("everything"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn discrete_bound_of_a_parabola() {
        let g = goodset_grid().unwrap();
        let u = GridFunction::from_fn(g, |x, t| 1.5 * x[0] * x[0] - 0.5 * t).unwrap();
        assert!((discrete_c11_bound(&u) - 1.5).abs() < 1e-9);
    }
}
