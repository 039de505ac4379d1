use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use aperture::goodsets::{covering_lemma_trials, AffineReading, DyadicLattice, TouchingProfile};
use aperture::grid::{ParabolicCube, Point};
use aperture::operators::{ellipticity_aperture, p_laplace_pair, pucci_minus, pucci_plus, EllipticityPair, SymMatrix};
use aperture::regularity::{campanato_seminorm, decay_exponent_fit, FitMode};
use aperture::verify;

const TOL: f64 = 1e-9;

fn sym(dim: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-10.0..10.0f64, dim * (dim + 1) / 2).prop_map(move |e| {
        let mut m = SymMatrix::zeros(dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, e[k]);
                k += 1;
            }
        }
        m
    })
}

fn pair() -> impl Strategy<Value = EllipticityPair> {
    (0.1..2.0f64, 0.0..3.0f64).prop_map(|(l, a)| EllipticityPair::with_aperture(l, a).unwrap())
}

fn sum(a: &SymMatrix, b: &SymMatrix, sign: f64) -> SymMatrix {
    SymMatrix::from_upper(a.dim(), |i, j| a.get(i, j) + sign * b.get(i, j))
}

proptest! {
    #[test]
    fn extremal_operators_are_dual((m, p) in (1usize..=3).prop_flat_map(|d| (sym(d), pair()))) {
        let neg = m.scale(-1.0);
        prop_assert!((pucci_plus(&neg, p) + pucci_minus(&m, p)).abs() <= TOL);
        prop_assert!(pucci_minus(&m, p) <= pucci_plus(&m, p) + TOL);
    }

    #[test]
    fn extremal_operators_are_homogeneous((m, p) in (1usize..=3).prop_flat_map(|d| (sym(d), pair())), c in 0.0..5.0f64) {
        let scaled = m.scale(c);
        prop_assert!((pucci_plus(&scaled, p) - c * pucci_plus(&m, p)).abs() <= TOL * (1.0 + c * 30.0));
        prop_assert!((pucci_minus(&scaled, p) - c * pucci_minus(&m, p)).abs() <= TOL * (1.0 + c * 30.0));
    }

    #[test]
    fn maximal_operator_is_subadditive((a, b, p) in (1usize..=3).prop_flat_map(|d| (sym(d), sym(d), pair()))) {
        let s = sum(&a, &b, 1.0);
        prop_assert!(pucci_plus(&s, p) <= pucci_plus(&a, p) + pucci_plus(&b, p) + TOL);
        prop_assert!(pucci_minus(&s, p) >= pucci_minus(&a, p) + pucci_minus(&b, p) - TOL);
    }

    #[test]
    fn p_laplace_constants_bracket_one(p in 1.01..10.0f64) {
        let pr = p_laplace_pair(p).unwrap();
        prop_assert!(pr.lower() <= 1.0 && pr.upper() >= 1.0);
        prop_assert!((ellipticity_aperture(pr) - ((p - 1.0).max(1.0) / (p - 1.0).min(1.0) - 1.0)).abs() <= TOL);
    }

    #[test]
    fn power_laws_are_recovered(c in 0.01..100.0f64, e in 0.1..4.0f64) {
        let scales: Vec<f64> = (0..5).map(|k| 0.5f64.powi(k)).collect();
        let values: Vec<f64> = scales.iter().map(|s| c * s.powf(e)).collect();
        let fit = decay_exponent_fit(&scales, &values).unwrap();
        prop_assert!((fit.exponent - e).abs() < 1e-9);
        prop_assert!((fit.constant / c - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn campanato_ignores_class_members(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = verify::goodset_grid().unwrap();
        let u = verify::random_smooth_field(&mut rng, &grid).unwrap();
        let p = verify::random_class_member(&mut rng, 1).unwrap();
        let v = u.add_fn(|x, t| p.eval(x, t)).unwrap();
        let radii = [1.0, 0.5];
        let a = campanato_seminorm(&u, 0.5, &Point::origin(1), &radii, FitMode::LeastSquares).unwrap().value;
        let b = campanato_seminorm(&v, 0.5, &Point::origin(1), &radii, FitMode::LeastSquares).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn bad_sets_shrink_as_the_opening_grows(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = verify::random_smooth_field(&mut rng, &verify::goodset_grid().unwrap()).unwrap();
        let profile = TouchingProfile::compute(&u, &ParabolicCube::unit(1).unwrap(), None, AffineReading::SpaceTime).unwrap();
        let measures: Vec<f64> = verify::MASK_OPENINGS.iter().map(|&m| profile.mask(m).bad_measure).collect();
        prop_assert!(measures.windows(2).all(|w| w[1] <= w[0]), "{:?}", measures);
        prop_assert!(profile.mask(verify::discrete_c11_bound(&u)).is_full());
    }

    #[test]
    fn covering_conclusion_holds(seed in 0u64..1_000_000, dim in 1usize..=2) {
        let reports = covering_lemma_trials(&DyadicLattice::new(dim, 3).unwrap(), 3, seed).unwrap();
        for r in reports {
            prop_assert!(r.hypotheses_hold() && r.conclusion);
            prop_assert!(r.consistent());
        }
    }
}
