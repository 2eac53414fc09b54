use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use pencilspec::forward::IntegratorSettings;
use pencilspec::inverse::{self, ReconstructionConfig};
use pencilspec::model::{HalfBasis, HalfExpansion, JumpCondition, PiecewiseWeight, Potentials, ProblemSpec, Side, ValidationMode};
use pencilspec::spectrum;
use pencilspec::{Error, Spectrum64};
use proptest::prelude::*;

const TRUE_P: [f64; 2] = [0.05, 0.02];
const TRUE_Q: [f64; 2] = [0.3, -0.2];

fn right() -> Potentials<f64> {
    Potentials::cosine(vec![0.0, 0.1], vec![0.5]).unwrap()
}

fn template() -> ProblemSpec<f64> {
    let pots = Potentials::split(
        HalfExpansion::new(HalfBasis::Chebyshev, TRUE_P.to_vec()),
        HalfExpansion::new(HalfBasis::Chebyshev, TRUE_Q.to_vec()),
        &right(),
    )
    .unwrap();
    ProblemSpec::new(
        PiecewiseWeight::new(0.6, 0.8),
        pots,
        [JumpCondition::new(1.0, 1.5, 0.2), JumpCondition::new(2.2, 0.8, -0.1)],
        ValidationMode::Strict,
    )
    .unwrap()
}

fn target() -> &'static Spectrum64 {
    static T: OnceLock<Spectrum64> = OnceLock::new();
    T.get_or_init(|| spectrum::compute_spectrum(&template(), 8, 1e-12).unwrap())
}

fn config() -> ReconstructionConfig {
    ReconstructionConfig {
        basis_dim: 2,
        n_eigen: 8,
        ..ReconstructionConfig::default()
    }
}

fn halves(c: &[f64]) -> (HalfExpansion<f64>, HalfExpansion<f64>) {
    (
        HalfExpansion::new(HalfBasis::Chebyshev, c[..2].to_vec()),
        HalfExpansion::new(HalfBasis::Chebyshev, c[2..].to_vec()),
    )
}

fn residual_norm(c: &[f64]) -> f64 {
    let (p, q) = halves(c);
    let r = inverse::residual_vector(&p, &q, &right(), &template(), target(), &IntegratorSettings::default()).unwrap();
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn truth() -> Vec<f64> {
    [TRUE_P, TRUE_Q].concat()
}

#[test]
fn residual_vanishes_only_at_truth() {
    assert!(residual_norm(&truth()) < 1e-8);
    let mut off = truth();
    off[3] += 0.01;
    assert!(residual_norm(&off) > 1e-5);
}

#[test]
fn jacobian_matches_central_differences() {
    let c = [0.04, 0.03, 0.25, -0.1];
    let jac = inverse::residual_jacobian(&c, &right(), &template(), target(), &config(), 1e-6).unwrap();
    assert_eq!(jac.shape(), (2 * target().len(), 4));
    let cfg = IntegratorSettings::with_tolerances(1e-13, 1e-15);
    let stacked = |c: &[f64]| {
        let (p, q) = halves(c);
        inverse::residual_vector(&p, &q, &right(), &template(), target(), &cfg)
            .unwrap()
            .iter()
            .flat_map(|z| [z.re, z.im])
            .collect::<Vec<f64>>()
    };
    for k in 0..4 {
        let h = 1e-5;
        let (mut up, mut dn) = (c.to_vec(), c.to_vec());
        up[k] += h;
        dn[k] -= h;
        let (fu, fd) = (stacked(&up), stacked(&dn));
        for i in 0..fu.len() {
            let central = (fu[i] - fd[i]) / (2.0 * h);
            let got = jac[(i, k)];
            assert!((got - central).abs() < 1e-3 * (1.0 + central.abs()), "({i}, {k}): {got} vs {central}");
        }
    }
}

#[test]
fn round_trip_recovers_coefficients_and_spectrum() {
    let r = inverse::reconstruct(&right(), &template(), target(), &config()).unwrap();
    assert!(r.converged, "{:?}", r.termination);
    for (got, want) in r.left_p.coeffs.iter().chain(&r.left_q.coeffs).zip(truth()) {
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }
    for w in r.objective_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert_eq!(r.multistart_distances, vec![vec![0.0]]);
    assert_eq!((r.starts_converged, r.starts_total), (1, 1));

    // right half is carried over untouched
    for k in 0..=20 {
        let x = FRAC_PI_2 + (PI - FRAC_PI_2) * k as f64 / 20.0;
        assert_eq!(r.recovered.eval_on(x, Side::Right), right().eval_on(x, Side::Right));
    }

    let spec = template().with_potentials(r.recovered.clone()).unwrap();
    let again = spectrum::compute_spectrum(&spec, 8, 1e-12).unwrap();
    for (a, b) in again.entries.iter().zip(&target().entries) {
        assert!((a.lambda - b.lambda).norm() < 1e-6, "{} vs {}", a.lambda, b.lambda);
    }
}

#[test]
fn starting_at_truth_returns_at_once() {
    // without the Tikhonov term the truth is itself stationary
    let cfg = ReconstructionConfig {
        regularization: 0.0,
        ..config()
    };
    let r = inverse::reconstruct_from(&right(), &template(), target(), &cfg, &truth()).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 1, "{} ({:?})", r.iterations, r.termination);
    // with it the optimum moves, but only by about the regularization weight
    let r = inverse::reconstruct_from(&right(), &template(), target(), &config(), &truth()).unwrap();
    assert!(r.converged);
    for (got, want) in r.left_p.coeffs.iter().chain(&r.left_q.coeffs).zip(truth()) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let short = ReconstructionConfig {
        n_eigen: 3,
        ..config()
    };
    assert!(matches!(
        inverse::reconstruct(&right(), &template(), target(), &short),
        Err(Error::Validation(_))
    ));
    let greedy = ReconstructionConfig {
        n_eigen: 12,
        ..config()
    };
    assert!(matches!(
        inverse::reconstruct(&right(), &template(), target(), &greedy),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        inverse::reconstruct_from(&right(), &template(), target(), &config(), &[0.0; 3]),
        Err(Error::Validation(_))
    ));
    let none = ReconstructionConfig {
        multistart: 0,
        ..config()
    };
    assert!(matches!(
        inverse::uniqueness_probe(&right(), &template(), target(), &none),
        Err(Error::Validation(_))
    ));
}

#[test]
fn l2_distances_follow_definition() {
    let a = HalfExpansion::new(HalfBasis::Chebyshev, vec![1.0]);
    let b = HalfExpansion::new(HalfBasis::Chebyshev, vec![0.0]);
    let (dp, dq) = inverse::half_l2_distance(&a, &b, &b, &b);
    assert!((dp - FRAC_PI_2.sqrt()).abs() < 1e-13);
    assert_eq!(dq, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multistart_points_are_seeded_and_bounded(seed in any::<u64>(), n in 1usize..6, d in 1usize..5) {
        let cfg = ReconstructionConfig { seed, multistart: n, basis_dim: d, ..ReconstructionConfig::default() };
        let a = inverse::multistart_points(&cfg);
        prop_assert_eq!(&a, &inverse::multistart_points(&cfg));
        prop_assert_eq!(a.len(), n);
        for s in &a {
            prop_assert_eq!(s.len(), 2 * d);
            prop_assert!(s.iter().all(|v| (-0.5..=0.5).contains(v)));
        }
    }

    #[test]
    fn half_l2_distance_is_a_metric(
        a in prop::collection::vec(-1.0f64..1.0, 1..5),
        b in prop::collection::vec(-1.0f64..1.0, 1..5),
        c in prop::collection::vec(-1.0f64..1.0, 1..5),
    ) {
        let e = |v: &Vec<f64>| HalfExpansion::new(HalfBasis::Chebyshev, v.clone());
        let d = |x: &Vec<f64>, y: &Vec<f64>| inverse::half_l2_distance(&e(x), &e(x), &e(y), &e(y)).0;
        prop_assert!(d(&a, &a) == 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-14);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}
