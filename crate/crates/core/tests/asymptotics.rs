use std::f64::consts::{FRAC_PI_2, PI};

use pencilspec::asymptotics::{self, AsymptoticCoefficients, EstimateSource, PhaseMaps};
use pencilspec::forward::{self, IntegratorSettings};
use pencilspec::model::{JumpCondition, PiecewiseWeight, Potentials, ProblemSpec, ValidationMode};
use pencilspec::C64;
use proptest::prelude::*;

fn relaxed(alpha: f64, beta: f64, pots: Potentials<f64>, jumps: [JumpCondition<f64>; 2]) -> ProblemSpec<f64> {
    ProblemSpec::new(PiecewiseWeight::new(alpha, beta), pots, jumps, ValidationMode::Relaxed).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// The leading term written out term by term, with `p` integrals by Simpson's rule.
fn phi0_oracle(alpha: f64, beta: f64, j: [(f64, f64, f64); 2], p: &[f64], lam: C64, x: f64) -> C64 {
    let pf = |s: f64| p.iter().enumerate().map(|(k, c)| c * (k as f64 * s).cos()).sum::<f64>();
    let [(a1, al1, g1), (a2, al2, g2)] = j;
    let (be1, be2) = (1.0 / al1, 1.0 / al2);
    let cs = |phase: f64, shift: f64| (lam * phase - shift).cos();
    if x < FRAC_PI_2 {
        let v = simpson(pf, a1, x) / alpha;
        let xp = alpha * x - alpha * a1 + a1;
        let xm = -alpha * x + alpha * a1 + a1;
        return (0.5 * (al1 + be1 / alpha) + g1 / (2.0 * alpha)) * cs(xp, v)
            + (0.5 * (al1 - be1 / alpha) - g1 / (2.0 * alpha)) * cs(xm, -v);
    }
    let t = simpson(pf, a2, x) / beta;
    let xp2 = alpha * a2 - alpha * a1 + a1;
    let xm2 = -alpha * a2 + alpha * a1 + a1;
    let bp = 0.5 * (al2 + alpha * be2 / beta);
    let bm = 0.5 * (al2 - alpha * be2 / beta);
    let g = g2 / (2.0 * beta);
    (bp + g) * cs(xp2 + beta * (x - a2), t)
        + (bm + g) * cs(xp2 - beta * (x - a2), t)
        + (bm - g) * cs(xm2 + beta * (x - a2), -t)
        + (bp - g) * cs(xm2 - beta * (x - a2), -t)
}

fn two_piece(alpha: f64, beta: f64) -> ProblemSpec<f64> {
    relaxed(
        alpha,
        beta,
        Potentials::zero(),
        [JumpCondition::trivial(0.0), JumpCondition::trivial(FRAC_PI_2)],
    )
}

fn two_piece_delta(alpha: f64, beta: f64, l: f64) -> f64 {
    let (u, v) = (alpha * l * FRAC_PI_2, beta * l * FRAC_PI_2);
    u.cos() * v.cos() - alpha / beta * u.sin() * v.sin()
}

#[test]
fn phi0_matches_oracle_on_generic_problem() {
    let j = [(1.0, 1.5, 0.2), (2.2, 0.8, -0.1)];
    let p = [0.05, 0.1, -0.03];
    let spec = relaxed(
        0.6,
        0.8,
        Potentials::cosine(p.to_vec(), vec![0.3]).unwrap(),
        j.map(|(l, a, g)| JumpCondition::new(l, a, g)),
    );
    for x in [FRAC_PI_2 / 2.0, 1.2, 2.0, 2.9, PI] {
        for lam in [C64::new(10.0, 0.0), C64::new(3.3, 0.2)] {
            let got = asymptotics::phi0(&spec, lam, x).unwrap();
            let want = phi0_oracle(0.6, 0.8, j, &p, lam, x);
            assert!((got - want).norm() < 1e-10, "x = {x}, {lam}: {got} vs {want}");
        }
    }
}

#[test]
fn estimates_match_closed_form_zeros() {
    let spec = two_piece(0.6, 0.8);
    let est = asymptotics::eigenvalue_estimates(&spec, 12).unwrap();
    assert_eq!(est.source, EstimateSource::Asymptotic);
    assert!(!est.degenerate);
    let mut oracle = Vec::new();
    let mut x: f64 = 0.0;
    while oracle.len() < 12 {
        let (fa, fb) = (two_piece_delta(0.6, 0.8, x), two_piece_delta(0.6, 0.8, x + 1e-3));
        if fa * fb < 0.0 {
            let (mut a, mut b) = (x, x + 1e-3);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if (two_piece_delta(0.6, 0.8, m) < 0.0) == (fa < 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            oracle.push(0.5 * (a + b));
        }
        x += 1e-3;
    }
    for (e, o) in est.values.iter().zip(&oracle) {
        assert!((e - o).abs() < 1e-9, "{e} vs {o}");
    }
    assert!(oracle.last().unwrap() < &40.0);
}

#[test]
fn char_fn_estimates_track_delta() {
    let spec = relaxed(
        0.6,
        0.8,
        Potentials::cosine(vec![], vec![0.4]).unwrap(),
        [JumpCondition::new(1.0, 1.5, 0.0), JumpCondition::new(2.2, 0.8, 0.0)],
    );
    let cfg = IntegratorSettings::default();
    let est = asymptotics::eigenvalue_estimates_with(&spec, 6, EstimateSource::CharFn, &cfg).unwrap();
    assert_eq!(est.source, EstimateSource::CharFn);
    for v in est.values {
        let d = forward::char_fn(&spec, C64::new(v, 0.0), &cfg).unwrap();
        let dd = forward::char_fn_derivative(&spec, C64::new(v, 0.0), &cfg).unwrap();
        assert!(d.norm() < 1e-8 * dd.norm().max(1.0), "{v}: {d}");
    }
}

#[test]
fn remainder_growth_ratio_edge_cases() {
    assert!(asymptotics::remainder_growth_ratio::<f64>(&[]).is_none());
    let spec = two_piece(0.6, 0.8);
    let cfg = IntegratorSettings::default();
    let rows = asymptotics::remainder_report(&spec, &[1.0, 5.0, 9.0], &cfg).unwrap();
    // Delta0 = 2 Delta here, so the remainder is |Delta| itself
    for r in &rows {
        assert!((r.abs_diff - two_piece_delta(0.6, 0.8, r.lambda).abs()).abs() < 1e-9);
        assert!((r.scaled_diff - r.lambda * r.abs_diff).abs() < 1e-12);
    }
}

fn jump_pair() -> impl Strategy<Value = [(f64, f64, f64); 2]> {
    (0.2f64..1.4, 1.7f64..3.0, 0.5f64..2.0, -0.5f64..0.5, 0.5f64..2.0, -0.5f64..0.5)
        .prop_map(|(l1, l2, a1, g1, a2, g2)| [(l1, a1, g1), (l2, a2, g2)])
}

fn to_jumps(j: [(f64, f64, f64); 2]) -> [JumpCondition<f64>; 2] {
    j.map(|(l, a, g)| JumpCondition::new(l, a, g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi0_agrees_with_term_by_term_oracle(
        alpha in 0.3f64..1.5,
        beta in 0.3f64..1.5,
        j in jump_pair(),
        p in prop::collection::vec(-0.5f64..0.5, 0..4),
        re in 0.0f64..20.0,
        im in -0.3f64..0.3,
        x in 0.0f64..PI,
    ) {
        prop_assume!((x - FRAC_PI_2).abs() > 1e-6);
        let spec = relaxed(alpha, beta, Potentials::cosine(p.clone(), vec![]).unwrap(), to_jumps(j));
        let lam = C64::new(re, im);
        let got = asymptotics::phi0(&spec, lam, x).unwrap();
        let want = phi0_oracle(alpha, beta, j, &p, lam, x);
        prop_assert!((got - want).norm() < 1e-9 * (1.0 + want.norm()), "{} vs {}", got, want);
    }

    #[test]
    fn phi0_is_even_without_p(
        alpha in 0.3f64..1.5,
        beta in 0.3f64..1.5,
        j in jump_pair(),
        re in 0.0f64..20.0,
        im in -0.5f64..0.5,
        x in 0.0f64..PI,
    ) {
        prop_assume!((x - FRAC_PI_2).abs() > 1e-6);
        let spec = relaxed(alpha, beta, Potentials::zero(), to_jumps(j));
        let lam = C64::new(re, im);
        let a = asymptotics::phi0(&spec, lam, x).unwrap();
        let b = asymptotics::phi0(&spec, -lam, x).unwrap();
        prop_assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn delta0_is_bounded_on_the_real_axis(
        alpha in 0.3f64..1.5,
        beta in 0.3f64..1.5,
        j in jump_pair(),
        p in prop::collection::vec(-0.5f64..0.5, 0..4),
        l in 0.0f64..50.0,
    ) {
        let spec = relaxed(alpha, beta, Potentials::cosine(p, vec![]).unwrap(), to_jumps(j));
        let bound: f64 = AsymptoticCoefficients::of(&spec).right_amplitudes().iter().map(|a| a.abs()).sum();
        let d = asymptotics::char_fn0(&spec, C64::new(l, 0.0)).unwrap();
        prop_assert!(d.im.abs() < 1e-12);
        prop_assert!(d.norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn coefficients_and_phases_satisfy_identities(
        alpha in 0.3f64..1.5,
        beta in 0.3f64..1.5,
        j in jump_pair(),
        x in 0.0f64..PI,
    ) {
        let spec = relaxed(alpha, beta, Potentials::zero(), to_jumps(j));
        let c = AsymptoticCoefficients::of(&spec);
        prop_assert!((c.beta1_plus + c.beta1_minus - j[0].1).abs() < 1e-14);
        prop_assert!((c.beta2_plus + c.beta2_minus - j[1].1).abs() < 1e-14);
        let amps = c.right_amplitudes();
        prop_assert!((amps.iter().sum::<f64>() - 2.0 * j[1].1).abs() < 1e-13);
        let m = PhaseMaps::of(&spec);
        prop_assert!((m.xi_plus(x) + m.xi_minus(x) - 2.0 * m.a1).abs() < 1e-13);
        prop_assert!((m.k_plus(x) + m.k_minus(x) - 2.0 * m.xi_plus(m.a2)).abs() < 1e-13);
        prop_assert!((m.s_plus(x) + m.s_minus(x) - 2.0 * m.xi_minus(m.a2)).abs() < 1e-13);
    }

    #[test]
    fn aligned_two_piece_delta0_is_twice_delta(
        alpha in 0.3f64..1.5,
        beta in 0.3f64..1.5,
        l in 0.0f64..30.0,
    ) {
        let spec = two_piece(alpha, beta);
        let d0 = asymptotics::char_fn0(&spec, C64::new(l, 0.0)).unwrap();
        prop_assert!((d0.re - 2.0 * two_piece_delta(alpha, beta, l)).abs() < 1e-12);
    }
}
