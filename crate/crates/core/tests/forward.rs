use std::f64::consts::{FRAC_PI_2, PI};

use pencilspec::forward::{self, IntegratorSettings};
use pencilspec::model::{JumpCondition, PiecewiseWeight, Potentials, ProblemSpec, State, ValidationMode};
use pencilspec::{Error, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn cfg() -> IntegratorSettings<f64> {
    IntegratorSettings::default()
}

fn relaxed(alpha: f64, beta: f64, pots: Potentials<f64>, jumps: [JumpCondition<f64>; 2]) -> ProblemSpec<f64> {
    ProblemSpec::new(PiecewiseWeight::new(alpha, beta), pots, jumps, ValidationMode::Relaxed).unwrap()
}

/// Exact shooting for zero potentials: sines and cosines on each piece, jump maps by hand.
fn free_oracle(spec: &ProblemSpec<f64>, lambda: C64, x_end: f64) -> (C64, C64) {
    let w = spec.weight();
    let [j1, j2] = *spec.jumps();
    let mut marks = vec![(j1.location, Some(j1)), (FRAC_PI_2, None), (j2.location, Some(j2))];
    marks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (mut y, mut dy) = (c(1.0, 0.0), c(0.0, 0.0));
    let mut x = 0.0;
    let advance = |y: C64, dy: C64, x0: f64, x1: f64| {
        let r = if x1 <= FRAC_PI_2 { w.alpha } else { w.beta };
        let k = lambda * r;
        let t = x1 - x0;
        if k.norm() == 0.0 {
            return (y + dy * t, dy);
        }
        let (cs, sn) = ((k * t).cos(), (k * t).sin());
        (y * cs + dy * sn / k, -y * k * sn + dy * cs)
    };
    for (loc, jump) in marks {
        if loc > x_end {
            break;
        }
        (y, dy) = advance(y, dy, x, loc);
        x = loc;
        if let Some(j) = jump {
            let i = c(0.0, 1.0);
            (y, dy) = (y * j.alpha, dy / j.alpha + i * lambda * j.gamma * y);
        }
    }
    advance(y, dy, x, x_end)
}

#[test]
fn free_oracle_agrees_on_an_example() {
    let spec = relaxed(
        0.6,
        0.8,
        Potentials::zero(),
        [JumpCondition::new(1.0, 1.5, 0.2), JumpCondition::new(2.2, 0.8, -0.1)],
    );
    for lam in [c(0.5, 0.0), c(3.7, 0.0), c(2.0, -0.4), c(12.3, 0.2)] {
        let (y, _) = free_oracle(&spec, lam, PI);
        let d = forward::char_fn(&spec, lam, &cfg()).unwrap();
        assert!((d - y).norm() < 1e-8 * (1.0 + y.norm()), "{lam}: {d} vs {y}");
    }
}

#[test]
fn two_piece_value_at_one() {
    let spec = relaxed(
        0.6,
        0.8,
        Potentials::zero(),
        [JumpCondition::trivial(0.0), JumpCondition::trivial(FRAC_PI_2)],
    );
    let closed = (0.3 * PI).cos() * (0.4 * PI).cos() - 0.75 * (0.3 * PI).sin() * (0.4 * PI).sin();
    let d = forward::char_fn(&spec, c(1.0, 0.0), &cfg()).unwrap();
    assert!((d.re - closed).abs() < 1e-9 && d.im.abs() < 1e-12);
    assert!((closed - -0.395430).abs() < 1e-6);
}

#[test]
fn constant_q_has_shifted_frequency() {
    let spec = relaxed(
        1.0,
        1.0,
        Potentials::cosine(vec![], vec![2.5]).unwrap(),
        [JumpCondition::trivial(0.0), JumpCondition::trivial(FRAC_PI_2)],
    );
    for lam in [c(0.3, 0.0), c(4.0, 0.0), c(2.0, 0.5)] {
        let k = (lam * lam - 2.5).sqrt();
        let expect = (k * PI).cos();
        let d = forward::char_fn(&spec, lam, &cfg()).unwrap();
        assert!((d - expect).norm() < 1e-8 * (1.0 + expect.norm()), "{lam}");
    }
}

#[test]
fn tighter_tolerance_is_more_accurate() {
    let spec = relaxed(
        0.6,
        0.8,
        Potentials::zero(),
        [JumpCondition::new(1.0, 1.5, 0.2), JumpCondition::new(2.2, 0.8, -0.1)],
    );
    let lam = c(7.3, 0.1);
    let exact = free_oracle(&spec, lam, PI).0;
    let err = |tol: f64| {
        let s = IntegratorSettings::with_tolerances(tol, tol * 1e-2);
        (forward::char_fn(&spec, lam, &s).unwrap() - exact).norm()
    };
    let (coarse, fine) = (err(1e-5), err(1e-11));
    assert!(fine < coarse, "{fine} vs {coarse}");
    assert!(fine < 1e-9);
}

#[test]
fn invalid_settings_are_rejected() {
    let spec = relaxed(
        1.0,
        1.0,
        Potentials::zero(),
        [JumpCondition::trivial(0.0), JumpCondition::trivial(FRAC_PI_2)],
    );
    let bad = IntegratorSettings::with_tolerances(0.0, 1e-12);
    assert!(matches!(forward::char_fn(&spec, c(1.0, 0.0), &bad), Err(Error::Validation(_))));
}

#[test]
fn single_precision_tracks_double() {
    let s64 = relaxed(
        0.6,
        0.8,
        Potentials::cosine(vec![0.0, 0.1], vec![0.5]).unwrap(),
        [JumpCondition::new(1.0, 1.5, 0.2), JumpCondition::new(2.2, 0.8, -0.1)],
    );
    let s32 = pencilspec::model::parse_problem::<f32>(&s64.to_json().unwrap()).unwrap();
    let d64 = forward::char_fn(&s64, c(3.1, 0.0), &cfg()).unwrap();
    let d32 = forward::char_fn(&s32, pencilspec::Complex::new(3.1f32, 0.0), &IntegratorSettings::default()).unwrap();
    assert!((d64.re - d32.re as f64).abs() < 1e-3 && (d64.im - d32.im as f64).abs() < 1e-3);
}

fn jump_pair() -> impl Strategy<Value = [JumpCondition<f64>; 2]> {
    (0.2f64..1.4, 1.7f64..3.0, 0.5f64..2.0, -0.5f64..0.5, 0.5f64..2.0, -0.5f64..0.5)
        .prop_map(|(l1, l2, a1, g1, a2, g2)| [JumpCondition::new(l1, a1, g1), JumpCondition::new(l2, a2, g2)])
}

fn weight() -> impl Strategy<Value = (f64, f64)> {
    (0.3f64..1.5, 0.3f64..1.5)
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_free_oracle(
        (a, b) in weight(),
        jumps in jump_pair(),
        re in 0.0f64..15.0,
        im in -0.5f64..0.5,
        x in 0.05f64..PI,
    ) {
        prop_assume!(jumps.iter().all(|j| (j.location - x).abs() > 1e-3));
        let spec = relaxed(a, b, Potentials::zero(), jumps);
        let lam = c(re, im);
        let (y, dy) = free_oracle(&spec, lam, x);
        let s = forward::phi(&spec, lam, x, &cfg()).unwrap();
        let scale = 1.0 + y.norm() + dy.norm();
        prop_assert!((s.y - y).norm() < 1e-7 * scale, "y {} vs {}", s.y, y);
        prop_assert!((s.dy - dy).norm() < 1e-7 * scale * (1.0 + re), "dy {} vs {}", s.dy, dy);
    }

    #[test]
    fn wronskian_is_conserved(
        (a, b) in weight(),
        jumps in jump_pair(),
        p in coeffs(),
        q in coeffs(),
        re in 0.0f64..10.0,
        im in -0.3f64..0.3,
    ) {
        let spec = relaxed(a, b, Potentials::cosine(p, q).unwrap(), jumps);
        let lam = c(re, im);
        let xs = [0.5, 1.5, 2.0, 2.9, PI];
        let u = forward::solve_at(&spec, lam, State::cosine_start(), &xs, &cfg()).unwrap();
        let v = forward::solve_at(&spec, lam, State::sine_start(), &xs, &cfg()).unwrap();
        for (su, sv) in u.iter().zip(&v) {
            let w = su.wronskian(sv);
            let scale = 1.0 + su.y.norm().max(su.dy.norm()) * sv.y.norm().max(sv.dy.norm());
            prop_assert!((w - c(1.0, 0.0)).norm() < 1e-7 * scale, "x = {}: W = {}", su.x, w);
        }
    }

    #[test]
    fn real_axis_symmetry_without_gamma(
        (a, b) in weight(),
        p in coeffs(),
        q in coeffs(),
        re in 0.0f64..10.0,
        im in -0.5f64..0.5,
    ) {
        let jumps = [JumpCondition::new(1.0, 1.3, 0.0), JumpCondition::new(2.2, 0.7, 0.0)];
        let spec = relaxed(a, b, Potentials::cosine(p, q).unwrap(), jumps);
        let lam = c(re, im);
        let d = forward::char_fn(&spec, lam, &cfg()).unwrap();
        let dc = forward::char_fn(&spec, lam.conj(), &cfg()).unwrap();
        prop_assert!((dc - d.conj()).norm() < 1e-8 * (1.0 + d.norm()));
    }

    #[test]
    fn reflection_symmetry_without_p(
        (a, b) in weight(),
        jumps in jump_pair(),
        q in coeffs(),
        re in 0.0f64..10.0,
        im in -0.5f64..0.5,
    ) {
        let spec = relaxed(a, b, Potentials::cosine(vec![], q).unwrap(), jumps);
        let lam = c(re, im);
        let d = forward::char_fn(&spec, lam, &cfg()).unwrap();
        let dr = forward::char_fn(&spec, -lam.conj(), &cfg()).unwrap();
        prop_assert!((dr - d.conj()).norm() < 1e-8 * (1.0 + d.norm()));
    }

    #[test]
    fn derivative_matches_central_difference(
        (a, b) in weight(),
        jumps in jump_pair(),
        p in coeffs(),
        q in coeffs(),
        re in 0.5f64..8.0,
        im in -0.3f64..0.3,
    ) {
        let spec = relaxed(a, b, Potentials::cosine(p, q).unwrap(), jumps);
        let lam = c(re, im);
        let tight = IntegratorSettings::with_tolerances(1e-13, 1e-15);
        let (_, d1) = forward::char_fn_with_derivative(&spec, lam, &tight).unwrap();
        let h = 1e-5;
        let fd = (forward::char_fn(&spec, lam + h, &tight).unwrap()
            - forward::char_fn(&spec, lam - h, &tight).unwrap())
            / (2.0 * h);
        prop_assert!((d1 - fd).norm() < 1e-5 * (1.0 + d1.norm()), "{} vs {}", d1, fd);
    }

    #[test]
    fn jump_then_inverse_jump_is_identity(
        alpha in 0.2f64..5.0,
        gamma in -2.0f64..2.0,
        re in -10.0f64..10.0,
        im in -1.0f64..1.0,
        y in (-1.0f64..1.0, -1.0f64..1.0),
        dy in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let lam = c(re, im);
        let s = State::new(1.0, c(y.0, y.1), c(dy.0, dy.1));
        let j = JumpCondition::new(1.0, alpha, gamma);
        let out = forward::apply_jump(s, &j, lam);
        let back_dy = (out.dy - c(0.0, 1.0) * lam * gamma * s.y) * alpha;
        prop_assert!((out.y / alpha - s.y).norm() < 1e-14);
        prop_assert!((back_dy - s.dy).norm() < 1e-12);
    }
}
