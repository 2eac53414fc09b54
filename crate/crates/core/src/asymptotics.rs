//! Closed-form leading term `phi0` of the cosine-type solution and the
//! resulting approximate characteristic function `Delta0`.
//!
//! The formulas are implemented as written, including the unscaled `a1`
//! offsets inside the phase maps. They agree with the integrated solution
//! only for special geometries (for instance `a1 = 0`, `a2 = pi/2` with trivial
//! jumps, where `Delta0 = 2 Delta` exactly), so nothing here is expected to
//! match [`crate::forward`] in general.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{self, IntegratorSettings};
use crate::model::ProblemSpec;
use crate::scalar::Real;

/// The affine phase maps `xi+-`, `k+-`, `s+-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMaps<T> {
    pub alpha: T,
    pub beta: T,
    pub a1: T,
    pub a2: T,
}

impl<T: Real> PhaseMaps<T> {
    pub fn of(spec: &ProblemSpec<T>) -> Self {
        let w = spec.weight();
        let j = spec.jumps();
        Self {
            alpha: w.alpha,
            beta: w.beta,
            a1: j[0].location,
            a2: j[1].location,
        }
    }

    /// `alpha x - alpha a1 + a1`
    pub fn xi_plus(&self, x: T) -> T {
        self.alpha * x - self.alpha * self.a1 + self.a1
    }

    /// `-alpha x + alpha a1 + a1`
    pub fn xi_minus(&self, x: T) -> T {
        -self.alpha * x + self.alpha * self.a1 + self.a1
    }

    /// `xi+(a2) + beta x - beta a2`
    pub fn k_plus(&self, x: T) -> T {
        self.xi_plus(self.a2) + self.beta * x - self.beta * self.a2
    }

    /// `xi+(a2) - beta x + beta a2`
    pub fn k_minus(&self, x: T) -> T {
        self.xi_plus(self.a2) - self.beta * x + self.beta * self.a2
    }

    /// `xi-(a2) + beta x - beta a2`
    pub fn s_plus(&self, x: T) -> T {
        self.xi_minus(self.a2) + self.beta * x - self.beta * self.a2
    }

    /// `xi-(a2) - beta x + beta a2`
    pub fn s_minus(&self, x: T) -> T {
        self.xi_minus(self.a2) - self.beta * x + self.beta * self.a2
    }
}

/// Amplitudes of the cosine terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoefficients<T> {
    /// `(alpha1 + beta1 / alpha) / 2`
    pub beta1_plus: T,
    /// `(alpha1 - beta1 / alpha) / 2`
    pub beta1_minus: T,
    /// `(alpha2 + alpha beta2 / beta) / 2`
    pub beta2_plus: T,
    /// `(alpha2 - alpha beta2 / beta) / 2`
    pub beta2_minus: T,
    /// `gamma1 / (2 alpha)`
    pub gamma1_shift: T,
    /// `gamma2 / (2 beta)`
    pub gamma2_shift: T,
}

impl<T: Real> AsymptoticCoefficients<T> {
    pub fn of(spec: &ProblemSpec<T>) -> Self {
        let w = spec.weight();
        let [j1, j2] = *spec.jumps();
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        Self {
            beta1_plus: half * (j1.alpha + j1.beta() / w.alpha),
            beta1_minus: half * (j1.alpha - j1.beta() / w.alpha),
            beta2_plus: half * (j2.alpha + w.alpha * j2.beta() / w.beta),
            beta2_minus: half * (j2.alpha - w.alpha * j2.beta() / w.beta),
            gamma1_shift: j1.gamma / (two * w.alpha),
            gamma2_shift: j2.gamma / (two * w.beta),
        }
    }

    /// Amplitudes of the four right-piece terms in the order `k+, k-, s+, s-`.
    pub fn right_amplitudes(&self) -> [T; 4] {
        [
            self.beta2_plus + self.gamma2_shift,
            self.beta2_minus + self.gamma2_shift,
            self.beta2_minus - self.gamma2_shift,
            self.beta2_plus - self.gamma2_shift,
        ]
    }
}

/// Integrals of `p` entering the phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseIntegrals<T> {
    a1: T,
    a2: T,
    /// `int_0^{a1} p`
    head: T,
    /// `int_{a2}^{pi} p`
    tail: T,
}

impl<T: Real> PhaseIntegrals<T> {
    pub fn of(spec: &ProblemSpec<T>) -> Result<Self> {
        let a1 = spec.jumps()[0].location;
        let a2 = spec.jumps()[1].location;
        Ok(Self {
            a1,
            a2,
            head: spec.integrate_p(T::zero(), a1)?,
            tail: spec.integrate_p(a2, T::PI())?,
        })
    }

    /// `v(x) = int_{a1}^x p`
    pub fn v(spec: &ProblemSpec<T>, x: T) -> Result<T> {
        spec.integrate_p(spec.jumps()[0].location, x)
    }

    /// `t(x) = int_{a2}^x p`
    pub fn t(spec: &ProblemSpec<T>, x: T) -> Result<T> {
        spec.integrate_p(spec.jumps()[1].location, x)
    }

    /// `int_0^x p`
    pub fn beta_of_x(spec: &ProblemSpec<T>, x: T) -> Result<T> {
        spec.integrate_p(T::zero(), x)
    }

    /// `omega(x) = int_{a2}^x p + int_0^{a1} p`
    pub fn omega(&self, spec: &ProblemSpec<T>, x: T) -> Result<T> {
        Ok(spec.integrate_p(self.a2, x)? + self.head)
    }

    /// `w(pi) = int_{a2}^{pi} p`
    pub fn w_pi(&self) -> T {
        self.tail
    }

    pub fn a1(&self) -> T {
        self.a1
    }
}

fn ccos<T: Real>(lambda: Complex<T>, phase: T, shift: T) -> Complex<T> {
    (lambda * phase - Complex::new(shift, T::zero())).cos()
}

/// The leading term `phi0(x, lambda)`: two cosines for `x < pi/2`, four for
/// `x > pi/2`. Undefined at `pi/2` itself.
pub fn phi0<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, x: T) -> Result<Complex<T>> {
    if !(x >= T::zero() && x <= T::PI()) {
        return Err(Error::Domain(format!("phi0 needs x in (0, pi], got {x}")));
    }
    if x == T::half_pi() {
        return Err(Error::Domain("phi0 is not defined at x = pi/2".into()));
    }
    let m = PhaseMaps::of(spec);
    let c = AsymptoticCoefficients::of(spec);
    if x < T::half_pi() {
        let v = PhaseIntegrals::v(spec, x)? / m.alpha;
        let a = Complex::new(c.beta1_plus + c.gamma1_shift, T::zero());
        let b = Complex::new(c.beta1_minus - c.gamma1_shift, T::zero());
        return Ok(a * ccos(lambda, m.xi_plus(x), v) + b * ccos(lambda, m.xi_minus(x), -v));
    }
    let t = PhaseIntegrals::t(spec, x)? / m.beta;
    let [ak, bk, as_, bs] = c.right_amplitudes().map(|v| Complex::new(v, T::zero()));
    Ok(ak * ccos(lambda, m.k_plus(x), t)
        + bk * ccos(lambda, m.k_minus(x), t)
        + as_ * ccos(lambda, m.s_plus(x), -t)
        + bs * ccos(lambda, m.s_minus(x), -t))
}

/// `Delta0(lambda) = phi0(pi, lambda)`.
pub fn char_fn0<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    phi0(spec, lambda, T::PI())
}

/// Expected distance between consecutive zeros of `Delta0`, `pi / k+(pi)`.
pub fn spacing_estimate<T: Real>(spec: &ProblemSpec<T>) -> T {
    let k = PhaseMaps::of(spec).k_plus(T::PI());
    if k > T::lit(1e-3) {
        T::PI() / k
    } else {
        T::one()
    }
}

/// Where eigenvalue estimates came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimateSource {
    /// Zeros of `Delta0`.
    #[default]
    Asymptotic,
    /// Zeros of the integrated `Delta`; used when `Delta0` degenerates or on request.
    CharFn,
}

impl EstimateSource {
    pub fn name(self) -> &'static str {
        match self {
            EstimateSource::Asymptotic => "asymptotic",
            EstimateSource::CharFn => "char_fn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates<T> {
    pub values: Vec<T>,
    pub source: EstimateSource,
    /// Set when `Delta0` vanished identically and the scan switched to `Delta`.
    pub degenerate: bool,
}

/// First `n_max` nonnegative real zeros of `Delta0`, falling back to `Delta`
/// when `Delta0` degenerates.
pub fn eigenvalue_estimates<T: Real>(spec: &ProblemSpec<T>, n_max: usize) -> Result<Estimates<T>> {
    eigenvalue_estimates_with(spec, n_max, EstimateSource::Asymptotic, &IntegratorSettings::default())
}

/// As [`eigenvalue_estimates`], with an explicit preferred source.
pub fn eigenvalue_estimates_with<T: Real>(
    spec: &ProblemSpec<T>,
    n_max: usize,
    source: EstimateSource,
    cfg: &IntegratorSettings<T>,
) -> Result<Estimates<T>> {
    if n_max == 0 {
        return Ok(Estimates {
            values: Vec::new(),
            source,
            degenerate: false,
        });
    }
    let amp = AsymptoticCoefficients::of(spec)
        .right_amplitudes()
        .iter()
        .fold(T::zero(), |s, a| s + a.abs());
    let degenerate = source == EstimateSource::Asymptotic && amp < T::lit(1e3) * T::epsilon();
    let used = if degenerate { EstimateSource::CharFn } else { source };
    let f = |l: T| -> Result<T> {
        let z = Complex::new(l, T::zero());
        Ok(match used {
            EstimateSource::Asymptotic => char_fn0(spec, z)?.re,
            EstimateSource::CharFn => forward::char_fn(spec, z, cfg)?.re,
        })
    };
    let step = T::lit(0.01).min(spacing_estimate(spec) / T::lit(20.0));
    let values = scan_zeros(&f, step, n_max)?;
    Ok(Estimates {
        values,
        source: used,
        degenerate,
    })
}

/// Sign-change scan from 0 with a window that doubles until `n` zeros are seen.
fn scan_zeros<T: Real, F>(f: &F, step: T, n: usize) -> Result<Vec<T>>
where
    F: Fn(T) -> Result<T> + Sync,
{
    let budget = 10_000usize.saturating_mul(n);
    let mut window = (T::of_usize(n) + T::one()) * T::lit(2.0);
    loop {
        let steps = (window / step).ceil().to_usize().unwrap_or(usize::MAX).min(budget);
        let xs: Vec<T> = (0..=steps).map(|k| T::of_usize(k) * step).collect();
        let vals: Vec<T> = xs.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
        let mut roots = Vec::new();
        for k in 0..steps {
            if roots.len() == n {
                break;
            }
            let (fa, fb) = (vals[k], vals[k + 1]);
            if fa == T::zero() {
                roots.push(xs[k]);
            } else if fa * fb < T::zero() {
                roots.push(bisect(f, xs[k], xs[k + 1], fa)?);
            }
        }
        if roots.len() >= n {
            roots.truncate(n);
            return Ok(roots);
        }
        if steps >= budget {
            return Err(Error::ScanExhausted {
                found: roots.len(),
                wanted: n,
                limit: (T::of_usize(steps) * step).as_f64(),
            });
        }
        window = window * T::lit(2.0);
    }
}

fn bisect<T: Real, F>(f: &F, mut a: T, mut b: T, mut fa: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    for _ in 0..200 {
        let m = (a + b) / T::lit(2.0);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == T::zero() {
            return Ok(m);
        }
        if fa * fm < T::zero() {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok((a + b) / T::lit(2.0))
}

/// One row of [`remainder_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemainderRow<T> {
    pub lambda: T,
    pub abs_diff: T,
    pub scaled_diff: T,
}

/// `|Delta - Delta0|` and `|lambda| |Delta - Delta0|` on a real grid, one row per input.
pub fn remainder_report<T: Real>(
    spec: &ProblemSpec<T>,
    lambdas: &[T],
    cfg: &IntegratorSettings<T>,
) -> Result<Vec<RemainderRow<T>>> {
    lambdas
        .par_iter()
        .map(|&l| {
            let z = Complex::new(l, T::zero());
            let d = (forward::char_fn(spec, z, cfg)? - char_fn0(spec, z)?).norm();
            Ok(RemainderRow {
                lambda: l,
                abs_diff: d,
                scaled_diff: d * l.abs(),
            })
        })
        .collect()
}

/// Largest over median of the scaled column; large values flag growth.
pub fn remainder_growth_ratio<T: Real>(rows: &[RemainderRow<T>]) -> Option<T> {
    if rows.is_empty() {
        return None;
    }
    let mut s: Vec<T> = rows.iter().map(|r| r.scaled_diff).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let med = s[s.len() / 2];
    let max = *s.last().unwrap();
    (med > T::zero()).then(|| max / med)
}

/// CSV with columns `lambda,abs_diff,scaled_diff`.
pub fn write_remainder_csv<T: Real, W: Write>(out: &mut W, rows: &[RemainderRow<T>]) -> std::io::Result<()> {
    writeln!(out, "lambda,abs_diff,scaled_diff")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e}",
            r.lambda.as_f64(),
            r.abs_diff.as_f64(),
            r.scaled_diff.as_f64()
        )?;
    }
    Ok(())
}
