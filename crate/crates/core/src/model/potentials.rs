//! Representations of the potentials `p` and `q` on `[0, pi]`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which one-sided branch to use when a representation is discontinuous at `pi/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Branch valid on `[0, pi/2]`.
    Left,
    /// Branch valid on `[pi/2, pi]`.
    Right,
}

impl Side {
    /// Default branch for a point: left strictly below `pi/2`, right otherwise.
    pub fn of<T: Real>(x: T) -> Self {
        if x < T::half_pi() {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// Basis used for expansions living on the left half `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HalfBasis {
    /// Shifted Chebyshev polynomials `T_k(4x/pi - 1)`, i.e. `cos(k theta)` with
    /// `cos(theta) = 4x/pi - 1`.
    #[default]
    Chebyshev,
    /// `cos(2kx)`: the cosine series of the even extension of a function on `[0, pi/2]`.
    EvenCosine,
}

impl HalfBasis {
    pub fn name(self) -> &'static str {
        match self {
            HalfBasis::Chebyshev => "chebyshev",
            HalfBasis::EvenCosine => "even_cosine",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "chebyshev" => Some(HalfBasis::Chebyshev),
            "even_cosine" => Some(HalfBasis::EvenCosine),
            _ => None,
        }
    }
}

/// Finite expansion on `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfExpansion<T> {
    pub basis: HalfBasis,
    pub coeffs: Vec<T>,
}

impl<T: Real> HalfExpansion<T> {
    pub fn new(basis: HalfBasis, coeffs: Vec<T>) -> Self {
        Self { basis, coeffs }
    }

    /// Values of the first `n` basis functions at `x`.
    pub fn basis_values(basis: HalfBasis, n: usize, x: T) -> Vec<T> {
        let mut out = Vec::with_capacity(n);
        match basis {
            HalfBasis::Chebyshev => {
                let u = to_unit(x);
                let (mut t0, mut t1) = (T::one(), u);
                for k in 0..n {
                    if k == 0 {
                        out.push(t0);
                    } else if k == 1 {
                        out.push(t1);
                    } else {
                        let t2 = T::lit(2.0) * u * t1 - t0;
                        t0 = t1;
                        t1 = t2;
                        out.push(t2);
                    }
                }
            }
            HalfBasis::EvenCosine => {
                for k in 0..n {
                    out.push((T::lit(2.0) * T::of_usize(k) * x).cos());
                }
            }
        }
        out
    }

    pub fn eval(&self, x: T) -> T {
        match self.basis {
            HalfBasis::Chebyshev => clenshaw(&self.coeffs, to_unit(x)),
            HalfBasis::EvenCosine => self
                .coeffs
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &c)| {
                    acc + c * (T::lit(2.0) * T::of_usize(k) * x).cos()
                }),
        }
    }

    /// Antiderivative vanishing at 0.
    pub fn primitive(&self, x: T) -> T {
        match self.basis {
            HalfBasis::Chebyshev => {
                let scale = T::FRAC_PI_4();
                let u = to_unit(x);
                let u0 = -T::one();
                self.coeffs.iter().enumerate().fold(T::zero(), |acc, (k, &c)| {
                    acc + c * (cheb_primitive(k, u) - cheb_primitive(k, u0))
                }) * scale
            }
            HalfBasis::EvenCosine => {
                self.coeffs.iter().enumerate().fold(T::zero(), |acc, (k, &c)| {
                    if k == 0 {
                        acc + c * x
                    } else {
                        let w = T::lit(2.0) * T::of_usize(k);
                        acc + c * (w * x).sin() / w
                    }
                })
            }
        }
    }
}

fn to_unit<T: Real>(x: T) -> T {
    T::lit(4.0) * x / T::PI() - T::one()
}

fn clenshaw<T: Real>(c: &[T], u: T) -> T {
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &ck in c.iter().skip(1).rev() {
        let b0 = T::lit(2.0) * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => c0 + u * b1 - b2,
        None => T::zero(),
    }
}

/// Chebyshev polynomial `T_k(u)` through the cosine form for `|u| <= 1`.
fn cheb_t<T: Real>(k: usize, u: T) -> T {
    let uc = u.max(-T::one()).min(T::one());
    (T::of_usize(k) * uc.acos()).cos()
}

/// An antiderivative of `T_k` in `u`.
fn cheb_primitive<T: Real>(k: usize, u: T) -> T {
    match k {
        0 => u,
        1 => u * u / T::lit(2.0),
        _ => {
            let kk = T::of_usize(k);
            cheb_t(k + 1, u) / (T::lit(2.0) * (kk + T::one()))
                - cheb_t(k - 1, u) / (T::lit(2.0) * (kk - T::one()))
        }
    }
}

/// Natural cubic spline through uniformly spaced samples on `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline<T> {
    samples: Vec<T>,
    second: Vec<T>,
    /// `prefix[i]` is the integral over `[0, x_i]`.
    prefix: Vec<T>,
    h: T,
}

impl<T: Real> CubicSpline<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "grid representation needs at least 2 samples, got {n}"
            )));
        }
        let h = T::PI() / T::of_usize(n - 1);
        let second = natural_second_derivatives(&samples, h);
        let mut prefix = Vec::with_capacity(n);
        prefix.push(T::zero());
        for i in 0..n - 1 {
            let cell = h * (samples[i] + samples[i + 1]) / T::lit(2.0)
                - h * h * h * (second[i] + second[i + 1]) / T::lit(24.0);
            let last = prefix[i];
            prefix.push(last + cell);
        }
        Ok(Self {
            samples,
            second,
            prefix,
            h,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    fn cell(&self, x: T) -> (usize, T) {
        let n = self.samples.len();
        let raw = (x / self.h).floor().to_usize().unwrap_or(0);
        let i = raw.min(n - 2);
        (i, x - T::of_usize(i) * self.h)
    }

    pub fn eval(&self, x: T) -> T {
        let (i, d) = self.cell(x);
        let h = self.h;
        if d == T::zero() {
            return self.samples[i];
        }
        let b = d / h;
        let a = T::one() - b;
        let six = T::lit(6.0);
        a * self.samples[i]
            + b * self.samples[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / six
    }

    /// Integral over `[0, x]`.
    pub fn primitive(&self, x: T) -> T {
        let (i, d) = self.cell(x);
        let h = self.h;
        let b = d / h;
        let one = T::one();
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let omb = one - b;
        let lin = (b - b * b / two) * self.samples[i] + b * b / two * self.samples[i + 1];
        let ci = -(omb * omb * omb * omb) / four + omb * omb / two - one / four;
        let cj = b * b * b * b / four - b * b / two;
        self.prefix[i] + h * (lin + (ci * self.second[i] + cj * self.second[i + 1]) * h * h / T::lit(6.0))
    }
}

fn natural_second_derivatives<T: Real>(y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    let mut m = vec![T::zero(); n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system (1, 4, 1) m = 6/h^2 (second difference) on the interior nodes.
    let k = n - 2;
    let six_over_h2 = T::lit(6.0) / (h * h);
    let mut diag = vec![T::lit(4.0); k];
    let mut rhs: Vec<T> = (1..n - 1)
        .map(|i| six_over_h2 * (y[i + 1] - T::lit(2.0) * y[i] + y[i - 1]))
        .collect();
    for i in 1..k {
        let w = T::one() / diag[i - 1];
        diag[i] = diag[i] - w;
        rhs[i] = rhs[i] - w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
    }
    m
}

/// One real-valued potential on `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    /// `sum_k c_k cos(k x)`.
    Cosine(Vec<T>),
    /// Natural cubic spline through uniform samples (first and last at 0 and pi).
    Grid(CubicSpline<T>),
    /// Independent expansions on the two halves; the value at `pi/2` is one-sided.
    Split {
        left: HalfExpansion<T>,
        right: Box<Profile<T>>,
    },
}

impl<T: Real> Profile<T> {
    pub fn zero() -> Self {
        Profile::Cosine(Vec::new())
    }

    /// Evaluates on the requested branch; `x` is not range-checked.
    pub fn eval_on(&self, x: T, side: Side) -> T {
        match self {
            Profile::Cosine(c) => c.iter().enumerate().fold(T::zero(), |acc, (k, &ck)| {
                if k == 0 {
                    acc + ck
                } else {
                    acc + ck * (T::of_usize(k) * x).cos()
                }
            }),
            Profile::Grid(s) => s.eval(x),
            Profile::Split { left, right } => match side {
                Side::Left => left.eval(x),
                Side::Right => right.eval_on(x, side),
            },
        }
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_on(x, Side::of(x))
    }

    /// Antiderivative vanishing at 0.
    pub fn primitive(&self, x: T) -> T {
        match self {
            Profile::Cosine(c) => c.iter().enumerate().fold(T::zero(), |acc, (k, &ck)| {
                if k == 0 {
                    acc + ck * x
                } else {
                    let kk = T::of_usize(k);
                    acc + ck * (kk * x).sin() / kk
                }
            }),
            Profile::Grid(s) => s.primitive(x),
            Profile::Split { left, right } => {
                let mid = T::half_pi();
                if x <= mid {
                    left.primitive(x)
                } else {
                    left.primitive(mid) + right.primitive(x) - right.primitive(mid)
                }
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Profile::Cosine(_) => "cosine",
            Profile::Grid(_) => "grid",
            Profile::Split { .. } => "split",
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Profile::Cosine(c) => c.iter().all(|v| v.is_finite()),
            Profile::Grid(s) => s.samples().iter().all(|v| v.is_finite()),
            Profile::Split { left, right } => {
                left.coeffs.iter().all(|v| v.is_finite()) && right.all_finite()
            }
        }
    }
}

/// The pair `(p, q)`. Both components always share one representation kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials<T> {
    p: Profile<T>,
    q: Profile<T>,
}

impl<T: Real> Potentials<T> {
    pub fn zero() -> Self {
        Self {
            p: Profile::zero(),
            q: Profile::zero(),
        }
    }

    pub fn cosine(p: Vec<T>, q: Vec<T>) -> Result<Self> {
        Self::checked(Profile::Cosine(p), Profile::Cosine(q))
    }

    pub fn grid(p: Vec<T>, q: Vec<T>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::Validation(format!(
                "grid p has {} samples but q has {}",
                p.len(),
                q.len()
            )));
        }
        Self::checked(
            Profile::Grid(CubicSpline::new(p)?),
            Profile::Grid(CubicSpline::new(q)?),
        )
    }

    /// Left half given by expansions on `[0, pi/2]`, right half taken from `right`.
    pub fn split(left_p: HalfExpansion<T>, left_q: HalfExpansion<T>, right: &Potentials<T>) -> Result<Self> {
        Self::checked(
            Profile::Split {
                left: left_p,
                right: Box::new(right.p.clone()),
            },
            Profile::Split {
                left: left_q,
                right: Box::new(right.q.clone()),
            },
        )
    }

    pub(crate) fn from_parts(p: Profile<T>, q: Profile<T>) -> Self {
        Self { p, q }
    }

    fn checked(p: Profile<T>, q: Profile<T>) -> Result<Self> {
        if !p.all_finite() || !q.all_finite() {
            return Err(Error::Validation("potential data must be finite".into()));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &Profile<T> {
        &self.p
    }

    pub fn q(&self) -> &Profile<T> {
        &self.q
    }

    /// Right-half part of a split representation, or the whole thing otherwise.
    pub fn right_half(&self) -> Potentials<T> {
        let strip = |pr: &Profile<T>| match pr {
            Profile::Split { right, .. } => (**right).clone(),
            other => other.clone(),
        };
        Potentials {
            p: strip(&self.p),
            q: strip(&self.q),
        }
    }

    pub fn kind(&self) -> &'static str {
        self.p.kind()
    }

    /// `(p(x), q(x))` on the requested branch, without range checks.
    #[inline]
    pub fn eval_on(&self, x: T, side: Side) -> (T, T) {
        (self.p.eval_on(x, side), self.q.eval_on(x, side))
    }

    /// `(p(x), q(x))` for `x` in `[0, pi]`.
    pub fn eval(&self, x: T) -> Result<(T, T)> {
        check_domain(x)?;
        Ok(self.eval_on(x, Side::of(x)))
    }

    /// Integral of `p` over `[x0, x1]`.
    pub fn integrate_p(&self, x0: T, x1: T) -> Result<T> {
        check_domain(x0)?;
        check_domain(x1)?;
        Ok(self.p.primitive(x1) - self.p.primitive(x0))
    }
}

pub(crate) fn check_domain<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::PI()) {
        return Err(Error::Domain(format!("x = {x} outside [0, pi]")));
    }
    Ok(())
}
