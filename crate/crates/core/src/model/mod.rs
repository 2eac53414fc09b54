//! Problem definition shared by every other module.

mod file;
mod potentials;

use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use file::{parse_problem, ProblemFile};
pub(crate) use potentials::check_domain as potentials_check_domain;
pub use potentials::{CubicSpline, HalfBasis, HalfExpansion, Potentials, Profile, Side};

/// Strict mode enforces every constraint of the original problem class;
/// relaxed mode only keeps what the numerics need, so that the analytically
/// solvable constant-weight and trivial-jump cases can be used as oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    #[default]
    Strict,
    Relaxed,
}

impl ValidationMode {
    pub fn name(self) -> &'static str {
        match self {
            ValidationMode::Strict => "strict",
            ValidationMode::Relaxed => "relaxed",
        }
    }
}

/// `delta(x) = alpha^2` on `(0, pi/2)` and `beta^2` on `(pi/2, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseWeight<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> PiecewiseWeight<T> {
    pub fn new(alpha: T, beta: T) -> Self {
        Self { alpha, beta }
    }

    pub fn breakpoint() -> T {
        T::half_pi()
    }

    /// Weight root on the given branch.
    #[inline]
    pub fn root(&self, side: Side) -> T {
        match side {
            Side::Left => self.alpha,
            Side::Right => self.beta,
        }
    }

    /// `delta(x)`, right branch at the breakpoint itself.
    pub fn delta(&self, x: T) -> T {
        let r = self.root(Side::of(x));
        r * r
    }

    fn validate(&self, mode: ValidationMode) -> Result<()> {
        let (a, b) = (self.alpha, self.beta);
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Validation("weight constants must be finite".into()));
        }
        if a <= T::zero() {
            return Err(Error::Validation("alpha > 0 violated".into()));
        }
        if b <= T::zero() {
            return Err(Error::Validation("beta > 0 violated".into()));
        }
        if mode == ValidationMode::Strict {
            if a >= b {
                return Err(Error::Validation("alpha < beta violated".into()));
            }
            if b >= T::one() {
                return Err(Error::Validation("beta < 1 violated".into()));
            }
            if a + b <= T::one() {
                return Err(Error::Validation("alpha + beta > 1 violated".into()));
            }
        }
        Ok(())
    }
}

/// Transmission condition at an interior point:
/// `y+ = alpha y-`, `y'+ = y'- / alpha + i lambda gamma y-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCondition<T> {
    pub location: T,
    pub alpha: T,
    pub gamma: T,
}

impl<T: Real> JumpCondition<T> {
    pub fn new(location: T, alpha: T, gamma: T) -> Self {
        Self {
            location,
            alpha,
            gamma,
        }
    }

    /// A jump that leaves `(y, y')` unchanged.
    pub fn trivial(location: T) -> Self {
        Self::new(location, T::one(), T::zero())
    }

    /// Derivative multiplier, always `1 / alpha`.
    #[inline]
    pub fn beta(&self) -> T {
        T::one() / self.alpha
    }

    pub fn is_trivial(&self) -> bool {
        self.alpha == T::one() && self.gamma == T::zero()
    }

    fn validate(&self, index: usize, mode: ValidationMode) -> Result<()> {
        let n = index + 1;
        if !(self.location.is_finite() && self.alpha.is_finite() && self.gamma.is_finite()) {
            return Err(Error::Validation(format!("jump {n} constants must be finite")));
        }
        if self.alpha <= T::zero() {
            return Err(Error::Validation(format!("jump {n}: alpha > 0 violated")));
        }
        let mid = T::half_pi();
        let ok = if index == 0 {
            self.location >= T::zero() && self.location <= mid
        } else {
            self.location >= mid && self.location <= T::PI()
        };
        if !ok {
            let range = if index == 0 { "[0, pi/2]" } else { "[pi/2, pi]" };
            return Err(Error::Validation(format!(
                "jump {n} location {} outside {range}",
                self.location
            )));
        }
        if mode == ValidationMode::Strict {
            let d = self.alpha - T::one();
            if d * d + self.gamma * self.gamma == T::zero() {
                return Err(Error::Validation(format!("jump {n} is trivial")));
            }
        }
        Ok(())
    }
}

/// A validated problem instance. Immutable: the `with_*` methods return
/// re-validated copies.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    weight: PiecewiseWeight<T>,
    potentials: Potentials<T>,
    jumps: [JumpCondition<T>; 2],
    mode: ValidationMode,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        weight: PiecewiseWeight<T>,
        potentials: Potentials<T>,
        jumps: [JumpCondition<T>; 2],
        mode: ValidationMode,
    ) -> Result<Self> {
        weight.validate(mode)?;
        for (i, j) in jumps.iter().enumerate() {
            j.validate(i, mode)?;
        }
        if jumps[0].location == jumps[1].location {
            return Err(Error::Validation("jump locations coincide".into()));
        }
        Ok(Self {
            weight,
            potentials,
            jumps,
            mode,
        })
    }

    pub fn weight(&self) -> &PiecewiseWeight<T> {
        &self.weight
    }

    pub fn potentials(&self) -> &Potentials<T> {
        &self.potentials
    }

    pub fn jumps(&self) -> &[JumpCondition<T>; 2] {
        &self.jumps
    }

    pub fn mode(&self) -> ValidationMode {
        self.mode
    }

    pub fn is_relaxed(&self) -> bool {
        self.mode == ValidationMode::Relaxed
    }

    pub fn with_potentials(&self, potentials: Potentials<T>) -> Result<Self> {
        Self::new(self.weight, potentials, self.jumps, self.mode)
    }

    pub fn with_weight(&self, weight: PiecewiseWeight<T>) -> Result<Self> {
        Self::new(weight, self.potentials.clone(), self.jumps, self.mode)
    }

    pub fn with_jumps(&self, jumps: [JumpCondition<T>; 2]) -> Result<Self> {
        Self::new(self.weight, self.potentials.clone(), jumps, self.mode)
    }

    pub fn with_mode(&self, mode: ValidationMode) -> Result<Self> {
        Self::new(self.weight, self.potentials.clone(), self.jumps, mode)
    }

    /// True when both jumps have `gamma = 0`.
    pub fn is_gamma_free(&self) -> bool {
        self.jumps.iter().all(|j| j.gamma == T::zero())
    }

    /// Sorted interior mesh nodes that integration must never step across:
    /// `a1`, `pi/2`, `a2`, deduplicated.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut b = vec![self.jumps[0].location, T::half_pi(), self.jumps[1].location];
        b.dedup();
        b
    }

    /// `(p(x), q(x))`.
    pub fn eval_potentials(&self, x: T) -> Result<(T, T)> {
        self.potentials.eval(x)
    }

    /// Integral of `p` over `[x0, x1]`; exact for expansion-based representations.
    pub fn integrate_p(&self, x0: T, x1: T) -> Result<T> {
        self.potentials.integrate_p(x0, x1)
    }

    /// Serialise to the JSON problem-file format.
    pub fn to_json(&self) -> Result<String> {
        let file = ProblemFile::from_spec(self)?;
        serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Reads and validates a problem file.
pub fn load_problem<T: Real>(path: impl AsRef<Path>) -> Result<ProblemSpec<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem(&text)
}

/// The pair `(y, y')` at position `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<T> {
    pub x: T,
    pub y: Complex<T>,
    pub dy: Complex<T>,
}

impl<T: Real> State<T> {
    pub fn new(x: T, y: Complex<T>, dy: Complex<T>) -> Self {
        Self { x, y, dy }
    }

    /// `(1, 0)` at `x = 0`: the normalisation of the cosine-type solution.
    pub fn cosine_start() -> Self {
        Self::new(T::zero(), Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    /// `(0, 1)` at `x = 0`.
    pub fn sine_start() -> Self {
        Self::new(T::zero(), Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.re.is_finite()
            && self.y.im.is_finite()
            && self.dy.re.is_finite()
            && self.dy.im.is_finite()
    }

    /// `u v' - u' v`.
    pub fn wronskian(&self, other: &State<T>) -> Complex<T> {
        self.y * other.dy - self.dy * other.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn base(mode: ValidationMode, a: f64, b: f64, j1: JumpCondition<f64>) -> Result<ProblemSpec<f64>> {
        ProblemSpec::new(
            PiecewiseWeight::new(a, b),
            Potentials::zero(),
            [j1, JumpCondition::new(2.2, 0.8, -0.1)],
            mode,
        )
    }

    #[test]
    fn strict_mode_rejects_weight_order() {
        let err = base(ValidationMode::Strict, 0.9, 0.8, JumpCondition::new(1.0, 1.5, 0.2)).unwrap_err();
        assert!(err.to_string().contains("alpha < beta violated"), "{err}");
        assert!(base(ValidationMode::Relaxed, 0.9, 0.8, JumpCondition::new(1.0, 1.5, 0.2)).is_ok());
    }

    #[test]
    fn strict_mode_rejects_trivial_jump() {
        let err = base(ValidationMode::Strict, 0.6, 0.8, JumpCondition::new(1.0, 1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("jump 1 is trivial"), "{err}");
    }

    #[test]
    fn strict_mode_rejects_short_total_weight() {
        let err = base(ValidationMode::Strict, 0.3, 0.6, JumpCondition::new(1.0, 1.5, 0.0)).unwrap_err();
        assert!(err.to_string().contains("alpha + beta > 1"), "{err}");
    }

    #[test]
    fn jump_locations_are_checked_in_every_mode() {
        let err = base(ValidationMode::Relaxed, 1.0, 1.0, JumpCondition::new(2.0, 1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("jump 1 location"), "{err}");
        let err = base(ValidationMode::Relaxed, 1.0, 1.0, JumpCondition::new(1.0, -1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("alpha > 0"), "{err}");
    }

    #[test]
    fn beta_is_reciprocal_and_delta_switches() {
        let j = JumpCondition::new(0.5, 4.0, 0.0);
        assert_eq!(j.beta() * j.alpha, 1.0);
        let w = PiecewiseWeight::new(0.6, 0.8);
        assert_eq!(w.delta(0.1), 0.36);
        assert!((w.delta(3.0) - 0.64f64).abs() < 1e-15);
    }

    #[test]
    fn wronskian_of_start_states() {
        let u = State::<f64>::cosine_start();
        let v = State::<f64>::sine_start();
        assert_eq!(u.wronskian(&v), Complex::new(1.0, 0.0));
        assert!(u.is_finite());
        let _ = PI;
    }
}
