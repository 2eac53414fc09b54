//! Initial-value shooting for the pencil through the jump points.
//!
//! On each smooth piece the equation is integrated as the first-order system
//! `y' = z`, `z' = (2 lambda p + q - lambda^2 delta) y`. The breakpoints `a1`,
//! `pi/2` and `a2` are always mesh nodes; jump maps are applied exactly once,
//! between the incoming and outgoing pieces.

mod rk;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{JumpCondition, ProblemSpec, Side, State};
use crate::scalar::Real;

use rk::{Control, Vector};

/// Tolerances of the adaptive Dormand-Prince 5(4) integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings<T> {
    pub rtol: T,
    pub atol: T,
    /// Upper bound on the step; further capped by `0.1 / (|lambda| max(alpha, beta) + 1)`.
    pub max_step: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorSettings<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            rtol: T::lit(1e-10).max(T::lit(64.0) * eps),
            atol: T::lit(1e-12).max(T::lit(8.0) * eps),
            max_step: T::lit(0.1),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> IntegratorSettings<T> {
    pub fn with_tolerances(rtol: T, atol: T) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > T::zero() && self.atol > T::zero() && self.max_step > T::zero()) {
            return Err(Error::Validation(
                "integrator tolerances and max_step must be positive".into(),
            ));
        }
        Ok(())
    }

    fn control(&self, spec: &ProblemSpec<T>, lambda: Complex<T>) -> Control<T> {
        let w = spec.weight();
        let cap = T::lit(0.1) / (lambda.norm() * w.alpha.max(w.beta) + T::one());
        Control {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step.min(cap),
            max_steps: self.max_steps,
        }
    }
}

/// Accepted step endpoints of one shooting pass over `[0, pi]`, reusable to
/// evaluate nearby problems on an identical discretisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    nodes: Vec<T>,
}

impl<T: Real> Mesh<T> {
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[inline]
fn cz<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
fn i_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Coefficients of the equation at one point for a fixed lambda.
#[derive(Clone, Copy)]
struct Local<T> {
    /// `2 lambda p + q - lambda^2 delta`
    a: Complex<T>,
    /// d a / d lambda = `2 p - 2 lambda delta`
    da: Complex<T>,
}

#[inline]
fn local<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, x: T, side: Side) -> Local<T> {
    let (p, q) = spec.potentials().eval_on(x, side);
    let r = spec.weight().root(side);
    let delta = r * r;
    let two = T::lit(2.0);
    Local {
        a: lambda * (two * p) + cz(q) - lambda * lambda * delta,
        da: cz(two * p) - lambda * (two * delta),
    }
}

/// `(y, y')` system.
fn rhs2<T: Real>(l: Local<T>, v: &Vector<T, 2>) -> Vector<T, 2> {
    [v[1], l.a * v[0]]
}

/// `(y, y', dy/dlambda, dy'/dlambda)` system.
fn rhs4<T: Real>(l: Local<T>, v: &Vector<T, 4>) -> Vector<T, 4> {
    [v[1], l.a * v[0], v[3], l.a * v[2] + l.da * v[0]]
}

fn jump2<T: Real>(j: &JumpCondition<T>, lambda: Complex<T>, v: &Vector<T, 2>) -> Vector<T, 2> {
    let ig = i_unit::<T>() * j.gamma;
    [v[0] * j.alpha, v[1] * j.beta() + ig * lambda * v[0]]
}

fn jump4<T: Real>(j: &JumpCondition<T>, lambda: Complex<T>, v: &Vector<T, 4>) -> Vector<T, 4> {
    let ig = i_unit::<T>() * j.gamma;
    [
        v[0] * j.alpha,
        v[1] * j.beta() + ig * lambda * v[0],
        v[2] * j.alpha,
        v[3] * j.beta() + ig * v[0] + ig * lambda * v[2],
    ]
}

/// The point where a stop changes something: a jump to apply, a result to record, or
/// only a forced mesh node.
#[derive(Debug, Clone, Copy)]
struct Stop<T> {
    x: T,
    jump: Option<usize>,
}

/// Merged, sorted stop list: breakpoints, the right end and the targets.
fn stops<T: Real>(spec: &ProblemSpec<T>, targets: &[T]) -> Vec<Stop<T>> {
    let mut xs: Vec<T> = spec.breakpoints();
    xs.push(T::PI());
    xs.extend_from_slice(targets);
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite stops"));
    xs.dedup();
    let jumps = spec.jumps();
    xs.into_iter()
        .map(|x| Stop {
            x,
            jump: jumps.iter().position(|j| j.location == x),
        })
        .collect()
}

fn check_targets<T: Real>(targets: &[T]) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        crate::model::potentials_check_domain(t)?;
        if i > 0 && t < targets[i - 1] {
            return Err(Error::Domain("target positions must be sorted ascending".into()));
        }
    }
    Ok(())
}

type RhsFn<T, const N: usize> = fn(Local<T>, &Vector<T, N>) -> Vector<T, N>;
type JumpFn<T, const N: usize> = fn(&JumpCondition<T>, Complex<T>, &Vector<T, N>) -> Vector<T, N>;

/// Shoots from `x = 0` and returns the state at every target. A jump located
/// exactly at a target is applied before the state is recorded.
#[allow(clippy::too_many_arguments)]
fn march<T, const N: usize>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    init: Vector<T, N>,
    targets: &[T],
    cfg: &IntegratorSettings<T>,
    mut record: Option<&mut Vec<T>>,
    rhs: RhsFn<T, N>,
    jump: JumpFn<T, N>,
) -> Result<Vec<Vector<T, N>>>
where
    T: Real,
{
    cfg.validate()?;
    check_targets(targets)?;
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Domain("lambda must be finite".into()));
    }
    let ctl = cfg.control(spec, lambda);
    let jumps = spec.jumps();
    let mut out = Vec::with_capacity(targets.len());
    let mut next_target = 0usize;
    let mut x = T::zero();
    let mut v = init;
    let mut h = T::zero();
    if let Some(m) = record.as_deref_mut() {
        m.push(T::zero());
    }
    let last_target = targets.last().copied().unwrap_or(T::zero());
    for stop in stops(spec, targets) {
        if stop.x > last_target && next_target == targets.len() {
            break;
        }
        if stop.x > x {
            let side = if stop.x <= T::half_pi() { Side::Left } else { Side::Right };
            let f = |xx: T, s: &Vector<T, N>| rhs(local(spec, lambda, xx, side), s);
            v = rk::integrate(&f, x, stop.x, v, &ctl, &mut h, record.as_deref_mut())?;
            x = stop.x;
        }
        if let Some(k) = stop.jump {
            v = jump(&jumps[k], lambda, &v);
        }
        while next_target < targets.len() && targets[next_target] == stop.x {
            out.push(v);
            next_target += 1;
        }
    }
    Ok(out)
}

fn march_replay<T, const N: usize>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    init: Vector<T, N>,
    mesh: &Mesh<T>,
    rhs: RhsFn<T, N>,
    jump: JumpFn<T, N>,
) -> Result<Vector<T, N>>
where
    T: Real,
{
    let nodes = mesh.nodes();
    let jumps = spec.jumps();
    let mut v = init;
    let mut start = 0usize;
    for stop in stops(spec, &[T::PI()]) {
        let end = nodes[start..]
            .iter()
            .position(|&n| n == stop.x)
            .map(|i| i + start)
            .ok_or_else(|| Error::Validation("mesh does not contain the problem breakpoints".into()))?;
        if end > start {
            let side = if stop.x <= T::half_pi() { Side::Left } else { Side::Right };
            let f = |xx: T, s: &Vector<T, N>| rhs(local(spec, lambda, xx, side), s);
            v = rk::integrate_on_nodes(&f, &nodes[start..=end], v)?;
        }
        if let Some(k) = stop.jump {
            v = jump(&jumps[k], lambda, &v);
        }
        start = end;
    }
    Ok(v)
}

fn to_state<T: Real>(x: T, v: &Vector<T, 2>) -> State<T> {
    State::new(x, v[0], v[1])
}

/// Integrates a state across `[x0, x1]`, a piece that contains no nontrivial
/// jump location in its interior. A piece straddling `pi/2` is split there.
pub fn evolve<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    x0: T,
    x1: T,
    s: State<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<State<T>> {
    cfg.validate()?;
    crate::model::potentials_check_domain(x0)?;
    crate::model::potentials_check_domain(x1)?;
    if x1 < x0 {
        return Err(Error::Domain(format!("evolve needs x0 <= x1, got {x0} > {x1}")));
    }
    for j in spec.jumps() {
        if !j.is_trivial() && j.location > x0 && j.location < x1 {
            return Err(Error::Domain(format!(
                "jump at {} lies inside ({x0}, {x1})",
                j.location
            )));
        }
    }
    let ctl = cfg.control(spec, lambda);
    let mid = T::half_pi();
    let mut pieces = vec![x0];
    if x0 < mid && mid < x1 {
        pieces.push(mid);
    }
    pieces.push(x1);
    let mut v = [s.y, s.dy];
    let mut h = T::zero();
    for w in pieces.windows(2) {
        let side = if w[1] <= mid { Side::Left } else { Side::Right };
        let f = |xx: T, st: &Vector<T, 2>| rhs2(local(spec, lambda, xx, side), st);
        v = rk::integrate(&f, w[0], w[1], v, &ctl, &mut h, None)?;
    }
    Ok(to_state(x1, &v))
}

/// Applies one transmission condition: `y+ = alpha y-`,
/// `y'+ = y'- / alpha + i lambda gamma y-`.
pub fn apply_jump<T: Real>(s: State<T>, j: &JumpCondition<T>, lambda: Complex<T>) -> State<T> {
    let v = jump2(j, lambda, &[s.y, s.dy]);
    to_state(s.x, &v)
}

/// Solution started from `init` (taken at `x = 0`), sampled at sorted positions.
pub fn solve_at<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    init: State<T>,
    xs: &[T],
    cfg: &IntegratorSettings<T>,
) -> Result<Vec<State<T>>> {
    let vs = march(spec, lambda, [init.y, init.dy], xs, cfg, None, rhs2, jump2)?;
    Ok(xs.iter().zip(&vs).map(|(&x, v)| to_state(x, v)).collect())
}

/// The cosine-type solution `phi(x, lambda)` with `phi(0) = 1`, `phi'(0) = 0`.
pub fn phi<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    x: T,
    cfg: &IntegratorSettings<T>,
) -> Result<State<T>> {
    Ok(phi_at(spec, lambda, &[x], cfg)?[0])
}

/// `phi` at several sorted positions in one pass.
pub fn phi_at<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    xs: &[T],
    cfg: &IntegratorSettings<T>,
) -> Result<Vec<State<T>>> {
    solve_at(spec, lambda, State::cosine_start(), xs, cfg)
}

/// `Delta(lambda) = phi(pi, lambda)`.
pub fn char_fn<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<Complex<T>> {
    Ok(phi(spec, lambda, T::PI(), cfg)?.y)
}

/// `(Delta(lambda), dDelta/dlambda)` from the variational system.
pub fn char_fn_with_derivative<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    let zero = cz(T::zero());
    let init = [cz(T::one()), zero, zero, zero];
    let v = march(spec, lambda, init, &[T::PI()], cfg, None, rhs4, jump4)?;
    Ok((v[0][0], v[0][2]))
}

pub fn char_fn_derivative<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<Complex<T>> {
    Ok(char_fn_with_derivative(spec, lambda, cfg)?.1)
}

/// `Delta(lambda)` together with the mesh the adaptive pass accepted.
pub fn char_fn_recording<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<(Complex<T>, Mesh<T>)> {
    let mut nodes = Vec::new();
    let init = [cz(T::one()), cz(T::zero())];
    let v = march(spec, lambda, init, &[T::PI()], cfg, Some(&mut nodes), rhs2, jump2)?;
    Ok((v[0][0], Mesh { nodes }))
}

/// `Delta(lambda)` evaluated with one fixed step per mesh interval.
///
/// The mesh must come from [`char_fn_recording`] on a problem with the same
/// jump locations; smooth in the problem data, which makes it suitable for
/// finite-difference Jacobians.
pub fn char_fn_on_mesh<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    mesh: &Mesh<T>,
) -> Result<Complex<T>> {
    let init = [cz(T::one()), cz(T::zero())];
    Ok(march_replay(spec, lambda, init, mesh, rhs2, jump2)?[0])
}
