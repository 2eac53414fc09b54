//! Numerical checks of the identities behind the uniqueness argument: the
//! mismatch functional `U(lambda)`, the Green-type boundary identity and
//! Picard iteration for homogeneous Volterra systems.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{self, IntegratorSettings};
use crate::model::{ProblemSpec, Side};
use crate::quadrature::{chebyshev_lobatto, chebyshev_tail_integration, GaussLegendre};
use crate::scalar::Real;

const NODES_PER_PANEL: usize = 20;

fn same_constants<T: Real>(a: &ProblemSpec<T>, b: &ProblemSpec<T>) -> Result<()> {
    if a.weight() != b.weight() {
        return Err(Error::SpecMismatch("weight constants differ".into()));
    }
    for (k, (ja, jb)) in a.jumps().iter().zip(b.jumps()).enumerate() {
        if ja != jb {
            return Err(Error::SpecMismatch(format!("jump {} constants differ", k + 1)));
        }
    }
    Ok(())
}

/// Rejects specs whose potentials differ anywhere on `[pi/2, pi]`.
fn same_right_half<T: Real>(a: &ProblemSpec<T>, b: &ProblemSpec<T>) -> Result<()> {
    let n = 64;
    let (lo, hi) = (T::half_pi(), T::PI());
    for k in 0..=n {
        let x = lo + (hi - lo) * T::of_usize(k) / T::of_usize(n);
        let (pa, qa) = a.potentials().eval_on(x, Side::Right);
        let (pb, qb) = b.potentials().eval_on(x, Side::Right);
        let tol = T::lit(1e3) * T::epsilon();
        if (pa - pb).abs() > tol * (T::one() + pa.abs()) || (qa - qb).abs() > tol * (T::one() + qa.abs()) {
            return Err(Error::SpecMismatch(format!("potentials differ on the right half at x = {x}")));
        }
    }
    Ok(())
}

/// Gauss-Legendre nodes on `[0, pi/2]`, panels split at `a1` and short enough
/// to resolve the product `phi phi~` at this `lambda`.
fn left_nodes<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, quad_n: usize) -> Vec<(T, T)> {
    let mid = T::half_pi();
    let a1 = spec.jumps()[0].location;
    let mut cuts = vec![T::zero()];
    if a1 > T::zero() && a1 < mid {
        cuts.push(a1);
    }
    cuts.push(mid);
    let freq = T::lit(2.0) * lambda.norm() * spec.weight().alpha;
    // 20 nodes per panel, at least 6 per wavelength of the product.
    let max_len = (T::lit(NODES_PER_PANEL as f64 / 6.0) * T::lit(2.0) * T::PI() / (freq + T::lit(1e-300)))
        .min(T::lit(0.25));
    let min_panels = quad_n.div_ceil(NODES_PER_PANEL);
    let gl = GaussLegendre::<T>::new(NODES_PER_PANEL);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        let by_len = (len / max_len).ceil().to_usize().unwrap_or(1);
        let by_count = (T::of_usize(min_panels) * len / mid).ceil().to_usize().unwrap_or(1);
        let panels = by_len.max(by_count).max(1);
        for k in 0..panels {
            let a = w[0] + len * T::of_usize(k) / T::of_usize(panels);
            let b = w[0] + len * T::of_usize(k + 1) / T::of_usize(panels);
            out.extend(gl.on(a, b));
        }
    }
    out
}

/// `(U1, U2)` with `U1 = int P phi phi~`, `U2 = int Q phi phi~` over `[0, pi/2]`.
pub fn split_u<T: Real>(
    spec_a: &ProblemSpec<T>,
    spec_b: &ProblemSpec<T>,
    lambda: Complex<T>,
    quad_n: usize,
    cfg: &IntegratorSettings<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    same_constants(spec_a, spec_b)?;
    if quad_n < 50 {
        return Err(Error::Validation("quad_n must be at least 50".into()));
    }
    let nodes = left_nodes(spec_a, lambda, quad_n);
    let xs: Vec<T> = nodes.iter().map(|n| n.0).collect();
    let pa = forward::phi_at(spec_a, lambda, &xs, cfg)?;
    let pb = forward::phi_at(spec_b, lambda, &xs, cfg)?;
    let zero = Complex::new(T::zero(), T::zero());
    let (mut u1, mut u2) = (zero, zero);
    for (k, &(x, w)) in nodes.iter().enumerate() {
        let (p1, q1) = spec_a.potentials().eval_on(x, Side::Left);
        let (p2, q2) = spec_b.potentials().eval_on(x, Side::Left);
        let prod = pa[k].y * pb[k].y * w;
        u1 = u1 + prod * (p1 - p2);
        u2 = u2 + prod * (q1 - q2);
    }
    Ok((u1, u2))
}

/// `U(lambda) = int_0^{pi/2} [2 lambda P + Q] phi phi~ dx` with `P = p - p~`, `Q = q - q~`.
pub fn u_functional<T: Real>(
    spec_a: &ProblemSpec<T>,
    spec_b: &ProblemSpec<T>,
    lambda: Complex<T>,
    quad_n: usize,
    cfg: &IntegratorSettings<T>,
) -> Result<Complex<T>> {
    let (u1, u2) = split_u(spec_a, spec_b, lambda, quad_n, cfg)?;
    Ok(lambda * u1 * T::lit(2.0) + u2)
}

/// `phi~'(pi) phi(pi) - phi'(pi) phi~(pi)`, the boundary term of the identity.
pub fn boundary_term<T: Real>(
    spec_a: &ProblemSpec<T>,
    spec_b: &ProblemSpec<T>,
    lambda: Complex<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<Complex<T>> {
    let a = forward::phi(spec_a, lambda, T::PI(), cfg)?;
    let b = forward::phi(spec_b, lambda, T::PI(), cfg)?;
    Ok(b.dy * a.y - a.dy * b.y)
}

/// `|U(lambda) + phi~'(pi) phi(pi) - phi'(pi) phi~(pi)|`.
pub fn green_identity_residual<T: Real>(
    spec_a: &ProblemSpec<T>,
    spec_b: &ProblemSpec<T>,
    lambda: Complex<T>,
    cfg: &IntegratorSettings<T>,
) -> Result<T> {
    same_constants(spec_a, spec_b)?;
    same_right_half(spec_a, spec_b)?;
    let u = u_functional(spec_a, spec_b, lambda, 200, cfg)?;
    Ok((u + boundary_term(spec_a, spec_b, lambda, cfg)?).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow<T> {
    pub lambda: Complex<T>,
    pub residual: T,
}

/// Green identity residual over a list of lambdas, in input order.
pub fn green_sweep<T: Real>(
    spec_a: &ProblemSpec<T>,
    spec_b: &ProblemSpec<T>,
    lambdas: &[Complex<T>],
    cfg: &IntegratorSettings<T>,
) -> Result<Vec<ResidualRow<T>>> {
    lambdas
        .par_iter()
        .map(|&l| {
            Ok(ResidualRow {
                lambda: l,
                residual: green_identity_residual(spec_a, spec_b, l, cfg)?,
            })
        })
        .collect()
}

/// CSV with columns `re_lambda,im_lambda,residual`.
pub fn write_residual_csv<T: Real, W: Write>(out: &mut W, rows: &[ResidualRow<T>]) -> std::io::Result<()> {
    writeln!(out, "re_lambda,im_lambda,residual")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e}",
            r.lambda.re.as_f64(),
            r.lambda.im.as_f64(),
            r.residual.as_f64()
        )?;
    }
    Ok(())
}

/// Quadrature rule for the tail integrals in the Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolterraRule {
    /// Chebyshev-Lobatto grid with spectral integration; exact for polynomial data.
    #[default]
    Chebyshev,
    /// Uniform grid with the composite trapezoid rule.
    Trapezoid,
}

pub type Kernel<T> = Arc<dyn Fn(T, T) -> Vec<T> + Send + Sync>;

/// `S(t) + int_t^{t_hi} K(x, t) S(x) dx = 0` for vector-valued `S`.
#[derive(Clone)]
pub struct VolterraProblem<T> {
    pub dimension: usize,
    /// Row-major `dimension x dimension` matrix at `(x, t)`.
    pub kernel: Kernel<T>,
    pub t_lo: T,
    pub t_hi: T,
    pub grid_n: usize,
    pub rule: VolterraRule,
    /// Largest kernel entry tolerated on the grid.
    pub guard: T,
}

impl<T: Real> std::fmt::Debug for VolterraProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolterraProblem")
            .field("dimension", &self.dimension)
            .field("t_lo", &self.t_lo)
            .field("t_hi", &self.t_hi)
            .field("grid_n", &self.grid_n)
            .field("rule", &self.rule)
            .finish()
    }
}

impl<T: Real> VolterraProblem<T> {
    pub fn new(dimension: usize, kernel: Kernel<T>, t_lo: T, t_hi: T, grid_n: usize) -> Self {
        Self {
            dimension,
            kernel,
            t_lo,
            t_hi,
            grid_n,
            rule: VolterraRule::default(),
            guard: T::lit(1e100).min(T::max_value().sqrt()),
        }
    }

    pub fn with_rule(mut self, rule: VolterraRule) -> Self {
        self.rule = rule;
        self
    }

    /// Scalar constant kernel `K = k` on `[0, pi/2]`.
    pub fn constant(k: T, grid_n: usize) -> Self {
        Self::new(1, Arc::new(move |_, _| vec![k]), T::zero(), T::half_pi(), grid_n)
    }

    /// `K_ij(x, t) = a_ij + b_ij cos(x - t)` with `a`, `b` uniform in
    /// `[-amplitude, amplitude]`, drawn from a ChaCha8 stream with the given seed.
    pub fn random_bounded(dimension: usize, amplitude: T, seed: u64, grid_n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = amplitude.as_f64();
        let mut draw = |_| T::lit(rng.random_range(-amp..=amp));
        let a: Vec<T> = (0..dimension * dimension).map(&mut draw).collect();
        let b: Vec<T> = (0..dimension * dimension).map(&mut draw).collect();
        let kernel = Arc::new(move |x: T, t: T| {
            let c = (x - t).cos();
            a.iter().zip(&b).map(|(&ai, &bi)| ai + bi * c).collect()
        });
        Self::new(dimension, kernel, T::zero(), T::half_pi(), grid_n)
    }

    /// Grid points for the chosen rule, ascending.
    pub fn grid(&self) -> Vec<T> {
        let n = self.grid_n.max(2) - 1;
        match self.rule {
            VolterraRule::Chebyshev => chebyshev_lobatto(self.t_lo, self.t_hi, n),
            VolterraRule::Trapezoid => (0..=n)
                .map(|k| self.t_lo + (self.t_hi - self.t_lo) * T::of_usize(k) / T::of_usize(n))
                .collect(),
        }
    }

    /// `W[i][j]` with `sum_j W[i][j] g(t_j) ~ int_{t_i}^{t_hi} g`.
    fn tail_weights(&self, grid: &[T]) -> Vec<Vec<T>> {
        let n = grid.len() - 1;
        match self.rule {
            VolterraRule::Chebyshev => chebyshev_tail_integration(self.t_lo, self.t_hi, n),
            VolterraRule::Trapezoid => {
                let h = (self.t_hi - self.t_lo) / T::of_usize(n);
                let half = h / T::lit(2.0);
                (0..=n)
                    .map(|i| {
                        (0..=n)
                            .map(|j| {
                                if j < i || i == n {
                                    T::zero()
                                } else if j == i || j == n {
                                    half
                                } else {
                                    h
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraReport<T> {
    pub final_norm: T,
    /// Sup norms of `S_0, S_1, ..., S_iters`.
    pub norm_history: Vec<T>,
    /// Max-norm of the kernel matrix (row sums) over the grid.
    pub kernel_bound: T,
    pub interval_length: T,
}

impl<T: Real> VolterraReport<T> {
    /// `(M L)^k / k! * ||S_0||`.
    pub fn factorial_bound(&self, k: usize) -> T {
        let ml = self.kernel_bound * self.interval_length;
        let mut b = self.norm_history[0];
        for j in 1..=k {
            b = b * ml / T::of_usize(j);
        }
        b
    }
}

/// Picard iteration `S_{k+1}(t) = -int_t^{t_hi} K(x, t) S_k(x) dx` on the grid.
pub fn volterra_trivial_check<T, F>(vp: &VolterraProblem<T>, s0: F, iters: usize) -> Result<VolterraReport<T>>
where
    T: Real,
    F: Fn(T) -> Vec<T>,
{
    if iters == 0 {
        return Err(Error::Validation("iters must be at least 1".into()));
    }
    if vp.dimension == 0 || vp.grid_n < 2 || !(vp.t_hi > vp.t_lo) {
        return Err(Error::Validation("Volterra problem needs dimension >= 1, grid_n >= 2 and t_hi > t_lo".into()));
    }
    let d = vp.dimension;
    let grid = vp.grid();
    let m = grid.len();
    // kmat[i][j] = K(x_j, t_i)
    let mut kmat: Vec<Vec<Vec<T>>> = Vec::with_capacity(m);
    let mut bound = T::zero();
    for &t in &grid {
        let mut row = Vec::with_capacity(m);
        for &x in &grid {
            let k = (vp.kernel)(x, t);
            if k.len() != d * d {
                return Err(Error::Validation(format!("kernel returned {} entries, expected {}", k.len(), d * d)));
            }
            for r in 0..d {
                let s = (0..d).fold(T::zero(), |acc, c| acc + k[r * d + c].abs());
                if !s.is_finite() || s > vp.guard {
                    return Err(Error::UnboundedKernel {
                        max: s.as_f64(),
                        guard: vp.guard.as_f64(),
                    });
                }
                bound = bound.max(s);
            }
            row.push(k);
        }
        kmat.push(row);
    }
    let w = vp.tail_weights(&grid);
    let mut s: Vec<Vec<T>> = grid.iter().map(|&t| s0(t)).collect();
    if s.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
        return Err(Error::Validation("initial function must be finite with the kernel's dimension".into()));
    }
    let sup = |s: &[Vec<T>]| s.iter().flatten().fold(T::zero(), |a, v| a.max(v.abs()));
    let mut history = vec![sup(&s)];
    for _ in 0..iters {
        let next: Vec<Vec<T>> = (0..m)
            .map(|i| {
                let mut acc = vec![T::zero(); d];
                for j in 0..m {
                    let wij = w[i][j];
                    if wij == T::zero() {
                        continue;
                    }
                    let k = &kmat[i][j];
                    for r in 0..d {
                        let ks = (0..d).fold(T::zero(), |a, c| a + k[r * d + c] * s[j][c]);
                        acc[r] = acc[r] - wij * ks;
                    }
                }
                acc
            })
            .collect();
        s = next;
        history.push(sup(&s));
    }
    Ok(VolterraReport {
        final_norm: *history.last().unwrap(),
        norm_history: history,
        kernel_bound: bound,
        interval_length: vp.t_hi - vp.t_lo,
    })
}

/// CSV with columns `k,norm`.
pub fn write_volterra_csv<T: Real, W: Write>(out: &mut W, r: &VolterraReport<T>) -> std::io::Result<()> {
    writeln!(out, "k,norm")?;
    for (k, v) in r.norm_history.iter().enumerate() {
        writeln!(out, "{k},{:.16e}", v.as_f64())?;
    }
    Ok(())
}
