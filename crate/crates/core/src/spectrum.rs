//! Eigenvalue enumeration: windows from the asymptotic estimates, Newton
//! refinement on `Delta`, a real-axis audit scan and argument-principle counts.

use std::cmp::Ordering;
use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::asymptotics::{self, EstimateSource};
use crate::error::{Error, Result};
use crate::forward::{self, IntegratorSettings};
use crate::model::{ProblemSpec, Side};
use crate::quadrature::GaussLegendre;
use crate::scalar::Real;

/// Roots closer than this are merged.
pub const MERGE_RADIUS: f64 = 1e-8;
/// Imaginary offset of the extra starts used when a jump carries `gamma != 0`.
pub const IMAG_PROBE: f64 = 0.1;
const MAX_NEWTON: usize = 50;
const STAGNATION_LIMIT: usize = 3;
const AUDIT_EXTENSIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Window<T> {
    pub fn center(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry<T> {
    pub index: usize,
    pub lambda: Complex<T>,
    /// `|Delta(lambda)|`
    pub residual: T,
    pub iterations: usize,
    pub source_window: Window<T>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub entries: Vec<SpectrumEntry<T>>,
    /// Eigenvalues that could not be located, or audit minima that did not refine.
    pub failed: usize,
    /// Estimate windows where Newton failed and the audit found no root either.
    pub stray_windows: usize,
    pub estimate_source: EstimateSource,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.failed == 0
    }

    pub fn lambdas(&self) -> Vec<Complex<T>> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    /// First `n` entries, re-indexed.
    pub fn truncated(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.entries.truncate(n);
        s
    }

    /// Spectrum made of bare eigenvalues, e.g. read back from a file.
    pub fn from_lambdas(lambdas: &[Complex<T>]) -> Self {
        let entries = lambdas
            .iter()
            .enumerate()
            .map(|(index, &lambda)| SpectrumEntry {
                index,
                lambda,
                residual: T::zero(),
                iterations: 0,
                source_window: Window {
                    lo: lambda.re,
                    hi: lambda.re,
                },
                converged: true,
            })
            .collect();
        Self {
            entries,
            failed: 0,
            stray_windows: 0,
            estimate_source: EstimateSource::Asymptotic,
        }
    }
}

/// Intervals around the estimates with half-width `0.45` times the local gap.
pub fn bracket_windows<T: Real>(spec: &ProblemSpec<T>, n_max: usize) -> Result<Vec<Window<T>>> {
    let est = asymptotics::eigenvalue_estimates(spec, n_max)?;
    Ok(windows_around(&est.values, asymptotics::spacing_estimate(spec)))
}

fn windows_around<T: Real>(centers: &[T], fallback_gap: T) -> Vec<Window<T>> {
    let n = centers.len();
    let f = T::lit(0.45);
    (0..n)
        .map(|i| {
            let left = if i > 0 { centers[i] - centers[i - 1] } else { T::infinity() };
            let right = if i + 1 < n { centers[i + 1] - centers[i] } else { T::infinity() };
            let mut gap = left.min(right);
            if !gap.is_finite() {
                gap = fallback_gap;
            }
            Window {
                lo: centers[i] - f * gap,
                hi: centers[i] + f * gap,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult<T> {
    pub lambda: Complex<T>,
    pub residual: T,
    pub iterations: usize,
    /// False when the iteration hit a flat spot or ran out of steps; `lambda`
    /// is then the best iterate seen.
    pub converged: bool,
}

/// Newton's method on `Delta` with a Muller fallback after repeated stagnation.
/// Converged when `|Delta| <= tol * max(1, |Delta'|)`.
pub fn refine_root<T: Real>(
    spec: &ProblemSpec<T>,
    lambda0: Complex<T>,
    tol: T,
    cfg: &IntegratorSettings<T>,
) -> Result<RootResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Validation("refinement tolerance must be positive".into()));
    }
    if !(lambda0.re.is_finite() && lambda0.im.is_finite()) {
        return Err(Error::Domain("start point must be finite".into()));
    }
    let max_move = T::one();
    let mut z = lambda0;
    let (mut f, mut df) = forward::char_fn_with_derivative(spec, z, cfg)?;
    let mut best = (z, f.norm());
    let mut history: Vec<(Complex<T>, Complex<T>)> = vec![(z, f)];
    let mut stagnant = 0usize;
    for it in 0..=MAX_NEWTON {
        let scale = T::one().max(df.norm());
        if f.norm() <= tol * scale {
            return Ok(RootResult {
                lambda: z,
                residual: f.norm(),
                iterations: it,
                converged: true,
            });
        }
        if it == MAX_NEWTON {
            break;
        }
        let step = if stagnant >= STAGNATION_LIMIT && history.len() >= 3 {
            let k = history.len();
            muller_step(history[k - 3], history[k - 2], history[k - 1])
        } else {
            if !(df.norm() > T::epsilon().sqrt() * f.norm()) || !df.re.is_finite() || !df.im.is_finite() {
                break;
            }
            Some(f / df)
        };
        let Some(mut dz) = step else { break };
        if dz.norm() > max_move {
            dz = dz * (max_move / dz.norm());
        }
        let z_new = z - dz;
        let (f_new, df_new) = forward::char_fn_with_derivative(spec, z_new, cfg)?;
        if f_new.norm() >= f.norm() {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        z = z_new;
        f = f_new;
        df = df_new;
        history.push((z, f));
        if f.norm() < best.1 {
            best = (z, f.norm());
        }
        if dz.norm() <= T::lit(4.0) * T::epsilon() * z.norm().max(T::one()) {
            break;
        }
    }
    let residual = best.1;
    let scale = T::one().max(forward::char_fn_derivative(spec, best.0, cfg)?.norm());
    Ok(RootResult {
        lambda: best.0,
        residual,
        iterations: history.len() - 1,
        converged: residual <= tol * scale,
    })
}

/// Step `z2 - z3` of Muller's method through three samples.
fn muller_step<T: Real>(
    a: (Complex<T>, Complex<T>),
    b: (Complex<T>, Complex<T>),
    c: (Complex<T>, Complex<T>),
) -> Option<Complex<T>> {
    let (x0, f0) = a;
    let (x1, f1) = b;
    let (x2, f2) = c;
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    if h1.norm() == T::zero() || h2.norm() == T::zero() || (h1 + h2).norm() == T::zero() {
        return None;
    }
    let d1 = (f1 - f0) / h1;
    let d2 = (f2 - f1) / h2;
    let a2 = (d2 - d1) / (h2 + h1);
    let b2 = a2 * h2 + d2;
    let disc = (b2 * b2 - a2 * f2 * T::lit(4.0)).sqrt();
    let den = if (b2 + disc).norm() > (b2 - disc).norm() { b2 + disc } else { b2 - disc };
    if den.norm() == T::zero() {
        return None;
    }
    Some(f2 * T::lit(2.0) / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions<T> {
    pub tol: T,
    /// Extra starts at `center +- i IMAG_PROBE`; defaults to on whenever a jump has `gamma != 0`.
    pub complex_probe: Option<bool>,
    /// Preferred estimate source for the windows.
    pub source: EstimateSource,
    /// Run the real-axis audit scan that picks up roots the windows missed.
    pub audit_scan: bool,
    pub integrator: IntegratorSettings<T>,
}

impl<T: Real> Default for SpectrumOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10).max(T::lit(1e3) * T::epsilon()),
            complex_probe: None,
            source: EstimateSource::Asymptotic,
            audit_scan: true,
            integrator: IntegratorSettings::default(),
        }
    }
}

/// First `n_max` eigenvalues with nonnegative real part. Fails with
/// `IncompleteSpectrum` if an eigenvalue could not be located (see [`Spectrum::failed`]); see
/// [`compute_spectrum_partial`] for the flagged partial result.
pub fn compute_spectrum<T: Real>(spec: &ProblemSpec<T>, n_max: usize, tol: T) -> Result<Spectrum<T>> {
    let opts = SpectrumOptions {
        tol,
        ..SpectrumOptions::default()
    };
    let s = compute_spectrum_partial(spec, n_max, &opts)?;
    if !s.is_complete() {
        return Err(Error::IncompleteSpectrum { failed: s.failed });
    }
    Ok(s)
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    root: RootResult<T>,
    window: Window<T>,
}

/// Spectrum assembly that reports non-converged windows instead of failing.
pub fn compute_spectrum_partial<T: Real>(
    spec: &ProblemSpec<T>,
    n_max: usize,
    opts: &SpectrumOptions<T>,
) -> Result<Spectrum<T>> {
    if n_max == 0 {
        return Err(Error::Validation("n_max must be at least 1".into()));
    }
    let cfg = &opts.integrator;
    let est = asymptotics::eigenvalue_estimates_with(spec, n_max, opts.source, cfg)?;
    let gap = asymptotics::spacing_estimate(spec);
    let windows = windows_around(&est.values, gap);
    let probe = opts.complex_probe.unwrap_or(!spec.is_gamma_free());

    let mut starts: Vec<(Complex<T>, Window<T>)> = Vec::new();
    for w in &windows {
        let c = w.center();
        starts.push((Complex::new(c, T::zero()), *w));
        if probe {
            let d = T::lit(IMAG_PROBE);
            starts.push((Complex::new(c, d), *w));
            starts.push((Complex::new(c, -d), *w));
        }
    }
    let mut cands = refine_all(spec, &starts, opts.tol, cfg)?;
    let mut failed_windows: Vec<Window<T>> = Vec::new();
    for w in &windows {
        let mine: Vec<&Candidate<T>> = cands.iter().filter(|c| c.window == *w).collect();
        if !mine.iter().any(|c| c.root.converged) {
            failed_windows.push(*w);
        }
    }

    // Audit starts whose refinement failed, by real part of the start.
    let mut audit_failures: Vec<T> = Vec::new();
    if opts.audit_scan {
        // Exploratory: failures here say nothing about missing eigenvalues.
        let boxed = refine_all(spec, &low_box_starts(spec), opts.tol, cfg)?;
        cands.extend(boxed.into_iter().filter(|c| c.root.converged));
        let reach = windows.last().map(|w| w.hi).unwrap_or(T::zero());
        let mut lo = T::zero();
        let mut hi = reach.max(T::of_usize(n_max) * gap + T::lit(5.0));
        let step = T::lit(0.01).min(gap / T::lit(20.0));
        // misplaced estimates can leave the n-th root beyond the first range
        for _ in 0..AUDIT_EXTENSIONS {
            let (more, stalled) = audit_range(spec, lo, hi, step, opts.tol, cfg)?;
            audit_failures.extend(stalled);
            cands.extend(more);
            if merge_roots(&cands).len() >= n_max {
                break;
            }
            // overlap by one step so the old end is judged as an interior point
            lo = hi - step;
            hi = hi * T::lit(2.0);
        }
        failed_windows.retain(|w| {
            !cands
                .iter()
                .any(|c| c.root.converged && w.contains(c.root.lambda.re))
        });
    }

    let mut merged = merge_roots(&cands);
    merged.truncate(n_max);
    let shortfall = n_max.saturating_sub(merged.len());
    // With the audit on, a window that failed and holds no root only means its
    // estimate was misplaced; what counts is a shortfall or an audit minimum
    // below the last accepted root that did not refine.
    let (failed, stray_windows) = if opts.audit_scan {
        let cutoff = if shortfall == 0 {
            merged.last().map(|c| c.root.lambda.re).unwrap_or(T::zero())
        } else {
            T::infinity()
        };
        let below = audit_failures.iter().filter(|&&x| x <= cutoff).count();
        (shortfall + below, failed_windows.len())
    } else {
        (failed_windows.len().max(shortfall), 0)
    };
    let entries = merged
        .into_iter()
        .enumerate()
        .map(|(index, c)| SpectrumEntry {
            index,
            lambda: c.root.lambda,
            residual: c.root.residual,
            iterations: c.root.iterations,
            source_window: c.window,
            converged: c.root.converged,
        })
        .collect();
    Ok(Spectrum {
        entries,
        failed,
        stray_windows,
        estimate_source: est.source,
    })
}

/// Converged roots with nonnegative real part, sorted, duplicates within
/// [`MERGE_RADIUS`] collapsed onto the smaller residual.
fn merge_roots<T: Real>(cands: &[Candidate<T>]) -> Vec<Candidate<T>> {
    let radius = T::lit(MERGE_RADIUS);
    let mut roots: Vec<Candidate<T>> = cands
        .iter()
        .filter(|c| c.root.converged && c.root.lambda.re >= -radius)
        .map(|c| {
            let mut c = *c;
            // roots on the imaginary axis carry round-off in the real part
            if c.root.lambda.re < radius {
                c.root.lambda.re = c.root.lambda.re.max(T::zero());
            }
            c
        })
        .collect();
    roots.sort_by(|a, b| order(&a.root.lambda, &b.root.lambda));
    let mut merged: Vec<Candidate<T>> = Vec::with_capacity(roots.len());
    for c in roots {
        match merged.iter_mut().find(|m| (m.root.lambda - c.root.lambda).norm() < radius) {
            Some(m) => {
                if c.root.residual < m.root.residual {
                    *m = c;
                }
            }
            None => merged.push(c),
        }
    }
    merged.sort_by(|a, b| order(&a.root.lambda, &b.root.lambda));
    merged
}

/// Refines every local minimum of `|Delta|` on `[lo, hi]`. Returns the
/// candidates and the centers of minima that refined nowhere.
fn audit_range<T: Real>(
    spec: &ProblemSpec<T>,
    lo: T,
    hi: T,
    step: T,
    tol: T,
    cfg: &IntegratorSettings<T>,
) -> Result<(Vec<Candidate<T>>, Vec<T>)> {
    let extra = audit_starts(spec, lo, hi, step, cfg)?;
    let mut more = refine_all(spec, &extra, tol, cfg)?;
    // A stalled start may sit below a root off the axis, e.g. at 0 under an
    // imaginary eigenvalue, where Delta' vanishes.
    let d = T::lit(IMAG_PROBE);
    let retry: Vec<(Complex<T>, Window<T>)> = more
        .iter()
        .filter(|c| !c.root.converged)
        .flat_map(|c| {
            let x = c.window.center();
            [(Complex::new(x, d), c.window), (Complex::new(x, -d), c.window)]
        })
        .collect();
    let again = refine_all(spec, &retry, tol, cfg)?;
    let stalled = more
        .iter()
        .filter(|c| !c.root.converged)
        .filter(|c| !again.iter().any(|a| a.window == c.window && a.root.converged))
        .map(|c| c.window.center())
        .collect();
    more.extend(again);
    Ok((more, stalled))
}

fn order<T: Real>(a: &Complex<T>, b: &Complex<T>) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

fn refine_all<T: Real>(
    spec: &ProblemSpec<T>,
    starts: &[(Complex<T>, Window<T>)],
    tol: T,
    cfg: &IntegratorSettings<T>,
) -> Result<Vec<Candidate<T>>> {
    starts
        .par_iter()
        .map(|&(z, window)| {
            Ok(Candidate {
                root: refine_root(spec, z, tol, cfg)?,
                window,
            })
        })
        .collect()
}

/// Local minima of `|Delta|` on `[lo, hi]`, each with a window one step wide
/// on either side. Of the two ends only `lo = 0` can count.
fn audit_starts<T: Real>(
    spec: &ProblemSpec<T>,
    lo: T,
    hi: T,
    step: T,
    cfg: &IntegratorSettings<T>,
) -> Result<Vec<(Complex<T>, Window<T>)>> {
    let n = ((hi - lo) / step).ceil().to_usize().unwrap_or(0);
    let xs: Vec<T> = (0..=n).map(|k| lo + T::of_usize(k) * step).collect();
    let vals: Vec<T> = xs
        .par_iter()
        .map(|&x| Ok(forward::char_fn(spec, Complex::new(x, T::zero()), cfg)?.norm()))
        .collect::<Result<_>>()?;
    // 0 is judged against its mirror point; without p that is a tie
    let edge = if lo == T::zero() {
        forward::char_fn(spec, Complex::new(-step, T::zero()), cfg)?.norm()
    } else {
        T::neg_infinity()
    };
    let mut out = Vec::new();
    for k in 0..=n {
        let left = if k > 0 { vals[k - 1] } else { edge };
        let right = if k < n { vals[k + 1] } else { T::neg_infinity() };
        if vals[k] <= left && vals[k] < right {
            let w = Window {
                lo: xs[k] - step,
                hi: xs[k] + step,
            };
            out.push((Complex::new(xs[k], T::zero()), w));
        }
    }
    Ok(out)
}

/// Starts covering the box that holds every non-real eigenvalue when the
/// jumps carry no `gamma`: `|Re| <= max|p| / delta_min` and
/// `|Im| <= sqrt(max(-q) / delta_min)`, from the energy identity. Empty when
/// `q >= 0`, where no such eigenvalue exists.
fn low_box_starts<T: Real>(spec: &ProblemSpec<T>) -> Vec<(Complex<T>, Window<T>)> {
    let n = 512;
    let (mut p_max, mut q_neg) = (T::zero(), T::zero());
    for k in 0..=n {
        let x = T::PI() * T::of_usize(k) / T::of_usize(n);
        for side in [Side::Left, Side::Right] {
            let (p, q) = spec.potentials().eval_on(x, side);
            p_max = p_max.max(p.abs());
            q_neg = q_neg.max(-q);
        }
    }
    let w = spec.weight();
    let delta_min = (w.alpha * w.alpha).min(w.beta * w.beta);
    let h = (q_neg / delta_min).sqrt();
    if !(h > T::zero()) {
        return Vec::new();
    }
    let r = p_max / delta_min;
    let spacing = T::lit(0.25);
    let count = |len: T| (len / spacing).ceil().to_usize().unwrap_or(1).clamp(1, 40);
    let (nx, ny) = (count(r), count(T::lit(2.0) * h));
    let window = Window { lo: T::zero(), hi: r };
    let mut out = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let re = r * T::of_usize(i) / T::of_usize(nx);
            let im = -h + T::lit(2.0) * h * T::of_usize(j) / T::of_usize(ny);
            out.push((Complex::new(re, im), window));
        }
    }
    out
}

/// Axis-aligned rectangle in the lambda plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub re_lo: T,
    pub re_hi: T,
    pub im_lo: T,
    pub im_hi: T,
}

impl<T: Real> Rect<T> {
    pub fn new(re_lo: T, re_hi: T, im_lo: T, im_hi: T) -> Self {
        Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        }
    }

    /// Counter-clockwise corners starting at the lower left.
    fn corners(&self) -> [Complex<T>; 4] {
        [
            Complex::new(self.re_lo, self.im_lo),
            Complex::new(self.re_hi, self.im_lo),
            Complex::new(self.re_hi, self.im_hi),
            Complex::new(self.re_lo, self.im_hi),
        ]
    }
}

/// Raw value of `(1 / 2 pi i) * contour integral of Delta'/Delta`.
pub fn winding_value<T: Real>(
    spec: &ProblemSpec<T>,
    rect: &Rect<T>,
    quad_n: usize,
    cfg: &IntegratorSettings<T>,
) -> Result<Complex<T>> {
    if quad_n < 64 {
        return Err(Error::Validation("quad_n must be at least 64".into()));
    }
    if !(rect.re_hi > rect.re_lo && rect.im_hi > rect.im_lo) {
        return Err(Error::Validation("rectangle must have positive extent".into()));
    }
    let gl = GaussLegendre::<T>::new(16);
    let corners = rect.corners();
    let perimeter = T::lit(2.0) * ((rect.re_hi - rect.re_lo) + (rect.im_hi - rect.im_lo));
    let min_panels = quad_n.div_ceil(16);
    let mut nodes: Vec<(Complex<T>, Complex<T>)> = Vec::new();
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let len = (b - a).norm();
        let by_len = (len / T::lit(0.25)).ceil().to_usize().unwrap_or(1);
        let by_count = (T::of_usize(min_panels) * len / perimeter).ceil().to_usize().unwrap_or(1);
        let panels = by_len.max(by_count).max(1);
        let dir = (b - a) / len;
        for k in 0..panels {
            let s0 = len * T::of_usize(k) / T::of_usize(panels);
            let s1 = len * T::of_usize(k + 1) / T::of_usize(panels);
            for (s, w) in gl.on(s0, s1) {
                nodes.push((a + dir * s, dir * w));
            }
        }
    }
    let terms: Vec<Complex<T>> = nodes
        .par_iter()
        .map(|&(z, dz)| {
            let (f, df) = forward::char_fn_with_derivative(spec, z, cfg)?;
            if f.norm() == T::zero() {
                return Err(Error::BoundaryRoot {
                    re: z.re.as_f64(),
                    im: z.im.as_f64(),
                });
            }
            Ok(df / f * dz)
        })
        .collect::<Result<_>>()?;
    let total = terms.iter().fold(Complex::new(T::zero(), T::zero()), |s, t| s + t);
    let two_pi_i = Complex::new(T::zero(), T::lit(2.0) * T::PI());
    Ok(total / two_pi_i)
}

/// Number of zeros of `Delta` inside `rect`.
pub fn argument_principle_count<T: Real>(
    spec: &ProblemSpec<T>,
    rect: &Rect<T>,
    quad_n: usize,
    cfg: &IntegratorSettings<T>,
) -> Result<usize> {
    let v = winding_value(spec, rect, quad_n, cfg)?;
    let n = v.re.round();
    let off = ((v.re - n).powi(2) + v.im.powi(2)).sqrt();
    if !(off < T::lit(0.1)) || n < T::zero() {
        return Err(Error::BoundaryRoot {
            re: v.re.as_f64(),
            im: v.im.as_f64(),
        });
    }
    Ok(n.to_usize().unwrap_or(0))
}

/// Rectangle spanning the given windows with the given imaginary half-height.
pub fn enclosing_rect<T: Real>(windows: &[Window<T>], half_height: T) -> Option<Rect<T>> {
    let lo = windows.iter().map(|w| w.lo).reduce(T::min)?;
    let hi = windows.iter().map(|w| w.hi).reduce(T::max)?;
    Some(Rect::new(lo, hi, -half_height, half_height))
}

/// CSV with columns `n,re_lambda,im_lambda,residual,iterations,flags`.
pub fn write_spectrum_csv<T: Real, W: Write>(out: &mut W, s: &Spectrum<T>) -> std::io::Result<()> {
    writeln!(out, "n,re_lambda,im_lambda,residual,iterations,flags")?;
    for e in &s.entries {
        let flag = if e.converged { "ok" } else { "nonconverged" };
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{},{}",
            e.index,
            e.lambda.re.as_f64(),
            e.lambda.im.as_f64(),
            e.residual.as_f64(),
            e.iterations,
            flag
        )?;
    }
    Ok(())
}
