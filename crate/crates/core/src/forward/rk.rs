//! Dormand-Prince 5(4) stepping for small complex systems.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) type Vector<T, const N: usize> = [Complex<T>; N];

/// Step-size control parameters in the working precision.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Control<T> {
    pub rtol: T,
    pub atol: T,
    pub max_step: T,
    pub max_steps: usize,
}

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        Self {
            c: C.map(T::lit),
            a: A.map(|row| row.map(T::lit)),
            e: E.map(T::lit),
        }
    }
}

fn finite<T: Real, const N: usize>(v: &Vector<T, N>) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// One Dormand-Prince step. Returns the 5th-order solution, the derivative at
/// the new point (FSAL) and the embedded error estimate.
fn step<T, F, const N: usize>(
    tab: &Tableau<T>,
    rhs: &F,
    x: T,
    y: &Vector<T, N>,
    k1: &Vector<T, N>,
    h: T,
) -> (Vector<T, N>, Vector<T, N>, Vector<T, N>)
where
    T: Real,
    F: Fn(T, &Vector<T, N>) -> Vector<T, N>,
{
    let zero = Complex::new(T::zero(), T::zero());
    let mut k: [Vector<T, N>; 7] = [[zero; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut ys = *y;
        for (i, yi) in ys.iter_mut().enumerate() {
            let mut acc = zero;
            for (kj, &a) in k.iter().zip(&tab.a[s][..s]) {
                if a != T::zero() {
                    acc = acc + kj[i] * a;
                }
            }
            *yi = *yi + acc * h;
        }
        if s == 6 {
            // Stage 7 is evaluated at the 5th-order solution itself (FSAL).
            k[6] = rhs(x + h, &ys);
            let mut err = [zero; N];
            for (i, ei) in err.iter_mut().enumerate() {
                let mut acc = zero;
                for (j, kj) in k.iter().enumerate() {
                    acc = acc + kj[i] * tab.e[j];
                }
                *ei = acc * h;
            }
            return (ys, k[6], err);
        }
        k[s] = rhs(x + tab.c[s] * h, &ys);
    }
    unreachable!()
}

/// Adaptive integration from `x0` to `x1`. `h` carries the step-size guess in
/// and the last proposed step out. Accepted step endpoints are pushed onto
/// `mesh` when given.
pub(crate) fn integrate<T, F, const N: usize>(
    rhs: &F,
    x0: T,
    x1: T,
    y0: Vector<T, N>,
    ctl: &Control<T>,
    h: &mut T,
    mut mesh: Option<&mut Vec<T>>,
) -> Result<Vector<T, N>>
where
    T: Real,
    F: Fn(T, &Vector<T, N>) -> Vector<T, N>,
{
    let span = x1 - x0;
    if span <= T::zero() {
        return Ok(y0);
    }
    let tab = Tableau::new();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, &y);
    let mut hh = if *h > T::zero() { *h } else { ctl.max_step };
    hh = hh.min(ctl.max_step).min(span);
    let safety = T::lit(0.9);
    let fac_min = T::lit(0.2);
    let fac_max = T::lit(5.0);
    let expo = T::lit(-0.2);
    let eps = T::epsilon();
    let mut rejected = false;
    let mut steps = 0usize;
    loop {
        if steps >= ctl.max_steps {
            return Err(Error::StepFailure {
                x: x.as_f64(),
                reason: format!("exceeded {} steps", ctl.max_steps),
            });
        }
        steps += 1;
        let remaining = x1 - x;
        let tiny = T::lit(16.0) * eps * x1.abs().max(T::one());
        // Never leave a sliver shorter than `tiny` for a final step.
        let last = hh >= remaining - tiny;
        let h_try = if last { remaining } else { hh };
        if !last && h_try <= tiny {
            return Err(Error::StepFailure {
                x: x.as_f64(),
                reason: format!("step size underflow (h = {})", h_try),
            });
        }
        let (y_new, k_new, err) = step(&tab, rhs, x, &y, &k1, h_try);
        let mut norm = T::zero();
        for i in 0..N {
            let sc = ctl.atol + ctl.rtol * y[i].norm().max(y_new[i].norm());
            let r = err[i].norm() / sc;
            norm = norm + r * r;
        }
        norm = (norm / T::of_usize(N)).sqrt();
        if !norm.is_finite() {
            if !finite(&y_new) {
                return Err(Error::NonFinite { x: x.as_f64() });
            }
            hh = h_try * fac_min;
            rejected = true;
            continue;
        }
        if norm <= T::one() {
            x = if last { x1 } else { x + h_try };
            y = y_new;
            k1 = k_new;
            if !finite(&y) {
                return Err(Error::NonFinite { x: x.as_f64() });
            }
            if let Some(m) = mesh.as_deref_mut() {
                m.push(x);
            }
            let mut fac = if norm == T::zero() { fac_max } else { safety * norm.powf(expo) };
            fac = fac.max(fac_min).min(if rejected { T::one() } else { fac_max });
            hh = (h_try * fac).min(ctl.max_step);
            rejected = false;
            if last {
                *h = hh;
                return Ok(y);
            }
        } else {
            let fac = (safety * norm.powf(expo)).max(fac_min);
            hh = h_try * fac;
            rejected = true;
        }
    }
}

/// Replays one Dormand-Prince step per consecutive pair of `nodes`.
pub(crate) fn integrate_on_nodes<T, F, const N: usize>(
    rhs: &F,
    nodes: &[T],
    y0: Vector<T, N>,
) -> Result<Vector<T, N>>
where
    T: Real,
    F: Fn(T, &Vector<T, N>) -> Vector<T, N>,
{
    let tab = Tableau::new();
    let mut y = y0;
    let Some(&first) = nodes.first() else {
        return Ok(y);
    };
    let mut k1 = rhs(first, &y);
    for w in nodes.windows(2) {
        let h = w[1] - w[0];
        if h <= T::zero() {
            continue;
        }
        let (y_new, k_new, _) = step(&tab, rhs, w[0], &y, &k1, h);
        if !finite(&y_new) {
            return Err(Error::NonFinite { x: w[1].as_f64() });
        }
        y = y_new;
        k1 = k_new;
    }
    Ok(y)
}
