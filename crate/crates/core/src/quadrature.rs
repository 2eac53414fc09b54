//! Gauss-Legendre rules and Chebyshev-Lobatto spectral integration.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        // Newton on P_n in f64, which is exact enough for f32 and f64 targets.
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Chebyshev-Lobatto points `t_j` on `[lo, hi]`, ascending, `j = 0..=n`.
pub fn chebyshev_lobatto<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let half = (hi - lo) / T::lit(2.0);
    let mid = (hi + lo) / T::lit(2.0);
    (0..=n)
        .map(|j| {
            // u_j = -cos(j pi / n), ascending from -1 to 1
            let u = -(T::PI() * T::of_usize(j) / T::of_usize(n)).cos();
            mid + half * u
        })
        .collect()
}

/// Matrix `W` with `sum_j W[i][j] f(t_j) = integral of the interpolant of f over [t_i, hi]`,
/// where `t` are the Chebyshev-Lobatto points from [`chebyshev_lobatto`].
///
/// Exact for polynomials of degree `<= n`.
pub fn chebyshev_tail_integration<T: Real>(lo: T, hi: T, n: usize) -> Vec<Vec<T>> {
    assert!(n >= 1);
    let half = (hi - lo) / T::lit(2.0);
    let us: Vec<T> = (0..=n)
        .map(|j| -(T::PI() * T::of_usize(j) / T::of_usize(n)).cos())
        .collect();
    // Coefficient map: c_k = sum_j A[k][j] f_j.
    let two_over_n = T::lit(2.0) / T::of_usize(n);
    let mut coef = vec![vec![T::zero(); n + 1]; n + 1];
    for (k, row) in coef.iter_mut().enumerate() {
        for (j, a) in row.iter_mut().enumerate() {
            let mut v = two_over_n * cheb(k, us[j]);
            if j == 0 || j == n {
                v = v / T::lit(2.0);
            }
            if k == 0 || k == n {
                v = v / T::lit(2.0);
            }
            *a = v;
        }
    }
    // Tail integral of each basis polynomial from u_i to 1.
    let tail: Vec<Vec<T>> = us
        .iter()
        .map(|&u| {
            (0..=n)
                .map(|k| cheb_antiderivative(k, T::one()) - cheb_antiderivative(k, u))
                .collect()
        })
        .collect();
    (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    let s = (0..=n).fold(T::zero(), |acc, k| acc + tail[i][k] * coef[k][j]);
                    s * half
                })
                .collect()
        })
        .collect()
}

fn cheb<T: Real>(k: usize, u: T) -> T {
    let uc = u.max(-T::one()).min(T::one());
    (T::of_usize(k) * uc.acos()).cos()
}

fn cheb_antiderivative<T: Real>(k: usize, u: T) -> T {
    match k {
        0 => u,
        1 => u * u / T::lit(2.0),
        _ => {
            let kk = T::of_usize(k);
            cheb(k + 1, u) / (T::lit(2.0) * (kk + T::one()))
                - cheb(k - 1, u) / (T::lit(2.0) * (kk - T::one()))
        }
    }
}
