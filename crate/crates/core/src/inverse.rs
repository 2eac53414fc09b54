//! Half-inverse reconstruction: recover `p` and `q` on `[0, pi/2]` from
//! eigenvalues and the known right half, by Levenberg-Marquardt on the
//! characteristic function evaluated at the target eigenvalues.
//!
//! This module works in `f64` only; the linear algebra runs on nalgebra.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{self, IntegratorSettings, Mesh};
use crate::model::{
    HalfBasis, HalfExpansion, JumpCondition, PiecewiseWeight, Potentials, ProblemSpec, Side, ValidationMode,
};
use crate::quadrature::GaussLegendre;
use crate::spectrum::Spectrum;

type C64 = Complex<f64>;

/// Settings of [`reconstruct`] and [`uniqueness_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    /// Expansion terms per potential on `[0, pi/2]`.
    pub basis_dim: usize,
    pub basis: HalfBasis,
    /// Number of target eigenvalues used, at least `2 * basis_dim`.
    pub n_eigen: usize,
    /// Tikhonov weight on the coefficient vector.
    pub regularization: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub multistart: usize,
    pub seed: u64,
    /// Relative forward-difference step for Jacobian columns.
    pub fd_step: f64,
    /// A multistart run only counts as converged if its final residual norm is below this.
    pub fit_tol: f64,
    /// Weight of the optional continuity penalty at `pi/2`; zero disables it.
    pub continuity_weight: f64,
    pub integrator: IntegratorSettings<f64>,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            basis_dim: 6,
            basis: HalfBasis::Chebyshev,
            n_eigen: 24,
            regularization: 1e-8,
            max_iter: 100,
            grad_tol: 1e-10,
            step_tol: 1e-12,
            multistart: 1,
            seed: 42,
            fd_step: 1e-6,
            fit_tol: 1e-4,
            continuity_weight: 0.0,
            integrator: IntegratorSettings::default(),
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self, target_len: usize) -> Result<()> {
        if self.basis_dim == 0 {
            return Err(Error::Validation("basis_dim must be at least 1".into()));
        }
        if self.n_eigen < 2 * self.basis_dim {
            return Err(Error::Validation(format!(
                "n_eigen = {} < 2 * basis_dim = {}",
                self.n_eigen,
                2 * self.basis_dim
            )));
        }
        if target_len < self.n_eigen {
            return Err(Error::Validation(format!(
                "target has {target_len} eigenvalues, {} requested",
                self.n_eigen
            )));
        }
        if !(self.regularization >= 0.0 && self.fd_step > 0.0 && self.continuity_weight >= 0.0) {
            return Err(Error::Validation(
                "regularization and continuity weight must be nonnegative, fd_step positive".into(),
            ));
        }
        self.integrator.validate()
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    MaxIterations,
    /// Damping grew without finding a decrease.
    Stalled,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Gradient => "grad_tol",
            Termination::Step => "step_tol",
            Termination::MaxIterations => "max_iterations",
            Termination::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub left_p: HalfExpansion<f64>,
    pub left_q: HalfExpansion<f64>,
    /// Recovered left half joined to the known right half.
    pub recovered: Potentials<f64>,
    /// Damped objective after the start and after every accepted step.
    pub objective_history: Vec<f64>,
    /// `||residual_vector||` at the returned coefficients.
    pub final_residual: f64,
    /// Largest over smallest singular value of the last Jacobian.
    pub jacobian_condition: f64,
    /// Set whenever the condition number exceeded `1e12`.
    pub ill_conditioned: bool,
    /// Pairwise L2 distances between converged multistart results.
    pub multistart_distances: Vec<Vec<f64>>,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub seed: u64,
    /// Starts that converged out of those attempted (1 of 1 for a single run).
    pub starts_converged: usize,
    pub starts_total: usize,
}

struct Problem<'a> {
    known_right: &'a Potentials<f64>,
    template: &'a ProblemSpec<f64>,
    lambdas: Vec<C64>,
    cfg: &'a ReconstructionConfig,
}

fn halves(c: &[f64], d: usize, basis: HalfBasis) -> (HalfExpansion<f64>, HalfExpansion<f64>) {
    (
        HalfExpansion::new(basis, c[..d].to_vec()),
        HalfExpansion::new(basis, c[d..2 * d].to_vec()),
    )
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.cfg.basis_dim
    }

    fn spec_for(&self, c: &[f64]) -> Result<ProblemSpec<f64>> {
        let (lp, lq) = halves(c, self.dim(), self.cfg.basis);
        candidate_spec(&lp, &lq, self.known_right, self.template)
    }

    fn penalty_rows(&self, c: &[f64]) -> Vec<f64> {
        if self.cfg.continuity_weight == 0.0 {
            return Vec::new();
        }
        let w = self.cfg.continuity_weight.sqrt();
        let mid = std::f64::consts::FRAC_PI_2;
        let (lp, lq) = halves(c, self.dim(), self.cfg.basis);
        let (rp, rq) = self.known_right.eval_on(mid, Side::Right);
        vec![w * (lp.eval(mid) - rp), w * (lq.eval(mid) - rq)]
    }

    fn penalty_jacobian(&self) -> Vec<Vec<f64>> {
        if self.cfg.continuity_weight == 0.0 {
            return Vec::new();
        }
        let w = self.cfg.continuity_weight.sqrt();
        let d = self.dim();
        let b = HalfExpansion::basis_values(self.cfg.basis, d, std::f64::consts::FRAC_PI_2);
        let mut rp = vec![0.0; 2 * d];
        let mut rq = vec![0.0; 2 * d];
        for k in 0..d {
            rp[k] = w * b[k];
            rq[d + k] = w * b[k];
        }
        vec![rp, rq]
    }

    /// Residual with the meshes the adaptive solves accepted.
    fn residual_recording(&self, c: &[f64]) -> Result<(Vec<f64>, Vec<Mesh<f64>>)> {
        let spec = self.spec_for(c)?;
        let evals: Vec<(C64, Mesh<f64>)> = self
            .lambdas
            .par_iter()
            .map(|&l| forward::char_fn_recording(&spec, l, &self.cfg.integrator))
            .collect::<Result<_>>()?;
        let mut r = Vec::with_capacity(2 * evals.len() + 2);
        let mut meshes = Vec::with_capacity(evals.len());
        for (d, m) in evals {
            r.push(d.re);
            r.push(d.im);
            meshes.push(m);
        }
        r.extend(self.penalty_rows(c));
        Ok((r, meshes))
    }

    fn residual_on(&self, c: &[f64], meshes: &[Mesh<f64>]) -> Result<Vec<f64>> {
        let spec = self.spec_for(c)?;
        let vals: Vec<C64> = self
            .lambdas
            .par_iter()
            .zip(meshes)
            .map(|(&l, m)| forward::char_fn_on_mesh(&spec, l, m))
            .collect::<Result<_>>()?;
        let mut r: Vec<f64> = vals.iter().flat_map(|d| [d.re, d.im]).collect();
        r.extend(self.penalty_rows(c));
        Ok(r)
    }

    /// Forward differences on fixed meshes; rows are `(re, im)` per eigenvalue.
    fn jacobian(&self, c: &[f64], meshes: &[Mesh<f64>], h_rel: f64) -> Result<DMatrix<f64>> {
        let base = self.residual_on(c, meshes)?;
        let n = c.len();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let h = h_rel * c[k].abs().max(1.0);
                let mut ck = c.to_vec();
                ck[k] += h;
                let rk = self.residual_on(&ck, meshes)?;
                Ok(rk.iter().zip(&base).map(|(a, b)| (a - b) / h).collect())
            })
            .collect::<Result<_>>()?;
        let rows = base.len();
        let mut j = DMatrix::from_fn(rows, n, |i, k| cols[k][i]);
        let pen = self.penalty_jacobian();
        let off = rows - pen.len();
        for (i, row) in pen.iter().enumerate() {
            for k in 0..n {
                j[(off + i, k)] = row[k];
            }
        }
        Ok(j)
    }

    fn objective(&self, r: &[f64], c: &[f64]) -> f64 {
        r.iter().map(|v| v * v).sum::<f64>() + self.cfg.regularization * c.iter().map(|v| v * v).sum::<f64>()
    }

    fn data_norm(&self, r: &[f64]) -> f64 {
        let n = 2 * self.lambdas.len();
        r[..n].iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Problem with the candidate's left half joined to `known_right`; weight,
/// jump constants and mode come from `template`.
pub fn candidate_spec(
    left_p: &HalfExpansion<f64>,
    left_q: &HalfExpansion<f64>,
    known_right: &Potentials<f64>,
    template: &ProblemSpec<f64>,
) -> Result<ProblemSpec<f64>> {
    template.with_potentials(Potentials::split(left_p.clone(), left_q.clone(), known_right)?)
}

/// `Delta_candidate(lambda_n)` for every target eigenvalue.
pub fn residual_vector(
    left_p: &HalfExpansion<f64>,
    left_q: &HalfExpansion<f64>,
    known_right: &Potentials<f64>,
    template: &ProblemSpec<f64>,
    target: &Spectrum<f64>,
    cfg: &IntegratorSettings<f64>,
) -> Result<Vec<C64>> {
    let spec = candidate_spec(left_p, left_q, known_right, template)?;
    target
        .entries
        .par_iter()
        .map(|e| forward::char_fn(&spec, e.lambda, cfg))
        .collect()
}

/// Forward-difference Jacobian of the stacked `(re, im)` residual with respect to
/// `[p coefficients, q coefficients]`, using relative step `h_rel`.
pub fn residual_jacobian(
    coeffs: &[f64],
    known_right: &Potentials<f64>,
    template: &ProblemSpec<f64>,
    target: &Spectrum<f64>,
    cfg: &ReconstructionConfig,
    h_rel: f64,
) -> Result<DMatrix<f64>> {
    let prob = Problem {
        known_right,
        template,
        lambdas: target.lambdas(),
        cfg,
    };
    let (_, meshes) = prob.residual_recording(coeffs)?;
    prob.jacobian(coeffs, &meshes, h_rel)
}

fn condition_number(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

struct RunResult {
    coeffs: Vec<f64>,
    history: Vec<f64>,
    final_residual: f64,
    condition: f64,
    ill_conditioned: bool,
    termination: Termination,
    iterations: usize,
}

fn lm(prob: &Problem<'_>, start: Vec<f64>) -> Result<RunResult> {
    let cfg = prob.cfg;
    let n = start.len();
    let mut c = start;
    let (mut r, mut meshes) = prob.residual_recording(&c)?;
    let mut f = prob.objective(&r, &c);
    let mut history = vec![f];
    let mut mu: Option<f64> = None;
    let mut condition = f64::NAN;
    let mut ill = false;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        iterations = it;
        let j = prob.jacobian(&c, &meshes, cfg.fd_step)?;
        condition = condition_number(&j);
        let rv = DVector::from_column_slice(&r);
        let cv = DVector::from_column_slice(&c);
        let g = j.transpose() * &rv + cv * cfg.regularization;
        if g.amax() <= cfg.grad_tol {
            termination = Termination::Gradient;
            break;
        }
        let mut a = j.transpose() * &j;
        for k in 0..n {
            a[(k, k)] += cfg.regularization;
        }
        let diag_max = (0..n).map(|k| a[(k, k)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut damp = mu.unwrap_or(1e-3 * diag_max);
        if condition > 1e12 {
            ill = true;
            damp = damp.max(1e-6 * diag_max);
        }
        let mut accepted = false;
        let mut small_step = false;
        while damp <= 1e16 * diag_max {
            let mut m = a.clone();
            for k in 0..n {
                m[(k, k)] += damp * a[(k, k)].max(1e-12 * diag_max);
            }
            let Some(ch) = m.cholesky() else {
                damp *= 4.0;
                continue;
            };
            let delta = ch.solve(&(-&g));
            let c_new: Vec<f64> = c.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let cn = DVector::from_column_slice(&c).norm();
            small_step = delta.norm() <= cfg.step_tol * (cn + cfg.step_tol);
            let (r_new, meshes_new) = prob.residual_recording(&c_new)?;
            let f_new = prob.objective(&r_new, &c_new);
            if f_new.is_finite() && f_new < f {
                c = c_new;
                r = r_new;
                meshes = meshes_new;
                f = f_new;
                history.push(f);
                damp = (damp / 3.0).max(1e-15 * diag_max);
                accepted = true;
                break;
            }
            if small_step {
                break;
            }
            damp *= 4.0;
        }
        mu = Some(damp);
        if small_step {
            termination = Termination::Step;
            iterations = it + 1;
            break;
        }
        if !accepted {
            termination = Termination::Stalled;
            iterations = it + 1;
            break;
        }
        iterations = it + 1;
    }
    Ok(RunResult {
        final_residual: prob.data_norm(&r),
        coeffs: c,
        history,
        condition,
        ill_conditioned: ill,
        termination,
        iterations,
    })
}

fn report_from(
    prob: &Problem<'_>,
    run: RunResult,
    seed: u64,
    distances: Vec<Vec<f64>>,
    converged: bool,
    starts: (usize, usize),
) -> Result<ReconstructionReport> {
    let (lp, lq) = halves(&run.coeffs, prob.dim(), prob.cfg.basis);
    let recovered = Potentials::split(lp.clone(), lq.clone(), prob.known_right)?;
    Ok(ReconstructionReport {
        left_p: lp,
        left_q: lq,
        recovered,
        objective_history: run.history,
        final_residual: run.final_residual,
        jacobian_condition: run.condition,
        ill_conditioned: run.ill_conditioned,
        multistart_distances: distances,
        converged,
        termination: run.termination,
        iterations: run.iterations,
        seed,
        starts_converged: starts.0,
        starts_total: starts.1,
    })
}

fn setup<'a>(
    known_right: &'a Potentials<f64>,
    template: &'a ProblemSpec<f64>,
    target: &Spectrum<f64>,
    cfg: &'a ReconstructionConfig,
) -> Result<Problem<'a>> {
    cfg.validate(target.len())?;
    Ok(Problem {
        known_right,
        template,
        lambdas: target.lambdas().into_iter().take(cfg.n_eigen).collect(),
        cfg,
    })
}

fn is_stationary(t: Termination) -> bool {
    matches!(t, Termination::Gradient | Termination::Step | Termination::Stalled)
}

/// Single Levenberg-Marquardt run from the zero expansion.
pub fn reconstruct(
    known_right: &Potentials<f64>,
    template: &ProblemSpec<f64>,
    target: &Spectrum<f64>,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionReport> {
    reconstruct_from(known_right, template, target, cfg, &vec![0.0; 2 * cfg.basis_dim])
}

/// Single run from explicit starting coefficients `[p..., q...]`.
pub fn reconstruct_from(
    known_right: &Potentials<f64>,
    template: &ProblemSpec<f64>,
    target: &Spectrum<f64>,
    cfg: &ReconstructionConfig,
    start: &[f64],
) -> Result<ReconstructionReport> {
    let prob = setup(known_right, template, target, cfg)?;
    if start.len() != 2 * cfg.basis_dim {
        return Err(Error::Validation(format!(
            "start has {} coefficients, expected {}",
            start.len(),
            2 * cfg.basis_dim
        )));
    }
    let run = lm(&prob, start.to_vec())?;
    let converged = match run.termination {
        Termination::Gradient | Termination::Step => true,
        Termination::Stalled => run.final_residual <= cfg.fit_tol,
        Termination::MaxIterations => false,
    };
    let ok = usize::from(converged);
    report_from(&prob, run, cfg.seed, vec![vec![0.0]], converged, (ok, 1))
}

/// Seeded starting points, coefficients uniform in `[-0.5, 0.5]`.
pub fn multistart_points(cfg: &ReconstructionConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.multistart)
        .map(|_| (0..2 * cfg.basis_dim).map(|_| rng.random_range(-0.5..=0.5)).collect())
        .collect()
}

/// Runs [`reconstruct`] from `cfg.multistart` random starts and reports the
/// best converged run together with the pairwise distances of all converged runs.
pub fn uniqueness_probe(
    known_right: &Potentials<f64>,
    template: &ProblemSpec<f64>,
    target: &Spectrum<f64>,
    cfg: &ReconstructionConfig,
) -> Result<ReconstructionReport> {
    let prob = setup(known_right, template, target, cfg)?;
    if cfg.multistart == 0 {
        return Err(Error::Validation("multistart must be at least 1".into()));
    }
    let starts = multistart_points(cfg);
    let runs: Vec<RunResult> = starts
        .into_par_iter()
        .map(|s| lm(&prob, s))
        .collect::<Result<_>>()?;
    let total = runs.len();
    let mut good: Vec<RunResult> = runs
        .into_iter()
        .filter(|r| is_stationary(r.termination) && r.final_residual <= cfg.fit_tol)
        .collect();
    if good.is_empty() {
        return Err(Error::AllDiverged { starts: total });
    }
    let d = cfg.basis_dim;
    let pots: Vec<(HalfExpansion<f64>, HalfExpansion<f64>)> =
        good.iter().map(|r| halves(&r.coeffs, d, cfg.basis)).collect();
    let k = pots.len();
    let mut dist = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let (dp, dq) = half_l2_distance(&pots[i].0, &pots[i].1, &pots[j].0, &pots[j].1);
            let v = (dp * dp + dq * dq).sqrt();
            dist[i][j] = v;
            dist[j][i] = v;
        }
    }
    let best = (0..k)
        .min_by(|&a, &b| good[a].final_residual.total_cmp(&good[b].final_residual))
        .unwrap();
    let run = good.swap_remove(best);
    report_from(&prob, run, cfg.seed, dist, true, (k, total))
}

impl ReconstructionReport {
    pub fn max_pairwise_distance(&self) -> f64 {
        self.multistart_distances
            .iter()
            .flatten()
            .cloned()
            .fold(0.0, f64::max)
    }
}

fn left_gl() -> Vec<(f64, f64)> {
    let gl = GaussLegendre::<f64>::new(64);
    gl.on(0.0, std::f64::consts::FRAC_PI_2).collect()
}

/// `(||p_a - p_b||, ||q_a - q_b||)` in `L2(0, pi/2)` for two expansion pairs.
pub fn half_l2_distance(
    pa: &HalfExpansion<f64>,
    qa: &HalfExpansion<f64>,
    pb: &HalfExpansion<f64>,
    qb: &HalfExpansion<f64>,
) -> (f64, f64) {
    let (mut sp, mut sq) = (0.0, 0.0);
    for (x, w) in left_gl() {
        sp += w * (pa.eval(x) - pb.eval(x)).powi(2);
        sq += w * (qa.eval(x) - qb.eval(x)).powi(2);
    }
    (sp.sqrt(), sq.sqrt())
}

/// `(||p_a - p_b||, ||q_a - q_b||)` in `L2(0, pi/2)`, left branches.
pub fn left_l2_distance(a: &Potentials<f64>, b: &Potentials<f64>) -> (f64, f64) {
    let (mut sp, mut sq) = (0.0, 0.0);
    for (x, w) in left_gl() {
        let (p1, q1) = a.eval_on(x, Side::Left);
        let (p2, q2) = b.eval_on(x, Side::Left);
        sp += w * (p1 - p2).powi(2);
        sq += w * (q1 - q2).powi(2);
    }
    (sp.sqrt(), sq.sqrt())
}

/// Recovered coefficients as CSV: `k,p,q`.
pub fn write_coefficients_csv<W: Write>(out: &mut W, r: &ReconstructionReport) -> std::io::Result<()> {
    writeln!(out, "k,p,q")?;
    for (k, (p, q)) in r.left_p.coeffs.iter().zip(&r.left_q.coeffs).enumerate() {
        writeln!(out, "{k},{p:.16e},{q:.16e}")?;
    }
    Ok(())
}

/// Square distance matrix as CSV with a `run_<i>` header.
pub fn write_distances_csv<W: Write>(out: &mut W, r: &ReconstructionReport) -> std::io::Result<()> {
    let k = r.multistart_distances.len();
    let header: Vec<String> = (0..k).map(|i| format!("run_{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in &r.multistart_distances {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Constant that a landscape axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Alpha,
    Beta,
    Alpha1,
    Alpha2,
    Gamma1,
    Gamma2,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::Alpha, Axis::Beta, Axis::Alpha1, Axis::Alpha2, Axis::Gamma1, Axis::Gamma2];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
            Axis::Alpha1 => "alpha1",
            Axis::Alpha2 => "alpha2",
            Axis::Gamma1 => "gamma1",
            Axis::Gamma2 => "gamma2",
        }
    }

    fn get(self, s: &ProblemSpec<f64>) -> f64 {
        let w = s.weight();
        let j = s.jumps();
        match self {
            Axis::Alpha => w.alpha,
            Axis::Beta => w.beta,
            Axis::Alpha1 => j[0].alpha,
            Axis::Alpha2 => j[1].alpha,
            Axis::Gamma1 => j[0].gamma,
            Axis::Gamma2 => j[1].gamma,
        }
    }

    fn set(self, s: &ProblemSpec<f64>, v: f64) -> Result<ProblemSpec<f64>> {
        let w = *s.weight();
        let mut j: [JumpCondition<f64>; 2] = *s.jumps();
        let mut w2 = PiecewiseWeight::new(w.alpha, w.beta);
        match self {
            Axis::Alpha => w2.alpha = v,
            Axis::Beta => w2.beta = v,
            Axis::Alpha1 => j[0].alpha = v,
            Axis::Alpha2 => j[1].alpha = v,
            Axis::Gamma1 => j[0].gamma = v,
            Axis::Gamma2 => j[1].gamma = v,
        }
        ProblemSpec::new(w2, s.potentials().clone(), j, ValidationMode::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeRow {
    pub axis: Axis,
    /// Offset from the true value (relative for nonzero truth, absolute otherwise).
    pub offset: f64,
    pub value: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub axis: Axis,
    pub argmin_offset: f64,
    pub min_at_truth: bool,
    /// Exactly one local minimum, and it lies strictly inside the scan.
    pub unique_interior_min: bool,
    /// For a zero-valued truth: whether the response is symmetric in the sign of the offset.
    pub symmetric: Option<bool>,
    /// Fewer than three scan points: no minimum can be located.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsScan {
    pub rows: Vec<LandscapeRow>,
    pub axes: Vec<AxisSummary>,
}

impl ConstantsScan {
    pub fn all_minimal_at_truth(&self) -> bool {
        self.axes.iter().all(|a| a.min_at_truth && !a.degenerate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    /// Grid points per axis; odd counts put the truth on the grid.
    pub points: usize,
    /// Relative half-span for nonzero constants.
    pub rel_span: f64,
    /// Absolute half-span for constants that are zero.
    pub abs_span: f64,
    pub integrator: IntegratorSettings<f64>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            points: 41,
            rel_span: 0.2,
            abs_span: 0.2,
            integrator: IntegratorSettings::default(),
        }
    }
}

/// `sum |Delta(lambda_n)|^2` over the target for a modified problem.
pub fn spectral_misfit(spec: &ProblemSpec<f64>, target: &Spectrum<f64>, cfg: &IntegratorSettings<f64>) -> Result<f64> {
    let v: Vec<f64> = target
        .entries
        .par_iter()
        .map(|e| Ok(forward::char_fn(spec, e.lambda, cfg)?.norm_sqr()))
        .collect::<Result<_>>()?;
    Ok(v.iter().sum())
}

/// Per-axis landscape of the spectral misfit around the true constants.
pub fn constants_probe(spec: &ProblemSpec<f64>, target: &Spectrum<f64>, opts: &ProbeOptions) -> Result<ConstantsScan> {
    if target.len() < 10 {
        return Err(Error::Validation(format!(
            "constants probe needs at least 10 eigenvalues, got {}",
            target.len()
        )));
    }
    if opts.points == 0 {
        return Err(Error::Validation("scan needs at least one point".into()));
    }
    let mut rows = Vec::new();
    let mut axes = Vec::new();
    for axis in Axis::ALL {
        let truth = axis.get(spec);
        let relative = truth != 0.0;
        let offsets: Vec<f64> = if opts.points == 1 {
            vec![0.0]
        } else {
            let span = if relative { opts.rel_span } else { opts.abs_span };
            (0..opts.points)
                .map(|k| -span + 2.0 * span * k as f64 / (opts.points - 1) as f64)
                .collect()
        };
        let objs: Vec<(f64, f64)> = offsets
            .par_iter()
            .map(|&o| {
                let v = if relative { truth * (1.0 + o) } else { truth + o };
                let s = axis.set(spec, v)?;
                Ok((v, spectral_misfit(&s, target, &opts.integrator)?))
            })
            .collect::<Result<_>>()?;
        for (&o, &(v, f)) in offsets.iter().zip(&objs) {
            rows.push(LandscapeRow {
                axis,
                offset: o,
                value: v,
                objective: f,
            });
        }
        let n = objs.len();
        let imin = (0..n).min_by(|&a, &b| objs[a].1.total_cmp(&objs[b].1)).unwrap();
        let degenerate = n < 3;
        let local_minima = (1..n.saturating_sub(1))
            .filter(|&i| objs[i].1 < objs[i - 1].1 && objs[i].1 < objs[i + 1].1)
            .count();
        let symmetric = (!relative && n >= 3).then(|| {
            (0..n / 2).all(|i| {
                let (a, b) = (objs[i].1, objs[n - 1 - i].1);
                (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-300)
            })
        });
        let step = if n > 1 { (offsets[1] - offsets[0]).abs() } else { 0.0 };
        axes.push(AxisSummary {
            axis,
            argmin_offset: offsets[imin],
            min_at_truth: !degenerate && offsets[imin].abs() <= 0.5 * step,
            unique_interior_min: !degenerate && local_minima == 1 && imin > 0 && imin + 1 < n,
            symmetric,
            degenerate,
        });
    }
    Ok(ConstantsScan { rows, axes })
}

/// Landscape as CSV: `axis,offset,objective`.
pub fn write_landscape_csv<W: Write>(out: &mut W, scan: &ConstantsScan) -> std::io::Result<()> {
    writeln!(out, "axis,offset,objective")?;
    for r in &scan.rows {
        writeln!(out, "{},{:.16e},{:.16e}", r.axis.name(), r.offset, r.objective)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template() -> ProblemSpec<f64> {
        ProblemSpec::new(
            PiecewiseWeight::new(0.6, 0.8),
            Potentials::zero(),
            [JumpCondition::new(1.0, 1.5, 0.2), JumpCondition::new(2.2, 0.8, -0.1)],
            ValidationMode::Strict,
        )
        .unwrap()
    }

    fn right() -> Potentials<f64> {
        Potentials::cosine(vec![0.0, 0.05], vec![0.2, 0.0, 0.3]).unwrap()
    }

    #[test]
    fn too_few_eigenvalues_is_a_validation_error() {
        let cfg = ReconstructionConfig {
            basis_dim: 6,
            n_eigen: 10,
            ..ReconstructionConfig::default()
        };
        let target = Spectrum::from_lambdas(&[C64::new(1.0, 0.0); 12]);
        let e = reconstruct(&right(), &template(), &target, &cfg).unwrap_err();
        assert_eq!(e.kind(), "ValidationError");
        let cfg = ReconstructionConfig::default();
        let e = uniqueness_probe(&right(), &template(), &target.truncated(4), &cfg).unwrap_err();
        assert_eq!(e.kind(), "ValidationError");
    }

    #[test]
    fn empty_target_gives_empty_residual() {
        let lp = HalfExpansion::new(HalfBasis::Chebyshev, vec![0.1]);
        let lq = HalfExpansion::new(HalfBasis::Chebyshev, vec![0.0, 0.2]);
        let target = Spectrum::from_lambdas(&[]);
        let r = residual_vector(&lp, &lq, &right(), &template(), &target, &IntegratorSettings::default()).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn multistart_points_are_seeded() {
        let cfg = ReconstructionConfig {
            multistart: 3,
            ..ReconstructionConfig::default()
        };
        let a = multistart_points(&cfg);
        assert_eq!(a, multistart_points(&cfg));
        assert_eq!(a.len(), 3);
        assert!(a.iter().flatten().all(|v| (-0.5..=0.5).contains(v)));
        let other = multistart_points(&ReconstructionConfig { seed: 1, ..cfg });
        assert_ne!(a, other);
    }

    #[test]
    fn distance_of_identical_expansions_is_zero() {
        let p = HalfExpansion::new(HalfBasis::Chebyshev, vec![0.3, -0.1]);
        let q = HalfExpansion::new(HalfBasis::EvenCosine, vec![1.0]);
        assert_eq!(half_l2_distance(&p, &q, &p, &q), (0.0, 0.0));
        let q2 = HalfExpansion::new(HalfBasis::EvenCosine, vec![2.0]);
        let (_, dq) = half_l2_distance(&p, &q, &p, &q2);
        assert!((dq - std::f64::consts::FRAC_PI_2.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn landscape_with_one_point_is_degenerate() {
        let target = Spectrum::from_lambdas(&[C64::new(1.0, 0.0); 10]);
        let opts = ProbeOptions {
            points: 1,
            ..ProbeOptions::default()
        };
        let scan = constants_probe(&template(), &target, &opts).unwrap();
        assert!(scan.axes.iter().all(|a| a.degenerate && !a.min_at_truth));
        assert!(!scan.all_minimal_at_truth());
        let e = constants_probe(&template(), &target.truncated(9), &opts).unwrap_err();
        assert_eq!(e.kind(), "ValidationError");
    }
}
