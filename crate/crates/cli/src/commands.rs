//! One function per subcommand.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use pencilspec::asymptotics::{self, AsymptoticCoefficients, PhaseMaps};
use pencilspec::inverse::{self, ProbeOptions, ReconstructionConfig};
use pencilspec::model::load_problem;
use pencilspec::spectrum::{self, SpectrumOptions};
use pencilspec::verify::{self, VolterraProblem};
use pencilspec::{forward, Error, IntegratorSettings64, ProblemSpec64, Spectrum64, C64};

use crate::output::{io_err, OutDir, RunManifest};
use crate::Failure;

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<ProblemSpec64, Error> {
    load_problem::<f64>(path)
}

fn validation(msg: impl Into<String>) -> Failure {
    Failure::from(Error::Validation(msg.into()))
}

fn integrator_settings(m: &mut RunManifest, cfg: &IntegratorSettings64) -> Result<(), Error> {
    cfg.validate()?;
    m.set("rtol", cfg.rtol);
    m.set("atol", cfg.atol);
    m.set("max_step", cfg.max_step);
    Ok(())
}

pub fn spectrum(
    config: &Path,
    nmax: usize,
    tol: f64,
    complex_probe: bool,
    charfn_estimates: bool,
    cfg: &IntegratorSettings64,
    out: &Path,
) -> Outcome {
    let mut m = RunManifest::new("spectrum", Some(config));
    integrator_settings(&mut m, cfg)?;
    let spec = load(config)?;
    if nmax == 0 {
        return Err(validation("--nmax must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(validation("--tol must be positive"));
    }
    m.set("nmax", nmax);
    m.set("tol", tol);
    m.set("complex_probe", complex_probe);
    let opts = SpectrumOptions {
        tol,
        complex_probe: complex_probe.then_some(true),
        source: if charfn_estimates {
            asymptotics::EstimateSource::CharFn
        } else {
            asymptotics::EstimateSource::Asymptotic
        },
        audit_scan: true,
        integrator: *cfg,
    };
    m.set("estimates", opts.source.name());
    let s = spectrum::compute_spectrum_partial(&spec, nmax, &opts)?;
    let mut dir = OutDir::create(out)?;
    dir.write_with("spectrum.csv", |w| spectrum::write_spectrum_csv(w, &s))?;
    dir.finish(m)?;
    if !s.is_complete() {
        return Err(Error::IncompleteSpectrum { failed: s.failed }.into());
    }
    Ok(())
}

pub fn charfn(
    config: &Path,
    lmin: f64,
    lmax: f64,
    samples: usize,
    im: f64,
    cfg: &IntegratorSettings64,
    out: &Path,
) -> Outcome {
    let mut m = RunManifest::new("charfn", Some(config));
    integrator_settings(&mut m, cfg)?;
    let spec = load(config)?;
    if samples == 0 {
        return Err(validation("--samples must be at least 1"));
    }
    if !(lmin.is_finite() && lmax.is_finite() && im.is_finite() && lmin <= lmax) {
        return Err(validation("need finite --lmin <= --lmax and finite --im"));
    }
    m.set("lmin", lmin);
    m.set("lmax", lmax);
    m.set("samples", samples);
    m.set("im", im);
    let lambdas: Vec<C64> = (0..samples)
        .map(|k| {
            let re = if samples == 1 {
                lmin
            } else {
                lmin + (lmax - lmin) * k as f64 / (samples - 1) as f64
            };
            Complex::new(re, im)
        })
        .collect();
    use rayon::prelude::*;
    let rows: Vec<(C64, C64, C64)> = lambdas
        .par_iter()
        .map(|&l| Ok((l, forward::char_fn(&spec, l, cfg)?, asymptotics::char_fn0(&spec, l)?)))
        .collect::<Result<_, Error>>()?;
    let mut dir = OutDir::create(out)?;
    dir.write_with("charfn.csv", |w| {
        writeln!(w, "re_lambda,im_lambda,re_delta,im_delta,re_delta0,im_delta0")?;
        for (l, d, d0) in &rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                l.re, l.im, d.re, d.im, d0.re, d0.im
            )?;
        }
        Ok(())
    })?;
    dir.finish(m)?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct Suites {
    pub green: bool,
    pub asymptotic: bool,
    pub volterra: bool,
}

struct Check {
    suite: &'static str,
    name: String,
    value: f64,
    tolerance: f64,
    /// `None` for diagnostics without a threshold.
    pass: Option<bool>,
}

impl Check {
    fn gate(suite: &'static str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            tolerance,
            pass: Some(value <= tolerance),
        }
    }

    fn status(&self) -> &'static str {
        match self.pass {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "info",
        }
    }
}

pub fn verify(
    config: &Path,
    config_b: Option<&Path>,
    suites: Suites,
    seed: u64,
    cfg: &IntegratorSettings64,
    out: &Path,
) -> Outcome {
    let mut m = RunManifest::new("verify", Some(config));
    integrator_settings(&mut m, cfg)?;
    m.seed = Some(seed);
    m.set("suite_green", suites.green);
    m.set("suite_asymptotic", suites.asymptotic);
    m.set("suite_volterra", suites.volterra);
    if let Some(b) = config_b {
        m.set("config_b", b.display().to_string());
    }
    let spec = load(config)?;
    let spec_b = match config_b {
        Some(p) => load(p)?,
        None => spec.clone(),
    };
    let mut dir = OutDir::create(out)?;
    let mut checks = Vec::new();

    if suites.green {
        let lambdas: Vec<C64> = (0..5)
            .flat_map(|i| {
                (0..5).map(move |j| Complex::new(0.5 + 9.5 * i as f64 / 4.0, 0.5 * j as f64 / 4.0))
            })
            .collect();
        let rows = verify::green_sweep(&spec, &spec_b, &lambdas, cfg)?;
        dir.write_with("green.csv", |w| verify::write_residual_csv(w, &rows))?;
        for r in &rows {
            let tol = GREEN_TOL * (r.lambda.im.abs() * std::f64::consts::PI).exp();
            checks.push(Check::gate(
                "green",
                format!("residual({:.3}{:+.3}i)", r.lambda.re, r.lambda.im),
                r.residual,
                tol,
            ));
        }
    }

    if suites.asymptotic {
        asymptotic_checks(&spec, cfg, &mut dir, &mut checks)?;
    }

    if suites.volterra {
        let vp = VolterraProblem::<f64>::constant(1.0, 33);
        let r = verify::volterra_trivial_check(&vp, |_| vec![1.0], 20)?;
        let excess = (0..=20)
            .map(|k| {
                let bound = (std::f64::consts::FRAC_PI_2).powi(k as i32) / factorial(k);
                r.norm_history[k] - bound
            })
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::gate("volterra", "constant_kernel_bound_excess", excess.max(0.0), 1e-12));
        dir.write_with("volterra_constant.csv", |w| verify::write_volterra_csv(w, &r))?;

        let vp = VolterraProblem::<f64>::random_bounded(3, RANDOM_KERNEL_AMPLITUDE, seed, 33);
        let r = verify::volterra_trivial_check(&vp, |_| vec![1.0; 3], 15)?;
        let rel = r.final_norm / r.norm_history[0];
        checks.push(Check::gate("volterra", format!("random_kernel_seed{seed}_final"), rel, 1e-10));
        checks.push(Check {
            suite: "volterra",
            name: "random_kernel_M_times_L".into(),
            value: r.kernel_bound * r.interval_length,
            tolerance: f64::NAN,
            pass: None,
        });
        dir.write_with("volterra_random.csv", |w| verify::write_volterra_csv(w, &r))?;
    }

    dir.write_with("checks.csv", |w| {
        writeln!(w, "suite,check,value,tolerance,status")?;
        for c in &checks {
            writeln!(w, "{},{},{:.16e},{:.16e},{}", c.suite, c.name, c.value, c.tolerance, c.status())?;
        }
        Ok(())
    })?;
    dir.finish(m)?;

    println!("{:<10} {:<36} {:>12} {:>12} status", "suite", "check", "value", "tolerance");
    for c in &checks {
        println!(
            "{:<10} {:<36} {:>12.3e} {:>12.3e} {}",
            c.suite,
            c.name,
            c.value,
            c.tolerance,
            c.status()
        );
    }
    let failed = checks.iter().filter(|c| c.pass == Some(false)).count();
    if failed > 0 {
        return Err(Failure {
            code: 4,
            kind: "VerificationFailed".into(),
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    Ok(())
}

const GREEN_TOL: f64 = 1e-7;
const RANDOM_KERNEL_AMPLITUDE: f64 = 0.1;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

fn asymptotic_checks(
    spec: &ProblemSpec64,
    cfg: &IntegratorSettings64,
    dir: &mut OutDir,
    checks: &mut Vec<Check>,
) -> Result<(), Error> {
    let c = AsymptoticCoefficients::of(spec);
    let j = spec.jumps();
    checks.push(Check::gate(
        "asymptotic",
        "beta1_sum_minus_alpha1",
        (c.beta1_plus + c.beta1_minus - j[0].alpha).abs(),
        1e-14,
    ));
    checks.push(Check::gate(
        "asymptotic",
        "beta2_sum_minus_alpha2",
        (c.beta2_plus + c.beta2_minus - j[1].alpha).abs(),
        1e-14,
    ));
    let pm = PhaseMaps::of(spec);
    let pi = std::f64::consts::PI;
    let w = spec.weight();
    checks.push(Check::gate(
        "asymptotic",
        "phase_map_k_plus_at_pi",
        (pm.xi_plus(pm.a2) + w.beta * (pi - pm.a2) - pm.k_plus(pi)).abs(),
        1e-12,
    ));

    let lambdas: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let amp_sum: f64 = c.right_amplitudes().iter().map(|a| a.abs()).sum();
    let mut growth = 0.0f64;
    for &l in &lambdas {
        let d0 = asymptotics::char_fn0(spec, Complex::new(l, 0.0))?;
        growth = growth.max(d0.norm() - amp_sum);
    }
    checks.push(Check::gate("asymptotic", "char_fn0_above_coefficient_sum", growth.max(0.0), 1e-12));

    let p_vanishes = (0..=64).all(|k| spec.potentials().p().eval(pi * k as f64 / 64.0) == 0.0);
    if p_vanishes {
        let mut odd = 0.0f64;
        for &x in &[0.3, 1.0, 2.0, pi] {
            for &l in &[0.7, 3.1, 9.4] {
                let a = asymptotics::phi0(spec, Complex::new(l, 0.0), x)?;
                let b = asymptotics::phi0(spec, Complex::new(-l, 0.0), x)?;
                odd = odd.max((a - b).norm());
            }
        }
        checks.push(Check::gate("asymptotic", "phi0_even_in_lambda", odd, 1e-12));
    }

    let grid: Vec<f64> = (1..=20).map(|k| 10.0 * k as f64).collect();
    let rows = asymptotics::remainder_report(spec, &grid, cfg)?;
    if let Some(r) = asymptotics::remainder_growth_ratio(&rows) {
        checks.push(Check {
            suite: "asymptotic",
            name: "remainder_max_over_median".into(),
            value: r,
            tolerance: f64::NAN,
            pass: None,
        });
    }
    dir.write_with("remainder.csv", |w| asymptotics::write_remainder_csv(w, &rows))?;
    Ok(())
}

/// Reads the `re_lambda,im_lambda` columns of a spectrum file.
pub fn read_spectrum(path: &Path) -> Result<Spectrum64, Error> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column {name}", path.display())))
    };
    let (re, im) = (col("re_lambda")?, col("im_lambda")?);
    let flags = headers.iter().position(|h| h == "flags");
    let mut lambdas = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let num = |i: usize| -> Result<f64, Error> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("{}: bad number in row {}", path.display(), row + 1)))
        };
        if let Some(f) = flags.and_then(|i| rec.get(i)) {
            if f != "ok" {
                return Err(Error::Validation(format!(
                    "{}: row {} is flagged {f}",
                    path.display(),
                    row + 1
                )));
            }
        }
        lambdas.push(Complex::new(num(re)?, num(im)?));
    }
    Ok(Spectrum64::from_lambdas(&lambdas))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => Error::Parse(format!("{}: {other:?}", path.display())),
        }
    } else {
        Error::Parse(format!("{}: {e}", path.display()))
    }
}

pub fn reconstruct(config: &Path, spectrum_path: &Path, cfg: &ReconstructionConfig, out: &Path) -> Outcome {
    let mut m = RunManifest::new("reconstruct", Some(config));
    integrator_settings(&mut m, &cfg.integrator)?;
    m.seed = Some(cfg.seed);
    m.set("spectrum", spectrum_path.display().to_string());
    m.set("basis_dim", cfg.basis_dim);
    m.set("basis", cfg.basis.name());
    m.set("n_eigen", cfg.n_eigen);
    m.set("multistart", cfg.multistart);
    m.set("regularization", cfg.regularization);
    m.set("max_iter", cfg.max_iter);
    if cfg.n_eigen < 2 * cfg.basis_dim {
        return Err(validation(format!(
            "--n-eigen {} must be at least 2 * --basis-dim = {}",
            cfg.n_eigen,
            2 * cfg.basis_dim
        )));
    }
    if cfg.multistart == 0 {
        return Err(validation("--multistart must be at least 1"));
    }
    let spec = load(config)?;
    let target = read_spectrum(spectrum_path)?;
    cfg.validate(target.len())?;
    let target = target.truncated(cfg.n_eigen);
    let right = spec.potentials().right_half();
    let report = if cfg.multistart > 1 {
        inverse::uniqueness_probe(&right, &spec, &target, cfg)
    } else {
        inverse::reconstruct(&right, &spec, &target, cfg)
    };
    let report = match report {
        Ok(r) => r,
        Err(Error::AllDiverged { starts }) => {
            return Err(Failure {
                code: 5,
                kind: "AllDiverged".into(),
                message: format!("no multistart run converged ({starts} starts)"),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let (dp, dq) = inverse::left_l2_distance(&report.recovered, spec.potentials());

    let mut dir = OutDir::create(out)?;
    dir.write_with("coefficients.csv", |w| inverse::write_coefficients_csv(w, &report))?;
    dir.write_with("distances.csv", |w| inverse::write_distances_csv(w, &report))?;
    dir.write_with("objective.csv", |w| {
        writeln!(w, "iteration,objective")?;
        for (k, v) in report.objective_history.iter().enumerate() {
            writeln!(w, "{k},{v:.16e}")?;
        }
        Ok(())
    })?;
    dir.write_with("report.txt", |w| {
        writeln!(w, "converged: {}", report.converged)?;
        writeln!(w, "termination: {}", report.termination.name())?;
        writeln!(w, "iterations: {}", report.iterations)?;
        writeln!(w, "final_residual: {:.16e}", report.final_residual)?;
        writeln!(w, "jacobian_condition: {:.16e}", report.jacobian_condition)?;
        writeln!(w, "ill_conditioned: {}", report.ill_conditioned)?;
        writeln!(w, "starts_converged: {} of {}", report.starts_converged, report.starts_total)?;
        writeln!(w, "max_pairwise_distance: {:.16e}", report.max_pairwise_distance())?;
        writeln!(w, "l2_distance_to_config_left_p: {dp:.16e}")?;
        writeln!(w, "l2_distance_to_config_left_q: {dq:.16e}")?;
        writeln!(w, "seed: {}", report.seed)?;
        Ok(())
    })?;
    dir.finish(m)?;
    println!(
        "converged={} termination={} residual={:.3e} iterations={}",
        report.converged,
        report.termination.name(),
        report.final_residual,
        report.iterations
    );
    if !report.converged {
        return Err(Failure {
            code: 5,
            kind: "NotConverged".into(),
            message: format!("stopped by {} with residual {:.3e}", report.termination.name(), report.final_residual),
        });
    }
    Ok(())
}

pub fn constants(
    config: &Path,
    spectrum_path: &Path,
    points: usize,
    span: f64,
    cfg: &IntegratorSettings64,
    out: &Path,
) -> Outcome {
    let mut m = RunManifest::new("constants", Some(config));
    integrator_settings(&mut m, cfg)?;
    m.set("spectrum", spectrum_path.display().to_string());
    m.set("points", points);
    m.set("span", span);
    if !(span > 0.0 && span < 1.0) {
        return Err(validation("--span must lie in (0, 1)"));
    }
    let spec = load(config)?;
    let target = read_spectrum(spectrum_path)?;
    let opts = ProbeOptions {
        points,
        rel_span: span,
        abs_span: span,
        integrator: *cfg,
    };
    let scan = inverse::constants_probe(&spec, &target, &opts)?;
    let mut dir = OutDir::create(out)?;
    dir.write_with("landscape.csv", |w| inverse::write_landscape_csv(w, &scan))?;
    dir.write_with("axes.csv", |w| {
        writeln!(w, "axis,argmin_offset,min_at_truth,unique_interior_min")?;
        for a in &scan.axes {
            writeln!(
                w,
                "{},{:.16e},{},{}",
                a.axis.name(),
                a.argmin_offset,
                a.min_at_truth,
                a.unique_interior_min
            )?;
        }
        Ok(())
    })?;
    dir.finish(m)?;
    for a in &scan.axes {
        println!(
            "{:<8} argmin_offset={:+.4} min_at_truth={}",
            a.axis.name(),
            a.argmin_offset,
            a.min_at_truth
        );
    }
    if !scan.all_minimal_at_truth() {
        return Err(Failure {
            code: 4,
            kind: "VerificationFailed".into(),
            message: "some constant has its misfit minimum away from the configured value".into(),
        });
    }
    Ok(())
}
