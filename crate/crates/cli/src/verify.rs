//! Verification suites run by `ossrf verify`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use ossrf::analysis::{
    critical_exponent, default_radii, directional_holder, graph_box_dimension_values, increment_stationarity_check,
    scaling_check, CheckSettings, Control,
};
use ossrf::homogeneous::{certify_admissibility, certify_homogeneity, Variant, ADMISSIBILITY_GROWTH_TOL};
use ossrf::quadrature::gauss_legendre;
use ossrf::synthesis::output::{sha256_hex, to_le_bytes};
use ossrf::{polar_integrate, AnisoNorm, Exponent, Grid, Homogeneous, HomogeneousFn, Oracle, Synthesizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Run;
use crate::error::CliError;

pub const SUITES: [&str; 6] = ["polar", "homogeneous", "scaling", "stationarity", "holder", "dimension"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

/// One checked claim.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    /// The property being checked.
    pub claim: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, suite: &'static str, claim: &'static str, pass: bool, detail: String) {
        self.checks.push(Check {
            suite,
            claim,
            status: if pass { Status::Pass } else { Status::Fail },
            detail,
        });
    }

    fn skip(&mut self, suite: &'static str, claim: &'static str, detail: impl Into<String>) {
        self.checks.push(Check {
            suite,
            claim,
            status: Status::Skip,
            detail: detail.into(),
        });
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let s = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            writeln!(f, "{s}  {:<13} {:<40} {}", c.suite, c.claim, c.detail)?;
        }
        let n = self.checks.len();
        let skipped = self.checks.iter().filter(|c| c.status == Status::Skip).count();
        write!(f, "{} checks, {} failed, {} skipped", n, self.failures(), skipped)
    }
}

/// Runs `suite` (or every suite for "all").
pub fn run(run: &Run, suite: &str, out: Option<&Path>) -> Result<Report, CliError> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(CliError::UnknownSuite(s.into())),
    };
    let mut report = Report::default();
    for name in names {
        log::info!("running suite {name}");
        match name {
            "polar" => polar(run, &mut report)?,
            "homogeneous" => homogeneous(run, &mut report)?,
            "scaling" => scaling(run, &mut report)?,
            "stationarity" => stationarity(run, &mut report)?,
            "holder" => holder(run, &mut report)?,
            "dimension" => dimension(run, &mut report)?,
            _ => unreachable!(),
        }
    }
    if let Some(dir) = out {
        artifacts(run, dir, &mut report)?;
    }
    Ok(report)
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    x * 10f64.powf(rng.random_range(-2.0..2.0))
}

fn polar(run: &Run, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "polar";
    let e = &run.exponent;
    let d = e.dim();
    let norm = AnisoNorm::new(e.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(run.config.seed);
    let mut scale_err = 0.0f64;
    let mut rec_err = 0.0f64;
    for _ in 0..1000 {
        let x = random_point(&mut rng, d);
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let p = norm.polar(&x)?;
        let tc = norm.radius(&(e.power(c)? * &x))?;
        scale_err = scale_err.max((tc - c * p.radius).abs() / (c * p.radius));
        let l = p.direction.expect("nonzero point");
        rec_err = rec_err.max((e.power(p.radius)? * l - &x).norm() / x.norm());
    }
    report.push(S, "radial part scales: tau(c^E x) = c tau(x)", scale_err <= 1e-8, format!("max rel err {scale_err:.2e}"));
    report.push(S, "polar reconstruction x = tau^E l", rec_err <= 1e-8, format!("max rel err {rec_err:.2e}"));

    let env = norm.growth_envelope(0.05, 1000, run.config.seed)?;
    report.push(
        S,
        "growth envelope of tau",
        env.pass(),
        format!("{} violations in {} samples", env.violations, env.samples),
    );

    if d > 3 {
        report.skip(S, "polar integration formula", "Cartesian reference limited to d <= 3");
        return Ok(());
    }
    let measure = norm.sphere_measure(if d == 2 { 128 } else { 40 })?;
    let probe = |x: &DVector<f64>| (-x.norm_squared()).exp() * (1.0 + 0.5 * x[0] * x[0]);
    let polar = polar_integrate(&norm, &measure, probe, 0.0, 1e3, 1e-9)?;
    let cart = box_integral(probe, d, 5.0, if d == 3 { 8 } else { 20 });
    let rel = (polar / cart - 1.0).abs();
    report.push(S, "polar integration formula", rel <= 0.01, format!("polar {polar:.6} vs cartesian {cart:.6}"));
    Ok(())
}

/// Composite Gauss-Legendre tensor rule on `[-half, half]^d`.
fn box_integral<F: Fn(&DVector<f64>) -> f64>(f: F, d: usize, half: f64, panels: usize) -> f64 {
    let gl = gauss_legendre(8);
    let h = 2.0 * half / panels as f64;
    let axis: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| gl.mapped(-half + p as f64 * h, -half + (p + 1) as f64 * h).collect::<Vec<_>>())
        .collect();
    let n = axis.len();
    let mut total = 0.0;
    let mut x = DVector::zeros(d);
    for k in 0..n.pow(d as u32) {
        let mut r = k;
        let mut w = 1.0;
        for a in 0..d {
            let (xa, wa) = axis[r % n];
            x[a] = xa;
            w *= wa;
            r /= n;
        }
        total += w * f(&x);
    }
    total
}

/// `int_0^inf (1 - cos s) s^{-1-nu} ds` for `0 < nu < 2`.
fn one_minus_cos_moment(nu: f64) -> f64 {
    if (nu - 1.0).abs() < 1e-12 {
        PI / 2.0
    } else {
        -statrs::function::gamma::gamma(-nu) * (PI * nu / 2.0).cos()
    }
}

fn homogeneous(run: &Run, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "homogeneous";
    let f = run.spec.function();
    let seed = run.config.seed;
    let h = certify_homogeneity(f, 200, seed)?;
    report.push(S, "homogeneity phi(c^E x) = c phi(x)", h.pass, format!("max rel violation {:.2e}", h.max_violation));

    let d = f.exponent().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<DVector<f64>> = (0..100).map(|_| DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0))).collect();
    match f.variant() {
        Variant::ClosedForm {
            directions,
            eigenvalues,
            coefficients,
            rho,
        } => {
            // phi^rho as an integral-form function of exponent E / rho.
            let scaled = f.exponent().scaled(1.0 / rho)?;
            let atoms = directions
                .iter()
                .zip(eigenvalues.iter().zip(coefficients))
                .map(|(t, (&l, &c))| (t.clone(), c * l / (rho * one_minus_cos_moment(rho / l))))
                .collect();
            match HomogeneousFn::integral_form(scaled, atoms) {
                Ok(psi) => {
                    let mut worst = 0.0f64;
                    for x in &points {
                        let want = f.eval(x)?.powf(*rho);
                        let quad = psi.eval_quadrature(x)?;
                        let fast = psi.eval(x)?;
                        worst = worst.max((quad - want).abs() / want).max((fast - want).abs() / want);
                    }
                    report.push(S, "closed form equals integral form", worst <= 1e-4, format!("max rel err {worst:.2e}"));
                }
                Err(e) if e.is_hypothesis() => report.skip(S, "closed form equals integral form", e.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
        Variant::IntegralForm { .. } => {
            let mut worst = 0.0f64;
            for x in &points {
                let a = f.eval(x)?;
                let b = f.eval_quadrature(x)?;
                worst = worst.max((a - b).abs() / b);
            }
            report.push(S, "integral form quadrature paths agree", worst <= 1e-4, format!("max rel err {worst:.2e}"));
        }
        Variant::IsotropicNorm { .. } => report.skip(S, "closed form equals integral form", "isotropic norm"),
    }

    let adm = f.admissibility();
    let hurst = run.spec.hurst();
    let beta = if adm.inclusive { adm.beta } else { 0.5 * (adm.beta + hurst.min(adm.beta)) };
    let r = certify_admissibility(f, beta, 1.0, 2.0, 200, seed)?;
    report.push(S, "admissibility of the function", r.pass, format!("beta {beta:.3}, growth {:.3}", r.growth));
    let bad = f.exponent().a_min() + 0.2;
    let r = certify_admissibility(f, bad, 1.0, 2.0, 200, seed)?;
    report.push(
        S,
        "admissibility fails above a_1 (control)",
        !r.pass && r.growth > ADMISSIBILITY_GROWTH_TOL,
        format!("beta {bad:.3}, growth {:.3}", r.growth),
    );
    Ok(())
}

fn settings(run: &Run) -> CheckSettings {
    CheckSettings {
        replicates: run.config.verify.replicates,
        seed: run.config.seed,
        discretization: run.config.discretization.clone(),
    }
}

/// Default check points, away from the origin and from each other.
pub fn default_points(d: usize) -> Vec<DVector<f64>> {
    let base = [[0.3, 0.2, -0.1], [-0.4, 0.5, 0.2], [0.6, -0.1, 0.4]];
    base.iter().map(|p| DVector::from_fn(d, |i, _| p[i % 3] * (1.0 - 0.1 * (i / 3) as f64))).collect()
}

fn default_offsets(d: usize) -> Vec<DVector<f64>> {
    let base = [[0.25, 0.1, 0.0], [-0.1, 0.3, -0.2], [0.4, 0.4, 0.1]];
    base.iter().map(|p| DVector::from_fn(d, |i, _| p[i % 3])).collect()
}

fn vectors(list: &Option<Vec<Vec<f64>>>, d: usize, default: fn(usize) -> Vec<DVector<f64>>) -> Result<Vec<DVector<f64>>, CliError> {
    match list {
        None => Ok(default(d)),
        Some(v) => v
            .iter()
            .map(|x| {
                if x.len() == d {
                    Ok(DVector::from_column_slice(x))
                } else {
                    Err(CliError::Config(format!("verification point {x:?} must have {d} entries")))
                }
            })
            .collect(),
    }
}

fn scaling(run: &Run, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "scaling";
    let v = &run.config.verify;
    let pts = vectors(&v.points, run.exponent.dim(), default_points)?;
    let control = if v.hurst_offset != 0.0 {
        Control::Hurst(run.spec.hurst() + v.hurst_offset)
    } else {
        Control::None
    };
    for &c in &v.scales {
        let r = scaling_check(&run.spec, &pts, c, &settings(run), control)?;
        report.push(S, "operator scaling X(c^E x) = c^H X(x)", r.pass, format!("c = {c}, max |z| = {:.2}", r.max_abs_z));
    }
    Ok(())
}

fn stationarity(run: &Run, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "stationarity";
    let v = &run.config.verify;
    let d = run.exponent.dim();
    let pts = vectors(&v.points, d, default_points)?;
    let offsets = vectors(&v.offsets, d, default_offsets)?;
    let control = if v.ramp != 0.0 { Control::Ramp(v.ramp) } else { Control::None };
    for h in &offsets {
        let r = increment_stationarity_check(&run.spec, &pts, h, &settings(run), control)?;
        report.push(
            S,
            "stationary increments",
            r.pass,
            format!("h = {:?}, max |z| = {:.2}", h.as_slice(), r.max_abs_z),
        );
    }
    Ok(())
}

/// A unit vector in each spectral subspace of `E`.
fn spectral_directions(e: &Exponent) -> Vec<DVector<f64>> {
    e.projectors()
        .iter()
        .map(|p| {
            let k = (0..p.ncols()).max_by(|&a, &b| p.column(a).norm().total_cmp(&p.column(b).norm())).expect("nonempty");
            let c = p.column(k).into_owned();
            &c / c.norm()
        })
        .collect()
}

fn holder(run: &Run, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "holder";
    if run.spec.alpha() != 2.0 {
        report.skip(S, "directional regularity H / a_i", "needs alpha = 2");
        return Ok(());
    }
    let tol = run.config.verify.exponent_tol;
    let oracle = Oracle::new(&run.spec)?;
    for u in spectral_directions(&run.exponent) {
        let r = directional_holder(&oracle, &u, &default_radii())?;
        report.push(
            S,
            "directional regularity H / a_i",
            (r.exponent - r.predicted_exponent).abs() <= tol,
            format!("u = {:.3?}: {:.3} vs {:.3}", u.as_slice(), r.exponent, r.predicted_exponent),
        );
    }
    let d = run.exponent.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(run.config.seed);
    let dirs: Vec<DVector<f64>> = (0..16)
        .map(|_| {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            &x / x.norm()
        })
        .collect();
    let r = critical_exponent(&oracle, &dirs, &default_radii())?;
    report.push(
        S,
        "critical exponent H / a_p",
        (r.exponent - r.predicted).abs() <= tol,
        format!("{:.3} vs {:.3}", r.exponent, r.predicted),
    );
    Ok(())
}

fn dimension(run: &Run, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "dimension";
    let d = run.exponent.dim();
    if run.spec.alpha() != 2.0 || d > 2 {
        report.skip(S, "graph dimension d + 1 - H / a_p", "needs alpha = 2 and d <= 2");
        return Ok(());
    }
    let min = if d == 1 { 4097 } else { 1025 };
    let grid = match &run.config.grid {
        Grid::Lattice { shape, .. } if shape.iter().all(|&n| n >= min) => run.config.grid.clone(),
        _ => Grid::lattice(vec![0.0; d], vec![1.0 / (min - 1) as f64; d], vec![min; d])?,
    };
    let Grid::Lattice { shape, .. } = &grid else { unreachable!() };
    let synth = Synthesizer::new(&run.spec, &grid, &run.config.discretization)?;
    let paths = run.config.verify.paths.max(1);
    let mut total = 0.0;
    for r in 0..paths as u64 {
        total += graph_box_dimension_values(&synth.sample(run.config.seed, r), shape)?.dimension;
    }
    let mean = total / paths as f64;
    let predicted = d as f64 + 1.0 - run.spec.hurst() / run.exponent.a_max();
    let tol = if d == 1 { 0.15 } else { 0.2 };
    report.push(
        S,
        "graph dimension d + 1 - H / a_p",
        (mean - predicted).abs() <= tol,
        format!("{mean:.3} vs {predicted:.3} over {paths} paths"),
    );
    Ok(())
}

/// Re-reads a previous `synth` output and checks its checksums.
fn artifacts(run: &Run, dir: &Path, report: &mut Report) -> Result<(), CliError> {
    const S: &str = "artifacts";
    let stem = &run.config.output.stem;
    let side_path = dir.join(format!("{stem}.json"));
    if !side_path.exists() {
        return Ok(());
    }
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(&side_path)?)?;
    let bytes = std::fs::read(dir.join(format!("{stem}.bin")))?;
    let stored = side["data_sha256"].as_str().unwrap_or_default();
    report.push(S, "binary grid matches sidecar checksum", sha256_hex(&bytes) == stored, stored.to_string());
    if side["seed"].as_u64() == Some(run.config.seed) {
        let synth = Synthesizer::new(&run.spec, &run.config.grid, &run.config.discretization)?;
        let again = sha256_hex(&to_le_bytes(&synth.sample(run.config.seed, 0)));
        report.push(S, "resynthesis reproduces the grid", again == stored, again);
    }
    Ok(())
}
