//! Continuous, positive, `E`-homogeneous functions: `phi(c^E x) = c phi(x)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::polar::AnisoNorm;
use crate::quadrature::{integrate, integrate_panels, Tolerance};

/// Phase speed beyond which the radial integral tail is taken asymptotically.
const FAST_PHASE: f64 = 200.0;

/// Evaluation interface shared by homogeneous functions.
pub trait Homogeneous {
    /// The exponent `E` with `phi(c^E x) = c phi(x)`.
    fn exponent(&self) -> &Exponent;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
}

/// Largest Hoelder-type admissibility exponent known for a function.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Admissibility {
    /// Supremum (or maximum, if `inclusive`) of admissible exponents.
    pub beta: f64,
    pub inclusive: bool,
}

impl Admissibility {
    /// True if some admissible exponent exceeds `h`.
    pub fn exceeds(&self, h: f64) -> bool {
        h < self.beta
    }
}

/// One spectral atom `gamma delta_theta` of an integral-form function.
#[derive(Debug, Clone)]
pub struct Atom {
    pub direction: DVector<f64>,
    pub weight: f64,
    /// `(lambda, K(lambda))` when `direction` is an eigenvector of `E^t`.
    eigen: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub enum Variant {
    /// `(sum_j C_j |<x, theta_j>|^{rho / lambda_j})^{1 / rho}`.
    ClosedForm {
        directions: Vec<DVector<f64>>,
        eigenvalues: Vec<f64>,
        coefficients: Vec<f64>,
        rho: f64,
    },
    /// `sum_j gamma_j int_0^inf (1 - cos <x, r^{E^t} theta_j>) dr / r^2`.
    IntegralForm { atoms: Vec<Atom> },
    /// `||x||^{1/a}` for exponents with symmetric part `a I`.
    IsotropicNorm { a: f64 },
}

/// A homogeneous function with its exponent and admissibility exponent.
#[derive(Debug, Clone)]
pub struct HomogeneousFn {
    variant: Variant,
    exponent: Exponent,
    admissibility: Admissibility,
}

impl HomogeneousFn {
    /// Closed-form function on an eigenbasis `theta_j` of `E^t`.
    ///
    /// With `exponent = None`, `E` is built from the eigenpairs.
    pub fn closed_form(
        exponent: Option<Exponent>,
        directions: Vec<DVector<f64>>,
        eigenvalues: Vec<f64>,
        coefficients: Vec<f64>,
        rho: f64,
    ) -> Result<Self> {
        let d = directions.len();
        if d == 0 || eigenvalues.len() != d || coefficients.len() != d {
            return Err(Error::Invalid(
                "closed form needs one eigenvalue and coefficient per direction".into(),
            ));
        }
        if directions.iter().any(|v| v.len() != d) {
            return Err(Error::Invalid("closed form directions must span R^d".into()));
        }
        if coefficients.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Invalid("closed form coefficients must be positive".into()));
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NonPositiveSpectrum {
                re: eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
                im: 0.0,
            });
        }
        let theta = DMatrix::from_columns(&directions);
        let exponent = match exponent {
            Some(e) => {
                if e.dim() != d {
                    return Err(Error::Invalid("exponent dimension mismatch".into()));
                }
                for (t, &l) in directions.iter().zip(&eigenvalues) {
                    let r = e.matrix().transpose() * t - t * l;
                    if r.norm() > 1e-8 * (1.0 + l) * t.norm() {
                        return Err(Error::Invalid(format!(
                            "direction {:?} is not an eigenvector of E^t for eigenvalue {l}",
                            t.as_slice()
                        )));
                    }
                }
                e
            }
            None => {
                let inv_t = theta
                    .transpose()
                    .try_inverse()
                    .ok_or_else(|| Error::Invalid("closed form directions are linearly dependent".into()))?;
                let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&eigenvalues));
                Exponent::new(inv_t * lam * theta.transpose())?
            }
        };
        if theta.determinant().abs() < 1e-12 {
            return Err(Error::Invalid("closed form directions are linearly dependent".into()));
        }
        let l1 = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let ld = eigenvalues.iter().copied().fold(0.0, f64::max);
        if !(rho > 0.0 && rho < 2.0 * l1) {
            return Err(Error::hypothesis(
                "closed form requires 0 < rho < 2 lambda_1",
                format!("rho = {rho}, lambda_1 = {l1}"),
            ));
        }
        let admissibility = if l1 <= rho {
            Admissibility {
                beta: l1.min(rho * l1 / ld),
                inclusive: false,
            }
        } else {
            Admissibility {
                beta: rho,
                inclusive: true,
            }
        };
        Ok(Self {
            variant: Variant::ClosedForm {
                directions,
                eigenvalues,
                coefficients,
                rho,
            },
            exponent,
            admissibility,
        })
    }

    /// Integral-form function built from finitely many spectral atoms.
    pub fn integral_form(exponent: Exponent, atoms: Vec<(DVector<f64>, f64)>) -> Result<Self> {
        let d = exponent.dim();
        if atoms.is_empty() {
            return Err(Error::Invalid("integral form needs at least one atom".into()));
        }
        if atoms.iter().any(|(t, g)| t.len() != d || !(*g > 0.0) || t.norm() == 0.0) {
            return Err(Error::Invalid(
                "integral form atoms need nonzero directions of matching dimension and positive weights".into(),
            ));
        }
        let a1 = exponent.a_min();
        if a1 <= 0.5 {
            return Err(Error::hypothesis(
                "integral form requires a_1 > 1/2",
                format!("a_1 = {a1}"),
            ));
        }
        let et = exponent.matrix().transpose();
        let mut krylov = Vec::new();
        for (t, _) in &atoms {
            let mut v = t.clone();
            for _ in 0..d {
                krylov.push(v.clone());
                v = &et * v;
            }
        }
        let k = DMatrix::from_columns(&krylov);
        let sv = k.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
        if rank < d {
            return Err(Error::Invalid(format!(
                "integral form atoms do not generate R^d under E^t (rank {rank} < {d})"
            )));
        }
        let ap = exponent.a_max();
        let admissibility = if a1 <= 1.0 {
            Admissibility {
                beta: a1.min(a1 / ap),
                inclusive: false,
            }
        } else {
            Admissibility {
                beta: 1.0,
                inclusive: true,
            }
        };
        let mut out = Self {
            variant: Variant::IntegralForm { atoms: vec![] },
            exponent,
            admissibility,
        };
        let mut built = Vec::with_capacity(atoms.len());
        for (t, g) in atoms {
            let r = &et * &t;
            let lam = r.dot(&t) / t.norm_squared();
            let eigen = if (r - &t * lam).norm() <= 1e-10 * t.norm() * (1.0 + lam.abs()) {
                // K(lambda) = int (1 - cos r^lambda) dr / r^2, via the general path.
                let unit = DVector::from_element(1, 1.0);
                let e1 = Exponent::scalar(1, lam)?;
                let k = radial_integral(&e1, &unit, &unit)?;
                Some((lam, k))
            } else {
                None
            };
            built.push(Atom {
                direction: t,
                weight: g,
                eigen,
            });
        }
        out.variant = Variant::IntegralForm { atoms: built };
        Ok(out)
    }

    /// `||x||^{1/a}` for `E = a I + S` with `S` skew.
    pub fn isotropic_norm(exponent: Exponent) -> Result<Self> {
        let d = exponent.dim() as f64;
        let a = exponent.trace() / d;
        let m = exponent.matrix();
        let sym = (m + m.transpose()) * 0.5;
        let dev = (sym - DMatrix::identity(m.nrows(), m.ncols()) * a).amax();
        if dev > 1e-10 * (1.0 + a) {
            return Err(Error::Invalid(format!(
                "isotropic norm needs E with symmetric part a I (deviation {dev:e})"
            )));
        }
        Ok(Self {
            variant: Variant::IsotropicNorm { a },
            exponent,
            admissibility: Admissibility {
                beta: a,
                inclusive: true,
            },
        })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn admissibility(&self) -> Admissibility {
        self.admissibility
    }

    pub fn kind(&self) -> &'static str {
        match self.variant {
            Variant::ClosedForm { .. } => "closed-form",
            Variant::IntegralForm { .. } => "integral-form",
            Variant::IsotropicNorm { .. } => "isotropic-norm",
        }
    }

    /// Evaluates at `x`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.exponent.dim() {
            return Err(Error::Invalid("point dimension mismatch".into()));
        }
        Ok(match &self.variant {
            Variant::ClosedForm {
                directions,
                eigenvalues,
                coefficients,
                rho,
            } => {
                let s: f64 = directions
                    .iter()
                    .zip(eigenvalues)
                    .zip(coefficients)
                    .map(|((t, l), c)| c * t.dot(x).abs().powf(rho / l))
                    .sum();
                s.powf(1.0 / rho)
            }
            Variant::IntegralForm { atoms } => {
                let mut s = 0.0;
                for a in atoms {
                    s += a.weight
                        * match a.eigen {
                            Some((lam, k)) => k * a.direction.dot(x).abs().powf(1.0 / lam),
                            None => radial_integral(&self.exponent, x, &a.direction)?,
                        };
                }
                s
            }
            Variant::IsotropicNorm { a } => x.norm().powf(1.0 / a),
        })
    }

    /// Evaluates an integral-form function by radial quadrature for every
    /// atom, bypassing the eigenvector shortcut.
    pub fn eval_quadrature(&self, x: &DVector<f64>) -> Result<f64> {
        match &self.variant {
            Variant::IntegralForm { atoms } => atoms
                .iter()
                .map(|a| Ok(a.weight * radial_integral(&self.exponent, x, &a.direction)?))
                .sum(),
            _ => self.eval(x),
        }
    }

    /// Minimum and maximum over the unit sphere of the norm, on a chart grid.
    pub fn extrema(&self, resolution: usize) -> Result<(f64, f64)> {
        let norm = AnisoNorm::new(self.exponent.clone());
        let m = norm.sphere_measure(resolution)?;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for n in &m.nodes {
            let v = self.eval(&n.direction)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}

impl Homogeneous for HomogeneousFn {
    fn exponent(&self) -> &Exponent {
        &self.exponent
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.eval(x)
    }
}

/// `int_0^inf (1 - cos <x, r^{E^t} theta>) dr / r^2`, computed in `u = ln r`.
///
/// Oscillatory tail beyond the point where the phase `g(u) = <e^{uE} x, theta>`
/// is fast is integrated asymptotically by two integrations by parts.
pub fn radial_integral(e: &Exponent, x: &DVector<f64>, theta: &DVector<f64>) -> Result<f64> {
    let scale = x.norm() * theta.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let m = e.matrix();
    let m2 = m * m;
    let phase = |u: f64| -> (f64, f64, f64) {
        let y = e.flow(u) * x;
        (y.dot(theta), (m * &y).dot(theta), (&m2 * &y).dot(theta))
    };
    let f = |u: f64| -> f64 {
        let g = phase(u).0;
        let s = (0.5 * g).sin();
        2.0 * s * s * (-u).exp()
    };
    let mean = e.trace() / e.dim() as f64;
    let u0 = -scale.ln() / mean - 2.0;

    // Locate the start of the fast-phase region.
    let mut uc = None;
    let mut u = u0;
    while u < u0 + 80.0 {
        let (_, g1, g2) = phase(u);
        if g1.abs() >= FAST_PHASE && g2.abs() <= 0.05 * g1 * g1 {
            let stable = [0.5, 1.0, 2.0].iter().all(|du| {
                let (_, h1, h2) = phase(u + du);
                h1.abs() >= g1.abs() && h2.abs() <= 0.05 * h1 * h1
            });
            if stable {
                uc = Some(u);
                break;
            }
        }
        u += 0.25;
    }
    let lower = integrate_panels(f, u0, -1.0, 1.0, 1e-13, 5000)?;
    let (upper_end, tail) = match uc {
        Some(uc) => {
            let (g, g1, g2) = phase(uc);
            let w = (-uc).exp();
            let h0 = w / g1;
            let h1 = -w * (1.0 / (g1 * g1) + g2 / (g1 * g1 * g1));
            let c = -g.sin() * h0 - g.cos() * h1;
            (uc, w - c)
        }
        None => {
            return Err(Error::Numerical(
                "radial integral: phase never becomes uniformly fast".into(),
            ))
        }
    };
    let n = (((upper_end - u0) / 0.25).ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=n)
        .map(|i| u0 + (upper_end - u0) * i as f64 / n as f64)
        .collect();
    let middle = integrate(
        f,
        &breaks,
        Tolerance {
            abs: 1e-15,
            rel: 1e-12,
            max_intervals: 20000,
        },
    )?;
    Ok(lower + middle + tail)
}

/// Result of [`certify_homogeneity`].
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    pub trials: usize,
    pub max_violation: f64,
    pub pass: bool,
}

/// Pass threshold for [`certify_homogeneity`].
pub const HOMOGENEITY_TOL: f64 = 1e-6;

/// Largest relative violation of `phi(c^E x) = c phi(x)` over random `x` and
/// log-uniform `c` in `[1e-3, 1e3]`.
pub fn certify_homogeneity<H: Homogeneous + ?Sized>(f: &H, trials: usize, seed: u64) -> Result<HomogeneityReport> {
    let e = f.exponent();
    let d = e.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
            * 10f64.powf(rng.random_range(-1.0..1.0));
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let lhs = f.value(&(e.power(c)? * &x))?;
        let rhs = c * f.value(&x)?;
        let v = if rhs > 0.0 {
            (lhs - rhs).abs() / rhs
        } else {
            lhs.abs()
        };
        worst = worst.max(v);
    }
    Ok(HomogeneityReport {
        trials,
        max_violation: worst,
        pass: worst <= HOMOGENEITY_TOL,
    })
}

/// Result of [`certify_admissibility`].
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub beta: f64,
    /// `(tau, sup |phi(x + y) - phi(y)| / tau^beta)` by refinement level.
    pub levels: Vec<(f64, f64)>,
    /// Log-log growth rate of the ratio on the finer half of the levels.
    pub growth: f64,
    /// `beta` exceeds the smallest real part `a_1`, so it cannot be admissible.
    pub exceeds_spectral_bound: bool,
    pub pass: bool,
}

/// Growth rate above which the increment ratio is deemed unbounded.
pub const ADMISSIBILITY_GROWTH_TOL: f64 = 0.05;

/// Probes `sup_{A <= ||y|| <= B} |phi(x + y) - phi(y)| <= C tau(x)^beta`
/// on `tau(x) = 2^{-k}`, `k = 0..=20`, with common random pairs across levels.
pub fn certify_admissibility<H: Homogeneous + ?Sized>(
    f: &H,
    beta: f64,
    a: f64,
    b: f64,
    pairs: usize,
    seed: u64,
) -> Result<AdmissibilityReport> {
    if !(beta > 0.0) || !(a > 0.0 && b >= a) {
        return Err(Error::Domain(format!(
            "admissibility probe needs beta > 0 and 0 < A <= B (beta = {beta}, A = {a}, B = {b})"
        )));
    }
    let e = f.exponent();
    let d = e.dim();
    let norm = AnisoNorm::new(e.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let theta = norm.random_sphere_point(&mut rng);
        let g = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let r: f64 = rng.random_range(a..=b);
        let y = &g * (r / g.norm());
        let fy = f.value(&y)?;
        samples.push((theta, y, fy));
    }
    let mut levels = Vec::new();
    for k in 0..=20 {
        let t = 2f64.powi(-k);
        let m = e.power(t)?;
        let mut sup = 0.0f64;
        for (theta, y, fy) in &samples {
            let v = f.value(&(&m * theta + y))?;
            sup = sup.max((v - fy).abs());
        }
        levels.push((t, sup / t.powf(beta)));
    }
    let fine: Vec<(f64, f64)> = levels[10..]
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|p| (-p.0.ln(), p.1.ln()))
        .collect();
    let growth = if fine.len() >= 2 {
        crate::analysis::stats::linear_fit(&fine).slope
    } else {
        0.0
    };
    let exceeds = beta > e.a_min();
    Ok(AdmissibilityReport {
        beta,
        levels,
        growth,
        exceeds_spectral_bound: exceeds,
        pass: !exceeds && growth <= ADMISSIBILITY_GROWTH_TOL,
    })
}
