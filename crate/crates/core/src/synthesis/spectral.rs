//! Harmonizable fields: complex isotropic noise on polar spectral cells.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::oracle::Oracle;
use super::rng::{stream, JITTER, NOISE};
use super::stable::complex_isotropic;
use super::{radial_scales, Discretization, DiscretizationSummary, FieldSpec, Grid};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::homogeneous::HomogeneousFn;
use crate::polar::{chart, chart_rule, AnisoNorm};

pub(super) struct SpectralEngine {
    e_t: Exponent,
    norm_t: AnisoNorm,
    psi: HomogeneousFn,
    hurst: f64,
    alpha: f64,
    q: f64,
    u_lo: f64,
    du: f64,
    rings: usize,
    angular: usize,
    jitter: bool,
    grid: Grid,
    points: Vec<DVector<f64>>,
    fixed: Option<Frequencies>,
}

struct Frequencies {
    xi: Vec<DVector<f64>>,
    amp: Vec<f64>,
}

impl SpectralEngine {
    pub(super) fn new(
        spec: &FieldSpec,
        grid: &Grid,
        disc: &Discretization,
    ) -> Result<(Self, DiscretizationSummary, Vec<String>)> {
        let d = spec.dim();
        let norm = AnisoNorm::new(spec.exponent().clone());
        let (t_lo, t_hi) = radial_scales(&norm, grid)?;
        let lattice = matches!(grid, Grid::Lattice { .. });
        // Default window: the radial integrand decays like r^{alpha (a_1 - H)}
        // towards zero and r^{-alpha H} towards infinity; each truncated
        // tail is kept near 1e-3 and 1e-2 of the scale respectively.
        let ah = spec.alpha() * spec.hurst();
        let low = spec.alpha() * (spec.exponent().a_min() - spec.hurst());
        let r_min = disc
            .r_min
            .unwrap_or(1e-3f64.powf(1.0 / low).clamp(1e-12, 1e-3) / t_hi);
        let r_max = disc.r_max.unwrap_or(
            100f64
                .powf(1.0 / ah)
                .clamp(if lattice { 32.0 } else { 1e3 }, 1e12)
                / t_lo,
        );
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::Invalid(format!("invalid spectral window [{r_min}, {r_max}]")));
        }
        let per_decade = disc.per_decade.unwrap_or(if lattice { 12 } else { 8 }).max(1);
        let angular = match d {
            1 => 2,
            2 => disc.angular.unwrap_or(32),
            _ => disc.angular.unwrap_or(16),
        };
        if d >= 2 && angular < 8 {
            return Err(Error::Invalid(format!("angular resolution {angular} below minimum 8")));
        }
        let jitter = disc.jitter.unwrap_or(true);
        let decades = (r_max / r_min).log10();
        let rings = ((decades * per_decade as f64).ceil() as usize).max(1);
        let u_lo = r_min.ln();
        let du = (r_max.ln() - u_lo) / rings as f64;
        let e_t = spec.exponent().transpose();
        let mut engine = Self {
            norm_t: AnisoNorm::new(e_t.clone()),
            e_t,
            psi: spec.function().clone(),
            hurst: spec.hurst(),
            alpha: spec.alpha(),
            q: spec.exponent().trace(),
            u_lo,
            du,
            rings,
            angular,
            jitter,
            grid: grid.clone(),
            points: if lattice { vec![] } else { grid.all_points() },
            fixed: None,
        };
        if !jitter {
            engine.fixed = Some(engine.frequencies(0, 0)?);
        }
        let cells = rings * chart_rule(d, angular, 0.5).len();
        let mut warnings = Vec::new();
        if d <= 2 {
            let oracle = Oracle::new(spec)?;
            let mut probes = vec![grid.point(grid.len() - 1)];
            if grid.len() > 1 {
                probes.push(grid.point(1) - grid.point(0));
            }
            for x in probes.iter().filter(|x| x.norm() > 0.0) {
                let (full, inside) = oracle.harmonizable_window(x, Some((r_min.ln(), r_max.ln())))?;
                if full > 0.0 && (full - inside) / full > 0.02 {
                    warnings.push(format!(
                        "spectral window [{r_min:.3e}, {r_max:.3e}] misses {:.1}% of the scale at {:?}",
                        100.0 * (full - inside) / full,
                        x.as_slice()
                    ));
                }
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        let summary = DiscretizationSummary {
            method: "polar spectral cells",
            cells,
            r_min: Some(r_min),
            r_max: Some(r_max),
            per_decade: Some(per_decade),
            angular: Some(angular),
            jitter: Some(jitter),
            subdivision: None,
            margin: None,
        };
        Ok((engine, summary, warnings))
    }

    fn frequencies(&self, seed: u64, replicate: u64) -> Result<Frequencies> {
        let d = self.e_t.dim();
        let mut rng = stream(seed, JITTER, replicate);
        let (offset, rotation) = if self.jitter {
            let off: f64 = rng.random_range(0.0..1.0);
            let rot = if d == 3 { Some(random_rotation(&mut rng)) } else { None };
            (off, rot)
        } else {
            (0.5, None)
        };
        let ah = self.alpha * self.hurst;
        let mut dirs = Vec::new();
        for (s, w) in chart_rule(d, self.angular, offset) {
            let (u, du) = chart(d, &s, rotation.as_ref());
            let (theta, dens) = self.norm_t.sphere_density(&u, &du);
            let psi = self.psi.eval(&theta)?;
            dirs.push((theta, dens * w * psi.powf(-ah - self.q)));
        }
        let mut xi = Vec::with_capacity(self.rings * dirs.len());
        let mut amp = Vec::with_capacity(self.rings * dirs.len());
        for j in 0..self.rings {
            let v: f64 = if self.jitter { rng.random_range(0.0..1.0) } else { 0.5 };
            let u = self.u_lo + (j as f64 + v) * self.du;
            let m = self.e_t.flow(u);
            let radial = (-ah * u).exp() * self.du;
            for (theta, w) in &dirs {
                xi.push(&m * theta);
                amp.push((radial * w).powf(1.0 / self.alpha));
            }
        }
        Ok(Frequencies { xi, amp })
    }

    pub(super) fn sample(&self, seed: u64, replicate: u64) -> Vec<f64> {
        let owned;
        let f = match &self.fixed {
            Some(f) => f,
            None => {
                owned = self
                    .frequencies(seed, replicate)
                    .expect("frequency construction validated at setup");
                &owned
            }
        };
        let mut rng = stream(seed, NOISE, replicate);
        let coef: Vec<Complex<f64>> = f
            .amp
            .iter()
            .map(|&a| complex_isotropic(self.alpha, &mut rng) * a)
            .collect();
        let offset: f64 = coef.iter().map(|c| c.re).sum();
        let mut out = match &self.grid {
            Grid::Lattice {
                origin,
                spacing,
                shape,
            } if shape.len() <= 2 => eval_lattice(&f.xi, &coef, origin, spacing, shape),
            Grid::Lattice { .. } => {
                let pts = self.grid.all_points();
                eval_points(&f.xi, &coef, &pts)
            }
            Grid::Points { .. } => eval_points(&f.xi, &coef, &self.points),
        };
        for v in &mut out {
            *v -= offset;
        }
        out
    }

    /// Discretized `Gamma^alpha` per location (only without jitter).
    pub(super) fn scale(&self) -> Option<Vec<f64>> {
        let f = self.fixed.as_ref()?;
        let pts = self.grid.all_points();
        Some(
            pts.iter()
                .map(|x| {
                    f.xi.iter()
                        .zip(&f.amp)
                        .map(|(xi, a)| {
                            let g = x.dot(xi);
                            (2.0 * (0.5 * g).sin().abs() * a).powf(self.alpha)
                        })
                        .sum()
                })
                .collect(),
        )
    }
}

fn random_rotation<R: Rng>(rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..3 {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// `sum_c Re(e^{i<x, xi_c>} coef_c)` at each point.
fn eval_points(xi: &[DVector<f64>], coef: &[Complex<f64>], pts: &[DVector<f64>]) -> Vec<f64> {
    pts.iter()
        .map(|x| {
            xi.iter()
                .zip(coef)
                .map(|(k, c)| {
                    let (s, co) = x.dot(k).sin_cos();
                    co * c.re - s * c.im
                })
                .sum()
        })
        .collect()
}

/// Separable evaluation on a lattice of dimension 1 or 2.
fn eval_lattice(
    xi: &[DVector<f64>],
    coef: &[Complex<f64>],
    origin: &[f64],
    spacing: &[f64],
    shape: &[usize],
) -> Vec<f64> {
    let k = xi.len();
    if shape.len() == 1 {
        let n = shape[0];
        let mut out = vec![0.0; n];
        for (x, c) in xi.iter().zip(coef) {
            let p0 = origin[0] * x[0];
            let st = spacing[0] * x[0];
            for (i, o) in out.iter_mut().enumerate() {
                let (s, co) = (p0 + i as f64 * st).sin_cos();
                *o += co * c.re - s * c.im;
            }
        }
        return out;
    }
    let (n0, n1) = (shape[0], shape[1]);
    // Row factors carry the origin phase and the coefficient.
    let mut rre = DMatrix::<f64>::zeros(n0, k);
    let mut rim = DMatrix::<f64>::zeros(n0, k);
    let mut cre = DMatrix::<f64>::zeros(k, n1);
    let mut cim = DMatrix::<f64>::zeros(k, n1);
    for (j, (x, c)) in xi.iter().zip(coef).enumerate() {
        let p0 = origin[0] * x[0] + origin[1] * x[1];
        for i in 0..n0 {
            let (s, co) = (p0 + i as f64 * spacing[0] * x[0]).sin_cos();
            let z = Complex::new(co, s) * c;
            rre[(i, j)] = z.re;
            rim[(i, j)] = z.im;
        }
        for i in 0..n1 {
            let (s, co) = (i as f64 * spacing[1] * x[1]).sin_cos();
            cre[(j, i)] = co;
            cim[(j, i)] = s;
        }
    }
    let prod = &rre * &cre - &rim * &cim;
    let mut out = Vec::with_capacity(n0 * n1);
    for i in 0..n0 {
        for j in 0..n1 {
            out.push(prod[(i, j)]);
        }
    }
    out
}
