//! Anisotropic norm, generalized polar coordinates and the sphere measure.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::quadrature::{gauss_laguerre, gauss_legendre, integrate, integrate_panels, Tolerance};

const NORM_NODES: usize = 64;
const ROOT_TOL: f64 = 1e-12;
const ROOT_ITERS: usize = 80;

/// The norm `||x||_0 = int_0^inf ||exp(-sE) x|| ds` with Euclidean base norm,
/// discretized by a Gauss-Laguerre rule in `s a_1`.
///
/// The discretization is a positive combination of norms, hence itself a norm.
#[derive(Debug, Clone)]
pub struct AnisoNorm {
    exponent: Exponent,
    terms: Vec<(DMatrix<f64>, f64)>,
}

/// Polar coordinates `x = radius^E direction`, with `direction` on the unit sphere of the norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Polar {
    pub radius: f64,
    /// `None` at the origin.
    pub direction: Option<DVector<f64>>,
}

impl AnisoNorm {
    pub fn new(exponent: Exponent) -> Self {
        Self::with_nodes(exponent, NORM_NODES)
    }

    pub fn with_nodes(exponent: Exponent, nodes: usize) -> Self {
        let rule = gauss_laguerre(nodes);
        let a1 = exponent.a_min();
        let terms = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&v, &w)| {
                let m = exponent.flow(-v / a1);
                let c = w * v.exp() / a1;
                (m, c)
            })
            .filter(|(m, c)| c.is_finite() && m.iter().all(|x| x.is_finite()))
            .collect();
        Self { exponent, terms }
    }

    pub fn exponent(&self) -> &Exponent {
        &self.exponent
    }

    pub fn dim(&self) -> usize {
        self.exponent.dim()
    }

    pub fn norm0(&self, x: &DVector<f64>) -> f64 {
        self.terms.iter().map(|(m, c)| c * (m * x).norm()).sum()
    }

    /// Directional derivative of [`Self::norm0`] at `x != 0` along `v`.
    pub fn norm0_derivative(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mx = m * x;
                let n = mx.norm();
                if n == 0.0 {
                    0.0
                } else {
                    c * mx.dot(&(m * v)) / n
                }
            })
            .sum()
    }

    /// Radial part `tau(x)`.
    pub fn radius(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.polar(x)?.radius)
    }

    /// Polar decomposition by safeguarded Newton iteration on `u = ln tau`.
    pub fn polar(&self, x: &DVector<f64>) -> Result<Polar> {
        if x.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "point has dimension {}, exponent has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("point has non-finite coordinates".into()));
        }
        let n0 = self.norm0(x);
        if n0 == 0.0 {
            return Ok(Polar {
                radius: 0.0,
                direction: None,
            });
        }
        let e = &self.exponent;
        // h(u) = ln ||exp(-uE) x||_0, strictly decreasing with root at ln tau.
        let eval = |u: f64| -> (f64, f64, DVector<f64>) {
            let y = e.flow(-u) * x;
            let n = self.norm0(&y);
            let slope = -y.norm() / n;
            (n.ln(), slope, y)
        };
        let mean = e.trace() / e.dim() as f64;
        let mut u = n0.ln() / mean;
        let (mut h, mut slope, mut y) = eval(u);
        if !h.is_finite() {
            return Err(Error::Range("point too large or small for polar coordinates".into()));
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut expand = 1.0;
        for _ in 0..ROOT_ITERS {
            if h == 0.0 {
                break;
            }
            if h > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let mut next = u - h / slope;
            if !(next.is_finite() && next > lo && next < hi) {
                next = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else if h > 0.0 {
                    u + expand
                } else {
                    u - expand
                };
                expand *= 2.0;
            }
            let step = (next - u).abs();
            u = next;
            (h, slope, y) = eval(u);
            if !h.is_finite() {
                return Err(Error::Range("polar root search left the representable range".into()));
            }
            if step < ROOT_TOL * u.abs().max(1.0) || (hi - lo) < ROOT_TOL * u.abs().max(1.0) {
                break;
            }
        }
        if h.abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "polar root search stalled at residual {h:e}"
            )));
        }
        // Renormalize the direction onto the unit sphere exactly in the discretized norm.
        let n = self.norm0(&y);
        Ok(Polar {
            radius: u.exp(),
            direction: Some(y / n),
        })
    }

    /// Projects a nonzero vector radially (along the Euclidean ray) onto the unit sphere.
    pub fn ray_to_sphere(&self, v: &DVector<f64>) -> DVector<f64> {
        v / self.norm0(v)
    }

    /// Empirical quasi-triangle constant: the largest `tau(x+y)` seen over
    /// pairs with `tau(x) + tau(y) = 1`.
    pub fn quasi_triangle_constant(&self, samples: usize, seed: u64) -> Result<f64> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut k: f64 = 1.0;
        for _ in 0..samples {
            let t1 = self.random_sphere_point(&mut rng);
            let t2 = self.random_sphere_point(&mut rng);
            let s: f64 = rng.random_range(0.0..1.0);
            let x = self.exponent.power(s.max(1e-300))? * t1;
            let y = if s < 1.0 {
                self.exponent.power(1.0 - s)? * t2
            } else {
                DVector::zeros(d)
            };
            k = k.max(self.radius(&(x + y))?);
        }
        Ok(k)
    }

    /// A point on the unit sphere along a uniformly random Euclidean direction.
    pub fn random_sphere_point<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        loop {
            let g = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample(StandardNormal)));
            let n = g.norm();
            if n > 1e-12 {
                return self.ray_to_sphere(&g);
            }
        }
    }

    /// Checks `C1 ||x||_0^{1/a_1 + delta} <= tau(x) <= C2 ||x||_0^{1/a_p - delta}`
    /// for `||x||_0 <= 1`: constants are fitted on the decade nearest 1 and
    /// must hold on all smaller scales.
    pub fn growth_envelope(&self, delta: f64, samples: usize, seed: u64) -> Result<EnvelopeReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = &self.exponent;
        let s_lo = 1.0 / e.a_min() + delta;
        let s_hi = 1.0 / e.a_max() - delta;
        let mut pts = Vec::with_capacity(samples);
        for _ in 0..samples {
            let theta = self.random_sphere_point(&mut rng);
            let decades: f64 = rng.random_range(0.0..12.0);
            let x = &theta * 10f64.powf(-decades);
            let l = self.norm0(&x).ln();
            let t = self.radius(&x)?.ln();
            pts.push((l, t));
        }
        let near: Vec<_> = pts.iter().filter(|p| p.0 > -(10f64.ln())).collect();
        if near.is_empty() {
            return Err(Error::Numerical("no samples near the unit sphere".into()));
        }
        let c1 = near.iter().map(|p| p.1 - s_lo * p.0).fold(f64::INFINITY, f64::min);
        let c2 = near.iter().map(|p| p.1 - s_hi * p.0).fold(f64::NEG_INFINITY, f64::max);
        let violations = pts
            .iter()
            .filter(|p| p.1 < c1 + s_lo * p.0 - 1e-9 || p.1 > c2 + s_hi * p.0 + 1e-9)
            .count();
        Ok(EnvelopeReport {
            lower_slope: s_lo,
            upper_slope: s_hi,
            log_c1: c1,
            log_c2: c2,
            samples,
            violations,
        })
    }

    /// Discretized surface measure on the unit sphere.
    ///
    /// `resolution` is the number of angular cells per `2 pi` (d = 2, 3).
    pub fn sphere_measure(&self, resolution: usize) -> Result<SphereMeasure> {
        let d = self.dim();
        let mut warnings = Vec::new();
        if d > 3 {
            return Err(Error::Unsupported(format!(
                "sphere measure is implemented for d <= 3, got d = {d}"
            )));
        }
        if d >= 2 && resolution < 8 {
            return Err(Error::Invalid(format!("resolution {resolution} below minimum 8")));
        }
        if d == 3 && resolution < 16 {
            warnings.push(format!(
                "resolution {resolution} is coarse for d = 3; the surface measure may be inaccurate"
            ));
        }
        let nodes = chart_rule(d, resolution, 0.5)
            .into_iter()
            .map(|(s, w)| {
                let (u, du) = chart(d, &s, None);
                let (direction, density) = self.sphere_density(&u, &du);
                SphereNode {
                    direction,
                    weight: density * w,
                    density,
                }
            })
            .collect();
        Ok(SphereMeasure {
            nodes,
            resolution,
            warnings,
        })
    }

    /// Maps a chart point `u` with parameter derivatives `du` to the unit
    /// sphere and returns the sphere point with its measure density.
    pub fn sphere_density(&self, u: &DVector<f64>, du: &[DVector<f64>]) -> (DVector<f64>, f64) {
        let d = self.dim();
        let n = self.norm0(u);
        let theta = u / n;
        let mut cols = Vec::with_capacity(d);
        cols.push(self.exponent.matrix() * &theta);
        for v in du {
            let dn = self.norm0_derivative(u, v);
            cols.push(v / n - u * (dn / (n * n)));
        }
        let jac = DMatrix::from_columns(&cols);
        (theta, jac.determinant().abs())
    }
}

/// Result of [`AnisoNorm::growth_envelope`].
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub lower_slope: f64,
    pub upper_slope: f64,
    pub log_c1: f64,
    pub log_c2: f64,
    pub samples: usize,
    pub violations: usize,
}

impl EnvelopeReport {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.log_c1.is_finite() && self.log_c2.is_finite()
    }
}

/// A weighted point of the discretized sphere measure.
#[derive(Debug, Clone)]
pub struct SphereNode {
    pub direction: DVector<f64>,
    pub weight: f64,
    pub density: f64,
}

/// Quadrature for the surface measure on the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereMeasure {
    pub nodes: Vec<SphereNode>,
    pub resolution: usize,
    pub warnings: Vec<String>,
}

impl SphereMeasure {
    pub fn total(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// `sum_k w_k g(theta_k)`.
    pub fn integrate<F: FnMut(&DVector<f64>) -> f64>(&self, mut g: F) -> f64 {
        self.nodes.iter().map(|n| n.weight * g(&n.direction)).sum()
    }
}

/// Parameter rule for the unit Euclidean sphere: (parameters, weight).
///
/// d = 1: the two signs; d = 2: periodic midpoint rule in the angle;
/// d = 3: Gauss-Legendre in the height times periodic midpoint in the azimuth.
pub(crate) fn chart_rule(d: usize, resolution: usize, offset: f64) -> Vec<(Vec<f64>, f64)> {
    match d {
        1 => vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)],
        2 => {
            let h = 2.0 * PI / resolution as f64;
            (0..resolution)
                .map(|k| (vec![(k as f64 + offset) * h], h))
                .collect()
        }
        _ => {
            let gl = gauss_legendre((resolution / 2).max(2));
            let h = 2.0 * PI / resolution as f64;
            let mut out = Vec::with_capacity(gl.len() * resolution);
            for (&z, &wz) in gl.nodes.iter().zip(&gl.weights) {
                for k in 0..resolution {
                    out.push((vec![z, (k as f64 + offset) * h], wz * h));
                }
            }
            out
        }
    }
}

/// Chart of the unit Euclidean sphere and its parameter derivatives,
/// optionally rotated.
pub(crate) fn chart(d: usize, s: &[f64], rotation: Option<&DMatrix<f64>>) -> (DVector<f64>, Vec<DVector<f64>>) {
    let (u, du) = match d {
        1 => (DVector::from_element(1, s[0].signum()), vec![]),
        2 => {
            let (sn, cs) = s[0].sin_cos();
            (
                DVector::from_vec(vec![cs, sn]),
                vec![DVector::from_vec(vec![-sn, cs])],
            )
        }
        _ => {
            let z = s[0];
            let (sn, cs) = s[1].sin_cos();
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let dr = if rho > 0.0 { -z / rho } else { 0.0 };
            (
                DVector::from_vec(vec![rho * cs, rho * sn, z]),
                vec![
                    DVector::from_vec(vec![dr * cs, dr * sn, 1.0]),
                    DVector::from_vec(vec![-rho * sn, rho * cs, 0.0]),
                ],
            )
        }
    };
    match rotation {
        Some(r) => (r * u, du.iter().map(|v| r * v).collect()),
        None => (u, du),
    }
}

/// `int f(x) dx` over `{r_lo <= tau(x) <= r_hi}` in polar coordinates.
///
/// `r_lo = 0` is allowed; `r_hi` must be finite.
pub fn polar_integrate<F>(
    norm: &AnisoNorm,
    measure: &SphereMeasure,
    mut f: F,
    r_lo: f64,
    r_hi: f64,
    tol: f64,
) -> Result<f64>
where
    F: FnMut(&DVector<f64>) -> f64,
{
    if !(r_lo >= 0.0 && r_hi > r_lo && r_hi.is_finite()) {
        return Err(Error::Domain(format!("invalid radial range [{r_lo}, {r_hi}]")));
    }
    let e = norm.exponent();
    let q = e.trace();
    let mut radial = |u: f64| -> f64 {
        let m = e.flow(u);
        let jac = (q * u).exp();
        measure
            .nodes
            .iter()
            .map(|n| n.weight * f(&(&m * &n.direction)))
            .sum::<f64>()
            * jac
    };
    let u_hi = r_hi.ln();
    let tol_q = Tolerance {
        abs: 1e-14,
        rel: tol,
        max_intervals: 2000,
    };
    if r_lo > 0.0 {
        let u_lo = r_lo.ln();
        let n = ((u_hi - u_lo).ceil() as usize).clamp(1, 200);
        let breaks: Vec<f64> = (0..=n).map(|i| u_lo + (u_hi - u_lo) * i as f64 / n as f64).collect();
        return integrate(radial, &breaks, tol_q);
    }
    let u_mid = u_hi - 8.0;
    let breaks: Vec<f64> = (0..=8).map(|i| u_mid + i as f64).collect();
    let upper = integrate(&mut radial, &breaks, tol_q)?;
    let lower = integrate_panels(&mut radial, u_mid, -1.0, 2.0, tol * 1e-2, 400)?;
    Ok(upper + lower)
}
