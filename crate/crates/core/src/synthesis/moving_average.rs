//! Moving-average fields on point sets: polar cells around the origin,
//! refined near every evaluation point.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::rng::{stream, NOISE};
use super::stable::symmetric_stable;
use super::{radial_scales, Discretization, DiscretizationSummary, FieldSpec, Grid};
use crate::error::{Error, Result};
use crate::polar::{chart, AnisoNorm};
use crate::quadrature::gauss_legendre;

const MAX_KERNEL: usize = 400_000_000;
const MAX_CELLS: usize = 2_000_000;

pub(super) struct CellEngine {
    /// Row-major points x cells; includes the cell scale and noise constant.
    kernel: Vec<f64>,
    cells: usize,
    alpha: f64,
}

#[derive(Clone)]
struct Cell {
    u: (f64, f64),
    s: Vec<(f64, f64)>,
}

impl CellEngine {
    pub(super) fn new(
        spec: &FieldSpec,
        grid: &Grid,
        disc: &Discretization,
    ) -> Result<(Self, DiscretizationSummary, Vec<String>)> {
        let d = spec.dim();
        let e = spec.exponent();
        let norm = AnisoNorm::new(e.clone());
        let alpha = spec.alpha();
        let hurst = spec.hurst();
        let q = e.trace();
        let p = hurst - q / alpha;
        if p == 0.0 {
            return Err(Error::Unsupported(
                "H = q / alpha makes the moving-average kernel vanish".into(),
            ));
        }
        let beta = spec.function().admissibility().beta;
        let (t_lo, t_hi) = radial_scales(&norm, grid)?;
        let r_min = disc
            .r_min
            .unwrap_or((t_lo * (-16.0 / (alpha * hurst)).exp()).max(t_lo * 1e-12));
        let r_max = disc
            .r_max
            .unwrap_or((t_hi * (16.0 / (alpha * (beta - hurst))).exp()).min(t_hi * 1e12));
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::Invalid(format!("invalid radial window [{r_min}, {r_max}]")));
        }
        let per_decade = disc.per_decade.unwrap_or(6).max(1);
        let angular = match d {
            1 => 2,
            2 => disc.angular.unwrap_or(24),
            _ => disc.angular.unwrap_or(12),
        };
        let ratio = disc.refine_ratio.unwrap_or(2.0);
        let points = grid.all_points();
        let spread = points.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
        let min_cell = disc.min_cell.unwrap_or(1e-7) * spread;

        let rings = (((r_max / r_min).log10() * per_decade as f64).ceil() as usize).max(1);
        let du = (r_max.ln() - r_min.ln()) / rings as f64;
        let mut stack = Vec::new();
        for j in 0..rings {
            let u = (r_min.ln() + j as f64 * du, r_min.ln() + (j + 1) as f64 * du);
            match d {
                1 => {
                    for sg in [-1.0, 1.0] {
                        stack.push(Cell { u, s: vec![(sg, sg)] });
                    }
                }
                2 => {
                    let h = 2.0 * PI / angular as f64;
                    for k in 0..angular {
                        stack.push(Cell {
                            u,
                            s: vec![(k as f64 * h, (k + 1) as f64 * h)],
                        });
                    }
                }
                _ => {
                    let nz = (angular / 2).max(2);
                    let h = 2.0 * PI / angular as f64;
                    for iz in 0..nz {
                        let z0 = -1.0 + 2.0 * iz as f64 / nz as f64;
                        let z1 = -1.0 + 2.0 * (iz + 1) as f64 / nz as f64;
                        for k in 0..angular {
                            stack.push(Cell {
                                u,
                                s: vec![(z0, z1), (k as f64 * h, (k + 1) as f64 * h)],
                            });
                        }
                    }
                }
            }
        }

        let map = |u: f64, s: &[f64]| -> (DVector<f64>, f64, f64) {
            let (c, dc) = chart(d, s, None);
            let (theta, dens) = norm.sphere_density(&c, &dc);
            (e.flow(u) * theta, dens, (q * u).exp())
        };

        // Refinement near evaluation points, judged after pulling the cell
        // back to unit radius where the kernel is homogeneous.
        let mut cells = Vec::new();
        while let Some(c) = stack.pop() {
            let mids: Vec<f64> = c.s.iter().map(|r| 0.5 * (r.0 + r.1)).collect();
            let um = 0.5 * (c.u.0 + c.u.1);
            let unit = |s: &[f64]| {
                let (a, da) = chart(d, s, None);
                norm.sphere_density(&a, &da).0
            };
            let center = unit(&mids);
            let mut thetas = Vec::with_capacity(1 << c.s.len());
            for corner in 0..(1usize << c.s.len()) {
                let s: Vec<f64> = c
                    .s
                    .iter()
                    .enumerate()
                    .map(|(i, r)| if corner >> i & 1 == 0 { r.0 } else { r.1 })
                    .collect();
                thetas.push(unit(&s));
            }
            let mut pulled = vec![center.clone()];
            let mut actual = vec![e.flow(um) * &center];
            for u in [c.u.0, c.u.1] {
                let rel = e.flow(u - um);
                let abs = e.flow(u);
                for t in &thetas {
                    pulled.push(&rel * t);
                    actual.push(&abs * t);
                }
            }
            let spread_of = |v: &[DVector<f64>]| 2.0 * v.iter().map(|y| (y - &v[0]).norm()).fold(0.0, f64::max);
            let diam = spread_of(&actual);
            let rel_diam = spread_of(&pulled);
            let back = e.flow(-um);
            let near = diam > min_cell
                && points.iter().any(|x| {
                    let xp = &back * x;
                    pulled.iter().map(|y| (y - &xp).norm()).fold(f64::INFINITY, f64::min) < ratio * rel_diam
                });
            if near {
                let uh = (c.u.0, um, c.u.1);
                for (u0, u1) in [(uh.0, uh.1), (uh.1, uh.2)] {
                    if d == 1 {
                        stack.push(Cell {
                            u: (u0, u1),
                            s: c.s.clone(),
                        });
                        continue;
                    }
                    for corner in 0..(1usize << c.s.len()) {
                        let s = c
                            .s
                            .iter()
                            .enumerate()
                            .map(|(i, r)| {
                                let m = 0.5 * (r.0 + r.1);
                                if corner >> i & 1 == 0 {
                                    (r.0, m)
                                } else {
                                    (m, r.1)
                                }
                            })
                            .collect();
                        stack.push(Cell { u: (u0, u1), s });
                    }
                }
            } else {
                cells.push(c);
            }
            if cells.len() + stack.len() > MAX_CELLS {
                return Err(Error::Invalid(
                    "moving-average refinement exceeds the cell budget; raise min_cell".into(),
                ));
            }
        }
        if points.len() * cells.len() > MAX_KERNEL {
            return Err(Error::Invalid(format!(
                "{} points x {} cells exceeds the kernel budget; use a lattice grid",
                points.len(),
                cells.len()
            )));
        }

        // Kernel: signed power mean of the integrand over inner Gauss nodes.
        let gl = gauss_legendre(3);
        let noise = 0.5f64.powf(1.0 / alpha);
        let n_cells = cells.len();
        let mut kernel = vec![0.0; points.len() * n_cells];
        let mut nonfinite = 0usize;
        for (ci, c) in cells.iter().enumerate() {
            let mut nodes: Vec<(DVector<f64>, f64)> = Vec::new();
            for (u, wu) in gl.mapped(c.u.0, c.u.1) {
                let s_nodes: Vec<(Vec<f64>, f64)> = match d {
                    1 => vec![(vec![c.s[0].0], 1.0)],
                    2 => gl.mapped(c.s[0].0, c.s[0].1).map(|(s, w)| (vec![s], w)).collect(),
                    _ => {
                        let mut v = Vec::new();
                        for (z, wz) in gl.mapped(c.s[0].0, c.s[0].1) {
                            for (f, wf) in gl.mapped(c.s[1].0, c.s[1].1) {
                                v.push((vec![z, f], wz * wf));
                            }
                        }
                        v
                    }
                };
                for (s, ws) in s_nodes {
                    let (y, dens, jac) = map(u, &s);
                    nodes.push((y, dens * jac * wu * ws));
                }
            }
            let vol: f64 = nodes.iter().map(|n| n.1).sum();
            let phi0: Vec<f64> = nodes
                .iter()
                .map(|(y, _)| spec.function().eval(&(-y)).map(|v| v.powf(p)))
                .collect::<Result<_>>()?;
            for (i, x) in points.iter().enumerate() {
                let mut signed = 0.0;
                let mut pw = 0.0;
                for ((y, w), f0) in nodes.iter().zip(&phi0) {
                    let mut f = spec.function().eval(&(x - y))?.powf(p) - f0;
                    if !f.is_finite() {
                        nonfinite += 1;
                        f = 0.0;
                    }
                    signed += w * f;
                    pw += w * f.abs().powf(alpha);
                }
                let k = (pw / vol).powf(1.0 / alpha) * signed.signum();
                kernel[i * n_cells + ci] = if signed == 0.0 { 0.0 } else { k * vol.powf(1.0 / alpha) * noise };
            }
        }
        let mut warnings = Vec::new();
        if nonfinite > 0 {
            warnings.push(format!("{nonfinite} quadrature nodes hit a kernel singularity and were dropped"));
        }
        let summary = DiscretizationSummary {
            method: "refined polar cells",
            cells: n_cells,
            r_min: Some(r_min),
            r_max: Some(r_max),
            per_decade: Some(per_decade),
            angular: Some(angular),
            jitter: None,
            subdivision: None,
            margin: None,
        };
        Ok((
            Self {
                kernel,
                cells: n_cells,
                alpha,
            },
            summary,
            warnings,
        ))
    }

    pub(super) fn sample(&self, seed: u64, replicate: u64) -> Vec<f64> {
        let mut rng = stream(seed, NOISE, replicate);
        let z: Vec<f64> = (0..self.cells)
            .map(|_| symmetric_stable(self.alpha, &mut rng))
            .collect();
        self.kernel
            .chunks(self.cells)
            .map(|row| row.iter().zip(&z).map(|(k, z)| k * z).sum())
            .collect()
    }

    /// Discretized `Gamma^alpha` per point.
    pub(super) fn scale(&self) -> Vec<f64> {
        self.kernel
            .chunks(self.cells)
            .map(|row| 2.0 * row.iter().map(|k| k.abs().powf(self.alpha)).sum::<f64>())
            .collect()
    }
}
