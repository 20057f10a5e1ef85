//! Deterministic scale functional `Gamma^alpha(x) = ||f_x||_alpha^alpha` by
//! polar quadrature, and the Gaussian variance and covariance it implies.

use nalgebra::DVector;

use super::{FieldSpec, Representation};
use crate::error::{Error, Result};
use crate::polar::{AnisoNorm, SphereMeasure};
use crate::quadrature::{gauss_legendre, gk15, integrate_interval, wynn_epsilon, Rule};

/// Phase speed beyond which the oscillation is replaced by its mean.
const FAST_PHASE: f64 = 2000.0;
const PANEL_REL: f64 = 1e-13;
const MAX_PANELS: usize = 20000;
/// Moving-average tail: log-radius distance from the point beyond which
/// partial sums are extrapolated, and the distance at which marching stops.
const MIN_DEPTH: f64 = 4.0;
const MAX_DEPTH: f64 = 14.0;
const TAIL_REL: f64 = 1e-11;
const WYNN_TERMS: usize = 9;
/// Panel tolerance under kinks: on the line they are isolated and resolved
/// tightly; in higher dimension the angular sum smooths them and the
/// sphere resolution bounds the accuracy anyway.
const KINK_REL_LINE: f64 = 1e-10;
const KINK_REL: f64 = 1e-6;
const KINK_DEPTH: u32 = 24;

/// Panel integral: Gauss-Legendre for smooth integrands, adaptive
/// Gauss-Kronrod when `|.|^alpha` has kinks (`alpha < 2`).
fn panel<F: FnMut(f64) -> f64>(f: &mut F, rule: &Rule, a: f64, b: f64, kink: Option<f64>, scale: f64) -> f64 {
    let Some(rel) = kink else {
        return rule.mapped(a, b).map(|(u, w)| w * f(u)).sum();
    };
    let (v, err) = gk15(f, a, b);
    let tol = rel * scale.max(v.abs());
    if err <= tol {
        return v;
    }
    bisect(f, a, b, tol, KINK_DEPTH)
}

fn bisect<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (l, el) = gk15(f, a, m);
    let (r, er) = gk15(f, m, b);
    if depth == 0 || el + er <= tol {
        return l + r;
    }
    let half = 0.5 * tol;
    let l = if el <= half { l } else { bisect(f, a, m, half, depth - 1) };
    let r = if er <= half { r } else { bisect(f, m, b, half, depth - 1) };
    l + r
}

/// Precomputed polar quadrature for one field.
pub struct Oracle {
    spec: FieldSpec,
    /// Polar coordinates of `E`.
    norm_e: AnisoNorm,
    /// Polar coordinates used for the integral (`E` or `E^t`).
    measure: SphereMeasure,
    /// Per-node weights including the homogeneous-function factor.
    weights: Vec<f64>,
    rule: Rule,
    oscillation_mean: f64,
}

impl Oracle {
    pub fn new(spec: &FieldSpec) -> Result<Self> {
        let res = match (spec.dim(), spec.representation()) {
            (2, Representation::Harmonizable) => 512,
            (2, Representation::MovingAverage) => 256,
            _ => 48,
        };
        Self::with_resolution(spec, res)
    }

    /// `angular` is the sphere resolution (cells per `2 pi`).
    pub fn with_resolution(spec: &FieldSpec, angular: usize) -> Result<Self> {
        if spec.dim() > 3 {
            return Err(Error::Unsupported("oracle is implemented for d <= 3".into()));
        }
        let norm_e = AnisoNorm::new(spec.exponent().clone());
        let (measure, weights) = match spec.representation() {
            Representation::MovingAverage => {
                let m = norm_e.sphere_measure(angular)?;
                let w = m.nodes.iter().map(|n| n.weight).collect();
                (m, w)
            }
            Representation::Harmonizable => {
                let norm_t = AnisoNorm::new(spec.exponent().transpose());
                let m = norm_t.sphere_measure(angular)?;
                let pw = -spec.alpha() * spec.hurst() - spec.exponent().trace();
                let mut w = Vec::with_capacity(m.nodes.len());
                for n in &m.nodes {
                    w.push(n.weight * spec.function().eval(&n.direction)?.powf(pw));
                }
                (m, w)
            }
        };
        let alpha = spec.alpha();
        // Mean of |e^{i w} - 1|^alpha over a period.
        let oscillation_mean =
            integrate_interval(|t| (2.0 * t.sin()).powf(alpha), 0.0, std::f64::consts::PI)?
                / std::f64::consts::PI;
        Ok(Self {
            spec: spec.clone(),
            norm_e,
            measure,
            weights,
            rule: gauss_legendre(8),
            oscillation_mean,
        })
    }

    fn kink_tolerance(&self) -> Option<f64> {
        match (self.spec.alpha() == 2.0, self.spec.dim()) {
            (true, _) => None,
            (false, 1) => Some(KINK_REL_LINE),
            (false, _) => Some(KINK_REL),
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// `Gamma^alpha(x)`.
    pub fn gamma_alpha(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        if x.norm() == 0.0 {
            return Ok(0.0);
        }
        match self.spec.representation() {
            Representation::Harmonizable => Ok(self.harmonizable_window(x, None)?.0),
            Representation::MovingAverage => self.moving_average(x),
        }
    }

    /// Gaussian variance `E X(x)^2` (requires `alpha = 2`).
    pub fn variance(&self, x: &DVector<f64>) -> Result<f64> {
        self.require_gaussian()?;
        Ok(2.0 * self.spec.cf_constant() * self.gamma_alpha(x)?)
    }

    /// Gaussian covariance from the polar form of the variance.
    pub fn covariance(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.require_gaussian()?;
        let v = |z: &DVector<f64>| -> Result<f64> {
            let p = self.norm_e.polar(z)?;
            match p.direction {
                None => Ok(0.0),
                Some(l) => Ok(p.radius.powf(2.0 * self.spec.hurst()) * self.variance(&l)?),
            }
        };
        Ok(0.5 * (v(x)? + v(y)? - v(&(x - y))?))
    }

    fn require_gaussian(&self) -> Result<()> {
        if self.spec.alpha() != 2.0 {
            return Err(Error::Domain(format!(
                "variance needs alpha = 2, got {}",
                self.spec.alpha()
            )));
        }
        Ok(())
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.spec.dim() {
            return Err(Error::Invalid("point dimension mismatch".into()));
        }
        Ok(())
    }

    /// Harmonizable `Gamma^alpha(x)` in full and restricted to the radial
    /// window `ln r in [lo, hi]`.
    pub(crate) fn harmonizable_window(&self, x: &DVector<f64>, window: Option<(f64, f64)>) -> Result<(f64, f64)> {
        let e = self.spec.exponent();
        let em = e.matrix();
        let ah = self.spec.alpha() * self.spec.hurst();
        let alpha = self.spec.alpha();
        let big = self.measure.nodes.iter().map(|n| n.direction.norm()).fold(0.0, f64::max);
        let kink = self.kink_tolerance();
        // Fraction of a panel inside the window.
        let overlap = |a: f64, b: f64| match window {
            None => 1.0,
            Some((lo, hi)) => ((b.min(hi) - a.max(lo)) / (b - a)).clamp(0.0, 1.0),
        };
        let node = |u: f64| -> (f64, f64) {
            let v = e.flow(u) * x;
            let s: f64 = self
                .measure
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(n, w)| {
                    let g = v.dot(&n.direction);
                    w * (2.0 * (0.5 * g).sin().abs()).powf(alpha)
                })
                .sum();
            (s * (-ah * u).exp(), (em * &v).norm() * big)
        };
        let mean = e.trace() / e.dim() as f64;
        let start = -(x.norm() * big).ln() / mean;
        let (mut full, mut win) = (0.0, 0.0);

        // Upward: panels narrow with the phase speed until it is fast.
        let mut a = start;
        let mut n = 0;
        loop {
            let speed = node(a).1;
            if speed >= FAST_PHASE {
                break;
            }
            n += 1;
            if n > MAX_PANELS {
                return Err(Error::Quadrature {
                    estimate: full,
                    error: f64::NAN,
                });
            }
            let b = a + (std::f64::consts::PI / speed.max(1e-300)).min(0.5);
            let v = panel(&mut |u| node(u).0, &self.rule, a, b, kink, full);
            full += v;
            win += v * overlap(a, b);
            a = b;
        }
        let total_w: f64 = self.weights.iter().sum();
        let tail = |lo: f64, hi: f64| -> f64 {
            if hi <= lo {
                0.0
            } else {
                total_w * self.oscillation_mean * ((-ah * lo).exp() - (-ah * hi).exp()) / ah
            }
        };
        full += tail(a, f64::INFINITY);
        win += match window {
            None => tail(a, f64::INFINITY),
            Some((lo, hi)) => tail(a.max(lo), hi),
        };

        // Downward: geometric decay at rate alpha (a_1 - H).
        let mut b = start;
        let mut prev = f64::NAN;
        for _ in 0..MAX_PANELS {
            let a = b - 0.5;
            let p = panel(&mut |u| node(u).0, &self.rule, a, b, kink, full);
            win += p * overlap(a, b);
            full += p;
            b = a;
            if p <= PANEL_REL * full {
                let r = p / prev;
                if r.is_finite() && r < 0.95 {
                    full += p * r / (1.0 - r);
                    return Ok((full, win));
                }
                if p == 0.0 {
                    return Ok((full, win));
                }
            }
            prev = p;
        }
        Err(Error::Quadrature {
            estimate: full,
            error: f64::NAN,
        })
    }

    /// Moving-average `Gamma^alpha(x)` by a two-center partition of unity.
    fn moving_average(&self, x: &DVector<f64>) -> Result<f64> {
        let e = self.spec.exponent();
        let phi = self.spec.function();
        let alpha = self.spec.alpha();
        let q = e.trace();
        let p = self.spec.hurst() - q / alpha;
        let m = q + 1.0;
        let ustar = self.norm_e.radius(x)?.ln();
        let kink = self.kink_tolerance();
        let mut total = 0.0;
        for center in [false, true] {
            let node = |u: f64| -> Result<f64> {
                let fl = e.flow(u);
                let jac = (q * u).exp();
                let mut s = 0.0;
                for (n, w) in self.measure.nodes.iter().zip(&self.weights) {
                    let z = &fl * &n.direction;
                    let y = if center { x - &z } else { z };
                    let a = phi.eval(&(x - &y))?;
                    let b = phi.eval(&(-&y))?;
                    if a == 0.0 || b == 0.0 {
                        continue;
                    }
                    let f = a.powf(p) - b.powf(p);
                    let am = a.powf(m);
                    let bm = b.powf(m);
                    let chi = if center { bm / (am + bm) } else { am / (am + bm) };
                    s += w * f.abs().powf(alpha) * chi;
                }
                Ok(s * jac)
            };
            for dir in [1.0, -1.0] {
                let base = total;
                let mut a = ustar;
                let mut sums: Vec<f64> = Vec::new();
                let mut last_est = f64::NAN;
                let mut done = false;
                for _ in 0..MAX_PANELS {
                    let b = a + 0.25 * dir;
                    let (lo, hi) = if dir > 0.0 { (a, b) } else { (b, a) };
                    let mut failed = None;
                    let pv = panel(
                        &mut |u| {
                            node(u).unwrap_or_else(|e| {
                                failed.get_or_insert(e);
                                0.0
                            })
                        },
                        &self.rule,
                        lo,
                        hi,
                        kink,
                        total,
                    );
                    if let Some(e) = failed {
                        return Err(e);
                    }
                    total += pv;
                    sums.push(total - base);
                    a = b;
                    if pv <= PANEL_REL * total {
                        done = true;
                        break;
                    }
                    // Far out the kernel difference cancels in floating point, so
                    // slowly decaying tails are extrapolated from the partial sums.
                    let depth = (a - ustar).abs();
                    if depth >= MIN_DEPTH && sums.len() >= WYNN_TERMS {
                        let est = wynn_epsilon(&sums[sums.len() - WYNN_TERMS..]);
                        if (est - last_est).abs() <= TAIL_REL * (base + est) || depth >= MAX_DEPTH {
                            total = base + est;
                            done = true;
                            break;
                        }
                        last_est = est;
                    }
                }
                if !done {
                    return Err(Error::Quadrature {
                        estimate: total,
                        error: f64::NAN,
                    });
                }
            }
        }
        Ok(total)
    }
}

/// `Gamma^alpha(x)`; for `alpha = 2` this is the squared scale.
pub fn variance_oracle(spec: &FieldSpec, x: &DVector<f64>) -> Result<f64> {
    Oracle::new(spec)?.gamma_alpha(x)
}

/// Gaussian variance `E X(x)^2 = 2 k Gamma^2(x)`, where `k` is the
/// characteristic-function constant of the representation.
pub fn field_variance(spec: &FieldSpec, x: &DVector<f64>) -> Result<f64> {
    Oracle::new(spec)?.variance(x)
}

/// Gaussian covariance `E X(x) X(y)`.
pub fn covariance_oracle(spec: &FieldSpec, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    Oracle::new(spec)?.covariance(x, y)
}
