//! One-dimensional quadrature rules used throughout the crate.

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights of an interpolatory rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Maps a rule on `[-1, 1]` to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (m + h * x, h * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre rule with `n` nodes on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
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

/// Gauss-Laguerre rule for the weight `e^{-x}` on `[0, inf)` (Golub-Welsch).
pub fn gauss_laguerre(n: usize) -> Rule {
    assert!(n > 0, "rule needs at least one node");
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        j[(k, k)] = 2.0 * k as f64 + 1.0;
        if k + 1 < n {
            let b = (k + 1) as f64;
            j[(k, k + 1)] = b;
            j[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss-Kronrod 7/15 estimate on `[a, b]`: (integral, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    ((kron * h), ((kron - gauss) * h).abs())
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss-Kronrod integration over consecutive breakpoints.
///
/// On failure the error carries the partial estimate.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    if breaks.len() < 2 {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= tol.max_intervals {
            if !(total.is_finite() && err.is_finite()) {
                return Err(Error::Numerical("non-finite integrand".into()));
            }
            return Err(Error::Quadrature {
                estimate: total,
                error: err,
            });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval cannot be split further in floating point.
            heap.push(Piece { error: 0.0, ..p });
            err = heap.iter().map(|q| q.error).sum();
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Piece {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
        if heap.len() % 64 == 0 {
            // Refresh running sums against drift.
            total = heap.iter().map(|q| q.value).sum();
            err = heap.iter().map(|q| q.error).sum();
        }
    }
    if !total.is_finite() {
        return Err(Error::Numerical("non-finite integrand".into()));
    }
    Ok(heap.iter().map(|q| q.value).sum())
}

/// Integral of `f` over `[a, b]` to the default tolerance.
pub fn integrate_interval<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate(f, &[a, b], Tolerance::default())
}

/// Integral over a half-line `[a, inf)` of a function decaying at least
/// geometrically, by unit-width panels with geometric tail extrapolation.
///
/// `width` is the panel width; integration stops once a panel contributes
/// less than `rel` of the running total and the decay ratio is below one.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    start: f64,
    direction: f64,
    width: f64,
    rel: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let tol = Tolerance {
        abs: 1e-300,
        rel: rel.max(1e-13),
        max_intervals: 200,
    };
    let mut a = start;
    for _ in 0..max_panels {
        let b = a + direction * width;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let v = match integrate(&mut f, &[lo, hi], tol) {
            Ok(v) => v,
            Err(Error::Quadrature { estimate, .. }) => estimate,
            Err(e) => return Err(e),
        };
        total += v;
        if let Some(p) = prev {
            let small = v.abs() <= rel * total.abs();
            if p != 0.0 && small {
                let ratio = (v / p).abs();
                if ratio < 0.95 {
                    return Ok(total + v * ratio / (1.0 - ratio));
                }
            }
            if v == 0.0 && p == 0.0 {
                return Ok(total);
            }
        }
        prev = Some(v);
        a = b;
    }
    Err(Error::Quadrature {
        estimate: total,
        error: prev.unwrap_or(0.0).abs(),
    })
}

/// Limit of a sequence of partial sums by Wynn's epsilon algorithm.
///
/// Exact for sums of a few geometric sequences; the highest even column of
/// the table built from `sums` is returned.
pub fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    if n < 3 {
        return sums.last().copied().unwrap_or(0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = cur[cur.len() - 1];
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let d = cur[j + 1] - cur[j];
            if !d.is_finite() {
                return best;
            }
            if d.abs() <= 8.0 * f64::EPSILON * cur[j].abs().max(cur[j + 1].abs()) {
                // Converged estimates; in odd columns the entries are not estimates.
                return if k % 2 == 0 { cur[j + 1] } else { best };
            }
            next.push(prev[j + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            best = cur[cur.len() - 1];
        }
    }
    best
}
