//! Moving-average noise outside the lattice window: radial quadrature along
//! the sphere-measure rays beyond the window, evaluated on a Chebyshev
//! coarse grid and interpolated onto the lattice.

use nalgebra::{DMatrix, DVector};

use super::rng::{stream, FAR_NOISE};
use super::stable::symmetric_stable;
use super::FieldSpec;
use crate::error::{Error, Result};
use crate::polar::AnisoNorm;
use crate::quadrature::gauss_legendre;

/// Coarse interpolation nodes per axis.
const COARSE: usize = 25;
/// Sampled points per box edge when bounding the radial part of the window.
const EDGE_SAMPLES: usize = 256;

pub(super) struct FarField {
    alpha: f64,
    /// Coarse nodes per axis.
    coarse: Vec<usize>,
    /// Per axis: lattice-by-coarse interpolation matrix.
    interp: Vec<DMatrix<f64>>,
    /// Coarse-point by quadrature-node kernel, noise constants included.
    kernel: DMatrix<f64>,
    /// Lattice interpolation of the far-field scale.
    scale: Vec<f64>,
}

impl FarField {
    /// `lo`/`hi` bound the window covered by lattice noise; it must contain
    /// the origin and the grid.
    pub(super) fn new(
        spec: &FieldSpec,
        axes: &[Vec<f64>],
        lo: &[f64],
        hi: &[f64],
        angular: usize,
        r_max: Option<f64>,
    ) -> Result<Self> {
        let d = axes.len();
        let e = spec.exponent();
        let alpha = spec.alpha();
        let q = e.trace();
        let p = spec.hurst() - q / alpha;
        let phi = spec.function();
        let norm = AnisoNorm::new(e.clone());
        let center = DVector::from_iterator(d, (0..d).map(|k| 0.5 * (lo[k] + hi[k])));
        let inside = |y: &DVector<f64>| (0..d).all(|k| y[k] >= lo[k] && y[k] <= hi[k]);

        // Largest radial part over the window (attained on its boundary).
        let mut t_box: f64 = 0.0;
        for z in boundary_points(lo, hi) {
            t_box = t_box.max(norm.radius(&(z - &center))?);
        }
        let beta = phi.admissibility().beta;
        let r_max = r_max.unwrap_or(
            t_box * (16.0 / (alpha * (beta - spec.hurst()))).exp().min(1e12),
        );
        let u_top = r_max.ln();

        let measure = norm.sphere_measure(angular)?;
        let gl = gauss_legendre(4);
        let mut nodes: Vec<(DVector<f64>, f64)> = Vec::new();
        for n in &measure.nodes {
            let point = |u: f64| &center + e.flow(u) * &n.direction;
            // Last exit of the ray from the window.
            let mut u_out = (1.1 * t_box).ln();
            let mut u_in = u_out;
            let mut found = false;
            for _ in 0..4000 {
                u_in -= 0.05;
                if inside(&point(u_in)) {
                    found = true;
                    break;
                }
                u_out = u_in;
            }
            if !found {
                return Err(Error::Numerical("far-field ray never enters the window".into()));
            }
            for _ in 0..60 {
                let mid = 0.5 * (u_in + u_out);
                if inside(&point(mid)) {
                    u_in = mid;
                } else {
                    u_out = mid;
                }
            }
            let mut a = u_out;
            while a < u_top {
                let width = if a - u_out < 4.0 { 0.5 } else { 1.0 };
                let b = (a + width).min(u_top);
                for (u, w) in gl.mapped(a, b) {
                    let vol = n.weight * w * (q * u).exp();
                    nodes.push((point(u), vol));
                }
                a = b;
            }
        }

        let mut coarse_axes = Vec::with_capacity(d);
        let mut interp = Vec::with_capacity(d);
        for ax in axes {
            let (c, m) = chebyshev(ax);
            coarse_axes.push(c);
            interp.push(m);
        }
        let coarse: Vec<usize> = coarse_axes.iter().map(Vec::len).collect();
        let n_coarse: usize = coarse.iter().product();
        let zero = DVector::zeros(d);
        let mut reference = Vec::with_capacity(nodes.len());
        for (y, _) in &nodes {
            reference.push(phi.eval(&(&zero - y))?.powf(p));
        }
        let noise = 0.5f64.powf(1.0 / alpha);
        let mut kernel = DMatrix::zeros(n_coarse, nodes.len());
        let mut coarse_scale = DVector::zeros(n_coarse);
        for i in 0..n_coarse {
            let idx = unflatten(i, &coarse);
            let x = DVector::from_iterator(d, (0..d).map(|k| coarse_axes[k][idx[k]]));
            let mut s = 0.0;
            for (j, (y, vol)) in nodes.iter().enumerate() {
                let g = phi.eval(&(&x - y))?.powf(p) - reference[j];
                kernel[(i, j)] = g * noise * vol.powf(1.0 / alpha);
                s += g.abs().powf(alpha) * vol;
            }
            coarse_scale[i] = s;
        }
        let scale = apply(&interp, &coarse, coarse_scale.as_slice());
        Ok(Self {
            alpha,
            coarse,
            interp,
            kernel,
            scale,
        })
    }

    pub(super) fn nodes(&self) -> usize {
        self.kernel.ncols()
    }

    /// Far-field values on the lattice for one replicate.
    pub(super) fn sample(&self, seed: u64, replicate: u64) -> Vec<f64> {
        let mut rng = stream(seed, FAR_NOISE, replicate);
        let s = DVector::from_iterator(
            self.kernel.ncols(),
            (0..self.kernel.ncols()).map(|_| symmetric_stable(self.alpha, &mut rng)),
        );
        let coarse = &self.kernel * s;
        apply(&self.interp, &self.coarse, coarse.as_slice())
    }

    /// Far-field part of the discretized scale on the lattice.
    pub(super) fn scale(&self) -> &[f64] {
        &self.scale
    }
}

/// Points on the boundary of a box (d <= 2).
fn boundary_points(lo: &[f64], hi: &[f64]) -> Vec<DVector<f64>> {
    match lo.len() {
        1 => vec![DVector::from_element(1, lo[0]), DVector::from_element(1, hi[0])],
        _ => {
            let mut out = Vec::with_capacity(4 * EDGE_SAMPLES);
            for i in 0..EDGE_SAMPLES {
                let t = i as f64 / (EDGE_SAMPLES - 1) as f64;
                let x = lo[0] + t * (hi[0] - lo[0]);
                let y = lo[1] + t * (hi[1] - lo[1]);
                out.push(DVector::from_vec(vec![x, lo[1]]));
                out.push(DVector::from_vec(vec![x, hi[1]]));
                out.push(DVector::from_vec(vec![lo[0], y]));
                out.push(DVector::from_vec(vec![hi[0], y]));
            }
            out
        }
    }
}

/// Chebyshev nodes spanning `axis` and the barycentric interpolation matrix
/// from them to the axis points. Short axes interpolate exactly.
fn chebyshev(axis: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = axis.len();
    if n <= COARSE {
        return (axis.to_vec(), DMatrix::identity(n, n));
    }
    let (a, b) = (axis[0], axis[n - 1]);
    let m = COARSE;
    let nodes: Vec<f64> = (0..m)
        .map(|j| 0.5 * (a + b) - 0.5 * (b - a) * (std::f64::consts::PI * j as f64 / (m - 1) as f64).cos())
        .collect();
    let w: Vec<f64> = (0..m)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut mat = DMatrix::zeros(n, m);
    for (i, &x) in axis.iter().enumerate() {
        if let Some(j) = nodes.iter().position(|&c| c == x) {
            mat[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..m).map(|j| w[j] / (x - nodes[j])).collect();
        let total: f64 = terms.iter().sum();
        for j in 0..m {
            mat[(i, j)] = terms[j] / total;
        }
    }
    (nodes, mat)
}

/// Tensor-product interpolation of row-major coarse values onto the lattice.
fn apply(interp: &[DMatrix<f64>], coarse: &[usize], values: &[f64]) -> Vec<f64> {
    match interp.len() {
        1 => (&interp[0] * DVector::from_column_slice(values)).as_slice().to_vec(),
        _ => {
            // Row-major (c0 x c1) values.
            let v = DMatrix::from_row_slice(coarse[0], coarse[1], values);
            let full = &interp[0] * v * interp[1].transpose();
            let (n0, n1) = full.shape();
            let mut out = Vec::with_capacity(n0 * n1);
            for i in 0..n0 {
                for j in 0..n1 {
                    out.push(full[(i, j)]);
                }
            }
            out
        }
    }
}

fn unflatten(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}
