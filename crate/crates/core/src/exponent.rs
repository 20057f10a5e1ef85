//! Real exponent matrices: matrix powers `c^E` and spectral decomposition.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Clustering radius for eigenvalue real parts.
pub const CLUSTER_TOL: f64 = 1e-8;
const INVARIANT_TOL: f64 = 1e-10;

/// A real `d x d` exponent whose eigenvalues all have positive real part,
/// together with its real spectral decomposition.
#[derive(Debug, Clone)]
pub struct Exponent {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<Complex<f64>>,
    real_spectrum: Vec<f64>,
    multiplicities: Vec<usize>,
    projectors: Vec<DMatrix<f64>>,
    trace: f64,
}

/// Serializable summary of an exponent.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentSummary {
    pub matrix: Vec<Vec<f64>>,
    pub real_spectrum: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub trace: f64,
}

impl Exponent {
    /// Validates `matrix` and computes its spectral split.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (d, c) = matrix.shape();
        if d == 0 || d != c {
            return Err(Error::Invalid(format!("exponent must be square, got {d}x{c}")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("exponent has non-finite entries".into()));
        }
        let mut eigenvalues: Vec<Complex<f64>> = if d == 1 {
            vec![Complex::new(matrix[(0, 0)], 0.0)]
        } else {
            matrix.clone().complex_eigenvalues().iter().copied().collect()
        };
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if let Some(bad) = eigenvalues.iter().find(|z| z.re <= 0.0) {
            return Err(Error::NonPositiveSpectrum { re: bad.re, im: bad.im });
        }

        let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
        for z in &eigenvalues {
            match clusters.last_mut() {
                Some(cl) if (z.re - cl[0].re).abs() < CLUSTER_TOL => cl.push(*z),
                _ => clusters.push(vec![*z]),
            }
        }

        let mut bases = Vec::with_capacity(clusters.len());
        for cl in &clusters {
            bases.push(generalized_eigenspace(&matrix, cl)?);
        }
        let basis = DMatrix::from_columns(
            &bases
                .iter()
                .flat_map(|b| b.column_iter().map(|c| c.into_owned()))
                .collect::<Vec<_>>(),
        );
        let inv = basis.clone().try_inverse().ok_or_else(|| {
            Error::Numerical("generalized eigenspaces are not complementary".into())
        })?;
        let cond = basis.norm() * inv.norm();
        let mut projectors = Vec::with_capacity(clusters.len());
        let mut offset = 0;
        for b in &bases {
            let k = b.ncols();
            let p = b * inv.rows(offset, k);
            projectors.push(p);
            offset += k;
        }

        let real_spectrum: Vec<f64> = clusters
            .iter()
            .map(|cl| cl.iter().map(|z| z.re).sum::<f64>() / cl.len() as f64)
            .collect();
        let multiplicities: Vec<usize> = clusters.iter().map(|cl| cl.len()).collect();
        let trace = matrix.trace();

        let out = Self {
            matrix,
            eigenvalues,
            real_spectrum,
            multiplicities,
            projectors,
            trace,
        };
        out.check_invariants(cond)?;
        Ok(out)
    }

    /// Builds an exponent from row-major entries.
    pub fn from_rows(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::Invalid(format!(
                "expected {} entries for a {d}x{d} exponent, got {}",
                d * d,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    /// `a I` in dimension `d`.
    pub fn scalar(d: usize, a: f64) -> Result<Self> {
        Self::new(DMatrix::identity(d, d) * a)
    }

    /// Diagonal exponent.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    fn check_invariants(&self, cond: f64) -> Result<()> {
        let d = self.dim();
        let scale = INVARIANT_TOL * cond.max(1.0) * (1.0 + self.matrix.norm());
        let sum: DMatrix<f64> = self.projectors.iter().sum();
        let id = DMatrix::identity(d, d);
        let mut worst = (&sum - &id).amax();
        for (i, p) in self.projectors.iter().enumerate() {
            worst = worst.max((p * p - p).amax());
            worst = worst.max((&self.matrix * p - p * &self.matrix).amax());
            for q in self.projectors.iter().skip(i + 1) {
                worst = worst.max((p * q).amax());
            }
        }
        if worst > scale {
            return Err(Error::Numerical(format!(
                "spectral projectors violate their identities by {worst:e}"
            )));
        }
        let weighted: f64 = self
            .real_spectrum
            .iter()
            .zip(&self.multiplicities)
            .map(|(a, &n)| a * n as f64)
            .sum();
        if (weighted - self.trace).abs() > 1e-8 * (1.0 + self.trace.abs()) {
            return Err(Error::Numerical(format!(
                "trace {} disagrees with spectral sum {weighted}",
                self.trace
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[Complex<f64>] {
        &self.eigenvalues
    }

    /// Distinct real parts `a_1 < ... < a_p`.
    pub fn real_spectrum(&self) -> &[f64] {
        &self.real_spectrum
    }

    /// Dimensions of the generalized eigenspaces.
    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Projectors onto the generalized eigenspaces, in increasing order of real part.
    pub fn projectors(&self) -> &[DMatrix<f64>] {
        &self.projectors
    }

    /// `q = trace(E)`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Smallest real part `a_1`.
    pub fn a_min(&self) -> f64 {
        self.real_spectrum[0]
    }

    /// Largest real part `a_p`.
    pub fn a_max(&self) -> f64 {
        *self.real_spectrum.last().expect("non-empty spectrum")
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            eigenvalues: self.eigenvalues.clone(),
            real_spectrum: self.real_spectrum.clone(),
            multiplicities: self.multiplicities.clone(),
            projectors: self.projectors.iter().map(|p| p.transpose()).collect(),
            trace: self.trace,
        }
    }

    /// `k E` for `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("scale factor must be positive, got {k}")));
        }
        Ok(Self {
            matrix: &self.matrix * k,
            eigenvalues: self.eigenvalues.iter().map(|z| z * k).collect(),
            real_spectrum: self.real_spectrum.iter().map(|a| a * k).collect(),
            multiplicities: self.multiplicities.clone(),
            projectors: self.projectors.clone(),
            trace: self.trace * k,
        })
    }

    /// `c^E = exp(E ln c)`.
    pub fn power(&self, c: f64) -> Result<DMatrix<f64>> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("matrix power needs c > 0, got {c}")));
        }
        if c == 1.0 {
            return Ok(DMatrix::identity(self.dim(), self.dim()));
        }
        let m = expm(&(&self.matrix * c.ln()));
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range(format!("c^E overflows for c = {c}")));
        }
        Ok(m)
    }

    /// `exp(u E)` for real `u`, without range checks.
    pub fn flow(&self, u: f64) -> DMatrix<f64> {
        if u == 0.0 {
            return DMatrix::identity(self.dim(), self.dim());
        }
        expm(&(&self.matrix * u))
    }

    /// Index of the smallest spectral subspace sum `W_i = V_i + ... + V_p`
    /// containing `u`, i.e. the largest `i` with `P_i u != 0` (0-based).
    pub fn spectral_index(&self, u: &DVector<f64>) -> Option<usize> {
        let n = u.norm();
        if n == 0.0 {
            return None;
        }
        self.projectors
            .iter()
            .rposition(|p| (p * u).norm() > 1e-8 * n)
    }

    pub fn summary(&self) -> ExponentSummary {
        ExponentSummary {
            matrix: self
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            real_spectrum: self.real_spectrum.clone(),
            multiplicities: self.multiplicities.clone(),
            trace: self.trace,
        }
    }
}

/// Real basis of `ker prod (E - z)` over a cluster of eigenvalues.
fn generalized_eigenspace(e: &DMatrix<f64>, cluster: &[Complex<f64>]) -> Result<DMatrix<f64>> {
    let d = e.nrows();
    let k = cluster.len();
    if k == d {
        return Ok(DMatrix::identity(d, d));
    }
    let ec: DMatrix<Complex<f64>> = e.map(|v| Complex::new(v, 0.0));
    let id = DMatrix::<Complex<f64>>::identity(d, d);
    let scale = e.norm().max(1.0);
    let mut q = id.clone();
    for z in cluster {
        q = q * ((&ec - &id * *z) / Complex::new(scale, 0.0));
    }
    let qr: DMatrix<f64> = q.map(|z| z.re);
    let svd = qr.clone().svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let top = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let worst = svd.singular_values[order[k - 1]];
    if worst > 1e-6 * top.max(1.0) {
        return Err(Error::Numerical(format!(
            "generalized eigenspace of dimension {k} not resolved (residual {worst:e}); \
             eigenvalue clusters tighter than {CLUSTER_TOL:e} are unsupported"
        )));
    }
    let cols: Vec<DVector<f64>> = order[..k]
        .iter()
        .map(|&i| vt.row(i).transpose().into_owned())
        .collect();
    Ok(DMatrix::from_columns(&cols))
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

/// Matrix exponential by scaling and squaring with Pade approximants.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, a[(0, 0)].exp());
    }
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !norm1.is_finite() {
        return DMatrix::from_element(n, n, f64::NAN);
    }
    let id = DMatrix::<f64>::identity(n, n);
    for (m, coeffs) in [(0usize, &PADE3[..]), (1, &PADE5[..]), (2, &PADE7[..]), (3, &PADE9[..])] {
        if norm1 <= THETA[m] {
            return pade_low(a, coeffs, &id);
        }
    }
    let s = ((norm1 / THETA[4]).log2().ceil()).max(0.0) as i32;
    let a = a * 2f64.powi(-s);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let mut r = solve_pade(&u, &v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn pade_low(a: &DMatrix<f64>, b: &[f64], id: &DMatrix<f64>) -> DMatrix<f64> {
    let a2 = a * a;
    let mut pow = id.clone();
    let mut u = id * b[1];
    let mut v = id * b[0];
    let m = b.len() - 1;
    let mut k = 2;
    while k <= m {
        pow = &pow * &a2;
        v += &pow * b[k];
        if k + 1 <= m {
            u += &pow * b[k + 1];
        }
        k += 2;
    }
    let u = a * u;
    solve_pade(&u, &v)
}

fn solve_pade(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let p = v + u;
    let q = v - u;
    match q.lu().solve(&p) {
        Some(r) => r,
        None => DMatrix::from_element(u.nrows(), u.ncols(), f64::NAN),
    }
}
