//! Two-component PCA via power iteration with deflation, used to emit
//! plot-ready projections of processed datasets.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::Dataset;

const MAX_ITERATIONS: usize = 1000;
const CONVERGENCE_TOL: f64 = 1e-10;

/// Projection onto the leading principal components of the z-scored features.
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Per-row coordinates, `n_rows x n_components`, row-major.
    pub coords: Vec<f64>,
    pub n_components: usize,
    /// Unit-norm component vectors, one per component.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalue per component.
    pub eigenvalues: Vec<f64>,
    /// Trace of the standardized covariance matrix.
    pub total_variance: f64,
}

impl PcaResult {
    pub fn explained_fraction(&self, component: usize) -> f64 {
        self.eigenvalues[component] / self.total_variance
    }
}

/// Project onto the top `n_components` in {1, 2} principal components.
///
/// Features are z-scored first (constant columns map to zero), the
/// covariance is eigen-solved by power iteration with deflation, and each
/// component's sign is fixed by making its largest-magnitude loading
/// positive.
pub fn pca_project(dataset: &Dataset, n_components: usize) -> Result<PcaResult, PcaError> {
    if !(1..=2).contains(&n_components) {
        return Err(PcaError::BadComponentCount { n_components });
    }
    let n = dataset.n_rows();
    let d = dataset.features().n_cols();
    if n < 2 {
        return Err(PcaError::TooFewSamples { n });
    }

    // Z-score each column with population moments.
    let mut mean = vec![0.0f64; d];
    for r in 0..n {
        let row = dataset.features().row(r);
        for c in 0..d {
            mean[c] += row[c];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0f64; d];
    for r in 0..n {
        let row = dataset.features().row(r);
        for c in 0..d {
            let dv = row[c] - mean[c];
            var[c] += dv * dv;
        }
    }
    for v in &mut var {
        *v /= n as f64;
    }
    let std: Vec<f64> = var.iter().map(|&v| libm::sqrt(v)).collect();
    if std.iter().all(|&s| s < 1e-15) {
        return Err(PcaError::ZeroVariance);
    }

    let mut x = vec![0.0f64; n * d];
    for r in 0..n {
        let row = dataset.features().row(r);
        for c in 0..d {
            x[r * d + c] = if std[c] < 1e-15 {
                0.0
            } else {
                (row[c] - mean[c]) / std[c]
            };
        }
    }

    // Covariance of the standardized data (population convention).
    let mut cov = vec![0.0f64; d * d];
    for r in 0..n {
        let row = &x[r * d..(r + 1) * d];
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let total_variance: f64 = (0..d).map(|i| cov[i * d + i]).sum();

    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut eigenvalues: Vec<f64> = Vec::new();
    for _ in 0..n_components {
        let v = power_iterate(&cov, d, &components)?;
        let lambda = quadratic_form(&cov, &v, d);
        // Deflate so the next run converges to the following component.
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        components.push(v);
        eigenvalues.push(lambda);
    }

    let mut coords = vec![0.0f64; n * n_components];
    for r in 0..n {
        let row = &x[r * d..(r + 1) * d];
        for (k, comp) in components.iter().enumerate() {
            coords[r * n_components + k] = dot(row, comp);
        }
    }

    Ok(PcaResult {
        coords,
        n_components,
        components,
        eigenvalues,
        total_variance,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quadratic_form(cov: &[f64], v: &[f64], d: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..d {
        acc += v[i] * dot(&cov[i * d..(i + 1) * d], v);
    }
    acc
}

fn power_iterate(cov: &[f64], d: usize, previous: &[Vec<f64>]) -> Result<Vec<f64>, PcaError> {
    // Deterministic start vector; the index ramp avoids starting exactly
    // orthogonal to the leading eigenvector of symmetric test data.
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 1e-4 * i as f64).collect();
    orthogonalize(&mut v, previous);
    if !normalize(&mut v) {
        return Err(PcaError::ConvergenceFailure);
    }
    for _ in 0..MAX_ITERATIONS {
        let mut w = vec![0.0f64; d];
        for i in 0..d {
            w[i] = dot(&cov[i * d..(i + 1) * d], &v);
        }
        orthogonalize(&mut w, previous);
        if !normalize(&mut w) {
            return Err(PcaError::ConvergenceFailure);
        }
        if dot(&w, &v) < 0.0 {
            for x in &mut w {
                *x = -*x;
            }
        }
        let delta: f64 = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        v = w;
        if libm::sqrt(delta) < CONVERGENCE_TOL {
            fix_sign(&mut v);
            return Ok(v);
        }
    }
    Err(PcaError::ConvergenceFailure)
}

fn orthogonalize(v: &mut [f64], previous: &[Vec<f64>]) {
    for p in previous {
        let proj = dot(v, p);
        for (x, &pi) in v.iter_mut().zip(p) {
            *x -= proj * pi;
        }
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm < 1e-300 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

/// Largest-magnitude loading made positive (first such index on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcaError {
    BadComponentCount { n_components: usize },
    TooFewSamples { n: usize },
    ZeroVariance,
    ConvergenceFailure,
}

impl fmt::Display for PcaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcaError::BadComponentCount { n_components } => {
                write!(f, "component count must be 1 or 2, got {n_components}")
            }
            PcaError::TooFewSamples { n } => write!(f, "need at least 2 samples, got {n}"),
            PcaError::ZeroVariance => write!(f, "every feature is constant"),
            PcaError::ConvergenceFailure => {
                write!(f, "power iteration failed to converge in {MAX_ITERATIONS} iterations")
            }
        }
    }
}

impl core::error::Error for PcaError {}
