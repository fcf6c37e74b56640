use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

fn moments(rows: &[Vec<f64>], d: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len();
    let mut mean = DVector::zeros(d);
    for r in rows {
        mean += DVector::from_column_slice(r);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        let c = DVector::from_column_slice(r) - &mean;
        cov += &c * c.transpose();
    }
    cov /= (n.max(2) - 1) as f64;
    (mean, cov)
}

/// Symmetric square root through the eigendecomposition.
/// Negative eigenvalues are rounding noise of a PSD matrix and clamp to 0.
fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr sqrt(A B) = tr sqrt(A^1/2 B A^1/2), and the latter is symmetric PSD
    let ra = sqrt_psd(a);
    let inner = &ra * b * &ra;
    let sym = (&inner + inner.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Frechet distance between Gaussian fits of two feature sets (rows are
/// samples). Covariances use the unbiased estimator.
pub fn fid(real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<f64> {
    let d = real.first().map(|r| r.len()).ok_or_else(|| Error::Shape("empty real feature set".into()))?;
    if fake.is_empty() {
        return Err(Error::Shape("empty generated feature set".into()));
    }
    if let Some(bad) = real.iter().chain(fake).find(|r| r.len() != d) {
        return Err(Error::Shape(format!("feature dimension {} differs from {d}", bad.len())));
    }
    let (mr, cr) = moments(real, d);
    let (mf, cf) = moments(fake, d);
    let mean_term = (&mr - &mf).norm_squared();
    let cross = trace_sqrt_product(&cr, &cf);
    Ok((mean_term + cr.trace() + cf.trace() - 2.0 * cross).max(0.0))
}
