//! Small dense helpers for correlation matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues down to this are treated as rounding noise and clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Checks symmetry, unit diagonal and entries in `[−1, 1]`.
pub fn validate_correlation(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Input(format!("`{name}` must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    for i in 0..n {
        if (m[(i, i)] - 1.0).abs() > 1e-10 {
            return Err(Error::Input(format!("`{name}` must have unit diagonal, entry ({i},{i}) is {}", m[(i, i)])));
        }
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(Error::Input(format!("`{name}` entry ({i},{j}) = {v} is not a correlation")));
            }
            if (v - m[(j, i)]).abs() > 1e-10 {
                return Err(Error::Input(format!("`{name}` is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Symmetric square root `V·diag(√λ)·Vᵀ`, clipping eigenvalues in
/// `[−PSD_TOLERANCE, 0)` to zero.
pub fn psd_sqrt(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd {
            matrix: name.to_string(),
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Nearest-correlation repair: clip negative eigenvalues, rebuild, and
/// rescale back to unit diagonal.
pub fn repair_correlation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let d = (rebuilt[(i, i)] * rebuilt[(j, j)]).sqrt();
            let c = if d > 0.0 { (rebuilt[(i, j)] / d).clamp(-1.0, 1.0) } else { 0.0 };
            out[(i, j)] = c;
            out[(j, i)] = c;
        }
    }
    out
}

/// Pearson correlation, `None` with fewer than two points or a constant input.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n < 2 || b.len() != n {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (v.len() as f64 - 1.0)).sqrt()
}
