//! Dense linear algebra on small matrices (row-major `Vec<f64>` at the API edge).

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Largest generator size accepted by the spectral routines.
pub const MAX_SPECTRAL_DIM: usize = 64;

pub fn to_dmatrix(n: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, row_major)
}

/// `max Re λ` over the spectrum of a real square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return Err(Error::invalid("matrix", "must be square and nonempty"));
    }
    if n > MAX_SPECTRAL_DIM {
        return Err(Error::Unsupported(format!(
            "spectral bound for N = {n} > {MAX_SPECTRAL_DIM}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix", "entries must be finite"));
    }
    if n == 1 {
        return Ok(m[(0, 0)]);
    }
    let eig = m.clone().complex_eigenvalues();
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Closed-form `max Re λ` of a 2×2 matrix from its trace and determinant.
pub fn spectral_abscissa_2x2(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        tr / 2.0 + disc.sqrt()
    } else {
        tr / 2.0
    }
}

/// `exp(t·A)·1`, the Feynman–Kac vector of a generator with potential folded into `A`.
pub fn expm_times_ones(a: &DMatrix<f64>, t: f64) -> DVector<f64> {
    let e = (a * t).exp();
    let ones = DVector::from_element(a.ncols(), 1.0);
    e * ones
}

/// Largest eigenvalue of the symmetric part `(A + Aᵀ)/2`.
pub fn max_sym_eigenvalue(n: usize, a: &[f64]) -> f64 {
    sym_part(n, a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of the symmetric part `(A + Aᵀ)/2`.
pub fn min_sym_eigenvalue(n: usize, a: &[f64]) -> f64 {
    sym_part(n, a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Extreme eigenpair of the symmetric part: the largest if `largest`, else the smallest.
pub fn sym_eigenpair(n: usize, a: &[f64], largest: bool) -> (f64, Vec<f64>) {
    let eig = sym_part(n, a).symmetric_eigen();
    let mut best = 0;
    for k in 1..n {
        let better = if largest {
            eig.eigenvalues[k] > eig.eigenvalues[best]
        } else {
            eig.eigenvalues[k] < eig.eigenvalues[best]
        };
        if better {
            best = k;
        }
    }
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).iter().cloned().collect(),
    )
}

/// Operator 2-norm.
pub fn spectral_norm(n: usize, a: &[f64]) -> f64 {
    let m = to_dmatrix(n, a);
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn frobenius_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sym_part(n: usize, a: &[f64]) -> DMatrix<f64> {
    let m = to_dmatrix(n, a);
    (&m + m.transpose()) * 0.5
}

/// `out = M·v` for a row-major `n×n` matrix.
#[inline]
pub fn matvec(n: usize, m: &[f64], v: &[f64], out: &mut [f64]) {
    for r in 0..n {
        let row = &m[r * n..(r + 1) * n];
        out[r] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
