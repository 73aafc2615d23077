//! Dense exact spectral machinery at desk scale: symmetric
//! eigendecomposition, graph Fourier transform, and an ideal low-pass
//! reference filter.
//!
//! The eigensolver is a cyclic Jacobi implemented in-repo so test baselines
//! do not depend on an external linear-algebra backend. It is meant for
//! validation, not production filtering; order is capped at [`DENSE_CAP`].

use crate::error::{Error, Result};
use crate::graph::LaplacianOperator;
use crate::signal::Signal;

/// Hard cap on dense decompositions (the solver is O(n^3)).
pub const DENSE_CAP: usize = 4096;

const JACOBI_MAX_SWEEPS: usize = 60;

/// Square dense matrix, row-major.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries cannot fill an {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn from_operator(op: &LaplacianOperator) -> Self {
        DenseMatrix {
            n: op.dim(),
            data: op.to_dense(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Full eigendecomposition of a symmetric matrix: eigenvalues ascending,
/// eigenvectors as the columns of an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DenseMatrix,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `i` of U.
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|r| self.eigenvectors.get(r, i)).collect()
    }

    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.eigenvectors
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.n;
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let v = a.data[i * n + j];
            sum += v * v;
        }
    }
    (2.0 * sum).sqrt()
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// The input must be symmetric within 1e-12 (relative to its largest
/// entry); it is symmetrized by averaging before the sweeps. Rotations run
/// until the off-diagonal Frobenius norm drops below 1e-12 of the matrix
/// norm. Eigenvalues are returned ascending; each eigenvector's first
/// nonzero component is made positive so decompositions are reproducible.
pub fn eig_sym(a: &DenseMatrix) -> Result<SpectralDecomposition> {
    let n = a.n;
    if n > DENSE_CAP {
        return Err(Error::CapacityExceeded { n, cap: DENSE_CAP });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }

    let max_abs = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in i + 1..n {
            let delta = (a.data[i * n + j] - a.data[j * n + i]).abs();
            if delta > 1e-12 * max_abs.max(1.0) {
                return Err(Error::NotSymmetric { i, j, delta });
            }
        }
    }

    let mut m = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
            m.data[i * n + j] = avg;
            m.data[j * n + i] = avg;
        }
    }

    let mut u = DenseMatrix::identity(n);
    let fro: f64 = m.data.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-12 * fro.max(1.0);

    let mut converged = n == 1 || off_diagonal_norm(&m) <= tol;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.data[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m.data[p * n + p];
                let aqq = m.data[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m.data[p * n + p] = app - t * apq;
                m.data[q * n + q] = aqq + t * apq;
                m.data[p * n + q] = 0.0;
                m.data[q * n + p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m.data[i * n + p];
                    let aiq = m.data[i * n + q];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    m.data[i * n + p] = new_ip;
                    m.data[p * n + i] = new_ip;
                    m.data[i * n + q] = new_iq;
                    m.data[q * n + i] = new_iq;
                }
                for r in 0..n {
                    let vrp = u.data[r * n + p];
                    let vrq = u.data[r * n + q];
                    u.data[r * n + p] = vrp - s * (vrq + tau * vrp);
                    u.data[r * n + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        converged = off_diagonal_norm(&m) <= tol;
    }
    if !converged {
        return Err(Error::InvalidArgument(format!(
            "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.data[i * n + i].total_cmp(&m.data[j * n + j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.data[i * n + i]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let max_component = (0..n).fold(0.0_f64, |mx, r| mx.max(u.data[r * n + src].abs()));
        let threshold = 1e-12 * max_component;
        let mut sign = 1.0;
        for r in 0..n {
            let v = u.data[r * n + src];
            if v.abs() > threshold {
                sign = if v >= 0.0 { 1.0 } else { -1.0 };
                break;
            }
        }
        for r in 0..n {
            eigenvectors.data[r * n + col] = sign * u.data[r * n + src];
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Forward graph Fourier transform: coefficients `U^T x`.
pub fn gft(decomp: &SpectralDecomposition, x: &[f64]) -> Result<Vec<f64>> {
    let n = decomp.n();
    if x.len() != n {
        return Err(Error::InvalidArgument(format!(
            "signal length {} does not match decomposition order {n}",
            x.len()
        )));
    }
    let u = &decomp.eigenvectors;
    let mut coeffs = vec![0.0; n];
    for (i, coeff) in coeffs.iter_mut().enumerate() {
        let mut s = 0.0;
        for r in 0..n {
            s += u.get(r, i) * x[r];
        }
        *coeff = s;
    }
    Ok(coeffs)
}

/// Inverse graph Fourier transform: `U x_hat`.
pub fn igft(decomp: &SpectralDecomposition, coefficients: &[f64]) -> Result<Vec<f64>> {
    let n = decomp.n();
    if coefficients.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients do not match decomposition order {n}",
            coefficients.len()
        )));
    }
    let u = &decomp.eigenvectors;
    let mut x = vec![0.0; n];
    for (r, xr) in x.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..n {
            s += u.get(r, i) * coefficients[i];
        }
        *xr = s;
    }
    Ok(x)
}

/// Hard spectral truncation: reconstructs `x` from the GFT coefficients
/// whose eigenvalue is at most `cutoff`.
pub fn ideal_lowpass(decomp: &SpectralDecomposition, x: &Signal, cutoff: f64) -> Result<Signal> {
    let mut coeffs = gft(decomp, x.values())?;
    for (c, lambda) in coeffs.iter_mut().zip(decomp.eigenvalues()) {
        if *lambda > cutoff {
            *c = 0.0;
        }
    }
    let y = igft(decomp, &coeffs)?;
    x.with_values(y)
}
