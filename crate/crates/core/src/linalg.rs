//! Dense complex matrix kernel.
//!
//! Everything in scope is a small `2^k x 2^k` operator, so storage is a plain
//! row-major `Vec<Complex64>`. Matrices are immutable values once built; the
//! operations below all return fresh matrices.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on either side of a Kronecker product result.
pub const DEFAULT_MAX_DIM: usize = 1 << 12;

/// Unitarity tolerance for freshly constructed operators.
pub const FRESH_TOL: f64 = 1e-12;
/// Unitarity / equivalence tolerance for composed or conjugated operators.
pub const COMPOSED_TOL: f64 = 1e-9;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {op} of {lhs:?} and {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("result dimension {rows}x{cols} exceeds the configured maximum of {max} per side")]
    TooLarge {
        rows: usize,
        cols: usize,
        max: usize,
    },
    #[error("matrix data has length {len}, expected {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
}

/// Parameters of the universal single-qubit rotation `U3(theta, phi, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct U3Params {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl U3Params {
    pub const IDENTITY: U3Params = U3Params {
        theta: 0.0,
        phi: 0.0,
        lambda: 0.0,
    };

    pub fn new(theta: f64, phi: f64, lambda: f64) -> Self {
        Self { theta, phi, lambda }
    }

    /// Parameters of the adjoint rotation: `(-theta, -lambda, -phi)`.
    ///
    /// This is phase-exact: `u3_matrix(p.inverse()) == adjoint(u3_matrix(p))`
    /// entry by entry, not merely up to a global phase.
    pub fn inverse(&self) -> Self {
        Self {
            theta: -self.theta,
            phi: -self.lambda,
            lambda: -self.phi,
        }
    }

    /// True when the triple lies in the sampling ranges
    /// `theta in [0, pi]`, `phi, lambda in [0, 2pi)`.
    pub fn in_sampling_range(&self) -> bool {
        (0.0..=PI).contains(&self.theta)
            && (0.0..2.0 * PI).contains(&self.phi)
            && (0.0..2.0 * PI).contains(&self.lambda)
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite() && self.lambda.is_finite()
    }

    pub fn matrix(&self) -> DenseMatrix {
        u3_matrix(*self)
    }
}

/// `u3_inverse_params` as a free function, mirroring [`U3Params::inverse`].
pub fn u3_inverse_params(p: U3Params) -> U3Params {
    p.inverse()
}

/// The 2x2 matrix
/// `[[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]]`.
pub fn u3_matrix(p: U3Params) -> DenseMatrix {
    let (s, c) = (p.theta / 2.0).sin_cos();
    let e_phi = Complex64::from_polar(1.0, p.phi);
    let e_lambda = Complex64::from_polar(1.0, p.lambda);
    let e_sum = Complex64::from_polar(1.0, p.phi + p.lambda);
    DenseMatrix::from_rows_unchecked(
        2,
        2,
        vec![Complex64::new(c, 0.0), -e_lambda * s, e_phi * s, e_sum * c],
    )
}

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self.get(r, c);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting bad shapes and
    /// non-finite entries.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_rows_unchecked(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Builds a square matrix from real entries, mostly for constants.
    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        Self::from_rows_unchecked(
            dim,
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_rows_unchecked(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim, dim);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * dim + i] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// Number of qubits this square matrix acts on, if its side is `2^k`, `k >= 1`.
    pub fn qubit_arity(&self) -> Option<usize> {
        if self.is_square() && self.rows >= 2 && self.rows.is_power_of_two() {
            Some(self.rows.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::from_rows_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|&z| z * k).collect(),
        )
    }

    /// `max_ij |a_ij - b_ij|`, or `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }

    /// `max_ij |(A^dagger A - I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = matmul(&adjoint(self), self).expect("square matrix");
        gram.max_abs_diff(&Self::identity(self.rows))
            .expect("same shape")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let (n, k, m) = (a.rows, a.cols, b.cols);
    let mut out = vec![ZERO; n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let aip = a.data[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b.data[p * m..(p + 1) * m];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    Ok(DenseMatrix::from_rows_unchecked(n, m, out))
}

/// Conjugate transpose.
pub fn adjoint(a: &DenseMatrix) -> DenseMatrix {
    let mut out = vec![ZERO; a.data.len()];
    for r in 0..a.rows {
        for c in 0..a.cols {
            out[c * a.rows + r] = a.data[r * a.cols + c].conj();
        }
    }
    DenseMatrix::from_rows_unchecked(a.cols, a.rows, out)
}

/// Kronecker product with the default size cap.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    kron_with_limit(a, b, DEFAULT_MAX_DIM)
}

/// `kron(A, B)[i*rb + k][j*cb + l] = A[i][j] * B[k][l]`.
pub fn kron_with_limit(
    a: &DenseMatrix,
    b: &DenseMatrix,
    max_dim: usize,
) -> Result<DenseMatrix, LinalgError> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r <= max_dim && c <= max_dim => (r, c),
        _ => {
            return Err(LinalgError::TooLarge {
                rows: a.rows.saturating_mul(b.rows),
                cols: a.cols.saturating_mul(b.cols),
                max: max_dim,
            })
        }
    };
    let mut out = vec![ZERO; rows * cols];
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.get(i, j);
            for k in 0..b.rows {
                let dst = (i * b.rows + k) * cols + j * b.cols;
                let src = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &bv) in out[dst..dst + b.cols].iter_mut().zip(src) {
                    *o = aij * bv;
                }
            }
        }
    }
    Ok(DenseMatrix::from_rows_unchecked(rows, cols, out))
}

/// `U ⊗ U ⊗ ... ⊗ U` (`power` factors). `power == 0` gives the 1x1 identity.
pub fn kron_power(u: &DenseMatrix, power: usize) -> Result<DenseMatrix, LinalgError> {
    let mut acc = DenseMatrix::identity(1);
    for _ in 0..power {
        acc = kron(&acc, u)?;
    }
    Ok(acc)
}

/// Lifts per-slot 2x2 operators to one operator on `factors.len()` qubits,
/// slot 0 being the least significant bit of the result's index.
pub fn kron_slots(factors: &[DenseMatrix]) -> Result<DenseMatrix, LinalgError> {
    let mut acc = DenseMatrix::identity(1);
    for f in factors {
        // a later slot is a more significant bit, so it goes on the left
        acc = kron(f, &acc)?;
    }
    Ok(acc)
}

/// True iff there is a phase `alpha` with `max |a - e^{i alpha} b| <= tol`.
///
/// The phase is estimated from the largest-magnitude entry of `b`.
pub fn equal_up_to_global_phase(
    a: &DenseMatrix,
    b: &DenseMatrix,
    tol: f64,
) -> Result<bool, LinalgError> {
    Ok(global_phase_distance(a, b)? <= tol)
}

/// `min_alpha max |a - e^{i alpha} b|` with `alpha` fixed by the largest entry of `b`.
pub fn global_phase_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, LinalgError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch {
            op: "equal_up_to_global_phase",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let (idx, bmax) =
        b.data
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold(
                (0, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    if bmax == 0.0 {
        let amax = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return Ok(if amax == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let ratio = a.data[idx] / b.data[idx];
    let phase = if ratio.norm() == 0.0 {
        ONE
    } else {
        ratio / ratio.norm()
    };
    Ok(a.max_abs_diff(&b.scale(phase)).expect("same shape"))
}
