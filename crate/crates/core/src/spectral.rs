//! Fixed-size complex Hermitian eigensolver and the support-restricted
//! matrix logarithm.
//!
//! Every matrix this crate diagonalizes is a 4×4 coin-space density (or
//! density-like) matrix, so a cyclic Jacobi iteration adapted to complex
//! Hermitian input is simple, robust, and dependency-free. Each rotation
//! combines a phase twist (making the targeted off-diagonal entry real) with
//! the classic symmetric Jacobi rotation that annihilates it; sweeps repeat
//! until the off-diagonal Frobenius norm falls below 1e−14 (at most 100
//! sweeps, which 4×4 input never comes close to needing).

use thiserror::Error;

use crate::mat4::{C64, Mat4};

/// Off-diagonal Frobenius norm at which sweeps stop.
pub const SWEEP_THRESHOLD: f64 = 1e-14;

/// Hard cap on Jacobi sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Default tolerance separating true zero eigenvalues from round-off in
/// density-matrix supports (amplitudes are O(1)).
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Errors from Hermitian validation and the matrix logarithm.
#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    /// Input deviates from conjugate symmetry beyond tolerance.
    #[error("matrix is not Hermitian: max |M - M^H| = {deviation}")]
    NotHermitian { deviation: f64 },
    /// An eigenvalue is negative beyond the zero tolerance (input not PSD).
    #[error("matrix is not positive semidefinite: eigenvalue {value}")]
    NegativeEigenvalue { value: f64 },
}

/// A validated Hermitian 4×4 matrix (‖M − M†‖_max ≤ 1e−12).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix4 {
    entries: Mat4,
}

impl HermitianMatrix4 {
    /// Validating constructor.
    pub fn new(entries: Mat4) -> Result<Self, SpectralError> {
        let deviation = entries.hermiticity_defect();
        if deviation > 1e-12 {
            return Err(SpectralError::NotHermitian { deviation });
        }
        Ok(HermitianMatrix4 { entries })
    }

    /// Constructor for matrices Hermitian by construction (Gram sums, V f(Λ) V†).
    /// Debug builds still verify.
    pub(crate) fn new_unchecked(entries: Mat4) -> Self {
        debug_assert!(entries.hermiticity_defect() <= 1e-12);
        HermitianMatrix4 { entries }
    }

    /// The underlying matrix.
    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }
}

/// Spectral decomposition M = V Λ V†: eigenvalues ascending, eigenvectors the
/// corresponding orthonormal columns of `vectors`.
#[derive(Clone, Copy, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: [f64; 4],
    pub vectors: Mat4,
}

impl EigenDecomposition {
    /// Eigenvector for eigenvalue index i (column i).
    pub fn vector(&self, i: usize) -> [C64; 4] {
        [self.vectors.0[0][i], self.vectors.0[1][i], self.vectors.0[2][i], self.vectors.0[3][i]]
    }

    /// Rebuild V Λ V† (test and verification helper).
    pub fn reconstruct(&self) -> Mat4 {
        let lambda = Mat4::diag([
            C64::new(self.eigenvalues[0], 0.0),
            C64::new(self.eigenvalues[1], 0.0),
            C64::new(self.eigenvalues[2], 0.0),
            C64::new(self.eigenvalues[3], 0.0),
        ]);
        self.vectors.mul(&lambda).mul(&self.vectors.adjoint())
    }
}

fn off_diagonal_norm(m: &Mat4) -> f64 {
    let mut acc = 0.0;
    for p in 0..4 {
        for q in 0..4 {
            if p != q {
                acc += m.0[p][q].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Diagonalize a Hermitian 4×4 matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(m: &HermitianMatrix4) -> EigenDecomposition {
    // Fold residual asymmetry (≤ 1e−12 by construction) away so the iteration
    // works on an exactly Hermitian matrix.
    let mut a = m.entries.add(&m.entries.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = Mat4::identity();

    let mut previous = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        // Converged, or stalled at rounding level: either way we are done.
        if off <= SWEEP_THRESHOLD || off >= previous {
            break;
        }
        previous = off;
        for p in 0..4 {
            for q in (p + 1)..4 {
                let z = a.0[p][q];
                let zn = z.norm();
                if zn == 0.0 {
                    continue;
                }
                let phase = z / zn;
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                // tan of the annihilating rotation via the stable quadratic
                // root (smaller angle), guarding the cotangent overflow.
                let theta = (aqq - app) / (2.0 * zn);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // R is the identity outside the (p, q) plane; inside it the
                // phase twist composed with the real rotation.
                let mut r = Mat4::identity();
                r.0[p][p] = C64::new(c, 0.0);
                r.0[p][q] = C64::new(s, 0.0);
                r.0[q][p] = phase.conj() * C64::new(-s, 0.0);
                r.0[q][q] = phase.conj() * C64::new(c, 0.0);

                a = r.adjoint().mul(&a).mul(&r);
                // The (p, q) entry is now zero up to rounding; pin it so the
                // off-diagonal norm reflects the annihilation exactly.
                a.0[p][q] = C64::new(0.0, 0.0);
                a.0[q][p] = C64::new(0.0, 0.0);
                v = v.mul(&r);
            }
        }
    }

    // Sort ascending; stable so exact ties (degenerate subspaces, diagonal
    // input) keep the iteration's ordering.
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| {
        a.0[i][i]
            .re
            .partial_cmp(&a.0[j][j].re)
            .expect("eigenvalues of Hermitian input are finite")
    });

    let mut eigenvalues = [0.0f64; 4];
    let mut vectors = Mat4::zeros();
    for (col, &src) in order.iter().enumerate() {
        eigenvalues[col] = a.0[src][src].re;
        for row in 0..4 {
            vectors.0[row][col] = v.0[row][src];
        }
    }
    EigenDecomposition { eigenvalues, vectors }
}

/// Principal matrix logarithm restricted to the support.
///
/// Eigenvalues ≤ `zero_tol` are treated as exact zeros and excluded from the
/// log (their mask entry is false); an eigenvalue below −`zero_tol` is a
/// not-PSD error. Returns V log(Λ⁺) V† together with the support mask, whose
/// index i refers to the decomposition's i-th (ascending) eigenvalue.
pub fn log_on_support(
    d: &EigenDecomposition,
    zero_tol: f64,
) -> Result<(HermitianMatrix4, [bool; 4]), SpectralError> {
    let mut mask = [false; 4];
    let mut log_diag = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        let lambda = d.eigenvalues[i];
        if lambda < -zero_tol {
            return Err(SpectralError::NegativeEigenvalue { value: lambda });
        }
        if lambda > zero_tol {
            mask[i] = true;
            log_diag[i] = C64::new(lambda.ln(), 0.0);
        }
    }
    let raw = d.vectors.mul(&Mat4::diag(log_diag)).mul(&d.vectors.adjoint());
    // Symmetrize away the rounding from the two matrix products.
    let sym = raw.add(&raw.adjoint()).scale(C64::new(0.5, 0.0));
    Ok((HermitianMatrix4::new_unchecked(sym), mask))
}
