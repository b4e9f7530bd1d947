//! Minimal dense complex 4×4 / 4-vector kernel.
//!
//! Everything in the model lives in the four-dimensional coin space, so a
//! fixed-size, allocation-free kernel covers all linear algebra in the crate;
//! no external matrix library is needed at this size.

use num_complex::Complex64;

/// Shorthand for the complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Complex 4-vector (one coin-space amplitude set).
pub type Vec4 = [C64; 4];

/// The zero 4-vector.
pub const VEC4_ZERO: Vec4 = [C64::new(0.0, 0.0); 4];

/// Squared 2-norm Σ|v_i|².
pub fn vnorm_sqr(v: &Vec4) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// 2-norm of a 4-vector.
pub fn vnorm(v: &Vec4) -> f64 {
    vnorm_sqr(v).sqrt()
}

/// Hermitian inner product ⟨a|b⟩ = Σ a_i* b_i (conjugate-linear in `a`).
pub fn vdot(a: &Vec4, b: &Vec4) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        acc += a[i].conj() * b[i];
    }
    acc
}

/// Dense complex 4×4 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    /// All-zero matrix.
    pub fn zeros() -> Self {
        Mat4([[C64::new(0.0, 0.0); 4]; 4])
    }

    /// Identity matrix.
    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix from four complex entries.
    pub fn diag(d: [C64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = d[i];
        }
        m
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &Vec4) -> Vec4 {
        let mut out = VEC4_ZERO;
        for (i, row) in self.0.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..4 {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Matrix product self · rhs.
    pub fn mul(&self, rhs: &Mat4) -> Mat4 {
        let mut out = Mat4::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..4 {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat4 {
        let mut out = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    /// Entrywise difference self − rhs.
    pub fn sub(&self, rhs: &Mat4) -> Mat4 {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }

    /// Entrywise sum self + rhs.
    pub fn add(&self, rhs: &Mat4) -> Mat4 {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }

    /// Scalar multiple.
    pub fn scale(&self, s: C64) -> Mat4 {
        let mut out = *self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] *= s;
            }
        }
        out
    }

    /// Trace.
    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2] + self.0[3][3]
    }

    /// Largest entry magnitude (L∞ over entries).
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `rhs`.
    pub fn max_abs_diff(&self, rhs: &Mat4) -> f64 {
        self.sub(rhs).max_abs()
    }

    /// Deviation from Hermitian symmetry, ‖M − M†‖_max.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Outer product |a⟩⟨b| added into `self` (Gram-sum building block).
    pub fn add_outer(&mut self, a: &Vec4, b: &Vec4) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += a[i] * b[j].conj();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_is_multiplicative_unit() {
        let mut m = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = c(i as f64 - j as f64, (i * j) as f64);
            }
        }
        assert_eq!(Mat4::identity().mul(&m), m);
        assert_eq!(m.mul(&Mat4::identity()), m);
    }

    #[test]
    fn adjoint_reverses_products() {
        let mut a = Mat4::zeros();
        let mut b = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                a.0[i][j] = c(0.3 * i as f64, 1.0 - 0.2 * j as f64);
                b.0[i][j] = c(j as f64 - 1.5, 0.1 * (i + j) as f64);
            }
        }
        let lhs = a.mul(&b).adjoint();
        let rhs = b.adjoint().mul(&a.adjoint());
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn vdot_is_conjugate_linear_in_first_argument() {
        let a = [c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0), c(0.5, 0.5)];
        let b = [c(-1.0, 0.0), c(2.0, 2.0), c(0.0, 1.0), c(1.0, -1.0)];
        let d = vdot(&a, &b);
        assert!((vdot(&b, &a) - d.conj()).norm() < 1e-15);
        assert!((vnorm_sqr(&a) - vdot(&a, &a).re).abs() < 1e-15);
    }
}
