//! The step-dependent coin operator.
//!
//! The coin acts on the 4-dimensional internal space and couples the
//! components in two 2×2 blocks: the *corner* block on components {0, 3}
//! (rotation angle t·θ₁, phase e^{−itφ}) and the *middle* block on components
//! {1, 2} (rotation angle t·θ₂, phase e^{+itφ}). A step-dependent coin (SDC)
//! scales all angle arguments by the step number t; the step-independent coin
//! (SIC) freezes the matrix at its t = 1 form.

use crate::angle::{Angle, AngleError};
use crate::mat4::{C64, Mat4};

/// Whether the coin angles scale with the step number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinMode {
    /// Step-dependent coin: the matrix at step t uses angles t·θ, t·φ.
    Sdc,
    /// Step-independent coin: the t = 1 matrix is applied at every step.
    Sic,
}

/// Coin parameters: two rotation angles, one phase, and the stepping mode.
/// Angles are canonicalized into (−π, π] on construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinParams {
    pub theta1: Angle,
    pub theta2: Angle,
    pub phi: Angle,
    pub mode: CoinMode,
}

impl CoinParams {
    pub fn new(theta1: Angle, theta2: Angle, phi: Angle, mode: CoinMode) -> Self {
        CoinParams { theta1, theta2, phi, mode }
    }

    /// Equal rotation angles θ₁ = θ₂ = θ and zero phase.
    pub fn symmetric(theta: Angle, mode: CoinMode) -> Self {
        CoinParams { theta1: theta, theta2: theta, phi: Angle::zero(), mode }
    }

    /// Equal rotation angles θ₁ = θ₂ = π·p/q and zero phase.
    pub fn symmetric_pi_frac(p: i64, q: i64, mode: CoinMode) -> Result<Self, AngleError> {
        Ok(Self::symmetric(Angle::pi_frac(p, q)?, mode))
    }

    /// A copy with the stepping mode replaced.
    pub fn with_mode(&self, mode: CoinMode) -> Self {
        CoinParams { mode, ..*self }
    }

    /// The step whose angles parameterize the operator applied at walk step
    /// t: t itself for SDC, always 1 for SIC.
    pub fn effective_step(&self, t: u64) -> u64 {
        match self.mode {
            CoinMode::Sdc => t,
            CoinMode::Sic => 1,
        }
    }
}

/// A concrete coin matrix, tagged with the walk step it advances.
///
/// Invariants: unitary to ≤ 1e−12 entrywise, and supported only on the
/// corner/middle sparsity pattern (0,0),(0,3),(3,0),(3,3),(1,1),(1,2),(2,1),(2,2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinMatrix {
    pub entries: Mat4,
    pub step: u64,
}

/// Build the coin matrix applied at walk step t ≥ 1 (the first applied coin
/// is the t = 1 matrix; SIC reuses it at every step).
///
/// Corner block on {0, 3}: e^{−itφ}·[[cos tθ₁, −i sin tθ₁], [−i sin tθ₁, cos tθ₁]].
/// Middle block on {1, 2}: e^{+itφ}·[[cos tθ₂, −i sin tθ₂], [−i sin tθ₂, cos tθ₂]].
pub fn coin_matrix(params: &CoinParams, t: u64) -> CoinMatrix {
    assert!(t >= 1, "coin steps are counted from 1");
    let s = params.effective_step(t);
    let (c1, s1) = params.theta1.cos_sin_scaled(s);
    let (c2, s2) = params.theta2.cos_sin_scaled(s);
    let (cp, sp) = params.phi.cos_sin_scaled(s);
    let e_minus = C64::new(cp, -sp); // e^{−itφ}
    let e_plus = C64::new(cp, sp); // e^{+itφ}
    let mi = C64::new(0.0, -1.0); // −i

    let mut m = Mat4::zeros();
    m.0[0][0] = e_minus * c1;
    m.0[0][3] = mi * e_minus * s1;
    m.0[3][0] = mi * e_minus * s1;
    m.0[3][3] = e_minus * c1;
    m.0[1][1] = e_plus * c2;
    m.0[1][2] = mi * e_plus * s2;
    m.0[2][1] = mi * e_plus * s2;
    m.0[2][2] = e_plus * c2;
    CoinMatrix { entries: m, step: t }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unitarity_defect(c: &CoinMatrix) -> f64 {
        c.entries.mul(&c.entries.adjoint()).max_abs_diff(&Mat4::identity())
    }

    #[test]
    fn zero_angles_give_identity() {
        let params = CoinParams::symmetric(Angle::zero(), CoinMode::Sdc);
        let c = coin_matrix(&params, 7);
        assert_eq!(c.entries, Mat4::identity());
    }

    #[test]
    fn quarter_angle_step_two_is_minus_i_antidiagonal_blocks() {
        // t·θ = π/2: cosines vanish exactly, leaving −i on the off-block
        // positions and zeros on the diagonal.
        let params = CoinParams::symmetric_pi_frac(1, 4, CoinMode::Sdc).unwrap();
        let c = coin_matrix(&params, 2);
        let mi = C64::new(0.0, -1.0);
        let zero = C64::new(0.0, 0.0);
        for i in 0..4 {
            assert_eq!(c.entries.0[i][i], zero);
        }
        assert_eq!(c.entries.0[0][3], mi);
        assert_eq!(c.entries.0[3][0], mi);
        assert_eq!(c.entries.0[1][2], mi);
        assert_eq!(c.entries.0[2][1], mi);
    }

    #[test]
    fn asymmetric_angles_with_phase_match_independent_construction() {
        // θ₁ = π/3, θ₂ = π/7, φ = 0.1, t = 3: entries frozen from a
        // term-by-term construction of the definition in a scratch script.
        let params = CoinParams::new(
            Angle::pi_frac(1, 3).unwrap(),
            Angle::pi_frac(1, 7).unwrap(),
            Angle::from_radians(0.1).unwrap(),
            CoinMode::Sdc,
        );
        let c = coin_matrix(&params, 3).entries;
        let expect = [
            ((0, 0), -0.955336489125606, 0.2955202066613396),
            ((0, 3), 0.0, 0.0),
            ((3, 0), 0.0, 0.0),
            ((3, 3), -0.955336489125606, 0.2955202066613396),
            ((1, 1), 0.21258236780277628, 0.06575943238924435),
            ((1, 2), 0.2881108980878809, -0.9313842087743405),
            ((2, 1), 0.2881108980878809, -0.9313842087743405),
            ((2, 2), 0.21258236780277628, 0.06575943238924435),
        ];
        for ((i, j), re, im) in expect {
            let z = c.0[i][j];
            assert!(
                (z.re - re).abs() < 1e-14 && (z.im - im).abs() < 1e-14,
                "entry ({i},{j}) = {z}, expected {re}+{im}i"
            );
        }
        // Off-pattern entries are exactly zero.
        let zero = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let on_pattern = (i == j)
                    || (i == 0 && j == 3)
                    || (i == 3 && j == 0)
                    || (i == 1 && j == 2)
                    || (i == 2 && j == 1);
                if !on_pattern {
                    assert_eq!(c.0[i][j], zero);
                }
            }
        }
    }

    #[test]
    fn coin_is_unitary_across_parameters() {
        let params = CoinParams::new(
            Angle::from_radians(0.83).unwrap(),
            Angle::from_radians(-1.9).unwrap(),
            Angle::from_radians(2.4).unwrap(),
            CoinMode::Sdc,
        );
        for t in 1..40 {
            assert!(unitarity_defect(&coin_matrix(&params, t)) < 1e-12);
        }
    }

    #[test]
    fn sic_mode_freezes_the_first_step_matrix() {
        let sdc = CoinParams::symmetric_pi_frac(1, 3, CoinMode::Sdc).unwrap();
        let sic = sdc.with_mode(CoinMode::Sic);
        let first = coin_matrix(&sdc, 1);
        for t in [1u64, 2, 5, 40] {
            assert_eq!(coin_matrix(&sic, t).entries, first.entries);
        }
        // And SDC at t = 1 coincides with SIC by definition.
        assert_eq!(coin_matrix(&sdc, 1).entries, coin_matrix(&sic, 1).entries);
    }
}
