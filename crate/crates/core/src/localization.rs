//! Frequency-domain localization analysis: the dispersion relation, the
//! step-dependent transfer matrix, numerical Lyapunov exponents and
//! localization-length sweeps, the exact diagonalization of the
//! step-independent transfer matrix, the perturbation coefficients of the
//! step-dependent one in that eigenbasis, and the analytic
//! localization-length estimate they lead to.

use rayon::prelude::*;
use thiserror::Error;

use crate::angle::Angle;
use crate::coin::CoinParams;
use crate::mat4::{vnorm, C64, Mat4, Vec4};

/// Transfer-matrix entries blow up when |cos(tθ)| falls at or below this.
pub const DEFAULT_POLE_TOL: f64 = 1e-12;

/// Default truncation of the sec² average for angles with no exact period.
pub const DEFAULT_SEC2_N_MAX: u64 = 10_000;

/// A sec² term above this cap is treated as a pole (divergent average).
pub const DEFAULT_SEC2_CAP: f64 = 1e12;

/// λ at or below this is reported as free propagation (l_loc = +∞).
pub const FREE_PROPAGATION_TOL: f64 = 1e-9;

/// Residual allowed in the S⁻¹ T S = Λ verification.
const VERIFY_TOL: f64 = 1e-9;

/// Below this, tan θ / ξ / the block determinant count as exact zeros.
const DEGENERATE_TOL: f64 = 1e-12;

/// Errors from localization-analysis operations.
#[derive(Debug, Error, PartialEq)]
pub enum LocalizationError {
    /// sec(tθ) pole: the walk relocalizes and the transfer matrix diverges.
    #[error("transfer-matrix pole at step {step}: |cos(t\u{3b8})| below tolerance")]
    Pole { step: u64 },
    /// |cos ω sec θ| > 1: ω̄ would be complex (evanescent regime).
    #[error("outside the propagating band: |cos \u{3c9} sec \u{3b8}| = {magnitude} > 1")]
    Band { magnitude: f64 },
    /// Exact band edge: ξ² = tan²θ makes the similarity transform singular.
    #[error("band edge: the similarity transform is singular (\u{3be}\u{b2} = tan\u{b2}\u{3b8})")]
    EdgeDegenerate,
    /// The similarity transform is derived for φ = 0 only.
    #[error("diagonalization requires \u{3c6} = 0; got a nonzero phase")]
    NonzeroPhi,
    /// S⁻¹ T S failed to reproduce the diagonal within tolerance.
    #[error("diagonalization self-check failed: residual {residual}")]
    VerificationFailed { residual: f64 },
}

/// A point on the two-band dispersion surface.
#[derive(Clone, Copy, Debug)]
pub struct DispersionPoint {
    pub k1: f64,
    pub k2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Band frequencies for quasi-momenta (k₁, k₂):
/// ω₁ = arccos(cos θ₁ cos(k₁+k₂)), ω₂ = arccos(cos θ₂ cos(k₁−k₂)),
/// principal branch [0, π].
pub fn dispersion(theta1: &Angle, theta2: &Angle, k1: f64, k2: f64) -> DispersionPoint {
    let omega1 = (theta1.cos() * (k1 + k2).cos()).clamp(-1.0, 1.0).acos();
    let omega2 = (theta2.cos() * (k1 - k2).cos()).clamp(-1.0, 1.0).acos();
    DispersionPoint { k1, k2, omega1, omega2 }
}

/// The 4×4 transfer matrix T(t) in the frequency domain.
///
/// Block structure (all other entries zero):
/// corner {0,3}: [[e^{−itφ+iω₁} sec tθ₁, −i tan tθ₁], [i tan tθ₁, e^{itφ−iω₁} sec tθ₁]]
/// middle {1,2}: [[e^{itφ+iω₂} sec tθ₂, −i tan tθ₂], [i tan tθ₂, e^{−itφ−iω₂} sec tθ₂]]
/// Each block is unimodular: sec² − tan² = 1.
#[derive(Clone, Copy, Debug)]
pub struct TransferMatrix {
    pub entries: Mat4,
    pub step: u64,
}

/// Build T(t) at frequencies (ω₁, ω₂). Step-independent mode freezes the
/// angle scale at t = 1. Fails with a pole error when sec(tθ) diverges.
pub fn transfer_matrix(
    params: &CoinParams,
    omega1: f64,
    omega2: f64,
    t: u64,
    pole_tol: f64,
) -> Result<TransferMatrix, LocalizationError> {
    assert!(t >= 1, "transfer matrix is defined for t >= 1");
    let s = params.effective_step(t);
    let (c1, s1) = params.theta1.cos_sin_scaled(s);
    let (c2, s2) = params.theta2.cos_sin_scaled(s);
    if c1.abs() <= pole_tol || c2.abs() <= pole_tol {
        return Err(LocalizationError::Pole { step: t });
    }
    let (cp, sp) = params.phi.cos_sin_scaled(s);
    let e_phi_minus = C64::new(cp, -sp); // e^{−itφ}
    let e_phi_plus = C64::new(cp, sp);
    let e_w1 = C64::new(omega1.cos(), omega1.sin());
    let e_w2 = C64::new(omega2.cos(), omega2.sin());
    let (sec1, tan1) = (1.0 / c1, s1 / c1);
    let (sec2, tan2) = (1.0 / c2, s2 / c2);

    let mut m = Mat4::zeros();
    m.0[0][0] = e_phi_minus * e_w1 * sec1;
    m.0[0][3] = C64::new(0.0, -tan1);
    m.0[3][0] = C64::new(0.0, tan1);
    m.0[3][3] = e_phi_plus * e_w1.conj() * sec1;
    m.0[1][1] = e_phi_plus * e_w2 * sec2;
    m.0[1][2] = C64::new(0.0, -tan2);
    m.0[2][1] = C64::new(0.0, tan2);
    m.0[2][2] = e_phi_minus * e_w2.conj() * sec2;
    Ok(TransferMatrix { entries: m, step: t })
}

/// Outcome of a Lyapunov-exponent evaluation at one sweep frequency.
#[derive(Clone, Copy, Debug)]
pub struct LyapunovResult {
    /// λ ≥ 0, or +∞ when a transfer pole was hit.
    pub lambda: f64,
    /// 1/λ; 0 when divergent; +∞ when λ is at free-propagation level.
    pub l_loc: f64,
    pub divergent: bool,
    /// The sweep coordinate this was evaluated at (ω₁ = ω₂ = ω).
    pub omega: f64,
}

/// Lyapunov exponent λ = (1/N) Σ_{x=1..N} log‖Ψ_x‖ along a 1D ray of
/// transfer-matrix applications, Ψ_x = T_x Ψ_{x−1}, Ψ₀ = (1,0,0,0).
///
/// Evaluated stably by renormalizing each step and carrying the accumulated
/// log-norm: log‖Ψ_x‖ = Σ_{y≤x} log g_y with g_y the per-step growth factor.
/// A pole at any step means complete localization: λ = +∞, l_loc = 0.
pub fn lyapunov(params: &CoinParams, omega: f64, steps: u64, pole_tol: f64) -> LyapunovResult {
    assert!(steps >= 1, "lyapunov needs at least one iteration");
    let mut v: Vec4 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let mut accumulated = 0.0; // log‖Ψ_x‖
    let mut total = 0.0; // Σ_x log‖Ψ_x‖
    for x in 1..=steps {
        let t = match transfer_matrix(params, omega, omega, x, pole_tol) {
            Ok(t) => t,
            Err(LocalizationError::Pole { .. }) => {
                return LyapunovResult {
                    lambda: f64::INFINITY,
                    l_loc: 0.0,
                    divergent: true,
                    omega,
                };
            }
            Err(_) => unreachable!("transfer_matrix only fails on poles"),
        };
        v = t.entries.mul_vec(&v);
        let growth = vnorm(&v);
        for entry in &mut v {
            *entry /= growth;
        }
        accumulated += growth.ln();
        total += accumulated;
    }
    let lambda = total / steps as f64;
    let l_loc = if lambda <= FREE_PROPAGATION_TOL { f64::INFINITY } else { 1.0 / lambda };
    LyapunovResult { lambda, l_loc, divergent: false, omega }
}

/// Evaluate `lyapunov` over a frequency grid. Grid points are independent and
/// evaluated in parallel; results keep the grid order.
pub fn lloc_sweep(
    params: &CoinParams,
    omega_grid: &[f64],
    steps: u64,
    pole_tol: f64,
) -> Vec<LyapunovResult> {
    assert!(!omega_grid.is_empty(), "sweep grid must be non-empty");
    omega_grid
        .par_iter()
        .map(|&omega| lyapunov(params, omega, steps, pole_tol))
        .collect()
}

/// How one 2×2 block of the similarity transform is realized.
#[derive(Clone, Copy, Debug)]
enum BlockForm {
    /// [[tan θ, −ξ], [ξ, −tan θ]] with determinant d = ξ² − tan²θ ≠ 0.
    General { tan_theta: f64, xi: f64, det: f64 },
    /// θ ≈ 0 and ξ ≈ 0: the block degenerates; use a signed permutation.
    /// `positive` records sin ω ≥ 0 (no branch swap needed).
    SignedPerm { positive: bool },
}

/// Per-block data shared by the diagonalization and the perturbation
/// coefficients.
#[derive(Clone, Copy, Debug)]
struct BlockData {
    form: BlockForm,
    omega_bar: f64,
    cos_omega_bar: f64,
    sin_omega_bar: f64,
    xi: f64,
}

fn block_data(theta: &Angle, omega: f64, pole_tol: f64) -> Result<BlockData, LocalizationError> {
    let (c, s) = theta.cos_sin();
    if c.abs() <= pole_tol {
        return Err(LocalizationError::Pole { step: 1 });
    }
    let sec = 1.0 / c;
    let tan = s / c;
    let cos_omega_bar = omega.cos() * sec;
    if cos_omega_bar.abs() > 1.0 {
        return Err(LocalizationError::Band { magnitude: cos_omega_bar.abs() });
    }
    let omega_bar = cos_omega_bar.acos();
    let sin_omega_bar = omega_bar.sin();
    let xi = omega.sin() * sec - sin_omega_bar;
    let form = if tan.abs() <= DEGENERATE_TOL && xi.abs() <= DEGENERATE_TOL {
        BlockForm::SignedPerm { positive: omega.sin() >= 0.0 }
    } else {
        let det = xi * xi - tan * tan;
        if det.abs() <= DEGENERATE_TOL {
            return Err(LocalizationError::EdgeDegenerate);
        }
        BlockForm::General { tan_theta: tan, xi, det }
    };
    Ok(BlockData { form, omega_bar, cos_omega_bar, sin_omega_bar, xi })
}

/// 2×2 forward/inverse entries of one similarity block, as real numbers
/// ((row, col) order (00, 01, 10, 11)).
fn block_entries(form: &BlockForm) -> ([f64; 4], [f64; 4]) {
    match *form {
        BlockForm::General { tan_theta: a, xi: b, det: d } => (
            [a, -b, b, -a],
            [-a / d, b / d, -b / d, a / d],
        ),
        BlockForm::SignedPerm { positive: true } => ([1.0, 0.0, 0.0, -1.0], [1.0, 0.0, 0.0, -1.0]),
        BlockForm::SignedPerm { positive: false } => ([0.0, -1.0, 1.0, 0.0], [0.0, 1.0, -1.0, 0.0]),
    }
}

/// The exact diagonalization of the step-independent transfer matrix.
#[derive(Clone, Debug)]
pub struct SicDiag {
    /// S with S⁻¹ T S = diag(phases).
    pub similarity: Mat4,
    pub inverse: Mat4,
    /// (e^{iω̄₁}, e^{iω̄₂}, e^{−iω̄₂}, e^{−iω̄₁}).
    pub phases: [C64; 4],
    pub omega_bar: (f64, f64),
    pub xi: (f64, f64),
}

/// Diagonalize T_SIC at (ω₁, ω₂): S has blocks [[tan θᵢ, −ξᵢ], [ξᵢ, −tan θᵢ]]
/// with ξᵢ = sin ωᵢ sec θᵢ − sin ω̄ᵢ and cos ω̄ᵢ = cos ωᵢ sec θᵢ. The result
/// is verified (S⁻¹ T S against the diagonal) before being returned.
///
/// Defined for φ = 0 only: the transform carries no φ, and for φ ≠ 0 the
/// eigenphases stop obeying cos ω̄ = cos ω sec θ.
pub fn sic_diagonalization(
    params: &CoinParams,
    omega1: f64,
    omega2: f64,
    pole_tol: f64,
) -> Result<SicDiag, LocalizationError> {
    if !params.phi.is_zero() {
        return Err(LocalizationError::NonzeroPhi);
    }
    let b1 = block_data(&params.theta1, omega1, pole_tol)?;
    let b2 = block_data(&params.theta2, omega2, pole_tol)?;

    let mut similarity = Mat4::zeros();
    let mut inverse = Mat4::zeros();
    for (block, rows) in [(&b1, [0usize, 3]), (&b2, [1, 2])] {
        let (fwd, inv) = block_entries(&block.form);
        let [r0, r1] = rows;
        similarity.0[r0][r0] = C64::new(fwd[0], 0.0);
        similarity.0[r0][r1] = C64::new(fwd[1], 0.0);
        similarity.0[r1][r0] = C64::new(fwd[2], 0.0);
        similarity.0[r1][r1] = C64::new(fwd[3], 0.0);
        inverse.0[r0][r0] = C64::new(inv[0], 0.0);
        inverse.0[r0][r1] = C64::new(inv[1], 0.0);
        inverse.0[r1][r0] = C64::new(inv[2], 0.0);
        inverse.0[r1][r1] = C64::new(inv[3], 0.0);
    }

    let e1 = C64::new(b1.cos_omega_bar, b1.sin_omega_bar);
    let e2 = C64::new(b2.cos_omega_bar, b2.sin_omega_bar);
    let phases = [e1, e2, e2.conj(), e1.conj()];

    let t = transfer_matrix(params, omega1, omega2, 1, pole_tol)?;
    let reconstructed = inverse.mul(&t.entries).mul(&similarity);
    let residual = reconstructed.max_abs_diff(&Mat4::diag(phases));
    if residual > VERIFY_TOL {
        return Err(LocalizationError::VerificationFailed { residual });
    }

    Ok(SicDiag {
        similarity,
        inverse,
        phases,
        omega_bar: (b1.omega_bar, b2.omega_bar),
        xi: (b1.xi, b2.xi),
    })
}

/// The step-dependent transfer matrix in the eigenbasis of the
/// step-independent one: S⁻¹ T_SDC(t) S has corner block [[α, β], [−β, ᾱ]]
/// and middle block [[γ, δ], [−δ, γ̄]].
#[derive(Clone, Copy, Debug)]
pub struct PerturbCoeffs {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
    pub xi1: f64,
    pub xi2: f64,
    pub omega_bar1: f64,
    pub omega_bar2: f64,
    pub step: u64,
}

impl PerturbCoeffs {
    /// Assemble S⁻¹ T_SDC(t) S from the four coefficients.
    pub fn reconstruct(&self) -> Mat4 {
        let mut m = Mat4::zeros();
        m.0[0][0] = self.alpha;
        m.0[0][3] = self.beta;
        m.0[3][0] = -self.beta;
        m.0[3][3] = self.alpha.conj();
        m.0[1][1] = self.gamma;
        m.0[1][2] = self.delta;
        m.0[2][1] = -self.delta;
        m.0[2][2] = self.gamma.conj();
        m
    }
}

/// One block's (α, β) pair from its similarity form and the scaled trig of
/// the step-t transfer block [[e^{iω} sec tθ, −i tan tθ], [i tan tθ, …]].
fn conjugated_block(block: &BlockData, omega: f64, sec_t: f64, tan_t: f64) -> (C64, C64) {
    match block.form {
        BlockForm::General { tan_theta: a, xi: b, det: d } => {
            let e_plus = C64::new(omega.cos(), omega.sin());
            let e_minus = e_plus.conj();
            // α = [ξ² e^{−iω} sec tθ + 2iξ tanθ tan tθ − e^{iω} tan²θ sec tθ] / d
            let alpha = (e_minus * (b * b * sec_t) + C64::new(0.0, 2.0 * a * b * tan_t)
                - e_plus * (a * a * sec_t))
                / d;
            // β = i [2ξ tanθ sinω sec tθ − (ξ² + tan²θ) tan tθ] / d
            let beta = C64::new(
                0.0,
                (2.0 * a * b * omega.sin() * sec_t - (b * b + a * a) * tan_t) / d,
            );
            (alpha, beta)
        }
        BlockForm::SignedPerm { positive } => {
            // The permutation leaves the (already diagonal) block alone, up
            // to the branch swap: α = e^{±iω} sec tθ, β = ±i tan tθ.
            let p = C64::new(omega.cos(), omega.sin()) * sec_t;
            if positive {
                (p, C64::new(0.0, tan_t))
            } else {
                (p.conj(), C64::new(0.0, -tan_t))
            }
        }
    }
}

/// Perturbation coefficients α(t), β(t), γ(t), δ(t) of S⁻¹ T_SDC(t) S.
/// Re β = Re δ = 0 and Re α = cos ω₁ sec(θ₁ t) hold identically.
pub fn perturbation_coeffs(
    params: &CoinParams,
    omega1: f64,
    omega2: f64,
    t: u64,
    pole_tol: f64,
) -> Result<PerturbCoeffs, LocalizationError> {
    assert!(t >= 1, "perturbation coefficients are defined for t >= 1");
    if !params.phi.is_zero() {
        return Err(LocalizationError::NonzeroPhi);
    }
    let b1 = block_data(&params.theta1, omega1, pole_tol)?;
    let b2 = block_data(&params.theta2, omega2, pole_tol)?;

    let s = params.effective_step(t);
    let (c1t, s1t) = params.theta1.cos_sin_scaled(s);
    let (c2t, s2t) = params.theta2.cos_sin_scaled(s);
    if c1t.abs() <= pole_tol || c2t.abs() <= pole_tol {
        return Err(LocalizationError::Pole { step: t });
    }

    let (alpha, beta) = conjugated_block(&b1, omega1, 1.0 / c1t, s1t / c1t);
    let (gamma, delta) = conjugated_block(&b2, omega2, 1.0 / c2t, s2t / c2t);
    Ok(PerturbCoeffs {
        alpha,
        beta,
        gamma,
        delta,
        xi1: b1.xi,
        xi2: b2.xi,
        omega_bar1: b1.omega_bar,
        omega_bar2: b2.omega_bar,
        step: t,
    })
}

/// Result of the sec² long-run average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sec2Average {
    Value(f64),
    /// A pole (term above the cap) was encountered.
    Divergent,
}

/// (1/N) Σ_{n=1..N} sec²(nθ). For θ an exact rational multiple of π the sum
/// has period q and one exact period is averaged (N = q), which is the N→∞
/// limit; otherwise the sum truncates at n_max. Any term above `cap` — or an
/// exact pole — makes the average divergent.
pub fn sec2_average(theta: &Angle, n_max: u64, cap: f64) -> Sec2Average {
    assert!(n_max >= 1, "sec2 average needs at least one term");
    let n = match theta.pi_rational() {
        Some((_, q)) if (q as u64) <= n_max => q as u64,
        _ => n_max,
    };
    let mut sum = 0.0;
    for i in 1..=n {
        let (c, _) = theta.cos_sin_scaled(i);
        let c2 = c * c;
        if c2 == 0.0 {
            return Sec2Average::Divergent;
        }
        let term = 1.0 / c2;
        if term > cap {
            return Sec2Average::Divergent;
        }
        sum += term;
    }
    Sec2Average::Value(sum / n as f64)
}

/// Analytic localization-length estimate (up to an overall constant):
/// L = 2 / (cos²ω₁ · ⟨sec²(nθ₁)⟩ + cos²ω₂ · ⟨sec²(nθ₂)⟩).
/// A divergent average means complete localization: returns 0. A vanishing
/// denominator (band peak) returns +∞.
pub fn analytic_lloc(
    params: &CoinParams,
    omega1: f64,
    omega2: f64,
    n_max: u64,
    cap: f64,
) -> f64 {
    let a1 = match sec2_average(&params.theta1, n_max, cap) {
        Sec2Average::Value(v) => v,
        Sec2Average::Divergent => return 0.0,
    };
    let a2 = match sec2_average(&params.theta2, n_max, cap) {
        Sec2Average::Value(v) => v,
        Sec2Average::Divergent => return 0.0,
    };
    let c1 = omega1.cos();
    let c2 = omega2.cos();
    let denominator = c1 * c1 * a1 + c2 * c2 * a2;
    if denominator == 0.0 {
        f64::INFINITY
    } else {
        2.0 / denominator
    }
}

/// One point of the analytic localization-length curve.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticLlocPoint {
    pub omega: f64,
    pub raw: f64,
    /// `raw` rescaled so the curve's largest finite value is 1 (the overall
    /// constant of the estimate is not determined).
    pub normalized: f64,
}

/// Evaluate `analytic_lloc` on a grid with ω₁ = ω₂ = ω, emitting both the raw
/// values and a peak-normalized copy for shape comparison.
pub fn analytic_lloc_curve(
    params: &CoinParams,
    omega_grid: &[f64],
    n_max: u64,
    cap: f64,
) -> Vec<AnalyticLlocPoint> {
    let raw: Vec<f64> = omega_grid
        .iter()
        .map(|&omega| analytic_lloc(params, omega, omega, n_max, cap))
        .collect();
    let peak = raw
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    omega_grid
        .iter()
        .zip(&raw)
        .map(|(&omega, &r)| AnalyticLlocPoint {
            omega,
            raw: r,
            normalized: if peak > 0.0 { r / peak } else { 0.0 },
        })
        .collect()
}
