//! Coin-space entropy measures: the reduced density matrix, entanglement
//! entropy, and the quantum relative entropy (QRE) and its variance (QIV)
//! between the step-dependent and step-independent walks, plus the lockstep
//! series runner that drives all of the per-step diagnostics at once.

use thiserror::Error;

use crate::coin::{CoinMode, CoinParams};
use crate::mat4::{C64, Mat4};
use crate::observables::{probability_field, shannon_coin, shannon_position, TimeSeries};
use crate::spectral::{
    eig_hermitian, EigenDecomposition, HermitianMatrix4, SpectralError, DEFAULT_ZERO_TOL,
};
use crate::walk::{step, EvolveOptions, InitialState, WalkError, Wavefunction};

/// Default tolerance on the probability mass ρ may carry outside the support
/// of σ before the QRE is declared undefined (+∞).
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-10;

/// Default ε for the optional σ-smoothing mode.
pub const DEFAULT_SMOOTHING_EPS: f64 = 1e-9;

/// Errors from entropy-measure computations.
#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    /// QRE inputs taken at different walk steps.
    #[error("density matrices are at different steps: {rho} vs {sigma}")]
    StepMismatch { rho: u64, sigma: u64 },
    /// A matrix failed density-matrix validation.
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    /// Propagated spectral failure.
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    /// Propagated walk failure (series runner).
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// The coin-space reduced density matrix ρ̃(t) with its step tag.
#[derive(Clone, Copy, Debug)]
pub struct ReducedDensity {
    matrix: HermitianMatrix4,
    step: u64,
}

impl ReducedDensity {
    /// Validating constructor: Hermitian, PSD within 1e−10, unit trace
    /// within 1e−10.
    pub fn new(matrix: HermitianMatrix4, step: u64) -> Result<Self, EntropyError> {
        let trace = matrix.entries().trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(EntropyError::NotDensity(format!("trace = {trace}")));
        }
        let d = eig_hermitian(&matrix);
        if d.eigenvalues[0] < -1e-10 {
            return Err(EntropyError::NotDensity(format!(
                "negative eigenvalue {}",
                d.eigenvalues[0]
            )));
        }
        Ok(ReducedDensity { matrix, step })
    }

    /// The matrix.
    pub fn matrix(&self) -> &HermitianMatrix4 {
        &self.matrix
    }

    /// The walk step the density was taken at.
    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Trace out the position register: ρ̃ᵢⱼ = Σ_{m,n} A⁽ⁱ⁾ A⁽ʲ⁾*. Hermitian and
/// PSD by construction (a Gram sum), unit trace for a normalized state.
pub fn reduced_density(psi: &Wavefunction) -> ReducedDensity {
    let mut m = Mat4::zeros();
    for (_, v) in psi.iter() {
        m.add_outer(v, v);
    }
    ReducedDensity {
        matrix: HermitianMatrix4::new_unchecked(m),
        step: psi.step(),
    }
}

/// Von Neumann entanglement entropy E = −Σ λ log λ over eigenvalues above the
/// zero tolerance. Lies in [0, log 4].
pub fn entanglement(rho: &ReducedDensity) -> f64 {
    let d = eig_hermitian(&rho.matrix);
    -d.eigenvalues
        .iter()
        .filter(|&&l| l > DEFAULT_ZERO_TOL)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

/// Knobs for the QRE computation.
#[derive(Clone, Copy, Debug)]
pub struct QreOptions {
    /// Eigenvalues at or below this are treated as exact zeros.
    pub zero_tol: f64,
    /// Support-violation threshold on ρ's mass outside supp σ.
    pub support_tol: f64,
    /// When set, σ is replaced by (1−ε)σ + ε·I/4 before anything else —
    /// plotting continuity at the cost of faithfulness, so off by default.
    pub smoothing: Option<f64>,
}

impl Default for QreOptions {
    fn default() -> Self {
        QreOptions {
            zero_tol: DEFAULT_ZERO_TOL,
            support_tol: DEFAULT_SUPPORT_TOL,
            smoothing: None,
        }
    }
}

/// Result of a QRE/QIV evaluation.
///
/// `d` is the relative entropy (≥ 0 by Klein's inequality, up to rounding);
/// `v` its variance. On a support violation `d` is the +∞ sentinel, `v` is
/// NaN (undefined), and `support_violation` is set. `overlap` holds |c_ij|²
/// for c_ij = ⟨Φᵢ|Φ′ⱼ⟩, indexed by the ascending eigen-orders of ρ and σ.
#[derive(Clone, Copy, Debug)]
pub struct QreResult {
    pub d: f64,
    pub v: f64,
    pub overlap: [[f64; 4]; 4],
    pub support_violation: bool,
}

/// Quantum relative entropy D(ρ‖σ) and its variance V(ρ‖σ), evaluated in the
/// two eigenbases with all sums restricted to supports:
///
/// D = Σᵢ λᵢ log λᵢ − Σᵢⱼ λᵢ log λ′ⱼ |c_ij|²,
/// V = Σᵢ λᵢ (log λᵢ)² + Σᵢⱼ λᵢ (log λ′ⱼ)² |c_ij|²
///     − 2 Σᵢⱼ λᵢ log λᵢ log λ′ⱼ |c_ij|² − D².
pub fn qre(
    rho: &ReducedDensity,
    sigma: &ReducedDensity,
    options: &QreOptions,
) -> Result<QreResult, EntropyError> {
    if rho.step != sigma.step {
        return Err(EntropyError::StepMismatch { rho: rho.step, sigma: sigma.step });
    }

    let sigma_matrix = match options.smoothing {
        Some(eps) => {
            let smoothed = sigma
                .matrix
                .entries()
                .scale(C64::new(1.0 - eps, 0.0))
                .add(&Mat4::identity().scale(C64::new(eps / 4.0, 0.0)));
            HermitianMatrix4::new_unchecked(smoothed)
        }
        None => sigma.matrix,
    };

    let dr = eig_hermitian(&rho.matrix);
    let ds = eig_hermitian(&sigma_matrix);

    // c_ij = ⟨Φᵢ|Φ′ⱼ⟩ = (V† V′)_ij.
    let c = dr.vectors.adjoint().mul(&ds.vectors);
    let mut overlap = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            overlap[i][j] = c.0[i][j].norm_sqr();
        }
    }

    let supp_rho: Vec<usize> = support_indices(&dr, options.zero_tol);
    let supp_sigma: Vec<usize> = support_indices(&ds, options.zero_tol);

    // Mass of ρ outside supp σ: Σ_{i∈supp ρ} λᵢ (1 − Σ_{j∈supp σ} |c_ij|²).
    let mut escaped = 0.0;
    for &i in &supp_rho {
        let inside: f64 = supp_sigma.iter().map(|&j| overlap[i][j]).sum();
        escaped += dr.eigenvalues[i] * (1.0 - inside);
    }
    if escaped > options.support_tol {
        return Ok(QreResult {
            d: f64::INFINITY,
            v: f64::NAN,
            overlap,
            support_violation: true,
        });
    }

    let mut d = 0.0;
    let mut v = 0.0;
    for &i in &supp_rho {
        let li = dr.eigenvalues[i];
        let log_li = li.ln();
        d += li * log_li;
        v += li * log_li * log_li;
        for &j in &supp_sigma {
            let log_lj = ds.eigenvalues[j].ln();
            let w = li * overlap[i][j];
            d -= w * log_lj;
            v += w * log_lj * log_lj;
            v -= 2.0 * w * log_li * log_lj;
        }
    }
    v -= d * d;

    Ok(QreResult { d, v, overlap, support_violation: false })
}

fn support_indices(d: &EigenDecomposition, zero_tol: f64) -> Vec<usize> {
    (0..4).filter(|&i| d.eigenvalues[i] > zero_tol).collect()
}

/// All per-step series of the SDC-vs-SIC lockstep comparison.
///
/// The Shannon and entanglement series cover t = 0..=steps; the D/V series
/// start at t = 1 (the states coincide before the first distinct coin) and
/// omit support-violating steps, which are recorded in `support_violations`
/// instead (a TimeSeries point must be finite). Steps where V ≈ 0 while D is
/// clearly nonzero are surfaced in `zero_variance_events` — reported, not
/// interpreted.
#[derive(Clone, Debug)]
pub struct EntropySeries {
    pub sp_sdc: TimeSeries,
    pub sp_sic: TimeSeries,
    pub sc_sdc: TimeSeries,
    pub sc_sic: TimeSeries,
    pub ent_sdc: TimeSeries,
    pub ent_sic: TimeSeries,
    pub qre_d: TimeSeries,
    pub qre_v: TimeSeries,
    pub support_violations: Vec<u64>,
    pub zero_variance_events: Vec<u64>,
}

/// Run the SDC and SIC walks in lockstep from the same initial state and
/// collect S_P, S_C, E for both walks plus D(ρ_SDC‖σ_SIC) and V per step.
/// The mode field of `params` is ignored: both walks always run.
pub fn entropy_series(
    params: &CoinParams,
    init: &InitialState,
    steps: u64,
    qre_options: &QreOptions,
    evolve_options: &EvolveOptions,
) -> Result<EntropySeries, EntropyError> {
    let sdc_params = params.with_mode(CoinMode::Sdc);
    let sic_params = params.with_mode(CoinMode::Sic);

    let mut series = EntropySeries {
        sp_sdc: TimeSeries::new("sdc:sp"),
        sp_sic: TimeSeries::new("sic:sp"),
        sc_sdc: TimeSeries::new("sdc:sc"),
        sc_sic: TimeSeries::new("sic:sc"),
        ent_sdc: TimeSeries::new("sdc:entanglement"),
        ent_sic: TimeSeries::new("sic:entanglement"),
        qre_d: TimeSeries::new("qre:d"),
        qre_v: TimeSeries::new("qre:v"),
        support_violations: Vec::new(),
        zero_variance_events: Vec::new(),
    };

    let mut sdc = Wavefunction::from_initial(init);
    let mut sic = sdc.clone();

    for t in 0..=steps {
        if t > 0 {
            sdc = step(&sdc, &sdc_params);
            sic = step(&sic, &sic_params);
            for psi in [&sdc, &sic] {
                if psi.site_count() > evolve_options.site_budget {
                    return Err(WalkError::SiteBudgetExceeded {
                        step: t,
                        sites: psi.site_count(),
                        budget: evolve_options.site_budget,
                    }
                    .into());
                }
            }
        }

        let field_sdc = probability_field(&sdc);
        let field_sic = probability_field(&sic);
        series.sp_sdc.push(t, shannon_position(&field_sdc));
        series.sp_sic.push(t, shannon_position(&field_sic));
        series.sc_sdc.push(t, shannon_coin(&sdc));
        series.sc_sic.push(t, shannon_coin(&sic));

        let rho = reduced_density(&sdc);
        let sigma = reduced_density(&sic);
        series.ent_sdc.push(t, entanglement(&rho));
        series.ent_sic.push(t, entanglement(&sigma));

        if t >= 1 {
            let q = qre(&rho, &sigma, qre_options)?;
            if q.support_violation {
                series.support_violations.push(t);
            } else {
                series.qre_d.push(t, q.d);
                series.qre_v.push(t, q.v);
                if q.v.abs() <= 1e-9 && q.d > 1e-6 {
                    series.zero_variance_events.push(t);
                }
            }
        }
    }

    Ok(series)
}
