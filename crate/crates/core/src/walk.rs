//! Sparse lattice states and walk evolution.
//!
//! A walker state maps occupied sites (m, n) to complex 4-vectors of coin
//! amplitudes. Step-dependent walks concentrate on few sites (complete
//! localization collapses them to one), so a sorted sparse map is the primary
//! representation; its deterministic iteration order also keeps every
//! downstream reduction and serialization bit-reproducible. A dense-grid
//! reference evolution lives in the test suite as the independent oracle.
//!
//! One step is coin-then-shift: amplitudes mix inside each site under the
//! step's coin matrix, then component i translates by its displacement
//! (+(1,1), +(1,−1), −(1,−1), −(1,1) for i = 0..3). After each full step,
//! sites whose total probability falls below 1e−30 are dropped — far below
//! any physical amplitude at this scale, but enough to keep floating-point
//! dust from inflating the support-count diagnostic.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::coin::{coin_matrix, CoinMatrix, CoinParams};
use crate::mat4::{vnorm_sqr, Vec4, C64, VEC4_ZERO};

/// Lattice site (m, n).
pub type Site = (i64, i64);

/// Per-component displacements of the shift operator.
pub const SHIFT_DISPLACEMENTS: [Site; 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Sites below this total probability are dropped after each step.
pub const PRUNE_TOL: f64 = 1e-30;

/// Errors from state construction and evolution.
#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    /// Initial spinor was not a unit vector.
    #[error("initial spinor norm {norm} is not 1 within 1e-12")]
    SpinorNotNormalized { norm: f64 },
    /// Evolution touched more sites than the configured budget allows.
    #[error("site budget exceeded at step {step}: {sites} occupied sites > budget {budget}")]
    SiteBudgetExceeded { step: u64, sites: usize, budget: usize },
}

/// Initial condition: a unit 4-spinor at one lattice site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialState {
    pub spinor: Vec4,
    pub origin: Site,
}

impl InitialState {
    /// Validating constructor: the spinor must be a unit vector within 1e−12.
    pub fn new(spinor: Vec4, origin: Site) -> Result<Self, WalkError> {
        let norm = vnorm_sqr(&spinor).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(WalkError::SpinorNotNormalized { norm });
        }
        Ok(InitialState { spinor, origin })
    }
}

impl Default for InitialState {
    /// The reference initial state (1, i, 0, 0)/√2 at the origin.
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        InitialState {
            spinor: [C64::new(r, 0.0), C64::new(0.0, r), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            origin: (0, 0),
        }
    }
}

/// A walker state at step t: sparse map from occupied sites to coin
/// amplitudes. Kept normalized (Σ|A|² = 1 within 1e−10) by evolution; when
/// the walk starts at the origin, every stored site satisfies the parity
/// m ≡ n ≡ t (mod 2) and the light-cone bound |m|, |n| ≤ t.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction {
    step: u64,
    amplitudes: BTreeMap<Site, Vec4>,
}

impl Wavefunction {
    /// Step-0 state from an initial condition.
    pub fn from_initial(init: &InitialState) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(init.origin, init.spinor);
        Wavefunction { step: 0, amplitudes }
    }

    /// The step counter t.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Number of occupied sites.
    pub fn site_count(&self) -> usize {
        self.amplitudes.len()
    }

    /// Iterate occupied sites and their amplitude 4-vectors in site order.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Vec4)> {
        self.amplitudes.iter()
    }

    /// Amplitudes at a site (zero vector if unoccupied).
    pub fn amplitude(&self, site: Site) -> Vec4 {
        self.amplitudes.get(&site).copied().unwrap_or(VEC4_ZERO)
    }

    /// Total probability Σ|A|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(vnorm_sqr).sum()
    }
}

/// Multiply every site's amplitude vector by the coin matrix. The site set is
/// unchanged and the norm is preserved (the coin is unitary).
pub fn apply_coin(psi: &Wavefunction, c: &CoinMatrix) -> Wavefunction {
    let amplitudes = psi
        .amplitudes
        .iter()
        .map(|(&site, v)| (site, c.entries.mul_vec(v)))
        .collect();
    Wavefunction { step: psi.step, amplitudes }
}

/// Translate each coin component by its displacement and advance the step
/// counter. A pure permutation of amplitudes: the norm is preserved exactly.
pub fn apply_shift(psi: &Wavefunction) -> Wavefunction {
    let mut amplitudes: BTreeMap<Site, Vec4> = BTreeMap::new();
    for (&(m, n), v) in &psi.amplitudes {
        for (i, &(dm, dn)) in SHIFT_DISPLACEMENTS.iter().enumerate() {
            let a = v[i];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            amplitudes.entry((m + dm, n + dn)).or_insert(VEC4_ZERO)[i] = a;
        }
    }
    Wavefunction { step: psi.step + 1, amplitudes }
}

/// One full walk step: coin at step t = psi.step + 1 (SIC: the frozen t = 1
/// coin), then shift, then the prune pass documented at module level.
pub fn step(psi: &Wavefunction, params: &CoinParams) -> Wavefunction {
    let c = coin_matrix(params, psi.step + 1);
    let mut next = apply_shift(&apply_coin(psi, &c));
    next.amplitudes.retain(|_, v| vnorm_sqr(v) > PRUNE_TOL);
    next
}

/// Evolution controls.
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Abort with [`WalkError::SiteBudgetExceeded`] when a state would occupy
    /// more sites than this.
    pub site_budget: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        // ~320 MB of amplitudes at 80 B/site: far above anything the
        // experiments need, low enough to fail fast on runaway requests.
        EvolveOptions { site_budget: 4_000_000 }
    }
}

/// Evolve `steps` steps and return the whole trajectory [Ψ(0), …, Ψ(steps)].
pub fn evolve(
    init: &InitialState,
    params: &CoinParams,
    steps: u64,
    options: &EvolveOptions,
) -> Result<Vec<Wavefunction>, WalkError> {
    let mut trajectory = Vec::with_capacity(steps as usize + 1);
    trajectory.push(Wavefunction::from_initial(init));
    for _ in 0..steps {
        let next = step(trajectory.last().expect("trajectory is non-empty"), params);
        check_budget(&next, options)?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Evolve `steps` steps keeping only the final state (snapshot mode).
pub fn evolve_final(
    init: &InitialState,
    params: &CoinParams,
    steps: u64,
    options: &EvolveOptions,
) -> Result<Wavefunction, WalkError> {
    let mut psi = Wavefunction::from_initial(init);
    for _ in 0..steps {
        psi = step(&psi, params);
        check_budget(&psi, options)?;
    }
    Ok(psi)
}

fn check_budget(psi: &Wavefunction, options: &EvolveOptions) -> Result<(), WalkError> {
    if psi.site_count() > options.site_budget {
        return Err(WalkError::SiteBudgetExceeded {
            step: psi.step(),
            sites: psi.site_count(),
            budget: options.site_budget,
        });
    }
    Ok(())
}
