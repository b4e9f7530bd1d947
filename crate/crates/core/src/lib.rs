//! Simulator for a two-dimensional discrete-time quantum walk driven by a
//! step-dependent coin (SDC), with the step-independent coin (SIC) walk as the
//! built-in reference, plus the full localization-diagnostics toolbox:
//!
//! - sparse lattice evolution of the 4-component walker ([`walk`]),
//! - probability-space observables: support, return probability, Shannon
//!   entropies ([`observables`]),
//! - coin-space entropy measures: entanglement entropy, quantum relative
//!   entropy and its variance between the SDC and SIC walks ([`entropy`]),
//! - a fixed-size complex Hermitian eigensolver backing the entropy measures
//!   ([`spectral`]),
//! - transfer-matrix localization analysis: Lyapunov exponents, localization
//!   lengths, the frequency sweep, and the analytic localization-length
//!   formula ([`localization`]),
//! - a reproducible experiment harness with CSV/JSON/SVG emission
//!   ([`config`], [`experiments`]).
//!
//! The walker lives on the integer lattice (m, n) with a 4-dimensional coin.
//! One step applies the coin matrix `C_t` (angles scaled by the step number
//! for SDC, frozen at the first step for SIC) and then the conditional shift
//! that moves the four components along the diagonals ±(1,1) and ±(1,−1).
//!
//! ```
//! use qwalk2d::coin::{CoinMode, CoinParams};
//! use qwalk2d::walk::{evolve_final, EvolveOptions, InitialState};
//! use qwalk2d::observables::{probability_field, support_count};
//!
//! let params = CoinParams::symmetric_pi_frac(1, 4, CoinMode::Sdc).unwrap();
//! let psi = evolve_final(&InitialState::default(), &params, 8, &EvolveOptions::default()).unwrap();
//! let field = probability_field(&psi);
//! // At step 8 the quarter-angle SDC walk has collapsed back onto the origin.
//! assert_eq!(support_count(&field, 1e-12), 1);
//! ```

pub mod angle;
pub mod coin;
pub mod config;
pub mod entropy;
pub mod experiments;
pub mod localization;
pub mod mat4;
pub mod observables;
pub mod plot;
pub mod spectral;
pub mod walk;
