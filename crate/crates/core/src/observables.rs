//! Probability-space diagnostics: the probability field, support count,
//! return probability, and the Shannon entropies of the position and coin
//! marginals. All logarithms in this crate are natural, and 0·log 0 := 0.

use std::collections::BTreeMap;

use crate::mat4::vnorm_sqr;
use crate::walk::{Site, Wavefunction};

/// Default threshold above which a site counts as occupied. Exposed (rather
/// than hard-coded) because "non-zero probability" is exact-arithmetic
/// language; anything below this is floating-point dust.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-12;

/// Per-site probabilities P(t, (m,n)) = Σᵢ |A⁽ⁱ⁾|² at a fixed step.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityField {
    pub step: u64,
    values: BTreeMap<Site, f64>,
}

impl ProbabilityField {
    /// Iterate (site, probability) in site order.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, &f64)> {
        self.values.iter()
    }

    /// Probability at a site (0 if absent).
    pub fn get(&self, site: Site) -> f64 {
        self.values.get(&site).copied().unwrap_or(0.0)
    }

    /// Number of stored sites.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when no site is stored.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total probability (1 within 1e−10 for a normalized state).
    pub fn total(&self) -> f64 {
        self.values.values().sum()
    }
}

/// A labelled series of (t, value) points with t strictly increasing and all
/// values finite. Both requirements are programming invariants of the
/// producers, so `push` asserts them.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    points: Vec<(u64, f64)>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>) -> Self {
        TimeSeries { label: label.into(), points: Vec::new() }
    }

    /// Append a point; t must exceed the last t and the value must be finite.
    pub fn push(&mut self, t: u64, value: f64) {
        assert!(value.is_finite(), "series {:?}: non-finite value at t={t}", self.label);
        if let Some(&(last, _)) = self.points.last() {
            assert!(t > last, "series {:?}: t={t} not after t={last}", self.label);
        }
        self.points.push((t, value));
    }

    /// The recorded points in insertion (= time) order.
    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    /// Value at an exact step, if present.
    pub fn value_at(&self, t: u64) -> Option<f64> {
        self.points
            .binary_search_by_key(&t, |&(s, _)| s)
            .ok()
            .map(|i| self.points[i].1)
    }
}

/// Collapse a state to its per-site probabilities.
pub fn probability_field(psi: &Wavefunction) -> ProbabilityField {
    let values = psi.iter().map(|(&site, v)| (site, vnorm_sqr(v))).collect();
    ProbabilityField { step: psi.step(), values }
}

/// Number of sites with probability strictly above `threshold`.
pub fn support_count(field: &ProbabilityField, threshold: f64) -> usize {
    field.values.values().filter(|&&p| p > threshold).count()
}

/// Probability mass at `origin` (0 if the site is unoccupied).
pub fn return_probability(field: &ProbabilityField, origin: Site) -> f64 {
    field.get(origin)
}

/// Shannon entropy of the position distribution, S_P = −Σ P log P over sites
/// with P > 0. Zero for a single-site field.
pub fn shannon_position(field: &ProbabilityField) -> f64 {
    -field
        .values
        .values()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Shannon entropy of the coin marginal, S_C = −Σᵢ Pᵢ log Pᵢ with
/// Pᵢ = Σ_sites |A⁽ⁱ⁾|² and 0·log 0 := 0. Bounded by log 4.
pub fn shannon_coin(psi: &Wavefunction) -> f64 {
    let mut marginal = [0.0f64; 4];
    for (_, v) in psi.iter() {
        for i in 0..4 {
            marginal[i] += v[i].norm_sqr();
        }
    }
    -marginal
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}
