//! Numerical tolerances and defaults shared across the crate.

use serde::{Deserialize, Serialize};

/// Default Robust Soliton constant `c` used throughout the experiments.
pub const DEFAULT_C: f64 = 0.15;
/// Default Robust Soliton failure bound `delta`.
pub const DEFAULT_DELTA: f64 = 0.2;

/// Every tolerance the crate uses, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed deviation of a distribution's total mass from 1.
    pub mass_sum: f64,
    /// Round-trip bound for `f ⊛ f` against the deconvolution target.
    pub deconv_roundtrip: f64,
    /// Most negative square-root coefficient still treated as an edge
    /// artifact rather than a spike obstruction.
    pub deconv_negative: f64,
    /// Largest `|Σf − 1|` (after clipping) that may be silently renormalized.
    pub deconv_renormalize: f64,
    /// Step tolerance of the And-Or recursion.
    pub and_or: f64,
    /// Iteration cap of the And-Or recursion.
    pub and_or_max_iters: usize,
    /// Bisection resolution for the maximal overhead threshold.
    pub gamma_search: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        mass_sum: 1e-12,
        deconv_roundtrip: 1e-9,
        deconv_negative: 8e-3,
        deconv_renormalize: 2e-2,
        and_or: 1e-10,
        and_or_max_iters: 10_000,
        gamma_search: 1e-4,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
