use serde::{Deserialize, Serialize};

use super::{DegreeDistribution, DistKind, DistParams};
use crate::error::{Error, Result};

/// Derived Robust Soliton constants for one `(k, c, delta)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsdMeta {
    pub k: usize,
    pub c: f64,
    pub delta: f64,
    /// `R = c·ln(k/δ)·√k`.
    pub r: f64,
    /// `round(k/R)` clamped to `[2, k]`.
    pub spike_index: usize,
    /// Normalizer `Σ(ρ(i) + Γ(i))`.
    pub beta: f64,
    /// Unnormalized degree-1 weight of the spike-free distribution.
    pub beta_prime: f64,
    /// Unnormalized weight of degrees `2..=k` of the spike-free distribution.
    pub beta_double_prime: f64,
}

impl RsdMeta {
    /// Unrounded `k/R`.
    pub fn k_over_r(&self) -> f64 {
        self.k as f64 / self.r
    }

    /// Spike weight `R·ln(R/δ)/k` before normalization.
    pub fn spike_weight(&self) -> f64 {
        self.r * (self.r / self.delta).ln() / self.k as f64
    }

    /// `ρ(i) + Γ(i)` for `i = 1..=k`, unnormalized.
    pub fn raw_weights(&self) -> Vec<f64> {
        let k = self.k;
        let kf = k as f64;
        (1..=k)
            .map(|i| {
                let rho = if i == 1 {
                    1.0 / kf
                } else {
                    1.0 / (i as f64 * (i - 1) as f64)
                };
                let gamma = if i < self.spike_index {
                    self.r / (i as f64 * kf)
                } else if i == self.spike_index {
                    self.spike_weight()
                } else {
                    0.0
                };
                rho + gamma
            })
            .collect()
    }

    pub(crate) fn dist_params(&self, sigma: Option<f64>) -> DistParams {
        DistParams {
            k: self.k,
            c: Some(self.c),
            delta: Some(self.delta),
            sigma,
            s: None,
        }
    }
}

/// Fraction of the spike mass moved onto degree 1, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Sigma(f64);

impl Sigma {
    /// The full spike removal, which minimizes the asymptotic BER.
    pub const ONE: Sigma = Sigma(1.0);

    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma <= 1.0 {
            Ok(Sigma(sigma))
        } else {
            Err(Error::param(format!(
                "sigma must lie in (0, 1], got {sigma}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Sigma {
    fn default() -> Self {
        Sigma::ONE
    }
}

/// Ideal Soliton: `ρ(1) = 1/k`, `ρ(i) = 1/(i(i−1))`.
pub fn ideal_soliton(k: usize) -> Result<DegreeDistribution> {
    if k < 2 {
        return Err(Error::param(format!("ideal soliton needs k >= 2, got {k}")));
    }
    let kf = k as f64;
    let mass = (1..=k)
        .map(|i| {
            if i == 1 {
                1.0 / kf
            } else {
                1.0 / (i as f64 * (i - 1) as f64)
            }
        })
        .collect();
    DegreeDistribution::new(mass, DistKind::IdealSoliton, DistParams::block(k))
}

fn check_rsd_params(k: usize, c: f64, delta: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::param(format!("k must be >= 2, got {k}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::param(format!("c must be positive, got {c}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

pub fn rsd_meta(k: usize, c: f64, delta: f64) -> Result<RsdMeta> {
    check_rsd_params(k, c, delta)?;
    let kf = k as f64;
    let r = c * (kf / delta).ln() * kf.sqrt();
    if r / delta < 1.0 {
        return Err(Error::param(format!(
            "R/delta = {} < 1 makes the spike weight negative (increase c)",
            r / delta
        )));
    }
    let spike_index = ((kf / r).round() as usize).clamp(2, k);
    let mut meta = RsdMeta {
        k,
        c,
        delta,
        r,
        spike_index,
        beta: 0.0,
        beta_prime: 0.0,
        beta_double_prime: 0.0,
    };
    let raw = meta.raw_weights();
    meta.beta = raw.iter().sum();
    // spike-free variant: the spike weight moves to degree 1
    meta.beta_prime = raw[0] + raw[spike_index - 1];
    meta.beta_double_prime = raw
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(i, _)| i + 1 != spike_index)
        .map(|(_, w)| w)
        .sum();
    Ok(meta)
}

/// Robust Soliton `u(i) = (ρ(i) + Γ(i))/β`.
pub fn robust_soliton(k: usize, c: f64, delta: f64) -> Result<DegreeDistribution> {
    let meta = rsd_meta(k, c, delta)?;
    Ok(robust_soliton_from_meta(&meta))
}

pub(crate) fn robust_soliton_from_meta(meta: &RsdMeta) -> DegreeDistribution {
    let mass = meta
        .raw_weights()
        .into_iter()
        .map(|w| w / meta.beta)
        .collect();
    DegreeDistribution::new(mass, DistKind::RobustSoliton, meta.dist_params(None))
        .expect("robust soliton is a valid distribution")
}

/// Robust Soliton with `σ` of the spike mass moved onto degree 1.
///
/// `σ = 1` removes the spike entirely; the result keeps the RSD normalizer.
pub fn improved_distribution(
    k: usize,
    c: f64,
    delta: f64,
    sigma: Sigma,
) -> Result<DegreeDistribution> {
    let meta = rsd_meta(k, c, delta)?;
    Ok(improved_from_meta(&meta, sigma))
}

pub(crate) fn improved_from_meta(meta: &RsdMeta, sigma: Sigma) -> DegreeDistribution {
    let rsd = robust_soliton_from_meta(meta);
    let mut mass = rsd.masses().to_vec();
    let spike = meta.spike_index - 1;
    let moved = sigma.get() * mass[spike];
    mass[0] += moved;
    mass[spike] = if sigma == Sigma::ONE {
        0.0
    } else {
        (1.0 - sigma.get()) * mass[spike]
    };
    DegreeDistribution::new(
        mass,
        DistKind::Improved,
        meta.dist_params(Some(sigma.get())),
    )
    .expect("improved distribution is a valid distribution")
}
