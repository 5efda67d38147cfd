//! Two-source relaying for distributed LT codes.
//!
//! Source 1 owns indices `[0, k/2)` and source 2 owns `[k/2, k)`. For each
//! symbol slot the relay either forwards one of the two source symbols
//! (probability `λ`, fair coin between them) or forwards their XOR.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{encode, erase, peel_decode, DecodeResult, EncodedSymbol, SourceBlock};
use crate::config::Tolerances;
use crate::distributions::{convolve, mixture, DegreeDistribution, DlltDesign};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    /// Probability of forwarding a single source symbol instead of the XOR.
    pub lambda: f64,
    /// UEP factor `s`; 0 gives plain DLLT.
    pub uep_factor: f64,
    /// Symbols per source.
    pub n: usize,
    /// Erasure probability on the relay-to-destination link.
    pub epsilon: f64,
}

impl RelayConfig {
    pub fn new(lambda: f64, uep_factor: f64, n: usize) -> Self {
        RelayConfig {
            lambda,
            uep_factor,
            n,
            epsilon: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.uep_factor >= 0.0) {
            return Err(Error::param(format!(
                "uep factor must be >= 0, got {}",
                self.uep_factor
            )));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::param(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl Default for RelayConfig {
    fn default() -> Self {
        RelayConfig::new(0.5, 0.0, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Forwarded1,
    Forwarded2,
    Xored,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayOutputSymbol {
    pub symbol: EncodedSymbol,
    pub origin: Origin,
}

/// Combines the `i`-th symbols of both sources slot by slot.
pub fn relay_combine<R: Rng + ?Sized>(
    e1: Vec<EncodedSymbol>,
    e2: Vec<EncodedSymbol>,
    cfg: &RelayConfig,
    rng: &mut R,
) -> Result<Vec<RelayOutputSymbol>> {
    cfg.validate()?;
    if e1.len() != cfg.n || e2.len() != cfg.n {
        return Err(Error::input(format!(
            "relay expects {} symbols per source, got {} and {}",
            cfg.n,
            e1.len(),
            e2.len()
        )));
    }
    Ok(e1
        .into_iter()
        .zip(e2)
        .map(|(a, b)| {
            if rng.gen::<f64>() < cfg.lambda {
                if rng.gen::<bool>() {
                    RelayOutputSymbol {
                        symbol: a,
                        origin: Origin::Forwarded1,
                    }
                } else {
                    RelayOutputSymbol {
                        symbol: b,
                        origin: Origin::Forwarded2,
                    }
                }
            } else {
                RelayOutputSymbol {
                    symbol: a.combine(&b),
                    origin: Origin::Xored,
                }
            }
        })
        .collect())
}

/// Degree law seen at the destination:
/// `λ·(p₁ + p₂)/2 + (1 − λ)·(p₁ ⊛ p₂)`.
pub fn relay_degree_law(
    p1: &DegreeDistribution,
    p2: &DegreeDistribution,
    lambda: f64,
) -> Result<DegreeDistribution> {
    let conv = convolve(p1, p2);
    mixture(&[
        (0.5 * lambda, p1),
        (0.5 * lambda, p2),
        (1.0 - lambda, &conv),
    ])
}

/// Total-variation distance between the relay degree law and `target` for
/// each `λ` in `lambdas`.
pub fn lambda_tv_grid(
    p: &DegreeDistribution,
    target: &DegreeDistribution,
    lambdas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    lambdas
        .iter()
        .map(|&l| Ok((l, relay_degree_law(p, p, l)?.tv_distance(target))))
        .collect()
}

/// Destination-side outcome with the per-source split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayDecode {
    pub result: DecodeResult,
    /// Unrecovered symbols of source 1 (the MIB source under UEP).
    pub mib_errors: usize,
    /// Unrecovered symbols of source 2.
    pub lib_errors: usize,
}

/// Source distributions for a DLLT or UEP-DLLT run, computed once.
#[derive(Debug, Clone)]
pub struct DlltScheme {
    pub k: usize,
    pub source1: DegreeDistribution,
    pub source2: DegreeDistribution,
}

impl DlltScheme {
    /// Plain DLLT when `uep_factor == 0`, otherwise source 1 gets the MIB
    /// distribution and source 2 the LIB distribution.
    pub fn new(k: usize, c: f64, delta: f64, uep_factor: f64, tol: &Tolerances) -> Result<Self> {
        if k < 4 || !k.is_multiple_of(2) {
            return Err(Error::param(format!("DLLT needs an even k >= 4, got {k}")));
        }
        let design = DlltDesign::new(k, c, delta, tol)?;
        let (source1, source2) = if uep_factor == 0.0 {
            let p = design.source()?;
            (p.clone(), p)
        } else {
            let pair = design.uep(uep_factor)?;
            (pair.mib, pair.lib)
        };
        Ok(DlltScheme {
            k,
            source1,
            source2,
        })
    }

    pub fn half(&self) -> usize {
        self.k / 2
    }

    /// Encodes two fresh half-blocks, relays and decodes at the destination.
    pub fn run_trial<R: Rng + ?Sized>(
        &self,
        cfg: &RelayConfig,
        rng: &mut R,
    ) -> Result<RelayDecode> {
        let half = self.half();
        let b1 = SourceBlock::random(half, 1, rng)?;
        let b2 = SourceBlock::random(half, 1, rng)?;
        let e1 = encode(&b1, &self.source1, cfg.n, rng);
        let e2: Vec<_> = encode(&b2, &self.source2, cfg.n, rng)
            .into_iter()
            .map(|s| s.shifted(half))
            .collect();
        let relayed: Vec<EncodedSymbol> = relay_combine(e1, e2, cfg, rng)?
            .into_iter()
            .map(|o| o.symbol)
            .collect();
        let received = erase(relayed, cfg.epsilon, rng)?;
        let result = peel_decode(&received, self.k)?;
        debug_assert!(result.payloads.iter().enumerate().all(|(i, p)| match p {
            Some(v) =>
                v.as_slice()
                    == if i < half {
                        b1.symbol(i)
                    } else {
                        b2.symbol(i - half)
                    },
            None => true,
        }));
        Ok(RelayDecode {
            mib_errors: result.errors_in(0..half),
            lib_errors: result.errors_in(half..self.k),
            result,
        })
    }
}

/// One full DLLT (or UEP-DLLT) transmission.
pub fn run_dllt_roundtrip<R: Rng + ?Sized>(
    k: usize,
    c: f64,
    delta: f64,
    cfg: &RelayConfig,
    rng: &mut R,
) -> Result<RelayDecode> {
    cfg.validate()?;
    DlltScheme::new(k, c, delta, cfg.uep_factor, &Tolerances::DEFAULT)?.run_trial(cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{improved_distribution, source_distribution_dllt, Sigma};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn syms(k_half: usize, n: usize, offset: usize, seed: u64) -> Vec<EncodedSymbol> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = SourceBlock::random(k_half, 1, &mut rng).unwrap();
        let d = crate::distributions::ideal_soliton(k_half).unwrap();
        encode(&b, &d, n, &mut rng)
            .into_iter()
            .map(|s| s.shifted(offset))
            .collect()
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = RelayConfig::new(0.5, 0.0, 10);
        let r = relay_combine(syms(8, 10, 0, 1), syms(8, 9, 8, 2), &cfg, &mut rng);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn lambda_zero_always_xors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = RelayConfig::new(0.0, 0.0, 200);
        let e1 = syms(8, 200, 0, 4);
        let e2 = syms(8, 200, 8, 5);
        let degs: Vec<usize> = e1
            .iter()
            .zip(&e2)
            .map(|(a, b)| a.degree() + b.degree())
            .collect();
        let out = relay_combine(e1, e2, &cfg, &mut rng).unwrap();
        for (o, d) in out.iter().zip(degs) {
            assert_eq!(o.origin, Origin::Xored);
            assert_eq!(o.symbol.degree(), d);
            assert!(o.symbol.neighbors.iter().any(|&i| i < 8));
            assert!(o.symbol.neighbors.iter().any(|&i| i >= 8));
        }
    }

    #[test]
    fn lambda_one_forwards_fair_coin() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let cfg = RelayConfig::new(1.0, 0.0, n);
        let e1 = syms(4, n, 0, 7);
        let e2 = syms(4, n, 4, 8);
        let out = relay_combine(e1, e2, &cfg, &mut rng).unwrap();
        let ones = out
            .iter()
            .filter(|o| o.origin == Origin::Forwarded1)
            .count();
        assert!(out.iter().all(|o| o.origin != Origin::Xored));
        // 4σ band around n/2
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() < 4.0 * sd);
        for o in &out {
            let lo = o.symbol.neighbors.iter().all(|&i| i < 4);
            let hi = o.symbol.neighbors.iter().all(|&i| i >= 4);
            assert!(match o.origin {
                Origin::Forwarded1 => lo,
                Origin::Forwarded2 => hi,
                Origin::Xored => false,
            });
        }
    }

    #[test]
    fn relay_law_is_a_distribution() {
        let p = source_distribution_dllt(400, 0.15, 0.2).unwrap();
        let law = relay_degree_law(&p, &p, 0.5).unwrap();
        assert!((law.masses().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let target = improved_distribution(400, 0.15, 0.2, Sigma::ONE).unwrap();
        let grid = lambda_tv_grid(&p, &target, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(grid.len(), 3);
        assert!(grid.iter().all(|(_, tv)| (0.0..=1.0).contains(tv)));
    }

    #[test]
    fn odd_k_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = RelayConfig::new(0.5, 0.0, 10);
        assert!(run_dllt_roundtrip(401, 0.15, 0.2, &cfg, &mut rng).is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        assert!(
            run_dllt_roundtrip(400, 0.15, 0.2, &RelayConfig::new(1.5, 0.0, 10), &mut rng).is_err()
        );
        assert!(
            run_dllt_roundtrip(400, 0.15, 0.2, &RelayConfig::new(0.5, 0.5, 10), &mut rng).is_err()
        );
    }

    #[test]
    fn roundtrip_splits_errors_by_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = RelayConfig::new(0.5, 0.05, 300);
        let r = run_dllt_roundtrip(400, 0.15, 0.2, &cfg, &mut rng).unwrap();
        assert_eq!(r.mib_errors + r.lib_errors, r.result.bit_errors);
        assert_eq!(r.result.recovered.len(), 400);
    }
}
