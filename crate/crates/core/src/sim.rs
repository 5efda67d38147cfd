//! Seeded Monte Carlo sweeps of BER/FER against overhead.
//!
//! Every trial draws its randomness from its own stream, seeded by
//! [`derive_trial_seed`] from the master seed, the grid index and the trial
//! index. Trials run in parallel and are reduced in index order, so results
//! do not depend on thread count or scheduling.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{checksum_symbol, encode, erase, peel_decode, EncodedSymbol, SourceBlock};
use crate::config::{Tolerances, DEFAULT_C, DEFAULT_DELTA};
use crate::distributions::{
    comparator_w1, comparator_w2, improved_distribution, robust_soliton, DegreeDistribution, Sigma,
};
use crate::error::{Error, Result};
use crate::relay::{DlltScheme, RelayConfig};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "rsd")]
    Rsd,
    #[serde(rename = "improved")]
    Improved,
    #[serde(rename = "w1")]
    W1,
    #[serde(rename = "w2")]
    W2,
    #[serde(rename = "improved+checksum")]
    ImprovedChecksum,
    #[serde(rename = "dllt")]
    Dllt,
    #[serde(rename = "uep-dllt")]
    UepDllt,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Rsd,
        Scheme::Improved,
        Scheme::W1,
        Scheme::W2,
        Scheme::ImprovedChecksum,
        Scheme::Dllt,
        Scheme::UepDllt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Rsd => "rsd",
            Scheme::Improved => "improved",
            Scheme::W1 => "w1",
            Scheme::W2 => "w2",
            Scheme::ImprovedChecksum => "improved+checksum",
            Scheme::Dllt => "dllt",
            Scheme::UepDllt => "uep-dllt",
        }
    }

    pub fn is_relay(self) -> bool {
        matches!(self, Scheme::Dllt | Scheme::UepDllt)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k: usize,
    pub c: f64,
    pub delta: f64,
    pub sigma: f64,
    pub scheme: Scheme,
    pub gamma_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Erasure probability of the channel to the decoder.
    pub epsilon: f64,
    pub checksum_copies: usize,
    pub relay: Option<RelayConfig>,
}

impl SimConfig {
    pub fn new(scheme: Scheme, k: usize) -> Self {
        SimConfig {
            k,
            c: DEFAULT_C,
            delta: DEFAULT_DELTA,
            sigma: 1.0,
            scheme,
            gamma_grid: default_gamma_grid(),
            trials: 1000,
            master_seed: 0,
            epsilon: 0.0,
            checksum_copies: 2,
            relay: scheme.is_relay().then(RelayConfig::default),
        }
    }

    /// `round(k·(1+γ))`.
    pub fn symbols_for(&self, gamma: f64) -> usize {
        (self.k as f64 * (1.0 + gamma)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be >= 1"));
        }
        if self.gamma_grid.is_empty() {
            return Err(Error::config("gamma grid is empty"));
        }
        if let Some(g) = self
            .gamma_grid
            .iter()
            .find(|g| !(**g >= -1.0) || !g.is_finite())
        {
            return Err(Error::config(format!("gamma must be >= -1, got {g}")));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::config(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        Sigma::new(self.sigma).map_err(|e| Error::config(e.to_string()))?;
        Ok(())
    }
}

/// `0, 0.05, …, 0.5`.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 20.0).collect()
}

/// Wilson score interval for `successes` out of `n` at 95%.
pub fn wilson_interval(successes: f64, n: f64) -> (f64, f64) {
    if n <= 0.0 {
        return (0.0, 1.0);
    }
    let p = successes / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes <= 0.0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes >= n {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Wilson interval for a mean of per-trial fractions, using the effective
/// sample size implied by the between-trial variance (symbols within one
/// frame are not independent).
fn clustered_wilson(per_trial: &[f64], symbols_per_trial: usize) -> (f64, f64, f64) {
    let t = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / t;
    let max_n = t * symbols_per_trial as f64;
    let n_eff = if per_trial.len() < 2 || mean <= 0.0 || mean >= 1.0 {
        max_n
    } else {
        let var = per_trial.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
        let var_mean = var / t;
        if var_mean <= 0.0 {
            max_n
        } else {
            (mean * (1.0 - mean) / var_mean).clamp(1.0, max_n)
        }
    };
    let (lo, hi) = wilson_interval(mean * n_eff, n_eff);
    (mean, lo.min(mean), hi.max(mean))
}

/// Per-trial stream seed: an iterated SplitMix64 avalanche over
/// `master` followed by each label in order.
pub fn derive_trial_seed(master: u64, stream_labels: &[u64]) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    stream_labels
        .iter()
        .fold(mix(master ^ GOLDEN), |h, &label| {
            mix(h.rotate_left(23) ^ mix(label.wrapping_add(GOLDEN)))
        })
}

/// Aggregated statistics at one overhead point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub gamma: f64,
    pub n: usize,
    pub trials: usize,
    pub ber: f64,
    pub ber_lo: f64,
    pub ber_hi: f64,
    pub fer: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    /// Relay runs only: BER of source 1 (MIB) and source 2 (LIB).
    pub ber_mib: Option<f64>,
    pub ber_lib: Option<f64>,
    /// Trials in which at least one checksum symbol survived the channel.
    pub checksum_received: Option<usize>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl GammaPoint {
    /// `1 − BER` of source 1.
    pub fn mib_success(&self) -> Option<f64> {
        self.ber_mib.map(|b| 1.0 - b)
    }

    pub fn lib_success(&self) -> Option<f64> {
        self.ber_lib.map(|b| 1.0 - b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub points: Vec<GammaPoint>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SimResult {
    pub const CSV_HEADER: &'static str =
        "scheme,k,c,delta,sigma,lambda,s,gamma,n,trials,ber,ber_lo,ber_hi,fer,fer_lo,fer_hi,ber_mib,ber_lib";
    pub const RELAY_CSV_HEADER: &'static str = "gamma,ber_all,ber_mib,ber_lib,fer,trials";

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let lambda = opt(c.relay.map(|r| r.lambda));
        let s = opt(c.relay.map(|r| r.uep_factor));
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                c.scheme,
                c.k,
                c.c,
                c.delta,
                c.sigma,
                lambda,
                s,
                p.gamma,
                p.n,
                p.trials,
                p.ber,
                p.ber_lo,
                p.ber_hi,
                p.fer,
                p.fer_lo,
                p.fer_hi,
                opt(p.ber_mib),
                opt(p.ber_lib)
            ));
        }
        out
    }

    pub fn to_relay_csv(&self) -> String {
        let mut out = String::from(Self::RELAY_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.gamma,
                p.ber,
                opt(p.ber_mib),
                opt(p.ber_lib),
                p.fer,
                p.trials
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sim result serializes")
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialOutcome {
    errors: usize,
    mib_errors: usize,
    lib_errors: usize,
    checksum_received: bool,
}

fn trial_rng(cfg: &SimConfig, gamma_index: usize, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_trial_seed(
        cfg.master_seed,
        &[gamma_index as u64, trial as u64],
    ))
}

fn sweep<F>(cfg: &SimConfig, split: bool, run: F) -> Result<SimResult>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<TrialOutcome> + Sync,
{
    let k = cfg.k;
    let mut points = Vec::with_capacity(cfg.gamma_grid.len());
    for (gi, &gamma) in cfg.gamma_grid.iter().enumerate() {
        let n = cfg.symbols_for(gamma);
        let start = Instant::now();
        let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run(n, &mut trial_rng(cfg, gi, t)))
            .collect::<Result<_>>()?;

        let per_trial: Vec<f64> = outcomes
            .iter()
            .map(|o| o.errors as f64 / k as f64)
            .collect();
        let (ber, ber_lo, ber_hi) = clustered_wilson(&per_trial, k);
        let frame_errors = outcomes.iter().filter(|o| o.errors > 0).count();
        let t = cfg.trials as f64;
        let (fer_lo, fer_hi) = wilson_interval(frame_errors as f64, t);
        let (ber_mib, ber_lib) = if split {
            let half = (k / 2) as f64;
            let mib: usize = outcomes.iter().map(|o| o.mib_errors).sum();
            let lib: usize = outcomes.iter().map(|o| o.lib_errors).sum();
            (Some(mib as f64 / (half * t)), Some(lib as f64 / (half * t)))
        } else {
            (None, None)
        };
        let checksum_received = (cfg.scheme == Scheme::ImprovedChecksum)
            .then(|| outcomes.iter().filter(|o| o.checksum_received).count());
        points.push(GammaPoint {
            gamma,
            n,
            trials: cfg.trials,
            ber,
            ber_lo,
            ber_hi,
            fer: frame_errors as f64 / t,
            fer_lo,
            fer_hi,
            ber_mib,
            ber_lib,
            checksum_received,
            elapsed: start.elapsed(),
        });
    }
    Ok(SimResult {
        config: cfg.clone(),
        points,
    })
}

/// The point-to-point distribution for `scheme`.
pub fn scheme_distribution(cfg: &SimConfig) -> Result<DegreeDistribution> {
    let sigma = Sigma::new(cfg.sigma)?;
    match cfg.scheme {
        Scheme::Rsd => robust_soliton(cfg.k, cfg.c, cfg.delta),
        Scheme::Improved | Scheme::ImprovedChecksum => {
            improved_distribution(cfg.k, cfg.c, cfg.delta, sigma)
        }
        Scheme::W1 => Ok(comparator_w1()),
        Scheme::W2 => Ok(comparator_w2()),
        Scheme::Dllt | Scheme::UepDllt => Err(Error::config(format!(
            "scheme {} has no single point-to-point distribution",
            cfg.scheme
        ))),
    }
}

fn p2p_trial(
    k: usize,
    dist: &DegreeDistribution,
    n_regular: usize,
    checksums: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome> {
    let block = SourceBlock::random(k, 1, rng)?;
    let mut symbols = encode(&block, dist, n_regular, rng);
    if checksums > 0 {
        let s_m = checksum_symbol(&block);
        symbols.extend(std::iter::repeat_n(s_m, checksums));
    }
    let received: Vec<EncodedSymbol> = erase(symbols, epsilon, rng)?;
    let checksum_received = received
        .iter()
        .any(|s| s.kind == crate::codec::SymbolKind::Checksum);
    let res = peel_decode(&received, k)?;
    Ok(TrialOutcome {
        errors: res.bit_errors,
        checksum_received,
        ..Default::default()
    })
}

/// Plain LT over the erasure channel with one of the four point-to-point
/// distributions.
pub fn run_p2p(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    if !matches!(
        cfg.scheme,
        Scheme::Rsd | Scheme::Improved | Scheme::W1 | Scheme::W2
    ) {
        return Err(Error::config(format!(
            "run_p2p does not handle scheme {}",
            cfg.scheme
        )));
    }
    let dist = scheme_distribution(cfg).map_err(|e| Error::config(e.to_string()))?;
    sweep(cfg, false, |n, rng| {
        p2p_trial(cfg.k, &dist, n, 0, cfg.epsilon, rng)
    })
}

/// Improved distribution with `checksum_copies` of the all-source checksum
/// taking the last slots of each `n`-symbol transmission.
pub fn run_checksum_scheme(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    if cfg.scheme != Scheme::ImprovedChecksum {
        return Err(Error::config(format!(
            "run_checksum_scheme needs scheme improved+checksum, got {}",
            cfg.scheme
        )));
    }
    if cfg.checksum_copies == 0 {
        return Err(Error::config("checksum_copies must be >= 1"));
    }
    if let Some(&g) = cfg
        .gamma_grid
        .iter()
        .find(|&&g| cfg.symbols_for(g) <= cfg.checksum_copies)
    {
        return Err(Error::config(format!(
            "checksum_copies = {} leaves no regular symbols at gamma = {g}",
            cfg.checksum_copies
        )));
    }
    let dist = scheme_distribution(cfg).map_err(|e| Error::config(e.to_string()))?;
    let copies = cfg.checksum_copies;
    sweep(cfg, false, |n, rng| {
        p2p_trial(cfg.k, &dist, n - copies, copies, cfg.epsilon, rng)
    })
}

/// DLLT or UEP-DLLT through the relay; `n` at each grid point is the number
/// of relay outputs (and of symbols per source).
pub fn run_relay(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let relay = cfg
        .relay
        .ok_or_else(|| Error::config("relay scheme needs a relay config"))?;
    relay.validate().map_err(|e| Error::config(e.to_string()))?;
    match cfg.scheme {
        Scheme::Dllt if relay.uep_factor != 0.0 => {
            return Err(Error::config("dllt runs with uep factor 0; use uep-dllt"))
        }
        Scheme::UepDllt if relay.uep_factor <= 0.0 => {
            return Err(Error::config("uep-dllt needs a positive uep factor"))
        }
        Scheme::Dllt | Scheme::UepDllt => {}
        other => {
            return Err(Error::config(format!(
                "run_relay does not handle scheme {other}"
            )))
        }
    }
    let scheme = DlltScheme::new(
        cfg.k,
        cfg.c,
        cfg.delta,
        relay.uep_factor,
        &Tolerances::DEFAULT,
    )
    .map_err(|e| Error::config(e.to_string()))?;
    sweep(cfg, true, |n, rng| {
        let run_cfg = RelayConfig {
            n,
            epsilon: cfg.epsilon.max(relay.epsilon),
            ..relay
        };
        let out = scheme.run_trial(&run_cfg, rng)?;
        Ok(TrialOutcome {
            errors: out.result.bit_errors,
            mib_errors: out.mib_errors,
            lib_errors: out.lib_errors,
            checksum_received: false,
        })
    })
}

/// Dispatches on `cfg.scheme`.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    match cfg.scheme {
        Scheme::Rsd | Scheme::Improved | Scheme::W1 | Scheme::W2 => run_p2p(cfg),
        Scheme::ImprovedChecksum => run_checksum_scheme(cfg),
        Scheme::Dllt | Scheme::UepDllt => run_relay(cfg),
    }
}

/// Mean number of source symbols covered by none of `n` encoded symbols,
/// over `trials` seeded encodings.
pub fn mean_uncovered(
    k: usize,
    n: usize,
    d: &DegreeDistribution,
    trials: usize,
    master_seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::config("trials must be >= 1"));
    }
    let counts: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(master_seed, &[t as u64]));
            let block = SourceBlock::random(k, 1, &mut rng).expect("k > 0");
            let mut covered = vec![false; k];
            for s in encode(&block, d, n, &mut rng) {
                for i in s.neighbors {
                    covered[i] = true;
                }
            }
            covered.iter().filter(|c| !**c).count()
        })
        .collect();
    Ok(counts.iter().sum::<usize>() as f64 / trials as f64)
}
