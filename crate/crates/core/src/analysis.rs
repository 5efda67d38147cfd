//! Asymptotic analysis: And-Or tree evolution and the thresholds built on it.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::distributions::{
    improved_distribution, robust_soliton, rsd_meta, DegreeDistribution, RsdMeta, Sigma,
};
use crate::error::{Error, Result};

/// The sequence `y_0 = 1, y_1, …` of the And-Or recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndOrTrace {
    pub gamma: f64,
    pub y_seq: Vec<f64>,
    pub fixed_point: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One step `y ↦ exp(−(1+γ)·Ω'(1−y))`.
pub fn and_or_step(d: &DegreeDistribution, gamma: f64, y: f64) -> f64 {
    (-(1.0 + gamma) * d.derivative_at(1.0 - y)).exp()
}

/// Iterates `step` from `y_0 = 1` until two successive values differ by less
/// than `tol` or `max_iters` steps have been taken.
pub fn iterate_from_one(
    step: impl Fn(f64) -> f64,
    gamma: f64,
    max_iters: usize,
    tol: f64,
) -> AndOrTrace {
    let mut y_seq = Vec::with_capacity(64);
    y_seq.push(1.0);
    let mut y = 1.0;
    let mut converged = false;
    for _ in 0..max_iters {
        let next = step(y);
        y_seq.push(next);
        let done = (next - y).abs() < tol;
        y = next;
        if done {
            converged = true;
            break;
        }
    }
    AndOrTrace {
        gamma,
        iterations: y_seq.len() - 1,
        fixed_point: y,
        y_seq,
        converged,
    }
}

/// Probability that a source symbol stays unrecovered, asymptotically, when
/// `n = k(1+γ)` symbols drawn from `d` are received.
pub fn and_or_fixed_point(
    d: &DegreeDistribution,
    gamma: f64,
    max_iters: usize,
    tol: f64,
) -> AndOrTrace {
    // Ω' has nonnegative coefficients, so the map is monotone on [0, 1] and
    // the sequence from y_0 = 1 can only decrease
    iterate_from_one(|y| and_or_step(d, gamma, y), gamma, max_iters, tol)
}

/// Fixed point with the default tolerances.
pub fn fixed_point(d: &DegreeDistribution, gamma: f64) -> f64 {
    let t = Tolerances::DEFAULT;
    and_or_fixed_point(d, gamma, t.and_or_max_iters, t.and_or).fixed_point
}

/// `1 − x^(1/(1−x))` for `x = k/R`.
pub fn ber_lower_bound_for_ratio(k_over_r: f64) -> Result<f64> {
    if !(k_over_r > 0.0) || (k_over_r - 1.0).abs() < 1e-12 {
        return Err(Error::param(format!(
            "k/R = {k_over_r} makes the bound's exponent singular"
        )));
    }
    Ok(1.0 - k_over_r.powf(1.0 / (1.0 - k_over_r)))
}

/// BER threshold `ŷ` above which the spike-free distribution is guaranteed to
/// beat RSD. Uses the unrounded `k/R`.
pub fn ber_lower_bound(meta: &RsdMeta) -> Result<f64> {
    ber_lower_bound_for_ratio(meta.k_over_r())
}

/// Overhead at which RSD reaches its frame-error guarantee: `(kβ − k)/k`.
pub fn gamma_r(meta: &RsdMeta) -> f64 {
    meta.beta - 1.0
}

/// Largest overhead at which the RSD And-Or fixed point is still at least
/// `ŷ`, by bisection over `[0, γ_R + 1]`.
pub fn gamma_m(k: usize, c: f64, delta: f64, search_tol: f64) -> Result<f64> {
    let meta = rsd_meta(k, c, delta)?;
    let rsd = robust_soliton(k, c, delta)?;
    let y_hat = ber_lower_bound(&meta)?;
    Ok(gamma_m_search(
        &rsd,
        y_hat,
        gamma_r(&meta) + 1.0,
        search_tol,
    ))
}

fn gamma_m_search(rsd: &DegreeDistribution, y_hat: f64, upper: f64, search_tol: f64) -> f64 {
    let above = |g: f64| fixed_point(rsd, g) >= y_hat;
    if !above(0.0) {
        return 0.0;
    }
    if above(upper) {
        return upper;
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > search_tol {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Average encoded-symbol degree `Ω'(1)`.
pub fn avg_degree(d: &DegreeDistribution) -> f64 {
    d.mean()
}

/// Reduction in average degree from removing the spike:
/// `(spike_index − 1)·u_RSD(spike_index)`.
pub fn complexity_delta(k: usize, c: f64, delta: f64) -> Result<f64> {
    let meta = rsd_meta(k, c, delta)?;
    let rsd = robust_soliton(k, c, delta)?;
    Ok((meta.spike_index - 1) as f64 * rsd.prob(meta.spike_index))
}

/// Expected number of source symbols covered by none of `n` encoded symbols:
/// `k·(1 − Ω'(1)/k)^n`.
pub fn expected_uncovered(k: usize, n: usize, d: &DegreeDistribution) -> Result<f64> {
    let kf = k as f64;
    let avg = avg_degree(d);
    if avg > kf {
        return Err(Error::param(format!(
            "average degree {avg} exceeds k = {k}"
        )));
    }
    Ok(kf * (1.0 - avg / kf).powf(n as f64))
}

/// `⌈kβ⌉`: the number of symbols at which RSD meets its frame-error bound.
pub fn full_recovery_symbols(meta: &RsdMeta) -> usize {
    (meta.k as f64 * meta.beta).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub k: usize,
    pub c: f64,
    pub delta: f64,
    pub y_hat: f64,
    pub gamma_r: f64,
    pub gamma_m: f64,
    pub delta_complexity: f64,
}

pub fn threshold_report(k: usize, c: f64, delta: f64, search_tol: f64) -> Result<ThresholdReport> {
    let meta = rsd_meta(k, c, delta)?;
    Ok(ThresholdReport {
        k,
        c,
        delta,
        y_hat: ber_lower_bound(&meta)?,
        gamma_r: gamma_r(&meta),
        gamma_m: gamma_m(k, c, delta, search_tol)?,
        delta_complexity: complexity_delta(k, c, delta)?,
    })
}

/// One line of the `analyze` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub k: usize,
    pub c: f64,
    pub delta: f64,
    pub gamma: f64,
    pub y_fixed_rsd: f64,
    pub y_fixed_improved: f64,
    pub y_hat: f64,
    pub gamma_r: f64,
    pub gamma_m: f64,
    pub delta_complexity: f64,
}

impl AnalysisRow {
    pub const CSV_HEADER: &'static str =
        "k,c,delta,gamma,y_fixed_rsd,y_fixed_improved,y_hat,gamma_R,gamma_M,delta_complexity";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.c,
            self.delta,
            self.gamma,
            self.y_fixed_rsd,
            self.y_fixed_improved,
            self.y_hat,
            self.gamma_r,
            self.gamma_m,
            self.delta_complexity
        )
    }
}

/// Rows for every `(k, γ)` pair; the improved column uses `sigma`.
pub fn analyze(
    ks: &[usize],
    c: f64,
    delta: f64,
    gammas: &[f64],
    sigma: Sigma,
    tol: &Tolerances,
) -> Result<Vec<AnalysisRow>> {
    let mut rows = Vec::with_capacity(ks.len() * gammas.len());
    for &k in ks {
        let report = threshold_report(k, c, delta, tol.gamma_search)?;
        let rsd = robust_soliton(k, c, delta)?;
        let imp = improved_distribution(k, c, delta, sigma)?;
        for &gamma in gammas {
            if gamma < 0.0 {
                return Err(Error::config(format!("gamma must be >= 0, got {gamma}")));
            }
            rows.push(AnalysisRow {
                k,
                c,
                delta,
                gamma,
                y_fixed_rsd: and_or_fixed_point(&rsd, gamma, tol.and_or_max_iters, tol.and_or)
                    .fixed_point,
                y_fixed_improved: and_or_fixed_point(&imp, gamma, tol.and_or_max_iters, tol.and_or)
                    .fixed_point,
                y_hat: report.y_hat,
                gamma_r: report.gamma_r,
                gamma_m: report.gamma_m,
                delta_complexity: report.delta_complexity,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ideal_soliton, DegreeDistribution};

    #[test]
    fn degree_one_converges_immediately() {
        let d = DegreeDistribution::point_mass(1, 1).unwrap();
        let t = and_or_fixed_point(&d, 0.3, 100, 1e-12);
        assert_eq!(t.y_seq[0], 1.0);
        assert_eq!(t.y_seq[1], (-1.3f64).exp());
        assert!(t.converged);
        assert_eq!(t.iterations, 2);
        assert_eq!(t.fixed_point, (-1.3f64).exp());
    }

    #[test]
    fn sequence_is_nonincreasing() {
        let d = robust_soliton(400, 0.15, 0.2).unwrap();
        for g in [0.0, 0.1, 0.3] {
            let t = and_or_fixed_point(&d, g, 10_000, 1e-10);
            assert!(t.y_seq.windows(2).all(|w| w[1] <= w[0]));
            assert!(t.converged);
            let last = t.y_seq[t.y_seq.len() - 1];
            let prev = t.y_seq[t.y_seq.len() - 2];
            assert!((last - and_or_step(&d, g, prev)).abs() <= 1e-10);
        }
    }

    #[test]
    fn reports_nonconvergence() {
        let d = robust_soliton(400, 0.15, 0.2).unwrap();
        let t = and_or_fixed_point(&d, 0.0, 2, 1e-15);
        assert!(!t.converged);
        assert_eq!(t.iterations, 2);
    }

    #[test]
    fn spike_removal_lowers_fixed_point_at_zero_overhead() {
        let rsd = robust_soliton(1000, 0.15, 0.2).unwrap();
        let imp = improved_distribution(1000, 0.15, 0.2, Sigma::ONE).unwrap();
        assert!(fixed_point(&imp, 0.0) < fixed_point(&rsd, 0.0));
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(ber_lower_bound_for_ratio(2.0).unwrap(), 0.5);
        assert!(ber_lower_bound_for_ratio(1.0).is_err());
        let meta = rsd_meta(1000, 0.15, 0.2).unwrap();
        let x = 1000.0 / meta.r;
        let y = ber_lower_bound(&meta).unwrap();
        assert_eq!(y, 1.0 - x.powf(1.0 / (1.0 - x)));
        assert!(y > 0.0 && y < 1.0);
    }

    #[test]
    fn lower_bound_is_finite_over_k() {
        for k in (100..=10_000).step_by(100) {
            let y = ber_lower_bound(&rsd_meta(k, 0.15, 0.2).unwrap()).unwrap();
            assert!(y.is_finite() && y > 0.0 && y < 1.0, "k = {k}");
        }
    }

    #[test]
    fn gamma_r_is_beta_minus_one() {
        let meta = rsd_meta(1000, 0.15, 0.2).unwrap();
        assert_eq!(gamma_r(&meta), meta.beta - 1.0);
        assert!(gamma_r(&meta) > 0.0);
    }

    #[test]
    fn gamma_m_brackets_threshold() {
        let tol = 1e-4;
        let meta = rsd_meta(400, 0.15, 0.2).unwrap();
        let rsd = robust_soliton(400, 0.15, 0.2).unwrap();
        let y_hat = ber_lower_bound(&meta).unwrap();
        let gm = gamma_m(400, 0.15, 0.2, tol).unwrap();
        assert!(gm > 0.0 && gm < gamma_r(&meta));
        assert!(fixed_point(&rsd, gm - tol) >= y_hat);
        assert!(fixed_point(&rsd, gm + tol) < y_hat);
    }

    #[test]
    fn avg_degree_cases() {
        assert_eq!(
            avg_degree(&DegreeDistribution::point_mass(5, 5).unwrap()),
            5.0
        );
        let k = 300;
        let isd = ideal_soliton(k).unwrap();
        // 1/k + Σ_{i=2}^k 1/(i−1) = 1/k + H_{k−1}
        let harmonic: f64 = (1..k).map(|i| 1.0 / i as f64).sum();
        assert!((avg_degree(&isd) - (1.0 / k as f64 + harmonic)).abs() < 1e-12);
    }

    #[test]
    fn complexity_delta_matches_mean_difference() {
        let rsd = robust_soliton(1000, 0.15, 0.2).unwrap();
        let imp = improved_distribution(1000, 0.15, 0.2, Sigma::ONE).unwrap();
        let delta = complexity_delta(1000, 0.15, 0.2).unwrap();
        assert!(delta > 0.0);
        assert!((avg_degree(&rsd) - avg_degree(&imp) - delta).abs() < 1e-12);
    }

    #[test]
    fn uncovered_edge_cases() {
        let d = improved_distribution(500, 0.15, 0.2, Sigma::ONE).unwrap();
        assert_eq!(expected_uncovered(500, 0, &d).unwrap(), 500.0);
        let heavy = DegreeDistribution::point_mass(5, 5).unwrap();
        assert!(expected_uncovered(4, 10, &heavy).is_err());
    }
}
