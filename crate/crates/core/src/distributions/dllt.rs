//! Distributed LT (DLLT) source distributions.
//!
//! The spike-free distribution is split into its degree-1 part `u_i1` and
//! its high-degree part `u_i2`. A square-root deconvolution `f ⊛ f = u_i2`
//! gives the per-source high-degree law, and the source distribution mixes
//! `f` with a degree-1 point mass.

use super::soliton::{improved_from_meta, rsd_meta};
use super::{convolve_masses, DegreeDistribution, DistKind, DistParams, RsdMeta, Sigma};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// `u_i = (β′·u_i1 + β″·u_i2)/β`.
#[derive(Debug, Clone)]
pub struct DlltSplit {
    /// Point mass at degree 1.
    pub degree_one: DegreeDistribution,
    /// Degrees `2..=k`, renormalized.
    pub high: DegreeDistribution,
    pub beta_prime: f64,
    pub beta_double_prime: f64,
}

pub fn split_dllt(u_i: &DegreeDistribution, meta: &RsdMeta) -> Result<DlltSplit> {
    if u_i.k_max() != meta.k {
        return Err(Error::input(format!(
            "distribution has k_max {} but meta is for k = {}",
            u_i.k_max(),
            meta.k
        )));
    }
    let spike = u_i.prob(meta.spike_index);
    if spike != 0.0 {
        return Err(Error::input(format!(
            "split needs the spike-free distribution (sigma = 1); mass at spike degree {} is {spike}",
            meta.spike_index
        )));
    }
    let beta_prime = meta.beta * u_i.prob(1);
    let beta_double_prime: f64 = u_i.masses()[1..].iter().map(|p| meta.beta * p).sum();

    let params = meta.dist_params(Some(1.0));
    let mut one = vec![0.0; meta.k];
    one[0] = 1.0;
    let degree_one = DegreeDistribution::new(one, DistKind::DlltDegreeOne, params)?;

    let mut high = vec![0.0; meta.k];
    for (h, p) in high.iter_mut().zip(u_i.masses()).skip(1) {
        *h = meta.beta * p / beta_double_prime;
    }
    let high = DegreeDistribution::new(high, DistKind::DlltHigh, params)?;

    Ok(DlltSplit {
        degree_one,
        high,
        beta_prime,
        beta_double_prime,
    })
}

/// `d` conditioned on degree >= 2. Applied to the raw Robust Soliton this
/// keeps the spike, which is what makes its square root infeasible.
pub fn degree_two_plus(d: &DegreeDistribution) -> Result<DegreeDistribution> {
    let rest: f64 = d.masses()[1..].iter().sum();
    if !(rest > 0.0) {
        return Err(Error::input("distribution has no mass above degree 1"));
    }
    let mut high = vec![0.0; d.k_max()];
    for (h, p) in high.iter_mut().zip(d.masses()).skip(1) {
        *h = p / rest;
    }
    DegreeDistribution::with_tolerance(high, DistKind::DlltHigh, *d.params(), 1e-10)
}

/// Result of solving `f ⊛ f = target`.
#[derive(Debug, Clone)]
pub struct SqrtDeconvolution {
    /// Raw recursion output, indexed from degree 1. May hold slightly
    /// negative entries (never below the negativity threshold).
    pub coefficients: Vec<f64>,
    pub raw_sum: f64,
    /// Sum after clipping negative coefficients to zero.
    pub clipped_sum: f64,
    /// Most negative raw coefficient and its degree, if any is negative.
    pub min_coefficient: Option<(usize, f64)>,
    /// Clipped, renormalized coefficients as a sampling distribution.
    pub distribution: DegreeDistribution,
}

impl SqrtDeconvolution {
    /// `max_i |(f ⊛ f)(i) − target(i)|` over the target's degrees, using the
    /// raw coefficients.
    pub fn roundtrip_error(&self, target: &DegreeDistribution) -> f64 {
        let sq = convolve_masses(&self.coefficients, &self.coefficients);
        (1..=target.k_max())
            .map(|d| {
                let got = sq.get(d - 1).copied().unwrap_or(0.0);
                (got - target.prob(d)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `f ⊛ f = target` for a target supported on degrees `>= 2`.
///
/// `f(1) = √target(2)` and, for `j >= 2`,
/// `f(j) = (target(j+1) − Σ_{a=2}^{j−1} f(a)·f(j+1−a)) / (2·f(1))`.
pub fn deconvolve_sqrt(target: &DegreeDistribution, tol: &Tolerances) -> Result<SqrtDeconvolution> {
    if target.prob(1) != 0.0 {
        return Err(Error::input(format!(
            "square-root deconvolution needs zero degree-1 mass, got {}",
            target.prob(1)
        )));
    }
    let kmax = target.k_max();
    if kmax < 2 {
        return Err(Error::input("target must reach degree 2"));
    }
    let t = target.masses();
    let head = t[1].sqrt();
    if head < 1e-15 {
        return Err(Error::DeconvolutionInfeasible {
            degree: 1,
            value: head,
            threshold: tol.deconv_negative,
        });
    }

    // f has degrees 1..=kmax-1, so f ⊛ f covers 2..=2·kmax-2 ⊇ target support
    let mut f = vec![0.0; kmax - 1];
    f[0] = head;
    let denom = 2.0 * head;
    for j in 2..kmax {
        // target(j+1) sits at index j
        let cross: f64 = (2..j).map(|a| f[a - 1] * f[j - a]).sum();
        f[j - 1] = (t[j] - cross) / denom;
    }

    let min_coefficient = f
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < 0.0)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (i + 1, v));
    if let Some((degree, value)) = f
        .iter()
        .enumerate()
        .find(|(_, &v)| v < -tol.deconv_negative)
        .map(|(i, &v)| (i + 1, v))
    {
        return Err(Error::DeconvolutionInfeasible {
            degree,
            value,
            threshold: tol.deconv_negative,
        });
    }

    let raw_sum: f64 = f.iter().sum();
    let clipped: Vec<f64> = f.iter().map(|v| v.max(0.0)).collect();
    let clipped_sum: f64 = clipped.iter().sum();
    if (clipped_sum - 1.0).abs() > tol.deconv_renormalize {
        return Err(Error::input(format!(
            "square-root solution sums to {clipped_sum} after clipping (raw {raw_sum}); \
             renormalization limit is {}",
            tol.deconv_renormalize
        )));
    }
    let distribution = DegreeDistribution::new(
        clipped.into_iter().map(|v| v / clipped_sum).collect(),
        DistKind::SqrtFactor,
        *target.params(),
    )?;

    Ok(SqrtDeconvolution {
        coefficients: f,
        raw_sum,
        clipped_sum,
        min_coefficient,
        distribution,
    })
}

/// Everything the DLLT sources need, derived once per `(k, c, delta)`.
#[derive(Debug, Clone)]
pub struct DlltDesign {
    pub meta: RsdMeta,
    pub improved: DegreeDistribution,
    pub split: DlltSplit,
    pub sqrt: SqrtDeconvolution,
}

impl DlltDesign {
    pub fn new(k: usize, c: f64, delta: f64, tol: &Tolerances) -> Result<Self> {
        let meta = rsd_meta(k, c, delta)?;
        let improved = improved_from_meta(&meta, Sigma::ONE);
        let split = split_dllt(&improved, &meta)?;
        let sqrt = deconvolve_sqrt(&split.high, tol)?;
        Ok(DlltDesign {
            meta,
            improved,
            split,
            sqrt,
        })
    }

    /// `β″/β`.
    pub fn high_ratio(&self) -> f64 {
        self.split.beta_double_prime / self.meta.beta
    }

    /// Largest admissible UEP factor: `√(β″/β) − β″/β`.
    pub fn max_uep_factor(&self) -> f64 {
        let r = self.high_ratio();
        r.sqrt() - r
    }

    /// `w·f + (1 − w)·u_i1` over degrees `1..=k`.
    fn mix(&self, weight_f: f64, kind: DistKind, s: Option<f64>) -> Result<DegreeDistribution> {
        let k = self.meta.k;
        let mut mass = vec![0.0; k];
        for (m, p) in mass.iter_mut().zip(self.sqrt.distribution.masses()) {
            *m = weight_f * p;
        }
        mass[0] += 1.0 - weight_f;
        let params = DistParams {
            s,
            ..self.meta.dist_params(Some(1.0))
        };
        DegreeDistribution::new(mass, kind, params)
    }

    /// `p_i = √(β″/β)·f + (1 − √(β″/β))·u_i1`.
    pub fn source(&self) -> Result<DegreeDistribution> {
        self.mix(self.high_ratio().sqrt(), DistKind::DlltSource, None)
    }

    pub fn uep(&self, s: f64) -> Result<UepPair> {
        let bound = self.max_uep_factor();
        if !(s > 0.0 && s <= bound) {
            return Err(Error::param(format!(
                "UEP factor must lie in (0, {bound}] for k = {}, got {s}",
                self.meta.k
            )));
        }
        let r = self.high_ratio();
        let mib_weight = r.sqrt() - s;
        let lib_weight = r / (r.sqrt() - s);
        Ok(UepPair {
            mib: self.mix(mib_weight, DistKind::UepMib, Some(s))?,
            lib: self.mix(lib_weight, DistKind::UepLib, Some(s))?,
            p1: 1.0 - mib_weight,
            p2: 1.0 - lib_weight,
        })
    }
}

/// Source distributions for the more- and less-important halves.
#[derive(Debug, Clone)]
pub struct UepPair {
    pub mib: DegreeDistribution,
    pub lib: DegreeDistribution,
    /// Degree-1 mixing weight at the MIB source.
    pub p1: f64,
    /// Degree-1 mixing weight at the LIB source.
    pub p2: f64,
}

pub fn source_distribution_dllt(k: usize, c: f64, delta: f64) -> Result<DegreeDistribution> {
    DlltDesign::new(k, c, delta, &Tolerances::DEFAULT)?.source()
}

pub fn uep_distributions(k: usize, c: f64, delta: f64, s: f64) -> Result<UepPair> {
    DlltDesign::new(k, c, delta, &Tolerances::DEFAULT)?.uep(s)
}

#[cfg(test)]
mod tests {
    use super::super::robust_soliton;
    use super::*;

    fn design(k: usize) -> DlltDesign {
        DlltDesign::new(k, 0.15, 0.2, &Tolerances::DEFAULT).unwrap()
    }

    #[test]
    fn split_parts() {
        let d = design(400);
        assert_eq!(d.split.degree_one.prob(1), 1.0);
        assert_eq!(d.split.degree_one.max_degree(), 1);
        assert_eq!(d.split.high.prob(1), 0.0);
        assert!((d.split.beta_prime - d.meta.beta_prime).abs() < 1e-12);
        assert!((d.split.beta_double_prime - d.meta.beta_double_prime).abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs_improved() {
        let d = design(400);
        let (bp, bpp, b) = (d.split.beta_prime, d.split.beta_double_prime, d.meta.beta);
        for deg in 1..=400 {
            let recon = bp * d.split.degree_one.prob(deg) + bpp * d.split.high.prob(deg);
            assert!(
                (recon - b * d.improved.prob(deg)).abs() < 1e-12,
                "degree {deg}"
            );
        }
    }

    #[test]
    fn split_rejects_spiked_input() {
        let meta = rsd_meta(400, 0.15, 0.2).unwrap();
        let rsd = robust_soliton(400, 0.15, 0.2).unwrap();
        assert!(matches!(
            split_dllt(&rsd, &meta),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn raw_rsd_has_no_square_root() {
        for k in [100, 400, 1000, 2000] {
            let high = degree_two_plus(&robust_soliton(k, 0.15, 0.2).unwrap()).unwrap();
            assert!(
                matches!(
                    deconvolve_sqrt(&high, &Tolerances::DEFAULT),
                    Err(Error::DeconvolutionInfeasible { .. })
                ),
                "k = {k}"
            );
        }
        assert!(degree_two_plus(&DegreeDistribution::point_mass(1, 3).unwrap()).is_err());
    }

    #[test]
    fn point_mass_root() {
        let target = DegreeDistribution::point_mass(2, 2).unwrap();
        let sq = deconvolve_sqrt(&target, &Tolerances::DEFAULT).unwrap();
        assert_eq!(sq.coefficients, vec![1.0]);
        assert_eq!(sq.distribution.prob(1), 1.0);
    }

    #[test]
    fn zero_head_is_infeasible() {
        let target = DegreeDistribution::point_mass(3, 3).unwrap();
        assert!(matches!(
            deconvolve_sqrt(&target, &Tolerances::DEFAULT),
            Err(Error::DeconvolutionInfeasible { degree: 1, .. })
        ));
    }

    #[test]
    fn improved_roundtrip_and_edge_negativity() {
        let d = design(400);
        assert!(d.sqrt.roundtrip_error(&d.split.high) <= 1e-9);
        // the Γ cutoff leaves one small negative coefficient just below the spike
        let (deg, v) = d.sqrt.min_coefficient.unwrap();
        assert_eq!(deg, d.meta.spike_index - 1);
        assert!(v > -Tolerances::DEFAULT.deconv_negative);
    }

    #[test]
    fn source_distribution_properties() {
        let d = design(400);
        let p = d.source().unwrap();
        let r = d.high_ratio();
        assert!(r > 0.0 && r < 1.0);
        assert!(p.prob(1) >= 1.0 - r.sqrt());
        assert!((p.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn uep_bounds_and_ordering() {
        let d = design(400);
        let bound = d.max_uep_factor();
        assert!(
            matches!(d.uep(bound + 1e-9), Err(Error::InvalidParameter(m)) if m.contains(&format!("{bound}")))
        );
        assert!(d.uep(0.0).is_err());
        assert!(d.uep(-0.01).is_err());
        let pair = d.uep(bound).unwrap();
        assert!(pair.lib.prob(1) >= 0.0);
        let pair = d.uep(0.05).unwrap();
        assert!(pair.p1 > pair.p2);
        let r = d.high_ratio();
        let expect = 0.05 + r / (r.sqrt() - 0.05) - r.sqrt();
        assert!((pair.p1 - pair.p2 - expect).abs() < 1e-12);
        // f carries degree-1 mass of its own, which scales the observed gap
        let f1 = d.sqrt.distribution.prob(1);
        let gap = pair.mib.prob(1) - pair.lib.prob(1);
        assert!((gap - expect * (1.0 - f1)).abs() < 1e-12);
        assert!(gap > 0.0);
    }

    #[test]
    fn uep_vanishing_factor_matches_plain_source() {
        let d = design(400);
        let p = d.source().unwrap();
        let pair = d.uep(1e-15).unwrap();
        assert!(pair.mib.linf_distance(&p) < 1e-12);
        assert!(pair.lib.linf_distance(&p) < 1e-12);
    }
}
