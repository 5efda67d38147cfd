//! Degree distributions: construction, validation, convolution, sampling and
//! serialization.

mod dllt;
mod soliton;

pub use dllt::{
    deconvolve_sqrt, degree_two_plus, source_distribution_dllt, split_dllt, uep_distributions,
    DlltDesign, DlltSplit, SqrtDeconvolution, UepPair,
};
pub use soliton::{ideal_soliton, improved_distribution, robust_soliton, rsd_meta, RsdMeta, Sigma};

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Which construction produced a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    IdealSoliton,
    RobustSoliton,
    Improved,
    DlltDegreeOne,
    DlltHigh,
    SqrtFactor,
    DlltSource,
    UepMib,
    UepLib,
    W1,
    W2,
    Convolution,
    Mixture,
    Custom,
}

impl DistKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistKind::IdealSoliton => "ideal-soliton",
            DistKind::RobustSoliton => "robust-soliton",
            DistKind::Improved => "improved",
            DistKind::DlltDegreeOne => "dllt-degree-one",
            DistKind::DlltHigh => "dllt-high",
            DistKind::SqrtFactor => "sqrt-factor",
            DistKind::DlltSource => "dllt-source",
            DistKind::UepMib => "uep-mib",
            DistKind::UepLib => "uep-lib",
            DistKind::W1 => "w1",
            DistKind::W2 => "w2",
            DistKind::Convolution => "convolution",
            DistKind::Mixture => "mixture",
            DistKind::Custom => "custom",
        }
    }
}

/// Construction parameters carried along for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistParams {
    /// Source block length the distribution was built for.
    pub k: usize,
    pub c: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub s: Option<f64>,
}

impl DistParams {
    pub fn block(k: usize) -> Self {
        DistParams {
            k,
            ..Default::default()
        }
    }
}

/// Probability mass over degrees `1..=k_max`.
///
/// Immutable once built; the cumulative table used for inverse-CDF sampling
/// is computed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    kind: DistKind,
    params: DistParams,
    // mass[d - 1] is the probability of degree d
    mass: Vec<f64>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    /// Validates `mass` (indexed from degree 1) and builds the distribution.
    pub fn new(mass: Vec<f64>, kind: DistKind, params: DistParams) -> Result<Self> {
        Self::with_tolerance(mass, kind, params, Tolerances::DEFAULT.mass_sum)
    }

    pub fn with_tolerance(
        mass: Vec<f64>,
        kind: DistKind,
        params: DistParams,
        sum_tol: f64,
    ) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::input("distribution has no degrees"));
        }
        if let Some((i, &p)) = mass
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::input(format!(
                "mass at degree {} is {p}, expected a finite nonnegative value",
                i + 1
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > sum_tol {
            return Err(Error::input(format!(
                "mass sums to {total}, expected 1 within {sum_tol:e}"
            )));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = mass
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // the final bucket absorbs rounding so that u < 1 always lands inside
        let last = cdf.len() - 1;
        cdf[last] = 1.0;
        Ok(DegreeDistribution {
            kind,
            params,
            mass,
            cdf,
        })
    }

    /// Builds a distribution from nonnegative weights, normalizing by their sum.
    pub fn from_weights(weights: Vec<f64>, kind: DistKind, params: DistParams) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::input(format!("weights sum to {total}")));
        }
        Self::new(
            weights.into_iter().map(|w| w / total).collect(),
            kind,
            params,
        )
    }

    /// Point mass at `degree`, with support `1..=k_max`.
    pub fn point_mass(degree: usize, k_max: usize) -> Result<Self> {
        if degree == 0 || degree > k_max {
            return Err(Error::param(format!(
                "point mass degree {degree} outside 1..={k_max}"
            )));
        }
        let mut mass = vec![0.0; k_max];
        mass[degree - 1] = 1.0;
        Self::new(mass, DistKind::Custom, DistParams::block(k_max))
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn params(&self) -> &DistParams {
        &self.params
    }

    /// Largest representable degree.
    pub fn k_max(&self) -> usize {
        self.mass.len()
    }

    /// Largest degree with nonzero mass.
    pub fn max_degree(&self) -> usize {
        self.mass
            .iter()
            .rposition(|&p| p > 0.0)
            .map_or(0, |i| i + 1)
    }

    /// Probability of `degree`; zero outside `1..=k_max`.
    pub fn prob(&self, degree: usize) -> f64 {
        if degree == 0 {
            return 0.0;
        }
        self.mass.get(degree - 1).copied().unwrap_or(0.0)
    }

    /// Masses indexed from degree 1.
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `(degree, probability)` for every degree with nonzero mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (i + 1, p))
    }

    /// Ω'(1) = Σ i·Ω_i.
    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Ω'(x) = Σ i·Ω_i·x^(i−1), evaluated by Horner's rule.
    pub fn derivative_at(&self, x: f64) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, p)| acc * x + (i + 1) as f64 * p)
    }

    /// Draws a degree by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u) + 1
    }

    /// Largest absolute per-degree difference, over the union of supports.
    pub fn linf_distance(&self, other: &DegreeDistribution) -> f64 {
        let len = self.k_max().max(other.k_max());
        (1..=len)
            .map(|d| (self.prob(d) - other.prob(d)).abs())
            .fold(0.0, f64::max)
    }

    /// Total-variation distance.
    pub fn tv_distance(&self, other: &DegreeDistribution) -> f64 {
        let len = self.k_max().max(other.k_max());
        0.5 * (1..=len)
            .map(|d| (self.prob(d) - other.prob(d)).abs())
            .sum::<f64>()
    }

    /// Two-column `degree,probability` table, zero-mass degrees omitted.
    pub fn to_text(&self) -> String {
        let mut out = String::from("degree,probability\n");
        for (d, p) in self.support() {
            writeln!(out, "{d},{p}").unwrap();
        }
        out
    }

    /// Parses the two-column table produced by [`to_text`](Self::to_text).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("degree") {
                continue;
            }
            let (d, p) = line.split_once(',').ok_or_else(|| {
                Error::input(format!(
                    "line {}: expected `degree,probability`",
                    lineno + 1
                ))
            })?;
            let d: usize = d
                .trim()
                .parse()
                .map_err(|e| Error::input(format!("line {}: degree: {e}", lineno + 1)))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|e| Error::input(format!("line {}: probability: {e}", lineno + 1)))?;
            if d == 0 {
                return Err(Error::input(format!("line {}: degree 0", lineno + 1)));
            }
            rows.push((d, p));
        }
        let k_max = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let mut mass = vec![0.0; k_max];
        for (d, p) in rows {
            mass[d - 1] += p;
        }
        Self::new(mass, DistKind::Custom, DistParams::block(k_max))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DistributionRecord::from(self)).expect("distribution serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&DistributionRecord::from(self))
            .expect("distribution serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let rec: DistributionRecord =
            serde_json::from_str(json).map_err(|e| Error::input(format!("json: {e}")))?;
        rec.try_into()
    }
}

/// Serialized form: `{k, c, delta, sigma, kind, mass}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DistributionRecord {
    k: usize,
    c: Option<f64>,
    delta: Option<f64>,
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    kind: DistKind,
    mass: Vec<f64>,
}

impl From<&DegreeDistribution> for DistributionRecord {
    fn from(d: &DegreeDistribution) -> Self {
        DistributionRecord {
            k: d.params.k,
            c: d.params.c,
            delta: d.params.delta,
            sigma: d.params.sigma,
            s: d.params.s,
            kind: d.kind,
            mass: d.mass.clone(),
        }
    }
}

impl TryFrom<DistributionRecord> for DegreeDistribution {
    type Error = Error;

    fn try_from(rec: DistributionRecord) -> Result<Self> {
        let params = DistParams {
            k: rec.k,
            c: rec.c,
            delta: rec.delta,
            sigma: rec.sigma,
            s: rec.s,
        };
        DegreeDistribution::new(rec.mass, rec.kind, params)
    }
}

/// Raw convolution of two mass vectors indexed from degree 1.
///
/// The result is indexed from degree 1 as well and has length
/// `a.len() + b.len()`; its degree-1 entry is always zero.
pub fn convolve_masses(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            // degrees (i+1) + (j+1) live at index i + j + 1
            out[i + j + 1] += x * y;
        }
    }
    out
}

/// `(a ⊛ b)(i) = Σ_j a(j)·b(i−j)`, supported up to `a.k_max + b.k_max`.
pub fn convolve(a: &DegreeDistribution, b: &DegreeDistribution) -> DegreeDistribution {
    let mass = convolve_masses(&a.mass, &b.mass);
    let params = DistParams::block(a.params.k.max(b.params.k));
    // the product of two unit masses stays within a few ulps of 1
    DegreeDistribution::with_tolerance(mass, DistKind::Convolution, params, 1e-10)
        .expect("convolution of valid distributions is valid")
}

/// Weighted mixture `Σ w_j·d_j`; the weights must sum to 1.
pub fn mixture(parts: &[(f64, &DegreeDistribution)]) -> Result<DegreeDistribution> {
    let len = parts.iter().map(|(_, d)| d.k_max()).max().unwrap_or(0);
    let wsum: f64 = parts.iter().map(|(w, _)| w).sum();
    if parts.iter().any(|(w, _)| *w < 0.0) || (wsum - 1.0).abs() > 1e-12 {
        return Err(Error::param(format!(
            "mixture weights must be nonnegative and sum to 1 (got {wsum})"
        )));
    }
    let mut mass = vec![0.0; len];
    for (w, d) in parts {
        for (m, p) in mass.iter_mut().zip(d.masses()) {
            *m += w * p;
        }
    }
    let k = parts.iter().map(|(_, d)| d.params.k).max().unwrap_or(len);
    DegreeDistribution::with_tolerance(mass, DistKind::Mixture, DistParams::block(k), 1e-10)
}

/// `W1 = 0.0624x + 0.5407x² + 0.2232x⁴ + 0.1737x⁵`, an intermediate-range
/// design for k = 1000 and n = k.
pub fn comparator_w1() -> DegreeDistribution {
    DegreeDistribution::new(
        vec![0.0624, 0.5407, 0.0, 0.2232, 0.1737],
        DistKind::W1,
        DistParams::block(1000),
    )
    .expect("W1 constant is a valid distribution")
}

/// `W2 = 0.1448x + 0.8552x²`, an intermediate-range design for k = 1000 and
/// n = 0.75k.
pub fn comparator_w2() -> DegreeDistribution {
    DegreeDistribution::new(vec![0.1448, 0.8552], DistKind::W2, DistParams::block(1000))
        .expect("W2 constant is a valid distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform12() -> DegreeDistribution {
        DegreeDistribution::new(vec![0.5, 0.5], DistKind::Custom, DistParams::block(2)).unwrap()
    }

    #[test]
    fn rejects_negative_and_unnormalized() {
        let p = DistParams::block(2);
        assert!(DegreeDistribution::new(vec![1.1, -0.1], DistKind::Custom, p).is_err());
        assert!(DegreeDistribution::new(vec![0.5, 0.4], DistKind::Custom, p).is_err());
        assert!(DegreeDistribution::new(vec![], DistKind::Custom, p).is_err());
        assert!(DegreeDistribution::new(vec![f64::NAN, 1.0], DistKind::Custom, p).is_err());
    }

    #[test]
    fn cdf_ends_at_one() {
        let d = uniform12();
        assert_eq!(d.cdf(), &[0.5, 1.0]);
    }

    #[test]
    fn point_masses_convolve_to_point_mass() {
        let one = DegreeDistribution::point_mass(1, 1).unwrap();
        let two = convolve(&one, &one);
        assert_eq!(two.prob(2), 1.0);
        assert_eq!(two.prob(1), 0.0);
    }

    #[test]
    fn uniform_squared_is_binomial() {
        let u = uniform12();
        let sq = convolve(&u, &u);
        assert_eq!(sq.k_max(), 4);
        assert_eq!(sq.masses(), &[0.0, 0.25, 0.5, 0.25]);
    }

    #[test]
    fn point_mass_sampling_is_constant() {
        let d = DegreeDistribution::point_mass(3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 3));
    }

    #[test]
    fn zero_mass_degree_is_never_drawn() {
        let w1 = comparator_w1();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..100_000).all(|_| w1.sample(&mut rng) != 3));
    }

    #[test]
    fn derivative_matches_mean_at_one() {
        let w1 = comparator_w1();
        assert!((w1.derivative_at(1.0) - w1.mean()).abs() < 1e-14);
        // Ω'(0) is the degree-1 mass
        assert_eq!(w1.derivative_at(0.0), 0.0624);
    }

    #[test]
    fn text_format_omits_zero_rows() {
        let txt = comparator_w1().to_text();
        assert_eq!(
            txt,
            "degree,probability\n1,0.0624\n2,0.5407\n4,0.2232\n5,0.1737\n"
        );
        let back = DegreeDistribution::from_text(&txt).unwrap();
        assert_eq!(back.masses(), comparator_w1().masses());
    }

    #[test]
    fn json_has_expected_fields() {
        let v: serde_json::Value = serde_json::from_str(&comparator_w2().to_json()).unwrap();
        assert_eq!(v["kind"], "w2");
        assert_eq!(v["k"], 1000);
        assert_eq!(v["mass"][1], 0.8552);
        assert!(v["sigma"].is_null());
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let u = uniform12();
        assert!(mixture(&[(0.7, &u), (0.7, &u)]).is_err());
        let m = mixture(&[(0.5, &u), (0.5, &u)]).unwrap();
        assert_eq!(m.masses(), u.masses());
    }
}
