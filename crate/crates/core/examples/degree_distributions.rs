//! Builds every degree distribution the crate offers for one block length and
//! prints a short summary of each.
//!
//! ```text
//! cargo run --example degree_distributions -- 1000
//! ```

use ltcodes::distributions::{
    comparator_w1, comparator_w2, ideal_soliton, improved_distribution, robust_soliton, rsd_meta,
    DlltDesign,
};
use ltcodes::{DegreeDistribution, Sigma, Tolerances};

fn summary(name: &str, d: &DegreeDistribution) {
    let head: Vec<String> = (1..=4.min(d.k_max()))
        .map(|i| format!("{:.4}", d.prob(i)))
        .collect();
    println!(
        "{name:<14} mean degree {:>7.3}  support {:>5}  p(1..4) = [{}]",
        d.mean(),
        d.support().count(),
        head.join(", ")
    );
}

fn main() -> ltcodes::Result<()> {
    let k: usize = std::env::args()
        .nth(1)
        .map_or(1000, |a| a.parse().expect("k"));
    let (c, delta) = (0.15, 0.2);

    let meta = rsd_meta(k, c, delta)?;
    println!(
        "k = {k}: R = {:.3}, spike at degree {}, beta = {:.5}\n",
        meta.r, meta.spike_index, meta.beta
    );

    summary("ideal", &ideal_soliton(k)?);
    summary("rsd", &robust_soliton(k, c, delta)?);
    for sigma in [0.5, 1.0] {
        let d = improved_distribution(k, c, delta, Sigma::new(sigma)?)?;
        summary(&format!("improved({sigma})"), &d);
    }

    let design = DlltDesign::new(k, c, delta, &Tolerances::DEFAULT)?;
    summary("sqrt factor", &design.sqrt.distribution);
    summary("dllt source", &design.source()?);
    println!(
        "{:<14} round trip error {:.2e}, largest UEP factor {:.4}",
        "",
        design.sqrt.roundtrip_error(&design.split.high),
        design.max_uep_factor()
    );
    let uep = design.uep(0.05)?;
    summary("uep mib", &uep.mib);
    summary("uep lib", &uep.lib);

    summary("w1", &comparator_w1());
    summary("w2", &comparator_w2());
    Ok(())
}
