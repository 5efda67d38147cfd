//! Asymptotic analysis: overhead thresholds, the BER floor and And-Or fixed
//! points for the Robust Soliton and the spike-free distribution.

use ltcodes::analysis::{fixed_point, threshold_report};
use ltcodes::distributions::{improved_distribution, robust_soliton};
use ltcodes::Sigma;

fn main() -> ltcodes::Result<()> {
    let (c, delta) = (0.15, 0.2);

    println!(
        "{:>6} {:>8} {:>8} {:>8} {:>8}",
        "k", "y_hat", "gamma_R", "gamma_M", "Delta"
    );
    for k in [100, 400, 1000, 2000, 5000] {
        let r = threshold_report(k, c, delta, 1e-4)?;
        println!(
            "{k:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.3}",
            r.y_hat, r.gamma_r, r.gamma_m, r.delta_complexity
        );
    }

    let k = 1000;
    let rsd = robust_soliton(k, c, delta)?;
    let improved = improved_distribution(k, c, delta, Sigma::ONE)?;
    println!("\nAnd-Or fixed points at k = {k}");
    println!("{:>6} {:>12} {:>12}", "gamma", "rsd", "improved");
    for i in 0..=10 {
        let gamma = i as f64 * 0.05;
        println!(
            "{gamma:>6.2} {:>12.4e} {:>12.4e}",
            fixed_point(&rsd, gamma),
            fixed_point(&improved, gamma)
        );
    }
    Ok(())
}
