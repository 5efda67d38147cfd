//! BER/FER versus overhead for the four point-to-point distributions, written
//! as CSV to stdout.
//!
//! ```text
//! cargo run --release --example ber_sweep -- 1000 2000 > sweep.csv
//! ```

use ltcodes::sim::{self, Scheme, SimConfig, SimResult};

fn main() -> ltcodes::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map_or(1000, |a| a.parse().expect("k"));
    let trials: usize = args.next().map_or(500, |a| a.parse().expect("trials"));

    let mut grid = vec![-0.25, -0.1];
    grid.extend(sim::default_gamma_grid());

    print!("{}", SimResult::CSV_HEADER);
    println!();
    for scheme in [Scheme::Rsd, Scheme::Improved, Scheme::W1, Scheme::W2] {
        let cfg = SimConfig {
            gamma_grid: grid.clone(),
            trials,
            master_seed: 7,
            ..SimConfig::new(scheme, k)
        };
        let res = sim::run(&cfg)?;
        for line in res.to_csv().lines().skip(1) {
            println!("{line}");
        }
        let secs: f64 = res.points.iter().map(|p| p.elapsed.as_secs_f64()).sum();
        eprintln!("{scheme}: {} points in {secs:.1}s", res.points.len());
    }
    Ok(())
}
