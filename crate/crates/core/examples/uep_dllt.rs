//! Unequal error protection through the relay: the more-important source gets
//! more degree-1 symbols and a lower BER, and the gap grows with `s`.

use ltcodes::distributions::DlltDesign;
use ltcodes::relay::RelayConfig;
use ltcodes::sim::{self, Scheme, SimConfig};
use ltcodes::Tolerances;

fn main() -> ltcodes::Result<()> {
    let k = 400;
    let design = DlltDesign::new(k, 0.15, 0.2, &Tolerances::DEFAULT)?;
    println!(
        "admissible UEP factors: (0, {:.4}]",
        design.max_uep_factor()
    );

    for s in [0.02, 0.05, 0.08] {
        let pair = design.uep(s)?;
        let cfg = SimConfig {
            gamma_grid: vec![0.0, 0.1, 0.2],
            trials: 1000,
            master_seed: 5,
            relay: Some(RelayConfig::new(0.5, s, 0)),
            ..SimConfig::new(Scheme::UepDllt, k)
        };
        let res = sim::run(&cfg)?;
        println!(
            "\ns = {s}: degree-1 mass mib {:.4}, lib {:.4}",
            pair.mib.prob(1),
            pair.lib.prob(1)
        );
        for p in &res.points {
            println!(
                "  gamma {:.2}: success mib {:.4}  lib {:.4}",
                p.gamma,
                p.mib_success().unwrap_or(f64::NAN),
                p.lib_success().unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
