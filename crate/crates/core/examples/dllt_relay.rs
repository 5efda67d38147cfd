//! Two sources, one relay: the relay forwards or XORs, and the destination's
//! degree law approaches the target distribution.

use ltcodes::codec::{encode, SourceBlock};
use ltcodes::distributions::DlltDesign;
use ltcodes::relay::{lambda_tv_grid, relay_combine, relay_degree_law, DlltScheme, RelayConfig};
use ltcodes::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ltcodes::Result<()> {
    let (k, c, delta) = (400, 0.15, 0.2);
    let design = DlltDesign::new(k, c, delta, &Tolerances::DEFAULT)?;
    let p = design.source()?;

    println!("TV distance of the relay law to the improved distribution:");
    for (lambda, tv) in lambda_tv_grid(&p, &design.improved, &[0.0, 0.25, 0.5, 0.75, 1.0])? {
        println!("  lambda {lambda:.2}: {tv:.4}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let b1 = SourceBlock::random(k, 1, &mut rng)?;
    let b2 = SourceBlock::random(k, 1, &mut rng)?;
    let e1 = encode(&b1, &p, n, &mut rng);
    let e2 = encode(&b2, &p, n, &mut rng)
        .into_iter()
        .map(|s| s.shifted(k))
        .collect();
    let out = relay_combine(e1, e2, &RelayConfig::new(0.5, 0.0, n), &mut rng)?;
    let law = relay_degree_law(&p, &p, 0.5)?;
    let mean = out.iter().map(|o| o.symbol.degree() as f64).sum::<f64>() / n as f64;
    println!(
        "\nrelay output mean degree {mean:.3} (law {:.3})",
        law.mean()
    );

    let scheme = DlltScheme::new(k, c, delta, 0.0, &Tolerances::DEFAULT)?;
    for gamma in [0.0, 0.2, 0.4] {
        let cfg = RelayConfig::new(0.5, 0.0, (k as f64 * (1.0 + gamma)).round() as usize);
        let r = scheme.run_trial(&cfg, &mut rng)?;
        println!(
            "gamma {gamma:.1}: recovered {}/{k} (source 1 missing {}, source 2 missing {})",
            r.result.recovered_count(),
            r.mib_errors,
            r.lib_errors
        );
    }
    Ok(())
}
