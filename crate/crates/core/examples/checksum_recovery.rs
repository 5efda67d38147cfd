//! The all-source checksum symbol: when peeling stalls one symbol short, the
//! XOR of every source symbol fills the last gap.

use ltcodes::analysis::full_recovery_symbols;
use ltcodes::codec::{checksum_symbol, encode, peel_decode, SourceBlock};
use ltcodes::distributions::{improved_distribution, rsd_meta};
use ltcodes::sim::{self, Scheme, SimConfig};
use ltcodes::Sigma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ltcodes::Result<()> {
    let k = 400;
    let (c, delta) = (0.15, 0.2);
    let meta = rsd_meta(k, c, delta)?;
    let n = full_recovery_symbols(&meta);
    let dist = improved_distribution(k, c, delta, Sigma::ONE)?;

    // find a transmission that stalls with exactly one symbol missing
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for attempt in 1..=2000 {
        let block = SourceBlock::random(k, 4, &mut rng)?;
        let mut rx = encode(&block, &dist, n - 2, &mut rng);
        let plain = peel_decode(&rx, k)?;
        if plain.bit_errors != 1 {
            continue;
        }
        rx.push(checksum_symbol(&block));
        let fixed = peel_decode(&rx, k)?;
        println!(
            "attempt {attempt}: without checksum {} missing, with checksum {} missing",
            plain.bit_errors, fixed.bit_errors
        );
        break;
    }

    // the same effect in aggregate, with paired seeds
    let gamma = n as f64 / k as f64 - 1.0;
    let cfg = |scheme| SimConfig {
        gamma_grid: vec![gamma],
        trials: 2000,
        master_seed: 1,
        ..SimConfig::new(scheme, k)
    };
    let without = sim::run(&cfg(Scheme::Improved))?.points[0].fer;
    let with = sim::run(&cfg(Scheme::ImprovedChecksum))?.points[0].fer;
    println!("n = {n}: FER {without:.4} without checksum, {with:.4} with two checksum copies");
    Ok(())
}
