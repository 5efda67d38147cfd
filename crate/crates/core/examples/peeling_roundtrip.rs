//! Sends a short text through an erasure channel with LT coding and rebuilds
//! it with the peeling decoder.

use ltcodes::codec::{encode, erase, peel_decode_traced, SourceBlock};
use ltcodes::distributions::improved_distribution;
use ltcodes::Sigma;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SYMBOL: usize = 16;

fn main() -> ltcodes::Result<()> {
    let text = "Fountain codes let a receiver rebuild a file from any large enough \
                set of encoded packets, whichever ones happen to arrive. "
        .repeat(12);
    let mut bytes = text.into_bytes();
    bytes.resize(bytes.len().div_ceil(SYMBOL) * SYMBOL, b' ');
    let block = SourceBlock::new(bytes.chunks(SYMBOL).map(<[u8]>::to_vec).collect())?;
    let k = block.k();

    let dist = improved_distribution(k, 0.15, 0.2, Sigma::ONE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 0.1;

    for overhead in [0.1, 0.3, 0.6] {
        let n = ((k as f64) * (1.0 + overhead) / (1.0 - eps)).round() as usize;
        let sent = encode(&block, &dist, n, &mut rng);
        let received = erase(sent, eps, &mut rng)?;
        let (res, trace) = peel_decode_traced(&received, k)?;
        println!(
            "k = {k}, sent {n}, received {}: recovered {}/{k} in {} rounds, frame {}",
            received.len(),
            res.recovered_count(),
            trace.len(),
            if res.frame_ok { "ok" } else { "incomplete" }
        );
        if res.frame_ok {
            let rebuilt: Vec<u8> = res.payloads.into_iter().flatten().flatten().collect();
            assert_eq!(rebuilt, bytes);
            println!("  text rebuilt exactly ({} bytes)", rebuilt.len());
        }
    }
    Ok(())
}
