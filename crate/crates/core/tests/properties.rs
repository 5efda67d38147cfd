use ltcodes::codec::{encode, erase, oracle, peel_decode, EncodedSymbol, SourceBlock};
use ltcodes::distributions::{convolve, improved_distribution, mixture, DistParams};
use ltcodes::relay::{relay_combine, Origin, RelayConfig};
use ltcodes::sim::derive_trial_seed;
use ltcodes::{DegreeDistribution, DistKind, Sigma};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(max_k: usize) -> impl Strategy<Value = DegreeDistribution> {
    prop::collection::vec(0.0f64..1.0, 1..=max_k)
        .prop_filter("needs some mass", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(|w| {
            let k = w.len();
            DegreeDistribution::from_weights(w, DistKind::Custom, DistParams::block(k)).unwrap()
        })
}

/// A random block plus `n` encoded symbols drawn from a random table.
fn instance() -> impl Strategy<Value = (SourceBlock, Vec<EncodedSymbol>)> {
    (table(24), 0usize..60, any::<u64>()).prop_map(|(d, n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = d.k_max();
        let block = SourceBlock::random(k, 3, &mut rng).unwrap();
        let rx = encode(&block, &d, n, &mut rng);
        (block, rx)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn more_symbols_never_recover_less((block, rx) in instance(), cut in 0.0f64..1.0) {
        let k = block.k();
        let m = (rx.len() as f64 * cut) as usize;
        let fewer = peel_decode(&rx[..m], k).unwrap();
        let more = peel_decode(&rx, k).unwrap();
        for i in 0..k {
            prop_assert!(!fewer.recovered[i] || more.recovered[i]);
        }
    }

    #[test]
    fn arrival_order_does_not_matter((block, rx) in instance(), seed in any::<u64>()) {
        let k = block.k();
        let mut shuffled = rx.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = peel_decode(&rx, k).unwrap();
        let b = peel_decode(&shuffled, k).unwrap();
        prop_assert_eq!(&a.recovered, &b.recovered);
        prop_assert_eq!(&a.payloads, &b.payloads);
    }

    #[test]
    fn decoder_agrees_with_rescan_and_truth((block, rx) in instance()) {
        let k = block.k();
        let res = peel_decode(&rx, k).unwrap();
        prop_assert_eq!(&res.payloads, &oracle::rescan_peel(&rx, k));
        for (i, p) in res.payloads.iter().enumerate() {
            if let Some(p) = p {
                prop_assert_eq!(p.as_slice(), block.symbol(i));
            }
        }
        prop_assert_eq!(res.frame_ok, res.bit_errors == 0);
        prop_assert_eq!(res.recovered_count() + res.bit_errors, k);
    }

    #[test]
    fn encoded_payload_is_xor_of_neighbors((block, rx) in instance()) {
        for s in &rx {
            prop_assert!(s.degree() >= 1 && s.degree() <= block.k());
            prop_assert!(s.neighbors.windows(2).all(|w| w[0] < w[1]));
            let mut x = vec![0u8; block.symbol_size()];
            for &i in &s.neighbors {
                for (a, b) in x.iter_mut().zip(block.symbol(i)) {
                    *a ^= b;
                }
            }
            prop_assert_eq!(&x, &s.payload);
        }
    }

    #[test]
    fn json_roundtrip_is_bit_exact(d in table(64)) {
        let back = DegreeDistribution::from_json(&d.to_json()).unwrap();
        prop_assert_eq!(back.masses().len(), d.masses().len());
        for (a, b) in back.masses().iter().zip(d.masses()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back.kind(), d.kind());
    }

    #[test]
    fn text_roundtrip_is_bit_exact(d in table(64)) {
        let back = DegreeDistribution::from_text(&d.to_text()).unwrap();
        for deg in 1..=d.k_max() {
            prop_assert_eq!(back.prob(deg).to_bits(), d.prob(deg).to_bits());
        }
    }

    #[test]
    fn convolution_and_mixture_stay_normalized(a in table(20), b in table(20), w in 0.0f64..1.0) {
        let conv = convolve(&a, &b);
        prop_assert!((conv.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((conv.mean() - a.mean() - b.mean()).abs() < 1e-9);
        let mix = mixture(&[(w, &a), (1.0 - w, &b)]).unwrap();
        prop_assert!((mix.mean() - (w * a.mean() + (1.0 - w) * b.mean())).abs() < 1e-9);
    }

    #[test]
    fn improved_conserves_mass(k in 20usize..3000, sigma in 0.01f64..=1.0) {
        let d = improved_distribution(k, 0.15, 0.2, Sigma::new(sigma).unwrap()).unwrap();
        prop_assert!((d.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(d.masses().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn erasure_keeps_an_ordered_subsequence((_, rx) in instance(), eps in 0.0f64..0.99, seed in any::<u64>()) {
        let kept = erase(rx.clone(), eps, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut it = rx.iter();
        for s in &kept {
            prop_assert!(it.any(|r| r == s));
        }
    }

    #[test]
    fn relay_outputs_are_forwards_or_xors(n in 0usize..50, lambda in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = ltcodes::distributions::ideal_soliton(8).unwrap();
        let b1 = SourceBlock::random(8, 2, &mut rng).unwrap();
        let b2 = SourceBlock::random(8, 2, &mut rng).unwrap();
        let e1 = encode(&b1, &d, n, &mut rng);
        let e2: Vec<_> = encode(&b2, &d, n, &mut rng).into_iter().map(|s| s.shifted(8)).collect();
        let out = relay_combine(e1.clone(), e2.clone(), &RelayConfig::new(lambda, 0.0, n), &mut rng).unwrap();
        prop_assert_eq!(out.len(), n);
        for (i, o) in out.iter().enumerate() {
            match o.origin {
                Origin::Forwarded1 => prop_assert_eq!(&o.symbol, &e1[i]),
                Origin::Forwarded2 => prop_assert_eq!(&o.symbol, &e2[i]),
                Origin::Xored => prop_assert_eq!(&o.symbol, &e1[i].combine(&e2[i])),
            }
        }
    }

    #[test]
    fn trial_seeds_separate_label_tuples(m in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assert_eq!(derive_trial_seed(m, &[a, b]), derive_trial_seed(m, &[a, b]));
        prop_assert_ne!(derive_trial_seed(m, &[a, b]), derive_trial_seed(m, &[a, b.wrapping_add(1)]));
    }
}
