mod common;

use ismd_core::channel::{inject_bit_errors, link_latency, transmit, ChannelProfile, Tier};
use ismd_core::plan::{BitWidths, CompressionPlan, SplitDepth};

use common::reference;

#[test]
fn flip_count_within_five_sigma() {
    let zeros = vec![0u8; 125_000];
    for seed in 0..5 {
        let (out, flips) = inject_bit_errors(&zeros, 1e-3, seed).unwrap();
        assert!((840..=1160).contains(&flips), "seed {seed}: {flips} flips");
        let ones: u64 = out.iter().map(|b| u64::from(b.count_ones())).sum();
        assert_eq!(ones, flips);
    }
}

#[test]
fn seeds_are_reproducible_and_distinct() {
    let data = vec![0x5au8; 4096];
    let a = inject_bit_errors(&data, 0.01, 11).unwrap();
    assert_eq!(a, inject_bit_errors(&data, 0.01, 11).unwrap());
    assert_ne!(a.0, inject_bit_errors(&data, 0.01, 12).unwrap().0);
    let (all, n) = inject_bit_errors(&data, 1.0, 3).unwrap();
    assert_eq!(n, 4096 * 8);
    assert!(all.iter().all(|&b| b == !0x5a));
}

#[test]
fn latency_examples() {
    let p = ChannelProfile { prop_delay_s: 0.0, ..ChannelProfile::for_tier(Tier::Edge, 1e9, 0.0, 0) };
    assert!((link_latency(736_000_000, &p) - 0.736).abs() < 1e-12);
    assert!((link_latency(4_320_000_000, &p) - 4.32).abs() < 1e-12);
    let c = ChannelProfile::for_tier(Tier::Central, 1e6, 0.0, 0);
    assert_eq!(link_latency(0, &c), c.prop_delay_s);
}

#[test]
fn reference_model_survives_ber_1e3() {
    let r = reference(7);
    let gen = r.generator(7);
    let sub = gen.generate(&CompressionPlan::new(SplitDepth::Full, 1.0, BitWidths::Uniform(8)).unwrap()).unwrap();
    let clean = gen.accuracy(&sub.container).unwrap();
    let mean_at = |ber: f64| {
        (0..20u64)
            .map(|seed| {
                let p = ChannelProfile::for_tier(Tier::Edge, 1e6, ber, seed);
                let (rx, link) = transmit(&sub.container, &p).unwrap();
                assert_eq!(link.latency_s, link_latency(sub.container.bit_len(), &p));
                gen.accuracy(&rx).unwrap()
            })
            .sum::<f64>()
            / 20.0
    };
    let (m0, m3, m2) = (mean_at(0.0), mean_at(1e-3), mean_at(1e-2));
    println!("clean {clean:.4} ber0 {m0:.4} ber1e-3 {m3:.4} ber1e-2 {m2:.4}");
    assert!((m0 - clean).abs() < 1e-12);
    assert!((m0 - m3).abs() <= 0.02);
    assert!(m3 <= m0 + 0.01 && m2 <= m3 + 0.01);
}
