use bicm::constellation::{Constellation, Labeling};
use bicm::expurgation::{NeighborAssignment, SelectOptions, Variant};
use bicm::pep::{f_bound, ChannelSpec, DistanceMixture};
use bicm::simulator::{estimate_f, simulate_ber, BerEstimate, SimConfig};

fn qam16() -> Constellation {
    Constellation::square_qam(16, Labeling::Gray).unwrap()
}

fn small_config(snr: f64, seed: u64) -> SimConfig {
    SimConfig {
        block_len: 2000,
        blocks: 24,
        ..SimConfig::new(qam16(), ChannelSpec::rayleigh(snr), seed)
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = small_config(9.0, 42);
    let one = in_pool(1, || simulate_ber(&cfg).unwrap());
    let four = in_pool(4, || simulate_ber(&cfg).unwrap());
    assert_eq!(one, four);
    assert!(one.errors > 0);

    let c = qam16();
    let ch = ChannelSpec::rayleigh(6.0);
    let a = in_pool(1, || estimate_f(&c, &ch, 2, 50_000, 8).unwrap());
    let b = in_pool(3, || estimate_f(&c, &ch, 2, 50_000, 8).unwrap());
    assert_eq!(a, b);
}

#[test]
fn different_seeds_differ() {
    let a = simulate_ber(&small_config(8.0, 1)).unwrap();
    let b = simulate_ber(&small_config(8.0, 2)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn ber_non_increasing_in_snr() {
    let est: Vec<BerEstimate> = [6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|&s| simulate_ber(&small_config(s, 5)).unwrap())
        .collect();
    for w in est.windows(2) {
        let slack = 3.0 * (w[0].std_error() + w[1].std_error());
        assert!(w[1].rate <= w[0].rate + slack, "{:?}", est);
    }
}

#[test]
fn awgn_coded_ber_is_small_at_moderate_snr() {
    let cfg = SimConfig {
        block_len: 2000,
        blocks: 8,
        ..SimConfig::new(qam16(), ChannelSpec::awgn(12.0), 3)
    };
    let est = simulate_ber(&cfg).unwrap();
    assert!(est.errors <= est.trials);
    assert!(est.rate < 1e-3, "{est:?}");
}

#[test]
fn subset_event_below_revised_bounds() {
    let c = qam16();
    let opts = SelectOptions::default();
    let mix = |v| {
        let a = NeighborAssignment::build(&c, v, &opts).unwrap();
        DistanceMixture::from_assignment(&c, &a).unwrap()
    };
    let (one, two) = (mix(Variant::One), mix(Variant::Two));
    for (snr, d) in [(4.0, 1), (8.0, 2), (8.0, 3)] {
        let ch = ChannelSpec::rayleigh(snr);
        let est = estimate_f(&c, &ch, d, 100_000, 21).unwrap();
        let margin = 3.0 * est.std_error();
        assert!(est.rate <= 0.5 + margin);
        assert!(est.rate <= f_bound(&one, &ch, d).unwrap() + margin, "{snr} dB d={d}");
        assert!(est.rate <= f_bound(&two, &ch, d).unwrap() + margin, "{snr} dB d={d}");
    }
}

#[test]
fn subset_event_for_odd_trial_counts() {
    let c = Constellation::psk(8, Labeling::Gray).unwrap();
    let est = estimate_f(&c, &ChannelSpec::awgn(5.0), 1, 12_345, 1).unwrap();
    assert_eq!(est.trials, 12_345);
    assert!(estimate_f(&c, &ChannelSpec::awgn(5.0), 0, 10, 1).is_err());
}
