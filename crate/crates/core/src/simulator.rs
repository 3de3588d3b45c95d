//! Monte Carlo simulation of the BICM chain.
//!
//! Every block draws from its own ChaCha20 streams, selected by
//! `(seed, block index)`, so results do not depend on how blocks are
//! scheduled across threads. Information bits and the interleaver, the
//! noise, and the fading each use a separate stream.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::convcode::{viterbi, ConvCode};
use crate::error::{Error, Result};
use crate::pep::{ChannelModel, ChannelSpec};

const STREAM_DATA: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_FADING: u64 = 2;
const STREAMS_PER_UNIT: u64 = 4;

/// Blocks decoded per parallel batch before the stopping rule is checked.
const BATCH: usize = 16;

fn stream(seed: u64, unit: u64, which: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(unit * STREAMS_PER_UNIT + which);
    rng
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub constellation: Constellation,
    pub channel: ChannelSpec,
    pub code: ConvCode,
    /// Information bits per block, excluding the tail.
    pub block_len: usize,
    pub blocks: usize,
    pub seed: u64,
    /// Stop after the block at which this many errors have accumulated.
    pub max_errors: Option<u64>,
}

impl SimConfig {
    pub fn new(constellation: Constellation, channel: ChannelSpec, seed: u64) -> Self {
        SimConfig {
            constellation,
            channel,
            code: ConvCode::standard(),
            block_len: 10_000,
            blocks: 200,
            seed,
            max_errors: Some(10_000),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 {
            return Err(Error::Config("block count must be positive".into()));
        }
        if self.block_len == 0 {
            return Err(Error::Config("block length must be positive".into()));
        }
        if self.channel.es_n0_db.is_nan() {
            return Err(Error::Config("Es/N0 is NaN".into()));
        }
        Ok(())
    }
}

/// An error-rate estimate with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub rate: f64,
    pub trials: u64,
    pub errors: u64,
    pub ci95: f64,
}

impl BerEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let rate = if trials == 0 { 0.0 } else { errors as f64 / trials as f64 };
        BerEstimate {
            rate,
            trials,
            errors,
            ci95: 1.96 * Self::sigma(rate, trials),
        }
    }

    fn sigma(rate: f64, trials: u64) -> f64 {
        if trials == 0 {
            0.0
        } else {
            (rate * (1.0 - rate) / trials as f64).sqrt()
        }
    }

    /// Standard error of the rate.
    pub fn std_error(&self) -> f64 {
        Self::sigma(self.rate, self.trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Fading {
    None,
    /// Fading path with the coefficient pinned to one.
    #[cfg(test)]
    Unit,
    Rayleigh,
}

impl Fading {
    fn for_channel(ch: &ChannelSpec) -> Self {
        match ch.model {
            ChannelModel::Awgn => Fading::None,
            ChannelModel::RayleighCsi => Fading::Rayleigh,
        }
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

fn draw_fading<R: Rng>(rng: &mut R, fading: Fading) -> Complex64 {
    match fading {
        Fading::None => Complex64::new(1.0, 0.0),
        #[cfg(test)]
        Fading::Unit => Complex64::new(1.0, 0.0),
        Fading::Rayleigh => complex_gaussian(rng, 1.0),
    }
}

/// Per-bit minimum squared distances `[λ(0), λ(1)]` for one received sample.
fn bit_metrics(c: &Constellation, y: Complex64, h: Complex64, out: &mut [[f64; 2]]) {
    for m in out.iter_mut() {
        *m = [f64::INFINITY; 2];
    }
    let bits = c.bits();
    for (k, &p) in c.points().iter().enumerate() {
        let d = (y - h * p).norm_sqr();
        let label = c.labels()[k];
        for (i, m) in out.iter_mut().enumerate() {
            let b = ((label >> (bits - 1 - i)) & 1) as usize;
            if d < m[b] {
                m[b] = d;
            }
        }
    }
}

pub(crate) fn run_block(cfg: &SimConfig, block: u64, fading: Fading) -> u64 {
    let c = &cfg.constellation;
    let m = c.bits();
    let mut data_rng = stream(cfg.seed, block, STREAM_DATA);
    let mut noise_rng = stream(cfg.seed, block, STREAM_NOISE);
    let mut fading_rng = stream(cfg.seed, block, STREAM_FADING);

    let info: Vec<u8> = (0..cfg.block_len).map(|_| data_rng.random_range(0..2u8)).collect();
    let coded = cfg.code.encode(&info);
    let n = coded.len();
    let padded = n.div_ceil(m) * m;
    let mut perm: Vec<usize> = (0..padded).collect();
    perm.shuffle(&mut data_rng);

    // interleaved[j] = coded[perm[j]]; padding bits are zero
    let interleaved: Vec<u8> = perm
        .iter()
        .map(|&p| if p < n { coded[p] } else { 0 })
        .collect();

    let n0 = cfg.channel.n0();
    let noisy = n0 > 0.0 && n0.is_finite();
    let mut metrics = vec![[0.0f64; 2]; padded];
    let mut sym_metrics = vec![[0.0f64; 2]; m];
    let label_to_index: Vec<usize> = {
        let mut v = vec![0; c.len()];
        for (k, &l) in c.labels().iter().enumerate() {
            v[l as usize] = k;
        }
        v
    };
    for (s, chunk) in interleaved.chunks(m).enumerate() {
        let label = chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        let x = c.point(label_to_index[label as usize]);
        let h = draw_fading(&mut fading_rng, fading);
        let noise = if noisy {
            complex_gaussian(&mut noise_rng, n0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let y = h * x + noise;
        bit_metrics(c, y, h, &mut sym_metrics);
        metrics[s * m..(s + 1) * m].copy_from_slice(&sym_metrics);
    }

    let mut deinterleaved = vec![[0.0f64; 2]; n];
    for (j, &p) in perm.iter().enumerate() {
        if p < n {
            deinterleaved[p] = metrics[j];
        }
    }
    let decoded = viterbi(&cfg.code, &deinterleaved).expect("terminated codeword length");
    decoded
        .iter()
        .zip(&info)
        .filter(|(a, b)| a != b)
        .count() as u64
}

/// Bit error rate of the coded chain: encode, interleave, map, channel,
/// per-bit minimum-distance metrics, deinterleave, Viterbi.
pub fn simulate_ber(cfg: &SimConfig) -> Result<BerEstimate> {
    simulate_with(cfg, Fading::for_channel(&cfg.channel))
}

pub(crate) fn simulate_with(cfg: &SimConfig, fading: Fading) -> Result<BerEstimate> {
    cfg.validate()?;
    let mut errors = 0u64;
    let mut bits = 0u64;
    let mut start = 0usize;
    'outer: while start < cfg.blocks {
        let end = (start + BATCH).min(cfg.blocks);
        let counts: Vec<u64> = (start..end)
            .into_par_iter()
            .map(|b| run_block(cfg, b as u64, fading))
            .collect();
        for e in counts {
            errors += e;
            bits += cfg.block_len as u64;
            if cfg.max_errors.is_some_and(|cap| errors >= cap) {
                break 'outer;
            }
        }
        start = end;
    }
    Ok(BerEstimate::from_counts(errors, bits))
}

/// Trials per independent stream in [`estimate_f`].
const TRIALS_PER_CHUNK: u64 = 10_000;

fn subset_event_chunk(
    c: &Constellation,
    ch: &ChannelSpec,
    d: u32,
    trials: u64,
    seed: u64,
    chunk: u64,
) -> u64 {
    let mut rng = stream(seed, chunk, STREAM_DATA);
    let fading = Fading::for_channel(ch);
    let n0 = ch.n0();
    let m = c.bits();
    let mut hits = 0;
    for _ in 0..trials {
        let mut own = 0.0;
        let mut opp = 0.0;
        for _ in 0..d {
            let bit = rng.random_range(1..=m);
            let idx = rng.random_range(0..c.len());
            let value = c.label_bit(idx, bit);
            let h = draw_fading(&mut rng, fading);
            let y = h * c.point(idx) + complex_gaussian(&mut rng, n0);
            let mut best = [f64::INFINITY; 2];
            for (k, &p) in c.points().iter().enumerate() {
                let dist = (y - h * p).norm_sqr();
                let b = (c.label_bit(k, bit) == value) as usize;
                if dist < best[b] {
                    best[b] = dist;
                }
            }
            own += best[1];
            opp += best[0];
        }
        if opp <= own {
            hits += 1;
        }
    }
    hits
}

/// Frequency of the subset decision error over `d` independent label bits:
/// the summed nearest opposite-subset metric is no larger than the summed
/// nearest own-subset metric.
pub fn estimate_f(c: &Constellation, ch: &ChannelSpec, d: u32, trials: u64, seed: u64) -> Result<BerEstimate> {
    if d == 0 {
        return Err(Error::Argument("Hamming distance must be at least 1".into()));
    }
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let n = TRIALS_PER_CHUNK.min(trials - k * TRIALS_PER_CHUNK);
            subset_event_chunk(c, ch, d, n, seed, k)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(BerEstimate::from_counts(hits, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Labeling;

    fn small(c: Constellation, ch: ChannelSpec) -> SimConfig {
        SimConfig {
            block_len: 500,
            blocks: 8,
            ..SimConfig::new(c, ch, 7)
        }
    }

    #[test]
    fn noiseless_is_error_free() {
        let c = Constellation::square_qam(16, Labeling::Gray).unwrap();
        for ch in [
            ChannelSpec::awgn(f64::INFINITY),
            ChannelSpec::rayleigh(f64::INFINITY),
        ] {
            let est = simulate_ber(&small(c.clone(), ch)).unwrap();
            assert_eq!(est.errors, 0);
            assert_eq!(est.trials, 4000);
        }
    }

    #[test]
    fn unit_fading_equals_awgn() {
        let c = Constellation::square_qam(16, Labeling::Gray).unwrap();
        let cfg = small(c, ChannelSpec::awgn(4.0));
        for b in 0..4 {
            assert_eq!(run_block(&cfg, b, Fading::None), run_block(&cfg, b, Fading::Unit));
        }
        let a = simulate_with(&cfg, Fading::None).unwrap();
        let u = simulate_with(&cfg, Fading::Unit).unwrap();
        assert_eq!(a, u);
        assert!(a.errors > 0);
    }

    #[test]
    fn same_seed_same_result() {
        let c = Constellation::square_qam(64, Labeling::Gray).unwrap();
        let cfg = small(c, ChannelSpec::rayleigh(12.0));
        assert_eq!(simulate_ber(&cfg).unwrap(), simulate_ber(&cfg).unwrap());
    }

    #[test]
    fn error_cap_stops_early() {
        let c = Constellation::square_qam(16, Labeling::Gray).unwrap();
        let mut cfg = small(c, ChannelSpec::rayleigh(0.0));
        cfg.blocks = 64;
        cfg.max_errors = Some(100);
        let est = simulate_ber(&cfg).unwrap();
        assert!(est.errors >= 100);
        assert!(est.trials < 64 * 500);
    }

    #[test]
    fn zero_blocks_rejected() {
        let c = Constellation::psk(4, Labeling::Gray).unwrap();
        let mut cfg = small(c, ChannelSpec::awgn(3.0));
        cfg.blocks = 0;
        assert!(matches!(simulate_ber(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn qpsk_subset_event_matches_q_function() {
        let c = Constellation::psk(4, Labeling::Gray).unwrap();
        let ch = ChannelSpec::awgn(3.0);
        let est = estimate_f(&c, &ch, 1, 200_000, 11).unwrap();
        let exact = 0.5 * libm::erfc((2.0f64).sqrt() / (2.0 * ch.n0()).sqrt() / 2f64.sqrt());
        assert!((est.rate - exact).abs() < 3.0 * est.std_error() + 1e-12, "{} vs {exact}", est.rate);
    }

    #[test]
    fn confidence_width() {
        let e = BerEstimate::from_counts(25, 10_000);
        assert!((e.ci95 - 1.96 * (0.0025f64 * 0.9975 / 10_000.0).sqrt()).abs() < 1e-15);
    }
}
