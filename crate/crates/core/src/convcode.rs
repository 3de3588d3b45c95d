//! Rate-1/2 feedforward convolutional codes.
//!
//! Generators are given in octal, MSB-first: the most significant tap of a
//! generator multiplies the current input bit and the least significant tap
//! the oldest bit in the register. The encoder state holds the last `K - 1`
//! inputs with the most recent one in the high bit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvCode {
    constraint_length: u32,
    generators: [u32; 2],
}

impl Default for ConvCode {
    fn default() -> Self {
        ConvCode::standard()
    }
}

impl ConvCode {
    pub fn new(constraint_length: u32, generators: [u32; 2]) -> Result<Self> {
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::Config(format!(
                "constraint length {constraint_length} outside 2..=16"
            )));
        }
        let limit = 1u32 << constraint_length;
        for g in generators {
            if g == 0 || g >= limit {
                return Err(Error::Config(format!(
                    "generator {g:o} does not fit constraint length {constraint_length}"
                )));
            }
        }
        if generators.iter().all(|g| g >> (constraint_length - 1) == 0) {
            return Err(Error::Config("no generator taps the current input".into()));
        }
        Ok(ConvCode {
            constraint_length,
            generators,
        })
    }

    /// The 64-state (133, 171) code.
    pub fn standard() -> Self {
        ConvCode {
            constraint_length: 7,
            generators: [0o133, 0o171],
        }
    }

    /// Parses generators such as `"133,171"`; the constraint length is the
    /// bit length of the widest generator.
    pub fn from_octal(spec: &str) -> Result<Self> {
        let gens = spec
            .split(',')
            .map(|g| {
                u32::from_str_radix(g.trim(), 8)
                    .map_err(|_| Error::Config(format!("bad octal generator '{g}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let gens: [u32; 2] = gens
            .try_into()
            .map_err(|_| Error::Config("exactly two generators are required".into()))?;
        let k = 32 - gens.iter().map(|g| g.leading_zeros()).min().unwrap_or(32);
        Self::new(k, gens)
    }

    pub fn constraint_length(&self) -> u32 {
        self.constraint_length
    }

    pub fn generators(&self) -> [u32; 2] {
        self.generators
    }

    pub fn num_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    pub fn memory(&self) -> usize {
        self.constraint_length as usize - 1
    }

    /// `(next state, output bits)` for one input bit; outputs packed with
    /// the first generator's bit in position 1.
    #[inline]
    pub fn step(&self, state: usize, input: u8) -> (usize, u8) {
        let reg = ((input as u32) << self.memory()) | state as u32;
        let out0 = (reg & self.generators[0]).count_ones() & 1;
        let out1 = (reg & self.generators[1]).count_ones() & 1;
        ((reg >> 1) as usize, ((out0 << 1) | out1) as u8)
    }

    /// Zero-tail terminated encoding: output has `2 * (len + K - 1)` bits.
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * (info.len() + self.memory()));
        let mut state = 0;
        for &b in info.iter().chain(std::iter::repeat(&0).take(self.memory())) {
            let (next, bits) = self.step(state, b & 1);
            out.push(bits >> 1);
            out.push(bits & 1);
            state = next;
        }
        out
    }
}

/// Path count and total information weight at one output weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpectrumEntry {
    pub paths: u64,
    pub info_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSpectrum {
    pub d_free: u32,
    pub d_max: u32,
    /// One entry for every weight in `d_free..=d_max`.
    pub entries: BTreeMap<u32, SpectrumEntry>,
}

impl WeightSpectrum {
    pub fn get(&self, d: u32) -> SpectrumEntry {
        self.entries.get(&d).copied().unwrap_or_default()
    }
}

/// Extra weight beyond `d_free` allowed by [`weight_spectrum`].
pub const SPECTRUM_SPAN_LIMIT: u32 = 20;

/// Minimum output weight of a detour from the zero state.
pub fn free_distance(code: &ConvCode) -> u32 {
    // Dijkstra over states, forcing a leading 1
    let n = code.num_states();
    let mut best = vec![u32::MAX; n];
    let (s0, o0) = code.step(0, 1);
    best[s0] = o0.count_ones();
    let mut done = vec![false; n];
    let mut answer = u32::MAX;
    loop {
        let Some(u) = (0..n)
            .filter(|&s| !done[s] && best[s] != u32::MAX)
            .min_by_key(|&s| best[s])
        else {
            break;
        };
        if u == 0 {
            answer = best[0];
            break;
        }
        done[u] = true;
        for b in 0..2u8 {
            let (v, o) = code.step(u, b);
            let w = best[u] + o.count_ones();
            if w < best[v] {
                best[v] = w;
            }
        }
    }
    answer
}

/// Detour counts from the zero state up to output weight `d_max`, by
/// breadth-first expansion of `(state, weight)` classes.
pub fn weight_spectrum(code: &ConvCode, d_max: u32) -> Result<WeightSpectrum> {
    let d_free = free_distance(code);
    if d_free == u32::MAX {
        return Err(Error::Config("code has no finite-weight detour".into()));
    }
    if d_max < d_free || d_max > d_free + SPECTRUM_SPAN_LIMIT {
        return Err(Error::Argument(format!(
            "d_max {d_max} must lie in {d_free}..={}",
            d_free + SPECTRUM_SPAN_LIMIT
        )));
    }
    let n = code.num_states();
    let width = d_max as usize + 1;
    // live[state * width + w] = (paths, summed info weight) not yet merged
    let mut live = vec![SpectrumEntry::default(); n * width];
    let (s0, o0) = code.step(0, 1);
    let w0 = o0.count_ones() as usize;
    let mut entries: BTreeMap<u32, SpectrumEntry> =
        (d_free..=d_max).map(|d| (d, SpectrumEntry::default())).collect();
    if w0 <= d_max as usize {
        live[s0 * width + w0] = SpectrumEntry {
            paths: 1,
            info_weight: 1,
        };
    }
    // weight grows at least once every `num_states` steps on a
    // non-catastrophic code, so this bounds the depth
    let max_steps = (d_max as usize + 1) * n + n;
    for _ in 0..max_steps {
        let mut next = vec![SpectrumEntry::default(); n * width];
        let mut any = false;
        for s in 1..n {
            for w in 0..width {
                let cur = live[s * width + w];
                if cur.paths == 0 {
                    continue;
                }
                for b in 0..2u8 {
                    let (t, o) = code.step(s, b);
                    let nw = w + o.count_ones() as usize;
                    if nw > d_max as usize {
                        continue;
                    }
                    let add = SpectrumEntry {
                        paths: cur.paths,
                        info_weight: cur.info_weight + b as u64 * cur.paths,
                    };
                    if t == 0 {
                        let e = entries.get_mut(&(nw as u32)).expect("weight in range");
                        e.paths += add.paths;
                        e.info_weight += add.info_weight;
                    } else {
                        let slot = &mut next[t * width + nw];
                        slot.paths += add.paths;
                        slot.info_weight += add.info_weight;
                        any = true;
                    }
                }
            }
        }
        live = next;
        if !any {
            return Ok(WeightSpectrum {
                d_free,
                d_max,
                entries,
            });
        }
    }
    Err(Error::Config(
        "spectrum did not terminate; the code may be catastrophic".into(),
    ))
}

/// Maximum-likelihood path for per-coded-bit metrics `[λ(0), λ(1)]`
/// (smaller is better), starting and ending in state zero. Returns the
/// information bits without the tail.
///
/// On equal path metrics the lower-numbered predecessor wins.
pub fn viterbi(code: &ConvCode, metrics: &[[f64; 2]]) -> Result<Vec<u8>> {
    let mem = code.memory();
    if metrics.len() % 2 != 0 || metrics.len() / 2 < mem {
        return Err(Error::Argument(format!(
            "{} metric pairs do not form a terminated codeword",
            metrics.len()
        )));
    }
    let steps = metrics.len() / 2;
    let n = code.num_states();
    let half = n / 2;

    // outputs of the two branches into each state, indexed by predecessor choice
    let mut branch_out = vec![[0u8; 2]; n];
    for (t, slot) in branch_out.iter_mut().enumerate() {
        let u = (t >> (mem - 1)) as u8;
        for b in 0..2 {
            let s = ((t & (half - 1)) << 1) | b;
            slot[b] = code.step(s, u).1;
        }
    }

    let mut cost = vec![f64::INFINITY; n];
    cost[0] = 0.0;
    let mut next = vec![0.0; n];
    let mut decisions = vec![0u8; steps * n];
    for step in 0..steps {
        let m0 = metrics[2 * step];
        let m1 = metrics[2 * step + 1];
        let bm = |o: u8| m0[(o >> 1) as usize] + m1[(o & 1) as usize];
        let row = &mut decisions[step * n..(step + 1) * n];
        for t in 0..n {
            let base = (t & (half - 1)) << 1;
            let c0 = cost[base] + bm(branch_out[t][0]);
            let c1 = cost[base | 1] + bm(branch_out[t][1]);
            if c1 < c0 {
                next[t] = c1;
                row[t] = 1;
            } else {
                next[t] = c0;
                row[t] = 0;
            }
        }
        std::mem::swap(&mut cost, &mut next);
    }

    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for step in (0..steps).rev() {
        bits[step] = (state >> (mem - 1)) as u8;
        let b = decisions[step * n + state] as usize;
        state = ((state & (half - 1)) << 1) | b;
    }
    bits.truncate(steps - mem);
    Ok(bits)
}

/// A union bound assembled over a weight spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionBound {
    pub value: f64,
    /// Share of the highest-weight term in the total.
    pub last_term_ratio: f64,
}

/// `Σ_{d = d_free}^{d_max} W_I(d) f(d)` for one input bit per trellis branch.
pub fn ber_union_bound<F>(spec: &WeightSpectrum, mut f: F) -> UnionBound
where
    F: FnMut(u32) -> f64,
{
    let mut value = 0.0;
    let mut last = 0.0;
    for d in spec.d_free..=spec.d_max {
        let w = spec.get(d).info_weight;
        last = if w == 0 { 0.0 } else { w as f64 * f(d) };
        value += last;
    }
    UnionBound {
        value,
        last_term_ratio: if value > 0.0 { last / value } else { 0.0 },
    }
}

/// Like [`ber_union_bound`] for a fallible `f`.
pub fn try_ber_union_bound<F>(spec: &WeightSpectrum, mut f: F) -> Result<UnionBound>
where
    F: FnMut(u32) -> Result<f64>,
{
    let mut err = None;
    let ub = ber_union_bound(spec, |d| match f(d) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(ub),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_code_shape() {
        let c = ConvCode::standard();
        assert_eq!(c.num_states(), 64);
        assert_eq!(free_distance(&c), 10);
        assert_eq!(ConvCode::from_octal("133, 171").unwrap(), c);
    }

    #[test]
    fn bad_generators() {
        assert!(ConvCode::from_octal("133").is_err());
        assert!(ConvCode::from_octal("19,7").is_err());
        assert!(ConvCode::new(3, [0, 5]).is_err());
    }

    #[test]
    fn zero_input_zero_output() {
        let c = ConvCode::standard();
        let out = c.encode(&[0; 20]);
        assert_eq!(out.len(), 2 * 26);
        assert!(out.iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response_weight() {
        let c = ConvCode::standard();
        let mut info = vec![0u8; 10];
        info[0] = 1;
        let w: u32 = c.encode(&info).iter().map(|&b| b as u32).sum();
        assert!(w >= 10);
        // taps of 133 and 171 hold five ones each
        assert_eq!(w, 10);
    }

    #[test]
    fn known_leading_spectrum() {
        let s = weight_spectrum(&ConvCode::standard(), 16).unwrap();
        assert_eq!(s.d_free, 10);
        for d in 0..10 {
            assert_eq!(s.get(d).paths, 0);
        }
        assert_eq!(s.get(10), SpectrumEntry { paths: 11, info_weight: 36 });
        assert_eq!(s.get(11).paths, 0);
        assert_eq!(s.get(12), SpectrumEntry { paths: 38, info_weight: 211 });
        assert_eq!(s.get(14), SpectrumEntry { paths: 193, info_weight: 1404 });
        assert_eq!(s.get(16), SpectrumEntry { paths: 1331, info_weight: 11633 });
    }

    #[test]
    fn spectrum_cost_guard() {
        assert!(matches!(
            weight_spectrum(&ConvCode::standard(), 31),
            Err(Error::Argument(_))
        ));
    }

    fn hard_metrics(bits: &[u8]) -> Vec<[f64; 2]> {
        bits.iter()
            .map(|&b| if b == 0 { [0.0, 1.0] } else { [1.0, 0.0] })
            .collect()
    }

    #[test]
    fn noiseless_round_trip() {
        let c = ConvCode::standard();
        let info: Vec<u8> = (0..100).map(|k| ((k * 7 + 3) % 5 % 2) as u8).collect();
        let dec = viterbi(&c, &hard_metrics(&c.encode(&info))).unwrap();
        assert_eq!(dec, info);
    }

    #[test]
    fn corrects_single_flip() {
        let c = ConvCode::standard();
        let info: Vec<u8> = (0..50).map(|k| (k % 3 == 0) as u8).collect();
        let mut coded = c.encode(&info);
        coded[37] ^= 1;
        assert_eq!(viterbi(&c, &hard_metrics(&coded)).unwrap(), info);
    }

    #[test]
    fn ties_decode_to_zero() {
        let c = ConvCode::standard();
        let dec = viterbi(&c, &vec![[0.5, 0.5]; 2 * 30]).unwrap();
        assert_eq!(dec, vec![0u8; 24]);
    }

    #[test]
    fn length_mismatch() {
        let c = ConvCode::standard();
        assert!(matches!(viterbi(&c, &[[0.0, 1.0]; 3]), Err(Error::Argument(_))));
        assert!(matches!(viterbi(&c, &[[0.0, 1.0]; 4]), Err(Error::Argument(_))));
    }

    #[test]
    fn union_bound_assembly() {
        let s = weight_spectrum(&ConvCode::standard(), 10).unwrap();
        let ub = ber_union_bound(&s, |_| 0.0);
        assert_eq!(ub.value, 0.0);
        let ub = ber_union_bound(&s, |_| 1e-3);
        assert!((ub.value - 36e-3).abs() < 1e-15);
        assert_eq!(ub.last_term_ratio, 1.0);
    }
}
