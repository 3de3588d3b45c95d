//! Oracles shared by the integration tests.

use std::collections::BTreeMap;

/// Output pair of a feed-forward encoder given the input history
/// `hist[0] = u_t, hist[1] = u_{t-1}, ...`; generator MSB taps `u_t`.
pub fn taps(gens: [u32; 2], k: usize, hist: &[u8]) -> [u8; 2] {
    gens.map(|g| {
        (0..k)
            .filter(|&j| (g >> (k - 1 - j)) & 1 == 1)
            .map(|j| hist.get(j).copied().unwrap_or(0))
            .fold(0, |a, b| a ^ b)
    })
}

/// Depth-first enumeration of input sequences that leave the zero state
/// with a 1 and first return to it, pruned at output weight `w_max` and
/// `max_len` branches. Returns `(A_d, W_I(d))` and the number of
/// sequences still open at the length limit.
pub fn enumerate(gens: [u32; 2], k: usize, w_max: u32, max_len: usize) -> (BTreeMap<u32, (u64, u64)>, u64) {
    fn go(
        gens: [u32; 2],
        k: usize,
        hist: &mut Vec<u8>,
        weight: u32,
        info: u64,
        w_max: u32,
        max_len: usize,
        out: &mut BTreeMap<u32, (u64, u64)>,
        cut: &mut u64,
    ) {
        for u in 0..2u8 {
            if hist.is_empty() && u == 0 {
                continue;
            }
            hist.insert(0, u);
            let o = taps(gens, k, hist);
            let w = weight + (o[0] + o[1]) as u32;
            let back_to_zero = hist.len() >= k - 1 && hist[..k - 1].iter().all(|&b| b == 0);
            if w <= w_max {
                if back_to_zero {
                    let e = out.entry(w).or_default();
                    e.0 += 1;
                    e.1 += info + u as u64;
                } else if hist.len() >= max_len {
                    *cut += 1;
                } else {
                    go(gens, k, hist, w, info + u as u64, w_max, max_len, out, cut);
                }
            }
            hist.remove(0);
        }
    }
    let mut out = BTreeMap::new();
    let mut cut = 0;
    go(gens, k, &mut Vec::new(), 0, 0, w_max, max_len, &mut out, &mut cut);
    (out, cut)
}
