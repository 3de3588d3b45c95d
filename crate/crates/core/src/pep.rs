//! Pairwise error probabilities and the bound kernels built from them.
//!
//! A pairwise decision between a transmitted point `x` and a competitor `z`
//! at squared distance `d2` is described by the metric difference `Δ`; its
//! transform `E[exp(-sΔ)]` is [`phi_delta`]. The bound `f(d)` on `d`
//! independent bit decisions is `P(Δ_1 + ... + Δ_d <= 0)` with each `Δ_l`
//! drawn from a [`DistanceMixture`], recovered from the transform by
//! numerical inversion along `Re s = 1/(2 N0)`.

use std::fmt;

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::expurgation::NeighborAssignment;
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelModel {
    Awgn,
    /// Independent unit-mean-square Rayleigh fading per symbol, known at the
    /// receiver.
    RayleighCsi,
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelModel::Awgn => "awgn",
            ChannelModel::RayleighCsi => "rayleigh",
        })
    }
}

impl std::str::FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelModel::Awgn),
            "rayleigh" | "rayleigh-csi" => Ok(ChannelModel::RayleighCsi),
            other => Err(Error::Config(format!("unknown channel '{other}'"))),
        }
    }
}

/// Channel model at a given `Es/N0`. Signals have unit average energy, so
/// the complex noise variance is `N0 = 10^(-Es/N0 / 10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub model: ChannelModel,
    pub es_n0_db: f64,
}

impl ChannelSpec {
    pub fn new(model: ChannelModel, es_n0_db: f64) -> Self {
        ChannelSpec { model, es_n0_db }
    }

    pub fn awgn(es_n0_db: f64) -> Self {
        Self::new(ChannelModel::Awgn, es_n0_db)
    }

    pub fn rayleigh(es_n0_db: f64) -> Self {
        Self::new(ChannelModel::RayleighCsi, es_n0_db)
    }

    /// Complex noise variance; zero for `Es/N0 = +inf`.
    pub fn n0(&self) -> f64 {
        10f64.powf(-self.es_n0_db / 10.0)
    }

    /// Abscissa of the inversion contour.
    pub fn saddlepoint(&self) -> f64 {
        0.5 / self.n0()
    }

    fn check_finite(&self) -> Result<f64> {
        let n0 = self.n0();
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(Error::Argument(format!(
                "Es/N0 of {} dB has no finite noise level",
                self.es_n0_db
            )));
        }
        Ok(n0)
    }
}

/// Transform `E[exp(-sΔ)]` of the metric difference for one pair at squared
/// distance `d2`.
pub fn phi_delta(ch: &ChannelSpec, d2: f64, s: Complex64) -> Result<Complex64> {
    let n0 = ch.n0();
    let q = s * (1.0 - s * n0);
    match ch.model {
        ChannelModel::Awgn => Ok((-q * d2).exp()),
        ChannelModel::RayleighCsi => {
            if (q * d2).re <= -1.0 {
                return Err(Error::Domain(format!("s = {s} with d2 = {d2}")));
            }
            Ok(1.0 / (1.0 + q * d2))
        }
    }
}

fn group_counts(d2_list: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = d2_list.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for d in sorted {
        match out.last_mut() {
            Some((v, n)) if (d - *v).abs() <= 1e-12 * v.abs().max(1.0) => *n += 1,
            _ => out.push((d, 1)),
        }
    }
    out
}

/// Exact probability that `x` loses to `z` over a sequence of independent
/// symbol pairs with the given squared distances.
pub fn pep_exact(ch: &ChannelSpec, d2_list: &[f64]) -> Result<f64> {
    if d2_list.is_empty() {
        return Err(Error::Argument("pairwise error probability needs at least one distance".into()));
    }
    if d2_list.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::Argument("squared distances must be finite and non-negative".into()));
    }
    pep_grouped(ch, &group_counts(d2_list))
}

/// [`pep_exact`] over `(squared distance, multiplicity)` pairs.
pub(crate) fn pep_grouped(ch: &ChannelSpec, groups: &[(f64, usize)]) -> Result<f64> {
    let total: f64 = groups.iter().map(|&(d, k)| d * k as f64).sum();
    if total == 0.0 {
        return Ok(0.5);
    }
    let n0 = ch.n0();
    if n0 == 0.0 {
        return Ok(0.0);
    }
    if !n0.is_finite() {
        return Ok(0.5);
    }
    match ch.model {
        ChannelModel::Awgn => Ok(0.5 * libm::erfc(total.sqrt() / (2.0 * n0.sqrt()))),
        ChannelModel::RayleighCsi => {
            let consts: Vec<(f64, i32)> = groups
                .iter()
                .filter(|&&(d, _)| d > 0.0)
                .map(|&(d, k)| (d / (4.0 * n0), k as i32))
                .collect();
            let integrand = |theta: f64| {
                let s2 = theta.sin().powi(2);
                consts
                    .iter()
                    .map(|&(c, k)| (s2 / (s2 + c)).powi(k))
                    .product::<f64>()
            };
            let v = quadrature::integrate(integrand, 0.0, std::f64::consts::FRAC_PI_2, 1e-14, 1e-12);
            Ok(v / std::f64::consts::PI)
        }
    }
}

/// Squared distance with its total weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub d2: f64,
    pub weight: f64,
}

/// Weighted squared distances of all kept pairwise terms. Each `(i, b, x,
/// target)` term carries weight `1/(m 2^m)`, so the total mass is the number
/// of target slots per `(x, i)`; aleph slots keep their mass in
/// `aleph_weight` but have a zero transform.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMixture {
    atoms: Vec<Atom>,
    aleph_weight: f64,
}

impl DistanceMixture {
    /// Groups equal distances; `None` terms are aleph.
    pub fn from_terms<I>(terms: I, weight: f64) -> Result<Self>
    where
        I: IntoIterator<Item = Option<f64>>,
    {
        let mut real = Vec::new();
        let mut aleph_weight = 0.0;
        for t in terms {
            match t {
                Some(d2) if d2.is_finite() && d2 > 0.0 => real.push(d2),
                Some(d2) => {
                    return Err(Error::Argument(format!("invalid squared distance {d2}")))
                }
                None => aleph_weight += weight,
            }
        }
        let mut sorted = real;
        sorted.sort_by(f64::total_cmp);
        let mut atoms: Vec<Atom> = Vec::new();
        for d in sorted {
            match atoms.last_mut() {
                Some(a) if (d - a.d2).abs() <= 1e-9 * a.d2 => a.weight += weight,
                _ => atoms.push(Atom { d2: d, weight }),
            }
        }
        Ok(DistanceMixture { atoms, aleph_weight })
    }

    pub fn from_assignment(c: &Constellation, a: &NeighborAssignment) -> Result<Self> {
        let pairs = (c.len() * c.bits()) as f64;
        Self::from_terms(a.term_distances(c), 1.0 / pairs)
    }

    /// One distance with unit weight.
    pub fn single(d2: f64) -> Result<Self> {
        Self::from_terms([Some(d2)], 1.0)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn aleph_weight(&self) -> f64 {
        self.aleph_weight
    }

    pub fn total_weight(&self) -> f64 {
        self.aleph_weight + self.atoms.iter().map(|a| a.weight).sum::<f64>()
    }

    /// `Σ w φ(d2, s)`, aleph terms contributing zero.
    pub fn transform(&self, ch: &ChannelSpec, s: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            acc += phi_delta(ch, a.d2, s)? * a.weight;
        }
        Ok(acc)
    }

    /// `(1 / (m 2^m)) Σ 1/d2`, the inverse of the harmonic distance.
    pub fn inverse_harmonic(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight / a.d2).sum()
    }
}

/// Quadrature settings for [`f_bound_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Initial Gauss-Chebyshev node count (even).
    pub nodes: usize,
    /// Node count at which doubling stops with an error.
    pub max_nodes: usize,
    /// Relative change between successive doublings accepted as converged.
    pub rel_tol: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            nodes: 64,
            max_nodes: 1 << 16,
            rel_tol: 1e-6,
        }
    }
}

/// Result of a converged inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: f64,
    pub nodes: usize,
    /// Relative change of the last doubling.
    pub last_change: f64,
}

fn gauss_chebyshev(mix: &DistanceMixture, ch: &ChannelSpec, d: u32, nodes: usize) -> Result<f64> {
    let c = ch.saddlepoint();
    let half = nodes / 2;
    let mut acc = 0.0;
    for k in 1..=half {
        let tau = ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * nodes) as f64).tan();
        let s = Complex64::new(c, c * tau);
        let phi = mix.transform(ch, s)?.powi(d as i32);
        acc += phi.re + tau * phi.im;
    }
    Ok(acc / nodes as f64)
}

/// `P(Δ_1 + ... + Δ_d <= 0)` for `d` draws from `mix`, by Gauss-Chebyshev
/// inversion with node doubling until successive values agree.
pub fn f_bound(mix: &DistanceMixture, ch: &ChannelSpec, d: u32) -> Result<f64> {
    Ok(f_bound_with(mix, ch, d, &InversionOptions::default())?.value)
}

pub fn f_bound_with(
    mix: &DistanceMixture,
    ch: &ChannelSpec,
    d: u32,
    opts: &InversionOptions,
) -> Result<Inversion> {
    if d == 0 {
        return Err(Error::Argument("Hamming distance must be at least 1".into()));
    }
    ch.check_finite()?;
    let mut nodes = opts.nodes.max(2) & !1;
    let mut prev = gauss_chebyshev(mix, ch, d, nodes)?;
    let mut change = f64::INFINITY;
    while nodes < opts.max_nodes {
        nodes *= 2;
        let next = gauss_chebyshev(mix, ch, d, nodes)?;
        change = if next == prev {
            0.0
        } else {
            (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE)
        };
        prev = next;
        if change < opts.rel_tol {
            return Ok(Inversion {
                value: next,
                nodes,
                last_change: change,
            });
        }
    }
    Err(Error::Numerical {
        message: format!("inversion for d = {d} at {} dB did not converge", ch.es_n0_db),
        nodes,
        last_change: change,
    })
}

/// Largest `d` accepted by [`f_bound_expansion`].
pub const EXPANSION_MAX_D: u32 = 12;

/// Literal multinomial expansion of `f(d)` over the mixture's distinct
/// distances, each composition evaluated with [`pep_exact`]. Compositions
/// that draw an aleph term contribute zero.
pub fn f_bound_expansion(mix: &DistanceMixture, ch: &ChannelSpec, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::Argument("Hamming distance must be at least 1".into()));
    }
    if d > EXPANSION_MAX_D {
        return Err(Error::Argument(format!(
            "expansion limited to d <= {EXPANSION_MAX_D}; use f_bound for d = {d}"
        )));
    }
    let atoms = mix.atoms();
    if atoms.is_empty() {
        return Ok(0.0);
    }
    let mut fact = vec![1.0f64; d as usize + 1];
    for k in 1..=d as usize {
        fact[k] = fact[k - 1] * k as f64;
    }

    fn walk(
        atoms: &[Atom],
        ch: &ChannelSpec,
        fact: &[f64],
        remaining: usize,
        at: usize,
        counts: &mut Vec<(f64, usize)>,
        coeff: f64,
        total: &mut f64,
    ) -> Result<()> {
        if at == atoms.len() - 1 {
            let w = atoms[at].weight.powi(remaining as i32) / fact[remaining];
            if remaining > 0 {
                counts.push((atoms[at].d2, remaining));
            }
            *total += coeff * w * pep_grouped(ch, counts)?;
            if remaining > 0 {
                counts.pop();
            }
            return Ok(());
        }
        for k in 0..=remaining {
            let w = atoms[at].weight.powi(k as i32) / fact[k];
            if k > 0 {
                counts.push((atoms[at].d2, k));
            }
            walk(atoms, ch, fact, remaining - k, at + 1, counts, coeff * w, total)?;
            if k > 0 {
                counts.pop();
            }
        }
        Ok(())
    }

    let mut total = 0.0;
    walk(atoms, ch, &fact, d as usize, 0, &mut Vec::new(), fact[d as usize], &mut total)?;
    Ok(total)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// High-SNR Rayleigh asymptote `C(2d-1, d) (N0 / dhc2)^d` of `f(d)`.
pub fn f_asymptotic(dhc2: f64, ch: &ChannelSpec, d: u32) -> f64 {
    binomial(2 * d - 1, d) * (ch.n0() / dhc2).powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_at_zero_distance() {
        for ch in [ChannelSpec::awgn(3.0), ChannelSpec::rayleigh(3.0)] {
            let v = phi_delta(&ch, 0.0, Complex64::new(0.7, -2.0)).unwrap();
            assert!((v - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn transform_at_saddlepoint() {
        let ch = ChannelSpec::rayleigh(7.0);
        let n0 = ch.n0();
        let s = Complex64::new(ch.saddlepoint(), 0.0);
        let v = phi_delta(&ch, 0.4, s).unwrap();
        assert!((v.re - 1.0 / (1.0 + 0.4 / (4.0 * n0))).abs() < 1e-14);
        // the saddlepoint maximizes s(1 - s N0), so it minimizes the real transform
        for ds in [-0.01, 0.01] {
            let off = phi_delta(&ch, 0.4, s + ds).unwrap().re;
            assert!(off > v.re);
        }
        let ch = ChannelSpec::awgn(7.0);
        let v = phi_delta(&ch, 0.4, s).unwrap();
        assert!((v.re - (-0.4 / (4.0 * n0)).exp()).abs() < 1e-14);
    }

    #[test]
    fn transform_domain() {
        let ch = ChannelSpec::rayleigh(0.0);
        // s(1 - s) d2 = -2 * 2 = -4 for s = -1
        assert!(matches!(
            phi_delta(&ch, 2.0, Complex64::new(-1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rayleigh_closed_form() {
        for db in [0.0, 5.0, 12.0, 25.0] {
            let ch = ChannelSpec::rayleigh(db);
            for d2 in [0.1, 0.4, 2.0] {
                let c = d2 / (4.0 * ch.n0());
                let closed = 0.5 * (1.0 - (c / (1.0 + c)).sqrt());
                let v = pep_exact(&ch, &[d2]).unwrap();
                assert!((v - closed).abs() < 1e-12, "{db} {d2}: {v} vs {closed}");
            }
        }
    }

    #[test]
    fn pep_edge_cases() {
        let ch = ChannelSpec::rayleigh(10.0);
        assert_eq!(pep_exact(&ch, &[0.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(pep_exact(&ch, &[]), Err(Error::Argument(_))));
        let v = pep_exact(&ch, &[0.4, 1.6, 0.4]).unwrap();
        assert!(v > 0.0 && v <= 0.5);
        let chernoff: f64 = [0.4, 1.6, 0.4]
            .iter()
            .map(|d| 1.0 / (1.0 + d / (4.0 * ch.n0())))
            .product();
        assert!(v <= chernoff);
    }

    #[test]
    fn awgn_q_function() {
        let ch = ChannelSpec::awgn(6.0);
        let v = pep_exact(&ch, &[2.0]).unwrap();
        let x = (2.0f64).sqrt() / (2.0 * ch.n0()).sqrt();
        let q = 0.5 * libm::erfc(x / 2f64.sqrt());
        assert!((v - q).abs() < 1e-15);
    }

    #[test]
    fn single_atom_bound_matches_exact() {
        for ch in [ChannelSpec::awgn(4.0), ChannelSpec::rayleigh(4.0), ChannelSpec::rayleigh(18.0)] {
            let mix = DistanceMixture::single(0.4).unwrap();
            let b = f_bound(&mix, &ch, 1).unwrap();
            let e = pep_exact(&ch, &[0.4]).unwrap();
            assert!((b - e).abs() / e < 1e-6);
            let b3 = f_bound(&mix, &ch, 3).unwrap();
            let e3 = pep_exact(&ch, &[0.4, 0.4, 0.4]).unwrap();
            assert!((b3 - e3).abs() / e3 < 1e-6);
            assert!((f_bound_expansion(&mix, &ch, 3).unwrap() - e3).abs() / e3 < 1e-12);
        }
    }

    #[test]
    fn expansion_cap() {
        let mix = DistanceMixture::single(0.4).unwrap();
        let ch = ChannelSpec::rayleigh(10.0);
        assert!(matches!(f_bound_expansion(&mix, &ch, 13), Err(Error::Argument(_))));
    }

    #[test]
    fn aleph_terms_contribute_nothing() {
        let ch = ChannelSpec::rayleigh(8.0);
        let with = DistanceMixture::from_terms([Some(0.4), None, Some(1.6), None], 0.5).unwrap();
        let without = DistanceMixture::from_terms([Some(0.4), Some(1.6)], 0.5).unwrap();
        assert_eq!(with.total_weight(), 2.0);
        assert_eq!(with.aleph_weight(), 1.0);
        for d in 1..4 {
            let a = f_bound(&with, &ch, d).unwrap();
            let b = f_bound(&without, &ch, d).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn asymptote_power_law() {
        let ch = ChannelSpec::rayleigh(30.0);
        assert!((f_asymptotic(0.5, &ch, 1) - ch.n0() / 0.5).abs() < 1e-18);
        let r = f_asymptotic(0.5, &ch, 3) / f_asymptotic(1.0, &ch, 3);
        assert!((r - 8.0).abs() < 1e-12);
    }

    #[test]
    fn bound_rejects_infinite_snr() {
        let mix = DistanceMixture::single(0.4).unwrap();
        assert!(f_bound(&mix, &ChannelSpec::rayleigh(f64::INFINITY), 2).is_err());
        assert!(f_bound(&mix, &ChannelSpec::rayleigh(10.0), 0).is_err());
    }
}
