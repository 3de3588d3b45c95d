//! Neighbor selection for expurgated union bounds.
//!
//! For every point `x` and label bit `i`, a selection lists the signal
//! points whose pairwise error terms are kept:
//!
//! * [`Variant::Orig`] keeps the single nearest point of the opposite subset.
//! * [`Variant::One`] adds the nearest opposite point on the other side of
//!   `x` whenever the first half-plane leaves part of the error region
//!   uncovered.
//! * [`Variant::Two`] replaces each kept point by the mirror image of `x`
//!   across the nearest error-region boundary on that side, so the pairwise
//!   boundary coincides with the true decision boundary. Mirrors may fall
//!   outside the signal set.
//!
//! A side that needs no covering term gets [`Target::Aleph`], whose
//! pairwise error probability is zero.
//!
//! Lattice bits whose subsets are unions of rows or columns reduce to a
//! one-dimensional problem along one axis; circular constellations are
//! handled angularly. Two-dimensional subsets (set-partitioned QAM) are
//! only supported through a greedy grid cover, and results are flagged
//! `nonstandard`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::constellation::{Axis, Constellation, Geometry, Labeling};
use crate::error::{Error, Result};
use crate::geometry::{ErrorRegion, GridSpec, HalfPlane, RegionMask};

const COORD_TOL: f64 = 1e-9;
const DIST_TIE: f64 = 1e-12;
const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Orig,
    One,
    Two,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Orig, Variant::One, Variant::Two];

    /// Name used on the command line and in CSV headers.
    pub fn cli_name(self) -> &'static str {
        match self {
            Variant::Orig => "orig",
            Variant::One => "new1",
            Variant::Two => "new2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Orig => "orig",
            Variant::One => "I",
            Variant::Two => "II",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "orig" => Ok(Variant::Orig),
            "new1" | "i" | "1" => Ok(Variant::One),
            "new2" | "ii" | "2" => Ok(Variant::Two),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// A competitor point in a pairwise error term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// A point of the signal set, by index.
    Point(usize),
    /// A point of the extended lattice or circle outside the signal set.
    Extended(Complex64),
    /// No covering term needed; contributes zero probability.
    Aleph,
}

impl Target {
    pub fn position(&self, c: &Constellation) -> Option<Complex64> {
        match *self {
            Target::Point(k) => Some(c.point(k)),
            Target::Extended(p) => Some(p),
            Target::Aleph => None,
        }
    }

    pub fn point_index(&self) -> Option<usize> {
        match *self {
            Target::Point(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_aleph(&self) -> bool {
        matches!(self, Target::Aleph)
    }
}

/// Kept competitors for one `(x, i)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub targets: Vec<Target>,
    pub nonstandard: bool,
}

impl Selection {
    /// Positions of the non-aleph targets.
    pub fn positions(&self, c: &Constellation) -> Vec<Complex64> {
        self.targets.iter().filter_map(|t| t.position(c)).collect()
    }

    /// Squared distances from `x`, `None` for aleph.
    pub fn distances(&self, c: &Constellation, x: Complex64) -> Vec<Option<f64>> {
        self.targets
            .iter()
            .map(|t| t.position(c).map(|z| (z - x).norm_sqr()))
            .collect()
    }
}

/// Options for [`select_neighbors_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    /// Enables the greedy cover for two-dimensional subsets.
    pub allow_nonstandard: bool,
    /// Grid used by the greedy cover.
    pub greedy_grid: GridSpec,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            allow_nonstandard: false,
            greedy_grid: GridSpec::square(4.0, 0.025),
        }
    }
}

impl SelectOptions {
    pub fn nonstandard() -> Self {
        SelectOptions {
            allow_nonstandard: true,
            ..Default::default()
        }
    }
}

fn check_point(c: &Constellation, x: usize) -> Result<()> {
    if x >= c.len() {
        return Err(Error::Argument(format!("point index {x} out of range")));
    }
    Ok(())
}

fn nearest_opposite(c: &Constellation, x: usize, bit: usize) -> usize {
    let b = c.label_bit(x, bit);
    let px = c.point(x);
    let mut best: Option<(f64, usize)> = None;
    for k in 0..c.len() {
        if c.label_bit(k, bit) == b {
            continue;
        }
        let d2 = (c.point(k) - px).norm_sqr();
        match best {
            Some((bd, _)) if d2 >= bd - DIST_TIE => {}
            _ => best = Some((d2, k)),
        }
    }
    best.expect("opposite subset is never empty").1
}

fn locate(c: &Constellation, p: Complex64) -> Target {
    match c.points().iter().position(|q| (q - p).norm() < COORD_TOL) {
        Some(k) => Target::Point(k),
        None => Target::Extended(p),
    }
}

/// Neighbors of point `x` for bit `bit` under `variant`. Two-dimensional
/// subsets are rejected; see [`select_neighbors_with`].
pub fn select_neighbors(c: &Constellation, x: usize, bit: usize, variant: Variant) -> Result<Selection> {
    select_neighbors_with(c, x, bit, variant, &SelectOptions::default())
}

pub fn select_neighbors_with(
    c: &Constellation,
    x: usize,
    bit: usize,
    variant: Variant,
    opts: &SelectOptions,
) -> Result<Selection> {
    check_point(c, x)?;
    c.subset(bit, 0)?;
    if variant == Variant::Orig {
        return Ok(Selection {
            targets: vec![Target::Point(nearest_opposite(c, x, bit))],
            nonstandard: false,
        });
    }
    match c.geometry() {
        Geometry::Circle { .. } => Ok(select_on_circle(c, x, bit, variant)),
        Geometry::RectLattice { .. } => match c.bit_axis(bit)? {
            Some(axis) => Ok(select_on_axis(c, x, bit, axis, variant)),
            None => greedy_or_reject(c, x, bit, variant, opts, None),
        },
        Geometry::Custom => greedy_or_reject(c, x, bit, variant, opts, None),
    }
}

fn greedy_or_reject(
    c: &Constellation,
    x: usize,
    bit: usize,
    variant: Variant,
    opts: &SelectOptions,
    mask: Option<&RegionMask>,
) -> Result<Selection> {
    if !opts.allow_nonstandard {
        return Err(Error::UnsupportedGeometry(format!(
            "bit {bit} of {} has two-dimensional subsets",
            c.name()
        )));
    }
    let owned;
    let mask = match mask {
        Some(m) => m,
        None => {
            owned = ErrorRegion::for_subset(c, bit, c.label_bit(x, bit))?.mask(&opts.greedy_grid)?;
            &owned
        }
    };
    greedy_cover(c, x, bit, variant, mask)
}

/// One-dimensional rule along `axis`.
fn select_on_axis(c: &Constellation, x: usize, bit: usize, axis: Axis, variant: Variant) -> Selection {
    let px = c.point(x);
    let ux = axis.coord(px);
    let vx = axis.other().coord(px);

    // distinct levels along the axis with their bit value
    let mut levels: Vec<(f64, u8)> = Vec::new();
    for k in 0..c.len() {
        let u = axis.coord(c.point(k));
        if !levels.iter().any(|(l, _)| (l - u).abs() < COORD_TOL) {
            levels.push((u, c.label_bit(k, bit)));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let own = c.label_bit(x, bit);
    let pos = levels
        .iter()
        .position(|(l, _)| (l - ux).abs() < COORD_TOL)
        .expect("x lies on its own level");

    // (previous level, first opposite level) walking away from x
    let side = |dir: i64| -> Option<(f64, f64)> {
        let mut prev = ux;
        let mut j = pos as i64 + dir;
        while j >= 0 && (j as usize) < levels.len() {
            let (u, b) = levels[j as usize];
            if b != own {
                return Some((prev, u));
            }
            prev = u;
            j += dir;
        }
        None
    };

    let z1 = nearest_opposite(c, x, bit);
    let dir1: i64 = if axis.coord(c.point(z1)) > ux { 1 } else { -1 };

    let target_for = |dir: i64| -> Target {
        match side(dir) {
            None => Target::Aleph,
            Some((prev, opp)) => match variant {
                Variant::Two => {
                    let boundary = 0.5 * (prev + opp);
                    locate(c, axis.compose(2.0 * boundary - ux, vx))
                }
                _ => locate(c, axis.compose(opp, vx)),
            },
        }
    };
    let first = if variant == Variant::One {
        Target::Point(z1)
    } else {
        target_for(dir1)
    };
    Selection {
        targets: vec![first, target_for(-dir1)],
        nonstandard: false,
    }
}

fn wrap_2pi(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

/// Whether the cone of directions `[start, start + width]` lies in the
/// half-plane toward `t` from `x`, for `x` and `t` on a circle about the origin.
fn arc_in_half_plane(x: Complex64, t: Complex64, start: f64, width: f64) -> bool {
    let dir = (t - x).arg();
    let offset = wrap_2pi(start - (dir - PI / 2.0) + ANGLE_EPS) - ANGLE_EPS;
    offset >= -ANGLE_EPS && offset + width <= PI + ANGLE_EPS
}

/// Angular rule for points on a circle.
fn select_on_circle(c: &Constellation, x: usize, bit: usize, variant: Variant) -> Selection {
    let n = c.len();
    let radius = c.point(x).norm();
    let theta = |k: usize| c.point(k).arg();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| wrap_2pi(theta(a)).total_cmp(&wrap_2pi(theta(b))));
    let pos = order.iter().position(|&k| k == x).expect("x in order");
    let own = c.label_bit(x, bit);
    let tx = theta(x);
    // counterclockwise angular offset from x
    let ccw = |k: usize| wrap_2pi(theta(k) - tx);

    // first opposite point and half-way boundary offset walking in `dir`
    let walk = |dir: i64| -> (usize, f64) {
        let mut prev_off = 0.0;
        for step in 1..n as i64 {
            let k = order[(pos as i64 + dir * step).rem_euclid(n as i64) as usize];
            let off = if dir > 0 { ccw(k) } else { ccw(k) - 2.0 * PI };
            if c.label_bit(k, bit) != own {
                return (k, 0.5 * (prev_off + off));
            }
            prev_off = off;
        }
        unreachable!("opposite subset is never empty")
    };

    // Voronoi sectors of the opposite points
    let arcs: Vec<(f64, f64)> = (0..n)
        .filter(|&j| c.label_bit(order[j], bit) != own)
        .map(|j| {
            let k = order[j];
            let before = order[(j + n - 1) % n];
            let after = order[(j + 1) % n];
            let lo = 0.5 * wrap_2pi(theta(k) - theta(before));
            let hi = 0.5 * wrap_2pi(theta(after) - theta(k));
            let (lo, hi) = if n == 1 { (PI, PI) } else { (lo, hi) };
            (theta(k) - lo, lo + hi)
        })
        .collect();

    let z1 = nearest_opposite(c, x, bit);
    let (ccw_first, ccw_boundary) = walk(1);
    let (cw_first, cw_boundary) = walk(-1);
    let (first_dir, other_dir) = if ccw_first == z1 { (1, -1) } else { (-1, 1) };

    let target_for = |dir: i64| -> Target {
        let (first, boundary) = if dir > 0 {
            (ccw_first, ccw_boundary)
        } else {
            (cw_first, cw_boundary)
        };
        match variant {
            Variant::Two => locate(c, Complex64::from_polar(radius, tx + 2.0 * boundary)),
            _ => Target::Point(first),
        }
    };

    let t1 = if variant == Variant::One {
        Target::Point(z1)
    } else {
        target_for(first_dir)
    };
    let p1 = t1.position(c).expect("real or mirrored point");
    let alone = arcs
        .iter()
        .all(|&(start, width)| arc_in_half_plane(c.point(x), p1, start, width));
    let t2 = if alone { Target::Aleph } else { target_for(other_dir) };
    Selection {
        targets: vec![t1, t2],
        nonstandard: false,
    }
}

/// Mirror of `x` across the first error-region boundary met on the segment
/// from `x` toward `z`.
fn reflect_toward(region: &ErrorRegion, x: Complex64, z: Complex64) -> Complex64 {
    const STEPS: usize = 2000;
    let at = |t: f64| x + (z - x) * t;
    let mut hi = 1.0;
    for s in 1..=STEPS {
        let t = s as f64 / STEPS as f64;
        if region.contains(at(t)) {
            hi = t;
            break;
        }
    }
    let mut lo = hi - 1.0 / STEPS as f64;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if region.contains(at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    x + (z - x) * (2.0 * hi)
}

/// Greedy half-plane cover of a two-dimensional error region.
fn greedy_cover(
    c: &Constellation,
    x: usize,
    bit: usize,
    variant: Variant,
    mask: &RegionMask,
) -> Result<Selection> {
    let px = c.point(x);
    let own = c.label_bit(x, bit);
    let mut opposite: Vec<usize> = (0..c.len()).filter(|&k| c.label_bit(k, bit) != own).collect();
    opposite.sort_by(|&a, &b| {
        (c.point(a) - px)
            .norm_sqr()
            .total_cmp(&(c.point(b) - px).norm_sqr())
            .then(a.cmp(&b))
    });
    let region = ErrorRegion::for_subset(c, bit, own)?;
    let mut candidates: Vec<Complex64> = Vec::new();
    if variant == Variant::Two {
        candidates.extend(opposite.iter().map(|&k| reflect_toward(&region, px, c.point(k))));
    }
    candidates.extend(opposite.iter().map(|&k| c.point(k)));

    let grid = *mask.grid();
    let mut uncovered = crate::geometry::coverage_check_masked(mask, px, &[])?.witnesses;
    let mut targets = Vec::new();
    for cand in candidates {
        if uncovered.is_empty() {
            break;
        }
        let h = HalfPlane::new(px, cand);
        let before = uncovered.len();
        uncovered.retain(|&y| !h.contains(y));
        if uncovered.len() < before {
            targets.push(locate(c, cand));
        }
    }
    if !uncovered.is_empty() {
        return Err(Error::Numerical {
            message: format!("greedy cover left {} cells uncovered", uncovered.len()),
            nodes: grid.len(),
            last_change: 0.0,
        });
    }
    // a region whose grid footprint is empty still needs its nearest term
    if targets.is_empty() {
        targets.push(Target::Point(opposite[0]));
    }
    Ok(Selection {
        targets,
        nonstandard: true,
    })
}

/// Selections for every `(x, i)` of a constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborAssignment {
    pub variant: Variant,
    bits: usize,
    entries: Vec<Selection>,
}

impl NeighborAssignment {
    pub fn build(c: &Constellation, variant: Variant, opts: &SelectOptions) -> Result<Self> {
        let m = c.bits();
        let mut entries = Vec::with_capacity(c.len() * m);
        // greedy masks depend only on (bit, value)
        let mut masks: Vec<Option<[RegionMask; 2]>> = vec![None; m + 1];
        for x in 0..c.len() {
            for bit in 1..=m {
                let two_dimensional = variant != Variant::Orig
                    && match c.geometry() {
                        Geometry::RectLattice { .. } => c.bit_axis(bit)?.is_none(),
                        Geometry::Custom => true,
                        Geometry::Circle { .. } => false,
                    };
                let sel = if two_dimensional && opts.allow_nonstandard {
                    if masks[bit].is_none() {
                        let m0 = ErrorRegion::for_subset(c, bit, 0)?.mask(&opts.greedy_grid)?;
                        let m1 = ErrorRegion::for_subset(c, bit, 1)?.mask(&opts.greedy_grid)?;
                        masks[bit] = Some([m0, m1]);
                    }
                    let mask = &masks[bit].as_ref().expect("just built")[c.label_bit(x, bit) as usize];
                    greedy_or_reject(c, x, bit, variant, opts, Some(mask))?
                } else {
                    select_neighbors_with(c, x, bit, variant, opts)?
                };
                entries.push(sel);
            }
        }
        Ok(NeighborAssignment {
            variant,
            bits: m,
            entries,
        })
    }

    pub fn get(&self, x: usize, bit: usize) -> &Selection {
        &self.entries[x * self.bits + bit - 1]
    }

    /// `(x, bit, selection)` in fixed index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Selection)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, s)| (k / self.bits, k % self.bits + 1, s))
    }

    pub fn nonstandard(&self) -> bool {
        self.entries.iter().any(|s| s.nonstandard)
    }

    /// Squared distances of all `m * 2^m * |targets|` terms in index order,
    /// `None` for aleph.
    pub fn term_distances(&self, c: &Constellation) -> Vec<Option<f64>> {
        self.iter()
            .flat_map(|(x, _, s)| s.distances(c, c.point(x)))
            .collect()
    }

    /// Harmonic mean squared distance over all `(i, b, x)` terms.
    pub fn harmonic_distance(&self, c: &Constellation) -> f64 {
        let sum: f64 = self
            .term_distances(c)
            .into_iter()
            .flatten()
            .map(|d2| 1.0 / d2)
            .sum();
        self.entries.len() as f64 / sum
    }
}

/// `d_h^2` for [`Variant::Orig`], `d_hc^2` for the revised variants.
pub fn harmonic_distance(c: &Constellation, variant: Variant) -> Result<f64> {
    Ok(NeighborAssignment::build(c, variant, &SelectOptions::default())?.harmonic_distance(c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub constellation: String,
    pub labeling: Labeling,
    pub dh2: f64,
    pub dhc1_2: f64,
    pub dhc2_2: f64,
    pub nonstandard: bool,
}

/// Harmonic distances for the standard PSK and square QAM signal sets.
pub fn table1() -> Result<Vec<Table1Row>> {
    let sets = [
        Constellation::psk(4, Labeling::Gray)?,
        Constellation::psk(4, Labeling::SetPartition)?,
        Constellation::psk(8, Labeling::Gray)?,
        Constellation::psk(8, Labeling::SetPartition)?,
        Constellation::square_qam(16, Labeling::Gray)?,
        Constellation::square_qam(16, Labeling::SetPartition)?,
        Constellation::square_qam(64, Labeling::Gray)?,
    ];
    let opts = SelectOptions::nonstandard();
    sets.iter()
        .map(|c| {
            let orig = NeighborAssignment::build(c, Variant::Orig, &opts)?;
            let one = NeighborAssignment::build(c, Variant::One, &opts)?;
            let two = NeighborAssignment::build(c, Variant::Two, &opts)?;
            Ok(Table1Row {
                constellation: c.name().to_string(),
                labeling: c.labeling(),
                dh2: orig.harmonic_distance(c),
                dhc1_2: one.harmonic_distance(c),
                dhc2_2: two.harmonic_distance(c),
                nonstandard: one.nonstandard() || two.nonstandard(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qam16() -> Constellation {
        Constellation::square_qam(16, Labeling::Gray).unwrap()
    }

    fn point_at(c: &Constellation, re: f64, im: f64) -> usize {
        c.points()
            .iter()
            .position(|p| (p.re - re).abs() < 1e-9 && (p.im - im).abs() < 1e-9)
            .unwrap()
    }

    #[test]
    fn inner_column_two_sides() {
        let c = qam16();
        let d = 1.0 / 10f64.sqrt();
        let x = point_at(&c, -d, d);
        // bit 2 separates inner from outer columns
        let one = select_neighbors(&c, x, 2, Variant::One).unwrap();
        let d2 = one.distances(&c, c.point(x));
        assert!((d2[0].unwrap() - 0.4).abs() < 1e-12);
        assert!((d2[1].unwrap() - 1.6).abs() < 1e-12);

        let two = select_neighbors(&c, x, 2, Variant::Two).unwrap();
        let d2 = two.distances(&c, c.point(x));
        assert!((d2[0].unwrap() - 0.4).abs() < 1e-12);
        assert!((d2[1].unwrap() - 3.6).abs() < 1e-12);
        assert!(matches!(two.targets[1], Target::Extended(_)));
        assert_eq!(two.targets[0], one.targets[0]);
    }

    #[test]
    fn outer_column_sign_bit_single_target() {
        let c = qam16();
        let d = 1.0 / 10f64.sqrt();
        let x = point_at(&c, -3.0 * d, d);
        for v in [Variant::One, Variant::Two] {
            let s = select_neighbors(&c, x, 1, v).unwrap();
            assert!(!s.targets[0].is_aleph());
            assert!(s.targets[1].is_aleph());
        }
    }

    #[test]
    fn orig_is_single_nearest() {
        let c = qam16();
        for x in 0..16 {
            for bit in 1..=4 {
                let s = select_neighbors(&c, x, bit, Variant::Orig).unwrap();
                assert_eq!(s.targets.len(), 1);
                let one = select_neighbors(&c, x, bit, Variant::One).unwrap();
                assert_eq!(s.targets[0], one.targets[0]);
            }
        }
    }

    #[test]
    fn sp_qam_needs_generalized_rule() {
        let c = Constellation::square_qam(16, Labeling::SetPartition).unwrap();
        assert!(matches!(
            select_neighbors(&c, 0, 4, Variant::One),
            Err(Error::UnsupportedGeometry(_))
        ));
        let s = select_neighbors_with(&c, 0, 4, Variant::One, &SelectOptions::nonstandard()).unwrap();
        assert!(s.nonstandard);
        assert!(!s.targets.is_empty());
    }

    #[test]
    fn qam16_gray_variant_one_sum() {
        let c = qam16();
        let a = NeighborAssignment::build(&c, Variant::One, &SelectOptions::default()).unwrap();
        let sum: f64 = a.term_distances(&c).into_iter().flatten().map(|d| 1.0 / d).sum();
        assert!((sum - 140.0).abs() < 1e-9);
        assert!((a.harmonic_distance(&c) - 64.0 / 140.0).abs() < 1e-12);
    }

    #[test]
    fn qpsk_all_variants_two() {
        let c = Constellation::psk(4, Labeling::Gray).unwrap();
        for v in Variant::ALL {
            assert!((harmonic_distance(&c, v).unwrap() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mirror_boundaries_coincide() {
        for c in [
            qam16(),
            Constellation::square_qam(64, Labeling::Gray).unwrap(),
            Constellation::psk(8, Labeling::Gray).unwrap(),
            Constellation::psk(8, Labeling::SetPartition).unwrap(),
        ] {
            for x in 0..c.len() {
                for bit in 1..=c.bits() {
                    let r = ErrorRegion::for_subset(&c, bit, c.label_bit(x, bit)).unwrap();
                    let s = select_neighbors(&c, x, bit, Variant::Two).unwrap();
                    for z in s.positions(&c) {
                        let mid = (c.point(x) + z) * 0.5;
                        assert!(r.margin(mid).abs() < 1e-12, "{} x={x} bit={bit}", c.name());
                    }
                }
            }
        }
    }

    #[test]
    fn variant_parse() {
        assert_eq!("new2".parse::<Variant>().unwrap(), Variant::Two);
        assert!("bogus".parse::<Variant>().is_err());
    }
}
