//! Decision-region geometry on a sampling grid.
//!
//! All membership tests compare squared distances. Boundary ties are
//! resolved with [`TIE_EPS`]: a point within `TIE_EPS` of a boundary counts
//! as inside the error region and as covered by a half-plane, so reported
//! witnesses are strict interior points.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constellation::{Axis, Constellation, Labeling};
use crate::error::{Error, Result};
use crate::expurgation::{select_neighbors, Variant};

/// Slack on squared-distance comparisons.
pub const TIE_EPS: f64 = 1e-9;

/// Rectangular sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::square(4.0, 0.005)
    }
}

impl GridSpec {
    /// `[-half_width, half_width]^2` at the given step.
    pub fn square(half_width: f64, resolution: f64) -> Self {
        GridSpec {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.resolution.is_finite()
            && self.resolution > 0.0
            && self.x_max >= self.x_min
            && self.y_max >= self.y_min
            && [self.x_min, self.x_max, self.y_min, self.y_max]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(Error::Argument(format!("empty or malformed grid {self:?}")));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.resolution + 1e-9).floor() as usize + 1
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.resolution + 1e-9).floor() as usize + 1
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.x_min + ix as f64 * self.resolution,
            self.y_min + iy as f64 * self.resolution,
        )
    }

    /// Row-major scan (rows of constant `y`), split across workers by row.
    /// Results come back in row-major order regardless of scheduling.
    fn scan<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, Complex64) -> Option<T> + Sync,
    {
        let nx = self.nx();
        (0..self.ny())
            .into_par_iter()
            .map(|iy| {
                (0..nx)
                    .filter_map(|ix| f(iy * nx + ix, self.point(ix, iy)))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Pairwise decision region `{y : |y - z|^2 <= |y - x|^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub reference: Complex64,
    pub competitor: Complex64,
}

impl HalfPlane {
    pub fn new(reference: Complex64, competitor: Complex64) -> Self {
        HalfPlane {
            reference,
            competitor,
        }
    }

    pub fn contains(&self, y: Complex64) -> bool {
        (y - self.competitor).norm_sqr() <= (y - self.reference).norm_sqr() + TIE_EPS
    }

    /// Signed distance from the perpendicular bisector, positive on the
    /// competitor's side.
    pub fn margin(&self, y: Complex64) -> f64 {
        let sep = (self.competitor - self.reference).norm();
        ((y - self.reference).norm_sqr() - (y - self.competitor).norm_sqr()) / (2.0 * sep)
    }

    /// Midpoint of the segment reference-competitor, which lies on the boundary.
    pub fn boundary_point(&self) -> Complex64 {
        (self.reference + self.competitor) * 0.5
    }
}

/// Received points whose nearest opposite-subset point is at least as close
/// as their nearest same-subset point.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRegion {
    same: Vec<Complex64>,
    opposite: Vec<Complex64>,
}

fn min_dist2(set: &[Complex64], y: Complex64) -> f64 {
    set.iter()
        .map(|p| (y - p).norm_sqr())
        .fold(f64::INFINITY, f64::min)
}

impl ErrorRegion {
    pub fn new(same: Vec<Complex64>, opposite: Vec<Complex64>) -> Result<Self> {
        if same.is_empty() || opposite.is_empty() {
            return Err(Error::Argument("error region needs non-empty point sets".into()));
        }
        Ok(ErrorRegion { same, opposite })
    }

    /// Region for transmitting a point of `X_value^bit`.
    pub fn for_subset(c: &Constellation, bit: usize, value: u8) -> Result<Self> {
        let same = c.subset(bit, value)?;
        let opp = c.subset(bit, 1 - value)?;
        Self::new(
            same.members.iter().map(|&k| c.point(k)).collect(),
            opp.members.iter().map(|&k| c.point(k)).collect(),
        )
    }

    pub fn same(&self) -> &[Complex64] {
        &self.same
    }

    pub fn opposite(&self) -> &[Complex64] {
        &self.opposite
    }

    pub fn contains(&self, y: Complex64) -> bool {
        min_dist2(&self.opposite, y) <= min_dist2(&self.same, y) + TIE_EPS
    }

    /// `min |y - same|^2 - min |y - opposite|^2`; positive strictly inside.
    pub fn margin(&self, y: Complex64) -> f64 {
        min_dist2(&self.same, y) - min_dist2(&self.opposite, y)
    }

    /// Membership of every grid point, row-major.
    pub fn mask(&self, grid: &GridSpec) -> Result<RegionMask> {
        grid.validate()?;
        let nx = grid.nx();
        let inside = (0..grid.ny())
            .into_par_iter()
            .map(|iy| {
                (0..nx)
                    .map(|ix| self.contains(grid.point(ix, iy)))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat();
        Ok(RegionMask {
            grid: *grid,
            inside,
            region: self.clone(),
        })
    }
}

/// Precomputed error-region membership over a grid, reusable across
/// transmitted points and target sets of the same subset pair.
#[derive(Debug, Clone)]
pub struct RegionMask {
    grid: GridSpec,
    inside: Vec<bool>,
    region: ErrorRegion,
}

impl RegionMask {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub point: Complex64,
    /// Distance from the nearest supplied half-plane.
    pub clearance: f64,
}

/// Outcome of scanning an error region against a set of covering half-planes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub covered: bool,
    /// Uncovered error-region grid points, row-major.
    pub witnesses: Vec<Complex64>,
    pub grid: GridSpec,
    /// Number of grid points inside the error region.
    pub error_points: usize,
    pub uncovered_fraction: f64,
    /// Strict-interior witness farthest from every supplied half-plane.
    pub best_witness: Option<Witness>,
}

/// Checks that the half-planes `{y : |y - z| <= |y - x|}`, one per target,
/// jointly cover `region` on the grid.
pub fn coverage_check(
    region: &ErrorRegion,
    x: Complex64,
    targets: &[Complex64],
    grid: &GridSpec,
) -> Result<CoverageReport> {
    let mask = region.mask(grid)?;
    coverage_check_masked(&mask, x, targets)
}

/// [`coverage_check`] against a precomputed region mask.
pub fn coverage_check_masked(
    mask: &RegionMask,
    x: Complex64,
    targets: &[Complex64],
) -> Result<CoverageReport> {
    let grid = mask.grid;
    grid.validate()?;
    let planes: Vec<HalfPlane> = targets.iter().map(|&z| HalfPlane::new(x, z)).collect();
    let witnesses = grid.scan(|idx, y| {
        if mask.inside[idx] && !planes.iter().any(|h| h.contains(y)) {
            Some(y)
        } else {
            None
        }
    });
    let error_points = mask.count();
    let best_witness = witnesses
        .iter()
        .filter(|&&y| mask.region.margin(y) > TIE_EPS)
        .map(|&y| Witness {
            point: y,
            clearance: planes
                .iter()
                .map(|h| -h.margin(y))
                .fold(f64::INFINITY, f64::min),
        })
        .fold(None, |best: Option<Witness>, w| match best {
            Some(b) if b.clearance >= w.clearance => Some(b),
            _ => Some(w),
        });
    Ok(CoverageReport {
        covered: witnesses.is_empty(),
        uncovered_fraction: if error_points == 0 {
            0.0
        } else {
            witnesses.len() as f64 / error_points as f64
        },
        witnesses,
        grid,
        error_points,
        best_witness,
    })
}

/// Whether `{y : |y-z| <= |y-x|}` lies inside the union of the half-planes
/// toward `covers`, judged on strict interior grid points.
pub fn pairwise_region_covered(
    x: Complex64,
    z: Complex64,
    covers: &[Complex64],
    grid: &GridSpec,
) -> Result<bool> {
    grid.validate()?;
    let target = HalfPlane::new(x, z);
    let planes: Vec<HalfPlane> = covers.iter().map(|&c| HalfPlane::new(x, c)).collect();
    let violations = grid.scan(|_, y| {
        let strictly_in = target.margin(y) * 2.0 * (z - x).norm() > TIE_EPS;
        (strictly_in && !planes.iter().any(|h| h.contains(y))).then_some(())
    });
    Ok(violations.is_empty())
}

/// Which of the two shaded regions of the modified-QPSK example a case covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShadedRegion {
    /// Transmitted `00`.
    Dark,
    /// Transmitted `01`.
    Light,
}

impl ShadedRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            ShadedRegion::Dark => "dark",
            ShadedRegion::Light => "light",
        }
    }
}

/// One transmitted point of the modified-QPSK example.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpurgationCase {
    pub transmitted: String,
    pub region: ShadedRegion,
    /// Opposite-subset points whose pairwise region is contained in the
    /// union of the remaining pairwise regions.
    pub expurgated: Vec<String>,
    pub kept: Vec<String>,
    pub premise_holds: bool,
    pub coverage: CoverageReport,
}

impl ExpurgationCase {
    pub fn confirmed(&self) -> bool {
        self.premise_holds && !self.coverage.covered && self.coverage.best_witness.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub theta_deg: f64,
    pub cases: Vec<ExpurgationCase>,
}

impl Theorem1Report {
    pub fn premise_holds(&self) -> bool {
        self.cases.iter().all(|c| c.premise_holds)
    }

    pub fn covered_after_expurgation(&self) -> bool {
        self.cases.iter().all(|c| c.coverage.covered)
    }

    /// The counterexample stands when every transmitted point has its
    /// premise satisfied and an uncovered strict-interior witness.
    pub fn confirmed(&self) -> bool {
        self.cases.iter().all(ExpurgationCase::confirmed)
    }
}

/// Checks the pairwise-region expurgation on Gray QPSK with the point `01`
/// rotated by `theta_deg` toward `00`.
///
/// For each transmitted point of `X_0^1` the opposite-subset points are
/// dropped, farthest first, whenever their pairwise region is contained in
/// the union of the pairwise regions of the other same-subset point and the
/// opposite points still kept. The kept points are then checked for
/// covering the decoder error region.
pub fn verify_theorem1(theta_deg: f64, grid: &GridSpec) -> Result<Theorem1Report> {
    grid.validate()?;
    let c = Constellation::theorem1_variant(theta_deg)?;
    if theta_deg > 0.0 && grid.resolution > theta_deg.to_radians() / 10.0 {
        return Err(Error::Inconclusive(format!(
            "grid step {} cannot resolve the {theta_deg} degree sliver",
            grid.resolution
        )));
    }
    let region = ErrorRegion::for_subset(&c, 1, 0)?;
    let mask = region.mask(grid)?;
    let same = c.subset(1, 0)?.members;
    let opposite = c.subset(1, 1)?.members;

    let mut cases = Vec::new();
    for (&tx, tag) in same.iter().zip([ShadedRegion::Dark, ShadedRegion::Light]) {
        let x = c.point(tx);
        let partner: Vec<usize> = same.iter().copied().filter(|&k| k != tx).collect();
        let mut order = opposite.clone();
        order.sort_by(|&a, &b| {
            (c.point(b) - x)
                .norm_sqr()
                .total_cmp(&(c.point(a) - x).norm_sqr())
                .then(a.cmp(&b))
        });
        let mut kept = opposite.clone();
        let mut expurgated = Vec::new();
        for z in order {
            let covers: Vec<Complex64> = partner
                .iter()
                .chain(kept.iter().filter(|&&k| k != z))
                .map(|&k| c.point(k))
                .collect();
            if pairwise_region_covered(x, c.point(z), &covers, grid)? {
                kept.retain(|&k| k != z);
                expurgated.push(z);
            }
        }
        let targets: Vec<Complex64> = kept.iter().map(|&k| c.point(k)).collect();
        let coverage = coverage_check_masked(&mask, x, &targets)?;
        cases.push(ExpurgationCase {
            transmitted: c.label_string(tx),
            region: tag,
            premise_holds: !expurgated.is_empty(),
            expurgated: expurgated.iter().map(|&k| c.label_string(k)).collect(),
            kept: kept.iter().map(|&k| c.label_string(k)).collect(),
            coverage,
        });
    }
    Ok(Theorem1Report { theta_deg, cases })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Report {
    pub bit: usize,
    pub transmitted: String,
    /// The single opposite-subset point left after expurgation.
    pub kept: String,
    pub coverage: CoverageReport,
    /// Axis coordinate of the far-side decision boundary.
    pub far_boundary: f64,
    /// Every witness lies beyond the far-side decision boundary.
    pub witnesses_in_far_strip: bool,
    /// Control: both opposite neighbors kept (two-sided selection).
    pub two_sided_control: CoverageReport,
    /// Control: transmitted point in an outer column, nearest neighbor kept.
    pub outer_control: CoverageReport,
}

impl Theorem2Report {
    pub fn confirmed(&self) -> bool {
        !self.coverage.covered && self.witnesses_in_far_strip && self.coverage.best_witness.is_some()
    }
}

/// Checks single-nearest-neighbor expurgation on Gray 16QAM for a point in
/// an inner column and the bit whose subsets are the inner and outer
/// column pairs.
pub fn verify_theorem2(grid: &GridSpec) -> Result<Theorem2Report> {
    grid.validate()?;
    let c = Constellation::square_qam(16, Labeling::Gray)?;
    let spacing = 1.0 / 10f64.sqrt();
    let is_inner = |k: usize| c.point(k).re.abs() < 2.0 * spacing;

    let mut bit = None;
    for i in 1..=c.bits() {
        if c.bit_axis(i)? != Some(Axis::InPhase) {
            continue;
        }
        let s = c.subset(i, c.label_bit(5, i))?;
        if s.members.iter().all(|&k| is_inner(k)) {
            bit = Some(i);
            break;
        }
    }
    let bit = bit.ok_or_else(|| Error::Config("no inner/outer column bit found".into()))?;

    // inner column point closest to the origin, lowest index first
    let pick = |inner: bool| {
        (0..c.len())
            .filter(|&k| is_inner(k) == inner)
            .min_by(|&a, &b| {
                c.point(a)
                    .im
                    .abs()
                    .total_cmp(&c.point(b).im.abs())
                    .then(a.cmp(&b))
            })
            .expect("16QAM has both column kinds")
    };
    let tx = pick(true);
    let x = c.point(tx);
    let value = c.label_bit(tx, bit);
    let mask = ErrorRegion::for_subset(&c, bit, value)?.mask(grid)?;

    let orig = select_neighbors(&c, tx, bit, Variant::Orig)?;
    let kept = orig.targets[0].point_index().expect("orig keeps a real point");
    let coverage = coverage_check_masked(&mask, x, &[c.point(kept)])?;

    let mirrored = select_neighbors(&c, tx, bit, Variant::Two)?;
    let far_mirror = mirrored.targets[1]
        .position(&c)
        .ok_or_else(|| Error::Config("inner column point lacks a far-side neighbor".into()))?;
    let far_boundary = 0.5 * (far_mirror.re + x.re);
    let far_dir = (far_boundary - x.re).signum();
    let witnesses_in_far_strip = coverage
        .witnesses
        .iter()
        .all(|w| (w.re - far_boundary) * far_dir >= -grid.resolution);

    let two_sided = select_neighbors(&c, tx, bit, Variant::One)?;
    let two_sided_control = coverage_check_masked(&mask, x, &two_sided.positions(&c))?;

    let outer = pick(false);
    let outer_value = c.label_bit(outer, bit);
    let outer_mask = ErrorRegion::for_subset(&c, bit, outer_value)?.mask(grid)?;
    let outer_sel = select_neighbors(&c, outer, bit, Variant::Orig)?;
    let outer_control = coverage_check_masked(&outer_mask, c.point(outer), &outer_sel.positions(&c))?;

    Ok(Theorem2Report {
        bit,
        transmitted: c.label_string(tx),
        kept: c.label_string(kept),
        coverage,
        far_boundary,
        witnesses_in_far_strip,
        two_sided_control,
        outer_control,
    })
}
