//! Labeled signal sets.
//!
//! A [`Constellation`] holds `2^m` complex points, one `m`-bit label per
//! point and a description of its geometry. Label bit positions are
//! 1-based and MSB-first: bit `1` is the most significant bit of the label.
//!
//! Square QAM places the first `m/2` label bits on the in-phase axis and
//! the remaining bits on the quadrature axis. PSK points sit at angles
//! `2πk/n` on the unit circle.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ENERGY_TOL: f64 = 1e-12;

/// Geometry class of a signal set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Square lattice with coordinates `(2k - (levels - 1)) * spacing` per axis.
    RectLattice { spacing: f64, levels: usize },
    /// All points on a circle of the given radius.
    Circle { radius: f64 },
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Labeling {
    Gray,
    /// Ungerboeck set partitioning.
    SetPartition,
    Custom,
}

impl Labeling {
    pub fn as_str(self) -> &'static str {
        match self {
            Labeling::Gray => "gray",
            Labeling::SetPartition => "sp",
            Labeling::Custom => "custom",
        }
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Labeling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" => Ok(Labeling::Gray),
            "sp" | "set-partition" => Ok(Labeling::SetPartition),
            other => Err(Error::Config(format!("unknown labeling '{other}'"))),
        }
    }
}

/// Axis of a square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    InPhase,
    Quadrature,
}

impl Axis {
    pub fn coord(self, p: Complex64) -> f64 {
        match self {
            Axis::InPhase => p.re,
            Axis::Quadrature => p.im,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::InPhase => Axis::Quadrature,
            Axis::Quadrature => Axis::InPhase,
        }
    }

    /// Builds a point from a coordinate on this axis and one on the other.
    pub fn compose(self, along: f64, across: f64) -> Complex64 {
        match self {
            Axis::InPhase => Complex64::new(along, across),
            Axis::Quadrature => Complex64::new(across, along),
        }
    }
}

/// A labeled signal set with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    bits: usize,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    geometry: Geometry,
    labeling: Labeling,
}

/// The points whose label carries value `value` at bit position `bit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSubset {
    pub bit: usize,
    pub value: u8,
    pub members: Vec<usize>,
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

impl Constellation {
    /// Square QAM with 4, 16 or 64 points.
    pub fn square_qam(order: usize, labeling: Labeling) -> Result<Self> {
        let bits = match order {
            4 => 2,
            16 => 4,
            64 => 6,
            _ => {
                return Err(Error::Config(format!(
                    "square QAM order {order} not supported (expected 4, 16 or 64)"
                )))
            }
        };
        let half = bits / 2;
        let levels = 1usize << half;
        // mean energy of the odd-integer lattice is 2(M-1)/3
        let spacing = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
        let coord = |k: usize| (2.0 * k as f64 - (levels as f64 - 1.0)) * spacing;

        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for a in 0..levels {
            for b in 0..levels {
                points.push(Complex64::new(coord(a), coord(b)));
                let label = match labeling {
                    Labeling::Gray => (gray(a as u32) << half) | gray(b as u32),
                    Labeling::SetPartition => sp_lattice_label(a as u32, b as u32, half),
                    Labeling::Custom => {
                        return Err(Error::Config(
                            "custom labeling requires Constellation::custom".into(),
                        ))
                    }
                };
                labels.push(label);
            }
        }
        let name = if order == 4 {
            "4QAM".to_string()
        } else {
            format!("{order}QAM")
        };
        Self::checked(
            name,
            bits,
            points,
            labels,
            Geometry::RectLattice { spacing, levels },
            labeling,
        )
    }

    /// Unit-circle PSK with 4 or 8 points.
    ///
    /// Gray walks the reflected Gray sequence around the circle; set
    /// partitioning uses natural binary order counterclockwise.
    pub fn psk(n_points: usize, labeling: Labeling) -> Result<Self> {
        let bits = match n_points {
            4 => 2,
            8 => 3,
            _ => {
                return Err(Error::Config(format!(
                    "PSK size {n_points} not supported (expected 4 or 8)"
                )))
            }
        };
        let points = (0..n_points)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n_points as f64))
            .collect();
        let labels = (0..n_points as u32)
            .map(|k| match labeling {
                Labeling::Gray => Ok(gray(k)),
                Labeling::SetPartition => Ok(k),
                Labeling::Custom => Err(Error::Config(
                    "custom labeling requires Constellation::custom".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::checked(
            format!("{n_points}PSK"),
            bits,
            points,
            labels,
            Geometry::Circle { radius: 1.0 },
            labeling,
        )
    }

    /// Gray QPSK on the unit circle with the point labeled `01` rotated from
    /// 90° to `90° - theta_deg`, toward the point labeled `00` at 0°.
    ///
    /// `theta_deg = 0` gives plain Gray QPSK.
    pub fn theorem1_variant(theta_deg: f64) -> Result<Self> {
        if !(0.0..90.0).contains(&theta_deg) {
            return Err(Error::Config(format!(
                "theta must lie in [0, 90) degrees, got {theta_deg}"
            )));
        }
        let at = |deg: f64| Complex64::from_polar(1.0, deg.to_radians());
        let points = vec![at(0.0), at(90.0 - theta_deg), at(180.0), at(270.0)];
        let labels = vec![0b00, 0b01, 0b11, 0b10];
        Self::checked(
            format!("QPSK-theta{theta_deg}"),
            2,
            points,
            labels,
            Geometry::Circle { radius: 1.0 },
            Labeling::Gray,
        )
    }

    /// A user supplied signal set. Average energy is not normalized.
    pub fn custom(name: &str, bits: usize, points: Vec<Complex64>, labels: Vec<u32>) -> Result<Self> {
        Self::checked(name.to_string(), bits, points, labels, Geometry::Custom, Labeling::Custom)
    }

    fn checked(
        name: String,
        bits: usize,
        points: Vec<Complex64>,
        labels: Vec<u32>,
        geometry: Geometry,
        labeling: Labeling,
    ) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(Error::Config(format!("bits per symbol {bits} out of range")));
        }
        let size = 1usize << bits;
        if points.len() != size || labels.len() != size {
            return Err(Error::Config(format!(
                "expected {size} points and labels, got {} and {}",
                points.len(),
                labels.len()
            )));
        }
        let mut seen = vec![false; size];
        for &l in &labels {
            let slot = seen
                .get_mut(l as usize)
                .ok_or_else(|| Error::Config(format!("label {l} wider than {bits} bits")))?;
            if *slot {
                return Err(Error::Config(format!("duplicate label {l}")));
            }
            *slot = true;
        }
        if let Geometry::Circle { radius } = geometry {
            if points.iter().any(|p| (p.norm() - radius).abs() > ENERGY_TOL) {
                return Err(Error::Config("point off the declared circle".into()));
            }
        }
        Ok(Self {
            name,
            bits,
            points,
            labels,
            geometry,
            labeling,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Bits per symbol, `m`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        self.points[idx]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn labeling(&self) -> Labeling {
        self.labeling
    }

    /// Value of label bit `bit` (1-based, MSB first) of point `idx`.
    pub fn label_bit(&self, idx: usize, bit: usize) -> u8 {
        ((self.labels[idx] >> (self.bits - bit)) & 1) as u8
    }

    /// Index of the point carrying `label`.
    pub fn index_of_label(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Formats the label of point `idx` as an `m`-character bit string.
    pub fn label_string(&self, idx: usize) -> String {
        format!("{:0width$b}", self.labels[idx], width = self.bits)
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    fn check_bit(&self, bit: usize) -> Result<()> {
        if bit == 0 || bit > self.bits {
            return Err(Error::Argument(format!(
                "bit position {bit} outside 1..={}",
                self.bits
            )));
        }
        Ok(())
    }

    /// The subset `X_b^i`.
    pub fn subset(&self, bit: usize, value: u8) -> Result<BitSubset> {
        self.check_bit(bit)?;
        if value > 1 {
            return Err(Error::Argument(format!("bit value {value} is not 0 or 1")));
        }
        let members = (0..self.len())
            .filter(|&k| self.label_bit(k, bit) == value)
            .collect();
        Ok(BitSubset { bit, value, members })
    }

    /// For lattice constellations, the axis along which bit `bit` varies,
    /// provided the bit is constant along every line of the other axis.
    /// Returns `None` when the subsets are genuinely two-dimensional.
    pub fn bit_axis(&self, bit: usize) -> Result<Option<Axis>> {
        self.check_bit(bit)?;
        if !matches!(self.geometry, Geometry::RectLattice { .. }) {
            return Ok(None);
        }
        for axis in [Axis::InPhase, Axis::Quadrature] {
            let depends_only_on_axis = (0..self.len()).all(|a| {
                (0..self.len()).all(|b| {
                    (axis.coord(self.points[a]) - axis.coord(self.points[b])).abs() > 1e-9
                        || self.label_bit(a, bit) == self.label_bit(b, bit)
                })
            });
            if depends_only_on_axis {
                return Ok(Some(axis));
            }
        }
        Ok(None)
    }
}

/// Set-partition label for lattice position `(a, b)` with `half` bits per
/// axis. From least to most significant, each scale `t` contributes a
/// checkerboard bit `xor_{s<=t}(a_s ^ b_s)` followed by the column bit `a_t`.
fn sp_lattice_label(a: u32, b: u32, half: usize) -> u32 {
    let mut label = 0u32;
    let mut checker = 0u32;
    for t in 0..half {
        let at = (a >> t) & 1;
        let bt = (b >> t) & 1;
        checker ^= at ^ bt;
        label |= checker << (2 * t);
        label |= at << (2 * t + 1);
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam_energy_and_size() {
        for order in [4, 16, 64] {
            for lab in [Labeling::Gray, Labeling::SetPartition] {
                let c = Constellation::square_qam(order, lab).unwrap();
                assert_eq!(c.len(), order);
                assert!((c.average_energy() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qam16_gray_axis_order() {
        let c = Constellation::square_qam(16, Labeling::Gray).unwrap();
        let d = 1.0 / 10f64.sqrt();
        // in-phase level k carries the first two label bits
        let mut along_i: Vec<(f64, u32)> = (0..16)
            .filter(|&k| c.point(k).im < 0.0 && (c.point(k).im + 3.0 * d).abs() < 1e-12)
            .map(|k| (c.point(k).re, c.labels()[k] >> 2))
            .collect();
        along_i.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let coords: Vec<f64> = along_i.iter().map(|p| p.0 / d).collect();
        let codes: Vec<u32> = along_i.iter().map(|p| p.1).collect();
        for (got, want) in coords.iter().zip([-3.0, -1.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(codes, vec![0b00, 0b01, 0b11, 0b10]);
    }

    #[test]
    fn qpsk_gray_matches_rotated_4qam() {
        let psk = Constellation::psk(4, Labeling::Gray).unwrap();
        let qam = Constellation::square_qam(4, Labeling::Gray).unwrap();
        let rot = Complex64::from_polar(1.0, PI / 4.0);
        for p in psk.points() {
            let q = p * rot;
            assert!(qam.points().iter().any(|r| (r - q).norm() < 1e-12));
        }
    }

    #[test]
    fn psk8_gray_labels_are_cyclic_gray() {
        let c = Constellation::psk(8, Labeling::Gray).unwrap();
        assert_eq!(c.labels(), &[0b000, 0b001, 0b011, 0b010, 0b110, 0b111, 0b101, 0b100]);
        let sp = Constellation::psk(8, Labeling::SetPartition).unwrap();
        assert_eq!(sp.labels(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn theorem1_variant_layout() {
        let c = Constellation::theorem1_variant(30.0).unwrap();
        let p01 = c.point(c.index_of_label(0b01).unwrap());
        assert!((p01.arg().to_degrees() - 60.0).abs() < 1e-12);
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
        assert!(Constellation::theorem1_variant(90.0).is_err());
        assert!(Constellation::theorem1_variant(-1.0).is_err());
        let plain = Constellation::theorem1_variant(0.0).unwrap();
        let psk = Constellation::psk(4, Labeling::Gray).unwrap();
        for (a, b) in plain.points().iter().zip(psk.points()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unsupported_sizes() {
        assert!(matches!(
            Constellation::square_qam(32, Labeling::Gray),
            Err(Error::Config(_))
        ));
        assert!(matches!(Constellation::psk(16, Labeling::Gray), Err(Error::Config(_))));
    }

    #[test]
    fn qam16_gray_outer_columns_subset() {
        let c = Constellation::square_qam(16, Labeling::Gray).unwrap();
        let d = 1.0 / 10f64.sqrt();
        let s = c.subset(2, 0).unwrap();
        assert_eq!(s.members.len(), 8);
        for &k in &s.members {
            assert!((c.point(k).re.abs() - 3.0 * d).abs() < 1e-12);
        }
        assert_eq!(c.bit_axis(2).unwrap(), Some(Axis::InPhase));
        assert_eq!(c.bit_axis(4).unwrap(), Some(Axis::Quadrature));
    }

    #[test]
    fn qpsk_subset_halves() {
        let c = Constellation::psk(4, Labeling::Gray).unwrap();
        assert_eq!(c.subset(1, 0).unwrap().members.len(), 2);
        assert!(matches!(c.subset(3, 0), Err(Error::Argument(_))));
        assert!(matches!(c.subset(0, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn sp_qam_bits_are_two_dimensional() {
        let c = Constellation::square_qam(16, Labeling::SetPartition).unwrap();
        // least significant bit is the checkerboard
        assert_eq!(c.bit_axis(4).unwrap(), None);
        // most significant bit splits left and right halves
        assert_eq!(c.bit_axis(1).unwrap(), Some(Axis::InPhase));
    }

    #[test]
    fn custom_rejects_duplicates() {
        let pts = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(Constellation::custom("bpsk", 1, pts.clone(), vec![0, 0]).is_err());
        assert!(Constellation::custom("bpsk", 1, pts, vec![0, 1]).is_ok());
    }
}
