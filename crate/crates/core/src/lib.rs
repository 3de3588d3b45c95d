//! Expurgated union bounds for bit-interleaved coded modulation.
//!
//! The crate covers the pieces needed to evaluate and check the bound:
//! labeled constellations, decision-region geometry, expurgated neighbor
//! selection, pairwise error probabilities by saddlepoint inversion,
//! convolutional code spectra, and a Monte Carlo simulator of the coded chain.

pub mod cli;
pub mod constellation;
pub mod convcode;
pub mod error;
pub mod expurgation;
pub mod geometry;
pub mod pep;
mod quadrature;
pub mod simulator;

pub use constellation::{Constellation, Labeling};
pub use convcode::{ConvCode, WeightSpectrum};
pub use error::{Error, Result};
pub use expurgation::{NeighborAssignment, Variant};
pub use pep::{ChannelModel, ChannelSpec, DistanceMixture};
