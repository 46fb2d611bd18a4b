//! Exact generating functions and skeleton-decomposition sampling for hull,
//! layer and slice volumes of the uniform infinite planar triangulation.
//!
//! The crate is organised bottom-up:
//! [`series`] provides truncated power series over exact and float rings,
//! [`enumeration`] counts triangulations with a boundary,
//! [`skeleton`] holds the offspring laws and their iterates,
//! [`laws`] evaluates exact distributions,
//! [`sampler`] simulates hulls and slices,
//! [`asymptotics`] has the scaling limits and
//! [`verify`] ties simulation to the exact results.

pub mod asymptotics;
pub mod enumeration;
pub mod laws;
pub mod sampler;
pub mod series;
pub mod skeleton;
pub mod verify;

pub use enumeration::{Constants, TriangulationCounts};
pub use laws::{HullPmf, PerimeterPmf};
pub use sampler::{HullSample, LayerSkeleton, PerimeterTrajectory, RngStream, Sampler};
pub use series::{DynSeries, QSqrt3, Ring, Series, SeriesError, SeriesJson, Q};
pub use skeleton::{CriticalPair, OffspringLaw};
pub use verify::GfEstimate;
