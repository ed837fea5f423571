//! Randomized Pauli state-preparation and measurement tomography of
//! low-degree noise channels.
//!
//! The pipeline: pick a dual frame ([`frame`]), describe the noise
//! ([`channel`]), draw snapshots ([`sampler`]) and average the dual-frame
//! estimator ([`estimator`]). Gate layers are removed in post-processing by
//! rotating the frames with the ideal gates.
//!
//! Everything numerical is generic over [`Real`]; the `f64` aliases below
//! cover the common case.

pub mod channel;
pub mod dense;
pub mod error;
pub mod estimator;
pub mod frame;
pub mod gates;
pub mod pauli;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use frame::{FrameKind, KernelBasis};
pub use pauli::{Basis, LowDegreeIndex, PauliLabel, PauliString, Phase, StateLabel, StateString};
pub use scalar::{Cx, Real};

pub type Complex = Cx<f64>;
pub type FrameTable = frame::FrameTable<f64>;
pub type ProcessMatrix = channel::ProcessMatrix<f64>;
pub type ChannelModel = channel::ChannelModel<f64>;
pub type GateLayer = channel::GateLayer<f64>;
pub type FrameAssignment = estimator::FrameAssignment<f64>;
pub type ExactDistribution = sampler::ExactDistribution<f64>;

pub use estimator::{EstimatorAccumulator, Mode, SamplePlan};
pub use sampler::{BlockSampler, Snapshot};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
