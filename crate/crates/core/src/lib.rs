//! Cramér-Rao style bounds for localizing a user through a reconfigurable
//! intelligent surface with near-field wavefronts and an unknown clock offset.

pub mod channel;
pub mod error;
pub mod fisher;
pub mod geometry;
pub mod numerics;
pub mod ris;
pub mod scalar;

pub use channel::{ChannelModelFlags, SignalConfig};
pub use error::{Error, Result};
pub use fisher::{Bound, FisherModel, FisherReport, IntermediateParam, Parameterization, SampleMask};
pub use geometry::{ScenarioGeometry, SphericalDirection, Vec3, WavefrontModel};
pub use ris::RisProfile;
pub use scalar::{Cplx, Real, SPEED_OF_LIGHT};

/// Double-precision aliases.
pub type Scenario = ScenarioGeometry<f64>;
pub type Signal = SignalConfig<f64>;
pub type Profile = RisProfile<f64>;
pub type Model = FisherModel<f64>;
pub type Report = FisherReport<f64>;
