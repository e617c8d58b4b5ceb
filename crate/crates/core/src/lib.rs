//! Two-qutrit dephasing: Kraus channels, negativity, a stochastic-phase
//! oracle, and timescale analysis.

pub mod analysis;
pub mod channels;
pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod noise_mc;

pub use channels::{evolve, ChannelSpec, DecayParams, KrausSet, NoiseSource};
pub use entanglement::{negativity, NegativityResult};
pub use error::{Error, Result};
pub use linalg::{BasisLabel, DensityMatrix, Level, PureState9, Subsystem, C64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
