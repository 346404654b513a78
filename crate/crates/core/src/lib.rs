//! Joint stochastic block models for collections of networks.

pub mod commands;
pub mod error;
pub mod io;
pub mod model;
pub mod network;
pub mod partition;
pub mod predict;
pub mod rng;
pub mod selection;
pub mod sim;
pub mod vem;

pub use error::{Error, Result};
pub use model::{ColSbmParams, ModelVariant, SupportMatrix, VariationalState};
pub use network::{EmissionKind, Network, NetworkCollection};
