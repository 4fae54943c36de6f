//! Tie-decay temporal networks: tie-strength dynamics, thresholded
//! giant-component analysis, the convection–diffusion limit of the
//! back-to-unity model and SIR epidemics on decaying ties.

pub mod additive;
pub mod b2u;
pub mod error;
pub mod fd;
pub mod events;
pub mod graph;
pub mod rng;
pub mod sir;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
