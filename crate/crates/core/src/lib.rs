//! Referential-game simulator and estimators for cooperative language
//! acquisition.
//!
//! An observer watches a community of speakers and listeners play
//! referential games and learns to take either role:
//!
//! * [`inference::fit_broca`] learns which message makes a listener follow
//!   a given trajectory (the signalling direction);
//! * [`inference::fit_wernicke`] learns which trajectory a speaker intended
//!   when it sent a message (the listening direction), relabelling each
//!   observed trajectory with a Boltzmann-rational MAP estimate of the
//!   intended one before fitting.
//!
//! [`envcore`] holds the games, [`community`] the synthetic agent pools,
//! [`semantics`] the distances and detectors, [`dataset`] the interaction
//! logs and [`eval`] the scoring harness.

pub mod community;
pub mod dataset;
pub mod envcore;
pub mod error;
pub mod eval;
pub mod inference;
pub mod oracle;
pub mod rng;
pub mod semantics;

pub use error::{Error, Result};
