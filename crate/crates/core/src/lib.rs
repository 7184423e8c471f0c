//! Simulation and analytics for data basis shuffling (DBS), a two-photon
//! qudit communication scheme in which every letter is sent as a pair of
//! identically prepared photons ("twins") randomly interleaved in the
//! stream. The receiver learns whether they measured in the right basis from
//! whether the twins localize on the same detector; only the pairing is
//! announced publicly.
//!
//! The crate is organised in layers:
//!
//! - [`params`], [`rng`] and [`exec`]: validated channel parameters, the
//!   reproducible random-stream contract and the parallel/sequential
//!   execution switch.
//! - [`analytics`]: closed-form error budgets for DBS and individual-photon
//!   bit encoding (IPBE), photon-number-splitting budgets, pairing
//!   combinatorics and crossover solvers.
//! - [`protocol`]: twin encoding, the shuffle announcement, sifting and
//!   ground-truth scoring.
//! - [`channel_sim`]: the Monte Carlo physical layer (Poisson source, loss,
//!   gated detector array with dark counts) and the PNS eavesdropper.
//! - [`speckle`]: the multimode-fiber transfer-matrix model with SLM focus
//!   optimisation and PD/PD2 detection maps.

pub mod analytics;
pub mod channel_sim;
pub mod error;
pub mod exec;
pub mod params;
pub mod protocol;
pub mod rng;
pub mod speckle;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
pub use params::{Basis, ChannelParams, QuditSymbol, RawChannelParams};
pub use rng::RandomSource;
