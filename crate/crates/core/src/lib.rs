//! Simulator for anonymous transmission of a quantum message among `n`
//! participants, any number of which may be corrupt.
//!
//! The crate is organised bottom-up:
//!
//! * [`qsim`]: dense state-vector engine (GHZ preparation, gates, measurement,
//!   subspace projection, Bell measurement, fidelity).
//! * [`dcnet`]: dining-cryptographer style classical subprotocols (logical OR,
//!   collision detection, notification, anonymous message transmission).
//! * [`qauth`]: Clifford-code quantum authentication.
//! * [`protocol`]: the seven-step transmission protocol over `n` parties.
//! * [`adversary`]: strategies that drive the corrupt coalition.
//! * [`harness`]: batches, transcripts, statistics and the CLI backend.

pub mod adversary;
pub mod dcnet;
pub mod entropy;
mod error;
pub mod harness;
pub mod net;
pub mod protocol;
pub mod qauth;
pub mod qsim;

pub use error::{Error, Result};
