//! Core of the ORGAN sequence generator: an LSTM policy trained with
//! REINFORCE on a reward that mixes a CNN critic with a domain objective,
//! plus the molecular (SMILES) and melody objectives used to steer it.
//!
//! The crate is `no_std` and only needs `alloc`. Enable `parallel` to fan
//! Monte-Carlo rollouts out over a thread pool; results are identical to the
//! sequential schedule.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod discriminator;
pub mod error;
pub mod generator;
pub mod mol;
pub mod music;
pub mod nn;
pub mod objectives;
pub mod reward;
pub mod rng;
pub mod vocab;

pub use error::{Error, Result};
pub use vocab::{TokenSequence, Vocabulary};
