//! Tardos fingerprinting codes whose decoder runs as a nearest-neighbor
//! search on the sphere, accelerated with hyperplane LSH.
//!
//! Codewords are bit-packed, the equivalent score of a user equals the dot
//! product of its embedded codeword with the embedded pirate copy, and
//! [`lsh::decode_lsh`] scores only the users that collide with the query.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod attack;
pub mod codegen;
pub mod decoder;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lsh;
pub mod rng;
pub mod score;
pub mod types;

pub use attack::{forge, named_strategy, AttackStrategy};
pub use codegen::{generate_codebook, sample_bias, BiasDistribution};
pub use decoder::{linear_decode, suggest_threshold, AccusationResult, DecodeMode, DecodeStats};
pub use error::{Error, Result};
pub use lsh::{build_index, decode_lsh, HyperplaneIndex, LshParams};
pub use rng::Seed;
pub use types::{BiasVector, Codebook, PirateCopy, ScoreFunctionKind, UserScore};
