//! Frustratingly simple decoding: repetition control for autoregressive
//! LMs through an anti-LM built on the fly from the prefix.
//!
//! At every step the `k` most probable tokens under the base LM are scored
//! by `p_lm(v) - alpha * p_anti(v)`, where `p_anti` comes from either
//!
//! * a smoothed n-gram model over the prompt and the generated tokens
//!   ([`SmoothedAntiLm`]), or
//! * a vectorized variant matching windows of hidden states by cosine
//!   similarity ([`VectorAntiLm`]).
//!
//! The numeric core is generic over the scalar type (see [`scalar`]); the
//! aliases below fix it to `f64`, which is what the backends, CLI and wire
//! protocol use.

pub mod antilm;
pub mod backends;
pub mod config;
pub mod decoding;
pub mod dist;
pub mod error;
pub mod metrics;
pub mod result;
pub mod scalar;
pub mod testbed;
pub mod token;
pub mod token_sets;

pub use backends::{LogitProvider, MarkovBackend, NextRequest, WireBackend};
pub use config::{default_config, Variant};
pub use decoding::{fsd_score, Decoder};
pub use error::{Error, Result};
pub use scalar::{Real, Scalar};
pub use token::{Token, TokenSeq};

/// Probabilities and scores are carried as 64-bit reals.
pub type Prob = f64;

pub type DecoderConfig = config::DecoderConfig<Prob>;
pub type NextTokenDist = dist::NextTokenDist<Prob>;
pub type SmoothedAntiLm = antilm::SmoothedAntiLm<Prob>;
pub type VectorAntiLm = antilm::VectorAntiLm<Prob>;
pub type AntiLm = antilm::AntiLm<Prob>;
pub type CandidateScore = decoding::CandidateScore<Prob>;
pub type GenerationResult = result::GenerationResult<Prob>;
pub type StepRecord = result::StepRecord<Prob>;
pub type RepReport = metrics::RepReport<Prob>;

/// Single-precision variants, for memory-bound hidden-state work.
pub type VectorAntiLmF32 = antilm::VectorAntiLm<f32>;
pub type DecoderConfigF32 = config::DecoderConfig<f32>;
