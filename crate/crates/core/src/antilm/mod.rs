//! Anti-LMs: models of the current prefix whose probabilities serve as
//! repetition penalties.

pub mod discrete;
pub mod vector;

pub use discrete::{InterpolationWeights, NGramStore, SmoothedAntiLm};
pub use vector::{cosine, VectorAntiLm};

use crate::scalar::Real;
use crate::token::Token;

/// Either anti-LM, as consumed by the decoder.
#[derive(Debug, Clone, PartialEq)]
pub enum AntiLm<T> {
    Discrete(SmoothedAntiLm<T>),
    Vector(VectorAntiLm<T>),
}

impl<T: Real> AntiLm<T> {
    /// Penalty for `v` given the anti-LM's current history.
    pub fn penalty(&self, v: Token, smoothing: bool) -> T {
        match self {
            AntiLm::Discrete(lm) => lm.penalty_next(v, smoothing),
            AntiLm::Vector(lm) => lm.penalty_next(v),
        }
    }
}
