use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::token::{Token, TokenSeq};

/// Identifier of the PRNG behind the sampling variants.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Telemetry for one emitted token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T> {
    pub chosen: Token,
    pub lm_prob: T,
    pub penalty: T,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult<T> {
    pub prompt: TokenSeq,
    pub continuation: TokenSeq,
    pub steps: Vec<StepRecord<T>>,
    pub wall_time_per_step: Vec<Duration>,
    pub rng_algorithm: &'static str,
    /// Set when the backend failed mid-generation; `continuation` then
    /// holds the tokens produced before the failure.
    pub failure: Option<String>,
}

impl<T> GenerationResult<T> {
    pub(crate) fn new(prompt: TokenSeq) -> Self {
        Self { prompt, continuation: Vec::new(), steps: Vec::new(), wall_time_per_step: Vec::new(), rng_algorithm: RNG_ALGORITHM, failure: None }
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Prompt followed by the continuation.
    pub fn full_sequence(&self) -> TokenSeq {
        self.prompt.iter().chain(&self.continuation).copied().collect()
    }

    /// Chosen tokens as recorded per step. Always equals `continuation`.
    pub fn chosen_tokens(&self) -> TokenSeq {
        self.steps.iter().map(|s| s.chosen).collect()
    }

    pub fn mean_step_time(&self) -> Duration {
        if self.wall_time_per_step.is_empty() {
            return Duration::ZERO;
        }
        self.wall_time_per_step.iter().sum::<Duration>() / self.wall_time_per_step.len() as u32
    }
}
