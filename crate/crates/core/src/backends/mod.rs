//! Next-token probability providers.

pub mod markov;
pub mod tokenizer;
pub mod wire;

pub use markov::{HiddenMode, MarkovBackend, MarkovModel};
pub use tokenizer::{Tokenizer, TokenizerMode};
pub use wire::{serve, WireBackend};

use crate::dist::NextTokenDist;
use crate::error::Result;
use crate::token::Token;

/// What the decoder needs from one backend call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NextRequest {
    /// Minimum number of entries wanted.
    pub top: usize,
    /// Return the hidden state of the last prefix position.
    pub want_hidden: bool,
    /// Return hidden states for every prefix position.
    pub want_prefix_hidden: bool,
}

impl NextRequest {
    pub fn top(top: usize) -> Self {
        Self { top, want_hidden: false, want_prefix_hidden: false }
    }
}

/// Maps a prefix to a next-token distribution.
pub trait LogitProvider<T> {
    fn vocab_size(&self) -> usize;

    fn supports_hidden(&self) -> bool;

    /// Dimensionality of hidden states, when supported.
    fn hidden_dim(&self) -> Option<usize>;

    fn eos(&self) -> Option<Token>;

    fn next(&mut self, prefix: &[Token], request: &NextRequest) -> Result<NextTokenDist<T>>;

    fn encode(&mut self, text: &str) -> Result<Vec<Token>>;

    fn decode(&mut self, ids: &[Token]) -> Result<String>;
}

impl<T, P: LogitProvider<T> + ?Sized> LogitProvider<T> for Box<P> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn supports_hidden(&self) -> bool {
        (**self).supports_hidden()
    }
    fn hidden_dim(&self) -> Option<usize> {
        (**self).hidden_dim()
    }
    fn eos(&self) -> Option<Token> {
        (**self).eos()
    }
    fn next(&mut self, prefix: &[Token], request: &NextRequest) -> Result<NextTokenDist<T>> {
        (**self).next(prefix, request)
    }
    fn encode(&mut self, text: &str) -> Result<Vec<Token>> {
        (**self).encode(text)
    }
    fn decode(&mut self, ids: &[Token]) -> Result<String> {
        (**self).decode(ids)
    }
}
