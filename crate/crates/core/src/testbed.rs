//! The built-in degeneration testbed: an order-2 Markov LM over a bundled
//! English corpus of about 51k whitespace tokens (prose from the CPython
//! language reference plus several free-software license texts, with
//! punctuation split off).

use std::sync::Arc;

use crate::backends::{MarkovBackend, MarkovModel, TokenizerMode};
use crate::error::Result;
use crate::token::Token;

pub const CORPUS: &str = include_str!("../data/testbed_corpus.txt");

/// Markov order used by the testbed (context of one token).
pub const ORDER: usize = 2;

pub fn model() -> Result<MarkovModel> {
    MarkovModel::train(CORPUS, ORDER, 0.0, TokenizerMode::Whitespace)
}

pub fn backend() -> Result<MarkovBackend> {
    Ok(MarkovBackend::new(Arc::new(model()?)))
}

/// `count` windows of `len` tokens at evenly spaced offsets of `tokens`.
pub fn prompts(tokens: &[Token], count: usize, len: usize) -> Vec<Vec<Token>> {
    if tokens.len() < len || count == 0 {
        return Vec::new();
    }
    let span = tokens.len() - len;
    (0..count)
        .map(|i| {
            let start = if count == 1 { 0 } else { i * span / (count - 1) };
            tokens[start..start + len].to_vec()
        })
        .collect()
}
