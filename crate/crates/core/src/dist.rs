//! The backend's view of the next-token distribution.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::token::Token;

/// Tolerance on the total mass of a full distribution.
pub const FULL_MASS_TOLERANCE: f64 = 1e-6;

/// Next-token probabilities, sorted by probability (descending, ties by
/// ascending token id).
///
/// Entries are shared behind an `Arc` so a backend can hand out a cached
/// distribution without copying the whole vocabulary on every step.
#[derive(Debug, Clone, PartialEq)]
pub struct NextTokenDist<T> {
    entries: Arc<[(Token, T)]>,
    /// Whether `entries` cover the whole vocabulary.
    pub full: bool,
    /// Last-layer state for the final prefix position.
    pub hidden_state: Option<Vec<T>>,
    /// States for every prefix position, when the caller asked for them.
    pub prefix_hidden: Option<Vec<Vec<T>>>,
}

impl<T: Real> NextTokenDist<T> {
    /// Sorts `entries` into canonical order.
    pub fn new(mut entries: Vec<(Token, T)>, full: bool) -> Self {
        sort_entries(&mut entries);
        Self::from_shared(entries.into(), full)
    }

    /// Wraps entries that are already in canonical order.
    pub fn from_shared(entries: Arc<[(Token, T)]>, full: bool) -> Self {
        Self { entries, full, hidden_state: None, prefix_hidden: None }
    }

    pub fn with_hidden(mut self, hidden: Vec<T>) -> Self {
        self.hidden_state = Some(hidden);
        self
    }

    pub fn entries(&self) -> &[(Token, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total probability mass carried by the entries.
    pub fn mass(&self) -> T {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    /// The candidate set V^(k): the `k` most probable tokens. Tokens with
    /// zero probability are never candidates.
    pub fn top_k(&self, k: usize) -> &[(Token, T)] {
        let nonzero = self.entries.iter().take_while(|&&(_, p)| p > T::zero()).count();
        &self.entries[..k.min(nonzero)]
    }

    /// Probability of `token`, if it is among the entries.
    pub fn prob_of(&self, token: Token) -> Option<T> {
        self.entries.iter().find(|&&(t, _)| t == token).map(|&(_, p)| p)
    }

    /// Checks the distribution invariants: probabilities in `[0, 1]`,
    /// descending order, distinct ids below `vocab_size`, and unit mass when
    /// `full`.
    pub fn validate(&self, vocab_size: Option<usize>) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        let mut prev: Option<T> = None;
        for &(token, p) in self.entries.iter() {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::Protocol(format!("probability {p:?} of token {token} outside [0, 1]")));
            }
            if let Some(q) = prev {
                if p > q {
                    return Err(Error::Protocol(format!("entries not sorted descending at token {token}")));
                }
            }
            prev = Some(p);
            if !seen.insert(token) {
                return Err(Error::Protocol(format!("duplicate token id {token}")));
            }
            if let Some(v) = vocab_size {
                if token.index() >= v {
                    return Err(Error::Protocol(format!("token id {token} outside vocabulary of {v}")));
                }
            }
        }
        if self.full {
            let mass = self.mass().to_f64().unwrap_or(f64::NAN);
            if (mass - 1.0).abs() > FULL_MASS_TOLERANCE {
                return Err(Error::Protocol(format!("full distribution sums to {mass}")));
            }
        }
        if let Some(h) = &self.hidden_state {
            if h.iter().any(|x| !x.is_finite()) {
                return Err(Error::Protocol("non-finite hidden state".into()));
            }
        }
        Ok(())
    }
}

/// Canonical order: probability descending, then token id ascending.
pub fn sort_entries<T: Real>(entries: &mut [(Token, T)]) {
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
}
