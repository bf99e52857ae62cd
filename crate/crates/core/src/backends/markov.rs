//! Corpus-trained Markov LM used as a stand-in for a neural LM.
//!
//! Greedy decoding from a low-order Markov chain falls into short loops
//! almost immediately, which makes it a deterministic degeneration
//! testbed. Unseen contexts back off to shorter ones and finally to the
//! unigram distribution.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenizer::{Tokenizer, TokenizerMode};
use super::{LogitProvider, NextRequest};
use crate::antilm::NGramStore;
use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::token::Token;

/// How pseudo hidden states are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum HiddenMode {
    /// The one-hot vector of the token at the position.
    OneHot,
    /// A seeded unit-norm random vector per token id.
    RandomProjection { dim: usize, seed: u64 },
}

impl Default for HiddenMode {
    fn default() -> Self {
        HiddenMode::RandomProjection { dim: 64, seed: 0 }
    }
}

/// Successors of one context, by count descending then id ascending.
#[derive(Debug, Clone)]
struct Successors {
    total: u64,
    sorted: Vec<(Token, u64)>,
}

#[derive(Debug, Clone)]
pub struct MarkovModel {
    order: usize,
    add_k: f64,
    tokenizer: Tokenizer,
    /// Index `n - 1` holds contexts of length `n - 1`.
    tables: Vec<HashMap<Vec<Token>, Successors>>,
    hidden_mode: HiddenMode,
    projections: Vec<f64>,
}

impl MarkovModel {
    pub fn train(corpus: &str, order: usize, add_k: f64, mode: TokenizerMode) -> Result<Self> {
        if order == 0 {
            return Err(Error::Argument("Markov order must be >= 1".into()));
        }
        if !(add_k >= 0.0 && add_k.is_finite()) {
            return Err(Error::Argument(format!("add_k must be a finite value >= 0, got {add_k}")));
        }
        let tokenizer = Tokenizer::fit(corpus, mode);
        let ids = tokenizer.encode(corpus);
        if ids.is_empty() {
            return Err(Error::Data("training corpus is empty".into()));
        }
        let mut stores: Vec<NGramStore> = (1..=order).map(NGramStore::new).collect();
        for (i, &tok) in ids.iter().enumerate() {
            for store in &mut stores {
                let ctx = store.order() - 1;
                if i >= ctx {
                    store.record(&ids[i - ctx..i], tok);
                }
            }
        }
        let tables = stores
            .iter()
            .map(|store| {
                store
                    .iter()
                    .map(|(ctx, counts)| {
                        let mut sorted: Vec<(Token, u64)> = counts.next.iter().map(|(&t, &c)| (t, c)).collect();
                        sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                        (ctx.to_vec(), Successors { total: counts.total, sorted })
                    })
                    .collect()
            })
            .collect();
        Ok(MarkovModel { order, add_k, tokenizer, tables, hidden_mode: HiddenMode::OneHot, projections: Vec::new() }.with_hidden(HiddenMode::default()))
    }

    pub fn with_hidden(mut self, mode: HiddenMode) -> Self {
        self.projections = match mode {
            HiddenMode::OneHot => Vec::new(),
            HiddenMode::RandomProjection { dim, seed } => random_projections(self.tokenizer.vocab_size(), dim, seed),
        };
        self.hidden_mode = mode;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn hidden_mode(&self) -> HiddenMode {
        self.hidden_mode
    }

    pub fn hidden_dim(&self) -> usize {
        match self.hidden_mode {
            HiddenMode::OneHot => self.tokenizer.vocab_size(),
            HiddenMode::RandomProjection { dim, .. } => dim,
        }
    }

    /// Longest suffix of `prefix` (at most `order - 1` tokens) that was
    /// seen in training.
    fn successors<'a>(&'a self, prefix: &[Token]) -> &'a Successors {
        let longest = (self.order - 1).min(prefix.len());
        for len in (1..=longest).rev() {
            if let Some(s) = self.tables[len].get(&prefix[prefix.len() - len..]) {
                return s;
            }
        }
        &self.tables[0][&[][..]]
    }

    /// Pseudo hidden state for a position holding `token`.
    pub fn hidden_state<T: Real>(&self, token: Option<Token>) -> Vec<T> {
        let dim = self.hidden_dim();
        match (self.hidden_mode, token) {
            (_, None) => vec![T::zero(); dim],
            (HiddenMode::OneHot, Some(t)) => {
                let mut v = vec![T::zero(); dim];
                if let Some(x) = v.get_mut(t.index()) {
                    *x = T::one();
                }
                v
            }
            (HiddenMode::RandomProjection { .. }, Some(t)) => match self.projections.chunks(dim).nth(t.index()) {
                Some(row) => row.iter().map(|&x| T::from_real(x)).collect(),
                None => vec![T::zero(); dim],
            },
        }
    }
}

fn random_projections(vocab: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(vocab * dim);
    for _ in 0..vocab {
        let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.extend(row.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }));
    }
    out
}

/// A session over a shared [`MarkovModel`]. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct MarkovBackend {
    model: Arc<MarkovModel>,
    seen: Vec<bool>,
}

impl MarkovBackend {
    pub fn new(model: Arc<MarkovModel>) -> Self {
        let vocab = model.tokenizer.vocab_size();
        Self { model, seen: vec![false; vocab] }
    }

    /// Trains on `corpus` with the whitespace tokenizer.
    pub fn train(corpus: &str, order: usize, add_k: f64) -> Result<Self> {
        Ok(Self::new(Arc::new(MarkovModel::train(corpus, order, add_k, TokenizerMode::Whitespace)?)))
    }

    pub fn with_hidden(self, mode: HiddenMode) -> Self {
        let model = Arc::try_unwrap(self.model).unwrap_or_else(|shared| (*shared).clone());
        Self::new(Arc::new(model.with_hidden(mode)))
    }

    pub fn model(&self) -> &Arc<MarkovModel> {
        &self.model
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.model.tokenizer
    }

    /// Full next-token distribution after `prefix`.
    pub fn distribution<T: Real>(&mut self, prefix: &[Token]) -> NextTokenDist<T> {
        let model = &*self.model;
        let vocab = model.tokenizer.vocab_size();
        let succ = model.successors(prefix);
        let k = model.add_k;
        let denom = succ.total as f64 + k * vocab as f64;
        let mut entries = Vec::with_capacity(vocab);
        for &(tok, c) in &succ.sorted {
            self.seen[tok.index()] = true;
            entries.push((tok, T::from_real((c as f64 + k) / denom)));
        }
        let floor = T::from_real(k / denom);
        for id in 0..vocab {
            if !std::mem::take(&mut self.seen[id]) {
                entries.push((Token(id as u32), floor));
            }
        }
        NextTokenDist::from_shared(entries.into(), true)
    }
}

impl<T: Real> LogitProvider<T> for MarkovBackend {
    fn vocab_size(&self) -> usize {
        self.model.tokenizer.vocab_size()
    }

    fn supports_hidden(&self) -> bool {
        true
    }

    fn hidden_dim(&self) -> Option<usize> {
        Some(self.model.hidden_dim())
    }

    fn eos(&self) -> Option<Token> {
        None
    }

    fn next(&mut self, prefix: &[Token], request: &NextRequest) -> Result<NextTokenDist<T>> {
        let vocab = self.model.tokenizer.vocab_size();
        if let Some(bad) = prefix.iter().find(|t| t.index() >= vocab) {
            return Err(Error::Argument(format!("token {bad} outside vocabulary of {vocab}")));
        }
        let mut dist = self.distribution(prefix);
        if request.want_hidden {
            dist.hidden_state = Some(self.model.hidden_state(prefix.last().copied()));
        }
        if request.want_prefix_hidden {
            dist.prefix_hidden = Some(prefix.iter().map(|&t| self.model.hidden_state(Some(t))).collect());
        }
        Ok(dist)
    }

    fn encode(&mut self, text: &str) -> Result<Vec<Token>> {
        Ok(self.model.tokenizer.encode(text))
    }

    fn decode(&mut self, ids: &[Token]) -> Result<String> {
        Ok(self.model.tokenizer.decode(ids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(backend: &mut MarkovBackend, prefix: &str) -> Vec<(String, f64)> {
        let ids = backend.tokenizer().encode(prefix);
        let dist: NextTokenDist<f64> = backend.distribution(&ids);
        dist.entries().iter().map(|&(t, p)| (backend.tokenizer().piece(t).unwrap().to_owned(), p)).collect()
    }

    #[test]
    fn periodic_corpus_is_deterministic() {
        let mut b = MarkovBackend::train("a b a b", 2, 0.0).unwrap();
        assert_eq!(probs(&mut b, "x a")[0], ("b".into(), 1.0));
    }

    #[test]
    fn split_successors() {
        let mut b = MarkovBackend::train("a b a c", 2, 0.0).unwrap();
        let p = probs(&mut b, "a");
        assert_eq!(&p[..2], &[("b".into(), 0.5), ("c".into(), 0.5)]);
    }

    #[test]
    fn laplace_smoothing() {
        // vocab {<unk>, a, b}; C(a) = 1 as a context, followed by b
        let mut b = MarkovBackend::train("a b", 2, 1.0).unwrap();
        let p = probs(&mut b, "a");
        assert_eq!(p[0], ("b".into(), 0.5));
        assert_eq!(p.len(), 3);
        assert!((p.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_context_backs_off_to_unigram() {
        let mut b = MarkovBackend::train("a b a c", 2, 0.0).unwrap();
        // `c` is never followed by anything
        let p = probs(&mut b, "c");
        assert_eq!(p[0], ("a".into(), 0.5));
        assert_eq!(&p[1..3], &[("b".into(), 0.25), ("c".into(), 0.25)]);
        assert_eq!(probs(&mut b, ""), p);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(MarkovBackend::train(" \n ", 2, 0.0), Err(Error::Data(_))));
        assert!(MarkovBackend::train("a", 0, 0.0).is_err());
    }

    #[test]
    fn hidden_modes() {
        let mut b = MarkovBackend::train("a b c", 2, 0.0).unwrap().with_hidden(HiddenMode::OneHot);
        let req = NextRequest { top: 1, want_hidden: true, want_prefix_hidden: true };
        let d: NextTokenDist<f64> = b.next(&[Token(1), Token(2)], &req).unwrap();
        assert_eq!(d.hidden_state.unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(d.prefix_hidden.unwrap().len(), 2);

        let mut p = MarkovBackend::train("a b c", 2, 0.0).unwrap().with_hidden(HiddenMode::RandomProjection { dim: 8, seed: 7 });
        let h: NextTokenDist<f64> = p.next(&[Token(3)], &req).unwrap();
        let h = h.hidden_state.unwrap();
        assert_eq!(h.len(), 8);
        assert!((h.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        let again: NextTokenDist<f64> = p.clone().next(&[Token(3)], &req).unwrap();
        assert_eq!(again.hidden_state.unwrap(), h);
    }

    #[test]
    fn rejects_out_of_vocab_prefix() {
        let mut b = MarkovBackend::train("a b", 2, 0.0).unwrap();
        let r: Result<NextTokenDist<f64>> = b.next(&[Token(99)], &NextRequest::top(1));
        assert!(r.is_err());
    }
}
