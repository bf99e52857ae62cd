#![allow(dead_code)]

use std::collections::HashSet;

use fsd_core::backends::{LogitProvider, NextRequest};
use fsd_core::dist::NextTokenDist;
use fsd_core::{Result, Token};

/// Returns the same distribution after every prefix.
#[derive(Debug, Clone)]
pub struct ConstantBackend {
    pub dist: Vec<(Token, f64)>,
    pub vocab: usize,
    pub eos: Option<Token>,
    pub fail_after: Option<usize>,
    pub calls: usize,
}

impl ConstantBackend {
    pub fn new(pairs: &[(u32, f64)]) -> Self {
        let vocab = pairs.iter().map(|p| p.0 as usize + 1).max().unwrap_or(1);
        Self { dist: pairs.iter().map(|&(t, p)| (Token(t), p)).collect(), vocab, eos: None, fail_after: None, calls: 0 }
    }
}

impl LogitProvider<f64> for ConstantBackend {
    fn vocab_size(&self) -> usize {
        self.vocab
    }
    fn supports_hidden(&self) -> bool {
        true
    }
    fn hidden_dim(&self) -> Option<usize> {
        Some(self.vocab)
    }
    fn eos(&self) -> Option<Token> {
        self.eos
    }
    fn next(&mut self, prefix: &[Token], request: &NextRequest) -> Result<NextTokenDist<f64>> {
        self.calls += 1;
        if let Some(n) = self.fail_after {
            if self.calls > n {
                return Err(fsd_core::Error::Backend { code: "boom".into(), msg: "scripted failure".into() });
            }
        }
        let mut d = NextTokenDist::new(self.dist.clone(), true);
        if request.want_hidden {
            d.hidden_state = Some(onehot(prefix.last().map_or(0, |t| t.index()), self.vocab));
        }
        if request.want_prefix_hidden {
            d.prefix_hidden = Some(prefix.iter().map(|t| onehot(t.index(), self.vocab)).collect());
        }
        Ok(d)
    }
    fn encode(&mut self, text: &str) -> Result<Vec<Token>> {
        Ok(text.split_whitespace().filter_map(|w| w.parse().ok()).map(Token).collect())
    }
    fn decode(&mut self, ids: &[Token]) -> Result<String> {
        Ok(ids.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "))
    }
}

pub fn onehot(i: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

/// Relative frequency of `v` after the last `n - 1` tokens of `seq`,
/// counted by scanning every window of `seq`.
pub fn scan_prob(seq: &[Token], n: usize, v: Token) -> f64 {
    if n == 1 {
        if seq.is_empty() {
            return 0.0;
        }
        return seq.iter().filter(|&&t| t == v).count() as f64 / seq.len() as f64;
    }
    if seq.len() < n - 1 {
        return 0.0;
    }
    let ctx = &seq[seq.len() - (n - 1)..];
    let (mut hits, mut total) = (0u64, 0u64);
    for w in seq.windows(n) {
        if &w[..n - 1] == ctx {
            total += 1;
            if w[n - 1] == v {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Interpolated penalty written as an explicit convex combination: the
/// j-th non-zero order (counting down from N) gets `beta (1 - beta)^j`,
/// the unigram the leftover `(1 - beta)^m`.
pub fn brute_penalty(seq: &[Token], max_order: usize, beta: f64, v: Token) -> (f64, f64) {
    let probs: Vec<(usize, f64)> = (2..=max_order).rev().map(|n| (n, scan_prob(seq, n, v))).filter(|&(_, p)| p != 0.0).collect();
    let lambdas: Vec<f64> = (0..probs.len()).map(|j| beta * (1.0 - beta).powi(j as i32)).collect();
    let unigram_weight = (1.0 - beta).powi(probs.len() as i32);
    let value = probs.iter().zip(&lambdas).map(|(&(_, p), &l)| l * p).sum::<f64>() + unigram_weight * scan_prob(seq, 1, v);
    (value, lambdas.iter().sum::<f64>() + unigram_weight)
}

/// One-hot vectorized penalty with n = 2: 1 when the last token of `seq`
/// previously preceded `v`.
pub fn brute_onehot_bigram(seq: &[Token], v: Token) -> f64 {
    match seq.last() {
        Some(&last) if seq.windows(2).any(|w| w[0] == last && w[1] == v) => 1.0,
        _ => 0.0,
    }
}

/// Unique-window metric written with an explicit set of owned n-grams.
pub fn set_rep(seq: &[Token], n: usize) -> f64 {
    if seq.len() < n {
        return 0.0;
    }
    let mut set = HashSet::new();
    let mut total = 0usize;
    for i in 0..=seq.len() - n {
        set.insert(seq[i..i + n].iter().map(|t| t.id()).collect::<Vec<u32>>());
        total += 1;
    }
    1.0 - set.len() as f64 / total as f64
}

pub fn toks(ids: &[u32]) -> Vec<Token> {
    ids.iter().copied().map(Token).collect()
}
