//! Discrete anti-LM: per-order n-gram counts built from the prompt and
//! grown with every emitted token, queried with exponentially decaying
//! back-off interpolation.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::token::Token;

/// Successor counts for one context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextCounts {
    /// Sum of `next`; the denominator of the relative frequency.
    pub total: u64,
    pub next: HashMap<Token, u64>,
}

/// Count store of a single order `n`: context of `n - 1` tokens mapped to
/// the tokens that followed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramStore {
    order: usize,
    contexts: HashMap<Vec<Token>, ContextCounts>,
}

impl NGramStore {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "n-gram order must be positive");
        Self { order, contexts: HashMap::new() }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Records the n-gram `context · next`.
    pub fn record(&mut self, context: &[Token], next: Token) {
        debug_assert_eq!(context.len(), self.order - 1);
        let entry = match self.contexts.get_mut(context) {
            Some(e) => e,
            None => self.contexts.entry(context.to_vec()).or_default(),
        };
        entry.total += 1;
        *entry.next.entry(next).or_insert(0) += 1;
    }

    pub fn context(&self, context: &[Token]) -> Option<&ContextCounts> {
        self.contexts.get(context)
    }

    /// `C(context · next)`.
    pub fn count(&self, context: &[Token], next: Token) -> u64 {
        self.contexts.get(context).and_then(|c| c.next.get(&next)).copied().unwrap_or(0)
    }

    /// `C(context)`, counted as a prefix of recorded n-grams.
    pub fn context_total(&self, context: &[Token]) -> u64 {
        self.contexts.get(context).map_or(0, |c| c.total)
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Number of distinct contexts.
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Token], &ContextCounts)> {
        self.contexts.iter().map(|(k, v)| (k.as_slice(), v))
    }
}

/// Interpolation weights applied by one penalty query.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationWeights<T> {
    /// `(order, lambda, p_order)` for every order >= 2 whose probability was
    /// non-zero, highest order first.
    pub applied: Vec<(usize, T, T)>,
    /// Mass left for the unigram model.
    pub residual: T,
    pub unigram: T,
}

impl<T: Scalar> InterpolationWeights<T> {
    pub fn penalty(&self) -> T {
        self.applied.iter().fold(self.residual * self.unigram, |acc, &(_, l, p)| acc + l * p)
    }

    /// Sum of all weights; one up to rounding.
    pub fn weight_sum(&self) -> T {
        self.applied.iter().fold(self.residual, |acc, &(_, l, _)| acc + l)
    }
}

/// Parsed dump rows, `(n, context, token) -> count`.
pub type DumpTable = BTreeMap<(usize, Vec<Token>, Token), u64>;

/// Smoothed n-gram anti-LM over orders `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedAntiLm<T> {
    stores: Vec<NGramStore>,
    beta: T,
    token_count: u64,
    /// Last `N - 1` observed tokens.
    tail: VecDeque<Token>,
}

impl<T: Scalar> SmoothedAntiLm<T> {
    pub fn new(max_order: usize, beta: T) -> Self {
        assert!(max_order >= 1, "anti-LM order must be positive");
        Self { stores: (1..=max_order).map(NGramStore::new).collect(), beta, token_count: 0, tail: VecDeque::with_capacity(max_order) }
    }

    /// Splits `prompt` into n-grams of every order up to `max_order`.
    pub fn build(prompt: &[Token], max_order: usize, beta: T) -> Self {
        let mut lm = Self::new(max_order, beta);
        for &token in prompt {
            lm.update(token);
        }
        lm
    }

    /// Counts the n-grams that end at `token`, one per order with enough
    /// history.
    pub fn update(&mut self, token: Token) {
        let history = self.tail.make_contiguous();
        for store in &mut self.stores {
            let ctx_len = store.order - 1;
            if history.len() >= ctx_len {
                store.record(&history[history.len() - ctx_len..], token);
            }
        }
        self.token_count += 1;
        if self.max_order() > 1 {
            if self.tail.len() == self.max_order() - 1 {
                self.tail.pop_front();
            }
            self.tail.push_back(token);
        }
    }

    pub fn max_order(&self) -> usize {
        self.stores.len()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn token_count(&self) -> u64 {
        self.token_count
    }

    /// Store of order `n` (1-based).
    pub fn store(&self, n: usize) -> &NGramStore {
        &self.stores[n - 1]
    }

    pub fn stores(&self) -> &[NGramStore] {
        &self.stores
    }

    /// The last `N - 1` observed tokens.
    pub fn tail(&self) -> Vec<Token> {
        self.tail.iter().copied().collect()
    }

    /// Relative frequency `C(context · v) / C(context)`; zero for an unseen
    /// context. For `n = 1` the denominator is the number of observed tokens.
    pub fn order_prob(&self, n: usize, context: &[Token], v: Token) -> Result<T> {
        if n == 0 || n > self.max_order() {
            return Err(Error::Argument(format!("order {n} outside 1..={}", self.max_order())));
        }
        if context.len() != n - 1 {
            return Err(Error::Argument(format!("order {n} needs a context of {} tokens, got {}", n - 1, context.len())));
        }
        Ok(self.relative_frequency(n, context, v))
    }

    fn relative_frequency(&self, n: usize, context: &[Token], v: Token) -> T {
        let store = &self.stores[n - 1];
        let (num, den) = if n == 1 {
            (store.count(&[], v), self.token_count)
        } else {
            match store.context(context) {
                Some(c) => (c.next.get(&v).copied().unwrap_or(0), c.total),
                None => (0, 0),
            }
        };
        if num == 0 || den == 0 {
            T::zero()
        } else {
            T::from_count(num) / T::from_count(den)
        }
    }

    /// Walks orders `N..=2`, giving each order with a non-zero probability
    /// `beta` times the remaining mass; what is left goes to the unigram.
    /// Orders the history is too short for are skipped.
    pub fn interpolation_weights(&self, history: &[Token], v: Token) -> InterpolationWeights<T> {
        let mut remaining = T::one();
        let mut applied = Vec::new();
        for n in (2..=self.max_order()).rev() {
            if history.len() < n - 1 {
                continue;
            }
            let p = self.relative_frequency(n, &history[history.len() - (n - 1)..], v);
            if p != T::zero() {
                let lambda = remaining * self.beta;
                remaining = remaining - lambda;
                applied.push((n, lambda, p));
            }
        }
        InterpolationWeights { applied, residual: remaining, unigram: self.relative_frequency(1, &[], v) }
    }

    /// Penalty for appending `v` after `history` (only its last `N - 1`
    /// tokens matter). Without smoothing this is the plain top-order
    /// relative frequency.
    pub fn penalty(&self, history: &[Token], v: Token, smoothing: bool) -> T {
        if smoothing {
            return self.interpolation_weights(history, v).penalty();
        }
        let n = self.max_order();
        if history.len() < n - 1 {
            return T::zero();
        }
        self.relative_frequency(n, &history[history.len() - (n - 1)..], v)
    }

    /// Penalty against the anti-LM's own history.
    pub fn penalty_next(&self, v: Token, smoothing: bool) -> T {
        let (a, b) = self.tail.as_slices();
        if b.is_empty() {
            self.penalty(a, v, smoothing)
        } else {
            let history: Vec<Token> = self.tail.iter().copied().collect();
            self.penalty(&history, v, smoothing)
        }
    }

    /// Text dump, one `n<TAB>ctx-ids<TAB>token-id<TAB>count` line per
    /// n-gram, context ids comma-separated, lines sorted.
    pub fn dump(&self) -> String {
        let mut rows = BTreeMap::new();
        for store in &self.stores {
            for (ctx, counts) in store.iter() {
                for (&tok, &c) in &counts.next {
                    rows.insert((store.order, ctx.to_vec(), tok), c);
                }
            }
        }
        let mut out = String::new();
        for ((n, ctx, tok), c) in rows {
            let ctx: Vec<String> = ctx.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(out, "{n}\t{}\t{tok}\t{c}", ctx.join(","));
        }
        out
    }

    /// Parses a dump into per-order count tables, `(n, context, token) -> count`.
    pub fn parse_dump(text: &str) -> Result<DumpTable> {
        let mut rows = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Data(format!("dump line {}: malformed `{line}`", i + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            let n: usize = fields[0].parse().map_err(|_| bad())?;
            let ctx = if fields[1].is_empty() {
                Vec::new()
            } else {
                fields[1].split(',').map(|s| s.parse().map(Token)).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?
            };
            let tok = Token(fields[2].parse().map_err(|_| bad())?);
            let count: u64 = fields[3].parse().map_err(|_| bad())?;
            rows.insert((n, ctx, tok), count);
        }
        Ok(rows)
    }
}
