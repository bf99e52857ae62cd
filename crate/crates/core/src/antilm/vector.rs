//! Vectorized anti-LM: each past occurrence of a token is keyed by the
//! concatenated hidden states of the `n - 1` positions before it, and a
//! candidate is penalized by its best cosine match against the current
//! window.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::token::Token;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorAntiLm<T> {
    order: usize,
    dim: usize,
    /// Keys grouped by the token that followed them.
    buckets: HashMap<Token, Vec<Vec<T>>>,
    /// The last `order - 1` hidden states.
    states: VecDeque<Vec<T>>,
}

impl<T: Real> VectorAntiLm<T> {
    pub fn new(order: usize, dim: usize) -> Self {
        assert!(order >= 1, "anti-LM order must be positive");
        Self { order, dim, buckets: HashMap::new(), states: VecDeque::with_capacity(order) }
    }

    /// Builds from a token sequence and the hidden state aligned with each
    /// position.
    pub fn build(states: &[Vec<T>], tokens: &[Token], order: usize, dim: usize) -> Result<Self> {
        if states.len() != tokens.len() {
            return Err(Error::Argument(format!("{} hidden states for {} tokens", states.len(), tokens.len())));
        }
        let mut lm = Self::new(order, dim);
        for (state, &token) in states.iter().zip(tokens) {
            lm.update(token, state.clone())?;
        }
        Ok(lm)
    }

    /// Appends `token` with its aligned hidden state. A key is stored once
    /// `order - 1` earlier states are available.
    pub fn update(&mut self, token: Token, state: Vec<T>) -> Result<()> {
        if state.len() != self.dim {
            return Err(Error::Argument(format!("hidden state of dim {} where {} expected", state.len(), self.dim)));
        }
        let window = self.order - 1;
        if self.states.len() == window {
            let mut key = Vec::with_capacity(window * self.dim);
            for s in &self.states {
                key.extend_from_slice(s);
            }
            self.buckets.entry(token).or_default().push(key);
        }
        if window > 0 {
            if self.states.len() == window {
                self.states.pop_front();
            }
            self.states.push_back(state);
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn keys(&self, token: Token) -> &[Vec<T>] {
        self.buckets.get(&token).map_or(&[], Vec::as_slice)
    }

    pub fn buckets(&self) -> &HashMap<Token, Vec<Vec<T>>> {
        &self.buckets
    }

    /// The current query window, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &[T]> {
        self.states.iter().map(Vec::as_slice)
    }

    /// `max(0, max cos(key, cat(query)))` over the keys stored for `v`;
    /// zero when the bucket is empty or the query is shorter than `n - 1`.
    pub fn penalty_for_query(&self, query: &[&[T]], v: Token) -> T {
        let window = self.order - 1;
        if query.len() != window || query.iter().any(|q| q.len() != self.dim) {
            return T::zero();
        }
        let keys = match self.buckets.get(&v) {
            Some(keys) if !keys.is_empty() => keys,
            _ => return T::zero(),
        };
        let query_sq: T = query.iter().flat_map(|q| q.iter()).map(|&x| x * x).sum();
        let mut best = T::zero();
        for key in keys {
            let mut dot = T::zero();
            let mut key_sq = T::zero();
            for (&k, &q) in key.iter().zip(query.iter().flat_map(|q| q.iter())) {
                dot = dot + k * q;
                key_sq = key_sq + k * k;
            }
            let c = cosine_from_parts(dot, key_sq, query_sq);
            if c > best {
                best = c;
            }
        }
        best.min(T::one())
    }

    /// Penalty against the anti-LM's own window of recent states.
    pub fn penalty_next(&self, v: Token) -> T {
        let query: Vec<&[T]> = self.window().collect();
        self.penalty_for_query(&query, v)
    }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine<T: Real>(a: &[T], b: &[T]) -> T {
    let dot = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let a_sq = a.iter().map(|&x| x * x).sum();
    let b_sq = b.iter().map(|&x| x * x).sum();
    cosine_from_parts(dot, a_sq, b_sq)
}

fn cosine_from_parts<T: Real>(dot: T, a_sq: T, b_sq: T) -> T {
    let denom = (a_sq * b_sq).sqrt();
    if denom > T::zero() && denom.is_finite() {
        dot / denom
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::tokens;

    fn onehot(i: usize, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    fn onehot_states(ids: &[u32], dim: usize) -> Vec<Vec<f64>> {
        ids.iter().map(|&i| onehot(i as usize, dim)).collect()
    }

    #[test]
    fn build_bigram_windows() {
        let ids = [0, 1, 0];
        let lm = VectorAntiLm::build(&onehot_states(&ids, 3), &tokens(&ids), 2, 3).unwrap();
        assert_eq!(lm.keys(Token(1)), &[onehot(0, 3)]);
        assert_eq!(lm.keys(Token(0)), &[onehot(1, 3)]);
    }

    #[test]
    fn build_short_sequence_is_empty() {
        let lm = VectorAntiLm::build(&onehot_states(&[0], 3), &tokens(&[0]), 2, 3).unwrap();
        assert!(lm.buckets().is_empty());
    }

    #[test]
    fn build_trigram_windows() {
        let ids = [0, 1, 2, 0];
        let h = onehot_states(&ids, 3);
        let lm = VectorAntiLm::build(&h, &tokens(&ids), 3, 3).unwrap();
        assert_eq!(lm.keys(Token(2)), &[[h[0].clone(), h[1].clone()].concat()]);
        assert_eq!(lm.keys(Token(0)), &[[h[1].clone(), h[2].clone()].concat()]);
        assert_eq!(lm.buckets().len(), 2);
    }

    #[test]
    fn build_rejects_mismatches() {
        assert!(VectorAntiLm::build(&onehot_states(&[0, 1], 3), &tokens(&[0]), 2, 3).is_err());
        assert!(VectorAntiLm::build(&onehot_states(&[0, 1], 3), &tokens(&[0, 1]), 2, 4).is_err());
    }

    #[test]
    fn update_appends_one_key() {
        let mut lm = VectorAntiLm::build(&onehot_states(&[0, 1], 3), &tokens(&[0, 1]), 2, 3).unwrap();
        lm.update(Token(0), onehot(0, 3)).unwrap();
        assert_eq!(lm.keys(Token(0)), &[onehot(1, 3)]);
        assert!(lm.update(Token(0), vec![1.0]).is_err());
    }

    #[test]
    fn first_update_with_trigram_window_adds_nothing() {
        let mut lm = VectorAntiLm::<f64>::new(3, 2);
        lm.update(Token(0), vec![1.0, 0.0]).unwrap();
        assert!(lm.buckets().is_empty());
    }

    #[test]
    fn penalty_examples() {
        let ids = [0, 1, 0];
        let lm = VectorAntiLm::build(&onehot_states(&ids, 3), &tokens(&ids), 2, 3).unwrap();
        let q = onehot(0, 3);
        assert_eq!(lm.penalty_for_query(&[&q], Token(1)), 1.0);
        assert_eq!(lm.penalty_next(Token(1)), 1.0);
        assert_eq!(lm.penalty_for_query(&[&q], Token(2)), 0.0);
        assert_eq!(lm.penalty_for_query(&[], Token(1)), 0.0);
    }

    #[test]
    fn partial_window_match_scores_half() {
        let mut lm = VectorAntiLm::<f64>::new(3, 3);
        lm.buckets.insert(Token(9), vec![[onehot(0, 3), onehot(1, 3)].concat()]);
        let (qa, qc) = (onehot(0, 3), onehot(2, 3));
        assert_eq!(lm.penalty_for_query(&[&qa, &qc], Token(9)), 0.5);
    }

    #[test]
    fn negative_cosine_is_clipped_and_zero_norm_scores_zero() {
        let mut lm = VectorAntiLm::<f64>::new(2, 2);
        lm.buckets.insert(Token(1), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(lm.penalty_for_query(&[&[-1.0, 0.0]], Token(1)), 0.0);
        assert_eq!(lm.penalty_for_query(&[&[0.0, 0.0]], Token(1)), 0.0);
        assert_eq!(cosine::<f64>(&[0.0], &[1.0]), 0.0);
    }
}
