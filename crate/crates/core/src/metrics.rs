//! Repetition metrics: REP-n and diversity.
//!
//! `rep_n = 1 - unique n-grams / total n-grams` over the sliding windows of
//! a sequence; `diversity = (1 - rep_2)(1 - rep_3)(1 - rep_4)`. Sequences
//! shorter than `n` have no n-grams and count as `rep_n = 0`.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const REP_ORDERS: [usize; 3] = [2, 3, 4];

/// Repetition rate of `n`-grams in `seq`.
pub fn rep_n<I: Hash + Eq, T: Scalar>(seq: &[I], n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::Argument("n-gram order must be >= 1".into()));
    }
    if seq.len() < n {
        return Ok(T::zero());
    }
    let windows = seq.windows(n);
    let total = windows.len() as u64;
    let unique = windows.collect::<HashSet<_>>().len() as u64;
    Ok(T::one() - T::from_count(unique) / T::from_count(total))
}

pub fn diversity<I: Hash + Eq, T: Scalar>(seq: &[I]) -> T {
    REP_ORDERS.iter().map(|&n| T::one() - rep_n::<I, T>(seq, n).expect("orders are positive")).fold(T::one(), |acc, f| acc * f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepReport<T> {
    pub rep_2: T,
    pub rep_3: T,
    pub rep_4: T,
    pub diversity: T,
    pub token_count: usize,
    /// Placeholders for externally computed scores.
    #[serde(default)]
    pub mauve: Option<T>,
    #[serde(default)]
    pub coh: Option<T>,
}

impl<T: Scalar> RepReport<T> {
    pub fn of<I: Hash + Eq>(seq: &[I]) -> Self {
        let rep = |n| rep_n::<I, T>(seq, n).expect("orders are positive");
        let (rep_2, rep_3, rep_4) = (rep(2), rep(3), rep(4));
        RepReport {
            rep_2,
            rep_3,
            rep_4,
            diversity: (T::one() - rep_2) * (T::one() - rep_3) * (T::one() - rep_4),
            token_count: seq.len(),
            mauve: None,
            coh: None,
        }
    }

    pub fn rep(&self, n: usize) -> Option<T> {
        match n {
            2 => Some(self.rep_2),
            3 => Some(self.rep_3),
            4 => Some(self.rep_4),
            _ => None,
        }
    }
}

/// Corpus summary: means of the per-continuation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub count: usize,
    pub rep_2: f64,
    pub rep_3: f64,
    pub rep_4: f64,
    pub diversity: f64,
    pub mean_token_count: f64,
}

impl CorpusSummary {
    pub fn of(reports: &[RepReport<f64>]) -> Self {
        let n = reports.len();
        let mean = |f: &dyn Fn(&RepReport<f64>) -> f64| if n == 0 { 0.0 } else { reports.iter().map(f).sum::<f64>() / n as f64 };
        CorpusSummary {
            count: n,
            rep_2: mean(&|r| r.rep_2),
            rep_3: mean(&|r| r.rep_3),
            rep_4: mean(&|r| r.rep_4),
            diversity: mean(&|r| r.diversity),
            mean_token_count: mean(&|r| r.token_count as f64),
        }
    }
}

/// Mean per-sequence diversity.
pub fn mean_diversity<I: Hash + Eq, S: AsRef<[I]>>(seqs: &[S]) -> f64 {
    if seqs.is_empty() {
        return 0.0;
    }
    seqs.iter().map(|s| diversity::<I, f64>(s.as_ref())).sum::<f64>() / seqs.len() as f64
}
