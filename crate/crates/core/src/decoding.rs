//! Decoding strategies and the generation loop.
//!
//! FSD scores each of the `k` most probable candidates by
//! `p_lm(v) - alpha * p_anti(v)`, where the anti-LM is built from the prompt
//! and updated with every emitted token, and emits the argmax. Greedy,
//! top-k and top-p sampling are provided as baselines.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::antilm::{AntiLm, SmoothedAntiLm, VectorAntiLm};
use crate::backends::{LogitProvider, NextRequest};
use crate::config::{DecoderConfig, Variant};
use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::result::{GenerationResult, StepRecord};
use crate::scalar::{Real, Scalar};
use crate::token::Token;

/// A scored member of the candidate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore<T> {
    pub token: Token,
    pub lm_prob: T,
    pub penalty: T,
    pub effective_alpha: T,
    pub score: T,
}

impl<T: Scalar> CandidateScore<T> {
    pub fn new(token: Token, lm_prob: T, penalty: T, effective_alpha: T) -> Self {
        Self { token, lm_prob, penalty, effective_alpha, score: fsd_score(lm_prob, penalty, effective_alpha) }
    }

    /// Ranking used to pick the winner: score, then LM probability, then
    /// the lower token id.
    pub fn rank(&self, other: &Self) -> Ordering {
        cmp(self.score, other.score).then_with(|| cmp(self.lm_prob, other.lm_prob)).then_with(|| other.token.cmp(&self.token))
    }

    fn record(&self) -> StepRecord<T> {
        StepRecord { chosen: self.token, lm_prob: self.lm_prob, penalty: self.penalty, score: self.score }
    }
}

fn cmp<T: PartialOrd>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// `lm_prob - alpha * penalty`. May be negative.
pub fn fsd_score<T: Scalar>(lm_prob: T, penalty: T, alpha: T) -> T {
    lm_prob - alpha * penalty
}

/// Scores V^(k) against `antilm` and returns every candidate, in
/// candidate-set order.
pub fn score_candidates<T: Real>(dist: &NextTokenDist<T>, antilm: &AntiLm<T>, cfg: &DecoderConfig<T>) -> Vec<CandidateScore<T>> {
    dist.top_k(cfg.k)
        .iter()
        .map(|&(token, lm_prob)| {
            let alpha = cfg.effective_alpha(token);
            let penalty = antilm.penalty(token, cfg.smoothing);
            CandidateScore::new(token, lm_prob, penalty, alpha)
        })
        .collect()
}

/// One FSD step: the best-scoring member of V^(k).
pub fn decode_step<T: Real>(dist: &NextTokenDist<T>, antilm: &AntiLm<T>, cfg: &DecoderConfig<T>) -> Result<CandidateScore<T>> {
    score_candidates(dist, antilm, cfg).into_iter().max_by(|a, b| a.rank(b)).ok_or_else(|| Error::backend("empty_dist", "backend returned no candidates"))
}

/// Most probable token; ties go to the lower id.
pub fn greedy_step<T: Real>(dist: &NextTokenDist<T>) -> Result<(Token, T)> {
    dist.entries()
        .iter()
        .copied()
        .max_by(|a, b| cmp(a.1, b.1).then_with(|| b.0.cmp(&a.0)))
        .ok_or_else(|| Error::backend("empty_dist", "backend returned no candidates"))
}

/// Samples from the renormalized `k` most probable tokens.
pub fn top_k_sample_step<T: Real, R: Rng + ?Sized>(dist: &NextTokenDist<T>, k: usize, rng: &mut R) -> Result<(Token, T)> {
    let pool = dist.top_k(k);
    if pool.is_empty() {
        return Err(Error::backend("empty_dist", "backend returned no candidates"));
    }
    Ok(sample(pool, rng))
}

/// Smallest prefix of the sorted entries whose mass reaches `p`.
pub fn nucleus<T: Real>(dist: &NextTokenDist<T>, p: T) -> Result<&[(Token, T)]> {
    if dist.is_empty() {
        return Err(Error::backend("empty_dist", "backend returned no candidates"));
    }
    // absorbs rounding in sums such as 0.5 + 0.3
    let target = p - T::from_real(1e-12);
    let mut mass = T::zero();
    for (i, &(_, q)) in dist.entries().iter().enumerate() {
        mass = mass + q;
        if mass >= target {
            return Ok(&dist.entries()[..=i]);
        }
    }
    if dist.full {
        return Ok(dist.entries());
    }
    Err(Error::Protocol(format!("truncated distribution carries mass {:?} < p = {p:?}; the backend must send more entries", mass)))
}

/// Samples from the renormalized nucleus of mass `p`.
pub fn top_p_sample_step<T: Real, R: Rng + ?Sized>(dist: &NextTokenDist<T>, p: T, rng: &mut R) -> Result<(Token, T)> {
    let pool = nucleus(dist, p)?;
    let positive = pool.iter().take_while(|e| e.1 > T::zero()).count().max(1);
    Ok(sample(&pool[..positive], rng))
}

/// Draws from `pool` proportionally to its (unnormalized) weights.
fn sample<T: Real, R: Rng + ?Sized>(pool: &[(Token, T)], rng: &mut R) -> (Token, T) {
    let total: f64 = pool.iter().map(|e| e.1.to_f64().unwrap_or(0.0)).sum();
    if pool.len() == 1 || total <= 0.0 {
        return pool[0];
    }
    let mut target = rng.gen::<f64>() * total;
    for &entry in pool {
        target -= entry.1.to_f64().unwrap_or(0.0);
        if target < 0.0 {
            return entry;
        }
    }
    pool[pool.len() - 1]
}

/// A validated configuration bound to the decoding loop.
#[derive(Debug, Clone)]
pub struct Decoder<T> {
    cfg: DecoderConfig<T>,
}

impl<T: Real> Decoder<T> {
    pub fn new(cfg: DecoderConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &DecoderConfig<T> {
        &self.cfg
    }

    /// Entries to request per step.
    fn request_top(&self) -> usize {
        match self.cfg.variant {
            Variant::Greedy => 1,
            Variant::TopKSample | Variant::Fsd | Variant::FsdVec => self.cfg.k,
            Variant::TopPSample => self.cfg.k.max(64),
        }
    }

    /// Generates up to `max_new_tokens` tokens after `prompt`. Backend
    /// failures end the run early and are reported in
    /// [`GenerationResult::failure`].
    pub fn generate<B>(&self, backend: &mut B, prompt: &[Token]) -> GenerationResult<T>
    where
        B: LogitProvider<T> + ?Sized,
    {
        let mut result = GenerationResult::new(prompt.to_vec());
        if let Err(e) = self.run(backend, &mut result) {
            result.failure = Some(e.to_string());
        }
        result
    }

    fn run<B>(&self, backend: &mut B, result: &mut GenerationResult<T>) -> Result<()>
    where
        B: LogitProvider<T> + ?Sized,
    {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut seq = result.prompt.clone();
        let mut antilm = match cfg.variant {
            Variant::Fsd => Some(AntiLm::Discrete(SmoothedAntiLm::build(&seq, cfg.order_n, cfg.beta))),
            Variant::FsdVec => {
                if !backend.supports_hidden() {
                    return Err(Error::Config("fsd-vec needs a backend with hidden states".into()));
                }
                None
            }
            _ => None,
        };
        let want_hidden = cfg.variant == Variant::FsdVec;
        let eos = cfg.eos;
        let mut step_index = 0;
        while step_index < cfg.max_new_tokens {
            let started = Instant::now();
            let request =
                NextRequest { top: self.request_top(), want_hidden: want_hidden && step_index > 0, want_prefix_hidden: want_hidden && step_index == 0 };
            let dist = backend.next(&seq, &request)?;
            if want_hidden {
                self.track_hidden(&mut antilm, &dist, &seq, step_index, backend.hidden_dim())?;
            }
            let chosen = match (cfg.variant, &antilm) {
                (Variant::Fsd | Variant::FsdVec, Some(lm)) => decode_step(&dist, lm, cfg)?,
                (Variant::TopKSample, _) => plain(top_k_sample_step(&dist, cfg.k, &mut rng)?),
                (Variant::TopPSample, _) => plain(top_p_sample_step(&dist, cfg.p, &mut rng)?),
                _ => plain(greedy_step(&dist)?),
            };
            seq.push(chosen.token);
            if let Some(AntiLm::Discrete(lm)) = &mut antilm {
                lm.update(chosen.token);
            }
            result.continuation.push(chosen.token);
            result.steps.push(chosen.record());
            result.wall_time_per_step.push(started.elapsed());
            step_index += 1;
            if eos == Some(chosen.token) {
                break;
            }
        }
        Ok(())
    }

    /// Keeps the vectorized anti-LM in step with the sequence: built from
    /// the prompt states on the first step, then fed the state aligned with
    /// the previously emitted token.
    fn track_hidden(
        &self,
        antilm: &mut Option<AntiLm<T>>,
        dist: &NextTokenDist<T>,
        seq: &[Token],
        step_index: usize,
        advertised_dim: Option<usize>,
    ) -> Result<()> {
        if step_index == 0 {
            let states = dist.prefix_hidden.as_deref().ok_or_else(|| Error::Protocol("backend sent no prompt hidden states".into()))?;
            let dim = states.first().map(Vec::len).or(advertised_dim).unwrap_or(0);
            let lm = VectorAntiLm::build(states, seq, self.cfg.order_n, dim).map_err(|e| Error::Protocol(e.to_string()))?;
            *antilm = Some(AntiLm::Vector(lm));
            return Ok(());
        }
        let state = dist.hidden_state.clone().ok_or_else(|| Error::Protocol("backend sent no hidden state".into()))?;
        if let (Some(AntiLm::Vector(lm)), Some(&last)) = (antilm.as_mut(), seq.last()) {
            if lm.dim() == 0 && seq.len() == 1 {
                // empty prompt: the dimension is only known now
                *lm = VectorAntiLm::new(self.cfg.order_n, state.len());
            }
            lm.update(last, state).map_err(|e| Error::Protocol(e.to_string()))?;
        }
        Ok(())
    }
}

fn plain<T: Real>((token, lm_prob): (Token, T)) -> CandidateScore<T> {
    CandidateScore::new(token, lm_prob, T::zero(), T::zero())
}

/// Validates `cfg` and runs one generation.
pub fn generate<T, B>(backend: &mut B, prompt: &[Token], cfg: &DecoderConfig<T>) -> Result<GenerationResult<T>>
where
    T: Real,
    B: LogitProvider<T> + ?Sized,
{
    Ok(Decoder::new(cfg.clone())?.generate(backend, prompt))
}
