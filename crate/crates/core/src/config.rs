//! Decoder configuration and its defaults.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::token::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "top-k")]
    TopKSample,
    #[serde(rename = "top-p")]
    TopPSample,
    #[serde(rename = "fsd")]
    Fsd,
    #[serde(rename = "fsd-vec")]
    FsdVec,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Greedy, Variant::TopKSample, Variant::TopPSample, Variant::Fsd, Variant::FsdVec];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Greedy => "greedy",
            Variant::TopKSample => "top-k",
            Variant::TopPSample => "top-p",
            Variant::Fsd => "fsd",
            Variant::FsdVec => "fsd-vec",
        }
    }

    /// Whether the variant consults an anti-LM.
    pub fn is_fsd(self) -> bool {
        matches!(self, Variant::Fsd | Variant::FsdVec)
    }

    pub fn is_sampling(self) -> bool {
        matches!(self, Variant::TopKSample | Variant::TopPSample)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "greedy" => Ok(Variant::Greedy),
            "top-k" | "top-k-sample" | "topk" => Ok(Variant::TopKSample),
            "top-p" | "top-p-sample" | "topp" | "nucleus" => Ok(Variant::TopPSample),
            "fsd" => Ok(Variant::Fsd),
            "fsd-vec" | "fsdvec" => Ok(Variant::FsdVec),
            other => Err(Error::Config(format!("unknown decoding variant `{other}`"))),
        }
    }
}

/// Everything a decoder needs besides the backend and the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig<T> {
    pub variant: Variant,
    /// Penalty strength.
    pub alpha: T,
    /// Candidate-set size (also the sampling cut for top-k).
    pub k: usize,
    /// Highest n-gram order of the discrete anti-LM, or the window length
    /// of the vectorized one.
    pub order_n: usize,
    /// Interpolation decay.
    pub beta: T,
    /// Multiplier on `alpha` for stopwords.
    pub phi: T,
    #[serde(default)]
    pub stopwords: BTreeSet<Token>,
    /// Never penalized. Wins over `stopwords`.
    #[serde(default)]
    pub punctuation: BTreeSet<Token>,
    pub smoothing: bool,
    /// Nucleus mass.
    pub p: T,
    pub max_new_tokens: usize,
    pub seed: u64,
    #[serde(default)]
    pub eos: Option<Token>,
}

pub const DEFAULT_MAX_NEW_TOKENS: usize = 256;
pub const DEFAULT_PROMPT_LEN: usize = 32;

impl<T: Real> DecoderConfig<T> {
    /// Published defaults for `variant`.
    pub fn for_variant(variant: Variant) -> Self {
        let r = |x: f64| T::from_real(x);
        let mut cfg = DecoderConfig {
            variant,
            alpha: r(3.0),
            k: 6,
            order_n: 3,
            beta: r(0.9),
            phi: r(1.0),
            stopwords: BTreeSet::new(),
            punctuation: BTreeSet::new(),
            smoothing: true,
            p: r(0.95),
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            seed: 0,
            eos: None,
        };
        match variant {
            Variant::FsdVec => {
                cfg.alpha = r(1.0);
                cfg.order_n = 2;
            }
            Variant::TopKSample => cfg.k = 50,
            Variant::Greedy | Variant::TopPSample | Variant::Fsd => {}
        }
        cfg
    }

    /// Rejects any field outside its admissible range.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.alpha < T::zero() || !self.alpha.is_finite() {
            return bad(format!("alpha must be a finite value >= 0, got {:?}", self.alpha));
        }
        if !(self.beta > T::zero() && self.beta < T::one()) {
            return bad(format!("beta must lie in (0, 1), got {:?}", self.beta));
        }
        if self.phi < T::zero() || !self.phi.is_finite() {
            return bad(format!("phi must be a finite value >= 0, got {:?}", self.phi));
        }
        if !(self.p > T::zero() && self.p <= T::one()) {
            return bad(format!("p must lie in (0, 1], got {:?}", self.p));
        }
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if self.order_n == 0 {
            return bad("order_n must be >= 1".into());
        }
        Ok(())
    }

    /// Penalty weight for `token`: zero for punctuation, `phi * alpha` for
    /// stopwords, `alpha` otherwise.
    pub fn effective_alpha(&self, token: Token) -> T {
        if self.punctuation.contains(&token) {
            T::zero()
        } else if self.stopwords.contains(&token) {
            self.phi * self.alpha
        } else {
            self.alpha
        }
    }
}

/// Defaults for a variant given by name.
pub fn default_config<T: Real>(variant: &str) -> Result<DecoderConfig<T>> {
    Ok(DecoderConfig::for_variant(variant.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_defaults() {
        let fsd = default_config::<f64>("fsd").unwrap();
        assert_eq!((fsd.alpha, fsd.order_n, fsd.k, fsd.beta, fsd.smoothing), (3.0, 3, 6, 0.9, true));
        assert_eq!(fsd.phi, 1.0);
        let vec = default_config::<f64>("fsd_vec").unwrap();
        assert_eq!((vec.alpha, vec.order_n, vec.k, vec.beta), (1.0, 2, 6, 0.9));
        let nucleus = default_config::<f64>("top_p_sample").unwrap();
        assert_eq!(nucleus.p, 0.95);
        assert!(matches!(default_config::<f64>("beam"), Err(Error::Config(_))));
    }

    #[test]
    fn every_default_validates() {
        for v in Variant::ALL {
            DecoderConfig::<f64>::for_variant(v).validate().unwrap();
            DecoderConfig::<f32>::for_variant(v).validate().unwrap();
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
    }

    #[test]
    fn validation_rejects_out_of_range_fields() {
        let base = DecoderConfig::<f64>::for_variant(Variant::Fsd);
        #[allow(clippy::type_complexity)]
        let cases: Vec<Box<dyn Fn(&mut DecoderConfig<f64>)>> = vec![
            Box::new(|c| c.alpha = -0.1),
            Box::new(|c| c.alpha = f64::NAN),
            Box::new(|c| c.beta = 0.0),
            Box::new(|c| c.beta = 1.0),
            Box::new(|c| c.phi = -1.0),
            Box::new(|c| c.p = 0.0),
            Box::new(|c| c.p = 1.01),
            Box::new(|c| c.k = 0),
            Box::new(|c| c.order_n = 0),
        ];
        for mutate in cases {
            let mut cfg = base.clone();
            mutate(&mut cfg);
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn effective_alpha_rules() {
        let mut cfg = DecoderConfig::<f64>::for_variant(Variant::Fsd);
        cfg.phi = 0.2;
        cfg.stopwords.extend([Token(1), Token(2)]);
        cfg.punctuation.extend([Token(2), Token(3)]);
        assert_eq!(cfg.effective_alpha(Token(3)), 0.0);
        assert!((cfg.effective_alpha(Token(1)) - 0.6).abs() < 1e-15);
        // punctuation wins over stopwords
        assert_eq!(cfg.effective_alpha(Token(2)), 0.0);
        assert_eq!(cfg.effective_alpha(Token(9)), 3.0);
    }

    #[test]
    fn config_serde_round_trip() {
        let mut cfg = DecoderConfig::<f64>::for_variant(Variant::FsdVec);
        cfg.stopwords.insert(Token(4));
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"fsd-vec\""));
        let back: DecoderConfig<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
