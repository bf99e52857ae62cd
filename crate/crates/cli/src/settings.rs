//! Turns flags, config files and FSD_SEED into a decoder configuration.

use std::path::Path;

use anyhow::{Context, Result};
use fsd_core::token_sets::{self, ResolvedSet};
use fsd_core::{DecoderConfig, Variant};
use serde::Serialize;

use crate::args::{DecodeArgs, OnOff};
use crate::backend::Session;
use crate::exit::Failure;

pub const SEED_ENV: &str = "FSD_SEED";

/// Fills unset flags from the config file and applies FSD_SEED.
pub fn merge(flags: &DecodeArgs, config: Option<&Path>) -> Result<DecodeArgs> {
    let file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<DecodeArgs>(&text).map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))?
        }
        None => DecodeArgs::default(),
    };
    let mut merged = DecodeArgs {
        variant: flags.variant.clone().or(file.variant),
        alpha: flags.alpha.or(file.alpha),
        k: flags.k.or(file.k),
        n: flags.n.or(file.n),
        beta: flags.beta.or(file.beta),
        phi: flags.phi.or(file.phi),
        p: flags.p.or(file.p),
        smoothing: flags.smoothing.or(file.smoothing),
        stopwords: flags.stopwords.clone().or(file.stopwords),
        punct: flags.punct.clone().or(file.punct),
        len: flags.len.or(file.len),
        seed: flags.seed.or(file.seed),
    };
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let seed = raw.trim().parse().map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))?;
        merged.seed = Some(seed);
    }
    Ok(merged)
}

/// Token strings from a set file that did not resolve to a single token.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Unresolved {
    pub stopwords: Vec<String>,
    pub punctuation: Vec<String>,
}

fn token_set(spec: &str, builtin: &str, session: &mut Session) -> Result<ResolvedSet> {
    match spec {
        "none" => Ok(ResolvedSet::default()),
        "builtin" => Ok(token_sets::resolve(builtin, session)?),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read token set {path}: {e}")))?;
            Ok(token_sets::resolve(&text, session).with_context(|| format!("resolving {path}"))?)
        }
    }
}

/// The decoder configuration for `variant` (or the one named in the
/// settings), with token sets resolved through `session`.
pub fn decoder_config(settings: &DecodeArgs, variant: Option<&str>, session: &mut Session) -> Result<(DecoderConfig, Unresolved)> {
    let name = variant.or(settings.variant.as_deref()).unwrap_or("fsd");
    let variant: Variant = name.parse()?;
    let mut cfg = DecoderConfig::for_variant(variant);
    if let Some(v) = settings.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = settings.k {
        cfg.k = v;
    }
    if let Some(v) = settings.n {
        cfg.order_n = v;
    }
    if let Some(v) = settings.beta {
        cfg.beta = v;
    }
    if let Some(v) = settings.phi {
        cfg.phi = v;
    }
    if let Some(v) = settings.p {
        cfg.p = v;
    }
    if let Some(v) = settings.smoothing {
        cfg.smoothing = v == OnOff::On;
    }
    if let Some(v) = settings.len {
        cfg.max_new_tokens = v;
    }
    cfg.seed = settings.seed.unwrap_or(0);
    cfg.eos = session.eos();
    let mut unresolved = Unresolved::default();
    if variant.is_fsd() {
        let stop = token_set(settings.stopwords.as_deref().unwrap_or("builtin"), token_sets::DEFAULT_STOPWORDS, session)?;
        let punct = token_set(settings.punct.as_deref().unwrap_or("builtin"), token_sets::DEFAULT_PUNCTUATION, session)?;
        cfg.stopwords = stop.tokens;
        cfg.punctuation = punct.tokens;
        unresolved = Unresolved { stopwords: stop.unresolved, punctuation: punct.unresolved };
    }
    cfg.validate()?;
    Ok((cfg, unresolved))
}
