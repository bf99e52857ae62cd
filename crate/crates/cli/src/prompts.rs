//! Prompt loading: a JSONL file or evenly spaced corpus windows.

use std::path::Path;

use anyhow::Result;
use fsd_core::{testbed, Token};
use serde::Deserialize;

use crate::args::PromptArgs;
use crate::backend::{Backends, Session};
use crate::exit::Failure;

pub const DEFAULT_PROMPT_COUNT: usize = 100;

#[derive(Debug, Deserialize)]
struct PromptLine {
    text: Option<String>,
    prompt: Option<String>,
    ids: Option<Vec<u32>>,
}

pub fn load(args: &PromptArgs, backends: &Backends, session: &mut Session) -> Result<Vec<Vec<Token>>> {
    let mut prompts = match &args.prompts {
        Some(path) => from_file(path, session)?,
        None => {
            let corpus = backends.corpus().ok_or_else(|| Failure::Usage("--prompts is required with a bridge backend".into()))?;
            let tokens = session.encode(corpus)?;
            let len = args.prompt_len.unwrap_or(fsd_core::config::DEFAULT_PROMPT_LEN);
            let count = args.num_prompts.unwrap_or(DEFAULT_PROMPT_COUNT);
            let windows = testbed::prompts(&tokens, count, len);
            if windows.len() < count {
                return Err(Failure::Data(format!("corpus has {} tokens, too few for {len}-token prompts", tokens.len())).into());
            }
            windows
        }
    };
    if args.prompts.is_some() {
        if let Some(len) = args.prompt_len {
            prompts.iter_mut().for_each(|p| p.truncate(len));
        }
        if let Some(n) = args.num_prompts {
            prompts.truncate(n);
        }
    }
    Ok(prompts)
}

fn from_file(path: &Path, session: &mut Session) -> Result<Vec<Vec<Token>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read prompts {}: {e}", path.display())))?;
    let vocab = session.vocab_size();
    let mut prompts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Failure::Data(format!("{}:{}: {msg}", path.display(), i + 1));
        let parsed: PromptLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let ids = match (parsed.ids, parsed.text.or(parsed.prompt)) {
            (Some(ids), _) => {
                if let Some(&id) = ids.iter().find(|&&id| id as usize >= vocab) {
                    return Err(bad(format!("token id {id} outside the vocabulary of {vocab}")).into());
                }
                ids.into_iter().map(Token).collect()
            }
            (None, Some(text)) => session.encode(&text)?,
            (None, None) => return Err(bad("expected a \"text\" or \"ids\" field".into()).into()),
        };
        prompts.push(ids);
    }
    Ok(prompts)
}
