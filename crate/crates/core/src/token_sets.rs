//! Stopword and punctuation sets, read from text files with one token
//! string per line and resolved through the active backend's tokenizer.

use std::collections::BTreeSet;
use std::path::Path;

use crate::backends::LogitProvider;
use crate::error::Result;
use crate::token::Token;

/// Default English stopword list.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Default punctuation set: `. , : " `` ` `` plus the single and double
/// newline.
pub const DEFAULT_PUNCTUATION: &str = include_str!("../data/punctuation.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedSet {
    pub tokens: BTreeSet<Token>,
    /// Lines that did not map to exactly one token.
    pub unresolved: Vec<String>,
}

/// Undoes the `\n`, `\t` and `\\` escapes allowed in set files.
pub fn unescape(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Resolves each non-empty line with `encode`; a line counts only if it
/// encodes to a single token.
pub fn resolve_with<F>(text: &str, mut encode: F) -> Result<ResolvedSet>
where
    F: FnMut(&str) -> Result<Vec<Token>>,
{
    let mut set = ResolvedSet::default();
    for raw in text.lines() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.is_empty() {
            continue;
        }
        let piece = unescape(raw);
        match encode(&piece)?.as_slice() {
            [single] => {
                set.tokens.insert(*single);
            }
            _ => set.unresolved.push(raw.to_owned()),
        }
    }
    Ok(set)
}

pub fn resolve<T, B: LogitProvider<T> + ?Sized>(text: &str, backend: &mut B) -> Result<ResolvedSet> {
    resolve_with(text, |piece| backend.encode(piece))
}

pub fn load<T, B: LogitProvider<T> + ?Sized>(path: &Path, backend: &mut B) -> Result<ResolvedSet> {
    let text = std::fs::read_to_string(path)?;
    resolve(&text, backend)
}
