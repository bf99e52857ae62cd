use std::fmt;

use serde::{Deserialize, Serialize};

/// A vocabulary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(pub u32);

impl Token {
    pub fn id(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for Token {
    fn from(id: u32) -> Self {
        Token(id)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A prompt or a growing prefix, in generation order.
pub type TokenSeq = Vec<Token>;

/// Wraps raw ids.
pub fn tokens(ids: &[u32]) -> TokenSeq {
    ids.iter().copied().map(Token).collect()
}
