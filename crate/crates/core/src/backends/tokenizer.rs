//! Built-in tokenizer: whitespace splitting, or raw bytes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::token::Token;

pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenizerMode {
    Whitespace,
    Bytes,
}

/// Vocabulary built from a corpus. Id 0 is the unknown token; corpus types
/// follow in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Tokenizer {
    mode: TokenizerMode,
    pieces: Vec<String>,
    ids: HashMap<String, Token>,
}

impl Tokenizer {
    pub fn fit(corpus: &str, mode: TokenizerMode) -> Self {
        let mut tok = Tokenizer { mode, pieces: Vec::new(), ids: HashMap::new() };
        tok.intern(UNK);
        for piece in split(corpus, mode) {
            tok.intern(&piece);
        }
        tok
    }

    fn intern(&mut self, piece: &str) -> Token {
        if let Some(&t) = self.ids.get(piece) {
            return t;
        }
        let t = Token(self.pieces.len() as u32);
        self.pieces.push(piece.to_owned());
        self.ids.insert(piece.to_owned(), t);
        t
    }

    pub fn mode(&self) -> TokenizerMode {
        self.mode
    }

    pub fn vocab_size(&self) -> usize {
        self.pieces.len()
    }

    pub fn unk(&self) -> Token {
        Token(0)
    }

    pub fn encode(&self, text: &str) -> Vec<Token> {
        split(text, self.mode).map(|p| self.ids.get(&p).copied().unwrap_or(Token(0))).collect()
    }

    /// Looks up one piece without splitting.
    pub fn piece_id(&self, piece: &str) -> Option<Token> {
        self.ids.get(piece).copied()
    }

    pub fn piece(&self, token: Token) -> Option<&str> {
        self.pieces.get(token.index()).map(String::as_str)
    }

    pub fn decode(&self, ids: &[Token]) -> String {
        match self.mode {
            TokenizerMode::Whitespace => {
                let words: Vec<&str> = ids.iter().map(|&t| self.piece(t).unwrap_or(UNK)).collect();
                words.join(" ")
            }
            TokenizerMode::Bytes => {
                let bytes: Vec<u8> = ids.iter().filter_map(|&t| self.piece(t)).filter(|p| *p != UNK).flat_map(byte_of).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
        }
    }
}

fn split(text: &str, mode: TokenizerMode) -> Box<dyn Iterator<Item = String> + '_> {
    match mode {
        TokenizerMode::Whitespace => Box::new(text.split_whitespace().map(str::to_owned)),
        TokenizerMode::Bytes => Box::new(text.bytes().map(|b| format!("<0x{b:02X}>"))),
    }
}

fn byte_of(piece: &str) -> Option<u8> {
    piece.strip_prefix("<0x")?.strip_suffix('>').and_then(|h| u8::from_str_radix(h, 16).ok())
}
