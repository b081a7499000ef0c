//! Tokenization and normalization for Latin and Devanagari text.
//!
//! Text is split on Unicode punctuation (P*), separators (Z*) and control
//! characters. Every token is put in NFC form, Latin profiles lowercase it,
//! and stopwords are dropped. No stemming is applied, so inflected forms stay
//! distinct tokens.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScriptHint {
    Latin,
    Devanagari,
    #[default]
    Mixed,
}

impl ScriptHint {
    fn lowercases(self) -> bool {
        !matches!(self, ScriptHint::Devanagari)
    }
}

/// A named stopword list plus the script it targets.
///
/// Stopwords are normalized on construction, so membership tests can be run
/// directly against normalized tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangProfile {
    name: String,
    script: ScriptHint,
    stopwords: HashSet<String>,
}

impl LangProfile {
    pub fn new<I, S>(name: impl Into<String>, script: ScriptHint, stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = stopwords
            .into_iter()
            .filter(|w| !w.as_ref().is_empty())
            .map(|w| normalize_with(w.as_ref(), script))
            .collect();
        Self {
            name: name.into(),
            script,
            stopwords,
        }
    }

    /// Profile with no stopwords.
    pub fn empty(name: impl Into<String>, script: ScriptHint) -> Self {
        Self::new(name, script, std::iter::empty::<&str>())
    }

    /// Parses a stopword list: one token per line, `#` starts a comment line.
    pub fn from_stopword_text(name: impl Into<String>, script: ScriptHint, text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        Self::new(name, script, words)
    }

    pub fn load(path: &Path, script: ScriptHint) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
        let text = decode_utf8(&bytes).map_err(|e| e.in_file(path))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self::from_stopword_text(name, script, text))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn script(&self) -> ScriptHint {
        self.script
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    /// Stopwords in sorted order.
    pub fn sorted_stopwords(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.stopwords.iter().map(String::as_str).collect();
        words.sort_unstable();
        words
    }
}

/// Stopword-filtered tokens. A token's position is its index in `tokens`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    tokens: Vec<String>,
}

impl TokenStream {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        Self { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, position: usize) -> Option<&str> {
        self.tokens.get(position).map(String::as_str)
    }

    /// `(position, token)` pairs over the filtered stream.
    pub fn positions(&self) -> impl Iterator<Item = (usize, &str)> {
        self.tokens.iter().map(String::as_str).enumerate()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

fn is_separator(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | SpaceSeparator
            | LineSeparator
            | ParagraphSeparator
            | Control
    )
}

fn normalize_with(token: &str, script: ScriptHint) -> String {
    let composed: String = token.nfc().collect();
    if script.lowercases() {
        composed.to_lowercase().nfc().collect()
    } else {
        composed
    }
}

/// Canonical form of a single token: NFC, lowercased for Latin profiles.
pub fn normalize(token: &str, profile: &LangProfile) -> String {
    normalize_with(token, profile.script)
}

pub fn tokenize(raw: &str, profile: &LangProfile) -> TokenStream {
    let tokens = raw
        .split(is_separator)
        .filter(|piece| !piece.is_empty())
        .map(|piece| normalize(piece, profile))
        .filter(|token| !token.is_empty() && !profile.is_stopword(token))
        .collect();
    TokenStream { tokens }
}

/// Like [`tokenize`], but validates the encoding first.
pub fn tokenize_bytes(raw: &[u8], profile: &LangProfile) -> Result<TokenStream> {
    Ok(tokenize(decode_utf8(raw)?, profile))
}

pub(crate) fn decode_utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::Encoding {
        offset: e.valid_up_to(),
    })
}
