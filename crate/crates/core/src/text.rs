//! Word-level tokenization and token-sequence containers.
//!
//! Tokens are whitespace-separated words with leading and trailing
//! punctuation split off into their own tokens. Case is preserved. Two
//! sentinel ids are always present: `unk` for out-of-vocabulary words and
//! `bos`, which left-pads contexts that are shorter than a model or hash
//! window.

use std::collections::HashMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TokenId = u32;

pub const UNK_SURFACE: &str = "<unk>";
pub const BOS_SURFACE: &str = "<s>";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("token id {id} is outside the vocabulary (size {size})")]
    InvalidTokenId { id: TokenId, size: usize },
    #[error("malformed vocabulary: {0}")]
    Malformed(String),
}

/// Dense bidirectional map between surface forms and ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    surface_forms: Vec<String>,
    id_of: HashMap<String, TokenId>,
    unk_id: TokenId,
    bos_id: TokenId,
}

impl Vocabulary {
    /// Builds a vocabulary from raw text. Ids follow first-occurrence order,
    /// followed by the `unk` and `bos` sentinels.
    pub fn build(corpus_text: &str) -> Result<Self, TextError> {
        let mut surface_forms: Vec<String> = Vec::new();
        let mut id_of: HashMap<String, TokenId> = HashMap::new();
        for word in split_words(corpus_text) {
            if word == UNK_SURFACE || word == BOS_SURFACE {
                continue;
            }
            if !id_of.contains_key(word) {
                id_of.insert(word.to_string(), surface_forms.len() as TokenId);
                surface_forms.push(word.to_string());
            }
        }
        if surface_forms.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        Self::with_sentinels(surface_forms)
    }

    /// Reconstructs a vocabulary from an ordered list of non-sentinel surface
    /// forms (the persisted representation).
    pub fn from_surface_forms(forms: Vec<String>) -> Result<Self, TextError> {
        if forms.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        Self::with_sentinels(forms)
    }

    fn with_sentinels(mut surface_forms: Vec<String>) -> Result<Self, TextError> {
        let mut id_of = HashMap::with_capacity(surface_forms.len() + 2);
        for (i, form) in surface_forms.iter().enumerate() {
            if form == UNK_SURFACE || form == BOS_SURFACE {
                return Err(TextError::Malformed(format!("reserved surface form {form:?}")));
            }
            if id_of.insert(form.clone(), i as TokenId).is_some() {
                return Err(TextError::Malformed(format!("duplicate surface form {form:?}")));
            }
        }
        let unk_id = surface_forms.len() as TokenId;
        surface_forms.push(UNK_SURFACE.to_string());
        id_of.insert(UNK_SURFACE.to_string(), unk_id);
        let bos_id = surface_forms.len() as TokenId;
        surface_forms.push(BOS_SURFACE.to_string());
        id_of.insert(BOS_SURFACE.to_string(), bos_id);
        Ok(Self { surface_forms, id_of, unk_id, bos_id })
    }

    pub fn len(&self) -> usize {
        self.surface_forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surface_forms.is_empty()
    }

    pub fn unk_id(&self) -> TokenId {
        self.unk_id
    }

    pub fn bos_id(&self) -> TokenId {
        self.bos_id
    }

    pub fn id(&self, surface: &str) -> Option<TokenId> {
        self.id_of.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surface_forms.get(id as usize).map(String::as_str)
    }

    /// Surface forms excluding the two trailing sentinels.
    pub fn word_forms(&self) -> &[String] {
        &self.surface_forms[..self.surface_forms.len() - 2]
    }

    pub fn tokenize(&self, text: &str) -> TokenSeq {
        TokenSeq(
            split_words(text)
                .map(|w| self.id(w).unwrap_or(self.unk_id))
                .collect(),
        )
    }

    pub fn detokenize(&self, seq: &[TokenId]) -> Result<String, TextError> {
        let mut out = String::new();
        for (i, &id) in seq.iter().enumerate() {
            let surface = self.surface(id).ok_or(TextError::InvalidTokenId { id, size: self.len() })?;
            if i > 0 {
                out.push(' ');
            }
            out.push_str(surface);
        }
        Ok(out)
    }

    pub fn validate(&self, seq: &[TokenId]) -> Result<(), TextError> {
        match seq.iter().find(|&&id| id as usize >= self.len()) {
            Some(&id) => Err(TextError::InvalidTokenId { id, size: self.len() }),
            None => Ok(()),
        }
    }
}

/// Ordered token ids of a prompt or a generated text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<TokenId>);

impl TokenSeq {
    pub fn new(ids: Vec<TokenId>) -> Self {
        Self(ids)
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }
}

impl Deref for TokenSeq {
    type Target = [TokenId];

    fn deref(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for TokenSeq {
    fn from(ids: Vec<TokenId>) -> Self {
        Self(ids)
    }
}

fn is_split_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’' | '…' | '—' | '–')
}

/// Splits text into word tokens: whitespace first, then each leading and
/// trailing punctuation character becomes its own token. Sentinel surface
/// forms are kept whole.
pub fn split_words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace().flat_map(split_chunk)
}

fn split_chunk(chunk: &str) -> Vec<&str> {
    if chunk == UNK_SURFACE || chunk == BOS_SURFACE {
        return vec![chunk];
    }
    let mut out = Vec::new();
    let mut start = 0;
    let mut end = chunk.len();
    let mut leading = Vec::new();
    while let Some(c) = chunk[start..end].chars().next() {
        if !is_split_punct(c) {
            break;
        }
        leading.push(&chunk[start..start + c.len_utf8()]);
        start += c.len_utf8();
    }
    let mut trailing = Vec::new();
    while let Some(c) = chunk[start..end].chars().next_back() {
        if !is_split_punct(c) {
            break;
        }
        trailing.push(&chunk[end - c.len_utf8()..end]);
        end -= c.len_utf8();
    }
    out.extend(leading);
    if start < end {
        out.push(&chunk[start..end]);
    }
    out.extend(trailing.into_iter().rev());
    out
}
