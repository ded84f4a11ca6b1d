//! Vocabulary and the whitespace/punctuation tokenizer.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum sequence length, `[CLS]` and `[SEP]` included.
pub const MAX_SEQ_LEN: usize = 350;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const UNK: &str = "[UNK]";

/// A bounded token-id sequence that always starts with `[CLS]` and ends with `[SEP]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq {
    ids: Vec<u32>,
    cls: u32,
    sep: u32,
}

impl TokenSeq {
    /// Wraps `content` in boundary markers, truncating it to fit [`MAX_SEQ_LEN`].
    pub fn from_content(content: &[u32], cls: u32, sep: u32) -> Self {
        let keep = content.len().min(MAX_SEQ_LEN - 2);
        let mut ids = Vec::with_capacity(keep + 2);
        ids.push(cls);
        ids.extend_from_slice(&content[..keep]);
        ids.push(sep);
        Self { ids, cls, sep }
    }

    /// Builds a sequence from raw ids without adding markers. Used for
    /// padding variants; pooling ignores `cls`/`sep` wherever they occur.
    pub fn from_raw(ids: Vec<u32>, cls: u32, sep: u32) -> Self {
        Self { ids, cls, sep }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn has_cls(&self) -> bool {
        self.ids.first() == Some(&self.cls)
    }

    pub fn has_sep(&self) -> bool {
        self.ids.last() == Some(&self.sep)
    }

    pub fn cls(&self) -> u32 {
        self.cls
    }

    pub fn sep(&self) -> u32 {
        self.sep
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.cls || id == self.sep
    }

    /// Ids that take part in pooling.
    pub fn content(&self) -> impl Iterator<Item = u32> + '_ {
        self.ids.iter().copied().filter(move |&id| !self.is_special(id))
    }
}

/// Token table: line number in the vocabulary file is the token id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    cls: u32,
    sep: u32,
    unk: u32,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        let find = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::Config(format!("vocabulary lacks {name}")))
        };
        let (cls, sep, unk) = (find(CLS)?, find(SEP)?, find(UNK)?);
        Ok(Self {
            tokens,
            ids,
            cls,
            sep,
            unk,
        })
    }

    /// Special tokens at ids 0..3 followed by `words`.
    pub fn with_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens = vec![CLS.to_string(), SEP.to_string(), UNK.to_string()];
        tokens.extend(words.into_iter().map(Into::into));
        Self::new(tokens)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(|l| l.trim_end_matches('\r').to_string()).collect();
        Self::new(tokens)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for t in &self.tokens {
            writeln!(f, "{t}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn cls(&self) -> u32 {
        self.cls
    }

    pub fn sep(&self) -> u32 {
        self.sep
    }

    pub fn unk(&self) -> u32 {
        self.unk
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.cls || id == self.sep || id == self.unk
    }

    /// Ids of every ordinary (non-special) token.
    pub fn word_ids(&self) -> Vec<u32> {
        (0..self.tokens.len() as u32).filter(|&i| !self.is_special(i)).collect()
    }

    pub fn tokenize(&self, text: &str) -> TokenSeq {
        tokenize(text, self)
    }

    /// Space-joined surface form of the content tokens.
    pub fn detokenize(&self, seq: &TokenSeq) -> String {
        seq.content()
            .map(|id| self.token(id).unwrap_or(UNK))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Lowercases, splits on whitespace and punctuation, maps unknown words to
/// `[UNK]`, and truncates so the marked sequence fits [`MAX_SEQ_LEN`].
pub fn tokenize(text: &str, vocab: &Vocabulary) -> TokenSeq {
    let lowered = text.to_lowercase();
    let content: Vec<u32> = lowered
        .split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '_'))
        .filter(|w| !w.is_empty())
        .take(MAX_SEQ_LEN - 2)
        .map(|w| vocab.id(w).unwrap_or(vocab.unk))
        .collect();
    TokenSeq::from_content(&content, vocab.cls, vocab.sep)
}
