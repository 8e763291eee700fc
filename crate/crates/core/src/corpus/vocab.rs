use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;
/// Number of reserved symbols at the bottom of every vocabulary.
pub const RESERVED: usize = 4;

const RESERVED_SYMBOLS: [&str; RESERVED] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Dense symbol table. Indices `0..4` are pad, begin, end and unknown.
#[derive(Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl fmt::Debug for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vocabulary")
            .field("len", &self.tokens.len())
            .finish()
    }
}

impl Vocabulary {
    /// Builds a vocabulary from content symbols; reserved symbols are prepended.
    pub fn new<I, S>(content: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = RESERVED_SYMBOLS
            .iter()
            .map(|s| s.to_string())
            .chain(content.into_iter().map(Into::into))
            .collect();
        Self::from_full(tokens)
    }

    fn from_full(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("invalid vocabulary symbol {tok:?}")));
            }
            if index.insert(tok.clone(), i as TokenId).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary symbol {tok:?}")));
            }
        }
        for (i, sym) in RESERVED_SYMBOLS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*sym) {
                return Err(Error::Data(format!(
                    "reserved symbol {sym} must sit at index {i}"
                )));
            }
        }
        Ok(Self { tokens, index })
    }

    /// `prefix0 .. prefix{n-1}` content symbols.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Self::new((0..n).map(|i| format!("{prefix}{i}"))).expect("numbered symbols are distinct")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of non-reserved symbols.
    pub fn content_len(&self) -> usize {
        self.tokens.len() - RESERVED
    }

    pub fn lookup(&self, symbol: &str) -> Option<TokenId> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        (id as usize) < self.tokens.len()
    }

    pub fn is_content(&self, id: TokenId) -> bool {
        id as usize >= RESERVED && self.contains(id)
    }

    pub fn content_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (RESERVED as TokenId)..(self.tokens.len() as TokenId)
    }

    pub fn symbols(&self) -> &[String] {
        &self.tokens
    }

    /// Stable content hash, stored in checkpoints to catch vocabulary mixups.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn render(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .map(|&id| self.symbol(id).unwrap_or("<?>"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// One symbol per line; the line number is the index.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = text.lines().map(|l| l.trim_end().to_string()).collect();
        Self::from_full(tokens).map_err(|e| match e {
            Error::Data(msg) => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_symbols_occupy_lowest_indices() {
        let v = Vocabulary::numbered("s", 3);
        assert_eq!(v.len(), 7);
        assert_eq!(v.symbol(EOS), Some("</s>"));
        assert_eq!(v.lookup("s0"), Some(4));
        for id in 0..v.len() as TokenId {
            assert_eq!(v.lookup(v.symbol(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn duplicates_rejected() {
        assert!(Vocabulary::new(["a", "a"]).is_err());
        assert!(Vocabulary::new(["a b"]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        let v = Vocabulary::numbered("t", 5);
        v.save(&p).unwrap();
        let back = Vocabulary::load(&p).unwrap();
        assert_eq!(v, back);
        assert_eq!(v.hash(), back.hash());
    }
}
