//! Finite alphabets of single-character symbols.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet must not be empty")]
    Empty,
    #[error("duplicate symbol '{0}' in alphabet")]
    Duplicate(char),
}

/// An ordered, duplicate-free set of symbols. Symbols are kept sorted so that
/// every iteration over the alphabet (and hence every word enumeration) is
/// canonical.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(symbols: I) -> Result<Self, AlphabetError> {
        let mut symbols: Vec<char> = symbols.into_iter().collect();
        symbols.sort_unstable();
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        for pair in symbols.windows(2) {
            if pair[0] == pair[1] {
                return Err(AlphabetError::Duplicate(pair[0]));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Convenience constructor from a string of symbols.
    pub fn from_str_symbols(s: &str) -> Result<Self, AlphabetError> {
        Self::new(s.chars())
    }

    pub fn contains(&self, sym: char) -> bool {
        self.symbols.binary_search(&sym).is_ok()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Checks that every symbol of `w` belongs to the alphabet, returning the
    /// first offending symbol otherwise.
    pub fn check_word(&self, w: &str) -> Result<(), char> {
        match w.chars().find(|&c| !self.contains(c)) {
            None => Ok(()),
            Some(c) => Err(c),
        }
    }
}
