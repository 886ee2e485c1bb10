//! Small word utilities shared across the crate. Words are `String`s of
//! alphabet symbols; lengths and positions are counted in characters.

use crate::alphabet::Alphabet;

pub fn char_len(w: &str) -> usize {
    w.chars().count()
}

/// `u` is a prefix of `v`.
pub fn is_prefix(u: &str, v: &str) -> bool {
    let mut vc = v.chars();
    u.chars().all(|c| vc.next() == Some(c))
}

/// Removes the prefix `p` from `w`, if it is one.
pub fn strip_prefix<'a>(p: &str, w: &'a str) -> Option<&'a str> {
    w.strip_prefix(p)
}

/// Two words mismatch if they differ at some position defined in both.
pub fn mismatch(u: &str, v: &str) -> Option<usize> {
    u.chars()
        .zip(v.chars())
        .position(|(a, b)| a != b)
}

/// All words over `alphabet` of length at most `max_len`, in shortlex order.
pub fn shortlex(alphabet: &Alphabet, max_len: usize) -> ShortlexIter {
    ShortlexIter {
        symbols: alphabet.symbols().to_vec(),
        max_len,
        current: Some(Vec::new()),
    }
}

pub struct ShortlexIter {
    symbols: Vec<char>,
    max_len: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for ShortlexIter {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        let current = self.current.as_mut()?;
        let word: String = current.iter().map(|&i| self.symbols[i]).collect();
        // Advance: increment like a number in base |alphabet|, growing the
        // length when all positions overflow.
        let mut pos = current.len();
        loop {
            if pos == 0 {
                if current.len() >= self.max_len {
                    self.current = None;
                } else {
                    let len = current.len() + 1;
                    *current = vec![0; len];
                }
                break;
            }
            pos -= 1;
            if current[pos] + 1 < self.symbols.len() {
                current[pos] += 1;
                for slot in current.iter_mut().skip(pos + 1) {
                    *slot = 0;
                }
                break;
            }
        }
        Some(word)
    }
}
