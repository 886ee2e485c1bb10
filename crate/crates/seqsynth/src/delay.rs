//! Delay arithmetic: longest common prefixes, delay tuples, candidate
//! successors of a delay map and the flush step that turns a kept set of
//! candidates into emitted output plus remaining delays.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::automaton::{AutomatonError, StateId, Transition, Word};
use crate::transducer::Transducer;
use crate::words::char_len;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DelayError {
    #[error("the word list must not be empty")]
    EmptyList,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Longest common prefix of a non-empty list of words.
pub fn lcp<I, S>(words: I) -> Result<Word, DelayError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut iter = words.into_iter();
    let first = iter.next().ok_or(DelayError::EmptyList)?;
    let mut prefix: Vec<char> = first.as_ref().chars().collect();
    for w in iter {
        let mut keep = 0;
        for (a, b) in prefix.iter().zip(w.as_ref().chars()) {
            if *a != b {
                break;
            }
            keep += 1;
        }
        prefix.truncate(keep);
        if prefix.is_empty() {
            break;
        }
    }
    Ok(prefix.into_iter().collect())
}

/// Strips the longest common prefix from every word of the list.
pub fn delay<I, S>(words: I) -> Result<Vec<Word>, DelayError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let words: Vec<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
    let prefix = lcp(words.iter())?;
    Ok(words
        .into_iter()
        .map(|w| w[prefix.len()..].to_string())
        .collect())
}

/// Pairwise delay, convenient when comparing two runs.
pub fn delay_pair(u: &str, v: &str) -> (Word, Word) {
    let mut d = delay([u, v]).expect("two words");
    let second = d.pop().unwrap();
    let first = d.pop().unwrap();
    (first, second)
}

/// A total map from states to finite sets of pending output words. Only the
/// states with a non-empty set are stored; the rest implicitly map to the
/// empty set.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DelayMap {
    entries: BTreeMap<StateId, BTreeSet<Word>>,
}

impl DelayMap {
    pub fn new() -> Self {
        DelayMap::default()
    }

    /// The starting delay map of a transducer: every initial state owes the
    /// empty word.
    pub fn initial(t: &Transducer) -> Self {
        let mut map = DelayMap::new();
        for q in t.input_automaton().initials() {
            map.insert(q.clone(), Word::new());
        }
        map
    }

    pub fn insert(&mut self, state: StateId, pending: Word) {
        self.entries.entry(state).or_default().insert(pending);
    }

    /// States with at least one pending word.
    pub fn live(&self) -> impl Iterator<Item = &StateId> {
        self.entries.keys()
    }

    pub fn pending(&self, state: &StateId) -> Option<&BTreeSet<Word>> {
        self.entries.get(state)
    }

    pub fn entries(&self) -> &BTreeMap<StateId, BTreeSet<Word>> {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Length of the longest pending word.
    pub fn max_pending_len(&self) -> usize {
        self.entries
            .values()
            .flat_map(|set| set.iter().map(|w| char_len(w)))
            .max()
            .unwrap_or(0)
    }

    /// Canonical rendering used for vertex labels: `q:{w1,w2}; ...` with the
    /// empty word shown as ε.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, (q, set)) in self.entries.iter().enumerate() {
            if i > 0 {
                s.push_str("; ");
            }
            s.push_str(q);
            s.push_str(":{");
            for (j, w) in set.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                s.push_str(if w.is_empty() { "ε" } else { w });
            }
            s.push('}');
        }
        s
    }
}

/// A possible successor of a delay map on one input symbol, before any output
/// is flushed. `word` is the whole pending output of the continued run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Candidate {
    pub target: StateId,
    pub word: Word,
    pub source: CandidateSource,
}

/// Where a candidate came from: the continued run's previous state and
/// pending word, plus the transition taken.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateSource {
    pub state: StateId,
    pub pending: Word,
    pub transition: Transition,
}

/// All continuations of the live runs of `d` on `sym`. No flush is applied:
/// each candidate carries its full pending word.
pub fn candidates(
    t: &Transducer,
    d: &DelayMap,
    sym: char,
) -> Result<BTreeSet<Candidate>, DelayError> {
    if !t.input_alphabet().contains(sym) {
        return Err(AutomatonError::UnknownSymbol(sym).into());
    }
    let mut set = BTreeSet::new();
    for (state, pendings) in d.entries() {
        for tr in t.input_automaton().transitions() {
            if &tr.0 != state || tr.1 != sym {
                continue;
            }
            for pending in pendings {
                let mut word = pending.clone();
                word.push_str(t.output(tr));
                set.insert(Candidate {
                    target: tr.2.clone(),
                    word,
                    source: CandidateSource {
                        state: state.clone(),
                        pending: pending.clone(),
                        transition: tr.clone(),
                    },
                });
            }
        }
    }
    Ok(set)
}

/// Emits the longest common prefix of the kept candidates and returns it
/// together with the delay map of what remains pending.
pub fn flush(kept: &BTreeSet<Candidate>) -> (Word, DelayMap) {
    if kept.is_empty() {
        return (Word::new(), DelayMap::new());
    }
    let safe = lcp(kept.iter().map(|c| c.word.as_str())).expect("kept is non-empty");
    let mut map = DelayMap::new();
    for c in kept {
        map.insert(c.target.clone(), c.word[safe.len()..].to_string());
    }
    (safe, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::rewrite_union;

    #[test]
    fn lcp_examples() {
        assert_eq!(lcp(["aba", "abb"]).unwrap(), "ab");
        assert_eq!(lcp(["x"]).unwrap(), "x");
        assert_eq!(lcp(["ab", ""]).unwrap(), "");
        assert_eq!(lcp(Vec::<&str>::new()), Err(DelayError::EmptyList));
    }

    #[test]
    fn delay_examples() {
        assert_eq!(delay(["aba", "abb"]).unwrap(), vec!["a", "b"]);
        assert_eq!(delay(["ab", "abc"]).unwrap(), vec!["", "c"]);
        assert_eq!(delay(["a", "b"]).unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn candidates_examples() {
        let t = rewrite_union().union();
        let d0 = DelayMap::initial(&t);
        assert_eq!(d0.render(), "1:{ε}; 4:{ε}");

        let cs = candidates(&t, &d0, 'a').unwrap();
        let summary: Vec<(StateId, Word)> =
            cs.iter().map(|c| (c.target.clone(), c.word.clone())).collect();
        assert_eq!(
            summary,
            vec![
                ("2".to_string(), "a".to_string()),
                ("4".to_string(), "b".to_string())
            ]
        );

        let mut d1 = DelayMap::new();
        d1.insert("2".to_string(), "a".to_string());
        d1.insert("4".to_string(), "b".to_string());
        let cs = candidates(&t, &d1, 'b').unwrap();
        let summary: Vec<(StateId, Word)> =
            cs.iter().map(|c| (c.target.clone(), c.word.clone())).collect();
        assert_eq!(
            summary,
            vec![
                ("2".to_string(), "aa".to_string()),
                ("5".to_string(), "bb".to_string())
            ]
        );

        assert!(candidates(&t, &DelayMap::new(), 'a').unwrap().is_empty());
        assert!(candidates(&t, &d0, 'z').is_err());
    }

    #[test]
    fn flush_examples() {
        let t = rewrite_union().union();
        let d0 = DelayMap::initial(&t);
        let cs = candidates(&t, &d0, 'a').unwrap();
        let (out, next) = flush(&cs);
        assert_eq!(out, "");
        assert_eq!(next.render(), "2:{a}; 4:{b}");

        let only_b: BTreeSet<Candidate> = candidates(&t, &next, 'b')
            .unwrap()
            .into_iter()
            .filter(|c| c.target == "5")
            .collect();
        let (out, kept) = flush(&only_b);
        assert_eq!(out, "bb");
        assert_eq!(kept.render(), "5:{ε}");

        let (out, empty) = flush(&BTreeSet::new());
        assert_eq!(out, "");
        assert!(empty.is_empty());
    }

    #[test]
    fn flush_round_trip() {
        let t = rewrite_union().union();
        let mut d = DelayMap::new();
        d.insert("2".to_string(), "a".to_string());
        d.insert("4".to_string(), "b".to_string());
        let cs = candidates(&t, &d, 'b').unwrap();
        let (safe, next) = flush(&cs);
        let mut rebuilt: BTreeSet<Word> = BTreeSet::new();
        for (q, set) in next.entries() {
            for w in set {
                rebuilt.insert(format!("{safe}{w}"));
                assert!(next.pending(q).unwrap().contains(w));
            }
        }
        let original: BTreeSet<Word> = cs.iter().map(|c| c.word.clone()).collect();
        assert_eq!(rebuilt, original);
    }
}
