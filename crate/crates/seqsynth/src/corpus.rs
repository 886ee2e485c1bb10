//! Deterministic generators for the specification families used by the test
//! corpus and the benchmarks, plus the small rewriting examples that exercise
//! most of the decision machinery.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::automaton::{Nfa, StateId, Transition, Word};
use crate::transducer::{MultiSequentialTransducer, SequentialTransducer, Transducer};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("the DFA alphabet must not contain '#', 'a' or 'b'")]
    AlphabetClash,
    #[error("the family needs at least one automaton")]
    EmptyFamily,
    #[error("{0}")]
    BadParameter(String),
}

fn build_part(
    input_alphabet: &Alphabet,
    output_alphabet: &Alphabet,
    states: Vec<StateId>,
    initial: StateId,
    finals: Vec<(StateId, Word)>,
    transitions: Vec<(StateId, char, Word, StateId)>,
) -> SequentialTransducer {
    let mut outputs: BTreeMap<Transition, Word> = BTreeMap::new();
    let mut trs: Vec<Transition> = Vec::new();
    for (from, sym, out, to) in transitions {
        let tr = (from, sym, to);
        outputs.insert(tr.clone(), out);
        trs.push(tr);
    }
    let input = Nfa::new(
        input_alphabet.clone(),
        states,
        [initial],
        finals.iter().map(|(q, _)| q.clone()),
        trs,
    )
    .expect("generated automaton is well-formed");
    let terminals = finals.into_iter().collect();
    Transducer::new(input, output_alphabet.clone(), outputs, terminals)
        .expect("generated transducer is well-formed")
        .try_into()
        .expect("generated part is sequential")
}

/// Two-part rewriting specification. Part `A` accepts the words containing at
/// least two `a`s and rewrites every letter to `a`; part `B` accepts the words
/// containing at least one `b` and rewrites every letter to `b`. Both parts
/// are synchronous and their domains overlap, which makes the union a small
/// but complete stress test for the realisability checks.
pub fn rewrite_union() -> MultiSequentialTransducer {
    let ab = Alphabet::from_str_symbols("ab").unwrap();
    let s = |x: &str| x.to_string();
    let d1 = build_part(
        &ab,
        &ab,
        vec![s("1"), s("2"), s("3")],
        s("1"),
        vec![(s("3"), s(""))],
        vec![
            (s("1"), 'a', s("a"), s("2")),
            (s("1"), 'b', s("a"), s("1")),
            (s("2"), 'a', s("a"), s("3")),
            (s("2"), 'b', s("a"), s("2")),
            (s("3"), 'a', s("a"), s("3")),
            (s("3"), 'b', s("a"), s("3")),
        ],
    );
    let d2 = build_part(
        &ab,
        &ab,
        vec![s("4"), s("5")],
        s("4"),
        vec![(s("5"), s(""))],
        vec![
            (s("4"), 'a', s("b"), s("4")),
            (s("4"), 'b', s("b"), s("5")),
            (s("5"), 'a', s("b"), s("5")),
            (s("5"), 'b', s("b"), s("5")),
        ],
    );
    MultiSequentialTransducer::new([("A".to_string(), d1), ("B".to_string(), d2)]).unwrap()
}

/// The rewriting union extended with a third letter `c` that every part reads
/// and copies. Copying forces a realiser to remember unboundedly many `c`s
/// while the a/b disagreement is unresolved, so this union is not realisable.
pub fn rewrite_union_copy() -> MultiSequentialTransducer {
    let abc = Alphabet::from_str_symbols("abc").unwrap();
    let s = |x: &str| x.to_string();
    let d1 = build_part(
        &abc,
        &abc,
        vec![s("1"), s("2"), s("3")],
        s("1"),
        vec![(s("3"), s(""))],
        vec![
            (s("1"), 'a', s("a"), s("2")),
            (s("1"), 'b', s("a"), s("1")),
            (s("1"), 'c', s("c"), s("1")),
            (s("2"), 'a', s("a"), s("3")),
            (s("2"), 'b', s("a"), s("2")),
            (s("2"), 'c', s("c"), s("2")),
            (s("3"), 'a', s("a"), s("3")),
            (s("3"), 'b', s("a"), s("3")),
            (s("3"), 'c', s("c"), s("3")),
        ],
    );
    let d2 = build_part(
        &abc,
        &abc,
        vec![s("4"), s("5")],
        s("4"),
        vec![(s("5"), s(""))],
        vec![
            (s("4"), 'a', s("b"), s("4")),
            (s("4"), 'b', s("b"), s("5")),
            (s("4"), 'c', s("c"), s("4")),
            (s("5"), 'a', s("b"), s("5")),
            (s("5"), 'b', s("b"), s("5")),
            (s("5"), 'c', s("c"), s("5")),
        ],
    );
    MultiSequentialTransducer::new([("A".to_string(), d1), ("B".to_string(), d2)]).unwrap()
}

/// Completes a deterministic automaton with a non-accepting sink so that
/// every state has a successor on every symbol.
fn complete_dfa(dfa: &Nfa, sink: &StateId) -> (Vec<StateId>, Vec<(StateId, char, StateId)>, bool) {
    let mut states: Vec<StateId> = dfa.states().iter().cloned().collect();
    let mut transitions: Vec<(StateId, char, StateId)> =
        dfa.transitions().iter().cloned().collect();
    let mut needs_sink = dfa.states().is_empty();
    for q in dfa.states() {
        for &sym in dfa.alphabet().symbols() {
            if !dfa.transitions().iter().any(|(p, s, _)| p == q && *s == sym) {
                transitions.push((q.clone(), sym, sink.clone()));
                needs_sink = true;
            }
        }
    }
    if needs_sink {
        states.push(sink.clone());
        for &sym in dfa.alphabet().symbols() {
            transitions.push((sink.clone(), sym, sink.clone()));
        }
    }
    (states, transitions, needs_sink)
}

/// Intersection-emptiness family. For each automaton the union carries a
/// delayed-swap relation on the accepted words and an identity relation on
/// the rejected ones; the union is realisable exactly when the automata have
/// no common word. With `m_one` the number of `#`s is fixed to one and every
/// part is letter-to-letter.
pub fn gen_hardness(
    dfas: &[Nfa],
    m_one: bool,
) -> Result<MultiSequentialTransducer, CorpusError> {
    if dfas.is_empty() {
        return Err(CorpusError::EmptyFamily);
    }
    let sigma = dfas[0].alphabet().clone();
    for dfa in dfas {
        if dfa.alphabet() != &sigma {
            return Err(CorpusError::BadParameter(
                "all automata must share one alphabet".to_string(),
            ));
        }
        if !dfa.is_deterministic() {
            return Err(CorpusError::BadParameter(
                "the family takes deterministic automata".to_string(),
            ));
        }
    }
    for reserved in ['#', 'a', 'b'] {
        if sigma.contains(reserved) {
            return Err(CorpusError::AlphabetClash);
        }
    }
    let full = Alphabet::new(
        sigma.symbols().iter().copied().chain(['#', 'a', 'b']),
    )
    .expect("alphabets are disjoint");

    let mut parts: Vec<(String, SequentialTransducer)> = Vec::new();
    for (idx, dfa) in dfas.iter().enumerate() {
        let tag = idx + 1;
        // Swap parts: on accepted words, the final a/b is moved before the #s.
        for sigma_sym in ['a', 'b'] {
            let prefix = format!("s{tag}{sigma_sym}");
            let st = |q: &StateId| format!("{prefix}:{q}");
            let hash = format!("{prefix}:hash");
            let done = format!("{prefix}:done");
            let mut states: Vec<StateId> = dfa.states().iter().map(st).collect();
            states.push(hash.clone());
            states.push(done.clone());
            let mut transitions: Vec<(StateId, char, Word, StateId)> = dfa
                .transitions()
                .iter()
                .map(|(p, sym, q)| (st(p), *sym, sym.to_string(), st(q)))
                .collect();
            for q in dfa.finals() {
                if m_one {
                    transitions.push((st(q), '#', sigma_sym.to_string(), hash.clone()));
                } else {
                    transitions.push((st(q), '#', format!("{sigma_sym}#"), hash.clone()));
                    transitions.push((st(q), sigma_sym, sigma_sym.to_string(), done.clone()));
                }
            }
            if m_one {
                transitions.push((hash.clone(), sigma_sym, "#".to_string(), done.clone()));
            } else {
                transitions.push((hash.clone(), '#', "#".to_string(), hash.clone()));
                transitions.push((hash.clone(), sigma_sym, String::new(), done.clone()));
            }
            let initial = match dfa.initials().iter().next() {
                Some(q) => st(q),
                None => {
                    // Empty automaton: the swap part accepts nothing.
                    states.push(format!("{prefix}:void"));
                    format!("{prefix}:void")
                }
            };
            parts.push((
                format!("S{tag}{sigma_sym}"),
                build_part(
                    &full,
                    &full,
                    states,
                    initial,
                    vec![(done, String::new())],
                    transitions,
                ),
            ));
        }
        // Identity part on the rejected words.
        let prefix = format!("n{tag}");
        let st = |q: &StateId| format!("{prefix}:{q}");
        let sink: StateId = format!("{prefix}:sink");
        let (dfa_states, dfa_transitions, _) = complete_dfa(dfa, &sink);
        let hash = format!("{prefix}:hash");
        let done = format!("{prefix}:done");
        let mut states: Vec<StateId> = dfa_states.iter().map(st).collect();
        states.push(hash.clone());
        states.push(done.clone());
        let mut transitions: Vec<(StateId, char, Word, StateId)> = dfa_transitions
            .iter()
            .map(|(p, sym, q)| (st(p), *sym, sym.to_string(), st(q)))
            .collect();
        for q in &dfa_states {
            if dfa.finals().contains(q) {
                continue;
            }
            transitions.push((st(q), '#', "#".to_string(), hash.clone()));
            if !m_one {
                for sigma_sym in ['a', 'b'] {
                    transitions.push((st(q), sigma_sym, sigma_sym.to_string(), done.clone()));
                }
            }
        }
        if !m_one {
            transitions.push((hash.clone(), '#', "#".to_string(), hash.clone()));
        }
        for sigma_sym in ['a', 'b'] {
            transitions.push((hash.clone(), sigma_sym, sigma_sym.to_string(), done.clone()));
        }
        let initial = match dfa.initials().iter().next() {
            Some(q) => st(q),
            None => st(&sink),
        };
        parts.push((
            format!("N{tag}"),
            build_part(
                &full,
                &full,
                states,
                initial,
                vec![(done, String::new())],
                transitions,
            ),
        ));
    }
    Ok(MultiSequentialTransducer::new(parts).expect("generated parts are disjoint"))
}

/// Symbol used for level `i` (1-based) of the ranked alphabet.
pub fn level_symbol(i: usize) -> char {
    char::from_digit(i as u32, 36).expect("level out of range")
}

/// Level of a ranked-alphabet symbol.
pub fn symbol_level(c: char) -> Option<usize> {
    c.to_digit(36).map(|d| d as usize).filter(|&d| d >= 1)
}

/// The longest words without bad pairs: `chi(1) = "1"` and
/// `chi(n) = chi(n-1) · n · chi(n-1)`, of length `2^n - 1`.
pub fn chi(n: usize) -> String {
    assert!(n >= 1, "chi is defined for n >= 1");
    let mut word = level_symbol(1).to_string();
    for level in 2..=n {
        let mut next = word.clone();
        next.push(level_symbol(level));
        next.push_str(&word);
        word = next;
    }
    word
}

/// A bad `j`-pair is a pair of occurrences of level `j` with only levels
/// `<= j` strictly in between. Words of length `>= 2^n` over `n` levels
/// always contain one.
pub fn has_bad_jpair(u: &str, j: usize) -> bool {
    let levels: Vec<usize> = u
        .chars()
        .map(|c| symbol_level(c).expect("symbol outside the level alphabet"))
        .collect();
    for k in 0..levels.len() {
        if levels[k] != j {
            continue;
        }
        for k2 in k + 1..levels.len() {
            if levels[k2] == j && levels[k + 1..k2].iter().all(|&l| l <= j) {
                return true;
            }
            if levels[k2] > j {
                break;
            }
        }
    }
    false
}

fn pair_symbol(level: usize, tag: char) -> char {
    let base = match tag {
        'a' => b'A',
        'b' => b'a',
        _ => unreachable!("tag is a or b"),
    };
    (base + (level as u8) - 1) as char
}

/// First component (level) of a paired symbol.
pub fn pair_level(c: char) -> Option<usize> {
    match c {
        'A'..='Z' => Some(c as usize - 'A' as usize + 1),
        'a'..='z' => Some(c as usize - 'a' as usize + 1),
        _ => None,
    }
}

/// Second component (`a` or `b`) of a paired symbol.
pub fn pair_tag(c: char) -> Option<char> {
    match c {
        'A'..='Z' => Some('a'),
        'a'..='z' => Some('b'),
        _ => None,
    }
}

/// Encodes a word over the paired alphabet from its two projections.
pub fn pair_word(levels: &str, tags: &str) -> String {
    levels
        .chars()
        .zip(tags.chars())
        .map(|(l, t)| pair_symbol(symbol_level(l).expect("level symbol"), t))
        .collect()
}

/// Move-last-letter-to-front family over the paired alphabet
/// `{1..n} x {a,b}`. The union pairs every word with its rotated second
/// projection, and additionally with the empty word whenever the first
/// projection contains a bad pair. It is realisable, but only with doubly
/// exponentially many states.
pub fn gen_badjpair(n: usize) -> Result<MultiSequentialTransducer, CorpusError> {
    if n == 0 {
        return Err(CorpusError::BadParameter("n must be at least 1".to_string()));
    }
    if n > 26 {
        return Err(CorpusError::BadParameter("n must be at most 26".to_string()));
    }
    let input = Alphabet::new(
        (1..=n).flat_map(|i| [pair_symbol(i, 'a'), pair_symbol(i, 'b')]),
    )
    .expect("paired alphabet is well-formed");
    let output = Alphabet::from_str_symbols("ab").unwrap();
    let mut parts: Vec<(String, SequentialTransducer)> = Vec::new();
    // Rotation parts: commit to the last tag, then echo tags one step late.
    for last in ['a', 'b'] {
        let st = |x: &str| format!("f{last}:{x}");
        let mut transitions: Vec<(StateId, char, Word, StateId)> = Vec::new();
        for &sym in input.symbols() {
            let tag = pair_tag(sym).unwrap();
            transitions.push((st("start"), sym, last.to_string(), st(&tag.to_string())));
            for prev in ['a', 'b'] {
                transitions.push((
                    st(&prev.to_string()),
                    sym,
                    prev.to_string(),
                    st(&tag.to_string()),
                ));
            }
        }
        parts.push((
            format!("F{last}"),
            build_part(
                &input,
                &output,
                vec![st("start"), st("a"), st("b")],
                st("start"),
                vec![(st(&last.to_string()), String::new())],
                transitions,
            ),
        ));
    }
    // Bad-pair detectors: empty output on any word whose levels contain a
    // bad j-pair.
    for j in 1..=n {
        let st = |x: &str| format!("b{j}:{x}");
        let mut transitions: Vec<(StateId, char, Word, StateId)> = Vec::new();
        for &sym in input.symbols() {
            let level = pair_level(sym).unwrap();
            let from0 = if level == j { st("seen") } else { st("idle") };
            transitions.push((st("idle"), sym, String::new(), from0));
            let from1 = if level == j {
                st("hit")
            } else if level < j {
                st("seen")
            } else {
                st("idle")
            };
            transitions.push((st("seen"), sym, String::new(), from1));
            transitions.push((st("hit"), sym, String::new(), st("hit")));
        }
        parts.push((
            format!("B{j}"),
            build_part(
                &input,
                &output,
                vec![st("idle"), st("seen"), st("hit")],
                st("idle"),
                vec![(st("hit"), String::new())],
                transitions,
            ),
        ));
    }
    Ok(MultiSequentialTransducer::new(parts).expect("generated parts are disjoint"))
}

/// Fixed-pattern scattered-subword relation: accepts exactly the words that
/// contain `pattern` as a subword and outputs `pattern` itself, emitting each
/// letter greedily the first time it can be matched.
pub fn gen_subword(
    pattern: &str,
    alphabet: &Alphabet,
) -> Result<SequentialTransducer, CorpusError> {
    if pattern.is_empty() {
        return Err(CorpusError::BadParameter("pattern must be non-empty".to_string()));
    }
    if alphabet.check_word(pattern).is_err() {
        return Err(CorpusError::BadParameter(
            "pattern must be over the given alphabet".to_string(),
        ));
    }
    let letters: Vec<char> = pattern.chars().collect();
    let st = |i: usize| format!("sub{pattern}:{i}");
    let k = letters.len();
    let states: Vec<StateId> = (0..=k).map(st).collect();
    let mut transitions: Vec<(StateId, char, Word, StateId)> = Vec::new();
    for (i, &expected) in letters.iter().enumerate() {
        for &sym in alphabet.symbols() {
            if sym == expected {
                transitions.push((st(i), sym, sym.to_string(), st(i + 1)));
            } else {
                transitions.push((st(i), sym, String::new(), st(i)));
            }
        }
    }
    for &sym in alphabet.symbols() {
        transitions.push((st(k), sym, String::new(), st(k)));
    }
    Ok(build_part(
        alphabet,
        alphabet,
        states,
        st(0),
        vec![(st(k), String::new())],
        transitions,
    ))
}
