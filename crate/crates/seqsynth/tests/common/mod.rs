//! Shared helpers for the integration suites: exhaustive word oracles and
//! random machine generators.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use seqsynth::alphabet::Alphabet;
use seqsynth::automaton::Nfa;
use seqsynth::transducer::{MultiSequentialTransducer, SequentialTransducer, Transducer};
use seqsynth::words::shortlex;

pub fn ab() -> Alphabet {
    Alphabet::from_str_symbols("ab").unwrap()
}

/// Exhaustively enumerates every word up to `max_len` and returns the
/// shortest (then lexicographically least) word accepted by `b` but not by
/// `a`. Unlike the library's inclusion check this walks the full word tree
/// with no deduplication, so it is a genuinely independent oracle.
pub fn inclusion_counterexample_by_enumeration(
    a: &Nfa,
    b: &Nfa,
    max_len: usize,
) -> Option<String> {
    struct Frame {
        word: String,
        in_a: BTreeSet<String>,
        in_b: BTreeSet<String>,
    }
    let mut layer = vec![Frame {
        word: String::new(),
        in_a: a.initials().clone(),
        in_b: b.initials().clone(),
    }];
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for frame in &layer {
            let b_accepts = frame.in_b.iter().any(|q| b.finals().contains(q));
            let a_accepts = frame.in_a.iter().any(|q| a.finals().contains(q));
            if b_accepts && !a_accepts {
                return Some(frame.word.clone());
            }
            for &sym in a.alphabet().symbols() {
                next.push(Frame {
                    word: format!("{}{sym}", frame.word),
                    in_a: a.step(&frame.in_a, sym),
                    in_b: b.step(&frame.in_b, sym),
                });
            }
        }
        layer = next;
    }
    None
}

/// The relation of a transducer restricted to inputs up to `max_len`,
/// computed by plain evaluation.
pub fn bounded_relation(t: &Transducer, max_len: usize) -> Vec<(String, BTreeSet<String>)> {
    shortlex(t.input_alphabet(), max_len)
        .map(|w| {
            let outs = t.evaluate(&w).unwrap();
            (w, outs)
        })
        .filter(|(_, outs)| !outs.is_empty())
        .collect()
}

/// True when the realiser picks, for every domain word up to `max_len`, one
/// output allowed by the specification, and is undefined exactly outside the
/// domain.
pub fn realises_up_to(r: &SequentialTransducer, t: &MultiSequentialTransducer, max_len: usize) -> bool {
    for w in shortlex(t.input_alphabet(), max_len) {
        let allowed = t.evaluate(&w).unwrap();
        match r.apply(&w).unwrap() {
            Some(out) => {
                if !allowed.contains(&out) {
                    return false;
                }
            }
            None => {
                if !allowed.is_empty() {
                    return false;
                }
            }
        }
    }
    true
}

/// Random automata over {a, b} with up to four states.
pub fn arb_nfa() -> impl Strategy<Value = Nfa> {
    (1usize..=4).prop_flat_map(|n| {
        let slots = n * 2 * n;
        (
            proptest::collection::vec(any::<bool>(), slots),
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(edges, initials, finals)| {
                let name = |i: usize| format!("q{i}");
                let mut transitions = Vec::new();
                let mut idx = 0;
                for from in 0..n {
                    for sym in ['a', 'b'] {
                        for to in 0..n {
                            if edges[idx] {
                                transitions.push((name(from), sym, name(to)));
                            }
                            idx += 1;
                        }
                    }
                }
                let initial_states: Vec<String> = (0..n)
                    .filter(|&i| initials[i])
                    .map(name)
                    .collect();
                let final_states: Vec<String> =
                    (0..n).filter(|&i| finals[i]).map(name).collect();
                Nfa::new(
                    ab(),
                    (0..n).map(name),
                    if initial_states.is_empty() {
                        vec![name(0)]
                    } else {
                        initial_states
                    },
                    final_states,
                    transitions,
                )
                .unwrap()
            })
    })
}

/// Random sequential transducers over {a, b} with up to three states. Every
/// state is made reachable-friendly by keeping the machine total on symbol a.
pub fn arb_sequential() -> impl Strategy<Value = SequentialTransducer> {
    (1usize..=3).prop_flat_map(|n| {
        let slots = n * 2;
        (
            proptest::collection::vec(0usize..=3, slots), // target or missing
            proptest::collection::vec(0usize..=2, slots), // output length
            proptest::collection::vec(any::<bool>(), n),  // finals
        )
            .prop_map(move |(targets, out_lens, finals)| {
                let name = |i: usize| format!("s{i}");
                let mut transitions = Vec::new();
                let mut outputs = std::collections::BTreeMap::new();
                let mut idx = 0;
                for from in 0..n {
                    for sym in ['a', 'b'] {
                        if targets[idx] < n {
                            let tr = (name(from), sym, name(targets[idx]));
                            let out: String = std::iter::repeat_n(sym, out_lens[idx]).collect();
                            outputs.insert(tr.clone(), out);
                            transitions.push(tr);
                        }
                        idx += 1;
                    }
                }
                let final_states: Vec<(String, String)> = (0..n)
                    .filter(|&i| finals[i])
                    .map(|i| (name(i), String::new()))
                    .collect();
                let input = Nfa::new(
                    ab(),
                    (0..n).map(name),
                    [name(0)],
                    final_states.iter().map(|(q, _)| q.clone()),
                    transitions,
                )
                .unwrap();
                let terminals = final_states.into_iter().collect();
                SequentialTransducer::try_from(
                    Transducer::new(input, ab(), outputs, terminals).unwrap(),
                )
                .unwrap()
            })
    })
}
