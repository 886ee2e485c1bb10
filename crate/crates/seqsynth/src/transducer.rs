//! Finite word-to-word transducers: evaluation, disjoint union, residuals and
//! structural classification.
//!
//! A transducer is an input automaton together with an output word on every
//! transition and a terminal output word on every final state. The relation it
//! defines pairs each accepted input with the transition outputs concatenated
//! with the terminal output of the run's last state.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::automaton::{AutomatonError, Nfa, StateId, Transition, Word};
use crate::words::char_len;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransducerError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("transition ({0}, {1}, {2}) has no output word")]
    MissingOutput(StateId, char, StateId),
    #[error("final state '{0}' has no terminal output")]
    MissingTerminal(StateId),
    #[error("output word '{0}' uses symbols outside the output alphabet")]
    ForeignOutput(Word),
    #[error("input automaton is not deterministic with a single initial state")]
    NotSequential,
    #[error("part '{0}' shares state identifiers with an earlier part")]
    StateClash(String),
    #[error("a multi-sequential transducer needs at least one part")]
    NoParts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transducer {
    input: Nfa,
    output_alphabet: Alphabet,
    outputs: BTreeMap<Transition, Word>,
    terminals: BTreeMap<StateId, Word>,
}

impl Transducer {
    pub fn new(
        input: Nfa,
        output_alphabet: Alphabet,
        outputs: BTreeMap<Transition, Word>,
        terminals: BTreeMap<StateId, Word>,
    ) -> Result<Self, TransducerError> {
        for tr in input.transitions() {
            match outputs.get(tr) {
                None => {
                    return Err(TransducerError::MissingOutput(
                        tr.0.clone(),
                        tr.1,
                        tr.2.clone(),
                    ))
                }
                Some(w) => {
                    if output_alphabet.check_word(w).is_err() {
                        return Err(TransducerError::ForeignOutput(w.clone()));
                    }
                }
            }
        }
        for q in input.finals() {
            match terminals.get(q) {
                None => return Err(TransducerError::MissingTerminal(q.clone())),
                Some(w) => {
                    if output_alphabet.check_word(w).is_err() {
                        return Err(TransducerError::ForeignOutput(w.clone()));
                    }
                }
            }
        }
        // Drop entries for transitions or finals that do not exist.
        let outputs = outputs
            .into_iter()
            .filter(|(tr, _)| input.transitions().contains(tr))
            .collect();
        let terminals = terminals
            .into_iter()
            .filter(|(q, _)| input.finals().contains(q))
            .collect();
        Ok(Transducer { input, output_alphabet, outputs, terminals })
    }

    pub fn input_automaton(&self) -> &Nfa {
        &self.input
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        self.input.alphabet()
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output_alphabet
    }

    pub fn output(&self, tr: &Transition) -> &str {
        &self.outputs[tr]
    }

    pub fn outputs(&self) -> &BTreeMap<Transition, Word> {
        &self.outputs
    }

    pub fn terminal(&self, q: &StateId) -> &str {
        &self.terminals[q]
    }

    pub fn terminals(&self) -> &BTreeMap<StateId, Word> {
        &self.terminals
    }

    pub fn state_count(&self) -> usize {
        self.input.state_count()
    }

    /// Length of the longest transition output.
    pub fn max_output_len(&self) -> usize {
        self.outputs.values().map(|w| char_len(w)).max().unwrap_or(0)
    }

    /// The input automaton with outputs stripped.
    pub fn domain_automaton(&self) -> Nfa {
        self.input.clone()
    }

    /// All outputs associated with `u`; empty iff `u` is outside the domain.
    pub fn evaluate(&self, u: &str) -> Result<BTreeSet<Word>, TransducerError> {
        let mut runs: BTreeSet<(StateId, Word)> = self
            .input
            .initials()
            .iter()
            .map(|q| (q.clone(), Word::new()))
            .collect();
        for sym in u.chars() {
            if !self.input.alphabet().contains(sym) {
                return Err(AutomatonError::UnknownSymbol(sym).into());
            }
            let mut next = BTreeSet::new();
            for (q, out) in &runs {
                for tr in self.input.transitions() {
                    if &tr.0 == q && tr.1 == sym {
                        let mut produced = out.clone();
                        produced.push_str(&self.outputs[tr]);
                        next.insert((tr.2.clone(), produced));
                    }
                }
            }
            runs = next;
        }
        Ok(runs
            .into_iter()
            .filter(|(q, _)| self.input.finals().contains(q))
            .map(|(q, mut out)| {
                out.push_str(&self.terminals[&q]);
                out
            })
            .collect())
    }

    /// State-renamed union: the relation of the result is the union of the
    /// two relations. Colliding state names on the right are suffixed.
    pub fn disjoint_union(&self, other: &Transducer) -> Result<Transducer, TransducerError> {
        if self.input.alphabet() != other.input.alphabet()
            || self.output_alphabet != other.output_alphabet
        {
            return Err(AutomatonError::AlphabetMismatch.into());
        }
        let mut used: BTreeSet<StateId> = self.input.states().clone();
        let mut rename: BTreeMap<StateId, StateId> = BTreeMap::new();
        for q in other.input.states() {
            let mut candidate = q.clone();
            let mut k = 2usize;
            while used.contains(&candidate) {
                candidate = format!("{q}_{k}");
                k += 1;
            }
            used.insert(candidate.clone());
            rename.insert(q.clone(), candidate);
        }
        let map = |q: &StateId| rename[q].clone();
        let other_renamed = Nfa::new(
            other.input.alphabet().clone(),
            other.input.states().iter().map(&map),
            other.input.initials().iter().map(&map),
            other.input.finals().iter().map(&map),
            other
                .input
                .transitions()
                .iter()
                .map(|(p, s, q)| (map(p), *s, map(q))),
        )?;
        let input = self.input.merge_disjoint(&other_renamed)?;
        let mut outputs = self.outputs.clone();
        for (tr, w) in &other.outputs {
            outputs.insert((map(&tr.0), tr.1, map(&tr.2)), w.clone());
        }
        let mut terminals = self.terminals.clone();
        for (q, w) in &other.terminals {
            terminals.insert(map(q), w.clone());
        }
        Transducer::new(input, self.output_alphabet.clone(), outputs, terminals)
    }

    /// Restricts the transducer to the useful states of its input automaton.
    pub fn trim(&self) -> Transducer {
        let input = self.input.trim();
        let outputs = self
            .outputs
            .iter()
            .filter(|(tr, _)| input.transitions().contains(*tr))
            .map(|(tr, w)| (tr.clone(), w.clone()))
            .collect();
        let terminals = self
            .terminals
            .iter()
            .filter(|(q, _)| input.finals().contains(*q))
            .map(|(q, w)| (q.clone(), w.clone()))
            .collect();
        Transducer {
            input,
            output_alphabet: self.output_alphabet.clone(),
            outputs,
            terminals,
        }
    }

    pub fn is_trim(&self) -> bool {
        self.input.is_trim()
    }

    /// Structural sequentiality: deterministic input automaton.
    pub fn is_sequential_structure(&self) -> bool {
        self.input.is_deterministic()
    }

    /// Structural letter-to-letter shape: every transition outputs exactly one
    /// symbol and every terminal output is empty.
    pub fn is_synchronous(&self) -> bool {
        self.outputs.values().all(|w| char_len(w) == 1)
            && self.terminals.values().all(|w| w.is_empty())
    }

    /// Single-valuedness on all inputs up to the given length.
    pub fn functional_on_sample(&self, max_len: usize) -> bool {
        crate::words::shortlex(self.input.alphabet(), max_len)
            .all(|w| self.evaluate(&w).map(|outs| outs.len() <= 1).unwrap_or(true))
    }
}

/// Structural classification report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub sequential: bool,
    pub synchronous: bool,
    pub functional_on_sample: bool,
}

pub fn classify(t: &Transducer, sample_len: usize) -> Classification {
    Classification {
        sequential: t.is_sequential_structure(),
        synchronous: t.is_synchronous(),
        functional_on_sample: t.functional_on_sample(sample_len),
    }
}

/// A transducer whose input automaton is deterministic; it computes a partial
/// function from input words to output words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialTransducer(Transducer);

impl SequentialTransducer {
    pub fn as_transducer(&self) -> &Transducer {
        &self.0
    }

    pub fn into_transducer(self) -> Transducer {
        self.0
    }

    pub fn initial(&self) -> Option<&StateId> {
        self.0.input.initials().iter().next()
    }

    /// The unique output for `u`, if `u` is in the domain.
    pub fn apply(&self, u: &str) -> Result<Option<Word>, TransducerError> {
        Ok(self.0.evaluate(u)?.into_iter().next())
    }

    /// The unique run on `u` from `from`, as `(end state, produced output)`.
    pub fn run_from(&self, from: &StateId, u: &str) -> Option<(StateId, Word)> {
        let mut state = from.clone();
        let mut out = Word::new();
        for sym in u.chars() {
            let tr = self
                .0
                .input
                .transitions()
                .iter()
                .find(|(p, s, _)| p == &state && *s == sym)?;
            out.push_str(&self.0.outputs[tr]);
            state = tr.2.clone();
        }
        Some((state, out))
    }

    /// The unique initial run on `u`.
    pub fn run(&self, u: &str) -> Option<(StateId, Word)> {
        self.run_from(self.initial()?, u)
    }

    /// The residual of this transducer at state `q` with `pending` already
    /// owed: a fresh initial state replicates the outgoing transitions of `q`
    /// (and its terminal output) with `pending` prefixed.
    pub fn residual_part(
        &self,
        q: &StateId,
        pending: &str,
    ) -> Result<SequentialTransducer, TransducerError> {
        if !self.0.input.states().contains(q) {
            return Err(AutomatonError::ForeignState(q.clone()).into());
        }
        if self.0.output_alphabet.check_word(pending).is_err() {
            return Err(TransducerError::ForeignOutput(pending.to_string()));
        }
        let mut fresh = format!("{q}+{pending}");
        while self.0.input.states().contains(&fresh) {
            fresh.push('\'');
        }
        let mut states: Vec<StateId> = self.0.input.states().iter().cloned().collect();
        states.push(fresh.clone());
        let mut transitions: Vec<Transition> =
            self.0.input.transitions().iter().cloned().collect();
        let mut outputs = self.0.outputs.clone();
        for tr in self.0.input.transitions() {
            if &tr.0 == q {
                let new_tr = (fresh.clone(), tr.1, tr.2.clone());
                outputs.insert(new_tr.clone(), format!("{pending}{}", self.0.outputs[tr]));
                transitions.push(new_tr);
            }
        }
        let mut finals: Vec<StateId> = self.0.input.finals().iter().cloned().collect();
        let mut terminals = self.0.terminals.clone();
        if self.0.input.finals().contains(q) {
            finals.push(fresh.clone());
            terminals.insert(fresh.clone(), format!("{pending}{}", self.0.terminals[q]));
        }
        let input = Nfa::new(
            self.0.input.alphabet().clone(),
            states,
            [fresh],
            finals,
            transitions,
        )?;
        let t = Transducer::new(input, self.0.output_alphabet.clone(), outputs, terminals)?;
        SequentialTransducer::try_from(t)
    }

    pub fn trim(&self) -> SequentialTransducer {
        SequentialTransducer(self.0.trim())
    }
}

impl std::ops::Deref for SequentialTransducer {
    type Target = Transducer;

    fn deref(&self) -> &Transducer {
        &self.0
    }
}

impl TryFrom<Transducer> for SequentialTransducer {
    type Error = TransducerError;

    fn try_from(t: Transducer) -> Result<Self, TransducerError> {
        if !t.is_sequential_structure() {
            return Err(TransducerError::NotSequential);
        }
        if t.input.initials().is_empty() && !t.input.states().is_empty() {
            return Err(TransducerError::NotSequential);
        }
        Ok(SequentialTransducer(t))
    }
}

/// A disjoint union of named sequential transducers sharing both alphabets.
/// The part structure is kept first-class: the decision procedures need it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiSequentialTransducer {
    names: Vec<String>,
    parts: Vec<SequentialTransducer>,
}

impl MultiSequentialTransducer {
    pub fn new(
        named_parts: impl IntoIterator<Item = (String, SequentialTransducer)>,
    ) -> Result<Self, TransducerError> {
        let mut names = Vec::new();
        let mut parts: Vec<SequentialTransducer> = Vec::new();
        let mut used: BTreeSet<StateId> = BTreeSet::new();
        for (name, part) in named_parts {
            if let Some(first) = parts.first() {
                if first.input_alphabet() != part.input_alphabet()
                    || first.output_alphabet() != part.output_alphabet()
                {
                    return Err(AutomatonError::AlphabetMismatch.into());
                }
            }
            for q in part.input_automaton().states() {
                if !used.insert(q.clone()) {
                    return Err(TransducerError::StateClash(name));
                }
            }
            names.push(name);
            parts.push(part);
        }
        if parts.is_empty() {
            return Err(TransducerError::NoParts);
        }
        Ok(MultiSequentialTransducer { names, parts })
    }

    pub fn parts(&self) -> &[SequentialTransducer] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &SequentialTransducer {
        &self.parts[i]
    }

    pub fn part_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        self.parts[0].input_alphabet()
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        self.parts[0].output_alphabet()
    }

    /// The part a state identifier belongs to.
    pub fn part_of_state(&self, q: &StateId) -> Option<usize> {
        self.parts
            .iter()
            .position(|p| p.input_automaton().states().contains(q))
    }

    /// Flattens the union into a single transducer. State identifiers are
    /// already globally unique, so no renaming happens.
    pub fn union(&self) -> Transducer {
        let mut input = self.parts[0].input_automaton().clone();
        let mut outputs = self.parts[0].outputs().clone();
        let mut terminals = self.parts[0].terminals().clone();
        for part in &self.parts[1..] {
            input = input
                .merge_disjoint(part.input_automaton())
                .expect("parts are state-disjoint by construction");
            outputs.extend(part.outputs().clone());
            terminals.extend(part.terminals().clone());
        }
        Transducer::new(input, self.output_alphabet().clone(), outputs, terminals)
            .expect("parts are valid transducers")
    }

    /// Trims every part. Parts whose language is empty end up with no states
    /// and simply never run.
    pub fn trim(&self) -> MultiSequentialTransducer {
        MultiSequentialTransducer {
            names: self.names.clone(),
            parts: self.parts.iter().map(|p| p.trim()).collect(),
        }
    }

    pub fn is_trim(&self) -> bool {
        self.parts.iter().all(|p| p.is_trim())
    }

    pub fn max_output_len(&self) -> usize {
        self.parts.iter().map(|p| p.max_output_len()).max().unwrap_or(0)
    }

    pub fn max_part_states(&self) -> usize {
        self.parts.iter().map(|p| p.state_count()).max().unwrap_or(0)
    }

    pub fn state_count(&self) -> usize {
        self.parts.iter().map(|p| p.state_count()).sum()
    }

    /// Merged domain automaton of the listed parts, re-rooted at the given
    /// per-part states. Passing every part at its initial state yields the
    /// domain of the whole union.
    pub fn residual_domain(&self, at: &BTreeMap<usize, StateId>) -> Nfa {
        let alphabet = self.input_alphabet().clone();
        let mut result = Nfa::empty(alphabet);
        for (&i, q) in at {
            let part_dom = self
                .parts[i]
                .input_automaton()
                .residual_from(&BTreeSet::from([q.clone()]))
                .expect("state belongs to its part");
            result = result
                .merge_disjoint(&part_dom)
                .expect("parts are state-disjoint");
        }
        result
    }

    /// Domain automaton of the whole union.
    pub fn domain_automaton(&self) -> Nfa {
        let at: BTreeMap<usize, StateId> = self
            .parts
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.initial().map(|q| (i, q.clone())))
            .collect();
        self.residual_domain(&at)
    }

    pub fn evaluate(&self, u: &str) -> Result<BTreeSet<Word>, TransducerError> {
        let mut all = BTreeSet::new();
        for part in &self.parts {
            all.extend(part.evaluate(u)?);
        }
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{rewrite_union, rewrite_union_copy};

    #[test]
    fn evaluate_examples() {
        let t = rewrite_union();
        let d1 = t.part(0);
        let d2 = t.part(1);
        assert_eq!(
            d1.evaluate("aa").unwrap(),
            BTreeSet::from(["aa".to_string()])
        );
        assert_eq!(
            d2.evaluate("ab").unwrap(),
            BTreeSet::from(["bb".to_string()])
        );
        assert!(d1.evaluate("ba").unwrap().is_empty());
    }

    #[test]
    fn union_examples() {
        let t = rewrite_union();
        assert_eq!(
            t.evaluate("aab").unwrap(),
            BTreeSet::from(["aaa".to_string(), "bbb".to_string()])
        );
        assert_eq!(t.evaluate("b").unwrap(), BTreeSet::from(["b".to_string()]));

        // The flattened union agrees with the part-wise evaluation.
        let flat = t.union();
        for w in crate::words::shortlex(t.input_alphabet(), 5) {
            assert_eq!(flat.evaluate(&w).unwrap(), t.evaluate(&w).unwrap());
        }
    }

    #[test]
    fn disjoint_union_matches_relation_union() {
        let t = rewrite_union();
        let u = t
            .part(0)
            .as_transducer()
            .disjoint_union(t.part(1).as_transducer())
            .unwrap();
        for w in crate::words::shortlex(t.input_alphabet(), 6) {
            let mut expect = t.part(0).evaluate(&w).unwrap();
            expect.extend(t.part(1).evaluate(&w).unwrap());
            assert_eq!(u.evaluate(&w).unwrap(), expect);
        }
    }

    #[test]
    fn domain_examples() {
        let t = rewrite_union();
        let dom1 = t.part(0).domain_automaton();
        assert!(dom1.accepts("aa").unwrap());
        assert!(!dom1.accepts("ba").unwrap());
        let dom2 = t.part(1).domain_automaton();
        assert!(dom2.accepts("b").unwrap());
        assert!(!dom2.accepts("aa").unwrap());

        let empty = empty_transducer(&t);
        assert!(empty.domain_automaton().is_empty_language());
    }

    fn empty_transducer(t: &MultiSequentialTransducer) -> Transducer {
        Transducer::new(
            crate::automaton::Nfa::empty(t.input_alphabet().clone()),
            t.output_alphabet().clone(),
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn union_with_the_empty_transducer_is_identity() {
        let t = rewrite_union();
        let u = t.part(0).as_transducer().disjoint_union(&empty_transducer(&t)).unwrap();
        for w in crate::words::shortlex(t.input_alphabet(), 6) {
            assert_eq!(u.evaluate(&w).unwrap(), t.part(0).evaluate(&w).unwrap());
        }
    }

    #[test]
    fn residual_part_examples() {
        let t = rewrite_union();
        let d2 = t.part(1);
        let res = d2.residual_part(&"4".to_string(), "b").unwrap();
        assert_eq!(res.apply("b").unwrap(), Some("bb".to_string()));
        assert_eq!(res.apply("ab").unwrap(), Some("bbb".to_string()));
        // Exhaustive check of the prefixing law up to length 5.
        for w in crate::words::shortlex(t.input_alphabet(), 5) {
            let direct = d2
                .run_from(&"4".to_string(), &w)
                .filter(|(q, _)| d2.input_automaton().finals().contains(q))
                .map(|(q, out)| format!("b{}{}", out, d2.terminal(&q)));
            assert_eq!(res.apply(&w).unwrap(), direct, "word {w:?}");
        }

        let d1 = t.part(0);
        let same = d1
            .residual_part(d1.initial().unwrap(), "")
            .unwrap();
        for w in crate::words::shortlex(t.input_alphabet(), 5) {
            assert_eq!(same.apply(&w).unwrap(), d1.apply(&w).unwrap());
        }

        // Residual of the accepting loop rewrites every letter to a.
        let loop_res = d1.residual_part(&"3".to_string(), "").unwrap();
        assert_eq!(loop_res.apply("ba").unwrap(), Some("aa".to_string()));
        assert_eq!(loop_res.apply("").unwrap(), Some(String::new()));
    }

    #[test]
    fn classify_examples() {
        let t = rewrite_union();
        let d1 = classify(t.part(0).as_transducer(), 4);
        assert!(d1.sequential && d1.synchronous && d1.functional_on_sample);

        let u = classify(&t.union(), 4);
        assert!(!u.sequential);
        assert!(u.synchronous);

        // A transition output of length two is not letter-to-letter.
        let long = t.part(1).residual_part(&"4".to_string(), "b").unwrap();
        assert!(!long.is_synchronous());
    }

    #[test]
    fn sequential_parts_are_single_valued() {
        for t in [rewrite_union(), rewrite_union_copy()] {
            for part in t.parts() {
                for w in crate::words::shortlex(t.input_alphabet(), 6) {
                    assert!(part.evaluate(&w).unwrap().len() <= 1);
                }
            }
        }
    }

    #[test]
    fn domain_matches_evaluation() {
        let t = rewrite_union();
        let dom = t.domain_automaton();
        for w in crate::words::shortlex(t.input_alphabet(), 6) {
            assert_eq!(
                dom.accepts(&w).unwrap(),
                !t.evaluate(&w).unwrap().is_empty()
            );
        }
    }
}
