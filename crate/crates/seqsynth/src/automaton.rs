//! Non-deterministic finite automata with the constructions used throughout
//! the crate: trimming, subset construction, product, complement, inclusion
//! with counterexamples, and residual automata.
//!
//! State identifiers are plain strings; macrostates produced by the subset
//! construction are rendered as sorted member lists (`"{p,q}"`) so that
//! equality is structural and outputs are reproducible.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::words::char_len;

pub type StateId = String;
pub type Word = String;

/// A transition `(source, symbol, target)`.
pub type Transition = (StateId, char, StateId);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("symbol '{0}' does not belong to the alphabet")]
    UnknownSymbol(char),
    #[error("automata are over different alphabets")]
    AlphabetMismatch,
    #[error("state '{0}' is not a state of this automaton")]
    ForeignState(StateId),
    #[error("transition ({0}, {1}, {2}) uses an undeclared state")]
    UndeclaredState(StateId, char, StateId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nfa {
    alphabet: Alphabet,
    states: BTreeSet<StateId>,
    initials: BTreeSet<StateId>,
    finals: BTreeSet<StateId>,
    transitions: BTreeSet<Transition>,
}

/// Language semantics of the binary product construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductMode {
    Intersection,
    Union,
}

impl Nfa {
    pub fn new(
        alphabet: Alphabet,
        states: impl IntoIterator<Item = StateId>,
        initials: impl IntoIterator<Item = StateId>,
        finals: impl IntoIterator<Item = StateId>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, AutomatonError> {
        let states: BTreeSet<StateId> = states.into_iter().collect();
        let initials: BTreeSet<StateId> = initials.into_iter().collect();
        let finals: BTreeSet<StateId> = finals.into_iter().collect();
        let transitions: BTreeSet<Transition> = transitions.into_iter().collect();
        for q in initials.iter().chain(finals.iter()) {
            if !states.contains(q) {
                return Err(AutomatonError::ForeignState(q.clone()));
            }
        }
        for (p, sym, q) in &transitions {
            if !states.contains(p) || !states.contains(q) {
                return Err(AutomatonError::UndeclaredState(p.clone(), *sym, q.clone()));
            }
            if !alphabet.contains(*sym) {
                return Err(AutomatonError::UnknownSymbol(*sym));
            }
        }
        Ok(Nfa { alphabet, states, initials, finals, transitions })
    }

    /// The automaton with no states; it accepts the empty language.
    pub fn empty(alphabet: Alphabet) -> Self {
        Nfa {
            alphabet,
            states: BTreeSet::new(),
            initials: BTreeSet::new(),
            finals: BTreeSet::new(),
            transitions: BTreeSet::new(),
        }
    }

    /// A one-state automaton accepting every word over the alphabet.
    pub fn universal(alphabet: Alphabet) -> Self {
        let q: StateId = "u".to_string();
        let transitions = alphabet
            .symbols()
            .iter()
            .map(|&sym| (q.clone(), sym, q.clone()))
            .collect();
        Nfa {
            alphabet,
            states: BTreeSet::from([q.clone()]),
            initials: BTreeSet::from([q.clone()]),
            finals: BTreeSet::from([q]),
            transitions,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }

    pub fn initials(&self) -> &BTreeSet<StateId> {
        &self.initials
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Successors of a state set on one symbol.
    pub fn step(&self, from: &BTreeSet<StateId>, sym: char) -> BTreeSet<StateId> {
        self.transitions
            .iter()
            .filter(|(p, s, _)| *s == sym && from.contains(p))
            .map(|(_, _, q)| q.clone())
            .collect()
    }

    /// The set of states reachable from the initial states on `w`.
    pub fn reach(&self, w: &str) -> Result<BTreeSet<StateId>, AutomatonError> {
        let mut current = self.initials.clone();
        for sym in w.chars() {
            if !self.alphabet.contains(sym) {
                return Err(AutomatonError::UnknownSymbol(sym));
            }
            current = self.step(&current, sym);
        }
        Ok(current)
    }

    pub fn accepts(&self, w: &str) -> Result<bool, AutomatonError> {
        Ok(self.reach(w)?.iter().any(|q| self.finals.contains(q)))
    }

    fn forward_reachable(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = self.initials.clone();
        let mut queue: VecDeque<StateId> = self.initials.iter().cloned().collect();
        while let Some(p) = queue.pop_front() {
            for (src, _, tgt) in &self.transitions {
                if *src == p && seen.insert(tgt.clone()) {
                    queue.push_back(tgt.clone());
                }
            }
        }
        seen
    }

    fn backward_reachable(&self) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = self.finals.clone();
        let mut queue: VecDeque<StateId> = self.finals.iter().cloned().collect();
        while let Some(q) = queue.pop_front() {
            for (src, _, tgt) in &self.transitions {
                if *tgt == q && seen.insert(src.clone()) {
                    queue.push_back(src.clone());
                }
            }
        }
        seen
    }

    /// Keeps exactly the useful states (reachable and co-reachable). An
    /// automaton with empty language trims to zero states.
    pub fn trim(&self) -> Nfa {
        let useful: BTreeSet<StateId> = self
            .forward_reachable()
            .intersection(&self.backward_reachable())
            .cloned()
            .collect();
        Nfa {
            alphabet: self.alphabet.clone(),
            states: useful.clone(),
            initials: self.initials.intersection(&useful).cloned().collect(),
            finals: self.finals.intersection(&useful).cloned().collect(),
            transitions: self
                .transitions
                .iter()
                .filter(|(p, _, q)| useful.contains(p) && useful.contains(q))
                .cloned()
                .collect(),
        }
    }

    pub fn is_trim(&self) -> bool {
        let useful: BTreeSet<StateId> = self
            .forward_reachable()
            .intersection(&self.backward_reachable())
            .cloned()
            .collect();
        useful == self.states
    }

    pub fn is_deterministic(&self) -> bool {
        if self.initials.len() > 1 {
            return false;
        }
        let mut seen: BTreeSet<(&StateId, char)> = BTreeSet::new();
        for (p, sym, _) in &self.transitions {
            if !seen.insert((p, *sym)) {
                return false;
            }
        }
        true
    }

    pub fn is_empty_language(&self) -> bool {
        self.trim().states.is_empty()
    }

    /// The same automaton with the initial states replaced by `seeds`. When
    /// `seeds` is the set of states reachable on `u`, the result accepts the
    /// residual language of `u`.
    pub fn residual_from(&self, seeds: &BTreeSet<StateId>) -> Result<Nfa, AutomatonError> {
        for q in seeds {
            if !self.states.contains(q) {
                return Err(AutomatonError::ForeignState(q.clone()));
            }
        }
        Ok(Nfa {
            alphabet: self.alphabet.clone(),
            states: self.states.clone(),
            initials: seeds.clone(),
            finals: self.finals.clone(),
            transitions: self.transitions.clone(),
        })
    }

    /// Merges two automata over the same alphabet without connecting them.
    /// State identifiers must already be disjoint.
    pub fn merge_disjoint(&self, other: &Nfa) -> Result<Nfa, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch);
        }
        if let Some(q) = self.states.intersection(&other.states).next() {
            return Err(AutomatonError::ForeignState(q.clone()));
        }
        Ok(Nfa {
            alphabet: self.alphabet.clone(),
            states: self.states.union(&other.states).cloned().collect(),
            initials: self.initials.union(&other.initials).cloned().collect(),
            finals: self.finals.union(&other.finals).cloned().collect(),
            transitions: self.transitions.union(&other.transitions).cloned().collect(),
        })
    }

    fn macro_name(set: &BTreeSet<StateId>) -> StateId {
        let mut s = String::from("{");
        for (i, q) in set.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(q);
        }
        s.push('}');
        s
    }

    /// Subset construction. The result is a complete deterministic automaton;
    /// macrostates are named by their sorted member lists.
    pub fn determinize(&self) -> Nfa {
        let start = self.initials.clone();
        let mut names: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
        let mut order: Vec<BTreeSet<StateId>> = Vec::new();
        let mut queue: VecDeque<BTreeSet<StateId>> = VecDeque::new();
        names.insert(start.clone(), Self::macro_name(&start));
        order.push(start.clone());
        queue.push_back(start);
        let mut transitions = BTreeSet::new();
        while let Some(set) = queue.pop_front() {
            for &sym in self.alphabet.symbols() {
                let next = self.step(&set, sym);
                if !names.contains_key(&next) {
                    names.insert(next.clone(), Self::macro_name(&next));
                    order.push(next.clone());
                    queue.push_back(next.clone());
                }
                transitions.insert((names[&set].clone(), sym, names[&next].clone()));
            }
        }
        let states: BTreeSet<StateId> = names.values().cloned().collect();
        let finals: BTreeSet<StateId> = names
            .iter()
            .filter(|(set, _)| set.iter().any(|q| self.finals.contains(q)))
            .map(|(_, name)| name.clone())
            .collect();
        let initial = Self::macro_name(&self.initials);
        Nfa {
            alphabet: self.alphabet.clone(),
            states,
            initials: BTreeSet::from([initial]),
            finals,
            transitions,
        }
    }

    /// Complement over the full alphabet; determinizes internally.
    pub fn complement(&self) -> Nfa {
        let det = self.determinize();
        let finals: BTreeSet<StateId> =
            det.states.difference(&det.finals).cloned().collect();
        Nfa { finals, ..det }
    }

    /// Binary product with either intersection or union semantics. The union
    /// mode works on the determinized (complete) operands so that missing
    /// transitions do not lose words of the other language.
    pub fn product(&self, other: &Nfa, mode: ProductMode) -> Result<Nfa, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch);
        }
        let (left, right) = match mode {
            ProductMode::Intersection => (self.clone(), other.clone()),
            ProductMode::Union => (self.determinize(), other.determinize()),
        };
        let pair_name = |p: &StateId, q: &StateId| format!("({p},{q})");
        let mut states = BTreeSet::new();
        let mut transitions = BTreeSet::new();
        let mut initials = BTreeSet::new();
        let mut finals = BTreeSet::new();
        let mut queue: VecDeque<(StateId, StateId)> = VecDeque::new();
        let mut seen: BTreeSet<(StateId, StateId)> = BTreeSet::new();
        for p in &left.initials {
            for q in &right.initials {
                let pair = (p.clone(), q.clone());
                if seen.insert(pair.clone()) {
                    queue.push_back(pair);
                }
                initials.insert(pair_name(p, q));
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            let name = pair_name(&p, &q);
            states.insert(name.clone());
            let is_final = match mode {
                ProductMode::Intersection => {
                    left.finals.contains(&p) && right.finals.contains(&q)
                }
                ProductMode::Union => left.finals.contains(&p) || right.finals.contains(&q),
            };
            if is_final {
                finals.insert(name.clone());
            }
            for &sym in self.alphabet.symbols() {
                for (lp, ls, lt) in &left.transitions {
                    if lp != &p || *ls != sym {
                        continue;
                    }
                    for (rp, rs, rt) in &right.transitions {
                        if rp != &q || *rs != sym {
                            continue;
                        }
                        transitions.insert((name.clone(), sym, pair_name(lt, rt)));
                        let pair = (lt.clone(), rt.clone());
                        if seen.insert(pair.clone()) {
                            queue.push_back(pair);
                        }
                    }
                }
            }
        }
        Nfa::new(self.alphabet.clone(), states, initials, finals, transitions)
    }

    /// Checks `L(other) ⊆ L(self)`. On failure returns the shortest (then
    /// lexicographically least) word of `L(other) \ L(self)`. Works on the
    /// pair of subset constructions explored on the fly in shortlex order.
    pub fn includes(&self, other: &Nfa) -> Result<Option<Word>, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch);
        }
        let mut queue: VecDeque<(BTreeSet<StateId>, BTreeSet<StateId>, Word)> = VecDeque::new();
        let mut seen: HashSet<(BTreeSet<StateId>, BTreeSet<StateId>)> = HashSet::new();
        let start = (self.initials.clone(), other.initials.clone());
        seen.insert(start.clone());
        queue.push_back((start.0, start.1, String::new()));
        while let Some((mine, theirs, word)) = queue.pop_front() {
            let theirs_accepts = theirs.iter().any(|q| other.finals.contains(q));
            let mine_accepts = mine.iter().any(|q| self.finals.contains(q));
            if theirs_accepts && !mine_accepts {
                return Ok(Some(word));
            }
            for &sym in self.alphabet.symbols() {
                let next = (self.step(&mine, sym), other.step(&theirs, sym));
                if next.1.is_empty() {
                    // No continuation can be accepted by `other`.
                    continue;
                }
                if seen.insert(next.clone()) {
                    let mut w = word.clone();
                    w.push(sym);
                    queue.push_back((next.0, next.1, w));
                }
            }
        }
        Ok(None)
    }

    /// Shortest (then lexicographically least) accepted word, if any.
    pub fn shortest_word(&self) -> Option<Word> {
        let mut queue: VecDeque<(BTreeSet<StateId>, Word)> = VecDeque::new();
        let mut seen: HashSet<BTreeSet<StateId>> = HashSet::new();
        seen.insert(self.initials.clone());
        queue.push_back((self.initials.clone(), String::new()));
        while let Some((set, word)) = queue.pop_front() {
            if set.iter().any(|q| self.finals.contains(q)) {
                return Some(word);
            }
            for &sym in self.alphabet.symbols() {
                let next = self.step(&set, sym);
                if !next.is_empty() && seen.insert(next.clone()) {
                    let mut w = word.clone();
                    w.push(sym);
                    queue.push_back((next, w));
                }
            }
        }
        None
    }

    /// All accepted words up to a length bound, in shortlex order.
    pub fn accepted_up_to(&self, max_len: usize) -> Vec<Word> {
        crate::words::shortlex(&self.alphabet, max_len)
            .filter(|w| self.accepts(w).unwrap_or(false))
            .collect()
    }
}

/// Deterministic check used by callers that require word lengths in symbols.
pub fn word_length(w: &str) -> usize {
    char_len(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::from_str_symbols("ab").unwrap()
    }

    fn s(x: &str) -> StateId {
        x.to_string()
    }

    /// Domain of the "needs two a's" machine: b*ab*a(a+b)*.
    fn two_as() -> Nfa {
        Nfa::new(
            ab(),
            [s("1"), s("2"), s("3")],
            [s("1")],
            [s("3")],
            [
                (s("1"), 'a', s("2")),
                (s("1"), 'b', s("1")),
                (s("2"), 'a', s("3")),
                (s("2"), 'b', s("2")),
                (s("3"), 'a', s("3")),
                (s("3"), 'b', s("3")),
            ],
        )
        .unwrap()
    }

    /// Domain of the "needs one b" machine: a*b(a+b)*.
    fn one_b() -> Nfa {
        Nfa::new(
            ab(),
            [s("4"), s("5")],
            [s("4")],
            [s("5")],
            [
                (s("4"), 'b', s("5")),
                (s("4"), 'a', s("4")),
                (s("5"), 'a', s("5")),
                (s("5"), 'b', s("5")),
            ],
        )
        .unwrap()
    }

    #[test]
    fn accepts_examples() {
        let a = two_as();
        assert!(!a.accepts("ba").unwrap());
        assert!(a.accepts("aa").unwrap());
        assert_eq!(a.accepts("xa"), Err(AutomatonError::UnknownSymbol('x')));
        let u = Nfa::universal(ab());
        assert!(u.accepts("").unwrap());
    }

    #[test]
    fn trim_examples() {
        // Useless sink disappears, the rest is untouched.
        let mut with_sink = two_as();
        with_sink.states.insert(s("sink"));
        with_sink
            .transitions
            .insert((s("sink"), 'a', s("sink")));
        let trimmed = with_sink.trim();
        assert_eq!(trimmed, two_as());
        assert!(two_as().is_trim());

        let no_final = Nfa::new(ab(), [s("1")], [s("1")], [], []).unwrap();
        assert_eq!(no_final.trim().state_count(), 0);
    }

    #[test]
    fn includes_examples() {
        let a = two_as();
        assert_eq!(a.includes(&a).unwrap(), None);

        let union = a.merge_disjoint(&one_b()).unwrap();
        assert_eq!(a.includes(&union).unwrap(), Some("b".to_string()));
        assert_eq!(union.includes(&a).unwrap(), None);

        let u = Nfa::universal(ab());
        assert_eq!(u.includes(&one_b()).unwrap(), None);
    }

    #[test]
    fn residual_examples() {
        let a = two_as();
        // From the accepting loop everything is accepted.
        let res = a.residual_from(&BTreeSet::from([s("3")])).unwrap();
        assert_eq!(Nfa::universal(ab()).includes(&res).unwrap(), None);
        assert_eq!(res.includes(&Nfa::universal(ab())).unwrap(), None);

        let same = a.residual_from(&a.initials().clone()).unwrap();
        assert_eq!(a.includes(&same).unwrap(), None);
        assert_eq!(same.includes(&a).unwrap(), None);

        assert_eq!(
            a.residual_from(&BTreeSet::from([s("9")])),
            Err(AutomatonError::ForeignState(s("9")))
        );

        let b = one_b();
        let res4 = b.residual_from(&BTreeSet::from([s("4")])).unwrap();
        assert_eq!(b.includes(&res4).unwrap(), None);
        assert_eq!(res4.includes(&b).unwrap(), None);
    }

    #[test]
    fn product_determinize_complement() {
        let inter = two_as().product(&one_b(), ProductMode::Intersection).unwrap();
        assert!(inter.accepts("aab").unwrap());
        assert!(!inter.accepts("aa").unwrap());

        let comp = Nfa::universal(ab()).complement();
        assert!(comp.is_empty_language());

        let det = one_b().determinize();
        assert!(det.is_deterministic());
        assert_eq!(det.includes(&one_b()).unwrap(), None);
        assert_eq!(one_b().includes(&det).unwrap(), None);

        let uni = two_as().product(&one_b(), ProductMode::Union).unwrap();
        assert!(uni.accepts("b").unwrap());
        assert!(uni.accepts("aa").unwrap());
        assert!(!uni.accepts("a").unwrap());
    }
}
