//! Exact realisability of letter-to-letter unions by a letter-to-letter
//! sequential transducer.
//!
//! The checker walks the synchronised product of all parts. Because the parts
//! are letter-to-letter, two runs either agree on the whole output so far or
//! disagree forever, so a boolean agreement matrix over the alive parts is an
//! exact abstraction. At every reachable critical product state (a part died
//! or two parts disagree) there must be a subset of agreeing parts that still
//! covers the residual domain and is recursively realisable; otherwise the
//! checker reports the offending prefix together with the reason every
//! candidate subset fails.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, Nfa, StateId, Word};
use crate::transducer::{
    MultiSequentialTransducer, SequentialTransducer, Transducer, TransducerError,
};

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("every part must be letter-to-letter (transition outputs of length one, empty terminal outputs)")]
    NotSynchronous,
    #[error("the union must be trim")]
    NotTrim,
    #[error("the supplied decisions do not cover the reachable critical states")]
    InconsistentDecisions,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
}

/// How an input prefix relates to the union: all parts run and agree, or the
/// prefix leads nowhere, or something must be dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixClass {
    Smooth,
    Critical,
    Dead,
}

pub fn classify_prefix(
    t: &MultiSequentialTransducer,
    u: &str,
) -> Result<PrefixClass, SyncError> {
    if let Err(c) = t.input_alphabet().check_word(u) {
        return Err(AutomatonError::UnknownSymbol(c).into());
    }
    let runs: Vec<Option<Word>> = t
        .parts()
        .iter()
        .map(|p| p.run(u).map(|(_, out)| out))
        .collect();
    let outputs: Vec<&Word> = runs.iter().flatten().collect();
    if outputs.is_empty() {
        return Ok(PrefixClass::Dead);
    }
    let all_alive = outputs.len() == t.part_count();
    let all_agree = outputs.windows(2).all(|w| w[0] == w[1]);
    if all_alive && all_agree {
        Ok(PrefixClass::Smooth)
    } else {
        Ok(PrefixClass::Critical)
    }
}

/// Sorted per-part states of the parts that are still running.
type PartStates = Vec<(usize, StateId)>;

/// Agreement matrix: the pairs `(i, j)` with `i < j` of alive parts whose
/// outputs so far are equal.
type Agreement = BTreeSet<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct ProductState {
    alive: PartStates,
    agree: Agreement,
}

impl ProductState {
    fn fresh(alive: PartStates) -> Self {
        let mut agree = BTreeSet::new();
        for a in 0..alive.len() {
            for b in a + 1..alive.len() {
                agree.insert((alive[a].0, alive[b].0));
            }
        }
        ProductState { alive, agree }
    }

    fn alive_parts(&self) -> BTreeSet<usize> {
        self.alive.iter().map(|(i, _)| *i).collect()
    }

    fn is_critical(&self, ambient: &BTreeSet<usize>) -> bool {
        if &self.alive_parts() != ambient {
            return true;
        }
        let complete = self.alive.len() * self.alive.len().saturating_sub(1) / 2;
        self.agree.len() != complete
    }
}

/// Why one candidate subset cannot be kept at a critical prefix.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetFailure {
    pub parts: Vec<String>,
    /// Violated requirement: 1 agreement, 2 residual-domain coverage,
    /// 3 recursive realisability.
    pub condition: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disagreement: Option<(String, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Word>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nested: Option<Box<CriticalCertificate>>,
}

/// Certificate of synchronous unrealisability: an input prefix at which every
/// candidate subset of parts fails one of the three requirements. Nested
/// certificates are relative to the residual union they refute.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalCertificate {
    pub prefix: Word,
    pub failures: Vec<SubsetFailure>,
}

/// The subset chosen at every reachable critical product state, reusable to
/// build the realiser.
#[derive(Debug, Clone, Default)]
pub struct SyncDecisions {
    chosen: BTreeMap<ChoiceKey, BTreeSet<usize>>,
}

#[derive(Debug)]
pub enum SyncVerdict {
    Realisable {
        realiser: SequentialTransducer,
        decisions: SyncDecisions,
    },
    Unrealisable {
        certificate: CriticalCertificate,
    },
}

impl SyncVerdict {
    pub fn is_realisable(&self) -> bool {
        matches!(self, SyncVerdict::Realisable { .. })
    }
}

/// A critical state together with whether the alive parts still span the
/// whole ambient set (in which case keeping all of them is not an option).
type ChoiceKey = (PartStates, Agreement, bool);
type Choice = Result<BTreeSet<usize>, Vec<SubsetFailure>>;

struct Checker<'a> {
    t: &'a MultiSequentialTransducer,
    /// Outcome per subproblem root `(ambient, start states)`.
    explored: HashMap<(Vec<usize>, PartStates), Result<(), CriticalCertificate>>,
    /// Chosen subset (or failure list) per critical state.
    choices: HashMap<ChoiceKey, Choice>,
}

impl<'a> Checker<'a> {
    fn new(t: &'a MultiSequentialTransducer) -> Self {
        Checker { t, explored: HashMap::new(), choices: HashMap::new() }
    }

    fn part_transition(&self, part: usize, state: &StateId, sym: char) -> Option<(StateId, char)> {
        let p = self.t.part(part);
        p.input_automaton()
            .transitions()
            .iter()
            .find(|(q, s, _)| q == state && *s == sym)
            .map(|tr| {
                let out = p.output(tr);
                (tr.2.clone(), out.chars().next().expect("letter-to-letter output"))
            })
    }

    fn step(&self, state: &ProductState, sym: char) -> ProductState {
        let mut alive = Vec::new();
        let mut letters: BTreeMap<usize, char> = BTreeMap::new();
        for (i, q) in &state.alive {
            if let Some((next, letter)) = self.part_transition(*i, q, sym) {
                alive.push((*i, next));
                letters.insert(*i, letter);
            }
        }
        let agree = state
            .agree
            .iter()
            .filter(|(i, j)| {
                letters.contains_key(i) && letters.contains_key(j) && letters[i] == letters[j]
            })
            .cloned()
            .collect();
        ProductState { alive, agree }
    }

    /// Residual-domain automaton of a set of parts re-rooted at their states.
    fn residual_union(&self, at: &PartStates) -> Nfa {
        let map: BTreeMap<usize, StateId> =
            at.iter().map(|(i, q)| (*i, q.clone())).collect();
        self.t.residual_domain(&map)
    }

    fn part_names(&self, parts: &BTreeSet<usize>) -> Vec<String> {
        parts.iter().map(|&i| self.t.part_name(i).to_string()).collect()
    }

    /// Tries the candidate subsets at a critical state, largest first. `full`
    /// records whether the alive parts still span the whole ambient set, in
    /// which case keeping all of them is not an option.
    fn choose(
        &mut self,
        state: &ProductState,
        full: bool,
    ) -> Result<BTreeSet<usize>, Vec<SubsetFailure>> {
        let key = (state.alive.clone(), state.agree.clone(), full);
        if let Some(known) = self.choices.get(&key) {
            return known.clone();
        }
        let alive_parts: Vec<usize> = state.alive.iter().map(|(i, _)| *i).collect();
        let mut candidates: Vec<BTreeSet<usize>> = Vec::new();
        for mask in 0u32..(1u32 << alive_parts.len()) {
            let subset: BTreeSet<usize> = alive_parts
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect();
            if full && subset.len() == alive_parts.len() {
                continue;
            }
            candidates.push(subset);
        }
        candidates.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

        let mut failures: Vec<SubsetFailure> = Vec::new();
        let mut chosen: Option<BTreeSet<usize>> = None;
        for subset in candidates {
            let names = self.part_names(&subset);
            if let Some((i, j)) = pairs_of(&subset)
                .into_iter()
                .find(|(i, j)| !state.agree.contains(&(*i, *j)))
            {
                failures.push(SubsetFailure {
                    parts: names,
                    condition: 1,
                    disagreement: Some((
                        self.t.part_name(i).to_string(),
                        self.t.part_name(j).to_string(),
                    )),
                    counterexample: None,
                    nested: None,
                });
                continue;
            }
            let kept_states: PartStates = state
                .alive
                .iter()
                .filter(|(i, _)| subset.contains(i))
                .cloned()
                .collect();
            let covered = self.residual_union(&kept_states);
            let whole = self.residual_union(&state.alive);
            if let Some(word) = covered.includes(&whole).expect("same alphabet") {
                failures.push(SubsetFailure {
                    parts: names,
                    condition: 2,
                    disagreement: None,
                    counterexample: Some(word),
                    nested: None,
                });
                continue;
            }
            match self.realisable(kept_states) {
                Ok(()) => {
                    chosen = Some(subset);
                    break;
                }
                Err(cert) => {
                    failures.push(SubsetFailure {
                        parts: names,
                        condition: 3,
                        disagreement: None,
                        counterexample: None,
                        nested: Some(Box::new(cert)),
                    });
                }
            }
        }
        let outcome = match chosen {
            Some(subset) => Ok(subset),
            None => Err(failures),
        };
        self.choices.insert(key, outcome.clone());
        outcome
    }

    /// Realisability of the union of the given parts restarted at the given
    /// states (they all agree at this point, so no pending output is owed).
    fn realisable(&mut self, start: PartStates) -> Result<(), CriticalCertificate> {
        let ambient: BTreeSet<usize> = start.iter().map(|(i, _)| *i).collect();
        self.realisable_within(start, ambient)
    }

    fn realisable_within(
        &mut self,
        start: PartStates,
        ambient: BTreeSet<usize>,
    ) -> Result<(), CriticalCertificate> {
        let memo_key = (ambient.iter().cloned().collect::<Vec<_>>(), start.clone());
        if let Some(known) = self.explored.get(&memo_key) {
            return known.clone();
        }
        let result = self.explore(start, &ambient);
        self.explored.insert(memo_key, result.clone());
        result
    }

    fn explore(
        &mut self,
        start: PartStates,
        ambient: &BTreeSet<usize>,
    ) -> Result<(), CriticalCertificate> {
        let symbols: Vec<char> = self.t.input_alphabet().symbols().to_vec();
        let start_state = ProductState::fresh(start);
        let mut seen: BTreeSet<ProductState> = BTreeSet::new();
        let mut queue: VecDeque<(ProductState, Word)> = VecDeque::new();
        seen.insert(start_state.clone());
        queue.push_back((start_state, Word::new()));
        while let Some((state, prefix)) = queue.pop_front() {
            if state.alive.is_empty() {
                continue;
            }
            if state.is_critical(ambient) {
                let full = &state.alive_parts() == ambient;
                if let Err(failures) = self.choose(&state, full) {
                    return Err(CriticalCertificate { prefix, failures });
                }
            }
            for &sym in &symbols {
                let next = self.step(&state, sym);
                if next.alive.is_empty() {
                    continue;
                }
                if seen.insert(next.clone()) {
                    let mut w = prefix.clone();
                    w.push(sym);
                    queue.push_back((next, w));
                }
            }
        }
        Ok(())
    }
}

fn pairs_of(subset: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    let v: Vec<usize> = subset.iter().cloned().collect();
    let mut pairs = Vec::new();
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            pairs.push((v[a], v[b]));
        }
    }
    pairs
}

fn validate(t: &MultiSequentialTransducer) -> Result<(), SyncError> {
    for part in t.parts() {
        if !part.is_synchronous() && part.state_count() > 0 {
            return Err(SyncError::NotSynchronous);
        }
    }
    if !t.is_trim() {
        return Err(SyncError::NotTrim);
    }
    Ok(())
}

fn initial_states(t: &MultiSequentialTransducer) -> PartStates {
    t.parts()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.initial().map(|q| (i, q.clone())))
        .collect()
}

/// Decides synchronous realisability exactly. On success the verdict carries
/// a realiser built from the recorded subset decisions; on failure it carries
/// a certificate locating the first critical prefix with no usable subset.
pub fn check_residual_property(t: &MultiSequentialTransducer) -> Result<SyncVerdict, SyncError> {
    validate(t)?;
    let mut checker = Checker::new(t);
    let start = initial_states(t);
    let ambient: BTreeSet<usize> = (0..t.part_count()).collect();
    match checker.realisable_within(start, ambient) {
        Err(certificate) => Ok(SyncVerdict::Unrealisable { certificate }),
        Ok(()) => {
            let decisions = SyncDecisions {
                chosen: checker
                    .choices
                    .iter()
                    .filter_map(|(k, v)| v.as_ref().ok().map(|p| (k.clone(), p.clone())))
                    .collect(),
            };
            let realiser = build_sync_realiser(t, &decisions)?;
            Ok(SyncVerdict::Realisable { realiser, decisions })
        }
    }
}

/// Builds the synchronised-product realiser that follows the kept subsets
/// recorded in `decisions`.
pub fn build_sync_realiser(
    t: &MultiSequentialTransducer,
    decisions: &SyncDecisions,
) -> Result<SequentialTransducer, SyncError> {
    validate(t)?;
    let checker = Checker::new(t);
    let all: BTreeSet<usize> = (0..t.part_count()).collect();
    let start_alive = initial_states(t);
    if start_alive.is_empty() {
        // Empty domain: the empty transducer realises it.
        let input = Nfa::empty(t.input_alphabet().clone());
        let empty = Transducer::new(
            input,
            t.output_alphabet().clone(),
            BTreeMap::new(),
            BTreeMap::new(),
        )?;
        return Ok(SequentialTransducer::try_from(empty)?);
    }
    let apply_decision = |state: &ProductState, ambient: &BTreeSet<usize>| {
        let full = &state.alive_parts() == ambient;
        let key = (state.alive.clone(), state.agree.clone(), full);
        decisions
            .chosen
            .get(&key)
            .cloned()
            .ok_or(SyncError::InconsistentDecisions)
    };

    // A configuration is the set of kept parts at their current states; the
    // kept parts always agree on the whole prefix read so far.
    let start_state = ProductState::fresh(start_alive);
    let start_config: PartStates = if start_state.is_critical(&all) {
        let chosen = apply_decision(&start_state, &all)?;
        start_state
            .alive
            .into_iter()
            .filter(|(i, _)| chosen.contains(i))
            .collect()
    } else {
        start_state.alive
    };

    let mut names: BTreeMap<PartStates, StateId> = BTreeMap::new();
    let mut order: Vec<PartStates> = Vec::new();
    let mut queue: VecDeque<PartStates> = VecDeque::new();
    names.insert(start_config.clone(), "c0".to_string());
    order.push(start_config.clone());
    queue.push_back(start_config);
    let mut transitions: Vec<(StateId, char, StateId)> = Vec::new();
    let mut outputs: BTreeMap<(StateId, char, StateId), Word> = BTreeMap::new();
    while let Some(config) = queue.pop_front() {
        let ambient: BTreeSet<usize> = config.iter().map(|(i, _)| *i).collect();
        let state = ProductState::fresh(config.clone());
        for &sym in t.input_alphabet().symbols().to_vec().iter() {
            let next = checker.step(&state, sym);
            if next.alive.is_empty() {
                continue;
            }
            let kept: PartStates = if next.is_critical(&ambient) {
                let chosen = apply_decision(&next, &ambient)?;
                next.alive
                    .iter()
                    .filter(|(i, _)| chosen.contains(i))
                    .cloned()
                    .collect()
            } else {
                next.alive.clone()
            };
            if kept.is_empty() {
                return Err(SyncError::InconsistentDecisions);
            }
            // All kept parts agreed on the step; emit their common letter.
            let (part, source_state) = config
                .iter()
                .find(|(i, _)| kept.iter().any(|(j, _)| i == j))
                .expect("kept parts come from the configuration");
            let (_, letter) = checker
                .part_transition(*part, source_state, sym)
                .expect("kept part has a transition");
            if !names.contains_key(&kept) {
                let name = format!("c{}", names.len());
                names.insert(kept.clone(), name);
                order.push(kept.clone());
                queue.push_back(kept.clone());
            }
            let tr = (names[&config].clone(), sym, names[&kept].clone());
            outputs.insert(tr.clone(), letter.to_string());
            transitions.push(tr);
        }
    }
    let mut finals: Vec<StateId> = Vec::new();
    let mut terminals: BTreeMap<StateId, Word> = BTreeMap::new();
    for config in &order {
        let accepting = config
            .iter()
            .any(|(i, q)| t.part(*i).input_automaton().finals().contains(q));
        if accepting {
            finals.push(names[config].clone());
            terminals.insert(names[config].clone(), Word::new());
        }
    }
    let input = Nfa::new(
        t.input_alphabet().clone(),
        names.values().cloned(),
        [names[&order[0]].clone()],
        finals,
        transitions,
    )
    .map_err(SyncError::Automaton)?;
    let realiser = Transducer::new(input, t.output_alphabet().clone(), outputs, terminals)?;
    Ok(SequentialTransducer::try_from(realiser.trim())?)
}
