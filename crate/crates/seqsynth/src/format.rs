//! The JSON interchange format for specifications, realisers and the
//! deterministic-automaton inputs of the generators.
//!
//! A specification file carries the two alphabets and either a list of named
//! sequential parts or one `general` transducer block. Symbols are
//! single-character strings; output words are plain strings. Printing is
//! canonical, so re-serialising a parsed file is byte-stable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::{Alphabet, AlphabetError};
use crate::automaton::{Nfa, StateId, Transition, Word};
use crate::transducer::{
    MultiSequentialTransducer, SequentialTransducer, Transducer, TransducerError,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("symbol {0:?} must be a single character")]
    NotOneChar(String),
    #[error("alphabet: {0}")]
    Alphabet(#[from] AlphabetError),
    #[error("part {name:?}: {problem}")]
    BadPart { name: String, problem: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Automaton(#[from] crate::automaton::AutomatonError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TransitionJson {
    pub from: String,
    #[serde(rename = "in")]
    pub input: String,
    pub out: String,
    pub to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PartJson {
    pub name: String,
    pub states: Vec<String>,
    pub initial: String,
    /// Final states mapped to their terminal output words.
    pub finals: BTreeMap<String, String>,
    pub transitions: Vec<TransitionJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GeneralJson {
    pub states: Vec<String>,
    pub initials: Vec<String>,
    pub finals: BTreeMap<String, String>,
    pub transitions: Vec<TransitionJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpecFile {
    pub format: u32,
    pub input_alphabet: Vec<String>,
    pub output_alphabet: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<PartJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralJson>,
}

/// A parsed and validated specification.
#[derive(Debug)]
pub enum LoadedSpec {
    Parts(MultiSequentialTransducer),
    General(Transducer),
}

impl LoadedSpec {
    pub fn as_transducer(&self) -> Transducer {
        match self {
            LoadedSpec::Parts(t) => t.union(),
            LoadedSpec::General(t) => t.clone(),
        }
    }
}

fn one_char(s: &str) -> Result<char, FormatError> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(FormatError::NotOneChar(s.to_string())),
    }
}

fn parse_alphabet(symbols: &[String]) -> Result<Alphabet, FormatError> {
    let chars: Vec<char> = symbols
        .iter()
        .map(|s| one_char(s))
        .collect::<Result<_, _>>()?;
    Ok(Alphabet::new(chars)?)
}

fn build_transducer(
    input_alphabet: &Alphabet,
    output_alphabet: &Alphabet,
    states: &[String],
    initials: &[String],
    finals: &BTreeMap<String, String>,
    transitions: &[TransitionJson],
) -> Result<Transducer, FormatError> {
    let mut triples: Vec<Transition> = Vec::new();
    let mut outputs: BTreeMap<Transition, Word> = BTreeMap::new();
    for tj in transitions {
        let sym = one_char(&tj.input)?;
        let tr = (tj.from.clone(), sym, tj.to.clone());
        if outputs.insert(tr.clone(), tj.out.clone()).is_some() {
            return Err(FormatError::Invalid(format!(
                "duplicate transition from {:?} on {:?} to {:?}",
                tj.from, tj.input, tj.to
            )));
        }
        triples.push(tr);
    }
    let input = Nfa::new(
        input_alphabet.clone(),
        states.iter().cloned(),
        initials.iter().cloned(),
        finals.keys().cloned(),
        triples,
    )?;
    let terminals: BTreeMap<StateId, Word> =
        finals.iter().map(|(q, w)| (q.clone(), w.clone())).collect();
    Ok(Transducer::new(
        input,
        output_alphabet.clone(),
        outputs,
        terminals,
    )?)
}

/// Parses and validates a specification file.
pub fn parse_spec(json: &str) -> Result<LoadedSpec, FormatError> {
    let file: SpecFile = serde_json::from_str(json)?;
    if file.format != FORMAT_VERSION {
        return Err(FormatError::Version(file.format));
    }
    let input_alphabet = parse_alphabet(&file.input_alphabet)?;
    let output_alphabet = parse_alphabet(&file.output_alphabet)?;
    match (&file.parts, &file.general) {
        (Some(parts), None) => {
            let mut named = Vec::new();
            for part in parts {
                let t = build_transducer(
                    &input_alphabet,
                    &output_alphabet,
                    &part.states,
                    std::slice::from_ref(&part.initial),
                    &part.finals,
                    &part.transitions,
                )
                .map_err(|e| FormatError::BadPart {
                    name: part.name.clone(),
                    problem: e.to_string(),
                })?;
                let seq =
                    SequentialTransducer::try_from(t).map_err(|_| FormatError::BadPart {
                        name: part.name.clone(),
                        problem: "not sequential".to_string(),
                    })?;
                named.push((part.name.clone(), seq));
            }
            Ok(LoadedSpec::Parts(MultiSequentialTransducer::new(named)?))
        }
        (None, Some(general)) => Ok(LoadedSpec::General(build_transducer(
            &input_alphabet,
            &output_alphabet,
            &general.states,
            &general.initials,
            &general.finals,
            &general.transitions,
        )?)),
        (Some(_), Some(_)) => Err(FormatError::Invalid(
            "a file carries either parts or a general block, not both".to_string(),
        )),
        (None, None) => Err(FormatError::Invalid(
            "a file needs a parts list or a general block".to_string(),
        )),
    }
}

fn alphabet_json(a: &Alphabet) -> Vec<String> {
    a.symbols().iter().map(|c| c.to_string()).collect()
}

fn transitions_json(t: &Transducer) -> Vec<TransitionJson> {
    t.input_automaton()
        .transitions()
        .iter()
        .map(|tr| TransitionJson {
            from: tr.0.clone(),
            input: tr.1.to_string(),
            out: t.output(tr).to_string(),
            to: tr.2.clone(),
        })
        .collect()
}

fn part_json(name: &str, t: &SequentialTransducer) -> PartJson {
    PartJson {
        name: name.to_string(),
        states: t.input_automaton().states().iter().cloned().collect(),
        initial: t.initial().cloned().unwrap_or_default(),
        finals: t.terminals().clone(),
        transitions: transitions_json(t.as_transducer()),
    }
}

/// Canonical file for a multi-sequential specification.
pub fn spec_file_of_multi(t: &MultiSequentialTransducer) -> SpecFile {
    SpecFile {
        format: FORMAT_VERSION,
        input_alphabet: alphabet_json(t.input_alphabet()),
        output_alphabet: alphabet_json(t.output_alphabet()),
        parts: Some(
            (0..t.part_count())
                .map(|i| part_json(t.part_name(i), t.part(i)))
                .collect(),
        ),
        general: None,
    }
}

/// Canonical single-part file for a sequential transducer (realisers).
pub fn spec_file_of_sequential(name: &str, t: &SequentialTransducer) -> SpecFile {
    SpecFile {
        format: FORMAT_VERSION,
        input_alphabet: alphabet_json(t.input_alphabet()),
        output_alphabet: alphabet_json(t.output_alphabet()),
        parts: Some(vec![part_json(name, t)]),
        general: None,
    }
}

/// Canonical file for a general transducer.
pub fn spec_file_of_general(t: &Transducer) -> SpecFile {
    SpecFile {
        format: FORMAT_VERSION,
        input_alphabet: alphabet_json(t.input_alphabet()),
        output_alphabet: alphabet_json(t.output_alphabet()),
        parts: None,
        general: Some(GeneralJson {
            states: t.input_automaton().states().iter().cloned().collect(),
            initials: t.input_automaton().initials().iter().cloned().collect(),
            finals: t.terminals().clone(),
            transitions: transitions_json(t),
        }),
    }
}

/// Canonical pretty-printed rendering with a trailing newline.
pub fn print_spec(file: &SpecFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("spec files serialise");
    s.push('\n');
    s
}

/// Deterministic-automaton input for the generator families.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DfaFile {
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub finals: Vec<String>,
    pub transitions: Vec<DfaTransitionJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DfaTransitionJson {
    pub from: String,
    #[serde(rename = "in")]
    pub input: String,
    pub to: String,
}

pub fn parse_dfa(json: &str) -> Result<Nfa, FormatError> {
    let file: DfaFile = serde_json::from_str(json)?;
    let alphabet = parse_alphabet(&file.alphabet)?;
    let mut triples: Vec<Transition> = Vec::new();
    for tj in &file.transitions {
        triples.push((tj.from.clone(), one_char(&tj.input)?, tj.to.clone()));
    }
    let nfa = Nfa::new(
        alphabet,
        file.states.iter().cloned(),
        [file.initial.clone()],
        file.finals.iter().cloned(),
        triples,
    )?;
    if !nfa.is_deterministic() {
        return Err(FormatError::Invalid(
            "the automaton is not deterministic".to_string(),
        ));
    }
    Ok(nfa)
}
