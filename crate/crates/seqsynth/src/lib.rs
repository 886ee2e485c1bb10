//! Realisability checking and synthesis for specifications given as finite
//! unions of sequential transducers.
//!
//! The crate decides whether such a union can be implemented by a single
//! input-deterministic transducer, both in the letter-to-letter (synchronous)
//! and in the unrestricted (asynchronous) setting. When the answer is yes it
//! synthesises a realiser from a winning strategy of a delay-bounded safety
//! game; when the answer is no it produces an independently checkable
//! certificate (a critical-prefix record or a witness tree). The asynchronous
//! direction is exact only up to user-supplied search bounds and may report
//! `Unknown`.

pub mod alphabet;
pub mod asynchronous;
pub mod automaton;
pub mod corpus;
pub mod delay;
pub mod format;
pub mod game;
pub mod synchronous;
pub mod transducer;
pub mod verify;
pub mod words;

pub use alphabet::Alphabet;
pub use automaton::{Nfa, StateId, Word};
pub use transducer::{MultiSequentialTransducer, SequentialTransducer, Transducer};
