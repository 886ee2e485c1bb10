//! The delay-bounded synthesis safety game.
//!
//! Vertices track the set of input-automaton states reachable on the input so
//! far (`C`) together with the runs the protagonist still follows and their
//! pending outputs (`D`). The antagonist picks input symbols; the protagonist
//! answers by keeping a subset of the continued runs, emitting their longest
//! common prefix. She loses at any vertex where the input is accepted by the
//! specification but by none of her kept runs. Winning positionally yields a
//! sequential realiser.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, Nfa, StateId, Word};
use crate::delay::{candidates, flush, Candidate, DelayMap, DelayError};
use crate::transducer::{
    MultiSequentialTransducer, SequentialTransducer, Transducer, TransducerError,
};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("game construction exceeded the budget: {0}")]
    BudgetExceeded(String),
    #[error("the strategy does not win from the initial vertex")]
    NotWinning,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Delay(#[from] DelayError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
}

/// A vertex owned by the antagonist: reachable states plus kept delays.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdamVertex {
    pub states: BTreeSet<StateId>,
    pub delays: DelayMap,
}

impl AdamVertex {
    pub fn label(&self) -> String {
        let mut c = String::from("{");
        for (i, q) in self.states.iter().enumerate() {
            if i > 0 {
                c.push(',');
            }
            c.push_str(q);
        }
        c.push('}');
        format!("C={} D=[{}]", c, self.delays.render())
    }
}

/// One answer of the protagonist: the kept candidates, the output word their
/// flush emits, and the successor vertex.
#[derive(Debug, Clone)]
pub struct EveMove {
    pub kept: BTreeSet<Candidate>,
    pub output: Word,
    pub target: usize,
}

#[derive(Debug, Clone)]
struct EveVertexData {
    adam: usize,
    symbol: char,
    moves: Vec<EveMove>,
}

#[derive(Debug, Clone)]
pub struct GameGraph {
    bound: usize,
    spec: Transducer,
    /// Part index per state when built from a multi-sequential union.
    part_of: BTreeMap<StateId, usize>,
    adam: Vec<AdamVertex>,
    adam_edges: Vec<Vec<(char, usize)>>,
    eve: Vec<EveVertexData>,
    unsafe_flags: Vec<bool>,
    initial: usize,
}

/// Positional strategy: one chosen move per protagonist vertex of the
/// winning region.
#[derive(Debug, Clone)]
pub struct Strategy {
    moves: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct GameStats {
    pub bound: usize,
    pub vertices: usize,
    pub adam_vertices: usize,
    pub eve_vertices: usize,
    pub edges: usize,
    pub unsafe_count: usize,
    pub eve_wins: bool,
}

/// Result of the ascending-bound synthesis loop.
#[derive(Debug, Clone)]
pub enum KSearch {
    Won { k: usize, realiser: SequentialTransducer },
    NotWonUpTo(usize),
}

/// Default cap on the number of antagonist vertices explored per game.
pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;

/// Builds the bound-`k` game for a multi-sequential union. The protagonist's
/// answers are enumerated part-wise: she keeps or drops whole parts, which is
/// exhaustive here because each part contributes at most one run.
pub fn build_game(
    t: &MultiSequentialTransducer,
    k: usize,
    cap: usize,
) -> Result<GameGraph, GameError> {
    let part_of: BTreeMap<StateId, usize> = t
        .parts()
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            p.input_automaton()
                .states()
                .iter()
                .map(move |q| (q.clone(), i))
        })
        .collect();
    let g = build_game_core(t.union(), part_of, k, cap)?;
    debug_assert!(multi_sequential_shape_ok(&g));
    assert!(
        vertex_bound_ok(&g, t),
        "reachable vertex count exceeds the structural bound"
    );
    Ok(g)
}

/// Builds the game for an arbitrary transducer. Each candidate run forms its
/// own keep/drop group, so the move sets can be exponential in the number of
/// simultaneously live runs.
pub fn build_game_general(t: &Transducer, k: usize, cap: usize) -> Result<GameGraph, GameError> {
    build_game_core(t.clone(), BTreeMap::new(), k, cap)
}

fn group_key(part_of: &BTreeMap<StateId, usize>, c: &Candidate, index: usize) -> usize {
    match part_of.get(&c.source.state) {
        Some(&p) => p,
        None => index,
    }
}

fn build_game_core(
    spec: Transducer,
    part_of: BTreeMap<StateId, usize>,
    k: usize,
    cap: usize,
) -> Result<GameGraph, GameError> {
    let finals = spec.input_automaton().finals().clone();
    let initial_vertex = AdamVertex {
        states: spec.input_automaton().initials().clone(),
        delays: DelayMap::initial(&spec),
    };
    let mut adam: Vec<AdamVertex> = vec![initial_vertex.clone()];
    let mut ids: HashMap<AdamVertex, usize> = HashMap::from([(initial_vertex, 0)]);
    let mut adam_edges: Vec<Vec<(char, usize)>> = vec![Vec::new()];
    let mut eve: Vec<EveVertexData> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::from([0]);

    while let Some(a) = queue.pop_front() {
        let vertex = adam[a].clone();
        for &sym in spec.input_alphabet().symbols().to_vec().iter() {
            let cs = candidates(&spec, &vertex.delays, sym)?;
            let ordered: Vec<Candidate> = cs.into_iter().collect();
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, c) in ordered.iter().enumerate() {
                groups.entry(group_key(&part_of, c, i)).or_default().push(i);
            }
            let group_list: Vec<&Vec<usize>> = groups.values().collect();
            if group_list.len() > 20 {
                return Err(GameError::BudgetExceeded(format!(
                    "{} simultaneous candidate groups",
                    group_list.len()
                )));
            }
            let next_states = spec.input_automaton().step(&vertex.states, sym);
            let mut moves: Vec<EveMove> = Vec::new();
            for mask in 0u32..(1u32 << group_list.len()) {
                let mut kept: BTreeSet<Candidate> = BTreeSet::new();
                for (g, members) in group_list.iter().enumerate() {
                    if mask & (1 << g) != 0 {
                        for &i in members.iter() {
                            kept.insert(ordered[i].clone());
                        }
                    }
                }
                let (output, next_delays) = flush(&kept);
                if next_delays.max_pending_len() > k {
                    continue;
                }
                let successor = AdamVertex { states: next_states.clone(), delays: next_delays };
                let target = match ids.get(&successor) {
                    Some(&id) => id,
                    None => {
                        let id = adam.len();
                        if id >= cap {
                            return Err(GameError::BudgetExceeded(format!(
                                "more than {cap} vertices"
                            )));
                        }
                        ids.insert(successor.clone(), id);
                        adam.push(successor);
                        adam_edges.push(Vec::new());
                        queue.push_back(id);
                        id
                    }
                };
                moves.push(EveMove { kept, output, target });
            }
            let eve_id = eve.len();
            eve.push(EveVertexData { adam: a, symbol: sym, moves });
            adam_edges[a].push((sym, eve_id));
        }
    }

    let unsafe_flags = adam
        .iter()
        .map(|v| {
            let accepted = v.states.iter().any(|q| finals.contains(q));
            let covered = v.delays.live().any(|q| finals.contains(q));
            accepted && !covered
        })
        .collect();

    let g = GameGraph {
        bound: k,
        spec,
        part_of,
        adam,
        adam_edges,
        eve,
        unsafe_flags,
        initial: 0,
    };
    debug_assert!(g
        .adam
        .iter()
        .all(|v| v.delays.live().all(|q| v.states.contains(q))));
    Ok(g)
}

/// Every reachable vertex of a multi-sequential game has at most one live
/// state per part, each with a single pending word.
pub fn multi_sequential_shape_ok(g: &GameGraph) -> bool {
    g.adam.iter().all(|v| {
        let mut seen_parts = BTreeSet::new();
        v.delays.entries().iter().all(|(q, set)| {
            set.len() == 1
                && match g.part_of.get(q) {
                    Some(&p) => seen_parts.insert(p),
                    None => true,
                }
        })
    })
}

/// Structural bound on the number of antagonist vertices:
/// `2^m * (m * |Γ|^(k+1))^n` for an `n`-part union with `m` states. The
/// initial vertex exists even for the machine with no states, hence the
/// floor of one.
pub fn vertex_bound_ok(g: &GameGraph, t: &MultiSequentialTransducer) -> bool {
    let m = t.state_count();
    let n = t.part_count();
    let gamma = t.output_alphabet().len();
    let bound = BigUint::from(2usize).pow(m as u32)
        * (BigUint::from(m) * BigUint::from(gamma).pow(g.bound as u32 + 1)).pow(n as u32);
    BigUint::from(g.adam.len()) <= bound.max(BigUint::from(1usize))
}

impl GameGraph {
    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn adam_vertices(&self) -> &[AdamVertex] {
        &self.adam
    }

    pub fn is_unsafe(&self, adam_id: usize) -> bool {
        self.unsafe_flags[adam_id]
    }

    pub fn eve_count(&self) -> usize {
        self.eve.len()
    }

    fn edge_count(&self) -> usize {
        self.adam_edges.iter().map(|es| es.len()).sum::<usize>()
            + self.eve.iter().map(|e| e.moves.len()).sum::<usize>()
    }
}

struct Attractor {
    losing_adam: Vec<bool>,
    losing_eve: Vec<bool>,
}

/// Backward attractor of the antagonist to the unsafe vertices.
fn attractor(g: &GameGraph) -> Attractor {
    let mut losing_adam = g.unsafe_flags.clone();
    let mut losing_eve = vec![false; g.eve.len()];
    // Remaining moves of each protagonist vertex that still reach a
    // non-losing antagonist vertex.
    let mut remaining: Vec<usize> = g.eve.iter().map(|e| e.moves.len()).collect();
    let mut rev_moves: Vec<Vec<usize>> = vec![Vec::new(); g.adam.len()];
    for (eid, e) in g.eve.iter().enumerate() {
        for mv in &e.moves {
            rev_moves[mv.target].push(eid);
        }
    }
    let mut queue: VecDeque<usize> = (0..g.adam.len()).filter(|&a| losing_adam[a]).collect();
    while let Some(a) = queue.pop_front() {
        for &eid in &rev_moves[a] {
            if losing_eve[eid] {
                continue;
            }
            // One reverse entry per move into `a`.
            let hits = g.eve[eid].moves.iter().filter(|mv| mv.target == a).count();
            remaining[eid] = remaining[eid].saturating_sub(hits);
            if remaining[eid] == 0 {
                losing_eve[eid] = true;
                let owner = g.eve[eid].adam;
                if !losing_adam[owner] {
                    losing_adam[owner] = true;
                    queue.push_back(owner);
                }
            }
        }
    }
    Attractor { losing_adam, losing_eve }
}

/// Solves the safety game. When the protagonist wins from the initial vertex,
/// also returns a positional strategy over her whole winning region,
/// preferring larger kept sets and then the least canonical successor.
pub fn solve_safety(g: &GameGraph) -> (bool, Option<Strategy>) {
    let att = attractor(g);
    if att.losing_adam[g.initial] {
        return (false, None);
    }
    let mut moves = BTreeMap::new();
    for (eid, e) in g.eve.iter().enumerate() {
        if att.losing_eve[eid] {
            continue;
        }
        let best = e
            .moves
            .iter()
            .enumerate()
            .filter(|(_, mv)| !att.losing_adam[mv.target])
            .min_by(|(_, x), (_, y)| {
                y.kept
                    .len()
                    .cmp(&x.kept.len())
                    .then_with(|| g.adam[x.target].cmp(&g.adam[y.target]))
                    .then_with(|| x.kept.cmp(&y.kept))
            });
        if let Some((idx, _)) = best {
            moves.insert(eid, idx);
        }
    }
    (true, Some(Strategy { moves }))
}

/// Reconstructs a sequential realiser from a winning strategy: states are the
/// antagonist vertices visited under the strategy, transitions emit the flush
/// output of the chosen move, and a final vertex outputs the pending word of
/// an accepting kept run followed by its terminal output.
pub fn extract_realiser(
    g: &GameGraph,
    strategy: &Strategy,
) -> Result<SequentialTransducer, GameError> {
    let att = attractor(g);
    if att.losing_adam[g.initial] {
        return Err(GameError::NotWinning);
    }
    let finals = g.spec.input_automaton().finals();
    let mut names: BTreeMap<usize, StateId> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::from([g.initial]);
    names.insert(g.initial, "q0".to_string());
    order.push(g.initial);
    let mut transitions: Vec<(StateId, char, StateId)> = Vec::new();
    let mut outputs: BTreeMap<(StateId, char, StateId), Word> = BTreeMap::new();
    while let Some(a) = queue.pop_front() {
        for &(sym, eid) in &g.adam_edges[a] {
            let &move_idx = strategy.moves.get(&eid).ok_or(GameError::NotWinning)?;
            let mv = &g.eve[eid].moves[move_idx];
            if att.losing_adam[mv.target] {
                return Err(GameError::NotWinning);
            }
            if !names.contains_key(&mv.target) {
                let name = format!("q{}", names.len());
                names.insert(mv.target, name);
                order.push(mv.target);
                queue.push_back(mv.target);
            }
            let tr = (names[&a].clone(), sym, names[&mv.target].clone());
            outputs.insert(tr.clone(), mv.output.clone());
            transitions.push(tr);
        }
    }
    let mut final_states: Vec<StateId> = Vec::new();
    let mut terminals: BTreeMap<StateId, Word> = BTreeMap::new();
    for &a in &order {
        let vertex = &g.adam[a];
        if !vertex.states.iter().any(|q| finals.contains(q)) {
            continue;
        }
        // Pick the accepting kept run of the least part.
        let chosen = vertex
            .delays
            .entries()
            .iter()
            .filter(|(q, _)| finals.contains(*q))
            .min_by_key(|(q, _)| (g.part_of.get(*q).copied().unwrap_or(0), (*q).clone()));
        let (q, pendings) = chosen.ok_or(GameError::NotWinning)?;
        let pending = pendings.iter().next().expect("live state has a pending word");
        final_states.push(names[&a].clone());
        terminals.insert(names[&a].clone(), format!("{pending}{}", g.spec.terminal(q)));
    }
    let input = Nfa::new(
        g.spec.input_alphabet().clone(),
        names.values().cloned(),
        [names[&g.initial].clone()],
        final_states,
        transitions,
    )?;
    let t = Transducer::new(input, g.spec.output_alphabet().clone(), outputs, terminals)?;
    Ok(SequentialTransducer::try_from(t.trim())?)
}

/// Solves the game for ascending bounds and returns the first winning bound
/// together with its extracted realiser.
pub fn iterate_k(
    t: &MultiSequentialTransducer,
    k_max: usize,
    cap: usize,
) -> Result<KSearch, GameError> {
    for k in 0..=k_max {
        let g = build_game(t, k, cap)?;
        let (wins, strategy) = solve_safety(&g);
        if wins {
            let realiser = extract_realiser(&g, &strategy.expect("winning games have a strategy"))?;
            return Ok(KSearch::Won { k, realiser });
        }
    }
    Ok(KSearch::NotWonUpTo(k_max))
}

pub fn stats(g: &GameGraph) -> GameStats {
    let (eve_wins, _) = solve_safety(g);
    GameStats {
        bound: g.bound,
        vertices: g.adam.len() + g.eve.len(),
        adam_vertices: g.adam.len(),
        eve_vertices: g.eve.len(),
        edges: g.edge_count(),
        unsafe_count: g.unsafe_flags.iter().filter(|&&u| u).count(),
        eve_wins,
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Deterministic DOT rendering: antagonist vertices as boxes labelled with
/// `(C, D)`, protagonist vertices as circles labelled with the picked symbol,
/// unsafe vertices bold.
pub fn export_dot(g: &GameGraph) -> String {
    let mut out = String::from("digraph synthesis_game {\n  rankdir=LR;\n");
    for (i, v) in g.adam.iter().enumerate() {
        let style = if g.unsafe_flags[i] { ", style=bold" } else { "" };
        out.push_str(&format!(
            "  a{i} [shape=box{style}, label=\"{}\"];\n",
            dot_escape(&v.label())
        ));
    }
    for (i, e) in g.eve.iter().enumerate() {
        out.push_str(&format!("  e{i} [shape=circle, label=\"{}\"];\n", e.symbol));
    }
    for (a, edges) in g.adam_edges.iter().enumerate() {
        for &(sym, eid) in edges {
            out.push_str(&format!("  a{a} -> e{eid} [label=\"{sym}\"];\n"));
        }
    }
    for (eid, e) in g.eve.iter().enumerate() {
        for mv in &e.moves {
            let mut kept = String::from("{");
            for (i, c) in mv.kept.iter().enumerate() {
                if i > 0 {
                    kept.push(',');
                }
                kept.push_str(&c.target);
            }
            kept.push('}');
            let output = if mv.output.is_empty() { "ε" } else { &mv.output };
            out.push_str(&format!(
                "  e{eid} -> a{} [label=\"{}|{}\"];\n",
                mv.target,
                dot_escape(&kept),
                dot_escape(output)
            ));
        }
    }
    out.push_str("}\n");
    out
}
