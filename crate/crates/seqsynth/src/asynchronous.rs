//! Asynchronous realisability: critical-loop detection, the recursive
//! subset characterisation, the structural delay bound, bounded witness-tree
//! search, and the combined three-valued decision procedure.
//!
//! Unrealisability is established by a witness tree whose every condition can
//! be re-checked independently; realisability by a winning bound of the
//! synthesis game. Both searches are bounded, so the decision may also come
//! back `Unknown` with the bounds that were exhausted.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, StateId, Word};
use crate::delay::delay_pair;
use crate::game::{iterate_k, GameError, KSearch};
use crate::transducer::{MultiSequentialTransducer, SequentialTransducer, TransducerError};
use crate::words::{char_len, is_prefix, mismatch, shortlex};

#[derive(Debug, Error)]
pub enum AsyncError {
    #[error("search exceeded the budget: {0}")]
    BudgetExceeded(String),
    #[error("a critical loop needs at least two looping parts")]
    InvalidLoop,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// The unique run data of one part inside a loop: output on the prefix,
/// output on the cycle, and the state the cycle returns to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopRun {
    pub alpha: Word,
    pub beta: Word,
    pub state: StateId,
}

/// A prefix `u` and cycle `v` on which every surviving part loops while at
/// least two of them drift apart in delay. Iterating the cycle then makes the
/// delays grow without bound.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalLoop {
    pub prefix: Word,
    pub cycle: Word,
    /// Parts with a run on the prefix (all others have none).
    pub parts: Vec<usize>,
    pub part_names: Vec<String>,
    pub runs: BTreeMap<usize, LoopRun>,
}

/// Checks the three defining conditions of a critical loop by re-running
/// every part from scratch, including delay divergence when the cycle is
/// iterated a second time.
pub fn verify_critical_loop(t: &MultiSequentialTransducer, lp: &CriticalLoop) -> bool {
    let member: BTreeSet<usize> = lp.parts.iter().cloned().collect();
    for (i, part) in t.parts().iter().enumerate() {
        match part.run(&lp.prefix) {
            None => {
                if member.contains(&i) {
                    return false;
                }
            }
            Some((state, alpha)) => {
                if !member.contains(&i) {
                    return false;
                }
                let Some(run) = lp.runs.get(&i) else { return false };
                if run.state != state || run.alpha != alpha {
                    return false;
                }
                match part.run_from(&state, &lp.cycle) {
                    Some((back, beta)) if back == state && beta == run.beta => {}
                    _ => return false,
                }
            }
        }
    }
    let mut diverges = false;
    for &i in &lp.parts {
        for &j in &lp.parts {
            if i >= j {
                continue;
            }
            let (ri, rj) = (&lp.runs[&i], &lp.runs[&j]);
            let before = delay_pair(&ri.alpha, &rj.alpha);
            let once = delay_pair(
                &format!("{}{}", ri.alpha, ri.beta),
                &format!("{}{}", rj.alpha, rj.beta),
            );
            if before != once {
                let twice = delay_pair(
                    &format!("{}{}{}", ri.alpha, ri.beta, ri.beta),
                    &format!("{}{}{}", rj.alpha, rj.beta, rj.beta),
                );
                if once != twice {
                    diverges = true;
                }
            }
        }
    }
    diverges
}

/// Enumerates critical loops with `|u| <= max_u` and `1 <= |v| <= max_v`.
/// The product of the surviving parts is explored breadth-first; each product
/// state is visited once, with the shortlex-least prefix reaching it, and the
/// cycles at that state are enumerated in shortlex order.
pub fn find_critical_loops(
    t: &MultiSequentialTransducer,
    max_u: usize,
    max_v: usize,
    budget: usize,
) -> Result<Vec<CriticalLoop>, AsyncError> {
    let mut loops = Vec::new();
    let mut steps = 0usize;
    type Config = Vec<Option<(StateId, Word)>>;
    let start: Config = t
        .parts()
        .iter()
        .map(|p| p.initial().map(|q| (q.clone(), Word::new())))
        .collect();
    let key_of = |c: &Config| -> Vec<Option<StateId>> {
        c.iter().map(|e| e.as_ref().map(|(q, _)| q.clone())).collect()
    };
    let mut seen: BTreeSet<Vec<Option<StateId>>> = BTreeSet::new();
    let mut queue: VecDeque<(Config, Word)> = VecDeque::new();
    seen.insert(key_of(&start));
    queue.push_back((start, Word::new()));
    while let Some((config, u)) = queue.pop_front() {
        let alive: Vec<(usize, &StateId, &Word)> = config
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|(q, a)| (i, q, a)))
            .collect();
        if alive.len() >= 2 {
            'cycles: for v in shortlex(t.input_alphabet(), max_v) {
                if v.is_empty() {
                    continue;
                }
                steps += 1;
                if steps > budget {
                    return Err(AsyncError::BudgetExceeded(format!(
                        "{budget} loop-search steps"
                    )));
                }
                let mut runs: BTreeMap<usize, LoopRun> = BTreeMap::new();
                for &(i, q, alpha) in &alive {
                    match t.part(i).run_from(q, &v) {
                        Some((back, beta)) if &back == q => {
                            runs.insert(
                                i,
                                LoopRun { alpha: alpha.clone(), beta, state: q.clone() },
                            );
                        }
                        _ => continue 'cycles,
                    }
                }
                let diverging = alive.iter().any(|&(i, _, _)| {
                    alive.iter().any(|&(j, _, _)| {
                        i < j && {
                            let (ri, rj) = (&runs[&i], &runs[&j]);
                            delay_pair(&ri.alpha, &rj.alpha)
                                != delay_pair(
                                    &format!("{}{}", ri.alpha, ri.beta),
                                    &format!("{}{}", rj.alpha, rj.beta),
                                )
                        }
                    })
                });
                if diverging {
                    let lp = CriticalLoop {
                        prefix: u.clone(),
                        cycle: v,
                        parts: alive.iter().map(|&(i, _, _)| i).collect(),
                        part_names: alive
                            .iter()
                            .map(|&(i, _, _)| t.part_name(i).to_string())
                            .collect(),
                        runs,
                    };
                    debug_assert!(verify_critical_loop(t, &lp));
                    loops.push(lp);
                }
            }
        }
        if char_len(&u) >= max_u {
            continue;
        }
        for &sym in t.input_alphabet().symbols() {
            let next: Config = config
                .iter()
                .enumerate()
                .map(|(i, entry)| {
                    entry.as_ref().and_then(|(q, a)| {
                        t.part(i)
                            .run_from(q, &sym.to_string())
                            .map(|(q2, out)| (q2, format!("{a}{out}")))
                    })
                })
                .collect();
            if next.iter().all(|e| e.is_none()) {
                continue;
            }
            if seen.insert(key_of(&next)) {
                let mut w = u.clone();
                w.push(sym);
                queue.push_back((next, w));
            }
        }
    }
    Ok(loops)
}

/// Bounds of the witness search.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessBounds {
    pub max_u: usize,
    pub max_v: usize,
    pub max_nodes: usize,
    pub budget: usize,
}

impl Default for WitnessBounds {
    fn default() -> Self {
        WitnessBounds { max_u: 4, max_v: 4, max_nodes: 7, budget: 500_000 }
    }
}

/// Budgets of the decision procedure and its recursive sub-calls.
#[derive(Debug, Clone)]
pub struct DecideBudget {
    pub k_max: usize,
    pub witness: WitnessBounds,
    pub vertex_cap: usize,
}

impl DecideBudget {
    pub fn halved(&self) -> DecideBudget {
        DecideBudget {
            k_max: self.k_max / 2,
            witness: WitnessBounds {
                max_u: (self.witness.max_u / 2).max(1),
                max_v: (self.witness.max_v / 2).max(1),
                max_nodes: (self.witness.max_nodes / 2).max(1),
                budget: (self.witness.budget / 2).max(1),
            },
            vertex_cap: (self.vertex_cap / 2).max(1),
        }
    }
}

/// Why one candidate subset fails the characterisation at a critical loop.
#[derive(Debug, Clone, Serialize)]
pub struct CharFailure {
    pub parts: Vec<String>,
    /// Violated requirement: 1 delay stability, 2 residual-domain coverage,
    /// 3 recursive realisability.
    pub condition: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Word>,
}

#[derive(Debug)]
pub enum CharOutcome {
    ValidSubset(BTreeSet<usize>),
    NoValidSubset(Vec<CharFailure>),
    Unknown,
}

/// Searches a strict subset of the looping parts whose delays are stable
/// across the cycle, whose residual domains cover the whole residual domain,
/// and whose residual union is recursively realisable. The recursion reuses
/// the bounded decision procedure with halved budgets, memoised on the
/// re-rooted states and pending words.
pub fn check_characterisation(
    t: &MultiSequentialTransducer,
    lp: &CriticalLoop,
    budget: &DecideBudget,
) -> Result<CharOutcome, AsyncError> {
    if lp.parts.len() < 2 {
        return Err(AsyncError::InvalidLoop);
    }
    let ell = crate::delay::lcp(lp.parts.iter().map(|i| lp.runs[i].alpha.as_str()))
        .expect("loop has parts");
    let mut subsets: Vec<BTreeSet<usize>> = Vec::new();
    for mask in 1u32..(1u32 << lp.parts.len()) {
        let subset: BTreeSet<usize> = lp
            .parts
            .iter()
            .enumerate()
            .filter(|(b, _)| mask & (1 << b) != 0)
            .map(|(_, &i)| i)
            .collect();
        if subset.len() == lp.parts.len() {
            continue;
        }
        subsets.push(subset);
    }
    subsets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    let sub_budget = budget.halved();
    let mut memo: HashMap<Vec<(usize, StateId, Word)>, AsyncVerdictKind> = HashMap::new();
    let mut failures: Vec<CharFailure> = Vec::new();
    let mut saw_unknown = false;
    for subset in subsets {
        let names: Vec<String> = subset.iter().map(|&i| t.part_name(i).to_string()).collect();
        let unstable = subset.iter().any(|&i| {
            subset.iter().any(|&j| {
                i < j && {
                    let (ri, rj) = (&lp.runs[&i], &lp.runs[&j]);
                    delay_pair(&ri.alpha, &rj.alpha)
                        != delay_pair(
                            &format!("{}{}", ri.alpha, ri.beta),
                            &format!("{}{}", rj.alpha, rj.beta),
                        )
                }
            })
        });
        if unstable {
            failures.push(CharFailure { parts: names, condition: 1, counterexample: None });
            continue;
        }
        let whole_at: BTreeMap<usize, StateId> = lp
            .parts
            .iter()
            .map(|&i| (i, lp.runs[&i].state.clone()))
            .collect();
        let subset_at: BTreeMap<usize, StateId> = subset
            .iter()
            .map(|&i| (i, lp.runs[&i].state.clone()))
            .collect();
        let covered = t.residual_domain(&subset_at);
        let whole = t.residual_domain(&whole_at);
        if let Some(word) = covered.includes(&whole).expect("same alphabet") {
            failures.push(CharFailure {
                parts: names,
                condition: 2,
                counterexample: Some(word),
            });
            continue;
        }
        // Residual union of the kept parts, each still owing what the common
        // safe output has not covered.
        let memo_key: Vec<(usize, StateId, Word)> = subset
            .iter()
            .map(|&i| {
                let pending = lp.runs[&i].alpha[ell.len()..].to_string();
                (i, lp.runs[&i].state.clone(), pending)
            })
            .collect();
        let verdict = match memo.get(&memo_key) {
            Some(v) => v.clone(),
            None => {
                let mut parts = Vec::new();
                for (i, state, pending) in &memo_key {
                    let residual = t.part(*i).residual_part(state, pending)?.trim();
                    parts.push((t.part_name(*i).to_string(), residual));
                }
                let residual_union = MultiSequentialTransducer::new(parts)?;
                let v = AsyncVerdictKind::from(&decide(
                    &residual_union,
                    sub_budget.k_max,
                    &sub_budget.witness,
                    sub_budget.vertex_cap,
                ));
                memo.insert(memo_key.clone(), v.clone());
                v
            }
        };
        match verdict {
            AsyncVerdictKind::Realisable => return Ok(CharOutcome::ValidSubset(subset)),
            AsyncVerdictKind::Unrealisable => {
                failures.push(CharFailure { parts: names, condition: 3, counterexample: None });
            }
            AsyncVerdictKind::Unknown => {
                saw_unknown = true;
                failures.push(CharFailure { parts: names, condition: 3, counterexample: None });
            }
        }
    }
    if saw_unknown {
        Ok(CharOutcome::Unknown)
    } else {
        Ok(CharOutcome::NoValidSubset(failures))
    }
}

/// Delay bound sufficient for completeness of the game search:
/// `L * (6M)^(n^2)` for `n` parts of at most `M` states each and longest
/// transition output `L`.
pub fn theoretical_k(t: &MultiSequentialTransducer) -> BigUint {
    let l = BigUint::from(t.max_output_len());
    let m = BigUint::from(t.max_part_states());
    let n = t.part_count() as u32;
    l * (BigUint::from(6u32) * m).pow(n * n)
}

/// One node of an unrealisability witness: a prefix and cycle, the parts it
/// talks about, split into those that died on the prefix and those that loop
/// on the cycle.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessNode {
    pub prefix: Word,
    pub cycle: Word,
    pub parts: BTreeSet<usize>,
    pub dead_parts: BTreeSet<usize>,
    pub loop_parts: BTreeSet<usize>,
    pub runs: BTreeMap<usize, LoopRun>,
    /// For leaves: a continuation in the residual domain that no listed part
    /// accepts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf_witness: Option<Word>,
    pub children: Vec<WitnessNode>,
}

impl WitnessNode {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessTree {
    pub part_names: Vec<String>,
    pub root: WitnessNode,
}

impl WitnessTree {
    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }
}

#[derive(Debug, Clone)]
struct Skeleton {
    parts: BTreeSet<usize>,
    children: Vec<Skeleton>,
}

impl Skeleton {
    fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }
}

fn subsets_of(parts: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let v: Vec<usize> = parts.iter().cloned().collect();
    (0u32..(1u32 << v.len()))
        .map(|mask| {
            v.iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &i)| i)
                .collect()
        })
        .collect()
}

/// All partitions of `set` into at least two non-empty blocks.
fn partitions(set: &BTreeSet<usize>) -> Vec<Vec<BTreeSet<usize>>> {
    let items: Vec<usize> = set.iter().cloned().collect();
    let mut result: Vec<Vec<BTreeSet<usize>>> = Vec::new();
    fn go(
        items: &[usize],
        acc: &mut Vec<BTreeSet<usize>>,
        result: &mut Vec<Vec<BTreeSet<usize>>>,
    ) {
        match items.first() {
            None => {
                if acc.len() >= 2 {
                    let mut sorted = acc.clone();
                    sorted.sort();
                    result.push(sorted);
                }
            }
            Some(&first) => {
                let rest = &items[1..];
                for b in 0..acc.len() {
                    acc[b].insert(first);
                    go(rest, acc, result);
                    acc[b].remove(&first);
                }
                acc.push(BTreeSet::from([first]));
                go(rest, acc, result);
                acc.pop();
            }
        }
    }
    go(&items, &mut Vec::new(), &mut result);
    result.sort();
    result
}

/// All skeletons rooted at `parts` with at most `max_nodes` nodes, in
/// ascending node count. A node either is a leaf or splits some subset of at
/// least two of its parts into at least two child subtrees.
fn skeletons(parts: &BTreeSet<usize>, max_nodes: usize) -> Vec<Skeleton> {
    let mut result = vec![Skeleton { parts: parts.clone(), children: Vec::new() }];
    if max_nodes >= 3 {
        for loop_set in subsets_of(parts) {
            if loop_set.len() < 2 {
                continue;
            }
            for blocks in partitions(&loop_set) {
                if blocks.len() + 1 > max_nodes {
                    continue;
                }
                let child_budget = max_nodes - 1 - (blocks.len() - 1);
                let options: Vec<Vec<Skeleton>> =
                    blocks.iter().map(|b| skeletons(b, child_budget)).collect();
                let mut combos: Vec<Vec<Skeleton>> = vec![Vec::new()];
                for opts in &options {
                    let mut next = Vec::new();
                    for combo in &combos {
                        for o in opts {
                            let mut c = combo.clone();
                            c.push(o.clone());
                            next.push(c);
                        }
                    }
                    combos = next;
                }
                for children in combos {
                    let total: usize =
                        1 + children.iter().map(|c| c.node_count()).sum::<usize>();
                    if total <= max_nodes {
                        result.push(Skeleton { parts: parts.clone(), children });
                    }
                }
            }
        }
    }
    result.sort_by_key(|s| s.node_count());
    result
}

struct WitnessSearch<'a> {
    t: &'a MultiSequentialTransducer,
    bounds: &'a WitnessBounds,
    steps: usize,
}

impl<'a> WitnessSearch<'a> {
    fn tick(&mut self) -> Result<(), AsyncError> {
        self.steps += 1;
        if self.steps > self.bounds.budget {
            Err(AsyncError::BudgetExceeded(format!(
                "{} witness-search steps",
                self.bounds.budget
            )))
        } else {
            Ok(())
        }
    }

    /// Tries to find words for the skeleton node, extending the parent's
    /// prefix.
    fn assign(&mut self, sk: &Skeleton, base: &str) -> Result<Option<WitnessNode>, AsyncError> {
        let remaining = self.bounds.max_u.saturating_sub(char_len(base));
        let exts: Vec<Word> = shortlex(self.t.input_alphabet(), remaining).collect();
        for ext in exts {
            self.tick()?;
            let prefix = format!("{base}{ext}");
            let mut alive: BTreeMap<usize, (StateId, Word)> = BTreeMap::new();
            let mut dead: BTreeSet<usize> = BTreeSet::new();
            for &i in &sk.parts {
                match self.t.part(i).run(&prefix) {
                    Some((q, alpha)) => {
                        alive.insert(i, (q, alpha));
                    }
                    None => {
                        dead.insert(i);
                    }
                }
            }
            if sk.children.is_empty() {
                if let Some(node) = self.try_leaf(sk, &prefix, &alive, &dead)? {
                    return Ok(Some(node));
                }
            } else if let Some(node) = self.try_internal(sk, &prefix, &alive, &dead)? {
                return Ok(Some(node));
            }
        }
        Ok(None)
    }

    fn try_leaf(
        &mut self,
        sk: &Skeleton,
        prefix: &str,
        alive: &BTreeMap<usize, (StateId, Word)>,
        dead: &BTreeSet<usize>,
    ) -> Result<Option<WitnessNode>, AsyncError> {
        self.tick()?;
        // Residual domain of the whole union at this prefix versus the
        // residual domains of the listed parts.
        let mut whole_at: BTreeMap<usize, StateId> = BTreeMap::new();
        for (i, part) in self.t.parts().iter().enumerate() {
            if let Some((q, _)) = part.run(prefix) {
                whole_at.insert(i, q);
            }
        }
        let covered_at: BTreeMap<usize, StateId> =
            alive.iter().map(|(&i, (q, _))| (i, q.clone())).collect();
        let whole = self.t.residual_domain(&whole_at);
        let covered = self.t.residual_domain(&covered_at);
        match covered.includes(&whole).expect("same alphabet") {
            Some(word) => Ok(Some(WitnessNode {
                prefix: prefix.to_string(),
                cycle: Word::new(),
                parts: sk.parts.clone(),
                dead_parts: dead.clone(),
                loop_parts: alive.keys().cloned().collect(),
                runs: alive
                    .iter()
                    .map(|(&i, (q, alpha))| {
                        (
                            i,
                            LoopRun {
                                alpha: alpha.clone(),
                                beta: Word::new(),
                                state: q.clone(),
                            },
                        )
                    })
                    .collect(),
                leaf_witness: Some(word),
                children: Vec::new(),
            })),
            None => Ok(None),
        }
    }

    fn try_internal(
        &mut self,
        sk: &Skeleton,
        prefix: &str,
        alive: &BTreeMap<usize, (StateId, Word)>,
        dead: &BTreeSet<usize>,
    ) -> Result<Option<WitnessNode>, AsyncError> {
        let union_children: BTreeSet<usize> = sk
            .children
            .iter()
            .flat_map(|c| c.parts.iter().cloned())
            .collect();
        let alive_set: BTreeSet<usize> = alive.keys().cloned().collect();
        if alive_set != union_children {
            return Ok(None);
        }
        'cycles: for cycle in shortlex(self.t.input_alphabet(), self.bounds.max_v) {
            if cycle.is_empty() {
                continue;
            }
            self.tick()?;
            let mut runs: BTreeMap<usize, LoopRun> = BTreeMap::new();
            for (&i, (q, alpha)) in alive {
                match self.t.part(i).run_from(q, &cycle) {
                    Some((back, beta)) if &back == q => {
                        runs.insert(
                            i,
                            LoopRun { alpha: alpha.clone(), beta, state: q.clone() },
                        );
                    }
                    _ => continue 'cycles,
                }
            }
            // Sibling separation: parts assigned to different children must
            // loop at different speeds or have already diverged in content.
            for (y, cy) in sk.children.iter().enumerate() {
                for cz in sk.children.iter().skip(y + 1) {
                    for &i in &cy.parts {
                        for &j in &cz.parts {
                            let (ri, rj) = (&runs[&i], &runs[&j]);
                            let separated = char_len(&ri.beta) != char_len(&rj.beta)
                                || (!(ri.beta.is_empty() && rj.beta.is_empty())
                                    && mismatch(&ri.alpha, &rj.alpha).is_some());
                            if !separated {
                                continue 'cycles;
                            }
                        }
                    }
                }
            }
            let mut children = Vec::new();
            let mut all_assigned = true;
            for child in &sk.children {
                match self.assign(child, prefix)? {
                    Some(node) => children.push(node),
                    None => {
                        all_assigned = false;
                        break;
                    }
                }
            }
            if all_assigned {
                return Ok(Some(WitnessNode {
                    prefix: prefix.to_string(),
                    cycle,
                    parts: sk.parts.clone(),
                    dead_parts: dead.clone(),
                    loop_parts: alive_set,
                    runs,
                    leaf_witness: None,
                    children,
                }));
            }
        }
        Ok(None)
    }
}

/// Searches for an unrealisability witness, trying skeletons in ascending
/// node count and words in shortlex order within the bounds.
pub fn search_witness(
    t: &MultiSequentialTransducer,
    bounds: &WitnessBounds,
) -> Result<Option<WitnessTree>, AsyncError> {
    let all: BTreeSet<usize> = (0..t.part_count()).collect();
    let mut search = WitnessSearch { t, bounds, steps: 0 };
    for sk in skeletons(&all, bounds.max_nodes) {
        if let Some(root) = search.assign(&sk, "")? {
            return Ok(Some(WitnessTree {
                part_names: (0..t.part_count())
                    .map(|i| t.part_name(i).to_string())
                    .collect(),
                root,
            }));
        }
    }
    Ok(None)
}

/// Three-valued outcome of the bounded decision procedure.
#[derive(Debug)]
pub enum AsyncVerdict {
    Realisable { k: usize, realiser: SequentialTransducer },
    Unrealisable { witness: WitnessTree },
    Unknown { k_max: usize, bounds: WitnessBounds },
}

#[derive(Debug, Clone)]
enum AsyncVerdictKind {
    Realisable,
    Unrealisable,
    Unknown,
}

impl From<&AsyncVerdict> for AsyncVerdictKind {
    fn from(v: &AsyncVerdict) -> Self {
        match v {
            AsyncVerdict::Realisable { .. } => AsyncVerdictKind::Realisable,
            AsyncVerdict::Unrealisable { .. } => AsyncVerdictKind::Unrealisable,
            AsyncVerdict::Unknown { .. } => AsyncVerdictKind::Unknown,
        }
    }
}

/// Decides realisability within the given budgets: a verified witness means
/// unrealisable, a winning bound of the synthesis game means realisable with
/// the extracted realiser, and exhausted budgets mean unknown. The game bound
/// is capped by the structural bound, beyond which larger bounds cannot help.
pub fn decide(
    t: &MultiSequentialTransducer,
    k_max: usize,
    bounds: &WitnessBounds,
    vertex_cap: usize,
) -> AsyncVerdict {
    let t = t.trim();
    if let Ok(Some(witness)) = search_witness(&t, bounds) {
        let check = crate::verify::check_witness(&t, &witness);
        if check.ok {
            return AsyncVerdict::Unrealisable { witness };
        }
    }
    let theory = theoretical_k(&t);
    let k_cap = if BigUint::from(k_max) <= theory {
        k_max
    } else {
        // The structural bound fits in one digit whenever it is below k_max.
        theory.to_u64_digits().first().copied().unwrap_or(0) as usize
    };
    match iterate_k(&t, k_cap, vertex_cap) {
        Ok(KSearch::Won { k, realiser }) => AsyncVerdict::Realisable { k, realiser },
        Ok(KSearch::NotWonUpTo(_)) | Err(_) => AsyncVerdict::Unknown {
            k_max: k_cap,
            bounds: bounds.clone(),
        },
    }
}

/// Does any node of the tree carry this prefix/cycle pair on the given loop
/// parts?
pub fn tree_has_loop(
    tree: &WitnessTree,
    prefix: &str,
    cycle: &str,
    parts: &BTreeSet<usize>,
) -> bool {
    fn walk(node: &WitnessNode, prefix: &str, cycle: &str, parts: &BTreeSet<usize>) -> bool {
        (node.prefix == prefix && node.cycle == cycle && &node.loop_parts == parts)
            || node.children.iter().any(|c| walk(c, prefix, cycle, parts))
    }
    walk(&tree.root, prefix, cycle, parts)
}

/// Every child prefix extends its parent's prefix.
pub fn prefixes_consistent(tree: &WitnessTree) -> bool {
    fn walk(node: &WitnessNode) -> bool {
        node.children
            .iter()
            .all(|c| is_prefix(&node.prefix, &c.prefix) && walk(c))
    }
    walk(&tree.root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{rewrite_union, rewrite_union_copy};
    use crate::game::DEFAULT_VERTEX_CAP;

    fn default_budget() -> DecideBudget {
        DecideBudget {
            k_max: 4,
            witness: WitnessBounds::default(),
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }

    #[test]
    fn copy_union_has_the_expected_loop() {
        let t = rewrite_union_copy();
        let loops = find_critical_loops(&t, 1, 1, 100_000).unwrap();
        let found = loops
            .iter()
            .find(|lp| lp.prefix == "a" && lp.cycle == "c")
            .expect("loop on prefix a, cycle c");
        assert_eq!(found.parts, vec![0, 1]);
        assert_eq!(found.runs[&0].alpha, "a");
        assert_eq!(found.runs[&1].alpha, "b");
        assert_eq!(found.runs[&0].beta, "c");
        assert_eq!(found.runs[&1].beta, "c");
        assert!(verify_critical_loop(&t, found));
    }

    #[test]
    fn rewrite_union_has_a_growing_loop() {
        let t = rewrite_union();
        let loops = find_critical_loops(&t, 2, 2, 100_000).unwrap();
        assert!(!loops.is_empty());
        let found = loops
            .iter()
            .find(|lp| lp.prefix == "b" && lp.cycle == "b")
            .expect("loop on prefix b, cycle b");
        assert_eq!(found.runs[&0].alpha, "a");
        assert_eq!(found.runs[&1].alpha, "b");
        for lp in &loops {
            assert!(verify_critical_loop(&t, lp));
        }
    }

    #[test]
    fn single_part_has_no_loops() {
        let t = rewrite_union();
        let single =
            MultiSequentialTransducer::new([("A".to_string(), t.part(0).clone())]).unwrap();
        assert!(find_critical_loops(&single, 3, 3, 100_000)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn characterisation_rejects_the_copy_union() {
        let t = rewrite_union_copy();
        let loops = find_critical_loops(&t, 1, 1, 100_000).unwrap();
        let lp = loops
            .iter()
            .find(|lp| lp.prefix == "a" && lp.cycle == "c")
            .unwrap();
        match check_characterisation(&t, lp, &default_budget()).unwrap() {
            CharOutcome::NoValidSubset(failures) => {
                let coverage: Vec<&CharFailure> =
                    failures.iter().filter(|f| f.condition == 2).collect();
                assert_eq!(coverage.len(), 2);
                let cexs: BTreeSet<&str> = coverage
                    .iter()
                    .map(|f| f.counterexample.as_deref().unwrap())
                    .collect();
                assert_eq!(cexs, BTreeSet::from(["a", "b"]));
            }
            other => panic!("expected no valid subset, got {other:?}"),
        }
    }

    #[test]
    fn characterisation_accepts_the_rewrite_union() {
        let t = rewrite_union();
        let loops = find_critical_loops(&t, 2, 2, 100_000).unwrap();
        let lp = loops
            .iter()
            .find(|lp| lp.prefix == "b" && lp.cycle == "b")
            .unwrap();
        match check_characterisation(&t, lp, &default_budget()).unwrap() {
            CharOutcome::ValidSubset(subset) => {
                assert_eq!(subset, BTreeSet::from([1]));
            }
            other => panic!("expected a valid subset, got {other:?}"),
        }
    }

    #[test]
    fn singleton_loops_are_invalid() {
        let t = rewrite_union();
        let lp = CriticalLoop {
            prefix: String::new(),
            cycle: "b".to_string(),
            parts: vec![0],
            part_names: vec!["A".to_string()],
            runs: BTreeMap::from([(
                0,
                LoopRun {
                    alpha: String::new(),
                    beta: "a".to_string(),
                    state: "1".to_string(),
                },
            )]),
        };
        assert!(matches!(
            check_characterisation(&t, &lp, &default_budget()),
            Err(AsyncError::InvalidLoop)
        ));
    }

    #[test]
    fn theoretical_k_examples() {
        let t = rewrite_union();
        assert_eq!(theoretical_k(&t), BigUint::from(104976u32));

        let single =
            MultiSequentialTransducer::new([("A".to_string(), t.part(0).clone())]).unwrap();
        assert_eq!(theoretical_k(&single), BigUint::from(18u32));

        // All-empty outputs give a zero bound.
        let silent = crate::corpus::gen_badjpair(1).unwrap();
        let only_b =
            MultiSequentialTransducer::new([("B1".to_string(), silent.part(2).clone())]).unwrap();
        assert_eq!(theoretical_k(&only_b), BigUint::from(0u32));
    }

    #[test]
    fn theoretical_k_is_monotone() {
        let t = rewrite_union();
        let single =
            MultiSequentialTransducer::new([("A".to_string(), t.part(0).clone())]).unwrap();
        assert!(theoretical_k(&single) < theoretical_k(&t));
        assert!(theoretical_k(&single) < theoretical_k(&rewrite_union_copy()));
    }

    #[test]
    fn witness_found_for_copy_union() {
        let t = rewrite_union_copy();
        let tree = search_witness(&t, &WitnessBounds::default())
            .unwrap()
            .expect("a witness exists");
        assert!(tree_has_loop(&tree, "a", "c", &BTreeSet::from([0, 1])));
        assert!(prefixes_consistent(&tree));
        assert_eq!(tree.root.parts, BTreeSet::from([0, 1]));
        assert_eq!(tree.node_count(), 3);
    }

    #[test]
    fn no_witness_for_the_rewrite_union() {
        let t = rewrite_union();
        assert!(search_witness(&t, &WitnessBounds::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn no_witness_for_single_parts() {
        let t = rewrite_union();
        let single =
            MultiSequentialTransducer::new([("A".to_string(), t.part(0).clone())]).unwrap();
        assert!(search_witness(&single, &WitnessBounds::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn decide_examples() {
        let t = rewrite_union();
        match decide(&t, 4, &WitnessBounds::default(), DEFAULT_VERTEX_CAP) {
            AsyncVerdict::Realisable { k, realiser } => {
                assert_eq!(k, 1);
                assert_eq!(realiser.apply("b").unwrap(), Some("b".to_string()));
            }
            other => panic!("expected realisable, got {other:?}"),
        }

        match decide(&rewrite_union_copy(), 3, &WitnessBounds::default(), DEFAULT_VERTEX_CAP) {
            AsyncVerdict::Unrealisable { witness } => {
                assert!(tree_has_loop(&witness, "a", "c", &BTreeSet::from([0, 1])));
            }
            other => panic!("expected unrealisable, got {other:?}"),
        }

        let single =
            MultiSequentialTransducer::new([("A".to_string(), t.part(0).clone())]).unwrap();
        match decide(&single, 0, &WitnessBounds::default(), DEFAULT_VERTEX_CAP) {
            AsyncVerdict::Realisable { k, .. } => assert_eq!(k, 0),
            other => panic!("expected realisable at zero, got {other:?}"),
        }
    }

    #[test]
    fn exhausted_budgets_are_unknown() {
        // The copy union cannot be decided with a crippled witness search and
        // a tiny game bound.
        let t = rewrite_union_copy();
        let bounds = WitnessBounds { max_u: 0, max_v: 0, max_nodes: 1, budget: 1000 };
        match decide(&t, 1, &bounds, DEFAULT_VERTEX_CAP) {
            AsyncVerdict::Unknown { k_max, .. } => assert_eq!(k_max, 1),
            other => panic!("expected unknown, got {other:?}"),
        }
    }
}
