//! Independent verification: domain equality and bounded output membership
//! for realisers, full re-checking of witness trees, and a bounded-horizon
//! feasibility oracle whose negative answers refute realisability.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::asynchronous::{WitnessNode, WitnessTree};
use crate::automaton::{AutomatonError, StateId, Word};
use crate::transducer::{MultiSequentialTransducer, SequentialTransducer, Transducer, TransducerError};
use crate::words::{char_len, is_prefix, mismatch, shortlex};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("verification exceeded the budget: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Transducer(#[from] TransducerError),
}

/// Outcome of checking a realiser against its specification.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub domain_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_counterexample: Option<Word>,
    pub membership_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub membership_failure: Option<Word>,
    pub checked_length: usize,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.domain_ok && self.membership_ok
    }
}

/// Exact domain equality via language inclusion in both directions. On
/// failure returns the shortest word on which the domains differ.
pub fn verify_domain(
    r: &SequentialTransducer,
    t: &Transducer,
) -> Result<(bool, Option<Word>), VerifyError> {
    let r_dom = r.domain_automaton();
    let t_dom = t.domain_automaton();
    if let Some(w) = t_dom.includes(&r_dom)? {
        return Ok((false, Some(w)));
    }
    if let Some(w) = r_dom.includes(&t_dom)? {
        return Ok((false, Some(w)));
    }
    Ok((true, None))
}

/// Exhaustive bounded membership: every output of the realiser on a domain
/// word up to `max_len` must be an allowed specification output.
pub fn verify_membership(
    r: &SequentialTransducer,
    t: &Transducer,
    max_len: usize,
) -> Result<(bool, Option<Word>), VerifyError> {
    for u in shortlex(t.input_alphabet(), max_len) {
        let allowed = t.evaluate(&u)?;
        if allowed.is_empty() {
            continue;
        }
        let got = r.evaluate(&u)?;
        if !got.is_subset(&allowed) {
            return Ok((false, Some(u)));
        }
    }
    Ok((true, None))
}

/// Combined realiser check used by the command-line verifier.
pub fn verify_realiser(
    r: &SequentialTransducer,
    t: &Transducer,
    max_len: usize,
) -> Result<VerificationReport, VerifyError> {
    let (domain_ok, domain_counterexample) = verify_domain(r, t)?;
    let (membership_ok, membership_failure) = verify_membership(r, t, max_len)?;
    Ok(VerificationReport {
        domain_ok,
        domain_counterexample,
        membership_ok,
        membership_failure,
        checked_length: max_len,
    })
}

/// Outcome of re-checking a witness tree: on failure, the number of the first
/// violated condition (1 maximality, 2 consistency, 3 monotonicity,
/// 4 partition, 5 delays, 6 leaves) and a short description.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessCheck {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violated: Option<(u8, String)>,
}

fn all_nodes(tree: &WitnessTree) -> Vec<&WitnessNode> {
    fn walk<'a>(node: &'a WitnessNode, out: &mut Vec<&'a WitnessNode>) {
        out.push(node);
        for c in &node.children {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    walk(&tree.root, &mut out);
    out
}

/// Re-establishes every condition of a witness tree from scratch: runs are
/// recomputed by evaluation, loop self-returns and claimed outputs are
/// compared against the recomputation, and the leaf continuations are checked
/// against the actual domains.
pub fn check_witness(t: &MultiSequentialTransducer, tree: &WitnessTree) -> WitnessCheck {
    let fail = |condition: u8, detail: String| WitnessCheck {
        ok: false,
        violated: Some((condition, detail)),
    };
    let nodes = all_nodes(tree);

    // 1: the root must talk about every part.
    let everyone: BTreeSet<usize> = (0..t.part_count()).collect();
    if tree.root.parts != everyone {
        return fail(1, "root does not cover all parts".to_string());
    }

    // 2: the split into dead and looping parts is consistent with the runs.
    for node in &nodes {
        let declared: BTreeSet<usize> =
            node.dead_parts.union(&node.loop_parts).cloned().collect();
        if declared != node.parts
            || !node.dead_parts.is_disjoint(&node.loop_parts)
            || node.runs.keys().cloned().collect::<BTreeSet<usize>>() != node.loop_parts
        {
            return fail(2, format!("inconsistent split at prefix {:?}", node.prefix));
        }
        for &i in &node.parts {
            if i >= t.part_count() {
                return fail(2, format!("unknown part {i}"));
            }
            match t.part(i).run(&node.prefix) {
                None => {
                    if !node.dead_parts.contains(&i) {
                        return fail(2, format!("part {i} has no run on {:?}", node.prefix));
                    }
                }
                Some((state, alpha)) => {
                    if !node.loop_parts.contains(&i) {
                        return fail(2, format!("part {i} runs on {:?}", node.prefix));
                    }
                    let run = &node.runs[&i];
                    if run.state != state || run.alpha != alpha {
                        return fail(
                            2,
                            format!("claimed run of part {i} differs on {:?}", node.prefix),
                        );
                    }
                    match t.part(i).run_from(&state, &node.cycle) {
                        Some((back, _)) if back == state => {}
                        _ => {
                            return fail(
                                2,
                                format!("part {i} does not loop on {:?}", node.cycle),
                            )
                        }
                    }
                }
            }
        }
    }

    // 3: children talk about strictly fewer parts and extend the prefix.
    for node in &nodes {
        for child in &node.children {
            if !child.parts.is_subset(&node.loop_parts) || child.parts == node.loop_parts {
                return fail(3, format!("child of {:?} is not a strict refinement", node.prefix));
            }
            if !is_prefix(&node.prefix, &child.prefix) {
                return fail(
                    3,
                    format!("child prefix {:?} does not extend {:?}", child.prefix, node.prefix),
                );
            }
        }
    }

    // 4: the children of an inner node partition its looping parts.
    for node in &nodes {
        if node.children.is_empty() {
            continue;
        }
        let mut union: BTreeSet<usize> = BTreeSet::new();
        let mut total = 0;
        for child in &node.children {
            total += child.parts.len();
            union.extend(child.parts.iter().cloned());
        }
        if union != node.loop_parts || total != union.len() {
            return fail(4, format!("children do not partition the loops at {:?}", node.prefix));
        }
    }

    // 5: the claimed cycle outputs match the recomputation, and parts sent to
    // different children are separated by length or by an early mismatch.
    for node in &nodes {
        for (&i, run) in &node.runs {
            let (_, beta) = t
                .part(i)
                .run_from(&run.state, &node.cycle)
                .expect("loop checked above");
            if beta != run.beta {
                return fail(5, format!("claimed cycle output of part {i} differs"));
            }
        }
        for (y, cy) in node.children.iter().enumerate() {
            for cz in node.children.iter().skip(y + 1) {
                for &i in &cy.parts {
                    for &j in &cz.parts {
                        let (ri, rj) = (&node.runs[&i], &node.runs[&j]);
                        let separated = char_len(&ri.beta) != char_len(&rj.beta)
                            || (!(ri.beta.is_empty() && rj.beta.is_empty())
                                && mismatch(&ri.alpha, &rj.alpha).is_some());
                        if !separated {
                            return fail(5, format!("parts {i} and {j} are not separated"));
                        }
                    }
                }
            }
        }
    }

    // 6: every leaf carries a continuation in the domain of the union that
    // none of its parts accepts.
    for node in &nodes {
        if !node.children.is_empty() {
            continue;
        }
        let Some(w) = &node.leaf_witness else {
            return fail(6, format!("leaf at {:?} has no continuation", node.prefix));
        };
        let full = format!("{}{}", node.prefix, w);
        let in_domain = t
            .parts()
            .iter()
            .any(|p| p.domain_automaton().accepts(&full).unwrap_or(false));
        if !in_domain {
            return fail(6, format!("{full:?} is not in the domain"));
        }
        for &i in &node.parts {
            if t.part(i).domain_automaton().accepts(&full).unwrap_or(false) {
                return fail(6, format!("part {i} accepts {full:?}"));
            }
        }
    }

    WitnessCheck { ok: true, violated: None }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonMode {
    Sync,
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

struct HorizonData {
    /// Domain words within the horizon, with their allowed outputs.
    outputs: BTreeMap<Word, BTreeSet<Word>>,
    /// Prefixes of domain words within the horizon.
    relevant: BTreeSet<Word>,
    /// Candidate emitted outputs per relevant prefix.
    candidates: BTreeMap<Word, BTreeSet<Word>>,
}

fn horizon_data(t: &Transducer, horizon: usize, mode: HorizonMode) -> Result<HorizonData, VerifyError> {
    let mut outputs: BTreeMap<Word, BTreeSet<Word>> = BTreeMap::new();
    for w in shortlex(t.input_alphabet(), horizon) {
        let outs = t.evaluate(&w)?;
        if !outs.is_empty() {
            outputs.insert(w, outs);
        }
    }
    let mut relevant: BTreeSet<Word> = BTreeSet::new();
    for z in outputs.keys() {
        let chars: Vec<char> = z.chars().collect();
        for len in 0..=chars.len() {
            relevant.insert(chars[..len].iter().collect());
        }
    }
    let mut candidates: BTreeMap<Word, BTreeSet<Word>> = BTreeMap::new();
    for p in &relevant {
        let mut set = BTreeSet::new();
        for (z, outs) in &outputs {
            if !is_prefix(p, z) {
                continue;
            }
            for v in outs {
                let vchars: Vec<char> = v.chars().collect();
                match mode {
                    HorizonMode::Sync => {
                        // One output letter per input letter.
                        let want = char_len(p);
                        if vchars.len() >= want {
                            set.insert(vchars[..want].iter().collect());
                        }
                    }
                    HorizonMode::Async => {
                        for len in 0..=vchars.len() {
                            set.insert(vchars[..len].iter().collect::<Word>());
                        }
                    }
                }
            }
        }
        candidates.insert(p.clone(), set);
    }
    Ok(HorizonData { outputs, relevant, candidates })
}

/// Decides whether some prefix-consistent output assignment satisfies the
/// specification on every domain word within the horizon. In `Sync` mode the
/// assignment produces exactly one output letter per input letter; in `Async`
/// mode it may produce arbitrary words, with terminal output free at every
/// accepted word. An `Infeasible` answer soundly refutes realisability.
pub fn horizon_oracle(
    t: &Transducer,
    horizon: usize,
    mode: HorizonMode,
    budget: usize,
) -> Result<Feasibility, VerifyError> {
    let data = horizon_data(t, horizon, mode)?;
    if data.outputs.is_empty() {
        return Ok(Feasibility::Feasible);
    }
    let mut search = HorizonSearch {
        data,
        symbols: t.input_alphabet().symbols().to_vec(),
        mode,
        memo: HashMap::new(),
        steps: 0,
        budget,
    };
    let ok = search.feasible("", "")?;
    Ok(if ok { Feasibility::Feasible } else { Feasibility::Infeasible })
}

struct HorizonSearch {
    data: HorizonData,
    symbols: Vec<char>,
    mode: HorizonMode,
    memo: HashMap<(Word, Word), bool>,
    steps: usize,
    budget: usize,
}

impl HorizonSearch {
    fn feasible(&mut self, w: &str, emitted: &str) -> Result<bool, VerifyError> {
        let key = (w.to_string(), emitted.to_string());
        if let Some(&known) = self.memo.get(&key) {
            return Ok(known);
        }
        self.steps += 1;
        if self.steps > self.budget {
            return Err(VerifyError::BudgetExceeded(format!(
                "{} horizon-search steps",
                self.budget
            )));
        }
        if let Some(allowed) = self.data.outputs.get(w) {
            let ok = match self.mode {
                HorizonMode::Sync => allowed.contains(emitted),
                HorizonMode::Async => allowed.iter().any(|v| is_prefix(emitted, v)),
            };
            if !ok {
                self.memo.insert(key, false);
                return Ok(false);
            }
        }
        let mut all_children_ok = true;
        for sym in self.symbols.clone() {
            let child = format!("{w}{sym}");
            if !self.data.relevant.contains(&child) {
                continue;
            }
            let mut some_choice = false;
            for next in self.data.candidates[&child].clone() {
                if !is_prefix(emitted, &next) {
                    continue;
                }
                if self.mode == HorizonMode::Sync && char_len(&next) != char_len(&child) {
                    continue;
                }
                if self.feasible(&child, &next)? {
                    some_choice = true;
                    break;
                }
            }
            if !some_choice {
                all_children_ok = false;
                break;
            }
        }
        self.memo.insert(key, all_children_ok);
        Ok(all_children_ok)
    }
}

/// Deterministic single-edit mutations of a sequential transducer, used to
/// exercise the verifier. Each mutant differs from the original in exactly
/// one transition output, terminal output, final-state flag, or transition.
pub fn realiser_mutants(r: &SequentialTransducer) -> Vec<Transducer> {
    let base = r.as_transducer();
    let mut mutants = Vec::new();
    let symbols: Vec<char> = base.output_alphabet().symbols().to_vec();
    let other = |c: char| symbols.iter().copied().find(|&s| s != c);
    // Flip the first letter of a transition output.
    for tr in base.input_automaton().transitions() {
        let out = base.output(tr);
        if let Some(first) = out.chars().next() {
            if let Some(repl) = other(first) {
                let mut new_out = String::new();
                new_out.push(repl);
                new_out.push_str(&out[first.len_utf8()..]);
                let mut outputs = base.outputs().clone();
                outputs.insert(tr.clone(), new_out);
                mutants.push(
                    Transducer::new(
                        base.input_automaton().clone(),
                        base.output_alphabet().clone(),
                        outputs,
                        base.terminals().clone(),
                    )
                    .expect("mutant stays well-formed"),
                );
            }
        }
    }
    // Append a letter to a terminal output.
    for q in base.input_automaton().finals() {
        let mut terminals = base.terminals().clone();
        let mut t = terminals[q].clone();
        t.push(symbols[0]);
        terminals.insert(q.clone(), t);
        mutants.push(
            Transducer::new(
                base.input_automaton().clone(),
                base.output_alphabet().clone(),
                base.outputs().clone(),
                terminals,
            )
            .expect("mutant stays well-formed"),
        );
    }
    // Drop a final state.
    for q in base.input_automaton().finals() {
        let finals: Vec<StateId> = base
            .input_automaton()
            .finals()
            .iter()
            .filter(|f| f != &q)
            .cloned()
            .collect();
        let input = crate::automaton::Nfa::new(
            base.input_alphabet().clone(),
            base.input_automaton().states().iter().cloned(),
            base.input_automaton().initials().iter().cloned(),
            finals,
            base.input_automaton().transitions().iter().cloned(),
        )
        .expect("mutant automaton is well-formed");
        let terminals = base
            .terminals()
            .iter()
            .filter(|(f, _)| f != &q)
            .map(|(f, w)| (f.clone(), w.clone()))
            .collect();
        mutants.push(
            Transducer::new(input, base.output_alphabet().clone(), base.outputs().clone(), terminals)
                .expect("mutant stays well-formed"),
        );
    }
    // Remove a transition.
    for tr in base.input_automaton().transitions() {
        let transitions: Vec<_> = base
            .input_automaton()
            .transitions()
            .iter()
            .filter(|t2| t2 != &tr)
            .cloned()
            .collect();
        let input = crate::automaton::Nfa::new(
            base.input_alphabet().clone(),
            base.input_automaton().states().iter().cloned(),
            base.input_automaton().initials().iter().cloned(),
            base.input_automaton().finals().iter().cloned(),
            transitions,
        )
        .expect("mutant automaton is well-formed");
        let outputs = base
            .outputs()
            .iter()
            .filter(|(t2, _)| t2 != &tr)
            .map(|(t2, w)| (t2.clone(), w.clone()))
            .collect();
        mutants.push(
            Transducer::new(input, base.output_alphabet().clone(), outputs, base.terminals().clone())
                .expect("mutant stays well-formed"),
        );
    }
    mutants
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asynchronous::{search_witness, WitnessBounds};
    use crate::corpus::{rewrite_union, rewrite_union_copy};

    #[test]
    fn domain_examples() {
        let t = rewrite_union();
        let spec = t.union();
        let d1 = t.part(0);
        let (ok, cex) = verify_domain(d1, &spec).unwrap();
        assert!(!ok);
        assert_eq!(cex.as_deref(), Some("b"));

        let (ok, _) = verify_domain(d1, d1.as_transducer()).unwrap();
        assert!(ok);
    }

    #[test]
    fn membership_catches_a_bad_output() {
        let t = rewrite_union();
        let spec = t.union();
        // The b-rewriting part alone has the wrong domain but also produces
        // outputs the union allows, so membership alone passes.
        let (ok, _) = verify_membership(t.part(1), &spec, 6).unwrap();
        assert!(ok);
        // A mutated copy produces a foreign output.
        let mutants = realiser_mutants(t.part(0));
        let spec_a = t.part(0).as_transducer();
        let mut caught = 0;
        for m in &mutants {
            if let Ok(r) = SequentialTransducer::try_from(m.clone()) {
                let report = verify_realiser(&r, spec_a, 8).unwrap();
                if !report.ok() {
                    caught += 1;
                }
            }
        }
        assert_eq!(caught, mutants.len());
    }

    #[test]
    fn vacuous_membership_on_empty_domain() {
        let t = rewrite_union();
        let empty_spec = {
            let input = crate::automaton::Nfa::empty(t.input_alphabet().clone());
            Transducer::new(
                input,
                t.output_alphabet().clone(),
                BTreeMap::new(),
                BTreeMap::new(),
            )
            .unwrap()
        };
        let r = SequentialTransducer::try_from(empty_spec.clone()).unwrap();
        let (ok, _) = verify_membership(&r, &empty_spec, 5).unwrap();
        assert!(ok);
    }

    #[test]
    fn witness_round_trip_and_edits() {
        let t = rewrite_union_copy();
        let tree = search_witness(&t, &WitnessBounds::default())
            .unwrap()
            .expect("witness exists");
        assert!(check_witness(&t, &tree).ok);

        // Editing a claimed cycle output trips the delay check.
        let mut edited = tree.clone();
        let run = edited.root.runs.get_mut(&0).unwrap();
        run.beta.push('c');
        let check = check_witness(&t, &edited);
        assert!(!check.ok);
        assert_eq!(check.violated.as_ref().unwrap().0, 5);

        // A root that does not cover every part violates maximality.
        let mut shrunk = tree.clone();
        shrunk.root.parts.remove(&1);
        let check = check_witness(&t, &shrunk);
        assert!(!check.ok);
        assert_eq!(check.violated.as_ref().unwrap().0, 1);
    }

    #[test]
    fn horizon_examples() {
        let t = rewrite_union().union();
        assert_eq!(
            horizon_oracle(&t, 2, HorizonMode::Sync, 1_000_000).unwrap(),
            Feasibility::Infeasible
        );
        assert_eq!(
            horizon_oracle(&t, 6, HorizonMode::Async, 1_000_000).unwrap(),
            Feasibility::Feasible
        );
        assert_eq!(
            horizon_oracle(&t, 0, HorizonMode::Sync, 1_000_000).unwrap(),
            Feasibility::Feasible
        );
        assert_eq!(
            horizon_oracle(&t, 0, HorizonMode::Async, 1_000_000).unwrap(),
            Feasibility::Feasible
        );
    }

    #[test]
    fn sync_infeasibility_is_antimonotone() {
        let t = rewrite_union().union();
        let mut seen_infeasible = false;
        for horizon in 0..=4 {
            let f = horizon_oracle(&t, horizon, HorizonMode::Sync, 1_000_000).unwrap();
            if seen_infeasible {
                assert_eq!(f, Feasibility::Infeasible);
            }
            if f == Feasibility::Infeasible {
                seen_infeasible = true;
            }
        }
        assert!(seen_infeasible);
    }
}
