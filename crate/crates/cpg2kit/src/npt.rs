//! Nested pushdown trees: the run-unfolding of a level-1 pushdown graph
//! with jump edges between matching pushes and pops, small-run bounds, the
//! bounded-witness FO model checker, and the translation into a level-2
//! collapsible pushdown system. Level-2 nested pushdown trees ship as a
//! structure (successors and jump edges) only.

use crate::alphabet::{LabelId, StateId, BOTTOM};
use crate::cps::{Configuration, Cps, Run, Transition};
use crate::formula::Formula;
use crate::prefix::word_le;
use crate::stack::{LinkLevel, Stack2, StackOp};
use num_bigint::BigUint;
use num_traits::One;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NptError {
    #[error("system is not a level-1 pushdown system (row {0})")]
    NotLevelOne(usize),
    #[error("system uses collapse or linked pushes (row {0})")]
    NotCollapseFree(usize),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("formula uses {0}, outside the nested-pushdown-tree vocabulary")]
    Vocabulary(String),
    #[error("unknown edge label {0}")]
    UnknownLabel(String),
}

/// Checks that every operation is level-1.
pub fn check_level1(pds: &Cps) -> Result<(), NptError> {
    for (i, t) in pds.delta.iter().enumerate() {
        match t.op {
            StackOp::Push(_, LinkLevel::L1) | StackOp::Pop1 | StackOp::Id => {}
            _ => return Err(NptError::NotLevelOne(i)),
        }
    }
    Ok(())
}

/// Checks that the system is a higher-order pushdown system of level 2:
/// no collapse and no linked pushes.
pub fn check_collapse_free(pds: &Cps) -> Result<(), NptError> {
    for (i, t) in pds.delta.iter().enumerate() {
        match t.op {
            StackOp::Collapse | StackOp::Push(_, LinkLevel::L2) => {
                return Err(NptError::NotCollapseFree(i))
            }
            _ => {}
        }
    }
    Ok(())
}

/// A node of the nested pushdown tree: a run from the initial
/// configuration, identified by its transition sequence.
pub type NptNode = Run;

/// One-step extensions of a node, in transition order.
pub fn npt_successors(pds: &Cps, node: &NptNode) -> Vec<(LabelId, NptNode)> {
    let end = match node.end(pds) {
        Some(c) => c,
        None => return Vec::new(),
    };
    pds.successors(&end)
        .into_iter()
        .map(|(label, tidx, _)| {
            let mut steps = node.steps.clone();
            steps.push(tidx);
            (
                label,
                Run {
                    start: node.start.clone(),
                    steps,
                },
            )
        })
        .collect()
}

/// Jump targets: extensions ending in the same stack whose strictly
/// intermediate stacks all have it as a proper prefix, up to a total
/// length bound.
pub fn jump_targets(pds: &Cps, node: &NptNode, length_bound: usize) -> Vec<NptNode> {
    let end = match node.end(pds) {
        Some(c) => c,
        None => return Vec::new(),
    };
    let base = end.stack.top_word().clone();
    let mut out = Vec::new();
    // Depth-first over strict extensions of the base word; a return to the
    // base word closes a jump and cannot be continued.
    let mut stack: Vec<(Run, Configuration)> = vec![(node.clone(), end)];
    while let Some((run, cur)) = stack.pop() {
        if run.len() >= length_bound {
            continue;
        }
        for (_, tidx, succ) in pds.successors(&cur) {
            let w = succ.stack.top_word();
            let mut steps = run.steps.clone();
            steps.push(tidx);
            let next = Run {
                start: run.start.clone(),
                steps,
            };
            if w == &base {
                out.push(next);
            } else if word_le(&base, w) {
                stack.push((next, succ));
            }
        }
    }
    out.sort();
    out
}

/// Whether `b` is a jump target of `a`.
pub fn is_jump(pds: &Cps, a: &NptNode, b: &NptNode) -> bool {
    if b.len() <= a.len() || a.steps[..] != b.steps[..a.len()] {
        return false;
    }
    let configs = match b.configs(pds) {
        Some(c) => c,
        None => return false,
    };
    let w = configs[a.len()].stack.top_word();
    if configs[b.len()].stack.top_word() != w {
        return false;
    }
    configs[a.len() + 1..b.len()].iter().all(|c| {
        let v = c.stack.top_word();
        word_le(w, v) && v.len() > w.len()
    })
}

/// Width (final stack size), maximal stack size, and the maximal number of
/// connected occurrences of any stack.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RunMetrics {
    pub width: usize,
    pub max_stack: usize,
    pub occ: usize,
}

pub fn metrics(pds: &Cps, run: &NptNode) -> Option<RunMetrics> {
    let configs = run.configs(pds)?;
    let words: Vec<&crate::stack::Word> =
        configs.iter().map(|c| c.stack.top_word()).collect();
    let width = words.last().unwrap().len();
    let max_stack = words.iter().map(|w| w.len()).max().unwrap();
    let mut occ = 0;
    for w in &words {
        // Maximal windows where every stack is prefixed by w.
        let mut i = 0;
        while i < words.len() {
            if !word_le(w, words[i]) {
                i += 1;
                continue;
            }
            let mut j = i;
            let mut hits = 0;
            while j < words.len() && word_le(w, words[j]) {
                if words[j].len() == w.len() {
                    hits += 1;
                }
                j += 1;
            }
            occ = occ.max(hits);
            i = j;
        }
    }
    Some(RunMetrics {
        width,
        max_stack,
        occ,
    })
}

/// The thresholds of `(j,k)`-smallness.
#[derive(Clone, Copy, Debug)]
pub struct SmallnessParams {
    pub j: usize,
    pub alpha: usize,
    pub system_size: usize,
}

impl SmallnessParams {
    /// `|N| = |Q| + |Σ| + |Γ| + |Δ|` over the user alphabet.
    pub fn for_system(pds: &Cps, j: usize, alpha: usize) -> Self {
        let sigma = pds.alphabet.user_ids().count();
        SmallnessParams {
            j,
            alpha,
            system_size: pds.states.len() + sigma + pds.labels.len() + pds.delta.len(),
        }
    }

    fn scale(&self) -> u128 {
        (self.j as u128) << self.alpha.min(100)
    }

    pub fn width_bound(&self) -> u128 {
        6 * (self.system_size as u128).pow(2) * self.scale()
    }

    pub fn max_bound(&self) -> u128 {
        8 * (self.system_size as u128).pow(3) * self.scale()
    }

    pub fn occ_bound(&self) -> u128 {
        6 * (self.system_size as u128) * self.scale()
    }
}

/// The three smallness inequalities.
pub fn is_small(pds: &Cps, run: &NptNode, j: usize, alpha: usize) -> bool {
    let p = SmallnessParams::for_system(pds, j, alpha);
    match metrics(pds, run) {
        Some(m) => {
            (m.width as u128) <= p.width_bound()
                && (m.max_stack as u128) <= p.max_bound()
                && (m.occ as u128) <= p.occ_bound()
        }
        None => false,
    }
}

/// `(b^{h+2} − b) / (b − 1)`, rounded up.
pub fn depth_bound(b: u64, h: u32) -> BigUint {
    assert!(b >= 2, "the bound needs b ≥ 2");
    let b = BigUint::from(b);
    let num = b.pow(h + 2) - &b;
    let den = &b - BigUint::one();
    (&num + &den - BigUint::one()) / den
}

// ---------------------------------------------------------------------------
// Bounded-witness model checking
// ---------------------------------------------------------------------------

/// A structure with a finitary constraint on quantifier witnesses: the
/// `m`-th quantifier ranges over the lazily enumerated `candidates(m)`,
/// and atoms are evaluated directly on elements.
pub trait SPreserving {
    type Elem: Clone + PartialEq;

    /// The witnesses admitted for the `m`-th quantifier (1-based), as a
    /// lazy stream so that existentials can stop at the first hit.
    fn candidates(&self, m: usize)
        -> Box<dyn Iterator<Item = Result<Self::Elem, NptError>> + '_>;

    fn eval_atom(
        &self,
        atom: &Formula,
        env: &HashMap<String, Self::Elem>,
    ) -> Result<bool, NptError>;
}

/// The generic bounded-witness recursion: quantifier `m` ranges over the
/// constrained candidates only.
pub fn s_model_check<S: SPreserving>(structure: &S, f: &Formula) -> Result<bool, NptError> {
    let mut env = HashMap::new();
    s_eval(structure, &f.simplify(), &mut env, 0)
}

fn s_eval<S: SPreserving>(
    structure: &S,
    f: &Formula,
    env: &mut HashMap<String, S::Elem>,
    depth: usize,
) -> Result<bool, NptError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Not(g) => !s_eval(structure, g, env, depth)?,
        Formula::And(g, h) => {
            s_eval(structure, g, env, depth)? && s_eval(structure, h, env, depth)?
        }
        Formula::Or(g, h) => {
            s_eval(structure, g, env, depth)? || s_eval(structure, h, env, depth)?
        }
        Formula::Exists(x, g) => {
            let mut hit = false;
            for c in structure.candidates(depth + 1) {
                env.insert(x.clone(), c?);
                if s_eval(structure, g, env, depth + 1)? {
                    hit = true;
                    break;
                }
            }
            env.remove(x);
            hit
        }
        Formula::Forall(x, g) => {
            let mut all = true;
            for c in structure.candidates(depth + 1) {
                env.insert(x.clone(), c?);
                if !s_eval(structure, g, env, depth + 1)? {
                    all = false;
                    break;
                }
            }
            env.remove(x);
            all
        }
        Formula::ModCount(_, _, _, _) => {
            return Err(NptError::Vocabulary("modcount".into()))
        }
        atom => structure.eval_atom(atom, env)?,
    })
}

/// The nested pushdown tree of a level-1 system as an `SPreserving`
/// structure with the `(m,α)`-small constraint.
pub struct NptStructure<'a> {
    pub pds: &'a Cps,
    pub alpha: usize,
    pub node_cap: usize,
}

impl<'a> NptStructure<'a> {
    pub fn new(pds: &'a Cps, alpha: usize, node_cap: usize) -> Result<Self, NptError> {
        check_level1(pds)?;
        Ok(NptStructure {
            pds,
            alpha,
            node_cap,
        })
    }
}

/// Depth-first enumeration of the `(j,α)`-small runs, pruned at the
/// monotone thresholds (maximal stack size and connected occurrences only
/// grow along extensions); the width bound is checked at emission.
struct SmallRunIter<'a> {
    pds: &'a Cps,
    params: SmallnessParams,
    stack: Vec<NptNode>,
    budget: usize,
}

impl Iterator for SmallRunIter<'_> {
    type Item = Result<NptNode, NptError>;

    fn next(&mut self) -> Option<Self::Item> {
        while let Some(run) = self.stack.pop() {
            if self.budget == 0 {
                return Some(Err(NptError::Cap(
                    "small-run enumeration budget exhausted".into(),
                )));
            }
            self.budget -= 1;
            let m = metrics(self.pds, &run).expect("valid run");
            if (m.max_stack as u128) > self.params.max_bound()
                || (m.occ as u128) > self.params.occ_bound()
            {
                continue;
            }
            for (_, next) in npt_successors(self.pds, &run) {
                self.stack.push(next);
            }
            if (m.width as u128) <= self.params.width_bound() {
                return Some(Ok(run));
            }
        }
        None
    }
}

impl SPreserving for NptStructure<'_> {
    type Elem = NptNode;

    fn candidates(
        &self,
        m: usize,
    ) -> Box<dyn Iterator<Item = Result<NptNode, NptError>> + '_> {
        Box::new(SmallRunIter {
            pds: self.pds,
            params: SmallnessParams::for_system(self.pds, m, self.alpha),
            stack: vec![Run::empty(self.pds.initial_config())],
            budget: self.node_cap,
        })
    }

    fn eval_atom(
        &self,
        atom: &Formula,
        env: &HashMap<String, NptNode>,
    ) -> Result<bool, NptError> {
        eval_npt_atom(self.pds, atom, env)
    }
}

fn eval_npt_atom(
    pds: &Cps,
    atom: &Formula,
    env: &HashMap<String, NptNode>,
) -> Result<bool, NptError> {
    Ok(match atom {
        Formula::Eq(x, y) => env[x] == env[y],
        Formula::Edge(l, x, y) => {
            let label = pds
                .label_id(l)
                .ok_or_else(|| NptError::UnknownLabel(l.clone()))?;
            let (a, b) = (&env[x], &env[y]);
            b.len() == a.len() + 1
                && b.steps[..a.len()] == a.steps[..]
                && pds.delta[b.steps[a.len()]].label == label
        }
        Formula::Jump(x, y) => is_jump(pds, &env[x], &env[y]),
        other => {
            return Err(NptError::Vocabulary(other.to_string()));
        }
    })
}

/// FO model checking on the nested pushdown tree: the `i`-th quantifier
/// ranges over the `(i,α)`-small runs for `α` the quantifier rank.
pub fn npt_model_check(pds: &Cps, f: &Formula, node_cap: usize) -> Result<bool, NptError> {
    let alpha = f.rank();
    let s = NptStructure::new(pds, alpha, node_cap)?;
    s_model_check(&s, f)
}

/// Naive evaluation over all runs of length at most `horizon` (the oracle
/// for the bounded-witness checker).
pub struct TruncatedNpt<'a> {
    pub pds: &'a Cps,
    pub horizon: usize,
    pub node_cap: usize,
}

struct TruncatedIter<'a> {
    pds: &'a Cps,
    horizon: usize,
    stack: Vec<NptNode>,
    budget: usize,
}

impl Iterator for TruncatedIter<'_> {
    type Item = Result<NptNode, NptError>;

    fn next(&mut self) -> Option<Self::Item> {
        let run = self.stack.pop()?;
        if self.budget == 0 {
            return Some(Err(NptError::Cap("truncated enumeration budget".into())));
        }
        self.budget -= 1;
        if run.len() < self.horizon {
            for (_, next) in npt_successors(self.pds, &run) {
                self.stack.push(next);
            }
        }
        Some(Ok(run))
    }
}

impl SPreserving for TruncatedNpt<'_> {
    type Elem = NptNode;

    fn candidates(
        &self,
        _m: usize,
    ) -> Box<dyn Iterator<Item = Result<NptNode, NptError>> + '_> {
        Box::new(TruncatedIter {
            pds: self.pds,
            horizon: self.horizon,
            stack: vec![Run::empty(self.pds.initial_config())],
            budget: self.node_cap,
        })
    }

    fn eval_atom(
        &self,
        atom: &Formula,
        env: &HashMap<String, NptNode>,
    ) -> Result<bool, NptError> {
        eval_npt_atom(self.pds, atom, env)
    }
}

// ---------------------------------------------------------------------------
// Translation into a level-2 collapsible pushdown system
// ---------------------------------------------------------------------------

/// Auxiliary state layout of the translated system: the original states,
/// then PUSH(q) per state, then CLONE and POP.
pub struct NptTranslation {
    pub cps: Cps,
    pub base_states: usize,
    pub clone_state: StateId,
    pub pop_state: StateId,
    pub jump_label: LabelId,
    pub push_label: LabelId,
    pub clone_label: LabelId,
    pub pop_label: LabelId,
}

impl NptTranslation {
    pub fn push_state(&self, q: StateId) -> StateId {
        StateId((self.base_states + q.0 as usize) as u16)
    }
}

/// Builds `C(N)`: each node of the nested pushdown tree appears as a
/// CLONE-state configuration whose stack lists the visited configurations,
/// the state written on top of each word; jump edges become collapse moves
/// on the links remembered by the pushed letters.
pub fn translate_to_cps(pds: &Cps) -> Result<NptTranslation, NptError> {
    check_level1(pds)?;
    let q_n = pds.states.len();
    let mut sys = pds.clone();
    // State symbols: one fresh stack symbol per control state.
    let state_sym: Vec<crate::alphabet::SymId> = pds
        .states
        .iter()
        .map(|name| sys.alphabet.intern(&format!("@{name}")))
        .collect();
    for name in pds.states.clone() {
        sys.states.push(format!("PUSH({name})"));
    }
    let clone_state = StateId(sys.states.len() as u16);
    sys.states.push("CLONE".into());
    let pop_state = StateId(sys.states.len() as u16);
    sys.states.push("POP".into());
    let jump_label = LabelId(sys.labels.len() as u16);
    sys.labels.push("jmp".into());
    let push_label = LabelId(sys.labels.len() as u16);
    sys.labels.push("psh".into());
    let clone_label = LabelId(sys.labels.len() as u16);
    sys.labels.push("cln".into());
    let pop_label = LabelId(sys.labels.len() as u16);
    sys.labels.push("pop".into());
    let push_state = |q: usize| StateId((q_n + q) as u16);
    let mut delta: Vec<Transition> = Vec::new();
    // Auxiliary moves: PUSH(q) writes @q, CLONE duplicates, POP removes it.
    for q in 0..q_n {
        for sym in pds.alphabet.user_ids() {
            delta.push(Transition {
                from: push_state(q),
                sym,
                label: push_label,
                to: clone_state,
                op: StackOp::Push(state_sym[q], LinkLevel::L1),
            });
        }
        delta.push(Transition {
            from: clone_state,
            sym: state_sym[q],
            label: clone_label,
            to: pop_state,
            op: StackOp::Clone2,
        });
        delta.push(Transition {
            from: pop_state,
            sym: state_sym[q],
            label: pop_label,
            to: StateId(q as u16),
            op: StackOp::Pop1,
        });
    }
    // Simulated moves.
    for t in &pds.delta {
        let op = match t.op {
            StackOp::Id => StackOp::Id,
            StackOp::Push(s, LinkLevel::L1) => StackOp::Push(s, LinkLevel::L2),
            StackOp::Pop1 => StackOp::Pop1,
            _ => unreachable!("checked level-1"),
        };
        delta.push(Transition {
            from: t.from,
            sym: t.sym,
            label: t.label,
            to: push_state(t.to.0 as usize),
            op,
        });
        if t.op == StackOp::Pop1 {
            delta.push(Transition {
                from: t.from,
                sym: t.sym,
                label: jump_label,
                to: clone_state,
                op: StackOp::Collapse,
            });
        }
    }
    sys.delta = delta;
    sys.initial = push_state(pds.initial.0 as usize);
    Ok(NptTranslation {
        cps: sys,
        base_states: q_n,
        clone_state,
        pop_state,
        jump_label,
        push_label,
        clone_label,
        pop_label,
    })
}

// ---------------------------------------------------------------------------
// Level-2 nested pushdown trees (structure only)
// ---------------------------------------------------------------------------

/// One-step extensions of a run of a collapse-free level-2 system.
pub fn npt2_successors(hpds: &Cps, node: &NptNode) -> Result<Vec<(LabelId, NptNode)>, NptError> {
    check_collapse_free(hpds)?;
    Ok(npt_successors(hpds, node))
}

/// Level-2 jump targets: extensions by a clone, a run strictly above the
/// starting width, and the matching `Pop₂`, up to a length bound.
pub fn npt2_jump_targets(
    hpds: &Cps,
    node: &NptNode,
    length_bound: usize,
) -> Result<Vec<NptNode>, NptError> {
    check_collapse_free(hpds)?;
    let end = match node.end(hpds) {
        Some(c) => c,
        None => return Ok(Vec::new()),
    };
    let base = end.stack.clone();
    let mut out = Vec::new();
    let mut stack: Vec<(Run, Configuration, bool)> = Vec::new();
    // First step must clone.
    for (_, tidx, succ) in hpds.successors(&end) {
        if hpds.delta[tidx].op == StackOp::Clone2 {
            let mut steps = node.steps.clone();
            steps.push(tidx);
            stack.push((
                Run {
                    start: node.start.clone(),
                    steps,
                },
                succ,
                true,
            ));
        }
    }
    while let Some((run, cur, _)) = stack.pop() {
        if run.len() >= length_bound {
            continue;
        }
        for (_, tidx, succ) in hpds.successors(&cur) {
            let mut steps = run.steps.clone();
            steps.push(tidx);
            let next = Run {
                start: run.start.clone(),
                steps,
            };
            if succ.stack == base {
                if hpds.delta[tidx].op == StackOp::Pop2 {
                    out.push(next);
                }
            } else if succ.stack.width() > base.width() {
                stack.push((next, succ, false));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// The width characterisation of level-2 jumps: the extension keeps its
/// start width only at both ends.
pub fn is_npt2_jump_by_width(hpds: &Cps, a: &NptNode, b: &NptNode) -> bool {
    if b.len() < a.len() + 2 || a.steps[..] != b.steps[..a.len()] {
        return false;
    }
    let configs = match b.configs(hpds) {
        Some(c) => c,
        None => return false,
    };
    let w0 = configs[a.len()].stack.width();
    configs[b.len()].stack.width() == w0
        && configs[a.len() + 1..b.len()]
            .iter()
            .all(|c| c.stack.width() > w0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn npt_example_root_jumps() {
        let pds = fixtures::npt_example();
        let root = Run::empty(pds.initial_config());
        // Jump targets of the root are exactly the runs ending in (1, ⊥):
        // one per even extension length within the bound.
        let targets = jump_targets(&pds, &root, 8);
        assert_eq!(targets.len(), 4);
        for t in &targets {
            assert!(is_jump(&pds, &root, t));
            let end = t.end(&pds).unwrap();
            assert_eq!(end.state, StateId(1));
            assert_eq!(end.stack, Stack2::initial());
            assert_eq!(t.len() % 2, 0);
        }
        // A run ending after a push has no jump into it.
        let after_push = Run {
            start: pds.initial_config(),
            steps: vec![0],
        };
        for len in 0..=1 {
            let smaller = Run {
                start: pds.initial_config(),
                steps: after_push.steps[..len].to_vec(),
            };
            assert!(!is_jump(&pds, &smaller, &after_push));
        }
    }

    #[test]
    fn metrics_and_depth_bound() {
        assert_eq!(depth_bound(2, 1), BigUint::from(6u32));
        let pds = fixtures::npt_example();
        // A run that never revisits any stack has occ 1.
        let run = Run {
            start: pds.initial_config(),
            steps: vec![0, 1, 1],
        };
        let m = metrics(&pds, &run).unwrap();
        assert_eq!(m.occ, 1);
        assert_eq!(m.width, 4);
        assert_eq!(m.max_stack, 4);
    }

    #[test]
    fn npt_model_check_fixture_sentences() {
        let pds = fixtures::npt_example();
        let f = Formula::parse("(exists x (exists y (jump x y)))").unwrap();
        assert!(npt_model_check(&pds, &f, 4_000_000).unwrap());
        let g = Formula::parse("(exists x (jump x x))").unwrap();
        assert!(!npt_model_check(&pds, &g, 4_000_000).unwrap());
    }

    #[test]
    fn smallness_bounds_hold_for_witnesses() {
        let pds = fixtures::npt_example();
        let alpha = 2;
        let s = NptStructure::new(&pds, alpha, 4_000_000).unwrap();
        for m in 1..=2 {
            for run in s.candidates(m).take(50) {
                assert!(is_small(&pds, &run.unwrap(), m, alpha));
            }
        }
    }

    #[test]
    fn translation_produces_the_simulation_chains() {
        let pds = fixtures::npt_example();
        let tr = translate_to_cps(&pds).unwrap();
        // The prologue: (PUSH(0), [⊥]) → (CLONE, [⊥@0]).
        let init = tr.cps.initial_config();
        let succ = tr.cps.successors(&init);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].2.state, tr.clone_state);
        // An empty-Δ system only explores the prologue.
        let (empty, _) = Cps::new(
            vec!["q".into()],
            crate::alphabet::Alphabet::new(),
            vec![],
            StateId(0),
            vec![],
        )
        .unwrap();
        let tr2 = translate_to_cps(&empty).unwrap();
        let g = tr2.cps.bfs_explore(10, 1000).unwrap();
        assert!(g.complete);
        assert_eq!(g.configs.len(), 4); // PUSH, CLONE, POP, q
    }

    #[test]
    fn npt2_jump_characterisations_agree() {
        // A collapse-free level-2 system: clone, push, pop₁, pop₂ moves.
        let mut alph = crate::alphabet::Alphabet::new();
        let a = alph.intern("a");
        let (hpds, _) = Cps::new(
            vec!["0".into(), "1".into()],
            alph,
            vec!["c".into(), "p".into(), "o".into(), "t".into()],
            StateId(0),
            vec![
                Transition {
                    from: StateId(0),
                    sym: BOTTOM,
                    label: LabelId(0),
                    to: StateId(1),
                    op: StackOp::Clone2,
                },
                Transition {
                    from: StateId(1),
                    sym: BOTTOM,
                    label: LabelId(1),
                    to: StateId(1),
                    op: StackOp::Push(a, LinkLevel::L1),
                },
                Transition {
                    from: StateId(1),
                    sym: a,
                    label: LabelId(2),
                    to: StateId(1),
                    op: StackOp::Pop1,
                },
                Transition {
                    from: StateId(1),
                    sym: BOTTOM,
                    label: LabelId(3),
                    to: StateId(0),
                    op: StackOp::Pop2,
                },
            ],
        )
        .unwrap();
        let root = Run::empty(hpds.initial_config());
        // Clone-then-Pop₂ of length 2 is a jump target.
        let targets = npt2_jump_targets(&hpds, &root, 6).unwrap();
        assert!(targets.iter().any(|t| t.steps == vec![0, 3]));
        for t in &targets {
            assert!(is_npt2_jump_by_width(&hpds, &root, t));
        }
        // A run ending in a clone has no incoming jump yet.
        let after_clone = Run {
            start: hpds.initial_config(),
            steps: vec![0],
        };
        assert!(!is_npt2_jump_by_width(&hpds, &root, &after_clone));
    }
}
