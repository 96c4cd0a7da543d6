//! Decision procedures for the four restricted reachability relations and
//! their composition into plain and regular reachability.
//!
//! A: runs to a `Pop₂`-substack never dipping below the target, decided by
//! a chain search over substack certificates. B/C: runs popping/pushing the
//! top word, decided by high-loop chains. D: runs extending a milestone,
//! decided through reachability certificates pinned at the milestone.

use crate::alphabet::{LabelId, StateId};
use crate::counting::{Annotation, CounterAutomaton, LetterClass};
use crate::cps::{Configuration, Cps, Transition};
use crate::enc::{encode, EncLabel, EncTree};
use crate::presentation::{annotate, AnnotatedEncTree, CertError};
use crate::stack::{LinkLevel, Stack2, StackOp};
use crate::tree::{lex_le, Node};
use serde::Deserialize;
use std::collections::{HashMap, HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReachError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error("counter: {0}")]
    Counter(String),
}

/// Chain forms of a substack certificate: a return, a one-loop or loop
/// before a level-2 collapse, and a loop or one-loop before a single pop.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Form {
    Return,
    OneLoopCollapse,
    LoopCollapse,
    LoopPop,
    OneLoopPop,
}

/// All pairs `(Pop₂-substack, state)` reachable from `c₁` without dipping
/// below the respective substack: one chain search serves every target.
pub fn rel_a_targets(
    cps: &Cps,
    counter: &CounterAutomaton,
    c1: &Configuration,
) -> Result<HashMap<Stack2, Vec<StateId>>, ReachError> {
    let tree = encode(c1);
    let at = annotate(counter, &tree)?;
    // The Pop₂-substacks of stack(c₁) and their milestone nodes.
    let mut goals: HashMap<Node, Stack2> = HashMap::new();
    for m in 0..c1.stack.width() {
        let s = c1.stack.popn2(m).unwrap();
        if let Some(node) = node_of_milestone(&tree, &s) {
            goals.insert(node, s);
        }
    }
    let mut out: HashMap<Stack2, Vec<StateId>> = HashMap::new();
    let mut close = |stack: &Stack2, ann: &Annotation, q: StateId| {
        let entry = out.entry(stack.clone()).or_default();
        for q2 in cps.state_ids() {
            if ann.high.exists(q, q2) && !entry.contains(&q2) {
                entry.push(q2);
            }
        }
    };
    let start = tree.lex_max().unwrap();
    // m = 0: a high loop of the full stack.
    close(&c1.stack, at.annotation(&start), c1.state);
    // Chain search over (node, state, pop-pending) triples; closing is
    // allowed at every goal node reached by a return or collapse form.
    let mut queue: VecDeque<(Node, StateId, bool)> = VecDeque::new();
    let mut seen: HashSet<(Node, StateId, bool)> = HashSet::new();
    queue.push_back((start, c1.state, false));
    while let Some((t, q_prev, pending)) = queue.pop_front() {
        if !seen.insert((t.clone(), q_prev, pending)) {
            continue;
        }
        let ann = at.annotation(&t);
        for form in [
            Form::Return,
            Form::OneLoopCollapse,
            Form::LoopCollapse,
            Form::LoopPop,
            Form::OneLoopPop,
        ] {
            // A6: after a pop form, a collapse form must come before the
            // next return.
            if pending && form == Form::Return {
                continue;
            }
            for q_i in cps.state_ids() {
                if !form_ok(cps, &at, ann, &t, form, q_prev, q_i) {
                    continue;
                }
                let next_pending = match form {
                    Form::LoopPop | Form::OneLoopPop => true,
                    _ => false,
                };
                if let Some(succ) = successor(&at, &t, form) {
                    if !next_pending {
                        if let Some(stack) = goals.get(&succ) {
                            close(stack, at.annotation(&succ), q_i);
                        }
                    }
                    queue.push_back((succ, q_i, next_pending));
                }
            }
        }
    }
    Ok(out)
}

/// `A`: `stack(c₂) = Pop₂^m(stack(c₁))` and some run from c₁ to c₂ never
/// visits a proper substack of `stack(c₂)`.
pub fn rel_a(
    cps: &Cps,
    counter: &CounterAutomaton,
    c1: &Configuration,
    c2: &Configuration,
) -> Result<bool, ReachError> {
    if pop2_distance(&c1.stack, &c2.stack).is_none() {
        return Err(ReachError::Precondition(
            "stack(c₂) must be Pop₂^m(stack(c₁))".into(),
        ));
    }
    let targets = rel_a_targets(cps, counter, c1)?;
    Ok(targets
        .get(&c2.stack)
        .is_some_and(|qs| qs.contains(&c2.state)))
}

/// A7: the per-form side conditions at the chain node.
fn form_ok(
    cps: &Cps,
    at: &AnnotatedEncTree<'_>,
    ann: &Annotation,
    t: &Node,
    form: Form,
    q_prev: StateId,
    q_i: StateId,
) -> bool {
    let top = at.top[t];
    match form {
        Form::Return => ann.ret.exists(q_prev, q_i),
        Form::OneLoopCollapse | Form::LoopCollapse => {
            if top.level != LinkLevel::L2 {
                return false;
            }
            let pre = |q2: StateId| -> bool {
                match form {
                    Form::OneLoopCollapse => ann.one_loop(q_prev, q2),
                    _ => ann.loops.exists(q_prev, q2),
                }
            };
            cps.delta.iter().any(|tr| {
                tr.sym == top.sym
                    && tr.op == StackOp::Collapse
                    && tr.to == q_i
                    && pre(tr.from)
            })
        }
        Form::LoopPop | Form::OneLoopPop => {
            let pre = |q2: StateId| -> bool {
                match form {
                    Form::OneLoopPop => ann.one_loop(q_prev, q2),
                    _ => ann.loops.exists(q_prev, q2),
                }
            };
            cps.delta.iter().any(|tr| {
                tr.sym == top.sym
                    && tr.to == q_i
                    && pre(tr.from)
                    && (tr.op == StackOp::Pop1
                        || (tr.op == StackOp::Collapse && top.level == LinkLevel::L1))
            })
        }
    }
}

/// The successor node of the chain, per form.
fn successor(at: &AnnotatedEncTree<'_>, t: &Node, form: Form) -> Option<Node> {
    match form {
        Form::Return => {
            // d = d′10^m: the word below is the lex-max of the subtree at
            // d′0, or d′ itself.
            let mut d = t.to_vec();
            while let Some(last) = d.pop() {
                if last {
                    return Some(max_in_left_subtree(at, &d));
                }
            }
            None
        }
        Form::OneLoopCollapse | Form::LoopCollapse => {
            // d = d′10^m1^n with m > 0.
            let mut d = t.to_vec();
            // strip trailing 1s
            while matches!(d.last(), Some(true)) {
                d.pop();
            }
            let mut zeros = 0;
            while matches!(d.last(), Some(false)) {
                d.pop();
                zeros += 1;
            }
            if zeros == 0 {
                return None;
            }
            match d.pop() {
                Some(true) => Some(max_in_left_subtree(at, &d)),
                _ => None,
            }
        }
        Form::LoopPop | Form::OneLoopPop => {
            // d = d′01^n: the successor is d′.
            let mut d = t.to_vec();
            while matches!(d.last(), Some(true)) {
                d.pop();
            }
            match d.pop() {
                Some(false) if !d.is_empty() => Some(d),
                _ => None,
            }
        }
    }
}

/// The lexicographically maximal element of the subtree at `d0`, or `d`
/// itself when the left child is absent (never the configuration root).
fn max_in_left_subtree(at: &AnnotatedEncTree<'_>, d: &[bool]) -> Node {
    let mut left = d.to_vec();
    left.push(false);
    if at.tree.contains(&left) {
        let sub = at.tree.subtree(&left);
        let mut max = left;
        max.extend(sub.lex_max().unwrap_or_default());
        max
    } else {
        d.to_vec()
    }
}

/// The node of `encode(c₁)` whose left stack is the given milestone.
fn node_of_milestone(tree: &EncTree, target: &Stack2) -> Option<Node> {
    let mut nodes: Vec<Node> = tree.domain().filter(|d| !d.is_empty()).cloned().collect();
    nodes.sort_by(|a, b| {
        if lex_le(a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    for d in nodes {
        if let Ok(ls) = crate::enc::left_stack(tree, &d) {
            if &ls == target {
                return Some(d);
            }
        }
    }
    None
}

fn pop2_distance(s1: &Stack2, s2: &Stack2) -> Option<usize> {
    if s2.width() > s1.width() {
        return None;
    }
    let m = s1.width() - s2.width();
    if s1.popn2(m).as_ref() == Some(s2) || (m == 0 && s1 == s2) {
        Some(m)
    } else {
        None
    }
}

fn pop1_distance(s1: &Stack2, s2: &Stack2) -> Option<usize> {
    if s1.width() != s2.width() {
        return None;
    }
    let (w1, w2) = (s1.top_word(), s2.top_word());
    if w2.len() > w1.len() {
        return None;
    }
    let m = w1.len() - w2.len();
    if s1.popn1(m).as_ref() == Some(s2) {
        Some(m)
    } else {
        None
    }
}

/// `B`: `stack(c₂) = Pop₁^m(stack(c₁))`, run never below `stack(c₂)`:
/// a chain of high loops and single pops (or level-1 collapses) down the
/// top word.
pub fn rel_b(
    cps: &Cps,
    counter: &CounterAutomaton,
    c1: &Configuration,
    c2: &Configuration,
) -> Result<bool, ReachError> {
    let m = pop1_distance(&c1.stack, &c2.stack).ok_or_else(|| {
        ReachError::Precondition("stack(c₂) must be Pop₁^m(stack(c₁))".into())
    })?;
    let mut cur: HashSet<StateId> = HashSet::from([c1.state]);
    let mut stack = c1.stack.clone();
    for _ in 0..m {
        let ann = annotation_of(counter, &stack)?;
        let top = LetterClass::of(stack.top_letter());
        let mut next = HashSet::new();
        for &q in &cur {
            for tr in &cps.delta {
                let pop_ok = tr.sym == top.sym
                    && (tr.op == StackOp::Pop1
                        || (tr.op == StackOp::Collapse && top.level == LinkLevel::L1));
                if pop_ok && ann.high.exists(q, tr.from) {
                    next.insert(tr.to);
                }
            }
        }
        cur = next;
        stack = stack.popn1(1).unwrap();
        if cur.is_empty() {
            return Ok(false);
        }
    }
    let ann = annotation_of(counter, &stack)?;
    Ok(cur.iter().any(|&q| ann.high.exists(q, c2.state)))
}

/// `C`: `stack(c₁) = Pop₁^m(stack(c₂))`, run never below `stack(c₁)`:
/// high loops and single pushes rebuilding the top word. A level-2 letter
/// is rebuildable only when its link names the widest prefix.
pub fn rel_c(
    cps: &Cps,
    counter: &CounterAutomaton,
    c1: &Configuration,
    c2: &Configuration,
) -> Result<bool, ReachError> {
    let m = pop1_distance(&c2.stack, &c1.stack).ok_or_else(|| {
        ReachError::Precondition("stack(c₁) must be Pop₁^m(stack(c₂))".into())
    })?;
    let w2 = c2.stack.top_word();
    let base = w2.len() - m;
    let mut cur: HashSet<StateId> = HashSet::from([c1.state]);
    let mut stack = c1.stack.clone();
    for i in 0..m {
        let letter = w2[base + i];
        let op = match letter.level {
            LinkLevel::L1 => StackOp::Push(letter.sym, LinkLevel::L1),
            LinkLevel::L2 => {
                if letter.link as usize != c2.stack.width() - 1 {
                    return Ok(false);
                }
                StackOp::Push(letter.sym, LinkLevel::L2)
            }
        };
        let ann = annotation_of(counter, &stack)?;
        let top = stack.top_sym();
        let mut next = HashSet::new();
        for &q in &cur {
            for tr in &cps.delta {
                if tr.sym == top && tr.op == op && ann.high.exists(q, tr.from) {
                    next.insert(tr.to);
                }
            }
        }
        cur = next;
        stack = stack.apply(op).unwrap();
        if cur.is_empty() {
            return Ok(false);
        }
    }
    let ann = annotation_of(counter, &stack)?;
    Ok(cur.iter().any(|&q| ann.high.exists(q, c2.state)))
}

fn annotation_of<'c>(
    counter: &'c CounterAutomaton,
    s: &Stack2,
) -> Result<&'c Annotation, ReachError> {
    counter
        .annotation_for_word(s.top_word())
        .map_err(|e| ReachError::Counter(e.to_string()))
}

/// All pins `(Pop₂-substack, state)` from which `c₂` is reachable without
/// revisiting the substack: a forward and a backward certificate pass
/// serve every pin at once.
pub fn rel_d_pins(
    cps: &Cps,
    counter: &CounterAutomaton,
    c2: &Configuration,
) -> Result<HashMap<Stack2, Vec<StateId>>, ReachError> {
    let tree = encode(c2);
    let at = annotate(counter, &tree)?;
    let root_state = match tree.get(&[]) {
        Some(EncLabel::State(q)) => *q,
        _ => return Err(ReachError::Precondition("not a configuration tree".into())),
    };
    let dim = cps.states.len();
    let mut chain: Vec<Node> = tree.domain().filter(|d| !d.is_empty()).cloned().collect();
    chain.sort_by(|a, b| {
        if lex_le(a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    let n = chain.len();
    // step[i][fx][fy]: the condition between chain[i-1] and chain[i].
    let mut forward: Vec<Vec<bool>> = Vec::with_capacity(n);
    let ann0 = at.annotation(&chain[0]);
    forward.push(
        (0..dim)
            .map(|q| ann0.loops.exists(cps.initial, StateId(q as u16)))
            .collect(),
    );
    let mut steps: Vec<Vec<Vec<bool>>> = Vec::with_capacity(n);
    steps.push(Vec::new());
    for i in 1..n {
        let x = &chain[i - 1];
        let y = &chain[i];
        let is_left_child = y.len() == x.len() + 1 && !*y.last().unwrap();
        let mut mat = vec![vec![false; dim]; dim];
        for fx in 0..dim {
            if is_left_child {
                for fy in 0..dim {
                    mat[fx][fy] = crate::presentation::push_step_ok(
                        cps,
                        &at,
                        StateId(fx as u16),
                        x,
                        y,
                        StateId(fy as u16),
                    );
                }
            } else {
                let z0 = y[..y.len() - 1].to_vec();
                let vals = crate::presentation::chain_values(cps, &at, StateId(fx as u16), x, &z0);
                mat[fx].copy_from_slice(&vals);
            }
        }
        let prev = forward.last().unwrap().clone();
        let mut row = vec![false; dim];
        for fx in 0..dim {
            if prev[fx] {
                for (fy, r) in row.iter_mut().enumerate() {
                    *r |= mat[fx][fy];
                }
            }
        }
        forward.push(row);
        steps.push(mat);
    }
    // Backward feasibility from the pinned endpoint f(lexmax) = root state.
    let mut backward: Vec<Vec<bool>> = vec![vec![false; dim]; n];
    backward[n - 1][root_state.0 as usize] = true;
    for i in (1..n).rev() {
        for fx in 0..dim {
            for fy in 0..dim {
                if steps[i][fx][fy] && backward[i][fy] {
                    backward[i - 1][fx] = true;
                }
            }
        }
    }
    // Pins live at the milestone nodes of the Pop₂-substacks of stack(c₂).
    let mut out: HashMap<Stack2, Vec<StateId>> = HashMap::new();
    for m in 0..c2.stack.width() {
        let s = c2.stack.popn2(m).unwrap();
        if let Some(node) = node_of_milestone(&tree, &s) {
            let i = chain.iter().position(|d| d == &node).unwrap();
            let qs: Vec<StateId> = (0..dim)
                .filter(|&q| forward[i][q] && backward[i][q])
                .map(|q| StateId(q as u16))
                .collect();
            out.insert(s, qs);
        }
    }
    Ok(out)
}

/// `D`: `stack(c₁) = Pop₂^m(stack(c₂))` and some run from c₁ to c₂ never
/// revisits `stack(c₁)` after its start: a reachability certificate of c₂
/// pinned to `state(c₁)` at the milestone node of `stack(c₁)`.
pub fn rel_d(
    cps: &Cps,
    counter: &CounterAutomaton,
    c1: &Configuration,
    c2: &Configuration,
) -> Result<bool, ReachError> {
    if pop2_distance(&c2.stack, &c1.stack).is_none() {
        return Err(ReachError::Precondition(
            "stack(c₁) must be Pop₂^m(stack(c₂))".into(),
        ));
    }
    let pins = rel_d_pins(cps, counter, c2)?;
    Ok(pins
        .get(&c1.stack)
        .is_some_and(|qs| qs.contains(&c1.state)))
}

/// Plain reachability as the composition `A ∘ B ∘ C ∘ D` over the finitely
/// many candidate intermediate stacks.
pub fn reach(
    cps: &Cps,
    counter: &CounterAutomaton,
    c1: &Configuration,
    c2: &Configuration,
) -> Result<bool, ReachError> {
    let a_targets = rel_a_targets(cps, counter, c1)?;
    let d_pins = rel_d_pins(cps, counter, c2)?;
    // x ranges over the Pop₂-prefixes of c₁'s stack, y over Pop₁-prefixes
    // of x that are substacks of c₂'s stack, z over Pop₂-prefixes of c₂
    // with Pop₁ⁿ(z) = y.
    for i in 0..c1.stack.width() {
        let sx = match c1.stack.popn2(i) {
            Some(s) => s,
            None => break,
        };
        let qxs = match a_targets.get(&sx) {
            Some(qs) if !qs.is_empty() => qs,
            _ => continue,
        };
        for j in 0..sx.top_word().len() {
            let sy = match sx.popn1(j) {
                Some(s) => s,
                None => break,
            };
            if !crate::prefix::is_substack(&sy, &c2.stack) {
                continue;
            }
            for mm in 0..c2.stack.width() {
                let sz = match c2.stack.popn2(mm) {
                    Some(s) => s,
                    None => break,
                };
                if pop1_distance(&sz, &sy).is_none() {
                    continue;
                }
                let qzs = match d_pins.get(&sz) {
                    Some(qs) if !qs.is_empty() => qs,
                    _ => continue,
                };
                for &qx in qxs {
                    for qy in cps.state_ids() {
                        if !rel_b(
                            cps,
                            counter,
                            &Configuration::new(qx, sx.clone()),
                            &Configuration::new(qy, sy.clone()),
                        )? {
                            continue;
                        }
                        for &qz in qzs {
                            if rel_c(
                                cps,
                                counter,
                                &Configuration::new(qy, sy.clone()),
                                &Configuration::new(qz, sz.clone()),
                            )? {
                                return Ok(true);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(false)
}

/// Caches the per-endpoint target and pin maps across many `reach` queries.
pub struct Reacher<'a> {
    pub cps: &'a Cps,
    pub counter: &'a CounterAutomaton,
    a_cache: HashMap<Configuration, HashMap<Stack2, Vec<StateId>>>,
    d_cache: HashMap<Configuration, HashMap<Stack2, Vec<StateId>>>,
}

impl<'a> Reacher<'a> {
    pub fn new(cps: &'a Cps, counter: &'a CounterAutomaton) -> Self {
        Reacher {
            cps,
            counter,
            a_cache: HashMap::new(),
            d_cache: HashMap::new(),
        }
    }

    pub fn reach(&mut self, c1: &Configuration, c2: &Configuration) -> Result<bool, ReachError> {
        if !self.a_cache.contains_key(c1) {
            let t = rel_a_targets(self.cps, self.counter, c1)?;
            self.a_cache.insert(c1.clone(), t);
        }
        if !self.d_cache.contains_key(c2) {
            let t = rel_d_pins(self.cps, self.counter, c2)?;
            self.d_cache.insert(c2.clone(), t);
        }
        let a_targets = &self.a_cache[c1];
        let d_pins = &self.d_cache[c2];
        for i in 0..c1.stack.width() {
            let sx = match c1.stack.popn2(i) {
                Some(s) => s,
                None => break,
            };
            let qxs = match a_targets.get(&sx) {
                Some(qs) if !qs.is_empty() => qs,
                _ => continue,
            };
            for j in 0..sx.top_word().len() {
                let sy = match sx.popn1(j) {
                    Some(s) => s,
                    None => break,
                };
                if !crate::prefix::is_substack(&sy, &c2.stack) {
                    continue;
                }
                for mm in 0..c2.stack.width() {
                    let sz = match c2.stack.popn2(mm) {
                        Some(s) => s,
                        None => break,
                    };
                    if pop1_distance(&sz, &sy).is_none() {
                        continue;
                    }
                    let qzs = match d_pins.get(&sz) {
                        Some(qs) if !qs.is_empty() => qs,
                        _ => continue,
                    };
                    for &qx in qxs {
                        for qy in self.cps.state_ids() {
                            if !rel_b(
                                self.cps,
                                self.counter,
                                &Configuration::new(qx, sx.clone()),
                                &Configuration::new(qy, sy.clone()),
                            )? {
                                continue;
                            }
                            for &qz in qzs {
                                if rel_c(
                                    self.cps,
                                    self.counter,
                                    &Configuration::new(qy, sy.clone()),
                                    &Configuration::new(qz, sz.clone()),
                                )? {
                                    return Ok(true);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(false)
    }
}

// ---------------------------------------------------------------------------
// Regular reachability
// ---------------------------------------------------------------------------

/// A string DFA over the edge labels of a system, loaded from JSON.
#[derive(Clone, Debug, Deserialize)]
pub struct LabelDfa {
    pub states: Vec<String>,
    pub initial: String,
    pub finals: Vec<String>,
    /// Rows `(state, label, state)`.
    pub transitions: Vec<(String, String, String)>,
}

impl LabelDfa {
    /// The DFA accepting `Γ*`.
    pub fn universal(cps: &Cps) -> LabelDfa {
        LabelDfa {
            states: vec!["u".into()],
            initial: "u".into(),
            finals: vec!["u".into()],
            transitions: cps
                .labels
                .iter()
                .map(|l| ("u".into(), l.clone(), "u".into()))
                .collect(),
        }
    }
}

/// The product system: fresh `ε_i`/`ε_f` moves enter and leave the tracked
/// component, whose transitions advance the DFA.
pub fn product_with_dfa(cps: &Cps, dfa: &LabelDfa) -> Result<(Cps, ProductMap), ReachError> {
    let q_n = cps.states.len();
    let f_n = dfa.states.len();
    let dfa_id = |name: &str| -> Result<usize, ReachError> {
        dfa.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ReachError::Precondition(format!("unknown DFA state {name}")))
    };
    let mut sys = cps.clone();
    for f in &dfa.states {
        for q in &cps.states {
            sys.states.push(format!("{q}&{f}"));
        }
    }
    let pair = |q: usize, f: usize| StateId((q_n + f * q_n + q) as u16);
    let eps_i = LabelId(sys.labels.len() as u16);
    sys.labels.push("eps_i".into());
    let eps_f = LabelId(sys.labels.len() as u16);
    sys.labels.push("eps_f".into());
    let init = dfa_id(&dfa.initial)?;
    for q in 0..q_n {
        for sym in cps.alphabet.user_ids() {
            sys.delta.push(Transition {
                from: StateId(q as u16),
                sym,
                label: eps_i,
                to: pair(q, init),
                op: StackOp::Id,
            });
            for fin in &dfa.finals {
                sys.delta.push(Transition {
                    from: pair(q, dfa_id(fin)?),
                    sym,
                    label: eps_f,
                    to: StateId(q as u16),
                    op: StackOp::Id,
                });
            }
        }
    }
    let mut dfa_step: HashMap<(usize, LabelId), usize> = HashMap::new();
    for (from, label, to) in &dfa.transitions {
        let l = cps
            .label_id(label)
            .ok_or_else(|| ReachError::Precondition(format!("unknown label {label}")))?;
        dfa_step.insert((dfa_id(from)?, l), dfa_id(to)?);
    }
    for t in &cps.delta {
        for f in 0..f_n {
            if let Some(&f2) = dfa_step.get(&(f, t.label)) {
                sys.delta.push(Transition {
                    from: pair(t.from.0 as usize, f),
                    sym: t.sym,
                    label: t.label,
                    to: pair(t.to.0 as usize, f2),
                    op: t.op,
                });
            }
        }
    }
    Ok((
        sys,
        ProductMap {
            base_states: q_n,
            dfa_initial: init,
            dfa_finals: dfa
                .finals
                .iter()
                .map(|f| dfa_id(f))
                .collect::<Result<Vec<_>, _>>()?,
        },
    ))
}

pub struct ProductMap {
    pub base_states: usize,
    pub dfa_initial: usize,
    pub dfa_finals: Vec<usize>,
}

impl ProductMap {
    pub fn entry(&self, q: StateId) -> StateId {
        StateId((self.base_states + self.dfa_initial * self.base_states + q.0 as usize) as u16)
    }

    pub fn exits(&self, q: StateId) -> Vec<StateId> {
        self.dfa_finals
            .iter()
            .map(|&f| StateId((self.base_states + f * self.base_states + q.0 as usize) as u16))
            .collect()
    }
}

/// `Reach_L` with the product system and its counter automaton prebuilt.
pub struct RegularReacher {
    pub sys: Cps,
    pub counter: CounterAutomaton,
    pub map: ProductMap,
    a_cache: HashMap<Configuration, HashMap<Stack2, Vec<StateId>>>,
    d_cache: HashMap<Configuration, HashMap<Stack2, Vec<StateId>>>,
}

impl RegularReacher {
    pub fn build(
        cps: &Cps,
        dfa: &LabelDfa,
        caps: &crate::counting::CountingCaps,
    ) -> Result<RegularReacher, ReachError> {
        let (sys, map) = product_with_dfa(cps, dfa)?;
        let counter = CounterAutomaton::build(&sys, 1, caps)
            .map_err(|e| ReachError::Counter(e.to_string()))?;
        Ok(RegularReacher {
            sys,
            counter,
            map,
            a_cache: HashMap::new(),
            d_cache: HashMap::new(),
        })
    }

    pub fn reach(&mut self, c1: &Configuration, c2: &Configuration) -> Result<bool, ReachError> {
        let x = Configuration::new(self.map.entry(c1.state), c1.stack.clone());
        for exit in self.map.exits(c2.state) {
            let y = Configuration::new(exit, c2.stack.clone());
            let mut r = Reacher {
                cps: &self.sys,
                counter: &self.counter,
                a_cache: std::mem::take(&mut self.a_cache),
                d_cache: std::mem::take(&mut self.d_cache),
            };
            let hit = r.reach(&x, &y)?;
            self.a_cache = r.a_cache;
            self.d_cache = r.d_cache;
            if hit {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// `Reach_L`: reachability along a path whose labels form a word of `L`.
pub fn reach_regular(
    cps: &Cps,
    c1: &Configuration,
    c2: &Configuration,
    dfa: &LabelDfa,
    caps: &crate::counting::CountingCaps,
) -> Result<bool, ReachError> {
    let mut rr = RegularReacher::build(cps, dfa, caps)?;
    rr.reach(c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::CountingCaps;
    use crate::fixtures;

    fn counter_for(cps: &Cps) -> CounterAutomaton {
        CounterAutomaton::build(cps, 1, &CountingCaps::default()).unwrap()
    }

    #[test]
    fn relations_are_reflexive() {
        let cps = fixtures::hague();
        let counter = counter_for(&cps);
        let c = cps.initial_config();
        assert!(rel_a(&cps, &counter, &c, &c).unwrap());
        assert!(rel_b(&cps, &counter, &c, &c).unwrap());
        assert!(rel_c(&cps, &counter, &c, &c).unwrap());
        assert!(rel_d(&cps, &counter, &c, &c).unwrap());
        assert!(reach(&cps, &counter, &c, &c).unwrap());
    }

    #[test]
    fn reach_on_figure_path() {
        let cps = fixtures::hague();
        let counter = counter_for(&cps);
        let c1 = cps.initial_config();
        let c2 = Configuration::new(
            StateId(2),
            Stack2::initial().apply(StackOp::Clone2).unwrap(),
        );
        // (0,[⊥]) → (2,[⊥]:[⊥]) along Cl, A′, P.
        assert!(reach(&cps, &counter, &c1, &c2).unwrap());
    }

    #[test]
    fn reach_matches_bfs_closure_on_hague() {
        let cps = fixtures::hague();
        let counter = counter_for(&cps);
        // The oracle closure must be computed on a graph deep enough that
        // reachability among the shallow configurations has stabilised
        // (paths may detour above the horizon).
        let shallow = cps.bfs_explore(6, 100_000).unwrap();
        let deep = cps.bfs_explore(16, 1_000_000).unwrap();
        let mid = cps.bfs_explore(13, 1_000_000).unwrap();
        let closure_deep = deep.transitive_closure();
        let closure_mid = mid.transitive_closure();
        let mut reacher = Reacher::new(&cps, &counter);
        for ci in &shallow.configs {
            for cj in &shallow.configs {
                let (di, dj) = (deep.index[ci], deep.index[cj]);
                let (mi, mj) = (mid.index[ci], mid.index[cj]);
                assert_eq!(
                    closure_mid[mi][mj], closure_deep[di][dj],
                    "oracle horizon not stable for ({ci:?}, {cj:?})"
                );
                let got = reacher.reach(ci, cj).unwrap();
                assert_eq!(
                    got, closure_deep[di][dj],
                    "reach({ci:?}, {cj:?}) vs closure"
                );
            }
        }
    }

    #[test]
    fn reach_regular_restricts_labels() {
        let cps = fixtures::hague();
        let c1 = cps.initial_config();
        let c2 = Configuration::new(
            StateId(1),
            Stack2::initial().apply(StackOp::Clone2).unwrap(),
        );
        // L = {Cl}: one clone step reaches (1,[⊥]:[⊥]).
        let dfa = LabelDfa {
            states: vec!["0".into(), "1".into()],
            initial: "0".into(),
            finals: vec!["1".into()],
            transitions: vec![("0".into(), "Cl".into(), "1".into())],
        };
        let caps = CountingCaps::default();
        assert!(reach_regular(&cps, &c1, &c2, &dfa, &caps).unwrap());
        let _ = &caps;
        // L = {P}: not reachable by a single pop from the start.
        let dfa_p = LabelDfa {
            states: vec!["0".into(), "1".into()],
            initial: "0".into(),
            finals: vec!["1".into()],
            transitions: vec![("0".into(), "P".into(), "1".into())],
        };
        assert!(!reach_regular(&cps, &c1, &c2, &dfa_p, &caps).unwrap());
        // Reach with L = Γ* equals plain reach.
        let counter = counter_for(&cps);
        let uni = LabelDfa::universal(&cps);
        let mut rr = RegularReacher::build(&cps, &uni, &caps).unwrap();
        let mut plain = Reacher::new(&cps, &counter);
        let g = cps.bfs_explore(4, 10_000).unwrap();
        for ci in g.configs.iter().take(4) {
            for cj in g.configs.iter().take(4) {
                assert_eq!(rr.reach(ci, cj).unwrap(), plain.reach(ci, cj).unwrap());
            }
        }
    }
}
