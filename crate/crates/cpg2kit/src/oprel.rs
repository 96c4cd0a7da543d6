//! Automata over convolutions of two encoding trees recognising the stack
//! operations: `accepts encode(c₁) ⊗ encode(c₂)` iff `c₁ → c₂` by the given
//! transition.
//!
//! Each operation changes the encoding by a small local pattern anchored at
//! the rightmost path: clone and push add one node, pop removes one (with a
//! merge variant when blocks fuse or split), pop₂ cuts the last word
//! separator and its letter spine, and a level-2 collapse cuts the whole
//! subtree right of the link target. States verify the pattern bottom-up
//! and climb to the root checking the symbol guard along the way.

use crate::alphabet::{StateId, SymId, BOTTOM};
use crate::cps::{Cps, Transition};
use crate::enc::{enc_alphabet, EncLabel};
use crate::nfta::Nfta;
use crate::stack::{LinkLevel, StackOp};
use std::collections::HashMap;

/// Pair labels over encoding-tree labels; `None` is the padding.
pub type PairLabel = (Option<EncLabel>, Option<EncLabel>);

/// The full convolution alphabet for pairs of encoding trees of `cps`.
pub fn pair_alphabet(cps: &Cps) -> Vec<PairLabel> {
    let base = enc_alphabet(cps);
    let mut out = Vec::new();
    for a in &base {
        out.push((Some(*a), None));
        out.push((None, Some(*a)));
        for b in &base {
            out.push((Some(*a), Some(*b)));
        }
    }
    out
}

/// States of the pattern automata.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum S {
    /// Absent subtree.
    Border,
    /// Identical subtree in both trees.
    Eq,
    /// The single added node (right component only).
    New,
    /// The single removed node (left component only).
    Rem,
    /// Removed ε-leaf of the pop₁ merge pattern.
    RemT,
    /// 1-spine above the removed ε-leaf (pop₁ merge).
    RSpine,
    /// The `(τ,1)`-labelled fork node of the pop₁ merge pattern.
    E0,
    /// 1-spine above the added node (push merge).
    Spine,
    /// The `(τ,1)`-labelled fork node of the push merge pattern.
    D0,
    /// Removed letter spine of pop₂ (guard already seen).
    PopSpine,
    /// Removed ε-separator whose guard was below (pop₂, spine nonempty).
    CutDone,
    /// Removed ε-separator with no letters below (pop₂): guard still open.
    CutNeed,
    /// Arbitrary removed subtree (collapse).
    RemAny,
    /// Removed 1-chain between the link letter and the rightmost leaf
    /// (collapse).
    RemChain,
    /// The removed `(σ,2)` letter node holding the collapse link.
    RemP,
    /// Removed 0-path between the separator and the link letter (collapse).
    RemUp,
    /// Climbing the rightmost path, guard still open.
    ClimbNeed,
    /// Climbing the rightmost path, guard matched.
    ClimbDone,
    Accept,
}

const ALL_EQ_CHILD: [S; 2] = [S::Border, S::Eq];

struct Builder {
    aut: Nfta<PairLabel>,
    index: HashMap<S, usize>,
}

impl Builder {
    fn new(cps: &Cps) -> Builder {
        let states = [
            S::Border,
            S::Eq,
            S::New,
            S::Rem,
            S::RemT,
            S::RSpine,
            S::E0,
            S::Spine,
            S::D0,
            S::PopSpine,
            S::CutDone,
            S::CutNeed,
            S::RemAny,
            S::RemChain,
            S::RemP,
            S::RemUp,
            S::ClimbNeed,
            S::ClimbDone,
            S::Accept,
        ];
        let index: HashMap<S, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut aut = Nfta::new(states.len(), pair_alphabet(cps), index[&S::Border]);
        aut.finals.insert(index[&S::Accept]);
        Builder { aut, index }
    }

    fn rule(&mut self, l: S, r: S, label: PairLabel, to: S) {
        let (li, ri, ti) = (self.index[&l], self.index[&r], self.index[&to]);
        self.aut.add_rule(li, ri, &label, ti);
    }

    /// Rules for identical subtrees and for climbing the rightmost path.
    /// Climbing from a 0-child requires the absence of a 1-child.
    fn shared(&mut self, cps: &Cps, guard: SymId) {
        let labels = enc_alphabet(cps);
        for l in &labels {
            if matches!(l, EncLabel::State(_)) {
                continue;
            }
            let b = (Some(*l), Some(*l));
            for x in ALL_EQ_CHILD {
                for y in ALL_EQ_CHILD {
                    self.rule(x, y, b, S::Eq);
                }
            }
            // Climb through a 1-child: the sibling 0-subtree is equal.
            for x in ALL_EQ_CHILD {
                for c in [S::ClimbNeed, S::ClimbDone] {
                    if let Some(n) = step_guard(c, *l, guard) {
                        self.rule(x, c, b, n);
                    }
                }
            }
            // Climb through a 0-child: no 1-child allowed.
            for c in [S::ClimbNeed, S::ClimbDone] {
                if let Some(n) = step_guard(c, *l, guard) {
                    self.rule(c, S::Border, b, n);
                }
            }
        }
    }

    fn root(&mut self, from: StateId, to: StateId) {
        self.rule(
            S::ClimbDone,
            S::Border,
            (
                Some(EncLabel::State(from)),
                Some(EncLabel::State(to)),
            ),
            S::Accept,
        );
    }

    fn finish(mut self) -> Nfta<PairLabel> {
        self.aut.dedup_rules();
        self.aut
    }
}

/// Guard bookkeeping while climbing: the deepest letter on the rightmost
/// path must carry the transition's symbol; a wrong one is a dead end.
fn step_guard(c: S, label: EncLabel, guard: SymId) -> Option<S> {
    match (c, label) {
        (S::ClimbDone, _) => Some(S::ClimbDone),
        (S::ClimbNeed, EncLabel::Eps) => Some(S::ClimbNeed),
        (S::ClimbNeed, EncLabel::Sym(s, _)) if s == guard => Some(S::ClimbDone),
        _ => None,
    }
}

/// Entry stage of the climb right after the pattern anchor with label `l`.
fn start_guard(l: EncLabel, guard: SymId) -> Option<S> {
    match l {
        EncLabel::Eps => Some(S::ClimbNeed),
        EncLabel::Sym(s, _) if s == guard => Some(S::ClimbDone),
        _ => None,
    }
}

/// The relation automaton of one transition.
pub fn op_relation_automaton(cps: &Cps, t: &Transition) -> Nfta<PairLabel> {
    let mut b = Builder::new(cps);
    b.shared(cps, t.sym);
    let labels = enc_alphabet(cps);
    let syms: Vec<EncLabel> = labels
        .iter()
        .copied()
        .filter(|l| matches!(l, EncLabel::Sym(_, _)))
        .collect();
    match t.op {
        StackOp::Id => {
            // The climb starts at the rightmost leaf.
            for l in &syms {
                if let Some(c) = start_guard(*l, t.sym) {
                    b.rule(S::Border, S::Border, (Some(*l), Some(*l)), c);
                }
            }
            if let Some(c) = start_guard(EncLabel::Eps, t.sym) {
                b.rule(
                    S::Border,
                    S::Border,
                    (Some(EncLabel::Eps), Some(EncLabel::Eps)),
                    c,
                );
            }
        }
        StackOp::Clone2 => {
            // t₂ adds an ε right child to the rightmost leaf of t₁.
            b.rule(S::Border, S::Border, (None, Some(EncLabel::Eps)), S::New);
            for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
                if let Some(c) = start_guard(*l, t.sym) {
                    b.rule(S::Border, S::New, (Some(*l), Some(*l)), c);
                }
            }
        }
        StackOp::Push(tau, lvl) => {
            let new_label = EncLabel::Sym(tau, lvl);
            // Plain: t₂ adds the letter as a left child of the rightmost
            // leaf of t₁.
            b.rule(S::Border, S::Border, (None, Some(new_label)), S::New);
            for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
                if let Some(c) = start_guard(*l, t.sym) {
                    b.rule(S::New, S::Border, (Some(*l), Some(*l)), c);
                }
            }
            if lvl == LinkLevel::L1 && tau != BOTTOM {
                // Merge: the rightmost ε-leaf of t₁ disappears and the
                // sibling block rooted at the matching `(τ,1)` grows one ε
                // word separator at its rightmost spine.
                b.rule(S::Border, S::Border, (None, Some(EncLabel::Eps)), S::New);
                b.rule(
                    S::Border,
                    S::Border,
                    (Some(EncLabel::Eps), None),
                    S::Rem,
                );
                for x in ALL_EQ_CHILD {
                    b.rule(
                        x,
                        S::New,
                        (Some(EncLabel::Eps), Some(EncLabel::Eps)),
                        S::Spine,
                    );
                    b.rule(
                        x,
                        S::Spine,
                        (Some(EncLabel::Eps), Some(EncLabel::Eps)),
                        S::Spine,
                    );
                }
                let fork = EncLabel::Sym(tau, LinkLevel::L1);
                for x in ALL_EQ_CHILD {
                    for y in [S::New, S::Spine] {
                        b.rule(x, y, (Some(fork), Some(fork)), S::D0);
                    }
                }
                for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
                    if let Some(c) = start_guard(*l, t.sym) {
                        b.rule(S::D0, S::Rem, (Some(*l), Some(*l)), c);
                    }
                }
            }
        }
        StackOp::Pop1 | StackOp::Collapse => {
            let lvl_req = match t.op {
                StackOp::Pop1 => None,
                _ => Some(LinkLevel::L1),
            };
            // Plain: the rightmost leaf of t₁ (a letter node carrying the
            // guard symbol) disappears.
            for l in &syms {
                if let EncLabel::Sym(s, lv) = l {
                    if *s == t.sym && lvl_req.map_or(true, |r| r == *lv) {
                        b.rule(S::Border, S::Border, (Some(*l), None), S::Rem);
                    }
                }
            }
            for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
                b.rule(S::Rem, S::Border, (Some(*l), Some(*l)), S::ClimbDone);
            }
            // Merge mirror: the rightmost ε-leaf under the `(σ,·)` fork
            // disappears and an ε right sibling of the fork appears.
            b.rule(S::Border, S::Border, (Some(EncLabel::Eps), None), S::RemT);
            for x in ALL_EQ_CHILD {
                b.rule(
                    x,
                    S::RemT,
                    (Some(EncLabel::Eps), Some(EncLabel::Eps)),
                    S::RSpine,
                );
                b.rule(
                    x,
                    S::RSpine,
                    (Some(EncLabel::Eps), Some(EncLabel::Eps)),
                    S::RSpine,
                );
            }
            for l in &syms {
                if let EncLabel::Sym(s, lv) = l {
                    if *s == t.sym && lvl_req.map_or(true, |r| r == *lv) {
                        for x in ALL_EQ_CHILD {
                            for y in [S::RemT, S::RSpine] {
                                b.rule(x, y, (Some(*l), Some(*l)), S::E0);
                            }
                        }
                    }
                }
            }
            b.rule(S::Border, S::Border, (None, Some(EncLabel::Eps)), S::New);
            for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
                b.rule(S::E0, S::New, (Some(*l), Some(*l)), S::ClimbDone);
            }
            if t.op == StackOp::Collapse {
                collapse_level2_rules(&mut b, cps, t);
            }
        }
        StackOp::Pop2 => {
            // The last word separator (an ε node on the rightmost path)
            // disappears together with the letter spine below it.
            for l in &syms {
                if let EncLabel::Sym(s, _) = l {
                    // Deepest removed letter carries the guard.
                    if *s == t.sym {
                        b.rule(S::Border, S::Border, (Some(*l), None), S::PopSpine);
                    }
                }
            }
            for l in &syms {
                b.rule(S::PopSpine, S::Border, (Some(*l), None), S::PopSpine);
            }
            b.rule(
                S::PopSpine,
                S::Border,
                (Some(EncLabel::Eps), None),
                S::CutDone,
            );
            b.rule(S::Border, S::Border, (Some(EncLabel::Eps), None), S::CutNeed);
            for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
                for x in ALL_EQ_CHILD {
                    b.rule(x, S::CutDone, (Some(*l), Some(*l)), S::ClimbDone);
                    if let Some(c) = start_guard(*l, t.sym) {
                        b.rule(x, S::CutNeed, (Some(*l), Some(*l)), c);
                    }
                }
            }
        }
    }
    b.root(t.from, t.to);
    b.finish()
}

/// Level-2 collapse: everything right of the separator above the linked
/// letter disappears; the linked letter `(σ,2)` is the deepest letter on
/// the rightmost path of t₁.
fn collapse_level2_rules(b: &mut Builder, cps: &Cps, t: &Transition) {
    let labels = enc_alphabet(cps);
    // Arbitrary removed subtrees.
    for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
        for x in [S::Border, S::RemAny] {
            for y in [S::Border, S::RemAny] {
                b.rule(x, y, (Some(*l), None), S::RemAny);
            }
        }
    }
    // The 1-chain from the rightmost leaf up to the linked letter.
    b.rule(S::Border, S::Border, (Some(EncLabel::Eps), None), S::RemChain);
    for x in [S::Border, S::RemAny] {
        b.rule(x, S::RemChain, (Some(EncLabel::Eps), None), S::RemChain);
    }
    // The linked letter: (σ,2) with the guard symbol.
    let p = EncLabel::Sym(t.sym, LinkLevel::L2);
    for x in [S::Border, S::RemAny] {
        for y in [S::Border, S::RemChain] {
            b.rule(x, y, (Some(p), None), S::RemP);
        }
    }
    // The 0-path from the separator down to the letter (no right children).
    for l in &labels {
        if let EncLabel::Sym(_, _) = l {
            for y in [S::RemP, S::RemUp] {
                b.rule(y, S::Border, (Some(*l), None), S::RemUp);
            }
        }
    }
    // The separator: an ε node whose only child is the 0-path.
    for y in [S::RemP, S::RemUp] {
        b.rule(y, S::Border, (Some(EncLabel::Eps), None), S::CutDone);
    }
    // Above the separator the trees agree; the guard was checked at the
    // letter.
    for l in labels.iter().filter(|l| !matches!(l, EncLabel::State(_))) {
        for x in ALL_EQ_CHILD {
            b.rule(x, S::CutDone, (Some(*l), Some(*l)), S::ClimbDone);
        }
    }
}

/// The union of the relation automata of all transitions labelled `γ`.
pub fn edge_relation_automaton(cps: &Cps, label: crate::alphabet::LabelId) -> Nfta<PairLabel> {
    let mut out: Option<Nfta<PairLabel>> = None;
    for t in cps.delta.iter().filter(|t| t.label == label) {
        let a = op_relation_automaton(cps, t);
        out = Some(match out {
            None => a,
            Some(u) => u.union(&a).expect("same alphabet"),
        });
    }
    out.unwrap_or_else(|| Nfta::new(1, pair_alphabet(cps), 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cps::Configuration;
    use crate::enc::encode;
    use crate::fixtures;
    use crate::stack::Stack2;
    use crate::tree::convolve2;

    fn pair_tree(
        c1: &Configuration,
        c2: &Configuration,
    ) -> crate::tree::Tree<PairLabel> {
        convolve2(&encode(c1), &encode(c2))
    }

    #[test]
    fn clone_relation_accepts_figure_edge() {
        let cps = fixtures::hague();
        let t = cps.delta[0]; // (0,⊥,Cl,1,Clone₂)
        let a = op_relation_automaton(&cps, &t);
        let c1 = cps.initial_config();
        let c2 = Configuration::new(
            StateId(1),
            Stack2::initial().apply(StackOp::Clone2).unwrap(),
        );
        assert!(a.accepts(&pair_tree(&c1, &c2)));
        // Mismatched states rejected.
        let c2bad = Configuration::new(StateId(2), c2.stack.clone());
        assert!(!a.accepts(&pair_tree(&c1, &c2bad)));
        // Wrong target stack rejected.
        assert!(!a.accepts(&pair_tree(&c1, &c1)));
    }

    #[test]
    fn relations_match_explored_edges_exactly() {
        let cps = fixtures::hague();
        let g = cps.bfs_explore(6, 100_000).unwrap();
        for (ti, tr) in cps.delta.iter().enumerate() {
            let a = op_relation_automaton(&cps, tr);
            let mut expected = std::collections::HashSet::new();
            for e in &g.edges {
                if e.transition == ti {
                    expected.insert((e.from, e.to));
                }
            }
            for (i, c1) in g.configs.iter().enumerate() {
                for (j, c2) in g.configs.iter().enumerate() {
                    let got = a.accepts(&pair_tree(c1, c2));
                    assert_eq!(
                        got,
                        expected.contains(&(i, j)),
                        "transition {ti} on pair {c1:?} → {c2:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn subreturns_relations_match_explored_edges() {
        let cps = fixtures::subreturns();
        // Explore from a configuration with interesting collapse links.
        let s = fixtures::subreturns_stack(&cps);
        let g = cps
            .bfs_from(Configuration::new(StateId(0), s), 5, 100_000)
            .unwrap();
        for (ti, tr) in cps.delta.iter().enumerate() {
            let a = op_relation_automaton(&cps, tr);
            let mut expected = std::collections::HashSet::new();
            for e in &g.edges {
                if e.transition == ti {
                    expected.insert((e.from, e.to));
                }
            }
            for (i, c1) in g.configs.iter().enumerate() {
                for (j, c2) in g.configs.iter().enumerate() {
                    let got = a.accepts(&pair_tree(c1, c2));
                    assert_eq!(
                        got,
                        expected.contains(&(i, j)),
                        "transition {ti} on pair {c1:?} → {c2:?}"
                    );
                }
            }
        }
    }
}
