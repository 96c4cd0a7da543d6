//! The bijection between configurations and encoding trees.
//!
//! A stack is cut into blocklines: a block is a maximal list of adjacent
//! words sharing their first two letters, and stripping the shared first
//! letter of a block induces the next blockline. The encoding tree stores
//! one letter class per left child and separates blocks along right
//! children labelled `ε`. Level-2 link widths are restored on decode by
//! counting lexicographically smaller word separators.

use crate::alphabet::{Alphabet, StateId, SymId, BOTTOM};
use crate::counting::LetterClass;
use crate::cps::{Configuration, Cps};
use crate::milestones::{milestones, MilestoneError};
use crate::nfta::Nfta;
use crate::stack::{Letter, LinkLevel, Stack2, Word};
use crate::tree::{lex_le, Node, Tree};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Labels of encoding trees: a control state at the root, letter classes
/// at left children, `ε` at right children.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum EncLabel {
    State(StateId),
    Sym(SymId, LinkLevel),
    Eps,
}

impl fmt::Display for EncLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncLabel::State(q) => write!(f, "q{}", q.0),
            EncLabel::Sym(s, LinkLevel::L1) => write!(f, "{}.1", s.0),
            EncLabel::Sym(s, LinkLevel::L2) => write!(f, "{}.2", s.0),
            EncLabel::Eps => write!(f, "e"),
        }
    }
}

/// An encoding tree (not yet validated).
pub type EncTree = Tree<EncLabel>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncError {
    #[error("condition 1 violated: root is not a control state")]
    RootNotState,
    #[error("condition 2 violated: left child {0} is not a letter (or 0 is not (⊥,1))")]
    LeftNotSym(String),
    #[error("condition 3 violated: right child {0} is not ε")]
    RightNotEps(String),
    #[error("condition 4 violated: the root must have a left child and no right child")]
    RootShape,
    #[error("condition 5 violated at {0}: sibling blocks share a level-1 letter")]
    SiblingMerge(String),
    #[error("decoded object is not a valid stack: {0}")]
    InvalidStack(String),
    #[error("node is the root")]
    RootNode,
    #[error("milestone structure broken: {0}")]
    Milestones(String),
}

/// `Encode(q, s)`: the state at the root, the stack encoding as its left
/// subtree.
pub fn encode(c: &Configuration) -> EncTree {
    let words: Vec<&[Letter]> = c.stack.words().iter().map(|w| w.as_slice()).collect();
    let stack_tree = encode_blockline(&words, label_of(words[0][0]));
    Tree::node(EncLabel::State(c.state), Some(stack_tree), None)
}

/// `Encode(s, σ)` on a raw stack.
pub fn encode_stack(s: &Stack2) -> EncTree {
    let words: Vec<&[Letter]> = s.words().iter().map(|w| w.as_slice()).collect();
    encode_blockline(&words, label_of(words[0][0]))
}

fn label_of(l: Letter) -> EncLabel {
    EncLabel::Sym(l.sym, l.level)
}

/// The blockline recursion: all words share their first letter; the first
/// maximal block goes left (stripped), the remaining blocks go right.
fn encode_blockline(words: &[&[Letter]], label: EncLabel) -> EncTree {
    let n = words.len();
    debug_assert!(n > 0 && !words[0].is_empty());
    if words[0].len() == 1 {
        if n == 1 {
            return Tree::leaf(label);
        }
        return Tree::node(label, None, Some(encode_blockline(&words[1..], EncLabel::Eps)));
    }
    // Maximal block: words sharing the first two letters with words[0].
    let mut j = 1;
    while j < n && words[j].len() >= 2 && words[j][..2] == words[0][..2] {
        j += 1;
    }
    let stripped: Vec<&[Letter]> = words[..j].iter().map(|w| &w[1..]).collect();
    let left = encode_blockline(&stripped, label_of(words[0][1]));
    if j == n {
        Tree::node(label, Some(left), None)
    } else {
        Tree::node(
            label,
            Some(left),
            Some(encode_blockline(&words[j..], EncLabel::Eps)),
        )
    }
}

/// Checks conditions 1–5 of the encoding-tree class, naming the violated
/// condition.
pub fn check_enc_tree(t: &EncTree) -> Result<(), EncError> {
    match t.get(&[]) {
        Some(EncLabel::State(_)) => {}
        _ => return Err(EncError::RootNotState),
    }
    if !t.contains(&[false]) || t.contains(&[true]) {
        return Err(EncError::RootShape);
    }
    for (d, l) in t.iter() {
        if d.is_empty() {
            continue;
        }
        let name = crate::tree::node_name(d);
        if *d.last().unwrap() {
            if *l != EncLabel::Eps {
                return Err(EncError::RightNotEps(name));
            }
        } else {
            match l {
                EncLabel::Sym(s, lvl) => {
                    // ⊥ occurs exactly once, as (⊥,1) at node 0.
                    if *s == BOTTOM && (d.len() != 1 || *lvl != LinkLevel::L1) {
                        return Err(EncError::LeftNotSym(name));
                    }
                }
                _ => return Err(EncError::LeftNotSym(name)),
            }
        }
    }
    match t.get(&[false]) {
        Some(EncLabel::Sym(s, LinkLevel::L1)) if *s == BOTTOM => {}
        _ => return Err(EncError::LeftNotSym("0".into())),
    }
    // Condition 5: T(t0) = (σ,1) implies T(t10) ≠ (σ,1).
    for (d, _) in t.iter() {
        let mut d0 = d.clone();
        d0.push(false);
        let mut d10 = d.clone();
        d10.push(true);
        d10.push(false);
        if let (Some(EncLabel::Sym(s1, LinkLevel::L1)), Some(EncLabel::Sym(s2, LinkLevel::L1))) =
            (t.get(&d0), t.get(&d10))
        {
            if s1 == s2 {
                return Err(EncError::SiblingMerge(crate::tree::node_name(d)));
            }
        }
    }
    Ok(())
}

/// `Decode`: the inverse of `encode`. Checks the tree conditions first and
/// validates the decoded stack.
pub fn decode(t: &EncTree) -> Result<Configuration, EncError> {
    check_enc_tree(t)?;
    let state = match t.get(&[]) {
        Some(EncLabel::State(q)) => *q,
        _ => unreachable!("checked above"),
    };
    let words = decode_rec(t, &[false], 0);
    let stack = Stack2::from_words(words);
    stack
        .validate()
        .map_err(|e| EncError::InvalidStack(e.to_string()))?;
    Ok(Configuration::new(state, stack))
}

/// `Decode(T↾d, g)`: the list of words encoded below `d`, with the first
/// letter of each word of the first block prefixed per the node label.
fn decode_rec(t: &EncTree, d: &[bool], g: u32) -> Vec<Word> {
    let head: Option<Letter> = match t.get(d) {
        Some(EncLabel::Sym(s, LinkLevel::L1)) => Some(Letter::l1(*s)),
        Some(EncLabel::Sym(s, LinkLevel::L2)) => Some(Letter::l2(*s, g)),
        Some(EncLabel::Eps) => None,
        _ => None,
    };
    let mut left = d.to_vec();
    left.push(false);
    let mut right = d.to_vec();
    right.push(true);
    let has_left = t.contains(&left);
    let has_right = t.contains(&right);
    let mut words: Vec<Word> = match (has_left, has_right) {
        (false, false) => vec![Vec::new()],
        (true, false) => decode_rec(t, &left, g),
        (false, true) => {
            let mut ws = vec![Vec::new()];
            ws.extend(decode_rec(t, &right, g + 1));
            ws
        }
        (true, true) => {
            let mut ws = decode_rec(t, &left, g);
            let gl = ws.len() as u32;
            ws.extend(decode_rec(t, &right, g + gl));
            ws
        }
    };
    if let Some(h) = head {
        // Prefix the letter to the words of the first block only: the
        // recursion has already separated the remaining blocks, so every
        // word at this level gets it.
        for w in &mut words {
            w.insert(0, h);
        }
    }
    words
}

/// The automaton recognising exactly the valid encoding trees of `cps`:
/// the tree-shape conditions are local, so states carry the label class
/// plus the level-1 symbol of the 0-child for the sibling condition.
pub fn enc_trees_automaton(cps: &Cps) -> Nfta<EncLabel> {
    let alphabet = enc_alphabet(cps);
    // States: 0 = border; then (class, zero_child_sym1) pairs; finally an
    // accepting root state per control state.
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Class {
        Sym(u16, LinkLevel),
        Eps,
    }
    let mut classes: Vec<(Class, Option<u16>)> = Vec::new();
    // Inner letters exclude ⊥; the (⊥,1) class exists only to feed the
    // root transition at node 0.
    let mut inner_syms: Vec<u16> = cps
        .alphabet
        .user_ids()
        .filter(|&s| s != BOTTOM)
        .map(|s| s.0)
        .collect();
    inner_syms.sort_unstable();
    let mut zc: Vec<Option<u16>> = vec![None];
    zc.extend(inner_syms.iter().map(|&s| Some(s)));
    for &s in &inner_syms {
        for lvl in [LinkLevel::L1, LinkLevel::L2] {
            for &z in &zc {
                classes.push((Class::Sym(s, lvl), z));
            }
        }
    }
    for &z in &zc {
        classes.push((Class::Eps, z));
        classes.push((Class::Sym(BOTTOM.0, LinkLevel::L1), z));
    }
    let state_of = |c: Class, z: Option<u16>| -> usize {
        1 + classes
            .iter()
            .position(|&(cc, zz)| cc == c && zz == z)
            .expect("class enumerated")
    };
    let root_base = 1 + classes.len();
    let n_states = root_base + cps.states.len();
    let mut aut = Nfta::new(n_states, alphabet, 0);
    let zc_of = |left: Option<(Class, Option<u16>)>| -> Option<u16> {
        match left {
            Some((Class::Sym(s, LinkLevel::L1), _)) => Some(s),
            _ => None,
        }
    };
    // Inner transitions: left children carry inner letters, right children
    // carry ε.
    let mut left_opts: Vec<Option<(Class, Option<u16>)>> = vec![None];
    left_opts.extend(
        classes
            .iter()
            .filter(|(c, _)| matches!(c, Class::Sym(s, _) if *s != BOTTOM.0))
            .map(|&c| Some(c)),
    );
    let mut right_opts: Vec<Option<(Class, Option<u16>)>> = vec![None];
    right_opts.extend(
        classes
            .iter()
            .filter(|(c, _)| matches!(c, Class::Eps))
            .map(|&c| Some(c)),
    );
    for &left in &left_opts {
        for &right in &right_opts {
            // Condition 5.
            if let (Some((Class::Sym(s1, LinkLevel::L1), _)), Some((Class::Eps, Some(s2)))) =
                (left, right)
            {
                if s1 == s2 {
                    continue;
                }
            }
            let lstate = left.map(|(c, z)| state_of(c, z)).unwrap_or(0);
            let rstate = right.map(|(c, z)| state_of(c, z)).unwrap_or(0);
            let z = zc_of(left);
            for &s in &inner_syms {
                for lvl in [LinkLevel::L1, LinkLevel::L2] {
                    aut.add_rule(
                        lstate,
                        rstate,
                        &EncLabel::Sym(SymId(s), lvl),
                        state_of(Class::Sym(s, lvl), z),
                    );
                }
            }
            aut.add_rule(lstate, rstate, &EncLabel::Eps, state_of(Class::Eps, z));
            // (⊥,1) for node 0 of a configuration tree.
            aut.add_rule(
                lstate,
                rstate,
                &EncLabel::Sym(BOTTOM, LinkLevel::L1),
                state_of(Class::Sym(BOTTOM.0, LinkLevel::L1), z),
            );
        }
    }
    // Root transitions: left child must be (⊥,1), right child absent.
    for q in 0..cps.states.len() {
        for &z in &zc {
            let l = state_of(Class::Sym(BOTTOM.0, LinkLevel::L1), z);
            aut.add_rule(l, 0, &EncLabel::State(StateId(q as u16)), root_base + q);
            aut.finals.insert(root_base + q);
        }
    }
    aut
}

/// The label alphabet of encoding trees over the system's states and
/// symbols.
pub fn enc_alphabet(cps: &Cps) -> Vec<EncLabel> {
    let mut out = vec![EncLabel::Eps];
    for q in 0..cps.states.len() {
        out.push(EncLabel::State(StateId(q as u16)));
    }
    for s in cps.alphabet.user_ids() {
        out.push(EncLabel::Sym(s, LinkLevel::L1));
        out.push(EncLabel::Sym(s, LinkLevel::L2));
    }
    out
}

/// `LeftStack(d, t)`: the decoding of the lexicographically-{≤ d} part of
/// the stack subtree, for `d ≠ ε` in a configuration tree.
pub fn left_stack(t: &EncTree, d: &[bool]) -> Result<Stack2, EncError> {
    if d.is_empty() {
        return Err(EncError::RootNode);
    }
    // Restrict to {d' ≤lex d} and re-root at 0 (all non-root nodes start
    // with 0 since the root has no right child).
    let restricted = t.restrict(|e| !e.is_empty() && lex_le(e, d));
    let sub = restricted.subtree(&[false]);
    let words = decode_rec(&sub, &[], 0);
    let stack = Stack2::from_words(words);
    stack
        .validate()
        .map_err(|e| EncError::InvalidStack(e.to_string()))?;
    Ok(stack)
}

/// Checks that `d ↦ LeftStack(d)` is an order isomorphism from the nodes of
/// `encode(c)` minus the root (lexicographic order) onto the milestones of
/// the stack (substack order).
pub fn milestone_iso(cps_stack: &Stack2, t: &EncTree) -> Result<(), EncError> {
    let ms: Vec<Stack2> =
        milestones(cps_stack).map_err(|e: MilestoneError| EncError::Milestones(e.to_string()))?;
    let mut nodes: Vec<Node> = t.domain().filter(|d| !d.is_empty()).cloned().collect();
    nodes.sort_by(|a, b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if lex_le(a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    if nodes.len() != ms.len() {
        return Err(EncError::Milestones(format!(
            "{} nodes vs {} milestones",
            nodes.len(),
            ms.len()
        )));
    }
    for (d, m) in nodes.iter().zip(ms.iter()) {
        let ls = left_stack(t, d)?;
        if &ls != m {
            return Err(EncError::Milestones(format!(
                "left stack at {} differs from its milestone",
                crate::tree::node_name(d)
            )));
        }
    }
    Ok(())
}

/// The top word of the left stack at `d`, read off the path from the root
/// (skipping `ε`), with level-2 links zeroed.
pub fn top_word_of_path(t: &EncTree, d: &[bool]) -> Result<Word, EncError> {
    if d.is_empty() {
        return Err(EncError::RootNode);
    }
    let mut word = Vec::new();
    for i in 1..=d.len() {
        match t.get(&d[..i]) {
            Some(EncLabel::Sym(s, lvl)) => word.push(
                LetterClass {
                    sym: *s,
                    level: *lvl,
                }
                .to_letter(),
            ),
            Some(EncLabel::Eps) => {}
            _ => {
                return Err(EncError::LeftNotSym(crate::tree::node_name(&d[..i])))
            }
        }
    }
    Ok(word)
}

/// Renders an encoding tree over the canonical text alphabet of a system.
pub fn enc_tree_to_text(t: &EncTree, cps: &Cps) -> String {
    t.map_labels(|l| display_label(l, &cps.alphabet, &cps.states)).to_text()
}

/// Parses the text produced by [`enc_tree_to_text`].
pub fn enc_tree_from_text(text: &str, cps: &Cps) -> Result<EncTree, String> {
    let raw = Tree::parse_text(text)?;
    let mut out = Tree::empty();
    for (d, l) in raw.iter() {
        out.insert(d.clone(), parse_label(l, &cps.alphabet, &cps.states)?);
    }
    Ok(out)
}

fn display_label(l: &EncLabel, alph: &Alphabet, states: &[String]) -> String {
    match l {
        EncLabel::State(q) => states[q.0 as usize].clone(),
        EncLabel::Sym(s, LinkLevel::L1) => format!("{},1", alph.name(*s)),
        EncLabel::Sym(s, LinkLevel::L2) => format!("{},2", alph.name(*s)),
        EncLabel::Eps => "e".to_string(),
    }
}

fn parse_label(text: &str, alph: &Alphabet, states: &[String]) -> Result<EncLabel, String> {
    if text == "e" {
        return Ok(EncLabel::Eps);
    }
    if let Some((sym, lvl)) = text.rsplit_once(',') {
        let level = match lvl {
            "1" => LinkLevel::L1,
            "2" => LinkLevel::L2,
            _ => return Err(format!("bad level {lvl}")),
        };
        let s = alph
            .lookup(sym)
            .ok_or_else(|| format!("unknown symbol {sym}"))?;
        return Ok(EncLabel::Sym(s, level));
    }
    states
        .iter()
        .position(|q| q == text)
        .map(|i| EncLabel::State(StateId(i as u16)))
        .ok_or_else(|| format!("unknown state {text}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::stack::StackOp;

    fn path(s: &str) -> Node {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn initial_configuration_encodes_to_two_nodes() {
        let cps = fixtures::hague();
        let t = encode(&cps.initial_config());
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(&path("0")), Some(&EncLabel::Sym(BOTTOM, LinkLevel::L1)));
        assert_eq!(decode(&t).unwrap(), cps.initial_config());
    }

    #[test]
    fn cloned_initial_has_right_eps_child() {
        let _cps = fixtures::hague();
        let c = Configuration::new(
            StateId(0),
            Stack2::initial().apply(StackOp::Clone2).unwrap(),
        );
        let t = encode(&c);
        assert_eq!(t.get(&path("01")), Some(&EncLabel::Eps));
        assert_eq!(t.len(), 3);
        assert_eq!(decode(&t).unwrap(), c);
    }

    #[test]
    fn five_word_example_encodes_to_figure_tree() {
        let mut alph = Alphabet::new();
        let s = fixtures::encoding_example_stack(&mut alph);
        let a = alph.lookup("a").unwrap();
        let b = alph.lookup("b").unwrap();
        let c = alph.lookup("c").unwrap();
        let d = alph.lookup("d").unwrap();
        let e = alph.lookup("e").unwrap();
        let t = encode_stack(&s);
        let expect: Vec<(&str, EncLabel)> = vec![
            ("", EncLabel::Sym(BOTTOM, LinkLevel::L1)),
            ("0", EncLabel::Sym(a, LinkLevel::L2)),
            ("00", EncLabel::Sym(b, LinkLevel::L2)),
            ("001", EncLabel::Eps),
            ("0010", EncLabel::Sym(c, LinkLevel::L2)),
            ("1", EncLabel::Eps),
            ("10", EncLabel::Sym(a, LinkLevel::L2)),
            ("100", EncLabel::Sym(c, LinkLevel::L1)),
            ("101", EncLabel::Eps),
            ("1010", EncLabel::Sym(d, LinkLevel::L2)),
            ("10100", EncLabel::Sym(e, LinkLevel::L1)),
            ("1011", EncLabel::Eps),
        ];
        assert_eq!(t.len(), expect.len());
        for (addr, label) in expect {
            assert_eq!(t.get(&path(addr)), Some(&label), "node {addr}");
        }
        // Decoding the configuration tree restores the exact links.
        let cfg = Tree::node(EncLabel::State(StateId(0)), Some(t), None);
        let back = decode(&cfg).unwrap();
        assert_eq!(back.stack, s);
    }

    #[test]
    fn decode_names_violated_conditions() {
        let cps = fixtures::hague();
        let t = encode(&cps.initial_config());
        // Root replaced by a letter: condition 1.
        let mut bad = t.clone();
        bad.insert(path(""), EncLabel::Sym(BOTTOM, LinkLevel::L1));
        assert_eq!(decode(&bad), Err(EncError::RootNotState));
        // A right child labelled by a letter: condition 3.
        let mut bad = t.clone();
        bad.insert(path("01"), EncLabel::Sym(BOTTOM, LinkLevel::L1));
        assert!(matches!(decode(&bad), Err(EncError::RightNotEps(_))));
    }

    #[test]
    fn sibling_merge_violation_is_rejected() {
        let cps = fixtures::hague();
        let a = cps.alphabet.lookup("a").unwrap();
        // Root q, 0:(⊥,1), 00:(a,1), 01:ε, 010:(a,1) violates condition 5
        // at node 0.
        let t: EncTree = Tree::from_pairs(vec![
            (path(""), EncLabel::State(StateId(0))),
            (path("0"), EncLabel::Sym(BOTTOM, LinkLevel::L1)),
            (path("00"), EncLabel::Sym(a, LinkLevel::L1)),
            (path("01"), EncLabel::Eps),
            (path("010"), EncLabel::Sym(a, LinkLevel::L1)),
        ])
        .unwrap();
        assert!(matches!(decode(&t), Err(EncError::SiblingMerge(_))));
        let aut = enc_trees_automaton(&cps);
        assert!(!aut.accepts(&t));
    }

    #[test]
    fn enc_automaton_accepts_bfs_encodings() {
        let cps = fixtures::hague();
        let aut = enc_trees_automaton(&cps);
        let g = cps.bfs_explore(6, 10_000).unwrap();
        for c in &g.configs {
            let t = encode(c);
            assert!(check_enc_tree(&t).is_ok());
            assert!(aut.accepts(&t), "rejects encode({c:?})");
        }
        // Root labelled (⊥,1) violates condition 1.
        let bad = Tree::leaf(EncLabel::Sym(BOTTOM, LinkLevel::L1));
        assert!(!aut.accepts(&bad));
    }

    #[test]
    fn enc_automaton_matches_checker_on_small_trees() {
        let cps = fixtures::hague();
        let aut = enc_trees_automaton(&cps);
        let a = cps.alphabet.lookup("a").unwrap();
        let labels = vec![
            EncLabel::State(StateId(0)),
            EncLabel::Sym(BOTTOM, LinkLevel::L1),
            EncLabel::Sym(a, LinkLevel::L1),
            EncLabel::Sym(a, LinkLevel::L2),
            EncLabel::Eps,
        ];
        for t in crate::nfta::all_trees(&labels, 2) {
            let ok = check_enc_tree(&t).is_ok();
            assert_eq!(aut.accepts(&t), ok, "tree {}", t.to_text());
        }
    }

    #[test]
    fn enc_automaton_matches_checker_on_mutated_encodings() {
        let cps = fixtures::hague();
        let aut = enc_trees_automaton(&cps);
        let a = cps.alphabet.lookup("a").unwrap();
        let g = cps.bfs_explore(7, 10_000).unwrap();
        let labels = [
            EncLabel::State(StateId(1)),
            EncLabel::Sym(BOTTOM, LinkLevel::L1),
            EncLabel::Sym(a, LinkLevel::L1),
            EncLabel::Sym(a, LinkLevel::L2),
            EncLabel::Eps,
        ];
        for c in &g.configs {
            let t = encode(c);
            let nodes: Vec<Node> = t.domain().cloned().collect();
            for d in &nodes {
                for l in labels {
                    let mut m = t.clone();
                    m.insert(d.clone(), l);
                    let ok = check_enc_tree(&m).is_ok();
                    assert_eq!(aut.accepts(&m), ok, "mutated {}", m.to_text());
                }
                // Dropping a leaf keeps the domain prefix-closed.
                let is_leaf = {
                    let mut l0 = d.clone();
                    l0.push(false);
                    let mut l1 = d.clone();
                    l1.push(true);
                    !t.contains(&l0) && !t.contains(&l1)
                };
                if is_leaf && !d.is_empty() {
                    let mut m = t.clone();
                    m.remove(d);
                    let ok = check_enc_tree(&m).is_ok();
                    assert_eq!(aut.accepts(&m), ok, "pruned {}", m.to_text());
                }
            }
        }
    }

    #[test]
    fn left_stacks_walk_the_milestones() {
        let mut alph = Alphabet::new();
        let s = fixtures::encoding_example_stack(&mut alph);
        let t = encode(&Configuration::new(StateId(0), s.clone()));
        // Node 0 is the initial stack; the rightmost leaf is s itself.
        assert_eq!(left_stack(&t, &path("0")).unwrap(), Stack2::initial());
        let rm = t.lex_max().unwrap();
        assert_eq!(left_stack(&t, &rm).unwrap(), s);
        milestone_iso(&s, &t).unwrap();
        // Path words match the left stacks' top words.
        for d in t.domain().filter(|d| !d.is_empty()) {
            let w = top_word_of_path(&t, d).unwrap();
            let ls = left_stack(&t, d).unwrap();
            assert_eq!(w, ls.top_word_down0(), "at {}", crate::tree::node_name(d));
        }
    }

    #[test]
    fn roundtrip_on_bfs_configurations() {
        let cps = fixtures::hague();
        let g = cps.bfs_explore(8, 100_000).unwrap();
        for c in &g.configs {
            let t = encode(c);
            assert_eq!(&decode(&t).unwrap(), c);
        }
    }
}
