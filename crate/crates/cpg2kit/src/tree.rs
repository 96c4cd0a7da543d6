//! Finite binary labelled trees with prefix-closed `{0,1}*` domains,
//! convolution, and a canonical text format.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A node address: a word over `{0,1}`, `false` = left.
pub type Node = Vec<bool>;

/// Lexicographic order on addresses with `0 < 1` and prefixes first.
pub fn lex_le(a: &[bool], b: &[bool]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return !*x;
        }
    }
    a.len() <= b.len()
}

/// Renders an address as a string of `0`/`1` (`ε` when empty).
pub fn node_name(d: &[bool]) -> String {
    if d.is_empty() {
        "ε".to_string()
    } else {
        d.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// A finite binary tree with labels `L`, stored as a sorted map over
/// addresses. The empty tree is allowed.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Tree<L> {
    map: BTreeMap<Node, L>,
}

impl<L: Clone> Tree<L> {
    pub fn empty() -> Self {
        Tree {
            map: BTreeMap::new(),
        }
    }

    pub fn leaf(label: L) -> Self {
        let mut map = BTreeMap::new();
        map.insert(Vec::new(), label);
        Tree { map }
    }

    /// Builds a tree from `(address, label)` pairs; fails when the domain
    /// is not prefix-closed.
    pub fn from_pairs<I: IntoIterator<Item = (Node, L)>>(pairs: I) -> Result<Self, String> {
        let map: BTreeMap<Node, L> = pairs.into_iter().collect();
        let t = Tree { map };
        if !t.is_prefix_closed() {
            return Err("tree domain is not prefix-closed".into());
        }
        Ok(t)
    }

    /// A root label with optional left and right subtrees.
    pub fn node(label: L, left: Option<Tree<L>>, right: Option<Tree<L>>) -> Self {
        let mut map = BTreeMap::new();
        map.insert(Vec::new(), label);
        if let Some(l) = left {
            for (d, v) in l.map {
                let mut nd = vec![false];
                nd.extend(d);
                map.insert(nd, v);
            }
        }
        if let Some(r) = right {
            for (d, v) in r.map {
                let mut nd = vec![true];
                nd.extend(d);
                map.insert(nd, v);
            }
        }
        Tree { map }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, d: &[bool]) -> Option<&L> {
        self.map.get(d)
    }

    pub fn contains(&self, d: &[bool]) -> bool {
        self.map.contains_key(d)
    }

    pub fn insert(&mut self, d: Node, label: L) {
        self.map.insert(d, label);
    }

    pub fn remove(&mut self, d: &[bool]) -> Option<L> {
        self.map.remove(d)
    }

    /// Addresses in domain order (the `BTreeMap` order: length-compatible
    /// lexicographic on `bool` vectors — shorter prefixes first).
    pub fn domain(&self) -> impl Iterator<Item = &Node> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Node, &L)> {
        self.map.iter()
    }

    pub fn depth(&self) -> usize {
        self.map.keys().map(|d| d.len()).max().unwrap_or(0)
    }

    fn is_prefix_closed(&self) -> bool {
        self.map.keys().all(|d| {
            d.is_empty() || {
                let parent = d[..d.len() - 1].to_vec();
                self.map.contains_key(&parent)
            }
        })
    }

    /// The subtree rooted at `d`.
    pub fn subtree(&self, d: &[bool]) -> Tree<L> {
        let mut map = BTreeMap::new();
        for (k, v) in &self.map {
            if k.len() >= d.len() && k[..d.len()] == *d {
                map.insert(k[d.len()..].to_vec(), v.clone());
            }
        }
        Tree { map }
    }

    /// Replaces the subtree at `d` by `sub` (removing what was there).
    pub fn splice(&self, d: &[bool], sub: &Tree<L>) -> Tree<L> {
        let mut map: BTreeMap<Node, L> = self
            .map
            .iter()
            .filter(|(k, _)| !(k.len() >= d.len() && k[..d.len()] == *d))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (k, v) in &sub.map {
            let mut nd = d.to_vec();
            nd.extend(k.iter().copied());
            map.insert(nd, v.clone());
        }
        Tree { map }
    }

    /// Restriction to the addresses satisfying `keep`.
    pub fn restrict<F: Fn(&[bool]) -> bool>(&self, keep: F) -> Tree<L> {
        Tree {
            map: self
                .map
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn map_labels<M: Clone, F: Fn(&L) -> M>(&self, f: F) -> Tree<M> {
        Tree {
            map: self.map.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    /// The lexicographically maximal address (the rightmost leaf).
    pub fn lex_max(&self) -> Option<Node> {
        let mut d = Vec::new();
        if self.map.is_empty() {
            return None;
        }
        loop {
            let mut right = d.clone();
            right.push(true);
            if self.map.contains_key(&right) {
                d = right;
                continue;
            }
            let mut left = d.clone();
            left.push(false);
            if self.map.contains_key(&left) {
                d = left;
                continue;
            }
            return Some(d);
        }
    }
}

/// Convolution of a list of trees: the domain is the union of domains, and
/// component `i` is `None` (the padding `□`) outside its tree.
pub fn convolve<L: Clone>(trees: &[Tree<L>]) -> Tree<Vec<Option<L>>> {
    let mut domain: Vec<Node> = Vec::new();
    for t in trees {
        for d in t.domain() {
            if !domain.contains(d) {
                domain.push(d.clone());
            }
        }
    }
    let mut map = BTreeMap::new();
    for d in domain {
        let label: Vec<Option<L>> = trees.iter().map(|t| t.get(&d).cloned()).collect();
        map.insert(d, label);
    }
    Tree { map }
}

/// Binary convolution with pair labels.
pub fn convolve2<A: Clone, B: Clone>(a: &Tree<A>, b: &Tree<B>) -> Tree<(Option<A>, Option<B>)> {
    let mut map = BTreeMap::new();
    for d in a.domain() {
        map.insert(d.clone(), (a.get(d).cloned(), b.get(d).cloned()));
    }
    for d in b.domain() {
        map.entry(d.clone())
            .or_insert_with(|| (a.get(d).cloned(), b.get(d).cloned()));
    }
    Tree { map }
}

impl<L: fmt::Display + Clone> Tree<L> {
    /// Canonical text format: `()` for the empty tree, otherwise
    /// `(label left right)` with `-` for an absent child.
    pub fn to_text(&self) -> String {
        fn rec<L: fmt::Display + Clone>(t: &Tree<L>, d: &mut Node, out: &mut String) {
            match t.get(d) {
                None => out.push('-'),
                Some(l) => {
                    out.push('(');
                    out.push_str(&l.to_string());
                    out.push(' ');
                    d.push(false);
                    rec(t, d, out);
                    d.pop();
                    out.push(' ');
                    d.push(true);
                    rec(t, d, out);
                    d.pop();
                    out.push(')');
                }
            }
        }
        if self.is_empty() {
            return "()".to_string();
        }
        let mut out = String::new();
        rec(self, &mut Vec::new(), &mut out);
        out
    }
}

impl Tree<String> {
    /// Parses the canonical text format with string labels.
    pub fn parse_text(text: &str) -> Result<Tree<String>, String> {
        let mut chars = text.trim().chars().peekable();
        if text.trim() == "()" {
            return Ok(Tree::empty());
        }
        let mut map = BTreeMap::new();
        parse_rec(&mut chars, &mut Vec::new(), &mut map)?;
        if chars.next().is_some() {
            return Err("trailing input after tree".into());
        }
        Ok(Tree { map })
    }
}

fn parse_rec(
    chars: &mut std::iter::Peekable<std::str::Chars>,
    d: &mut Node,
    map: &mut BTreeMap<Node, String>,
) -> Result<(), String> {
    skip_ws(chars);
    match chars.peek() {
        Some('-') => {
            chars.next();
            Ok(())
        }
        Some('(') => {
            chars.next();
            skip_ws(chars);
            let mut label = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                label.push(c);
                chars.next();
            }
            if label.is_empty() {
                return Err("empty label".into());
            }
            map.insert(d.clone(), label);
            d.push(false);
            parse_rec(chars, d, map)?;
            d.pop();
            d.push(true);
            parse_rec(chars, d, map)?;
            d.pop();
            skip_ws(chars);
            match chars.next() {
                Some(')') => Ok(()),
                _ => Err("expected ')'".into()),
            }
        }
        other => Err(format!("unexpected {other:?} in tree text")),
    }
}

fn skip_ws(chars: &mut std::iter::Peekable<std::str::Chars>) {
    while matches!(chars.peek(), Some(c) if c.is_whitespace()) {
        chars.next();
    }
}

/// DOT export with `0`-edges drawn solid and `1`-edges dashed.
pub fn tree_to_dot<L: fmt::Display + Clone>(t: &Tree<L>, name: &str) -> String {
    let mut out = format!("digraph {name} {{\n  ordering=out;\n");
    for (d, l) in t.iter() {
        out.push_str(&format!("  \"{}\" [label=\"{}\"];\n", node_name(d), l));
    }
    for (d, _) in t.iter() {
        if !d.is_empty() {
            let parent = &d[..d.len() - 1];
            let style = if *d.last().unwrap() { "dashed" } else { "solid" };
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [style={style}];\n",
                node_name(parent),
                node_name(d)
            ));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(s: &str) -> Node {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn lex_order_matches_convention() {
        assert!(lex_le(&path(""), &path("0")));
        assert!(lex_le(&path("0"), &path("001")));
        assert!(!lex_le(&path("001"), &path("0")));
        assert!(lex_le(&path("001"), &path("01")));
        assert!(lex_le(&path("001"), &path("1")));
        assert!(lex_le(&path("1"), &path("10")));
    }

    #[test]
    fn convolution_of_equal_trees_has_no_padding() {
        let t = Tree::node(
            "a".to_string(),
            Some(Tree::leaf("b".to_string())),
            None,
        );
        let c = convolve(&[t.clone(), t.clone()]);
        assert!(c
            .iter()
            .all(|(_, l)| l.iter().all(|x| x.is_some())));
        assert_eq!(c.len(), t.len());
        // Singleton convolution wraps labels in one-tuples.
        let c1 = convolve(&[t.clone()]);
        assert_eq!(c1.len(), t.len());
        assert!(c1.iter().all(|(_, l)| l.len() == 1));
    }

    #[test]
    fn text_roundtrip() {
        let t = Tree::node(
            "q".to_string(),
            Some(Tree::node(
                "x".to_string(),
                None,
                Some(Tree::leaf("e".to_string())),
            )),
            None,
        );
        let s = t.to_text();
        assert_eq!(Tree::parse_text(&s).unwrap(), t);
    }

    #[test]
    fn lex_max_is_rightmost_leaf() {
        let t: Tree<String> = Tree::from_pairs(vec![
            (path(""), "q".into()),
            (path("0"), "a".into()),
            (path("00"), "b".into()),
            (path("01"), "e".into()),
        ])
        .unwrap();
        assert_eq!(t.lex_max(), Some(path("01")));
    }
}
