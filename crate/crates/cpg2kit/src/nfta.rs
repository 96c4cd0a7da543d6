//! Bottom-up nondeterministic finite tree automata.
//!
//! Run semantics: a run maps the one-layer extension of the tree domain to
//! states, assigns the initial state to every border node, and respects the
//! transition relation `(left, right, label, state)` at every node;
//! acceptance is a final state at the root. The empty tree is accepted iff
//! the initial state is final.

use crate::tree::{Node, Tree};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use thiserror::Error;

/// Transition `(left, right, label, target)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Rule(pub usize, pub usize, pub usize, pub usize);

/// A bottom-up NFTA over label type `L`.
#[derive(Clone, Debug)]
pub struct Nfta<L> {
    pub n_states: usize,
    pub alphabet: Vec<L>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
    /// Rules with label indices into `alphabet`.
    pub rules: Vec<Rule>,
    /// Optional state names for DOT/JSON output.
    pub names: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NftaError {
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error("tree is not accepted or too shallow to pump (depth {depth} ≤ {states} states)")]
    NotPumpable { depth: usize, states: usize },
}

pub trait Label: Clone + Eq + Hash + Ord + fmt::Debug {}
impl<T: Clone + Eq + Hash + Ord + fmt::Debug> Label for T {}

impl<L: Label> Nfta<L> {
    pub fn new(n_states: usize, alphabet: Vec<L>, initial: usize) -> Self {
        Nfta {
            n_states,
            alphabet,
            initial,
            finals: BTreeSet::new(),
            rules: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn label_id(&self, l: &L) -> Option<usize> {
        self.alphabet.iter().position(|x| x == l)
    }

    pub fn add_rule(&mut self, left: usize, right: usize, label: &L, to: usize) {
        let li = self
            .label_id(label)
            .expect("label must be in the alphabet");
        self.rules.push(Rule(left, right, li, to));
    }

    fn rules_by_label(&self) -> Vec<Vec<Rule>> {
        let mut by = vec![Vec::new(); self.alphabet.len()];
        for r in &self.rules {
            by[r.2].push(*r);
        }
        by
    }

    /// The set of states reachable at the root of `t` over all runs.
    pub fn states_of(&self, t: &Tree<L>) -> HashSet<usize> {
        if t.is_empty() {
            return HashSet::from([self.initial]);
        }
        let by = self.rules_by_label();
        let mut memo: HashMap<Node, HashSet<usize>> = HashMap::new();
        // Process nodes deepest-first (BTreeMap iteration is not by depth).
        let mut nodes: Vec<Node> = t.domain().cloned().collect();
        nodes.sort_by_key(|d| std::cmp::Reverse(d.len()));
        for d in nodes {
            let label = t.get(&d).unwrap();
            let li = match self.label_id(label) {
                Some(li) => li,
                None => {
                    memo.insert(d, HashSet::new());
                    continue;
                }
            };
            let mut left = d.clone();
            left.push(false);
            let mut right = d.clone();
            right.push(true);
            let ls = memo
                .get(&left)
                .cloned()
                .unwrap_or_else(|| HashSet::from([self.initial]));
            let rs = memo
                .get(&right)
                .cloned()
                .unwrap_or_else(|| HashSet::from([self.initial]));
            let mut here = HashSet::new();
            for r in &by[li] {
                if ls.contains(&r.0) && rs.contains(&r.1) {
                    here.insert(r.3);
                }
            }
            memo.insert(d, here);
        }
        memo.remove(&Vec::new()).unwrap_or_default()
    }

    pub fn accepts(&self, t: &Tree<L>) -> bool {
        self.states_of(t)
            .iter()
            .any(|q| self.finals.contains(q))
    }

    /// Bottom-up subset construction with reachable-state pruning. The
    /// result is bottom-up deterministic and complete; state 0 is the
    /// border subset `{initial}`.
    pub fn determinize(&self) -> Dfta<L> {
        let by = self.rules_by_label();
        let mut subsets: Vec<BTreeSet<usize>> = vec![BTreeSet::from([self.initial])];
        let mut index: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        index.insert(subsets[0].clone(), 0);
        let mut table: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut work = vec![];
        // Seed with the empty subset id lazily when needed.
        let mut changed = true;
        while changed {
            changed = false;
            let current = subsets.clone();
            for (i, si) in current.iter().enumerate() {
                for (j, sj) in current.iter().enumerate() {
                    for (li, rules) in by.iter().enumerate() {
                        if table.contains_key(&(i, j, li)) {
                            continue;
                        }
                        let mut target = BTreeSet::new();
                        for r in rules {
                            if si.contains(&r.0) && sj.contains(&r.1) {
                                target.insert(r.3);
                            }
                        }
                        let ti = match index.get(&target) {
                            Some(&t) => t,
                            None => {
                                let t = subsets.len();
                                subsets.push(target.clone());
                                index.insert(target, t);
                                changed = true;
                                t
                            }
                        };
                        table.insert((i, j, li), ti);
                        work.push(());
                    }
                }
            }
        }
        let finals = subsets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.iter().any(|q| self.finals.contains(q)))
            .map(|(i, _)| i)
            .collect();
        Dfta {
            alphabet: self.alphabet.clone(),
            subsets,
            table,
            finals,
        }
    }

    /// Complement through determinization.
    pub fn complement(&self) -> Nfta<L> {
        let d = self.determinize();
        d.to_nfta_with_finals(|i, d| !d.finals.contains(&i))
    }

    /// Product intersection.
    pub fn intersect(&self, other: &Nfta<L>) -> Result<Nfta<L>, NftaError> {
        if self.alphabet != other.alphabet {
            return Err(NftaError::AlphabetMismatch);
        }
        let pair = |a: usize, b: usize| a * other.n_states + b;
        let mut out = Nfta::new(
            self.n_states * other.n_states,
            self.alphabet.clone(),
            pair(self.initial, other.initial),
        );
        for ra in &self.rules {
            for rb in &other.rules {
                if ra.2 == rb.2 {
                    out.rules.push(Rule(
                        pair(ra.0, rb.0),
                        pair(ra.1, rb.1),
                        ra.2,
                        pair(ra.3, rb.3),
                    ));
                }
            }
        }
        for &fa in &self.finals {
            for &fb in &other.finals {
                out.finals.insert(pair(fa, fb));
            }
        }
        Ok(out)
    }

    /// Union: disjoint sum with a shared fresh border state.
    pub fn union(&self, other: &Nfta<L>) -> Result<Nfta<L>, NftaError> {
        if self.alphabet != other.alphabet {
            return Err(NftaError::AlphabetMismatch);
        }
        let map_a = |q: usize| 1 + q;
        let map_b = |q: usize| 1 + self.n_states + q;
        let mut out = Nfta::new(
            1 + self.n_states + other.n_states,
            self.alphabet.clone(),
            0,
        );
        let fix = |q: usize, init: usize, f: &dyn Fn(usize) -> usize| {
            if q == init {
                // the border state is shared; original initial states keep
                // their identity for non-border uses as well, so add both
                // variants below
                0
            } else {
                f(q)
            }
        };
        // Border positions may be filled by either the shared state 0 or a
        // run-internal use of the original initial state: emit both.
        for r in &self.rules {
            let lefts = if r.0 == self.initial {
                vec![0, map_a(r.0)]
            } else {
                vec![map_a(r.0)]
            };
            let rights = if r.1 == self.initial {
                vec![0, map_a(r.1)]
            } else {
                vec![map_a(r.1)]
            };
            for &l in &lefts {
                for &rr in &rights {
                    out.rules.push(Rule(l, rr, r.2, map_a(r.3)));
                }
            }
        }
        for r in &other.rules {
            let lefts = if r.0 == other.initial {
                vec![0, map_b(r.0)]
            } else {
                vec![map_b(r.0)]
            };
            let rights = if r.1 == other.initial {
                vec![0, map_b(r.1)]
            } else {
                vec![map_b(r.1)]
            };
            for &l in &lefts {
                for &rr in &rights {
                    out.rules.push(Rule(l, rr, r.2, map_b(r.3)));
                }
            }
        }
        let _ = fix;
        for &f in &self.finals {
            out.finals.insert(map_a(f));
        }
        for &f in &other.finals {
            out.finals.insert(map_b(f));
        }
        if self.finals.contains(&self.initial) || other.finals.contains(&other.initial) {
            out.finals.insert(0);
        }
        Ok(out)
    }

    /// Relabelling (projection): replaces each label by its image,
    /// collapsing the alphabet.
    pub fn relabel<M: Label, F: Fn(&L) -> M>(&self, target_alphabet: Vec<M>, f: F) -> Nfta<M> {
        let mut out = Nfta::new(self.n_states, target_alphabet, self.initial);
        out.finals = self.finals.clone();
        for r in &self.rules {
            let m = f(&self.alphabet[r.2]);
            let mi = out
                .label_id(&m)
                .expect("image label must be in the target alphabet");
            out.rules.push(Rule(r.0, r.1, mi, r.3));
        }
        out.dedup_rules();
        out
    }

    pub fn dedup_rules(&mut self) {
        let set: BTreeSet<(usize, usize, usize, usize)> = self
            .rules
            .iter()
            .map(|r| (r.0, r.1, r.2, r.3))
            .collect();
        self.rules = set.into_iter().map(|(a, b, c, d)| Rule(a, b, c, d)).collect();
    }

    /// States inhabited by some tree (border-or-inhabited closure).
    fn inhabited(&self) -> Vec<bool> {
        let mut inh = vec![false; self.n_states];
        let mut changed = true;
        while changed {
            changed = false;
            for r in &self.rules {
                let l_ok = inh[r.0] || r.0 == self.initial;
                let r_ok = inh[r.1] || r.1 == self.initial;
                if l_ok && r_ok && !inh[r.3] {
                    inh[r.3] = true;
                    changed = true;
                }
            }
        }
        inh
    }

    /// Removes states that are not inhabited or cannot reach a final state
    /// through inhabited contexts, remapping the survivors.
    pub fn trim(&self) -> Nfta<L> {
        let inh = self.inhabited();
        let ok = |q: usize| inh[q] || q == self.initial;
        // Upward closure towards finals.
        let mut co = vec![false; self.n_states];
        for &f in &self.finals {
            co[f] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for r in &self.rules {
                if co[r.3] && ok(r.0) && ok(r.1) {
                    if !co[r.0] {
                        co[r.0] = true;
                        changed = true;
                    }
                    if !co[r.1] {
                        co[r.1] = true;
                        changed = true;
                    }
                }
            }
        }
        let keep: Vec<usize> = (0..self.n_states)
            .filter(|&q| (ok(q) && co[q]) || q == self.initial)
            .collect();
        let mut remap = vec![usize::MAX; self.n_states];
        for (i, &q) in keep.iter().enumerate() {
            remap[q] = i;
        }
        let mut out = Nfta::new(keep.len(), self.alphabet.clone(), remap[self.initial]);
        for r in &self.rules {
            if ok(r.0) && ok(r.1) && co[r.3] && remap[r.0] != usize::MAX
                && remap[r.1] != usize::MAX
                && remap[r.3] != usize::MAX
            {
                out.rules.push(Rule(remap[r.0], remap[r.1], r.2, remap[r.3]));
            }
        }
        for &f in &self.finals {
            if remap[f] != usize::MAX {
                out.finals.insert(remap[f]);
            }
        }
        out.dedup_rules();
        out
    }

    /// All accepted trees of depth at most `depth`; errors out when the
    /// per-state tree sets exceed `cap`.
    pub fn language_up_to_depth(&self, depth: usize, cap: usize) -> Result<Vec<Tree<L>>, String> {
        let mut sets: Vec<Vec<Tree<L>>> = vec![Vec::new(); self.n_states];
        let by = self.rules_by_label();
        for _ in 0..=depth {
            let mut next: Vec<Vec<Tree<L>>> = vec![Vec::new(); self.n_states];
            for (li, rules) in by.iter().enumerate() {
                for r in rules {
                    let lefts: Vec<Option<Tree<L>>> = child_options(self, &sets, r.0);
                    let rights: Vec<Option<Tree<L>>> = child_options(self, &sets, r.1);
                    for l in &lefts {
                        for rr in &rights {
                            let t = Tree::node(
                                self.alphabet[li].clone(),
                                l.clone(),
                                rr.clone(),
                            );
                            if !next[r.3].contains(&t) {
                                next[r.3].push(t);
                            }
                        }
                    }
                    if next[r.3].len() > cap {
                        return Err(format!("language enumeration exceeded {cap} trees"));
                    }
                }
            }
            // Keep older (shallower) trees too.
            for (q, old) in sets.iter().enumerate() {
                for t in old {
                    if !next[q].contains(t) {
                        next[q].push(t.clone());
                    }
                }
            }
            sets = next;
        }
        let mut out: Vec<Tree<L>> = Vec::new();
        if self.finals.contains(&self.initial) {
            out.push(Tree::empty());
        }
        for &f in &self.finals {
            for t in &sets[f] {
                if t.depth() <= depth && !out.contains(t) {
                    out.push(t.clone());
                }
            }
        }
        Ok(out)
    }

    /// Language emptiness (the empty tree counts when the initial state is
    /// final).
    pub fn is_empty(&self) -> bool {
        if self.finals.contains(&self.initial) {
            return false;
        }
        let inh = self.inhabited();
        !self.finals.iter().any(|&f| inh[f])
    }

    /// Finiteness of the language, decided by the absence of accepted trees
    /// with depth in `[n, 2n]` for `n` the number of states.
    pub fn is_finite(&self) -> bool {
        let n = self.n_states.max(1);
        let reach = self.depth_table(2 * n + 1);
        for d in n..=2 * n {
            for &f in &self.finals {
                if reach[d][f] {
                    return false;
                }
            }
        }
        true
    }

    /// `exact[d][q]`: is some tree of depth exactly `d` evaluated to `q`?
    fn depth_table(&self, up_to: usize) -> Vec<Vec<bool>> {
        let mut exact = vec![vec![false; self.n_states]; up_to + 1];
        let mut cum = vec![vec![false; self.n_states]; up_to + 1];
        for r in &self.rules {
            if r.0 == self.initial && r.1 == self.initial {
                exact[0][r.3] = true;
            }
        }
        for q in 0..self.n_states {
            cum[0][q] = exact[0][q];
        }
        for d in 1..=up_to {
            for r in &self.rules {
                let l_exact = exact[d - 1][r.0];
                let r_exact = exact[d - 1][r.1];
                let l_le = cum[d - 1][r.0] || r.0 == self.initial;
                let r_le = cum[d - 1][r.1] || r.1 == self.initial;
                if (l_exact && r_le) || (r_exact && l_le) {
                    exact[d][r.3] = true;
                }
            }
            for q in 0..self.n_states {
                cum[d][q] = cum[d - 1][q] || exact[d][q];
            }
        }
        exact
    }

    /// Exact language count: `None` means infinite.
    pub fn count_language(&self) -> Option<BigUint> {
        if !self.is_finite() {
            return None;
        }
        let d = self.determinize();
        let n = d.subsets.len().max(1);
        // All accepted trees have depth < n (pumping); count by depth DP.
        let counts = d.count_up_to(n);
        let mut total: BigUint = BigUint::zero();
        for &f in &d.finals {
            total += counts[f].clone();
        }
        // The empty tree.
        if d.finals.contains(&0) {
            total += BigUint::one();
        }
        Some(total)
    }

    /// Pumping decomposition of an accepted tree of depth > |Q|: returns
    /// the pumping addresses `(d, d')`, the deflated accepted tree `t0`,
    /// and an iterator of inflations `t1 = t, t2, …` all accepted.
    pub fn pump(&self, t: &Tree<L>) -> Result<Pumped<L>, NftaError> {
        if !self.accepts(t) || t.depth() <= self.n_states {
            return Err(NftaError::NotPumpable {
                depth: t.depth(),
                states: self.n_states,
            });
        }
        // A concrete accepting run, then two equal states along a deepest
        // path.
        let run = self.some_accepting_run(t).expect("accepted tree has a run");
        // Find a path to a deepest node.
        let mut deepest: Node = Vec::new();
        for d in t.domain() {
            if d.len() > deepest.len() {
                deepest = d.clone();
            }
        }
        let mut seen: HashMap<usize, Node> = HashMap::new();
        let mut pair: Option<(Node, Node)> = None;
        for i in 0..=deepest.len() {
            let prefix = deepest[..i].to_vec();
            let q = run[&prefix];
            if let Some(first) = seen.get(&q) {
                pair = Some((first.clone(), prefix));
                break;
            }
            seen.insert(q, prefix);
        }
        let (d, d2) = pair.expect("pigeonhole on a path longer than |Q|");
        let t0 = t.splice(&d, &t.subtree(&d2));
        Ok(Pumped {
            outer: d,
            inner: d2,
            deflated: t0,
            current: t.clone(),
        })
    }

    /// One accepting run as a map from the extended domain to states.
    fn some_accepting_run(&self, t: &Tree<L>) -> Option<HashMap<Node, usize>> {
        let by = self.rules_by_label();
        // Bottom-up state sets, then top-down choice.
        let mut sets: HashMap<Node, HashSet<usize>> = HashMap::new();
        let mut nodes: Vec<Node> = t.domain().cloned().collect();
        nodes.sort_by_key(|d| std::cmp::Reverse(d.len()));
        for d in &nodes {
            let li = self.label_id(t.get(d).unwrap())?;
            let mut l = d.clone();
            l.push(false);
            let mut r = d.clone();
            r.push(true);
            let ls = sets
                .get(&l)
                .cloned()
                .unwrap_or_else(|| HashSet::from([self.initial]));
            let rs = sets
                .get(&r)
                .cloned()
                .unwrap_or_else(|| HashSet::from([self.initial]));
            let mut here = HashSet::new();
            for rule in &by[li] {
                if ls.contains(&rule.0) && rs.contains(&rule.1) {
                    here.insert(rule.3);
                }
            }
            sets.insert(d.clone(), here);
        }
        let root_q = *sets
            .get(&Vec::new())?
            .iter()
            .find(|q| self.finals.contains(q))?;
        let mut run = HashMap::new();
        let mut stack = vec![(Vec::new(), root_q)];
        while let Some((d, q)) = stack.pop() {
            run.insert(d.clone(), q);
            if !t.contains(&d) {
                continue;
            }
            let li = self.label_id(t.get(&d).unwrap())?;
            let mut l = d.clone();
            l.push(false);
            let mut r = d.clone();
            r.push(true);
            let ls = sets
                .get(&l)
                .cloned()
                .unwrap_or_else(|| HashSet::from([self.initial]));
            let rs = sets
                .get(&r)
                .cloned()
                .unwrap_or_else(|| HashSet::from([self.initial]));
            let rule = by[li]
                .iter()
                .find(|rule| rule.3 == q && ls.contains(&rule.0) && rs.contains(&rule.1))?;
            if t.contains(&l) {
                stack.push((l, rule.0));
            } else {
                run.insert(l, self.initial);
            }
            if t.contains(&r) {
                stack.push((r, rule.1));
            } else {
                run.insert(r, self.initial);
            }
        }
        Some(run)
    }

    /// Complete language-equivalence decision via the product of the
    /// determinizations: the languages differ iff some reachable state
    /// pair disagrees on finality.
    pub fn equivalent(&self, other: &Nfta<L>) -> Result<bool, NftaError> {
        if self.alphabet != other.alphabet {
            return Err(NftaError::AlphabetMismatch);
        }
        let da = self.determinize();
        let db = other.determinize();
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut frontier = vec![(0usize, 0usize)];
        seen.insert((0, 0));
        while !frontier.is_empty() {
            // Check every known pair (including the border pair, which
            // decides the empty tree).
            for &(x, y) in &frontier {
                if da.finals.contains(&x) != db.finals.contains(&y) {
                    return Ok(false);
                }
            }
            let snapshot: Vec<(usize, usize)> = seen.iter().copied().collect();
            let mut next = Vec::new();
            for &(x0, y0) in &snapshot {
                for &(x1, y1) in &snapshot {
                    for li in 0..self.alphabet.len() {
                        let p = (da.step(x0, x1, li), db.step(y0, y1, li));
                        if seen.insert(p) {
                            next.push(p);
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(true)
    }

    /// Whether the two automata agree on every tree of depth at most
    /// `depth` (including the empty tree). Decided exhaustively over the
    /// reachable pairs of deterministic evaluations per depth layer; two
    /// trees with the same state pair are indistinguishable, so this checks
    /// exactly the stated quantifier.
    pub fn agree_to_depth(&self, other: &Nfta<L>, depth: usize) -> Result<bool, NftaError> {
        if self.alphabet != other.alphabet {
            return Err(NftaError::AlphabetMismatch);
        }
        let da = self.determinize();
        let db = other.determinize();
        let mut pairs: HashSet<(usize, usize)> = HashSet::from([(0, 0)]);
        for _ in 0..=depth {
            let snapshot: Vec<(usize, usize)> = pairs.iter().copied().collect();
            for &(x0, y0) in &snapshot {
                for &(x1, y1) in &snapshot {
                    for li in 0..self.alphabet.len() {
                        pairs.insert((da.step(x0, x1, li), db.step(y0, y1, li)));
                    }
                }
            }
        }
        Ok(pairs
            .iter()
            .all(|&(x, y)| da.finals.contains(&x) == db.finals.contains(&y)))
    }

    /// JSON interchange dump: states as strings, rules as 4-tuples.
    pub fn to_json(&self) -> serde_json::Value
    where
        L: fmt::Display,
    {
        let name = |q: usize| -> String {
            self.names
                .get(q)
                .cloned()
                .unwrap_or_else(|| format!("s{q}"))
        };
        serde_json::json!({
            "states": (0..self.n_states).map(name).collect::<Vec<_>>(),
            "alphabet": self.alphabet.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "initial": name(self.initial),
            "finals": self.finals.iter().map(|&q| name(q)).collect::<Vec<_>>(),
            "rules": self.rules.iter().map(|r| {
                serde_json::json!([name(r.0), name(r.1), self.alphabet[r.2].to_string(), name(r.3)])
            }).collect::<Vec<_>>(),
        })
    }

    /// DOT export: hyperedges through point-shaped connector nodes.
    pub fn to_dot(&self, graph: &str) -> String
    where
        L: fmt::Display,
    {
        let mut out = format!("digraph {graph} {{\n");
        for q in 0..self.n_states {
            let shape = if self.finals.contains(&q) {
                "doublecircle"
            } else {
                "circle"
            };
            let extra = if q == self.initial { ", style=bold" } else { "" };
            out.push_str(&format!("  q{q} [shape={shape}{extra}];\n"));
        }
        for (i, r) in self.rules.iter().enumerate() {
            out.push_str(&format!("  r{i} [shape=point];\n"));
            out.push_str(&format!("  q{} -> r{i} [label=\"0\"];\n", r.0));
            out.push_str(&format!("  q{} -> r{i} [label=\"1\"];\n", r.1));
            out.push_str(&format!(
                "  r{i} -> q{} [label=\"{}\"];\n",
                r.3, self.alphabet[r.2]
            ));
        }
        out.push_str("}\n");
        out
    }
}

fn child_options<L: Label>(
    aut: &Nfta<L>,
    sets: &[Vec<Tree<L>>],
    state: usize,
) -> Vec<Option<Tree<L>>> {
    let mut out: Vec<Option<Tree<L>>> = Vec::new();
    if state == aut.initial {
        out.push(None);
    }
    for t in &sets[state] {
        out.push(Some(t.clone()));
    }
    out
}

/// The pumping decomposition with its inflation generator.
pub struct Pumped<L> {
    pub outer: Node,
    pub inner: Node,
    pub deflated: Tree<L>,
    current: Tree<L>,
}

impl<L: Label> Iterator for Pumped<L> {
    type Item = Tree<L>;

    fn next(&mut self) -> Option<Tree<L>> {
        let t = self.current.clone();
        self.current = self
            .current
            .splice(&self.inner, &self.current.subtree(&self.outer));
        Some(t)
    }
}

/// A complete bottom-up deterministic automaton. State 0 is the border
/// subset; the table is total on explored subsets.
#[derive(Clone, Debug)]
pub struct Dfta<L> {
    pub alphabet: Vec<L>,
    pub subsets: Vec<BTreeSet<usize>>,
    pub table: HashMap<(usize, usize, usize), usize>,
    pub finals: BTreeSet<usize>,
}

impl<L: Label> Dfta<L> {
    pub fn to_nfta(&self) -> Nfta<L> {
        self.to_nfta_with_finals(|i, d| d.finals.contains(&i))
    }

    fn to_nfta_with_finals<F: Fn(usize, &Dfta<L>) -> bool>(&self, fin: F) -> Nfta<L> {
        let mut out = Nfta::new(self.subsets.len(), self.alphabet.clone(), 0);
        for (&(l, r, li), &t) in &self.table {
            out.rules.push(Rule(l, r, li, t));
        }
        for i in 0..self.subsets.len() {
            if fin(i, self) {
                out.finals.insert(i);
            }
        }
        out
    }

    pub fn step(&self, l: usize, r: usize, label: usize) -> usize {
        *self
            .table
            .get(&(l, r, label))
            .expect("determinization is complete on explored subsets")
    }

    /// The deterministic evaluation of a tree (state 0 for the empty tree).
    pub fn eval(&self, t: &Tree<L>) -> Option<usize> {
        let mut memo: HashMap<Node, usize> = HashMap::new();
        let mut nodes: Vec<Node> = t.domain().cloned().collect();
        nodes.sort_by_key(|d| std::cmp::Reverse(d.len()));
        for d in nodes {
            let li = self.alphabet.iter().position(|x| x == t.get(&d).unwrap())?;
            let mut l = d.clone();
            l.push(false);
            let mut r = d.clone();
            r.push(true);
            let ls = memo.get(&l).copied().unwrap_or(0);
            let rs = memo.get(&r).copied().unwrap_or(0);
            memo.insert(d, self.step(ls, rs, li));
        }
        Some(memo.get(&Vec::new()).copied().unwrap_or(0))
    }

    /// Number of trees of depth ≤ `up_to` evaluating to each state.
    pub fn count_up_to(&self, up_to: usize) -> Vec<BigUint> {
        let n = self.subsets.len();
        let mut m: Vec<BigUint> = vec![BigUint::zero(); n];
        for _ in 0..=up_to {
            let mut next: Vec<BigUint> = vec![BigUint::zero(); n];
            for (&(l, r, _li), &t) in &self.table {
                let gl = m[l].clone() + if l == 0 { BigUint::one() } else { BigUint::zero() };
                let gr = m[r].clone() + if r == 0 { BigUint::one() } else { BigUint::zero() };
                next[t] += gl * gr;
            }
            m = next;
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Modulo counting of first components
// ---------------------------------------------------------------------------

/// Residue classes extended by a separate zero and an infinity: `Fin(r)`
/// stands for a positive count congruent to `r` modulo `m`. Keeping zero
/// apart from `Fin(0)` makes multiplication with infinity well-defined.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum ModVal {
    Zero,
    Fin(u32),
    Inf,
}

impl ModVal {
    fn add(self, other: ModVal, m: u32) -> ModVal {
        match (self, other) {
            (ModVal::Zero, x) | (x, ModVal::Zero) => x,
            (ModVal::Inf, _) | (_, ModVal::Inf) => ModVal::Inf,
            (ModVal::Fin(a), ModVal::Fin(b)) => ModVal::Fin((a + b) % m),
        }
    }

    fn mul(self, other: ModVal, m: u32) -> ModVal {
        match (self, other) {
            (ModVal::Zero, _) | (_, ModVal::Zero) => ModVal::Zero,
            (ModVal::Inf, _) | (_, ModVal::Inf) => ModVal::Inf,
            (ModVal::Fin(a), ModVal::Fin(b)) => ModVal::Fin((a * b) % m),
        }
    }

    fn plus_one(self, m: u32) -> ModVal {
        self.add(ModVal::Fin(1 % m), m)
    }
}

/// Builds an automaton over the second components accepting `t̄` iff the
/// number of first-component trees `t` with `a` accepting `t ⊗ t̄` is
/// congruent to `k` modulo `m` (infinitely many partners reject).
///
/// `a` is an automaton over a convolution alphabet of pairs
/// `(Option<A>, Option<B>)`; the first component `None` is the padding.
pub fn mod_count_automaton<A: Label, B: Label>(
    a: &Nfta<(Option<A>, Option<B>)>,
    m: u32,
    k: u32,
) -> Nfta<B> {
    assert!(m >= 1, "modulus must be positive");
    let det = a.determinize();
    let n = det.subsets.len();
    let first_only: Vec<usize> = det
        .alphabet
        .iter()
        .enumerate()
        .filter(|(_, l)| l.0.is_some() && l.1.is_none())
        .map(|(i, _)| i)
        .collect();
    let second_labels: Vec<B> = {
        let mut out: Vec<B> = Vec::new();
        for l in &det.alphabet {
            if let Some(b) = &l.1 {
                if !out.contains(b) {
                    out.push(b.clone());
                }
            }
        }
        out
    };

    // Border value: for each det state q, the number of nonempty
    // first-component-only trees evaluating to q (Zero / residue / ∞).
    let border_f = border_counts(&det, &first_only, m);
    let border = (0usize, border_f);

    let mut states: Vec<(usize, Vec<ModVal>)> = vec![border.clone()];
    let mut index: HashMap<(usize, Vec<ModVal>), usize> = HashMap::new();
    index.insert(border, 0);
    let mut rules: Vec<Rule> = Vec::new();
    let mut seen_rules: HashSet<(usize, usize, usize)> = HashSet::new();
    let mut changed = true;
    while changed {
        changed = false;
        let snapshot = states.clone();
        for (i0, s0) in snapshot.iter().enumerate() {
            for (i1, s1) in snapshot.iter().enumerate() {
                for (bi, b) in second_labels.iter().enumerate() {
                    if seen_rules.contains(&(i0, i1, bi)) {
                        continue;
                    }
                    let next = count_step(&det, s0, s1, b, m);
                    let ni = match index.get(&next) {
                        Some(&ni) => ni,
                        None => {
                            let ni = states.len();
                            states.push(next.clone());
                            index.insert(next, ni);
                            changed = true;
                            ni
                        }
                    };
                    rules.push(Rule(i0, i1, bi, ni));
                    seen_rules.insert((i0, i1, bi));
                }
            }
        }
    }
    let mut out = Nfta::new(states.len(), second_labels, 0);
    out.rules = rules;
    for (i, (_, f)) in states.iter().enumerate() {
        let mut total = ModVal::Zero;
        for &q in &det.finals {
            total = total.add(f[q], m);
        }
        let accept = match total {
            ModVal::Zero => k % m == 0,
            ModVal::Fin(r) => r == k % m,
            ModVal::Inf => false,
        };
        if accept {
            out.finals.insert(i);
        }
    }
    let _ = n;
    out
}

fn count_step<A: Label, B: Label>(
    det: &Dfta<(Option<A>, Option<B>)>,
    s0: &(usize, Vec<ModVal>),
    s1: &(usize, Vec<ModVal>),
    b: &B,
    m: u32,
) -> (usize, Vec<ModVal>) {
    let n = det.subsets.len();
    let pad_label = det
        .alphabet
        .iter()
        .position(|l| l.0.is_none() && l.1.as_ref() == Some(b))
        .expect("convolution alphabet must contain the padded labels (□, b)");
    let e = det.step(s0.0, s1.0, pad_label);
    let g0: Vec<ModVal> = (0..n)
        .map(|p| {
            if p == s0.0 {
                s0.1[p].plus_one(m)
            } else {
                s0.1[p]
            }
        })
        .collect();
    let g1: Vec<ModVal> = (0..n)
        .map(|p| {
            if p == s1.0 {
                s1.1[p].plus_one(m)
            } else {
                s1.1[p]
            }
        })
        .collect();
    let mut f = vec![ModVal::Zero; n];
    for (li, l) in det.alphabet.iter().enumerate() {
        if l.0.is_none() || l.1.as_ref() != Some(b) {
            continue;
        }
        for p0 in 0..n {
            if g0[p0] == ModVal::Zero {
                continue;
            }
            for p1 in 0..n {
                if g1[p1] == ModVal::Zero {
                    continue;
                }
                let t = det.step(p0, p1, li);
                f[t] = f[t].add(g0[p0].mul(g1[p1], m), m);
            }
        }
    }
    (e, f)
}

/// Counts, per determinized state, the nonempty trees over the
/// first-component-only labels evaluating to it.
fn border_counts<A: Label, B: Label>(
    det: &Dfta<(Option<A>, Option<B>)>,
    first_only: &[usize],
    m: u32,
) -> Vec<ModVal> {
    let n = det.subsets.len();
    // Restricted transition multigraph: (p0, p1, li) -> t for first-only li.
    let restricted: Vec<((usize, usize), usize)> = det
        .table
        .iter()
        .filter(|((_, _, li), _)| first_only.contains(li))
        .map(|(&(l, r, _), &t)| ((l, r), t))
        .collect();
    // Inhabited states of the restricted automaton (border = subset 0).
    let mut inh = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for &((l, r), t) in &restricted {
            let ok = |p: usize| p == 0 || inh[p];
            if ok(l) && ok(r) && !inh[t] {
                inh[t] = true;
                changed = true;
            }
        }
    }
    // States fed by a restricted cycle have infinitely many trees.
    let mut up: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &((l, r), t) in &restricted {
        let ok = |p: usize| p == 0 || inh[p];
        if ok(l) && ok(r) {
            if inh[l] {
                up[l].push(t);
            }
            if inh[r] {
                up[r].push(t);
            }
        }
    }
    // Cycle detection on `up` restricted to inhabited states.
    let mut indeg = vec![0usize; n];
    for (p, outs) in up.iter().enumerate() {
        if inh[p] {
            for &t in outs {
                if inh[t] {
                    indeg[t] += 1;
                }
            }
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&p| inh[p] && indeg[p] == 0).collect();
    let mut peeled = vec![false; n];
    while let Some(p) = queue.pop() {
        peeled[p] = true;
        for &t in &up[p] {
            if inh[t] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    queue.push(t);
                }
            }
        }
    }
    let mut infinite = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&p| inh[p] && !peeled[p]).collect();
    for &p in &stack {
        infinite[p] = true;
    }
    while let Some(p) = stack.pop() {
        for &t in &up[p] {
            if inh[t] && !infinite[t] {
                infinite[t] = true;
                stack.push(t);
            }
        }
    }
    // Counts modulo m by depth dynamic programming; finite states converge
    // within n layers (their trees have depth < n by pumping), and
    // positivity is exactly inhabitedness.
    let mut counts: Vec<u64> = vec![0; n];
    for _ in 0..=n {
        let mut next = vec![0u64; n];
        for &((l, r), t) in &restricted {
            let gl = counts[l] + u64::from(l == 0);
            let gr = counts[r] + u64::from(r == 0);
            next[t] = (next[t] + gl * gr) % m as u64;
        }
        counts = next;
    }
    (0..n)
        .map(|q| {
            if infinite[q] {
                ModVal::Inf
            } else if !inh[q] {
                ModVal::Zero
            } else {
                ModVal::Fin(counts[q] as u32)
            }
        })
        .collect()
}

/// All trees over `alphabet` of depth at most `depth`, including the empty
/// tree. Exhaustive checks only; the count grows doubly exponentially.
pub fn all_trees<L: Label>(alphabet: &[L], depth: usize) -> Vec<Tree<L>> {
    let mut out = vec![Tree::empty()];
    out.extend(nonempty_trees(alphabet, depth));
    out
}

/// All nonempty trees over `alphabet` of depth at most `depth`.
pub fn nonempty_trees<L: Label>(alphabet: &[L], depth: usize) -> Vec<Tree<L>> {
    let mut out = Vec::new();
    let children: Vec<Option<Tree<L>>> = if depth == 0 {
        vec![None]
    } else {
        let mut c: Vec<Option<Tree<L>>> = vec![None];
        c.extend(nonempty_trees(alphabet, depth - 1).into_iter().map(Some));
        c
    };
    for a in alphabet {
        for l in &children {
            for r in &children {
                out.push(Tree::node(a.clone(), l.clone(), r.clone()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unary single-path automaton: accepts `a`-labelled left spines of at
    /// most 3 nodes.
    fn spine3() -> Nfta<char> {
        // states: 0=border/init, 1..=3 = spine length so far
        let mut a = Nfta::new(4, vec!['a'], 0);
        a.add_rule(0, 0, &'a', 1);
        a.add_rule(1, 0, &'a', 2);
        a.add_rule(2, 0, &'a', 3);
        a.finals.insert(1);
        a.finals.insert(2);
        a.finals.insert(3);
        a
    }

    #[test]
    fn spine_language_counts_three() {
        let a = spine3();
        assert!(!a.is_empty());
        assert!(a.is_finite());
        assert_eq!(a.count_language(), Some(BigUint::from(3u32)));
    }

    #[test]
    fn determinization_preserves_language_exhaustively() {
        let a = spine3();
        let d = a.determinize();
        // Depth-4 agreement decided over evaluation pairs, plus a literal
        // enumeration at depth 3 as a cross-check of the decision itself.
        assert!(a.agree_to_depth(&d.to_nfta(), 4).unwrap());
        for t in all_trees(&['a'], 3) {
            let det_accepts = d.eval(&t).map(|s| d.finals.contains(&s)) == Some(true);
            assert_eq!(a.accepts(&t), det_accepts, "tree {}", t.to_text());
        }
        assert!(a.equivalent(&d.to_nfta()).unwrap());
    }

    #[test]
    fn complement_is_involutive_on_samples() {
        let a = spine3();
        let cc = a.complement().complement();
        assert!(a.equivalent(&cc).unwrap());
        for t in all_trees(&['a'], 3) {
            assert_eq!(a.accepts(&t), cc.accepts(&t));
        }
    }

    #[test]
    fn union_with_empty_is_identity() {
        let a = spine3();
        let empty = Nfta::new(1, vec!['a'], 0);
        let u = a.union(&empty).unwrap();
        assert!(a.equivalent(&u).unwrap());
        for t in all_trees(&['a'], 3) {
            assert_eq!(a.accepts(&t), u.accepts(&t));
        }
    }

    #[test]
    fn productive_loop_is_infinite() {
        // Accepts all nonempty a-trees: clearly infinite.
        let mut a = Nfta::new(2, vec!['a'], 0);
        a.add_rule(0, 0, &'a', 1);
        a.add_rule(1, 0, &'a', 1);
        a.add_rule(0, 1, &'a', 1);
        a.add_rule(1, 1, &'a', 1);
        a.finals.insert(1);
        assert!(!a.is_finite());
        assert_eq!(a.count_language(), None);
    }

    #[test]
    fn pump_deflates_and_inflates() {
        let mut a = Nfta::new(2, vec!['a'], 0);
        a.add_rule(0, 0, &'a', 1);
        a.add_rule(1, 0, &'a', 1);
        a.finals.insert(1);
        // A left spine of depth 4 > 2 states.
        let mut t = Tree::leaf('a');
        for _ in 0..4 {
            t = Tree::node('a', Some(t), None);
        }
        let mut pumped = a.pump(&t).unwrap();
        assert!(a.accepts(&pumped.deflated));
        assert!(pumped.deflated.depth() < t.depth());
        let t1 = pumped.next().unwrap();
        assert_eq!(t1, t);
        let t2 = pumped.next().unwrap();
        assert!(a.accepts(&t2));
        assert!(t2.depth() > t.depth());
    }

    /// A hand-built finite relation: second-component single-node trees
    /// `x`, with first components ranging over single-node trees `a`, `b`,
    /// `c` (three partners for the tree `x`).
    fn three_partner_relation() -> Nfta<(Option<char>, Option<char>)> {
        let alphabet: Vec<(Option<char>, Option<char>)> = vec![
            (Some('a'), Some('x')),
            (Some('b'), Some('x')),
            (Some('c'), Some('x')),
            (Some('a'), None),
            (Some('b'), None),
            (Some('c'), None),
            (None, Some('x')),
        ];
        let mut a = Nfta::new(2, alphabet, 0);
        a.add_rule(0, 0, &(Some('a'), Some('x')), 1);
        a.add_rule(0, 0, &(Some('b'), Some('x')), 1);
        a.add_rule(0, 0, &(Some('c'), Some('x')), 1);
        a.finals.insert(1);
        a
    }

    #[test]
    fn mod_count_agrees_with_brute_counts() {
        let rel = three_partner_relation();
        let t_bar = Tree::leaf('x');
        // 3 partners: 3 ≡ 1 (mod 2) and 3 ≡ 0 (mod 3).
        let m21 = mod_count_automaton(&rel, 2, 1);
        assert!(m21.accepts(&t_bar));
        let m20 = mod_count_automaton(&rel, 2, 0);
        assert!(!m20.accepts(&t_bar));
        let m30 = mod_count_automaton(&rel, 3, 0);
        assert!(m30.accepts(&t_bar));
        // A second component with no partners: k = 0 accepts.
        let other = Tree::node('x', Some(Tree::leaf('x')), None);
        assert!(mod_count_automaton(&rel, 2, 0).accepts(&other));
        assert!(!mod_count_automaton(&rel, 2, 1).accepts(&other));
    }

    #[test]
    fn mod_count_of_empty_relation_accepts_iff_k_zero() {
        let mut rel = three_partner_relation();
        rel.finals.clear();
        let t_bar = Tree::leaf('x');
        assert!(mod_count_automaton(&rel, 2, 0).accepts(&t_bar));
        assert!(!mod_count_automaton(&rel, 2, 1).accepts(&t_bar));
    }

    #[test]
    fn mod_count_rejects_infinite_partner_sets() {
        // First components: arbitrary nonempty a-trees paired with the
        // single-node x: infinitely many partners.
        let alphabet: Vec<(Option<char>, Option<char>)> = vec![
            (Some('a'), Some('x')),
            (Some('a'), None),
            (None, Some('x')),
        ];
        let mut a = Nfta::new(2, alphabet, 0);
        a.add_rule(0, 0, &(Some('a'), None), 1);
        a.add_rule(1, 0, &(Some('a'), None), 1);
        a.add_rule(0, 0, &(Some('a'), Some('x')), 1);
        a.add_rule(1, 0, &(Some('a'), Some('x')), 1);
        a.finals.insert(1);
        let t_bar = Tree::leaf('x');
        for m in 1..4 {
            for k in 0..m {
                assert!(!mod_count_automaton(&a, m, k).accepts(&t_bar));
            }
        }
    }

    #[test]
    fn de_morgan_holds() {
        let a = spine3();
        let mut b = Nfta::new(2, vec!['a'], 0);
        b.add_rule(0, 0, &'a', 1);
        b.add_rule(1, 1, &'a', 1);
        b.add_rule(0, 1, &'a', 1);
        b.add_rule(1, 0, &'a', 1);
        b.finals.insert(1);
        // Complete equivalence check (covers all depths), then a sampled
        // membership cross-check on depth ≤ 4 trees via the deterministic
        // evaluators.
        let lhs = a.intersect(&b).unwrap().complement();
        let rhs = a.complement().union(&b.complement()).unwrap();
        assert!(lhs.equivalent(&rhs).unwrap());
        assert!(lhs.agree_to_depth(&rhs, 4).unwrap());
        let dl = lhs.determinize();
        let dr = rhs.determinize();
        for t in all_trees(&['a'], 3) {
            let x = dl.eval(&t).map(|s| dl.finals.contains(&s));
            let y = dr.eval(&t).map(|s| dr.finals.contains(&s));
            assert_eq!(x, y, "tree {}", t.to_text());
        }
    }
}
