//! FO(∃^mod, Reach, Reach_L) evaluation over the tree-automatic
//! presentation.
//!
//! Reach-free formulas compile to tree automata over convolutions of the
//! free variables, with every quantifier relativised to the regular set of
//! reachable configurations. Formulas containing reachability atoms are
//! evaluated with quantifiers ranging over the configurations whose
//! encodings stay within a depth bound; such verdicts are flagged.

use crate::alphabet::LabelId;
use crate::counting::CounterAutomaton;
use crate::cps::{Configuration, Cps};
use crate::enc::{enc_alphabet, encode, EncLabel};
use crate::formula::Formula;
use crate::nfta::{mod_count_automaton, Nfta};
use crate::presentation::reachable_configs_automaton;
use crate::reach::{LabelDfa, Reacher, RegularReacher};
use crate::tree::{convolve, Tree};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

/// A truth value together with how it was obtained.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Verdict {
    pub value: bool,
    pub exactness: Exactness,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Exactness {
    Exact,
    /// Quantifiers ranged over encodings of depth at most the bound.
    Bounded(usize),
    /// The counter automaton behind the presentation was not certified.
    Approximate,
}

#[derive(Debug, Error)]
pub enum FoError {
    #[error("reach atom in a compile-only context")]
    ReachInCompile,
    #[error("unknown edge label {0}")]
    UnknownLabel(String),
    #[error("unknown regular language {0}")]
    UnknownLanguage(String),
    #[error("automaton error: {0}")]
    Automaton(String),
    #[error("resource cap: {0}")]
    Cap(String),
    #[error(transparent)]
    Reach(#[from] crate::reach::ReachError),
}

/// Variable-indexed convolution labels.
pub type VLabel = Vec<Option<EncLabel>>;

/// A compiled formula: either closed (a sentence value) or an automaton
/// over the convolution of its free variables, listed in binding order.
pub enum Compiled {
    Closed(bool),
    Aut { vars: Vec<String>, aut: Nfta<VLabel> },
}

/// The compilation context: the system, its presentation, and caches.
pub struct FoContext<'a> {
    pub cps: &'a Cps,
    pub counter: &'a CounterAutomaton,
    pub universe: Nfta<EncLabel>,
    pub dfas: HashMap<String, LabelDfa>,
    edge_cache: HashMap<LabelId, Nfta<crate::oprel::PairLabel>>,
}

impl<'a> FoContext<'a> {
    pub fn new(cps: &'a Cps, counter: &'a CounterAutomaton) -> Self {
        let universe = reachable_configs_automaton(cps, counter).trim();
        FoContext {
            cps,
            counter,
            universe,
            dfas: HashMap::new(),
            edge_cache: HashMap::new(),
        }
    }

    fn vlabels(&self, arity: usize) -> Vec<VLabel> {
        let base = enc_alphabet(self.cps);
        let mut opts: Vec<Option<EncLabel>> = vec![None];
        opts.extend(base.into_iter().map(Some));
        let mut out: Vec<VLabel> = vec![Vec::new()];
        for _ in 0..arity {
            let mut next = Vec::new();
            for v in &out {
                for o in &opts {
                    let mut w = v.clone();
                    w.push(*o);
                    next.push(w);
                }
            }
            out = next;
        }
        out.retain(|v| v.iter().any(|o| o.is_some()));
        out
    }

    /// The relativisation automaton: every component is an accepted
    /// encoding of the universe automaton.
    fn universe_convolutions(&self, arity: usize) -> Nfta<VLabel> {
        let alphabet = self.vlabels(arity);
        let mut out: Option<Nfta<VLabel>> = None;
        for i in 0..arity {
            let lifted = lift_component(&self.universe, i, &alphabet);
            out = Some(match out {
                None => lifted,
                Some(u) => u.intersect(&lifted).expect("same alphabet").trim(),
            });
        }
        out.expect("arity ≥ 1")
    }

    fn edge_automaton(&mut self, label: LabelId) -> Nfta<crate::oprel::PairLabel> {
        self.edge_cache
            .entry(label)
            .or_insert_with(|| crate::oprel::edge_relation_automaton(self.cps, label))
            .clone()
    }

    /// Compiles a Reach-free formula; `binding_order` lists the quantifier
    /// variables from the outside in.
    pub fn compile(&mut self, f: &Formula, binding_order: &[String]) -> Result<Compiled, FoError> {
        match f {
            Formula::True => Ok(Compiled::Closed(true)),
            Formula::False => Ok(Compiled::Closed(false)),
            Formula::Reach(_, _) | Formula::ReachL(_, _, _) | Formula::Jump(_, _) => {
                Err(FoError::ReachInCompile)
            }
            Formula::Eq(x, y) => {
                if x == y {
                    return Ok(Compiled::Closed(true));
                }
                let vars = order_vars(&[x.clone(), y.clone()], binding_order);
                let swap = vars[0] != *x;
                let pair = equality_automaton(self.cps);
                let aut = self.pair_to_vec(&pair, swap)?;
                Ok(self.relativized(vars, aut))
            }
            Formula::Edge(l, x, y) => {
                let label = self
                    .cps
                    .label_id(l)
                    .ok_or_else(|| FoError::UnknownLabel(l.clone()))?;
                if x == y {
                    // A self-loop needs the same encoding on both sides.
                    let pair = self
                        .edge_automaton(label)
                        .intersect(&equality_automaton(self.cps))
                        .map_err(|e| FoError::Automaton(e.to_string()))?;
                    let vars = vec![x.clone()];
                    let aut = pair.relabel(self.vlabels(1), |(a, _)| vec![*a]);
                    return Ok(self.relativized(vars, aut));
                }
                let vars = order_vars(&[x.clone(), y.clone()], binding_order);
                let swap = vars[0] != *x;
                let pair = self.edge_automaton(label);
                let aut = self.pair_to_vec(&pair, swap)?;
                Ok(self.relativized(vars, aut))
            }
            Formula::Not(g) => {
                let c = self.compile(g, binding_order)?;
                Ok(match c {
                    Compiled::Closed(b) => Compiled::Closed(!b),
                    Compiled::Aut { vars, aut } => {
                        let complement = aut.complement();
                        self.relativized(vars, complement)
                    }
                })
            }
            Formula::And(g, h) => {
                let a = self.compile(g, binding_order)?;
                let b = self.compile(h, binding_order)?;
                self.binary(a, b, binding_order, true)
            }
            Formula::Or(g, h) => {
                let a = self.compile(g, binding_order)?;
                let b = self.compile(h, binding_order)?;
                self.binary(a, b, binding_order, false)
            }
            Formula::Exists(x, g) => {
                let c = self.compile(g, binding_order)?;
                self.project(c, x)
            }
            Formula::Forall(x, g) => {
                let neg = Formula::Not(Box::new(Formula::Exists(
                    x.clone(),
                    Box::new(Formula::Not(g.clone())),
                )));
                self.compile(&neg, binding_order)
            }
            Formula::ModCount(k, m, x, g) => {
                let c = self.compile(g, binding_order)?;
                self.mod_count(c, x, *m, *k, binding_order)
            }
        }
    }

    /// Intersects with the universe convolutions of the variables.
    fn relativized(&self, vars: Vec<String>, aut: Nfta<VLabel>) -> Compiled {
        let u = self.universe_convolutions(vars.len());
        let aut = aut.intersect(&u).expect("same alphabet").trim();
        Compiled::Aut { vars, aut }
    }

    fn pair_to_vec(
        &self,
        pair: &Nfta<crate::oprel::PairLabel>,
        swap: bool,
    ) -> Result<Nfta<VLabel>, FoError> {
        Ok(pair.relabel(self.vlabels(2), move |(a, b)| {
            if swap {
                vec![*b, *a]
            } else {
                vec![*a, *b]
            }
        }))
    }

    fn binary(
        &mut self,
        a: Compiled,
        b: Compiled,
        binding_order: &[String],
        conj: bool,
    ) -> Result<Compiled, FoError> {
        match (a, b) {
            (Compiled::Closed(x), Compiled::Closed(y)) => {
                Ok(Compiled::Closed(if conj { x && y } else { x || y }))
            }
            (Compiled::Closed(x), aut) | (aut, Compiled::Closed(x)) => Ok(if conj {
                if x {
                    aut
                } else {
                    Compiled::Closed(false)
                }
            } else if x {
                Compiled::Closed(true)
            } else {
                aut
            }),
            (
                Compiled::Aut { vars: va, aut: a },
                Compiled::Aut { vars: vb, aut: b },
            ) => {
                let vars = order_vars(
                    &va.iter().chain(vb.iter()).cloned().collect::<Vec<_>>(),
                    binding_order,
                );
                let ea = self.cylindrify(&a, &va, &vars);
                let eb = self.cylindrify(&b, &vb, &vars);
                let aut = if conj {
                    ea.intersect(&eb).map_err(|e| FoError::Automaton(e.to_string()))?
                } else {
                    ea.union(&eb).map_err(|e| FoError::Automaton(e.to_string()))?
                };
                Ok(self.relativized(vars, aut.trim()))
            }
        }
    }

    /// Inserts unconstrained components to widen `aut` from `from` to `to`.
    fn cylindrify(&self, aut: &Nfta<VLabel>, from: &[String], to: &[String]) -> Nfta<VLabel> {
        let target = self.vlabels(to.len());
        let positions: Vec<Option<usize>> = to
            .iter()
            .map(|v| from.iter().position(|w| w == v))
            .collect();
        // Every old rule fans out over the possible values of the new
        // components; old all-absent combinations stay excluded by the
        // final relativisation.
        let opts: Vec<Option<EncLabel>> = {
            let mut o: Vec<Option<EncLabel>> = vec![None];
            o.extend(enc_alphabet(self.cps).into_iter().map(Some));
            o
        };
        let mut out = Nfta::new(aut.n_states, target.clone(), aut.initial);
        out.finals = aut.finals.clone();
        for r in &aut.rules {
            let old = &aut.alphabet[r.2];
            let mut labels: Vec<VLabel> = vec![Vec::new()];
            for p in &positions {
                let mut next = Vec::new();
                for l in &labels {
                    match p {
                        Some(i) => {
                            let mut w = l.clone();
                            w.push(old[*i]);
                            next.push(w);
                        }
                        None => {
                            for o in &opts {
                                let mut w = l.clone();
                                w.push(*o);
                                next.push(w);
                            }
                        }
                    }
                }
                labels = next;
            }
            for l in labels {
                if l.iter().any(|o| o.is_some()) {
                    let li = out
                        .label_id(&l)
                        .expect("cylindrified label in target alphabet");
                    out.rules.push(crate::nfta::Rule(r.0, r.1, li, r.3));
                }
            }
        }
        out.dedup_rules();
        out
    }

    fn project(&mut self, c: Compiled, x: &str) -> Result<Compiled, FoError> {
        let (vars, aut) = match c {
            Compiled::Closed(b) => return Ok(Compiled::Closed(b)),
            Compiled::Aut { vars, aut } => (vars, aut),
        };
        let i = match vars.iter().position(|v| v == x) {
            Some(i) => i,
            None => {
                // x does not occur: ∃x φ ⟺ φ (the universe is nonempty).
                return Ok(Compiled::Aut { vars, aut });
            }
        };
        if vars.len() == 1 {
            return Ok(Compiled::Closed(!aut.trim().is_empty()));
        }
        let rest: Vec<String> = vars
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        // States reachable by x-only subtrees may stand in for absent
        // children after the projection.
        let ghost = ghost_states(&aut, i);
        let target = self.vlabels(rest.len());
        let mut out = Nfta::new(aut.n_states, target, aut.initial);
        out.finals = aut.finals.clone();
        for r in &aut.rules {
            let old = &aut.alphabet[r.2];
            let mut l: VLabel = old.clone();
            l.remove(i);
            if l.iter().all(|o| o.is_none()) {
                continue;
            }
            let li = out.label_id(&l).expect("projected label");
            let lefts: Vec<usize> = if ghost[r.0] && r.0 != aut.initial {
                vec![r.0, aut.initial]
            } else {
                vec![r.0]
            };
            let rights: Vec<usize> = if ghost[r.1] && r.1 != aut.initial {
                vec![r.1, aut.initial]
            } else {
                vec![r.1]
            };
            for &a in &lefts {
                for &b in &rights {
                    out.rules.push(crate::nfta::Rule(a, b, li, r.3));
                }
            }
        }
        out.dedup_rules();
        Ok(self.relativized(rest, out.trim()))
    }

    fn mod_count(
        &mut self,
        c: Compiled,
        x: &str,
        m: u32,
        k: u32,
        binding_order: &[String],
    ) -> Result<Compiled, FoError> {
        let (vars, aut) = match c {
            Compiled::Closed(b) => {
                // Count over the whole universe: finite iff the universe is.
                let count = self.universe.count_language();
                let val = if !b {
                    k % m == 0
                } else {
                    match count {
                        Some(n) => {
                            n % num_bigint::BigUint::from(m)
                                == num_bigint::BigUint::from(k % m)
                        }
                        None => false,
                    }
                };
                return Ok(Compiled::Closed(val));
            }
            Compiled::Aut { vars, aut } => (vars, aut),
        };
        let i = match vars.iter().position(|v| v == x) {
            Some(i) => i,
            None => {
                // x does not occur: multiply by the universe size.
                let inner = Compiled::Aut {
                    vars: vec![x.to_string()],
                    aut: {
                        let u = self.universe_convolutions(1);
                        u
                    },
                };
                let combined =
                    self.binary(inner, Compiled::Aut { vars, aut }, binding_order, true)?;
                return self.mod_count(combined, x, m, k, binding_order);
            }
        };
        if vars.len() == 1 {
            let count = aut.trim().count_language();
            let val = match count {
                Some(n) => {
                    n % num_bigint::BigUint::from(m) == num_bigint::BigUint::from(k % m)
                }
                None => false,
            };
            return Ok(Compiled::Closed(val));
        }
        let rest: Vec<String> = vars
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        // Repack as pairs (x-component, rest-components).
        let rest_labels = self.vlabels(rest.len());
        let mut pair_alpha: Vec<(Option<EncLabel>, Option<VLabel>)> = Vec::new();
        {
            let mut opts: Vec<Option<EncLabel>> = vec![None];
            opts.extend(enc_alphabet(self.cps).into_iter().map(Some));
            for a in &opts {
                for b in rest_labels.iter() {
                    pair_alpha.push((*a, Some(b.clone())));
                }
                if a.is_some() {
                    pair_alpha.push((*a, None));
                }
            }
        }
        let paired = aut.relabel(pair_alpha, |l| {
            let mut rest_l = l.clone();
            let xl = rest_l.remove(i);
            if rest_l.iter().all(|o| o.is_none()) {
                (xl, None)
            } else {
                (xl, Some(rest_l))
            }
        });
        let counted = mod_count_automaton(&paired, m, k);
        // The mod-count result ranges over Some-labelled rest tuples.
        let target = self.vlabels(rest.len());
        let unpacked = counted.relabel(target, |b: &VLabel| b.clone());
        Ok(self.relativized(rest, unpacked.trim()))
    }

    /// Decides a sentence: exact compilation on the Reach-free fragment,
    /// bounded quantification otherwise.
    pub fn check_sentence(&mut self, f: &Formula, bound: usize) -> Result<Verdict, FoError> {
        let f = f.simplify();
        if !f.has_reach() {
            let order = binding_order(&f);
            match self.compile(&f, &order)? {
                Compiled::Closed(b) => {
                    return Ok(Verdict {
                        value: b,
                        exactness: if self.counter.exact {
                            Exactness::Exact
                        } else {
                            Exactness::Approximate
                        },
                    })
                }
                Compiled::Aut { .. } => unreachable!("sentences compile closed"),
            }
        }
        let universe = self.bounded_universe(bound)?;
        let mut reacher = Reacher::new(self.cps, self.counter);
        let mut regular: HashMap<String, RegularReacher> = HashMap::new();
        for (name, dfa) in &self.dfas {
            regular.insert(
                name.clone(),
                RegularReacher::build(self.cps, dfa, &crate::counting::CountingCaps::default())?,
            );
        }
        let mut env = HashMap::new();
        let value = self.eval_bounded(&f, &universe, &mut env, &mut reacher, &mut regular)?;
        Ok(Verdict {
            value,
            exactness: Exactness::Bounded(bound),
        })
    }

    /// The configurations whose encodings have depth at most `bound`,
    /// enumerated from the universe automaton.
    pub fn bounded_universe(&self, bound: usize) -> Result<Vec<Configuration>, FoError> {
        let trees = self
            .universe
            .language_up_to_depth(bound, 200_000)
            .map_err(FoError::Cap)?;
        let mut out = Vec::new();
        for t in trees {
            let c = crate::enc::decode(&t).map_err(|e| FoError::Automaton(e.to_string()))?;
            out.push(c);
        }
        out.sort();
        Ok(out)
    }

    fn eval_bounded(
        &self,
        f: &Formula,
        universe: &[Configuration],
        env: &mut HashMap<String, Configuration>,
        reacher: &mut Reacher<'_>,
        regular: &mut HashMap<String, RegularReacher>,
    ) -> Result<bool, FoError> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(x, y) => env[x] == env[y],
            Formula::Edge(l, x, y) => {
                let label = self
                    .cps
                    .label_id(l)
                    .ok_or_else(|| FoError::UnknownLabel(l.clone()))?;
                let cx = &env[x];
                let cy = &env[y];
                self.cps
                    .successors(cx)
                    .into_iter()
                    .any(|(ll, _, c)| ll == label && &c == cy)
            }
            Formula::Reach(x, y) => {
                let (cx, cy) = (env[x].clone(), env[y].clone());
                reacher.reach(&cx, &cy)?
            }
            Formula::ReachL(name, x, y) => {
                let rr = regular
                    .get_mut(name)
                    .ok_or_else(|| FoError::UnknownLanguage(name.clone()))?;
                let (cx, cy) = (env[x].clone(), env[y].clone());
                rr.reach(&cx, &cy)?
            }
            Formula::Jump(_, _) => {
                return Err(FoError::Automaton(
                    "jump atoms belong to nested pushdown trees".into(),
                ))
            }
            Formula::Not(g) => !self.eval_bounded(g, universe, env, reacher, regular)?,
            Formula::And(g, h) => {
                self.eval_bounded(g, universe, env, reacher, regular)?
                    && self.eval_bounded(h, universe, env, reacher, regular)?
            }
            Formula::Or(g, h) => {
                self.eval_bounded(g, universe, env, reacher, regular)?
                    || self.eval_bounded(h, universe, env, reacher, regular)?
            }
            Formula::Exists(x, g) => {
                let mut hit = false;
                for c in universe {
                    env.insert(x.clone(), c.clone());
                    if self.eval_bounded(g, universe, env, reacher, regular)? {
                        hit = true;
                        break;
                    }
                }
                env.remove(x);
                hit
            }
            Formula::Forall(x, g) => {
                let mut all = true;
                for c in universe {
                    env.insert(x.clone(), c.clone());
                    if !self.eval_bounded(g, universe, env, reacher, regular)? {
                        all = false;
                        break;
                    }
                }
                env.remove(x);
                all
            }
            Formula::ModCount(k, m, x, g) => {
                let mut count: u64 = 0;
                for c in universe {
                    env.insert(x.clone(), c.clone());
                    if self.eval_bounded(g, universe, env, reacher, regular)? {
                        count += 1;
                    }
                }
                env.remove(x);
                count % *m as u64 == (*k % *m) as u64
            }
        })
    }

    /// Satisfying assignments with component encodings of depth ≤ `depth`.
    pub fn witnesses(
        &mut self,
        f: &Formula,
        depth: usize,
    ) -> Result<Vec<HashMap<String, Configuration>>, FoError> {
        let universe = self.bounded_universe(depth)?;
        let vars = f.free_vars();
        let mut out = Vec::new();
        let mut reacher = Reacher::new(self.cps, self.counter);
        let mut regular: HashMap<String, RegularReacher> = HashMap::new();
        for (name, dfa) in &self.dfas {
            regular.insert(
                name.clone(),
                RegularReacher::build(self.cps, dfa, &crate::counting::CountingCaps::default())?,
            );
        }
        let mut env: HashMap<String, Configuration> = HashMap::new();
        enumerate_assignments(
            &vars,
            &universe,
            &mut env,
            &mut |env| -> Result<(), FoError> {
                if self.eval_bounded(f, &universe, &mut env.clone(), &mut reacher, &mut regular)? {
                    out.push(env.clone());
                }
                Ok(())
            },
        )?;
        Ok(out)
    }
}

fn enumerate_assignments(
    vars: &[String],
    universe: &[Configuration],
    env: &mut HashMap<String, Configuration>,
    visit: &mut impl FnMut(&HashMap<String, Configuration>) -> Result<(), FoError>,
) -> Result<(), FoError> {
    match vars.split_first() {
        None => visit(env),
        Some((x, rest)) => {
            for c in universe {
                env.insert(x.clone(), c.clone());
                enumerate_assignments(rest, universe, env, visit)?;
            }
            env.remove(x);
            Ok(())
        }
    }
}

/// Deduplicates and orders variables by the given binding order;
/// variables outside it keep their occurrence order at the end.
fn order_vars(vars: &[String], binding_order: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in binding_order {
        if vars.contains(v) && !out.contains(v) {
            out.push(v.clone());
        }
    }
    for v in vars {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

/// The quantifier variables of a sentence, outermost first.
pub fn binding_order(f: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    collect_bindings(f, &mut out);
    out
}

fn collect_bindings(f: &Formula, out: &mut Vec<String>) {
    match f {
        Formula::Not(g) => collect_bindings(g, out),
        Formula::And(g, h) | Formula::Or(g, h) => {
            collect_bindings(g, out);
            collect_bindings(h, out);
        }
        Formula::Exists(x, g) | Formula::Forall(x, g) | Formula::ModCount(_, _, x, g) => {
            if !out.contains(x) {
                out.push(x.clone());
            }
            collect_bindings(g, out);
        }
        _ => {}
    }
}

/// The equality relation on encodings as a pair automaton.
fn equality_automaton(cps: &Cps) -> Nfta<crate::oprel::PairLabel> {
    let alphabet = crate::oprel::pair_alphabet(cps);
    let mut a = Nfta::new(2, alphabet, 0);
    for l in enc_alphabet(cps) {
        for x in [0, 1] {
            for y in [0, 1] {
                a.add_rule(x, y, &(Some(l), Some(l)), 1);
            }
        }
    }
    a.finals.insert(1);
    a
}

/// States inhabited by subtrees whose labels live only in component `i`.
fn ghost_states(aut: &Nfta<VLabel>, i: usize) -> Vec<bool> {
    let mut ghost = vec![false; aut.n_states];
    let mut changed = true;
    while changed {
        changed = false;
        for r in &aut.rules {
            let l = &aut.alphabet[r.2];
            let only_i = l
                .iter()
                .enumerate()
                .all(|(j, o)| (j == i) == o.is_some());
            if !only_i {
                continue;
            }
            let ok = |q: usize| q == aut.initial || ghost[q];
            if ok(r.0) && ok(r.1) && !ghost[r.3] {
                ghost[r.3] = true;
                changed = true;
            }
        }
    }
    ghost
}

/// Convolution of an assignment in the automaton's variable order.
pub fn assignment_tree(vars: &[String], env: &HashMap<String, Configuration>) -> Tree<VLabel> {
    let trees: Vec<Tree<EncLabel>> = vars.iter().map(|v| encode(&env[v])).collect();
    convolve(&trees)
}

/// Lifts a tree automaton to one component of a convolution: it checks the
/// component spells an accepted tree and ignores the others.
fn lift_component(aut: &Nfta<EncLabel>, i: usize, alphabet: &[VLabel]) -> Nfta<VLabel> {
    // State space: the original states, plus `out` for positions outside
    // the component's tree.
    let out_state = aut.n_states;
    let mut lifted = Nfta::new(aut.n_states + 1, alphabet.to_vec(), aut.initial);
    for l in alphabet {
        match &l[i] {
            Some(inner) => {
                if let Some(_li) = aut.label_id(inner) {
                    for r in aut.rules.iter().filter(|r| aut.alphabet[r.2] == *inner) {
                        // Children may be outside the component.
                        let lefts = if r.0 == aut.initial {
                            vec![r.0, out_state]
                        } else {
                            vec![r.0]
                        };
                        let rights = if r.1 == aut.initial {
                            vec![r.1, out_state]
                        } else {
                            vec![r.1]
                        };
                        for &a in &lefts {
                            for &b in &rights {
                                lifted.add_rule(a, b, l, r.3);
                            }
                        }
                    }
                }
            }
            None => {
                for a in [aut.initial, out_state] {
                    for b in [aut.initial, out_state] {
                        lifted.add_rule(a, b, l, out_state);
                    }
                }
            }
        }
    }
    lifted.finals = aut.finals.clone();
    lifted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::CountingCaps;
    use crate::fixtures;

    fn context(cps: &Cps, counter: &CounterAutomaton) -> FoContext<'static> {
        // Tests build contexts with leaked references for brevity.
        let cps: &'static Cps = Box::leak(Box::new(cps.clone()));
        let counter: &'static CounterAutomaton = Box::leak(Box::new(counter.clone()));
        FoContext::new(cps, counter)
    }

    #[test]
    fn compile_decides_edge_sentences() {
        let cps = fixtures::hague();
        let counter = CounterAutomaton::build(&cps, 1, &CountingCaps::default()).unwrap();
        let mut ctx = context(&cps, &counter);
        let f = Formula::parse("(exists x (exists y (edge Cl x y)))").unwrap();
        assert!(ctx.check_sentence(&f, 0).unwrap().value);
        // Collapse always changes the state, so no self-loop exists.
        let g = Formula::parse("(exists x (edge Co x x))").unwrap();
        let v = ctx.check_sentence(&g, 0).unwrap();
        assert!(!v.value);
        assert_eq!(v.exactness, Exactness::Exact);
        let h = Formula::parse("(forall x (= x x))").unwrap();
        assert!(ctx.check_sentence(&h, 0).unwrap().value);
        let i = Formula::parse("(forall x (not (edge Co x x)))").unwrap();
        assert!(ctx.check_sentence(&i, 0).unwrap().value);
    }

    #[test]
    fn bounded_universe_matches_bfs() {
        let cps = fixtures::hague();
        let counter = CounterAutomaton::build(&cps, 1, &CountingCaps::default()).unwrap();
        let ctx = context(&cps, &counter);
        let uni = ctx.bounded_universe(4).unwrap();
        // Every bounded-universe element is BFS-reachable, and every BFS
        // configuration with a shallow encoding is in the universe.
        let g = cps.bfs_explore(24, 1_000_000).unwrap();
        for c in &uni {
            assert!(g.contains(c), "universe element {c:?} not reached by BFS");
        }
        let shallow = cps.bfs_explore(8, 100_000).unwrap();
        for c in &shallow.configs {
            if encode(c).depth() <= 4 {
                assert!(uni.contains(c), "missing {c:?}");
            }
        }
    }

    #[test]
    fn reach_sentences_evaluate_bounded() {
        let cps = fixtures::hague();
        let counter = CounterAutomaton::build(&cps, 1, &CountingCaps::default()).unwrap();
        let mut ctx = context(&cps, &counter);
        let f =
            Formula::parse("(exists x (exists y (and (reach x y) (edge Co y x))))").unwrap();
        let v = ctx.check_sentence(&f, 6).unwrap();
        assert!(v.value);
        assert_eq!(v.exactness, Exactness::Bounded(6));
    }

    #[test]
    fn mod_count_over_bounded_test_universe() {
        // A three-element universe: a chain of two identity steps.
        let mut alph = crate::alphabet::Alphabet::new();
        let _ = &mut alph;
        let (cps, _) = Cps::new(
            vec!["q0".into(), "q1".into(), "q2".into()],
            crate::alphabet::Alphabet::new(),
            vec!["g0".into(), "g1".into()],
            crate::alphabet::StateId(0),
            vec![
                crate::cps::Transition {
                    from: crate::alphabet::StateId(0),
                    sym: crate::alphabet::BOTTOM,
                    label: LabelId(0),
                    to: crate::alphabet::StateId(1),
                    op: crate::stack::StackOp::Id,
                },
                crate::cps::Transition {
                    from: crate::alphabet::StateId(1),
                    sym: crate::alphabet::BOTTOM,
                    label: LabelId(1),
                    to: crate::alphabet::StateId(2),
                    op: crate::stack::StackOp::Id,
                },
            ],
        )
        .unwrap();
        let counter = CounterAutomaton::build(&cps, 1, &CountingCaps::default()).unwrap();
        let mut ctx = context(&cps, &counter);
        let uni = ctx.universe.count_language();
        assert_eq!(uni, Some(3u32.into()));
        let f = Formula::parse("(modcount 1 2 x (= x x))").unwrap();
        assert!(ctx.check_sentence(&f, 0).unwrap().value);
        let g = Formula::parse("(modcount 0 3 x (= x x))").unwrap();
        assert!(ctx.check_sentence(&g, 0).unwrap().value);
        let h = Formula::parse("(modcount 0 2 x (= x x))").unwrap();
        assert!(!ctx.check_sentence(&h, 0).unwrap().value);
    }
}
