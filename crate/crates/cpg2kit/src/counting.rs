//! Threshold counting of returns, loops, high/low loops and level-1-loops
//! via return simulators and a saturating letter automaton.
//!
//! Run counting on a simulator is grounded in a bounded dynamic program
//! over the explored configuration graph. A count below the threshold is
//! certified exact either because the exploration is closed (every
//! successor explored; totals follow from path/cycle analysis) or because
//! no further run appears within the length bound derived from the
//! shortest simulations. Otherwise the automaton is built in `≥`-mode and
//! carries `exact = false`, which downstream verdicts inherit.

use crate::alphabet::{LabelId, StateId, SymId, BOTTOM, BOX, TOP_MARK};
use crate::cps::{Configuration, Cps, Run, Transition};
use crate::stack::{Letter, LinkLevel, Stack2, StackOp, Word};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

/// A threshold-counted function `Q×Q → {0..k}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct CountFn {
    pub k: u32,
    pub dim: usize,
    table: Vec<u32>,
}

impl CountFn {
    pub fn zero(k: u32, dim: usize) -> Self {
        CountFn {
            k,
            dim,
            table: vec![0; dim * dim],
        }
    }

    pub fn get(&self, from: StateId, to: StateId) -> u32 {
        self.table[from.0 as usize * self.dim + to.0 as usize]
    }

    pub fn set(&mut self, from: StateId, to: StateId, v: u32) {
        self.table[from.0 as usize * self.dim + to.0 as usize] = v.min(self.k);
    }

    /// The boolean projection: pairs with at least one run.
    pub fn exists(&self, from: StateId, to: StateId) -> bool {
        self.get(from, to) >= 1
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId, u32)> + '_ {
        let dim = self.dim;
        self.table
            .iter()
            .enumerate()
            .map(move |(i, &v)| (StateId((i / dim) as u16), StateId((i % dim) as u16), v))
    }
}

fn saturating_sum<I: IntoIterator<Item = u64>>(k: u32, items: I) -> u32 {
    let mut acc: u64 = 0;
    for x in items {
        acc = acc.saturating_add(x);
        if acc >= k as u64 {
            return k;
        }
    }
    acc as u32
}

/// Symbol-and-level class of a letter (the `↓0` projection).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct LetterClass {
    pub sym: SymId,
    pub level: LinkLevel,
}

impl LetterClass {
    pub fn of(l: Letter) -> Self {
        LetterClass {
            sym: l.sym,
            level: l.level,
        }
    }

    pub fn to_letter(self) -> Letter {
        match self.level {
            LinkLevel::L1 => Letter::l1(self.sym),
            LinkLevel::L2 => Letter::l2(self.sym, 0),
        }
    }
}

/// Per-word annotation carried by a counter-automaton state.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Annotation {
    pub ret: CountFn,
    pub high: CountFn,
    pub low: CountFn,
    pub loops: CountFn,
    /// Existence of level-1-loops per state pair.
    pub one_loops: Vec<bool>,
    pub last: LetterClass,
    /// Whether every count feeding this state was certified exact.
    pub exact: bool,
}

impl Annotation {
    pub fn one_loop(&self, from: StateId, to: StateId) -> bool {
        self.one_loops[from.0 as usize * self.ret.dim + to.0 as usize]
    }
}

/// Resource limits for the counting engine.
#[derive(Clone, Copy, Debug)]
pub struct CountingCaps {
    /// Node cap for explored simulator graphs.
    pub max_nodes: usize,
    /// Initial length bound for the counting dynamic program.
    pub max_len: u32,
    /// Never raise the length bound beyond this during re-certification.
    pub hard_max_len: u32,
    /// How many rebuild rounds the certification loop may take.
    pub recert_rounds: usize,
}

impl Default for CountingCaps {
    fn default() -> Self {
        CountingCaps {
            max_nodes: 120_000,
            max_len: 48,
            hard_max_len: 2048,
            recert_rounds: 4,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error("counter automaton state cap exceeded ({0} states)")]
    StateCap(usize),
    #[error("input word is not a well-formed top word: {0}")]
    BadWord(String),
    #[error("stack of width 1 has no returns")]
    TooNarrow,
    #[error("counts could not be certified exact within the configured caps")]
    Unverifiable,
}

/// The return simulator: `cps` extended by labels `Rt_i` and transitions
/// `(q₁, ⊤, Rt_i, q₂, Pop₂)` for `i ≤ ret(q₁,q₂)`.
pub fn return_simulator(cps: &Cps, ret: &CountFn) -> Cps {
    let mut sim = cps.clone();
    for i in 1..=ret.k {
        sim.labels.push(format!("Rt{i}"));
    }
    let base = cps.labels.len() as u16;
    for (q1, q2, n) in ret.pairs() {
        for i in 0..n {
            sim.delta.push(Transition {
                from: q1,
                sym: TOP_MARK,
                label: LabelId(base + i as u16),
                to: q2,
                op: StackOp::Pop2,
            });
        }
    }
    sim
}

/// The simulator start stack `⊥⊤τ□ : ⊥⊤τ` for a letter class `τ`.
pub fn simulator_stack(tau: LetterClass) -> Stack2 {
    let t = tau.to_letter();
    Stack2::from_words(vec![
        vec![
            Letter::l1(BOTTOM),
            Letter::l1(TOP_MARK),
            t,
            Letter::l1(BOX),
        ],
        vec![Letter::l1(BOTTOM), Letter::l1(TOP_MARK), t],
    ])
}

/// The base stack `⊥□ : ⊥` used for the word consisting of `⊥` alone.
pub fn base_stack() -> Stack2 {
    Stack2::from_words(vec![
        vec![Letter::l1(BOTTOM), Letter::l1(BOX)],
        vec![Letter::l1(BOTTOM)],
    ])
}

// ---------------------------------------------------------------------------
// Bounded counting engine
// ---------------------------------------------------------------------------

/// Quality of a threshold count.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Quality {
    /// All runs counted (closed exploration).
    Total,
    /// All runs of length at most the bound counted.
    UpTo(u32),
}

#[derive(Clone, Debug)]
pub struct CountReport {
    pub count: u32,
    pub quality: Quality,
    /// Lengths of the `min(k, count)` length-lexicographically smallest
    /// runs (padded conservatively when a cycle saturates the count).
    pub smallest_lengths: Vec<u32>,
}

impl CountReport {
    /// Exact as a threshold count with threshold `k`, certified against a
    /// length bound.
    pub fn certified(&self, k: u32, cert_len: u32) -> bool {
        self.count >= k
            || match self.quality {
                Quality::Total => true,
                Quality::UpTo(l) => l >= cert_len,
            }
    }
}

/// Explored fragment of a configuration graph with edge multiplicities.
pub struct Explored {
    pub configs: Vec<Configuration>,
    pub index: HashMap<Configuration, usize>,
    /// Adjacency: `succs[v] = (target, multiplicity)`.
    pub succs: Vec<Vec<(usize, u32)>>,
    pub depth: Vec<u32>,
    /// Runs up to this length are fully represented.
    pub expanded_depth: u32,
    /// Every successor of every node is inside the graph.
    pub closed: bool,
}

/// Breadth-first closure from `start` up to `max_depth` layers or
/// `max_nodes` configurations.
pub fn explore(sys: &Cps, start: &Configuration, max_nodes: usize, max_depth: u32) -> Explored {
    let mut g = Explored {
        configs: vec![start.clone()],
        index: HashMap::from([(start.clone(), 0)]),
        succs: vec![Vec::new()],
        depth: vec![0],
        expanded_depth: 0,
        closed: false,
    };
    let mut frontier = vec![0usize];
    for d in 0..max_depth {
        let mut next = Vec::new();
        for &v in &frontier {
            let c = g.configs[v].clone();
            let mut adj: Vec<(usize, u32)> = Vec::new();
            for (_, _, succ) in sys.successors(&c) {
                let t = match g.index.get(&succ) {
                    Some(&t) => t,
                    None => {
                        if g.configs.len() >= max_nodes {
                            return g; // capped: not closed, expanded as-is
                        }
                        let t = g.configs.len();
                        g.configs.push(succ.clone());
                        g.succs.push(Vec::new());
                        g.depth.push(d + 1);
                        g.index.insert(succ, t);
                        next.push(t);
                        t
                    }
                };
                match adj.iter_mut().find(|(u, _)| *u == t) {
                    Some((_, m)) => *m += 1,
                    None => adj.push((t, 1)),
                }
            }
            g.succs[v] = adj;
        }
        g.expanded_depth = d + 1;
        if next.is_empty() {
            g.closed = true;
            return g;
        }
        frontier = next;
    }
    // Depth limit reached with a live frontier.
    g
}

/// Counts runs (walks) from node 0 of `g` to each node of `g`, saturating
/// at `k`.
///
/// On a closed exploration the reports are total: a target reachable from
/// a relevant cycle has unboundedly many runs and saturates; all other
/// targets receive their exact path count. On a truncated exploration the
/// reports count every run of length at most `expanded_depth`.
pub fn count_walks(g: &Explored, targets: &[bool], k: u32, max_len: u32) -> Vec<CountReport> {
    let n = g.configs.len();
    debug_assert_eq!(targets.len(), n);
    // Co-reachability towards any target.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, adj) in g.succs.iter().enumerate() {
        for &(u, _) in adj {
            preds[u].push(v);
        }
    }
    let mut relevant = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| targets[v]).collect();
    for &v in &stack {
        relevant[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &p in &preds[v] {
            if !relevant[p] {
                relevant[p] = true;
                stack.push(p);
            }
        }
    }
    // Nodes on relevant cycles, and the set of nodes they reach.
    let cyclic = unpeeled(g, &relevant);
    let mut fed = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| cyclic[v]).collect();
    for &v in &stack {
        fed[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &(u, _) in &g.succs[v] {
            if relevant[u] && !fed[u] {
                fed[u] = true;
                stack.push(u);
            }
        }
    }

    let horizon = if g.closed { n as u32 } else { max_len.min(g.expanded_depth) };
    let cap = k as u64;
    let mut counts: Vec<u64> = vec![0; n];
    let mut lengths: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut cur: Vec<u64> = vec![0; n];
    cur[0] = 1;
    let record = |len: u32, cur: &[u64], counts: &mut Vec<u64>, lengths: &mut Vec<Vec<u32>>| {
        for v in 0..n {
            if targets[v] && cur[v] > 0 {
                let want = cap.saturating_sub(counts[v]).min(cur[v]);
                for _ in 0..want {
                    lengths[v].push(len);
                }
                counts[v] = counts[v].saturating_add(cur[v]).min(cap);
            }
        }
    };
    record(0, &cur, &mut counts, &mut lengths);
    for len in 1..=horizon {
        let mut next: Vec<u64> = vec![0; n];
        let mut alive = false;
        for v in 0..n {
            if cur[v] == 0 || !relevant[v] {
                continue;
            }
            for &(u, m) in &g.succs[v] {
                if relevant[u] {
                    next[u] = next[u].saturating_add(cur[v].saturating_mul(m as u64)).min(cap + 1);
                    alive = true;
                }
            }
        }
        cur = next;
        record(len, &cur, &mut counts, &mut lengths);
        if !alive {
            break;
        }
        if (0..n).all(|v| !targets[v] || counts[v] >= cap) {
            break;
        }
    }
    (0..n)
        .map(|v| {
            let mut count = counts[v].min(cap) as u32;
            let mut ls = lengths[v].clone();
            let quality = if g.closed {
                if fed[v] && count < k {
                    // Pumping a relevant cycle yields arbitrarily many runs.
                    count = k;
                    let pad = (n as u64 * (k as u64 + 1)).min(u32::MAX as u64) as u32;
                    while ls.len() < k as usize {
                        ls.push(pad);
                    }
                }
                Quality::Total
            } else {
                Quality::UpTo(horizon)
            };
            CountReport {
                count,
                quality,
                smallest_lengths: ls,
            }
        })
        .collect()
}

/// Nodes of the relevant subgraph that lie on a cycle (not peeled by
/// repeatedly removing in-degree-0 nodes).
fn unpeeled(g: &Explored, relevant: &[bool]) -> Vec<bool> {
    let n = g.configs.len();
    let mut indeg = vec![0usize; n];
    for (v, adj) in g.succs.iter().enumerate() {
        if !relevant[v] {
            continue;
        }
        for &(u, _) in adj {
            if relevant[u] {
                indeg[u] += 1;
            }
        }
    }
    let mut queue: Vec<usize> = (0..n)
        .filter(|&v| relevant[v] && indeg[v] == 0)
        .collect();
    let mut peeled = vec![false; n];
    while let Some(v) = queue.pop() {
        peeled[v] = true;
        for &(u, _) in &g.succs[v] {
            if relevant[u] {
                indeg[u] -= 1;
                if indeg[u] == 0 {
                    queue.push(u);
                }
            }
        }
    }
    (0..n).map(|v| relevant[v] && !peeled[v]).collect()
}

// ---------------------------------------------------------------------------
// The counter automaton
// ---------------------------------------------------------------------------

/// Deterministic letter automaton annotating every top word with its
/// return/loop counts and one-loop existence.
#[derive(Debug, Clone, Serialize)]
pub struct CounterAutomaton {
    pub k: u32,
    pub states: Vec<Annotation>,
    /// State reached after reading the word `⊥`.
    pub init: usize,
    pub trans: HashMap<(usize, LetterClass), usize>,
    /// Whether every count in every state is certified exact.
    pub exact: bool,
    /// Shortest-simulation statistics backing the bound functions.
    pub stats: SimStats,
    /// The length horizon the counts were computed against.
    pub used_len: u32,
}

/// Shortest-simulation statistics: maximal length `l` and maximal number of
/// `⊤`-topped positions `#⊤` among the threshold-many smallest simulations,
/// for returns and for high loops.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SimStats {
    pub l_ret: u32,
    pub top_ret: u32,
    pub l_high: u32,
    pub top_high: u32,
}

/// The monotone length bounds for short returns and loops:
/// `f_ret(n+1) = l + #⊤·f_ret(n)`, high loops analogous, and
/// `f_low(n+1) = 2 + f_loop(n)`, `f_loop(n+1) = f_low(n+1) + 2·f_high(n+1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundFns {
    pub stats: SimStats,
}

impl BoundFns {
    pub fn f_ret(&self, n: u32) -> u64 {
        let (l, t) = (self.stats.l_ret as u64, self.stats.top_ret as u64);
        let mut f = 0u64;
        for _ in 0..n {
            f = l.saturating_add(t.saturating_mul(f));
        }
        f
    }

    pub fn f_high_loop(&self, n: u32) -> u64 {
        if n == 0 {
            return 0;
        }
        let (l, t) = (self.stats.l_high as u64, self.stats.top_high as u64);
        l.saturating_add(t.saturating_mul(self.f_ret(n - 1)))
    }

    pub fn f_low_loop(&self, n: u32) -> u64 {
        if n == 0 {
            return 0;
        }
        2u64.saturating_add(self.f_loop(n - 1))
    }

    pub fn f_loop(&self, n: u32) -> u64 {
        if n == 0 {
            return 0;
        }
        self.f_low_loop(n)
            .saturating_add(2u64.saturating_mul(self.f_high_loop(n)))
    }
}

/// Length bound for certifying simulator counts: the `f_ret` recursion
/// unrolled for the three-letter top words of simulator stacks, with `#⊤`
/// coarsened by the maximal simulation length when it was not enumerated.
fn cert_length(stats: &SimStats) -> u64 {
    let l = (stats.l_ret.max(stats.l_high) as u64).max(1);
    let t = (stats.top_ret.max(stats.top_high) as u64).max(l);
    l.saturating_mul(1 + t + t.saturating_mul(t)).max(8)
}

struct StepCounts {
    ret: CountFn,
    high: CountFn,
    one: Vec<bool>,
    all_certified: bool,
}

/// Counts for a single letter step on the given simulator start stack.
fn step_counts(
    sim: &Cps,
    start_stack: &Stack2,
    top_word: &Word,
    k: u32,
    caps: &CountingCaps,
    max_len: u32,
    cert_len: u32,
    stats: &mut SimStats,
) -> StepCounts {
    let dim = sim.states.len();
    let mut ret = CountFn::zero(k, dim);
    let mut high = CountFn::zero(k, dim);
    let mut one = vec![false; dim * dim];
    let mut all_certified = true;
    let pop2 = start_stack.popn2(1).unwrap();
    for q in 0..dim as u16 {
        let start = Configuration::new(StateId(q), start_stack.clone());
        let g = explore(sim, &start, caps.max_nodes, max_len);
        let mut t_ret = vec![false; g.configs.len()];
        let mut t_high = vec![false; g.configs.len()];
        let mut t_one = vec![false; g.configs.len()];
        for (i, c) in g.configs.iter().enumerate() {
            t_ret[i] = c.stack == pop2;
            t_high[i] = c.stack == *start_stack;
            t_one[i] = c.stack.width() >= 3 && c.stack.top_word() == top_word;
        }
        let rep_ret = count_walks(&g, &t_ret, k, max_len);
        let rep_high = count_walks(&g, &t_high, k, max_len);
        let rep_one = count_walks(&g, &t_one, 1, max_len);
        let mut max_ret_len = 0u32;
        let mut max_high_len = 0u32;
        for (i, c) in g.configs.iter().enumerate() {
            if t_ret[i] {
                let r = &rep_ret[i];
                ret.set(StateId(q), c.state, r.count);
                all_certified &= r.certified(k, cert_len);
                if let Some(&m) = r.smallest_lengths.iter().max() {
                    stats.l_ret = stats.l_ret.max(m);
                    max_ret_len = max_ret_len.max(m);
                }
            }
            if t_high[i] {
                let r = &rep_high[i];
                high.set(StateId(q), c.state, r.count);
                all_certified &= r.certified(k, cert_len);
                if let Some(&m) = r.smallest_lengths.iter().max() {
                    stats.l_high = stats.l_high.max(m);
                    max_high_len = max_high_len.max(m);
                }
            }
            if t_one[i] && rep_one[i].count >= 1 {
                one[q as usize * dim + c.state.0 as usize] = true;
            }
        }
        if !g.closed {
            // Absence of one-loops is only as good as the exploration.
            for q2 in 0..dim {
                if !one[q as usize * dim + q2] {
                    all_certified &= g.expanded_depth >= cert_len;
                }
            }
        }
        // The #⊤ statistics need the concrete shortest simulations; they
        // are enumerated when cheap and otherwise coarsened by the length.
        harvest_topmarks(sim, &start, k, max_ret_len, max_high_len, stats);
    }
    StepCounts {
        ret,
        high,
        one,
        all_certified,
    }
}

fn harvest_topmarks(
    sim: &Cps,
    start: &Configuration,
    k: u32,
    max_ret_len: u32,
    max_high_len: u32,
    stats: &mut SimStats,
) {
    const CHEAP: u32 = 14;
    if max_ret_len > 0 {
        if max_ret_len <= CHEAP {
            match crate::loops::enumerate_returns(sim, start, k as usize, max_ret_len as usize, 1 << 21)
            {
                Ok(runs) => {
                    for r in runs {
                        stats.top_ret = stats.top_ret.max(count_topmark(sim, &r));
                    }
                }
                Err(_) => stats.top_ret = stats.top_ret.max(max_ret_len),
            }
        } else {
            stats.top_ret = stats.top_ret.max(max_ret_len);
        }
    }
    if max_high_len > 0 {
        if max_high_len <= CHEAP {
            match crate::loops::enumerate_loops(sim, start, k as usize, max_high_len as usize, 1 << 21)
            {
                Ok(runs) => {
                    for r in runs {
                        stats.top_high = stats.top_high.max(count_topmark(sim, &r));
                    }
                }
                Err(_) => stats.top_high = stats.top_high.max(max_high_len),
            }
        } else {
            stats.top_high = stats.top_high.max(max_high_len);
        }
    }
}

fn count_topmark(sys: &Cps, run: &Run) -> u32 {
    run.configs(sys)
        .map(|cs| cs.iter().filter(|c| c.stack.top_sym() == TOP_MARK).count() as u32)
        .unwrap_or(0)
}

impl CounterAutomaton {
    /// Builds the automaton by per-letter saturation, then certifies the
    /// counts against the derived length bounds, rebuilding with a larger
    /// horizon when needed.
    pub fn build(cps: &Cps, k: u32, caps: &CountingCaps) -> Result<CounterAutomaton, CountError> {
        let mut max_len = caps.max_len;
        let mut last: Option<CounterAutomaton> = None;
        for _ in 0..caps.recert_rounds.max(1) {
            let mut aut = Self::build_once(cps, k, caps, max_len)?;
            let cert = cert_length(&aut.stats);
            if cert <= max_len as u64 {
                return Ok(aut);
            }
            let next = cert.min(caps.hard_max_len as u64) as u32;
            if next <= max_len {
                // The horizon cannot grow further; remaining sub-threshold
                // non-total counts are unverified.
                demote(&mut aut);
                return Ok(aut);
            }
            max_len = next;
            last = Some(aut);
        }
        let mut aut = last.expect("at least one build round");
        demote(&mut aut);
        Ok(aut)
    }

    fn build_once(
        cps: &Cps,
        k: u32,
        caps: &CountingCaps,
        max_len: u32,
    ) -> Result<CounterAutomaton, CountError> {
        let dim = cps.states.len();
        // Per-count certification is judged against the horizon itself; the
        // outer loop ensures the final horizon dominates the derived bound.
        let cert = max_len;
        let mut stats = SimStats::default();
        let mut states: Vec<Annotation> = Vec::new();
        let mut index: HashMap<Annotation, usize> = HashMap::new();
        let mut trans = HashMap::new();

        let base = {
            let start = base_stack();
            let top: Word = vec![Letter::l1(BOTTOM)];
            let sc = step_counts(cps, &start, &top, k, caps, max_len, cert, &mut stats);
            let low = CountFn::zero(k, dim);
            let loops = compose_loops(&sc.high, &low, k);
            Annotation {
                ret: sc.ret,
                high: sc.high,
                low,
                loops,
                one_loops: sc.one,
                last: LetterClass {
                    sym: BOTTOM,
                    level: LinkLevel::L1,
                },
                exact: sc.all_certified,
            }
        };
        states.push(base.clone());
        index.insert(base, 0);
        let mut worklist = vec![0usize];

        let letters: Vec<LetterClass> = cps
            .alphabet
            .user_ids()
            .filter(|&s| s != BOTTOM)
            .flat_map(|s| {
                [
                    LetterClass {
                        sym: s,
                        level: LinkLevel::L1,
                    },
                    LetterClass {
                        sym: s,
                        level: LinkLevel::L2,
                    },
                ]
            })
            .collect();

        while let Some(si) = worklist.pop() {
            for &tau in &letters {
                if trans.contains_key(&(si, tau)) {
                    continue;
                }
                let a = states[si].clone();
                let sim = return_simulator(cps, &a.ret);
                let start = simulator_stack(tau);
                let top = start.top_word().clone();
                let sc = step_counts(&sim, &start, &top, k, caps, max_len, cert, &mut stats);
                let low = low_loops_step(cps, k, tau, a.last.sym, &a.loops);
                let loops = compose_loops(&sc.high, &low, k);
                let next = Annotation {
                    ret: sc.ret,
                    high: sc.high,
                    low,
                    loops,
                    one_loops: sc.one,
                    last: tau,
                    exact: a.exact && sc.all_certified,
                };
                let ni = match index.get(&next) {
                    Some(&ni) => ni,
                    None => {
                        let ni = states.len();
                        if ni > 50_000 {
                            return Err(CountError::StateCap(ni));
                        }
                        states.push(next.clone());
                        index.insert(next, ni);
                        worklist.push(ni);
                        ni
                    }
                };
                trans.insert((si, tau), ni);
            }
        }
        let exact = states.iter().all(|a| a.exact);
        Ok(CounterAutomaton {
            k,
            states,
            init: 0,
            trans,
            exact,
            stats,
            used_len: max_len,
        })
    }

    /// The automaton state after reading `TOP₂(s)↓0`.
    pub fn state_for_word(&self, w: &Word) -> Result<usize, CountError> {
        if w.is_empty() || w[0].sym != BOTTOM || w[0].level != LinkLevel::L1 {
            return Err(CountError::BadWord("word must start with ⊥".into()));
        }
        let mut st = self.init;
        for l in &w[1..] {
            if l.sym == BOTTOM || l.sym == BOX || l.sym == TOP_MARK {
                return Err(CountError::BadWord(
                    "word contains ⊥, □ or ⊤ above the bottom".into(),
                ));
            }
            st = *self
                .trans
                .get(&(st, LetterClass::of(*l)))
                .ok_or_else(|| CountError::BadWord("letter outside the alphabet".into()))?;
        }
        Ok(st)
    }

    pub fn annotation_for_word(&self, w: &Word) -> Result<&Annotation, CountError> {
        Ok(&self.states[self.state_for_word(w)?])
    }

    /// `Ret^k(s)`; the stack must have width at least 2.
    pub fn ret_of_stack(&self, s: &Stack2) -> Result<&CountFn, CountError> {
        if s.width() < 2 {
            return Err(CountError::TooNarrow);
        }
        Ok(&self.annotation_for_word(s.top_word())?.ret)
    }

    pub fn loops_of_stack(&self, s: &Stack2) -> Result<&CountFn, CountError> {
        Ok(&self.annotation_for_word(s.top_word())?.loops)
    }

    pub fn high_loops_of_stack(&self, s: &Stack2) -> Result<&CountFn, CountError> {
        Ok(&self.annotation_for_word(s.top_word())?.high)
    }

    pub fn low_loops_of_stack(&self, s: &Stack2) -> Result<&CountFn, CountError> {
        Ok(&self.annotation_for_word(s.top_word())?.low)
    }

    pub fn bound_fns(&self) -> BoundFns {
        BoundFns { stats: self.stats }
    }

    pub fn require_exact(&self) -> Result<(), CountError> {
        if self.exact {
            Ok(())
        } else {
            Err(CountError::Unverifiable)
        }
    }
}

fn demote(aut: &mut CounterAutomaton) {
    aut.exact = false;
    for a in &mut aut.states {
        a.exact = false;
    }
}

/// `LowLoop^k(wτ)` from `Loop^k(w)` and the transition table: a low loop is
/// a pop (or level-1 collapse), a loop of the shorter word, and a level-1
/// push restoring the letter.
fn low_loops_step(
    cps: &Cps,
    k: u32,
    tau: LetterClass,
    prev_sym: SymId,
    loops_w: &CountFn,
) -> CountFn {
    let dim = cps.states.len();
    let mut low = CountFn::zero(k, dim);
    if tau.level != LinkLevel::L1 {
        return low;
    }
    let mut m = vec![0u32; dim * dim];
    let mut nn = vec![0u32; dim * dim];
    for t in &cps.delta {
        if t.sym == tau.sym && matches!(t.op, StackOp::Pop1 | StackOp::Collapse) {
            m[t.from.0 as usize * dim + t.to.0 as usize] += 1;
        }
        if t.sym == prev_sym && t.op == StackOp::Push(tau.sym, LinkLevel::L1) {
            nn[t.from.0 as usize * dim + t.to.0 as usize] += 1;
        }
    }
    for q in 0..dim {
        for q2 in 0..dim {
            let total = saturating_sum(
                k,
                (0..dim).flat_map(|h1| (0..dim).map(move |h2| (h1, h2))).map(
                    |(h1, h2)| {
                        m[q * dim + h1] as u64
                            * loops_w.get(StateId(h1 as u16), StateId(h2 as u16)) as u64
                            * nn[h2 * dim + q2] as u64
                    },
                ),
            );
            low.set(StateId(q as u16), StateId(q2 as u16), total);
        }
    }
    low
}

/// `Loop^k = min{k, H + Σ H·L·H}`.
fn compose_loops(high: &CountFn, low: &CountFn, k: u32) -> CountFn {
    let dim = high.dim;
    let mut loops = CountFn::zero(k, dim);
    for q in 0..dim {
        for q2 in 0..dim {
            let mut terms: Vec<u64> =
                vec![high.get(StateId(q as u16), StateId(q2 as u16)) as u64];
            for h1 in 0..dim {
                for h2 in 0..dim {
                    terms.push(
                        high.get(StateId(q as u16), StateId(h1 as u16)) as u64
                            * low.get(StateId(h1 as u16), StateId(h2 as u16)) as u64
                            * high.get(StateId(h2 as u16), StateId(q2 as u16)) as u64,
                    );
                }
            }
            let v = saturating_sum(k, terms);
            loops.set(StateId(q as u16), StateId(q2 as u16), v);
        }
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn subreturn_automaton_reproduces_counts() {
        let cps = fixtures::subreturns();
        let aut = CounterAutomaton::build(&cps, 20, &CountingCaps::default()).unwrap();
        assert!(aut.exact, "subreturns counts should certify");
        let s = fixtures::subreturns_stack(&cps);
        let q0 = StateId(0);
        let q2 = StateId(2);

        // Ret(Pop₁(s))(q2,q2) = 2.
        let s_pop = s.popn1(1).unwrap();
        let r = aut.ret_of_stack(&s_pop).unwrap();
        assert_eq!(r.get(q2, q2), 2);

        // Ret(s)(q0,q2) = 6.
        let r = aut.ret_of_stack(&s).unwrap();
        assert_eq!(r.get(q0, q2), 6);

        // Ret(ŝ)(q0,q2) = 12, and 3 from (q2, Pop₁(ŝ)).
        let flat = fixtures::subreturns_stack_flat(&cps);
        let r = aut.ret_of_stack(&flat).unwrap();
        assert_eq!(r.get(q0, q2), 12);
        let r = aut.ret_of_stack(&flat.popn1(1).unwrap()).unwrap();
        assert_eq!(r.get(q2, q2), 3);
    }

    #[test]
    fn bottom_word_without_pops_has_no_returns() {
        let cps = fixtures::npt_example();
        let aut = CounterAutomaton::build(&cps, 3, &CountingCaps::default()).unwrap();
        let ann = &aut.states[aut.init];
        assert!(ann.ret.pairs().all(|(_, _, v)| v == 0));
    }

    #[test]
    fn bound_functions_start_at_zero_and_grow() {
        let cps = fixtures::subreturns();
        let aut = CounterAutomaton::build(&cps, 5, &CountingCaps::default()).unwrap();
        let b = aut.bound_fns();
        assert_eq!(b.f_ret(0), 0);
        assert_eq!(b.f_loop(0), 0);
        for n in 0..6 {
            assert!(b.f_ret(n) <= b.f_ret(n + 1));
            assert!(b.f_loop(n) <= b.f_loop(n + 1));
        }
    }
}
