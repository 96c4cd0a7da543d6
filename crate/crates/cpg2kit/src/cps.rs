//! Collapsible pushdown systems of level 2, configurations, runs, and
//! bounded exploration of the configuration graph.

use crate::alphabet::{Alphabet, LabelId, StateId, SymId, BOX, TOP_MARK};
use crate::stack::{Stack2, StackOp};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// A transition `(q, σ, γ, q′, op)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub sym: SymId,
    pub label: LabelId,
    pub to: StateId,
    pub op: StackOp,
}

/// A level-2 collapsible pushdown system.
///
/// The transition list `delta` is linearly ordered; the declaration order is
/// the tie-breaker of the length-lexicographic order on runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cps {
    pub states: Vec<String>,
    pub alphabet: Alphabet,
    pub labels: Vec<String>,
    pub initial: StateId,
    pub delta: Vec<Transition>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CpsError {
    #[error("transition {0} uses reserved symbol □ or ⊤")]
    ReservedSymbol(usize),
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("resource cap exceeded: {0} configurations")]
    ResourceCap(usize),
}

impl Cps {
    /// Builds a system and normalises labels so that each label determines
    /// `(q′, op)`. Rows whose label clashes with a differently-targeted row
    /// are re-labelled `γ#2`, `γ#3`, …; the returned list names each rewrite.
    pub fn new(
        states: Vec<String>,
        alphabet: Alphabet,
        labels: Vec<String>,
        initial: StateId,
        delta: Vec<Transition>,
    ) -> Result<(Cps, Vec<String>), CpsError> {
        for (i, t) in delta.iter().enumerate() {
            if t.sym == BOX || t.sym == TOP_MARK {
                return Err(CpsError::ReservedSymbol(i));
            }
            if let StackOp::Push(s, _) = t.op {
                if s == BOX || s == TOP_MARK {
                    return Err(CpsError::ReservedSymbol(i));
                }
            }
        }
        let mut cps = Cps {
            states,
            alphabet,
            labels,
            initial,
            delta,
        };
        let warnings = cps.normalize_labels();
        Ok((cps, warnings))
    }

    /// Re-labels transitions so each label carries `(q′, op)`.
    fn normalize_labels(&mut self) -> Vec<String> {
        let mut seen: HashMap<LabelId, (StateId, StackOp)> = HashMap::new();
        let mut renames = Vec::new();
        let mut fixups: Vec<(usize, String)> = Vec::new();
        for (i, t) in self.delta.iter().enumerate() {
            match seen.get(&t.label) {
                None => {
                    seen.insert(t.label, (t.to, t.op));
                }
                Some(&(to, op)) if to == t.to && op == t.op => {}
                Some(_) => {
                    let base = self.labels[t.label.0 as usize].clone();
                    let mut n = 2;
                    let mut name = format!("{base}#{n}");
                    while self.labels.contains(&name) {
                        n += 1;
                        name = format!("{base}#{n}");
                    }
                    renames.push(format!(
                        "label {base} does not determine (state, op); row {i} re-labelled {name}"
                    ));
                    fixups.push((i, name));
                }
            }
        }
        for (i, name) in fixups {
            let id = LabelId(self.labels.len() as u16);
            self.labels.push(name);
            self.delta[i].label = id;
            seen.insert(id, (self.delta[i].to, self.delta[i].op));
        }
        renames
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u16))
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.labels
            .iter()
            .position(|s| s == name)
            .map(|i| LabelId(i as u16))
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u16).map(StateId)
    }

    pub fn initial_config(&self) -> Configuration {
        Configuration {
            state: self.initial,
            stack: Stack2::initial(),
        }
    }

    /// All one-step successors of `c`, in transition declaration order.
    /// Undefined operations are skipped silently.
    pub fn successors(&self, c: &Configuration) -> Vec<(LabelId, usize, Configuration)> {
        let mut out = Vec::new();
        for (i, t) in self.delta.iter().enumerate() {
            if t.from == c.state && t.sym == c.stack.top_sym() {
                if let Some(stack) = c.stack.apply(t.op) {
                    out.push((
                        t.label,
                        i,
                        Configuration {
                            state: t.to,
                            stack,
                        },
                    ));
                }
            }
        }
        out
    }

    /// Whether transition `idx` applies at `c`, and its result.
    pub fn step(&self, c: &Configuration, idx: usize) -> Option<Configuration> {
        let t = self.delta.get(idx)?;
        if t.from != c.state || t.sym != c.stack.top_sym() {
            return None;
        }
        Some(Configuration {
            state: t.to,
            stack: c.stack.apply(t.op)?,
        })
    }

    /// Breadth-first exploration of the configuration graph up to
    /// `step_limit` transitions from the initial configuration.
    pub fn bfs_explore(&self, step_limit: usize, max_configs: usize) -> Result<Graph, CpsError> {
        self.bfs_from(self.initial_config(), step_limit, max_configs)
    }

    /// Breadth-first exploration from an arbitrary start configuration.
    pub fn bfs_from(
        &self,
        start: Configuration,
        step_limit: usize,
        max_configs: usize,
    ) -> Result<Graph, CpsError> {
        let mut graph = Graph {
            configs: vec![start.clone()],
            depth: vec![0],
            edges: Vec::new(),
            index: HashMap::new(),
            complete: true,
        };
        graph.index.insert(start, 0);
        let mut frontier = vec![0usize];
        for d in 0..step_limit {
            let mut next = Vec::new();
            for &ci in &frontier {
                let c = graph.configs[ci].clone();
                for (label, tidx, succ) in self.successors(&c) {
                    let ti = match graph.index.get(&succ) {
                        Some(&t) => t,
                        None => {
                            if graph.configs.len() >= max_configs {
                                return Err(CpsError::ResourceCap(max_configs));
                            }
                            let t = graph.configs.len();
                            graph.configs.push(succ.clone());
                            graph.depth.push(d + 1);
                            graph.index.insert(succ, t);
                            next.push(t);
                            t
                        }
                    };
                    graph.edges.push(GraphEdge {
                        from: ci,
                        label,
                        transition: tidx,
                        to: ti,
                    });
                }
            }
            if next.is_empty() {
                return Ok(graph);
            }
            frontier = next;
        }
        // The frontier is still alive: collect the edges among contained
        // configurations and record whether anything was left outside.
        for &ci in &frontier {
            let c = graph.configs[ci].clone();
            for (label, tidx, succ) in self.successors(&c) {
                match graph.index.get(&succ) {
                    Some(&ti) => graph.edges.push(GraphEdge {
                        from: ci,
                        label,
                        transition: tidx,
                        to: ti,
                    }),
                    None => graph.complete = false,
                }
            }
        }
        Ok(graph)
    }
}

/// A configuration `(q, s)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub state: StateId,
    pub stack: Stack2,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.state, self.stack)
    }
}

impl Configuration {
    pub fn new(state: StateId, stack: Stack2) -> Self {
        Configuration { state, stack }
    }
}

/// A labelled edge of an explored configuration graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub label: LabelId,
    pub transition: usize,
    pub to: usize,
}

/// A finite, deterministic-order fragment of the configuration graph.
#[derive(Clone, Debug)]
pub struct Graph {
    pub configs: Vec<Configuration>,
    /// BFS depth at which each configuration was first found.
    pub depth: Vec<usize>,
    pub edges: Vec<GraphEdge>,
    pub index: HashMap<Configuration, usize>,
    /// True when every configuration's successors are inside the graph.
    pub complete: bool,
}

impl Graph {
    pub fn contains(&self, c: &Configuration) -> bool {
        self.index.contains_key(c)
    }

    /// Reflexive-transitive closure as a boolean matrix.
    pub fn transitive_closure(&self) -> Vec<Vec<bool>> {
        let n = self.configs.len();
        let mut reach = vec![vec![false; n]; n];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for e in &self.edges {
            reach[e.from][e.to] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }
}

/// A run: a start configuration and a sequence of transition indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Run {
    pub start: Configuration,
    pub steps: Vec<usize>,
}

impl Run {
    pub fn empty(start: Configuration) -> Self {
        Run {
            start,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Materialises all configurations `ρ(0), …, ρ(n)`; `None` if some step
    /// does not apply.
    pub fn configs(&self, cps: &Cps) -> Option<Vec<Configuration>> {
        let mut out = vec![self.start.clone()];
        for &i in &self.steps {
            let next = cps.step(out.last().unwrap(), i)?;
            out.push(next);
        }
        Some(out)
    }

    /// Whether every step applies at the configuration it fires from.
    pub fn validate(&self, cps: &Cps) -> bool {
        self.configs(cps).is_some()
    }

    /// The final configuration.
    pub fn end(&self, cps: &Cps) -> Option<Configuration> {
        let mut c = self.start.clone();
        for &i in &self.steps {
            c = cps.step(&c, i)?;
        }
        Some(c)
    }

    /// The run restricted to positions `[i, j]`.
    pub fn restrict(&self, cps: &Cps, i: usize, j: usize) -> Option<Run> {
        if i > j || j > self.len() {
            return None;
        }
        let configs = self.configs(cps)?;
        Some(Run {
            start: configs[i].clone(),
            steps: self.steps[i..j].to_vec(),
        })
    }

    /// Composition `self ∘ other` (other must start where self ends).
    pub fn compose(&self, cps: &Cps, other: &Run) -> Option<Run> {
        if self.end(cps)? != other.start {
            return None;
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Some(Run {
            start: self.start.clone(),
            steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn hague_successors_match_figure() {
        let cps = fixtures::hague();
        let c0 = cps.initial_config();
        let succ = cps.successors(&c0);
        assert_eq!(succ.len(), 1);
        let (l, _, c1) = &succ[0];
        assert_eq!(cps.labels[l.0 as usize], "Cl");
        assert_eq!(c1.state, StateId(1));
        assert_eq!(c1.stack.width(), 2);

        // (2,[⊥]:[⊥a]) → contains (P,(2,[⊥]:[⊥])) and (Co,(0,[⊥]))
        let a = cps.alphabet.lookup("a").unwrap();
        let s = Stack2::initial()
            .apply(StackOp::Clone2)
            .unwrap()
            .apply(StackOp::Push(a, crate::stack::LinkLevel::L2))
            .unwrap();
        let c = Configuration::new(StateId(2), s);
        let succ: Vec<(String, Configuration)> = cps
            .successors(&c)
            .into_iter()
            .map(|(l, _, c)| (cps.labels[l.0 as usize].clone(), c))
            .collect();
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[0].0, "P");
        assert_eq!(succ[0].1.state, StateId(2));
        assert_eq!(succ[0].1.stack.width(), 2);
        assert_eq!(succ[1].0, "Co");
        assert_eq!(succ[1].1, Configuration::new(StateId(0), Stack2::initial()));
    }

    #[test]
    fn no_matching_guard_means_no_successors() {
        let cps = fixtures::hague();
        // State 2 on ⊥ has no transitions.
        let c = Configuration::new(StateId(2), Stack2::initial());
        assert!(cps.successors(&c).is_empty());
    }

    #[test]
    fn bfs_limit_2_finds_four_configs() {
        let cps = fixtures::hague();
        let g = cps.bfs_explore(2, 10_000).unwrap();
        assert_eq!(g.configs.len(), 4);
    }

    #[test]
    fn bfs_limit_0_is_initial_only() {
        let cps = fixtures::hague();
        let g = cps.bfs_explore(0, 10_000).unwrap();
        assert_eq!(g.configs.len(), 1);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn empty_delta_explores_single_config() {
        let (cps, _) = Cps::new(
            vec!["q0".into()],
            Alphabet::new(),
            vec![],
            StateId(0),
            vec![],
        )
        .unwrap();
        let g = cps.bfs_explore(10, 100).unwrap();
        assert_eq!(g.configs.len(), 1);
        assert!(g.complete);
    }
}
