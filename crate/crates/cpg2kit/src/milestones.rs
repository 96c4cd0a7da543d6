//! Minimal generating sequences, generalised milestones, and the
//! per-milestone decomposition of runs from the initial configuration.

use crate::cps::{Configuration, Cps, Run};
use crate::prefix::{is_substack, word_gcp};
use crate::stack::{LinkLevel, Stack2, StackOp, Word};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MilestoneError {
    #[error("invalid stack: {0}")]
    InvalidStack(String),
    #[error("stack is not reproduced by its minimal sequence")]
    NotGenerated,
    #[error("run does not start at the initial configuration")]
    NotInitial,
    #[error("run does not realise the expected milestone structure at step {0}")]
    Structure(usize),
}

/// The minimal sequence of `{Push, Pop₁, Clone₂}` operations generating `s`
/// from the initial stack, building the stack word by word.
pub fn min_op_sequence(s: &Stack2) -> Result<Vec<StackOp>, MilestoneError> {
    s.validate()
        .map_err(|e| MilestoneError::InvalidStack(e.to_string()))?;
    let mut ops = Vec::new();
    let words = s.words();
    push_suffix(&mut ops, &words[0], 1);
    for i in 1..words.len() {
        ops.push(StackOp::Clone2);
        let common = word_gcp(&words[i - 1], &words[i]);
        for _ in common.len()..words[i - 1].len() {
            ops.push(StackOp::Pop1);
        }
        push_suffix(&mut ops, &words[i], common.len());
    }
    // Replay to double-check that s is generated by operations; this is the
    // dynamic counterpart of the static validity check.
    let mut t = Stack2::initial();
    for &op in &ops {
        t = t.apply(op).ok_or(MilestoneError::NotGenerated)?;
    }
    if &t != s {
        return Err(MilestoneError::NotGenerated);
    }
    Ok(ops)
}

fn push_suffix(ops: &mut Vec<StackOp>, word: &Word, from: usize) {
    for l in &word[from..] {
        ops.push(match l.level {
            LinkLevel::L1 => StackOp::Push(l.sym, LinkLevel::L1),
            LinkLevel::L2 => StackOp::Push(l.sym, LinkLevel::L2),
        });
    }
}

/// All intermediate stacks of the minimal sequence, in generation order
/// (the first entry is the initial stack, the last is `s`).
pub fn gen_milestones(s: &Stack2) -> Result<Vec<Stack2>, MilestoneError> {
    let ops = min_op_sequence(s)?;
    let mut out = vec![Stack2::initial()];
    let mut t = Stack2::initial();
    for &op in &ops {
        t = t.apply(op).expect("minimal sequence replays");
        out.push(t.clone());
    }
    Ok(out)
}

/// The milestones of `s`: the generalised milestones that are substacks of
/// `s`, in generation (= substack) order.
pub fn milestones(s: &Stack2) -> Result<Vec<Stack2>, MilestoneError> {
    Ok(gen_milestones(s)?
        .into_iter()
        .filter(|m| is_substack(m, s))
        .collect())
}

/// One segment of the per-milestone decomposition of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    /// A push transition at `at`, followed by a (high) loop up to `until`.
    PushThenLoop { at: usize, until: usize },
    /// A clone transition at `at`, followed by alternating loops and single
    /// `Pop₁`/level-1 collapse steps; `pops` lists the positions of the
    /// single pop steps, `until` is the last position of the final loop.
    CloneThenPops {
        at: usize,
        pops: Vec<usize>,
        until: usize,
    },
}

/// Decomposition of a run from the initial configuration to `(q,s)` along
/// the milestones of `s`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Milestones of the final stack in substack order.
    pub milestones: Vec<Stack2>,
    /// The last position `n_i` at which milestone `i` is visited.
    pub last_visit: Vec<usize>,
    /// Connecting segments; `segments[i]` leads from milestone `i` to
    /// milestone `i+1`.
    pub segments: Vec<Segment>,
}

/// Decomposes a run from the initial configuration per the milestone
/// structure of its final stack: each milestone is connected to the next by
/// either a push transition followed by a loop, or a clone transition
/// followed by alternating loops and single pop steps.
pub fn decompose_run(cps: &Cps, run: &Run) -> Result<Decomposition, MilestoneError> {
    if run.start != cps.initial_config() {
        return Err(MilestoneError::NotInitial);
    }
    let configs = run.configs(cps).ok_or(MilestoneError::Structure(0))?;
    let s = &configs.last().unwrap().stack;
    let ms = milestones(s)?;
    let mut last_visit = Vec::with_capacity(ms.len());
    for m in &ms {
        let pos = configs
            .iter()
            .rposition(|c| &c.stack == m)
            .ok_or(MilestoneError::Structure(0))?;
        last_visit.push(pos);
    }
    for w in last_visit.windows(2) {
        if w[0] >= w[1] {
            return Err(MilestoneError::Structure(w[1]));
        }
    }
    if *last_visit.last().unwrap() != run.len() {
        return Err(MilestoneError::Structure(run.len()));
    }
    let mut segments = Vec::new();
    for i in 0..ms.len() - 1 {
        let n_i = last_visit[i];
        let n_next = last_visit[i + 1];
        let t = &cps.delta[run.steps[n_i]];
        match t.op {
            StackOp::Push(_, _) => {
                // The stack right after the push must already be the next
                // milestone.
                if configs[n_i + 1].stack != ms[i + 1] {
                    return Err(MilestoneError::Structure(n_i));
                }
                segments.push(Segment::PushThenLoop {
                    at: n_i,
                    until: n_next,
                });
            }
            StackOp::Clone2 => {
                // Chain of anchors Pop₁^j(Clone₂(m_i)) from the clone down
                // to m_{i+1}; the single pop steps are the last transitions
                // leaving each anchor.
                let cloned = ms[i].apply(StackOp::Clone2).unwrap();
                let mut anchors = vec![cloned.clone()];
                let mut cur = cloned;
                while &cur != &ms[i + 1] {
                    cur = cur
                        .apply(StackOp::Pop1)
                        .ok_or(MilestoneError::Structure(n_i))?;
                    anchors.push(cur.clone());
                }
                let mut pops = Vec::new();
                let mut lo = n_i + 1;
                for a in 0..anchors.len() - 1 {
                    // Last visit of anchor a within (n_i, n_next].
                    let p = configs[lo..=n_next]
                        .iter()
                        .rposition(|c| c.stack == anchors[a])
                        .map(|r| r + lo)
                        .ok_or(MilestoneError::Structure(n_i))?;
                    let step = &cps.delta[run.steps[p]];
                    let ok = matches!(step.op, StackOp::Pop1)
                        || (matches!(step.op, StackOp::Collapse)
                            && configs[p].stack.top_level() == LinkLevel::L1);
                    if !ok || configs[p + 1].stack != anchors[a + 1] {
                        return Err(MilestoneError::Structure(p));
                    }
                    pops.push(p);
                    lo = p + 1;
                }
                segments.push(Segment::CloneThenPops {
                    at: n_i,
                    pops,
                    until: n_next,
                });
            }
            _ => return Err(MilestoneError::Structure(n_i)),
        }
    }
    Ok(Decomposition {
        milestones: ms,
        last_visit,
        segments,
    })
}

/// Reassembles the step sequence covered by a decomposition and checks it
/// reproduces the run, and that every connecting piece is a loop.
pub fn decomposition_is_faithful(cps: &Cps, run: &Run, d: &Decomposition) -> bool {
    use crate::loops::is_loop;
    let configs = match run.configs(cps) {
        Some(c) => c,
        None => return false,
    };
    // Initial loop at the first milestone.
    let first = d.last_visit[0];
    match run.restrict(cps, 0, first) {
        Some(lead) => {
            if !is_loop(cps, &lead) {
                return false;
            }
        }
        None => return false,
    }
    let mut expected_end = first;
    for (i, seg) in d.segments.iter().enumerate() {
        let (at, until) = match seg {
            Segment::PushThenLoop { at, until } => (*at, *until),
            Segment::CloneThenPops { at, until, .. } => (*at, *until),
        };
        if at != expected_end {
            return false;
        }
        match seg {
            Segment::PushThenLoop { at, until } => {
                let lp = run.restrict(cps, at + 1, *until).unwrap();
                if !is_loop(cps, &lp) {
                    return false;
                }
            }
            Segment::CloneThenPops { at, pops, until } => {
                let mut lo = at + 1;
                for &p in pops {
                    let lp = run.restrict(cps, lo, p).unwrap();
                    if !is_loop(cps, &lp) {
                        return false;
                    }
                    lo = p + 1;
                }
                let lp = run.restrict(cps, lo, *until).unwrap();
                if !is_loop(cps, &lp) {
                    return false;
                }
            }
        }
        let _ = i;
        expected_end = until;
    }
    expected_end == run.len() && configs[expected_end].stack == *d.milestones.last().unwrap()
}

/// The visit order of milestones along a run agrees with the substack
/// order (order embedding of last visits).
pub fn milestone_visits_ordered(cps: &Cps, run: &Run) -> bool {
    match decompose_run(cps, run) {
        Ok(d) => d.last_visit.windows(2).all(|w| w[0] < w[1]),
        Err(_) => false,
    }
}

/// Placeholder configuration helper: the initial configuration of `cps`.
pub fn initial_of(cps: &Cps) -> Configuration {
    cps.initial_config()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{Alphabet, BOTTOM};
    use crate::stack::Letter;

    #[test]
    fn initial_stack_has_empty_sequence() {
        let s = Stack2::initial();
        assert!(min_op_sequence(&s).unwrap().is_empty());
        assert_eq!(gen_milestones(&s).unwrap(), vec![s.clone()]);
        assert_eq!(milestones(&s).unwrap(), vec![s]);
    }

    #[test]
    fn milestones_of_two_word_stack() {
        let mut alph = Alphabet::new();
        let a = alph.intern("a");
        let b = alph.intern("b");
        let s = Stack2::from_words(vec![
            vec![Letter::l1(BOTTOM), Letter::l1(a)],
            vec![Letter::l1(BOTTOM), Letter::l1(a), Letter::l1(b)],
        ]);
        let ms = milestones(&s).unwrap();
        let expect = vec![
            Stack2::initial(),
            Stack2::from_words(vec![vec![Letter::l1(BOTTOM), Letter::l1(a)]]),
            Stack2::from_words(vec![
                vec![Letter::l1(BOTTOM), Letter::l1(a)],
                vec![Letter::l1(BOTTOM), Letter::l1(a)],
            ]),
            s.clone(),
        ];
        assert_eq!(ms, expect);
        for w in ms.windows(2) {
            assert!(is_substack(&w[0], &w[1]));
        }
    }

    #[test]
    fn milestone_count_bound() {
        let mut alph = Alphabet::new();
        let s = crate::fixtures::encoding_example_stack(&mut alph);
        let g = gen_milestones(&s).unwrap();
        assert!(g.len() < 2 * s.height() * s.width());
    }
}
