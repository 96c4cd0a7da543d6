//! Loop, return and level-1-loop predicates on runs, brute-force
//! enumeration oracles, and threshold run counting.

use crate::cps::{Configuration, Cps, Run, Transition};
use crate::prefix::{is_substack, word_le};
use crate::stack::{LinkLevel, Stack2, StackOp, Word};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("search cap of {0} nodes exceeded")]
    Cap(usize),
    #[error("start configuration has width 1, returns need width ≥ 2")]
    TooNarrow,
}

/// Is `run` a return from its start stack `t` to `Pop₂(t)`?
pub fn is_return(cps: &Cps, run: &Run) -> bool {
    let configs = match run.configs(cps) {
        Some(c) => c,
        None => return false,
    };
    is_return_configs(cps, run, &configs, 0)
}

fn is_return_configs(cps: &Cps, run: &Run, configs: &[Configuration], from: usize) -> bool {
    let t = &configs[from].stack;
    if t.width() < 2 {
        return false;
    }
    let s = t.popn2(1).unwrap();
    let last = configs.len() - 1;
    if from >= last || configs[last].stack != s {
        return false;
    }
    for c in &configs[from..last] {
        if is_substack(&c.stack, &s) {
            return false;
        }
    }
    let final_op = cps.delta[run.steps[last - 1]].op;
    match final_op {
        StackOp::Pop2 => return true,
        StackOp::Collapse => {
            let w = t.top_word();
            let pen = configs[last - 1].stack.top_word();
            if word_le(w, pen) && pen.len() > w.len() {
                return true;
            }
        }
        _ => {}
    }
    // Third clause: a suffix starting at the first visit of Pop₁(t) is a
    // return of Pop₁(t) (checking the minimal position suffices).
    if let Some(pop1) = t.popn1(1) {
        if let Some(i) = configs[from + 1..last]
            .iter()
            .position(|c| c.stack == pop1)
        {
            return is_return_configs(cps, run, configs, from + 1 + i);
        }
    }
    false
}

/// Which stacks `Pop₁^k(s)` a loop may visit: all the popped letters must
/// carry level-1 links.
fn pop1_dip_allowed(s: &Stack2, k: usize) -> bool {
    let w = s.top_word();
    w[w.len() - k..].iter().all(|l| l.level == LinkLevel::L1)
}

/// If `x` equals `Pop₁^k(s)` for some `k ≥ 1`, returns `k`.
fn pop1_depth(s: &Stack2, x: &Stack2) -> Option<usize> {
    if x.width() != s.width() {
        return None;
    }
    let n = s.width();
    if x.words()[..n - 1] != s.words()[..n - 1] {
        return None;
    }
    let (wt, wx) = (s.top_word(), x.top_word());
    if wx.len() < wt.len() && word_le(wx, wt) {
        Some(wt.len() - wx.len())
    } else {
        None
    }
}

/// Is `run` a loop of its start stack?
pub fn is_loop(cps: &Cps, run: &Run) -> bool {
    let configs = match run.configs(cps) {
        Some(c) => c,
        None => return false,
    };
    let s = &configs[0].stack;
    if configs.last().unwrap().stack != *s {
        return false;
    }
    let below = s.popn2(1);
    for c in &configs {
        if let Some(ref b) = below {
            if is_substack(&c.stack, b) {
                return false;
            }
        }
        if let Some(k) = pop1_depth(s, &c.stack) {
            if !pop1_dip_allowed(s, k) {
                return false;
            }
        }
    }
    true
}

/// A loop that never visits `Pop₁(s)`.
pub fn is_high_loop(cps: &Cps, run: &Run) -> bool {
    if !is_loop(cps, run) {
        return false;
    }
    let configs = run.configs(cps).unwrap();
    let s = &configs[0].stack;
    configs.iter().all(|c| pop1_depth(s, &c.stack) != Some(1))
}

/// A loop whose second and second-to-last stacks are `Pop₁(s)`.
pub fn is_low_loop(cps: &Cps, run: &Run) -> bool {
    if run.len() < 2 || !is_loop(cps, run) {
        return false;
    }
    let configs = run.configs(cps).unwrap();
    let s = &configs[0].stack;
    pop1_depth(s, &configs[1].stack) == Some(1)
        && pop1_depth(s, &configs[run.len() - 1].stack) == Some(1)
}

/// Is `run` a level-1-loop of its start stack `s:w`?
///
/// The run must end in `s:s′:w` for a nonempty `s′`, never drop to width
/// `|s|`, and every drop of the top word to `Pop₁(w)` must immediately
/// complete a return.
pub fn is_one_loop(cps: &Cps, run: &Run) -> bool {
    let configs = match run.configs(cps) {
        Some(c) => c,
        None => return false,
    };
    let start = &configs[0].stack;
    let w = start.top_word().clone();
    let floor = start.width() - 1;
    let end = &configs.last().unwrap().stack;
    if end.width() < start.width() + 1
        || end.top_word() != &w
        || end.words()[..floor] != start.words()[..floor]
    {
        return false;
    }
    if configs.iter().any(|c| c.stack.width() <= floor) {
        return false;
    }
    // Every drop of the top word to Pop₁(w) must start a return.
    if w.len() >= 2 {
        let popw: Word = w[..w.len() - 1].to_vec();
        for i in 1..configs.len() {
            let prev_top = configs[i - 1].stack.top_word();
            let here_top = configs[i].stack.top_word();
            if word_le(&w, prev_top) && here_top == &popw {
                let mut ok = false;
                for j in i + 1..configs.len() {
                    if let Some(sub) = run.restrict(cps, i, j) {
                        if is_return(cps, &sub) {
                            ok = true;
                            break;
                        }
                    }
                }
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}

/// What a depth-first enumeration is listing.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RunClass {
    Return,
    Loop,
    HighLoop,
    LowLoop,
    OneLoop,
}

/// Enumerates the length-lexicographically smallest runs of the given class
/// starting at `c`, up to `k` runs of length at most `bound`.
///
/// Ties within a length are broken by the transition declaration order, so
/// the result is exactly the length-lex prefix of the class.
pub fn enumerate_class(
    cps: &Cps,
    c: &Configuration,
    class: RunClass,
    k: usize,
    bound: usize,
    cap: usize,
) -> Result<Vec<Run>, EnumError> {
    if class == RunClass::Return && c.stack.width() < 2 {
        return Err(EnumError::TooNarrow);
    }
    let mut found = Vec::new();
    let mut budget = cap;
    for len in 0..=bound {
        if found.len() >= k {
            break;
        }
        let mut steps = Vec::new();
        let mut configs = vec![c.clone()];
        dfs_exact(
            cps,
            c,
            class,
            len,
            &mut steps,
            &mut configs,
            &mut found,
            k,
            &mut budget,
        )?;
    }
    Ok(found)
}

/// Convenience wrappers for the individual classes.
pub fn enumerate_returns(
    cps: &Cps,
    c: &Configuration,
    k: usize,
    bound: usize,
    cap: usize,
) -> Result<Vec<Run>, EnumError> {
    enumerate_class(cps, c, RunClass::Return, k, bound, cap)
}

pub fn enumerate_loops(
    cps: &Cps,
    c: &Configuration,
    k: usize,
    bound: usize,
    cap: usize,
) -> Result<Vec<Run>, EnumError> {
    enumerate_class(cps, c, RunClass::Loop, k, bound, cap)
}

pub fn enumerate_one_loops(
    cps: &Cps,
    c: &Configuration,
    k: usize,
    bound: usize,
    cap: usize,
) -> Result<Vec<Run>, EnumError> {
    enumerate_class(cps, c, RunClass::OneLoop, k, bound, cap)
}

#[allow(clippy::too_many_arguments)]
fn dfs_exact(
    cps: &Cps,
    start: &Configuration,
    class: RunClass,
    len: usize,
    steps: &mut Vec<usize>,
    configs: &mut Vec<Configuration>,
    found: &mut Vec<Run>,
    k: usize,
    budget: &mut usize,
) -> Result<(), EnumError> {
    if *budget == 0 {
        return Err(EnumError::Cap(0));
    }
    *budget -= 1;
    if found.len() >= k {
        return Ok(());
    }
    if steps.len() == len {
        let run = Run {
            start: start.clone(),
            steps: steps.clone(),
        };
        let hit = match class {
            RunClass::Return => is_return(cps, &run),
            RunClass::Loop => is_loop(cps, &run),
            RunClass::HighLoop => is_high_loop(cps, &run),
            RunClass::LowLoop => is_low_loop(cps, &run),
            RunClass::OneLoop => is_one_loop(cps, &run),
        };
        if hit {
            found.push(run);
        }
        return Ok(());
    }
    let cur = configs.last().unwrap().clone();
    if pruned(cps, start, class, &cur, steps.len()) {
        return Ok(());
    }
    for (_, tidx, succ) in cps.successors(&cur) {
        steps.push(tidx);
        configs.push(succ);
        dfs_exact(cps, start, class, len, steps, configs, found, k, budget)?;
        steps.pop();
        configs.pop();
    }
    Ok(())
}

/// Sound dead-branch pruning per run class: a prefix that already violates
/// a closed condition of the class can never extend to a member.
fn pruned(cps: &Cps, start: &Configuration, class: RunClass, cur: &Configuration, at: usize) -> bool {
    let _ = cps;
    let s = &start.stack;
    match class {
        RunClass::Return => {
            // A return may touch Pop₂(start) only as its final stack.
            at > 0 && is_substack(&cur.stack, &s.popn2(1).unwrap())
        }
        RunClass::Loop | RunClass::HighLoop | RunClass::LowLoop => {
            if let Some(below) = s.popn2(1) {
                if is_substack(&cur.stack, &below) {
                    return true;
                }
            }
            if let Some(kk) = pop1_depth(s, &cur.stack) {
                if !pop1_dip_allowed(s, kk) {
                    return true;
                }
                if class == RunClass::HighLoop && kk == 1 {
                    return true;
                }
            }
            false
        }
        RunClass::OneLoop => cur.stack.width() < s.width(),
    }
}

/// Finds the length-lexicographically smallest run from `start` to `target`
/// of length at most `bound`.
pub fn smallest_run_to(
    cps: &Cps,
    start: &Configuration,
    target: &Configuration,
    bound: usize,
    cap: usize,
) -> Result<Option<Run>, EnumError> {
    let mut budget = cap;
    for len in 0..=bound {
        let mut steps = Vec::new();
        if let Some(run) = dfs_to(cps, start, target, len, &mut steps, start.clone(), &mut budget)? {
            return Ok(Some(run));
        }
    }
    Ok(None)
}

fn dfs_to(
    cps: &Cps,
    start: &Configuration,
    target: &Configuration,
    len: usize,
    steps: &mut Vec<usize>,
    cur: Configuration,
    budget: &mut usize,
) -> Result<Option<Run>, EnumError> {
    if *budget == 0 {
        return Err(EnumError::Cap(0));
    }
    *budget -= 1;
    if steps.len() == len {
        if &cur == target {
            return Ok(Some(Run {
                start: start.clone(),
                steps: steps.clone(),
            }));
        }
        return Ok(None);
    }
    for (_, tidx, succ) in cps.successors(&cur) {
        steps.push(tidx);
        let r = dfs_to(cps, start, target, len, steps, succ, budget)?;
        if r.is_some() {
            return Ok(r);
        }
        steps.pop();
    }
    Ok(None)
}

/// Threshold count of runs from the initial configuration to `target`:
/// repeatedly finds the smallest run and rebuilds the system so that
/// exactly this run is disabled, up to `k` times.
///
/// The result is exact whenever `bound` dominates the true length of the
/// `k` smallest runs; the `exact` flag is the caller's to interpret (it is
/// `true` when the count stopped short of `k` and the last search
/// exhausted all lengths up to `bound`).
pub fn count_runs(
    cps: &Cps,
    target: &Configuration,
    k: usize,
    bound: usize,
    cap: usize,
) -> Result<(usize, bool), EnumError> {
    let mut system = cps.clone();
    let mut start = cps.initial_config();
    let mut count = 0;
    while count < k {
        match smallest_run_to(&system, &start, target, bound, cap)? {
            None => return Ok((count, true)),
            Some(run) => {
                count += 1;
                if count == k {
                    break;
                }
                let (next, next_start) = avoid_run(&system, &start, &run);
                system = next;
                start = next_start;
            }
        }
    }
    Ok((count, false))
}

/// Builds the system that behaves like `cps` but disables exactly the run
/// `avoid` (which starts at `start`): fresh states shadow the spine of the
/// run, and any deviation drops back into the original states.
fn avoid_run(cps: &Cps, start: &Configuration, avoid: &Run) -> (Cps, Configuration) {
    let mut system = cps.clone();
    let base = system.states.len() as u16;
    let l = avoid.len();
    for i in 0..=l {
        system.states.push(format!("~{i}"));
    }
    let configs = avoid.configs(cps).expect("avoided run is valid");
    let mut delta = Vec::new();
    for (i, t) in cps.delta.iter().enumerate() {
        delta.push(*t);
        let _ = i;
    }
    for i in 0..=l {
        let spine = crate::alphabet::StateId(base + i as u16);
        let q_i = configs[i].state;
        for (j, t) in cps.delta.iter().enumerate() {
            if t.from != q_i {
                continue;
            }
            let follows_spine = i < l && avoid.steps[i] == j;
            delta.push(Transition {
                from: spine,
                sym: t.sym,
                label: t.label,
                to: if follows_spine {
                    crate::alphabet::StateId(base + (i + 1) as u16)
                } else {
                    t.to
                },
                op: t.op,
            });
        }
    }
    system.delta = delta;
    let new_start = Configuration::new(crate::alphabet::StateId(base), start.stack.clone());
    (system, new_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::StateId;
    use crate::fixtures;

    #[test]
    fn first_return_example_is_a_return() {
        let cps = fixtures::return_example();
        let s = fixtures::return_example_stack(&cps);
        let c = Configuration::new(StateId(1), s);
        // γ1 (collapse≡pop1), γ2 (push), γ1 (collapse level 2).
        let run = Run {
            start: c.clone(),
            steps: vec![1, 2, 1],
        };
        assert!(run.validate(&cps));
        assert!(is_return(&cps, &run));
        let found = enumerate_returns(&cps, &c, 5, 10, 1 << 20).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0], run);
    }

    #[test]
    fn one_loop_example_is_a_one_loop() {
        let cps = fixtures::one_loop();
        let s = fixtures::one_loop_stack(&cps);
        let c = Configuration::new(StateId(0), s);
        let run = Run {
            start: c.clone(),
            steps: (0..10).collect(),
        };
        assert!(run.validate(&cps));
        assert!(is_one_loop(&cps, &run));
        // The run up to step 9 is also a one-loop; up to 8 is not (its last
        // word differs from the start word).
        let r9 = Run {
            start: c.clone(),
            steps: (0..9).collect(),
        };
        assert!(is_one_loop(&cps, &r9));
        let r8 = Run {
            start: c.clone(),
            steps: (0..8).collect(),
        };
        assert!(!is_one_loop(&cps, &r8));
    }

    #[test]
    fn zero_length_run_is_loop_not_return() {
        let cps = fixtures::hague();
        let run = Run::empty(cps.initial_config());
        assert!(is_loop(&cps, &run));
        assert!(is_high_loop(&cps, &run));
        assert!(!is_return(&cps, &run));
    }

    #[test]
    fn subreturn_counts_match_worked_example() {
        let cps = fixtures::subreturns();
        let s = fixtures::subreturns_stack(&cps);
        let q0 = StateId(0);
        let q2 = StateId(2);

        // Two returns from (q2, Pop₁(s)).
        let s_pop = s.popn1(1).unwrap();
        let r = enumerate_returns(&cps, &Configuration::new(q2, s_pop), 5, 20, 1 << 22).unwrap();
        assert_eq!(r.len(), 2);

        // 2 + 2·2 = 6 returns from (q0, s).
        let r = enumerate_returns(&cps, &Configuration::new(q0, s.clone()), 10, 20, 1 << 22).unwrap();
        assert_eq!(r.len(), 6);

        // Three returns from (q2, [⊥]:[⊥(b,2,1)(b,2,1)]).
        let flat = fixtures::subreturns_stack_flat(&cps);
        let flat_pop = flat.popn1(1).unwrap();
        let r = enumerate_returns(&cps, &Configuration::new(q2, flat_pop), 10, 20, 1 << 22).unwrap();
        assert_eq!(r.len(), 3);

        // 3 + 9 = 12 returns from (q0, ŝ).
        let r = enumerate_returns(&cps, &Configuration::new(q0, flat), 20, 24, 1 << 24).unwrap();
        assert_eq!(r.len(), 12);
    }

    #[test]
    fn count_runs_on_hague() {
        let cps = fixtures::hague();
        // Target (1, [⊥]:[⊥]): the runs of length ≤ 10 include `Cl`,
        // `Cl,A′,Co,Cl` and `Cl,A′,Co,Cl,A′,Co,Cl`, so the threshold-3
        // count saturates. (Derived by enumerating all runs of length ≤ 10;
        // the same value falls out of the brute-force oracle below.)
        let target = Configuration::new(
            StateId(1),
            Stack2::initial().apply(StackOp::Clone2).unwrap(),
        );
        let mut brute = 0usize;
        let mut stack = vec![Run::empty(cps.initial_config())];
        while let Some(r) = stack.pop() {
            if r.end(&cps).as_ref() == Some(&target) {
                brute += 1;
            }
            if r.len() < 10 {
                let end = r.end(&cps).unwrap();
                for (_, tidx, _) in cps.successors(&end) {
                    let mut steps = r.steps.clone();
                    steps.push(tidx);
                    stack.push(Run {
                        start: r.start.clone(),
                        steps,
                    });
                }
            }
        }
        assert!(brute >= 3);
        let (n, exhausted) = count_runs(&cps, &target, 3, 10, 1 << 22).unwrap();
        assert_eq!(n, 3);
        assert!(!exhausted);
        // The initial configuration is reached by the empty run.
        let (n, _) = count_runs(&cps, &cps.initial_config(), 2, 4, 1 << 20).unwrap();
        assert!(n >= 1);
        // An unreachable state.
        let unreachable = Configuration::new(StateId(1), Stack2::initial());
        let (n, exact) = count_runs(&cps, &unreachable, 3, 6, 1 << 22).unwrap();
        assert_eq!(n, 0);
        assert!(exact);
    }
}
