//! Cross-validation of the counting automaton and the reachability
//! relations against brute-force enumeration.

use cpg2kit::alphabet::StateId;
use cpg2kit::counting::{
    return_simulator, simulator_stack, CounterAutomaton, CountingCaps, LetterClass,
};
use cpg2kit::cps::{Configuration, Cps, Run};
use cpg2kit::fixtures;
use cpg2kit::loops::{
    enumerate_class, enumerate_loops, enumerate_returns, is_high_loop, is_low_loop, RunClass,
};
use cpg2kit::stack::{Letter, LinkLevel, Stack2, Word};

/// All well-formed top words (⊥ then letter classes) up to the given
/// number of letters.
fn words_up_to(cps: &Cps, extra: usize) -> Vec<Word> {
    let classes: Vec<Letter> = cps
        .alphabet
        .user_ids()
        .filter(|&s| s != cpg2kit::alphabet::BOTTOM)
        .flat_map(|s| [Letter::l1(s), Letter::l2(s, 0)])
        .collect();
    let mut out: Vec<Word> = vec![vec![Letter::l1(cpg2kit::alphabet::BOTTOM)]];
    let mut layer = out.clone();
    for _ in 0..extra {
        let mut next = Vec::new();
        for w in &layer {
            for c in &classes {
                let mut v = w.clone();
                v.push(*c);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The canonical width-2 stack `w□ : w` whose runs to its first word are
/// exactly the returns of `w`.
fn canonical_stack(w: &Word) -> Stack2 {
    let mut first = w.clone();
    first.push(Letter::l1(cpg2kit::alphabet::BOX));
    Stack2::from_words(vec![first, w.clone()])
}

#[test]
fn counter_automaton_matches_enumeration_on_short_words() {
    let k = 3u32;
    for cps in [fixtures::subreturns(), fixtures::hague()] {
        let aut = CounterAutomaton::build(&cps, k, &CountingCaps::default()).unwrap();
        let bounds = aut.bound_fns();
        for w in words_up_to(&cps, 3) {
            let ann = aut.annotation_for_word(&w).unwrap();
            let s = canonical_stack(&w);
            let f_ret = bounds.f_ret(w.len() as u32).min(26) as usize;
            let f_loop = bounds.f_loop(w.len() as u32).min(22) as usize;
            let exact_ret = f_ret as u64 >= bounds.f_ret(w.len() as u32);
            let exact_loop = f_loop as u64 >= bounds.f_loop(w.len() as u32);
            for q in cps.state_ids() {
                let c = Configuration::new(q, s.clone());
                let rets = enumerate_returns(&cps, &c, 64, f_ret, 1 << 24).unwrap();
                let loops = enumerate_loops(&cps, &c, 64, f_loop, 1 << 24).unwrap();
                for q2 in cps.state_ids() {
                    let found =
                        count_to(&cps, &rets, q2).min(k as usize) as u32;
                    let claimed = ann.ret.get(q, q2);
                    if exact_ret || claimed == k || found == k as usize as u32 {
                        assert_eq!(
                            claimed, found,
                            "returns of {w:?} from {q:?} to {q2:?}"
                        );
                    } else {
                        assert!(found <= claimed);
                    }
                    let found_l = count_to(&cps, &loops, q2).min(k as usize) as u32;
                    let claimed_l = ann.loops.get(q, q2);
                    if exact_loop || claimed_l == k || found_l == k {
                        assert_eq!(
                            claimed_l, found_l,
                            "loops of {w:?} from {q:?} to {q2:?}"
                        );
                    } else {
                        assert!(found_l <= claimed_l);
                    }
                }
            }
        }
    }
}

fn count_to(cps: &Cps, runs: &[Run], q2: StateId) -> usize {
    runs.iter()
        .filter(|r| r.end(cps).map(|c| c.state) == Some(q2))
        .count()
}

#[test]
fn simulator_runs_match_the_original_returns() {
    // The number of simulator runs from the canonical start equals the
    // return count of the extended word, up to the threshold.
    let cps = fixtures::subreturns();
    let k = 5u32;
    let aut = CounterAutomaton::build(&cps, k, &CountingCaps::default()).unwrap();
    let b = cps.alphabet.lookup("b").unwrap();
    let a = cps.alphabet.lookup("a").unwrap();
    // w = ⊥(b,2,0)(b,2,0), extended by the letter a.
    let w: Word = vec![
        Letter::l1(cpg2kit::alphabet::BOTTOM),
        Letter::l2(b, 0),
        Letter::l2(b, 0),
    ];
    let ret_w = aut.annotation_for_word(&w).unwrap().ret.clone();
    let sim = return_simulator(&cps, &ret_w);
    let tau = LetterClass {
        sym: a,
        level: LinkLevel::L1,
    };
    let s_prime = simulator_stack(tau);
    let mut wa = w.clone();
    wa.push(Letter::l1(a));
    let ret_wa = aut.annotation_for_word(&wa).unwrap();
    for q in cps.state_ids() {
        let c = Configuration::new(q, s_prime.clone());
        let sims = enumerate_returns(&sim, &c, k as usize * 4, 24, 1 << 24).unwrap();
        for q2 in cps.state_ids() {
            let found = count_to(&sim, &sims, q2).min(k as usize) as u32;
            assert_eq!(
                found,
                ret_wa.ret.get(q, q2),
                "simulations {q:?} -> {q2:?}"
            );
        }
    }
    // The worked example: the simulator adds Rt transitions out of q2 and
    // (q0, s) has min(k, 6) returns.
    assert_eq!(ret_w.get(StateId(2), StateId(2)), 2);
    assert_eq!(ret_wa.ret.get(StateId(0), StateId(2)), 5);
}

#[test]
fn low_loop_formula_matches_enumeration() {
    let cps = fixtures::subreturns();
    let k = 4u32;
    let aut = CounterAutomaton::build(&cps, k, &CountingCaps::default()).unwrap();
    for w in words_up_to(&cps, 2) {
        let ann = aut.annotation_for_word(&w).unwrap();
        let s = canonical_stack(&w);
        for q in cps.state_ids() {
            let c = Configuration::new(q, s.clone());
            let lows =
                enumerate_class(&cps, &c, RunClass::LowLoop, 64, 14, 1 << 24).unwrap();
            for q2 in cps.state_ids() {
                let found = count_to(&cps, &lows, q2).min(k as usize) as u32;
                if found == k || ann.low.get(q, q2) <= found {
                    assert_eq!(found, ann.low.get(q, q2), "low loops of {w:?}");
                }
            }
        }
    }
}

#[test]
fn counts_depend_only_on_the_top_word_classes() {
    let cps = fixtures::subreturns();
    let aut = CounterAutomaton::build(&cps, 10, &CountingCaps::default()).unwrap();
    // Two stacks with the same top word classes but different links and
    // lower words.
    let s1 = fixtures::subreturns_stack(&cps);
    let s2 = fixtures::subreturns_stack_flat(&cps);
    let w1: Word = s1.top_word_down0();
    let w2: Word = {
        // ŝ has top word ⊥(b,2,1)(b,2,1)a; shrink to ⊥(b,2,·)a to compare
        // against Pop₁ of it instead.
        s2.top_word_down0()
    };
    assert_ne!(w1, w2);
    // Equal class words give the identical annotation row.
    let b = cps.alphabet.lookup("b").unwrap();
    let a = cps.alphabet.lookup("a").unwrap();
    let wclass: Word = vec![
        Letter::l1(cpg2kit::alphabet::BOTTOM),
        Letter::l2(b, 0),
        Letter::l1(a),
    ];
    let alt = Stack2::from_words(vec![
        vec![Letter::l1(cpg2kit::alphabet::BOTTOM)],
        vec![Letter::l1(cpg2kit::alphabet::BOTTOM), Letter::l2(b, 1), Letter::l1(a)],
    ]);
    alt.validate().unwrap();
    let direct = aut.annotation_for_word(&wclass).unwrap();
    let via_stack = aut.annotation_for_word(alt.top_word()).unwrap();
    assert_eq!(direct.ret, via_stack.ret);
    assert_eq!(direct.loops, via_stack.loops);
    // And the enumeration agrees across the two stacks of that class.
    let other = Stack2::from_words(vec![
        vec![
            Letter::l1(cpg2kit::alphabet::BOTTOM),
            Letter::l2(b, 0),
            Letter::l1(cpg2kit::alphabet::BOX),
        ],
        vec![Letter::l1(cpg2kit::alphabet::BOTTOM), Letter::l2(b, 1), Letter::l1(a)],
    ]);
    other.validate().unwrap();
    for q in cps.state_ids() {
        let r1 = enumerate_returns(&cps, &Configuration::new(q, alt.clone()), 20, 20, 1 << 22)
            .unwrap();
        let r2 = enumerate_returns(&cps, &Configuration::new(q, other.clone()), 20, 20, 1 << 22)
            .unwrap();
        assert_eq!(r1.len(), r2.len(), "returns from {q:?}");
        // Equivalent returns use the same transition sequences.
        let s1: Vec<&Vec<usize>> = r1.iter().map(|r| &r.steps).collect();
        let s2: Vec<&Vec<usize>> = r2.iter().map(|r| &r.steps).collect();
        assert_eq!(s1, s2);
    }
}

#[test]
fn link_evolution_forces_the_pop2_stack() {
    // A run from s through Pop₁(s) back to s, where the top letter's link
    // stays below the width, must pass Pop₂(s).
    let cps = fixtures::subreturns();
    let b = cps.alphabet.lookup("b").unwrap();
    let bot = cpg2kit::alphabet::BOTTOM;
    let s = Stack2::from_words(vec![
        vec![Letter::l1(bot), Letter::l2(b, 0), Letter::l2(b, 0)],
        vec![Letter::l1(bot), Letter::l2(b, 1)],
        vec![Letter::l1(bot), Letter::l2(b, 1)],
    ]);
    s.validate().unwrap();
    assert!(s.top_link() < s.width() as u32 - 1);
    let pop1 = s.popn1(1).unwrap();
    let pop2 = s.popn2(1).unwrap();
    for q in cps.state_ids() {
        let mut stack = vec![Run::empty(Configuration::new(q, s.clone()))];
        while let Some(run) = stack.pop() {
            if run.len() > 10 {
                continue;
            }
            let configs = run.configs(&cps).unwrap();
            if run.len() > 0 && configs.last().unwrap().stack == s {
                let through_pop1 = configs.iter().any(|c| c.stack == pop1);
                let through_pop2 = configs.iter().any(|c| c.stack == pop2);
                if through_pop1 {
                    assert!(through_pop2, "{:?}", run.steps);
                }
            }
            let end = run.end(&cps).unwrap();
            for (_, tidx, _) in cps.successors(&end) {
                let mut steps = run.steps.clone();
                steps.push(tidx);
                stack.push(Run {
                    start: run.start.clone(),
                    steps,
                });
            }
        }
    }
}

#[test]
fn loops_split_into_high_low_high() {
    let cps = fixtures::subreturns();
    let s = fixtures::subreturns_stack(&cps);
    for q in cps.state_ids() {
        let c = Configuration::new(q, s.clone());
        let loops = enumerate_loops(&cps, &c, 64, 10, 1 << 22).unwrap();
        for l in loops {
            if is_high_loop(&cps, &l) {
                continue;
            }
            // The first and last visits of Pop₁(s) delimit the unique low
            // part.
            let configs = l.configs(&cps).unwrap();
            let pop1 = s.popn1(1).unwrap();
            let first = configs.iter().position(|c| c.stack == pop1).unwrap();
            let last = configs.iter().rposition(|c| c.stack == pop1).unwrap();
            let head = l.restrict(&cps, 0, first - 1).unwrap();
            let mid = l.restrict(&cps, first - 1, last + 1).unwrap();
            let tail = l.restrict(&cps, last + 1, l.len()).unwrap();
            assert!(is_high_loop(&cps, &head), "{:?}", l.steps);
            assert!(is_low_loop(&cps, &mid), "{:?}", l.steps);
            assert!(is_high_loop(&cps, &tail), "{:?}", l.steps);
        }
    }
}

#[test]
fn bound_functions_cover_the_shortest_returns() {
    let cps = fixtures::subreturns();
    let k = 6u32;
    let aut = CounterAutomaton::build(&cps, k, &CountingCaps::default()).unwrap();
    let bounds = aut.bound_fns();
    for s in [
        fixtures::subreturns_stack(&cps),
        fixtures::subreturns_stack_flat(&cps),
    ] {
        let n = s.top_word().len() as u32;
        let ann = aut.annotation_for_word(s.top_word()).unwrap();
        for q in cps.state_ids() {
            let c = Configuration::new(q, s.clone());
            let rets = enumerate_returns(&cps, &c, k as usize, 30, 1 << 24).unwrap();
            for q2 in cps.state_ids() {
                let i = ann.ret.get(q, q2) as usize;
                let shortest: Vec<&Run> = rets
                    .iter()
                    .filter(|r| r.end(&cps).map(|e| e.state) == Some(q2))
                    .take(i)
                    .collect();
                for r in shortest {
                    assert!(
                        (r.len() as u64) <= bounds.f_ret(n),
                        "return of length {} exceeds f_ret({n}) = {}",
                        r.len(),
                        bounds.f_ret(n)
                    );
                }
            }
        }
    }
}

#[test]
fn b_and_c_match_a_bounded_run_oracle() {
    let cps = fixtures::hague();
    let counter = CounterAutomaton::build(&cps, 1, &CountingCaps::default()).unwrap();
    let a = cps.alphabet.lookup("a").unwrap();
    let bot = cpg2kit::alphabet::BOTTOM;
    let tall = Stack2::from_words(vec![
        vec![Letter::l1(bot)],
        vec![Letter::l1(bot), Letter::l2(a, 1), Letter::l2(a, 1)],
    ]);
    tall.validate().unwrap();
    for m in 0..=2usize {
        let low = tall.popn1(m).unwrap();
        for q1 in cps.state_ids() {
            for q2 in cps.state_ids() {
                let c1 = Configuration::new(q1, tall.clone());
                let c2 = Configuration::new(q2, low.clone());
                let got = cpg2kit::reach::rel_b(&cps, &counter, &c1, &c2).unwrap();
                let oracle = exists_run_with_floor(&cps, &c1, &c2, &low, 14);
                let stable = exists_run_with_floor(&cps, &c1, &c2, &low, 18);
                assert_eq!(oracle, stable, "oracle horizon unstable");
                assert_eq!(got, oracle, "B({c1:?}, {c2:?})");
                // And the push direction.
                let got_c = cpg2kit::reach::rel_c(&cps, &counter, &c2, &c1).unwrap();
                let oracle_c = exists_run_with_floor(&cps, &c2, &c1, &low, 14);
                let stable_c = exists_run_with_floor(&cps, &c2, &c1, &low, 18);
                assert_eq!(oracle_c, stable_c);
                assert_eq!(got_c, oracle_c, "C({c2:?}, {c1:?})");
            }
        }
    }
}

/// Is there a run from `c1` to `c2` of length at most `horizon` never
/// visiting a proper substack of `floor`?
fn exists_run_with_floor(
    cps: &Cps,
    c1: &Configuration,
    c2: &Configuration,
    floor: &Stack2,
    horizon: usize,
) -> bool {
    let mut seen = std::collections::HashSet::new();
    let mut frontier = vec![c1.clone()];
    seen.insert(c1.clone());
    if c1 == c2 {
        return true;
    }
    for _ in 0..horizon {
        let mut next = Vec::new();
        for c in &frontier {
            for (_, _, succ) in cps.successors(c) {
                if cpg2kit::prefix::is_substack(&succ.stack, floor) && &succ.stack != floor {
                    continue;
                }
                if &succ == c2 {
                    return true;
                }
                if seen.insert(succ.clone()) {
                    next.push(succ);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    false
}
