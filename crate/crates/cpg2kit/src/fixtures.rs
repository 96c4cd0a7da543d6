//! Small example systems used throughout the test-suite and the docs.

use crate::alphabet::{Alphabet, LabelId, StateId};
use crate::cps::{Cps, Transition};
use crate::stack::{Letter, LinkLevel, Stack2, StackOp};

/// Stack operation referencing symbols by name; resolved against the
/// system's alphabet while building a fixture.
#[derive(Clone, Copy)]
enum Op {
    Push(&'static str, LinkLevel),
    Clone2,
    Pop1,
    Pop2,
    Collapse,
}

fn build(
    states: &[&str],
    syms: &[&str],
    labels: &[&str],
    initial: usize,
    rows: &[(usize, &'static str, usize, usize, Op)],
) -> Cps {
    let mut alph = Alphabet::new();
    for s in syms {
        alph.intern(s);
    }
    let delta = rows
        .iter()
        .map(|&(q, sym, label, to, op)| Transition {
            from: StateId(q as u16),
            sym: alph.lookup(sym).unwrap(),
            label: LabelId(label as u16),
            to: StateId(to as u16),
            op: match op {
                Op::Push(s, lvl) => StackOp::Push(alph.lookup(s).unwrap(), lvl),
                Op::Clone2 => StackOp::Clone2,
                Op::Pop1 => StackOp::Pop1,
                Op::Pop2 => StackOp::Pop2,
                Op::Collapse => StackOp::Collapse,
            },
        })
        .collect();
    let (cps, warnings) = Cps::new(
        states.iter().map(|s| s.to_string()).collect(),
        alph,
        labels.iter().map(|s| s.to_string()).collect(),
        StateId(initial as u16),
        delta,
    )
    .expect("fixture is well-formed");
    assert!(warnings.is_empty(), "fixture labels are already normal");
    cps
}

/// The classic three-state 2-CPG over `{⊥, a}` whose MSO theory is
/// undecidable: `Cl` clones, `A`/`A′` push `(a,2)`, `P` pops, `Co` collapses.
pub fn hague() -> Cps {
    build(
        &["0", "1", "2"],
        &["a"],
        &["Cl", "A", "A'", "P", "Co"],
        0,
        &[
            (0, "⊥", 0, 1, Op::Clone2),
            (0, "a", 0, 1, Op::Clone2),
            (1, "⊥", 1, 0, Op::Push("a", LinkLevel::L2)),
            (1, "a", 1, 0, Op::Push("a", LinkLevel::L2)),
            (1, "⊥", 2, 2, Op::Push("a", LinkLevel::L2)),
            (1, "a", 2, 2, Op::Push("a", LinkLevel::L2)),
            (2, "a", 3, 2, Op::Pop1),
            (2, "a", 4, 0, Op::Collapse),
        ],
    )
}

/// The nine-transition system used for counting returns, together with its
/// two interesting stacks (see [`subreturns_stack`] and
/// [`subreturns_stack_flat`]).
pub fn subreturns() -> Cps {
    build(
        &["q0", "q1", "q2", "q3"],
        &["a", "b", "c"],
        &["g0", "g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8"],
        0,
        &[
            (0, "a", 0, 2, Op::Collapse),
            (1, "a", 1, 2, Op::Collapse),
            (2, "b", 2, 1, Op::Push("a", LinkLevel::L2)),
            (0, "a", 3, 3, Op::Push("c", LinkLevel::L2)),
            (3, "c", 4, 2, Op::Clone2),
            (2, "c", 5, 2, Op::Pop1),
            (2, "b", 6, 2, Op::Pop1),
            (2, "a", 7, 2, Op::Pop1),
            (2, "⊥", 8, 2, Op::Pop2),
        ],
    )
}

/// `s = [⊥ (b,2,0) (b,2,0)] : [⊥ (b,2,1) a]` — the stack with 6 returns
/// from `q0`.
pub fn subreturns_stack(cps: &Cps) -> Stack2 {
    let b = cps.alphabet.lookup("b").unwrap();
    let a = cps.alphabet.lookup("a").unwrap();
    Stack2::from_words(vec![
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l2(b, 0),
            Letter::l2(b, 0),
        ],
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l2(b, 1),
            Letter::l1(a),
        ],
    ])
}

/// `ŝ = [⊥] : [⊥ (b,2,1) (b,2,1) a]` — the stack with 12 returns from `q0`.
pub fn subreturns_stack_flat(cps: &Cps) -> Stack2 {
    let b = cps.alphabet.lookup("b").unwrap();
    let a = cps.alphabet.lookup("a").unwrap();
    Stack2::from_words(vec![
        vec![Letter::l1(crate::alphabet::BOTTOM)],
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l2(b, 1),
            Letter::l2(b, 1),
            Letter::l1(a),
        ],
    ])
}

/// The three-transition system of the first return example: clone on `a`,
/// collapse on `a`, push `(a,2)` on `b`.
pub fn return_example() -> Cps {
    build(
        &["q0", "q1"],
        &["a", "b"],
        &["g0", "g1", "g2"],
        0,
        &[
            (0, "a", 0, 1, Op::Clone2),
            (1, "a", 1, 1, Op::Collapse),
            (1, "b", 2, 1, Op::Push("a", LinkLevel::L2)),
        ],
    )
}

/// The stack `[⊥ (b,2,0) □] : [⊥ (b,2,1) a]` of the first return example.
pub fn return_example_stack(cps: &Cps) -> Stack2 {
    let b = cps.alphabet.lookup("b").unwrap();
    let a = cps.alphabet.lookup("a").unwrap();
    Stack2::from_words(vec![
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l2(b, 0),
            Letter::l1(crate::alphabet::BOX),
        ],
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l2(b, 1),
            Letter::l1(a),
        ],
    ])
}

/// An eleven-state deterministic system realising a ten-step level-1-loop
/// over the stack `[⊥ a b] : [⊥ a c d]`.
pub fn one_loop() -> Cps {
    build(
        &[
            "q0", "q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8", "q9", "q10",
        ],
        &["e", "a", "b", "c", "d"],
        &["g0", "g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8", "g9"],
        0,
        &[
            (0, "d", 0, 1, Op::Clone2),
            (1, "d", 1, 2, Op::Pop1),
            (2, "c", 2, 3, Op::Pop1),
            (3, "a", 3, 4, Op::Push("e", LinkLevel::L2)),
            (4, "e", 4, 5, Op::Clone2),
            (5, "e", 5, 6, Op::Collapse),
            (6, "d", 6, 7, Op::Push("e", LinkLevel::L2)),
            (7, "e", 7, 8, Op::Clone2),
            (8, "e", 8, 9, Op::Pop1),
            (9, "d", 9, 10, Op::Clone2),
        ],
    )
}

/// `[⊥ a b] : [⊥ a c d]`, the base stack of the level-1-loop example.
pub fn one_loop_stack(cps: &Cps) -> Stack2 {
    let a = cps.alphabet.lookup("a").unwrap();
    let b = cps.alphabet.lookup("b").unwrap();
    let c = cps.alphabet.lookup("c").unwrap();
    let d = cps.alphabet.lookup("d").unwrap();
    Stack2::from_words(vec![
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l1(a),
            Letter::l1(b),
        ],
        vec![
            Letter::l1(crate::alphabet::BOTTOM),
            Letter::l1(a),
            Letter::l1(c),
            Letter::l1(d),
        ],
    ])
}

/// The four-state system whose unique run from the five-word stack of
/// [`reach_decomposition_stack`] descends to the initial stack through
/// every chain form (one-loops, loops, returns, pops and collapses).
pub fn reach_decomposition() -> Cps {
    build(
        &["q1", "q2", "q3", "q4"],
        &["a", "b", "c"],
        &["g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8"],
        0,
        &[
            (0, "a", 0, 1, Op::Clone2),
            (1, "a", 1, 2, Op::Collapse),
            (2, "a", 2, 1, Op::Clone2),
            (2, "b", 3, 1, Op::Push("b", LinkLevel::L2)),
            (0, "c", 4, 3, Op::Push("b", LinkLevel::L1)),
            (1, "b", 5, 0, Op::Collapse),
            (1, "c", 6, 0, Op::Collapse),
            (3, "b", 7, 1, Op::Pop1),
        ],
    )
}

/// `[⊥] : [⊥(c,2,1)c] : [⊥(c,2,1)b] : [⊥(c,2,1)(a,2,3)a] :
/// [⊥(c,2,1)(a,2,3)a]`.
pub fn reach_decomposition_stack(cps: &Cps) -> Stack2 {
    let a = cps.alphabet.lookup("a").unwrap();
    let b = cps.alphabet.lookup("b").unwrap();
    let c = cps.alphabet.lookup("c").unwrap();
    let bot = crate::alphabet::BOTTOM;
    Stack2::from_words(vec![
        vec![Letter::l1(bot)],
        vec![Letter::l1(bot), Letter::l2(c, 1), Letter::l1(c)],
        vec![Letter::l1(bot), Letter::l2(c, 1), Letter::l1(b)],
        vec![
            Letter::l1(bot),
            Letter::l2(c, 1),
            Letter::l2(a, 3),
            Letter::l1(a),
        ],
        vec![
            Letter::l1(bot),
            Letter::l2(c, 1),
            Letter::l2(a, 3),
            Letter::l1(a),
        ],
    ])
}

/// The two-state level-1 pushdown system whose nested pushdown tree is the
/// standard undecidability example: `A` pushes `a`, `P` pops.
pub fn npt_example() -> Cps {
    build(
        &["0", "1"],
        &["a"],
        &["A", "P"],
        0,
        &[
            (0, "⊥", 0, 0, Op::Push("a", LinkLevel::L1)),
            (0, "a", 0, 0, Op::Push("a", LinkLevel::L1)),
            (0, "a", 1, 1, Op::Pop1),
            (1, "a", 1, 1, Op::Pop1),
        ],
    )
}

/// The five-word stack whose encoding exercises every case of the blockline
/// recursion; its level-2 links are `(a,2,0)`, `(a,2,2)`, `(c,2,1)`,
/// `(d,2,3)`.
pub fn encoding_example_stack(alph: &mut Alphabet) -> Stack2 {
    let a = alph.intern("a");
    let b = alph.intern("b");
    let c = alph.intern("c");
    let d = alph.intern("d");
    let e = alph.intern("e");
    let bot = crate::alphabet::BOTTOM;
    Stack2::from_words(vec![
        vec![Letter::l1(bot), Letter::l2(a, 0), Letter::l2(b, 0)],
        vec![
            Letter::l1(bot),
            Letter::l2(a, 0),
            Letter::l2(b, 0),
            Letter::l2(c, 1),
        ],
        vec![Letter::l1(bot), Letter::l2(a, 2), Letter::l1(c)],
        vec![
            Letter::l1(bot),
            Letter::l2(a, 2),
            Letter::l2(d, 3),
            Letter::l1(e),
        ],
        vec![Letter::l1(bot), Letter::l2(a, 2)],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        let cps = subreturns();
        subreturns_stack(&cps).validate().unwrap();
        subreturns_stack_flat(&cps).validate().unwrap();
        let cps = return_example();
        return_example_stack(&cps).validate().unwrap();
        let cps = one_loop();
        one_loop_stack(&cps).validate().unwrap();
        let mut alph = Alphabet::new();
        encoding_example_stack(&mut alph).validate().unwrap();
        let cps = reach_decomposition();
        reach_decomposition_stack(&cps).validate().unwrap();
    }

    #[test]
    fn reach_decomposition_run_descends_to_the_initial_stack() {
        use crate::alphabet::StateId;
        use crate::cps::{Configuration, Run};
        let cps = reach_decomposition();
        let s = reach_decomposition_stack(&cps);
        // The transition relation is deterministic from (q1, s); follow it.
        let mut run = Run::empty(Configuration::new(StateId(0), s));
        loop {
            let end = run.end(&cps).unwrap();
            let succ = cps.successors(&end);
            if succ.is_empty() {
                break;
            }
            assert_eq!(succ.len(), 1, "deterministic fixture");
            run.steps.push(succ[0].1);
            assert!(run.len() <= 20);
        }
        let end = run.end(&cps).unwrap();
        assert_eq!(end, Configuration::new(StateId(0), Stack2::initial()));
        assert_eq!(run.len(), 12);
    }
}
