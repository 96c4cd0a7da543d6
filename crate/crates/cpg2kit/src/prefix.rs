//! Prefix and substack relations on level-2 stacks, and prefix replacement
//! on runs.

use crate::cps::{Cps, Run};
use crate::stack::{Stack2, Word};
use thiserror::Error;

/// Word prefix `w ≤ v`.
pub fn word_le(w: &Word, v: &Word) -> bool {
    w.len() <= v.len() && w[..] == v[..w.len()]
}

/// Greatest common prefix of two words.
pub fn word_gcp(w: &Word, v: &Word) -> Word {
    let n = w
        .iter()
        .zip(v.iter())
        .take_while(|(a, b)| a == b)
        .count();
    w[..n].to_vec()
}

/// The prefix relation `s ⊑ t`: the first `|s|−1` words agree and the last
/// word of `s` is a prefix of every remaining word of `t`.
pub fn is_prefix(s: &Stack2, t: &Stack2) -> bool {
    let n = s.width();
    if n > t.width() {
        return false;
    }
    if s.words()[..n - 1] != t.words()[..n - 1] {
        return false;
    }
    let last = &s.words()[n - 1];
    t.words()[n - 1..].iter().all(|v| word_le(last, v))
}

/// The substack relation: `s ≤ t` iff `s = Pop₁ⁿ¹(Pop₂ⁿ²(t))` for some
/// n₁, n₂ ≥ 0.
pub fn is_substack(s: &Stack2, t: &Stack2) -> bool {
    let n = s.width();
    if n > t.width() {
        return false;
    }
    if s.words()[..n - 1] != t.words()[..n - 1] {
        return false;
    }
    word_le(&s.words()[n - 1], &t.words()[n - 1])
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplaceError {
    #[error("prefix does not cover configuration {0} of the run")]
    NotPrefixed(usize),
    #[error("replacement changes the width ({s} vs {u})")]
    WidthMismatch { s: usize, u: usize },
    #[error("top letters differ and the top word of the prefix is visited at step {0}")]
    TopExposed(usize),
    #[error("replaced start stack is not a valid stack: {0}")]
    InvalidStart(String),
    #[error("run is broken at step {0}")]
    BrokenRun(usize),
}

/// `t[s/u]`: replace the prefix `s` of `t` by `u`.
pub fn stack_replace(t: &Stack2, s: &Stack2, u: &Stack2) -> Option<Stack2> {
    if !is_prefix(s, t) {
        return None;
    }
    let n = s.width();
    let top = &s.words()[n - 1];
    let mut words: Vec<Word> = u.words()[..u.width() - 1].to_vec();
    let x_p = u.top_word();
    for v in &t.words()[n - 1..] {
        let mut w = x_p.clone();
        w.extend_from_slice(&v[top.len()..]);
        words.push(w);
    }
    Some(Stack2::from_words(words))
}

/// Replaces the prefix `s` by `u` in every configuration of `ρ`.
///
/// Preconditions: `s ⊑ ρ`; `|s| = |u|`; either the top letters of `s` and
/// `u` agree or `TOP₂(s)` is strictly below every intermediate top word;
/// and the replaced start stack is valid.
pub fn prefix_replace_run(cps: &Cps, run: &Run, s: &Stack2, u: &Stack2) -> Result<Run, ReplaceError> {
    let configs = run
        .configs(cps)
        .ok_or(ReplaceError::BrokenRun(0))?;
    for (i, c) in configs.iter().enumerate() {
        if !is_prefix(s, &c.stack) {
            return Err(ReplaceError::NotPrefixed(i));
        }
    }
    if s.width() != u.width() {
        return Err(ReplaceError::WidthMismatch {
            s: s.width(),
            u: u.width(),
        });
    }
    if s.top_letter() != u.top_letter() {
        // TOP₂(s) must stay strictly below all tops before the last step.
        for (i, c) in configs.iter().enumerate().take(configs.len().max(1) - 1) {
            if !(word_le(s.top_word(), c.stack.top_word())
                && s.top_word().len() < c.stack.top_word().len())
            {
                return Err(ReplaceError::TopExposed(i));
            }
        }
    }
    let start = stack_replace(&configs[0].stack, s, u).ok_or(ReplaceError::NotPrefixed(0))?;
    start
        .validate()
        .map_err(|e| ReplaceError::InvalidStart(e.to_string()))?;
    let new = Run {
        start: crate::cps::Configuration::new(configs[0].state, start),
        steps: run.steps.clone(),
    };
    if !new.validate(cps) {
        return Err(ReplaceError::BrokenRun(0));
    }
    Ok(new)
}

/// Level-1 variant: replaces the word prefix `w` by `w'` in a run of a
/// width-1 system. `w'` must end with the same letter as `w` (or `w` must
/// stay strictly below every stack).
pub fn word_prefix_replace_run(
    cps: &Cps,
    run: &Run,
    w: &Word,
    w2: &Word,
) -> Result<Run, ReplaceError> {
    let configs = run.configs(cps).ok_or(ReplaceError::BrokenRun(0))?;
    for (i, c) in configs.iter().enumerate() {
        if c.stack.width() != 1 || !word_le(w, c.stack.top_word()) {
            return Err(ReplaceError::NotPrefixed(i));
        }
    }
    if w.last() != w2.last() {
        for (i, c) in configs.iter().enumerate().take(configs.len().max(1) - 1) {
            if c.stack.top_word().len() <= w.len() {
                return Err(ReplaceError::TopExposed(i));
            }
        }
    }
    let mut word = w2.clone();
    word.extend_from_slice(&configs[0].stack.top_word()[w.len()..]);
    let new = Run {
        start: crate::cps::Configuration::new(configs[0].state, Stack2::from_words(vec![word])),
        steps: run.steps.clone(),
    };
    if !new.validate(cps) {
        return Err(ReplaceError::BrokenRun(0));
    }
    Ok(new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::stack::{Letter, StackOp};
    use crate::alphabet::BOTTOM;

    #[test]
    fn prefix_examples() {
        let mut alph = Alphabet::new();
        let a = alph.intern("a");
        let b = alph.intern("b");
        let s = Stack2::from_words(vec![vec![Letter::l1(BOTTOM), Letter::l1(a)]]);
        let t = Stack2::from_words(vec![
            vec![Letter::l1(BOTTOM), Letter::l1(a)],
            vec![Letter::l1(BOTTOM), Letter::l1(a), Letter::l1(b)],
        ]);
        assert!(is_prefix(&s, &t));
        assert!(is_prefix(&t, &t));
        assert!(is_substack(&t, &t));
        let sb = Stack2::from_words(vec![vec![Letter::l1(BOTTOM), Letter::l1(b)]]);
        assert!(!is_prefix(&sb, &t));
        // [⊥a] is a substack of t via Pop₂, and [⊥] via Pop₂Pop₁.
        assert!(is_substack(&s, &t));
        assert!(is_substack(&Stack2::initial(), &t));
        // [⊥ab] is NOT a prefix of t (word 1 differs), but not a substack
        // either since widths force word-1 equality.
        let sab = Stack2::from_words(vec![vec![
            Letter::l1(BOTTOM),
            Letter::l1(a),
            Letter::l1(b),
        ]]);
        assert!(!is_prefix(&sab, &t));
        assert!(is_substack(&sab, &Stack2::from_words(t.words().to_vec())) == false);
    }

    #[test]
    fn replace_identity_and_zero_length() {
        let cps = crate::fixtures::hague();
        let s = Stack2::initial().apply(StackOp::Clone2).unwrap();
        let run = Run::empty(crate::cps::Configuration::new(
            crate::alphabet::StateId(1),
            s.clone(),
        ));
        // s = u: identity on runs.
        let r = prefix_replace_run(&cps, &run, &s, &s).unwrap();
        assert_eq!(r, run);
        // length-0 run: replacing the whole stack by another of equal top.
        let a = cps.alphabet.lookup("a").unwrap();
        let u = Stack2::from_words(vec![
            vec![Letter::l1(BOTTOM)],
            vec![Letter::l1(BOTTOM)],
            vec![Letter::l1(BOTTOM)],
        ]);
        let s3 = Stack2::from_words(vec![vec![Letter::l1(BOTTOM)], vec![Letter::l1(BOTTOM)]]);
        let run0 = Run::empty(crate::cps::Configuration::new(
            crate::alphabet::StateId(1),
            s3.clone(),
        ));
        let _ = a;
        let err = prefix_replace_run(&cps, &run0, &s3, &u).unwrap_err();
        assert!(matches!(err, ReplaceError::WidthMismatch { .. }));
    }
}
