//! Level-2 stacks of linked letters and the stack operations.
//!
//! A stack is a nonempty sequence of nonempty words. Every letter carries a
//! link level; level-2 letters additionally carry a link width naming a
//! prefix of the surrounding stack. Level-1 letters normalise their link
//! width to 0 on construction, so letters compare by value.

use crate::alphabet::{Alphabet, SymId, BOTTOM};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Link level of a letter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum LinkLevel {
    L1,
    L2,
}

/// A stack letter: symbol, link level, and (for level 2) the linked width.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub sym: SymId,
    pub level: LinkLevel,
    pub link: u32,
}

impl Letter {
    /// A level-1 letter. The link width is fixed to 0.
    pub fn l1(sym: SymId) -> Self {
        Letter {
            sym,
            level: LinkLevel::L1,
            link: 0,
        }
    }

    /// A level-2 letter with an explicit link width.
    pub fn l2(sym: SymId, link: u32) -> Self {
        Letter {
            sym,
            level: LinkLevel::L2,
            link,
        }
    }

    /// The same letter with its level-2 link set to 0 (`↓0`).
    pub fn down0(self) -> Self {
        match self.level {
            LinkLevel::L1 => self,
            LinkLevel::L2 => Letter::l2(self.sym, 0),
        }
    }

    /// Equality of symbol and link level, ignoring the link width.
    pub fn class_eq(self, other: Letter) -> bool {
        self.sym == other.sym && self.level == other.level
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            LinkLevel::L1 => write!(f, "{:?}", self.sym),
            LinkLevel::L2 => write!(f, "({:?},2,{})", self.sym, self.link),
        }
    }
}

/// A level-1 stack: a nonempty word of letters, bottom first.
pub type Word = Vec<Letter>;

/// The five stack operations of a level-2 collapsible pushdown system,
/// plus the identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum StackOp {
    /// `Push(σ,k)`: push `σ` with a link of level `k` onto the top word.
    Push(SymId, LinkLevel),
    /// `Clone₂`: duplicate the top word.
    Clone2,
    Pop1,
    Pop2,
    Collapse,
    Id,
}

/// A level-2 stack: a nonempty sequence of nonempty words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Stack2 {
    words: Vec<Word>,
}

/// Violations of the static stack invariants.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StackError {
    #[error("stack has no words")]
    Empty,
    #[error("word {0} is empty")]
    EmptyWord(usize),
    #[error("word {word} does not start with ⊥")]
    MissingBottom { word: usize },
    #[error("⊥ occurs above the bottom of word {word}")]
    InnerBottom { word: usize },
    #[error("letter at word {word}, height {height} has link {link} exceeding {max}")]
    LinkTooWide {
        word: usize,
        height: usize,
        link: u32,
        max: u32,
    },
    #[error("letter at word {word}, height {height} is no clone and no fresh push")]
    BadClone { word: usize, height: usize },
}

impl Stack2 {
    /// The initial stack `[⊥]`.
    pub fn initial() -> Self {
        Stack2 {
            words: vec![vec![Letter::l1(BOTTOM)]],
        }
    }

    /// Builds a stack from raw words. Validity is not checked; use
    /// [`Stack2::validate`] for that.
    pub fn from_words(words: Vec<Word>) -> Self {
        Stack2 { words }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// Width `|s|`: the number of words.
    pub fn width(&self) -> usize {
        self.words.len()
    }

    /// Height: the length of the longest word.
    pub fn height(&self) -> usize {
        self.words.iter().map(|w| w.len()).max().unwrap_or(0)
    }

    /// `TOP₂(s)`: the topmost word.
    pub fn top_word(&self) -> &Word {
        self.words.last().expect("stack is nonempty")
    }

    /// `TOP₁(s)`: the topmost letter.
    pub fn top_letter(&self) -> Letter {
        *self.top_word().last().expect("word is nonempty")
    }

    /// `Sym(s)`.
    pub fn top_sym(&self) -> SymId {
        self.top_letter().sym
    }

    /// `Lvl(s)`.
    pub fn top_level(&self) -> LinkLevel {
        self.top_letter().level
    }

    /// `Lnk(s)`: link width of the topmost letter. Level-1 letters link to
    /// the preceding word, i.e. to width `|s|−1`.
    pub fn top_link(&self) -> u32 {
        let l = self.top_letter();
        match l.level {
            LinkLevel::L1 => self.width() as u32 - 1,
            LinkLevel::L2 => l.link,
        }
    }

    /// Applies a stack operation; `None` is the distinguished undefined
    /// outcome (not a fault).
    pub fn apply(&self, op: StackOp) -> Option<Stack2> {
        match op {
            StackOp::Id => Some(self.clone()),
            StackOp::Clone2 => {
                let mut words = self.words.clone();
                words.push(self.top_word().clone());
                Some(Stack2 { words })
            }
            StackOp::Push(sym, LinkLevel::L1) => {
                if sym == BOTTOM {
                    return None;
                }
                let mut words = self.words.clone();
                words.last_mut().unwrap().push(Letter::l1(sym));
                Some(Stack2 { words })
            }
            StackOp::Push(sym, LinkLevel::L2) => {
                if sym == BOTTOM {
                    return None;
                }
                let link = self.width() as u32 - 1;
                let mut words = self.words.clone();
                words.last_mut().unwrap().push(Letter::l2(sym, link));
                Some(Stack2 { words })
            }
            StackOp::Pop1 => {
                if self.top_word().len() <= 1 {
                    return None;
                }
                let mut words = self.words.clone();
                words.last_mut().unwrap().pop();
                Some(Stack2 { words })
            }
            StackOp::Pop2 => {
                if self.width() <= 1 {
                    return None;
                }
                let mut words = self.words.clone();
                words.pop();
                Some(Stack2 { words })
            }
            StackOp::Collapse => match self.top_letter().level {
                LinkLevel::L1 => self.apply(StackOp::Pop1),
                LinkLevel::L2 => {
                    let link = self.top_letter().link as usize;
                    if link == 0 {
                        return None;
                    }
                    Some(Stack2 {
                        words: self.words[..link].to_vec(),
                    })
                }
            },
        }
    }

    /// `Pop₁^k`, `None` once undefined.
    pub fn popn1(&self, k: usize) -> Option<Stack2> {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.apply(StackOp::Pop1)?;
        }
        Some(s)
    }

    /// `Pop₂^k`, `None` once undefined.
    pub fn popn2(&self, k: usize) -> Option<Stack2> {
        if k >= self.width() {
            return None;
        }
        Some(Stack2 {
            words: self.words[..self.width() - k].to_vec(),
        })
    }

    /// Checks the static stack invariants: nonempty words starting with a
    /// unique ⊥, link widths bounded by the word index, and clone validity
    /// (a level-2 letter with a link below its own word index must be a
    /// clone of the identical letter in the preceding word).
    pub fn validate(&self) -> Result<(), StackError> {
        if self.words.is_empty() {
            return Err(StackError::Empty);
        }
        for (i, w) in self.words.iter().enumerate() {
            if w.is_empty() {
                return Err(StackError::EmptyWord(i));
            }
            if w[0].sym != BOTTOM || w[0].level != LinkLevel::L1 {
                return Err(StackError::MissingBottom { word: i });
            }
            if w[1..].iter().any(|l| l.sym == BOTTOM) {
                return Err(StackError::InnerBottom { word: i });
            }
            for (h, l) in w.iter().enumerate() {
                if l.level == LinkLevel::L2 {
                    if l.link as usize > i {
                        return Err(StackError::LinkTooWide {
                            word: i,
                            height: h,
                            link: l.link,
                            max: i as u32,
                        });
                    }
                    if (l.link as usize) < i {
                        // Not freshly pushable here, so it must be a clone:
                        // the preceding word agrees on the first h+1 letters.
                        let prev = &self.words[i - 1];
                        let is_clone = i > 0 && prev.len() > h && prev[..=h] == w[..=h];
                        if !is_clone {
                            return Err(StackError::BadClone { word: i, height: h });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `TOP₂(s)↓0`: the top word with level-2 links zeroed.
    pub fn top_word_down0(&self) -> Word {
        self.top_word().iter().map(|l| l.down0()).collect()
    }

    /// Renders the stack in bracket notation, e.g. `[⊥ a (b,2,1)]:[⊥ a]`.
    pub fn display<'a>(&'a self, alph: &'a Alphabet) -> StackDisplay<'a> {
        StackDisplay { stack: self, alph }
    }

    /// Parses the bracket notation produced by [`Stack2::display`].
    pub fn parse(text: &str, alph: &mut Alphabet) -> Result<Stack2, String> {
        let text = text.trim();
        let mut words = Vec::new();
        let mut rest = text;
        loop {
            let rest2 = rest.trim_start();
            if !rest2.starts_with('[') {
                return Err(format!("expected '[' at ...{rest2:.20}"));
            }
            let close = rest2
                .find(']')
                .ok_or_else(|| "unbalanced '[' in stack".to_string())?;
            let inner = &rest2[1..close];
            words.push(parse_word(inner, alph)?);
            rest = rest2[close + 1..].trim_start();
            if rest.is_empty() {
                break;
            }
            rest = rest
                .strip_prefix(':')
                .ok_or_else(|| format!("expected ':' between words at ...{rest:.20}"))?;
        }
        if words.is_empty() {
            return Err("stack has no words".into());
        }
        Ok(Stack2 { words })
    }
}

fn parse_word(inner: &str, alph: &mut Alphabet) -> Result<Word, String> {
    let mut word = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        if let Some(stripped) = rest.strip_prefix('(') {
            let close = stripped
                .find(')')
                .ok_or_else(|| "unbalanced '(' in letter".to_string())?;
            let parts: Vec<&str> = stripped[..close].split(',').map(str::trim).collect();
            if parts.len() != 3 || parts[1] != "2" {
                return Err(format!("bad linked letter ({})", &stripped[..close]));
            }
            let link: u32 = parts[2]
                .parse()
                .map_err(|_| format!("bad link width {}", parts[2]))?;
            word.push(Letter::l2(alph.intern(parts[0]), link));
            rest = stripped[close + 1..].trim_start();
        } else {
            let end = rest
                .find(|c: char| c.is_whitespace())
                .unwrap_or(rest.len());
            word.push(Letter::l1(alph.intern(&rest[..end])));
            rest = rest[end..].trim_start();
        }
    }
    if word.is_empty() {
        return Err("empty word in stack".into());
    }
    Ok(word)
}

/// Display adapter for [`Stack2`].
pub struct StackDisplay<'a> {
    stack: &'a Stack2,
    alph: &'a Alphabet,
}

impl fmt::Display for StackDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.stack.words.iter().enumerate() {
            if i > 0 {
                write!(f, ":")?;
            }
            write!(f, "[")?;
            for (j, l) in w.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                match l.level {
                    LinkLevel::L1 => write!(f, "{}", self.alph.name(l.sym))?,
                    LinkLevel::L2 => {
                        write!(f, "({},2,{})", self.alph.name(l.sym), l.link)?
                    }
                }
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Stack2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                write!(f, ":")?;
            }
            write!(f, "{w:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn letters(alph: &mut Alphabet) -> (SymId, SymId) {
        (alph.intern("a"), alph.intern("b"))
    }

    #[test]
    fn clone_on_initial() {
        let s = Stack2::initial().apply(StackOp::Clone2).unwrap();
        assert_eq!(s.width(), 2);
        assert_eq!(s.words()[0], s.words()[1]);
    }

    #[test]
    fn push_level2_links_to_previous_word() {
        let mut alph = Alphabet::new();
        let (a, _) = letters(&mut alph);
        let s = Stack2::initial()
            .apply(StackOp::Clone2)
            .unwrap()
            .apply(StackOp::Push(a, LinkLevel::L2))
            .unwrap();
        assert_eq!(s.top_letter(), Letter::l2(a, 1));
        assert_eq!(format!("{}", s.display(&alph)), "[⊥]:[⊥ (a,2,1)]");
    }

    #[test]
    fn pop2_on_width_one_is_undefined() {
        assert_eq!(Stack2::initial().apply(StackOp::Pop2), None);
    }

    #[test]
    fn collapse_level1_equals_pop1() {
        let mut alph = Alphabet::new();
        let (a, _) = letters(&mut alph);
        let s = Stack2::initial().apply(StackOp::Push(a, LinkLevel::L1)).unwrap();
        assert_eq!(s.apply(StackOp::Collapse), s.apply(StackOp::Pop1));
    }

    #[test]
    fn collapse_follows_level2_link() {
        // Collapse on [⊥(b,2,0)□ : ⊥(b,2,1)(a,2,1)] → [⊥(b,2,0)□]
        let mut alph = Alphabet::new();
        let (a, b) = letters(&mut alph);
        let bx = alph.lookup("□").unwrap();
        let s = Stack2::from_words(vec![
            vec![Letter::l1(BOTTOM), Letter::l2(b, 0), Letter::l1(bx)],
            vec![Letter::l1(BOTTOM), Letter::l2(b, 1), Letter::l2(a, 1)],
        ]);
        let t = s.apply(StackOp::Collapse).unwrap();
        assert_eq!(t.width(), 1);
        assert_eq!(t.words()[0], s.words()[0]);
    }

    #[test]
    fn parse_roundtrip_is_bit_exact() {
        let mut alph = Alphabet::new();
        let text = "[⊥ a (b,2,1)]:[⊥ a]";
        let s = Stack2::parse(text, &mut alph).unwrap();
        assert_eq!(format!("{}", s.display(&alph)), text);
        let ascii = Stack2::parse("[_bot a (b,2,1)]:[_bot a]", &mut alph).unwrap();
        assert_eq!(s, ascii);
    }

    #[test]
    fn validity_rejects_unclonable_links() {
        let mut alph = Alphabet::new();
        let (a, _) = letters(&mut alph);
        // ⊥:⊥(a,2,0) — the (a,2,0) in word 2 is neither fresh nor a clone.
        let s = Stack2::from_words(vec![
            vec![Letter::l1(BOTTOM)],
            vec![Letter::l1(BOTTOM), Letter::l2(a, 0)],
        ]);
        assert!(matches!(s.validate(), Err(StackError::BadClone { .. })));
        // ⊥(a,2,0):⊥(a,2,0) is a clone and fine.
        let t = Stack2::from_words(vec![
            vec![Letter::l1(BOTTOM), Letter::l2(a, 0)],
            vec![Letter::l1(BOTTOM), Letter::l2(a, 0)],
        ]);
        assert!(t.validate().is_ok());
    }
}
