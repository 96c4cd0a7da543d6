//! Interned symbol tables for stack alphabets, control states and edge labels.
//!
//! Stack symbols are referenced by [`SymId`] into an [`Alphabet`]. The
//! bottom-of-stack symbol `⊥` is always present at index 0, and two reserved
//! symbols `□` and `⊤` (used by the return simulators) occupy indices 1 and 2.
//! User transitions must not mention the reserved symbols.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Index of a stack symbol in an [`Alphabet`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymId(pub u16);

/// Index of a control state in a [`Cps`](crate::cps::Cps).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u16);

/// Index of an edge label in a [`Cps`](crate::cps::Cps).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelId(pub u16);

impl fmt::Debug for SymId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}
impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}
impl fmt::Debug for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// The bottom-of-stack symbol `⊥`.
pub const BOTTOM: SymId = SymId(0);
/// Reserved halting symbol `□` used by return simulators.
pub const BOX: SymId = SymId(1);
/// Reserved symbol `⊤` standing for the popped top word in return simulators.
pub const TOP_MARK: SymId = SymId(2);

/// Number of reserved symbols at the start of every alphabet.
pub const RESERVED: usize = 3;

/// An interned stack alphabet. Indices 0..3 are `⊥`, `□`, `⊤`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    /// A fresh alphabet containing only the reserved symbols.
    pub fn new() -> Self {
        Alphabet {
            names: vec!["⊥".into(), "□".into(), "⊤".into()],
        }
    }

    /// Builds an alphabet from user symbol names (must not clash with the
    /// reserved names or each other).
    pub fn with_symbols<I: IntoIterator<Item = S>, S: AsRef<str>>(syms: I) -> Self {
        let mut a = Alphabet::new();
        for s in syms {
            a.intern(s.as_ref());
        }
        a
    }

    /// Interns a symbol name, returning its id. Accepts the ASCII aliases
    /// `_bot`, `_box` and `_top` for the special symbols.
    pub fn intern(&mut self, name: &str) -> SymId {
        let name = canonical_name(name);
        if let Some(id) = self.lookup(name) {
            return id;
        }
        let id = SymId(self.names.len() as u16);
        self.names.push(name.to_string());
        id
    }

    /// Looks up a symbol by name without interning.
    pub fn lookup(&self, name: &str) -> Option<SymId> {
        let name = canonical_name(name);
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| SymId(i as u16))
    }

    pub fn name(&self, id: SymId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All symbol ids, including the reserved ones.
    pub fn ids(&self) -> impl Iterator<Item = SymId> {
        (0..self.names.len() as u16).map(SymId)
    }

    /// Symbol ids available to user transitions (everything except `□`, `⊤`).
    pub fn user_ids(&self) -> impl Iterator<Item = SymId> {
        let n = self.names.len() as u16;
        (0..n).map(SymId).filter(|s| *s != BOX && *s != TOP_MARK)
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::new()
    }
}

/// Maps the ASCII aliases onto the canonical UTF-8 names.
pub fn canonical_name(name: &str) -> &str {
    match name {
        "_bot" => "⊥",
        "_box" => "□",
        "_top" => "⊤",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_symbols_are_preinterned() {
        let a = Alphabet::new();
        assert_eq!(a.lookup("⊥"), Some(BOTTOM));
        assert_eq!(a.lookup("_bot"), Some(BOTTOM));
        assert_eq!(a.lookup("_box"), Some(BOX));
        assert_eq!(a.lookup("⊤"), Some(TOP_MARK));
    }

    #[test]
    fn interning_is_idempotent() {
        let mut a = Alphabet::new();
        let x = a.intern("a");
        let y = a.intern("a");
        assert_eq!(x, y);
        assert_eq!(a.name(x), "a");
    }
}
