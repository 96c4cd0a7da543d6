//! Level-2 collapsible pushdown systems and their tree-automatic
//! presentation: stacks, runs, return/loop counting, finite tree automata,
//! the configuration encoding, regular reachability, an FO(∃^mod) model
//! checker over the presentation, and nested pushdown trees with a
//! bounded-witness FO model checker.

pub mod alphabet;
pub mod counting;
pub mod enc;
pub mod cps;
pub mod fixtures;
pub mod fo;
pub mod formula;
pub mod loops;
pub mod milestones;
pub mod npt;
pub mod prefix;
pub mod specfile;
pub mod nfta;
pub mod oprel;
pub mod presentation;
pub mod reach;
pub mod stack;
pub mod tree;
