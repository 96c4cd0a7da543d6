//! The line-oriented system description format.
//!
//! ```text
//! cpg2kit-format 1
//! level 2
//! states 0 1 2
//! initial 0
//! alphabet a
//! labels Cl A A' P Co
//! transitions:
//! 0, _bot, Cl, 1, clone2
//! 1, a, A, 0, push(a,2)
//! 2, a, Co, 0, collapse
//! ```
//!
//! Symbols accept the aliases `_bot`, `_box`, `_top`; `⊥` is implicit in
//! the alphabet. Operations are `push(σ,1)`, `push(σ,2)`, `clone2`,
//! `pop1`, `pop2`, `collapse` and `id`. Labels are normalised so that each
//! one determines its target state and operation; rewrites are reported.

use crate::alphabet::{Alphabet, LabelId, StateId};
use crate::cps::{Cps, Transition};
use crate::stack::{LinkLevel, StackOp};
use thiserror::Error;

pub const FORMAT_HEADER: &str = "cpg2kit-format 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("missing section {0}")]
    Missing(&'static str),
    #[error("{0}")]
    Build(String),
}

/// Parses a system description; returns the system and the label rewrite
/// warnings.
pub fn parse(text: &str) -> Result<(Cps, Vec<String>), SpecError> {
    let mut states: Option<Vec<String>> = None;
    let mut initial: Option<String> = None;
    let mut alphabet = Alphabet::new();
    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, String)> = Vec::new();
    let mut saw_header = false;
    let mut saw_level = false;
    let mut in_transitions = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != FORMAT_HEADER {
                return Err(SpecError::Line(no + 1, format!("expected {FORMAT_HEADER}")));
            }
            saw_header = true;
            continue;
        }
        if in_transitions {
            rows.push((no + 1, line.to_string()));
            continue;
        }
        let (key, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match key {
            "level" => {
                if rest != "2" && rest != "1" {
                    return Err(SpecError::Line(no + 1, "level must be 1 or 2".into()));
                }
                saw_level = true;
            }
            "states" => states = Some(rest.split_whitespace().map(String::from).collect()),
            "initial" => initial = Some(rest.to_string()),
            "alphabet" => {
                for s in rest.split_whitespace() {
                    alphabet.intern(s);
                }
            }
            "labels" => labels = Some(rest.split_whitespace().map(String::from).collect()),
            "transitions:" | "transitions" => in_transitions = true,
            other => {
                return Err(SpecError::Line(no + 1, format!("unknown section {other}")))
            }
        }
    }
    if !saw_header {
        return Err(SpecError::Missing("cpg2kit-format header"));
    }
    if !saw_level {
        return Err(SpecError::Missing("level"));
    }
    let states = states.ok_or(SpecError::Missing("states"))?;
    let initial = initial.ok_or(SpecError::Missing("initial"))?;
    let mut labels = labels.unwrap_or_default();
    let state_id = |name: &str, no: usize| -> Result<StateId, SpecError> {
        states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u16))
            .ok_or_else(|| SpecError::Line(no, format!("unknown state {name}")))
    };
    let init = state_id(&initial, 0)?;
    let mut delta = Vec::new();
    for (no, row) in rows {
        // The operation itself may contain a comma (push(σ,k)).
        let parts: Vec<&str> = row.splitn(5, ',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(SpecError::Line(
                no,
                "expected `q, σ, γ, q', op`".to_string(),
            ));
        }
        let from = state_id(parts[0], no)?;
        let sym = alphabet.intern(parts[1]);
        let label = match labels.iter().position(|l| l == parts[2]) {
            Some(i) => LabelId(i as u16),
            None => {
                labels.push(parts[2].to_string());
                LabelId(labels.len() as u16 - 1)
            }
        };
        let to = state_id(parts[3], no)?;
        let op = parse_op(parts[4], &mut alphabet)
            .map_err(|e| SpecError::Line(no, e))?;
        delta.push(Transition {
            from,
            sym,
            label,
            to,
            op,
        });
    }
    Cps::new(states, alphabet, labels, init, delta).map_err(|e| SpecError::Build(e.to_string()))
}

fn parse_op(text: &str, alphabet: &mut Alphabet) -> Result<StackOp, String> {
    let t = text.trim();
    match t {
        "clone2" => return Ok(StackOp::Clone2),
        "pop1" => return Ok(StackOp::Pop1),
        "pop2" => return Ok(StackOp::Pop2),
        "collapse" => return Ok(StackOp::Collapse),
        "id" => return Ok(StackOp::Id),
        _ => {}
    }
    if let Some(rest) = t.strip_prefix("push(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| format!("bad operation {t}"))?;
        let (sym, lvl) = inner
            .rsplit_once(',')
            .ok_or_else(|| format!("bad push {t}"))?;
        let level = match lvl.trim() {
            "1" => LinkLevel::L1,
            "2" => LinkLevel::L2,
            other => return Err(format!("bad push level {other}")),
        };
        return Ok(StackOp::Push(alphabet.intern(sym.trim()), level));
    }
    Err(format!("unknown operation {t}"))
}

/// Renders a system back into the canonical format.
pub fn render(cps: &Cps) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    out.push_str("level 2\n");
    out.push_str(&format!("states {}\n", cps.states.join(" ")));
    out.push_str(&format!("initial {}\n", cps.states[cps.initial.0 as usize]));
    let user: Vec<&str> = cps
        .alphabet
        .user_ids()
        .filter(|s| *s != crate::alphabet::BOTTOM)
        .map(|s| cps.alphabet.name(s))
        .collect();
    out.push_str(&format!("alphabet {}\n", user.join(" ")));
    out.push_str(&format!("labels {}\n", cps.labels.join(" ")));
    out.push_str("transitions:\n");
    for t in &cps.delta {
        let op = match t.op {
            StackOp::Clone2 => "clone2".to_string(),
            StackOp::Pop1 => "pop1".to_string(),
            StackOp::Pop2 => "pop2".to_string(),
            StackOp::Collapse => "collapse".to_string(),
            StackOp::Id => "id".to_string(),
            StackOp::Push(s, LinkLevel::L1) => format!("push({},1)", cps.alphabet.name(s)),
            StackOp::Push(s, LinkLevel::L2) => format!("push({},2)", cps.alphabet.name(s)),
        };
        out.push_str(&format!(
            "{}, {}, {}, {}, {}\n",
            cps.states[t.from.0 as usize],
            cps.alphabet.name(t.sym),
            cps.labels[t.label.0 as usize],
            cps.states[t.to.0 as usize],
            op
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn roundtrip_of_fixture_systems() {
        for cps in [
            fixtures::hague(),
            fixtures::subreturns(),
            fixtures::return_example(),
            fixtures::npt_example(),
        ] {
            let text = render(&cps);
            let (back, warnings) = parse(&text).unwrap();
            assert!(warnings.is_empty());
            assert_eq!(render(&back), text);
            assert_eq!(back.delta, cps.delta);
        }
    }

    #[test]
    fn label_normalisation_warns() {
        let text = "cpg2kit-format 1\nlevel 2\nstates a b\ninitial a\nalphabet x\nlabels g\ntransitions:\na, _bot, g, b, clone2\na, x, g, a, pop1\n";
        let (cps, warnings) = parse(text).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(cps.labels.len(), 2);
    }

    #[test]
    fn missing_header_is_an_error() {
        assert!(matches!(
            parse("level 2\n"),
            Err(SpecError::Line(1, _))
        ));
    }
}
