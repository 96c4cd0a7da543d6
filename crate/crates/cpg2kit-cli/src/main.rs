//! Command-line front end: exploration, encoding, counting, reachability
//! and model checking over system description files.
//!
//! Exit codes: 0 = true/success, 1 = false, 2 = error, 3 = a verdict that
//! holds only under the bounded semantics.

use clap::{Parser, Subcommand};
use cpg2kit::alphabet::StateId;
use cpg2kit::counting::{CounterAutomaton, CountingCaps};
use cpg2kit::cps::{Configuration, Cps};
use cpg2kit::enc::{decode, enc_tree_from_text, enc_tree_to_text, encode};
use cpg2kit::fo::{Exactness, FoContext};
use cpg2kit::formula::Formula;
use cpg2kit::milestones::{gen_milestones, milestones};
use cpg2kit::npt::{npt_model_check, translate_to_cps};
use cpg2kit::reach::{LabelDfa, Reacher, RegularReacher};
use cpg2kit::specfile;
use cpg2kit::stack::Stack2;
use cpg2kit::tree::tree_to_dot;
use std::fs;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cpg2kit", version, about = "level-2 collapsible pushdown toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Breadth-first exploration of the configuration graph.
    Explore {
        file: String,
        #[arg(long, default_value_t = 6)]
        bound: usize,
        #[arg(long)]
        dot: Option<String>,
    },
    /// Encode a configuration into its tree.
    Encode {
        file: String,
        #[arg(long)]
        state: String,
        #[arg(long)]
        stack: String,
        #[arg(long)]
        dot: Option<String>,
    },
    /// Decode a tree file back into a configuration.
    Decode { file: String, tree: String },
    /// Generalised milestones of a stack, in generation order.
    Milestones {
        file: String,
        #[arg(long)]
        stack: String,
    },
    /// Threshold-counted returns from a configuration.
    Returns {
        file: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        stack: String,
        #[arg(long, default_value_t = 5)]
        threshold: u32,
    },
    /// Threshold-counted loops (all kinds) of a configuration.
    Loops {
        file: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        stack: String,
        #[arg(long, default_value_t = 5)]
        threshold: u32,
    },
    /// Reachability between two configurations, optionally along a
    /// regular label language.
    Reach {
        file: String,
        #[arg(long)]
        from_state: String,
        #[arg(long)]
        from_stack: String,
        #[arg(long)]
        to_state: String,
        #[arg(long)]
        to_stack: String,
        /// JSON string-DFA file restricting the path labels.
        #[arg(long)]
        lang: Option<String>,
    },
    /// FO(∃^mod, Reach) model checking over the presentation.
    Check {
        file: String,
        formula: String,
        #[arg(long, default_value_t = 4)]
        bound: usize,
        #[arg(long, default_value_t = 1)]
        threshold: u32,
        /// Named DFA files for reachL atoms, as NAME=FILE.
        #[arg(long)]
        lang: Vec<String>,
    },
    /// FO model checking on the nested pushdown tree of a level-1 system.
    NptCheck {
        file: String,
        formula: String,
        #[arg(long, default_value_t = 2_000_000)]
        cap: usize,
    },
    /// Translate a level-1 system into its level-2 simulation.
    TranslateNpt { file: String },
    /// Dump one of the automata behind the presentation.
    DumpAutomaton {
        file: String,
        /// One of: enc, reachable, counter, edge:LABEL.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1)]
        threshold: u32,
        #[arg(long)]
        dot: Option<String>,
        #[arg(long, default_value_t = false)]
        json: bool,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(file: &str) -> Result<Cps, String> {
    let text = fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))?;
    let (cps, warnings) = specfile::parse(&text).map_err(|e| e.to_string())?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(cps)
}

fn config_of(cps: &mut Cps, state: &str, stack: &str) -> Result<Configuration, String> {
    let q = cps
        .state_id(state)
        .ok_or_else(|| format!("unknown state {state}"))?;
    let s = Stack2::parse(stack, &mut cps.alphabet)?;
    s.validate().map_err(|e| e.to_string())?;
    Ok(Configuration::new(q, s))
}

fn counter_of(cps: &Cps, threshold: u32) -> Result<CounterAutomaton, String> {
    CounterAutomaton::build(cps, threshold, &CountingCaps::default()).map_err(|e| e.to_string())
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Explore { file, bound, dot } => {
            let cps = load(&file)?;
            let g = cps
                .bfs_explore(bound, 1_000_000)
                .map_err(|e| e.to_string())?;
            for (i, c) in g.configs.iter().enumerate() {
                println!(
                    "{i}: ({}, {})",
                    cps.states[c.state.0 as usize],
                    c.stack.display(&cps.alphabet)
                );
            }
            for e in &g.edges {
                println!(
                    "{} -{}-> {}",
                    e.from, cps.labels[e.label.0 as usize], e.to
                );
            }
            if let Some(path) = dot {
                let mut out = String::from("digraph g {\n");
                for (i, c) in g.configs.iter().enumerate() {
                    out.push_str(&format!(
                        "  n{i} [label=\"{},{}\"];\n",
                        cps.states[c.state.0 as usize],
                        c.stack.display(&cps.alphabet)
                    ));
                }
                for e in &g.edges {
                    out.push_str(&format!(
                        "  n{} -> n{} [label=\"{}\"];\n",
                        e.from, e.to, cps.labels[e.label.0 as usize]
                    ));
                }
                out.push_str("}\n");
                fs::write(&path, out).map_err(|e| e.to_string())?;
            }
            println!("configurations {}", g.configs.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Encode {
            file,
            state,
            stack,
            dot,
        } => {
            let mut cps = load(&file)?;
            let c = config_of(&mut cps, &state, &stack)?;
            let t = encode(&c);
            println!("{}", enc_tree_to_text(&t, &cps));
            if let Some(path) = dot {
                let shown = t.map_labels(|l| format!("{l}"));
                fs::write(&path, tree_to_dot(&shown, "enc")).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode { file, tree } => {
            let cps = load(&file)?;
            let text = fs::read_to_string(&tree).map_err(|e| format!("{tree}: {e}"))?;
            let t = enc_tree_from_text(text.trim(), &cps)?;
            let c = decode(&t).map_err(|e| e.to_string())?;
            println!(
                "({}, {})",
                cps.states[c.state.0 as usize],
                c.stack.display(&cps.alphabet)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Milestones { file, stack } => {
            let mut cps = load(&file)?;
            let s = Stack2::parse(&stack, &mut cps.alphabet)?;
            s.validate().map_err(|e| e.to_string())?;
            let gen = gen_milestones(&s).map_err(|e| e.to_string())?;
            let ms = milestones(&s).map_err(|e| e.to_string())?;
            for m in &gen {
                let tag = if ms.contains(m) { "milestone" } else { "generalised" };
                println!("{tag} {}", m.display(&cps.alphabet));
            }
            println!("generalised {} milestones {}", gen.len(), ms.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Returns {
            file,
            from,
            stack,
            threshold,
        } => {
            let mut cps = load(&file)?;
            let c = config_of(&mut cps, &from, &stack)?;
            let counter = counter_of(&cps, threshold)?;
            let ret = counter.ret_of_stack(&c.stack).map_err(|e| e.to_string())?;
            let mut total = 0u64;
            for q2 in cps.state_ids() {
                let n = ret.get(c.state, q2);
                if n > 0 {
                    println!(
                        "returns {} -> {}: {}",
                        cps.states[c.state.0 as usize], cps.states[q2.0 as usize], n
                    );
                    total += n as u64;
                }
            }
            println!("total {total}");
            if !counter.exact {
                eprintln!("warning: counts are lower bounds (uncertified)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Loops {
            file,
            from,
            stack,
            threshold,
        } => {
            let mut cps = load(&file)?;
            let c = config_of(&mut cps, &from, &stack)?;
            let counter = counter_of(&cps, threshold)?;
            let ann = counter
                .annotation_for_word(c.stack.top_word())
                .map_err(|e| e.to_string())?;
            for q2 in cps.state_ids() {
                let (l, h, lo) = (
                    ann.loops.get(c.state, q2),
                    ann.high.get(c.state, q2),
                    ann.low.get(c.state, q2),
                );
                if l + h + lo > 0 {
                    println!(
                        "loops {} -> {}: {} (high {}, low {}, one-loop {})",
                        cps.states[c.state.0 as usize],
                        cps.states[q2.0 as usize],
                        l,
                        h,
                        lo,
                        ann.one_loop(c.state, q2)
                    );
                }
            }
            if !counter.exact {
                eprintln!("warning: counts are lower bounds (uncertified)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reach {
            file,
            from_state,
            from_stack,
            to_state,
            to_stack,
            lang,
        } => {
            let mut cps = load(&file)?;
            let c1 = config_of(&mut cps, &from_state, &from_stack)?;
            let c2 = config_of(&mut cps, &to_state, &to_stack)?;
            let hit = match lang {
                None => {
                    let counter = counter_of(&cps, 1)?;
                    let mut r = Reacher::new(&cps, &counter);
                    r.reach(&c1, &c2).map_err(|e| e.to_string())?
                }
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
                    let dfa: LabelDfa =
                        serde_json::from_str(&text).map_err(|e| e.to_string())?;
                    let mut rr = RegularReacher::build(&cps, &dfa, &CountingCaps::default())
                        .map_err(|e| e.to_string())?;
                    rr.reach(&c1, &c2).map_err(|e| e.to_string())?
                }
            };
            println!("{}", if hit { "reachable" } else { "unreachable" });
            Ok(if hit {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Check {
            file,
            formula,
            bound,
            threshold,
            lang,
        } => {
            let cps = load(&file)?;
            let f = Formula::parse(&formula).map_err(|e| e.to_string())?;
            let counter = counter_of(&cps, threshold)?;
            let mut ctx = FoContext::new(&cps, &counter);
            for spec in lang {
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| format!("expected NAME=FILE, got {spec}"))?;
                let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
                let dfa: LabelDfa = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                ctx.dfas.insert(name.to_string(), dfa);
            }
            let v = ctx.check_sentence(&f, bound).map_err(|e| e.to_string())?;
            match v.exactness {
                Exactness::Exact => {
                    println!("{} (exact)", v.value);
                    Ok(if v.value {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    })
                }
                Exactness::Bounded(b) => {
                    println!("{} (bounded {b})", v.value);
                    Ok(ExitCode::from(3))
                }
                Exactness::Approximate => {
                    println!("{} (approximate)", v.value);
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::NptCheck { file, formula, cap } => {
            let cps = load(&file)?;
            let f = Formula::parse(&formula).map_err(|e| e.to_string())?;
            let v = npt_model_check(&cps, &f, cap).map_err(|e| e.to_string())?;
            println!("{v}");
            Ok(if v { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::TranslateNpt { file } => {
            let cps = load(&file)?;
            let tr = translate_to_cps(&cps).map_err(|e| e.to_string())?;
            print!("{}", specfile::render(&tr.cps));
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpAutomaton {
            file,
            kind,
            threshold,
            dot,
            json,
        } => {
            let cps = load(&file)?;
            match kind.as_str() {
                "counter" => {
                    let counter = counter_of(&cps, threshold)?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&counter).map_err(|e| e.to_string())?
                    );
                }
                "enc" => {
                    let aut = cpg2kit::enc::enc_trees_automaton(&cps);
                    emit_automaton(&aut, json, dot)?;
                }
                "reachable" => {
                    let counter = counter_of(&cps, threshold)?;
                    let aut =
                        cpg2kit::presentation::reachable_configs_automaton(&cps, &counter)
                            .trim();
                    emit_automaton(&aut, json, dot)?;
                }
                other => {
                    if let Some(label) = other.strip_prefix("edge:") {
                        let id = cps
                            .label_id(label)
                            .ok_or_else(|| format!("unknown label {label}"))?;
                        let aut = cpg2kit::oprel::edge_relation_automaton(&cps, id);
                        emit_pair_automaton(&aut, json, dot)?;
                    } else {
                        return Err(format!("unknown automaton kind {other}"));
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit_automaton(
    aut: &cpg2kit::nfta::Nfta<cpg2kit::enc::EncLabel>,
    json: bool,
    dot: Option<String>,
) -> Result<(), String> {
    if let Some(path) = dot {
        fs::write(&path, aut.to_dot("aut")).map_err(|e| e.to_string())?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&aut.to_json()).map_err(|e| e.to_string())?
        );
    } else {
        println!("states {} rules {}", aut.n_states, aut.rules.len());
    }
    Ok(())
}

fn emit_pair_automaton(
    aut: &cpg2kit::nfta::Nfta<cpg2kit::oprel::PairLabel>,
    json: bool,
    dot: Option<String>,
) -> Result<(), String> {
    let name = |l: &cpg2kit::oprel::PairLabel| -> String {
        let side = |o: &Option<cpg2kit::enc::EncLabel>| match o {
            None => "#".to_string(),
            Some(x) => format!("{x}"),
        };
        format!("{}|{}", side(&l.0), side(&l.1))
    };
    let strings: Vec<String> = aut.alphabet.iter().map(&name).collect();
    let shown = aut.relabel(strings, name);
    if let Some(path) = dot {
        fs::write(&path, shown.to_dot("aut")).map_err(|e| e.to_string())?;
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&shown.to_json()).map_err(|e| e.to_string())?
        );
    } else {
        println!("states {} rules {}", shown.n_states, shown.rules.len());
    }
    Ok(())
}
