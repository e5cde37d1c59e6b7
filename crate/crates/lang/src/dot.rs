//! Deterministic DOT export for automata (sorted states and edges).

use std::fmt::Write;

use crate::nfa::Nfa;
use crate::pda::Pda;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn nfa_to_dot(nfa: &Nfa, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  __init [shape=point];").unwrap();
    for q in 0..nfa.n_states() {
        let shape = if nfa.accepting.contains(&q) { "doublecircle" } else { "circle" };
        writeln!(
            out,
            "  q{} [shape={}, label=\"{}\"];",
            q,
            shape,
            escape(&nfa.state_labels[q])
        )
        .unwrap();
    }
    writeln!(out, "  __init -> q{};", nfa.initial).unwrap();
    let mut edges: Vec<(usize, String, usize)> = nfa
        .edges
        .iter()
        .map(|(f, l, t)| {
            let label = match l {
                None => "ε".to_string(),
                Some(s) => nfa.alphabet[*s].clone(),
            };
            (*f, label, *t)
        })
        .collect();
    edges.sort();
    edges.dedup();
    for (f, label, t) in edges {
        writeln!(out, "  q{} -> q{} [label=\"{}\"];", f, t, escape(&label)).unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

pub fn pda_to_dot(pda: &Pda, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  __init [shape=point];").unwrap();
    for q in 0..pda.n_states() {
        let shape = if pda.accepting.contains(&q) { "doublecircle" } else { "circle" };
        writeln!(
            out,
            "  q{} [shape={}, label=\"{}\"];",
            q,
            shape,
            escape(&pda.state_labels[q])
        )
        .unwrap();
    }
    writeln!(out, "  __init -> q{};", pda.initial).unwrap();
    let mut edges: Vec<(usize, String, usize)> = pda
        .edges
        .iter()
        .map(|e| {
            let action = match e.input {
                None => "ε".to_string(),
                Some(s) => pda.input_alphabet[s].clone(),
            };
            let push = if e.push.is_empty() {
                "ε".to_string()
            } else {
                e.push
                    .iter()
                    .map(|g| pda.stack_alphabet[*g].as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let label = format!("{}, {}/{}", action, pda.stack_alphabet[e.pop], push);
            (e.from, label, e.to)
        })
        .collect();
    edges.sort();
    edges.dedup();
    for (f, label, t) in edges {
        writeln!(out, "  q{} -> q{} [label=\"{}\"];", f, t, escape(&label)).unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}
