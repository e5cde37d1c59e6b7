//! DOT export of models (sorted, deterministic output).

use std::fmt::Write;

use crate::model::{GuardedMeta, SimpleConstraint};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn constraint_str(meta: &GuardedMeta, c: &SimpleConstraint) -> String {
    c.atoms
        .iter()
        .map(|a| crate::model::atom_to_string(meta, a))
        .collect::<Vec<_>>()
        .join(" ∧ ")
}

pub fn model_to_dot(meta: &GuardedMeta, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  __init [shape=point];").unwrap();
    for (i, l) in meta.locations.iter().enumerate() {
        let mut label = l.name.clone();
        if !l.invariant.atoms.is_empty() {
            label.push_str(&format!("\\n{}", constraint_str(meta, &l.invariant)));
        }
        let rates: Vec<String> = meta
            .energies
            .iter()
            .zip(&l.rates.0)
            .filter(|(_, r)| **r != 0)
            .map(|(e, r)| format!("{}'={}", e, r))
            .collect();
        if !rates.is_empty() {
            label.push_str(&format!("\\n{}", rates.join(", ")));
        }
        let shape = if l.is_final { "doublecircle" } else { "circle" };
        let style = if l.is_private { ", style=dashed" } else { "" };
        writeln!(
            out,
            "  l{} [shape={}{}, label=\"{}\"];",
            i,
            shape,
            style,
            escape(&label)
        )
        .unwrap();
        if l.is_initial {
            writeln!(out, "  __init -> l{};", i).unwrap();
        }
    }
    let mut lines: Vec<String> = meta
        .edges
        .iter()
        .map(|e| {
            let mut parts = Vec::new();
            let guard = constraint_str(meta, &e.guard);
            if !guard.is_empty() {
                parts.push(guard);
            }
            parts.push(match e.action {
                Some(a) => meta.actions[a].clone(),
                None => "ε".to_string(),
            });
            let updates: Vec<String> = meta
                .energies
                .iter()
                .zip(&e.updates.0)
                .filter(|(_, u)| **u != 0)
                .map(|(n, u)| format!("{}:{}{}", n, if *u > 0 { "+" } else { "" }, u))
                .collect();
            if !updates.is_empty() {
                parts.push(updates.join(", "));
            }
            if !e.resets.is_empty() {
                let r: Vec<&str> = e.resets.iter().map(|c| meta.clocks[*c].as_str()).collect();
                parts.push(format!("{}:=0", r.join(",")));
            }
            format!(
                "  l{} -> l{} [label=\"{}\"];",
                e.source,
                e.target,
                escape(&parts.join("\\n"))
            )
        })
        .collect();
    lines.sort();
    for line in lines {
        writeln!(out, "{}", line).unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}
