//! Core data model for guarded multi-energy timed automata: locations
//! with invariants and energy rates, edges with guards, resets and
//! discrete energy updates, plus subclass classification and structural
//! validation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Relations allowed in simple constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rel {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Rel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn holds_i64(&self, lhs: i64, bound: i64) -> bool {
        match self {
            Rel::Lt => lhs < bound,
            Rel::Le => lhs <= bound,
            Rel::Ge => lhs >= bound,
            Rel::Gt => lhs > bound,
        }
    }
}

/// A variable reference inside a constraint: clock or energy, by index
/// into the owning model's declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarRef {
    Clock(usize),
    Energy(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub var: VarRef,
    pub rel: Rel,
    pub bound: i64,
}

/// Conjunction of atoms; the empty list is "true".
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimpleConstraint {
    pub atoms: Vec<Atom>,
}

impl SimpleConstraint {
    pub fn trivial() -> Self {
        SimpleConstraint { atoms: Vec::new() }
    }

    pub fn has_energy_atom(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a.var, VarRef::Energy(_)))
    }

    pub fn clock_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| matches!(a.var, VarRef::Clock(_)))
    }

    pub fn energy_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| matches!(a.var, VarRef::Energy(_)))
    }
}

/// Energy rates by declaration order; one entry per energy variable.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnergyRateMap(pub Vec<i64>);

/// Discrete energy offsets by declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnergyUpdateMap(pub Vec<i64>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    pub invariant: SimpleConstraint,
    pub rates: EnergyRateMap,
    pub labels: BTreeSet<String>,
    pub is_private: bool,
    pub is_final: bool,
    pub is_initial: bool,
}

impl Location {
    pub fn plain(name: impl Into<String>, n_energies: usize) -> Self {
        Location {
            name: name.into(),
            invariant: SimpleConstraint::trivial(),
            rates: EnergyRateMap(vec![0; n_energies]),
            labels: BTreeSet::new(),
            is_private: false,
            is_final: false,
            is_initial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub guard: SimpleConstraint,
    /// `None` is the silent action.
    pub action: Option<usize>,
    pub resets: BTreeSet<usize>,
    pub updates: EnergyUpdateMap,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardedMeta {
    pub actions: Vec<String>,
    pub clocks: Vec<String>,
    pub energies: Vec<String>,
    pub locations: Vec<Location>,
    pub edges: Vec<Edge>,
}

impl GuardedMeta {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn initial_index(&self) -> Option<usize> {
        self.locations.iter().position(|l| l.is_initial)
    }

    pub fn final_indices(&self) -> Vec<usize> {
        (0..self.locations.len()).filter(|i| self.locations[*i].is_final).collect()
    }

    pub fn private_indices(&self) -> Vec<usize> {
        (0..self.locations.len()).filter(|i| self.locations[*i].is_private).collect()
    }

    pub fn edges_from(&self, loc: usize) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.source == loc)
    }

    /// Greatest constant each clock is compared against in guards and
    /// invariants; 0 for unconstrained clocks.
    pub fn max_clock_constants(&self) -> Vec<i64> {
        let mut m = vec![0i64; self.clocks.len()];
        let mut visit = |c: &SimpleConstraint| {
            for a in c.clock_atoms() {
                if let VarRef::Clock(i) = a.var {
                    m[i] = m[i].max(a.bound);
                }
            }
        };
        for l in &self.locations {
            visit(&l.invariant);
        }
        for e in &self.edges {
            visit(&e.guard);
        }
        m
    }

    /// Greatest constant appearing in energy atoms across guards and
    /// invariants (0 when there are none).
    pub fn max_energy_constant(&self) -> i64 {
        let mut m = 0i64;
        let mut visit = |c: &SimpleConstraint| {
            for a in c.energy_atoms() {
                m = m.max(a.bound);
            }
        };
        for l in &self.locations {
            visit(&l.invariant);
        }
        for e in &self.edges {
            visit(&e.guard);
        }
        m
    }

    /// A location name not yet taken, derived from the suggestion.
    pub fn fresh_location_name(&self, suggestion: &str) -> String {
        let mut name = suggestion.to_string();
        while self.locations.iter().any(|l| l.name == name) {
            name.push('\'');
        }
        name
    }

    /// A clock name not yet taken, derived from the base (ct, ct1, ...).
    pub fn fresh_clock_name(&self, base: &str) -> String {
        if !self.clocks.iter().any(|c| c == base) {
            return base.to_string();
        }
        let mut i = 1;
        loop {
            let name = format!("{}{}", base, i);
            if !self.clocks.iter().any(|c| c == &name) {
                return name;
            }
            i += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassReport {
    pub is_guarded: bool,
    pub is_discrete: bool,
    pub is_positive: bool,
    pub energy_count: usize,
    pub clock_count: usize,
    pub is_ta: bool,
    pub is_eta: bool,
    pub is_meta: bool,
    pub is_integer_switching: Option<bool>,
    pub is_integer_execution_time: Option<bool>,
}

/// Subclass predicates. The integer-switching flags are left unset; they
/// require region analysis and are computed by the transforms module.
pub fn classify(meta: &GuardedMeta) -> SubclassReport {
    let is_guarded = meta.locations.iter().any(|l| l.invariant.has_energy_atom())
        || meta.edges.iter().any(|e| e.guard.has_energy_atom());
    let is_discrete = meta
        .locations
        .iter()
        .all(|l| l.rates.0.iter().all(|r| *r == 0));
    let is_positive = meta
        .locations
        .iter()
        .all(|l| l.rates.0.iter().all(|r| *r >= 0))
        && meta.edges.iter().all(|e| e.updates.0.iter().all(|u| *u >= 0));
    let energy_count = meta.energies.len();
    let is_meta = !is_guarded;
    SubclassReport {
        is_guarded,
        is_discrete,
        is_positive,
        energy_count,
        clock_count: meta.clocks.len(),
        is_ta: is_meta && energy_count == 0,
        is_eta: is_meta && energy_count == 1,
        is_meta,
        is_integer_switching: None,
        is_integer_execution_time: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub detail: String,
}

fn violation(code: &str, detail: String) -> Violation {
    Violation { code: code.to_string(), detail }
}

/// Structural well-formedness; violations are data, not failures.
pub fn validate(meta: &GuardedMeta) -> Vec<Violation> {
    let mut out = Vec::new();
    let initials: Vec<usize> =
        (0..meta.locations.len()).filter(|i| meta.locations[*i].is_initial).collect();
    match initials.len() {
        0 => out.push(violation("no-initial", "no initial location".into())),
        1 => {}
        _ => out.push(violation(
            "multiple-initial",
            format!("{} initial locations", initials.len()),
        )),
    }
    if meta.private_indices().is_empty() {
        out.push(violation("empty-private-set", "no private location".into()));
    }
    if meta.final_indices().is_empty() {
        out.push(violation("empty-final-set", "no final location".into()));
    }
    for l in &meta.locations {
        if l.is_private && l.is_final {
            out.push(violation(
                "private-final-overlap",
                format!("location {} is both private and final", l.name),
            ));
        }
        if l.rates.0.len() != meta.energies.len() {
            out.push(violation(
                "rate-arity",
                format!("location {} rate vector arity mismatch", l.name),
            ));
        }
    }
    for e in &meta.edges {
        if meta.locations[e.source].is_final {
            out.push(violation(
                "final-outgoing",
                format!(
                    "final location {} has outgoing edge",
                    meta.locations[e.source].name
                ),
            ));
        }
        if e.updates.0.len() != meta.energies.len() {
            out.push(violation(
                "update-arity",
                format!(
                    "edge {} -> {} update vector arity mismatch",
                    meta.locations[e.source].name, meta.locations[e.target].name
                ),
            ));
        }
    }
    if let Some(init) = initials.first() {
        // the zero valuation must satisfy the initial invariant
        for a in &meta.locations[*init].invariant.atoms {
            if !a.rel.holds_i64(0, a.bound) {
                out.push(violation(
                    "initial-outside-invariant",
                    format!(
                        "initial state violates invariant atom {} {} {}",
                        var_name(meta, a.var),
                        a.rel.as_str(),
                        a.bound
                    ),
                ));
                break;
            }
        }
    }
    out
}

pub fn var_name(meta: &GuardedMeta, var: VarRef) -> String {
    match var {
        VarRef::Clock(i) => meta.clocks.get(i).cloned().unwrap_or_else(|| format!("clock#{}", i)),
        VarRef::Energy(i) => {
            meta.energies.get(i).cloned().unwrap_or_else(|| format!("energy#{}", i))
        }
    }
}

pub fn atom_to_string(meta: &GuardedMeta, a: &Atom) -> String {
    format!("{} {} {}", var_name(meta, a.var), a.rel.as_str(), a.bound)
}

/// Names claimed by model transformations; user models may not declare
/// them, so the constructions never capture user names.
pub fn check_reserved_names(meta: &GuardedMeta) -> Result<(), CoreError> {
    for c in meta.clocks.iter().chain(meta.energies.iter()) {
        if c == "ct" || c == "cz" {
            return Err(CoreError::Parse(format!(
                "name {} is reserved for instrumentation clocks",
                c
            )));
        }
    }
    for a in &meta.actions {
        let reserved_exact = a == "t" || a == "t>0" || a == "f";
        let reserved_family = (a.strip_prefix("inc").or_else(|| a.strip_prefix("dec")))
            .map(|rest| rest.chars().all(|c| c.is_ascii_digit()))
            .unwrap_or(false);
        if reserved_exact || reserved_family {
            return Err(CoreError::Parse(format!(
                "action name {} is reserved for instrumentation",
                a
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GuardedMeta {
        // init -> priv -> final, one clock, one energy
        let mut init = Location::plain("init", 1);
        init.is_initial = true;
        let mut private = Location::plain("secret", 1);
        private.is_private = true;
        let mut fin = Location::plain("done", 1);
        fin.is_final = true;
        GuardedMeta {
            actions: vec!["a".into()],
            clocks: vec!["x".into()],
            energies: vec!["n".into()],
            locations: vec![init, private, fin],
            edges: vec![
                Edge {
                    source: 0,
                    guard: SimpleConstraint::trivial(),
                    action: Some(0),
                    resets: BTreeSet::new(),
                    updates: EnergyUpdateMap(vec![0]),
                    target: 1,
                },
                Edge {
                    source: 1,
                    guard: SimpleConstraint::trivial(),
                    action: Some(0),
                    resets: BTreeSet::new(),
                    updates: EnergyUpdateMap(vec![1]),
                    target: 2,
                },
            ],
        }
    }

    #[test]
    fn classify_tiny() {
        let meta = tiny();
        let report = classify(&meta);
        assert!(report.is_discrete);
        assert!(report.is_positive);
        assert!(!report.is_guarded);
        assert!(report.is_eta);
        assert!(!report.is_ta);
        assert_eq!(report.energy_count, 1);
        // classification is pure
        assert_eq!(report, classify(&meta));
    }

    #[test]
    fn validate_tiny_and_broken() {
        let meta = tiny();
        assert!(validate(&meta).is_empty());
        let mut broken = meta.clone();
        broken.locations[1].is_private = false;
        let violations = validate(&broken);
        assert!(violations.iter().any(|v| v.code == "empty-private-set"));
        let mut bad_init = meta.clone();
        bad_init.locations[0].invariant.atoms.push(Atom {
            var: VarRef::Clock(0),
            rel: Rel::Ge,
            bound: 1,
        });
        let violations = validate(&bad_init);
        assert!(violations.iter().any(|v| v.code == "initial-outside-invariant"));
        let mut final_out = meta.clone();
        final_out.edges.push(Edge {
            source: 2,
            guard: SimpleConstraint::trivial(),
            action: None,
            resets: BTreeSet::new(),
            updates: EnergyUpdateMap(vec![0]),
            target: 0,
        });
        let violations = validate(&final_out);
        assert!(violations.iter().any(|v| v.code == "final-outgoing"));
    }
}
