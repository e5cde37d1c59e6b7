//! Deterministic two-counter machines and their encoding as discrete
//! guarded METAs with two energy variables and a single frozen clock.
//! The encoding lands exactly in the class every opacity query must
//! reject, which is what the class-rejection tests exercise.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{
    Atom, Edge, EnergyRateMap, EnergyUpdateMap, GuardedMeta, Location, Rel, SimpleConstraint,
    VarRef,
};
use crate::CoreError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmTransition {
    /// Increment the counter and move on.
    Inc { counter: u8, from: String, to: String },
    /// If the counter is zero go to `to_zero`, else decrement and go to
    /// `to_nonzero`.
    DecOrZero { counter: u8, from: String, to_nonzero: String, to_zero: String },
}

impl CmTransition {
    fn from_state(&self) -> &str {
        match self {
            CmTransition::Inc { from, .. } | CmTransition::DecOrZero { from, .. } => from,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoCounterMachine {
    /// The first entry is the start state.
    pub states: Vec<String>,
    pub halt_state: String,
    pub transitions: Vec<CmTransition>,
}

impl TwoCounterMachine {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.states.is_empty() {
            return Err(CoreError::Parse("machine needs at least one state".into()));
        }
        if !self.states.contains(&self.halt_state) {
            return Err(CoreError::Parse(format!(
                "halt state {} is not declared",
                self.halt_state
            )));
        }
        let mut sources = BTreeSet::new();
        for t in &self.transitions {
            let (counter, names) = match t {
                CmTransition::Inc { counter, from, to } => (*counter, vec![from, to]),
                CmTransition::DecOrZero { counter, from, to_nonzero, to_zero } => {
                    (*counter, vec![from, to_nonzero, to_zero])
                }
            };
            if counter != 1 && counter != 2 {
                return Err(CoreError::Parse("counters are numbered 1 and 2".into()));
            }
            for n in names {
                if !self.states.contains(n) {
                    return Err(CoreError::Parse(format!("state {} is not declared", n)));
                }
            }
            if t.from_state() == self.halt_state {
                return Err(CoreError::Parse("the halt state has no transitions".into()));
            }
            if !sources.insert(t.from_state().to_string()) {
                return Err(CoreError::Parse(format!(
                    "nondeterministic machine: two transitions from {}",
                    t.from_state()
                )));
            }
        }
        Ok(())
    }
}

/// One location per machine state under the frozen-clock invariant
/// t = 0; increments become +1 updates, the zero branch is guarded by
/// the equality encoded as a <=/>= pair. The start state is private and
/// the halt state final so opacity queries are well-posed on the result.
pub fn encode_two_counter_machine(m: &TwoCounterMachine) -> Result<GuardedMeta, CoreError> {
    m.validate()?;
    let frozen = vec![
        Atom { var: VarRef::Clock(0), rel: Rel::Le, bound: 0 },
        Atom { var: VarRef::Clock(0), rel: Rel::Ge, bound: 0 },
    ];
    let locations: Vec<Location> = m
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| Location {
            name: s.clone(),
            invariant: SimpleConstraint { atoms: frozen.clone() },
            rates: EnergyRateMap(vec![0, 0]),
            labels: BTreeSet::new(),
            is_private: i == 0 && *s != m.halt_state,
            is_final: *s == m.halt_state,
            is_initial: i == 0,
        })
        .collect();
    let idx = |name: &str| m.states.iter().position(|s| s == name).expect("validated");
    let mut edges = Vec::new();
    for t in &m.transitions {
        match t {
            CmTransition::Inc { counter, from, to } => {
                let mut updates = vec![0i64, 0];
                updates[(*counter - 1) as usize] = 1;
                edges.push(Edge {
                    source: idx(from),
                    guard: SimpleConstraint::trivial(),
                    action: None,
                    resets: BTreeSet::new(),
                    updates: EnergyUpdateMap(updates),
                    target: idx(to),
                });
            }
            CmTransition::DecOrZero { counter, from, to_nonzero, to_zero } => {
                let c = (*counter - 1) as usize;
                let mut dec = vec![0i64, 0];
                dec[c] = -1;
                edges.push(Edge {
                    source: idx(from),
                    guard: SimpleConstraint {
                        atoms: vec![Atom { var: VarRef::Energy(c), rel: Rel::Gt, bound: 0 }],
                    },
                    action: None,
                    resets: BTreeSet::new(),
                    updates: EnergyUpdateMap(dec),
                    target: idx(to_nonzero),
                });
                edges.push(Edge {
                    source: idx(from),
                    guard: SimpleConstraint {
                        atoms: vec![
                            Atom { var: VarRef::Energy(c), rel: Rel::Le, bound: 0 },
                            Atom { var: VarRef::Energy(c), rel: Rel::Ge, bound: 0 },
                        ],
                    },
                    action: None,
                    resets: BTreeSet::new(),
                    updates: EnergyUpdateMap(vec![0, 0]),
                    target: idx(to_zero),
                });
            }
        }
    }
    Ok(GuardedMeta {
        actions: Vec::new(),
        clocks: vec!["t".to_string()],
        energies: vec!["eta1".to_string(), "eta2".to_string()],
        locations,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classify;

    #[test]
    fn inc_machine_encodes() {
        let m = TwoCounterMachine {
            states: vec!["s0".into(), "halt".into()],
            halt_state: "halt".into(),
            transitions: vec![CmTransition::Inc {
                counter: 1,
                from: "s0".into(),
                to: "halt".into(),
            }],
        };
        let meta = encode_two_counter_machine(&m).unwrap();
        assert_eq!(meta.locations.len(), 2);
        assert_eq!(meta.edges.len(), 1);
        assert_eq!(meta.edges[0].updates.0, vec![1, 0]);
        let report = classify(&meta);
        assert!(report.is_discrete);
        assert!(!report.is_guarded); // a single inc carries no guard
        assert_eq!(report.energy_count, 2);
        assert_eq!(report.clock_count, 1);
    }

    #[test]
    fn dec_machine_encodes_both_branches() {
        let m = TwoCounterMachine {
            states: vec!["s0".into(), "s1".into(), "halt".into()],
            halt_state: "halt".into(),
            transitions: vec![CmTransition::DecOrZero {
                counter: 2,
                from: "s0".into(),
                to_nonzero: "s1".into(),
                to_zero: "halt".into(),
            }],
        };
        let meta = encode_two_counter_machine(&m).unwrap();
        assert_eq!(meta.locations.len(), 3);
        assert_eq!(meta.edges.len(), 2);
        let report = classify(&meta);
        assert!(report.is_discrete && report.is_guarded && !report.is_positive);
    }

    #[test]
    fn nondeterminism_rejected() {
        let m = TwoCounterMachine {
            states: vec!["s0".into(), "halt".into()],
            halt_state: "halt".into(),
            transitions: vec![
                CmTransition::Inc { counter: 1, from: "s0".into(), to: "halt".into() },
                CmTransition::Inc { counter: 2, from: "s0".into(), to: "halt".into() },
            ],
        };
        assert!(encode_two_counter_machine(&m).is_err());
    }

    #[test]
    fn empty_machine_single_location() {
        let m = TwoCounterMachine {
            states: vec!["halt".into()],
            halt_state: "halt".into(),
            transitions: vec![],
        };
        let meta = encode_two_counter_machine(&m).unwrap();
        assert_eq!(meta.locations.len(), 1);
        assert!(meta.edges.is_empty());
    }
}
